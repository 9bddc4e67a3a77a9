//! Deterministic parallel sampling of an inequality, plus counterexample
//! shrinking.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CheckConfig, CheckerId, Counterexample, Status, Verdict};
use crate::generators::Generator;
use crate::means::Buf;
use crate::sampling;

const RETRIES: usize = 8;
const MAX_SWEEPS: usize = 200;
/// A shrink move must keep at least this fraction of the starting violation.
const KEEP_FRACTION: f64 = 0.25;

pub(crate) enum Outcome {
    /// The inequality `lhs <= rhs`, with its rounding allowance.
    Value { lhs: f64, rhs: f64, budget: f64 },
    /// The sample hit a point where the inequality is not evaluable.
    Skip,
}

impl Outcome {
    pub(crate) fn new(lhs: f64, rhs: f64, budget: f64) -> Self {
        if lhs.is_finite() && rhs.is_finite() && budget.is_finite() {
            Outcome::Value { lhs, rhs, budget }
        } else {
            Outcome::Skip
        }
    }
}

pub(crate) trait Property: Sync {
    fn kind(&self) -> &'static str;
    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf;
    fn evaluate(&self, w: &[f64]) -> Outcome;
    /// Where the shrinker pulls coordinate `i`; `None` keeps it fixed.
    fn shrink_target(&self, i: usize) -> Option<f64>;
    fn admissible(&self, w: &[f64]) -> bool;
}

#[derive(Clone)]
struct Worst {
    violation: f64,
    index: u64,
    witness: Buf,
    lhs: f64,
    rhs: f64,
    budget: f64,
}

#[derive(Clone)]
struct Tally {
    min_margin: f64,
    evaluated: u64,
    skipped: u64,
    worst: Option<Worst>,
}

impl Tally {
    fn empty() -> Self {
        Tally { min_margin: f64::INFINITY, evaluated: 0, skipped: 0, worst: None }
    }

    // associative and commutative, so the result is schedule independent
    fn merge(a: Tally, b: Tally) -> Tally {
        let worst = match (a.worst, b.worst) {
            (Some(x), Some(y)) => {
                let x_wins = match x.violation.total_cmp(&y.violation) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => x.index < y.index,
                };
                Some(if x_wins { x } else { y })
            }
            (x, y) => x.or(y),
        };
        Tally {
            min_margin: a.min_margin.min(b.min_margin),
            evaluated: a.evaluated + b.evaluated,
            skipped: a.skipped + b.skipped,
            worst,
        }
    }
}

pub(crate) struct Run {
    pub min_margin: Option<f64>,
    pub evaluated: u64,
    pub skipped: u64,
    pub failure: Option<Counterexample>,
}

pub(crate) fn run(prop: &dyn Property, cfg: &CheckConfig) -> Run {
    let tag = sampling::tag(prop.kind());
    let tally = (0..cfg.samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = sampling::stream(cfg.seed, tag, index);
            for _ in 0..RETRIES {
                let w = prop.draw(&mut rng);
                if let Outcome::Value { lhs, rhs, budget } = prop.evaluate(&w) {
                    let violation = lhs - rhs;
                    let worst = (violation > budget).then(|| Worst { violation, index, witness: w, lhs, rhs, budget });
                    return Tally { min_margin: rhs - lhs, evaluated: 1, skipped: 0, worst };
                }
            }
            Tally { skipped: 1, ..Tally::empty() }
        })
        .reduce(Tally::empty, Tally::merge);
    let failure = tally.worst.map(|w| {
        let ce = Counterexample {
            kind: prop.kind().to_string(),
            witness: w.witness.to_vec(),
            lhs: w.lhs,
            rhs: w.rhs,
            violation: w.violation,
            err_budget: w.budget,
        };
        shrink_with(prop, &ce)
    });
    Run {
        min_margin: (tally.evaluated > 0).then_some(tally.min_margin),
        evaluated: tally.evaluated,
        skipped: tally.skipped,
        failure,
    }
}

/// Fold the runs of a checker's sub-inequalities into one verdict; the first
/// failing part supplies the counterexample.
pub(crate) fn verdict(id: CheckerId, runs: Vec<Run>) -> Verdict {
    let evaluated: u64 = runs.iter().map(|r| r.evaluated).sum();
    let skipped: u64 = runs.iter().map(|r| r.skipped).sum();
    let min_margin = runs.iter().filter_map(|r| r.min_margin).reduce(f64::min);
    let failure = runs.into_iter().find_map(|r| r.failure);
    let status = if failure.is_some() {
        Status::Fail
    } else if skipped > evaluated {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    let note = (status == Status::Inconclusive)
        .then(|| format!("{skipped} of {} samples could not be evaluated", evaluated + skipped));
    Verdict { id, status, min_margin, samples_run: evaluated, skipped, counterexample: failure, note }
}

/// Pull witness coordinates toward their targets by halving the log
/// distance, keeping each move only while the violation stays significant.
pub(crate) fn shrink_with(prop: &dyn Property, ce: &Counterexample) -> Counterexample {
    let floor = ce.err_budget.max(KEEP_FRACTION * ce.violation);
    let mut best = ce.clone();
    let mut w: Buf = ce.witness.iter().copied().collect();
    for _ in 0..MAX_SWEEPS {
        let mut moved = false;
        for i in 0..w.len() {
            let Some(target) = prop.shrink_target(i) else { continue };
            let c = w[i];
            let next = (c * target).sqrt();
            if !(c > 0.0) || next == c || !next.is_finite() {
                continue;
            }
            let mut cand = w.clone();
            cand[i] = next;
            if !prop.admissible(&cand) {
                continue;
            }
            if let Outcome::Value { lhs, rhs, budget } = prop.evaluate(&cand) {
                let violation = lhs - rhs;
                if violation > budget && violation > floor {
                    w = cand;
                    moved = true;
                    best = Counterexample {
                        kind: ce.kind.clone(),
                        witness: w.to_vec(),
                        lhs,
                        rhs,
                        violation,
                        err_budget: budget,
                    };
                }
            }
        }
        if !moved {
            break;
        }
    }
    best
}

/// Shrink a counterexample produced by one of the single-generator checkers.
/// Counterexamples of unknown kind are returned unchanged.
pub fn shrink(ce: &Counterexample, g: &Generator, cfg: &CheckConfig) -> Counterexample {
    let g = super::canonical(g);
    let prop = super::equivalence::property(&ce.kind, &g, cfg)
        .or_else(|| super::necessary::property(&ce.kind, &g, cfg))
        .or_else(|| super::convexity::property(&ce.kind, &g, cfg));
    match prop {
        Some(p) => shrink_with(p.as_ref(), ce),
        None => ce.clone(),
    }
}
