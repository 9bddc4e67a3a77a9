//! Jensen convexity of the mean, its single-variable counterpart, and the
//! comparison of two means.

use rand_chacha::ChaCha8Rng;

use super::engine::{run, verdict, Outcome, Property};
use super::{canonical, fprime, fsecond, in_window, CheckConfig, CheckerId, Status, Verdict};
use crate::generators::Generator;
use crate::means::{qa_mean, Buf};
use crate::sampling::Cluster;
use crate::semidiff::{curvature_profile, detect_kinks_with, Curvature};
use crate::window::Window;

fn draw_in(rng: &mut ChaCha8Rng, dom: Window, n: usize) -> Buf {
    let cl = Cluster::draw(rng, dom.lo(), dom.hi());
    (0..n).map(|_| cl.point(rng)).collect()
}

/// `A_f((x + y) / 2) <= (A_f(x) + A_f(y)) / 2`. Witness: `[x.., y..]`.
pub(crate) struct Jensen<'a> {
    pub g: &'a Generator,
    pub n: usize,
    pub cfg: CheckConfig,
}

impl Property for Jensen<'_> {
    fn kind(&self) -> &'static str {
        "jensen_convexity"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        draw_in(rng, self.g.window(), 2 * self.n)
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        let (x, y) = w.split_at(w.len() / 2);
        let m: Buf = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
        match (qa_mean(self.g, &m), qa_mean(self.g, x), qa_mean(self.g, y)) {
            (Ok(mm), Ok(mx), Ok(my)) => {
                let rhs = 0.5 * (mx.value + my.value);
                Outcome::new(mm.value, rhs, self.cfg.budget(mm.value, rhs))
            }
            _ => Outcome::Skip,
        }
    }

    fn shrink_target(&self, _: usize) -> Option<f64> {
        Some(self.g.window().midpoint())
    }

    fn admissible(&self, w: &[f64]) -> bool {
        in_window(self.g.window(), w)
    }
}

/// `R = f' / f''` with its propagated error.
fn ratio(g: &Generator, x: f64) -> Option<(f64, f64)> {
    let d1 = fprime(g, x)?;
    let d2 = fsecond(g, x)?;
    if d2.value == 0.0 {
        return None;
    }
    let r = d1.value / d2.value;
    Some((r, r.abs() * (d1.err / d1.value.abs() + d2.err / d2.value.abs())))
}

/// `R(x) > 0`, compared in the scale-free form `0 <= R(x) / x`.
/// Witness: `[x]`.
pub(crate) struct RatioPositive<'a> {
    pub g: &'a Generator,
    pub cfg: CheckConfig,
}

impl Property for RatioPositive<'_> {
    fn kind(&self) -> &'static str {
        "ratio_convex/positive"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        draw_in(rng, self.g.window(), 1)
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        match ratio(self.g, w[0]) {
            Some((r, e)) => {
                let rhs = r / w[0];
                Outcome::new(0.0, rhs, self.cfg.budget(0.0, rhs) + e / w[0])
            }
            None => Outcome::Skip,
        }
    }

    fn shrink_target(&self, _: usize) -> Option<f64> {
        Some(self.g.window().midpoint())
    }

    fn admissible(&self, w: &[f64]) -> bool {
        in_window(self.g.window(), w)
    }
}

/// `R((x + y) / 2) <= (R(x) + R(y)) / 2`. Witness: `[x, y]`.
pub(crate) struct RatioMidpoint<'a> {
    pub g: &'a Generator,
    pub cfg: CheckConfig,
}

impl Property for RatioMidpoint<'_> {
    fn kind(&self) -> &'static str {
        "ratio_convex/midpoint"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        draw_in(rng, self.g.window(), 2)
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        let (x, y) = (w[0], w[1]);
        match (ratio(self.g, 0.5 * (x + y)), ratio(self.g, x), ratio(self.g, y)) {
            (Some((rm, em)), Some((rx, ex)), Some((ry, ey))) => {
                let rhs = 0.5 * (rx + ry);
                Outcome::new(rm, rhs, self.cfg.budget(rm, rhs) + em + 0.5 * (ex + ey))
            }
            _ => Outcome::Skip,
        }
    }

    fn shrink_target(&self, _: usize) -> Option<f64> {
        Some(self.g.window().midpoint())
    }

    fn admissible(&self, w: &[f64]) -> bool {
        in_window(self.g.window(), w)
    }
}

pub fn check_jensen_convexity(g: &Generator, cfg: &CheckConfig) -> Verdict {
    let g = canonical(g);
    verdict(CheckerId::JensenConvexity, vec![run(&Jensen { g: &g, n: cfg.arity.max(1), cfg: *cfg }, cfg)])
}

/// Positivity and midpoint convexity of `f'/f''`. Applies when `f''` is
/// nowhere zero on the window; `f''` vanishing identically passes (the mean
/// is arithmetic), and a partial zero set is inconclusive.
pub fn check_ratio_convex(g: &Generator, cfg: &CheckConfig) -> Verdict {
    let id = CheckerId::RatioConvex;
    let g = canonical(g);
    let profile = curvature_profile(&g, cfg.scan_grid);
    let mut counts = [0usize; 3];
    for (_, class) in &profile {
        match class {
            Some(Curvature::Positive) => counts[0] += 1,
            Some(Curvature::Zero) => counts[1] += 1,
            Some(Curvature::Negative) => counts[2] += 1,
            None => return Verdict::inconclusive(id, "f'' could not be evaluated on the whole window"),
        }
    }
    if counts[1] == profile.len() {
        return Verdict::vacuous(id, "f'' vanishes identically; the mean is arithmetic");
    }
    if counts[1] > 0 {
        let first = profile.iter().find(|(_, c)| *c == Some(Curvature::Zero)).map(|p| p.0).unwrap_or(f64::NAN);
        return Verdict::inconclusive(id, format!("f'' vanishes on part of the window (first at x = {first})"));
    }
    if counts[0] > 0 && counts[2] > 0 {
        return Verdict::inconclusive(id, "f'' changes sign on the window");
    }
    verdict(id, vec![run(&RatioPositive { g: &g, cfg: *cfg }, cfg), run(&RatioMidpoint { g: &g, cfg: *cfg }, cfg)])
}

/// `f''/f' <= g''/g'` pointwise. Witness: `[x]`.
struct ComparePointwise<'a> {
    f: &'a Generator,
    g: &'a Generator,
    cfg: CheckConfig,
}

fn log_slope(g: &Generator, x: f64) -> Option<(f64, f64)> {
    let d1 = fprime(g, x)?;
    let d2 = fsecond(g, x)?;
    if !(d1.value > 0.0) {
        return None;
    }
    let q = d2.value / d1.value;
    Some((q, d2.err / d1.value + q.abs() * d1.err / d1.value))
}

impl Property for ComparePointwise<'_> {
    fn kind(&self) -> &'static str {
        "compare_means/pointwise"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        draw_in(rng, self.f.window(), 1)
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        match (log_slope(self.f, w[0]), log_slope(self.g, w[0])) {
            (Some((qf, ef)), Some((qg, eg))) => Outcome::new(qf, qg, self.cfg.budget(qf, qg) + ef + eg),
            _ => Outcome::Skip,
        }
    }

    fn shrink_target(&self, _: usize) -> Option<f64> {
        Some(self.f.window().midpoint())
    }

    fn admissible(&self, w: &[f64]) -> bool {
        in_window(self.f.window(), w)
    }
}

/// `A_f(x) <= A_g(x)`. Witness: the sample vector.
struct CompareDirect<'a> {
    f: &'a Generator,
    g: &'a Generator,
    n: usize,
    cfg: CheckConfig,
}

impl Property for CompareDirect<'_> {
    fn kind(&self) -> &'static str {
        "compare_means/direct"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        draw_in(rng, self.f.window(), self.n)
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        match (qa_mean(self.f, w), qa_mean(self.g, w)) {
            (Ok(a), Ok(b)) => Outcome::new(a.value, b.value, self.cfg.budget(a.value, b.value)),
            _ => Outcome::Skip,
        }
    }

    fn shrink_target(&self, _: usize) -> Option<f64> {
        Some(self.f.window().midpoint())
    }

    fn admissible(&self, w: &[f64]) -> bool {
        in_window(self.f.window(), w)
    }
}

fn has_kinks(g: &Generator, grid: usize) -> bool {
    !g.analytic_kinks(1).is_empty()
        || !g.analytic_kinks(2).is_empty()
        || !detect_kinks_with(g, 1, grid).points.is_empty()
        || !detect_kinks_with(g, 2, grid).points.is_empty()
}

/// Decide `A_f <= A_g` twice: through the pointwise criterion on
/// `f''/f'` and `g''/g'`, and directly on sampled vectors. Both are run on
/// the intersection of the two windows; if they disagree the verdict is
/// inconclusive and the note says so.
pub fn compare_means(f: &Generator, g: &Generator, cfg: &CheckConfig) -> Verdict {
    let id = CheckerId::CompareMeans;
    let (fw, gw) = (f.window(), g.window());
    let Ok(w) = Window::new(fw.lo().max(gw.lo()), fw.hi().min(gw.hi())) else {
        return Verdict::inconclusive(id, "the generator windows do not overlap");
    };
    let rebuild = |h: &Generator| if h.window() == w { Ok(h.clone()) } else { h.with_window(w) };
    let (f, g) = match (rebuild(f), rebuild(g)) {
        (Ok(a), Ok(b)) => (canonical(&a), canonical(&b)),
        (Err(e), _) | (_, Err(e)) => return Verdict::inconclusive(id, format!("rebuilding on the common window: {e}")),
    };
    if has_kinks(&f, cfg.scan_grid) || has_kinks(&g, cfg.scan_grid) {
        return Verdict::inconclusive(id, "a generator has kinks; the comparison needs smooth generators");
    }
    let pointwise = verdict(id, vec![run(&ComparePointwise { f: &f, g: &g, cfg: *cfg }, cfg)]);
    let direct = verdict(id, vec![run(&CompareDirect { f: &f, g: &g, n: cfg.arity.max(1), cfg: *cfg }, cfg)]);
    let describe = |v: &Verdict| match &v.counterexample {
        Some(ce) => format!("fails at {:?} by {:e}", ce.witness, ce.violation),
        None => format!("{:?}", v.status).to_lowercase(),
    };
    let note = format!("pointwise: {}; direct: {}", describe(&pointwise), describe(&direct));
    match (pointwise.status, direct.status) {
        (Status::Pass, Status::Pass) | (Status::Fail, Status::Fail) => Verdict {
            samples_run: pointwise.samples_run + direct.samples_run,
            skipped: pointwise.skipped + direct.skipped,
            note: Some(note),
            ..direct
        },
        (Status::Pass, Status::Fail) | (Status::Fail, Status::Pass) => Verdict {
            status: Status::Inconclusive,
            counterexample: direct.counterexample.or(pointwise.counterexample),
            note: Some(format!("defect: pointwise and direct comparisons disagree ({note})")),
            ..direct
        },
        _ => Verdict { status: Status::Inconclusive, note: Some(note), ..direct },
    }
}

pub(crate) fn property<'a>(kind: &str, g: &'a Generator, cfg: &CheckConfig) -> Option<Box<dyn Property + 'a>> {
    match kind {
        "jensen_convexity" => Some(Box::new(Jensen { g, n: cfg.arity.max(1), cfg: *cfg })),
        "ratio_convex/positive" => Some(Box::new(RatioPositive { g, cfg: *cfg })),
        "ratio_convex/midpoint" => Some(Box::new(RatioMidpoint { g, cfg: *cfg })),
        _ => None,
    }
}
