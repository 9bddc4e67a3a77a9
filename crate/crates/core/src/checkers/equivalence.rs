//! The four mutually equivalent characterisations of subadditivity.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use super::engine::{run, verdict, Outcome, Property};
use super::{canonical, fprime, fsecond, half_window, in_window, shrink_target, CheckConfig, CheckerId, Counterexample,
    Verdict};
use crate::generators::Generator;
use crate::means::{compensated_sum, qa_mean, Buf};
use crate::sampling::{log_uniform, Cluster};
use crate::semidiff::{classify, find_alpha_with, Alpha, AlphaReport, Curvature};
use crate::window::Window;

fn cluster_draw(rng: &mut ChaCha8Rng, dom: Window, n: usize) -> Buf {
    let cl = Cluster::draw(rng, dom.lo(), dom.hi());
    (0..n).map(|_| cl.point(rng)).collect()
}

fn mean(g: &Generator, xs: &[f64]) -> Option<f64> {
    qa_mean(g, xs).ok().map(|m| m.value)
}

/// `A_f(x + y) <= A_f(x) + A_f(y)` for `n`-vectors in `[lo, hi/2]`.
/// Witness: `[x_1..x_n, y_1..y_n]`.
pub(crate) struct Direct<'a> {
    pub g: &'a Generator,
    pub dom: Window,
    pub n: usize,
    pub cfg: CheckConfig,
}

impl Property for Direct<'_> {
    fn kind(&self) -> &'static str {
        "subadditive_direct"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        cluster_draw(rng, self.dom, 2 * self.n)
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        let (x, y) = w.split_at(w.len() / 2);
        let s: Buf = x.iter().zip(y).map(|(a, b)| a + b).collect();
        match (mean(self.g, &s), mean(self.g, x), mean(self.g, y)) {
            (Some(ms), Some(mx), Some(my)) => {
                let rhs = mx + my;
                Outcome::new(ms, rhs, self.cfg.budget(ms, rhs))
            }
            _ => Outcome::Skip,
        }
    }

    fn shrink_target(&self, _: usize) -> Option<f64> {
        Some(shrink_target(self.g.window(), self.dom))
    }

    fn admissible(&self, w: &[f64]) -> bool {
        in_window(self.dom, w)
    }
}

/// Midpoint concavity of `Phi(u, v) = f(f^{-1}(u) + f^{-1}(v))`, sampled
/// through preimages: `U_1 = (f(a_1), f(b_1))`, `U_2 = (f(a_2), f(b_2))`.
/// Witness: `[a_1, b_1, a_2, b_2]`.
pub(crate) struct Phi<'a> {
    pub g: &'a Generator,
    pub dom: Window,
    pub cfg: CheckConfig,
}

impl Property for Phi<'_> {
    fn kind(&self) -> &'static str {
        "phi_concavity"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        cluster_draw(rng, self.dom, 4)
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        let g = self.g;
        let (a1, b1, a2, b2) = (w[0], w[1], w[2], w[3]);
        let chord = match (g.value(a1 + b1), g.value(a2 + b2)) {
            (Ok(p), Ok(q)) => 0.5 * compensated_sum([p, q]),
            _ => return Outcome::Skip,
        };
        // f^{-1} of the averaged coordinates is the two-point mean
        let mid = match (mean(g, &[a1, a2]), mean(g, &[b1, b2])) {
            (Some(u), Some(v)) => match g.value(u + v) {
                Ok(m) => m,
                Err(_) => return Outcome::Skip,
            },
            _ => return Outcome::Skip,
        };
        Outcome::new(chord, mid, self.cfg.budget(chord, mid))
    }

    fn shrink_target(&self, _: usize) -> Option<f64> {
        Some(shrink_target(self.g.window(), self.dom))
    }

    fn admissible(&self, w: &[f64]) -> bool {
        in_window(self.dom, w)
    }
}

/// `Psi(x, y) = (f(x) - f(y)) / f'(y)` and its value with the rounding
/// allowance for the difference and the derivative estimate.
fn psi(g: &Generator, x: f64, y: f64) -> Option<(f64, f64)> {
    let (fx, fy) = (g.value(x).ok()?, g.value(y).ok()?);
    let d = fprime(g, y)?;
    if !(d.value > 0.0) {
        return None;
    }
    let v = (fx - fy) / d.value;
    let err = v.abs() * d.err / d.value + 4.0 * f64::EPSILON * (fx.abs() + fy.abs()) / d.value;
    Some((v, err))
}

/// `Psi(x_1 + x_2, y_1 + y_2) <= Psi(x_1, y_1) + Psi(x_2, y_2)`.
/// Witness: `[x_1, y_1, x_2, y_2]`.
pub(crate) struct PsiSub<'a> {
    pub g: &'a Generator,
    pub dom: Window,
    pub cfg: CheckConfig,
}

impl Property for PsiSub<'_> {
    fn kind(&self) -> &'static str {
        "psi_subadditive"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        cluster_draw(rng, self.dom, 4)
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        let (x1, y1, x2, y2) = (w[0], w[1], w[2], w[3]);
        match (psi(self.g, x1 + x2, y1 + y2), psi(self.g, x1, y1), psi(self.g, x2, y2)) {
            (Some((l, el)), Some((p, ep)), Some((q, eq))) => {
                let rhs = p + q;
                Outcome::new(l, rhs, self.cfg.budget(l, rhs) + el + ep + eq)
            }
            _ => Outcome::Skip,
        }
    }

    fn shrink_target(&self, _: usize) -> Option<f64> {
        Some(shrink_target(self.g.window(), self.dom))
    }

    fn admissible(&self, w: &[f64]) -> bool {
        in_window(self.dom, w)
    }
}

/// `r = f' / f''_+` with its propagated error; `None` where `f''_+ <= 0`.
fn ratio(g: &Generator, x: f64) -> Option<(f64, f64)> {
    let d1 = fprime(g, x)?;
    let d2 = fsecond(g, x)?;
    if !(d2.value > 0.0 && d1.value > 0.0) {
        return None;
    }
    let r = d1.value / d2.value;
    Some((r, r * (d1.err / d1.value + d2.err / d2.value)))
}

/// `r(x) <= r(y)` for `lo <= x <= y < alpha`. Witness: `[x, y]`.
pub(crate) struct RatioIncreasing<'a> {
    pub g: &'a Generator,
    pub dom: Window,
    pub cfg: CheckConfig,
}

impl Property for RatioIncreasing<'_> {
    fn kind(&self) -> &'static str {
        "criterion_v/increasing"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        let mut w = cluster_draw(rng, self.dom, 2);
        w.sort_unstable_by(f64::total_cmp);
        w
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        match (ratio(self.g, w[0]), ratio(self.g, w[1])) {
            (Some((rx, ex)), Some((ry, ey))) => Outcome::new(rx, ry, self.cfg.budget(rx, ry) + ex + ey),
            _ => Outcome::Skip,
        }
    }

    fn shrink_target(&self, _: usize) -> Option<f64> {
        Some(self.dom.midpoint())
    }

    fn admissible(&self, w: &[f64]) -> bool {
        in_window(self.dom, w) && w[0] <= w[1]
    }
}

/// `r(x + y) >= r(x) + r(y)` for `x, y >= lo`, `x + y < alpha`.
/// Witness: `[x, y]`.
pub(crate) struct RatioSuperadditive<'a> {
    pub g: &'a Generator,
    pub dom: Window,
    pub cfg: CheckConfig,
}

impl Property for RatioSuperadditive<'_> {
    fn kind(&self) -> &'static str {
        "criterion_v/superadditive"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        let lo = self.dom.lo();
        let s = log_uniform(rng, 2.0 * lo, self.dom.hi());
        let t: f64 = rng.random();
        let x = (lo + t * (s - 2.0 * lo)).max(lo);
        let y = (s - x).max(lo);
        SmallVec::from_slice(&[x, y])
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        let (x, y) = (w[0], w[1]);
        match (ratio(self.g, x), ratio(self.g, y), ratio(self.g, x + y)) {
            (Some((rx, ex)), Some((ry, ey)), Some((rs, es))) => {
                let lhs = rx + ry;
                Outcome::new(lhs, rs, self.cfg.budget(lhs, rs) + ex + ey + es)
            }
            _ => Outcome::Skip,
        }
    }

    fn shrink_target(&self, _: usize) -> Option<f64> {
        Some(self.dom.midpoint())
    }

    fn admissible(&self, w: &[f64]) -> bool {
        w[0] >= self.dom.lo() && w[1] >= self.dom.lo() && w[0] + w[1] <= self.dom.hi()
    }
}

pub fn check_subadditive_direct(g: &Generator, cfg: &CheckConfig) -> Verdict {
    let g = canonical(g);
    let Some(dom) = half_window(g.window()) else {
        return Verdict::inconclusive(CheckerId::SubadditiveDirect, "window too narrow for sums");
    };
    let prop = Direct { g: &g, dom, n: cfg.arity.max(1), cfg: *cfg };
    verdict(CheckerId::SubadditiveDirect, vec![run(&prop, cfg)])
}

pub fn check_phi_concavity(g: &Generator, cfg: &CheckConfig) -> Verdict {
    let g = canonical(g);
    let Some(dom) = half_window(g.window()) else {
        return Verdict::inconclusive(CheckerId::PhiConcavity, "window too narrow for sums");
    };
    verdict(CheckerId::PhiConcavity, vec![run(&Phi { g: &g, dom, cfg: *cfg }, cfg)])
}

pub fn check_psi_subadditive(g: &Generator, cfg: &CheckConfig) -> Verdict {
    let g = canonical(g);
    let Some(dom) = half_window(g.window()) else {
        return Verdict::inconclusive(CheckerId::PsiSubadditive, "window too narrow for sums");
    };
    verdict(CheckerId::PsiSubadditive, vec![run(&PsiSub { g: &g, dom, cfg: *cfg }, cfg)])
}

pub fn check_criterion_v(g: &Generator, cfg: &CheckConfig) -> Verdict {
    let g = canonical(g);
    let alpha = find_alpha_with(&g, cfg.scan_grid);
    criterion_v_with(&g, &alpha, cfg)
}

/// Domain `[lo, alpha)` on which `r` is tested; `None` when empty.
fn ratio_domain(g: &Generator, alpha: &AlphaReport) -> Option<Window> {
    let w = g.window();
    let upper = match alpha.alpha {
        Alpha::Finite(a) if a < w.hi() => a * (1.0 - 1e-9),
        _ => alpha.alpha.upper(w)?,
    };
    Window::new(w.lo(), upper).ok()
}

/// Criterion (v) for a canonical generator with a precomputed `alpha` scan.
pub(crate) fn criterion_v_with(g: &Generator, alpha: &AlphaReport, cfg: &CheckConfig) -> Verdict {
    let id = CheckerId::CriterionV;
    if !alpha.pattern_ok {
        return pattern_verdict(g, alpha);
    }
    if alpha.alpha == Alpha::Zero {
        return Verdict::vacuous(id, "f''_+ vanishes on the window; the criterion holds vacuously");
    }
    let Some(dom) = ratio_domain(g, alpha) else {
        return Verdict::vacuous(id, "the interval below alpha is empty");
    };
    let mut runs = vec![run(&RatioIncreasing { g, dom, cfg: *cfg }, cfg)];
    if dom.hi() > 2.0 * dom.lo() {
        runs.push(run(&RatioSuperadditive { g, dom, cfg: *cfg }, cfg));
    }
    verdict(id, runs)
}

/// A broken sign pattern of `f''_+` refutes the criterion outright; the
/// witness is the grid point where the pattern is broken worst.
fn pattern_verdict(g: &Generator, alpha: &AlphaReport) -> Verdict {
    let id = CheckerId::CriterionV;
    let worst = alpha
        .violations
        .iter()
        .filter_map(|&x| classify(g, x).ok())
        .filter(|p| p.class != Curvature::Zero)
        .map(|p| (p.x, p.ratio.abs(), p.threshold))
        .filter(|(_, v, t)| v.is_finite() && t.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1));
    match worst {
        Some((x, v, t)) => Verdict {
            id,
            status: super::Status::Fail,
            min_margin: Some(-v),
            samples_run: 0,
            skipped: 0,
            counterexample: Some(Counterexample {
                kind: "criterion_v/pattern".into(),
                witness: vec![x],
                lhs: v,
                rhs: 0.0,
                violation: v,
                err_budget: t,
            }),
            note: Some("f''_+ is not positive-then-zero on the window".into()),
        },
        None => Verdict::inconclusive(id, "f''_+ could not be evaluated at the pattern violations"),
    }
}

pub(crate) fn property<'a>(kind: &str, g: &'a Generator, cfg: &CheckConfig) -> Option<Box<dyn Property + 'a>> {
    let half = half_window(g.window())?;
    match kind {
        "subadditive_direct" => Some(Box::new(Direct { g, dom: half, n: cfg.arity.max(1), cfg: *cfg })),
        "phi_concavity" => Some(Box::new(Phi { g, dom: half, cfg: *cfg })),
        "psi_subadditive" => Some(Box::new(PsiSub { g, dom: half, cfg: *cfg })),
        "criterion_v/increasing" | "criterion_v/superadditive" => {
            let alpha = find_alpha_with(g, cfg.scan_grid);
            let dom = ratio_domain(g, &alpha)?;
            if kind.ends_with("increasing") {
                Some(Box::new(RatioIncreasing { g, dom, cfg: *cfg }))
            } else {
                Some(Box::new(RatioSuperadditive { g, dom, cfg: *cfg }))
            }
        }
        _ => None,
    }
}
