//! Necessary conditions for subadditivity, run as validators.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::engine::{run, verdict, Outcome, Property};
use super::{canonical, fprime, fsecond, half_window, in_window, shrink_target, CheckConfig, CheckerId, Verdict};
use crate::generators::Generator;
use crate::means::{arithmetic_mean, qa_mean, Buf};
use crate::sampling::Cluster;
use crate::window::Window;

/// Arithmetic mean bounded by `A_f`. Witness: the sample vector.
pub(crate) struct MaBound<'a> {
    pub g: &'a Generator,
    pub n: usize,
    pub cfg: CheckConfig,
}

impl Property for MaBound<'_> {
    fn kind(&self) -> &'static str {
        "ma_bound"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        let w = self.g.window();
        let cl = Cluster::draw(rng, w.lo(), w.hi());
        (0..self.n).map(|_| cl.point(rng)).collect()
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        match qa_mean(self.g, w) {
            Ok(m) => {
                let a = arithmetic_mean(w);
                Outcome::new(a, m.value, self.cfg.budget(a, m.value))
            }
            Err(_) => Outcome::Skip,
        }
    }

    fn shrink_target(&self, _: usize) -> Option<f64> {
        Some(self.g.window().midpoint())
    }

    fn admissible(&self, w: &[f64]) -> bool {
        in_window(self.g.window(), w)
    }
}

/// Jensen concavity of `log f'` in the form
/// `ln f'(x) + ln f'(u) <= 2 ln f'((x + u) / 2)`. Witness: `[x, u]`.
pub(crate) struct LogConcave<'a> {
    pub g: &'a Generator,
    pub cfg: CheckConfig,
}

impl Property for LogConcave<'_> {
    fn kind(&self) -> &'static str {
        "fprime_logconcave"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        let w = self.g.window();
        let cl = Cluster::draw(rng, w.lo(), w.hi());
        (0..2).map(|_| cl.point(rng)).collect()
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        let (x, u) = (w[0], w[1]);
        let m = 0.5 * (x + u);
        match (fprime(self.g, x), fprime(self.g, u), fprime(self.g, m)) {
            (Some(a), Some(b), Some(c)) if a.value > 0.0 && b.value > 0.0 && c.value > 0.0 => {
                let lhs = a.value.ln() + b.value.ln();
                let rhs = 2.0 * c.value.ln();
                let err = a.err / a.value + b.err / b.value + 2.0 * c.err / c.value;
                Outcome::new(lhs, rhs, self.cfg.budget(lhs, rhs) + err)
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

/// `q(x + y) (u + v)^2 <= q(x) u^2 + q(y) v^2` with `q = f''_+ / f'`, for
/// directions `(u, v)` in `[-1, 1]^2`. Witness: `[x, y, u, v]`.
pub(crate) struct Eq546<'a> {
    pub g: &'a Generator,
    pub dom: Window,
    pub cfg: CheckConfig,
}

fn q(g: &Generator, x: f64) -> Option<(f64, f64)> {
    let d1 = fprime(g, x)?;
    let d2 = fsecond(g, x)?;
    if !(d1.value > 0.0) {
        return None;
    }
    let v = d2.value / d1.value;
    Some((v, d2.err / d1.value + v.abs() * d1.err / d1.value))
}

impl Property for Eq546<'_> {
    fn kind(&self) -> &'static str {
        "eq546"
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Buf {
        let cl = Cluster::draw(rng, self.dom.lo(), self.dom.hi());
        let (x, y) = (cl.point(rng), cl.point(rng));
        let u: f64 = rng.random_range(-1.0..=1.0);
        let v: f64 = rng.random_range(-1.0..=1.0);
        Buf::from_slice(&[x, y, u, v])
    }

    fn evaluate(&self, w: &[f64]) -> Outcome {
        let (x, y, u, v) = (w[0], w[1], w[2], w[3]);
        match (q(self.g, x + y), q(self.g, x), q(self.g, y)) {
            (Some((qs, es)), Some((qx, ex)), Some((qy, ey))) => {
                let lhs = qs * (u + v) * (u + v);
                let rhs = qx * u * u + qy * v * v;
                let err = es * (u + v) * (u + v) + ex * u * u + ey * v * v;
                Outcome::new(lhs, rhs, self.cfg.budget(lhs, rhs) + err)
            }
            _ => Outcome::Skip,
        }
    }

    fn shrink_target(&self, i: usize) -> Option<f64> {
        (i < 2).then(|| shrink_target(self.g.window(), self.dom))
    }

    fn admissible(&self, w: &[f64]) -> bool {
        in_window(self.dom, &w[..2])
    }
}

pub fn check_ma_bound(g: &Generator, cfg: &CheckConfig) -> Verdict {
    let g = canonical(g);
    verdict(CheckerId::MaBound, vec![run(&MaBound { g: &g, n: cfg.arity.max(1), cfg: *cfg }, cfg)])
}

pub fn check_fprime_logconcave(g: &Generator, cfg: &CheckConfig) -> Verdict {
    let g = canonical(g);
    verdict(CheckerId::FprimeLogconcave, vec![run(&LogConcave { g: &g, cfg: *cfg }, cfg)])
}

pub fn check_eq546(g: &Generator, cfg: &CheckConfig) -> Verdict {
    let g = canonical(g);
    let Some(dom) = half_window(g.window()) else {
        return Verdict::inconclusive(CheckerId::Eq546, "window too narrow for sums");
    };
    verdict(CheckerId::Eq546, vec![run(&Eq546 { g: &g, dom, cfg: *cfg }, cfg)])
}

pub(crate) fn property<'a>(kind: &str, g: &'a Generator, cfg: &CheckConfig) -> Option<Box<dyn Property + 'a>> {
    match kind {
        "ma_bound" => Some(Box::new(MaBound { g, n: cfg.arity.max(1), cfg: *cfg })),
        "fprime_logconcave" => Some(Box::new(LogConcave { g, cfg: *cfg })),
        "eq546" => Some(Box::new(Eq546 { g, dom: half_window(g.window())?, cfg: *cfg })),
        _ => None,
    }
}
