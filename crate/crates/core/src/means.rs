//! Quasi-arithmetic means and the monotone inverse they rest on.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{EvalError, MeanError};
use crate::generators::Generator;
use crate::semidiff::Side;

pub(crate) type Buf = SmallVec<[f64; 8]>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanResult {
    pub value: f64,
    pub solver_iters: u32,
    /// `|f(value) - target|`.
    pub residual: f64,
}

/// Neumaier's compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `f^{-1}(y)` on the generator's window.
pub fn invert(g: &Generator, y: f64) -> Result<f64, MeanError> {
    let w = g.window();
    let (flo, fhi) = (g.value(w.lo())?, g.value(w.hi())?);
    let (lo_value, hi_value) = if flo <= fhi { (flo, fhi) } else { (fhi, flo) };
    if !(y >= lo_value && y <= hi_value) {
        return Err(MeanError::Range { y, lo_value, hi_value });
    }
    Ok(solve(g, y, w.lo(), w.hi(), flo, fhi)?.0)
}

/// Solve `f(x) = y` on `[a, b]` given `f(a)`, `f(b)` bracketing `y`.
///
/// With a closed-form `f'` this is Newton's method safeguarded by the
/// bracket: a step that leaves the current bracket, or follows an iterate
/// that failed to halve the residual, is replaced by a bisection step. Without one it is plain
/// bisection down to adjacent floats.
pub(crate) fn solve(
    g: &Generator,
    y: f64,
    mut a: f64,
    mut b: f64,
    fa: f64,
    fb: f64,
) -> Result<(f64, u32, f64), EvalError> {
    let s = if fb >= fa { 1.0 } else { -1.0 };
    if fa == y {
        return Ok((a, 0, 0.0));
    }
    if fb == y {
        return Ok((b, 0, 0.0));
    }
    let mut best = if (fa - y).abs() <= (fb - y).abs() { (a, (fa - y).abs()) } else { (b, (fb - y).abs()) };
    let mut iters = 0u32;
    let newton = g.has_analytic();
    let mut x = if newton {
        // secant start through the bracket ends
        let t = ((y - fa) / (fb - fa)).clamp(0.0, 1.0);
        let x0 = a + t * (b - a);
        if x0 > a && x0 < b { x0 } else { 0.5 * (a + b) }
    } else {
        0.5 * (a + b)
    };
    let mut prev_r = f64::INFINITY;
    while iters < 400 {
        iters += 1;
        let r = s * (g.value(x)? - y);
        if r.abs() < best.1 {
            best = (x, r.abs());
        }
        if r == 0.0 {
            break;
        }
        if r < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let mut next = mid;
        // Newton only while it keeps halving the residual
        if newton && r.abs() <= 0.5 * prev_r {
            if let Some(d) = g.analytic_d1(x, Side::Right).filter(|d| s * d > 0.0) {
                let step = x - r / (s * d);
                if step > a && step < b {
                    if (step - x).abs() <= 4.0 * f64::EPSILON * x {
                        let rs = (g.value(step)? - y).abs();
                        if rs < best.1 {
                            best = (step, rs);
                        }
                        break;
                    }
                    next = step;
                }
            }
        }
        prev_r = r.abs();
        x = next;
    }
    Ok((best.0, iters, best.1))
}

fn validated(g: &Generator, xs: &[f64]) -> Result<Buf, MeanError> {
    if xs.is_empty() {
        return Err(MeanError::Empty);
    }
    let w = g.window();
    let mut sorted: Buf = SmallVec::from_slice(xs);
    for &x in &sorted {
        if !(x > 0.0 && x.is_finite()) {
            return Err(MeanError::InvalidEntry { x });
        }
        if !w.contains(x) {
            return Err(EvalError::OutsideWindow { x, lo: w.lo(), hi: w.hi() }.into());
        }
    }
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(sorted)
}

/// `A_f(xs) = f^{-1}(mean of f(x_i))`, bracketed by the smallest and largest
/// entry so the result is internal by construction.
pub fn qa_mean(g: &Generator, xs: &[f64]) -> Result<MeanResult, MeanError> {
    let sorted = validated(g, xs)?;
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        return Ok(MeanResult { value: lo, solver_iters: 0, residual: 0.0 });
    }
    let fs: Buf = sorted.iter().map(|&x| g.value(x)).collect::<Result<_, _>>()?;
    let target = compensated_sum(fs.iter().copied()) / fs.len() as f64;
    let (flo, fhi) = (fs[0], fs[fs.len() - 1]);
    // rounding in the average can push the target a hair outside the bracket
    let target = if flo <= fhi { target.clamp(flo, fhi) } else { target.clamp(fhi, flo) };
    let (value, solver_iters, residual) = solve(g, target, lo, hi, flo, fhi)?;
    Ok(MeanResult { value, solver_iters, residual })
}

/// Closed-form power mean; `p = 0` is the geometric mean.
pub fn power_mean(p: f64, xs: &[f64]) -> f64 {
    let mut sorted: Buf = SmallVec::from_slice(xs);
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    if p == 0.0 {
        (compensated_sum(sorted.iter().map(|x| x.ln())) / n).exp()
    } else {
        (compensated_sum(sorted.iter().map(|x| x.powf(p))) / n).powf(1.0 / p)
    }
}

pub fn arithmetic_mean(xs: &[f64]) -> f64 {
    let mut sorted: Buf = SmallVec::from_slice(xs);
    sorted.sort_unstable_by(f64::total_cmp);
    compensated_sum(sorted.iter().copied()) / sorted.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{build, GeneratorSpec};
    use crate::window::Window;

    fn gen(spec: GeneratorSpec) -> Generator {
        build(spec, Window::DEFAULT).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn inverts_builtins() {
        assert!(rel(invert(&gen(GeneratorSpec::power(2.0)), 9.0).unwrap(), 3.0) < 1e-15);
        assert!((invert(&gen(GeneratorSpec::log()), 0.0).unwrap() - 1.0).abs() < 1e-15);
        let g = Window::new(1e-3, 100.0).and_then(|w| build(GeneratorSpec::exp(1.0), w)).unwrap();
        assert!(rel(invert(&g, 1f64.exp().powi(2)).unwrap(), 2.0) < 1e-10);
        assert!(matches!(invert(&gen(GeneratorSpec::power(2.0)), 1e7), Err(MeanError::Range { .. })));
    }

    #[test]
    fn numeric_only_inversion_reaches_float_resolution() {
        let g = gen(GeneratorSpec::power(2.0)).numeric_only();
        assert!(rel(invert(&g, 9.0).unwrap(), 3.0) < 1e-15);
    }

    #[test]
    fn spec_examples() {
        let p2 = gen(GeneratorSpec::power(2.0));
        let m = qa_mean(&p2, &[1.0, 7.0]).unwrap();
        assert!((m.value - 5.0).abs() < 1e-12);
        assert!(m.residual <= 1e-13 * 26.0);
        let log = gen(GeneratorSpec::log());
        assert!((qa_mean(&log, &[1.0, 4.0]).unwrap().value - 2.0).abs() < 1e-12);
        assert_eq!(qa_mean(&log, &[3.5, 3.5, 3.5]).unwrap().value, 3.5);
        assert_eq!(power_mean(1.0, &[2.0, 4.0]), 3.0);
        assert!((power_mean(0.0, &[1.0, 4.0]) - 2.0).abs() < 1e-15);
        assert!((power_mean(0.5, &[1.0, 4.0]) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_vectors() {
        let g = gen(GeneratorSpec::power(2.0));
        assert_eq!(qa_mean(&g, &[]), Err(MeanError::Empty));
        assert!(matches!(qa_mean(&g, &[1.0, -1.0]), Err(MeanError::InvalidEntry { .. })));
        assert!(matches!(qa_mean(&g, &[1.0, 1e4]), Err(MeanError::Eval(EvalError::OutsideWindow { .. }))));
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        assert_eq!(compensated_sum([1e16, 1.0, -1e16]), 1.0);
    }
}
