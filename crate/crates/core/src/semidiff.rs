//! One-sided derivative estimates, kink detection and the `alpha` scan.

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{DerivError, EvalError};
use crate::generators::Generator;
use crate::window::{log_grid, Window};

pub const SCAN_GRID: usize = 2049;
/// Relative first step, `h0 = STEP_FACTOR * x`.
pub const STEP_FACTOR: f64 = 1e-3;
pub const LEVELS: usize = 7;
/// `f''_+` counts as zero when `|f''_+| * x / f'` is below this.
pub const ZERO_RATIO: f64 = 1e-6;
pub const KINK_TOL: f64 = 1e-3;
const NESTED_INFLATION: f64 = 10.0;
const MAX_VIOLATIONS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiDerivEstimate {
    pub value: f64,
    pub side: Side,
    pub order: u8,
    pub err_est: f64,
    pub point: f64,
}

fn check_point(g: &Generator, x: f64) -> Result<(), DerivError> {
    if !(x > 0.0) {
        return Err(EvalError::NonPositive { x }.into());
    }
    let w = g.window();
    if !w.contains(x) {
        return Err(EvalError::OutsideWindow { x, lo: w.lo(), hi: w.hi() }.into());
    }
    let h_min = STEP_FACTOR * x * 0.5f64.powi(LEVELS as i32 - 1);
    if x + h_min == x || x - h_min == x || !h_min.is_normal() {
        return Err(DerivError::StepUnderflow { x });
    }
    Ok(())
}

/// Richardson tableau over `h_k = h0 / 2^k` for a quotient whose error
/// expands in integer powers of `h`. Returns the diagonal.
fn richardson(
    h0: f64,
    mut quotient: impl FnMut(f64) -> Result<f64, EvalError>,
) -> Result<[f64; LEVELS], EvalError> {
    let mut prev = [0.0; LEVELS];
    let mut diag = [0.0; LEVELS];
    let mut h = h0;
    for k in 0..LEVELS {
        let mut row = [0.0; LEVELS];
        row[0] = quotient(h)?;
        let mut factor = 1.0;
        for j in 1..=k {
            factor *= 2.0;
            row[j] = row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0);
        }
        diag[k] = row[k];
        prev = row;
        h *= 0.5;
    }
    Ok(diag)
}

fn from_diag(diag: &[f64; LEVELS], x: f64, side: Side, order: u8, inflate: f64) -> SemiDerivEstimate {
    let value = diag[LEVELS - 1];
    let err = (diag[LEVELS - 1] - diag[LEVELS - 2]).abs() * inflate;
    SemiDerivEstimate { value, side, order, err_est: err + 4.0 * f64::EPSILON * value.abs(), point: x }
}

/// Diagonal of the numeric first-derivative tableau, lowest order first.
pub fn d1_tableau(g: &Generator, x: f64, side: Side) -> Result<[f64; LEVELS], DerivError> {
    check_point(g, x)?;
    let s = side.sign();
    let fx = g.value(x)?;
    Ok(richardson(STEP_FACTOR * x, |h| Ok((g.value(x + s * h)? - fx) / (s * h)))?)
}

/// One-sided first derivative `f'_-` or `f'_+`.
pub fn d1_side(g: &Generator, x: f64, side: Side) -> Result<SemiDerivEstimate, DerivError> {
    check_point(g, x)?;
    if let Some(v) = g.analytic_d1(x, side) {
        return Ok(exact(v, x, side, 1));
    }
    let diag = d1_tableau(g, x, side)?;
    Ok(from_diag(&diag, x, side, 1, 1.0))
}

/// One-sided second derivative `f''_-` or `f''_+`, the one-sided derivative
/// of `f'` on the same side.
pub fn d2_side(g: &Generator, x: f64, side: Side) -> Result<SemiDerivEstimate, DerivError> {
    check_point(g, x)?;
    if let Some(v) = g.analytic_d2(x, side) {
        return Ok(exact(v, x, side, 2));
    }
    let s = side.sign();
    let h0 = STEP_FACTOR * x;
    if let Some(d1x) = g.analytic_d1(x, side) {
        let nested = richardson(h0, |h| {
            let d = g
                .analytic_d1(x + s * h, side)
                .ok_or(EvalError::Overflow { x: x + s * h })?;
            Ok((d - d1x) / (s * h))
        });
        if let Ok(diag) = nested {
            return Ok(from_diag(&diag, x, side, 2, 1.0));
        }
    }
    let fx = g.value(x)?;
    let diag = richardson(h0, |h| {
        let f1 = g.value(x + s * h)?;
        let f2 = g.value(x + 2.0 * s * h)?;
        Ok((f2 - 2.0 * f1 + fx) / (h * h))
    })?;
    Ok(from_diag(&diag, x, side, 2, NESTED_INFLATION))
}

fn exact(v: f64, x: f64, side: Side, order: u8) -> SemiDerivEstimate {
    SemiDerivEstimate { value: v, side, order, err_est: 4.0 * f64::EPSILON * v.abs(), point: x }
}

pub fn d_side(g: &Generator, x: f64, side: Side, order: u8) -> Result<SemiDerivEstimate, DerivError> {
    if order == 1 {
        d1_side(g, x, side)
    } else {
        d2_side(g, x, side)
    }
}

// ---------------------------------------------------------------------------
// Kinks

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kink {
    pub x: f64,
    pub left_value: f64,
    pub right_value: f64,
    pub order: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkReport {
    pub points: Vec<Kink>,
    pub window: Window,
}

pub fn detect_kinks(g: &Generator, order: u8) -> KinkReport {
    detect_kinks_with(g, order, SCAN_GRID)
}

/// Scan for jumps of the one-sided derivative of the given order.
///
/// The right-sided probe is evaluated on a log grid; a cell is flagged when
/// its probe increment is a local maximum and not negligible. Flagged cells
/// are narrowed by trisection and confirmed by comparing the left estimate
/// at the lower end with the right estimate at the upper end. Without
/// analytic derivatives the localisation is limited by the difference step.
pub fn detect_kinks_with(g: &Generator, order: u8, n: usize) -> KinkReport {
    let w = g.window();
    let probe = |t: f64| d_side(g, t, Side::Right, order).map(|e| e.value).ok();
    let xs = log_grid(w.lo(), w.hi(), n.max(3));
    let ps: Vec<Option<f64>> = xs.iter().map(|&x| probe(x)).collect();
    let deltas: Vec<Option<f64>> = ps
        .windows(2)
        .map(|p| match (p[0], p[1]) {
            (Some(a), Some(b)) => Some((b - a).abs()),
            _ => None,
        })
        .collect();

    let mut points: Vec<Kink> = Vec::new();
    for i in 0..deltas.len() {
        let Some(d) = deltas[i] else { continue };
        let (pa, pb) = (ps[i].unwrap(), ps[i + 1].unwrap());
        if !(d > KINK_TOL * (1.0 + pa.abs() + pb.abs())) {
            continue;
        }
        let left = if i > 0 { deltas[i - 1] } else { None };
        let right = deltas.get(i + 1).copied().flatten();
        let (left, right) = match (left, right) {
            (None, None) => (0.0, 0.0),
            (Some(l), None) => (l, l),
            (None, Some(r)) => (r, r),
            (Some(l), Some(r)) => (l, r),
        };
        if !(d >= left && d > right) {
            continue;
        }
        if let Some(k) = refine(g, order, xs[i], xs[i + 1], pa, pb, &probe) {
            points.push(k);
        }
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    points.dedup_by(|b, a| (b.x - a.x).abs() <= 1e-6 * a.x);
    KinkReport { points, window: w }
}

fn refine(
    g: &Generator,
    order: u8,
    mut a: f64,
    mut b: f64,
    mut pa: f64,
    mut pb: f64,
    probe: &impl Fn(f64) -> Option<f64>,
) -> Option<Kink> {
    for _ in 0..80 {
        if b - a <= 1e-9 * b {
            break;
        }
        let t1 = a + (b - a) / 3.0;
        let t2 = a + 2.0 * (b - a) / 3.0;
        let (p1, p2) = (probe(t1)?, probe(t2)?);
        let c = [(p1 - pa).abs(), (p2 - p1).abs(), (pb - p2).abs()];
        if c[0] >= c[1] && c[0] >= c[2] {
            b = t1;
            pb = p1;
        } else if c[1] >= c[2] {
            a = t1;
            b = t2;
            pa = p1;
            pb = p2;
        } else {
            a = t2;
            pa = p2;
        }
    }
    let listed = g.analytic_kinks(order).iter().copied().find(|&k| k >= a && k <= b);
    let (x, lo, hi) = match listed {
        Some(k) => (k, k, k),
        None => (0.5 * (a + b), a, b),
    };
    let l = d_side(g, lo, Side::Left, order).ok()?.value;
    let r = d_side(g, hi, Side::Right, order).ok()?.value;
    ((l - r).abs() > KINK_TOL * (1.0 + l.abs() + r.abs())).then_some(Kink { x, left_value: l, right_value: r, order })
}

// ---------------------------------------------------------------------------
// alpha

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Positive,
    Zero,
    Negative,
}

/// Sign class of `f''_+` at one point, in the scale-free units
/// `f''_+ * x / f'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvaturePoint {
    pub x: f64,
    pub class: Curvature,
    pub ratio: f64,
    /// Zero threshold in the same units, widened by the estimate errors.
    pub threshold: f64,
}

pub fn classify(g: &Generator, x: f64) -> Result<CurvaturePoint, DerivError> {
    let f1 = d1_side(g, x, Side::Right)?;
    let f2 = d2_side(g, x, Side::Right)?;
    let scale = f1.value.abs() / x;
    let cut = ZERO_RATIO * scale + f2.err_est + ZERO_RATIO * f1.err_est / x;
    let (ratio, threshold) = if scale > 0.0 {
        (f2.value / scale, cut / scale)
    } else {
        (f64::INFINITY.copysign(f2.value), f64::INFINITY)
    };
    let class = if f2.value.abs() <= cut {
        Curvature::Zero
    } else if f2.value > 0.0 {
        Curvature::Positive
    } else {
        Curvature::Negative
    };
    Ok(CurvaturePoint { x, class, ratio, threshold })
}

/// Curvature classes on a log grid; evaluation failures are `None`.
pub fn curvature_profile(g: &Generator, n: usize) -> Vec<(f64, Option<Curvature>)> {
    let w = g.window();
    log_grid(w.lo(), w.hi(), n.max(2))
        .into_iter()
        .map(|x| (x, classify(g, x).ok().map(|c| c.class)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    /// `f''_+` vanishes on the whole window.
    Zero,
    Finite(f64),
    /// `f''_+ > 0` on the whole window, so `alpha >= hi`.
    Infinite,
    /// The sign pattern is broken; no threshold exists.
    Undetermined,
}

impl Alpha {
    /// Upper end of the interval on which `f''_+ > 0`, clipped to `hi`.
    pub fn upper(&self, w: Window) -> Option<f64> {
        match self {
            Alpha::Zero => Some(w.lo()),
            Alpha::Finite(a) => Some(a.min(w.hi())),
            Alpha::Infinite => Some(w.hi()),
            Alpha::Undetermined => None,
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Alpha::Zero => s.serialize_u8(0),
            Alpha::Finite(a) => s.serialize_f64(*a),
            Alpha::Infinite => s.serialize_str("inf"),
            Alpha::Undetermined => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Num(f64),
            Text(String),
        }
        match Option::<Raw>::deserialize(d)? {
            None => Ok(Alpha::Undetermined),
            Some(Raw::Int(0)) => Ok(Alpha::Zero),
            Some(Raw::Int(n)) => Ok(Alpha::Finite(n as f64)),
            Some(Raw::Num(a)) => Ok(Alpha::Finite(a)),
            Some(Raw::Text(t)) if t == "inf" => Ok(Alpha::Infinite),
            Some(Raw::Text(t)) => Err(de::Error::custom(format!("unknown alpha value `{t}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    #[serde(rename = "value")]
    pub alpha: Alpha,
    pub pattern_ok: bool,
    /// Grid points breaking the pattern, at most 16.
    pub violations: Vec<f64>,
}

pub fn find_alpha(g: &Generator) -> AlphaReport {
    find_alpha_with(g, SCAN_GRID)
}

/// Locate the point where `f''_+` switches from positive to identically
/// zero. Expects an increasing generator.
pub fn find_alpha_with(g: &Generator, n: usize) -> AlphaReport {
    let profile = curvature_profile(g, n);
    let mut violations = Vec::new();
    let mut first_zero: Option<usize> = None;
    for (i, &(x, class)) in profile.iter().enumerate() {
        match class {
            Some(Curvature::Positive) if first_zero.is_none() => {}
            Some(Curvature::Zero) => {
                first_zero.get_or_insert(i);
            }
            _ => violations.push(x),
        }
    }
    if !violations.is_empty() {
        violations.truncate(MAX_VIOLATIONS);
        return AlphaReport { alpha: Alpha::Undetermined, pattern_ok: false, violations };
    }
    let alpha = match first_zero {
        None => Alpha::Infinite,
        Some(0) => Alpha::Zero,
        Some(k) => Alpha::Finite(bisect_alpha(g, profile[k - 1].0, profile[k].0)),
    };
    AlphaReport { alpha, pattern_ok: true, violations }
}

fn bisect_alpha(g: &Generator, mut pos: f64, mut zero: f64) -> f64 {
    for _ in 0..200 {
        if zero / pos - 1.0 <= 1e-9 {
            break;
        }
        let mid = (pos * zero).sqrt();
        if mid <= pos || mid >= zero {
            break;
        }
        match classify(g, mid) {
            Ok(CurvaturePoint { class: Curvature::Positive, .. }) => pos = mid,
            _ => zero = mid,
        }
    }
    zero
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{build, GeneratorSpec, Piece, Piecewise};

    fn gen(spec: GeneratorSpec) -> Generator {
        build(spec, Window::DEFAULT).unwrap()
    }

    fn two_piece() -> Generator {
        let pw = Piecewise::new(1.0, vec![
            Piece { start: 0.0, slope: 1.0, curvature: 0.0 },
            Piece { start: 1.0, slope: 3.0, curvature: 0.0 },
        ])
        .unwrap();
        gen(GeneratorSpec::Piecewise(pw))
    }

    #[test]
    fn one_sided_slopes_at_a_kink() {
        let g = two_piece();
        let l = d1_side(&g, 1.0, Side::Left).unwrap();
        let r = d1_side(&g, 1.0, Side::Right).unwrap();
        assert!((l.value - 1.0).abs() < 1e-6, "{l:?}");
        assert!((r.value - 3.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn quadlin_second_derivative_sides() {
        let g = gen(GeneratorSpec::quadlin(1.0));
        let l = d2_side(&g, 1.0, Side::Left).unwrap();
        let r = d2_side(&g, 1.0, Side::Right).unwrap();
        assert!((l.value - 2.0).abs() < 1e-5);
        assert!(r.value.abs() < 1e-5);
    }

    #[test]
    fn numeric_matches_analytic() {
        let g = gen(GeneratorSpec::power(3.0)).numeric_only();
        for side in [Side::Left, Side::Right] {
            let d1 = d1_side(&g, 2.0, side).unwrap();
            assert!((d1.value - 12.0).abs() < 1e-8, "{d1:?}");
            let d2 = d2_side(&g, 2.0, side).unwrap();
            assert!((d2.value - 12.0).abs() < 1e-6 + d2.err_est, "{d2:?}");
        }
        let g = gen(GeneratorSpec::power(2.0)).numeric_only();
        let d = d1_side(&g, 3.0, Side::Left).unwrap();
        assert!((d.value - 6.0).abs() < 1e-8);
    }

    #[test]
    fn linear_second_derivative_is_zero() {
        let g = gen(GeneratorSpec::power(1.0)).numeric_only();
        let d2 = d2_side(&g, 5.0, Side::Right).unwrap();
        assert!(d2.value.abs() <= d2.err_est.max(1e-9));
    }

    #[test]
    fn points_outside_window_are_rejected() {
        let g = gen(GeneratorSpec::power(2.0));
        assert!(d1_side(&g, 5e3, Side::Left).is_err());
        assert!(d1_side(&g, 1e3, Side::Right).is_ok());
    }

    #[test]
    fn kinks_found_and_localized() {
        let g = gen(GeneratorSpec::quadlin(1.0));
        let rep = detect_kinks(&g, 2);
        assert_eq!(rep.points.len(), 1, "{rep:?}");
        let k = rep.points[0];
        assert!((k.x - 1.0).abs() < 1e-4);
        assert!((k.left_value - 2.0).abs() < 1e-5 && k.right_value.abs() < 1e-5);
        assert!(detect_kinks(&g, 1).points.is_empty());
        assert!(detect_kinks(&gen(GeneratorSpec::power(2.0)), 1).points.is_empty());
        assert!(detect_kinks(&gen(GeneratorSpec::log()), 2).points.is_empty());
        let rep = detect_kinks(&two_piece(), 1);
        assert_eq!(rep.points.len(), 1);
        assert!((rep.points[0].x - 1.0).abs() < 1e-4);
    }

    #[test]
    fn alpha_patterns() {
        let rep = find_alpha(&gen(GeneratorSpec::quadlin(1.0)));
        assert!(rep.pattern_ok);
        match rep.alpha {
            Alpha::Finite(a) => assert!((a - 1.0).abs() <= 1e-3),
            other => panic!("{other:?}"),
        }
        assert_eq!(find_alpha(&gen(GeneratorSpec::power(2.0))).alpha, Alpha::Infinite);
        assert_eq!(find_alpha(&gen(GeneratorSpec::power(1.0))).alpha, Alpha::Zero);
        let rep = find_alpha(&gen(GeneratorSpec::log()));
        assert!(!rep.pattern_ok && !rep.violations.is_empty());
    }

    #[test]
    fn alpha_serializes_with_sentinels() {
        for (a, text) in [
            (Alpha::Zero, "0"),
            (Alpha::Infinite, "\"inf\""),
            (Alpha::Finite(1.5), "1.5"),
            (Alpha::Undetermined, "null"),
        ] {
            let s = serde_json::to_string(&a).unwrap();
            assert_eq!(s, text);
            assert_eq!(serde_json::from_str::<Alpha>(&s).unwrap(), a);
        }
    }
}
