//! Randomised generator families shared by the integration tests.

#![allow(dead_code)]

use meanscope::{build_fitted, Generator, GeneratorSpec, Piecewise, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Expected classification of a family member.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Subadditive,
    NotSubadditive,
}

#[derive(Debug, Clone)]
pub struct Member {
    pub label: String,
    pub generator: Generator,
    pub expect: Expect,
    /// No kinks and `f''` of one strict sign on the whole window.
    pub smooth: bool,
}

fn member(label: String, spec: GeneratorSpec, expect: Expect, smooth: bool) -> Member {
    let generator = build_fitted(spec, Window::DEFAULT).expect("family member builds");
    Member { label, generator, expect, smooth }
}

/// Random monotone C¹ quadratic spline with known classification.
///
/// Every spline starts at 0 with value 0. Writing `c0` for the first
/// curvature and `t1` for the first breakpoint, `r = f'/f''` is `x` on the
/// first piece and `x + t1 (c0/c1 - 1)` on a second piece of curvature `c1`.
/// The shapes:
/// - `flat`: one convex piece, then linear (subadditive).
/// - `step`: `c1 < c0`, linear after `alpha < 2 t1` (subadditive).
/// - `offset`: positive slope at 0, so `r` has a positive intercept and is
///   not superadditive.
/// - `wide`: as `step` with `alpha > 2 t1`; superadditivity fails for
///   `x, y >= t1`.
/// - `rising`: `c1 > c0`, so `r` jumps down at `t1`.
/// - `concave`: a piece with negative curvature.
pub fn spline(rng: &mut ChaCha8Rng) -> Member {
    let s = 10f64.powf(rng.random_range(-1.0..1.5));
    let c0 = 10f64.powf(rng.random_range(-1.0..1.0));
    let t1 = s;
    let shape = rng.random_range(0..6u32);
    let (label, segments, slope0, expect) = match shape {
        0 => ("flat", vec![(0.0, c0), (t1, 0.0)], 0.0, Expect::Subadditive),
        1 => {
            let c1 = c0 * rng.random_range(0.2..0.8);
            let alpha = t1 * rng.random_range(1.2..1.9);
            ("step", vec![(0.0, c0), (t1, c1), (alpha, 0.0)], 0.0, Expect::Subadditive)
        }
        2 => {
            let d0 = c0 * t1 * rng.random_range(0.3..1.0);
            ("offset", vec![(0.0, c0), (t1, 0.0)], d0, Expect::NotSubadditive)
        }
        3 => {
            let c1 = c0 * rng.random_range(0.2..0.8);
            let alpha = t1 * rng.random_range(2.5..4.0);
            ("wide", vec![(0.0, c0), (t1, c1), (alpha, 0.0)], 0.0, Expect::NotSubadditive)
        }
        4 => {
            let c1 = c0 * rng.random_range(1.5..3.0);
            let alpha = t1 * rng.random_range(1.2..1.9);
            ("rising", vec![(0.0, c0), (t1, c1), (alpha, 0.0)], 0.0, Expect::NotSubadditive)
        }
        _ => {
            // f' = c0 t1 at t1, falls to a quarter of that by t2, then linear
            let t2 = t1 * rng.random_range(1.5..3.0);
            let c1 = -0.75 * c0 * t1 / (t2 - t1);
            ("concave", vec![(0.0, c0), (t1, c1), (t2, 0.0)], 0.0, Expect::NotSubadditive)
        }
    };
    let pw = Piecewise::c1(0.0, slope0, &segments).expect("valid spline");
    member(format!("{label} {segments:?} slope0={slope0}"), GeneratorSpec::Piecewise(pw), expect, false)
}

/// Power, exponential and quadratic-linear members plus splines, `n` in all.
pub fn stress_family(seed: u64, n: usize) -> Vec<Member> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| match i % 4 {
            0 => {
                let p = rng.random_range(0.2..4.0);
                let expect = if p >= 1.0 { Expect::Subadditive } else { Expect::NotSubadditive };
                member(format!("power({p})"), GeneratorSpec::power(p), expect, (p - 1.0).abs() > 0.05)
            }
            1 => {
                let c = rng.random_range(0.2..2.0);
                member(format!("exp({c})"), GeneratorSpec::exp(c), Expect::NotSubadditive, true)
            }
            2 => {
                let a = rng.random_range(0.3..3.0);
                member(format!("quadlin({a})"), GeneratorSpec::quadlin(a), Expect::Subadditive, false)
            }
            _ => spline(&mut rng),
        })
        .collect()
}

pub fn splines(seed: u64, n: usize) -> Vec<Member> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| spline(&mut rng)).collect()
}
