//! Sampling checkers for the subadditivity characterisations, the necessary
//! conditions used as validators, and the battery that resolves them.

mod battery;
mod convexity;
mod engine;
mod equivalence;
mod necessary;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::generators::{canonicalize, Generator};
use crate::semidiff::SCAN_GRID;
use crate::window::Window;

pub use battery::{resolve, run_battery, BatteryReport, Resolution};
pub use convexity::{check_jensen_convexity, check_ratio_convex, compare_means};
pub use engine::shrink;
pub use equivalence::{check_criterion_v, check_phi_concavity, check_psi_subadditive, check_subadditive_direct};
pub use necessary::{check_eq546, check_fprime_logconcave, check_ma_bound};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub samples: u64,
    pub arity: usize,
    pub seed: u64,
    pub tol_rel: f64,
    /// Grid size for the `alpha` and kink scans.
    pub scan_grid: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { samples: 10_000, arity: 2, seed: 0, tol_rel: 1e-9, scan_grid: SCAN_GRID }
    }
}

impl CheckConfig {
    /// Rounding allowance for comparing `lhs` with `rhs`.
    pub fn budget(&self, lhs: f64, rhs: f64) -> f64 {
        self.tol_rel * (1.0 + lhs.abs() + rhs.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckerId {
    MaBound,
    FprimeLogconcave,
    SubadditiveDirect,
    PhiConcavity,
    PsiSubadditive,
    CriterionV,
    Eq546,
    JensenConvexity,
    RatioConvex,
    CompareMeans,
}

impl CheckerId {
    /// Checkers run by the battery, in order.
    pub const BATTERY: [CheckerId; 7] = [
        CheckerId::MaBound,
        CheckerId::FprimeLogconcave,
        CheckerId::SubadditiveDirect,
        CheckerId::PhiConcavity,
        CheckerId::PsiSubadditive,
        CheckerId::CriterionV,
        CheckerId::Eq546,
    ];

    /// Checkers that take a single generator, battery checkers first.
    pub const SINGLE: [CheckerId; 9] = [
        CheckerId::MaBound,
        CheckerId::FprimeLogconcave,
        CheckerId::SubadditiveDirect,
        CheckerId::PhiConcavity,
        CheckerId::PsiSubadditive,
        CheckerId::CriterionV,
        CheckerId::Eq546,
        CheckerId::JensenConvexity,
        CheckerId::RatioConvex,
    ];

    /// The four characterisations that must agree with each other.
    pub const EQUIVALENT: [CheckerId; 4] = [
        CheckerId::SubadditiveDirect,
        CheckerId::PhiConcavity,
        CheckerId::PsiSubadditive,
        CheckerId::CriterionV,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckerId::MaBound => "ma_bound",
            CheckerId::FprimeLogconcave => "fprime_logconcave",
            CheckerId::SubadditiveDirect => "subadditive_direct",
            CheckerId::PhiConcavity => "phi_concavity",
            CheckerId::PsiSubadditive => "psi_subadditive",
            CheckerId::CriterionV => "criterion_v",
            CheckerId::Eq546 => "eq546",
            CheckerId::JensenConvexity => "jensen_convexity",
            CheckerId::RatioConvex => "ratio_convex",
            CheckerId::CompareMeans => "compare_means",
        }
    }
}

impl fmt::Display for CheckerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckerId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckerId::SINGLE
            .iter()
            .chain([CheckerId::CompareMeans].iter())
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown checker `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Which inequality was violated, e.g. `criterion_v/superadditive`.
    pub kind: String,
    pub witness: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`, always above `err_budget`.
    pub violation: f64,
    pub err_budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: CheckerId,
    pub status: Status,
    /// Smallest `rhs - lhs` seen; `None` when nothing was evaluated.
    pub min_margin: Option<f64>,
    pub samples_run: u64,
    pub skipped: u64,
    pub counterexample: Option<Counterexample>,
    pub note: Option<String>,
}

impl Verdict {
    pub(crate) fn vacuous(id: CheckerId, note: impl Into<String>) -> Self {
        Verdict {
            id,
            status: Status::Pass,
            min_margin: None,
            samples_run: 0,
            skipped: 0,
            counterexample: None,
            note: Some(note.into()),
        }
    }

    pub(crate) fn inconclusive(id: CheckerId, note: impl Into<String>) -> Self {
        Verdict { status: Status::Inconclusive, ..Verdict::vacuous(id, note) }
    }
}

/// Run one single-generator checker by id.
pub fn run_checker(id: CheckerId, g: &Generator, cfg: &CheckConfig) -> Verdict {
    match id {
        CheckerId::MaBound => check_ma_bound(g, cfg),
        CheckerId::FprimeLogconcave => check_fprime_logconcave(g, cfg),
        CheckerId::SubadditiveDirect => check_subadditive_direct(g, cfg),
        CheckerId::PhiConcavity => check_phi_concavity(g, cfg),
        CheckerId::PsiSubadditive => check_psi_subadditive(g, cfg),
        CheckerId::CriterionV => check_criterion_v(g, cfg),
        CheckerId::Eq546 => check_eq546(g, cfg),
        CheckerId::JensenConvexity => check_jensen_convexity(g, cfg),
        CheckerId::RatioConvex => check_ratio_convex(g, cfg),
        CheckerId::CompareMeans => Verdict::inconclusive(id, "compare_means needs two generators"),
    }
}

fn canonical(g: &Generator) -> Generator {
    canonicalize(g)
}

/// A one-sided derivative value with its error estimate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Deriv {
    pub value: f64,
    pub err: f64,
}

/// `f'_+(x)`, or `None` at a listed kink of `f'` or on evaluation failure.
pub(crate) fn fprime(g: &Generator, x: f64) -> Option<Deriv> {
    if g.is_listed_kink(x, 1) {
        return None;
    }
    let e = crate::semidiff::d1_side(g, x, crate::semidiff::Side::Right).ok()?;
    e.value.is_finite().then_some(Deriv { value: e.value, err: e.err_est })
}

/// `f''_+(x)`, or `None` on evaluation failure.
pub(crate) fn fsecond(g: &Generator, x: f64) -> Option<Deriv> {
    let e = crate::semidiff::d2_side(g, x, crate::semidiff::Side::Right).ok()?;
    e.value.is_finite().then_some(Deriv { value: e.value, err: e.err_est })
}

/// Sampling domain `[lo, hi/2]`, so that sums of two points stay inside.
pub(crate) fn half_window(w: Window) -> Option<Window> {
    Window::new(w.lo(), w.hi() / 2.0).ok()
}

/// Window midpoint pulled into `dom`, the shrinker's target.
pub(crate) fn shrink_target(w: Window, dom: Window) -> f64 {
    w.midpoint().clamp(dom.lo(), dom.hi())
}

pub(crate) fn in_window(dom: Window, xs: &[f64]) -> bool {
    xs.iter().all(|&x| dom.contains(x))
}

#[cfg(test)]
mod tests;
