//! Run the battery checkers and reconcile the results.

use serde::{Deserialize, Serialize};

use super::equivalence::criterion_v_with;
use super::{canonical, run_checker, CheckConfig, CheckerId, Status, Verdict};
use crate::generators::Generator;
use crate::semidiff::{detect_kinks_with, find_alpha_with, AlphaReport, Kink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Subadditive,
    NotSubadditive,
    /// The characterisations contradict each other, or a necessary
    /// condition fails although all of them pass. Points at a numerical
    /// defect, never at a property of the mean.
    Disagreement,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub alpha: AlphaReport,
    /// Detected jumps of `f'` and `f''`, sorted by position.
    pub kinks: Vec<Kink>,
    pub checkers: Vec<Verdict>,
    pub resolution: Resolution,
    pub details: Option<String>,
}

fn status_of(verdicts: &[Verdict], id: CheckerId) -> Option<Status> {
    verdicts.iter().find(|v| v.id == id).map(|v| v.status)
}

fn ids_with(verdicts: &[Verdict], ids: &[CheckerId], status: Status) -> Vec<&'static str> {
    ids.iter().filter(|&&id| status_of(verdicts, id) == Some(status)).map(|id| id.as_str()).collect()
}

/// Reconcile a set of verdicts into a resolution and an explanation.
///
/// The four characterisations must agree. Under a unanimous pass the
/// validators (`ma_bound`, `fprime_logconcave`, `eq546`) must pass too.
/// Without any characterisation deciding, a failed `ma_bound` or
/// `fprime_logconcave` still refutes subadditivity.
pub fn resolve(verdicts: &[Verdict]) -> (Resolution, Option<String>) {
    const VALIDATORS: [CheckerId; 3] = [CheckerId::MaBound, CheckerId::FprimeLogconcave, CheckerId::Eq546];
    let eq = &CheckerId::EQUIVALENT;
    let passed = ids_with(verdicts, eq, Status::Pass);
    let failed = ids_with(verdicts, eq, Status::Fail);
    if !passed.is_empty() && !failed.is_empty() {
        return (
            Resolution::Disagreement,
            Some(format!("pass: {}; fail: {}", passed.join(", "), failed.join(", "))),
        );
    }
    if passed.len() == eq.len() {
        let bad = ids_with(verdicts, &VALIDATORS, Status::Fail);
        if !bad.is_empty() {
            return (
                Resolution::Disagreement,
                Some(format!("all characterisations pass but {} fails", bad.join(", "))),
            );
        }
        let open = ids_with(verdicts, &VALIDATORS, Status::Inconclusive);
        if !open.is_empty() {
            return (Resolution::Inconclusive, Some(format!("inconclusive validators: {}", open.join(", "))));
        }
        return (Resolution::Subadditive, None);
    }
    if !failed.is_empty() {
        let open = ids_with(verdicts, eq, Status::Inconclusive);
        let details = (!open.is_empty()).then(|| format!("inconclusive: {}", open.join(", ")));
        return (Resolution::NotSubadditive, details);
    }
    let necessary = ids_with(verdicts, &[CheckerId::MaBound, CheckerId::FprimeLogconcave], Status::Fail);
    if !necessary.is_empty() {
        return (Resolution::NotSubadditive, Some(format!("refuted by {}", necessary.join(", "))));
    }
    let open = ids_with(verdicts, eq, Status::Inconclusive);
    (Resolution::Inconclusive, Some(format!("inconclusive: {}", open.join(", "))))
}

/// Scan for `alpha` and kinks, run the seven battery checkers and
/// resolve them. Every checker runs even once the answer is settled.
pub fn run_battery(g: &Generator, cfg: &CheckConfig) -> BatteryReport {
    let g = canonical(g);
    let alpha = find_alpha_with(&g, cfg.scan_grid);
    let mut kinks: Vec<Kink> = [1u8, 2]
        .iter()
        .flat_map(|&order| detect_kinks_with(&g, order, cfg.scan_grid).points)
        .collect();
    kinks.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.order.cmp(&b.order)));
    let checkers: Vec<Verdict> = CheckerId::BATTERY
        .iter()
        .map(|&id| match id {
            CheckerId::CriterionV => criterion_v_with(&g, &alpha, cfg),
            _ => run_checker(id, &g, cfg),
        })
        .collect();
    let (resolution, details) = resolve(&checkers);
    BatteryReport { alpha, kinks, checkers, resolution, details }
}
