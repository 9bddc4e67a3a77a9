use super::*;
use crate::generators::{build_fitted, parse_generator, GeneratorSpec};
use crate::means::qa_mean;
use crate::semidiff::Alpha;

fn gen(spec: GeneratorSpec) -> Generator {
    build_fitted(spec, Window::DEFAULT).unwrap()
}

fn cfg() -> CheckConfig {
    CheckConfig { samples: 2_000, ..CheckConfig::default() }
}

fn status(id: CheckerId, spec: GeneratorSpec) -> Status {
    run_checker(id, &gen(spec), &cfg()).status
}

fn log_exp_mean(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x.exp()).sum::<f64>() / xs.len() as f64).ln()
}

#[test]
fn exp_direct_witness_matches_closed_form() {
    let g = gen(GeneratorSpec::exp(1.0));
    let lhs = qa_mean(&g, &[0.2, 6.0]).unwrap().value;
    let rhs = 2.0 * qa_mean(&g, &[0.1, 3.0]).unwrap().value;
    assert!((lhs - log_exp_mean(&[0.2, 6.0])).abs() < 1e-12);
    assert!((lhs - rhs - 0.58910).abs() < 1e-4);
}

#[test]
fn direct_checker_classifies_power_and_exp() {
    assert_eq!(status(CheckerId::SubadditiveDirect, GeneratorSpec::power(2.0)), Status::Pass);
    assert_eq!(status(CheckerId::SubadditiveDirect, GeneratorSpec::exp(1.0)), Status::Fail);
    assert_eq!(status(CheckerId::SubadditiveDirect, GeneratorSpec::power(0.5)), Status::Fail);
}

#[test]
fn shrinking_keeps_the_power_half_violation() {
    let g = gen(GeneratorSpec::power(0.5));
    let ce = Counterexample {
        kind: "subadditive_direct".into(),
        witness: vec![1.0, 4.0, 4.0, 1.0],
        lhs: 5.0,
        rhs: 4.5,
        violation: 0.5,
        err_budget: 1e-8,
    };
    let out = shrink(&ce, &g, &cfg());
    assert!(out.violation >= 0.1, "{out:?}");
    // re-evaluate with the closed-form power mean
    let p = |a: f64, b: f64| ((a.sqrt() + b.sqrt()) / 2.0).powi(2);
    let w = &out.witness;
    let oracle = p(w[0] + w[2], w[1] + w[3]) - p(w[0], w[1]) - p(w[2], w[3]);
    assert!((oracle - out.violation).abs() < 1e-9);
}

#[test]
fn shrinking_exp_counterexample_stays_significant() {
    let g = gen(GeneratorSpec::exp(1.0));
    let v = check_subadditive_direct(&g, &cfg());
    let ce = v.counterexample.unwrap();
    assert!(ce.witness.iter().all(|&x| (0.1..=6.0).contains(&x)), "{ce:?}");
    let (x, y) = ce.witness.split_at(2);
    let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let oracle = log_exp_mean(&s) - log_exp_mean(x) - log_exp_mean(y);
    assert!(oracle >= 1e-3);
    assert!((oracle - ce.violation).abs() < 1e-9);
}

#[test]
fn shrinking_a_minimal_witness_is_a_no_op() {
    let g = gen(GeneratorSpec::exp(1.0));
    // positions already at the shrink target; the directions are never moved
    let t = g.window().midpoint();
    let ce = Counterexample {
        kind: "eq546".into(),
        witness: vec![t, t, 1.0, 1.0],
        lhs: 4.0,
        rhs: 2.0,
        violation: 2.0,
        err_budget: 1e-6,
    };
    assert_eq!(shrink(&ce, &g, &cfg()), ce);
}

#[test]
fn unknown_kinds_are_not_shrunk() {
    let g = gen(GeneratorSpec::exp(1.0));
    let ce = Counterexample {
        kind: "criterion_v/pattern".into(),
        witness: vec![3.0],
        lhs: 1.0,
        rhs: 0.0,
        violation: 1.0,
        err_budget: 1e-6,
    };
    assert_eq!(shrink(&ce, &g, &cfg()), ce);
}

#[test]
fn phi_concavity() {
    assert_eq!(status(CheckerId::PhiConcavity, GeneratorSpec::power(1.0)), Status::Pass);
    assert_eq!(status(CheckerId::PhiConcavity, GeneratorSpec::power(2.0)), Status::Pass);
    assert_eq!(status(CheckerId::PhiConcavity, GeneratorSpec::exp(1.0)), Status::Fail);
}

#[test]
fn phi_for_exp_is_a_product() {
    // Phi(u, v) = uv; points (1, 1) and (3, 3): chord 5, midpoint 4
    let phi = |u: f64, v: f64| u * v;
    assert_eq!((phi(1.0, 1.0) + phi(3.0, 3.0)) / 2.0, 5.0);
    assert_eq!(phi(2.0, 2.0), 4.0);
    // the library's preimage route at (2, 2) and (4, 4): chord 10, midpoint 9
    let g = gen(GeneratorSpec::exp(1.0));
    let (a, b) = (2f64.ln(), 4f64.ln());
    let chord = (g.eval(2.0 * a).unwrap() + g.eval(2.0 * b).unwrap()) / 2.0;
    let m = qa_mean(&g, &[a, b]).unwrap().value;
    assert!((chord - 10.0).abs() < 1e-12);
    assert!((g.eval(2.0 * m).unwrap() - 9.0).abs() < 1e-9);
}

#[test]
fn psi_subadditivity() {
    assert_eq!(status(CheckerId::PsiSubadditive, GeneratorSpec::power(1.0)), Status::Pass);
    assert_eq!(status(CheckerId::PsiSubadditive, GeneratorSpec::power(2.0)), Status::Pass);
    let v = run_checker(CheckerId::PsiSubadditive, &gen(GeneratorSpec::exp(1.0)), &cfg());
    assert_eq!(v.status, Status::Fail);
    let psi = |x: f64, y: f64| (x - y).exp() - 1.0;
    assert!((psi(4.0, 2.0) - 6.38906).abs() < 1e-5);
    assert!((2.0 * psi(2.0, 1.0) - 3.43656).abs() < 1e-5);
}

#[test]
fn criterion_v() {
    assert_eq!(status(CheckerId::CriterionV, GeneratorSpec::power(2.0)), Status::Pass);
    assert_eq!(status(CheckerId::CriterionV, GeneratorSpec::quadlin(1.0)), Status::Pass);
    let v = run_checker(CheckerId::CriterionV, &gen(GeneratorSpec::exp(1.0)), &cfg());
    assert_eq!(v.status, Status::Fail);
    assert_eq!(v.counterexample.unwrap().kind, "criterion_v/superadditive");
}

#[test]
fn criterion_v_pattern_failure() {
    // f'' < 0 on (0, 1): the pattern breaks below the first positive point
    let g = gen(parse_generator("x^3 - 3*x^2 + 4*x").unwrap());
    let v = check_criterion_v(&g, &cfg());
    assert_eq!(v.status, Status::Fail);
    assert_eq!(v.counterexample.unwrap().kind, "criterion_v/pattern");
}

#[test]
fn ma_bound() {
    assert_eq!(status(CheckerId::MaBound, GeneratorSpec::power(2.0)), Status::Pass);
    let v = run_checker(CheckerId::MaBound, &gen(GeneratorSpec::power(1.0)), &cfg());
    assert_eq!(v.status, Status::Pass);
    assert!(v.min_margin.unwrap().abs() < 1e-9);
    assert_eq!(status(CheckerId::MaBound, GeneratorSpec::power(0.5)), Status::Fail);
}

#[test]
fn fprime_logconcave() {
    assert_eq!(status(CheckerId::FprimeLogconcave, GeneratorSpec::exp(1.0)), Status::Pass);
    assert_eq!(status(CheckerId::FprimeLogconcave, GeneratorSpec::power(2.0)), Status::Pass);
    let g = build_fitted(parse_generator("exp(x^2)").unwrap(), Window::new(0.01, 20.0).unwrap()).unwrap();
    assert_eq!(check_fprime_logconcave(&g, &cfg()).status, Status::Fail);
    // f'(x) = 2x e^{x^2}: f'(2)^2 = 16 e^8 < f'(1) f'(3) = 12 e^10
    let d = |x: f64| 2.0 * x * (x * x).exp();
    assert!(d(2.0).powi(2) < d(1.0) * d(3.0));
}

#[test]
fn eq546() {
    assert_eq!(status(CheckerId::Eq546, GeneratorSpec::power(2.0)), Status::Pass);
    assert_eq!(status(CheckerId::Eq546, GeneratorSpec::quadlin(1.0)), Status::Pass);
    assert_eq!(status(CheckerId::Eq546, GeneratorSpec::exp(1.0)), Status::Fail);
}

#[test]
fn jensen_and_ratio_convexity() {
    for spec in [GeneratorSpec::power(1.0), GeneratorSpec::power(2.0), GeneratorSpec::exp(1.0)] {
        assert_eq!(status(CheckerId::JensenConvexity, spec.clone()), Status::Pass, "{spec}");
        assert_eq!(status(CheckerId::RatioConvex, spec.clone()), Status::Pass, "{spec}");
    }
    assert_eq!(status(CheckerId::JensenConvexity, GeneratorSpec::log()), Status::Fail);
    let v = run_checker(CheckerId::RatioConvex, &gen(GeneratorSpec::log()), &cfg());
    assert_eq!(v.status, Status::Fail);
    assert_eq!(v.counterexample.unwrap().kind, "ratio_convex/positive");
}

#[test]
fn ratio_convex_is_inconclusive_on_partial_zero_sets() {
    assert_eq!(status(CheckerId::RatioConvex, GeneratorSpec::quadlin(1.0)), Status::Inconclusive);
}

#[test]
fn comparing_power_means() {
    let (p1, p2) = (gen(GeneratorSpec::power(1.0)), gen(GeneratorSpec::power(2.0)));
    assert_eq!(compare_means(&p1, &p2, &cfg()).status, Status::Pass);
    assert_eq!(compare_means(&p2, &p1, &cfg()).status, Status::Fail);
    let v = compare_means(&p2, &p2, &cfg());
    assert_eq!(v.status, Status::Pass);
    assert!(v.min_margin.unwrap().abs() < 1e-6);
}

#[test]
fn comparing_kinked_generators_is_inconclusive() {
    let (q, p) = (gen(GeneratorSpec::quadlin(1.0)), gen(GeneratorSpec::power(2.0)));
    assert_eq!(compare_means(&q, &p, &cfg()).status, Status::Inconclusive);
}

#[test]
fn battery_resolutions() {
    let r = run_battery(&gen(GeneratorSpec::power(2.0)), &cfg());
    assert_eq!(r.resolution, Resolution::Subadditive);
    assert!(r.checkers.iter().all(|v| v.status == Status::Pass), "{r:?}");

    let r = run_battery(&gen(GeneratorSpec::exp(1.0)), &cfg());
    assert_eq!(r.resolution, Resolution::NotSubadditive);
    for v in &r.checkers {
        let expect = match v.id {
            CheckerId::MaBound | CheckerId::FprimeLogconcave => Status::Pass,
            _ => Status::Fail,
        };
        assert_eq!(v.status, expect, "{:?}", v.id);
    }

    let r = run_battery(&gen(GeneratorSpec::power(1.0)), &cfg());
    assert_eq!(r.resolution, Resolution::Subadditive);
    assert_eq!(r.alpha.alpha, Alpha::Zero);
}

#[test]
fn decreasing_generators_are_canonicalised() {
    let g = gen(parse_generator("-x^2").unwrap());
    assert_eq!(run_battery(&g, &cfg()).resolution, Resolution::Subadditive);
}

#[test]
fn resolution_rules() {
    let v = |id, status| Verdict { status, ..Verdict::vacuous(id, "") };
    let all = |eq: Status, val: Status| -> Vec<Verdict> {
        CheckerId::BATTERY
            .iter()
            .map(|&id| v(id, if CheckerId::EQUIVALENT.contains(&id) { eq } else { val }))
            .collect()
    };
    assert_eq!(resolve(&all(Status::Pass, Status::Pass)).0, Resolution::Subadditive);
    assert_eq!(resolve(&all(Status::Fail, Status::Pass)).0, Resolution::NotSubadditive);
    assert_eq!(resolve(&all(Status::Pass, Status::Fail)).0, Resolution::Disagreement);
    assert_eq!(resolve(&all(Status::Pass, Status::Inconclusive)).0, Resolution::Inconclusive);
    assert_eq!(resolve(&all(Status::Inconclusive, Status::Fail)).0, Resolution::NotSubadditive);
    assert_eq!(resolve(&all(Status::Inconclusive, Status::Pass)).0, Resolution::Inconclusive);
    let mut mixed = all(Status::Pass, Status::Pass);
    mixed[2].status = Status::Fail;
    assert_eq!(resolve(&mixed).0, Resolution::Disagreement);
}

#[test]
fn checker_ids_round_trip() {
    for id in CheckerId::SINGLE.iter().chain([CheckerId::CompareMeans].iter()) {
        assert_eq!(id.as_str().parse::<CheckerId>().unwrap(), *id);
        assert_eq!(serde_json_name(*id), id.as_str());
    }
    assert!("nope".parse::<CheckerId>().is_err());
}

fn serde_json_name(id: CheckerId) -> String {
    serde_json::to_value(id).unwrap().as_str().unwrap().to_string()
}

#[test]
fn verdicts_are_deterministic() {
    let g = gen(GeneratorSpec::exp(1.0));
    let a = check_subadditive_direct(&g, &cfg());
    let b = check_subadditive_direct(&g, &cfg());
    assert_eq!(a, b);
}
