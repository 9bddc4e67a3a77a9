//! Reduced-size runs of the randomised family; the full-size runs live in
//! the acceptance suite.

mod common;

use common::Expect;
use meanscope::*;

fn expected(e: Expect) -> Resolution {
    match e {
        Expect::Subadditive => Resolution::Subadditive,
        Expect::NotSubadditive => Resolution::NotSubadditive,
    }
}

#[test]
fn family_members_resolve_as_constructed() {
    let cfg = CheckConfig { samples: 3_000, ..CheckConfig::default() };
    for m in common::stress_family(11, 48) {
        let r = run_battery(&m.generator, &cfg);
        assert_eq!(r.resolution, expected(m.expect), "{}: {:?}", m.label, r.details);
        let eq: Vec<Status> = CheckerId::EQUIVALENT
            .iter()
            .map(|id| r.checkers.iter().find(|v| v.id == *id).unwrap().status)
            .collect();
        assert!(eq.iter().all(|s| *s == eq[0]), "{}: {eq:?}", m.label);
    }
}

#[test]
fn spline_resolutions_do_not_depend_on_the_seed() {
    for m in common::splines(5, 8) {
        let first = run_battery(&m.generator, &CheckConfig { samples: 2_000, seed: 0, ..CheckConfig::default() });
        for seed in 1..4 {
            let cfg = CheckConfig { samples: 2_000, seed, ..CheckConfig::default() };
            assert_eq!(run_battery(&m.generator, &cfg).resolution, first.resolution, "{}", m.label);
        }
    }
}

#[test]
fn jensen_and_ratio_checks_agree_on_smooth_members() {
    let cfg = CheckConfig { samples: 2_000, ..CheckConfig::default() };
    for m in common::stress_family(3, 40).into_iter().filter(|m| m.smooth) {
        let j = run_checker(CheckerId::JensenConvexity, &m.generator, &cfg);
        let q = run_checker(CheckerId::RatioConvex, &m.generator, &cfg);
        assert_eq!(j.status, q.status, "{}: {:?}", m.label, q.note);
    }
}

#[test]
fn eq546_passes_on_subadditive_members() {
    let cfg = CheckConfig { samples: 2_000, ..CheckConfig::default() };
    for m in common::stress_family(4, 40).into_iter().filter(|m| m.expect == Expect::Subadditive) {
        assert_eq!(run_checker(CheckerId::Eq546, &m.generator, &cfg).status, Status::Pass, "{}", m.label);
    }
}

#[test]
fn power_generators_on_both_sides_of_one() {
    let cfg = CheckConfig { samples: 3_000, ..CheckConfig::default() };
    for p in [0.3, 0.9, 1.0, 1.1, 3.5] {
        let g = build_fitted(GeneratorSpec::power(p), Window::DEFAULT).unwrap();
        let want = if p >= 1.0 { Resolution::Subadditive } else { Resolution::NotSubadditive };
        assert_eq!(run_battery(&g, &cfg).resolution, want, "p = {p}");
    }
}
