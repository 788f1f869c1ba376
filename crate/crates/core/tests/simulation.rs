use canard_lab::sim::{ensemble_transport, find_control_lambda, transition_map};
use canard_lab::{
    EntryKind, LienardSystem, SdiEvaluator, SimConfig, SlowRelation, TransportMeasure,
};

const BRACKET: (f64, f64) = (-0.05, 0.05);

fn setup(eps: f64, sc: (f64, f64)) -> (LienardSystem, SimConfig, f64) {
    let sys = LienardSystem::van_der_pol();
    let cfg = SimConfig::with_default_sections(&sys, eps, sc.0, sc.1).unwrap();
    let lambda = find_control_lambda(&sys, &cfg, sc.0, sc.1, BRACKET)
        .unwrap()
        .lambda;
    (sys, cfg, lambda)
}

fn sup_gap(eps: f64) -> f64 {
    let sc = (0.05, 0.1);
    let (lo, hi) = (1.0 / 30.0 - 1.0 / 150.0, 0.05);
    let rel = SlowRelation::two_section(
        SdiEvaluator::new(LienardSystem::van_der_pol()),
        (lo, hi),
        sc.0,
        sc.1,
    )
    .unwrap();
    let (sys, cfg, lambda) = setup(eps, sc);
    (0..20)
        .map(|i| {
            let s = lo + (hi - lo) * i as f64 / 19.0;
            let exit = transition_map(&sys, &cfg, lambda, s)
                .unwrap()
                .exit_height()
                .unwrap();
            (exit - rel.two_section_relation(s).unwrap()).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn transition_map_approaches_limit_relation() {
    let coarse = sup_gap(0.01);
    let fine = sup_gap(0.005);
    assert!(fine <= coarse, "{fine} > {coarse}");
}

#[test]
fn control_lambda_is_stable_under_tolerance_halving() {
    let sys = LienardSystem::van_der_pol();
    let base = SimConfig::with_default_sections(&sys, 0.01, 0.05, 0.1).unwrap();
    let tight = SimConfig {
        abs_tol: base.abs_tol / 2.0,
        rel_tol: base.rel_tol / 2.0,
        ..base.clone()
    };
    let a = find_control_lambda(&sys, &base, 0.05, 0.1, BRACKET)
        .unwrap()
        .lambda;
    let b = find_control_lambda(&sys, &tight, 0.05, 0.1, BRACKET)
        .unwrap()
        .lambda;
    assert!(((a - b) / a).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn funnel_orbits_above_buffer_concentrate_near_exit_height() {
    let sc = (0.1, 1.0 / 7.0);
    let (sys, cfg, lambda) = setup(0.005, sc);
    for s in [0.066, 0.07, 0.074] {
        let exit = transition_map(&sys, &cfg, lambda, s)
            .unwrap()
            .exit_height()
            .unwrap();
        assert!((exit - sc.1).abs() < 0.02, "s = {s}: exit {exit}");
    }
}

#[test]
fn quartic_ensemble_follows_entry_density() {
    let sys = LienardSystem::quartic();
    let cfg = SimConfig::with_default_sections(&sys, 0.01, 0.05, 0.05).unwrap();
    let lambda = find_control_lambda(&sys, &cfg, 0.05, 0.05, (-0.001, 0.001))
        .unwrap()
        .lambda;
    let entry = TransportMeasure::make_entry(&EntryKind::TruncatedCauchy {
        location: 0.035,
        scale: 0.003,
        lo: 0.02,
        hi: 0.05,
    })
    .unwrap();
    let run = ensemble_transport(&sys, &cfg, lambda, &entry, 200, 3).unwrap();
    assert_eq!(run.exits.values.len() + run.failure_count(), 200);
    assert!(!run.flagged);
    // The limit relation is the identity: every orbit exits close to its
    // entry height.
    for m in &run.members {
        let exit = m.outcome.exit_height().unwrap();
        assert!(
            (exit - m.s_entry).abs() < 5e-3,
            "entry {} exit {exit}",
            m.s_entry
        );
    }
}
