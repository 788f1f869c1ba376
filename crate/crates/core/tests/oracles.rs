//! Cross-checks against independent closed-form and brute-force oracles.

use canard_lab::measures::{exit_density_at, pushforward_measure};
use canard_lab::relation::{
    classify_invariant_measures, find_zeros, CycleBound, Multiplicity, Stability,
};
use canard_lab::{
    EntryKind, InvariantMeasures, LienardSystem, SdiEvaluator, Side, SlowRelation,
    TransportMeasure, ZeroScan,
};

fn bisect(mut g: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g_lo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) == (g_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

mod vdp {
    use super::bisect;

    pub fn f(x: f64) -> f64 {
        x * x / 2.0 + x.powi(3) / 3.0
    }

    /// Antiderivative of the divergence integrand.
    pub fn big_p(x: f64) -> f64 {
        x * x / 2.0 + 2.0 * x.powi(3) / 3.0 + x.powi(4) / 4.0
    }

    pub fn omega(s: f64) -> f64 {
        bisect(|x| f(x) - s, 0.0, 2.0)
    }

    pub fn alpha(s: f64) -> f64 {
        bisect(|x| f(x) - s, -0.95, 0.0)
    }

    /// `S0(s)` from `P(alpha(S0)) = P(omega(s))`.
    pub fn s0(s: f64) -> f64 {
        let target = big_p(omega(s));
        bisect(|u| big_p(alpha(u)) - target, 0.0, f(-0.95))
    }
}

#[test]
fn vdp_relation_matches_antiderivative_oracle() {
    let rel = SlowRelation::two_section(
        SdiEvaluator::new(LienardSystem::van_der_pol()),
        (0.02, 0.06),
        0.05,
        0.1,
    )
    .unwrap();
    for i in 0..=20 {
        let s = 0.02 + 0.04 * i as f64 / 20.0;
        let got = rel.two_section_relation(s).unwrap();
        assert!(
            (got - vdp::s0(s)).abs() < 1e-9,
            "s = {s}: {got} vs {}",
            vdp::s0(s)
        );
    }
}

#[test]
fn vdp_exit_cdf_matches_entry_cdf_through_inverse() {
    let (lo, hi) = (1.0 / 30.0 - 1.0 / 150.0, 0.05);
    let rel = SlowRelation::two_section(
        SdiEvaluator::new(LienardSystem::van_der_pol()),
        (lo, hi),
        0.05,
        0.1,
    )
    .unwrap();
    let entry = TransportMeasure::make_entry(&EntryKind::Uniform { lo, hi }).unwrap();
    let exit = pushforward_measure(&entry, &rel).unwrap().measure;
    let (a, b) = (vdp::s0(lo), vdp::s0(hi));
    for i in 1..20 {
        let s_plus = a + (b - a) * i as f64 / 20.0;
        let u = bisect(|u| vdp::s0(u) - s_plus, lo, hi);
        let expected = (u - lo) / (hi - lo);
        assert!((exit.cdf(s_plus) - expected).abs() < 1e-6, "s+ = {s_plus}");
    }
}

#[test]
fn exit_density_matches_finite_difference_of_inverse() {
    let (lo, hi) = (0.03, 0.05);
    let rel = SlowRelation::two_section(
        SdiEvaluator::new(LienardSystem::van_der_pol()),
        (lo, hi),
        0.05,
        0.1,
    )
    .unwrap();
    let entry = TransportMeasure::make_entry(&EntryKind::Uniform { lo, hi }).unwrap();
    let d = entry.density().unwrap();
    let inv = |s: f64| bisect(|u| vdp::s0(u) - s, lo, hi);
    let s_plus = vdp::s0(0.04);
    let h = 1e-6;
    let slope = (inv(s_plus + h) - inv(s_plus - h)) / (2.0 * h);
    let expected = slope / (hi - lo);
    let got = exit_density_at(d, &rel, s_plus).unwrap();
    assert!(
        (got - expected).abs() < 1e-5 * expected,
        "{got} vs {expected}"
    );
}

// f = x^2, p = x q(x) with q = 1 + x + 3x^2 - 4x^3 > 0 on [-1, 1]. Along the
// branches h = -4x / q, so I(s) = -4 * int_{-r}^{r} x / q(x) dx, r = sqrt(s).
fn one_zero() -> LienardSystem {
    LienardSystem::from_strings("x^2", "x + x^2 + 3*x^3 - 4*x^4", -1.0, 1.0).unwrap()
}

fn one_zero_sdi(s: f64) -> f64 {
    let q = |x: f64| 1.0 + x + 3.0 * x * x - 4.0 * x.powi(3);
    let r = s.sqrt();
    let n = 1_000_000;
    let h = 2.0 * r / n as f64;
    let g = |x: f64| x / q(x);
    let mut acc = g(-r) + g(r);
    for k in 1..n {
        let x = -r + k as f64 * h;
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(x);
    }
    -4.0 * acc * h / 3.0
}

#[test]
fn one_zero_family_zero_matches_brute_force() {
    let expected = bisect(one_zero_sdi, 0.3, 0.8);
    let e = SdiEvaluator::new(one_zero());
    let ZeroScan::Zeros(zeros) = find_zeros(&e, (1e-4, 1.0)).unwrap() else {
        panic!("integral is not identically zero");
    };
    assert_eq!(zeros.len(), 1);
    assert!(
        (zeros[0].s - expected).abs() < 1e-9,
        "{} vs {expected}",
        zeros[0].s
    );
    assert_eq!(zeros[0].multiplicity, Multiplicity::Simple);
}

#[test]
fn one_zero_family_sdi_matches_brute_force() {
    let e = SdiEvaluator::new(one_zero());
    for s in [0.05, 0.2, 0.5, 0.9] {
        assert!(
            (e.sdi_total(s).unwrap() - one_zero_sdi(s)).abs() < 1e-10,
            "s = {s}"
        );
    }
}

#[test]
fn one_zero_family_measures_and_cyclicity() {
    let e = SdiEvaluator::new(one_zero());
    let InvariantMeasures::ConvexHull(class) =
        classify_invariant_measures(&e, (1e-4, 1.0)).unwrap()
    else {
        panic!("expected a convex hull of Diracs");
    };
    assert!(!class.uniquely_ergodic);
    assert_eq!(class.atoms.len(), 2);
    assert_eq!(class.atoms[0], 0.0);
    let zero = class.atoms[1];

    let rel = SlowRelation::single_section(e, 1.0).unwrap();
    let at_zero = rel.cyclicity_report(zero).unwrap();
    assert_eq!(at_zero.bound, CycleBound::Exactly(2));
    assert!(at_zero.slow_fast_hopf);
    let below = rel.cyclicity_report(0.5 * zero).unwrap();
    assert_eq!(below.bound, CycleBound::Exactly(1));
    assert_eq!(below.stability, Some(Stability::Repelling));
    let above = rel.cyclicity_report(0.5 * (zero + 1.0)).unwrap();
    assert_eq!(above.stability, Some(Stability::Attracting));

    assert!((rel.slow_relation(zero).unwrap() - zero).abs() < 1e-9);
    let orbit = rel.iterate_orbit(zero, 10).unwrap();
    assert!((orbit.limit - zero).abs() < 1e-9);
}

#[test]
fn quartic_two_section_relation_is_identity() {
    let rel = SlowRelation::two_section(
        SdiEvaluator::new(LienardSystem::quartic()),
        (0.01, 0.5),
        0.2,
        0.2,
    )
    .unwrap();
    for i in 0..=50 {
        let s = 0.01 + 0.49 * i as f64 / 50.0;
        assert!((rel.two_section_relation(s).unwrap() - s).abs() < 1e-10);
    }
}

#[test]
fn branch_roots_invert_height() {
    let sys = LienardSystem::van_der_pol();
    let e = SdiEvaluator::new(sys.clone());
    for i in 1..=50 {
        let s = e.common_max() * i as f64 / 50.0;
        for side in [Side::Attracting, Side::Repelling] {
            let x = e.branch_root(s, side).unwrap();
            assert!((sys.height(x) - s).abs() < 1e-12);
            assert!((vdp::f(x) - s).abs() < 1e-12);
        }
    }
}
