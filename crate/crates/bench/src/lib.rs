//! Fixtures shared by the benchmarks under `benches/`.

use canard_lab::{
    EntryKind, LienardSystem, SdiEvaluator, SimConfig, SlowRelation, TransportMeasure,
};

pub const TUNNEL_SECTIONS: (f64, f64) = (0.05, 0.1);
pub const TUNNEL_ENTRY: (f64, f64) = (1.0 / 30.0 - 1.0 / 150.0, 0.05);

pub fn vdp_evaluator() -> SdiEvaluator {
    SdiEvaluator::new(LienardSystem::van_der_pol())
}

pub fn vdp_tunnel() -> SlowRelation {
    SlowRelation::two_section(
        vdp_evaluator(),
        TUNNEL_ENTRY,
        TUNNEL_SECTIONS.0,
        TUNNEL_SECTIONS.1,
    )
    .expect("tunnel relation")
}

pub fn tunnel_entry() -> TransportMeasure {
    TransportMeasure::make_entry(&EntryKind::Uniform {
        lo: TUNNEL_ENTRY.0,
        hi: TUNNEL_ENTRY.1,
    })
    .expect("uniform entry")
}

pub fn vdp_sim(eps: f64) -> (LienardSystem, SimConfig) {
    let sys = LienardSystem::van_der_pol();
    let cfg = SimConfig::with_default_sections(&sys, eps, TUNNEL_SECTIONS.0, TUNNEL_SECTIONS.1)
        .expect("sections");
    (sys, cfg)
}
