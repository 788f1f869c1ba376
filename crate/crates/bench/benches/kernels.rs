use std::hint::black_box;

use canard_lab::measures::pushforward_measure;
use canard_lab::sim::transition_map;
use canard_lab::Side;
use canard_lab_bench::{tunnel_entry, vdp_evaluator, vdp_sim, vdp_tunnel};
use criterion::{criterion_group, criterion_main, Criterion};

fn sdi(c: &mut Criterion) {
    let e = vdp_evaluator();
    c.bench_function("sdi_minus", |b| {
        b.iter(|| e.sdi_minus(black_box(0.08)).unwrap())
    });
    c.bench_function("sdi_derivative", |b| {
        b.iter(|| e.sdi_derivative(black_box(0.08), Side::Repelling).unwrap())
    });
}

fn relation(c: &mut Criterion) {
    let rel = vdp_tunnel();
    c.bench_function("two_section_relation", |b| {
        b.iter(|| rel.two_section_relation(black_box(0.04)).unwrap())
    });
}

fn pushforward(c: &mut Criterion) {
    let rel = vdp_tunnel();
    let entry = tunnel_entry();
    let mut group = c.benchmark_group("measures");
    group.sample_size(10);
    group.bench_function("pushforward_measure", |b| {
        b.iter(|| pushforward_measure(&entry, &rel).unwrap())
    });
    group.finish();
}

fn orbit(c: &mut Criterion) {
    let (sys, cfg) = vdp_sim(0.01);
    let mut group = c.benchmark_group("sim");
    group.sample_size(10);
    group.bench_function("transition_map", |b| {
        b.iter(|| transition_map(&sys, &cfg, black_box(-0.0117), 0.04).unwrap())
    });
    group.finish();
}

criterion_group!(benches, sdi, relation, pushforward, orbit);
criterion_main!(benches);
