use std::hint::black_box;

use chirpmatch_core::adiabatic::{eigentracks, rotating_hamiltonian};
use chirpmatch_core::basis::{fields_to_sa, SABasis};
use chirpmatch_core::bloch::{evolve_slice, DensityMatrix};
use chirpmatch_core::diagnostics::sa_phase_tracks;
use chirpmatch_core::propagation::{boundary_fields, propagate, SimulationConfig, StorageMode};
use criterion::{criterion_group, criterion_main, Criterion};

fn small() -> SimulationConfig {
    let mut cfg = SimulationConfig::default();
    cfg.grid.xi_max = 2.0;
    cfg.grid.n_xi = 8;
    cfg.storage = StorageMode::Lean;
    cfg
}

fn slice(c: &mut Criterion) {
    let cfg = SimulationConfig::default();
    let fields = boundary_fields(&cfg);
    let rho = DensityMatrix::level(2);
    c.bench_function("evolve_slice/2801", |b| {
        b.iter(|| evolve_slice(black_box(&rho), &fields, &cfg.atom, &cfg.grid).unwrap())
    });
}

fn medium(c: &mut Criterion) {
    let cfg = small();
    let mut group = c.benchmark_group("propagate");
    group.sample_size(10);
    group.bench_function("xi2_n8_lean", |b| b.iter(|| propagate(black_box(&cfg)).unwrap()));
    group.finish();
}

fn dressed(c: &mut Criterion) {
    let cfg = SimulationConfig::default();
    let basis = SABasis::new(cfg.theta1, cfg.theta2).unwrap();
    let sa = fields_to_sa(&boundary_fields(&cfg), &basis);
    let tau = cfg.grid.tau_axis();
    c.bench_function("eigentracks/2801", |b| {
        b.iter(|| {
            let (ts, ta) = sa_phase_tracks(&tau, &sa).unwrap();
            let h = rotating_hamiltonian(&sa, &ts, &ta).unwrap();
            eigentracks(&tau, &h).unwrap()
        })
    });
}

criterion_group!(benches, slice, medium, dressed);
criterion_main!(benches);
