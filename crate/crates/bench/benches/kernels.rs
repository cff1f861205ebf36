use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use magstab_bench::fixture;
use magstab_core::diophantine::{diophantine_constant, golden_vector};
use magstab_core::energy::{hm_balance_residual, EnergySample, ProofParams};
use magstab_core::spectral::FourierGrid;
use magstab_core::{Integrator, MhdSystem};

const SIZES: [usize; 3] = [32, 64, 128];

fn transforms(c: &mut Criterion) {
    let mut g = c.benchmark_group("transform_roundtrip");
    for m in SIZES {
        let (s, _) = fixture(m);
        let mut grid = FourierGrid::padded(s.lattice());
        g.bench_with_input(BenchmarkId::from_parameter(m), &s, |b, s| {
            b.iter(|| {
                let phys = grid.inverse(&s.u.x1).unwrap();
                grid.forward(&phys).unwrap()
            })
        });
    }
    g.finish();
}

fn rhs(c: &mut Criterion) {
    let mut g = c.benchmark_group("rhs");
    for m in SIZES {
        let (s, bg) = fixture(m);
        let mut sys = MhdSystem::new(s.lattice(), bg);
        g.bench_with_input(BenchmarkId::from_parameter(m), &s, |b, s| b.iter(|| sys.rhs(s).unwrap()));
    }
    g.finish();
}

fn step(c: &mut Criterion) {
    let mut g = c.benchmark_group("if_rk4_step");
    for m in SIZES {
        let (s, bg) = fixture(m);
        let mut it = Integrator::new(s.lattice(), bg);
        g.bench_with_input(BenchmarkId::from_parameter(m), &s, |b, s| {
            b.iter(|| it.step_with_dissipation(s, 0.01).unwrap())
        });
    }
    g.finish();
}

fn diagnostics(c: &mut Criterion) {
    let (s, bg) = fixture(64);
    let pp = ProofParams::defaults(&bg);
    let mut sys = MhdSystem::new(s.lattice(), bg);
    c.bench_function("energy_sample_64", |b| b.iter(|| EnergySample::measure(&mut sys, &s, &pp, None).unwrap()));
    c.bench_function("hm_balance_m3_64", |b| b.iter(|| hm_balance_residual(&mut sys, &s, 3).unwrap()));
}

fn diophantine(c: &mut Criterion) {
    let mut g = c.benchmark_group("diophantine_scan");
    g.sample_size(10);
    for k in [100u64, 500, 2000] {
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| diophantine_constant(golden_vector(), 2.0, k).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, transforms, rhs, step, diagnostics, diophantine);
criterion_main!(benches);
