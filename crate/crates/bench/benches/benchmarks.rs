use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use ra_isac::channel::{draw_scenario, ScenarioDistribution};
use ra_isac::geometry::{ArrayGeometry, EffectiveAngle};
use ra_isac::metrics::{crb_closed, WeightPair};
use ra_isac::optimizer::rotation_search;
use ra_isac::solver::{fp_bcd_solve, sensing_optimal_covariance, zf_beams, SolverOptions};

fn dist(num_antennas: usize) -> ScenarioDistribution {
    ScenarioDistribution {
        num_tx_antennas: num_antennas,
        num_rx_antennas: num_antennas,
        ..ScenarioDistribution::default()
    }
}

fn bench_steering(c: &mut Criterion) {
    let mut group = c.benchmark_group("steering_vector");
    for m in [16usize, 64] {
        let geom = ArrayGeometry::half_wavelength(m).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &geom, |b, geom| {
            b.iter(|| geom.steering_vector(black_box(EffectiveAngle(0.31))));
        });
    }
    group.finish();
}

fn bench_crb(c: &mut Criterion) {
    let scenario = draw_scenario(&dist(16), 1).unwrap();
    let solution = sensing_optimal_covariance(&scenario, 0.0, 1.0);
    c.bench_function("crb_closed_16", |b| {
        b.iter(|| crb_closed(black_box(&solution), black_box(&scenario), black_box(0.05)));
    });
}

fn bench_zf(c: &mut Criterion) {
    let scenario = draw_scenario(&dist(16), 2).unwrap();
    c.bench_function("zf_beams_16x4", |b| {
        b.iter(|| zf_beams(black_box(&scenario), black_box(0.01), 1.0).unwrap());
    });
}

fn bench_inner_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("fp_bcd_solve");
    group.sample_size(20);
    for m in [8usize, 16] {
        let scenario = draw_scenario(&dist(m), 3).unwrap();
        let options = SolverOptions::default();
        let weights = WeightPair::from_comm(0.5).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &scenario, |b, sc| {
            b.iter(|| fp_bcd_solve(black_box(sc), 0.0, weights, &options).unwrap());
        });
    }
    group.finish();
}

fn bench_rotation_search(c: &mut Criterion) {
    let scenario = draw_scenario(&dist(8), 4).unwrap();
    let options = SolverOptions::default();
    let weights = WeightPair::from_comm(0.5).unwrap();
    let mut group = c.benchmark_group("rotation_search");
    group.sample_size(10);
    group.bench_function("8x4_61pts", |b| {
        b.iter(|| rotation_search(black_box(&scenario), weights, &options, 61).unwrap());
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_steering,
    bench_crb,
    bench_zf,
    bench_inner_solve,
    bench_rotation_search
);
criterion_main!(benches);
