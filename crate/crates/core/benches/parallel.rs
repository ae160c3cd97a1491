use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qtrack_core::exec::Execution;
use qtrack_core::lissajous::{measured_scan_gap, LissajousSpec};
use qtrack_core::pr_design::{
    check_positive_real_with, synthesize_controller, FirstOrderTerm, FrequencySweep, PrComposition, ResonantTerm,
    SWEEP_POINTS,
};
use qtrack_core::quantization::UniformQuantizer;
use qtrack_core::realization::StateSpaceModel;
use qtrack_core::sim::{simulate_batch, simulate_dual_with, LoopConfig};
use qtrack_core::tf::RationalTransferFunction;

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn target(omega: f64) -> RationalTransferFunction {
    PrComposition {
        delta0: true,
        k0: 10.0,
        resonant: vec![ResonantTerm { gain: 10.0, omega }],
        first_order: vec![FirstOrderTerm { gain: 10.0, pole: 10.0 }],
        second_order: vec![],
    }
    .compose()
    .unwrap()
}

fn axis_loops(t_end: f64, dt: f64) -> (LoopConfig, LoopConfig) {
    let spec = LissajousSpec::new(0.0, 0.0, 1.0, 1.0, 30, 1.0).unwrap();
    let plan = spec.plan_frequencies();
    let (rx, ry) = spec.axis_references();
    let g = RationalTransferFunction::from_coeffs(&[1.7e7], &[0.0, 10.0, 1.0]).unwrap();
    let make = |w: f64, r| {
        let c = synthesize_controller(&target(w), &g, 100.0).unwrap();
        LoopConfig::new(
            StateSpaceModel::realize(&c).unwrap(),
            StateSpaceModel::realize(&g).unwrap(),
            UniformQuantizer::new(1.0).unwrap(),
            r,
            dt,
            t_end,
        )
    };
    (make(plan.omega_x, rx), make(plan.omega_y, ry))
}

fn pr_sweep(c: &mut Criterion) {
    let h = target(60.0 * PI);
    let sweep = FrequencySweep::for_transfer_function(&h, 10 * SWEEP_POINTS).unwrap();
    let mut group = c.benchmark_group("pr_sweep");
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| check_positive_real_with(&h, &sweep, exec).unwrap())
        });
    }
    group.finish();
}

fn scan_gap(c: &mut Criterion) {
    let spec = LissajousSpec::new(0.0, 0.0, 1.0, 1.0, 30, 1.0).unwrap();
    let mut group = c.benchmark_group("scan_gap_1e6");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| measured_scan_gap(&spec, 1_000_000, exec)));
    }
    group.finish();
}

fn dual_axis(c: &mut Criterion) {
    let (cx, cy) = axis_loops(0.5, 1e-5);
    let mut group = c.benchmark_group("dual_axis_0.5s");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| simulate_dual_with(&cx, &cy, exec).unwrap()));
    }
    group.finish();
}

fn step_size_batch(c: &mut Criterion) {
    let batch: Vec<LoopConfig> = [1e-5, 5e-6, 2.5e-6, 2e-5]
        .iter()
        .map(|&dt| axis_loops(0.25, dt).0)
        .collect();
    let mut group = c.benchmark_group("dt_batch_0.25s");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| simulate_batch(&batch, exec)));
    }
    group.finish();
}

criterion_group!(benches, pr_sweep, scan_gap, dual_axis, step_size_batch);
criterion_main!(benches);
