use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use minimax_fir::par::Execution;
use minimax_fir::pipeline::{design_filter, PipelineOptions};
use minimax_fir::remez::{RemezOptions, DEFAULT_GRID_DENSITY};
use minimax_fir::spectral_factor::PhaseSelection;
use minimax_fir::spectrum::{magnitude_response_with, Band, CoeffDomain, DesignSpec};
use minimax_fir::weight::{k_lower_bound, k_sweep, log_spaced};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn lowpass26() -> DesignSpec {
    DesignSpec::new(26, vec![Band::pass(0.0, 0.36), Band::stop(0.42, 1.0)], 3.0, CoeffDomain::Real).unwrap()
}

fn highpass500() -> DesignSpec {
    DesignSpec::new(500, vec![Band::stop(0.0, 0.39), Band::pass(0.40, 1.0)], 2.0, CoeffDomain::Real).unwrap()
}

fn bench_design(c: &mut Criterion) {
    let mut group = c.benchmark_group("design_filter");
    group.sample_size(10);
    for (label, spec) in [("N26", lowpass26()), ("N500", highpass500())] {
        for (mode, exec) in MODES {
            let opts = PipelineOptions::default().with_execution(exec);
            group.bench_with_input(BenchmarkId::new(mode, label), &spec, |b, spec| {
                b.iter(|| design_filter(black_box(spec), &PhaseSelection::MinimumPhase, &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_magnitude(c: &mut Criterion) {
    let spec = highpass500();
    let h = design_filter(&spec, &PhaseSelection::MinimumPhase, &PipelineOptions::default())
        .unwrap()
        .filter;
    let omegas: Vec<f64> = (0..16384).map(|i| std::f64::consts::PI * i as f64 / 16383.0).collect();
    let mut group = c.benchmark_group("magnitude_response");
    for (mode, exec) in MODES {
        group.bench_function(BenchmarkId::new(mode, "N500x16384"), |b| {
            b.iter(|| magnitude_response_with(black_box(&h), &omegas, exec))
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let spec = lowpass26();
    let lo = k_lower_bound(spec.k_des);
    let ks = log_spaced(lo, 100.0 * lo, 20);
    let remez = RemezOptions::default();
    let mut group = c.benchmark_group("k_sweep");
    group.sample_size(10);
    for (mode, exec) in MODES {
        group.bench_function(BenchmarkId::new(mode, "N26x20"), |b| {
            b.iter(|| k_sweep(black_box(&spec), &ks, DEFAULT_GRID_DENSITY, &remez, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_design, bench_magnitude, bench_sweep);
criterion_main!(benches);
