//! Parallel versus sequential screen scans.
//!
//! Run with `cargo bench -p qaction-core`. The scan is embarrassingly
//! parallel over detectors; this suite measures what rayon actually buys on
//! the host, including the normalization-style workload where every row
//! refines its life time.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qaction_core::detection::{screen_scan, screen_scan_seq, Screen};
use qaction_core::experiment::{ExperimentTemplate, GaussianPacket};
use qaction_core::minkowski::FourVector;
use qaction_core::stationarity::SolverConfig;

fn template() -> ExperimentTemplate {
    let packet = GaussianPacket::new([1.0; 4], FourVector::new(1.0, 0.0, 0.0, 0.0));
    ExperimentTemplate::new(packet, 1.0, 1.0)
}

fn bench_scans(c: &mut Criterion) {
    let template = template();
    let config = SolverConfig::default();
    let mut group = c.benchmark_group("screen_scan");
    group.sample_size(10);
    for points in [6usize, 12] {
        let screen = Screen {
            radius: 5.0,
            theta_points: points,
            phi_points: points,
            time_points: 2 * points,
            t_max: 60.0,
        };
        group.bench_with_input(BenchmarkId::new("parallel", points), &screen, |b, screen| {
            b.iter(|| screen_scan(&template, screen, &config).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", points), &screen, |b, screen| {
            b.iter(|| screen_scan_seq(&template, screen, &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_scans);
criterion_main!(benches);
