use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vve_core::geoframe::LocalPose;
use vve_core::harness::load_scenario;
use vve_core::sensors::RadarParams;
use vve_core::sweep::{scan_batch, sweep_seeds, Exec};
use vve_core::world::{EgoFootprint, ObstacleSpec, Vec2, World};

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn seed_sweep(c: &mut Criterion) {
    let sc = load_scenario(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/reference.json"
    ))
    .unwrap();
    let seeds: Vec<u64> = (0..8).collect();
    let mut group = c.benchmark_group("seed_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, seeds.len()), &seeds, |b, seeds| {
            b.iter(|| sweep_seeds(black_box(&sc), seeds, exec).unwrap())
        });
    }
    group.finish();
}

fn radar_batch(c: &mut Criterion) {
    let scenes: Vec<(World, f64)> = (0..512)
        .map(|i| {
            let obstacles = (0..6)
                .map(|k| ObstacleSpec {
                    id: k,
                    center: Vec2::new(8.0 + 12.0 * k as f64, ((i + k as usize) % 7) as f64 - 3.0),
                    heading: 0.05 * k as f64,
                    length: 4.5,
                    width: 1.9,
                })
                .collect();
            let ego = LocalPose::new(0.0, 0.0, 0.01 * (i % 11) as f64, 0.0);
            (
                World::new(ego, EgoFootprint::default(), obstacles).unwrap(),
                5.0,
            )
        })
        .collect();
    let params = RadarParams::default();
    let mut group = c.benchmark_group("radar_batch");
    for (name, exec) in MODES {
        group.bench_with_input(
            BenchmarkId::new(name, scenes.len()),
            &scenes,
            |b, scenes| b.iter(|| scan_batch(black_box(scenes), &params, exec)),
        );
    }
    group.finish();
}

criterion_group!(benches, seed_sweep, radar_batch);
criterion_main!(benches);
