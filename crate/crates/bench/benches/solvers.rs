use clubx_bench::pool;
use clubx_core::clearing::{schedule_greedy, solve_cycle_limited};
use clubx_core::ilp::Limits;
use clubx_core::*;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use std::time::Duration;

const LIMIT: Duration = Duration::from_secs(60);

fn m_star() -> Instance {
    Instance::new(
        vec![
            Club::ndd(0, 100),
            Club::pair(1, 1, 1),
            Club::pair(2, 2, 2),
            Club::pair(3, 3, 3),
            Club::pair(4, 4, 4),
        ],
        vec![
            Edge::new(100, 1, 1.0),
            Edge::new(1, 2, 1.0),
            Edge::new(2, 3, 1.0),
            Edge::new(100, 4, 1.0),
        ],
    )
}

fn small_capped(c: &mut Criterion) {
    let inst = m_star();
    let dag = total_order(2, 2, None);
    c.bench_function("solve_capped m_star", |b| {
        b.iter(|| solve_capped(black_box(&inst), black_box(&dag), LIMIT).unwrap())
    });
}

fn uncapped(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_uncapped");
    group.sample_size(10);
    for size in [20, 40] {
        let sample = pool(size, 3);
        group.bench_with_input(
            BenchmarkId::from_parameter(size),
            &sample.instance,
            |b, inst| b.iter(|| solve_uncapped(inst, LIMIT).unwrap()),
        );
    }
    group.finish();
}

fn picef(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_picef");
    group.sample_size(10);
    for size in [20, 40] {
        let graph = CompatGraph::from_pool(&pool(size, 5).standard).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(size), &graph, |b, g| {
            b.iter(|| solve_picef(g, 3, 3, LIMIT).unwrap())
        });
    }
    group.finish();
}

fn frames_pipeline(c: &mut Criterion) {
    let sample = pool(40, 7);
    let dag = total_order(12, 4, None);
    let mut group = c.benchmark_group("frames");
    group.sample_size(10);
    group.bench_function("cycle limited 40", |b| {
        b.iter(|| solve_cycle_limited(&sample.instance, 4, 50, Limits::from(LIMIT), None).unwrap())
    });
    let relaxed = solve_cycle_limited(&sample.instance, 4, 50, Limits::from(LIMIT), None).unwrap();
    group.bench_function("greedy placement 40", |b| {
        b.iter(|| schedule_greedy(&sample.instance, &dag, black_box(&relaxed.matching.edges)))
    });
    group.finish();
}

fn validation(c: &mut Criterion) {
    let inst = m_star();
    let frames = (1..=5).map(|i| frames::Frame::new(i, 2)).collect();
    let dag = build_dag(
        frames,
        vec![(FrameId(1), FrameId(3)), (FrameId(2), FrameId(3))],
    )
    .unwrap();
    let schedule = solve_capped(&inst, &dag, LIMIT).unwrap().schedule;
    let mut group = c.benchmark_group("validate_schedule");
    for (name, mode) in [
        ("per frame", ValidationMode::PerFrame),
        ("all linearizations", ValidationMode::AllLinearizations),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| validate_schedule(&inst, &dag, black_box(&schedule), mode))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    small_capped,
    uncapped,
    picef,
    frames_pipeline,
    validation
);
criterion_main!(benches);
