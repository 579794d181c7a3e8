use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use roomsynth::cdf::{parse_cdf, RoomType, TaskType};
use roomsynth::cssg::{generate, Scene};
use roomsynth::eval::{landmark_reachability, run_tasks};
use roomsynth::geometry::{Obb, Vec2};
use roomsynth::relations::{combined_field, Candidate, FieldSpec, FieldTerm, RelationKind, TargetGeometry};
use roomsynth::{Config, Exec};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bedrooms(n: u64) -> Vec<Scene> {
    let cfg = Config::builtin();
    let doc = parse_cdf(cfg, Config::default_cdf_text(RoomType::Bedroom)).unwrap();
    (0..n).map(|s| generate(cfg, &doc, s).unwrap()).collect()
}

fn score_field(c: &mut Criterion) {
    let cfg = Config::builtin();
    let n = 80;
    let candidates: Vec<Candidate> = (0..n * n)
        .map(|i| Candidate {
            position: Vec2::new(0.1 + (i % n) as f64 * 0.1, 0.1 + (i / n) as f64 * 0.1),
            rotation: None,
        })
        .collect();
    let spec = FieldSpec {
        width: 1.0,
        depth: 0.5,
        candidates,
        terms: vec![
            FieldTerm {
                kind: RelationKind::Beside,
                weight: 2.5,
                target: TargetGeometry::Object(Obb::new(Vec2::new(4.0, 4.0), 2.0, 1.6, 0.0)),
            },
            FieldTerm {
                kind: RelationKind::Face,
                weight: 1.0,
                target: TargetGeometry::Object(Obb::new(Vec2::new(1.0, 6.0), 1.2, 0.6, 90.0)),
            },
        ],
        profiles: &cfg.rules.profiles,
        angle_step: cfg.rules.placement.angle_step_deg,
        default_rotation: 0.0,
        settle: None,
        quantum: 1e-4,
    };
    let mut g = c.benchmark_group("score_field_6400");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(combined_field(&spec, |_| true, exec))));
    }
    g.finish();
}

fn scene_batch(c: &mut Criterion) {
    let cfg = Config::builtin();
    let doc = parse_cdf(cfg, Config::default_cdf_text(RoomType::Bedroom)).unwrap();
    let seeds: Vec<u64> = (0..16).collect();
    let mut g = c.benchmark_group("generate_16_bedrooms");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(exec.map(&seeds, |&s| generate(cfg, &doc, s)))));
    }
    g.finish();
}

fn task_batch(c: &mut Criterion) {
    let cfg = Config::builtin();
    let scenes = bedrooms(8);
    let types = [TaskType::PickAndPlace, TaskType::ExamineInLight];
    let mut g = c.benchmark_group("tasks_8_scenes");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("run_tasks", name), &exec, |b, &exec| {
            b.iter(|| black_box(run_tasks(cfg, &scenes, &types, 4, 0, exec)))
        });
        g.bench_with_input(BenchmarkId::new("landmarks", name), &exec, |b, &exec| {
            b.iter(|| {
                black_box(exec.map(&scenes, |s| landmark_reachability(cfg, s, cfg.landmarks.landmarks_for(s.room_type))))
            })
        });
    }
    g.finish();
}

criterion_group!(benches, score_field, scene_batch, task_batch);
criterion_main!(benches);
