//! Scene-quality metrics: oracle task success, subgoal statistics, and
//! navigation to landmarks and along routes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cdf::{RoomType, TaskType};
use crate::config::ConfigError;
use crate::cssg::Scene;
use crate::geometry::Obb;
use crate::par::Exec;
use crate::tasking::{goal_poses, plan_navigation, run_task, sample_task, SubgoalKind, TaskError, Trajectory};
use crate::util::{derive_seed, stream_rng};
use crate::world::{instantiate_world, NavGrid};
use crate::{Config, GENERATOR_VERSION};

pub const REPORT_FORMAT: &str = "roomsynth.metrics/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkTable {
    pub version: String,
    pub landmarks: BTreeMap<String, Vec<String>>,
    pub routes: BTreeMap<String, Vec<[String; 2]>>,
}

impl LandmarkTable {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let t: LandmarkTable = toml::from_str(text).map_err(|e| ConfigError::Parse("landmarks".into(), e.to_string()))?;
        for key in t.landmarks.keys().chain(t.routes.keys()) {
            if RoomType::parse(key).is_none() {
                return Err(ConfigError::Invalid(format!("landmarks: unknown room type {key}")));
            }
        }
        Ok(t)
    }

    pub fn landmarks_for(&self, room: RoomType) -> &[String] {
        self.landmarks.get(room.as_str()).map_or(&[], Vec::as_slice)
    }

    pub fn routes_for(&self, room: RoomType) -> &[[String; 2]] {
        self.routes.get(room.as_str()).map_or(&[], Vec::as_slice)
    }
}

/// Successes out of attempts; the rate is absent when nothing was tried.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub attempts: usize,
    pub successes: usize,
    pub rate: Option<f64>,
}

impl Rate {
    pub fn new(successes: usize, attempts: usize) -> Rate {
        Rate {
            attempts,
            successes,
            rate: (attempts > 0).then(|| successes as f64 / attempts as f64),
        }
    }

    fn add(self, success: bool) -> Rate {
        Rate::new(self.successes + usize::from(success), self.attempts + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeRate {
    pub task_type: TaskType,
    #[serde(flatten)]
    pub rate: Rate,
    /// Scenes where the template had no eligible objects.
    pub unsatisfiable: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindRate {
    pub kind: SubgoalKind,
    #[serde(flatten)]
    pub rate: Rate,
}

/// Mean and population standard deviation over scenes that had anything to
/// measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneMean {
    pub scenes: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl SceneMean {
    pub fn of(values: &[Option<f64>]) -> SceneMean {
        let v: Vec<f64> = values.iter().flatten().copied().collect();
        if v.is_empty() {
            return SceneMean::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        SceneMean {
            scenes: v.len(),
            mean: Some(mean),
            std: Some(var.sqrt()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub format: String,
    pub generator_version: String,
    pub seed: u64,
    pub tasks_per_type: usize,
    /// Scene seeds in input order.
    pub scene_seeds: Vec<u64>,
    pub task_types: Vec<TypeRate>,
    pub overall: Rate,
    pub subgoals: Vec<KindRate>,
    pub landmark_reachability: SceneMean,
    pub route_navigability: SceneMean,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        crate::util::to_json_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<MetricsReport, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn task_rate(&self, t: TaskType) -> Option<&Rate> {
        self.task_types.iter().find(|r| r.task_type == t).map(|r| &r.rate)
    }

    pub fn subgoal_rate(&self, k: SubgoalKind) -> Option<&Rate> {
        self.subgoals.iter().find(|r| r.kind == k).map(|r| &r.rate)
    }
}

/// One sampled-and-executed task.
#[derive(Clone, Debug)]
pub struct TaskRun {
    pub scene: usize,
    pub task_type: TaskType,
    pub index: usize,
    pub seed: u64,
    pub outcome: Result<Trajectory, TaskError>,
}

/// Seed for the `index`-th task of `task_type` in scene `scene`.
pub fn task_seed(seed: u64, scene: usize, task_type: TaskType, index: usize) -> u64 {
    let t = TaskType::ALL.iter().position(|x| *x == task_type).expect("listed type") as u64;
    derive_seed(seed, &[scene as u64, t, index as u64])
}

/// Sample and execute `per_type` tasks of each type in every scene.
pub fn run_tasks(cfg: &Config, scenes: &[Scene], types: &[TaskType], per_type: usize, seed: u64, exec: Exec) -> Vec<TaskRun> {
    let jobs: Vec<(usize, TaskType, usize)> = (0..scenes.len())
        .flat_map(|s| types.iter().flat_map(move |t| (0..per_type).map(move |k| (s, *t, k))))
        .collect();
    exec.map(&jobs, |&(s, t, k)| {
        let ts = task_seed(seed, s, t, k);
        let outcome = sample_task(cfg, &scenes[s], t, &mut stream_rng(ts, "task")).map(|task| {
            let mut traj = run_task(cfg, &scenes[s], &task);
            traj.task_seed = Some(ts);
            traj
        });
        TaskRun {
            scene: s,
            task_type: t,
            index: k,
            seed: ts,
            outcome,
        }
    })
}

/// Per subgoal kind, successes over attempts. Subgoals never reached after
/// an earlier failure are not attempts.
pub fn subgoal_stats<'a>(trajectories: impl IntoIterator<Item = &'a Trajectory>) -> Vec<KindRate> {
    let mut rates: BTreeMap<SubgoalKind, Rate> = SubgoalKind::ALL.iter().map(|k| (*k, Rate::default())).collect();
    for t in trajectories {
        let mut stopped = false;
        for r in &t.subgoals {
            if stopped {
                break;
            }
            let e = rates.get_mut(&r.subgoal.kind).expect("all kinds listed");
            *e = e.add(r.success);
            stopped = !r.success;
        }
    }
    SubgoalKind::ALL.iter().map(|k| KindRate { kind: *k, rate: rates[k] }).collect()
}

fn footprints(scene: &Scene, object_type: &str) -> Vec<(String, Obb)> {
    let mut v: Vec<_> = scene
        .objects
        .iter()
        .filter(|o| o.object_type == object_type)
        .map(|o| (o.id.clone(), o.footprint()))
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

/// Fraction of landmark instances the agent can navigate to from its start.
/// `None` when the scene holds none of the landmark types.
pub fn landmark_reachability(cfg: &Config, scene: &Scene, landmarks: &[String]) -> Option<f64> {
    let world = instantiate_world(cfg, scene).ok()?;
    let ids: BTreeSet<String> = landmarks
        .iter()
        .flat_map(|t| footprints(scene, t).into_iter().map(|(id, _)| id))
        .collect();
    if ids.is_empty() {
        return None;
    }
    let reached = ids.iter().filter(|id| plan_navigation(&world, id).is_ok()).count();
    Some(reached as f64 / ids.len() as f64)
}

/// Cells from which some pose has one of `targets` in reach.
fn reach_cells(grid: &NavGrid, cfg: &Config, targets: &[Obb]) -> Vec<bool> {
    let poses = goal_poses(grid, cfg.rules.interaction, targets);
    poses.chunks(4).map(|c| c.iter().any(|b| *b)).collect()
}

/// Whether a walkable path joins the interaction regions of the two sets.
fn connected(grid: &NavGrid, from: &[bool], to: &[bool]) -> bool {
    let mut seen = from.to_vec();
    let mut q: VecDeque<usize> = (0..seen.len()).filter(|i| seen[*i]).collect();
    while let Some(i) = q.pop_front() {
        if to[i] {
            return true;
        }
        let (c, r) = ((i % grid.cols) as i64, (i / grid.cols) as i64);
        for (dc, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (nc, nr) = (c + dc, r + dr);
            if grid.is_navigable(nc, nr) {
                let j = nr as usize * grid.cols + nc as usize;
                if !seen[j] {
                    seen[j] = true;
                    q.push_back(j);
                }
            }
        }
    }
    false
}

/// Fraction of type pairs with a walkable path between them. Pairs naming a
/// type absent from the scene are left out; `None` when none remain.
pub fn route_navigability(cfg: &Config, scene: &Scene, pairs: &[[String; 2]]) -> Option<f64> {
    let grid = NavGrid::from_scene(cfg, scene);
    let mut counted = 0;
    let mut ok = 0;
    for [a, b] in pairs {
        let fa: Vec<Obb> = footprints(scene, a).into_iter().map(|x| x.1).collect();
        let fb: Vec<Obb> = footprints(scene, b).into_iter().map(|x| x.1).collect();
        if fa.is_empty() || fb.is_empty() {
            continue;
        }
        counted += 1;
        if connected(&grid, &reach_cells(&grid, cfg, &fa), &reach_cells(&grid, cfg, &fb)) {
            ok += 1;
        }
    }
    (counted > 0).then(|| ok as f64 / counted as f64)
}

/// Fold task runs and per-scene navigation figures into a report.
pub fn aggregate(
    runs: &[TaskRun],
    types: &[TaskType],
    tasks_per_type: usize,
    seed: u64,
    scene_seeds: Vec<u64>,
    landmarks: &[Option<f64>],
    routes: &[Option<f64>],
) -> MetricsReport {
    let mut per_type: BTreeMap<TaskType, (Rate, BTreeSet<usize>)> = types.iter().map(|t| (*t, Default::default())).collect();
    let mut overall = Rate::default();
    for run in runs {
        let e = per_type.entry(run.task_type).or_default();
        match &run.outcome {
            Ok(t) => {
                e.0 = e.0.add(t.success);
                overall = overall.add(t.success);
            }
            Err(_) => {
                e.1.insert(run.scene);
            }
        }
    }
    let task_types = TaskType::ALL
        .iter()
        .filter_map(|t| {
            per_type.get(t).map(|(rate, unsat)| TypeRate {
                task_type: *t,
                rate: *rate,
                unsatisfiable: unsat.len(),
            })
        })
        .collect();
    MetricsReport {
        format: REPORT_FORMAT.into(),
        generator_version: GENERATOR_VERSION.into(),
        seed,
        tasks_per_type,
        scene_seeds,
        task_types,
        overall,
        subgoals: subgoal_stats(runs.iter().filter_map(|r| r.outcome.as_ref().ok())),
        landmark_reachability: SceneMean::of(landmarks),
        route_navigability: SceneMean::of(routes),
    }
}

/// Full evaluation: tasks of every type in every scene, plus landmark and
/// route figures from the configured tables.
pub fn task_success_rate(cfg: &Config, scenes: &[Scene], tasks_per_type: usize, seed: u64, exec: Exec) -> MetricsReport {
    evaluate(cfg, scenes, &TaskType::ALL, tasks_per_type, seed, exec).0
}

/// Like [`task_success_rate`] but for chosen task types, also returning the
/// individual runs.
pub fn evaluate(
    cfg: &Config,
    scenes: &[Scene],
    types: &[TaskType],
    tasks_per_type: usize,
    seed: u64,
    exec: Exec,
) -> (MetricsReport, Vec<TaskRun>) {
    let runs = run_tasks(cfg, scenes, types, tasks_per_type, seed, exec);
    let nav: Vec<(Option<f64>, Option<f64>)> = exec.map(scenes, |s| {
        (
            landmark_reachability(cfg, s, cfg.landmarks.landmarks_for(s.room_type)),
            route_navigability(cfg, s, cfg.landmarks.routes_for(s.room_type)),
        )
    });
    let (lm, rt): (Vec<_>, Vec<_>) = nav.into_iter().unzip();
    let seeds = scenes.iter().map(|s| s.provenance.seed).collect();
    let report = aggregate(&runs, types, tasks_per_type, seed, seeds, &lm, &rt);
    (report, runs)
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".into(), |x| format!("{x:.3}"))
}

fn fmt_delta(r: Option<f64>, base: Option<f64>) -> String {
    match (r, base) {
        (Some(a), Some(b)) => format!("{:+.3}", a - b),
        _ => "n/a".into(),
    }
}

/// Aligned text table: one row per task type and subgoal kind with rate,
/// counts and the difference to an optional baseline report.
pub fn render_table(report: &MetricsReport, baseline: Option<&MetricsReport>) -> String {
    let mut rows: Vec<[String; 4]> = vec![["Task type".into(), "Rate".into(), "Delta".into(), "Solved".into()]];
    let row = |label: &str, r: &Rate, b: Option<&Rate>| -> [String; 4] {
        [
            label.to_string(),
            fmt_rate(r.rate),
            fmt_delta(r.rate, b.and_then(|b| b.rate)),
            format!("{}/{}", r.successes, r.attempts),
        ]
    };
    for t in &report.task_types {
        rows.push(row(t.task_type.label(), &t.rate, baseline.and_then(|b| b.task_rate(t.task_type))));
    }
    rows.push(row("Overall", &report.overall, baseline.map(|b| &b.overall)));
    rows.push(["Subgoal".into(), "Rate".into(), "Delta".into(), "Solved".into()]);
    for k in &report.subgoals {
        rows.push(row(k.kind.as_str(), &k.rate, baseline.and_then(|b| b.subgoal_rate(k.kind))));
    }
    let widths: Vec<usize> = (0..4).map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        if i == report.task_types.len() + 2 {
            out.push('\n');
        }
        let line = format!(
            "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}",
            r[0],
            r[1],
            r[2],
            r[3],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3]
        );
        out.push_str(line.trim_end());
        out.push('\n');
    }
    let nav = |label: &str, m: &SceneMean| match (m.mean, m.std) {
        (Some(mean), Some(std)) => format!("{label}: {:.2}% ± {:.2} over {} scenes\n", mean * 100.0, std * 100.0, m.scenes),
        _ => format!("{label}: n/a\n"),
    };
    out.push('\n');
    out.push_str(&nav("Landmark reachability", &report.landmark_reachability));
    out.push_str(&nav("Route navigability", &report.route_navigability));
    let _ = writeln!(out, "Seed {}, {} tasks per type, {} scenes", report.seed, report.tasks_per_type, report.scene_seeds.len());
    out
}
