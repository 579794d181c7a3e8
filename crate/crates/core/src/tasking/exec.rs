use serde::{Deserialize, Serialize};

use super::{decompose_task, joint_goal_poses, plan_navigation, shortest_path, Subgoal, SubgoalKind};
use crate::catalog::Affordance;
use crate::cdf::TaskDefinition;
use crate::cssg::Scene;
use crate::world::{check_goal, instantiate_task_world, Action, ActionError, Location, WorldError, WorldState};
use crate::{Config, GENERATOR_VERSION};

pub const TRAJECTORY_FORMAT: &str = "roomsynth.trajectory/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneRef {
    pub hash: String,
    pub seed: u64,
}

/// A subgoal with the half-open span `[start, end)` of the actions it
/// produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgoalRecord {
    #[serde(flatten)]
    pub subgoal: Subgoal,
    pub start: usize,
    pub end: usize,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub format: String,
    pub generator_version: String,
    pub scene: SceneRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_seed: Option<u64>,
    pub task: TaskDefinition,
    pub subgoals: Vec<SubgoalRecord>,
    pub actions: Vec<Action>,
    /// World-state hash before the first action and after each one.
    pub frames: Vec<String>,
    #[serde(default)]
    pub summary: String,
    #[serde(default)]
    pub instructions: Vec<String>,
    pub goal_met: bool,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Trajectory {
    fn empty(scene: &Scene, task: &TaskDefinition) -> Self {
        Trajectory {
            format: TRAJECTORY_FORMAT.into(),
            generator_version: GENERATOR_VERSION.into(),
            scene: SceneRef {
                hash: scene.hash(),
                seed: scene.provenance.seed,
            },
            task_seed: None,
            task: task.clone(),
            subgoals: Vec::new(),
            actions: Vec::new(),
            frames: Vec::new(),
            summary: String::new(),
            instructions: Vec::new(),
            goal_met: false,
            success: false,
            error: None,
        }
    }

    pub fn to_json(&self) -> String {
        crate::util::to_json_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Trajectory, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn final_state_hash(&self) -> Option<&str> {
        self.frames.last().map(String::as_str)
    }

    pub fn plan(&self) -> Vec<Subgoal> {
        self.subgoals.iter().map(|r| r.subgoal.clone()).collect()
    }
}

fn with_open(world: &WorldState, receptacle: &str, action: Action) -> Vec<Action> {
    let closed = world
        .object(receptacle)
        .is_some_and(|r| r.has(Affordance::Openable) && !r.state.open);
    if closed {
        let r = receptacle.to_string();
        vec![Action::Open { object: r.clone() }, action, Action::Close { object: r }]
    } else {
        vec![action]
    }
}

fn closed_host(world: &WorldState, id: &str) -> Option<crate::geometry::Obb> {
    let Location::Support(h) = &world.object(id)?.location else { return None };
    let host = world.object(h)?;
    (host.has(Affordance::Openable) && !host.state.open).then_some(host.footprint)
}

/// Low-level actions for one subgoal from the current state.
fn expand(world: &WorldState, sg: &Subgoal) -> Result<Vec<Action>, String> {
    let o = sg.target().to_string();
    Ok(match sg.kind {
        SubgoalKind::GotoLocation => match closed_host(world, &o) {
            // the host has to be opened from the same spot
            Some(host) => {
                let need = [world.object(&o).expect("has a host").footprint, host];
                let goal = joint_goal_poses(&world.grid, world.interaction(), &need);
                shortest_path(&world.grid, world.agent, &goal).ok_or_else(|| format!("{o} cannot be reached"))?
            }
            None => plan_navigation(world, &o).map_err(|e| e.to_string())?,
        },
        SubgoalKind::PickupObject => {
            let pick = Action::Pickup { object: o.clone() };
            match world.object(&o).map(|x| &x.location) {
                Some(Location::Support(host)) => with_open(world, host, pick),
                _ => vec![pick],
            }
        }
        SubgoalKind::PutObject => {
            let r = sg.args.get(1).ok_or("put needs a receptacle")?.clone();
            with_open(world, &r, Action::Put { object: o, receptacle: r.clone() })
        }
        SubgoalKind::SliceObject => vec![Action::Slice { object: o }],
        SubgoalKind::HeatObject => vec![Action::Heat { object: o }],
        SubgoalKind::CoolObject => vec![Action::Cool { object: o }],
        SubgoalKind::CleanObject => vec![Action::Clean { object: o }],
        SubgoalKind::ToggleObject => vec![Action::ToggleOn { object: o }],
    })
}

/// Decompose and run `task` in `world`. Failures end the run and are
/// recorded; later subgoals stay in the record with empty spans.
pub fn execute_task(cfg: &Config, world: &WorldState, task: &TaskDefinition) -> Trajectory {
    match decompose_task(cfg, &world.scene, task) {
        Ok(plan) => execute_subgoals(world, task, plan),
        Err(e) => {
            let mut traj = Trajectory::empty(&world.scene, task);
            traj.frames.push(world.state_hash());
            traj.error = Some(e.to_string());
            traj
        }
    }
}

/// Run an explicit subgoal plan; success also requires the task's goal.
pub fn execute_subgoals(world: &WorldState, task: &TaskDefinition, plan: Vec<Subgoal>) -> Trajectory {
    let mut traj = Trajectory::empty(&world.scene, task);
    traj.frames.push(world.state_hash());
    let mut state = world.clone();
    let mut failed = false;
    for sg in plan {
        let start = traj.actions.len();
        let mut record = SubgoalRecord {
            subgoal: sg,
            start,
            end: start,
            success: false,
            error: None,
        };
        if !failed {
            match expand(&state, &record.subgoal) {
                Ok(actions) => {
                    for a in actions {
                        match state.apply_action(&a) {
                            Ok(next) => {
                                state = next;
                                traj.frames.push(state.state_hash());
                                traj.actions.push(a);
                            }
                            Err(e) => {
                                record.error = Some(e.to_string());
                                break;
                            }
                        }
                    }
                    record.success = record.error.is_none();
                }
                Err(e) => record.error = Some(e),
            }
            failed = !record.success;
        }
        record.end = traj.actions.len();
        traj.subgoals.push(record);
    }
    traj.goal_met = check_goal(&state, &task.goal_conditions);
    traj.success = !failed && traj.goal_met;
    traj
}

/// Build the task's world and execute it; a task whose initial state cannot
/// be set up yields an unsuccessful, action-free trajectory.
pub fn run_task(cfg: &Config, scene: &Scene, task: &TaskDefinition) -> Trajectory {
    match instantiate_task_world(cfg, scene, task) {
        Ok(world) => execute_task(cfg, &world, task),
        Err(e) => {
            let mut t = Trajectory::empty(scene, task);
            t.error = Some(e.to_string());
            t
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("trajectory was recorded on scene {recorded}, not {given}")]
    SceneMismatch { recorded: String, given: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("action {step} failed: {error}")]
    Action { step: usize, error: ActionError },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayOutcome {
    pub final_state_hash: String,
    pub goal_met: bool,
    pub success: bool,
    /// Every intermediate hash equals the recorded frame.
    pub frames_match: bool,
}

/// Re-run the recorded actions from the task's initial state.
pub fn replay(cfg: &Config, scene: &Scene, traj: &Trajectory) -> Result<ReplayOutcome, ReplayError> {
    let given = scene.hash();
    if given != traj.scene.hash {
        return Err(ReplayError::SceneMismatch {
            recorded: traj.scene.hash.clone(),
            given,
        });
    }
    let mut state = instantiate_task_world(cfg, scene, &traj.task)?;
    let mut frames = vec![state.state_hash()];
    for (step, a) in traj.actions.iter().enumerate() {
        state = state.apply_action(a).map_err(|error| ReplayError::Action { step, error })?;
        frames.push(state.state_hash());
    }
    let goal_met = check_goal(&state, &traj.task.goal_conditions);
    let spans_ok = !traj.subgoals.is_empty() && traj.subgoals.iter().all(|s| s.success);
    Ok(ReplayOutcome {
        final_state_hash: frames.last().cloned().unwrap_or_default(),
        goal_met,
        success: goal_met && spans_ok,
        frames_match: frames == traj.frames,
    })
}

/// One JSON line per step: the initial state, then each action with the
/// state it leads to.
pub fn replay_log(traj: &Trajectory) -> String {
    let mut out = String::new();
    for (i, frame) in traj.frames.iter().enumerate() {
        let line = match i.checked_sub(1).and_then(|k| traj.actions.get(k)) {
            Some(a) => serde_json::json!({ "step": i, "action": a, "state": frame }),
            None => serde_json::json!({ "step": i, "state": frame }),
        };
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}
