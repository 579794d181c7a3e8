//! Household tasks: template sampling, subgoal decomposition, grid
//! navigation and execution into recorded trajectories.

mod exec;
mod nav;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{Affordance, Layer};
use crate::cdf::{AgentPose, HighLevelAction, Predicate, StateAssertion, TaskDefinition, TaskType, AGENT};
use crate::cssg::{PlacedObject, Scene};
use crate::world::NavGrid;
use crate::Config;

pub use exec::{execute_subgoals, execute_task, replay, replay_log, run_task, ReplayError, ReplayOutcome, SceneRef, SubgoalRecord, Trajectory, TRAJECTORY_FORMAT};
pub use nav::{goal_poses, joint_goal_poses, path_cost, plan_navigation, plan_to, shortest_path, NavError, MOVE_COST, ROTATION_COST};

/// Tasks sampled per type in an evaluation run unless told otherwise.
pub const DEFAULT_TASKS_PER_TYPE: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubgoalKind {
    GotoLocation,
    PickupObject,
    PutObject,
    SliceObject,
    CoolObject,
    HeatObject,
    CleanObject,
    ToggleObject,
}

impl SubgoalKind {
    pub const ALL: [SubgoalKind; 8] = [
        SubgoalKind::GotoLocation,
        SubgoalKind::PickupObject,
        SubgoalKind::PutObject,
        SubgoalKind::SliceObject,
        SubgoalKind::CoolObject,
        SubgoalKind::HeatObject,
        SubgoalKind::CleanObject,
        SubgoalKind::ToggleObject,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SubgoalKind::GotoLocation => "GotoLocation",
            SubgoalKind::PickupObject => "PickupObject",
            SubgoalKind::PutObject => "PutObject",
            SubgoalKind::SliceObject => "SliceObject",
            SubgoalKind::CoolObject => "CoolObject",
            SubgoalKind::HeatObject => "HeatObject",
            SubgoalKind::CleanObject => "CleanObject",
            SubgoalKind::ToggleObject => "ToggleObject",
        }
    }

    pub fn parse(s: &str) -> Option<SubgoalKind> {
        SubgoalKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_navigation(self) -> bool {
        self == SubgoalKind::GotoLocation
    }
}

impl fmt::Display for SubgoalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One navigation or interaction step. Args are object ids:
/// `PickupObject` carries `[object, receptacle it is taken from]`,
/// `PutObject` carries `[object, receptacle]`, the rest one target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgoal {
    pub kind: SubgoalKind,
    pub args: Vec<String>,
}

impl Subgoal {
    pub fn new(kind: SubgoalKind, args: &[&str]) -> Self {
        Subgoal {
            kind,
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }

    pub fn target(&self) -> &str {
        &self.args[0]
    }

    pub fn to_high_level(&self) -> HighLevelAction {
        HighLevelAction {
            action: self.kind.as_str().to_string(),
            args: self.args.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("{task_type} is unsatisfiable here: {reason}")]
    Unsatisfiable { task_type: TaskType, reason: String },
    #[error("task does not match its template: {0}")]
    Malformed(String),
}

fn unsat(task_type: TaskType, reason: &str) -> TaskError {
    TaskError::Unsatisfiable {
        task_type,
        reason: reason.to_string(),
    }
}

/// Scene objects grouped by what tasks can do with them. Every list is
/// sorted by id so enumeration order is fixed.
struct Roles<'a> {
    scene: &'a Scene,
    cfg: &'a Config,
}

impl<'a> Roles<'a> {
    fn has(&self, o: &PlacedObject, a: Affordance) -> bool {
        self.cfg.catalog.get(&o.object_type).is_some_and(|t| t.has(a))
    }

    fn sorted(&self, pred: impl Fn(&PlacedObject) -> bool) -> Vec<&'a PlacedObject> {
        let mut v: Vec<&PlacedObject> = self.scene.objects.iter().filter(|o| pred(o)).collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    fn pickable(&self) -> Vec<&'a PlacedObject> {
        self.sorted(|o| o.layer == Layer::SmallObject && self.has(o, Affordance::Pickupable))
    }

    /// Places objects can be put down on or in and start from.
    fn places(&self) -> Vec<&'a PlacedObject> {
        self.sorted(|o| {
            (self.has(o, Affordance::Surface) || self.has(o, Affordance::Container)) && !self.has(o, Affordance::Pickupable)
        })
    }

    fn with(&self, a: Affordance) -> Vec<&'a PlacedObject> {
        self.sorted(|o| self.has(o, a))
    }

    fn is_container(&self, id: &str) -> bool {
        self.scene.object(id).is_some_and(|o| self.has(o, Affordance::Container))
    }
}

fn placed_at(roles: &Roles, o: &str, r: &str) -> StateAssertion {
    let p = if roles.is_container(r) { Predicate::In } else { Predicate::On };
    StateAssertion::binary(o, p, r)
}

/// Template arguments: object ids in a fixed order per task type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Slots(Vec<String>);

fn eligible(roles: &Roles, task_type: TaskType) -> Result<Vec<Slots>, TaskError> {
    let pick = roles.pickable();
    let places = roles.places();
    if pick.is_empty() {
        return Err(unsat(task_type, "no pickable object"));
    }
    let pairs = |objs: &[&PlacedObject]| -> Vec<Slots> {
        let mut out = Vec::new();
        for o in objs {
            for r in &places {
                out.push(Slots(vec![o.id.clone(), r.id.clone()]));
            }
        }
        out
    };
    let need = |a: Affordance, what: &str| -> Result<(), TaskError> {
        if roles.with(a).is_empty() {
            Err(unsat(task_type, &format!("no {what} in the room")))
        } else {
            Ok(())
        }
    };
    let tuples = match task_type {
        TaskType::PickAndPlace => pairs(&pick),
        TaskType::PickTwoAndPlace => {
            let mut out = Vec::new();
            for (i, a) in pick.iter().enumerate() {
                for b in &pick[i + 1..] {
                    if a.object_type != b.object_type {
                        continue;
                    }
                    for r in &places {
                        out.push(Slots(vec![a.id.clone(), b.id.clone(), r.id.clone()]));
                    }
                }
            }
            out
        }
        TaskType::ExamineInLight => {
            let lamps: Vec<_> = roles
                .with(Affordance::Light)
                .into_iter()
                .filter(|l| roles.has(l, Affordance::Toggleable))
                .collect();
            let mut out = Vec::new();
            for o in &pick {
                for l in &lamps {
                    out.push(Slots(vec![o.id.clone(), l.id.clone()]));
                }
            }
            out
        }
        TaskType::CleanAndPlace => {
            need(Affordance::CleanSource, "sink")?;
            pairs(&pick.iter().copied().filter(|o| roles.has(o, Affordance::Cleanable)).collect::<Vec<_>>())
        }
        TaskType::HeatAndPlace => {
            need(Affordance::HeatSource, "heat source")?;
            pairs(&pick.iter().copied().filter(|o| roles.has(o, Affordance::Heatable)).collect::<Vec<_>>())
        }
        TaskType::CoolAndPlace => {
            need(Affordance::CoolSource, "fridge")?;
            pairs(&pick.iter().copied().filter(|o| roles.has(o, Affordance::Coolable)).collect::<Vec<_>>())
        }
        TaskType::StackAndPlace => {
            let mut out = Vec::new();
            for a in &pick {
                for b in &pick {
                    if a.id == b.id || !roles.has(b, Affordance::Stackable) {
                        continue;
                    }
                    for r in &places {
                        out.push(Slots(vec![a.id.clone(), b.id.clone(), r.id.clone()]));
                    }
                }
            }
            out
        }
    };
    if tuples.is_empty() {
        return Err(unsat(task_type, "no eligible objects for the template"));
    }
    Ok(tuples)
}

/// Number of distinct argument tuples `sample_task` chooses from.
pub fn eligible_count(cfg: &Config, scene: &Scene, task_type: TaskType) -> Result<usize, TaskError> {
    eligible(&Roles { scene, cfg }, task_type).map(|t| t.len())
}

/// Fill a task template with objects from `scene`, chosen uniformly over
/// eligible argument tuples. Start positions of the manipulated objects are
/// resampled among the room's receptacles (never the goal receptacle) and
/// recorded in the initial state.
pub fn sample_task<R: Rng + ?Sized>(cfg: &Config, scene: &Scene, task_type: TaskType, rng: &mut R) -> Result<TaskDefinition, TaskError> {
    let roles = Roles { scene, cfg };
    let tuples = eligible(&roles, task_type)?;
    let Slots(args) = tuples[rng.random_range(0..tuples.len())].clone();
    let places = roles.places();

    let movers: Vec<&str> = match task_type {
        TaskType::PickTwoAndPlace | TaskType::StackAndPlace => vec![&args[0], &args[1]],
        _ => vec![&args[0]],
    };
    let goal_r = match task_type {
        TaskType::ExamineInLight => None,
        TaskType::PickTwoAndPlace | TaskType::StackAndPlace => Some(args[2].as_str()),
        _ => Some(args[1].as_str()),
    };
    let starts: Vec<&PlacedObject> = places.iter().copied().filter(|p| Some(p.id.as_str()) != goal_r).collect();
    let mut init = Vec::new();
    for m in &movers {
        if starts.is_empty() {
            break;
        }
        let host = starts[rng.random_range(0..starts.len())];
        init.push(placed_at(&roles, m, &host.id));
    }

    let goal = match task_type {
        TaskType::PickAndPlace => vec![placed_at(&roles, &args[0], &args[1])],
        TaskType::PickTwoAndPlace => vec![placed_at(&roles, &args[0], &args[2]), placed_at(&roles, &args[1], &args[2])],
        TaskType::ExamineInLight => vec![
            StateAssertion::binary(&args[0], Predicate::HeldBy, AGENT),
            StateAssertion::unary(&args[1], Predicate::ToggledOn),
        ],
        TaskType::CleanAndPlace | TaskType::HeatAndPlace | TaskType::CoolAndPlace => {
            let flag = match task_type {
                TaskType::CleanAndPlace => Predicate::Clean,
                TaskType::HeatAndPlace => Predicate::Heated,
                _ => Predicate::Cooled,
            };
            vec![StateAssertion::unary(&args[0], flag), placed_at(&roles, &args[0], &args[1])]
        }
        TaskType::StackAndPlace => vec![
            StateAssertion::binary(&args[0], Predicate::On, &args[1]),
            placed_at(&roles, &args[1], &args[2]),
        ],
    };

    let start = NavGrid::from_scene(cfg, scene)
        .nearest_navigable(scene.structure.polygon().centroid())
        .map(|(col, row)| AgentPose { col, row, heading: 0 });
    Ok(TaskDefinition {
        task_type,
        initial_state: init,
        goal_conditions: goal,
        agent_start: start,
    })
}

fn find<'a>(goal: &'a [StateAssertion], preds: &[Predicate]) -> Result<&'a StateAssertion, TaskError> {
    goal.iter()
        .find(|g| preds.contains(&g.predicate))
        .ok_or_else(|| TaskError::Malformed(format!("no {preds:?} goal")))
}

fn placement(goal: &StateAssertion) -> Result<(&str, &str), TaskError> {
    let r = goal
        .object
        .as_deref()
        .ok_or_else(|| TaskError::Malformed(format!("{} has no receptacle", goal.subject)))?;
    Ok((&goal.subject, r))
}

/// Where `o` starts: the task's initial placement if it has one, else its
/// support in the scene.
fn start_host(scene: &Scene, task: &TaskDefinition, o: &str) -> String {
    task.initial_state
        .iter()
        .find(|a| a.subject == o && matches!(a.predicate, Predicate::On | Predicate::In))
        .and_then(|a| a.object.clone())
        .or_else(|| scene.object(o).and_then(|p| p.support.clone()))
        .unwrap_or_default()
}

/// The instance with `affordance` that a task uses: smallest id.
fn source(cfg: &Config, scene: &Scene, task_type: TaskType, a: Affordance) -> Result<String, TaskError> {
    let roles = Roles { scene, cfg };
    roles
        .with(a)
        .first()
        .map(|o| o.id.clone())
        .ok_or_else(|| unsat(task_type, &format!("no {a:?} object")))
}

/// Expand a task into subgoals. Every interaction subgoal is preceded by a
/// navigation subgoal to its target.
pub fn decompose_task(cfg: &Config, scene: &Scene, task: &TaskDefinition) -> Result<Vec<Subgoal>, TaskError> {
    use SubgoalKind::*;
    let g = &task.goal_conditions;
    let pick_place = |o: &str, r: &str| -> Vec<Subgoal> {
        let from = start_host(scene, task, o);
        vec![
            Subgoal::new(GotoLocation, &[o]),
            Subgoal::new(PickupObject, &[o, &from]),
            Subgoal::new(GotoLocation, &[r]),
            Subgoal::new(PutObject, &[o, r]),
        ]
    };
    let out = match task.task_type {
        TaskType::PickAndPlace => {
            let (o, r) = placement(find(g, &[Predicate::On, Predicate::In])?)?;
            pick_place(o, r)
        }
        TaskType::PickTwoAndPlace => {
            let placed: Vec<_> = g.iter().filter(|a| matches!(a.predicate, Predicate::On | Predicate::In)).collect();
            if placed.len() != 2 {
                return Err(TaskError::Malformed("pick two needs two placements".into()));
            }
            let (o1, r) = placement(placed[0])?;
            let (o2, _) = placement(placed[1])?;
            let mut v = pick_place(o1, r);
            v.extend(pick_place(o2, r));
            v
        }
        TaskType::ExamineInLight => {
            let o = &find(g, &[Predicate::HeldBy])?.subject;
            let l = &find(g, &[Predicate::ToggledOn])?.subject;
            let from = start_host(scene, task, o);
            vec![
                Subgoal::new(GotoLocation, &[o]),
                Subgoal::new(PickupObject, &[o, &from]),
                Subgoal::new(GotoLocation, &[l]),
                Subgoal::new(ToggleObject, &[l]),
            ]
        }
        tt @ (TaskType::CleanAndPlace | TaskType::HeatAndPlace | TaskType::CoolAndPlace) => {
            let (flag, kind, aff) = match tt {
                TaskType::CleanAndPlace => (Predicate::Clean, CleanObject, Affordance::CleanSource),
                TaskType::HeatAndPlace => (Predicate::Heated, HeatObject, Affordance::HeatSource),
                _ => (Predicate::Cooled, CoolObject, Affordance::CoolSource),
            };
            let o = &find(g, &[flag])?.subject;
            let (_, r) = placement(find(g, &[Predicate::On, Predicate::In])?)?;
            let src = source(cfg, scene, tt, aff)?;
            let mut v = pick_place(o, r);
            v.splice(2..2, [Subgoal::new(GotoLocation, &[&src]), Subgoal::new(kind, &[o])]);
            v
        }
        TaskType::StackAndPlace => {
            let placed: Vec<_> = g.iter().filter(|a| matches!(a.predicate, Predicate::On | Predicate::In)).collect();
            let top = placed
                .iter()
                .find(|a| placed.iter().any(|b| Some(b.subject.as_str()) == a.object.as_deref()))
                .ok_or_else(|| TaskError::Malformed("stack needs an object on an object".into()))?;
            let (o1, o2) = placement(top)?;
            let bottom = placed
                .iter()
                .find(|a| a.subject == o2)
                .ok_or_else(|| TaskError::Malformed("stack base has no destination".into()))?;
            let (_, r) = placement(bottom)?;
            let mut v = pick_place(o1, o2);
            v.extend(pick_place(o2, r));
            v
        }
    };
    Ok(out)
}
