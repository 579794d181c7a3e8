//! Interactive world state: agent pose, held object, per-object location and
//! state flags. Transitions are pure: applying an action returns a new state.

mod grid;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{Affordance, Layer};
use crate::cdf::{AgentPose, Predicate, StateAssertion, TaskDefinition, AGENT};
use crate::cssg::{Layout, PlacedObject, Scene, POSITION_QUANTUM};
use crate::geometry::{clip_convex, convex_distance, heading_vector, Obb, Vec2};
use crate::relations::InteractionParams;
use crate::util::{round_to, sha256_hex};
use crate::Config;

pub use grid::{Heading, NavGrid, Pose};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Floor,
    Support(String),
    Held,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectState {
    pub open: bool,
    pub toggled: bool,
    pub sliced: bool,
    pub clean: bool,
    pub heated: bool,
    pub cooled: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldObject {
    pub id: String,
    pub object_type: String,
    pub layer: Layer,
    pub footprint: Obb,
    pub location: Location,
    pub state: ObjectState,
    pub affordances: BTreeSet<Affordance>,
}

impl WorldObject {
    pub fn has(&self, a: Affordance) -> bool {
        self.affordances.contains(&a)
    }

    pub fn is_receptacle(&self) -> bool {
        self.has(Affordance::Surface) || self.has(Affordance::Container)
    }
}

/// Low-level agent actions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "action")]
pub enum Action {
    MoveAhead,
    RotateLeft,
    RotateRight,
    Pickup { object: String },
    Put { object: String, receptacle: String },
    Open { object: String },
    Close { object: String },
    ToggleOn { object: String },
    ToggleOff { object: String },
    Slice { object: String },
    Heat { object: String },
    Cool { object: String },
    Clean { object: String },
}

impl Action {
    pub fn is_navigation(&self) -> bool {
        matches!(self, Action::MoveAhead | Action::RotateLeft | Action::RotateRight)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActionError {
    #[error("the way ahead is blocked")]
    Blocked,
    #[error("{0} is out of reach")]
    OutOfRange(String),
    #[error("the agent is already holding {0}")]
    HandFull(String),
    #[error("the agent is not holding {0}")]
    HandEmpty(String),
    #[error("{0} is closed")]
    ClosedReceptacle(String),
    #[error("{0}")]
    WrongAffordance(String),
    #[error("no object {0}")]
    UnknownObject(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorldError {
    #[error("the room has no navigable cell")]
    NoNavigableCell,
    #[error("initial state cannot be applied: {0}")]
    BadInitialState(String),
}

#[derive(Clone, Debug)]
pub struct WorldState {
    pub scene: Arc<Scene>,
    pub grid: Arc<NavGrid>,
    interaction: InteractionParams,
    pub objects: BTreeMap<String, WorldObject>,
    pub holding: Option<String>,
    pub agent: Pose,
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        self.objects == other.objects && self.holding == other.holding && self.agent == other.agent
    }
}

#[derive(Serialize)]
struct ObjectSnapshot<'a> {
    location: &'a Location,
    x: f64,
    y: f64,
    #[serde(flatten)]
    state: &'a ObjectState,
}

#[derive(Serialize)]
struct Snapshot<'a> {
    agent: &'a Pose,
    holding: &'a Option<String>,
    objects: BTreeMap<&'a str, ObjectSnapshot<'a>>,
}

/// Build the initial world for a scene: every object where the generator
/// put it, all flags off, the agent on the navigable cell nearest the middle
/// of the room facing east.
pub fn instantiate_world(cfg: &Config, scene: &Scene) -> Result<WorldState, WorldError> {
    let grid = NavGrid::from_scene(cfg, scene);
    let (col, row) = grid
        .nearest_navigable(scene.structure.polygon().centroid())
        .ok_or(WorldError::NoNavigableCell)?;
    let objects = scene
        .objects
        .iter()
        .map(|o| {
            let info = cfg.catalog.get(&o.object_type).expect("scene types come from the catalog");
            let obj = WorldObject {
                id: o.id.clone(),
                object_type: o.object_type.clone(),
                layer: o.layer,
                footprint: o.footprint(),
                location: o.support.clone().map_or(Location::Floor, Location::Support),
                state: ObjectState::default(),
                affordances: info.affordances.clone(),
            };
            (o.id.clone(), obj)
        })
        .collect();
    Ok(WorldState {
        scene: Arc::new(scene.clone()),
        grid: Arc::new(grid),
        interaction: cfg.rules.interaction,
        objects,
        holding: None,
        agent: Pose::new(col, row, Heading::East),
    })
}

/// World for a task: the scene's world with the task's initial state and
/// agent start applied.
pub fn instantiate_task_world(cfg: &Config, scene: &Scene, task: &TaskDefinition) -> Result<WorldState, WorldError> {
    let mut w = instantiate_world(cfg, scene)?;
    w.apply_initial_state(cfg, &task.initial_state)?;
    if let Some(p) = task.agent_start {
        w.set_agent(p)?;
    }
    Ok(w)
}

impl WorldState {
    pub fn object(&self, id: &str) -> Option<&WorldObject> {
        self.objects.get(id)
    }

    pub fn interaction(&self) -> InteractionParams {
        self.interaction
    }

    pub fn agent_pose(&self) -> AgentPose {
        AgentPose {
            col: self.agent.col,
            row: self.agent.row,
            heading: self.agent.heading.degrees(),
        }
    }

    pub fn set_agent(&mut self, p: AgentPose) -> Result<(), WorldError> {
        let heading = Heading::try_from(p.heading).map_err(WorldError::BadInitialState)?;
        if !self.grid.is_navigable(p.col as i64, p.row as i64) {
            return Err(WorldError::BadInitialState(format!(
                "agent start ({}, {}) is not navigable",
                p.col, p.row
            )));
        }
        self.agent = Pose::new(p.col, p.row, heading);
        Ok(())
    }

    /// Instances matching an id or, failing that, a type name.
    pub fn instances(&self, name: &str) -> Vec<&str> {
        if self.objects.contains_key(name) {
            return vec![self.objects.get_key_value(name).expect("present").0.as_str()];
        }
        self.objects
            .values()
            .filter(|o| o.object_type == name)
            .map(|o| o.id.as_str())
            .collect()
    }

    /// Current footprints as placed objects, for free-spot search.
    fn as_placed(&self) -> Vec<PlacedObject> {
        self.scene
            .objects
            .iter()
            .filter_map(|o| {
                let w = self.objects.get(&o.id)?;
                if w.location == Location::Held {
                    return None;
                }
                Some(PlacedObject {
                    x: w.footprint.center.x,
                    y: w.footprint.center.y,
                    rotation: w.footprint.rotation,
                    support: match &w.location {
                        Location::Support(s) => Some(s.clone()),
                        _ => None,
                    },
                    ..o.clone()
                })
            })
            .collect()
    }

    /// Move `id` onto `host`, choosing the free spot nearest the host's
    /// center. Objects it carries move along.
    pub fn relocate(&mut self, cfg: &Config, id: &str, host: &str) -> Result<(), WorldError> {
        let bad = |m: String| WorldError::BadInitialState(m);
        let obj = self.objects.get(id).ok_or_else(|| bad(format!("no object {id}")))?;
        let host_obj = self.objects.get(host).ok_or_else(|| bad(format!("no object {host}")))?;
        if !host_obj.is_receptacle() || id == host {
            return Err(bad(format!("{id} cannot go on {host}")));
        }
        let structure = &self.scene.structure;
        let mut layout = Layout::new(cfg, structure);
        let placed = self.as_placed();
        for p in placed.iter().filter(|p| p.id != id && p.support.as_deref() != Some(id)) {
            layout.push(p.clone());
        }
        let host_placed = layout
            .get(host)
            .cloned()
            .ok_or_else(|| bad(format!("{host} is not in the room")))?;
        let spot = layout
            .surface_spot(id, &obj.object_type, &host_placed)
            .unwrap_or_else(|| Obb { center: host_placed.center(), ..obj.footprint });
        let spot = Obb::new(
            Vec2::new(round_to(spot.center.x, POSITION_QUANTUM), round_to(spot.center.y, POSITION_QUANTUM)),
            spot.width,
            spot.depth,
            spot.rotation,
        );
        self.move_with_children(id, spot);
        let o = self.objects.get_mut(id).expect("checked above");
        o.location = Location::Support(host.to_string());
        Ok(())
    }

    fn move_with_children(&mut self, id: &str, to: Obb) {
        let from = self.objects[id].footprint.center;
        let delta = to.center - from;
        let mut stack = vec![id.to_string()];
        let mut seen = BTreeSet::new();
        while let Some(cur) = stack.pop() {
            if !seen.insert(cur.clone()) {
                continue;
            }
            for (cid, c) in &self.objects {
                if c.location == Location::Support(cur.clone()) {
                    stack.push(cid.clone());
                }
            }
        }
        for cid in seen {
            let o = self.objects.get_mut(&cid).expect("collected from map");
            if cid == id {
                o.footprint = to;
            } else {
                o.footprint = o.footprint.translated(delta);
            }
        }
    }

    /// Apply initial-state assertions (placements and flags).
    pub fn apply_initial_state(&mut self, cfg: &Config, init: &[StateAssertion]) -> Result<(), WorldError> {
        for a in init {
            let subject = self
                .instances(&a.subject)
                .first()
                .map(|s| s.to_string())
                .ok_or_else(|| WorldError::BadInitialState(format!("no object {}", a.subject)))?;
            match a.predicate {
                Predicate::On | Predicate::In => {
                    let host_name = a.object.as_deref().unwrap_or_default();
                    let host = self
                        .instances(host_name)
                        .first()
                        .map(|s| s.to_string())
                        .ok_or_else(|| WorldError::BadInitialState(format!("no object {host_name}")))?;
                    let already = self.objects[&subject].location == Location::Support(host.clone());
                    if !already {
                        self.relocate(cfg, &subject, &host)?;
                    }
                }
                Predicate::HeldBy => {
                    self.objects.get_mut(&subject).expect("instance").location = Location::Held;
                    self.holding = Some(subject);
                }
                p => {
                    let s = &mut self.objects.get_mut(&subject).expect("instance").state;
                    match p {
                        Predicate::ToggledOn => s.toggled = true,
                        Predicate::ToggledOff => s.toggled = false,
                        Predicate::Open => s.open = true,
                        Predicate::Closed => s.open = false,
                        Predicate::Sliced => s.sliced = true,
                        Predicate::Clean => s.clean = true,
                        Predicate::Heated => s.heated = true,
                        Predicate::Cooled => s.cooled = true,
                        Predicate::On | Predicate::In | Predicate::HeldBy => unreachable!(),
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether the agent can reach `footprint` from `pose`: within range and
    /// inside the view cone.
    pub fn reachable_from(&self, pose: Pose, footprint: &Obb) -> bool {
        in_reach(&self.grid, self.interaction, pose, footprint)
    }

    /// Whether `id` can be interacted with from the current pose.
    pub fn in_range(&self, id: &str) -> bool {
        self.objects
            .get(id)
            .is_some_and(|o| o.location != Location::Held && self.reachable_from(self.agent, &o.footprint))
    }

    fn get(&self, id: &str) -> Result<&WorldObject, ActionError> {
        self.objects.get(id).ok_or_else(|| ActionError::UnknownObject(id.to_string()))
    }

    fn require(&self, o: &WorldObject, a: Affordance, what: &str) -> Result<(), ActionError> {
        if o.has(a) {
            Ok(())
        } else {
            Err(ActionError::WrongAffordance(format!("{} cannot be {what}", o.id)))
        }
    }

    fn reach(&self, id: &str) -> Result<(), ActionError> {
        if self.in_range(id) {
            Ok(())
        } else {
            Err(ActionError::OutOfRange(id.to_string()))
        }
    }

    fn source_in_range(&self, a: Affordance, what: &str) -> Result<(), ActionError> {
        if self.objects.values().any(|o| o.has(a) && self.in_range(&o.id)) {
            Ok(())
        } else {
            Err(ActionError::OutOfRange(format!("a {what}")))
        }
    }

    fn held(&self, id: &str) -> Result<(), ActionError> {
        match &self.holding {
            Some(h) if h == id => Ok(()),
            _ => Err(ActionError::HandEmpty(id.to_string())),
        }
    }

    /// Apply one action. Errors leave the state untouched.
    pub fn apply_action(&self, action: &Action) -> Result<WorldState, ActionError> {
        let mut next = self.clone();
        match action {
            Action::MoveAhead => {
                next.agent = self.grid.step(self.agent).ok_or(ActionError::Blocked)?;
            }
            Action::RotateLeft => next.agent.heading = self.agent.heading.left(),
            Action::RotateRight => next.agent.heading = self.agent.heading.right(),
            Action::Pickup { object } => {
                let o = self.get(object)?;
                self.require(o, Affordance::Pickupable, "picked up")?;
                if let Some(h) = &self.holding {
                    return Err(ActionError::HandFull(h.clone()));
                }
                self.reach(object)?;
                if let Location::Support(s) = &o.location {
                    let host = self.get(s)?;
                    if host.has(Affordance::Openable) && !host.state.open {
                        return Err(ActionError::ClosedReceptacle(s.clone()));
                    }
                }
                next.objects.get_mut(object).expect("checked").location = Location::Held;
                next.holding = Some(object.clone());
            }
            Action::Put { object, receptacle } => {
                self.held(object)?;
                let r = self.get(receptacle)?;
                if !r.is_receptacle() || receptacle == object {
                    return Err(ActionError::WrongAffordance(format!("{receptacle} cannot hold objects")));
                }
                if self.carried_by(receptacle, object) {
                    return Err(ActionError::WrongAffordance(format!("{receptacle} is on {object}")));
                }
                self.reach(receptacle)?;
                if r.has(Affordance::Openable) && !r.state.open {
                    return Err(ActionError::ClosedReceptacle(receptacle.clone()));
                }
                let fp = self.objects[object].footprint;
                let to = Obb::new(r.footprint.center, fp.width, fp.depth, r.footprint.rotation);
                next.move_with_children(object, to);
                next.objects.get_mut(object).expect("held").location = Location::Support(receptacle.clone());
                next.holding = None;
            }
            Action::Open { object } | Action::Close { object } => {
                let o = self.get(object)?;
                self.require(o, Affordance::Openable, "opened")?;
                self.reach(object)?;
                next.objects.get_mut(object).expect("checked").state.open = matches!(action, Action::Open { .. });
            }
            Action::ToggleOn { object } | Action::ToggleOff { object } => {
                let o = self.get(object)?;
                self.require(o, Affordance::Toggleable, "toggled")?;
                self.reach(object)?;
                next.objects.get_mut(object).expect("checked").state.toggled = matches!(action, Action::ToggleOn { .. });
            }
            Action::Slice { object } => {
                let o = self.get(object)?;
                self.require(o, Affordance::Sliceable, "sliced")?;
                let knife = self
                    .holding
                    .as_ref()
                    .ok_or_else(|| ActionError::HandEmpty("a knife".into()))?;
                if !self.objects[knife].has(Affordance::Slicer) {
                    return Err(ActionError::WrongAffordance(format!("{knife} cannot slice")));
                }
                self.reach(object)?;
                next.objects.get_mut(object).expect("checked").state.sliced = true;
            }
            Action::Heat { object } | Action::Cool { object } | Action::Clean { object } => {
                let o = self.get(object)?;
                let (need, source, what) = match action {
                    Action::Heat { .. } => (Affordance::Heatable, Affordance::HeatSource, "microwave"),
                    Action::Cool { .. } => (Affordance::Coolable, Affordance::CoolSource, "fridge"),
                    _ => (Affordance::Cleanable, Affordance::CleanSource, "sink"),
                };
                self.require(o, need, "treated that way")?;
                self.held(object)?;
                self.source_in_range(source, what)?;
                let s = &mut next.objects.get_mut(object).expect("checked").state;
                match action {
                    Action::Heat { .. } => {
                        s.heated = true;
                        s.cooled = false;
                    }
                    Action::Cool { .. } => {
                        s.cooled = true;
                        s.heated = false;
                    }
                    _ => s.clean = true,
                }
            }
        }
        Ok(next)
    }

    /// True when `id` rests (directly or indirectly) on `carrier`.
    fn carried_by(&self, id: &str, carrier: &str) -> bool {
        let mut cur = id;
        for _ in 0..self.objects.len() {
            match self.objects.get(cur).map(|o| &o.location) {
                Some(Location::Support(s)) if s == carrier => return true,
                Some(Location::Support(s)) => cur = s,
                _ => return false,
            }
        }
        false
    }

    /// SHA-256 of a canonical snapshot: agent, hand, and every object's
    /// location, position and flags.
    pub fn state_hash(&self) -> String {
        let snap = Snapshot {
            agent: &self.agent,
            holding: &self.holding,
            objects: self
                .objects
                .iter()
                .map(|(id, o)| {
                    (
                        id.as_str(),
                        ObjectSnapshot {
                            location: &o.location,
                            x: round_to(o.footprint.center.x, POSITION_QUANTUM),
                            y: round_to(o.footprint.center.y, POSITION_QUANTUM),
                            state: &o.state,
                        },
                    )
                })
                .collect(),
        };
        sha256_hex(serde_json::to_string(&snap).expect("serializable snapshot").as_bytes())
    }

    fn holds(&self, a: &StateAssertion, subject: &str) -> bool {
        let Some(o) = self.objects.get(subject) else { return false };
        let s = &o.state;
        match a.predicate {
            Predicate::On | Predicate::In => {
                let host = a.object.as_deref().unwrap_or_default();
                let hosts = self.instances(host);
                matches!(&o.location, Location::Support(h) if hosts.contains(&h.as_str()))
            }
            Predicate::HeldBy => {
                a.object.as_deref().is_none_or(|x| x == AGENT) && self.holding.as_deref() == Some(subject)
            }
            Predicate::ToggledOn => s.toggled,
            Predicate::ToggledOff => !s.toggled,
            Predicate::Open => s.open,
            Predicate::Closed => !s.open,
            Predicate::Sliced => s.sliced,
            Predicate::Clean => s.clean,
            Predicate::Heated => s.heated,
            Predicate::Cooled => s.cooled,
        }
    }

    /// Whether an assertion holds; type names match any instance.
    pub fn assertion_holds(&self, a: &StateAssertion) -> bool {
        self.instances(&a.subject).into_iter().any(|s| self.holds(a, s))
    }
}

/// Range and view-cone test from the center of the agent's cell.
pub fn in_reach(grid: &NavGrid, params: InteractionParams, pose: Pose, footprint: &Obb) -> bool {
    let p = grid.center(pose.col, pose.row);
    let h = f64::from(pose.heading.degrees());
    let far = params.range * 2.0;
    let wedge = [
        p,
        p + heading_vector(h - params.cone_deg) * far,
        p + heading_vector(h + params.cone_deg) * far,
    ];
    let visible = clip_convex(&footprint.corners(), &wedge);
    !visible.is_empty() && convex_distance(&visible, p) <= params.range + 1e-9
}

/// Whether every goal assertion holds.
pub fn check_goal(world: &WorldState, goals: &[StateAssertion]) -> bool {
    goals.iter().all(|g| world.assertion_holds(g))
}
