//! Challenge Definition Format: scene requirements, task design and an
//! optional high-level script, stored as JSON.

mod derive;
mod merge;
mod parse;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::Layer;
use crate::relations::Target;

pub use derive::derive_scene_description;
pub use merge::merge_scene_descriptions;
pub use parse::{cdf_hash, parse_cdf, serialize_cdf};
pub use validate::{validate_cdf, Finding, FindingCode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomType {
    Kitchen,
    LivingRoom,
    Bedroom,
    Bathroom,
}

impl RoomType {
    pub const ALL: [RoomType; 4] = [RoomType::Kitchen, RoomType::LivingRoom, RoomType::Bedroom, RoomType::Bathroom];

    pub fn as_str(self) -> &'static str {
        match self {
            RoomType::Kitchen => "kitchen",
            RoomType::LivingRoom => "living_room",
            RoomType::Bedroom => "bedroom",
            RoomType::Bathroom => "bathroom",
        }
    }

    pub fn parse(s: &str) -> Option<RoomType> {
        RoomType::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for RoomType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub id: String,
    #[serde(rename = "type")]
    pub object_type: String,
    pub layer: Layer,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
}

/// Relation keywords accepted in documents. `in_front_of(a, b)` is read as
/// `face(b, a)` during resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRelation {
    Against,
    AwayFrom,
    Beside,
    Face,
    In,
    InFrontOf,
    On,
}

impl SpatialRelation {
    pub fn is_support(self) -> bool {
        matches!(self, SpatialRelation::On | SpatialRelation::In)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDecl {
    pub subject: String,
    pub relation: SpatialRelation,
    pub object: Target,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub room_type: RoomType,
    pub entries: Vec<ObjectEntry>,
    pub relations: Vec<RelationDecl>,
}

impl SceneDescription {
    pub fn entry(&self, id: &str) -> Option<&ObjectEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Entries sorted by id; relations keep declaration order.
    pub fn canonical(&self) -> SceneDescription {
        let mut out = self.clone();
        out.entries.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    PickAndPlace,
    PickTwoAndPlace,
    ExamineInLight,
    CleanAndPlace,
    HeatAndPlace,
    CoolAndPlace,
    StackAndPlace,
}

impl TaskType {
    pub const ALL: [TaskType; 7] = [
        TaskType::PickAndPlace,
        TaskType::PickTwoAndPlace,
        TaskType::ExamineInLight,
        TaskType::CleanAndPlace,
        TaskType::HeatAndPlace,
        TaskType::CoolAndPlace,
        TaskType::StackAndPlace,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::PickAndPlace => "pick_and_place",
            TaskType::PickTwoAndPlace => "pick_two_and_place",
            TaskType::ExamineInLight => "examine_in_light",
            TaskType::CleanAndPlace => "clean_and_place",
            TaskType::HeatAndPlace => "heat_and_place",
            TaskType::CoolAndPlace => "cool_and_place",
            TaskType::StackAndPlace => "stack_and_place",
        }
    }

    /// Short label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            TaskType::PickAndPlace => "Pick & Place",
            TaskType::PickTwoAndPlace => "Pick Two & Place",
            TaskType::ExamineInLight => "Examine in Light",
            TaskType::CleanAndPlace => "Clean & Place",
            TaskType::HeatAndPlace => "Heat & Place",
            TaskType::CoolAndPlace => "Cool & Place",
            TaskType::StackAndPlace => "Stack & Place",
        }
    }

    pub fn parse(s: &str) -> Option<TaskType> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect();
        TaskType::ALL
            .into_iter()
            .find(|t| t.as_str().replace('_', "") == key)
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    On,
    In,
    ToggledOn,
    ToggledOff,
    Open,
    Closed,
    Sliced,
    Clean,
    Heated,
    Cooled,
    HeldBy,
}

impl Predicate {
    pub fn is_binary(self) -> bool {
        matches!(self, Predicate::On | Predicate::In | Predicate::HeldBy)
    }
}

/// Object id used for the agent in `held_by` assertions.
pub const AGENT: &str = "agent";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateAssertion {
    /// Entry id, or a type name meaning "any instance".
    pub subject: String,
    pub predicate: Predicate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
}

impl StateAssertion {
    pub fn unary(subject: &str, predicate: Predicate) -> Self {
        StateAssertion {
            subject: subject.to_string(),
            predicate,
            object: None,
        }
    }

    pub fn binary(subject: &str, predicate: Predicate, object: &str) -> Self {
        StateAssertion {
            subject: subject.to_string(),
            predicate,
            object: Some(object.to_string()),
        }
    }
}

/// Agent pose on the navigation grid; heading in degrees, one of 0/90/180/270.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentPose {
    pub col: usize,
    pub row: usize,
    pub heading: u16,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDefinition {
    #[serde(rename = "type")]
    pub task_type: TaskType,
    #[serde(rename = "init", default)]
    pub initial_state: Vec<StateAssertion>,
    #[serde(rename = "goal")]
    pub goal_conditions: Vec<StateAssertion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_start: Option<AgentPose>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HighLevelAction {
    pub action: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl HighLevelAction {
    pub fn new(action: &str, args: &[&str]) -> Self {
        HighLevelAction {
            action: action.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CdfDocument {
    pub scene: SceneDescription,
    pub task: Option<TaskDefinition>,
    pub script: Vec<HighLevelAction>,
}

impl CdfDocument {
    pub fn new(scene: SceneDescription) -> Self {
        CdfDocument {
            scene,
            task: None,
            script: Vec::new(),
        }
    }

    pub fn canonical(&self) -> CdfDocument {
        CdfDocument {
            scene: self.scene.canonical(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CdfError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("reference error: {0}")]
    Reference(String),
    #[error("merge error: {0}")]
    Merge(String),
    #[error("trajectory has no actions")]
    EmptyTrajectory,
}
