//! Constrained stochastic scene generation.
//!
//! Objects are placed layer by layer in dependency order. Each placement
//! samples a cell from a score field combining the object's explicit and
//! implicit relations; collisions make cells infeasible. A placement that
//! leaves an explicit relation unsatisfied is redrawn, and a scene that runs
//! out of draws restarts from an empty room.

mod generate;
mod layout;
mod room;

use serde::{Deserialize, Serialize};

use crate::catalog::Layer;
use crate::cdf::RoomType;
use crate::geometry::{Obb, Vec2};
use crate::relations::{RelationError, Relationship};
use crate::util::{sha256_hex, to_json_pretty};

pub use generate::{generate, generate_scene, generate_scene_with, GenerationStats};
pub use layout::{check_collision, explicit_satisfaction, satisfaction, Layout};
pub use room::{sample_room_structure, FixedElement, Opening, RoomCatalog, RoomStructure};

pub const SCENE_FORMAT: &str = "roomsynth.scene/1";

/// Quantum for stored coordinates, so serialized scenes match across platforms.
pub const POSITION_QUANTUM: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub id: String,
    #[serde(rename = "type")]
    pub object_type: String,
    pub layer: Layer,
    pub x: f64,
    pub y: f64,
    /// Degrees counter-clockwise from +x; the object's front points this way.
    pub rotation: f64,
    /// Footprint extent across the front direction.
    pub w: f64,
    /// Footprint extent along the front direction.
    pub d: f64,
    /// Supporting object for items placed on or in something.
    pub support: Option<String>,
    /// Structural furniture supplied by the room.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fixed: bool,
}

impl PlacedObject {
    pub fn footprint(&self) -> Obb {
        Obb::new(Vec2::new(self.x, self.y), self.w, self.d, self.rotation)
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub cdf_hash: String,
    pub seed: u64,
    pub generator_version: String,
    /// Scene restarts used before this layout succeeded.
    pub restarts: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub format: String,
    pub room_type: RoomType,
    pub structure: RoomStructure,
    /// Placement order.
    pub objects: Vec<PlacedObject>,
    /// Explicit relations as oriented for placement.
    pub relations: Vec<Relationship>,
    pub provenance: Provenance,
}

impl Scene {
    pub fn object(&self, id: &str) -> Option<&PlacedObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn to_json(&self) -> String {
        to_json_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Scene, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerationError {
    #[error("no room structure available for {0}")]
    EmptyCatalog(RoomType),
    #[error("scene description is invalid: {0}")]
    InvalidDescription(String),
    #[error("room structure is for {structure}, description is for {description}")]
    RoomMismatch { structure: RoomType, description: RoomType },
    #[error(transparent)]
    Relations(#[from] RelationError),
    #[error("generation exhausted after {restarts} restarts (seed {seed}): {last}")]
    Exhausted { seed: u64, restarts: u32, last: String },
}
