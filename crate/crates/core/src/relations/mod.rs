//! Relationship kinds, score profiles, implicit rules, priority ordering and
//! score-field construction.

mod field;
mod profile;
mod resolve;
mod rules;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use field::{combined_field, Candidate, FieldCell, FieldSpec, FieldTerm, ScoreField};
pub use profile::{score_at, CornerGeom, TargetGeometry, WallSeg};
pub use resolve::{resolve_constraints, PlacementPlan, PlacementStep};
pub use rules::{
    AgainstProfile, AwayProfile, BandProfile, ImplicitRule, InteractionParams, PlacementParams,
    Profiles, RuleSet, RuleTarget, SatisfactionThresholds, SupportProfile, Weights,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Against,
    Beside,
    Face,
    AwayFrom,
    On,
    In,
}

impl RelationKind {
    /// Symmetric kinds may be re-oriented when resolving placement order.
    pub fn is_symmetric(self) -> bool {
        matches!(self, RelationKind::Beside | RelationKind::AwayFrom)
    }

    pub fn is_support(self) -> bool {
        matches!(self, RelationKind::On | RelationKind::In)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Against => "against",
            RelationKind::Beside => "beside",
            RelationKind::Face => "face",
            RelationKind::AwayFrom => "away_from",
            RelationKind::On => "on",
            RelationKind::In => "in",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightClass {
    StructuralImplicit,
    FurnitureImplicit,
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Explicit,
    Implicit,
}

/// Room-structure anchor a relation can point at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Anchor {
    Wall,
    WallCorner,
    Window,
    Door,
}

impl Anchor {
    pub fn as_str(self) -> &'static str {
        match self {
            Anchor::Wall => "wall",
            Anchor::WallCorner => "wall_corner",
            Anchor::Window => "window",
            Anchor::Door => "door",
        }
    }

    pub fn parse(s: &str) -> Option<Anchor> {
        match s {
            "wall" | "wall_border" => Some(Anchor::Wall),
            "wall_corner" => Some(Anchor::WallCorner),
            "window" => Some(Anchor::Window),
            "door" => Some(Anchor::Door),
            _ => None,
        }
    }
}

/// Target of a relation: a structural anchor or another entry by id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Anchor(Anchor),
    Entry(String),
}

impl Target {
    pub fn parse(s: &str) -> Target {
        Anchor::parse(s).map_or_else(|| Target::Entry(s.to_string()), Target::Anchor)
    }

    pub fn as_str(&self) -> &str {
        match self {
            Target::Anchor(a) => a.as_str(),
            Target::Entry(id) => id,
        }
    }

    pub fn entry(&self) -> Option<&str> {
        match self {
            Target::Entry(id) => Some(id),
            Target::Anchor(_) => None,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Target::parse(&s))
    }
}

/// A typed, weighted relation `rel(subject, target)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relationship {
    pub subject: String,
    pub kind: RelationKind,
    pub target: Target,
    pub weight_class: WeightClass,
    pub origin: Origin,
}

impl Relationship {
    pub fn explicit(subject: &str, kind: RelationKind, target: Target) -> Self {
        Relationship {
            subject: subject.to_string(),
            kind,
            target,
            weight_class: WeightClass::Explicit,
            origin: Origin::Explicit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RelationError {
    #[error("unknown object type {0:?}")]
    UnknownType(String),
    #[error("unknown entry {0:?}")]
    UnknownEntry(String),
    #[error("unresolvable cycle among {0:?}")]
    Cycle(Vec<String>),
    #[error("{subject} would have to be placed after {target}, which belongs to a later layer")]
    LayerOrder { subject: String, target: String },
    #[error("no feasible cell")]
    NoFeasibleCell,
}
