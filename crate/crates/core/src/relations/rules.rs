use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Anchor, RelationError, RelationKind, WeightClass};
use crate::catalog::{Catalog, Layer};
use crate::cdf::RoomType;
use crate::config::ConfigError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub structural_implicit: f64,
    pub furniture_implicit: f64,
    pub explicit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgainstProfile {
    pub contact: f64,
    pub slope: f64,
}

/// Zero inside `[near, far]`, linear below with `slope_near`, linear above
/// with `1 / sigma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandProfile {
    pub near: f64,
    pub far: f64,
    pub slope_near: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AwayProfile {
    pub reach: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportProfile {
    pub edge_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profiles {
    pub against: AgainstProfile,
    pub beside: BandProfile,
    pub face: BandProfile,
    pub away_from: AwayProfile,
    pub support: SupportProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatisfactionThresholds {
    pub against_max: f64,
    pub beside_min: f64,
    pub beside_max: f64,
    pub face_cone_deg: f64,
    pub away_from_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementParams {
    pub resolution: f64,
    pub surface_resolution: f64,
    pub angle_step_deg: f64,
    pub object_retries: u32,
    pub scene_restarts: u32,
    pub door_clearance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionParams {
    pub range: f64,
    pub cone_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorityDefaults {
    pub furniture: i64,
    pub small_object: i64,
    pub decoration: i64,
}

/// Target side of an implicit rule: an anchor or an object type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleTarget {
    Anchor(Anchor),
    Type(String),
}

impl Serialize for RuleTarget {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            RuleTarget::Anchor(a) => s.serialize_str(a.as_str()),
            RuleTarget::Type(t) => s.serialize_str(t),
        }
    }
}

impl<'de> Deserialize<'de> for RuleTarget {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Anchor::parse(&s).map_or(RuleTarget::Type(s), RuleTarget::Anchor))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImplicitRule {
    pub subject: String,
    pub relation: RelationKind,
    pub target: RuleTarget,
    /// Restrict the rule to some room types; empty means every room.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rooms: Vec<RoomType>,
}

impl ImplicitRule {
    pub fn weight_class(&self) -> WeightClass {
        match self.target {
            RuleTarget::Anchor(_) => WeightClass::StructuralImplicit,
            RuleTarget::Type(_) => WeightClass::FurnitureImplicit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSet {
    pub version: String,
    pub weights: Weights,
    pub profiles: Profiles,
    pub satisfaction: SatisfactionThresholds,
    pub placement: PlacementParams,
    pub interaction: InteractionParams,
    #[serde(default)]
    pub priority: BTreeMap<String, i64>,
    pub priority_defaults: PriorityDefaults,
    #[serde(default)]
    pub implicit: Vec<ImplicitRule>,
}

impl RuleSet {
    pub fn from_toml(text: &str) -> Result<RuleSet, ConfigError> {
        let rules: RuleSet =
            toml::from_str(text).map_err(|e| ConfigError::Parse("rules".into(), e.to_string()))?;
        rules.check()?;
        Ok(rules)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let w = &self.weights;
        if [w.structural_implicit, w.furniture_implicit, w.explicit]
            .iter()
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(ConfigError::Invalid("relation weights must be positive".into()));
        }
        let p = &self.placement;
        if !(p.resolution > 0.0 && p.surface_resolution > 0.0 && p.angle_step_deg > 0.0) {
            return Err(ConfigError::Invalid("placement resolutions must be positive".into()));
        }
        if p.object_retries == 0 || p.scene_restarts == 0 {
            return Err(ConfigError::Invalid("retry budgets must be at least 1".into()));
        }
        let b = &self.profiles.beside;
        let f = &self.profiles.face;
        if b.near > b.far || f.near > f.far || b.sigma <= 0.0 || f.sigma <= 0.0 {
            return Err(ConfigError::Invalid("band profile must have near <= far and sigma > 0".into()));
        }
        for r in &self.implicit {
            if r.relation.is_support() {
                return Err(ConfigError::Invalid(format!(
                    "implicit rule for {} cannot use a support relation",
                    r.subject
                )));
            }
        }
        Ok(())
    }

    pub fn weight(&self, class: WeightClass) -> f64 {
        match class {
            WeightClass::StructuralImplicit => self.weights.structural_implicit,
            WeightClass::FurnitureImplicit => self.weights.furniture_implicit,
            WeightClass::Explicit => self.weights.explicit,
        }
    }

    /// Every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> RuleSet {
        let mut out = self.clone();
        out.weights.structural_implicit *= c;
        out.weights.furniture_implicit *= c;
        out.weights.explicit *= c;
        out
    }

    /// Placement priority of a type; higher is placed earlier within a layer.
    pub fn priority_of(&self, catalog: &Catalog, type_name: &str) -> Result<i64, RelationError> {
        let info = catalog
            .resolve(type_name)
            .ok_or_else(|| RelationError::UnknownType(type_name.to_string()))?;
        Ok(self.priority.get(&info.name).copied().unwrap_or(match info.layer {
            Layer::Furniture => self.priority_defaults.furniture,
            Layer::SmallObject => self.priority_defaults.small_object,
            Layer::Decoration => self.priority_defaults.decoration,
        }))
    }

    /// Implicit rules whose subject is `type_name`, in table order.
    pub fn implicit_rules_for(&self, type_name: &str, room: RoomType) -> Vec<&ImplicitRule> {
        self.implicit
            .iter()
            .filter(|r| r.subject == type_name && (r.rooms.is_empty() || r.rooms.contains(&room)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Config;

    #[test]
    fn bed_outranks_nightstand_and_chair() {
        let cfg = Config::builtin();
        let q = |t| cfg.rules.priority_of(&cfg.catalog, t).unwrap();
        assert!(q("Bed") > q("Nightstand"));
        assert!(q("Nightstand") > q("Chair"));
        assert!(matches!(
            cfg.rules.priority_of(&cfg.catalog, "Spaceship"),
            Err(RelationError::UnknownType(_))
        ));
    }

    #[test]
    fn implicit_rule_lookup() {
        let rules = &Config::builtin().rules;
        let bed = rules.implicit_rules_for("Bed", RoomType::Bedroom);
        assert_eq!(bed.len(), 1);
        assert_eq!(bed[0].relation, RelationKind::Against);
        assert_eq!(bed[0].target, RuleTarget::Anchor(Anchor::Wall));
        assert_eq!(bed[0].weight_class(), WeightClass::StructuralImplicit);
        let chair = rules.implicit_rules_for("Chair", RoomType::Bedroom);
        assert_eq!(chair[0].weight_class(), WeightClass::FurnitureImplicit);
        assert!(rules.implicit_rules_for("Apple", RoomType::Kitchen).is_empty());
    }

    #[test]
    fn rejects_non_positive_weights() {
        let text = crate::config::RULES_TOML.replace("explicit = 2.5", "explicit = 0.0");
        assert!(RuleSet::from_toml(&text).is_err());
    }
}
