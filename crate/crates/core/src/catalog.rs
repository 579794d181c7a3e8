//! Canonical object-type catalog and name unification.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Furniture,
    SmallObject,
    Decoration,
}

impl Layer {
    /// Placement stratum: furniture first, decorations last.
    pub fn rank(self) -> u8 {
        match self {
            Layer::Furniture => 0,
            Layer::SmallObject => 1,
            Layer::Decoration => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Furniture => "furniture",
            Layer::SmallObject => "small_object",
            Layer::Decoration => "decoration",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mount {
    Floor,
    Wall,
    Surface,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Affordance {
    Pickupable,
    Surface,
    Container,
    Stackable,
    Openable,
    Toggleable,
    Sliceable,
    Slicer,
    Heatable,
    Coolable,
    Cleanable,
    Light,
    HeatSource,
    CoolSource,
    CleanSource,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeInfo {
    pub name: String,
    pub layer: Layer,
    pub width: f64,
    pub depth: f64,
    pub mount: Mount,
    pub blocking: bool,
    pub affordances: BTreeSet<Affordance>,
}

impl TypeInfo {
    pub fn has(&self, a: Affordance) -> bool {
        self.affordances.contains(&a)
    }

    /// Can hold other objects on or in it.
    pub fn is_receptacle(&self) -> bool {
        self.has(Affordance::Surface) || self.has(Affordance::Container)
    }

    pub fn display_name(&self) -> String {
        display_name(&self.name)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawType {
    layer: Layer,
    size: [f64; 2],
    mount: Option<Mount>,
    blocking: Option<bool>,
    #[serde(default)]
    affordances: Vec<Affordance>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    version: String,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
    types: BTreeMap<String, RawType>,
}

#[derive(Clone, Debug)]
pub struct Catalog {
    pub version: String,
    types: BTreeMap<String, TypeInfo>,
    /// normalized name -> canonical type name
    lookup: BTreeMap<String, String>,
}

impl Catalog {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawCatalog =
            toml::from_str(text).map_err(|e| ConfigError::Parse("catalog".into(), e.to_string()))?;
        let mut types = BTreeMap::new();
        let mut lookup = BTreeMap::new();
        for (name, t) in raw.types {
            if !(t.size[0] > 0.0 && t.size[1] > 0.0) {
                return Err(ConfigError::Invalid(format!("type {name} has a non-positive size")));
            }
            let mount = t.mount.unwrap_or(match t.layer {
                Layer::SmallObject => Mount::Surface,
                _ => Mount::Floor,
            });
            let info = TypeInfo {
                name: name.clone(),
                layer: t.layer,
                width: t.size[0],
                depth: t.size[1],
                mount,
                blocking: t.blocking.unwrap_or(mount == Mount::Floor),
                affordances: t.affordances.into_iter().collect(),
            };
            lookup.insert(normalize_key(&name), name.clone());
            types.insert(name, info);
        }
        for (alias, target) in raw.aliases {
            if !types.contains_key(&target) {
                return Err(ConfigError::Invalid(format!(
                    "alias {alias:?} points at unknown type {target}"
                )));
            }
            lookup.insert(normalize_key(&alias), target);
        }
        Ok(Catalog {
            version: raw.version,
            types,
            lookup,
        })
    }

    /// Exact lookup by canonical name.
    pub fn get(&self, name: &str) -> Option<&TypeInfo> {
        self.types.get(name)
    }

    /// Lookup after name unification (case, spacing and aliases such as
    /// "picture" for Painting).
    pub fn resolve(&self, name: &str) -> Option<&TypeInfo> {
        self.types
            .get(name)
            .or_else(|| self.lookup.get(&normalize_key(name)).and_then(|n| self.types.get(n)))
    }

    pub fn canonical_name(&self, name: &str) -> Option<&str> {
        self.resolve(name).map(|t| t.name.as_str())
    }

    pub fn types(&self) -> impl Iterator<Item = &TypeInfo> {
        self.types.values()
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

fn normalize_key(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// "DeskLamp" -> "desk lamp", "TVStand" -> "tv stand".
pub fn display_name(type_name: &str) -> String {
    let chars: Vec<char> = type_name.chars().collect();
    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if i > 0 && c.is_uppercase() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || (prev.is_uppercase() && next_lower) {
                out.push(' ');
            }
        }
        out.extend(c.to_lowercase());
    }
    out
}
