//! Bundled configuration: catalog, relation rules, room candidates,
//! instruction templates and landmark sets.
//!
//! The defaults ship inside the binary; rules and templates can be replaced
//! from files at run time.

use std::path::Path;
use std::sync::OnceLock;

use crate::catalog::Catalog;
use crate::cdf::RoomType;
use crate::cssg::RoomCatalog;
use crate::eval::LandmarkTable;
use crate::instruct::TemplateTable;
use crate::relations::RuleSet;

pub const CATALOG_TOML: &str = include_str!("../config/catalog.toml");
pub const RULES_TOML: &str = include_str!("../config/rules.toml");
pub const ROOMS_TOML: &str = include_str!("../config/rooms.toml");
pub const TEMPLATES_TOML: &str = include_str!("../config/templates.toml");
pub const LANDMARKS_TOML: &str = include_str!("../config/landmarks.toml");

const BEDROOM_CDF: &str = include_str!("../config/cdf/bedroom.cdf.json");
const LIVING_ROOM_CDF: &str = include_str!("../config/cdf/living_room.cdf.json");
const KITCHEN_CDF: &str = include_str!("../config/cdf/kitchen.cdf.json");
const BATHROOM_CDF: &str = include_str!("../config/cdf/bathroom.cdf.json");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse {0} config: {1}")]
    Parse(String, String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug)]
pub struct Config {
    pub catalog: Catalog,
    pub rules: RuleSet,
    pub rooms: RoomCatalog,
    pub templates: TemplateTable,
    pub landmarks: LandmarkTable,
}

impl Config {
    /// The shipped defaults, parsed once.
    pub fn builtin() -> &'static Config {
        static BUILTIN: OnceLock<Config> = OnceLock::new();
        BUILTIN.get_or_init(|| Config::from_sources(RULES_TOML, TEMPLATES_TOML).expect("shipped config is valid"))
    }

    fn from_sources(rules: &str, templates: &str) -> Result<Config, ConfigError> {
        let catalog = Catalog::from_toml(CATALOG_TOML)?;
        let rules = RuleSet::from_toml(rules)?;
        let rooms = RoomCatalog::from_toml(ROOMS_TOML, &catalog)?;
        let templates = TemplateTable::from_toml(templates)?;
        let landmarks = LandmarkTable::from_toml(LANDMARKS_TOML)?;
        Ok(Config {
            catalog,
            rules,
            rooms,
            templates,
            landmarks,
        })
    }

    pub fn with_rules(mut self, rules: RuleSet) -> Config {
        self.rules = rules;
        self
    }

    pub fn with_rules_file(self, path: &Path) -> Result<Config, ConfigError> {
        let text = read(path)?;
        Ok(self.with_rules(RuleSet::from_toml(&text)?))
    }

    pub fn with_templates_file(mut self, path: &Path) -> Result<Config, ConfigError> {
        let text = read(path)?;
        self.templates = TemplateTable::from_toml(&text)?;
        Ok(self)
    }

    /// Text of the shipped default scene description for a room type.
    pub fn default_cdf_text(room_type: RoomType) -> &'static str {
        match room_type {
            RoomType::Bedroom => BEDROOM_CDF,
            RoomType::LivingRoom => LIVING_ROOM_CDF,
            RoomType::Kitchen => KITCHEN_CDF,
            RoomType::Bathroom => BATHROOM_CDF,
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_loads() {
        let cfg = Config::builtin();
        assert_eq!(cfg.rules.weights.structural_implicit, 2.0);
        assert_eq!(cfg.rules.weights.furniture_implicit, 1.0);
        assert_eq!(cfg.rules.placement.resolution, 0.25);
    }

    #[test]
    fn default_cdfs_parse() {
        let cfg = Config::builtin();
        for rt in RoomType::ALL {
            let doc = crate::cdf::parse_cdf(cfg, Config::default_cdf_text(rt)).unwrap();
            assert_eq!(doc.scene.room_type, rt);
            assert!(crate::cdf::validate_cdf(cfg, &doc).is_empty(), "{rt:?}");
        }
    }
}
