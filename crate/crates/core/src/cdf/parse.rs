use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::validate::{structural_findings, FindingCode};
use super::{CdfDocument, CdfError, HighLevelAction, ObjectEntry, RelationDecl, RoomType, SceneDescription, TaskDefinition};
use crate::catalog::Layer;
use crate::util::sha256_hex;
use crate::Config;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    id: String,
    #[serde(rename = "type")]
    object_type: String,
    layer: Option<Layer>,
    #[serde(default)]
    attributes: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    room_type: RoomType,
    entries: Vec<RawEntry>,
    #[serde(default)]
    relations: Vec<RelationDecl>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    scene: RawScene,
    task: Option<TaskDefinition>,
    #[serde(default)]
    script: Vec<HighLevelAction>,
}

#[derive(Serialize)]
struct OutDoc<'a> {
    scene: &'a SceneDescription,
    #[serde(skip_serializing_if = "Option::is_none")]
    task: &'a Option<TaskDefinition>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    script: &'a Vec<HighLevelAction>,
}

/// Parse and check a document. Type names are unified against the catalog
/// and missing layers are filled in.
pub fn parse_cdf(cfg: &Config, text: &str) -> Result<CdfDocument, CdfError> {
    let raw: RawDoc = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => CdfError::Schema(format!("{e}")),
        _ => CdfError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
    })?;

    let mut entries = Vec::with_capacity(raw.scene.entries.len());
    for e in raw.scene.entries {
        let info = cfg
            .catalog
            .resolve(&e.object_type)
            .ok_or_else(|| CdfError::Schema(format!("entry {}: unknown object type {:?}", e.id, e.object_type)))?;
        if let Some(layer) = e.layer {
            if layer != info.layer {
                return Err(CdfError::Schema(format!(
                    "entry {}: {} belongs to layer {}, not {}",
                    e.id,
                    info.name,
                    info.layer.as_str(),
                    layer.as_str()
                )));
            }
        }
        entries.push(ObjectEntry {
            id: e.id,
            object_type: info.name.clone(),
            layer: info.layer,
            attributes: e.attributes,
        });
    }
    let mut task = raw.task;
    if let Some(t) = task.as_mut() {
        let ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
        let unify = |s: &mut String| {
            if !ids.contains(&s.as_str()) {
                if let Some(name) = cfg.catalog.canonical_name(s) {
                    *s = name.to_string();
                }
            }
        };
        for a in t.initial_state.iter_mut().chain(t.goal_conditions.iter_mut()) {
            unify(&mut a.subject);
            if let Some(o) = a.object.as_mut() {
                unify(o);
            }
        }
    }
    let doc = CdfDocument {
        scene: SceneDescription {
            room_type: raw.scene.room_type,
            entries,
            relations: raw.scene.relations,
        },
        task,
        script: raw.script,
    };
    if let Some(f) = structural_findings(cfg, &doc).into_iter().next() {
        return Err(match f.code {
            FindingCode::DanglingReference | FindingCode::UnknownTaskReference => CdfError::Reference(f.message),
            _ => CdfError::Schema(f.message),
        });
    }
    Ok(doc)
}

/// Canonical JSON: sorted keys, entries sorted by id, two-space indent and a
/// trailing newline.
pub fn serialize_cdf(doc: &CdfDocument) -> String {
    let canon = doc.canonical();
    let out = OutDoc {
        scene: &canon.scene,
        task: &canon.task,
        script: &canon.script,
    };
    // round-trip through Value to get map keys in sorted order
    let value = serde_json::to_value(&out).expect("serializable document");
    crate::util::to_json_pretty(&value)
}

/// Content hash of the canonical serialization.
pub fn cdf_hash(doc: &CdfDocument) -> String {
    sha256_hex(serialize_cdf(doc).as_bytes())
}
