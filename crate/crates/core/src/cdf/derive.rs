use std::collections::BTreeMap;

use super::{CdfError, HighLevelAction, ObjectEntry, RelationDecl, RoomType, SceneDescription, SpatialRelation};
use crate::catalog::{Affordance, TypeInfo};
use crate::relations::Target;
use crate::Config;

/// Actions whose arguments name objects the scene must contain.
const OBJECT_ACTIONS: [&str; 4] = ["GotoLocation", "PickupObject", "ToggleObjectOn", "OpenObject"];

fn resolve_arg<'a>(cfg: &'a Config, arg: &str) -> Result<(String, &'a TypeInfo), CdfError> {
    if let Some(info) = cfg.catalog.resolve(arg) {
        return Ok((format!("{}_1", info.name.to_lowercase()), info));
    }
    // instance ids look like `apple_1`
    if let Some((prefix, n)) = arg.rsplit_once('_') {
        if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) {
            if let Some(info) = cfg.catalog.resolve(prefix) {
                return Ok((arg.to_string(), info));
            }
        }
    }
    Err(CdfError::Schema(format!("action argument {arg:?} is not a known object")))
}

/// Reconstruct the scene requirements implied by a high-level action list.
///
/// Objects named by navigation, pickup, toggle and open actions become
/// entries. The receptacle an object is picked up from becomes its initial
/// placement: picking an apple up from the fridge means it starts in the
/// fridge.
pub fn derive_scene_description(
    cfg: &Config,
    actions: &[HighLevelAction],
    room_type: RoomType,
) -> Result<SceneDescription, CdfError> {
    if actions.is_empty() {
        return Err(CdfError::EmptyTrajectory);
    }
    let mut entries: BTreeMap<String, ObjectEntry> = BTreeMap::new();
    let mut relations: Vec<RelationDecl> = Vec::new();
    let mut add = |id: String, info: &TypeInfo| {
        entries.entry(id.clone()).or_insert_with(|| ObjectEntry {
            id,
            object_type: info.name.clone(),
            layer: info.layer,
            attributes: BTreeMap::new(),
        });
    };
    for a in actions {
        if !OBJECT_ACTIONS.contains(&a.action.as_str()) {
            continue;
        }
        let Some(first) = a.args.first() else { continue };
        let (id, info) = resolve_arg(cfg, first)?;
        add(id.clone(), info);
        if a.action == "PickupObject" {
            if let Some(rec) = a.args.get(1) {
                let (rid, rinfo) = resolve_arg(cfg, rec)?;
                add(rid.clone(), rinfo);
                let relation = if rinfo.has(Affordance::Container) {
                    SpatialRelation::In
                } else {
                    SpatialRelation::On
                };
                let decl = RelationDecl {
                    subject: id,
                    relation,
                    object: Target::Entry(rid),
                };
                // first pickup context wins
                if !relations.iter().any(|r| r.subject == decl.subject && r.relation.is_support()) {
                    relations.push(decl);
                }
            }
        }
    }
    Ok(SceneDescription {
        room_type,
        entries: entries.into_values().collect(),
        relations,
    })
}
