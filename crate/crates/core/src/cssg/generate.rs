use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::layout::clean_deg;
use super::{
    sample_room_structure, GenerationError, Layout, PlacedObject, Provenance, RoomStructure, Scene, POSITION_QUANTUM,
    SCENE_FORMAT,
};
use crate::catalog::{Layer, Mount};
use crate::cdf::{cdf_hash, validate_cdf, CdfDocument, ObjectEntry};
use crate::par::Exec;
use crate::relations::{resolve_constraints, Origin, Relationship, ScoreField, Target};
use crate::util::{derive_seed, round_to, stream_rng};
use crate::{Config, GENERATOR_VERSION};

/// Counters from one generation run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenerationStats {
    /// Scene attempts that were abandoned.
    pub restarts: u32,
    /// Cell draws across all objects and attempts.
    pub draws: u64,
}

struct Job {
    entry: ObjectEntry,
    relations: Vec<Relationship>,
}

/// Draw a room structure for the document's room type, then lay it out.
pub fn generate(cfg: &Config, doc: &CdfDocument, seed: u64) -> Result<Scene, GenerationError> {
    let structure = sample_room_structure(&cfg.rooms, doc.scene.room_type, seed)?;
    generate_scene(cfg, doc, &structure, seed)
}

pub fn generate_scene(cfg: &Config, doc: &CdfDocument, structure: &RoomStructure, seed: u64) -> Result<Scene, GenerationError> {
    generate_scene_with(cfg, doc, structure, seed, Exec::Sequential, &mut GenerationStats::default())
}

/// Lay out `doc` in `structure`. `exec` controls score-field construction;
/// the result does not depend on it.
pub fn generate_scene_with(
    cfg: &Config,
    doc: &CdfDocument,
    structure: &RoomStructure,
    seed: u64,
    exec: Exec,
    stats: &mut GenerationStats,
) -> Result<Scene, GenerationError> {
    let findings = validate_cdf(cfg, doc);
    if !findings.is_empty() {
        let msgs: Vec<String> = findings.into_iter().map(|f| f.message).collect();
        return Err(GenerationError::InvalidDescription(msgs.join("; ")));
    }
    if structure.room_type != doc.scene.room_type {
        return Err(GenerationError::RoomMismatch {
            structure: structure.room_type,
            description: doc.scene.room_type,
        });
    }
    let plan = resolve_constraints(cfg, &doc.scene)?;
    let explicit: Vec<Relationship> = plan.explicit_relations().into_iter().cloned().collect();

    // structural furniture first; matching entries take over its id
    let mut fixed: Vec<PlacedObject> = Vec::new();
    let mut bound: BTreeSet<String> = BTreeSet::new();
    let mut per_type: BTreeMap<String, usize> = BTreeMap::new();
    for f in &structure.fixed {
        let info = cfg.catalog.get(&f.object_type).expect("room catalog types are checked");
        let fp = structure.fixed_footprint(&cfg.catalog, f).expect("room catalog walls are checked");
        let mut entries: Vec<&ObjectEntry> = doc
            .scene
            .entries
            .iter()
            .filter(|e| e.object_type == f.object_type && !bound.contains(&e.id))
            .collect();
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        let id = match entries.first() {
            Some(e) => e.id.clone(),
            None => {
                let n = per_type.entry(f.object_type.clone()).or_insert(0);
                *n += 1;
                format!("fixed_{}_{}", f.object_type.to_lowercase(), n)
            }
        };
        bound.insert(id.clone());
        fixed.push(PlacedObject {
            id,
            object_type: info.name.clone(),
            layer: info.layer,
            x: round_to(fp.center.x, POSITION_QUANTUM),
            y: round_to(fp.center.y, POSITION_QUANTUM),
            rotation: clean_deg(fp.rotation),
            w: info.width,
            d: info.depth,
            support: None,
            fixed: true,
        });
    }

    let mut jobs: Vec<Job> = Vec::new();
    let mut moved: Vec<Relationship> = Vec::new();
    for step in &plan.steps {
        if bound.contains(&step.entry.id) {
            // a fixed subject cannot move; let the other side satisfy it
            for r in &step.relations {
                if r.origin == Origin::Explicit && r.kind.is_symmetric() {
                    if let Target::Entry(t) = &r.target {
                        if !bound.contains(t) {
                            moved.push(Relationship {
                                subject: t.clone(),
                                target: Target::Entry(r.subject.clone()),
                                ..r.clone()
                            });
                        }
                    }
                }
            }
            continue;
        }
        jobs.push(Job {
            entry: step.entry.clone(),
            relations: step.relations.clone(),
        });
    }
    for r in moved {
        if let Some(job) = jobs.iter_mut().find(|j| j.entry.id == r.subject) {
            job.relations.insert(0, r);
        }
    }
    let explicit: Vec<Relationship> = explicit
        .into_iter()
        .map(|r| {
            let flip = bound.contains(&r.subject)
                && r.kind.is_symmetric()
                && r.target.entry().is_some_and(|t| !bound.contains(t));
            if flip {
                let t = r.target.entry().expect("entry target").to_string();
                Relationship {
                    target: Target::Entry(r.subject.clone()),
                    subject: t,
                    ..r
                }
            } else {
                r
            }
        })
        .collect();

    let placement = &cfg.rules.placement;
    let mut last = String::from("no attempt made");
    for restart in 0..placement.scene_restarts {
        let mut layout = Layout::new(cfg, structure);
        for f in &fixed {
            layout.push(f.clone());
        }
        let restart_seed = derive_seed(seed, &[u64::from(restart)]);
        let mut failed = None;
        for job in &jobs {
            match place_with_retries(cfg, &layout, job, &explicit, restart_seed, exec, stats) {
                Ok(obj) => layout.push(obj),
                Err(msg) => {
                    failed = Some(msg);
                    break;
                }
            }
        }
        if failed.is_none() && !explicit.iter().all(|r| layout.satisfied(r)) {
            failed = Some("an explicit relation between fixed objects does not hold".into());
        }
        match failed {
            Some(msg) => {
                stats.restarts += 1;
                last = msg;
            }
            None => {
                return Ok(Scene {
                    format: SCENE_FORMAT.to_string(),
                    room_type: doc.scene.room_type,
                    structure: structure.clone(),
                    objects: layout.into_objects(),
                    relations: explicit,
                    provenance: Provenance {
                        cdf_hash: cdf_hash(doc),
                        seed,
                        generator_version: GENERATOR_VERSION.to_string(),
                        restarts: restart,
                    },
                })
            }
        }
    }
    Err(GenerationError::Exhausted {
        seed,
        restarts: placement.scene_restarts,
        last,
    })
}

fn place_with_retries(
    cfg: &Config,
    layout: &Layout<'_>,
    job: &Job,
    explicit: &[Relationship],
    restart_seed: u64,
    exec: Exec,
    stats: &mut GenerationStats,
) -> Result<PlacedObject, String> {
    let entry = &job.entry;
    let info = cfg.catalog.get(&entry.object_type).expect("validated type");
    let mut rng = stream_rng(restart_seed, &entry.id);
    let support_target = job
        .relations
        .iter()
        .find(|r| r.kind.is_support())
        .and_then(|r| r.target.entry());
    let wants_surface = support_target.is_some() || (info.layer == Layer::SmallObject && info.mount == Mount::Surface);
    let hosts = layout.receptacles();
    let checks: Vec<&Relationship> = explicit
        .iter()
        .filter(|r| r.subject == entry.id || r.target.entry() == Some(entry.id.as_str()))
        .filter(|r| {
            let other = if r.subject == entry.id { r.target.entry() } else { Some(r.subject.as_str()) };
            other.is_none_or(|o| layout.get(o).is_some())
        })
        .collect();

    let mut fields: BTreeMap<Option<String>, ScoreField> = BTreeMap::new();
    let mut last = format!("no feasible cell for {}", entry.id);
    for _ in 0..cfg.rules.placement.object_retries {
        let host: Option<&PlacedObject> = match support_target {
            Some(t) => Some(layout.get(t).ok_or_else(|| format!("supporter {t} of {} is missing", entry.id))?),
            None if wants_surface && !hosts.is_empty() => Some(hosts[rng.random_range(0..hosts.len())]),
            None => None,
        };
        let key = host.map(|h| h.id.clone());
        let field = fields
            .entry(key)
            .or_insert_with(|| layout.field(entry, &job.relations, host, exec));
        stats.draws += 1;
        let idx = match field.sample(&mut rng) {
            Ok(i) => i,
            // only a different host could help
            Err(_) if support_target.is_none() && host.is_some() && hosts.len() > 1 => continue,
            Err(_) => return Err(last),
        };
        let fp = field.cells[idx].footprint;
        let obj = PlacedObject {
            id: entry.id.clone(),
            object_type: entry.object_type.clone(),
            layer: entry.layer,
            x: fp.center.x,
            y: fp.center.y,
            rotation: clean_deg(fp.rotation),
            w: info.width,
            d: info.depth,
            support: host.map(|h| h.id.clone()),
            fixed: false,
        };
        if checks.iter().all(|r| layout.satisfied_with(r, Some(&obj))) {
            return Ok(obj);
        }
        last = format!("{} left a relation unsatisfied", entry.id);
    }
    Err(last)
}
