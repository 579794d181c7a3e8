use std::collections::{BTreeMap, BTreeSet};

use super::{CdfError, ObjectEntry, RelationDecl, SceneDescription, SpatialRelation};
use crate::catalog::Layer;
use crate::relations::Target;

/// Combine several scene descriptions, keeping everything they share.
///
/// Furniture and every non-placement relation are unioned. A small object
/// placed differently across inputs keeps the placement used by the most
/// inputs, ties going to the lexicographically smallest supporter id.
/// Output entries are sorted by id and relations sorted, so the result does
/// not depend on input order.
pub fn merge_scene_descriptions(descs: &[SceneDescription]) -> Result<SceneDescription, CdfError> {
    let first = descs.first().ok_or_else(|| CdfError::Merge("nothing to merge".into()))?;
    if let Some(d) = descs.iter().find(|d| d.room_type != first.room_type) {
        return Err(CdfError::Merge(format!(
            "room types differ: {} and {}",
            first.room_type, d.room_type
        )));
    }

    let mut entries: BTreeMap<String, ObjectEntry> = BTreeMap::new();
    let mut attr_votes: BTreeMap<(String, String), BTreeMap<String, usize>> = BTreeMap::new();
    for d in descs {
        for e in &d.entries {
            match entries.get(&e.id) {
                Some(prev) if prev.object_type != e.object_type => {
                    return Err(CdfError::Merge(format!(
                        "entry {} is a {} in one input and a {} in another",
                        e.id, prev.object_type, e.object_type
                    )));
                }
                Some(_) => {}
                None => {
                    entries.insert(
                        e.id.clone(),
                        ObjectEntry {
                            attributes: BTreeMap::new(),
                            ..e.clone()
                        },
                    );
                }
            }
            for (k, v) in &e.attributes {
                *attr_votes
                    .entry((e.id.clone(), k.clone()))
                    .or_default()
                    .entry(v.clone())
                    .or_default() += 1;
            }
        }
    }
    for ((id, key), votes) in attr_votes {
        // BTreeMap iteration is ascending, so max_by keeps the smallest on ties
        let best = votes
            .into_iter()
            .fold(None::<(String, usize)>, |acc, (v, n)| match acc {
                Some((_, m)) if m >= n => acc,
                _ => Some((v, n)),
            })
            .map(|(v, _)| v)
            .expect("at least one vote");
        entries.get_mut(&id).expect("entry exists").attributes.insert(key, best);
    }

    let mut relations: BTreeSet<RelationDecl> = BTreeSet::new();
    let mut placement_votes: BTreeMap<String, BTreeMap<(String, SpatialRelation), usize>> = BTreeMap::new();
    for d in descs {
        let own: BTreeSet<&RelationDecl> = d.relations.iter().collect();
        for r in own {
            let subject_layer = entries.get(&r.subject).map(|e| e.layer);
            if r.relation.is_support() && subject_layer != Some(Layer::Furniture) {
                *placement_votes
                    .entry(r.subject.clone())
                    .or_default()
                    .entry((r.object.as_str().to_string(), r.relation))
                    .or_default() += 1;
            } else {
                relations.insert(r.clone());
            }
        }
    }
    for (subject, votes) in placement_votes {
        let ((object, relation), _) = votes
            .into_iter()
            .fold(None::<((String, SpatialRelation), usize)>, |acc, (k, n)| match acc {
                Some((_, m)) if m >= n => acc,
                _ => Some((k, n)),
            })
            .expect("at least one vote");
        relations.insert(RelationDecl {
            subject,
            relation,
            object: Target::parse(&object),
        });
    }

    // furniture required against two different targets cannot be honored
    let mut against: BTreeMap<&str, BTreeSet<&Target>> = BTreeMap::new();
    for r in relations.iter().filter(|r| r.relation == SpatialRelation::Against) {
        if entries.get(&r.subject).map(|e| e.layer) == Some(Layer::Furniture) {
            against.entry(r.subject.as_str()).or_default().insert(&r.object);
        }
    }
    if let Some((subject, targets)) = against.iter().find(|(_, t)| t.len() > 1) {
        let names: Vec<&str> = targets.iter().map(|t| t.as_str()).collect();
        return Err(CdfError::Merge(format!(
            "{subject} must be against {} at the same time",
            names.join(" and ")
        )));
    }
    // a furniture piece placed on two different supporters is also irreconcilable
    let mut furniture_support: BTreeMap<&str, usize> = BTreeMap::new();
    for r in relations.iter().filter(|r| r.relation.is_support()) {
        *furniture_support.entry(r.subject.as_str()).or_default() += 1;
    }
    if let Some((subject, _)) = furniture_support.iter().find(|(_, n)| **n > 1) {
        return Err(CdfError::Merge(format!("{subject} has conflicting supporters")));
    }

    Ok(SceneDescription {
        room_type: first.room_type,
        entries: entries.into_values().collect(),
        relations: relations.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::RoomType;

    fn entry(id: &str, ty: &str, layer: Layer) -> ObjectEntry {
        ObjectEntry {
            id: id.into(),
            object_type: ty.into(),
            layer,
            attributes: BTreeMap::new(),
        }
    }

    fn kitchen(apple_rel: SpatialRelation, target: &str) -> SceneDescription {
        SceneDescription {
            room_type: RoomType::Kitchen,
            entries: vec![
                entry("apple_1", "Apple", Layer::SmallObject),
                entry("countertop_1", "CounterTop", Layer::Furniture),
                entry("fridge_1", "Fridge", Layer::Furniture),
            ],
            relations: vec![RelationDecl {
                subject: "apple_1".into(),
                relation: apple_rel,
                object: Target::parse(target),
            }],
        }
    }

    #[test]
    fn single_input_identity() {
        let d = kitchen(SpatialRelation::On, "countertop_1");
        assert_eq!(merge_scene_descriptions(std::slice::from_ref(&d)).unwrap(), d);
    }

    #[test]
    fn majority_placement_wins() {
        let a = kitchen(SpatialRelation::On, "countertop_1");
        let b = kitchen(SpatialRelation::In, "fridge_1");
        let m = merge_scene_descriptions(&[a.clone(), b.clone(), a.clone()]).unwrap();
        assert_eq!(m.relations, a.relations);
        // two-way tie: smallest supporter id
        let t = merge_scene_descriptions(&[b, a.clone()]).unwrap();
        assert_eq!(t.relations, a.relations);
    }

    #[test]
    fn disjoint_inputs_are_unioned() {
        let a = kitchen(SpatialRelation::On, "countertop_1");
        let b = SceneDescription {
            room_type: RoomType::Kitchen,
            entries: vec![entry("stool_1", "Stool", Layer::Furniture), entry("diningtable_1", "DiningTable", Layer::Furniture)],
            relations: vec![RelationDecl {
                subject: "stool_1".into(),
                relation: SpatialRelation::Face,
                object: Target::parse("diningtable_1"),
            }],
        };
        let m = merge_scene_descriptions(&[a, b]).unwrap();
        assert_eq!(m.entries.len(), 5);
        assert_eq!(m.relations.len(), 2);
    }

    #[test]
    fn furniture_against_two_targets_is_an_error() {
        let mk = |target: &str| SceneDescription {
            room_type: RoomType::Bedroom,
            entries: vec![entry("bed_1", "Bed", Layer::Furniture), entry("desk_1", "Desk", Layer::Furniture)],
            relations: vec![RelationDecl {
                subject: "bed_1".into(),
                relation: SpatialRelation::Against,
                object: Target::parse(target),
            }],
        };
        assert!(matches!(
            merge_scene_descriptions(&[mk("wall"), mk("desk_1")]),
            Err(CdfError::Merge(_))
        ));
    }

    #[test]
    fn mixed_room_types_are_rejected() {
        let a = kitchen(SpatialRelation::On, "countertop_1");
        let mut b = a.clone();
        b.room_type = RoomType::Bedroom;
        assert!(merge_scene_descriptions(&[a, b]).is_err());
    }
}
