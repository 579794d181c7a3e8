use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::{Origin, RelationError, RelationKind, Relationship, RuleTarget, Target};
use crate::catalog::Layer;
use crate::cdf::{ObjectEntry, SceneDescription, SpatialRelation};
use crate::Config;

#[derive(Clone, Debug, PartialEq)]
pub struct PlacementStep {
    pub entry: ObjectEntry,
    pub priority: i64,
    /// Explicit relations in declaration order, then implicit ones.
    pub relations: Vec<Relationship>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlacementPlan {
    pub steps: Vec<PlacementStep>,
}

impl PlacementPlan {
    pub fn order(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.entry.id.as_str()).collect()
    }

    /// Entries of one layer in placement order.
    pub fn layer(&self, layer: Layer) -> Vec<&str> {
        self.steps.iter().filter(|s| s.entry.layer == layer).map(|s| s.entry.id.as_str()).collect()
    }

    /// Every explicit relation after orientation, in placement order.
    pub fn explicit_relations(&self) -> Vec<&Relationship> {
        self.steps
            .iter()
            .flat_map(|s| s.relations.iter())
            .filter(|r| r.origin == Origin::Explicit)
            .collect()
    }
}

/// Sort key: layer first, then higher priority, then id.
type Key = (u8, Reverse<i64>, String);

fn kind_of(rel: SpatialRelation) -> RelationKind {
    match rel {
        SpatialRelation::Against => RelationKind::Against,
        SpatialRelation::Beside => RelationKind::Beside,
        SpatialRelation::Face | SpatialRelation::InFrontOf => RelationKind::Face,
        SpatialRelation::AwayFrom => RelationKind::AwayFrom,
        SpatialRelation::On => RelationKind::On,
        SpatialRelation::In => RelationKind::In,
    }
}

/// Orient explicit relations, merge implicit rules and order entries so
/// every relation target is placed before its subject.
pub fn resolve_constraints(cfg: &Config, scene: &SceneDescription) -> Result<PlacementPlan, RelationError> {
    let mut keys: BTreeMap<&str, Key> = BTreeMap::new();
    let mut priority: BTreeMap<&str, i64> = BTreeMap::new();
    let mut entries: BTreeMap<&str, &ObjectEntry> = BTreeMap::new();
    for e in &scene.entries {
        let q = cfg.rules.priority_of(&cfg.catalog, &e.object_type)?;
        keys.insert(&e.id, (e.layer.rank(), Reverse(q), e.id.clone()));
        priority.insert(&e.id, q);
        entries.insert(&e.id, e);
    }

    let mut explicit: Vec<Relationship> = Vec::new();
    for decl in &scene.relations {
        if !keys.contains_key(decl.subject.as_str()) {
            return Err(RelationError::UnknownEntry(decl.subject.clone()));
        }
        if let Target::Entry(t) = &decl.object {
            if !keys.contains_key(t.as_str()) {
                return Err(RelationError::UnknownEntry(t.clone()));
            }
        }
        let kind = kind_of(decl.relation);
        let mut rel = Relationship::explicit(&decl.subject, kind, decl.object.clone());
        if decl.relation == SpatialRelation::InFrontOf {
            // a in front of b: b faces a
            if let Target::Entry(t) = &decl.object {
                rel.subject = t.clone();
                rel.target = Target::Entry(decl.subject.clone());
            }
        }
        if kind.is_symmetric() {
            if let Target::Entry(t) = &rel.target {
                let ks = &keys[rel.subject.as_str()];
                let kt = &keys[t.as_str()];
                // the object placed earlier becomes the target
                if (kt.0, kt.1) > (ks.0, ks.1) {
                    let subject = std::mem::replace(&mut rel.subject, t.clone());
                    rel.target = Target::Entry(subject);
                }
            }
        }
        explicit.push(rel);
    }

    // edges target -> subject
    let mut succ: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut indegree: BTreeMap<&str, usize> = keys.keys().map(|k| (*k, 0)).collect();
    for rel in &explicit {
        let Target::Entry(t) = &rel.target else { continue };
        if *t == rel.subject {
            continue;
        }
        let (s_id, t_id) = (rel.subject.as_str(), t.as_str());
        if entries[t_id].layer.rank() > entries[s_id].layer.rank() {
            return Err(RelationError::LayerOrder {
                subject: rel.subject.clone(),
                target: t.clone(),
            });
        }
        let s_key = keys.get_key_value(s_id).map(|(k, _)| *k).expect("known subject");
        let t_key = keys.get_key_value(t_id).map(|(k, _)| *k).expect("known target");
        if succ.entry(t_key).or_default().insert(s_key) {
            *indegree.get_mut(s_key).expect("known subject") += 1;
        }
    }

    let mut heap: BinaryHeap<Reverse<(&Key, &str)>> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| Reverse((&keys[id], *id)))
        .collect();
    let mut order: Vec<&str> = Vec::with_capacity(keys.len());
    while let Some(Reverse((_, id))) = heap.pop() {
        order.push(id);
        if let Some(next) = succ.get(id) {
            for n in next {
                let d = indegree.get_mut(n).expect("known node");
                *d -= 1;
                if *d == 0 {
                    heap.push(Reverse((&keys[n], *n)));
                }
            }
        }
    }
    if order.len() < keys.len() {
        let placed: BTreeSet<&str> = order.iter().copied().collect();
        let stuck = keys.keys().filter(|k| !placed.contains(*k)).map(|k| k.to_string()).collect();
        return Err(RelationError::Cycle(stuck));
    }

    let mut steps = Vec::with_capacity(order.len());
    let mut placed_types: Vec<(&str, &str)> = Vec::new();
    for id in &order {
        let entry = entries[id];
        let mut relations: Vec<Relationship> = explicit.iter().filter(|r| r.subject == *id).cloned().collect();
        for rule in cfg.rules.implicit_rules_for(&entry.object_type, scene.room_type) {
            let target = match &rule.target {
                RuleTarget::Anchor(a) => Target::Anchor(*a),
                RuleTarget::Type(t) => match placed_types.iter().find(|(_, ty)| ty == t) {
                    Some((tid, _)) => Target::Entry(tid.to_string()),
                    None => continue,
                },
            };
            let duplicate = relations.iter().any(|r| {
                r.kind == rule.relation
                    && match (&rule.target, &r.target) {
                        (RuleTarget::Type(t), Target::Entry(e)) => entries[e.as_str()].object_type == *t,
                        _ => r.target == target,
                    }
            });
            if duplicate {
                continue;
            }
            relations.push(Relationship {
                subject: id.to_string(),
                kind: rule.relation,
                target,
                weight_class: rule.weight_class(),
                origin: Origin::Implicit,
            });
        }
        placed_types.push((id, &entry.object_type));
        steps.push(PlacementStep {
            entry: entry.clone(),
            priority: priority[id],
            relations,
        });
    }
    Ok(PlacementPlan { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::{RelationDecl, RoomType};
    use crate::relations::{Anchor, WeightClass};

    fn entry(id: &str, ty: &str) -> ObjectEntry {
        let cfg = Config::builtin();
        ObjectEntry {
            id: id.into(),
            object_type: ty.into(),
            layer: cfg.catalog.get(ty).unwrap().layer,
            attributes: Default::default(),
        }
    }

    fn decl(s: &str, r: SpatialRelation, o: &str) -> RelationDecl {
        RelationDecl {
            subject: s.into(),
            relation: r,
            object: Target::parse(o),
        }
    }

    fn scene(entries: Vec<ObjectEntry>, relations: Vec<RelationDecl>) -> SceneDescription {
        SceneDescription {
            room_type: RoomType::Bedroom,
            entries,
            relations,
        }
    }

    #[test]
    fn beside_is_oriented_towards_higher_priority() {
        let cfg = Config::builtin();
        let s = scene(
            vec![entry("nightstand_1", "Nightstand"), entry("bed_1", "Bed")],
            vec![decl("bed_1", SpatialRelation::Beside, "nightstand_1")],
        );
        let plan = resolve_constraints(cfg, &s).unwrap();
        assert_eq!(plan.order(), vec!["bed_1", "nightstand_1"]);
        let rel = plan.explicit_relations()[0];
        assert_eq!(rel.subject, "nightstand_1");
        assert_eq!(rel.target, Target::Entry("bed_1".into()));
    }

    #[test]
    fn mutual_beside_at_equal_priority_is_a_cycle() {
        let cfg = Config::builtin();
        let s = scene(
            vec![entry("chair_1", "Chair"), entry("chair_2", "Chair")],
            vec![
                decl("chair_1", SpatialRelation::Beside, "chair_2"),
                decl("chair_2", SpatialRelation::Beside, "chair_1"),
            ],
        );
        assert!(matches!(resolve_constraints(cfg, &s), Err(RelationError::Cycle(_))));
    }

    #[test]
    fn face_constraint_reorders_within_layer() {
        let cfg = Config::builtin();
        // Chair has lower priority than Desk already; force the opposite
        let s = scene(
            vec![entry("desk_1", "Desk"), entry("chair_1", "Chair")],
            vec![decl("desk_1", SpatialRelation::Face, "chair_1")],
        );
        let plan = resolve_constraints(cfg, &s).unwrap();
        assert_eq!(plan.order(), vec!["chair_1", "desk_1"]);
    }

    #[test]
    fn in_front_of_becomes_face() {
        let cfg = Config::builtin();
        let s = scene(
            vec![entry("desk_1", "Desk"), entry("chair_1", "Chair")],
            vec![decl("chair_1", SpatialRelation::InFrontOf, "desk_1")],
        );
        let plan = resolve_constraints(cfg, &s).unwrap();
        let rel = plan.explicit_relations()[0];
        assert_eq!(rel.kind, RelationKind::Face);
        assert_eq!(rel.subject, "desk_1");
        assert_eq!(plan.order(), vec!["chair_1", "desk_1"]);
    }

    #[test]
    fn layer_order_violation() {
        let cfg = Config::builtin();
        let s = scene(
            vec![entry("bed_1", "Bed"), entry("painting_1", "Painting")],
            vec![decl("bed_1", SpatialRelation::Face, "painting_1")],
        );
        assert!(matches!(resolve_constraints(cfg, &s), Err(RelationError::LayerOrder { .. })));
    }

    #[test]
    fn implicit_rules_merge_without_duplicates() {
        let cfg = Config::builtin();
        let s = scene(
            vec![entry("bed_1", "Bed"), entry("desk_1", "Desk"), entry("chair_1", "Chair")],
            vec![decl("bed_1", SpatialRelation::Against, "wall")],
        );
        let plan = resolve_constraints(cfg, &s).unwrap();
        let bed = &plan.steps[0];
        assert_eq!(bed.entry.id, "bed_1");
        assert_eq!(bed.relations.len(), 1);
        assert_eq!(bed.relations[0].weight_class, WeightClass::Explicit);
        let chair = plan.steps.iter().find(|s| s.entry.id == "chair_1").unwrap();
        assert_eq!(chair.relations.len(), 1);
        assert_eq!(chair.relations[0].kind, RelationKind::Face);
        assert_eq!(chair.relations[0].target, Target::Entry("desk_1".into()));
        let desk = plan.steps.iter().find(|s| s.entry.id == "desk_1").unwrap();
        assert_eq!(desk.relations[0].target, Target::Anchor(Anchor::Wall));
    }

    #[test]
    fn furniture_precedes_small_objects() {
        let cfg = Config::builtin();
        let s = scene(
            vec![entry("apple_1", "Apple"), entry("chair_1", "Chair"), entry("bed_1", "Bed")],
            vec![],
        );
        let plan = resolve_constraints(cfg, &s).unwrap();
        assert_eq!(plan.order(), vec!["bed_1", "chair_1", "apple_1"]);
        assert_eq!(plan.layer(Layer::SmallObject), vec!["apple_1"]);
    }
}
