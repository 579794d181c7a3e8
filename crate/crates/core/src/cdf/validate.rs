use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{CdfDocument, Predicate, AGENT};
use crate::relations::{resolve_constraints, Anchor, RelationError, Target};
use crate::Config;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingCode {
    DuplicateId,
    ReservedId,
    UnknownType,
    LayerMismatch,
    DanglingReference,
    SelfRelation,
    SupportOnAnchor,
    EmptyGoal,
    ArityViolation,
    UnknownTaskReference,
    ConflictingPlacement,
    UnresolvableCycle,
    LayerOrder,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub message: String,
}

fn finding(code: FindingCode, message: String) -> Finding {
    Finding { code, message }
}

/// Findings that make a document unusable: bad ids, types and references.
pub(super) fn structural_findings(cfg: &Config, doc: &CdfDocument) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for e in &doc.scene.entries {
        if !ids.insert(e.id.as_str()) {
            out.push(finding(FindingCode::DuplicateId, format!("duplicate entry id {}", e.id)));
        }
        if Anchor::parse(&e.id).is_some() || e.id == AGENT || e.id.is_empty() {
            out.push(finding(FindingCode::ReservedId, format!("entry id {:?} is reserved", e.id)));
        }
        match cfg.catalog.get(&e.object_type) {
            None => out.push(finding(
                FindingCode::UnknownType,
                format!("entry {}: unknown object type {}", e.id, e.object_type),
            )),
            Some(info) if info.layer != e.layer => out.push(finding(
                FindingCode::LayerMismatch,
                format!("entry {}: {} is {}, not {}", e.id, info.name, info.layer.as_str(), e.layer.as_str()),
            )),
            Some(_) => {}
        }
    }
    for r in &doc.scene.relations {
        if !ids.contains(r.subject.as_str()) {
            out.push(finding(
                FindingCode::DanglingReference,
                format!("relation subject {} is not an entry", r.subject),
            ));
        }
        match &r.object {
            Target::Entry(t) if !ids.contains(t.as_str()) => out.push(finding(
                FindingCode::DanglingReference,
                format!("relation target {t} is neither an entry nor a room anchor"),
            )),
            Target::Entry(t) if *t == r.subject => out.push(finding(
                FindingCode::SelfRelation,
                format!("{} is related to itself", r.subject),
            )),
            Target::Anchor(a) if r.relation.is_support() => out.push(finding(
                FindingCode::SupportOnAnchor,
                format!("{} cannot be on or in {}", r.subject, a.as_str()),
            )),
            _ => {}
        }
    }
    if let Some(task) = &doc.task {
        if task.goal_conditions.is_empty() {
            out.push(finding(FindingCode::EmptyGoal, "task has no goal conditions".into()));
        }
        let types: BTreeSet<&str> = doc.scene.entries.iter().map(|e| e.object_type.as_str()).collect();
        let known = |s: &str| ids.contains(s) || types.contains(s);
        for a in task.initial_state.iter().chain(&task.goal_conditions) {
            if a.predicate.is_binary() != a.object.is_some() {
                out.push(finding(
                    FindingCode::ArityViolation,
                    format!("{:?} on {} has the wrong number of arguments", a.predicate, a.subject),
                ));
            }
            if !known(&a.subject) {
                out.push(finding(
                    FindingCode::UnknownTaskReference,
                    format!("task refers to {}, which is not in the scene", a.subject),
                ));
            }
            if let Some(o) = &a.object {
                let ok = if a.predicate == Predicate::HeldBy { o == AGENT } else { known(o) };
                if !ok {
                    out.push(finding(
                        FindingCode::UnknownTaskReference,
                        format!("task refers to {o}, which is not in the scene"),
                    ));
                }
            }
        }
    }
    out
}

/// Every problem with a document. Empty means the document is valid and its
/// relations can be ordered for placement.
pub fn validate_cdf(cfg: &Config, doc: &CdfDocument) -> Vec<Finding> {
    let mut out = structural_findings(cfg, doc);

    let mut supports: BTreeMap<&str, BTreeSet<(String, &str)>> = BTreeMap::new();
    for r in doc.scene.relations.iter().filter(|r| r.relation.is_support()) {
        supports
            .entry(r.subject.as_str())
            .or_default()
            .insert((format!("{:?}", r.relation), r.object.as_str()));
    }
    for (subject, places) in supports {
        if places.len() > 1 {
            let list: Vec<String> = places.iter().map(|(k, o)| format!("{} {o}", k.to_lowercase())).collect();
            out.push(finding(
                FindingCode::ConflictingPlacement,
                format!("{subject} has conflicting placements: {}", list.join(", ")),
            ));
        }
    }

    if out.is_empty() {
        match resolve_constraints(cfg, &doc.scene) {
            Err(RelationError::Cycle(ids)) => out.push(finding(
                FindingCode::UnresolvableCycle,
                format!("unresolvable cycle among {}", ids.join(", ")),
            )),
            Err(RelationError::LayerOrder { subject, target }) => out.push(finding(
                FindingCode::LayerOrder,
                format!("{subject} depends on {target} from a later layer"),
            )),
            Err(e) => out.push(finding(FindingCode::DanglingReference, e.to_string())),
            Ok(_) => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::parse_cdf;

    fn codes(text: &str) -> Vec<FindingCode> {
        let cfg = Config::builtin();
        let doc = parse_cdf(cfg, text).unwrap();
        validate_cdf(cfg, &doc).into_iter().map(|f| f.code).collect()
    }

    #[test]
    fn valid_minimal_is_clean() {
        let text = r#"{"scene":{"room_type":"bedroom","entries":[{"id":"bed_1","type":"Bed"}],"relations":[]}}"#;
        assert!(codes(text).is_empty());
    }

    #[test]
    fn beside_cycle_is_reported() {
        let text = r#"{"scene":{"room_type":"bedroom","entries":[{"id":"a","type":"Chair"},{"id":"b","type":"Chair"}],
          "relations":[{"subject":"a","relation":"beside","object":"b"},{"subject":"b","relation":"beside","object":"a"}]}}"#;
        assert_eq!(codes(text), vec![FindingCode::UnresolvableCycle]);
    }

    #[test]
    fn apple_in_fridge_and_on_countertop_conflicts() {
        let text = r#"{"scene":{"room_type":"kitchen","entries":[{"id":"apple_1","type":"Apple"},
          {"id":"fridge_1","type":"Fridge"},{"id":"countertop_1","type":"CounterTop"}],
          "relations":[{"subject":"apple_1","relation":"in","object":"fridge_1"},
                       {"subject":"apple_1","relation":"on","object":"countertop_1"}]}}"#;
        assert_eq!(codes(text), vec![FindingCode::ConflictingPlacement]);
    }
}
