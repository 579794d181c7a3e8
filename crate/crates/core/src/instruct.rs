//! Template instructions: `[verb] [object] [attribute]`, one per subgoal,
//! plus a one-line summary of the task.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{display_name, Affordance, Catalog};
use crate::cdf::{Predicate, TaskType};
use crate::config::ConfigError;
use crate::cssg::Scene;
use crate::tasking::{Subgoal, SubgoalKind, Trajectory};
use crate::util::stream_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateTable {
    pub version: String,
    pub verbs: BTreeMap<String, Vec<String>>,
}

impl TemplateTable {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let t: TemplateTable = toml::from_str(text).map_err(|e| ConfigError::Parse("templates".into(), e.to_string()))?;
        for (k, v) in &t.verbs {
            if SubgoalKind::parse(k).is_none() {
                return Err(ConfigError::Invalid(format!("templates: unknown subgoal kind {k}")));
            }
            if v.is_empty() {
                return Err(ConfigError::Invalid(format!("templates: {k} has no verbs")));
            }
        }
        Ok(t)
    }

    pub fn verbs(&self, kind: SubgoalKind) -> Option<&[String]> {
        self.verbs.get(kind.as_str()).map(Vec::as_slice).filter(|v| !v.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstructError {
    #[error("no instruction template for {0}")]
    UnknownKind(SubgoalKind),
}

/// What instructions need to know about the objects a subgoal names.
#[derive(Clone, Debug, Default)]
pub struct NameContext {
    types: BTreeMap<String, (String, bool)>,
}

impl NameContext {
    pub fn from_scene(catalog: &Catalog, scene: &Scene) -> Self {
        let types = scene
            .objects
            .iter()
            .map(|o| {
                let container = catalog.get(&o.object_type).is_some_and(|t| t.has(Affordance::Container));
                (o.id.clone(), (o.object_type.clone(), container))
            })
            .collect();
        NameContext { types }
    }

    /// Register an object by hand.
    pub fn insert(&mut self, id: &str, object_type: &str, container: bool) {
        self.types.insert(id.to_string(), (object_type.to_string(), container));
    }

    /// Lowercase display name; unknown ids fall back to their type-like stem.
    pub fn name(&self, id: &str) -> String {
        match self.types.get(id) {
            Some((t, _)) => display_name(t),
            None => display_name(id.split('_').next().unwrap_or(id)),
        }
    }

    fn preposition(&self, id: &str) -> &'static str {
        if self.types.get(id).is_some_and(|(_, c)| *c) {
            "in"
        } else {
            "on"
        }
    }
}

pub fn indefinite(name: &str) -> String {
    let vowel = name.chars().next().is_some_and(|c| "aeiou".contains(c.to_ascii_lowercase()));
    format!("{} {name}", if vowel { "an" } else { "a" })
}

pub fn definite(name: &str) -> String {
    format!("the {name}")
}

/// One instruction for `subgoal`. Navigation targets and receptacles take
/// "the"; manipulated objects take "a"/"an".
pub fn template_instruction<R: Rng + ?Sized>(
    table: &TemplateTable,
    subgoal: &Subgoal,
    names: &NameContext,
    rng: &mut R,
) -> Result<String, InstructError> {
    let verbs = table.verbs(subgoal.kind).ok_or(InstructError::UnknownKind(subgoal.kind))?;
    let verb = &verbs[rng.random_range(0..verbs.len())];
    let target = subgoal.target();
    let name = names.name(target);
    let place = |r: &str| format!("{} {}", names.preposition(r), definite(&names.name(r)));
    let text = match subgoal.kind {
        SubgoalKind::GotoLocation | SubgoalKind::ToggleObject => format!("{verb} {}", definite(&name)),
        SubgoalKind::PickupObject => match subgoal.args.get(1).filter(|r| !r.is_empty()) {
            Some(r) => format!("{verb} {} {}", indefinite(&name), place(r)),
            None => format!("{verb} {}", indefinite(&name)),
        },
        SubgoalKind::PutObject => match subgoal.args.get(1) {
            Some(r) => format!("{verb} {} {}", indefinite(&name), place(r)),
            None => format!("{verb} {}", indefinite(&name)),
        },
        _ => format!("{verb} {}", indefinite(&name)),
    };
    Ok(text)
}

fn plural(name: &str) -> String {
    if name.ends_with('s') || name.ends_with("ch") || name.ends_with("sh") || name.ends_with('x') {
        format!("{name}es")
    } else {
        format!("{name}s")
    }
}

/// Task summary from the template and its goal arguments.
pub fn task_summary(task: &crate::cdf::TaskDefinition, names: &NameContext) -> String {
    let g = &task.goal_conditions;
    let placed: Vec<_> = g.iter().filter(|a| matches!(a.predicate, Predicate::On | Predicate::In)).collect();
    let place = |r: &str| format!("{} {}", names.preposition(r), definite(&names.name(r)));
    let first = |p: Predicate| g.iter().find(|a| a.predicate == p).map(|a| a.subject.as_str());
    let put = |adj: &str| -> Option<String> {
        let a = placed.first()?;
        let noun = if adj.is_empty() {
            indefinite(&names.name(&a.subject))
        } else {
            indefinite(&format!("{adj} {}", names.name(&a.subject)))
        };
        Some(format!("put {noun} {}", place(a.object.as_deref()?)))
    };
    let text = match task.task_type {
        TaskType::PickAndPlace => put(""),
        TaskType::CleanAndPlace => put("clean"),
        TaskType::HeatAndPlace => put("hot"),
        TaskType::CoolAndPlace => put("cold"),
        TaskType::PickTwoAndPlace => placed
            .first()
            .and_then(|a| Some(format!("put two {} {}", plural(&names.name(&a.subject)), place(a.object.as_deref()?)))),
        TaskType::ExamineInLight => first(Predicate::HeldBy).zip(first(Predicate::ToggledOn)).map(|(o, l)| {
            format!("examine {} under {}", indefinite(&names.name(o)), definite(&names.name(l)))
        }),
        TaskType::StackAndPlace => {
            let top = placed.iter().find(|a| placed.iter().any(|b| Some(b.subject.as_str()) == a.object.as_deref()));
            top.and_then(|t| {
                let base = t.object.as_deref()?;
                let dest = placed.iter().find(|b| b.subject == base)?.object.as_deref()?;
                Some(format!(
                    "put {} on {} and place them {}",
                    indefinite(&names.name(&t.subject)),
                    indefinite(&names.name(base)),
                    place(dest)
                ))
            })
        }
    };
    let body = text.unwrap_or_else(|| task.task_type.label().to_lowercase());
    let mut chars = body.chars();
    match chars.next() {
        Some(c) => format!("{}{}.", c.to_uppercase(), chars.as_str()),
        None => String::new(),
    }
}

/// Summary plus one instruction per subgoal, in subgoal order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub summary: String,
    pub steps: Vec<String>,
}

/// Annotate every planned subgoal, attempted or not. Deterministic for a
/// given seed.
pub fn annotate_trajectory(
    table: &TemplateTable,
    traj: &Trajectory,
    names: &NameContext,
    seed: u64,
) -> Result<Annotation, InstructError> {
    let mut rng = stream_rng(seed, "instructions");
    let steps = traj
        .subgoals
        .iter()
        .map(|r| template_instruction(table, &r.subgoal, names, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Annotation {
        summary: task_summary(&traj.task, names),
        steps,
    })
}
