//! The partial product update `M{A}`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::actions::{ActionModel, InputClass};
use crate::agents::{AgentSet, Atom};
use crate::formula::Evaluator;
use crate::model::{ModelError, PartialEpistemicModel, PerRelation, WorldKey};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UpdateError {
    #[error("the precondition of action {action} is false at {world}")]
    PreconditionFalse { action: WorldKey, world: WorldKey },
    #[error("agents {missing} are alive in action {action} but dead at {world}")]
    DeadInWorld { action: WorldKey, world: WorldKey, missing: AgentSet },
    #[error("no action applies at any world, so the update has no worlds")]
    EmptyUpdate,
    #[error("model has {model} agents but the action model has {actions}")]
    AgentMismatch { model: usize, actions: usize },
    #[error("{0}")]
    Model(#[from] ModelError),
}

/// A world `(⌈X⌉^pre_t, t)` of an update.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UpdateWorld {
    pub class: InputClass,
    pub action: usize,
}

/// `⌈X⌉^pre_t = { Y | X ∼_Alive(t) Y and M, Y ⊨ pre(t) }`.
pub fn pre_class(
    m: &PartialEpistemicModel,
    a: &ActionModel,
    t: usize,
    x: usize,
) -> Result<InputClass, UpdateError> {
    if m.n() != a.n() {
        return Err(UpdateError::AgentMismatch { model: m.n(), actions: a.n() });
    }
    if x >= m.len() {
        return Err(ModelError::WorldIndex { index: x, len: m.len() }.into());
    }
    let live = a.alive(t);
    if !live.is_subset(m.alive(x)) {
        return Err(UpdateError::DeadInWorld {
            action: a.key(t).clone(),
            world: m.key(x).clone(),
            missing: live.difference(m.alive(x)),
        });
    }
    let mut ev = Evaluator::new(m, a.pre(t));
    if !ev.holds(x) {
        return Err(UpdateError::PreconditionFalse { action: a.key(t).clone(), world: m.key(x).clone() });
    }
    let members: Vec<usize> = m.saturation(live, x).into_iter().filter(|&y| ev.holds(y)).collect();
    Ok(InputClass::new(members).expect("x is in its own class"))
}

/// An update model together with the class and action behind each world.
#[derive(Clone, Debug)]
pub struct UpdateModel {
    pub model: PartialEpistemicModel,
    pub worlds: Vec<UpdateWorld>,
}

impl UpdateModel {
    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn class(&self, w: usize) -> &InputClass {
        &self.worlds[w].class
    }

    pub fn action(&self, w: usize) -> usize {
        self.worlds[w].action
    }

    /// The world with this class and action, if it exists.
    pub fn find(&self, class: &InputClass, action: usize) -> Option<usize> {
        self.worlds.iter().position(|u| u.action == action && u.class == *class)
    }

    /// The world of `action` whose class contains input world `x`.
    pub fn world_of(&self, x: usize, action: usize) -> Option<usize> {
        self.worlds.iter().position(|u| u.action == action && u.class.contains(x))
    }
}

/// World key `[k1;k2;...]@action`.
pub fn world_key(m: &PartialEpistemicModel, a: &ActionModel, u: &UpdateWorld) -> WorldKey {
    WorldKey::new(format!("{}@{}", u.class.key(m.keys()), a.key(u.action)))
}

/// Per action, the classes `⌈X⌉^pre_t` over admissible `X`, in order of least member.
fn classes(m: &PartialEpistemicModel, a: &ActionModel) -> Vec<Vec<InputClass>> {
    a.actions()
        .into_par_iter()
        .map(|t| {
            let live = a.alive(t);
            let mut ev = Evaluator::new(m, a.pre(t));
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
            for x in m.worlds() {
                if !live.is_subset(m.alive(x)) || !ev.holds(x) {
                    continue;
                }
                // ∼_Alive(t) is an equivalence on worlds where Alive(t) survives,
                // so the tuple of blocks names the class
                let key: Vec<u32> = live.iter().map(|b| m.relation(b).block_of(x).expect("alive")).collect();
                let g = *seen.entry(key).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[g].push(x);
            }
            groups.into_iter().map(|g| InputClass::new(g).expect("nonempty group")).collect()
        })
        .collect()
}

/// `M{A}`: worlds `(⌈X⌉^pre_t, t)`, `(C,t) ∼_a (D,s)` iff `X ∼_a Y` and
/// `t ∼_a s`, labels intersected over the class.
pub fn product_update(m: &PartialEpistemicModel, a: &ActionModel) -> Result<UpdateModel, UpdateError> {
    if m.n() != a.n() {
        return Err(UpdateError::AgentMismatch { model: m.n(), actions: a.n() });
    }
    let worlds: Vec<UpdateWorld> = classes(m, a)
        .into_iter()
        .enumerate()
        .flat_map(|(t, cs)| cs.into_iter().map(move |class| UpdateWorld { class, action: t }))
        .collect();
    if worlds.is_empty() {
        return Err(UpdateError::EmptyUpdate);
    }
    let rel = (0..m.n())
        .into_par_iter()
        .map(|ag| {
            PerRelation::from_keys(worlds.iter().map(|u| {
                let x = u.class.members()[0];
                Some((m.relation(ag).block_of(x)?, a.frame().relation(ag).block_of(u.action)?))
            }))
        })
        .collect();
    let labels = worlds.iter().map(|u| intersect_labels(m, &u.class)).collect();
    let keys = worlds.iter().map(|u| world_key(m, a, u)).collect();
    let model = PartialEpistemicModel::new(m.n(), keys, rel, labels)?;
    Ok(UpdateModel { model, worlds })
}

fn intersect_labels(m: &PartialEpistemicModel, class: &InputClass) -> Vec<Atom> {
    let (first, rest) = class.members().split_first().expect("nonempty class");
    m.labels(*first).iter().filter(|p| rest.iter().all(|&y| m.has_atom(y, p))).copied().collect()
}

/// Size summary of an update.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WorldCountReport {
    pub total: usize,
    /// Action key → number of worlds built on it, in action order.
    pub per_action: Vec<(String, usize)>,
    /// Number of live agents → number of worlds.
    pub alive_histogram: BTreeMap<usize, usize>,
}

pub fn world_count_report(m: &PartialEpistemicModel, a: &ActionModel) -> WorldCountReport {
    let cs = classes(m, a);
    let per_action = cs.iter().enumerate().map(|(t, c)| (a.key(t).to_string(), c.len())).collect();
    let mut alive_histogram = BTreeMap::new();
    for (t, c) in cs.iter().enumerate() {
        *alive_histogram.entry(a.alive(t).len()).or_insert(0) += c.len();
    }
    alive_histogram.retain(|_, v| *v > 0);
    WorldCountReport { total: cs.iter().map(Vec::len).sum(), per_action, alive_histogram }
}
