//! Action models with preconditions, failure patterns of one synchronous
//! round, and the generators for the consensus task and message passing.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::agents::{Agent, AgentSet, Value};
use crate::complex::SimplicialModel;
use crate::formula::Formula;
use crate::model::{ModelError, PartialEpistemicModel, PerRelation, WorldKey};

/// Actions, a PER per agent over them, and a precondition for each action.
#[derive(Clone, Debug)]
pub struct ActionModel {
    frame: PartialEpistemicModel,
    pre: Vec<Formula>,
}

impl ActionModel {
    pub fn new(
        n: usize,
        keys: Vec<WorldKey>,
        rel: Vec<PerRelation>,
        pre: Vec<Formula>,
    ) -> Result<Self, ModelError> {
        let labels = vec![Vec::new(); keys.len()];
        let frame = PartialEpistemicModel::new(n, keys, rel, labels)?;
        ActionModel::from_frame(frame, pre)
    }

    /// Uses the worlds and relations of `frame` as actions; its labels are ignored.
    pub fn from_frame(frame: PartialEpistemicModel, pre: Vec<Formula>) -> Result<Self, ModelError> {
        if pre.len() != frame.len() {
            return Err(ModelError::Shape { what: "preconditions", expected: frame.len(), got: pre.len() });
        }
        Ok(ActionModel { frame, pre })
    }

    /// The action frame, as a model with empty labels.
    pub fn frame(&self) -> &PartialEpistemicModel {
        &self.frame
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    pub fn actions(&self) -> std::ops::Range<usize> {
        self.frame.worlds()
    }

    pub fn key(&self, t: usize) -> &WorldKey {
        self.frame.key(t)
    }

    pub fn action(&self, key: &str) -> Result<usize, ModelError> {
        self.frame.world(key)
    }

    pub fn pre(&self, t: usize) -> &Formula {
        &self.pre[t]
    }

    pub fn pres(&self) -> &[Formula] {
        &self.pre
    }

    pub fn alive(&self, t: usize) -> AgentSet {
        self.frame.alive(t)
    }

    pub fn related(&self, a: Agent, t: usize, s: usize) -> bool {
        self.frame.related(a, t, s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("agent {agent} out of range for {n} agents")]
    AgentRange { agent: Agent, n: usize },
    #[error("agent {0} is listed as failing to reach itself")]
    SelfDelivery(Agent),
    #[error("dead agent {0} needs at least one receiver")]
    NoReceivers(Agent),
    #[error("agent {receiver} receives a failure from {dead} but is dead itself")]
    DeadReceiver { dead: Agent, receiver: Agent },
    #[error("a failure pattern must leave some agent alive")]
    AllDead,
    #[error("malformed failure pattern `{0}`")]
    Syntax(String),
}

/// A rank-at-most-1 poset over the agents, kept as its strict part: each dead
/// agent maps to the live agents that missed its message.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FailurePattern {
    n: usize,
    fails: BTreeMap<Agent, AgentSet>,
}

impl FailurePattern {
    pub fn new(n: usize, fails: impl IntoIterator<Item = (Agent, AgentSet)>) -> Result<Self, PatternError> {
        let mut map: BTreeMap<Agent, AgentSet> = BTreeMap::new();
        for (d, rs) in fails {
            let e = map.entry(d).or_default();
            *e = e.union(rs);
        }
        let dead: AgentSet = map.keys().copied().collect();
        for (&d, &rs) in &map {
            if d >= n {
                return Err(PatternError::AgentRange { agent: d, n });
            }
            if let Some(r) = rs.iter().find(|&r| r >= n) {
                return Err(PatternError::AgentRange { agent: r, n });
            }
            if rs.contains(d) {
                return Err(PatternError::SelfDelivery(d));
            }
            if rs.is_empty() {
                return Err(PatternError::NoReceivers(d));
            }
            if let Some(r) = rs.intersection(dead).iter().next() {
                return Err(PatternError::DeadReceiver { dead: d, receiver: r });
            }
        }
        if n > 0 && dead == AgentSet::full(n) {
            return Err(PatternError::AllDead);
        }
        Ok(FailurePattern { n, fails: map })
    }

    /// The pattern without failures.
    pub fn none(n: usize) -> Self {
        FailurePattern { n, fails: BTreeMap::new() }
    }

    /// Parses `{a<b, a<c, ...}`; `{}` is the failure-free pattern.
    pub fn parse(n: usize, text: &str) -> Result<Self, PatternError> {
        let syntax = || PatternError::Syntax(text.to_string());
        let inner = text.trim().strip_prefix('{').and_then(|s| s.strip_suffix('}')).ok_or_else(syntax)?;
        let mut pairs = Vec::new();
        for item in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (d, r) = item.split_once('<').ok_or_else(syntax)?;
            let d: Agent = d.trim().parse().map_err(|_| syntax())?;
            let r: Agent = r.trim().parse().map_err(|_| syntax())?;
            if r >= crate::agents::MAX_AGENTS || d >= crate::agents::MAX_AGENTS {
                return Err(PatternError::AgentRange { agent: d.max(r), n });
            }
            pairs.push((d, AgentSet::singleton(r)));
        }
        FailurePattern::new(n, pairs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dead agent → receivers it failed to reach.
    pub fn fails(&self) -> &BTreeMap<Agent, AgentSet> {
        &self.fails
    }

    /// `lo(t)`: the agents that crash.
    pub fn dead(&self) -> AgentSet {
        self.fails.keys().copied().collect()
    }

    /// `Ag ∖ lo(t)`.
    pub fn alive(&self) -> AgentSet {
        AgentSet::full(self.n).difference(self.dead())
    }

    /// `SendFail(t, b, a)`: the message from `b` to `a` was lost.
    pub fn send_fail(&self, b: Agent, a: Agent) -> bool {
        self.fails.get(&b).is_some_and(|rs| rs.contains(a))
    }

    /// `{ b | SendFail(t, b, a) }`.
    pub fn missed_by(&self, a: Agent) -> AgentSet {
        self.fails.iter().filter(|(_, rs)| rs.contains(a)).map(|(&b, _)| b).collect()
    }

    /// Agents whose value reaches at least one live agent; the others are
    /// exactly the dead agents that failed toward everybody alive.
    pub fn visible(&self) -> AgentSet {
        let alive = self.alive();
        (0..self.n).filter(|b| self.fails.get(b).is_none_or(|rs| *rs != alive)).collect()
    }

    fn sort_key(&self) -> (usize, Vec<(Agent, Vec<Agent>)>) {
        (self.fails.len(), self.fails.iter().map(|(&d, rs)| (d, rs.iter().collect())).collect())
    }
}

impl fmt::Display for FailurePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = self
            .fails
            .iter()
            .flat_map(|(&d, rs)| rs.iter().map(move |r| format!("{d}<{r}")))
            .collect();
        write!(f, "{{{}}}", pairs.join(", "))
    }
}

/// All failure patterns over `n` agents, ordered by number of dead agents and
/// then by the failure map. The failure-free pattern comes first.
pub fn failure_patterns(n: usize) -> Vec<FailurePattern> {
    let full = AgentSet::full(n);
    let mut out = Vec::new();
    for d in 0..(1u64 << n) - 1 {
        let dead = AgentSet::from_bits(d);
        let live = full.difference(dead);
        let live_bits: Vec<Agent> = live.iter().collect();
        // nonempty subsets of the live agents, as receiver sets
        let receivers: Vec<AgentSet> = (1u64..(1u64 << live_bits.len()))
            .map(|m| live_bits.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &a)| a).collect())
            .collect();
        let mut partial: Vec<Vec<(Agent, AgentSet)>> = vec![Vec::new()];
        for b in dead.iter() {
            partial = partial
                .into_iter()
                .flat_map(|p| {
                    receivers.iter().map(move |&rs| {
                        let mut q = p.clone();
                        q.push((b, rs));
                        q
                    })
                })
                .collect();
        }
        out.extend(partial.into_iter().map(|p| FailurePattern { n, fails: p.into_iter().collect() }));
    }
    out.sort_by_key(FailurePattern::sort_key);
    out
}

/// A nonempty sorted set of input-world indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputClass(Vec<usize>);

impl InputClass {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Option<Self> {
        let mut m: Vec<usize> = members.into_iter().collect();
        m.sort_unstable();
        m.dedup();
        (!m.is_empty()).then_some(InputClass(m))
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, w: usize) -> bool {
        self.0.binary_search(&w).is_ok()
    }

    pub fn is_subset(&self, other: &InputClass) -> bool {
        self.0.iter().all(|&w| other.contains(w))
    }

    /// `[k1;k2;...]` using the given world keys.
    pub fn key(&self, keys: &[WorldKey]) -> String {
        let parts: Vec<&str> = self.0.iter().map(|&w| keys[w].as_str()).collect();
        format!("[{}]", parts.join(";"))
    }
}

/// The consensus task over values `0..n`.
pub fn consensus_task(n: usize) -> ActionModel {
    let values: Vec<Value> = (0..n as Value).collect();
    consensus_task_over(n, &values)
}

/// The consensus task with one action per value: every agent is alive and
/// distinguishes all actions, and `pre(v) = ⋁_a input(a,v)`.
pub fn consensus_task_over(n: usize, values: &[Value]) -> ActionModel {
    let keys = values.iter().map(|v| WorldKey::new(v.to_string())).collect();
    let rel = (0..n).map(|_| PerRelation::from_keys((0..values.len()).map(Some))).collect();
    let pre = values
        .iter()
        .map(|&v| Formula::disj((0..n).map(|a| Formula::atom(a, v))).unwrap_or_else(Formula::falsum))
        .collect();
    ActionModel::new(n, keys, rel, pre).expect("consensus model is well formed")
}

/// The inputless message-passing model: one action per failure pattern, all
/// preconditions true, `t ∼_a s` iff `a` survives both and misses the same senders.
pub fn mp0(n: usize) -> ActionModel {
    let patterns = failure_patterns(n);
    let keys = patterns.iter().map(|t| WorldKey::new(t.to_string())).collect();
    let rel = (0..n)
        .map(|a| PerRelation::from_keys(patterns.iter().map(|t| t.alive().contains(a).then(|| t.missed_by(a)))))
        .collect();
    let pre = vec![Formula::verum(); patterns.len()];
    ActionModel::new(n, keys, rel, pre).expect("failure-pattern model is well formed")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MpError {
    #[error("the input model must be pure: facet {0} misses some agent")]
    ImpureInput(String),
    #[error("the input model has more than {} agents", crate::agents::MAX_AGENTS)]
    TooManyAgents,
}

/// `⌈X⌉_t`: facets agreeing with `x` on every agent whose value reaches a
/// live agent under `t`.
pub fn class_of(input: &SimplicialModel, t: &FailurePattern, x: usize) -> InputClass {
    let visible = t.visible();
    let facets = input.facets();
    let target: Vec<Option<Value>> = visible.iter().map(|b| facets[x].value_of(b)).collect();
    InputClass::new(
        facets
            .iter()
            .enumerate()
            .filter(|(_, y)| visible.iter().zip(&target).all(|(b, v)| v.is_some() && y.value_of(b) == *v))
            .map(|(i, _)| i),
    )
    .expect("pure facets belong to their own class")
}

/// The full message-passing action model together with the data each action was built from.
#[derive(Clone, Debug)]
pub struct MpModel {
    pub model: ActionModel,
    pub patterns: Vec<FailurePattern>,
    /// For each action: its input class and the index of its pattern.
    pub origin: Vec<(InputClass, usize)>,
}

/// Message passing over an input model: actions `(⌈X⌉_t, t)`, related for `a`
/// when `t ∼_a s` in the inputless model and the two classes agree on every
/// sender `a` heard from; `pre` is the disjunction of the class's facet labels.
pub fn mp_full(input: &SimplicialModel) -> Result<MpModel, MpError> {
    let n = input.n();
    if n > crate::agents::MAX_AGENTS {
        return Err(MpError::TooManyAgents);
    }
    if let Some(x) = input.facets().iter().find(|x| x.vertices().len() != n) {
        return Err(MpError::ImpureInput(x.key()));
    }
    let patterns = failure_patterns(n);
    let facets = input.facets();
    let per_pattern: Vec<Vec<InputClass>> = patterns
        .par_iter()
        .map(|t| {
            let visible = t.visible();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut seen: HashMap<Vec<Value>, usize> = HashMap::new();
            for (i, x) in facets.iter().enumerate() {
                let key: Vec<Value> = visible.iter().map(|b| x.vertices()[b].value).collect();
                let g = *seen.entry(key).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[g].push(i);
            }
            groups.into_iter().map(|g| InputClass::new(g).expect("nonempty group")).collect()
        })
        .collect();

    let facet_keys: Vec<WorldKey> = facets.iter().map(|x| WorldKey::new(x.key())).collect();
    let mut keys = Vec::new();
    let mut origin = Vec::new();
    let mut pre = Vec::new();
    for (ti, classes) in per_pattern.into_iter().enumerate() {
        for c in classes {
            keys.push(WorldKey::new(format!("{}{}", c.key(&facet_keys), patterns[ti])));
            pre.push(
                Formula::disj(c.members().iter().map(|&y| {
                    Formula::conj(input.labels(y).iter().map(|p| Formula::atom(p.agent, p.value)))
                        .unwrap_or_else(Formula::verum)
                }))
                .expect("classes are nonempty"),
            );
            origin.push((c, ti));
        }
    }
    let rel = (0..n)
        .map(|a| {
            PerRelation::from_keys(origin.iter().map(|(c, ti)| {
                let t = &patterns[*ti];
                if !t.alive().contains(a) {
                    return None;
                }
                let missed = t.missed_by(a);
                let heard: Vec<Value> = (0..n)
                    .filter(|b| !missed.contains(*b))
                    .map(|b| facets[c.members()[0]].vertices()[b].value)
                    .collect();
                Some((missed, heard))
            }))
        })
        .collect();
    let model = ActionModel::new(n, keys, rel, pre).expect("message-passing model is well formed");
    Ok(MpModel { model, patterns, origin })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_text_round_trip() {
        let t = FailurePattern::parse(3, "{0<2, 0<1}").unwrap();
        assert_eq!(t.to_string(), "{0<1, 0<2}");
        assert_eq!(FailurePattern::parse(3, "{}").unwrap(), FailurePattern::none(3));
        assert_eq!(t.dead(), AgentSet::singleton(0));
        assert_eq!(t.visible(), [1, 2].into_iter().collect());
        assert!(t.send_fail(0, 2) && !t.send_fail(1, 2));
    }

    #[test]
    fn pattern_validation() {
        assert_eq!(FailurePattern::parse(2, "{0<1, 1<0}"), Err(PatternError::DeadReceiver { dead: 0, receiver: 1 }));
        assert_eq!(FailurePattern::parse(2, "{0<0}"), Err(PatternError::SelfDelivery(0)));
        assert!(matches!(FailurePattern::parse(2, "{0<5}"), Err(PatternError::AgentRange { .. })));
        assert!(matches!(FailurePattern::parse(2, "0<1"), Err(PatternError::Syntax(_))));
        assert_eq!(FailurePattern::new(1, [(0, AgentSet::EMPTY)]), Err(PatternError::NoReceivers(0)));
    }

    #[test]
    fn two_agent_patterns() {
        let ps: Vec<String> = failure_patterns(2).iter().map(ToString::to_string).collect();
        assert_eq!(ps, ["{}", "{0<1}", "{1<0}"]);
        assert_eq!(failure_patterns(1).len(), 1);
    }

    #[test]
    fn consensus_shapes() {
        let t = consensus_task(2);
        assert_eq!(t.len(), 2);
        assert_eq!(t.pre(0).to_string(), "input(0,0) | input(1,0)");
        assert!(!t.related(0, 0, 1) && t.related(1, 1, 1));
        let one = consensus_task(1);
        assert_eq!(one.len(), 1);
        assert!(one.related(0, 0, 0));
    }

    #[test]
    fn mp_two_agents_actions() {
        let input = SimplicialModel::standard_input(2);
        let mp = mp_full(&input).unwrap();
        let keys: Vec<&str> = mp.model.frame().keys().iter().map(WorldKey::as_str).collect();
        assert_eq!(
            keys,
            [
                "[0:0,1:0]{}",
                "[0:0,1:1]{}",
                "[0:1,1:0]{}",
                "[0:1,1:1]{}",
                "[0:0,1:0;0:1,1:0]{0<1}",
                "[0:0,1:1;0:1,1:1]{0<1}",
                "[0:0,1:0;0:0,1:1]{1<0}",
                "[0:1,1:0;0:1,1:1]{1<0}",
            ]
        );
        assert_eq!(mp.model.pre(4).to_string(), "input(0,0) & input(1,0) | input(0,1) & input(1,0)");
        assert_eq!(mp.model.alive(4), AgentSet::singleton(1));
    }

    #[test]
    fn impure_input_rejected() {
        use crate::complex::{Complex, Simplex, Vertex};
        let x = Simplex::new([Vertex::new(0, 0), Vertex::new(1, 0)]).unwrap();
        let y = Simplex::new([Vertex::new(0, 1)]).unwrap();
        let sm = SimplicialModel::with_input_labels(Complex::new(2, [0, 1], [x, y]).unwrap());
        assert!(matches!(mp_full(&sm), Err(MpError::ImpureInput(_))));
    }
}
