//! Agents, agent sets and the atomic propositions `input(a,v)`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Agent identifier (its color), an integer in `0..n`.
pub type Agent = usize;

/// Input or output value carried by a vertex.
pub type Value = i64;

/// Largest number of agents an [`AgentSet`] can hold.
pub const MAX_AGENTS: usize = 64;

/// A set of agents, stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<Agent>", try_from = "Vec<Agent>")]
pub struct AgentSet(u64);

impl AgentSet {
    pub const EMPTY: AgentSet = AgentSet(0);

    /// `{0, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_AGENTS, "at most {MAX_AGENTS} agents are supported");
        if n == MAX_AGENTS {
            AgentSet(u64::MAX)
        } else {
            AgentSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(a: Agent) -> Self {
        assert!(a < MAX_AGENTS);
        AgentSet(1u64 << a)
    }

    pub fn from_bits(bits: u64) -> Self {
        AgentSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, a: Agent) -> bool {
        a < MAX_AGENTS && self.0 & (1u64 << a) != 0
    }

    pub fn insert(&mut self, a: Agent) {
        assert!(a < MAX_AGENTS);
        self.0 |= 1u64 << a;
    }

    pub fn remove(&mut self, a: Agent) {
        if a < MAX_AGENTS {
            self.0 &= !(1u64 << a);
        }
    }

    pub fn with(mut self, a: Agent) -> Self {
        self.insert(a);
        self
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        AgentSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        AgentSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        AgentSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Agents in increasing order.
    pub fn iter(self) -> impl Iterator<Item = Agent> {
        let bits = self.0;
        (0..MAX_AGENTS).filter(move |a| bits & (1u64 << a) != 0)
    }
}

impl FromIterator<Agent> for AgentSet {
    fn from_iter<I: IntoIterator<Item = Agent>>(iter: I) -> Self {
        let mut s = AgentSet::EMPTY;
        for a in iter {
            s.insert(a);
        }
        s
    }
}

impl From<AgentSet> for Vec<Agent> {
    fn from(s: AgentSet) -> Self {
        s.iter().collect()
    }
}

impl TryFrom<Vec<Agent>> for AgentSet {
    type Error = String;

    fn try_from(v: Vec<Agent>) -> Result<Self, Self::Error> {
        match v.iter().find(|&&a| a >= MAX_AGENTS) {
            Some(a) => Err(format!("agent {a} exceeds the supported maximum")),
            None => Ok(v.into_iter().collect()),
        }
    }
}

impl fmt::Debug for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

/// The atomic proposition `input(agent, value)`, element of `At_agent`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub agent: Agent,
    pub value: Value,
}

impl Atom {
    pub fn new(agent: Agent, value: Value) -> Self {
        Atom { agent, value }
    }

    /// Parses the text form `input(a,v)`.
    pub fn parse(s: &str) -> Option<Atom> {
        let inner = s.trim().strip_prefix("input(")?.strip_suffix(')')?;
        let (a, v) = inner.split_once(',')?;
        Some(Atom::new(a.trim().parse().ok()?, v.trim().parse().ok()?))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "input({},{})", self.agent, self.value)
    }
}

impl Serialize for Atom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Atom::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("malformed atom `{s}`")))
    }
}

/// Restriction `L ∩ At_B` of a label set to the atoms of the agents in `agents`.
pub fn restrict_atoms<'a>(labels: impl IntoIterator<Item = &'a Atom>, agents: AgentSet) -> Vec<Atom> {
    labels.into_iter().filter(|p| agents.contains(p.agent)).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let s: AgentSet = [0, 2].into_iter().collect();
        assert!(s.contains(2) && !s.contains(1));
        assert_eq!(s.len(), 2);
        assert!(s.is_subset(AgentSet::full(3)));
        assert_eq!(AgentSet::full(3).difference(s), AgentSet::singleton(1));
        assert_eq!(s.to_string(), "{0,2}");
        assert_eq!(AgentSet::full(64).len(), 64);
    }

    #[test]
    fn atom_text() {
        let p = Atom::new(1, 7);
        assert_eq!(p.to_string(), "input(1,7)");
        assert_eq!(Atom::parse(" input( 1 , 7 ) "), Some(p));
        assert_eq!(Atom::parse("input(1)"), None);
    }
}
