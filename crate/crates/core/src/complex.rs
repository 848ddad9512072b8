//! Chromatic simplicial complexes stored by their facets, simplicial maps,
//! and the partial epistemic model of a simplicial model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Agent, AgentSet, Atom, Value};
use crate::model::{PartialEpistemicModel, PerRelation, WorldKey};

/// A vertex `(agent, value)`; its color is the agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(Agent, Value)", into = "(Agent, Value)")]
pub struct Vertex {
    pub agent: Agent,
    pub value: Value,
}

impl Vertex {
    pub fn new(agent: Agent, value: Value) -> Self {
        Vertex { agent, value }
    }
}

impl From<(Agent, Value)> for Vertex {
    fn from((agent, value): (Agent, Value)) -> Self {
        Vertex { agent, value }
    }
}

impl From<Vertex> for (Agent, Value) {
    fn from(v: Vertex) -> Self {
        (v.agent, v.value)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.agent, self.value)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("a simplex needs at least one vertex")]
    EmptySimplex,
    #[error("agent {0} colors two vertices of one simplex")]
    RepeatedColor(Agent),
    #[error("agent {agent} out of range for {n} agents")]
    AgentRange { agent: Agent, n: usize },
    #[error("value {0} is not in the declared value set")]
    UndeclaredValue(Value),
    #[error("a complex needs at least one facet")]
    NoFacets,
    #[error("facet {0} is listed twice")]
    DuplicateFacet(String),
    #[error("facet {small} is contained in facet {large}")]
    NotMaximal { small: String, large: String },
    #[error("expected {expected} label sets, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("{0}")]
    Model(#[from] crate::model::ModelError),
}

/// A properly colored simplex, vertices sorted by agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex {
    vertices: Vec<Vertex>,
}

impl Simplex {
    pub fn new(vertices: impl IntoIterator<Item = Vertex>) -> Result<Self, ComplexError> {
        let mut vertices: Vec<Vertex> = vertices.into_iter().collect();
        if vertices.is_empty() {
            return Err(ComplexError::EmptySimplex);
        }
        vertices.sort_unstable();
        vertices.dedup();
        if let Some(w) = vertices.windows(2).find(|w| w[0].agent == w[1].agent) {
            return Err(ComplexError::RepeatedColor(w[0].agent));
        }
        Ok(Simplex { vertices })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// The value held by `agent` in this simplex, if it has a vertex of that color.
    pub fn value_of(&self, agent: Agent) -> Option<Value> {
        self.vertices
            .binary_search_by_key(&agent, |v| v.agent)
            .ok()
            .map(|i| self.vertices[i].value)
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.vertices.binary_search(v).is_ok()
    }

    pub fn is_subset(&self, other: &Simplex) -> bool {
        self.vertices.iter().all(|v| other.contains(v))
    }

    /// Canonical key `a:v,b:w,...`.
    pub fn key(&self) -> String {
        vertices_key(&self.vertices)
    }

    /// `{ input(a,v) | (a,v) ∈ X }`.
    pub fn input_atoms(&self) -> Vec<Atom> {
        self.vertices.iter().map(|v| Atom::new(v.agent, v.value)).collect()
    }
}

pub(crate) fn vertices_key(vs: &[Vertex]) -> String {
    vs.iter().map(|v| format!("{}:{}", v.agent, v.value)).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// `χ(X)`: the colors of a set of vertices.
pub fn chi(vertices: &[Vertex]) -> AgentSet {
    vertices.iter().map(|v| v.agent).collect()
}

/// `X ∩ Y` as a (possibly empty) sorted vertex list.
pub fn intersection(x: &Simplex, y: &Simplex) -> Vec<Vertex> {
    x.vertices.iter().filter(|v| y.contains(v)).copied().collect()
}

/// A chromatic complex over agents `0..n`, given by its facets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Complex {
    n: usize,
    values: Vec<Value>,
    facets: Vec<Simplex>,
}

impl Complex {
    /// Checks coloring, declared values and maximality; facets are stored sorted.
    pub fn new(
        n: usize,
        values: impl IntoIterator<Item = Value>,
        facets: impl IntoIterator<Item = Simplex>,
    ) -> Result<Self, ComplexError> {
        let values: BTreeSet<Value> = values.into_iter().collect();
        let mut facets: Vec<Simplex> = facets.into_iter().collect();
        if facets.is_empty() {
            return Err(ComplexError::NoFacets);
        }
        for x in &facets {
            for v in x.vertices() {
                if v.agent >= n {
                    return Err(ComplexError::AgentRange { agent: v.agent, n });
                }
                if !values.contains(&v.value) {
                    return Err(ComplexError::UndeclaredValue(v.value));
                }
            }
        }
        facets.sort();
        if let Some(w) = facets.windows(2).find(|w| w[0] == w[1]) {
            return Err(ComplexError::DuplicateFacet(w[0].key()));
        }
        for x in &facets {
            if let Some(y) = facets.iter().find(|y| *y != x && x.is_subset(y)) {
                return Err(ComplexError::NotMaximal { small: x.key(), large: y.key() });
            }
        }
        Ok(Complex { n, values: values.into_iter().collect(), facets })
    }

    /// All value assignments `{(0,v_0), ..., (n-1,v_{n-1})}`: the pure input complex.
    pub fn input(n: usize, values: &[Value]) -> Self {
        let mut facets = vec![Vec::new()];
        for a in 0..n {
            facets = facets
                .into_iter()
                .flat_map(|prefix: Vec<Vertex>| {
                    values.iter().map(move |&v| {
                        let mut next = prefix.clone();
                        next.push(Vertex::new(a, v));
                        next
                    })
                })
                .collect();
        }
        let facets = facets.into_iter().map(|vs| Simplex::new(vs).expect("distinct colors"));
        Complex::new(n, values.iter().copied(), facets).expect("input complex is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    /// The maximal simplexes, in canonical order.
    pub fn facets(&self) -> &[Simplex] {
        &self.facets
    }

    pub fn facet_index(&self, x: &Simplex) -> Option<usize> {
        self.facets.binary_search(x).ok()
    }

    pub fn facet_by_key(&self, key: &str) -> Option<usize> {
        self.facets.iter().position(|x| x.key() == key)
    }

    /// All vertices, sorted.
    pub fn vertices(&self) -> Vec<Vertex> {
        let set: BTreeSet<Vertex> = self.facets.iter().flat_map(|x| x.vertices().iter().copied()).collect();
        set.into_iter().collect()
    }

    /// Every facet has dimension `n - 1`.
    pub fn is_pure(&self) -> bool {
        self.facets.iter().all(|x| x.vertices().len() == self.n)
    }

    /// Some facet contains every vertex of `vs`.
    pub fn contains_simplex(&self, vs: &[Vertex]) -> bool {
        self.facets.iter().any(|x| vs.iter().all(|v| x.contains(v)))
    }
}

/// A complex with a labeling of its facets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialModel {
    complex: Complex,
    labels: Vec<Vec<Atom>>,
}

impl SimplicialModel {
    /// `labels[i]` labels `complex.facets()[i]`.
    pub fn new(complex: Complex, labels: Vec<Vec<Atom>>) -> Result<Self, ComplexError> {
        if labels.len() != complex.facets.len() {
            return Err(ComplexError::LabelCount { expected: complex.facets.len(), got: labels.len() });
        }
        let labels = labels
            .into_iter()
            .map(|mut l| {
                l.sort_unstable();
                l.dedup();
                l
            })
            .collect();
        Ok(SimplicialModel { complex, labels })
    }

    /// Labels every facet with `{ input(a,v) | (a,v) ∈ X }`.
    pub fn with_input_labels(complex: Complex) -> Self {
        let labels = complex.facets.iter().map(Simplex::input_atoms).collect();
        SimplicialModel { complex, labels }
    }

    /// The input simplicial model for `n` agents over `values`.
    pub fn input(n: usize, values: &[Value]) -> Self {
        SimplicialModel::with_input_labels(Complex::input(n, values))
    }

    /// The input model with the default value set `{0, ..., n-1}`.
    pub fn standard_input(n: usize) -> Self {
        let values: Vec<Value> = (0..n as Value).collect();
        SimplicialModel::input(n, &values)
    }

    pub fn complex(&self) -> &Complex {
        &self.complex
    }

    pub fn facets(&self) -> &[Simplex] {
        self.complex.facets()
    }

    pub fn n(&self) -> usize {
        self.complex.n
    }

    pub fn labels(&self, facet: usize) -> &[Atom] {
        &self.labels[facet]
    }

    /// Labels equal the input atoms of each facet.
    pub fn has_input_labels(&self) -> bool {
        self.complex.facets.iter().zip(&self.labels).all(|(x, l)| x.input_atoms() == *l)
    }
}

/// The partial epistemic model of a simplicial model: worlds are facets,
/// `X ∼_a Y` iff `a ∈ χ(X ∩ Y)`, and `L(X) = ℓ(X)`.
pub fn derive_model(sm: &SimplicialModel) -> PartialEpistemicModel {
    let facets = sm.facets();
    let keys = facets.iter().map(|x| WorldKey::new(x.key())).collect();
    // X and Y share an a-colored vertex iff they hold the same value for a.
    let rel = (0..sm.n())
        .map(|a| PerRelation::from_keys(facets.iter().map(|x| x.value_of(a))))
        .collect();
    PartialEpistemicModel::new(sm.n(), keys, rel, sm.labels.clone())
        .expect("facet keys are distinct and relations sized to the facets")
}

/// The complex of a frame: one facet per world, with a vertex `(a, i)` for
/// each live agent `a`, where `i` numbers the `a`-class of the world.
/// Fails when some world's facet lands inside another's.
pub fn frame_complex(m: &PartialEpistemicModel) -> Result<Complex, ComplexError> {
    let facets: Vec<Simplex> = m
        .worlds()
        .map(|w| {
            Simplex::new(
                m.alive(w)
                    .iter()
                    .map(|a| Vertex::new(a, m.relation(a).block_of(w).expect("alive") as Value)),
            )
        })
        .collect::<Result<_, _>>()?;
    let max_block = (0..m.n()).map(|a| m.relation(a).blocks().len()).max().unwrap_or(0);
    Complex::new(m.n(), 0..max_block as Value, facets)
}

/// `f` is total on the vertices of `src`, color-preserving, and sends every
/// facet of `src` into a simplex of `dst`.
pub fn is_simplicial_map(f: &BTreeMap<Vertex, Vertex>, src: &Complex, dst: &Complex) -> bool {
    src.facets().iter().all(|x| {
        let image: Option<Vec<Vertex>> = x
            .vertices()
            .iter()
            .map(|v| f.get(v).filter(|u| u.agent == v.agent).copied())
            .collect();
        image.is_some_and(|img| dst.contains_simplex(&img))
    })
}
