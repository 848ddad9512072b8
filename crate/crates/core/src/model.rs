//! Partial epistemic models: worlds, per-agent partial equivalence relations
//! (PERs), labelings, saturations, morphisms and frame isomorphism.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Agent, AgentSet, Atom};

/// Canonical identity of a world, derived from its construction data.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorldKey(pub String);

impl WorldKey {
    pub fn new(s: impl Into<String>) -> Self {
        WorldKey(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WorldKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("a model needs at least one world")]
    Empty,
    #[error("duplicate world key `{0}`")]
    DuplicateWorld(WorldKey),
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("world index {index} out of range (model has {len} worlds)")]
    WorldIndex { index: usize, len: usize },
    #[error("agent {agent} out of range for {n} agents")]
    AgentRange { agent: Agent, n: usize },
    #[error("relation of agent {agent} is not transitive: {a} ~ {b} ~ {c} but not {a} ~ {c}")]
    NotTransitive { agent: Agent, a: usize, b: usize, c: usize },
    #[error("expected {expected} {what}, got {got}")]
    Shape { what: &'static str, expected: usize, got: usize },
}

/// A partial equivalence relation over world indices, stored as its blocks.
///
/// Worlds outside every block are the worlds in which the agent is dead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerRelation {
    block_of: Vec<Option<u32>>,
    blocks: Vec<Vec<usize>>,
}

impl PerRelation {
    /// Builds the relation whose blocks are the worlds sharing a key; `None` marks
    /// a dead world. Blocks are numbered in order of first occurrence.
    pub fn from_keys<K: Eq + std::hash::Hash>(keys: impl IntoIterator<Item = Option<K>>) -> Self {
        let mut ids: HashMap<K, u32> = HashMap::new();
        let mut block_of = Vec::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (w, k) in keys.into_iter().enumerate() {
            let id = k.map(|k| {
                let next = blocks.len() as u32;
                let id = *ids.entry(k).or_insert(next);
                if id == next {
                    blocks.push(Vec::new());
                }
                blocks[id as usize].push(w);
                id
            });
            block_of.push(id);
        }
        PerRelation { block_of, blocks }
    }

    /// Builds the relation from an edge list. The symmetric closure is taken;
    /// transitivity is checked and a violation is an error.
    pub fn from_edges(
        agent: Agent,
        num_worlds: usize,
        edges: &[(usize, usize)],
    ) -> Result<Self, ModelError> {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); num_worlds];
        for &(i, j) in edges {
            for x in [i, j] {
                if x >= num_worlds {
                    return Err(ModelError::WorldIndex { index: x, len: num_worlds });
                }
            }
            adj[i].insert(j);
            adj[j].insert(i);
        }
        for (b, nbrs) in adj.iter().enumerate() {
            for &a in nbrs {
                for &c in nbrs {
                    if !adj[a].contains(&c) {
                        return Err(ModelError::NotTransitive { agent, a, b, c });
                    }
                }
            }
        }
        // Transitive and symmetric: each neighbourhood is exactly its block.
        Ok(PerRelation::from_keys(adj.iter().map(|nbrs| nbrs.first().copied())))
    }

    pub fn num_worlds(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, w: usize) -> Option<u32> {
        self.block_of[w]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Worlds related to `w` (empty when the agent is dead at `w`).
    pub fn class(&self, w: usize) -> &[usize] {
        match self.block_of[w] {
            Some(b) => &self.blocks[b as usize],
            None => &[],
        }
    }

    pub fn related(&self, w: usize, v: usize) -> bool {
        matches!((self.block_of[w], self.block_of[v]), (Some(x), Some(y)) if x == y)
    }

    /// All pairs `(i, j)` with `i <= j` and `i ~ j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for block in &self.blocks {
            for (k, &i) in block.iter().enumerate() {
                for &j in &block[k..] {
                    out.push((i.min(j), i.max(j)));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Checks that a raw edge relation (taken as given, without closure) is
/// symmetric and transitive.
pub fn check_per(num_worlds: usize, edges: &[(usize, usize)]) -> bool {
    let set: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
    if set.iter().any(|&(i, j)| i >= num_worlds || j >= num_worlds) {
        return false;
    }
    if set.iter().any(|&(i, j)| !set.contains(&(j, i))) {
        return false;
    }
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); num_worlds];
    for &(i, j) in &set {
        succ[i].push(j);
    }
    set.iter()
        .all(|&(i, j)| succ[j].iter().all(|&k| set.contains(&(i, k))))
}

/// A finite partial epistemic model `⟨W, ∼, L⟩`.
#[derive(Clone, Debug)]
pub struct PartialEpistemicModel {
    n: usize,
    keys: Vec<WorldKey>,
    index: HashMap<WorldKey, usize>,
    rel: Vec<PerRelation>,
    labels: Vec<Vec<Atom>>,
    alive: Vec<AgentSet>,
}

impl PartialEpistemicModel {
    /// Assembles a model. Labels are sorted and deduplicated.
    pub fn new(
        n: usize,
        keys: Vec<WorldKey>,
        rel: Vec<PerRelation>,
        labels: Vec<Vec<Atom>>,
    ) -> Result<Self, ModelError> {
        if keys.is_empty() {
            return Err(ModelError::Empty);
        }
        if n > crate::agents::MAX_AGENTS {
            return Err(ModelError::AgentRange { agent: n, n: crate::agents::MAX_AGENTS });
        }
        let len = keys.len();
        if rel.len() != n {
            return Err(ModelError::Shape { what: "agent relations", expected: n, got: rel.len() });
        }
        if let Some(r) = rel.iter().find(|r| r.num_worlds() != len) {
            return Err(ModelError::Shape { what: "relation worlds", expected: len, got: r.num_worlds() });
        }
        if labels.len() != len {
            return Err(ModelError::Shape { what: "label sets", expected: len, got: labels.len() });
        }
        let mut index = HashMap::with_capacity(len);
        for (i, k) in keys.iter().enumerate() {
            if index.insert(k.clone(), i).is_some() {
                return Err(ModelError::DuplicateWorld(k.clone()));
            }
        }
        let labels: Vec<Vec<Atom>> = labels
            .into_iter()
            .map(|mut l| {
                l.sort_unstable();
                l.dedup();
                l
            })
            .collect();
        if let Some(p) = labels.iter().flatten().find(|p| p.agent >= n) {
            return Err(ModelError::AgentRange { agent: p.agent, n });
        }
        let alive = (0..len)
            .map(|w| (0..n).filter(|&a| rel[a].block_of(w).is_some()).collect())
            .collect();
        Ok(PartialEpistemicModel { n, keys, index, rel, labels, alive })
    }

    /// Number of agents.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn worlds(&self) -> std::ops::Range<usize> {
        0..self.keys.len()
    }

    pub fn keys(&self) -> &[WorldKey] {
        &self.keys
    }

    pub fn key(&self, w: usize) -> &WorldKey {
        &self.keys[w]
    }

    pub fn world(&self, key: &str) -> Result<usize, ModelError> {
        self.index
            .get(&WorldKey::new(key))
            .copied()
            .ok_or_else(|| ModelError::UnknownWorld(key.to_string()))
    }

    pub fn relation(&self, a: Agent) -> &PerRelation {
        &self.rel[a]
    }

    pub fn relations(&self) -> &[PerRelation] {
        &self.rel
    }

    pub fn related(&self, a: Agent, w: usize, v: usize) -> bool {
        self.rel[a].related(w, v)
    }

    /// `w ∼_U v` for every agent in `agents`.
    pub fn related_all(&self, agents: AgentSet, w: usize, v: usize) -> bool {
        agents.iter().all(|a| self.rel[a].related(w, v))
    }

    pub fn labels(&self, w: usize) -> &[Atom] {
        &self.labels[w]
    }

    pub fn has_atom(&self, w: usize, p: &Atom) -> bool {
        self.labels[w].binary_search(p).is_ok()
    }

    /// `Alive(w)`: the agents whose relation is reflexive at `w`.
    pub fn alive(&self, w: usize) -> AgentSet {
        self.alive[w]
    }

    /// Key-based lookup of `Alive(w)`.
    pub fn alive_set(&self, key: &str) -> Result<AgentSet, ModelError> {
        Ok(self.alive(self.world(key)?))
    }

    /// `sat_U(v) = { w | v ∼_U w }`, sorted. Empty unless `U ⊆ Alive(v)`.
    pub fn saturation(&self, agents: AgentSet, v: usize) -> Vec<usize> {
        let mut it = agents.iter();
        match it.next() {
            None => self.worlds().collect(),
            Some(first) => {
                let rest: Vec<Agent> = it.collect();
                self.rel[first]
                    .class(v)
                    .iter()
                    .copied()
                    .filter(|&w| rest.iter().all(|&a| self.rel[a].related(v, w)))
                    .collect()
            }
        }
    }

    /// Every relation, re-expanded to edges, passes [`check_per`].
    pub fn check_per(&self) -> bool {
        self.rel.iter().all(|r| {
            let edges: Vec<(usize, usize)> = r.edges().into_iter().flat_map(|(i, j)| [(i, j), (j, i)]).collect();
            check_per(self.len(), &edges)
        })
    }

    /// Distinct worlds are told apart by at least one agent.
    pub fn is_proper(&self) -> bool {
        self.improper_pair().is_none()
    }

    /// A pair of distinct worlds related by every agent, if any.
    pub fn improper_pair(&self) -> Option<(usize, usize)> {
        let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
        for w in self.worlds() {
            let sig: Option<Vec<u32>> = self.rel.iter().map(|r| r.block_of(w)).collect();
            if let Some(sig) = sig {
                if let Some(&v) = seen.get(&sig) {
                    return Some((v, w));
                }
                seen.insert(sig, w);
            }
        }
        None
    }

    /// The same frame with labels replaced.
    pub fn relabel(&self, labels: Vec<Vec<Atom>>) -> Result<Self, ModelError> {
        PartialEpistemicModel::new(self.n, self.keys.clone(), self.rel.clone(), labels)
    }
}

/// The three morphism laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    Preservation,
    Saturation,
    AtomicPreservation,
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Law::Preservation => "preservation of indistinguishability",
            Law::Saturation => "saturation",
            Law::AtomicPreservation => "preservation of atomic formulas",
        })
    }
}

/// First violated law found by [`verify_morphism`], with witnesses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub law: Law,
    pub world: WorldKey,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_world: Option<WorldKey>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<WorldKey>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_image: Option<WorldKey>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent: Option<Agent>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at world {}", self.law, self.world)?;
        if let Some(o) = &self.other_world {
            write!(f, " (with {o})")?;
        }
        if let Some(i) = &self.image {
            write!(f, ", image {i}")?;
        }
        if let Some(i) = &self.other_image {
            write!(f, " / {i}")?;
        }
        if let Some(a) = self.agent {
            write!(f, ", agent {a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MorphismError {
    #[error("map covers {got} of {expected} source worlds")]
    PartialMap { expected: usize, got: usize },
    #[error("empty image for world {0}")]
    EmptyImage(WorldKey),
    #[error("image of {world} names target index {target}, outside the target model")]
    UnknownTarget { world: WorldKey, target: usize },
    #[error("agent count mismatch: source has {src}, target has {dst}")]
    AgentMismatch { src: usize, dst: usize },
    #[error("{0}")]
    Violation(Violation),
}

/// A map `W → P(W')` that has passed [`verify_morphism`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    images: Vec<Vec<usize>>,
}

impl Morphism {
    pub fn images(&self) -> &[Vec<usize>] {
        &self.images
    }

    pub fn image(&self, w: usize) -> &[usize] {
        &self.images[w]
    }

    /// Candidate map for `g ∘ self`: the union of `g`-images over `self(w)`,
    /// re-saturated under `Alive(w)` in `dst`. Needs re-verification.
    pub fn compose_candidate(
        &self,
        g: &Morphism,
        src: &PartialEpistemicModel,
        dst: &PartialEpistemicModel,
    ) -> Vec<Vec<usize>> {
        self.images
            .iter()
            .enumerate()
            .map(|(w, img)| {
                let union: BTreeSet<usize> =
                    img.iter().flat_map(|&v| g.image(v).iter().copied()).collect();
                let first = *union.iter().next().expect("morphism images are nonempty");
                dst.saturation(src.alive(w), first)
            })
            .collect()
    }

    /// Images rendered by key, for reporting.
    pub fn to_key_map(
        &self,
        src: &PartialEpistemicModel,
        dst: &PartialEpistemicModel,
    ) -> BTreeMap<WorldKey, Vec<WorldKey>> {
        self.images
            .iter()
            .enumerate()
            .map(|(w, img)| (src.key(w).clone(), img.iter().map(|&u| dst.key(u).clone()).collect()))
            .collect()
    }
}

/// Checks the three morphism laws for `candidate: W^src → P(W^dst)`.
///
/// Law (iii) compares `L(w) ∩ At_Alive(w)` against the label of every image
/// world `u ∈ f(w)`.
pub fn verify_morphism(
    candidate: &[Vec<usize>],
    src: &PartialEpistemicModel,
    dst: &PartialEpistemicModel,
) -> Result<Morphism, MorphismError> {
    if src.n() != dst.n() {
        return Err(MorphismError::AgentMismatch { src: src.n(), dst: dst.n() });
    }
    if candidate.len() != src.len() {
        return Err(MorphismError::PartialMap { expected: src.len(), got: candidate.len() });
    }
    let mut images = Vec::with_capacity(candidate.len());
    for (w, img) in candidate.iter().enumerate() {
        if img.is_empty() {
            return Err(MorphismError::EmptyImage(src.key(w).clone()));
        }
        if let Some(&t) = img.iter().find(|&&t| t >= dst.len()) {
            return Err(MorphismError::UnknownTarget { world: src.key(w).clone(), target: t });
        }
        let mut img = img.clone();
        img.sort_unstable();
        img.dedup();
        images.push(img);
    }
    let violation = |law, w: usize, other: Option<usize>, u: Option<usize>, u2: Option<usize>, a| {
        MorphismError::Violation(Violation {
            law,
            world: src.key(w).clone(),
            other_world: other.map(|x| src.key(x).clone()),
            image: u.map(|x| dst.key(x).clone()),
            other_image: u2.map(|x| dst.key(x).clone()),
            agent: a,
        })
    };

    // (i) w ∼_a w' ⇒ u ∼'_a u' for all images: the images of a whole a-block
    // must fall into a single a-block of the target.
    for a in 0..src.n() {
        for block in src.relation(a).blocks() {
            let w0 = block[0];
            let u0 = images[w0][0];
            let target = dst.relation(a).block_of(u0);
            for &w in block {
                for &u in &images[w] {
                    let b = dst.relation(a).block_of(u);
                    if target.is_none() || b != target {
                        return Err(violation(Law::Preservation, w0, Some(w), Some(u0), Some(u), Some(a)));
                    }
                }
            }
        }
    }

    // (ii) f(w) = sat_Alive(w)(w') for some w' ∈ f(w). If the law holds for some
    // w', it holds for every member, so testing the first member is complete.
    for (w, img) in images.iter().enumerate() {
        if dst.saturation(src.alive(w), img[0]) != *img {
            return Err(violation(Law::Saturation, w, None, Some(img[0]), None, None));
        }
    }

    // (iii) L(w) ∩ At_Alive(w) = L'(u) ∩ At_Alive(w) for every u ∈ f(w).
    for (w, img) in images.iter().enumerate() {
        let live = src.alive(w);
        let mine = crate::agents::restrict_atoms(src.labels(w), live);
        for &u in img {
            if crate::agents::restrict_atoms(dst.labels(u), live) != mine {
                let agent = live.iter().find(|&a| {
                    let pick = |l: &[Atom]| l.iter().filter(|p| p.agent == a).copied().collect::<Vec<_>>();
                    pick(src.labels(w)) != pick(dst.labels(u))
                });
                return Err(violation(Law::AtomicPreservation, w, None, Some(u), None, agent));
            }
        }
    }
    Ok(Morphism { images })
}

/// Looks for a bijection `g` with `w ∼_a w' ⟺ g(w) ∼_a g(w')` for every agent.
/// The returned map is re-checked before it is handed out.
pub fn frame_isomorphic(m1: &PartialEpistemicModel, m2: &PartialEpistemicModel) -> Option<Vec<usize>> {
    if m1.len() != m2.len() || m1.n() != m2.n() {
        return None;
    }
    let n = m1.n();
    let signature = |m: &PartialEpistemicModel, w: usize| -> Vec<usize> {
        (0..n).map(|a| m.relation(a).class(w).len()).collect()
    };
    let sig1: Vec<Vec<usize>> = m1.worlds().map(|w| signature(m1, w)).collect();
    let sig2: Vec<Vec<usize>> = m2.worlds().map(|w| signature(m2, w)).collect();
    {
        let mut a = sig1.clone();
        let mut b = sig2.clone();
        a.sort();
        b.sort();
        if a != b {
            return None;
        }
    }
    let mut by_sig: HashMap<&[usize], Vec<usize>> = HashMap::new();
    for (w, s) in sig2.iter().enumerate() {
        by_sig.entry(s.as_slice()).or_default().push(w);
    }

    // Visit m1 in BFS order so that most worlds have an already-placed neighbour.
    let mut order: Vec<(usize, Option<(usize, Agent)>)> = Vec::with_capacity(m1.len());
    let mut seen = vec![false; m1.len()];
    for root in m1.worlds() {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let start = order.len();
        order.push((root, None));
        let mut head = start;
        while head < order.len() {
            let w = order[head].0;
            head += 1;
            for a in 0..n {
                for &v in m1.relation(a).class(w) {
                    if !seen[v] {
                        seen[v] = true;
                        order.push((v, Some((w, a))));
                    }
                }
            }
        }
    }

    struct State {
        image: Vec<Option<usize>>,
        used: Vec<bool>,
        fwd: Vec<Vec<Option<u32>>>,
        bwd: Vec<Vec<Option<u32>>>,
    }
    let mut st = State {
        image: vec![None; m1.len()],
        used: vec![false; m2.len()],
        fwd: (0..n).map(|a| vec![None; m1.relation(a).blocks().len()]).collect(),
        bwd: (0..n).map(|a| vec![None; m2.relation(a).blocks().len()]).collect(),
    };

    // Tries w ↦ u; on success returns the block-map entries it created.
    fn assign(
        st: &mut State,
        m1: &PartialEpistemicModel,
        m2: &PartialEpistemicModel,
        w: usize,
        u: usize,
    ) -> Option<Vec<(Agent, u32, u32)>> {
        let mut created = Vec::new();
        for a in 0..m1.n() {
            match (m1.relation(a).block_of(w), m2.relation(a).block_of(u)) {
                (None, None) => {}
                (Some(b1), Some(b2)) => match (st.fwd[a][b1 as usize], st.bwd[a][b2 as usize]) {
                    (None, None) => created.push((a, b1, b2)),
                    (Some(x), Some(y)) if x == b2 && y == b1 => {}
                    _ => return None,
                },
                _ => return None,
            }
        }
        for &(a, b1, b2) in &created {
            st.fwd[a][b1 as usize] = Some(b2);
            st.bwd[a][b2 as usize] = Some(b1);
        }
        st.image[w] = Some(u);
        st.used[u] = true;
        Some(created)
    }

    fn undo(st: &mut State, w: usize, u: usize, created: Vec<(Agent, u32, u32)>) {
        for (a, b1, b2) in created {
            st.fwd[a][b1 as usize] = None;
            st.bwd[a][b2 as usize] = None;
        }
        st.image[w] = None;
        st.used[u] = false;
    }

    fn search(
        st: &mut State,
        m1: &PartialEpistemicModel,
        m2: &PartialEpistemicModel,
        order: &[(usize, Option<(usize, Agent)>)],
        sig1: &[Vec<usize>],
        sig2: &[Vec<usize>],
        by_sig: &HashMap<&[usize], Vec<usize>>,
        depth: usize,
    ) -> bool {
        let Some(&(w, parent)) = order.get(depth) else {
            return true;
        };
        let candidates: Vec<usize> = match parent {
            Some((p, a)) => {
                let pu = st.image[p].expect("parent placed earlier in BFS order");
                m2.relation(a).class(pu).to_vec()
            }
            None => by_sig.get(sig1[w].as_slice()).cloned().unwrap_or_default(),
        };
        for u in candidates {
            if st.used[u] || sig2[u] != sig1[w] {
                continue;
            }
            if let Some(created) = assign(st, m1, m2, w, u) {
                if search(st, m1, m2, order, sig1, sig2, by_sig, depth + 1) {
                    return true;
                }
                undo(st, w, u, created);
            }
        }
        false
    }

    if !search(&mut st, m1, m2, &order, &sig1, &sig2, &by_sig, 0) {
        return None;
    }
    let g: Vec<usize> = st.image.into_iter().map(|u| u.expect("complete assignment")).collect();
    is_frame_isomorphism(m1, m2, &g).then_some(g)
}

/// Exhaustive check that `g` is a bijection preserving and reflecting every relation.
pub fn is_frame_isomorphism(m1: &PartialEpistemicModel, m2: &PartialEpistemicModel, g: &[usize]) -> bool {
    if g.len() != m1.len() || m1.len() != m2.len() || m1.n() != m2.n() {
        return false;
    }
    let mut hit = vec![false; m2.len()];
    for &u in g {
        if u >= m2.len() || std::mem::replace(&mut hit[u], true) {
            return false;
        }
    }
    (0..m1.n()).all(|a| {
        let (r1, r2) = (m1.relation(a), m2.relation(a));
        m1.worlds().all(|w| {
            (r1.block_of(w).is_some() == r2.block_of(g[w]).is_some())
                && r1.class(w).len() == r2.class(g[w]).len()
                && r1.class(w).iter().all(|&v| r2.related(g[w], g[v]))
        })
    })
}
