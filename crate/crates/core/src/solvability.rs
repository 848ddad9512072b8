//! Task solvability: checking and searching for morphisms between update
//! models, verifying logical obstructions, and the facet-map formulation of
//! tasks and protocols with its translation into action models.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::actions::{mp_full, ActionModel, MpError};
use crate::agents::{restrict_atoms, Agent, AgentSet, Value};
use crate::complex::{chi, derive_model, frame_complex, intersection, Complex, ComplexError, Simplex, SimplicialModel, Vertex};
use crate::formula::{is_guarded_positive, Evaluator, Formula};
use crate::model::{verify_morphism, Morphism, MorphismError, PartialEpistemicModel, PerRelation, WorldKey};
use crate::update::{product_update, UpdateError, UpdateModel};

/// An input model with a protocol and a task, and both updates.
#[derive(Clone, Debug)]
pub struct SolvabilityInstance {
    pub input: PartialEpistemicModel,
    pub protocol: ActionModel,
    pub task: ActionModel,
    pub protocol_update: UpdateModel,
    pub task_update: UpdateModel,
}

impl SolvabilityInstance {
    pub fn new(input: &SimplicialModel, protocol: ActionModel, task: ActionModel) -> Result<Self, UpdateError> {
        SolvabilityInstance::from_model(derive_model(input), protocol, task)
    }

    pub fn from_model(
        input: PartialEpistemicModel,
        protocol: ActionModel,
        task: ActionModel,
    ) -> Result<Self, UpdateError> {
        let protocol_update = product_update(&input, &protocol)?;
        let task_update = product_update(&input, &task)?;
        Ok(SolvabilityInstance { input, protocol, task, protocol_update, task_update })
    }

    /// Resolves a key-based map into world indices of the two updates.
    pub fn candidate_from_keys(
        &self,
        map: &BTreeMap<String, Vec<String>>,
    ) -> Result<Vec<Vec<usize>>, crate::model::ModelError> {
        let src = &self.protocol_update.model;
        let dst = &self.task_update.model;
        let mut out = vec![Vec::new(); src.len()];
        for (k, vs) in map {
            let w = src.world(k)?;
            out[w] = vs.iter().map(|v| dst.world(v)).collect::<Result<_, _>>()?;
        }
        Ok(out)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolutionError {
    #[error("{0}")]
    Morphism(#[from] MorphismError),
    #[error("input {input} in the class of {world} is in no image's class")]
    ClassInclusion { world: WorldKey, input: WorldKey },
}

/// Accepts `candidate: I{P} → I{T}` when it is a morphism and every input in
/// the class of a protocol world lies in the class of one of its images.
pub fn check_solution(inst: &SolvabilityInstance, candidate: &[Vec<usize>]) -> Result<Morphism, SolutionError> {
    let src = &inst.protocol_update;
    let dst = &inst.task_update;
    let f = verify_morphism(candidate, &src.model, &dst.model)?;
    for w in src.model.worlds() {
        if let Some(x) = uncovered(src, dst, w, f.image(w)) {
            return Err(SolutionError::ClassInclusion {
                world: src.model.key(w).clone(),
                input: inst.input.key(x).clone(),
            });
        }
    }
    Ok(f)
}

/// A member of the class of protocol world `w` outside every image class.
fn uncovered(src: &UpdateModel, dst: &UpdateModel, w: usize, image: &[usize]) -> Option<usize> {
    src.class(w).members().iter().copied().find(|&x| !image.iter().any(|&u| dst.class(u).contains(x)))
}

/// Result of a bounded search.
#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Found(Morphism),
    /// The whole search space was explored without success.
    Unsolvable,
    BudgetExceeded,
}

#[derive(Clone, Debug)]
pub struct SearchReport {
    pub outcome: SearchOutcome,
    pub nodes: u64,
}

struct Group {
    members: Vec<usize>,
    // (agent, source block) for every live agent
    src_blocks: Vec<(Agent, u32)>,
    candidates: Vec<(Vec<usize>, Vec<u32>)>,
}

/// Backtracking search for a solution, assigning one saturation block of
/// protocol worlds at a time, largest alive sets first. `budget` bounds the
/// number of candidate assignments tried.
pub fn search_solution(inst: &SolvabilityInstance, budget: u64) -> SearchReport {
    let src = &inst.protocol_update;
    let dst = &inst.task_update;
    let groups = search_groups(src, dst);
    let mut nodes = 0u64;
    if groups.iter().any(|g| g.candidates.is_empty()) {
        return SearchReport { outcome: SearchOutcome::Unsolvable, nodes };
    }

    // per agent: source block → (target block, number of groups using it)
    let mut bound: Vec<HashMap<u32, (u32, usize)>> = vec![HashMap::new(); src.model.n()];
    let consistent = |bound: &Vec<HashMap<u32, (u32, usize)>>, g: &Group, c: usize| {
        g.src_blocks
            .iter()
            .zip(&g.candidates[c].1)
            .all(|(&(a, sb), &db)| bound[a].get(&sb).is_none_or(|&(d, _)| d == db))
    };
    let apply = |bound: &mut Vec<HashMap<u32, (u32, usize)>>, g: &Group, c: usize| {
        for (&(a, sb), &db) in g.src_blocks.iter().zip(&g.candidates[c].1) {
            bound[a].entry(sb).or_insert((db, 0)).1 += 1;
        }
    };
    let undo = |bound: &mut Vec<HashMap<u32, (u32, usize)>>, g: &Group| {
        for &(a, sb) in &g.src_blocks {
            let e = bound[a].get_mut(&sb).expect("applied before");
            e.1 -= 1;
            if e.1 == 0 {
                bound[a].remove(&sb);
            }
        }
    };

    let total = groups.len();
    let mut next = vec![0usize; total];
    let mut chosen = vec![0usize; total];
    let mut level = 0usize;
    while level < total {
        let g = &groups[level];
        let mut placed = false;
        while next[level] < g.candidates.len() {
            let c = next[level];
            next[level] += 1;
            nodes += 1;
            if nodes > budget {
                return SearchReport { outcome: SearchOutcome::BudgetExceeded, nodes };
            }
            if consistent(&bound, g, c) {
                apply(&mut bound, g, c);
                chosen[level] = c;
                placed = true;
                break;
            }
        }
        if placed {
            level += 1;
            if level < total {
                next[level] = 0;
            }
        } else {
            if level == 0 {
                return SearchReport { outcome: SearchOutcome::Unsolvable, nodes };
            }
            level -= 1;
            undo(&mut bound, &groups[level]);
        }
    }

    let mut candidate = vec![Vec::new(); src.len()];
    for (g, &c) in groups.iter().zip(&chosen) {
        for &w in &g.members {
            candidate[w] = g.candidates[c].0.clone();
        }
    }
    let f = check_solution(inst, &candidate).expect("search only assembles law-abiding maps");
    SearchReport { outcome: SearchOutcome::Found(f), nodes }
}

fn search_groups(src: &UpdateModel, dst: &UpdateModel) -> Vec<Group> {
    let sm = &src.model;
    let dm = &dst.model;
    // protocol worlds related by all their live agents must share an image
    let mut index: HashMap<(AgentSet, Vec<u32>), usize> = HashMap::new();
    let mut raw: Vec<(AgentSet, Vec<usize>)> = Vec::new();
    for w in sm.worlds() {
        let live = sm.alive(w);
        let blocks: Vec<u32> = live.iter().map(|a| sm.relation(a).block_of(w).expect("alive")).collect();
        let g = *index.entry((live, blocks)).or_insert_with(|| {
            raw.push((live, Vec::new()));
            raw.len() - 1
        });
        raw[g].1.push(w);
    }
    raw.sort_by_key(|(live, members)| (std::cmp::Reverse(live.len()), members[0]));

    raw.into_iter()
        .map(|(live, members)| {
            let src_blocks: Vec<(Agent, u32)> =
                live.iter().map(|a| (a, sm.relation(a).block_of(members[0]).expect("alive"))).collect();
            let mut images: BTreeSet<Vec<usize>> = BTreeSet::new();
            for u in dm.worlds() {
                if live.is_subset(dm.alive(u)) {
                    images.insert(dm.saturation(live, u));
                }
            }
            let candidates = images
                .into_iter()
                .filter(|img| {
                    members.iter().all(|&w| {
                        let mine = restrict_atoms(sm.labels(w), live);
                        img.iter().all(|&u| restrict_atoms(dm.labels(u), live) == mine)
                            && uncovered(src, dst, w, img).is_none()
                    })
                })
                .map(|img| {
                    let dst_blocks =
                        live.iter().map(|a| dm.relation(a).block_of(img[0]).expect("alive")).collect();
                    (img, dst_blocks)
                })
                .collect();
            Group { members, src_blocks, candidates }
        })
        .collect()
}

/// Outcome of an obstruction check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObstructionVerdict {
    Obstruction,
    NotGuardedPositive,
    NotValidInTask,
    NotInvalidInProtocol,
}

/// A refutation tree: `formula` is false at `world`, reached from the parent
/// by agent `via` (or at the same world when `via` is `None`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refutation {
    pub world: usize,
    pub via: Option<Agent>,
    pub formula: Formula,
    pub children: Vec<Refutation>,
}

impl Refutation {
    /// The distinct root-to-leaf paths, each as its knowledge steps `(agent, world)`.
    pub fn chains(&self) -> Vec<Vec<(Agent, usize)>> {
        let mut out: Vec<Vec<(Agent, usize)>> = Vec::new();
        for c in self.raw_chains() {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    fn raw_chains(&self) -> Vec<Vec<(Agent, usize)>> {
        let step: Vec<(Agent, usize)> = self.via.map(|a| (a, self.world)).into_iter().collect();
        if self.children.is_empty() {
            return vec![step];
        }
        self.children
            .iter()
            .flat_map(Refutation::raw_chains)
            .map(|rest| step.iter().copied().chain(rest).collect())
            .collect()
    }

    /// Pre-order listing for reports.
    pub fn steps(&self, m: &PartialEpistemicModel) -> Vec<TraceStep> {
        let mut out = Vec::new();
        self.collect(m, 0, &mut out);
        out
    }

    fn collect(&self, m: &PartialEpistemicModel, depth: usize, out: &mut Vec<TraceStep>) {
        out.push(TraceStep {
            depth,
            world: m.key(self.world).to_string(),
            via: self.via,
            formula: self.formula.to_string(),
        });
        for c in &self.children {
            c.collect(m, depth + 1, out);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub depth: usize,
    pub world: String,
    pub via: Option<Agent>,
    pub formula: String,
}

#[derive(Clone, Debug)]
pub struct ObstructionReport {
    pub verdict: ObstructionVerdict,
    /// Falsifying protocol world for an obstruction, falsifying task world
    /// when the formula is not valid in the task.
    pub witness: Option<usize>,
    pub trace: Option<Refutation>,
}

/// Checks that `phi` is guarded positive, valid in the task update and
/// invalid in the protocol update. On success the falsifying protocol world
/// has the most live agents, then the most distinct input values, then the
/// lowest index, and comes with a refutation trace.
pub fn check_obstruction(inst: &SolvabilityInstance, phi: &Formula) -> ObstructionReport {
    let none = |verdict, witness| ObstructionReport { verdict, witness, trace: None };
    if !is_guarded_positive(phi) {
        return none(ObstructionVerdict::NotGuardedPositive, None);
    }
    let task = &inst.task_update.model;
    let mut ev = Evaluator::new(task, phi);
    if let Some(w) = task.worlds().find(|&w| !ev.holds(w)) {
        return none(ObstructionVerdict::NotValidInTask, Some(w));
    }
    let proto = &inst.protocol_update.model;
    let mut ev = Evaluator::new(proto, phi);
    let witness = proto
        .worlds()
        .filter(|&w| !ev.holds(w))
        .min_by_key(|&w| {
            let values: BTreeSet<Value> = proto.labels(w).iter().map(|p| p.value).collect();
            (std::cmp::Reverse(proto.alive(w).len()), std::cmp::Reverse(values.len()), w)
        });
    match witness {
        None => none(ObstructionVerdict::NotInvalidInProtocol, None),
        Some(w) => ObstructionReport {
            verdict: ObstructionVerdict::Obstruction,
            witness: Some(w),
            trace: Some(refute(proto, w, None, phi)),
        },
    }
}

/// Builds a refutation of `f` at `w`, which must be false there. Disjunctions
/// are refuted on both sides, conjunctions on the first false side, and
/// `K_a ψ` through the first `a`-successor in world order that falsifies `ψ`,
/// moving away from `w` whenever possible.
pub fn refute(m: &PartialEpistemicModel, w: usize, via: Option<Agent>, f: &Formula) -> Refutation {
    let children = match f {
        Formula::Or(l, r) if f.as_implication().is_none() => {
            vec![refute(m, w, None, l), refute(m, w, None, r)]
        }
        Formula::And(l, r) if !f.is_falsum() => {
            let side = if Evaluator::new(m, l).holds(w) { r } else { l };
            vec![refute(m, w, None, side)]
        }
        Formula::Know(a, g) if *a < m.n() => {
            let mut ev = Evaluator::new(m, g);
            let next = m
                .relation(*a)
                .class(w)
                .iter()
                .copied()
                .filter(|&v| !ev.holds(v))
                .min_by_key(|&v| (v == w, v))
                .expect("a false knowledge formula has a falsifying successor");
            vec![refute(m, next, Some(*a), g)]
        }
        _ => Vec::new(),
    };
    Refutation { world: w, via, formula: f.clone(), children }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FacetMapError {
    #[error("expected images for {expected} facets, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("facet {0} has an empty image")]
    EmptyImage(String),
    #[error("facet index {0} is outside the target complex")]
    UnknownTarget(usize),
    #[error("image {image} of facet {facet} uses colors the facet lacks")]
    NotColorPreserving { facet: String, image: String },
    #[error("target facet {0} is not the image of any facet")]
    NotSurjective(String),
    #[error("facet {x} and {x2} have images {y} and {y2} sharing colors outside the inputs' common colors")]
    Carrier { x: String, x2: String, y: String, y2: String },
    #[error("the map starts from a different complex than the input model")]
    InputMismatch,
    #[error("unknown facet key `{0}`")]
    UnknownKey(String),
    #[error("{0}")]
    Complex(#[from] ComplexError),
    #[error("{0}")]
    Mp(#[from] MpError),
}

/// A color-preserving surjection from facets of `src` to nonempty sets of facets of `dst`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FacetMap {
    src: Complex,
    dst: Complex,
    map: Vec<Vec<usize>>,
}

impl FacetMap {
    pub fn new(src: Complex, dst: Complex, map: Vec<Vec<usize>>) -> Result<Self, FacetMapError> {
        if map.len() != src.facets().len() {
            return Err(FacetMapError::Shape { expected: src.facets().len(), got: map.len() });
        }
        let mut hit = vec![false; dst.facets().len()];
        let mut map = map;
        for (x, img) in src.facets().iter().zip(map.iter_mut()) {
            img.sort_unstable();
            img.dedup();
            if img.is_empty() {
                return Err(FacetMapError::EmptyImage(x.key()));
            }
            for &y in img.iter() {
                let yf = dst.facets().get(y).ok_or(FacetMapError::UnknownTarget(y))?;
                if !chi(yf.vertices()).is_subset(chi(x.vertices())) {
                    return Err(FacetMapError::NotColorPreserving { facet: x.key(), image: yf.key() });
                }
                hit[y] = true;
            }
        }
        if let Some(y) = hit.iter().position(|h| !h) {
            return Err(FacetMapError::NotSurjective(dst.facets()[y].key()));
        }
        Ok(FacetMap { src, dst, map })
    }

    /// Builds the map from facet keys, as in `{"map": {srcKey: [dstKey...]}}`.
    pub fn from_keys(src: Complex, dst: Complex, map: &BTreeMap<String, Vec<String>>) -> Result<Self, FacetMapError> {
        let mut images = vec![Vec::new(); src.facets().len()];
        for (k, vs) in map {
            let x = src.facet_by_key(k).ok_or_else(|| FacetMapError::UnknownKey(k.clone()))?;
            images[x] = vs
                .iter()
                .map(|v| dst.facet_by_key(v).ok_or_else(|| FacetMapError::UnknownKey(v.clone())))
                .collect::<Result<_, _>>()?;
        }
        FacetMap::new(src, dst, images)
    }

    pub fn src(&self) -> &Complex {
        &self.src
    }

    pub fn dst(&self) -> &Complex {
        &self.dst
    }

    pub fn image(&self, x: usize) -> &[usize] {
        &self.map[x]
    }

    pub fn to_keys(&self) -> BTreeMap<String, Vec<String>> {
        self.src
            .facets()
            .iter()
            .zip(&self.map)
            .map(|(x, img)| (x.key(), img.iter().map(|&y| self.dst.facets()[y].key()).collect()))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecKind {
    Task,
    Protocol,
}

/// A task `⟨I, O, Δ⟩` or protocol `⟨I, P, Ψ⟩` given by a facet map.
#[derive(Clone, Debug)]
pub struct SimplicialSpec {
    pub input: SimplicialModel,
    pub map: FacetMap,
    pub kind: SpecKind,
}

impl SimplicialSpec {
    /// Protocols must also satisfy `χ(Y ∩ Y') ⊆ χ(X ∩ X')` for `Y ∈ Ψ(X)`, `Y' ∈ Ψ(X')`.
    pub fn new(input: SimplicialModel, map: FacetMap, kind: SpecKind) -> Result<Self, FacetMapError> {
        if map.src() != input.complex() {
            return Err(FacetMapError::InputMismatch);
        }
        if kind == SpecKind::Protocol {
            let xs = input.facets();
            let ys = map.dst().facets();
            for (i, x) in xs.iter().enumerate() {
                for (j, x2) in xs.iter().enumerate().skip(i) {
                    let common = chi(&intersection(x, x2));
                    for &y in map.image(i) {
                        for &y2 in map.image(j) {
                            if !chi(&intersection(&ys[y], &ys[y2])).is_subset(common) {
                                return Err(FacetMapError::Carrier {
                                    x: x.key(),
                                    x2: x2.key(),
                                    y: ys[y].key(),
                                    y2: ys[y2].key(),
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(SimplicialSpec { input, map, kind })
    }

    pub fn output(&self) -> &Complex {
        self.map.dst()
    }
}

/// Consensus over `input`: output facets `O_v = {(a,v) | a ∈ Ag}` for each
/// value, and `Δ(X)` holds `O_v` for every value `v` appearing in `X`.
pub fn consensus_spec(input: &SimplicialModel) -> Result<SimplicialSpec, FacetMapError> {
    let n = input.n();
    let values = input.complex().values().to_vec();
    let outputs: Vec<Simplex> = values
        .iter()
        .map(|&v| Simplex::new((0..n).map(|a| Vertex::new(a, v))))
        .collect::<Result<_, _>>()?;
    let output = Complex::new(n, values.iter().copied(), outputs)?;
    let map = input
        .facets()
        .iter()
        .map(|x| {
            let held: BTreeSet<Value> = x.vertices().iter().map(|v| v.value).collect();
            held.iter().map(|&v| output.facets().iter().position(|o| o.value_of(0) == Some(v)).expect("declared")).collect()
        })
        .collect();
    let map = FacetMap::new(input.complex().clone(), output, map)?;
    SimplicialSpec::new(input.clone(), map, SpecKind::Task)
}

/// `Ψ(X) = {X}`: the protocol in which nobody communicates, or the task of
/// outputting one's own input.
pub fn identity_spec(input: &SimplicialModel, kind: SpecKind) -> Result<SimplicialSpec, FacetMapError> {
    let c = input.complex().clone();
    let map = (0..c.facets().len()).map(|x| vec![x]).collect();
    SimplicialSpec::new(input.clone(), FacetMap::new(c.clone(), c, map)?, kind)
}

/// One round of message passing as a facet map: each action `(⌈X⌉_t, t)`
/// becomes an output facet whose `a`-vertex numbers what `a` received, and
/// `Ψ(X)` collects the actions whose class contains `X`.
pub fn mp_spec(input: &SimplicialModel) -> Result<SimplicialSpec, FacetMapError> {
    let mp = mp_full(input)?;
    let output = frame_complex(mp.model.frame())?;
    let mut map = vec![Vec::new(); input.facets().len()];
    for (t, (class, _)) in mp.origin.iter().enumerate() {
        let frame = mp.model.frame();
        let facet = Simplex::new(
            frame.alive(t).iter().map(|a| Vertex::new(a, frame.relation(a).block_of(t).expect("alive") as Value)),
        )?;
        let y = output.facet_index(&facet).expect("facet of the frame complex");
        for &x in class.members() {
            map[x].push(y);
        }
    }
    let map = FacetMap::new(input.complex().clone(), output, map)?;
    SimplicialSpec::new(input.clone(), map, SpecKind::Protocol)
}

/// `κ̃`: actions are the output facets, `Y ∼_a Y'` iff `a ∈ χ(Y ∩ Y')`, and
/// `pre(Y) = ⋁ { ⋀ℓ(X) | Y ∈ Θ(X) }`.
pub fn kappa(spec: &SimplicialSpec) -> ActionModel {
    let out = spec.output();
    let n = spec.input.n();
    let keys = out.facets().iter().map(|y| WorldKey::new(y.key())).collect();
    let rel = (0..n).map(|a| PerRelation::from_keys(out.facets().iter().map(|y| y.value_of(a)))).collect();
    let mut sources: Vec<Vec<usize>> = vec![Vec::new(); out.facets().len()];
    for x in 0..spec.input.facets().len() {
        for &y in spec.map.image(x) {
            sources[y].push(x);
        }
    }
    let pre = sources
        .iter()
        .map(|xs| {
            Formula::disj(xs.iter().map(|&x| {
                Formula::conj(spec.input.labels(x).iter().map(|p| Formula::atom(p.agent, p.value)))
                    .unwrap_or_else(Formula::verum)
            }))
            .unwrap_or_else(Formula::falsum)
        })
        .collect();
    ActionModel::new(n, keys, rel, pre).expect("facet relations are PERs")
}

/// Result of the vertex-level decision map search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecisionOutcome {
    Found(BTreeMap<Vertex, Vertex>),
    Unsolvable,
    BudgetExceeded,
}

impl DecisionOutcome {
    pub fn found(&self) -> Option<&BTreeMap<Vertex, Vertex>> {
        match self {
            DecisionOutcome::Found(m) => Some(m),
            _ => None,
        }
    }
}

/// `δ(Ψ(X)) ⊆ Δ(X)`: every image of a protocol facet over `X` lies inside some task facet over `X`.
pub fn is_decision_map(protocol: &SimplicialSpec, task: &SimplicialSpec, delta: &BTreeMap<Vertex, Vertex>) -> bool {
    let pf = protocol.output().facets();
    let tf = task.output().facets();
    crate::complex::is_simplicial_map(delta, protocol.output(), task.output())
        && (0..protocol.input.facets().len()).all(|x| {
            protocol.map.image(x).iter().all(|&y| {
                let img: Vec<Vertex> = pf[y].vertices().iter().map(|v| delta[v]).collect();
                task.map.image(x).iter().any(|&z| img.iter().all(|u| tf[z].contains(u)))
            })
        })
}

/// Exhaustive color-preserving vertex assignment search for a decision map.
pub fn search_decision_map(protocol: &SimplicialSpec, task: &SimplicialSpec, budget: u64) -> DecisionOutcome {
    let pverts = protocol.output().vertices();
    let tverts = task.output().vertices();
    let pf = protocol.output().facets();
    let tf = task.output().facets();
    let pos: HashMap<Vertex, usize> = pverts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let domains: Vec<Vec<Vertex>> =
        pverts.iter().map(|v| tverts.iter().filter(|u| u.agent == v.agent).copied().collect()).collect();
    // constraints (protocol facet, allowed task facets), indexed by their last vertex
    let mut watch: Vec<Vec<(usize, usize)>> = vec![Vec::new(); pverts.len()];
    for x in 0..protocol.input.facets().len() {
        for &y in protocol.map.image(x) {
            for v in pf[y].vertices() {
                watch[pos[v]].push((y, x));
            }
        }
    }
    let mut assign: Vec<Option<Vertex>> = vec![None; pverts.len()];
    let ok = |assign: &[Option<Vertex>], y: usize, x: usize| {
        let img: Vec<Vertex> = pf[y].vertices().iter().filter_map(|v| assign[pos[v]]).collect();
        task.map.image(x).iter().any(|&z| img.iter().all(|u| tf[z].contains(u)))
    };
    let total = pverts.len();
    let mut next = vec![0usize; total];
    let mut level = 0;
    let mut nodes = 0u64;
    while level < total {
        let mut placed = false;
        while next[level] < domains[level].len() {
            let c = domains[level][next[level]];
            next[level] += 1;
            nodes += 1;
            if nodes > budget {
                return DecisionOutcome::BudgetExceeded;
            }
            assign[level] = Some(c);
            if watch[level].iter().all(|&(y, x)| ok(&assign, y, x)) {
                placed = true;
                break;
            }
            assign[level] = None;
        }
        if placed {
            level += 1;
            if level < total {
                next[level] = 0;
            }
        } else {
            if level == 0 {
                return DecisionOutcome::Unsolvable;
            }
            assign[level] = None;
            level -= 1;
            assign[level] = None;
        }
    }
    let delta: BTreeMap<Vertex, Vertex> =
        pverts.iter().zip(&assign).map(|(&v, u)| (v, u.expect("all assigned"))).collect();
    debug_assert!(is_decision_map(protocol, task, &delta));
    DecisionOutcome::Found(delta)
}

/// The solvability instance of the two action models `κ̃(protocol)`, `κ̃(task)`.
pub fn kappa_instance(protocol: &SimplicialSpec, task: &SimplicialSpec) -> Result<SolvabilityInstance, UpdateError> {
    SolvabilityInstance::new(&protocol.input, kappa(protocol), kappa(task))
}

/// Turns a decision map into a candidate morphism on the `κ̃` instance:
/// `(⌈X⌉, Y) ↦ sat_χ(Y)((⌈X⌉', Z))` for a task facet `Z ∈ Δ(X)` containing `δ(Y)`.
pub fn krip_from_top(
    protocol: &SimplicialSpec,
    task: &SimplicialSpec,
    inst: &SolvabilityInstance,
    delta: &BTreeMap<Vertex, Vertex>,
) -> Vec<Vec<usize>> {
    let pf = protocol.output().facets();
    let tf = task.output().facets();
    let src = &inst.protocol_update;
    let dst = &inst.task_update;
    src.worlds
        .iter()
        .enumerate()
        .map(|(w, u)| {
            let x = u.class.members()[0];
            let img: Vec<Vertex> = pf[u.action].vertices().iter().map(|v| delta[v]).collect();
            let target = task
                .map
                .image(x)
                .iter()
                .filter(|&&z| img.iter().all(|v| tf[z].contains(v)))
                .find_map(|&z| dst.world_of(x, z));
            match target {
                Some(t) => dst.model.saturation(src.model.alive(w), t),
                None => Vec::new(),
            }
        })
        .collect()
}

/// Both existence questions on one instance, and whether they agree.
#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub decision: DecisionOutcome,
    pub morphism: SearchReport,
    /// Whether the morphism built from the decision map passed `check_solution`.
    pub translated: Option<Result<(), SolutionError>>,
}

impl ProbeReport {
    pub fn decision_exists(&self) -> Option<bool> {
        match self.decision {
            DecisionOutcome::Found(_) => Some(true),
            DecisionOutcome::Unsolvable => Some(false),
            DecisionOutcome::BudgetExceeded => None,
        }
    }

    pub fn morphism_exists(&self) -> Option<bool> {
        match self.morphism.outcome {
            SearchOutcome::Found(_) => Some(true),
            SearchOutcome::Unsolvable => Some(false),
            SearchOutcome::BudgetExceeded => None,
        }
    }

    /// Both searches finished and reached the same answer.
    pub fn agree(&self) -> bool {
        matches!((self.decision_exists(), self.morphism_exists()), (Some(a), Some(b)) if a == b)
            && self.translated.as_ref().is_none_or(Result::is_ok)
    }
}

/// Runs the decision-map search and the morphism search on `κ̃` translations.
pub fn equivalence_probe(
    protocol: &SimplicialSpec,
    task: &SimplicialSpec,
    budget: u64,
) -> Result<ProbeReport, UpdateError> {
    let inst = kappa_instance(protocol, task)?;
    let decision = search_decision_map(protocol, task, budget);
    let morphism = search_solution(&inst, budget);
    let translated = decision
        .found()
        .map(|delta| check_solution(&inst, &krip_from_top(protocol, task, &inst, delta)).map(|_| ()));
    Ok(ProbeReport { decision, morphism, translated })
}
