#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use epistemia::actions::class_of;
use epistemia::agents::{restrict_atoms, AgentSet, Atom};
use epistemia::model::{PerRelation, WorldKey};
use epistemia::{FailurePattern, Formula, PartialEpistemicModel, SimplicialModel};
use proptest::prelude::*;

/// Satisfaction transcribed clause by clause, with no caching or blocks.
pub fn naive_eval(m: &PartialEpistemicModel, w: usize, f: &Formula) -> bool {
    match f {
        Formula::Atom(p) => m.labels(w).contains(p),
        Formula::Neg(g) => !naive_eval(m, w, g),
        Formula::And(l, r) => naive_eval(m, w, l) && naive_eval(m, w, r),
        Formula::Or(l, r) => naive_eval(m, w, l) || naive_eval(m, w, r),
        Formula::Know(a, g) => m.worlds().filter(|&v| m.related(*a, w, v)).all(|v| naive_eval(m, v, g)),
    }
}

/// Equivalence classes of the union of all agents' relations.
pub fn components(m: &PartialEpistemicModel) -> Vec<BTreeSet<usize>> {
    let mut comp: Vec<Option<usize>> = vec![None; m.len()];
    let mut out: Vec<BTreeSet<usize>> = Vec::new();
    for s in m.worlds() {
        if comp[s].is_some() {
            continue;
        }
        let id = out.len();
        let mut set = BTreeSet::new();
        let mut stack = vec![s];
        comp[s] = Some(id);
        while let Some(w) = stack.pop() {
            set.insert(w);
            for v in m.worlds() {
                if comp[v].is_none() && (0..m.n()).any(|a| m.related(a, w, v)) {
                    comp[v] = Some(id);
                    stack.push(v);
                }
            }
        }
        out.push(set);
    }
    out
}

/// `X ≡_t Y` straight from the definition, over an input model.
pub fn same_local_view(input: &SimplicialModel, t: &FailurePattern, x: usize, y: usize) -> bool {
    let (fx, fy) = (&input.facets()[x], &input.facets()[y]);
    t.alive()
        .iter()
        .all(|a| (0..t.n()).all(|b| fx.value_of(b) == fy.value_of(b) || t.send_fail(b, a)))
}

/// The `≡_t` class of `x` by scanning every facet.
pub fn brute_class(input: &SimplicialModel, t: &FailurePattern, x: usize) -> Vec<usize> {
    (0..input.facets().len()).filter(|&y| same_local_view(input, t, x, y)).collect()
}

pub fn class_matches_oracle(input: &SimplicialModel, t: &FailurePattern, x: usize) -> bool {
    class_of(input, t, x).members() == brute_class(input, t, x)
}

/// A random partial epistemic model: each agent puts each world into one of
/// three blocks or leaves it dead there; labels are arbitrary atoms over
/// values {0, 1}.
pub fn arb_model(max_agents: usize, max_worlds: usize) -> impl Strategy<Value = PartialEpistemicModel> {
    (1..=max_agents, 1..=max_worlds).prop_flat_map(|(n, k)| {
        let blocks = prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 0u8..3), k), n);
        let labels = prop::collection::vec(prop::collection::vec((0..n, 0i64..2), 0..=2 * n), k);
        (Just(n), blocks, labels).prop_map(|(n, blocks, labels)| {
            let rel = blocks.into_iter().map(PerRelation::from_keys).collect();
            let labels: Vec<Vec<Atom>> =
                labels.into_iter().map(|ls| ls.into_iter().map(|(a, v)| Atom::new(a, v)).collect()).collect();
            let keys = (0..labels.len()).map(|i| WorldKey::new(format!("w{i}"))).collect();
            PartialEpistemicModel::new(n, keys, rel, labels).expect("well-formed by construction")
        })
    })
}

fn arb_atom(n: usize) -> impl Strategy<Value = Formula> {
    (0..n, 0i64..2).prop_map(|(a, v)| Formula::atom(a, v))
}

/// Arbitrary formulas of modal depth and nesting at most `depth`.
pub fn arb_formula(n: usize, depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        4 => arb_atom(n),
        1 => (0..n).prop_map(Formula::alive),
        1 => Just(Formula::falsum()),
    ];
    leaf.prop_recursive(depth, 32, 2, move |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::neg),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            (0..n, inner.clone()).prop_map(|(a, g)| Formula::know(a, g)),
            (inner.clone(), inner).prop_map(|(l, r)| Formula::implies(l, r)),
        ]
    })
}

/// Propositional formulas over the atoms of `agents`.
fn arb_propositional(agents: Vec<usize>) -> impl Strategy<Value = Formula> {
    let leaf = (prop::sample::select(agents), 0i64..2).prop_map(|(a, v)| Formula::atom(a, v));
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::neg),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Formula::or(l, r)),
        ]
    })
}

/// `alive(B) ⇒ ψ` with `ψ` propositional over `B`.
fn arb_guarded_leaf(n: usize) -> impl Strategy<Value = Formula> {
    (1u64..(1 << n)).prop_flat_map(|bits| {
        let b = AgentSet::from_bits(bits);
        arb_propositional(b.iter().collect()).prop_map(move |psi| Formula::implies(Formula::alive_set(b), psi))
    })
}

/// Guarded positive formulas with at most `depth` nested connectives.
pub fn arb_guarded(n: usize, depth: u32) -> impl Strategy<Value = Formula> {
    arb_guarded_leaf(n).prop_recursive(depth, 32, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            (0..n, inner).prop_map(|(a, g)| Formula::know(a, g)),
        ]
    })
}

/// A source model, a target model and a map between them built to satisfy
/// the morphism laws.
#[derive(Clone, Debug)]
pub struct MorphismCase {
    pub src: PartialEpistemicModel,
    pub dst: PartialEpistemicModel,
    pub map: Vec<Vec<usize>>,
}

pub fn arb_morphism_case(max_agents: usize, max_worlds: usize) -> impl Strategy<Value = MorphismCase> {
    arb_local_model(max_agents, max_worlds.min(5)).prop_flat_map(move |dst| arb_morphism_into(dst, max_worlds))
}

/// A model whose atoms of each live agent depend only on that agent's block,
/// with no atoms for dead agents.
pub fn arb_local_model(max_agents: usize, max_worlds: usize) -> impl Strategy<Value = PartialEpistemicModel> {
    (1..=max_agents, 1..=max_worlds).prop_flat_map(|(n, k)| {
        let blocks = prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 0u8..2), k), n);
        // per agent and block, the values that agent holds there
        let values = prop::collection::vec(prop::collection::vec(prop::collection::btree_set(0i64..2, 0..=2), 2), n);
        (Just(n), blocks, values).prop_map(|(n, blocks, values)| {
            let k = blocks[0].len();
            let labels = (0..k)
                .map(|u| {
                    (0..n)
                        .filter_map(|a| blocks[a][u].map(|b| (a, b)))
                        .flat_map(|(a, b)| values[a][b as usize].iter().map(move |&v| Atom::new(a, v)))
                        .collect()
                })
                .collect();
            PartialEpistemicModel::new(
                n,
                (0..k).map(|i| WorldKey::new(format!("u{i}"))).collect(),
                blocks.into_iter().map(PerRelation::from_keys).collect(),
                labels,
            )
            .expect("well-formed by construction")
        })
    })
}

/// A source model over `dst`: each source world picks a base world of `dst`
/// and a subset of its live agents, refines the blocks of `dst` for those
/// agents, and maps onto the saturation of its base. Live agents' atoms in
/// the source are local again, so the source can serve as a target.
pub fn arb_morphism_into(dst: PartialEpistemicModel, max_worlds: usize) -> impl Strategy<Value = MorphismCase> {
    let n = dst.n();
    let k = dst.len();
    (1..=max_worlds).prop_flat_map(move |m| {
        let worlds = prop::collection::vec((0..k, any::<u64>(), prop::collection::vec(0u8..2, n)), m);
        let dead_atoms = prop::collection::vec(prop::collection::vec((0..n, 0i64..2), 0..=2), m);
        let dst = dst.clone();
        (worlds, dead_atoms).prop_map(move |(worlds, dead_atoms)| build_case(&dst, worlds, dead_atoms))
    })
}

fn build_case(dst: &PartialEpistemicModel, worlds: Vec<(usize, u64, Vec<u8>)>, dead_atoms: Vec<Vec<(usize, i64)>>) -> MorphismCase {
    let n = dst.n();
    let alive: Vec<AgentSet> =
        worlds.iter().map(|&(u, bits, _)| AgentSet::from_bits(bits).intersection(dst.alive(u))).collect();
    let rel = (0..n)
        .map(|a| {
            PerRelation::from_keys(worlds.iter().zip(&alive).map(|((u, _, tags), live)| {
                live.contains(a).then(|| (dst.relation(a).block_of(*u).expect("alive in base"), tags[a]))
            }))
        })
        .collect();
    let labels = worlds
        .iter()
        .zip(&alive)
        .zip(dead_atoms)
        .map(|(((u, _, _), live), extra)| {
            let mut l = restrict_atoms(dst.labels(*u), *live);
            l.extend(extra.into_iter().filter(|&(a, _)| !live.contains(a)).map(|(a, v)| Atom::new(a, v)));
            l
        })
        .collect();
    let src = PartialEpistemicModel::new(
        n,
        (0..worlds.len()).map(|i| WorldKey::new(format!("w{i}"))).collect(),
        rel,
        labels,
    )
    .expect("source well-formed");
    let map = worlds.iter().zip(&alive).map(|(&(u, _, _), &live)| dst.saturation(live, u)).collect();
    MorphismCase { src, dst: dst.clone(), map }
}

/// Pure subsets of the full binary input model, as facet selections.
pub fn arb_input(max_agents: usize) -> impl Strategy<Value = SimplicialModel> {
    (2..=max_agents).prop_flat_map(|n| {
        let full = SimplicialModel::input(n, &[0, 1]);
        let count = full.facets().len();
        prop::sample::subsequence((0..count).collect::<Vec<_>>(), 1..=count).prop_map(move |keep| {
            let c = full.complex();
            let facets: Vec<_> = keep.iter().map(|&i| c.facets()[i].clone()).collect();
            let complex = epistemia::Complex::new(n, [0, 1], facets).expect("subset of facets");
            SimplicialModel::with_input_labels(complex)
        })
    })
}

/// Facet key → labels, handy for building expectations by key.
pub fn labels_by_key(m: &PartialEpistemicModel) -> BTreeMap<String, Vec<Atom>> {
    m.worlds().map(|w| (m.key(w).to_string(), m.labels(w).to_vec())).collect()
}

pub mod props;
