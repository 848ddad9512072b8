//! The property checks of the acceptance suite, as functions over generated
//! inputs.

use epistemia::actions::{class_of, failure_patterns};
use epistemia::agents::{restrict_atoms, AgentSet};
use epistemia::formula::Evaluator;
use epistemia::{derive_model, eval, is_guarded_positive, mp_full, product_update, verify_morphism};
use epistemia::{FailurePattern, Formula, PartialEpistemicModel, SimplicialModel};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use super::{brute_class, naive_eval, MorphismCase};

pub fn per_laws(m: &PartialEpistemicModel) -> Result<(), TestCaseError> {
    prop_assert!(m.check_per());
    for a in 0..m.n() {
        for w in m.worlds() {
            prop_assert_eq!(m.related(a, w, w), m.alive(w).contains(a));
            for v in m.worlds() {
                prop_assert_eq!(m.related(a, w, v), m.related(a, v, w));
                if m.related(a, w, v) {
                    for u in m.worlds() {
                        prop_assert!(!m.related(a, v, u) || m.related(a, w, u));
                    }
                }
            }
        }
    }
    Ok(())
}

/// `(n, values, pattern, facet)` over full input models with at most three agents.
pub fn arb_class_case() -> impl Strategy<Value = (SimplicialModel, FailurePattern, usize)> {
    (2usize..=3, prop::sample::select(vec![vec![0i64, 1], vec![0, 1, 2]])).prop_flat_map(|(n, values)| {
        let input = SimplicialModel::input(n, &values);
        let patterns = failure_patterns(n);
        let facets = input.facets().len();
        (Just(input), prop::sample::select(patterns), 0..facets)
    })
}

/// `≡_t` agrees with its definition, is an equivalence, does not depend on
/// the representative, and has `|V|^h(t)` members on full inputs.
pub fn sim_t_laws(input: &SimplicialModel, t: &FailurePattern, x: usize) -> Result<(), TestCaseError> {
    let class = class_of(input, t, x);
    let expected = brute_class(input, t, x);
    prop_assert_eq!(class.members(), expected.as_slice());
    prop_assert!(class.contains(x));
    for &y in class.members() {
        prop_assert_eq!(&class_of(input, t, y), &class);
    }
    let h = t.fails().values().filter(|&&rs| rs == t.alive()).count() as u32;
    prop_assert_eq!(class.len(), input.complex().values().len().pow(h));
    Ok(())
}

/// The update relation is independent of class representatives, the update
/// is a PER model with `Alive = Alive(t)`, and live agents' atoms survive the
/// label intersection.
pub fn update_laws(input: &SimplicialModel) -> Result<(), TestCaseError> {
    let m = derive_model(input);
    let mp = mp_full(input).map_err(|e| TestCaseError::fail(e.to_string()))?.model;
    let u = product_update(&m, &mp).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let um = &u.model;
    prop_assert!(um.check_per());
    for w in um.worlds() {
        let t = u.action(w);
        prop_assert_eq!(um.alive(w), mp.alive(t));
        for &x in u.class(w).members() {
            prop_assert!(mp.alive(t).is_subset(m.alive(x)));
            for a in mp.alive(t).iter() {
                let one = AgentSet::singleton(a);
                prop_assert_eq!(restrict_atoms(um.labels(w), one), restrict_atoms(m.labels(x), one));
            }
        }
        for v in um.worlds() {
            let s = u.action(v);
            for a in 0..um.n() {
                let got = um.related(a, w, v);
                for &x in u.class(w).members() {
                    for &y in u.class(v).members() {
                        prop_assert_eq!(got, m.related(a, x, y) && mp.related(a, t, s));
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn arb_gain_case() -> impl Strategy<Value = (MorphismCase, Formula)> {
    super::arb_morphism_case(3, 10).prop_flat_map(|c| {
        let n = c.src.n();
        (Just(c), super::arb_guarded(n, 4))
    })
}

/// Guarded positive truth at any image forces truth at the source world.
pub fn knowledge_gain(c: &MorphismCase, phi: &Formula) -> Result<(), TestCaseError> {
    prop_assert!(is_guarded_positive(phi));
    let f = verify_morphism(&c.map, &c.src, &c.dst).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for w in c.src.worlds() {
        for &u in f.image(w) {
            prop_assert!(!naive_eval(&c.dst, u, phi) || naive_eval(&c.src, w, phi));
        }
    }
    Ok(())
}

pub fn arb_eval_case() -> impl Strategy<Value = (PartialEpistemicModel, Formula)> {
    super::arb_model(3, 10).prop_flat_map(|m| {
        let n = m.n();
        (Just(m), super::arb_formula(n, 4))
    })
}

pub fn evaluator_agrees(m: &PartialEpistemicModel, f: &Formula) -> Result<(), TestCaseError> {
    let mut ev = Evaluator::new(m, f);
    for w in m.worlds() {
        let expected = naive_eval(m, w, f);
        prop_assert_eq!(ev.holds(w), expected);
        prop_assert_eq!(eval(m, w, f).unwrap(), expected);
    }
    Ok(())
}
