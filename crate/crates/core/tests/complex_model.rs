mod common;

use epistemia::complex::{chi, frame_complex, intersection, is_simplicial_map};
use epistemia::model::{is_frame_isomorphism, Law, MorphismError, PerRelation};
use epistemia::*;

fn v(a: usize, x: i64) -> Vertex {
    Vertex::new(a, x)
}

fn simplex(vs: &[(usize, i64)]) -> Simplex {
    Simplex::new(vs.iter().map(|&(a, x)| v(a, x))).unwrap()
}

/// A triangle with a white/red square attached along its white-red edge.
fn impure_model() -> (SimplicialModel, [Simplex; 4]) {
    let x0 = simplex(&[(0, 0), (1, 1), (2, 0)]);
    let x1 = simplex(&[(0, 0), (1, 0)]);
    let x2 = simplex(&[(0, 1), (1, 0)]);
    let x3 = simplex(&[(0, 1), (1, 1)]);
    let c = Complex::new(3, [0, 1], vec![x0.clone(), x1.clone(), x2.clone(), x3.clone()]).unwrap();
    (SimplicialModel::with_input_labels(c), [x0, x1, x2, x3])
}

#[test]
fn impure_square_model() {
    let (sm, xs) = impure_model();
    let m = derive_model(&sm);
    let w: Vec<usize> = xs.iter().map(|x| m.world(&x.key()).unwrap()).collect();
    assert_eq!(m.len(), 4);
    assert_eq!(m.alive(w[0]), AgentSet::full(3));
    for &u in &w[1..] {
        assert_eq!(m.alive(u), AgentSet::full(2));
    }
    let edges = [(0, 1, 0), (0, 3, 1), (1, 2, 1), (2, 3, 0)];
    for i in 0..4 {
        for j in 0..4 {
            for a in 0..3 {
                let expected = if i == j {
                    m.alive(w[i]).contains(a)
                } else {
                    edges.iter().any(|&(p, q, b)| b == a && (p, q) == (i.min(j), i.max(j)))
                };
                assert_eq!(m.related(a, w[i], w[j]), expected, "{i} {j} agent {a}");
            }
        }
    }
    assert!(m.is_proper());
    assert_eq!(chi(&intersection(&xs[0], &xs[1])), AgentSet::singleton(0));
}

#[test]
fn square_input_relations() {
    let m = derive_model(&SimplicialModel::standard_input(2));
    let w = |k: &str| m.world(k).unwrap();
    assert!(m.related(0, w("0:0,1:0"), w("0:0,1:1")));
    assert!(m.related(1, w("0:0,1:0"), w("0:1,1:0")));
    assert!((0..2).all(|a| !m.related(a, w("0:0,1:0"), w("0:1,1:1"))));
    assert!(m.check_per() && m.is_proper());
    assert_eq!(m.saturation(AgentSet::full(2), w("0:1,1:1")), [w("0:1,1:1")]);
    assert_eq!(m.saturation(AgentSet::EMPTY, 0).len(), 4);
}

#[test]
fn one_facet_complex() {
    let c = Complex::new(3, [0, 1], vec![simplex(&[(0, 1), (2, 0)])]).unwrap();
    let m = derive_model(&SimplicialModel::with_input_labels(c));
    assert_eq!(m.len(), 1);
    assert_eq!(m.alive(0), [0, 2].into_iter().collect());
}

#[test]
fn maximality_is_enforced() {
    let big = simplex(&[(0, 0), (1, 0)]);
    let small = simplex(&[(0, 0)]);
    assert!(Complex::new(2, [0], vec![big, small]).is_err());
    assert!(Simplex::new([v(0, 0), v(0, 1)]).is_err());
}

#[test]
fn simplicial_maps() {
    let c = SimplicialModel::standard_input(2).complex().clone();
    let id = c.vertices().into_iter().map(|x| (x, x)).collect();
    assert!(is_simplicial_map(&id, &c, &c));
    let mut bad = id.clone();
    bad.insert(v(0, 0), v(1, 0));
    assert!(!is_simplicial_map(&bad, &c, &c));
}

#[test]
fn saturation_in_mp_frame() {
    let input = SimplicialModel::standard_input(2);
    let mp = mp_full(&input).unwrap().model;
    let t = mp.action("[0:0,1:0;0:1,1:0]{0<1}").unwrap();
    assert_eq!(mp.frame().saturation(AgentSet::singleton(1), t), [t]);
}

#[test]
fn morphism_laws() {
    let input = SimplicialModel::standard_input(2);
    let m = derive_model(&input);
    let id: Vec<Vec<usize>> = m.worlds().map(|w| m.saturation(m.alive(w), w)).collect();
    assert!(verify_morphism(&id, &m, &m).is_ok());

    let mut swapped = id.clone();
    swapped.swap(0, 3);
    let err = verify_morphism(&swapped, &m, &m).unwrap_err();
    assert!(matches!(err, MorphismError::Violation(ref v) if v.law == Law::Preservation), "{err}");

    let mut wide = id.clone();
    wide[0] = vec![0, 1];
    let err = verify_morphism(&wide, &m, &m).unwrap_err();
    assert!(matches!(err, MorphismError::Violation(_)), "{err}");
    let mut empty = id;
    empty[1].clear();
    assert!(matches!(verify_morphism(&empty, &m, &m), Err(MorphismError::EmptyImage(_))));
}

#[test]
fn frame_isomorphism_examples() {
    let m = derive_model(&SimplicialModel::standard_input(3));
    let g = frame_isomorphic(&m, &m).unwrap();
    assert!(is_frame_isomorphism(&m, &m, &g));

    // chain a-b-c with two agents against the triangle under one agent
    let keys = |k: usize| (0..k).map(|i| WorldKey::new(format!("w{i}"))).collect::<Vec<_>>();
    let chain = PartialEpistemicModel::new(
        2,
        keys(3),
        vec![
            PerRelation::from_keys([Some(0), Some(0), Some(1)]),
            PerRelation::from_keys([Some(0), Some(1), Some(1)]),
        ],
        vec![Vec::new(); 3],
    )
    .unwrap();
    let triangle = PartialEpistemicModel::new(
        2,
        keys(3),
        vec![PerRelation::from_keys([Some(0); 3]), PerRelation::from_keys([Some(0); 3])],
        vec![Vec::new(); 3],
    )
    .unwrap();
    assert!(frame_isomorphic(&chain, &triangle).is_none());
    let g = frame_isomorphic(&chain, &chain).unwrap();
    assert_eq!(g, [0, 1, 2]);
}

#[test]
fn frame_complex_of_mp() {
    let input = SimplicialModel::standard_input(2);
    let mp = mp_full(&input).unwrap().model;
    let c = frame_complex(mp.frame()).unwrap();
    assert_eq!(c.facets().len(), 8);
    assert_eq!(c.facets().iter().filter(|x| x.dim() == 1).count(), 4);
    assert!(!c.is_pure());
}
