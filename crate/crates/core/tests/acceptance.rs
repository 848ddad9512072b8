//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use epistemia::agents::Atom;
use epistemia::formula::{phi_i, Evaluator};
use epistemia::model::is_frame_isomorphism;
use epistemia::solvability::{
    consensus_spec, equivalence_probe, identity_spec, mp_spec, ObstructionVerdict, SearchOutcome, SpecKind,
};
use epistemia::*;
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use common::props;

type Check = fn() -> Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn mp_instance(n: usize) -> SolvabilityInstance {
    let input = SimplicialModel::standard_input(n);
    let mp = mp_full(&input).expect("pure input").model;
    SolvabilityInstance::new(&input, mp, consensus_task(n)).expect("nonempty updates")
}

fn structure_n2() -> Result<(), String> {
    let input = SimplicialModel::standard_input(2);
    ensure!(input.facets().len() == 4, "input has {} facets", input.facets().len());
    let m = derive_model(&input);

    let it = product_update(&m, &consensus_task(2)).map_err(|e| e.to_string())?;
    ensure!(it.len() == 6, "I{{T}} has {} worlds", it.len());
    let sizes: Vec<usize> = common::components(&it.model).iter().map(BTreeSet::len).collect();
    ensure!(sizes == [3, 3], "I{{T}} components {sizes:?}");

    let mp = mp_full(&input).map_err(|e| e.to_string())?.model;
    let keys: BTreeSet<&str> = mp.actions().map(|t| mp.key(t).as_str()).collect();
    let expected: BTreeSet<&str> = [
        "[0:0,1:0]{}",
        "[0:0,1:1]{}",
        "[0:1,1:0]{}",
        "[0:1,1:1]{}",
        "[0:0,1:0;0:1,1:0]{0<1}",
        "[0:0,1:1;0:1,1:1]{0<1}",
        "[0:0,1:0;0:0,1:1]{1<0}",
        "[0:1,1:0;0:1,1:1]{1<0}",
    ]
    .into();
    ensure!(keys == expected, "MP actions {keys:?}");

    let imp = product_update(&m, &mp).map_err(|e| e.to_string())?;
    ensure!(imp.len() == 8, "I{{MP}} has {} worlds", imp.len());
    Ok(())
}

/// The decision map written out for two agents: without failures decide 1
/// only on input (1,1), otherwise decide the survivor's own input.
fn paper_delta(inst: &SolvabilityInstance) -> Vec<Vec<usize>> {
    let src = &inst.protocol_update;
    let dst = &inst.task_update.model;
    src.worlds
        .iter()
        .enumerate()
        .map(|(w, u)| {
            let alive = src.model.alive(w);
            let x = inst.input.key(u.class.members()[0]).as_str();
            let (i, j) = (&x[2..3], &x[6..7]);
            let key = match inst.protocol.key(u.action).as_str() {
                k if k.ends_with("{}") => {
                    let out = if (i, j) == ("1", "1") { "1" } else { "0" };
                    format!("[0:{i},1:{j}]@{out}")
                }
                k if k.ends_with("{0<1}") => format!("[0:{i},1:{j}]@{j}"),
                _ => format!("[0:{i},1:{j}]@{i}"),
            };
            dst.saturation(alive, dst.world(&key).expect("target world exists"))
        })
        .collect()
}

fn solvable_n2() -> Result<(), String> {
    let inst = mp_instance(2);
    check_solution(&inst, &paper_delta(&inst)).map_err(|e| format!("written-out map rejected: {e}"))?;
    let report = search_solution(&inst, 1_000_000);
    let SearchOutcome::Found(f) = report.outcome else {
        return Err(format!("search gave {:?}", report.outcome));
    };
    check_solution(&inst, f.images()).map_err(|e| format!("found map fails re-check: {e}"))?;
    Ok(())
}

/// Checks an obstruction run for `n` agents: the witness is the no-failure
/// world over the all-distinct input, and the first disjunct is refuted along
/// `∼2 ∼1 ∼2` to a world where only agent 0's input changed to 1.
fn obstruction(n: usize, task_worlds: usize, protocol_worlds: usize) -> Result<(), String> {
    let phi = build_phi(n).map_err(|e| e.to_string())?;
    ensure!(is_guarded_positive(&phi), "Φ_{n} is not guarded positive");
    let inst = mp_instance(n);
    ensure!(inst.task_update.len() == task_worlds, "I{{T}} has {} worlds", inst.task_update.len());
    ensure!(
        inst.protocol_update.len() == protocol_worlds,
        "I{{MP}} has {} worlds",
        inst.protocol_update.len()
    );
    ensure!(is_valid(&inst.task_update.model, &phi).valid, "Φ_{n} not valid in I{{T}}");

    let report = check_obstruction(&inst, &phi);
    ensure!(report.verdict == ObstructionVerdict::Obstruction, "verdict {:?}", report.verdict);
    let m = &inst.protocol_update.model;
    let w = report.witness.ok_or("no witness")?;
    let distinct: String = (0..n).map(|a| format!("{a}:{a}")).collect::<Vec<_>>().join(",");
    let expected_witness = format!("[{distinct}]@[{distinct}]{{}}");
    ensure!(m.key(w).as_str() == expected_witness, "witness {}", m.key(w));

    let trace = report.trace.ok_or("no trace")?;
    let chain = trace
        .chains()
        .into_iter()
        .find(|c| c.iter().map(|s| s.0).eq([2, 1, 2]))
        .ok_or("no ∼2 ∼1 ∼2 chain")?;
    let mut prev = w;
    for &(a, v) in &chain {
        ensure!(m.related(a, prev, v), "{} and {} are not {a}-related", m.key(prev), m.key(v));
        prev = v;
    }
    let end = prev;
    let mut want: Vec<Atom> = (0..n).map(|a| Atom::new(a, if a == 0 { 1 } else { a as i64 })).collect();
    want.sort();
    ensure!(m.labels(end) == want.as_slice(), "chain ends at {} with {:?}", m.key(end), m.labels(end));
    ensure!(!Evaluator::new(m, &phi_i(n, 0)).holds(end), "chain end satisfies φ_0");
    Ok(())
}

fn obstruction_n3() -> Result<(), String> {
    obstruction(3, 57, 225)
}

fn obstruction_n4() -> Result<(), String> {
    obstruction(4, 700, 14448)
}

fn frame_iso() -> Result<(), String> {
    for n in [2, 3] {
        let input = SimplicialModel::standard_input(n);
        let mp = mp_full(&input).map_err(|e| e.to_string())?.model;
        let u = product_update(&derive_model(&input), &mp).map_err(|e| e.to_string())?;
        let g = frame_isomorphic(&u.model, mp.frame()).ok_or(format!("no isomorphism for n={n}"))?;
        ensure!(is_frame_isomorphism(&u.model, mp.frame(), &g), "returned map is no isomorphism for n={n}");
    }
    Ok(())
}

fn bridge() -> Result<(), String> {
    let input = SimplicialModel::standard_input(2);
    let task = consensus_spec(&input).map_err(|e| e.to_string())?;
    let mp = mp_spec(&input).map_err(|e| e.to_string())?;
    let id = identity_spec(&input, SpecKind::Protocol).map_err(|e| e.to_string())?;
    for (name, protocol, exists) in [("MP", &mp, true), ("identity", &id, false)] {
        let r = equivalence_probe(protocol, &task, 1_000_000).map_err(|e| e.to_string())?;
        ensure!(r.agree(), "{name}: decision {:?}, morphism {:?}", r.decision, r.morphism.outcome);
        ensure!(r.decision_exists() == Some(exists), "{name}: expected existence {exists}");
    }
    Ok(())
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    check: impl Fn(&S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config { cases: 1000, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, |v| check(&v)).map_err(|e| format!("{name}: {e}"))
}

fn properties() -> Result<(), String> {
    run_property("PER laws", common::arb_model(3, 10), props::per_laws)?;
    run_property("≡_t laws", props::arb_class_case(), |(i, t, x)| props::sim_t_laws(i, t, *x))?;
    run_property("update laws", common::arb_input(3), props::update_laws)?;
    run_property("knowledge gain", props::arb_gain_case(), |(c, f)| props::knowledge_gain(c, f))?;
    run_property("evaluator", props::arb_eval_case(), |(m, f)| props::evaluator_agrees(m, f))?;
    Ok(())
}

fn negative_control() -> Result<(), String> {
    let input = SimplicialModel::standard_input(3);
    let inst = SolvabilityInstance::new(&input, consensus_task(3), consensus_task(3)).map_err(|e| e.to_string())?;
    let phi = build_phi(3).map_err(|e| e.to_string())?;
    let r = check_obstruction(&inst, &phi);
    ensure!(r.verdict == ObstructionVerdict::NotInvalidInProtocol, "verdict {:?}", r.verdict);
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, Check); 8] = [
        ("two-agent structure", 1, structure_n2),
        ("two-agent solvability", 5, solvable_n2),
        ("three-agent obstruction", 10, obstruction_n3),
        ("four-agent obstruction", 120, obstruction_n4),
        ("frame isomorphism", 30, frame_iso),
        ("simplicial equivalence", 60, bridge),
        ("property suites", 600, properties),
        ("negative control", 5, negative_control),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panic".into())));
        let took = start.elapsed();
        let result = result.and_then(|()| {
            if took > Duration::from_secs(limit) {
                Err(format!("took {took:.2?}, limit {limit}s"))
            } else {
                Ok(())
            }
        });
        match result {
            Ok(()) => println!("PASS {} {name} ({took:.2?})", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {} {name} ({took:.2?}): {e}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
