use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use epistemia::actions::consensus_task_over;
use epistemia::dot::{complex_dot, model_dot};
use epistemia::formula::{parse_with, ParseBounds};
use epistemia::io::{self, ComplexJson, ModelJson};
use epistemia::solvability::{
    consensus_spec, equivalence_probe, identity_spec, mp_spec, DecisionOutcome, SearchOutcome, SimplicialSpec,
    SpecKind,
};
use epistemia::*;

/// Partial epistemic models, product updates and task solvability
#[derive(Parser)]
#[command(name = "epistemia", version, about, long_about = None)]
struct Cli {
    /// Leave out refutation traces
    #[arg(long, global = true)]
    quiet: bool,
    /// Write to this file instead of standard output
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Input simplicial model with every combination of values
    GenInput {
        #[arg(long)]
        n: usize,
        /// Input values, defaults to 0..n
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<Value>>,
    },
    /// Inputless message-passing action model
    GenMp0 {
        #[arg(long)]
        n: usize,
    },
    /// Message-passing action model over an input model
    GenMp {
        #[arg(long)]
        input: PathBuf,
    },
    /// Task action model
    GenTask {
        kind: TaskKind,
        #[arg(long)]
        n: usize,
        /// Output values, defaults to 0..n
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<Value>>,
    },
    /// Partial product update of a model by an action model
    Update {
        /// Complex or model JSON
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        actions: PathBuf,
    },
    /// Validity of a formula, or its truth at one world
    Check {
        /// Complex or model JSON
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        world: Option<String>,
    },
    /// Search for a morphism solving a task with a protocol
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        task: PathBuf,
        /// Maximum number of search nodes
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Verify a logical obstruction, by default Φ_n for consensus against message passing
    Obstruct {
        #[arg(long, required_unless_present = "input")]
        n: Option<usize>,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long, requires_all = ["protocol", "task"])]
        input: Option<PathBuf>,
        #[arg(long, requires = "input")]
        protocol: Option<PathBuf>,
        #[arg(long, requires = "input")]
        task: Option<PathBuf>,
    },
    /// Compare the simplicial and the epistemic notion of solvability
    Bridge {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = ProtocolKind::Mp)]
        protocol: ProtocolKind,
        #[arg(long, value_enum, default_value_t = SpecTask::Consensus)]
        task: SpecTask,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Re-emit a complex or model as Graphviz or JSON
    Export {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "json", required_unless_present = "json")]
        dot: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskKind {
    Consensus,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolKind {
    Mp,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpecTask {
    Consensus,
    Identity,
}

/// Printed result and exit status.
struct Outcome {
    text: String,
    status: u8,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, status: 0 }
    }

    fn json(value: &Json, status: u8) -> Self {
        Outcome { text: io::to_pretty(value), status }
    }
}

const NEGATIVE: u8 = 1;
const INCONCLUSIVE: u8 = 3;

enum Loaded {
    Complex(SimplicialModel),
    Model(PartialEpistemicModel),
    Actions(ActionModel),
}

impl Loaded {
    fn model(&self) -> PartialEpistemicModel {
        match self {
            Loaded::Complex(sm) => derive_model(sm),
            Loaded::Model(m) => m.clone(),
            Loaded::Actions(a) => a.frame().clone(),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> Result<Loaded> {
    let text = read(path)?;
    let probe: Json = serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?;
    let loaded = if probe.get("facets").is_some() {
        io::read_complex(&text).map(Loaded::Complex)
    } else if probe.get("pre").is_some() {
        io::read_action_model(&text).map(Loaded::Actions)
    } else {
        io::read_model(&text).map(Loaded::Model)
    };
    loaded.with_context(|| format!("{}", path.display()))
}

fn load_complex(path: &Path) -> Result<SimplicialModel> {
    io::read_complex(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn load_actions(path: &Path) -> Result<ActionModel> {
    io::read_action_model(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn formula(text: &str, n: usize) -> Result<Formula> {
    parse_with(text, &ParseBounds { agents: Some(n), values: None }).with_context(|| format!("formula {text:?}"))
}

fn default_values(n: usize, values: Option<Vec<Value>>) -> Vec<Value> {
    values.unwrap_or_else(|| (0..n as Value).collect())
}

fn run(cli: Cli) -> Result<Outcome> {
    let quiet = cli.quiet;
    match cli.command {
        Command::GenInput { n, values } => {
            if n == 0 {
                bail!("--n must be at least 1");
            }
            let sm = SimplicialModel::input(n, &default_values(n, values));
            Ok(Outcome::ok(io::to_pretty(&ComplexJson::from(&sm))))
        }
        Command::GenMp0 { n } => {
            if n == 0 {
                bail!("--n must be at least 1");
            }
            Ok(Outcome::ok(io::to_pretty(&ModelJson::from(&mp0(n)))))
        }
        Command::GenMp { input } => {
            let mp = mp_full(&load_complex(&input)?)?;
            Ok(Outcome::ok(io::to_pretty(&ModelJson::from(&mp.model))))
        }
        Command::GenTask { kind: TaskKind::Consensus, n, values } => {
            if n == 0 {
                bail!("--n must be at least 1");
            }
            let t = consensus_task_over(n, &default_values(n, values));
            Ok(Outcome::ok(io::to_pretty(&ModelJson::from(&t))))
        }
        Command::Update { model, actions } => {
            let m = load(&model)?.model();
            let a = load_actions(&actions)?;
            let u = product_update(&m, &a)?;
            Ok(Outcome::ok(io::to_pretty(&io::update_json(&u, &m, &a))))
        }
        Command::Check { model, formula: text, world } => {
            let m = load(&model)?.model();
            let f = formula(&text, m.n())?;
            match world {
                Some(key) => {
                    let holds = epistemia::formula::eval_at(&m, &key, &f)?;
                    Ok(Outcome { text: format!("{holds}\n"), status: if holds { 0 } else { NEGATIVE } })
                }
                None => {
                    let v = is_valid(&m, &f);
                    Ok(match v.counterexample {
                        None => Outcome::ok("valid\n".into()),
                        Some(w) => Outcome { text: format!("invalid\nwitness {}\n", m.key(w)), status: NEGATIVE },
                    })
                }
            }
        }
        Command::Solve { input, protocol, task, budget } => {
            let inst = SolvabilityInstance::new(&load_complex(&input)?, load_actions(&protocol)?, load_actions(&task)?)?;
            let report = search_solution(&inst, budget);
            let src = &inst.protocol_update.model;
            let dst = &inst.task_update.model;
            Ok(match report.outcome {
                SearchOutcome::Found(f) => {
                    let map: BTreeMap<String, Vec<String>> = src
                        .worlds()
                        .map(|w| (src.key(w).to_string(), f.image(w).iter().map(|&u| dst.key(u).to_string()).collect()))
                        .collect();
                    Outcome::json(&json!({"verdict": "solvable", "nodes": report.nodes, "morphism": map}), 0)
                }
                SearchOutcome::Unsolvable => {
                    Outcome::json(&json!({"verdict": "unsolvable", "nodes": report.nodes}), NEGATIVE)
                }
                SearchOutcome::BudgetExceeded => {
                    Outcome::json(&json!({"verdict": "budget-exceeded", "nodes": report.nodes}), INCONCLUSIVE)
                }
            })
        }
        Command::Obstruct { n, formula: text, input, protocol, task } => {
            let inst = match (input, protocol, task) {
                (Some(i), Some(p), Some(t)) => {
                    SolvabilityInstance::new(&load_complex(&i)?, load_actions(&p)?, load_actions(&t)?)?
                }
                _ => {
                    let n = n.ok_or_else(|| anyhow!("--n is required without --input"))?;
                    if n < 2 {
                        bail!("--n must be at least 2");
                    }
                    let sm = SimplicialModel::standard_input(n);
                    SolvabilityInstance::new(&sm, mp_full(&sm)?.model, consensus_task(n))?
                }
            };
            let n = inst.input.n();
            let phi = match text {
                Some(t) => formula(&t, n)?,
                None => build_phi(n)?,
            };
            let report = check_obstruction(&inst, &phi);
            let witness_model = match report.verdict {
                epistemia::solvability::ObstructionVerdict::NotValidInTask => &inst.task_update.model,
                _ => &inst.protocol_update.model,
            };
            let mut out = json!({
                "verdict": report.verdict,
                "witness": report.witness.map(|w| witness_model.key(w).to_string()),
            });
            if let (Some(trace), false) = (&report.trace, quiet) {
                out["trace"] = serde_json::to_value(trace.steps(&inst.protocol_update.model))?;
            }
            let ok = report.verdict == epistemia::solvability::ObstructionVerdict::Obstruction;
            Ok(Outcome::json(&out, if ok { 0 } else { NEGATIVE }))
        }
        Command::Bridge { n, protocol, task, budget } => {
            if n < 2 {
                bail!("--n must be at least 2");
            }
            let sm = SimplicialModel::standard_input(n);
            let p: SimplicialSpec = match protocol {
                ProtocolKind::Mp => mp_spec(&sm)?,
                ProtocolKind::Identity => identity_spec(&sm, SpecKind::Protocol)?,
            };
            let t: SimplicialSpec = match task {
                SpecTask::Consensus => consensus_spec(&sm)?,
                SpecTask::Identity => identity_spec(&sm, SpecKind::Task)?,
            };
            let r = equivalence_probe(&p, &t, budget)?;
            let decision = match &r.decision {
                DecisionOutcome::Found(d) => {
                    let map: BTreeMap<String, String> = d
                        .iter()
                        .map(|(v, w)| (format!("{}:{}", v.agent, v.value), format!("{}:{}", w.agent, w.value)))
                        .collect();
                    json!({"verdict": "found", "map": map})
                }
                DecisionOutcome::Unsolvable => json!({"verdict": "unsolvable"}),
                DecisionOutcome::BudgetExceeded => json!({"verdict": "budget-exceeded"}),
            };
            let morphism = match r.morphism.outcome {
                SearchOutcome::Found(_) => "found",
                SearchOutcome::Unsolvable => "unsolvable",
                SearchOutcome::BudgetExceeded => "budget-exceeded",
            };
            let translated = r.translated.as_ref().map(|t| match t {
                Ok(()) => "accepted".to_string(),
                Err(e) => e.to_string(),
            });
            let out = json!({
                "decision": decision,
                "morphism": {"verdict": morphism, "nodes": r.morphism.nodes},
                "translated": translated,
                "agree": r.agree(),
            });
            Ok(Outcome::json(&out, if r.agree() { 0 } else { NEGATIVE }))
        }
        Command::Export { model, dot, json: _ } => {
            let loaded = load(&model)?;
            Ok(Outcome::ok(match (&loaded, dot) {
                (Loaded::Complex(sm), true) => complex_dot(sm),
                (Loaded::Model(m), true) => model_dot(m),
                (Loaded::Actions(a), true) => model_dot(a.frame()),
                (Loaded::Complex(sm), false) => io::to_pretty(&ComplexJson::from(sm)),
                (Loaded::Model(m), false) => io::to_pretty(&ModelJson::from(m)),
                (Loaded::Actions(a), false) => io::to_pretty(&ModelJson::from(a)),
            }))
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(text) = std::env::var("EPISTEMIA_THREADS") else {
        return Ok(());
    };
    let threads: usize = text.trim().parse().with_context(|| format!("EPISTEMIA_THREADS={text:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.output.clone();
    let result = configure_threads().and_then(|()| run(cli)).and_then(|o| {
        emit(&o.text, output.as_deref())?;
        Ok(o.status)
    });
    match result {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
