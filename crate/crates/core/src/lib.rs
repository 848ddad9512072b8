//! Partial epistemic models, action models and the partial product update,
//! with a solvability checker and a logical-obstruction verifier for
//! distributed tasks.
//!
//! The usual pipeline: build an input model ([`complex::SimplicialModel::standard_input`]),
//! a protocol and a task action model ([`actions::mp_full`], [`actions::consensus_task`]),
//! update the input by both ([`update::product_update`]) and then either search for a
//! morphism between the updates ([`solvability::search_solution`]) or certify that
//! none exists with a formula ([`solvability::check_obstruction`]).

pub mod actions;
pub mod agents;
pub mod complex;
pub mod dot;
pub mod formula;
pub mod io;
pub mod model;
pub mod solvability;
pub mod update;

pub use actions::{consensus_task, mp0, mp_full, ActionModel, FailurePattern, InputClass};
pub use agents::{Agent, AgentSet, Atom, Value};
pub use complex::{derive_model, Complex, Simplex, SimplicialModel, Vertex};
pub use formula::{build_phi, eval, is_guarded_positive, is_valid, parse, Formula};
pub use model::{frame_isomorphic, verify_morphism, Morphism, PartialEpistemicModel, WorldKey};
pub use solvability::{check_obstruction, check_solution, search_solution, SolvabilityInstance};
pub use update::{product_update, UpdateModel};
