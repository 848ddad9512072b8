//! JSON forms of complexes, models, action models, update models, failure
//! patterns and facet maps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{ActionModel, FailurePattern, PatternError};
use crate::agents::{Agent, AgentSet, Atom, Value};
use crate::complex::{Complex, ComplexError, Simplex, SimplicialModel, Vertex};
use crate::formula::{self, Formula, ParseError};
use crate::model::{ModelError, PartialEpistemicModel, PerRelation, WorldKey};
use crate::update::UpdateModel;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Complex(#[from] ComplexError),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Pattern(#[from] PatternError),
    #[error("precondition of {action}: {source}")]
    Formula { action: String, source: ParseError },
    #[error("label index {index} out of range for {len} facets")]
    LabelIndex { index: usize, len: usize },
    #[error("world {0} has labels but is not listed")]
    UnknownLabelWorld(String),
    #[error("action model has no precondition for {0}")]
    MissingPre(String),
    #[error("relation given for agent {agent}, but the model has {n} agents")]
    AgentRange { agent: Agent, n: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub n: usize,
    pub values: Vec<Value>,
    pub facets: Vec<Vec<(Agent, Value)>>,
    /// Facet position in `facets` → labels; input labels when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<usize, Vec<Atom>>>,
}

impl From<&SimplicialModel> for ComplexJson {
    fn from(sm: &SimplicialModel) -> Self {
        let c = sm.complex();
        let labels = (!sm.has_input_labels())
            .then(|| (0..c.facets().len()).map(|i| (i, sm.labels(i).to_vec())).collect());
        ComplexJson {
            n: c.n(),
            values: c.values().to_vec(),
            facets: c.facets().iter().map(|x| x.vertices().iter().map(|&v| v.into()).collect()).collect(),
            labels,
        }
    }
}

impl TryFrom<ComplexJson> for SimplicialModel {
    type Error = IoError;

    fn try_from(j: ComplexJson) -> Result<Self, IoError> {
        let facets: Vec<Simplex> = j
            .facets
            .iter()
            .map(|vs| Simplex::new(vs.iter().map(|&v| Vertex::from(v))))
            .collect::<Result<_, _>>()?;
        let complex = Complex::new(j.n, j.values.iter().copied(), facets.clone())?;
        let Some(given) = j.labels else {
            return Ok(SimplicialModel::with_input_labels(complex));
        };
        if let Some(&index) = given.keys().find(|&&i| i >= facets.len()) {
            return Err(IoError::LabelIndex { index, len: facets.len() });
        }
        // labels refer to positions in the file; the complex keeps facets sorted
        let mut labels = vec![Vec::new(); facets.len()];
        for (i, ls) in given {
            let pos = complex.facet_index(&facets[i]).expect("facet of the complex");
            labels[pos] = ls;
        }
        Ok(SimplicialModel::new(complex, labels)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorldJson {
    Key(String),
    Update { class: Vec<String>, action: String },
}

impl WorldJson {
    pub fn key(&self) -> String {
        match self {
            WorldJson::Key(k) => k.clone(),
            WorldJson::Update { class, action } => format!("[{}]@{}", class.join(";"), action),
        }
    }
}

/// Model, action-model and update-model JSON. Edges are listed as `[i, j]`
/// with `i <= j`, including `[i, i]` for every world where the agent is alive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelJson {
    pub n: usize,
    pub worlds: Vec<WorldJson>,
    pub rel: BTreeMap<Agent, Vec<(usize, usize)>>,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<Atom>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre: Option<BTreeMap<String, String>>,
}

fn frame_json(m: &PartialEpistemicModel, worlds: Vec<WorldJson>) -> ModelJson {
    ModelJson {
        n: m.n(),
        worlds,
        rel: (0..m.n()).map(|a| (a, m.relation(a).edges())).collect(),
        labels: m
            .worlds()
            .filter(|&w| !m.labels(w).is_empty())
            .map(|w| (m.key(w).to_string(), m.labels(w).to_vec()))
            .collect(),
        pre: None,
    }
}

impl From<&PartialEpistemicModel> for ModelJson {
    fn from(m: &PartialEpistemicModel) -> Self {
        frame_json(m, m.keys().iter().map(|k| WorldJson::Key(k.to_string())).collect())
    }
}

impl From<&ActionModel> for ModelJson {
    fn from(a: &ActionModel) -> Self {
        let mut j = ModelJson::from(a.frame());
        j.pre = Some(a.actions().map(|t| (a.key(t).to_string(), a.pre(t).to_string())).collect());
        j
    }
}

/// Update models list their worlds as `{"class": [...], "action": ...}`.
pub fn update_json(u: &UpdateModel, input: &PartialEpistemicModel, actions: &ActionModel) -> ModelJson {
    let worlds = u
        .worlds
        .iter()
        .map(|w| WorldJson::Update {
            class: w.class.members().iter().map(|&x| input.key(x).to_string()).collect(),
            action: actions.key(w.action).to_string(),
        })
        .collect();
    frame_json(&u.model, worlds)
}

impl TryFrom<&ModelJson> for PartialEpistemicModel {
    type Error = IoError;

    fn try_from(j: &ModelJson) -> Result<Self, IoError> {
        let keys: Vec<WorldKey> = j.worlds.iter().map(|w| WorldKey::new(w.key())).collect();
        if let Some(&agent) = j.rel.keys().find(|&&a| a >= j.n) {
            return Err(IoError::AgentRange { agent, n: j.n });
        }
        let rel = (0..j.n)
            .map(|a| PerRelation::from_edges(a, keys.len(), j.rel.get(&a).map_or(&[][..], Vec::as_slice)))
            .collect::<Result<_, _>>()?;
        let mut labels = vec![Vec::new(); keys.len()];
        for (k, ls) in &j.labels {
            let w = keys.iter().position(|x| x.as_str() == k).ok_or_else(|| IoError::UnknownLabelWorld(k.clone()))?;
            labels[w] = ls.clone();
        }
        Ok(PartialEpistemicModel::new(j.n, keys, rel, labels)?)
    }
}

impl TryFrom<&ModelJson> for ActionModel {
    type Error = IoError;

    fn try_from(j: &ModelJson) -> Result<Self, IoError> {
        let frame = PartialEpistemicModel::try_from(j)?;
        let empty = BTreeMap::new();
        let texts = j.pre.as_ref().unwrap_or(&empty);
        let pre = frame
            .keys()
            .iter()
            .map(|k| {
                let text = texts.get(k.as_str()).ok_or_else(|| IoError::MissingPre(k.to_string()))?;
                let bounds = formula::ParseBounds { agents: Some(j.n), values: None };
                formula::parse_with(text, &bounds).map_err(|source| IoError::Formula { action: k.to_string(), source })
            })
            .collect::<Result<Vec<Formula>, _>>()?;
        Ok(ActionModel::from_frame(frame, pre)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternJson {
    pub fails: BTreeMap<Agent, Vec<Agent>>,
}

impl From<&FailurePattern> for PatternJson {
    fn from(t: &FailurePattern) -> Self {
        PatternJson { fails: t.fails().iter().map(|(&d, rs)| (d, rs.iter().collect())).collect() }
    }
}

impl PatternJson {
    pub fn to_pattern(&self, n: usize) -> Result<FailurePattern, PatternError> {
        FailurePattern::new(n, self.fails.iter().map(|(&d, rs)| (d, rs.iter().copied().collect::<AgentSet>())))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetMapJson {
    pub map: BTreeMap<String, Vec<String>>,
}

pub fn read_complex(text: &str) -> Result<SimplicialModel, IoError> {
    SimplicialModel::try_from(serde_json::from_str::<ComplexJson>(text)?)
}

pub fn read_model(text: &str) -> Result<PartialEpistemicModel, IoError> {
    PartialEpistemicModel::try_from(&serde_json::from_str::<ModelJson>(text)?)
}

pub fn read_action_model(text: &str) -> Result<ActionModel, IoError> {
    ActionModel::try_from(&serde_json::from_str::<ModelJson>(text)?)
}

pub fn to_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}
