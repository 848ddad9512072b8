//! Graphviz export. Edges are colored by agent: 0 gray, 1 red, 2 blue, then
//! the palette cycles.

use std::fmt::Write;

use crate::agents::Agent;
use crate::complex::{chi, intersection, SimplicialModel};
use crate::model::PartialEpistemicModel;

const PALETTE: [&str; 3] = ["gray", "red", "blue"];

pub fn agent_color(a: Agent) -> &'static str {
    PALETTE[a % PALETTE.len()]
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// One node per facet, one edge per pair of facets and shared color.
pub fn complex_dot(sm: &SimplicialModel) -> String {
    let facets = sm.facets();
    let mut out = String::from("graph complex {\n");
    for (i, x) in facets.iter().enumerate() {
        writeln!(out, "  f{i} [label={}];", quote(&x.to_string())).unwrap();
    }
    for i in 0..facets.len() {
        for j in i + 1..facets.len() {
            for a in chi(&intersection(&facets[i], &facets[j])).iter() {
                writeln!(out, "  f{i} -- f{j} [color={}, label=\"{a}\"];", agent_color(a)).unwrap();
            }
        }
    }
    out.push_str("}\n");
    out
}

/// One node per world labeled with its key, alive set and atoms; one edge
/// per pair of distinct related worlds and agent.
pub fn model_dot(m: &PartialEpistemicModel) -> String {
    let mut out = String::from("graph model {\n");
    for w in m.worlds() {
        let atoms: Vec<String> = m.labels(w).iter().map(ToString::to_string).collect();
        let label = format!("{}\\nalive {}\\n{}", m.key(w), m.alive(w), atoms.join(" "));
        writeln!(out, "  w{w} [label={}];", quote(&label).replace("\\\\n", "\\n")).unwrap();
    }
    for a in 0..m.n() {
        for (i, j) in m.relation(a).edges() {
            if i != j {
                writeln!(out, "  w{i} -- w{j} [color={}, label=\"{a}\"];", agent_color(a)).unwrap();
            }
        }
    }
    out.push_str("}\n");
    out
}
