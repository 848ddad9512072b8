//! Epistemic formulas over the atoms `input(a,v)`: syntax tree, text
//! syntax, satisfaction over partial epistemic models, and the guarded
//! positive fragment.
//!
//! Text grammar (whitespace-insensitive, loosest first):
//!
//! ```text
//! imp  ::= or ( "->" imp )?            right-associative
//! or   ::= and ( "|" and )*
//! and  ::= un ( "&" un )*
//! un   ::= "~" un | "K" agent un | "(" imp ")"
//!        | "input(" agent "," value ")" | "alive(" agent ("," agent)* ")"
//!        | "true" | "false"
//! ```
//!
//! Only `Atom`, `Neg`, `And`, `Or` and `Know` are primitive. The rest is
//! sugar: `p -> q` is `~p | q`, `false` is `input(0,0) & ~input(0,0)`,
//! `true` is `~false`, `alive(a)` is `~K a false` and `alive(a,b,..)` is the
//! left-nested conjunction of the single guards.

use std::fmt;

use thiserror::Error;

use crate::agents::{Agent, AgentSet, Atom, Value};
use crate::model::{ModelError, PartialEpistemicModel};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    Neg(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Know(Agent, Box<Formula>),
}

impl Formula {
    pub fn atom(agent: Agent, value: Value) -> Self {
        Formula::Atom(Atom::new(agent, value))
    }

    pub fn neg(f: Formula) -> Self {
        Formula::Neg(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn know(a: Agent, f: Formula) -> Self {
        Formula::Know(a, Box::new(f))
    }

    /// `p ⇒ q`, i.e. `¬p ∨ q`.
    pub fn implies(p: Formula, q: Formula) -> Self {
        Formula::or(Formula::neg(p), q)
    }

    /// `input(0,0) ∧ ¬input(0,0)`.
    pub fn falsum() -> Self {
        Formula::and(Formula::atom(0, 0), Formula::neg(Formula::atom(0, 0)))
    }

    pub fn verum() -> Self {
        Formula::neg(Formula::falsum())
    }

    /// `alive(a) = ¬K_a false`.
    pub fn alive(a: Agent) -> Self {
        Formula::neg(Formula::know(a, Formula::falsum()))
    }

    /// `alive(B)`, the left-nested conjunction of `alive(a)` over `B` in
    /// increasing order; `true` when `B` is empty.
    pub fn alive_set(agents: AgentSet) -> Self {
        Formula::conj(agents.iter().map(Formula::alive)).unwrap_or_else(Formula::verum)
    }

    /// Left-nested conjunction, `None` for an empty iterator.
    pub fn conj(fs: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        fs.into_iter().reduce(Formula::and)
    }

    /// Left-nested disjunction, `None` for an empty iterator.
    pub fn disj(fs: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        fs.into_iter().reduce(Formula::or)
    }

    /// Number of nodes of the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::Neg(f) | Formula::Know(_, f) => 1 + f.size(),
            Formula::And(l, r) | Formula::Or(l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Neg(f) | Formula::Know(_, f) => 1 + f.depth(),
            Formula::And(l, r) | Formula::Or(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn is_falsum(&self) -> bool {
        matches!(self, Formula::And(l, r)
            if **l == Formula::atom(0, 0) && **r == Formula::neg(Formula::atom(0, 0)))
    }

    pub fn as_alive(&self) -> Option<Agent> {
        match self {
            Formula::Neg(inner) => match &**inner {
                Formula::Know(a, f) if f.is_falsum() => Some(*a),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn is_verum(&self) -> bool {
        matches!(self, Formula::Neg(f) if f.is_falsum())
    }

    /// `Or(Neg(p), q)` printed as `p -> q`, unless `Neg(p)` has its own sugar.
    pub fn as_implication(&self) -> Option<(&Formula, &Formula)> {
        match self {
            Formula::Or(l, r) => match &**l {
                Formula::Neg(p) if l.as_alive().is_none() && !l.is_verum() => Some((p, r)),
                _ => None,
            },
            _ => None,
        }
    }
}

// Printer precedences.
const P_IMP: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_UNARY: u8 = 4;

fn write_formula(f: &Formula, ctx: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    if f.is_falsum() {
        return out.write_str("false");
    }
    if f.is_verum() {
        return out.write_str("true");
    }
    if let Some(a) = f.as_alive() {
        return write!(out, "alive({a})");
    }
    let (prec, body): (u8, Box<dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result + '_>) =
        if let Some((p, q)) = f.as_implication() {
            (P_IMP, Box::new(move |o| {
                write_formula(p, P_OR, o)?;
                o.write_str(" -> ")?;
                write_formula(q, P_IMP, o)
            }))
        } else {
            match f {
                Formula::Atom(p) => (5, Box::new(move |o| write!(o, "{p}"))),
                Formula::Neg(g) => (P_UNARY, Box::new(move |o| {
                    o.write_str("~")?;
                    write_formula(g, P_UNARY, o)
                })),
                Formula::Know(a, g) => (P_UNARY, Box::new(move |o| {
                    write!(o, "K {a} ")?;
                    write_formula(g, P_UNARY, o)
                })),
                Formula::And(l, r) => (P_AND, Box::new(move |o| {
                    write_formula(l, P_AND, o)?;
                    o.write_str(" & ")?;
                    write_formula(r, P_UNARY, o)
                })),
                Formula::Or(l, r) => (P_OR, Box::new(move |o| {
                    write_formula(l, P_OR, o)?;
                    o.write_str(" | ")?;
                    write_formula(r, P_AND, o)
                })),
            }
        };
    if prec < ctx {
        out.write_str("(")?;
        body(out)?;
        out.write_str(")")
    } else {
        body(out)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, P_IMP, f)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("agent {agent} at offset {pos} is out of range for {n} agents")]
    AgentRange { pos: usize, agent: Agent, n: usize },
    #[error("value {value} at offset {pos} is not a declared value")]
    ValueRange { pos: usize, value: Value },
}

/// Optional range checks applied while parsing.
#[derive(Clone, Debug, Default)]
pub struct ParseBounds<'a> {
    pub agents: Option<usize>,
    pub values: Option<&'a [Value]>,
}

/// Parses a formula without range checks.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    parse_with(text, &ParseBounds::default())
}

/// Parses a formula, rejecting agents `>= bounds.agents` and values outside
/// `bounds.values`.
pub fn parse_with(text: &str, bounds: &ParseBounds<'_>) -> Result<Formula, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, bounds };
    let f = p.imp()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'s, 'b> {
    src: &'s [u8],
    pos: usize,
    bounds: &'b ParseBounds<'b>,
}

impl Parser<'_, '_> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}`")))
        }
    }

    /// A keyword must not run into an identifier character.
    fn eat_word(&mut self, word: &str) -> bool {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        if rest.starts_with(word.as_bytes()) {
            let next = rest.get(word.len()).copied();
            if !next.is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
                self.pos += word.len();
                return true;
            }
        }
        false
    }

    fn integer(&mut self) -> Result<(usize, i64), ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos < self.src.len() && self.src[self.pos] == b'-' {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse::<i64>()
            .map(|v| (start, v))
            .map_err(|_| ParseError::Syntax { pos: start, msg: "expected an integer".into() })
    }

    fn agent(&mut self) -> Result<Agent, ParseError> {
        let (pos, v) = self.integer()?;
        if v < 0 || v as usize >= crate::agents::MAX_AGENTS {
            return Err(ParseError::Syntax { pos, msg: format!("invalid agent id {v}") });
        }
        let a = v as Agent;
        if let Some(n) = self.bounds.agents {
            if a >= n {
                return Err(ParseError::AgentRange { pos, agent: a, n });
            }
        }
        Ok(a)
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        let (pos, v) = self.integer()?;
        if let Some(vals) = self.bounds.values {
            if !vals.contains(&v) {
                return Err(ParseError::ValueRange { pos, value: v });
            }
        }
        Ok(v)
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.eat("->") {
            let rhs = self.imp()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.and()?;
        while self.eat("|") {
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.eat("&") {
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat("~") {
            return Ok(Formula::neg(self.unary()?));
        }
        if self.eat("(") {
            let f = self.imp()?;
            self.expect(")")?;
            return Ok(f);
        }
        if self.eat_word("true") {
            return Ok(Formula::verum());
        }
        if self.eat_word("false") {
            return Ok(Formula::falsum());
        }
        if self.eat_word("K") {
            let a = self.agent()?;
            return Ok(Formula::know(a, self.unary()?));
        }
        if self.eat_word("input") {
            self.expect("(")?;
            let a = self.agent()?;
            self.expect(",")?;
            let v = self.value()?;
            self.expect(")")?;
            return Ok(Formula::atom(a, v));
        }
        if self.eat_word("alive") {
            self.expect("(")?;
            let mut f = Formula::alive(self.agent()?);
            while self.eat(",") {
                f = Formula::and(f, Formula::alive(self.agent()?));
            }
            self.expect(")")?;
            return Ok(f);
        }
        self.skip_ws();
        if self.pos >= self.src.len() {
            Err(self.err("unexpected end of input"))
        } else {
            Err(self.err("expected a formula"))
        }
    }
}

enum Node {
    Atom(Atom),
    Neg(usize),
    And(usize, usize),
    Or(usize, usize),
    Know(Agent, usize, usize),
}

/// Evaluates one formula over a model, memoizing the truth value of every
/// knowledge subformula per world. Propositional nodes are cheap to recompute
/// at a fixed world and are not cached.
pub struct Evaluator<'m> {
    model: &'m PartialEpistemicModel,
    nodes: Vec<Node>,
    root: usize,
    // per Know node, per world: 0 unknown, 1 false, 2 true
    memo: Vec<Vec<u8>>,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m PartialEpistemicModel, formula: &Formula) -> Self {
        let mut ev = Evaluator { model, nodes: Vec::new(), root: 0, memo: Vec::new() };
        ev.root = ev.compile(formula);
        ev
    }

    fn compile(&mut self, f: &Formula) -> usize {
        let node = match f {
            Formula::Atom(p) => Node::Atom(*p),
            Formula::Neg(g) => Node::Neg(self.compile(g)),
            Formula::And(l, r) => {
                let (l, r) = (self.compile(l), self.compile(r));
                Node::And(l, r)
            }
            Formula::Or(l, r) => {
                let (l, r) = (self.compile(l), self.compile(r));
                Node::Or(l, r)
            }
            Formula::Know(a, g) => {
                let g = self.compile(g);
                self.memo.push(Vec::new());
                Node::Know(*a, g, self.memo.len() - 1)
            }
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// `M, w ⊨ φ` for the compiled formula.
    pub fn holds(&mut self, w: usize) -> bool {
        self.node(self.root, w)
    }

    fn node(&mut self, id: usize, w: usize) -> bool {
        match self.nodes[id] {
            Node::Atom(p) => self.model.has_atom(w, &p),
            Node::Neg(g) => !self.node(g, w),
            Node::And(l, r) => self.node(l, w) && self.node(r, w),
            Node::Or(l, r) => self.node(l, w) || self.node(r, w),
            Node::Know(a, g, slot) => {
                if a >= self.model.n() {
                    // no world is related by an agent outside the model
                    return true;
                }
                if self.memo[slot].is_empty() {
                    self.memo[slot] = vec![0; self.model.len()];
                }
                match self.memo[slot][w] {
                    1 => return false,
                    2 => return true,
                    _ => {}
                }
                let model = self.model;
                let class = model.relation(a).class(w);
                let value = class.iter().all(|&v| self.node(g, v));
                // the answer is shared by the whole a-class of w
                let code = if value { 2 } else { 1 };
                if class.is_empty() {
                    self.memo[slot][w] = code;
                }
                for &v in class {
                    self.memo[slot][v] = code;
                }
                value
            }
        }
    }
}

/// `M, w ⊨ φ`.
pub fn eval(m: &PartialEpistemicModel, w: usize, f: &Formula) -> Result<bool, ModelError> {
    if w >= m.len() {
        return Err(ModelError::WorldIndex { index: w, len: m.len() });
    }
    Ok(Evaluator::new(m, f).holds(w))
}

/// Key-based form of [`eval`].
pub fn eval_at(m: &PartialEpistemicModel, key: &str, f: &Formula) -> Result<bool, ModelError> {
    let w = m.world(key)?;
    eval(m, w, f)
}

/// Outcome of a validity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validity {
    pub valid: bool,
    /// A falsifying world when `valid` is false.
    pub counterexample: Option<usize>,
}

/// `M ⊨ φ`; on failure the first falsifying world in world order.
pub fn is_valid(m: &PartialEpistemicModel, f: &Formula) -> Validity {
    let mut ev = Evaluator::new(m, f);
    match m.worlds().find(|&w| !ev.holds(w)) {
        Some(w) => Validity { valid: false, counterexample: Some(w) },
        None => Validity { valid: true, counterexample: None },
    }
}

/// The set `B` of an `alive(B)` guard, recognised structurally.
pub fn guard_agents(f: &Formula) -> Option<AgentSet> {
    if let Some(a) = f.as_alive() {
        return Some(AgentSet::singleton(a));
    }
    match f {
        Formula::And(l, r) => Some(guard_agents(l)?.union(guard_agents(r)?)),
        _ => None,
    }
}

/// Purely propositional with atoms from `At_B` only.
pub fn is_propositional_over(f: &Formula, agents: AgentSet) -> bool {
    match f {
        Formula::Atom(p) => agents.contains(p.agent),
        Formula::Neg(g) => is_propositional_over(g, agents),
        Formula::And(l, r) | Formula::Or(l, r) => {
            is_propositional_over(l, agents) && is_propositional_over(r, agents)
        }
        Formula::Know(..) => false,
    }
}

/// Membership in the guarded positive fragment
/// `φ ::= (alive(B) ⇒ ψ) | φ ∧ φ | φ ∨ φ | K_a φ`, judged on the shape of the tree.
pub fn is_guarded_positive(f: &Formula) -> bool {
    match f {
        Formula::Or(l, r) => {
            let guarded = match &**l {
                Formula::Neg(g) => guard_agents(g).is_some_and(|b| is_propositional_over(r, b)),
                _ => false,
            };
            guarded || (is_guarded_positive(l) && is_guarded_positive(r))
        }
        Formula::And(l, r) => is_guarded_positive(l) && is_guarded_positive(r),
        Formula::Know(_, g) => is_guarded_positive(g),
        Formula::Atom(_) | Formula::Neg(_) => false,
    }
}

/// `φ_i = ⋁_a (alive(a) ⇒ input(a,i))` over agents `0..n`.
pub fn phi_i(n: usize, i: usize) -> Formula {
    Formula::disj((0..n).map(|a| Formula::implies(Formula::alive(a), Formula::atom(a, i as Value))))
        .expect("n >= 1")
}

/// `Φ_n = ⋁_i K_{(i+2) mod n} K_{(i+1) mod n} K_{(i+2) mod n} φ_i`, for `n >= 3`.
pub fn build_phi(n: usize) -> Result<Formula, BuildPhiError> {
    if n < 3 {
        return Err(BuildPhiError(n));
    }
    let disjuncts = (0..n).map(|i| {
        let outer = (i + 2) % n;
        let mid = (i + 1) % n;
        Formula::know(outer, Formula::know(mid, Formula::know(outer, phi_i(n, i))))
    });
    Ok(Formula::disj(disjuncts).expect("n >= 3"))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("the obstruction formula needs at least 3 agents, got {0}")]
pub struct BuildPhiError(pub usize);
