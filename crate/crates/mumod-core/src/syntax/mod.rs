//! Formula terms in negation normal form, hash-consed into an arena.
//!
//! Formulas are identified by [`FormulaId`]; structural equality is id
//! equality.  The arena guarantees every stored term is in negation normal
//! form (negation on propositions only) because no constructor for a general
//! negation exists.  Operations that build formulas take `&mut Arena`;
//! queries take `&Arena`.

mod ops;
mod parse;
mod print;

pub use ops::{
    binding_table, build_axiom, build_eve, build_inv, build_inv_d, closure_cl, formula_size,
    modal_depth, negate, signed_subformulas, subformulas, substitute, substitute_prop,
    uniquify_binders, BindingTable,
};
pub use parse::parse;
pub use print::render;

use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

/// Interned formula handle; equal ids mean structurally equal terms.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FormulaId(pub(crate) u32);

/// Interned identifier (proposition, recursion variable, or agent name).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NameId(pub(crate) u32);

/// One formula constructor.  Negation appears only inside `Lit`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Node {
    /// The constant true, written `tt`.
    Top,
    /// The constant false, written `ff`.
    Bottom,
    /// A proposition or its negation.
    Lit { prop: NameId, positive: bool },
    /// A recursion variable occurrence.
    Var { name: NameId },
    And { lhs: FormulaId, rhs: FormulaId },
    Or { lhs: FormulaId, rhs: FormulaId },
    /// `[agent] body`.
    Box { agent: NameId, body: FormulaId },
    /// `<agent> body`.
    Diamond { agent: NameId, body: FormulaId },
    /// Least fixed point `mu var. body`.
    Mu { var: NameId, body: FormulaId },
    /// Greatest fixed point `nu var. body`.
    Nu { var: NameId, body: FormulaId },
}

/// Errors from parsing and from the structural operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("syntax error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unbound recursion variable `{0}`")]
    UnboundVariable(String),
    #[error("modal depth is undefined on formulas with recursion")]
    RecursiveModalDepth,
    #[error("two distinct binders share the variable name `{0}`")]
    DuplicateBinder(String),
    #[error("substitution would capture a free variable of the replacement")]
    CaptureDetected,
    #[error("closure did not terminate: binding table does not cover `{0}`")]
    IncompleteBindingTable(String),
    #[error("agent set must be non-empty and duplicate-free")]
    BadAgentSet,
}

/// Ordered, duplicate-free set of agent names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentSet {
    agents: Vec<NameId>,
}

impl AgentSet {
    pub fn new(arena: &mut Arena, names: &[&str]) -> Result<Self, SyntaxError> {
        if names.is_empty() {
            return Err(SyntaxError::BadAgentSet);
        }
        let mut agents = Vec::with_capacity(names.len());
        for n in names {
            let id = arena.name(n);
            if agents.contains(&id) {
                return Err(SyntaxError::BadAgentSet);
            }
            agents.push(id);
        }
        Ok(AgentSet { agents })
    }

    pub fn from_ids(agents: Vec<NameId>) -> Result<Self, SyntaxError> {
        if agents.is_empty() {
            return Err(SyntaxError::BadAgentSet);
        }
        let mut seen = BTreeSet::new();
        for a in &agents {
            if !seen.insert(*a) {
                return Err(SyntaxError::BadAgentSet);
            }
        }
        Ok(AgentSet { agents })
    }

    pub fn contains(&self, agent: NameId) -> bool {
        self.agents.contains(&agent)
    }

    pub fn iter(&self) -> impl Iterator<Item = NameId> + '_ {
        self.agents.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }
}

/// Hash-consing arena: each distinct term and name is stored once.
#[derive(Default)]
pub struct Arena {
    nodes: Vec<Node>,
    dedup: HashMap<Node, FormulaId>,
    names: Vec<String>,
    name_dedup: HashMap<String, NameId>,
    // Per-node caches, filled at intern time.
    free_vars: Vec<Box<[NameId]>>,
    has_recursion: Vec<bool>,
    has_mu: Vec<bool>,
    fresh_counter: u32,
}

impl Arena {
    pub fn new() -> Self {
        Arena::default()
    }

    pub fn name(&mut self, text: &str) -> NameId {
        if let Some(&id) = self.name_dedup.get(text) {
            return id;
        }
        let id = NameId(self.names.len() as u32);
        self.names.push(text.to_string());
        self.name_dedup.insert(text.to_string(), id);
        id
    }

    pub fn lookup_name(&self, text: &str) -> Option<NameId> {
        self.name_dedup.get(text).copied()
    }

    pub fn name_str(&self, id: NameId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn node(&self, id: FormulaId) -> Node {
        self.nodes[id.0 as usize]
    }

    /// Free recursion variables of `f`, sorted.
    pub fn free_vars(&self, f: FormulaId) -> &[NameId] {
        &self.free_vars[f.0 as usize]
    }

    pub fn is_closed(&self, f: FormulaId) -> bool {
        self.free_vars(f).is_empty()
    }

    /// True when `f` contains a fixed-point binder or a variable occurrence.
    pub fn has_recursion(&self, f: FormulaId) -> bool {
        self.has_recursion[f.0 as usize]
    }

    /// True when `f` contains a least fixed-point binder.
    pub fn has_mu(&self, f: FormulaId) -> bool {
        self.has_mu[f.0 as usize]
    }

    pub fn intern(&mut self, node: Node) -> FormulaId {
        if let Some(&id) = self.dedup.get(&node) {
            return id;
        }
        let (free, rec, mu) = self.derive_info(&node);
        let id = FormulaId(self.nodes.len() as u32);
        self.nodes.push(node);
        self.dedup.insert(node, id);
        self.free_vars.push(free);
        self.has_recursion.push(rec);
        self.has_mu.push(mu);
        id
    }

    fn derive_info(&self, node: &Node) -> (Box<[NameId]>, bool, bool) {
        let merge = |a: &[NameId], b: &[NameId]| -> Box<[NameId]> {
            let mut out: Vec<NameId> = a.iter().chain(b.iter()).copied().collect();
            out.sort_unstable();
            out.dedup();
            out.into_boxed_slice()
        };
        match *node {
            Node::Top | Node::Bottom | Node::Lit { .. } => (Box::new([]), false, false),
            Node::Var { name } => (Box::new([name]), true, false),
            Node::And { lhs, rhs } | Node::Or { lhs, rhs } => (
                merge(self.free_vars(lhs), self.free_vars(rhs)),
                self.has_recursion(lhs) || self.has_recursion(rhs),
                self.has_mu(lhs) || self.has_mu(rhs),
            ),
            Node::Box { body, .. } | Node::Diamond { body, .. } => (
                self.free_vars(body).to_vec().into_boxed_slice(),
                self.has_recursion(body),
                self.has_mu(body),
            ),
            Node::Mu { var, body } | Node::Nu { var, body } => {
                let free: Vec<NameId> = self
                    .free_vars(body)
                    .iter()
                    .copied()
                    .filter(|v| *v != var)
                    .collect();
                let is_mu = matches!(node, Node::Mu { .. });
                (
                    free.into_boxed_slice(),
                    true,
                    self.has_mu(body) || is_mu,
                )
            }
        }
    }

    pub fn top(&mut self) -> FormulaId {
        self.intern(Node::Top)
    }

    pub fn bottom(&mut self) -> FormulaId {
        self.intern(Node::Bottom)
    }

    pub fn lit(&mut self, prop: NameId, positive: bool) -> FormulaId {
        self.intern(Node::Lit { prop, positive })
    }

    pub fn var(&mut self, name: NameId) -> FormulaId {
        self.intern(Node::Var { name })
    }

    pub fn and(&mut self, lhs: FormulaId, rhs: FormulaId) -> FormulaId {
        self.intern(Node::And { lhs, rhs })
    }

    pub fn or(&mut self, lhs: FormulaId, rhs: FormulaId) -> FormulaId {
        self.intern(Node::Or { lhs, rhs })
    }

    pub fn boxed(&mut self, agent: NameId, body: FormulaId) -> FormulaId {
        self.intern(Node::Box { agent, body })
    }

    pub fn diamond(&mut self, agent: NameId, body: FormulaId) -> FormulaId {
        self.intern(Node::Diamond { agent, body })
    }

    pub fn mu(&mut self, var: NameId, body: FormulaId) -> FormulaId {
        self.intern(Node::Mu { var, body })
    }

    pub fn nu(&mut self, var: NameId, body: FormulaId) -> FormulaId {
        self.intern(Node::Nu { var, body })
    }

    /// Right-associated conjunction of `parts`; `tt` when empty.
    pub fn conj(&mut self, parts: &[FormulaId]) -> FormulaId {
        match parts.split_last() {
            None => self.top(),
            Some((&last, rest)) => rest
                .iter()
                .rev()
                .fold(last, |acc, &p| self.and(p, acc)),
        }
    }

    /// Right-associated disjunction of `parts`; `ff` when empty.
    pub fn disj(&mut self, parts: &[FormulaId]) -> FormulaId {
        match parts.split_last() {
            None => self.bottom(),
            Some((&last, rest)) => rest.iter().rev().fold(last, |acc, &p| self.or(p, acc)),
        }
    }

    /// A recursion-variable name not used anywhere in this arena yet.
    pub fn fresh_var(&mut self) -> NameId {
        loop {
            let candidate = format!("X{}", self.fresh_counter);
            self.fresh_counter += 1;
            if !self.name_dedup.contains_key(&candidate) {
                return self.name(&candidate);
            }
        }
    }

    /// Agents occurring in modalities of `f`, sorted by id.
    pub fn agents_of(&self, f: FormulaId) -> BTreeSet<NameId> {
        let mut out = BTreeSet::new();
        for sub in subformulas(self, f) {
            match self.node(sub) {
                Node::Box { agent, .. } | Node::Diamond { agent, .. } => {
                    out.insert(agent);
                }
                _ => {}
            }
        }
        out
    }

    /// Propositions occurring in `f`, sorted by id.
    pub fn props_of(&self, f: FormulaId) -> BTreeSet<NameId> {
        let mut out = BTreeSet::new();
        for sub in subformulas(self, f) {
            if let Node::Lit { prop, .. } = self.node(sub) {
                out.insert(prop);
            }
        }
        out
    }
}
