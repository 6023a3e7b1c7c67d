//! Prefixed tableau satisfiability engine with per-agent rule gating.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::kripke::KripkeModel;
use crate::syntax::{Arena, FormulaId, NameId, Node, SyntaxError};

mod engine;
mod extract;
mod proof;
mod rules;

pub use engine::{run_tableau, tableau_proof};
pub use extract::extract_model;
pub use proof::{verify_proof, ProofBranch, ProofClosure, ProofPrefix, ProofStep, TableauProof};
pub use rules::applicable_rules;

/// Identifier of an interned prefix within one branch.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PrefixId(pub(crate) u32);

impl PrefixId {
    /// The root prefix ε.
    pub const ROOT: PrefixId = PrefixId(0);

    fn idx(self) -> usize {
        self.0 as usize
    }
}

/// Interned prefix tree: each prefix is either ε or parent.⟨agent, formula⟩.
#[derive(Clone, Debug)]
pub struct Prefixes {
    steps: Vec<Option<(PrefixId, NameId, FormulaId)>>,
    index: HashMap<(PrefixId, NameId, FormulaId), PrefixId>,
    depth: Vec<u32>,
}

impl Prefixes {
    fn new() -> Prefixes {
        Prefixes { steps: vec![None], index: HashMap::new(), depth: vec![0] }
    }

    /// Number of prefixes seen on this branch, root included.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// True when only the root exists.
    pub fn is_empty(&self) -> bool {
        self.steps.len() == 1
    }

    /// Looks up parent.⟨agent, formula⟩ without creating it.
    pub fn lookup(&self, parent: PrefixId, agent: NameId, formula: FormulaId) -> Option<PrefixId> {
        self.index.get(&(parent, agent, formula)).copied()
    }

    fn extend(&mut self, parent: PrefixId, agent: NameId, formula: FormulaId) -> PrefixId {
        if let Some(p) = self.lookup(parent, agent, formula) {
            return p;
        }
        let id = PrefixId(self.steps.len() as u32);
        self.steps.push(Some((parent, agent, formula)));
        self.depth.push(self.depth[parent.idx()] + 1);
        self.index.insert((parent, agent, formula), id);
        id
    }

    /// The step that formed this prefix; `None` at the root.
    pub fn step(&self, p: PrefixId) -> Option<(PrefixId, NameId, FormulaId)> {
        self.steps[p.idx()]
    }

    /// Parent prefix, `None` at the root.
    pub fn parent(&self, p: PrefixId) -> Option<PrefixId> {
        self.steps[p.idx()].map(|(parent, _, _)| parent)
    }

    /// Length of the prefix as a step sequence.
    pub fn depth(&self, p: PrefixId) -> u32 {
        self.depth[p.idx()]
    }

    /// Agent of the last step, `None` at the root.
    pub fn last_agent(&self, p: PrefixId) -> Option<NameId> {
        self.steps[p.idx()].map(|(_, agent, _)| agent)
    }

    /// Renders a prefix as ε or a dot-joined step list, e.g. `a<p>.a<X>`.
    pub fn render(&self, arena: &Arena, p: PrefixId) -> String {
        let mut parts = Vec::new();
        let mut cur = p;
        while let Some((parent, agent, formula)) = self.steps[cur.idx()] {
            parts.push(format!(
                "{}<{}>",
                arena.name_str(agent),
                crate::syntax::render(arena, formula)
            ));
            cur = parent;
        }
        if parts.is_empty() {
            return "ε".to_string();
        }
        parts.reverse();
        parts.join(".")
    }
}

/// A formula tagged with the prefix where it must hold.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PrefixedFormula {
    pub prefix: PrefixId,
    pub formula: FormulaId,
}

/// Tableau rule names, declared in application-priority order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum RuleKind {
    /// (fix) unfolds μX.φ or νX.φ to its body.
    Fix,
    /// (X) replaces a variable occurrence with its binder formula.
    Var,
    /// (and) adds both conjuncts.
    And,
    /// (or) splits the branch.
    Or,
    /// (t) reflexive copy-down at the same prefix.
    Refl,
    /// (b) symmetric step back to the parent prefix.
    Sym,
    /// (b4) box propagation to the parent under symmetry with transitivity.
    SymTrans,
    /// (B) box step to an existing child prefix.
    BoxK,
    /// (4) box propagation to an existing child under transitivity.
    Trans,
    /// (B5) box propagation to the parent under euclideanness.
    Box5,
    /// (B55) box propagation to an existing sibling under euclideanness.
    Box55,
    /// (D) diamond generates a child prefix.
    Dia,
    /// (d) seriality generates a child prefix from a box.
    Serial,
    /// (D5) diamond at a flat prefix generates a grandchild.
    Dia5,
    /// (D55) diamond two steps deep generates a sibling.
    Dia55,
}

impl RuleKind {
    /// Short rule label used in transcripts and proofs.
    pub fn label(self) -> &'static str {
        match self {
            RuleKind::Fix => "fix",
            RuleKind::Var => "X",
            RuleKind::And => "and",
            RuleKind::Or => "or",
            RuleKind::Refl => "t",
            RuleKind::Sym => "b",
            RuleKind::SymTrans => "b4",
            RuleKind::BoxK => "B",
            RuleKind::Trans => "4",
            RuleKind::Box5 => "B5",
            RuleKind::Box55 => "B55",
            RuleKind::Dia => "D",
            RuleKind::Serial => "d",
            RuleKind::Dia5 => "D5",
            RuleKind::Dia55 => "D55",
        }
    }

    /// Looks a rule up by its transcript label.
    pub fn from_label(s: &str) -> Option<RuleKind> {
        const ALL: [RuleKind; 15] = [
            RuleKind::Fix,
            RuleKind::Var,
            RuleKind::And,
            RuleKind::Or,
            RuleKind::Refl,
            RuleKind::Sym,
            RuleKind::SymTrans,
            RuleKind::BoxK,
            RuleKind::Trans,
            RuleKind::Box5,
            RuleKind::Box55,
            RuleKind::Dia,
            RuleKind::Serial,
            RuleKind::Dia5,
            RuleKind::Dia55,
        ];
        ALL.into_iter().find(|k| k.label() == s)
    }

    /// Priority class: 0 unfolding, 1 split, 2 copying modal, 3 generating.
    pub fn class(self) -> u8 {
        match self {
            RuleKind::Fix | RuleKind::Var | RuleKind::And => 0,
            RuleKind::Or => 1,
            RuleKind::Refl
            | RuleKind::Sym
            | RuleKind::SymTrans
            | RuleKind::BoxK
            | RuleKind::Trans
            | RuleKind::Box5
            | RuleKind::Box55 => 2,
            RuleKind::Dia | RuleKind::Serial | RuleKind::Dia5 | RuleKind::Dia55 => 3,
        }
    }

    /// True for rules that may create a new prefix.
    pub fn is_generating(self) -> bool {
        self.class() == 3
    }
}

/// One applicable rule application site.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RuleInstance {
    pub kind: RuleKind,
    pub premise: PrefixedFormula,
    /// Existing prefix the conclusion lands on, for (B), (4), (B55).
    pub target: Option<PrefixId>,
}

/// Why a branch closed.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ClosureReason {
    /// σ ff, or σ p together with σ ¬p.
    Propositional { prefix: PrefixId, prop: Option<NameId> },
    /// A least-fixpoint trace regenerated beyond doubt: an exact cycle
    /// (`count: None`) or κ+1 occurrences along one path.
    FixedPoint { var: NameId, count: Option<u32> },
}

/// One applied rule: premise node and conclusion nodes by branch index.
#[derive(Clone, Debug)]
pub(crate) struct AppliedStep {
    pub kind: RuleKind,
    pub premise: u32,
    pub conclusions: Vec<u32>,
}

/// One tableau branch: prefixed formulas, trace edges, and the rule log.
#[derive(Clone)]
pub struct Branch {
    pub(crate) prefixes: Prefixes,
    pub(crate) nodes: Vec<PrefixedFormula>,
    pub(crate) node_index: HashMap<PrefixedFormula, u32>,
    pub(crate) by_prefix: BTreeMap<PrefixId, BTreeSet<FormulaId>>,
    pub(crate) children: BTreeMap<PrefixId, Vec<PrefixId>>,
    /// →X trace edges between node indices, all variables mixed; detection
    /// filters per variable.
    pub(crate) edges: Vec<(u32, u32)>,
    log: BTreeSet<(u8, u32, u32, u32)>,
    pub(crate) steps: Vec<AppliedStep>,
    pub(crate) transcript: Vec<String>,
    pub(crate) closure: Option<ClosureReason>,
    /// Loop-check glue points: pending prefix -> ancestor it repeats.
    pub(crate) anchors: BTreeMap<PrefixId, PrefixId>,
    pub(crate) applications: u32,
}

impl Branch {
    /// Starts a branch from ε f.
    pub fn start(arena: &Arena, f: FormulaId) -> Branch {
        let mut b = Branch {
            prefixes: Prefixes::new(),
            nodes: Vec::new(),
            node_index: HashMap::new(),
            by_prefix: BTreeMap::new(),
            children: BTreeMap::new(),
            edges: Vec::new(),
            log: BTreeSet::new(),
            steps: Vec::new(),
            transcript: Vec::new(),
            closure: None,
            anchors: BTreeMap::new(),
            applications: 0,
        };
        let pf = PrefixedFormula { prefix: PrefixId::ROOT, formula: f };
        b.add_node(arena, pf);
        b.transcript.push(format!("{}  [start]", b.render_node(arena, pf)));
        b
    }

    /// All prefixed formulas, in insertion order.
    pub fn nodes(&self) -> &[PrefixedFormula] {
        &self.nodes
    }

    /// The prefix tree of this branch.
    pub fn prefixes(&self) -> &Prefixes {
        &self.prefixes
    }

    /// Closure reason, if the branch closed.
    pub fn closure(&self) -> Option<ClosureReason> {
        self.closure
    }

    /// Rule-application transcript lines.
    pub fn transcript(&self) -> &[String] {
        &self.transcript
    }

    /// True when the prefixed formula is on the branch.
    pub fn contains(&self, pf: PrefixedFormula) -> bool {
        self.node_index.contains_key(&pf)
    }

    /// The formula set Φ(σ) at a prefix.
    pub fn formulas_at(&self, p: PrefixId) -> Option<&BTreeSet<FormulaId>> {
        self.by_prefix.get(&p)
    }

    /// Child prefixes in creation order.
    pub fn children_of(&self, p: PrefixId) -> &[PrefixId] {
        self.children.get(&p).map(Vec::as_slice).unwrap_or(&[])
    }

    /// σ is α-flat when 5 ∈ spec(α) and σ's last step is an α-step.
    pub fn is_flat(&self, spec: &crate::logic::LogicSpec, p: PrefixId, agent: NameId) -> bool {
        spec.has(agent, crate::logic::FrameCondition::Euclidean)
            && self.prefixes.last_agent(p) == Some(agent)
    }

    pub(crate) fn render_node(&self, arena: &Arena, pf: PrefixedFormula) -> String {
        format!(
            "{} ⊢ {}",
            self.prefixes.render(arena, pf.prefix),
            crate::syntax::render(arena, pf.formula)
        )
    }

    /// Adds a node, returning its index and whether it is new; detects
    /// propositional closure incrementally.
    pub(crate) fn add_node(&mut self, arena: &Arena, pf: PrefixedFormula) -> (u32, bool) {
        if let Some(&i) = self.node_index.get(&pf) {
            return (i, false);
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(pf);
        self.node_index.insert(pf, i);
        let set = self.by_prefix.entry(pf.prefix).or_default();
        if self.closure.is_none() {
            match arena.node(pf.formula) {
                Node::Bottom => {
                    self.closure =
                        Some(ClosureReason::Propositional { prefix: pf.prefix, prop: None });
                }
                Node::Lit { prop, positive } => {
                    let clash = set.iter().any(|&g| {
                        matches!(arena.node(g), Node::Lit { prop: q, positive: op }
                            if q == prop && op == !positive)
                    });
                    if clash {
                        self.closure = Some(ClosureReason::Propositional {
                            prefix: pf.prefix,
                            prop: Some(prop),
                        });
                    }
                }
                _ => {}
            }
        }
        set.insert(pf.formula);
        (i, true)
    }

    pub(crate) fn node_id(&self, pf: PrefixedFormula) -> Option<u32> {
        self.node_index.get(&pf).copied()
    }

    pub(crate) fn log_key(inst: &RuleInstance) -> (u8, u32, u32, u32) {
        (
            inst.kind as u8,
            inst.premise.prefix.0,
            inst.premise.formula.0,
            inst.target.map(|t| t.0).unwrap_or(u32::MAX),
        )
    }

    pub(crate) fn is_logged(&self, inst: &RuleInstance) -> bool {
        self.log.contains(&Branch::log_key(inst))
    }

    pub(crate) fn log_instance(&mut self, inst: &RuleInstance) {
        self.log.insert(Branch::log_key(inst));
    }

    /// Creates (or reuses) a child prefix, keeping the children list in
    /// creation order.
    pub(crate) fn child_prefix(&mut self, parent: PrefixId, agent: NameId, f: FormulaId) -> PrefixId {
        if let Some(p) = self.prefixes.lookup(parent, agent, f) {
            return p;
        }
        let p = self.prefixes.extend(parent, agent, f);
        self.children.entry(parent).or_default().push(p);
        p
    }

    /// Renders the rule transcript line for one conclusion.
    pub(crate) fn note(&mut self, arena: &Arena, kind: RuleKind, pf: PrefixedFormula) {
        let line = format!("{}  [{}]", self.render_node(arena, pf), kind.label());
        self.transcript.push(line);
    }
}

/// Search bounds: κ substitute, prefix length cap, and branch node cap.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TableauBounds {
    /// Occurrences of one least-fixpoint variable along a trace before the
    /// branch is declared sufficiently closed.
    pub kappa_substitute: u32,
    /// Longest prefix the generating rules may create.
    pub prefix_cap: u32,
    /// Most prefixed formulas one branch may hold.
    pub node_cap: u32,
}

impl TableauBounds {
    /// Desk-scale defaults: κ = max(8, |f|), prefixes to max(16, 2|f|).
    pub fn for_formula(arena: &Arena, f: FormulaId) -> TableauBounds {
        let n = crate::syntax::formula_size(arena, f) as u32;
        TableauBounds {
            kappa_substitute: n.max(8),
            prefix_cap: (2 * n).max(16),
            node_cap: 4096,
        }
    }

    /// Rejects zero caps.
    pub fn validate(&self) -> Result<(), TableauError> {
        if self.kappa_substitute == 0 || self.prefix_cap == 0 || self.node_cap == 0 {
            return Err(TableauError::BadBounds);
        }
        Ok(())
    }
}

/// Outcome of a tableau run.
#[derive(Clone, Debug)]
pub enum Verdict {
    /// An open branch yielded a witness model (checked by the caller).
    Sat { model: KripkeModel, transcript: Vec<String> },
    /// Every branch closed; the proof object is independently re-checkable.
    Unsat { proof: TableauProof },
    /// A cap was hit before either outcome.
    Unknown { reason: String },
}

impl Verdict {
    /// Short lowercase tag: sat, unsat, or unknown.
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Sat { .. } => "sat",
            Verdict::Unsat { .. } => "unsat",
            Verdict::Unknown { .. } => "unknown",
        }
    }
}

/// Errors raised by the tableau engine.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableauError {
    #[error("tableau bounds must all be positive")]
    BadBounds,
    #[error("tableau input must be a closed formula")]
    OpenFormula,
    #[error("agent {0} is not covered by the logic spec")]
    UnknownAgent(String),
    #[error("cannot extract a model from a closed branch")]
    ClosedBranch,
    #[error("open branch needs more than {0} states")]
    WitnessTooLarge(usize),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}
