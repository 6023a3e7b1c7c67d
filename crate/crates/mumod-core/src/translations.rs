//! Satisfiability-preserving translations between logics: each one removes a
//! frame condition from (or, for the label embedding, adds conditions to)
//! the target logic while preserving satisfiability of the input formula.

use crate::logic::FrameCondition;
use crate::syntax::{
    binding_table, build_eve, build_inv, build_inv_d, closure_cl, modal_depth, negate,
    signed_subformulas, subformulas, substitute_prop, uniquify_binders, AgentSet, Arena,
    FormulaId, NameId, Node, SyntaxError,
};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

/// Proposition reserved for the symmetric translation's marker.
pub const RESERVED_SYMMETRIC: &str = "_b";
/// Propositions reserved for the label embedding.
pub const RESERVED_LABELS: [&str; 2] = ["_p", "_q"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslationError {
    #[error("this translation is defined on recursion-free formulas only")]
    RecursiveInput,
    #[error("this translation is defined on formulas without least fixed points")]
    LeastFixedPointInput,
    #[error("reserved proposition `{0}` occurs in the input formula")]
    ReservedProposition(String),
    #[error("translated agents must form a subset of the agent set")]
    BadAgentSubset,
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// The six translations by name.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TranslationKind {
    OneStep,
    Serial,
    Reflexive,
    Transitive,
    Symmetric,
    Embed,
}

impl TranslationKind {
    pub const ALL: [TranslationKind; 6] = [
        TranslationKind::OneStep,
        TranslationKind::Serial,
        TranslationKind::Reflexive,
        TranslationKind::Transitive,
        TranslationKind::Symmetric,
        TranslationKind::Embed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TranslationKind::OneStep => "one-step",
            TranslationKind::Serial => "serial",
            TranslationKind::Reflexive => "reflexive",
            TranslationKind::Transitive => "transitive",
            TranslationKind::Symmetric => "symmetric",
            TranslationKind::Embed => "embed",
        }
    }

    pub fn from_name(name: &str) -> Option<TranslationKind> {
        TranslationKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Deduplicate a translated-agent list and check it against the agent set.
fn checked_subset(sub: &[NameId], all: &AgentSet) -> Result<Vec<NameId>, TranslationError> {
    let mut out = Vec::with_capacity(sub.len());
    for &a in sub {
        if !all.contains(a) {
            return Err(TranslationError::BadAgentSubset);
        }
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(out)
}

fn check_reserved(arena: &Arena, f: FormulaId, names: &[&str]) -> Result<(), TranslationError> {
    for name in names {
        if let Some(id) = arena.lookup_name(name) {
            if arena.props_of(f).contains(&id) {
                return Err(TranslationError::ReservedProposition(name.to_string()));
            }
        }
    }
    Ok(())
}

/// A placeholder proposition not occurring in `f`, for axiom instantiation.
fn placeholder_prop(arena: &mut Arena, f: FormulaId) -> NameId {
    let props = arena.props_of(f);
    let mut k = 0u32;
    loop {
        let cand = format!("_ax{k}");
        let id = arena.name(&cand);
        if !props.contains(&id) {
            return id;
        }
        k += 1;
    }
}

/// Bounded axiom replay: conjoin every instance of the `cond` axiom over the
/// signed subformulas of `f` and the agents of `sub`, held invariant up to
/// the modal depth needed for one-step conditions (quadratically deeper for
/// transitivity).  Defined on recursion-free formulas.
pub fn translate_one_step(
    arena: &mut Arena,
    f: FormulaId,
    sub: &[NameId],
    all: &AgentSet,
    cond: FrameCondition,
) -> Result<FormulaId, TranslationError> {
    let sub = checked_subset(sub, all)?;
    if arena.has_recursion(f) {
        return Err(TranslationError::RecursiveInput);
    }
    if sub.is_empty() {
        return Ok(f);
    }
    let md = modal_depth(arena, f)?;
    let d = match cond {
        FrameCondition::Transitive => md * crate::syntax::formula_size(arena, f) as u32,
        _ => md,
    };
    let placeholder = placeholder_prop(arena, f);
    let mut conjuncts = BTreeSet::new();
    for psi in signed_subformulas(arena, f) {
        for &agent in &sub {
            let ax = crate::syntax::build_axiom(arena, cond, agent, placeholder);
            let inst = substitute_prop(arena, ax, placeholder, psi);
            conjuncts.insert(inst);
        }
    }
    let parts: Vec<FormulaId> = conjuncts.into_iter().collect();
    let body = arena.conj(&parts);
    let inv = build_inv_d(arena, body, d, all);
    Ok(arena.and(f, inv))
}

/// Remove seriality: conjoin the invariant that every `sub` agent always has
/// a successor.
pub fn translate_serial_mu(
    arena: &mut Arena,
    f: FormulaId,
    sub: &[NameId],
    all: &AgentSet,
) -> Result<FormulaId, TranslationError> {
    let sub = checked_subset(sub, all)?;
    if sub.is_empty() {
        return Ok(f);
    }
    let parts: Vec<FormulaId> = sub
        .iter()
        .map(|&a| {
            let t = arena.top();
            arena.diamond(a, t)
        })
        .collect();
    let body = arena.conj(&parts);
    let inv = build_inv(arena, body, all);
    Ok(arena.and(f, inv))
}

/// Remove reflexivity: `[a]g` becomes `[a]g & g` and `<a>g` becomes
/// `<a>g | g` for translated agents; homomorphic elsewhere.
pub fn translate_reflexive_mu(
    arena: &mut Arena,
    f: FormulaId,
    sub: &[NameId],
    all: &AgentSet,
) -> Result<FormulaId, TranslationError> {
    let sub = checked_subset(sub, all)?;
    fn go(
        arena: &mut Arena,
        f: FormulaId,
        sub: &[NameId],
        memo: &mut HashMap<FormulaId, FormulaId>,
    ) -> FormulaId {
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let out = match arena.node(f) {
            Node::Top | Node::Bottom | Node::Lit { .. } | Node::Var { .. } => f,
            Node::And { lhs, rhs } => {
                let l = go(arena, lhs, sub, memo);
                let r = go(arena, rhs, sub, memo);
                arena.and(l, r)
            }
            Node::Or { lhs, rhs } => {
                let l = go(arena, lhs, sub, memo);
                let r = go(arena, rhs, sub, memo);
                arena.or(l, r)
            }
            Node::Box { agent, body } => {
                let b = go(arena, body, sub, memo);
                let boxed = arena.boxed(agent, b);
                if sub.contains(&agent) {
                    arena.and(boxed, b)
                } else {
                    boxed
                }
            }
            Node::Diamond { agent, body } => {
                let b = go(arena, body, sub, memo);
                let dia = arena.diamond(agent, b);
                if sub.contains(&agent) {
                    arena.or(dia, b)
                } else {
                    dia
                }
            }
            Node::Mu { var, body } => {
                let b = go(arena, body, sub, memo);
                arena.mu(var, b)
            }
            Node::Nu { var, body } => {
                let b = go(arena, body, sub, memo);
                arena.nu(var, b)
            }
        };
        memo.insert(f, out);
        out
    }
    Ok(go(arena, f, &sub, &mut HashMap::new()))
}

/// Remove transitivity: each translated modality is unrolled into a fresh
/// fixed point along the same agent.  With `literal_invariants` the rewrite
/// instead wraps the modality in a full invariant/eventuality over all
/// agents; that form is not satisfiability-preserving with several agents
/// (see the tests), which is why the agent-restricted unrolling is the
/// default.
pub fn translate_transitive_mu(
    arena: &mut Arena,
    f: FormulaId,
    sub: &[NameId],
    all: &AgentSet,
    literal_invariants: bool,
) -> Result<FormulaId, TranslationError> {
    let sub = checked_subset(sub, all)?;
    fn go(
        arena: &mut Arena,
        f: FormulaId,
        sub: &[NameId],
        all: &AgentSet,
        literal: bool,
        memo: &mut HashMap<FormulaId, FormulaId>,
    ) -> FormulaId {
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let out = match arena.node(f) {
            Node::Top | Node::Bottom | Node::Lit { .. } | Node::Var { .. } => f,
            Node::And { lhs, rhs } => {
                let l = go(arena, lhs, sub, all, literal, memo);
                let r = go(arena, rhs, sub, all, literal, memo);
                arena.and(l, r)
            }
            Node::Or { lhs, rhs } => {
                let l = go(arena, lhs, sub, all, literal, memo);
                let r = go(arena, rhs, sub, all, literal, memo);
                arena.or(l, r)
            }
            Node::Box { agent, body } => {
                let b = go(arena, body, sub, all, literal, memo);
                let boxed = arena.boxed(agent, b);
                if !sub.contains(&agent) {
                    boxed
                } else if literal {
                    build_inv(arena, boxed, all)
                } else {
                    let x = arena.fresh_var();
                    let vx = arena.var(x);
                    let step = arena.boxed(agent, vx);
                    let and = arena.and(boxed, step);
                    arena.nu(x, and)
                }
            }
            Node::Diamond { agent, body } => {
                let b = go(arena, body, sub, all, literal, memo);
                let dia = arena.diamond(agent, b);
                if !sub.contains(&agent) {
                    dia
                } else if literal {
                    build_eve(arena, dia, all)
                } else {
                    let x = arena.fresh_var();
                    let vx = arena.var(x);
                    let step = arena.diamond(agent, vx);
                    let or = arena.or(dia, step);
                    arena.mu(x, or)
                }
            }
            Node::Mu { var, body } => {
                let b = go(arena, body, sub, all, literal, memo);
                arena.mu(var, b)
            }
            Node::Nu { var, body } => {
                let b = go(arena, body, sub, all, literal, memo);
                arena.nu(var, b)
            }
        };
        memo.insert(f, out);
        out
    }
    Ok(go(
        arena,
        f,
        &sub,
        all,
        literal_invariants,
        &mut HashMap::new(),
    ))
}

/// Remove symmetry, for formulas without least fixed points: conjoin an
/// invariant forcing a marked back-edge (`[a]<a>_b`) and making every
/// relevant closed subformula travel back across two steps.
pub fn translate_symmetric_mu(
    arena: &mut Arena,
    f: FormulaId,
    sub: &[NameId],
    all: &AgentSet,
) -> Result<FormulaId, TranslationError> {
    let sub = checked_subset(sub, all)?;
    if arena.has_mu(f) {
        return Err(TranslationError::LeastFixedPointInput);
    }
    check_reserved(arena, f, &[RESERVED_SYMMETRIC])?;
    if sub.is_empty() {
        return Ok(f);
    }
    let bt = binding_table(arena, f)?;
    let mut closed_signed = BTreeSet::new();
    for psi in subformulas(arena, f) {
        let closed = closure_cl(arena, psi, &bt)?;
        closed_signed.insert(closed);
        let dual = negate(arena, closed);
        closed_signed.insert(dual);
    }
    let mark = arena.name(RESERVED_SYMMETRIC);
    let mark_pos = arena.lit(mark, true);
    let mark_neg = arena.lit(mark, false);
    let mut agent_parts = Vec::new();
    for &agent in &sub {
        let dia_mark = arena.diamond(agent, mark_pos);
        let mut parts = vec![arena.boxed(agent, dia_mark)];
        for &psi in &closed_signed {
            // psi -> [a][a](_b -> psi), in NNF.
            let not_psi = negate(arena, psi);
            let guarded = arena.or(mark_neg, psi);
            let inner = arena.boxed(agent, guarded);
            let outer = arena.boxed(agent, inner);
            parts.push(arena.or(not_psi, outer));
        }
        agent_parts.push(arena.conj(&parts));
    }
    let body = arena.conj(&agent_parts);
    let inv = build_inv(arena, body, all);
    let out = arena.and(f, inv);
    Ok(uniquify_binders(arena, out))
}

/// Label vectors over the reserved propositions `_p`, `_q`.  The three-cycle
/// vectors are the default; the two-cycle pair is kept for experimentation
/// (it cannot break symmetric edges).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LabelVector {
    /// `_p & _q`
    PosPos,
    /// `_p & !_q`
    PosNeg,
    /// `!_p & _q`
    NegPos,
    /// `_p`
    Pos,
    /// `!_p`
    Neg,
}

/// Successor of a label vector along its cycle.
pub fn next_label(v: LabelVector) -> LabelVector {
    match v {
        LabelVector::PosPos => LabelVector::PosNeg,
        LabelVector::PosNeg => LabelVector::NegPos,
        LabelVector::NegPos => LabelVector::PosPos,
        LabelVector::Pos => LabelVector::Neg,
        LabelVector::Neg => LabelVector::Pos,
    }
}

/// Which label cycle the embedding uses.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LabelRange {
    ThreeCycle,
    TwoCycle,
}

impl LabelRange {
    pub fn labels(self) -> &'static [LabelVector] {
        match self {
            LabelRange::ThreeCycle => &[
                LabelVector::PosPos,
                LabelVector::PosNeg,
                LabelVector::NegPos,
            ],
            LabelRange::TwoCycle => &[LabelVector::Pos, LabelVector::Neg],
        }
    }
}

impl LabelVector {
    pub fn formula(self, arena: &mut Arena) -> FormulaId {
        let p = arena.name(RESERVED_LABELS[0]);
        let q = arena.name(RESERVED_LABELS[1]);
        match self {
            LabelVector::PosPos => {
                let lp = arena.lit(p, true);
                let lq = arena.lit(q, true);
                arena.and(lp, lq)
            }
            LabelVector::PosNeg => {
                let lp = arena.lit(p, true);
                let lq = arena.lit(q, false);
                arena.and(lp, lq)
            }
            LabelVector::NegPos => {
                let lp = arena.lit(p, false);
                let lq = arena.lit(q, true);
                arena.and(lp, lq)
            }
            LabelVector::Pos => arena.lit(p, true),
            LabelVector::Neg => arena.lit(p, false),
        }
    }
}

/// Embed plain-K satisfiability into a logic whose translated agents may be
/// serial, reflexive, or symmetric: states are labeled along a cycle so
/// that the closure edges added by those conditions can never be confused
/// with real transitions.  The result is anchored at the first label.
pub fn translate_embed_kmu(
    arena: &mut Arena,
    f: FormulaId,
    sub: &[NameId],
    all: &AgentSet,
    range: LabelRange,
) -> Result<FormulaId, TranslationError> {
    let sub = checked_subset(sub, all)?;
    check_reserved(arena, f, &RESERVED_LABELS)?;
    if sub.is_empty() {
        return Ok(f);
    }
    let labels = range.labels();
    let label_fs: Vec<FormulaId> = labels.iter().map(|v| v.formula(arena)).collect();
    let label_negs: Vec<FormulaId> = label_fs.iter().map(|&l| negate(arena, l)).collect();
    let next_fs: Vec<FormulaId> = labels
        .iter()
        .map(|&v| next_label(v).formula(arena))
        .collect();
    let next_negs: Vec<FormulaId> = next_fs.iter().map(|&l| negate(arena, l)).collect();
    struct Labels<'a> {
        sub: &'a [NameId],
        label_negs: &'a [FormulaId],
        next_fs: &'a [FormulaId],
        next_negs: &'a [FormulaId],
    }
    fn go(
        arena: &mut Arena,
        f: FormulaId,
        cx: &Labels,
        memo: &mut HashMap<FormulaId, FormulaId>,
    ) -> FormulaId {
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let out = match arena.node(f) {
            Node::Top | Node::Bottom | Node::Lit { .. } | Node::Var { .. } => f,
            Node::And { lhs, rhs } => {
                let l = go(arena, lhs, cx, memo);
                let r = go(arena, rhs, cx, memo);
                arena.and(l, r)
            }
            Node::Or { lhs, rhs } => {
                let l = go(arena, lhs, cx, memo);
                let r = go(arena, rhs, cx, memo);
                arena.or(l, r)
            }
            Node::Box { agent, body } => {
                let b = go(arena, body, cx, memo);
                if !cx.sub.contains(&agent) {
                    arena.boxed(agent, b)
                } else {
                    // For each label v: v -> [a](next(v) -> T(body)).
                    let mut parts = Vec::with_capacity(cx.label_negs.len());
                    for (i, &ln) in cx.label_negs.iter().enumerate() {
                        let guarded = arena.or(cx.next_negs[i], b);
                        let boxed = arena.boxed(agent, guarded);
                        parts.push(arena.or(ln, boxed));
                    }
                    arena.conj(&parts)
                }
            }
            Node::Diamond { agent, body } => {
                let b = go(arena, body, cx, memo);
                if !cx.sub.contains(&agent) {
                    arena.diamond(agent, b)
                } else {
                    // For each label v: v -> <a>(next(v) & T(body)).
                    let mut parts = Vec::with_capacity(cx.label_negs.len());
                    for (i, &ln) in cx.label_negs.iter().enumerate() {
                        let stepped = arena.and(cx.next_fs[i], b);
                        let dia = arena.diamond(agent, stepped);
                        parts.push(arena.or(ln, dia));
                    }
                    arena.conj(&parts)
                }
            }
            Node::Mu { var, body } => {
                let b = go(arena, body, cx, memo);
                arena.mu(var, b)
            }
            Node::Nu { var, body } => {
                let b = go(arena, body, cx, memo);
                arena.nu(var, b)
            }
        };
        memo.insert(f, out);
        out
    }
    let cx = Labels {
        sub: &sub,
        label_negs: &label_negs,
        next_fs: &next_fs,
        next_negs: &next_negs,
    };
    let translated = go(arena, f, &cx, &mut HashMap::new());
    let anchor = labels[0].formula(arena);
    Ok(arena.and(anchor, translated))
}

/// A translation with its configuration, plus warn-only spec validation.
#[derive(Clone, Debug)]
pub struct TranslationRequest {
    pub kind: TranslationKind,
    /// Agents whose modalities are translated.
    pub agents: Vec<NameId>,
    /// Full agent set of the formulas.
    pub all_agents: AgentSet,
    /// Axiom being replayed; only used by the one-step translation.
    pub condition: Option<FrameCondition>,
    pub literal_invariants: bool,
    pub label_range: LabelRange,
}

impl TranslationRequest {
    pub fn new(kind: TranslationKind, agents: Vec<NameId>, all_agents: AgentSet) -> Self {
        TranslationRequest {
            kind,
            agents,
            all_agents,
            condition: None,
            literal_invariants: false,
            label_range: LabelRange::ThreeCycle,
        }
    }

    /// The condition this translation discharges.
    fn handled(&self) -> Vec<FrameCondition> {
        match self.kind {
            TranslationKind::OneStep => self.condition.into_iter().collect(),
            TranslationKind::Serial => vec![FrameCondition::Serial],
            TranslationKind::Reflexive => vec![FrameCondition::Reflexive],
            TranslationKind::Transitive => vec![FrameCondition::Transitive],
            TranslationKind::Symmetric => vec![FrameCondition::Symmetric],
            TranslationKind::Embed => vec![],
        }
    }

    /// Compare source and target specs against what the translation
    /// guarantees; mismatches come back as human-readable warnings.
    pub fn validate(
        &self,
        arena: &Arena,
        source: &crate::logic::LogicSpec,
        target: &crate::logic::LogicSpec,
    ) -> Vec<String> {
        let mut warnings = Vec::new();
        let handled: BTreeSet<FrameCondition> = self.handled().into_iter().collect();
        for &agent in &self.agents {
            let name = arena.name_str(agent);
            let src = source.conditions(agent);
            let tgt = target.conditions(agent);
            match self.kind {
                TranslationKind::Embed => {
                    if !src.is_empty() {
                        warnings.push(format!("embed expects a plain-K source for `{name}`"));
                    }
                    let allowed: BTreeSet<FrameCondition> = [
                        FrameCondition::Serial,
                        FrameCondition::Reflexive,
                        FrameCondition::Symmetric,
                    ]
                    .into();
                    if !tgt.is_subset(&allowed) {
                        warnings.push(format!(
                            "embed only absorbs D, T, B in the target; `{name}` has {}",
                            crate::logic::logic_name(&tgt)
                        ));
                    }
                    if self.label_range == LabelRange::TwoCycle
                        && tgt.contains(&FrameCondition::Symmetric)
                    {
                        warnings.push(format!(
                            "two-cycle labels cannot break symmetric edges for `{name}`"
                        ));
                    }
                }
                _ => {
                    let expected: BTreeSet<FrameCondition> =
                        tgt.union(&handled).copied().collect();
                    if src != expected {
                        warnings.push(format!(
                            "source logic for `{name}` is {}, expected target plus {}",
                            crate::logic::logic_name(&src),
                            handled
                                .iter()
                                .map(|c| c.letter())
                                .collect::<Vec<_>>()
                                .join(",")
                        ));
                    }
                    if tgt.iter().any(|c| handled.contains(c)) {
                        warnings.push(format!(
                            "target logic for `{name}` still contains the removed condition"
                        ));
                    }
                    if self.kind == TranslationKind::OneStep {
                        if let Some(x) = self.condition {
                            let order = crate::kripke::closure_preserving_order();
                            let x_pos = order.iter().position(|c| *c == x).unwrap();
                            for c in &tgt {
                                let c_pos = order.iter().position(|cc| cc == c).unwrap();
                                if c_pos > x_pos {
                                    warnings.push(format!(
                                        "one-step replay of {x} may not survive the {c} closure \
                                         for `{name}`"
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        warnings
    }

    pub fn apply(&self, arena: &mut Arena, f: FormulaId) -> Result<FormulaId, TranslationError> {
        match self.kind {
            TranslationKind::OneStep => {
                let cond = self.condition.unwrap_or(FrameCondition::Reflexive);
                translate_one_step(arena, f, &self.agents, &self.all_agents, cond)
            }
            TranslationKind::Serial => {
                translate_serial_mu(arena, f, &self.agents, &self.all_agents)
            }
            TranslationKind::Reflexive => {
                translate_reflexive_mu(arena, f, &self.agents, &self.all_agents)
            }
            TranslationKind::Transitive => translate_transitive_mu(
                arena,
                f,
                &self.agents,
                &self.all_agents,
                self.literal_invariants,
            ),
            TranslationKind::Symmetric => {
                translate_symmetric_mu(arena, f, &self.agents, &self.all_agents)
            }
            TranslationKind::Embed => {
                translate_embed_kmu(arena, f, &self.agents, &self.all_agents, self.label_range)
            }
        }
    }
}
