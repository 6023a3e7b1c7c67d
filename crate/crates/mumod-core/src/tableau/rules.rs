//! Rule applicability and application for the prefixed tableau.

use crate::logic::{FrameCondition, LogicSpec};
use crate::syntax::{Arena, BindingTable, FormulaId, NameId, Node};

use super::{Branch, PrefixId, PrefixedFormula, RuleInstance, RuleKind};

/// What an instance concludes once applied.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Conclusion {
    /// One formula at an existing prefix.
    At(PrefixedFormula),
    /// Both conjuncts at the premise prefix.
    Both(PrefixedFormula, PrefixedFormula),
    /// A formula at a child prefix, created on application.
    Child { parent: PrefixId, agent: NameId, formula: FormulaId },
    /// A branch split at the premise prefix.
    Split { lhs: FormulaId, rhs: FormulaId },
}

/// Computes the conclusion of an applicable instance.
pub(crate) fn conclusion_of(
    arena: &Arena,
    branch: &Branch,
    bt: &BindingTable,
    inst: &RuleInstance,
) -> Conclusion {
    let sigma = inst.premise.prefix;
    let at = |formula: FormulaId| Conclusion::At(PrefixedFormula { prefix: sigma, formula });
    match (inst.kind, arena.node(inst.premise.formula)) {
        (RuleKind::Fix, Node::Mu { body, .. }) | (RuleKind::Fix, Node::Nu { body, .. }) => at(body),
        (RuleKind::Var, Node::Var { name }) => {
            at(bt.fx(name).expect("closed input binds every variable"))
        }
        (RuleKind::And, Node::And { lhs, rhs }) => Conclusion::Both(
            PrefixedFormula { prefix: sigma, formula: lhs },
            PrefixedFormula { prefix: sigma, formula: rhs },
        ),
        (RuleKind::Or, Node::Or { lhs, rhs }) => Conclusion::Split { lhs, rhs },
        (RuleKind::BoxK, Node::Box { body, .. }) => Conclusion::At(PrefixedFormula {
            prefix: inst.target.expect("(B) carries its target"),
            formula: body,
        }),
        (RuleKind::Trans, Node::Box { .. }) => Conclusion::At(PrefixedFormula {
            prefix: inst.target.expect("(4) carries its target"),
            formula: inst.premise.formula,
        }),
        (RuleKind::Refl, Node::Box { body, .. }) => at(body),
        (RuleKind::Sym, Node::Box { body, .. }) => Conclusion::At(PrefixedFormula {
            prefix: branch.prefixes.parent(sigma).expect("(b) premise is below the root"),
            formula: body,
        }),
        (RuleKind::SymTrans, Node::Box { .. }) | (RuleKind::Box5, Node::Box { .. }) => {
            Conclusion::At(PrefixedFormula {
                prefix: branch.prefixes.parent(sigma).expect("premise is below the root"),
                formula: inst.premise.formula,
            })
        }
        (RuleKind::Box55, Node::Box { .. }) => Conclusion::At(PrefixedFormula {
            prefix: inst.target.expect("(B55) carries its target"),
            formula: inst.premise.formula,
        }),
        (RuleKind::Serial, Node::Box { agent, body }) | (RuleKind::Dia, Node::Diamond { agent, body }) => {
            Conclusion::Child { parent: sigma, agent, formula: body }
        }
        (RuleKind::Dia5, Node::Diamond { agent, body }) => {
            Conclusion::Child { parent: sigma, agent, formula: body }
        }
        (RuleKind::Dia55, Node::Diamond { agent, body }) => Conclusion::Child {
            parent: branch.prefixes.parent(sigma).expect("(D55) premise is two steps deep"),
            agent,
            formula: body,
        },
        (kind, node) => unreachable!("rule {:?} on {:?}", kind, node),
    }
}

/// True when every conclusion node of the instance is already on the branch.
pub(crate) fn conclusion_exists(
    arena: &Arena,
    branch: &Branch,
    bt: &BindingTable,
    inst: &RuleInstance,
) -> bool {
    match conclusion_of(arena, branch, bt, inst) {
        Conclusion::At(pf) => branch.contains(pf),
        Conclusion::Both(a, b) => branch.contains(a) && branch.contains(b),
        Conclusion::Child { parent, agent, formula } => branch
            .prefixes
            .lookup(parent, agent, formula)
            .is_some_and(|p| branch.contains(PrefixedFormula { prefix: p, formula })),
        Conclusion::Split { lhs, rhs } => {
            branch.contains(PrefixedFormula { prefix: inst.premise.prefix, formula: lhs })
                && branch.contains(PrefixedFormula { prefix: inst.premise.prefix, formula: rhs })
        }
    }
}

fn alpha_children(branch: &Branch, p: PrefixId, agent: NameId) -> Vec<PrefixId> {
    branch
        .children_of(p)
        .iter()
        .copied()
        .filter(|&c| branch.prefixes.last_agent(c) == Some(agent))
        .collect()
}

/// A diamond of a euclidean agent at an α-flat prefix rides on the copy at
/// the shorter prefix dictated by (D5)/(D55): both share one witness in the
/// final cluster.  Returns that copy when it is already on the branch; the
/// flat diamond is then not expanded, and trace graphs must glue an edge to
/// the copy so fixpoint traces keep flowing through the shared witness.
pub(crate) fn deferred_diamond_target(
    arena: &Arena,
    branch: &Branch,
    spec: &LogicSpec,
    pf: PrefixedFormula,
) -> Option<PrefixedFormula> {
    let Node::Diamond { agent, .. } = arena.node(pf.formula) else {
        return None;
    };
    if !spec.has(agent, FrameCondition::Euclidean) {
        return None;
    }
    let flat = |p: PrefixId| branch.prefixes.last_agent(p) == Some(agent);
    if !flat(pf.prefix) {
        return None;
    }
    let parent = branch.prefixes.parent(pf.prefix).expect("flat prefixes step");
    let shorter = if !flat(parent) {
        parent
    } else {
        branch.prefixes.parent(parent).expect("flat prefixes step")
    };
    let copy = PrefixedFormula { prefix: shorter, formula: pf.formula };
    branch.contains(copy).then_some(copy)
}

/// All rule instances whose gates and side conditions hold and which are not
/// yet in the branch log, in deterministic priority order.
pub fn applicable_rules(
    arena: &Arena,
    branch: &Branch,
    spec: &LogicSpec,
    bt: &BindingTable,
) -> Vec<RuleInstance> {
    let mut out: Vec<(u8, u32, RuleInstance)> = Vec::new();
    let mut push = |class: u8, idx: u32, inst: RuleInstance| {
        if !branch.is_logged(&inst) {
            out.push((class, idx, inst));
        }
    };

    for (i, &pf) in branch.nodes.iter().enumerate() {
        let idx = i as u32;
        let sigma = pf.prefix;
        let mk = |kind: RuleKind, target: Option<PrefixId>| RuleInstance {
            kind,
            premise: pf,
            target,
        };
        match arena.node(pf.formula) {
            Node::Mu { .. } | Node::Nu { .. } => push(0, idx, mk(RuleKind::Fix, None)),
            Node::Var { name } => {
                if bt.fx(name).is_some() {
                    push(0, idx, mk(RuleKind::Var, None));
                }
            }
            Node::And { .. } => push(0, idx, mk(RuleKind::And, None)),
            Node::Or { .. } => push(1, idx, mk(RuleKind::Or, None)),
            Node::Box { agent, .. } => {
                let conds = spec.conditions(agent);
                let last_is_alpha = branch.prefixes.last_agent(sigma) == Some(agent);
                for c in alpha_children(branch, sigma, agent) {
                    push(2, idx, mk(RuleKind::BoxK, Some(c)));
                    if conds.contains(&FrameCondition::Transitive) {
                        push(2, idx, mk(RuleKind::Trans, Some(c)));
                    }
                }
                if conds.contains(&FrameCondition::Reflexive) {
                    push(2, idx, mk(RuleKind::Refl, None));
                }
                if last_is_alpha {
                    if conds.contains(&FrameCondition::Symmetric) {
                        push(2, idx, mk(RuleKind::Sym, None));
                        if conds.contains(&FrameCondition::Transitive) {
                            push(2, idx, mk(RuleKind::SymTrans, None));
                        }
                    }
                    if conds.contains(&FrameCondition::Euclidean) {
                        push(2, idx, mk(RuleKind::Box5, None));
                        let parent = branch.prefixes.parent(sigma).expect("non-root");
                        for s in alpha_children(branch, parent, agent) {
                            if s != sigma {
                                push(2, idx, mk(RuleKind::Box55, Some(s)));
                            }
                        }
                    }
                }
                if conds.contains(&FrameCondition::Serial) {
                    let inst = mk(RuleKind::Serial, None);
                    let class = if conclusion_exists(arena, branch, bt, &inst) { 2 } else { 3 };
                    push(class, idx, inst);
                }
            }
            Node::Diamond { agent, .. } => {
                let euclidean = spec.has(agent, FrameCondition::Euclidean);
                let flat = |p: PrefixId| euclidean && branch.prefixes.last_agent(p) == Some(agent);
                let inst = if !flat(sigma) {
                    Some(mk(RuleKind::Dia, None))
                } else if deferred_diamond_target(arena, branch, spec, pf).is_some() {
                    // The copy at the shorter prefix carries the obligation.
                    None
                } else {
                    // σ is α-flat; the parent decides between (D5) and (D55).
                    let parent = branch.prefixes.parent(sigma).expect("flat prefixes step");
                    if !flat(parent) {
                        Some(mk(RuleKind::Dia5, None))
                    } else {
                        Some(mk(RuleKind::Dia55, None))
                    }
                };
                if let Some(inst) = inst {
                    let class = if conclusion_exists(arena, branch, bt, &inst) { 2 } else { 3 };
                    push(class, idx, inst);
                }
            }
            Node::Top | Node::Bottom | Node::Lit { .. } => {}
        }
    }

    out.sort_by_key(|&(class, idx, inst)| {
        (class, idx, inst.kind, inst.target.map(|t| t.0).unwrap_or(u32::MAX))
    });
    out.into_iter().map(|(_, _, inst)| inst).collect()
}

/// Applies one instance: logs it, adds conclusion nodes and trace edges, and
/// records the step.  `or_side` picks the (or) disjunct, `true` for the left.
/// Returns the conclusion node ids paired with whether each was new.
pub(crate) fn apply_instance(
    arena: &Arena,
    branch: &mut Branch,
    bt: &BindingTable,
    inst: &RuleInstance,
    or_side: Option<bool>,
) -> Vec<(u32, bool)> {
    branch.log_instance(inst);
    branch.applications += 1;
    let premise_id = branch.node_id(inst.premise).expect("premise is on the branch");

    let conclusions: Vec<PrefixedFormula> = match conclusion_of(arena, branch, bt, inst) {
        Conclusion::At(pf) => vec![pf],
        Conclusion::Both(a, b) => vec![a, b],
        Conclusion::Child { parent, agent, formula } => {
            let p = branch.child_prefix(parent, agent, formula);
            vec![PrefixedFormula { prefix: p, formula }]
        }
        Conclusion::Split { lhs, rhs } => {
            let formula = if or_side.expect("(or) needs a side") { lhs } else { rhs };
            vec![PrefixedFormula { prefix: inst.premise.prefix, formula }]
        }
    };

    let mut added = Vec::with_capacity(conclusions.len());
    for pf in conclusions {
        let (id, new) = branch.add_node(arena, pf);
        branch.edges.push((premise_id, id));
        branch.note(arena, inst.kind, pf);
        added.push((id, new));
    }
    branch.steps.push(super::AppliedStep {
        kind: inst.kind,
        premise: premise_id,
        conclusions: added.iter().map(|&(id, _)| id).collect(),
    });
    added
}
