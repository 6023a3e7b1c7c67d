//! Branch exploration: rule scheduling, trace-cycle detection, loop checks.

use std::collections::BTreeMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::logic::LogicSpec;
use crate::syntax::{binding_table, negate, Arena, BindingTable, FormulaId, NameId, Node};

use super::extract::extract_model;
use super::proof::{proof_branch, TableauProof};
use super::rules::{
    applicable_rules, apply_instance, conclusion_exists, conclusion_of, deferred_diamond_target,
    Conclusion,
};
use super::{
    Branch, ClosureReason, PrefixId, RuleInstance, TableauBounds, TableauError, Verdict,
};

pub(crate) struct Ctx<'a> {
    pub arena: &'a Arena,
    pub spec: &'a LogicSpec,
    pub bounds: &'a TableauBounds,
    pub bt: BindingTable,
    /// Least-fixpoint variables in deterministic order.
    pub lfp: Vec<NameId>,
}

enum DriveOutcome {
    Closed,
    OpenMaximal,
    OpenLoop,
    Split(RuleInstance),
    Exhausted(String),
}

// Whole-search guards.  Or-heavy fixpoints can close astronomically many
// branches before the verdict settles; since every closed branch is kept for
// the replayable proof, unguarded runs exhaust memory long before node or
// prefix caps bite on any single branch.
const CLOSED_BRANCH_CAP: usize = 4_096;
const BRANCH_POP_CAP: usize = 20_000;

/// Runs the prefixed tableau for a closed formula under a logic spec.
pub fn run_tableau(
    arena: &Arena,
    f: FormulaId,
    spec: &LogicSpec,
    bounds: &TableauBounds,
) -> Result<Verdict, TableauError> {
    bounds.validate()?;
    if !arena.is_closed(f) {
        return Err(TableauError::OpenFormula);
    }
    for agent in arena.agents_of(f) {
        if !spec.contains_agent(agent) {
            return Err(TableauError::UnknownAgent(arena.name_str(agent).to_string()));
        }
    }
    let bt = binding_table(arena, f)?;
    let lfp: Vec<NameId> = bt.variables().filter(|&x| bt.is_least(arena, x)).collect();
    let ctx = Ctx { arena, spec, bounds, bt, lfp };

    let mut stack = vec![Branch::start(arena, f)];
    let mut closed = Vec::new();
    let mut unknown: Option<String> = None;
    let mut pops = 0usize;
    while let Some(mut b) = stack.pop() {
        pops += 1;
        if pops > BRANCH_POP_CAP {
            return Ok(Verdict::Unknown {
                reason: format!("branch cap ({BRANCH_POP_CAP}) reached"),
            });
        }
        match drive(&ctx, &mut b) {
            DriveOutcome::Closed => {
                closed.push(proof_branch(arena, &b));
                if closed.len() >= CLOSED_BRANCH_CAP && !stack.is_empty() {
                    return Ok(Verdict::Unknown {
                        reason: format!("closed-branch cap ({CLOSED_BRANCH_CAP}) reached"),
                    });
                }
            }
            DriveOutcome::Split(inst) => {
                let mut right = b.clone();
                apply_instance(arena, &mut b, &ctx.bt, &inst, Some(true));
                apply_instance(arena, &mut right, &ctx.bt, &inst, Some(false));
                // Left side on top: branches are explored leftmost-first.
                stack.push(right);
                stack.push(b);
            }
            DriveOutcome::OpenMaximal | DriveOutcome::OpenLoop => {
                return match extract_model(arena, &b, spec) {
                    Ok(model) => {
                        let mut transcript = b.transcript.clone();
                        transcript.push(open_summary(&ctx, &b));
                        Ok(Verdict::Sat { model, transcript })
                    }
                    Err(TableauError::WitnessTooLarge(n)) => Ok(Verdict::Unknown {
                        reason: format!("open branch witness needs more than {n} states"),
                    }),
                    Err(e) => Err(e),
                };
            }
            DriveOutcome::Exhausted(reason) => {
                unknown.get_or_insert(reason);
            }
        }
    }
    match unknown {
        Some(reason) => Ok(Verdict::Unknown { reason }),
        None => Ok(Verdict::Unsat { proof: TableauProof::new(arena, f, spec, bounds, closed) }),
    }
}

/// Proves validity: runs the tableau on the negation.  `Unsat` of ¬f is a
/// proof that f is valid; `Sat` hands back a countermodel of f.
pub fn tableau_proof(
    arena: &mut Arena,
    f: FormulaId,
    spec: &LogicSpec,
    bounds: &TableauBounds,
) -> Result<Verdict, TableauError> {
    let nf = negate(arena, f);
    run_tableau(arena, nf, spec, bounds)
}

fn open_summary(ctx: &Ctx, b: &Branch) -> String {
    if b.anchors.is_empty() {
        "branch open (maximal)".to_string()
    } else {
        let glue: Vec<String> = b
            .anchors
            .iter()
            .map(|(s, t)| {
                format!(
                    "{} ↦ {}",
                    b.prefixes.render(ctx.arena, *s),
                    b.prefixes.render(ctx.arena, *t)
                )
            })
            .collect();
        format!("branch open (loop: {})", glue.join(", "))
    }
}

fn closed_summary(ctx: &Ctx, b: &Branch, reason: ClosureReason) -> String {
    match reason {
        ClosureReason::Propositional { prefix, prop } => {
            let at = b.prefixes.render(ctx.arena, prefix);
            match prop {
                Some(p) => format!("branch closed (on {} at {at})", ctx.arena.name_str(p)),
                None => format!("branch closed (ff at {at})"),
            }
        }
        ClosureReason::FixedPoint { var, count } => {
            let x = ctx.arena.name_str(var);
            match count {
                Some(c) => format!("branch closed ({x} regenerated {c} times)"),
                None => format!("branch closed ({x} regeneration cycle)"),
            }
        }
    }
}

/// Drives one branch to closure, openness, a split, or a hit cap.
fn drive(ctx: &Ctx, b: &mut Branch) -> DriveOutcome {
    let close = |b: &mut Branch, reason: ClosureReason| {
        b.closure = Some(reason);
        b.transcript.push(closed_summary(ctx, b, reason));
        DriveOutcome::Closed
    };
    loop {
        if let Some(reason) = b.closure {
            b.transcript.push(closed_summary(ctx, b, reason));
            return DriveOutcome::Closed;
        }
        let insts = applicable_rules(ctx.arena, b, ctx.spec, &ctx.bt);
        let Some(first) = insts.first().copied() else {
            // Locally maximal with every obligation fulfilled.
            if let Some(reason) = detect_fixed_point(ctx, b) {
                return close(b, reason);
            }
            return DriveOutcome::OpenMaximal;
        };
        let eff = if first.kind.class() == 3 && conclusion_exists(ctx.arena, b, &ctx.bt, &first) {
            2
        } else {
            first.kind.class()
        };
        match eff {
            0 | 2 => {
                if b.nodes.len() + 2 > ctx.bounds.node_cap as usize {
                    return DriveOutcome::Exhausted(format!(
                        "node cap ({}) reached",
                        ctx.bounds.node_cap
                    ));
                }
                let added = apply_instance(ctx.arena, b, &ctx.bt, &first, None);
                if b.closure.is_some() {
                    let reason = b.closure.unwrap();
                    b.transcript.push(closed_summary(ctx, b, reason));
                    return DriveOutcome::Closed;
                }
                let edge_to_old = added.iter().any(|&(_, new)| !new);
                if edge_to_old || b.applications % 16 == 0 {
                    if let Some(reason) = detect_fixed_point(ctx, b) {
                        return close(b, reason);
                    }
                }
            }
            1 => return DriveOutcome::Split(first),
            _ => {
                // Only material generating obligations remain.
                if let Some(reason) = detect_fixed_point(ctx, b) {
                    return close(b, reason);
                }
                if let Some(anchors) = loop_cover(ctx, b, &insts) {
                    b.anchors = anchors;
                    return DriveOutcome::OpenLoop;
                }
                let mut applied = false;
                for inst in &insts {
                    let Conclusion::Child { parent, .. } =
                        conclusion_of(ctx.arena, b, &ctx.bt, inst)
                    else {
                        unreachable!("generating rules conclude at a child prefix");
                    };
                    if b.prefixes.depth(parent) + 1 > ctx.bounds.prefix_cap {
                        continue;
                    }
                    if b.nodes.len() + 1 > ctx.bounds.node_cap as usize {
                        return DriveOutcome::Exhausted(format!(
                            "node cap ({}) reached",
                            ctx.bounds.node_cap
                        ));
                    }
                    apply_instance(ctx.arena, b, &ctx.bt, inst, None);
                    applied = true;
                    break;
                }
                if !applied {
                    return DriveOutcome::Exhausted(format!(
                        "prefix cap ({}) reached",
                        ctx.bounds.prefix_cap
                    ));
                }
                if b.closure.is_some() {
                    let reason = b.closure.unwrap();
                    b.transcript.push(closed_summary(ctx, b, reason));
                    return DriveOutcome::Closed;
                }
                if let Some(reason) = detect_fixed_point(ctx, b) {
                    return close(b, reason);
                }
            }
        }
    }
}

/// Builds the →X graph for one variable: rule edges whose premise is an outer
/// variable Y with X < Y are cut, plus optional glue edges σ ↦ τ.
fn trace_graph(
    ctx: &Ctx,
    b: &Branch,
    x: NameId,
    glue: Option<&BTreeMap<PrefixId, PrefixId>>,
) -> DiGraph<(), ()> {
    let mut g = DiGraph::<(), ()>::new();
    for _ in 0..b.nodes.len() {
        g.add_node(());
    }
    let cut = |u: u32| {
        matches!(ctx.arena.node(b.nodes[u as usize].formula),
            Node::Var { name } if ctx.bt.lt(x, name))
    };
    for &(u, v) in &b.edges {
        if !cut(u) {
            g.add_edge(NodeIndex::new(u as usize), NodeIndex::new(v as usize), ());
        }
    }
    // Flat diamonds that were not expanded share the witness of their copy at
    // the shorter prefix; route their traces through that copy.
    for (u, &pf) in b.nodes.iter().enumerate() {
        if let Some(copy) = deferred_diamond_target(ctx.arena, b, ctx.spec, pf) {
            if let Some(v) = b.node_id(copy) {
                g.add_edge(NodeIndex::new(u), NodeIndex::new(v as usize), ());
            }
        }
    }
    if let Some(anchors) = glue {
        for (&s, &t) in anchors {
            for &f in &b.by_prefix[&s] {
                let u = b.node_id(super::PrefixedFormula { prefix: s, formula: f });
                let v = b.node_id(super::PrefixedFormula { prefix: t, formula: f });
                if let (Some(u), Some(v)) = (u, v) {
                    g.add_edge(NodeIndex::new(u as usize), NodeIndex::new(v as usize), ());
                }
            }
        }
    }
    g
}

/// Scans the →X graphs: an exact regeneration cycle closes at once; otherwise
/// the longest X-count over the condensation closes past κ.
pub(crate) fn detect_fixed_point(ctx: &Ctx, b: &Branch) -> Option<ClosureReason> {
    for &x in &ctx.lfp {
        let is_x = |i: usize| matches!(ctx.arena.node(b.nodes[i].formula), Node::Var { name } if name == x);
        let g = trace_graph(ctx, b, x, None);
        let sccs = tarjan_scc(&g);
        let mut scc_of = vec![0usize; b.nodes.len()];
        for (i, scc) in sccs.iter().enumerate() {
            for &n in scc {
                scc_of[n.index()] = i;
            }
        }
        for scc in &sccs {
            let cyclic = scc.len() > 1 || g.find_edge(scc[0], scc[0]).is_some();
            if cyclic && scc.iter().any(|&n| is_x(n.index())) {
                return Some(ClosureReason::FixedPoint { var: x, count: None });
            }
        }
        // tarjan_scc yields successors before predecessors, so one pass
        // computes the longest X-count over the condensation.
        let mut dp = vec![0u32; sccs.len()];
        let mut best = 0u32;
        for (i, scc) in sccs.iter().enumerate() {
            let mut reach = 0u32;
            for &n in scc {
                for m in g.neighbors(n) {
                    let j = scc_of[m.index()];
                    if j != i {
                        reach = reach.max(dp[j]);
                    }
                }
            }
            let count: u32 = scc.iter().filter(|&&n| is_x(n.index())).count() as u32;
            dp[i] = count + reach;
            best = best.max(dp[i]);
        }
        if best >= ctx.bounds.kappa_substitute + 1 {
            return Some(ClosureReason::FixedPoint { var: x, count: Some(best) });
        }
    }
    None
}

/// Attempts to cover every pending generating obligation with a repeating
/// ancestor; the cover must not hide a least-fixpoint regeneration.
fn loop_cover(
    ctx: &Ctx,
    b: &Branch,
    pending: &[RuleInstance],
) -> Option<BTreeMap<PrefixId, PrefixId>> {
    let mut anchors = BTreeMap::new();
    for inst in pending {
        let Conclusion::Child { parent, .. } = conclusion_of(ctx.arena, b, &ctx.bt, inst) else {
            unreachable!("generating rules conclude at a child prefix");
        };
        if anchors.contains_key(&parent) {
            continue;
        }
        anchors.insert(parent, find_anchor(b, parent)?);
    }
    anchors_admissible(ctx, b, &anchors).then_some(anchors)
}

/// Nearest proper ancestor reached by the same agent carrying the same
/// formula set Φ.
fn find_anchor(b: &Branch, p: PrefixId) -> Option<PrefixId> {
    let agent = b.prefixes.last_agent(p)?;
    let phi = b.by_prefix.get(&p)?;
    let mut t = b.prefixes.parent(p);
    while let Some(tau) = t {
        if b.prefixes.last_agent(tau) == Some(agent) && b.by_prefix.get(&tau) == Some(phi) {
            return Some(tau);
        }
        t = b.prefixes.parent(tau);
    }
    None
}

/// Rejects a glue set if identifying each σ with its anchor would create an
/// →X cycle through a least-fixpoint variable.
fn anchors_admissible(ctx: &Ctx, b: &Branch, anchors: &BTreeMap<PrefixId, PrefixId>) -> bool {
    for &x in &ctx.lfp {
        let is_x = |i: usize| matches!(ctx.arena.node(b.nodes[i].formula), Node::Var { name } if name == x);
        let g = trace_graph(ctx, b, x, Some(anchors));
        for scc in tarjan_scc(&g) {
            let cyclic = scc.len() > 1 || g.find_edge(scc[0], scc[0]).is_some();
            if cyclic && scc.iter().any(|&n| is_x(n.index())) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::{check_logic, model_check};
    use crate::syntax::parse;
    use crate::tableau::verify_proof;

    fn run(spec_text: &str, formula: &str) -> (Arena, FormulaId, Verdict) {
        let mut ar = Arena::new();
        let spec = LogicSpec::parse(&mut ar, spec_text).unwrap();
        let f = parse(&mut ar, &spec.agent_set(), formula).unwrap();
        let bounds = TableauBounds::for_formula(&ar, f);
        let v = run_tableau(&ar, f, &spec, &bounds).unwrap();
        (ar, f, v)
    }

    #[test]
    fn conjoined_eventuality_is_satisfiable_with_a_checked_witness() {
        let (ar, f, v) = run("a:K", "(p & <a>p) & mu X.(!p | [a]X)");
        let Verdict::Sat { model, transcript } = v else {
            panic!("expected sat, got {}", v.tag());
        };
        assert_eq!(model.designated(), Some(0));
        assert!(model_check(&model, &ar, 0, f).unwrap());
        assert_eq!(model.n_states(), 2);
        assert!(transcript.last().unwrap().starts_with("branch open"));
    }

    #[test]
    fn euclidean_regeneration_closes_every_branch() {
        let (_, _, v) = run("b:K5", "<b>p & mu X.([b]!p | [b]X)");
        let Verdict::Unsat { proof } = v else {
            panic!("expected unsat, got {}", v.tag());
        };
        assert_eq!(proof.branches.len(), 3);
        verify_proof(&proof).unwrap();
        assert!(proof
            .branches
            .iter()
            .any(|b| matches!(b.closure, crate::tableau::proof::ProofClosure::FixedPoint { .. })));
    }

    /// Deferred flat diamonds must keep feeding the trace graph: a least
    /// fixpoint regenerating through the euclidean cluster has no base case
    /// and must close even though the deferred copy is never re-expanded.
    #[test]
    fn deferred_euclidean_diamonds_still_carry_traces() {
        for formula in ["mu X.<a>X", "mu X.<a><a>X", "mu X.<a>[a]X"] {
            for spec in ["a:K5", "a:S5", "a:K45"] {
                let (_, _, v) = run(spec, formula);
                let Verdict::Unsat { proof } = v else {
                    panic!("{formula} under {spec}: expected unsat, got {}", v.tag());
                };
                verify_proof(&proof).unwrap();
            }
        }
        // The greatest-fixpoint twins stay satisfiable on the same clusters.
        for formula in ["nu X.<a>X", "nu X.<a><a>X", "nu X.<a>[a]X"] {
            let (ar, f, v) = run("a:K5", formula);
            let Verdict::Sat { model, .. } = v else {
                panic!("{formula} under a:K5: expected sat, got {}", v.tag());
            };
            assert!(model_check(&model, &ar, model.designated().unwrap(), f).unwrap());
        }
    }

    #[test]
    fn well_founded_box_recursion_needs_a_dead_end() {
        let (ar, f, v) = run("a:K", "mu X.[a]X");
        let Verdict::Sat { model, .. } = v else {
            panic!("expected sat, got {}", v.tag());
        };
        assert_eq!(model.n_states(), 1, "dead-end witness");
        let a = ar.lookup_name("a").unwrap();
        assert!(model.successors(a, 0).is_empty());
        assert!(model_check(&model, &ar, 0, f).unwrap());

        let (_, _, v) = run("a:T", "mu X.[a]X");
        assert_eq!(v.tag(), "unsat", "reflexive frames refute it");
        let (_, _, v) = run("a:D", "mu X.[a]X");
        assert_eq!(v.tag(), "unsat", "serial frames refute it via the count bound");
    }

    #[test]
    fn greatest_fixpoint_accepts_a_loop_witness() {
        let (ar, f, v) = run("a:D", "nu X.[a]X");
        let Verdict::Sat { model, transcript } = v else {
            panic!("expected sat, got {}", v.tag());
        };
        assert!(model_check(&model, &ar, 0, f).unwrap());
        assert!(transcript.last().unwrap().contains("loop"), "loop acceptance, not maximality");

        let (ar, f, v) = run("a:K", "nu X.<a>X");
        let Verdict::Sat { model, .. } = v else {
            panic!("expected sat, got {}", v.tag());
        };
        assert!(model_check(&model, &ar, 0, f).unwrap());
        let a = ar.lookup_name("a").unwrap();
        let last = model.n_states() - 1;
        assert!(model.successors(a, last).contains(last), "glued back edge is a self-loop");
    }

    #[test]
    fn root_contradiction_closes_without_modal_rules() {
        let (_, _, v) = run("a:K", "p & !p");
        let Verdict::Unsat { proof } = v else {
            panic!("expected unsat, got {}", v.tag());
        };
        assert_eq!(proof.branches.len(), 1);
        assert!(proof.branches[0].steps.iter().all(|s| s.rule == "and"));
        verify_proof(&proof).unwrap();
    }

    #[test]
    fn extracted_witnesses_respect_frame_conditions() {
        let (mut ar, f, v) = run("a:S5", "<a>p & <a>!p");
        let Verdict::Sat { model, .. } = v else {
            panic!("expected sat, got {}", v.tag());
        };
        let spec = LogicSpec::parse(&mut ar, "a:S5").unwrap();
        assert!(check_logic(&model, &spec));
        assert!(model_check(&model, &ar, 0, f).unwrap());
    }

    #[test]
    fn verdicts_and_transcripts_are_deterministic() {
        let (_, _, v1) = run("a:K", "(p & <a>p) & mu X.(!p | [a]X)");
        let (_, _, v2) = run("a:K", "(p & <a>p) & mu X.(!p | [a]X)");
        let (Verdict::Sat { transcript: t1, .. }, Verdict::Sat { transcript: t2, .. }) = (v1, v2)
        else {
            panic!("expected sat twice");
        };
        assert_eq!(t1, t2);

        let (_, _, u1) = run("b:K5", "<b>p & mu X.([b]!p | [b]X)");
        let (_, _, u2) = run("b:K5", "<b>p & mu X.([b]!p | [b]X)");
        let (Verdict::Unsat { proof: p1 }, Verdict::Unsat { proof: p2 }) = (u1, u2) else {
            panic!("expected unsat twice");
        };
        assert_eq!(p1.to_json().to_string(), p2.to_json().to_string());
    }

    #[test]
    fn exhausted_caps_surface_as_unknown() {
        let mut ar = Arena::new();
        let spec = LogicSpec::parse(&mut ar, "a:K").unwrap();
        let f = parse(&mut ar, &spec.agent_set(), "mu X.<a>X").unwrap();
        let bounds = TableauBounds { kappa_substitute: 50, prefix_cap: 2, node_cap: 4096 };
        let v = run_tableau(&ar, f, &spec, &bounds).unwrap();
        let Verdict::Unknown { reason } = v else {
            panic!("expected unknown, got {}", v.tag());
        };
        assert!(reason.contains("prefix cap"));

        let g = parse(&mut ar, &spec.agent_set(), "p & (q & (r & s))").unwrap();
        let bounds = TableauBounds { kappa_substitute: 8, prefix_cap: 16, node_cap: 3 };
        let v = run_tableau(&ar, g, &spec, &bounds).unwrap();
        let Verdict::Unknown { reason } = v else {
            panic!("expected unknown, got {}", v.tag());
        };
        assert!(reason.contains("node cap"));
    }

    #[test]
    fn input_validation_rejects_bad_inputs() {
        let mut ar = Arena::new();
        let both = crate::AgentSet::new(&mut ar, &["a", "b"]).unwrap();
        let f = parse(&mut ar, &both, "[b]p").unwrap();
        let spec = LogicSpec::parse(&mut ar, "a:K").unwrap();
        let bounds = TableauBounds::for_formula(&ar, f);
        assert!(matches!(
            run_tableau(&ar, f, &spec, &bounds),
            Err(TableauError::UnknownAgent(name)) if name == "b"
        ));

        let x = ar.name("X");
        let open = ar.var(x);
        assert!(matches!(
            run_tableau(&ar, open, &spec, &bounds),
            Err(TableauError::OpenFormula)
        ));
    }

    #[test]
    fn validity_runs_on_the_negation() {
        let mut ar = Arena::new();
        let spec = LogicSpec::parse(&mut ar, "a:K").unwrap();
        let f = parse(&mut ar, &spec.agent_set(), "p | !p").unwrap();
        let bounds = TableauBounds::for_formula(&ar, f);
        let v = tableau_proof(&mut ar, f, &spec, &bounds).unwrap();
        assert_eq!(v.tag(), "unsat", "a closed tableau for the negation means valid");

        let g = parse(&mut ar, &spec.agent_set(), "[a]p -> p").unwrap();
        let bounds = TableauBounds::for_formula(&ar, g);
        let v = tableau_proof(&mut ar, g, &spec, &bounds).unwrap();
        let Verdict::Sat { model, .. } = v else {
            panic!("not valid without reflexivity, got {}", v.tag());
        };
        let ng = negate(&mut ar, g);
        assert!(model_check(&model, &ar, 0, ng).unwrap(), "countermodel satisfies the negation");
    }
}
