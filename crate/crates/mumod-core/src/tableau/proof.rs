//! Serializable closed-tableau proofs and an independent replay checker.

use serde::{Deserialize, Serialize};

use crate::logic::LogicSpec;
use crate::syntax::{binding_table, parse, render, Arena, FormulaId, NameId, Node};

use super::engine::{detect_fixed_point, Ctx};
use super::rules::{applicable_rules, apply_instance};
use super::{Branch, ClosureReason, PrefixId, PrefixedFormula, RuleKind, TableauBounds};

/// One row of a branch's prefix table; entry 0 is the root ε.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofPrefix {
    pub parent: Option<usize>,
    pub agent: Option<String>,
    pub formula: Option<String>,
}

/// One recorded rule application, with rendered premise and conclusions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStep {
    pub rule: String,
    pub premise: (usize, String),
    pub conclusions: Vec<(usize, String)>,
}

/// Why a branch closed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProofClosure {
    Propositional { prefix: usize, on: Option<String> },
    FixedPoint { variable: String, count: Option<u32> },
}

/// One closed branch: its prefix table, rule applications, and closure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofBranch {
    pub prefixes: Vec<ProofPrefix>,
    pub steps: Vec<ProofStep>,
    pub closure: ProofClosure,
}

/// A closed tableau for an unsatisfiable formula, checkable by replay.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableauProof {
    pub formula: String,
    pub logic: String,
    pub kappa: u32,
    pub branches: Vec<ProofBranch>,
}

impl TableauProof {
    pub(crate) fn new(
        arena: &Arena,
        f: FormulaId,
        spec: &LogicSpec,
        bounds: &TableauBounds,
        branches: Vec<ProofBranch>,
    ) -> TableauProof {
        TableauProof {
            formula: render(arena, f),
            logic: spec.display(arena),
            kappa: bounds.kappa_substitute,
            branches,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("proofs serialize")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<TableauProof, String> {
        serde_json::from_value(value.clone()).map_err(|e| e.to_string())
    }
}

/// Snapshots a closed branch into its serializable form.
pub(crate) fn proof_branch(arena: &Arena, b: &Branch) -> ProofBranch {
    let describe =
        |pf: PrefixedFormula| (pf.prefix.0 as usize, render(arena, pf.formula));
    let prefixes = (0..b.prefixes.len())
        .map(|i| match b.prefixes.step(PrefixId(i as u32)) {
            None => ProofPrefix { parent: None, agent: None, formula: None },
            Some((parent, agent, f)) => ProofPrefix {
                parent: Some(parent.0 as usize),
                agent: Some(arena.name_str(agent).to_string()),
                formula: Some(render(arena, f)),
            },
        })
        .collect();
    let steps = b
        .steps
        .iter()
        .map(|s| ProofStep {
            rule: s.kind.label().to_string(),
            premise: describe(b.nodes[s.premise as usize]),
            conclusions: s.conclusions.iter().map(|&c| describe(b.nodes[c as usize])).collect(),
        })
        .collect();
    let closure = match b.closure.clone().expect("proof branches are closed") {
        ClosureReason::Propositional { prefix, prop } => ProofClosure::Propositional {
            prefix: prefix.0 as usize,
            on: prop.map(|p| arena.name_str(p).to_string()),
        },
        ClosureReason::FixedPoint { var, count } => ProofClosure::FixedPoint {
            variable: arena.name_str(var).to_string(),
            count,
        },
    };
    ProofBranch { prefixes, steps, closure }
}

/// Replays a proof from scratch and checks every branch and the split tree.
///
/// Each step must match a rule instance that is actually applicable at that
/// point, each claimed closure must hold on the replayed branch, and the
/// (or) splits must cover both disjuncts across the branch set.
pub fn verify_proof(proof: &TableauProof) -> Result<(), String> {
    let mut arena = Arena::new();
    let spec = LogicSpec::parse(&mut arena, &proof.logic).map_err(|e| format!("logic: {e}"))?;
    let f = parse(&mut arena, &spec.agent_set(), &proof.formula)
        .map_err(|e| format!("formula: {e}"))?;
    if !arena.is_closed(f) {
        return Err("proof formula must be closed".to_string());
    }
    if proof.kappa == 0 {
        return Err("kappa must be positive".to_string());
    }
    if proof.branches.is_empty() {
        return Err("a closed tableau needs at least one branch".to_string());
    }
    let bt = binding_table(&arena, f).map_err(|e| e.to_string())?;
    let lfp: Vec<NameId> = bt.variables().filter(|&x| bt.is_least(&arena, x)).collect();
    let bounds = TableauBounds {
        kappa_substitute: proof.kappa,
        prefix_cap: u32::MAX,
        node_cap: u32::MAX,
    };
    let ctx = Ctx { arena: &arena, spec: &spec, bounds: &bounds, bt, lfp };

    let mut sides = Vec::with_capacity(proof.branches.len());
    for (i, pb) in proof.branches.iter().enumerate() {
        sides.push(replay(&ctx, f, pb).map_err(|e| format!("branch {i}: {e}"))?);
    }
    let group: Vec<usize> = (0..proof.branches.len()).collect();
    check_or_completeness(&proof.branches, &sides, &group, 0)
}

fn replay(
    ctx: &Ctx,
    f: FormulaId,
    pb: &ProofBranch,
) -> Result<Vec<Option<(String, String)>>, String> {
    let arena = ctx.arena;
    let Some(root) = pb.prefixes.first() else {
        return Err("prefix table is empty".to_string());
    };
    if root.parent.is_some() || root.agent.is_some() || root.formula.is_some() {
        return Err("prefix 0 must be the bare root".to_string());
    }
    for (i, entry) in pb.prefixes.iter().enumerate().skip(1) {
        let parent = entry.parent.ok_or(format!("prefix {i} lacks a parent"))?;
        if parent >= i {
            return Err(format!("prefix {i} lists a parent out of creation order"));
        }
        let agent = entry.agent.as_deref().ok_or(format!("prefix {i} lacks an agent"))?;
        if !arena.lookup_name(agent).is_some_and(|a| ctx.spec.contains_agent(a)) {
            return Err(format!("prefix {i} steps on unknown agent {agent}"));
        }
        if entry.formula.is_none() {
            return Err(format!("prefix {i} lacks a step formula"));
        }
    }

    let mut b = Branch::start(arena, f);
    let mut map: Vec<Option<PrefixId>> = vec![None; pb.prefixes.len()];
    map[0] = Some(PrefixId::ROOT);
    let mut or_sides = Vec::with_capacity(pb.steps.len());

    for (si, step) in pb.steps.iter().enumerate() {
        let kind = RuleKind::from_label(&step.rule)
            .ok_or(format!("step {si} names unknown rule {:?}", step.rule))?;
        let premise_prefix = map
            .get(step.premise.0)
            .copied()
            .flatten()
            .ok_or(format!("step {si} uses an unmaterialized premise prefix"))?;
        let instances = applicable_rules(arena, &b, ctx.spec, &ctx.bt);
        let inst = instances
            .iter()
            .find(|inst| {
                inst.kind == kind
                    && inst.premise.prefix == premise_prefix
                    && render(arena, inst.premise.formula) == step.premise.1
                    && match inst.target {
                        None => true,
                        Some(t) => step
                            .conclusions
                            .first()
                            .is_some_and(|c| map.get(c.0).copied().flatten() == Some(t)),
                    }
            })
            .copied()
            .ok_or(format!("step {si} ({}) matches no applicable rule instance", step.rule))?;

        let side = if kind == RuleKind::Or {
            let Node::Or { lhs, rhs } = arena.node(inst.premise.formula) else {
                return Err(format!("step {si} applies (or) to a non-disjunction"));
            };
            let l = render(arena, lhs);
            let r = render(arena, rhs);
            let c = step.conclusions.first().ok_or(format!("step {si} lists no conclusion"))?;
            let side = if c.1 == l {
                true
            } else if c.1 == r {
                false
            } else {
                return Err(format!("step {si} concludes a non-disjunct"));
            };
            or_sides.push(Some((l, r)));
            Some(side)
        } else {
            or_sides.push(None);
            None
        };

        let added = apply_instance(arena, &mut b, &ctx.bt, &inst, side);
        if added.len() != step.conclusions.len() {
            return Err(format!(
                "step {si} claims {} conclusions but the rule yields {}",
                step.conclusions.len(),
                added.len()
            ));
        }
        let applied = b.steps.last().expect("apply_instance records a step");
        for (k, (cidx, ctext)) in step.conclusions.iter().enumerate() {
            let node = b.nodes[applied.conclusions[k] as usize];
            if render(arena, node.formula) != *ctext {
                return Err(format!("step {si} conclusion {k} does not match the rule output"));
            }
            if *cidx >= map.len() {
                return Err(format!("step {si} references prefix {cidx} outside the table"));
            }
            match map[*cidx] {
                Some(p) => {
                    if p != node.prefix {
                        return Err(format!("step {si} lands on the wrong prefix"));
                    }
                }
                None => {
                    let (parent, agent, step_f) = b
                        .prefixes
                        .step(node.prefix)
                        .ok_or(format!("step {si} claims the root as a fresh prefix"))?;
                    let entry = &pb.prefixes[*cidx];
                    let parent_ok = entry
                        .parent
                        .is_some_and(|pi| map.get(pi).copied().flatten() == Some(parent));
                    if !parent_ok
                        || entry.agent.as_deref() != Some(arena.name_str(agent))
                        || entry.formula.as_deref() != Some(render(arena, step_f).as_str())
                    {
                        return Err(format!(
                            "step {si} materializes prefix {cidx} with the wrong shape"
                        ));
                    }
                    map[*cidx] = Some(node.prefix);
                }
            }
        }
    }
    if let Some(i) = map.iter().position(Option::is_none) {
        return Err(format!("prefix {i} is declared but never materialized"));
    }

    match &pb.closure {
        ProofClosure::Propositional { prefix, on } => {
            let p = map
                .get(*prefix)
                .copied()
                .flatten()
                .ok_or("closure names an unknown prefix".to_string())?;
            let phi = b.formulas_at(p).ok_or("closure prefix carries no formulas".to_string())?;
            let holds = match on {
                None => phi.iter().any(|&g| matches!(arena.node(g), Node::Bottom)),
                Some(name) => {
                    let lit = |want: bool| {
                        phi.iter().any(|&g| {
                            matches!(arena.node(g), Node::Lit { prop, positive }
                                if positive == want && arena.name_str(prop) == name)
                        })
                    };
                    lit(true) && lit(false)
                }
            };
            if !holds {
                return Err("claimed propositional clash is absent".to_string());
            }
        }
        ProofClosure::FixedPoint { variable, count } => match detect_fixed_point(ctx, &b) {
            Some(ClosureReason::FixedPoint { var, count: found })
                if arena.name_str(var) == variable && found == *count => {}
            _ => return Err("claimed fixed-point closure is not reproducible".to_string()),
        },
    }
    Ok(or_sides)
}

/// Checks that the branch set covers both sides of every (or) split.
fn check_or_completeness(
    branches: &[ProofBranch],
    sides: &[Vec<Option<(String, String)>>],
    group: &[usize],
    depth: usize,
) -> Result<(), String> {
    if let [only] = group {
        if branches[*only].steps[depth..].iter().any(|s| s.rule == "or") {
            return Err(format!("branch {only} splits without a sibling for the other disjunct"));
        }
        return Ok(());
    }
    let mut at_depth = Vec::with_capacity(group.len());
    for &i in group {
        match branches[i].steps.get(depth) {
            Some(s) => at_depth.push((i, s)),
            None => return Err(format!("branch {i} duplicates a sibling branch")),
        }
    }
    let (first_idx, first) = at_depth[0];
    if first.rule != "or" {
        for &(i, s) in &at_depth[1..] {
            if s != first {
                return Err(format!(
                    "branches {first_idx} and {i} diverge at step {depth} without an (or) split"
                ));
            }
        }
        return check_or_completeness(branches, sides, group, depth + 1);
    }
    let (lhs, rhs) = sides[first_idx][depth].clone().expect("replay records (or) sides");
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &(i, s) in &at_depth {
        if s.rule != "or" || s.premise != first.premise {
            return Err(format!("branch {i} does not share the (or) split at step {depth}"));
        }
        let c = &s.conclusions.first().expect("(or) has one conclusion").1;
        if *c == lhs {
            left.push(i);
        } else if *c == rhs {
            right.push(i);
        } else {
            return Err(format!("branch {i} concludes a non-disjunct from (or)"));
        }
    }
    if left.is_empty() || right.is_empty() {
        return Err(format!("the (or) split at step {depth} leaves a disjunct unexplored"));
    }
    check_or_completeness(branches, sides, &left, depth + 1)?;
    check_or_completeness(branches, sides, &right, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::{run_tableau, Verdict};

    fn unsat_proof(spec_text: &str, text: &str) -> TableauProof {
        let mut ar = Arena::new();
        let spec = LogicSpec::parse(&mut ar, spec_text).unwrap();
        let f = parse(&mut ar, &spec.agent_set(), text).unwrap();
        let bounds = TableauBounds::for_formula(&ar, f);
        match run_tableau(&ar, f, &spec, &bounds).unwrap() {
            Verdict::Unsat { proof } => proof,
            v => panic!("expected unsat, got {}", v.tag()),
        }
    }

    #[test]
    fn proofs_round_trip_through_json_and_verify() {
        let proof = unsat_proof("b:K5", "<b>p & mu X.([b]!p | [b]X)");
        verify_proof(&proof).unwrap();
        let back = TableauProof::from_json(&proof.to_json()).unwrap();
        assert_eq!(back, proof);
        verify_proof(&back).unwrap();
    }

    #[test]
    fn tampered_steps_and_closures_are_rejected() {
        let proof = unsat_proof("a:K", "p & !p");
        verify_proof(&proof).unwrap();

        let mut renamed = proof.clone();
        renamed.branches[0].steps[0].rule = "t".to_string();
        assert!(verify_proof(&renamed).is_err(), "a relabeled rule must not replay");

        let mut wrong_closure = proof.clone();
        wrong_closure.branches[0].closure =
            ProofClosure::Propositional { prefix: 0, on: Some("q".to_string()) };
        assert!(verify_proof(&wrong_closure).is_err(), "a fake clash must be caught");

        let mut wrong_formula = proof.clone();
        wrong_formula.formula = "p & !q".to_string();
        assert!(verify_proof(&wrong_formula).is_err());

        let mut empty = proof.clone();
        empty.branches.clear();
        assert!(verify_proof(&empty).is_err());
    }

    #[test]
    fn dropping_an_or_sibling_is_rejected() {
        let proof = unsat_proof("a:K", "(p | q) & (!p & !q)");
        verify_proof(&proof).unwrap();
        assert!(proof.branches.len() >= 2);
        for keep in 0..proof.branches.len() {
            let mut pruned = proof.clone();
            let kept = pruned.branches.remove(keep);
            pruned.branches = vec![kept];
            assert!(
                verify_proof(&pruned).is_err(),
                "a single surviving branch must fail or-completeness"
            );
        }
    }

    #[test]
    fn fixed_point_counts_are_checked_against_replay() {
        let proof = unsat_proof("a:T", "mu X.[a]X");
        verify_proof(&proof).unwrap();
        let mut inflated = proof.clone();
        for b in &mut inflated.branches {
            if let ProofClosure::FixedPoint { count, .. } = &mut b.closure {
                *count = count.map(|c| c + 1).or(Some(99));
            }
        }
        assert_ne!(inflated, proof);
        assert!(verify_proof(&inflated).is_err());
    }
}
