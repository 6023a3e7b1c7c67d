//! Set-based formula evaluation by Knaster-Tarski iteration.

use super::{KripkeModel, ModelError, StateSet};
use crate::syntax::{Arena, FormulaId, NameId, Node};
use std::collections::BTreeMap;

/// Assignment of state sets to recursion variables.
pub type Environment = BTreeMap<NameId, StateSet>;

/// The set of states of `model` satisfying `f` under `env`.  Fixed points
/// are iterated from the empty (`mu`) or full (`nu`) set; each converges
/// within one step per state.
pub fn eval_set(model: &KripkeModel, arena: &Arena, f: FormulaId, env: &mut Environment) -> StateSet {
    let n = model.n_states();
    match arena.node(f) {
        Node::Top => StateSet::full(n),
        Node::Bottom => StateSet::EMPTY,
        Node::Lit { prop, positive } => {
            let set = model.prop_states(prop);
            if positive {
                set
            } else {
                StateSet::full(n).minus(set)
            }
        }
        Node::Var { name } => env.get(&name).copied().unwrap_or(StateSet::EMPTY),
        Node::And { lhs, rhs } => {
            eval_set(model, arena, lhs, env).inter(eval_set(model, arena, rhs, env))
        }
        Node::Or { lhs, rhs } => {
            eval_set(model, arena, lhs, env).union(eval_set(model, arena, rhs, env))
        }
        Node::Box { agent, body } => {
            let inner = eval_set(model, arena, body, env);
            let mut out = StateSet::EMPTY;
            for s in 0..n {
                if model.successors(agent, s).subset_of(inner) {
                    out.insert(s);
                }
            }
            out
        }
        Node::Diamond { agent, body } => {
            let inner = eval_set(model, arena, body, env);
            let mut out = StateSet::EMPTY;
            for s in 0..n {
                if !model.successors(agent, s).inter(inner).is_empty() {
                    out.insert(s);
                }
            }
            out
        }
        Node::Mu { var, body } => {
            let saved = env.get(&var).copied();
            let mut cur = StateSet::EMPTY;
            loop {
                env.insert(var, cur);
                let next = eval_set(model, arena, body, env);
                if next == cur {
                    break;
                }
                cur = next;
            }
            restore(env, var, saved);
            cur
        }
        Node::Nu { var, body } => {
            let saved = env.get(&var).copied();
            let mut cur = StateSet::full(n);
            loop {
                env.insert(var, cur);
                let next = eval_set(model, arena, body, env);
                if next == cur {
                    break;
                }
                cur = next;
            }
            restore(env, var, saved);
            cur
        }
    }
}

fn restore(env: &mut Environment, var: NameId, saved: Option<StateSet>) {
    match saved {
        Some(v) => {
            env.insert(var, v);
        }
        None => {
            env.remove(&var);
        }
    }
}

/// Does the closed formula `f` hold at state `s` of `model`?
pub fn model_check(
    model: &KripkeModel,
    arena: &Arena,
    s: usize,
    f: FormulaId,
) -> Result<bool, ModelError> {
    if !arena.is_closed(f) {
        return Err(ModelError::OpenFormula);
    }
    if s >= model.n_states() {
        return Err(ModelError::BadStateIndex(s));
    }
    let mut env = Environment::new();
    Ok(eval_set(model, arena, f, &mut env).contains(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{negate, parse, AgentSet};

    fn ring(arena: &mut Arena, n: usize, agent: &str) -> KripkeModel {
        let a = arena.name(agent);
        let mut m = KripkeModel::new(n, &[a]).unwrap();
        for s in 0..n {
            m.add_edge(a, s, (s + 1) % n).unwrap();
        }
        m
    }

    #[test]
    fn modal_clauses_follow_the_relation() {
        let mut ar = Arena::new();
        let ag = AgentSet::new(&mut ar, &["a"]).unwrap();
        let mut m = ring(&mut ar, 3, "a");
        let p = ar.name("p");
        m.set_prop(p, StateSet(0b010)); // p at s1 only
        let boxp = parse(&mut ar, &ag, "[a]p").unwrap();
        let diap = parse(&mut ar, &ag, "<a>p").unwrap();
        let mut env = Environment::new();
        assert_eq!(eval_set(&m, &ar, boxp, &mut env), StateSet(0b001));
        assert_eq!(eval_set(&m, &ar, diap, &mut env), StateSet(0b001));
        // Dead ends satisfy every box and no diamond.
        let mut dead = KripkeModel::new(1, m.agents()).unwrap();
        dead.set_prop(p, StateSet::EMPTY);
        assert!(model_check(&dead, &ar, 0, boxp).unwrap());
        assert!(!model_check(&dead, &ar, 0, diap).unwrap());
    }

    #[test]
    fn least_and_greatest_fixed_points_differ_on_cycles() {
        let mut ar = Arena::new();
        let ag = AgentSet::new(&mut ar, &["a"]).unwrap();
        let m = ring(&mut ar, 4, "a");
        // Always possible to keep stepping: true on a cycle.
        let always = parse(&mut ar, &ag, "nu X.<a>X").unwrap();
        // Reach a dead end eventually: false on a cycle.
        let finite = parse(&mut ar, &ag, "mu X.[a]X").unwrap();
        let mut env = Environment::new();
        assert_eq!(eval_set(&m, &ar, always, &mut env), StateSet::full(4));
        assert_eq!(eval_set(&m, &ar, finite, &mut env), StateSet::EMPTY);
    }

    #[test]
    fn eventually_reaches_along_the_ring() {
        let mut ar = Arena::new();
        let ag = AgentSet::new(&mut ar, &["a"]).unwrap();
        let mut m = ring(&mut ar, 5, "a");
        let p = ar.name("p");
        m.set_prop(p, StateSet(0b00100));
        let eventually = parse(&mut ar, &ag, "mu X.p | <a>X").unwrap();
        let mut env = Environment::new();
        assert_eq!(eval_set(&m, &ar, eventually, &mut env), StateSet::full(5));
    }

    #[test]
    fn duality_holds_pointwise() {
        let mut ar = Arena::new();
        let ag = AgentSet::new(&mut ar, &["a", "b"]).unwrap();
        let a = ar.lookup_name("a").unwrap();
        let b = ar.lookup_name("b").unwrap();
        let mut m = KripkeModel::new(4, &[a, b]).unwrap();
        for s in 0..4 {
            m.add_edge(a, s, (s + 1) % 4).unwrap();
        }
        m.add_edge(b, 0, 2).unwrap();
        let p = ar.name("p");
        m.set_prop(p, StateSet(0b1010));
        for text in [
            "p",
            "[a]p | <b>!p",
            "mu X.p | <a>X",
            "nu X.(p | <b>tt) & [a]X",
        ] {
            let f = parse(&mut ar, &ag, text).unwrap();
            let nf = negate(&mut ar, f);
            let mut env = Environment::new();
            let pos = eval_set(&m, &ar, f, &mut env);
            let neg = eval_set(&m, &ar, nf, &mut env);
            assert_eq!(pos.union(neg), StateSet::full(4), "duality on {text}");
            assert_eq!(pos.inter(neg), StateSet::EMPTY, "duality on {text}");
        }
    }

    #[test]
    fn environment_monotonicity_for_a_free_variable() {
        let mut ar = Arena::new();
        let _ag = AgentSet::new(&mut ar, &["a"]).unwrap();
        let m = ring(&mut ar, 4, "a");
        let x = ar.name("X");
        let a = ar.lookup_name("a").unwrap();
        let vx = ar.var(x);
        let body = ar.diamond(a, vx); // <a>X, monotone in X
        let mut env = Environment::new();
        env.insert(x, StateSet(0b0010));
        let small = eval_set(&m, &ar, body, &mut env);
        env.insert(x, StateSet(0b1010));
        let large = eval_set(&m, &ar, body, &mut env);
        assert!(small.subset_of(large));
    }
}
