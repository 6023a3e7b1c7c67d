//! Frame-condition checks and per-agent closures.
//!
//! All closures are least with respect to edge addition except the serial
//! one, which uses the weakest repair that serializes a frame: a self-loop
//! at every dead-end state.

use super::{KripkeModel, StateSet};
use crate::logic::{FrameCondition, LogicSpec};
use crate::syntax::NameId;

/// Does `agent`'s relation satisfy `cond`?
pub fn check_frame_condition(model: &KripkeModel, agent: NameId, cond: FrameCondition) -> bool {
    let n = model.n_states();
    let row = |s: usize| model.successors(agent, s);
    match cond {
        FrameCondition::Serial => (0..n).all(|s| !row(s).is_empty()),
        FrameCondition::Reflexive => (0..n).all(|s| row(s).contains(s)),
        FrameCondition::Symmetric => {
            (0..n).all(|s| row(s).iter(n).all(|t| row(t).contains(s)))
        }
        FrameCondition::Transitive => {
            (0..n).all(|s| row(s).iter(n).all(|t| row(t).subset_of(row(s))))
        }
        FrameCondition::Euclidean => {
            // s -> t and s -> r imply t -> r: every successor of s must see
            // all successors of s.
            (0..n).all(|s| row(s).iter(n).all(|t| row(s).subset_of(row(t))))
        }
    }
}

/// Do all agents satisfy all their spec conditions?
pub fn check_logic(model: &KripkeModel, spec: &LogicSpec) -> bool {
    super::spec_conditions_hold(model, spec).is_none()
}

/// The order in which several closures can be composed so that each step
/// preserves all conditions established earlier.
pub fn closure_preserving_order() -> [FrameCondition; 5] {
    [
        FrameCondition::Serial,
        FrameCondition::Reflexive,
        FrameCondition::Symmetric,
        FrameCondition::Transitive,
        FrameCondition::Euclidean,
    ]
}

/// Close `agent`'s relation under `cond`, leaving other agents untouched.
pub fn close_frame(model: &KripkeModel, agent: NameId, cond: FrameCondition) -> KripkeModel {
    let mut out = model.clone();
    let n = model.n_states();
    let mut rows: Vec<StateSet> = (0..n).map(|s| model.successors(agent, s)).collect();
    match cond {
        FrameCondition::Serial => {
            for (s, row) in rows.iter_mut().enumerate() {
                if row.is_empty() {
                    row.insert(s);
                }
            }
        }
        FrameCondition::Reflexive => {
            for (s, row) in rows.iter_mut().enumerate() {
                row.insert(s);
            }
        }
        FrameCondition::Symmetric => {
            let orig = rows.clone();
            for s in 0..n {
                for t in orig[s].iter(n) {
                    rows[t].insert(s);
                }
            }
        }
        FrameCondition::Transitive => loop {
            let mut changed = false;
            for s in 0..n {
                let mut acc = rows[s];
                for t in rows[s].iter(n) {
                    acc = acc.union(rows[t]);
                }
                if acc != rows[s] {
                    rows[s] = acc;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        },
        FrameCondition::Euclidean => loop {
            // Saturate: whenever s -> t and s -> r, add t -> r.
            let mut changed = false;
            for s in 0..n {
                let targets = rows[s];
                for t in targets.iter(n) {
                    if !targets.subset_of(rows[t]) {
                        rows[t] = rows[t].union(targets);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        },
    }
    for (s, row) in rows.into_iter().enumerate() {
        out.set_row(agent, s, row);
    }
    out
}

/// Applies every closure a spec requires, per agent, in the order of
/// closure_preserving_order, repeating until the model is stable.
///
/// One pass settles most condition sets, but euclidean saturation can break
/// an earlier transitive closure (witness: the transitive relation
/// {(0,0),(0,2),(1,2)} on three states), so sets like {4,5} need the loop to
/// reach a relation satisfying everything at once.
pub fn close_logic(model: &KripkeModel, spec: &LogicSpec) -> KripkeModel {
    let mut out = model.clone();
    loop {
        let before = out.clone();
        for cond in closure_preserving_order() {
            for agent in spec.agents() {
                if spec.has(agent, cond) {
                    out = close_frame(&out, agent, cond);
                }
            }
        }
        if out == before {
            return out;
        }
    }
}
