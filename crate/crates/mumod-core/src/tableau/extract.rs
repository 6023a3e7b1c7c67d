//! Witness-model extraction from an open branch.

use std::collections::BTreeMap;

use crate::kripke::{close_logic, KripkeModel, StateSet, MAX_STATES};
use crate::logic::LogicSpec;
use crate::syntax::{Arena, NameId, Node};

use super::{Branch, PrefixId, TableauError};

/// Builds the Kripke model named by an open branch: states are the kept
/// prefixes (loop-glued ones collapse into their anchors), transitions follow
/// child steps, the valuation collects positive literals, and the spec's
/// frame closures are applied on top.
pub fn extract_model(
    arena: &Arena,
    b: &Branch,
    spec: &LogicSpec,
) -> Result<KripkeModel, TableauError> {
    if b.closure.is_some() {
        return Err(TableauError::ClosedBranch);
    }
    let resolve = |mut p: PrefixId| {
        while let Some(&t) = b.anchors.get(&p) {
            p = t;
        }
        p
    };

    let mut order: Vec<PrefixId> = vec![PrefixId::ROOT];
    let mut state_of: BTreeMap<PrefixId, usize> = BTreeMap::new();
    state_of.insert(PrefixId::ROOT, 0);
    let mut head = 0;
    while head < order.len() {
        let p = order[head];
        head += 1;
        for &c in b.children_of(p) {
            let r = resolve(c);
            if !state_of.contains_key(&r) {
                if order.len() == MAX_STATES {
                    return Err(TableauError::WitnessTooLarge(MAX_STATES));
                }
                state_of.insert(r, order.len());
                order.push(r);
            }
        }
    }

    let agents: Vec<NameId> = spec.agents().collect();
    let mut model =
        KripkeModel::new(order.len(), &agents).expect("witness stays within the state cap");
    for (i, &p) in order.iter().enumerate() {
        model.set_state_name(i, b.prefixes.render(arena, p));
        for &c in b.children_of(p) {
            let (_, agent, _) = b.prefixes.step(c).expect("children are non-root");
            let to = state_of[&resolve(c)];
            model.add_edge(agent, i, to).expect("edge endpoints are known states");
        }
    }

    let mut valuation: BTreeMap<NameId, StateSet> = BTreeMap::new();
    for (i, &p) in order.iter().enumerate() {
        let Some(phi) = b.formulas_at(p) else { continue };
        for &g in phi {
            if let Node::Lit { prop, positive: true } = arena.node(g) {
                valuation.entry(prop).or_insert(StateSet::EMPTY).insert(i);
            }
        }
    }
    for (prop, states) in valuation {
        model.set_prop(prop, states);
    }
    model.set_designated(Some(0)).expect("the root is state 0");

    Ok(close_logic(&model, spec))
}
