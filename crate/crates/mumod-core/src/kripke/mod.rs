//! Finite Kripke models: states, per-agent transition relations, and a
//! propositional valuation, capped at 64 states so state sets are single
//! machine words.

mod eval;
mod frames;

pub use eval::{eval_set, model_check, Environment};
pub use frames::{
    check_frame_condition, check_logic, close_frame, close_logic, closure_preserving_order,
};

use crate::logic::FrameCondition;
use crate::syntax::{Arena, NameId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const MAX_STATES: usize = 64;

/// A set of states as a bitmask over at most [`MAX_STATES`] states.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct StateSet(pub u64);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);

    pub fn full(n: usize) -> StateSet {
        if n >= 64 {
            StateSet(u64::MAX)
        } else {
            StateSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(s: usize) -> StateSet {
        StateSet(1u64 << s)
    }

    pub fn contains(self, s: usize) -> bool {
        self.0 & (1u64 << s) != 0
    }

    pub fn insert(&mut self, s: usize) {
        self.0 |= 1u64 << s;
    }

    pub fn union(self, other: StateSet) -> StateSet {
        StateSet(self.0 | other.0)
    }

    pub fn inter(self, other: StateSet) -> StateSet {
        StateSet(self.0 & other.0)
    }

    pub fn minus(self, other: StateSet) -> StateSet {
        StateSet(self.0 & !other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn subset_of(self, other: StateSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self, n: usize) -> impl Iterator<Item = usize> {
        (0..n).filter(move |s| self.contains(*s))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("model must have between 1 and {MAX_STATES} states, got {0}")]
    StateCount(usize),
    #[error("duplicate state name `{0}`")]
    DuplicateState(String),
    #[error("duplicate agent name `{0}`")]
    DuplicateAgent(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("state index {0} out of range")]
    BadStateIndex(usize),
    #[error("formula must be closed")]
    OpenFormula,
    #[error("bad model JSON: {0}")]
    Json(String),
}

/// A pointed-or-unpointed Kripke model over named states and agents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeModel {
    state_names: Vec<String>,
    agents: Vec<NameId>,
    /// Successor sets per agent, indexed parallel to `agents`, then state.
    succ: Vec<Vec<StateSet>>,
    /// Proposition -> set of states where it holds.
    valuation: BTreeMap<NameId, StateSet>,
    designated: Option<usize>,
}

impl KripkeModel {
    /// Model with `n` anonymous states (`s0`, `s1`, ...) and no transitions.
    pub fn new(n: usize, agents: &[NameId]) -> Result<KripkeModel, ModelError> {
        if n == 0 || n > MAX_STATES {
            return Err(ModelError::StateCount(n));
        }
        Ok(KripkeModel {
            state_names: (0..n).map(|i| format!("s{i}")).collect(),
            agents: agents.to_vec(),
            succ: vec![vec![StateSet::EMPTY; n]; agents.len()],
            valuation: BTreeMap::new(),
            designated: None,
        })
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.state_names[s]
    }

    pub fn set_state_name(&mut self, s: usize, name: String) {
        self.state_names[s] = name;
    }

    pub fn agents(&self) -> &[NameId] {
        &self.agents
    }

    pub fn designated(&self) -> Option<usize> {
        self.designated
    }

    pub fn set_designated(&mut self, s: Option<usize>) -> Result<(), ModelError> {
        if let Some(s) = s {
            if s >= self.n_states() {
                return Err(ModelError::BadStateIndex(s));
            }
        }
        self.designated = s;
        Ok(())
    }

    fn agent_index(&self, agent: NameId) -> Option<usize> {
        self.agents.iter().position(|a| *a == agent)
    }

    /// Successors of `s` under `agent`; empty for unknown agents.
    pub fn successors(&self, agent: NameId, s: usize) -> StateSet {
        match self.agent_index(agent) {
            Some(i) => self.succ[i][s],
            None => StateSet::EMPTY,
        }
    }

    pub fn add_edge(&mut self, agent: NameId, from: usize, to: usize) -> Result<(), ModelError> {
        let n = self.n_states();
        if from >= n {
            return Err(ModelError::BadStateIndex(from));
        }
        if to >= n {
            return Err(ModelError::BadStateIndex(to));
        }
        let i = self
            .agent_index(agent)
            .ok_or_else(|| ModelError::UnknownAgent(format!("agent #{}", agent.0)))?;
        self.succ[i][from].insert(to);
        Ok(())
    }

    pub fn set_row(&mut self, agent: NameId, from: usize, row: StateSet) {
        let i = self.agent_index(agent).expect("agent present");
        self.succ[i][from] = row;
    }

    pub fn rows(&self, agent: NameId) -> &[StateSet] {
        let i = self.agent_index(agent).expect("agent present");
        &self.succ[i]
    }

    pub fn set_prop(&mut self, prop: NameId, states: StateSet) {
        if states.is_empty() {
            self.valuation.remove(&prop);
        } else {
            self.valuation.insert(prop, states);
        }
    }

    pub fn prop_states(&self, prop: NameId) -> StateSet {
        self.valuation.get(&prop).copied().unwrap_or(StateSet::EMPTY)
    }

    pub fn props(&self) -> impl Iterator<Item = NameId> + '_ {
        self.valuation.keys().copied()
    }

    /// States reachable from `start` under the union of all agent relations,
    /// including `start` itself.
    pub fn reachable_from(&self, start: usize) -> StateSet {
        let mut seen = StateSet::singleton(start);
        loop {
            let mut next = seen;
            for s in seen.iter(self.n_states()) {
                for rows in &self.succ {
                    next = next.union(rows[s]);
                }
            }
            if next == seen {
                return seen;
            }
            seen = next;
        }
    }

    /// Serialize to the interchange JSON object.
    pub fn to_json(&self, arena: &Arena) -> serde_json::Value {
        let dto = ModelDto {
            states: self.state_names.clone(),
            agents: self
                .agents
                .iter()
                .map(|a| arena.name_str(*a).to_string())
                .collect(),
            transitions: {
                let mut out = Vec::new();
                for (i, a) in self.agents.iter().enumerate() {
                    for s in 0..self.n_states() {
                        for t in self.succ[i][s].iter(self.n_states()) {
                            out.push((
                                self.state_names[s].clone(),
                                arena.name_str(*a).to_string(),
                                self.state_names[t].clone(),
                            ));
                        }
                    }
                }
                out
            },
            valuation: {
                let mut out = BTreeMap::new();
                for s in 0..self.n_states() {
                    let props: Vec<String> = self
                        .valuation
                        .iter()
                        .filter(|(_, set)| set.contains(s))
                        .map(|(p, _)| arena.name_str(*p).to_string())
                        .collect();
                    if !props.is_empty() {
                        out.insert(self.state_names[s].clone(), props);
                    }
                }
                out
            },
            designated: self.designated.map(|s| self.state_names[s].clone()),
        };
        serde_json::to_value(dto).expect("model serialization cannot fail")
    }

    /// Load from the interchange JSON object, interning names into `arena`.
    /// Unknown keys and dangling references are rejected.
    pub fn from_json(arena: &mut Arena, value: &serde_json::Value) -> Result<KripkeModel, ModelError> {
        let dto: ModelDto =
            serde_json::from_value(value.clone()).map_err(|e| ModelError::Json(e.to_string()))?;
        if dto.states.is_empty() || dto.states.len() > MAX_STATES {
            return Err(ModelError::StateCount(dto.states.len()));
        }
        let mut index = BTreeMap::new();
        for (i, name) in dto.states.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(ModelError::DuplicateState(name.clone()));
            }
        }
        let mut agents = Vec::new();
        for name in &dto.agents {
            let id = arena.name(name);
            if agents.contains(&id) {
                return Err(ModelError::DuplicateAgent(name.clone()));
            }
            agents.push(id);
        }
        let mut model = KripkeModel::new(dto.states.len(), &agents)?;
        model.state_names = dto.states.clone();
        for (from, agent, to) in &dto.transitions {
            let &f = index
                .get(from)
                .ok_or_else(|| ModelError::UnknownState(from.clone()))?;
            let &t = index
                .get(to)
                .ok_or_else(|| ModelError::UnknownState(to.clone()))?;
            let id = arena
                .lookup_name(agent)
                .filter(|id| agents.contains(id))
                .ok_or_else(|| ModelError::UnknownAgent(agent.clone()))?;
            model.add_edge(id, f, t)?;
        }
        for (state, props) in &dto.valuation {
            let &s = index
                .get(state)
                .ok_or_else(|| ModelError::UnknownState(state.clone()))?;
            for p in props {
                let prop = arena.name(p);
                let mut set = model.prop_states(prop);
                set.insert(s);
                model.set_prop(prop, set);
            }
        }
        if let Some(designated) = &dto.designated {
            let &s = index
                .get(designated)
                .ok_or_else(|| ModelError::UnknownState(designated.clone()))?;
            model.designated = Some(s);
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDto {
    states: Vec<String>,
    agents: Vec<String>,
    transitions: Vec<(String, String, String)>,
    valuation: BTreeMap<String, Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    designated: Option<String>,
}

/// Conjunction of per-agent frame checks across a whole spec.
pub fn spec_conditions_hold(
    model: &KripkeModel,
    spec: &crate::logic::LogicSpec,
) -> Option<(NameId, FrameCondition)> {
    for agent in spec.agents() {
        for cond in spec.conditions(agent) {
            if !check_frame_condition(model, agent, cond) {
                return Some((agent, cond));
            }
        }
    }
    None
}
