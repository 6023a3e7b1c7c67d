//! Frame conditions and per-agent logic specifications.
//!
//! A [`LogicSpec`] assigns each agent a set of frame conditions.  Specs are
//! written `a:K; b:S5` with the usual modal logic names, or with explicit
//! condition sets like `a:{D,4}`.

use crate::syntax::{AgentSet, Arena, NameId};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// The five supported frame conditions.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum FrameCondition {
    /// D: every state has a successor.
    Serial,
    /// T: the relation is reflexive.
    Reflexive,
    /// B: the relation is symmetric.
    Symmetric,
    /// 4: the relation is transitive.
    Transitive,
    /// 5: the relation is euclidean.
    Euclidean,
}

impl FrameCondition {
    pub const ALL: [FrameCondition; 5] = [
        FrameCondition::Serial,
        FrameCondition::Reflexive,
        FrameCondition::Symmetric,
        FrameCondition::Transitive,
        FrameCondition::Euclidean,
    ];

    pub fn letter(self) -> &'static str {
        match self {
            FrameCondition::Serial => "D",
            FrameCondition::Reflexive => "T",
            FrameCondition::Symmetric => "B",
            FrameCondition::Transitive => "4",
            FrameCondition::Euclidean => "5",
        }
    }

    pub fn from_letter(s: &str) -> Option<FrameCondition> {
        match s {
            "D" => Some(FrameCondition::Serial),
            "T" => Some(FrameCondition::Reflexive),
            "B" => Some(FrameCondition::Symmetric),
            "4" => Some(FrameCondition::Transitive),
            "5" => Some(FrameCondition::Euclidean),
            _ => None,
        }
    }
}

impl fmt::Display for FrameCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("bad logic spec: {0}")]
    Bad(String),
}

/// Per-agent condition sets; the domain is exactly the agent set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicSpec {
    map: BTreeMap<NameId, BTreeSet<FrameCondition>>,
    order: Vec<NameId>,
}

impl LogicSpec {
    /// The plain modal logic K for every agent in `agents`.
    pub fn k_for(agents: &AgentSet) -> LogicSpec {
        let mut map = BTreeMap::new();
        let mut order = Vec::new();
        for a in agents.iter() {
            map.insert(a, BTreeSet::new());
            order.push(a);
        }
        LogicSpec { map, order }
    }

    /// Same condition set for every agent in `agents`.
    pub fn uniform(agents: &AgentSet, conds: &[FrameCondition]) -> LogicSpec {
        let mut spec = LogicSpec::k_for(agents);
        for a in agents.iter() {
            spec.map.insert(a, conds.iter().copied().collect());
        }
        spec
    }

    pub fn set(&mut self, agent: NameId, conds: &[FrameCondition]) {
        if !self.map.contains_key(&agent) {
            self.order.push(agent);
        }
        self.map.insert(agent, conds.iter().copied().collect());
    }

    /// Conditions for `agent`; empty for agents outside the domain.
    pub fn conditions(&self, agent: NameId) -> BTreeSet<FrameCondition> {
        self.map.get(&agent).cloned().unwrap_or_default()
    }

    pub fn has(&self, agent: NameId, cond: FrameCondition) -> bool {
        self.map.get(&agent).is_some_and(|c| c.contains(&cond))
    }

    pub fn agents(&self) -> impl Iterator<Item = NameId> + '_ {
        self.order.iter().copied()
    }

    pub fn contains_agent(&self, agent: NameId) -> bool {
        self.map.contains_key(&agent)
    }

    pub fn agent_set(&self) -> AgentSet {
        AgentSet::from_ids(self.order.clone()).expect("spec domains are valid agent sets")
    }

    /// Parse `a:K; b:{D,4}` against an arena that will intern agent names.
    pub fn parse(arena: &mut Arena, text: &str) -> Result<LogicSpec, SpecError> {
        let mut map = BTreeMap::new();
        let mut order = Vec::new();
        for entry in text.split(';') {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let (agent, spec) = entry
                .split_once(':')
                .ok_or_else(|| SpecError::Bad(format!("missing `:` in `{entry}`")))?;
            let agent = agent.trim();
            if agent.is_empty()
                || !agent
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_')
                || !agent.chars().next().unwrap().is_ascii_lowercase()
            {
                return Err(SpecError::Bad(format!("bad agent name `{agent}`")));
            }
            let conds = parse_conditions(spec.trim())?;
            let id = arena.name(agent);
            if map.insert(id, conds).is_some() {
                return Err(SpecError::Bad(format!("agent `{agent}` listed twice")));
            }
            order.push(id);
        }
        if order.is_empty() {
            return Err(SpecError::Bad("empty spec".into()));
        }
        Ok(LogicSpec { map, order })
    }

    /// Render back to the `a:NAME; b:NAME` form with canonical names.
    pub fn display(&self, arena: &Arena) -> String {
        let mut parts = Vec::new();
        for a in &self.order {
            let name = logic_name(&self.map[a]);
            parts.push(format!("{}:{}", arena.name_str(*a), name));
        }
        parts.join("; ")
    }
}

/// Canonical name for a condition set (`K`, `S4`, `KD45`, `TB`, ...).
pub fn logic_name(conds: &BTreeSet<FrameCondition>) -> String {
    use FrameCondition::*;
    if conds.is_empty() {
        return "K".to_string();
    }
    let t = conds.contains(&Reflexive);
    let four = conds.contains(&Transitive);
    let five = conds.contains(&Euclidean);
    if t && four && five && conds.len() == 3 {
        return "S5".to_string();
    }
    if t && four && conds.len() == 2 {
        return "S4".to_string();
    }
    let mut name = String::new();
    // K prefix only when the set is within {4,5}, matching common usage
    // (K4, K5, K45); D/T/B already read as logic names on their own.
    if conds
        .iter()
        .all(|c| matches!(c, Transitive | Euclidean))
    {
        name.push('K');
    }
    for c in [Serial, Reflexive, Symmetric, Transitive, Euclidean] {
        if conds.contains(&c) {
            name.push_str(c.letter());
        }
    }
    name
}

fn parse_conditions(spec: &str) -> Result<BTreeSet<FrameCondition>, SpecError> {
    if let Some(inner) = spec.strip_prefix('{') {
        let inner = inner
            .strip_suffix('}')
            .ok_or_else(|| SpecError::Bad(format!("missing `}}` in `{spec}`")))?;
        let mut out = BTreeSet::new();
        for part in inner.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let cond = FrameCondition::from_letter(part)
                .ok_or_else(|| SpecError::Bad(format!("unknown condition `{part}`")))?;
            out.insert(cond);
        }
        return Ok(out);
    }
    // Named form: S4/S5 are special; otherwise the name is read letter by
    // letter over D, T, B, 4, 5, with an optional leading K.
    match spec {
        "S4" => return Ok([FrameCondition::Reflexive, FrameCondition::Transitive].into()),
        "S5" => {
            return Ok([
                FrameCondition::Reflexive,
                FrameCondition::Transitive,
                FrameCondition::Euclidean,
            ]
            .into())
        }
        _ => {}
    }
    let mut out = BTreeSet::new();
    let mut chars = spec.chars().peekable();
    if chars.peek() == Some(&'K') {
        chars.next();
    }
    for c in chars {
        let cond = FrameCondition::from_letter(&c.to_string()).ok_or_else(|| {
            SpecError::Bad(format!(
                "unknown logic name `{spec}` (try an explicit set like {{D,4}})"
            ))
        })?;
        out.insert(cond);
    }
    Ok(out)
}
