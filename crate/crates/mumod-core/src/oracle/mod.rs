//! Bounded brute-force satisfiability oracle and cross-validation harness.

mod corpus;
mod crosscheck;

pub use corpus::{enumerate_formulas, generate_corpus, CorpusFilter};
pub use crosscheck::{
    cross_check_translation, CheckClassification, CheckRecord, CrossCheckError, CrossCheckReport,
};

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::{Mutex, OnceLock};

use thiserror::Error;

use crate::kripke::{
    check_logic, close_logic, eval_set, model_check, spec_conditions_hold, Environment,
    KripkeModel, StateSet,
};
use crate::logic::{FrameCondition, LogicSpec};
use crate::syntax::{Arena, FormulaId, NameId};

/// Relations are enumerated as raw bit masks, 2^(n^2) per agent; five states
/// would already mean 33 million candidates before closing.
const MAX_ENUMERABLE_STATES: usize = 4;

/// Isomorphism reduction permutes all states except the designated one, so it
/// is only attempted while the factorial stays trivial.
const MAX_ISO_STATES: usize = 6;

/// Search limits for the brute-force oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    /// Largest model size tried, inclusive.
    pub max_states: usize,
    /// Upper bound on distinct propositions in the input formula.
    pub max_propositions: usize,
    /// Count of candidate models evaluated before giving up.
    pub enumeration_cap: u64,
    /// Skip candidates isomorphic to an earlier one (designated state fixed).
    pub modulo_isomorphism: bool,
}

impl SearchBudget {
    /// Budget with the given state bound and desk-scale defaults elsewhere.
    pub fn up_to(max_states: usize) -> SearchBudget {
        SearchBudget {
            max_states,
            max_propositions: 4,
            enumeration_cap: 2_000_000,
            modulo_isomorphism: false,
        }
    }

    fn validate(&self) -> Result<(), OracleError> {
        if self.max_states == 0 {
            return Err(OracleError::BadBudget);
        }
        Ok(())
    }
}

/// Outcome of a bounded satisfiability search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleResult {
    /// A model and the state where the formula holds; always state 0.
    Witness(KripkeModel, usize),
    /// Every candidate up to the bound was tried and none worked.
    NoModelUpTo(usize),
    /// The search stopped early; counts say how far it got.
    BudgetExhausted {
        /// Model sizes that were enumerated completely.
        states_completed: usize,
        /// Candidate models evaluated before stopping.
        candidates_tried: u64,
    },
}

impl OracleResult {
    /// Compact verdict tag for reports.
    pub fn label(&self) -> String {
        match self {
            OracleResult::Witness(m, _) => format!("sat@{}", m.n_states()),
            OracleResult::NoModelUpTo(n) => format!("unsat<={n}"),
            OracleResult::BudgetExhausted { .. } => "budget".to_string(),
        }
    }
}

/// Why the oracle refused to run.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("search budget must allow at least one state")]
    BadBudget,
    #[error("oracle input must be a closed formula")]
    OpenFormula,
    #[error("formula has {found} propositions, budget allows {allowed}")]
    TooManyPropositions { found: usize, allowed: usize },
    #[error("agent `{0}` is not covered by the logic spec")]
    UnknownAgent(String),
}

fn condition_mask(conds: &BTreeSet<FrameCondition>) -> u8 {
    let mut mask = 0u8;
    for (i, c) in FrameCondition::ALL.iter().enumerate() {
        if conds.contains(c) {
            mask |= 1 << i;
        }
    }
    mask
}

fn rows_from_mask(n: usize, mask: u64) -> Vec<StateSet> {
    (0..n)
        .map(|s| StateSet((mask >> (s * n)) & ((1u64 << n) - 1)))
        .collect()
}

fn mask_from_rows(n: usize, rows: &[StateSet]) -> u64 {
    rows.iter()
        .enumerate()
        .fold(0u64, |acc, (s, row)| acc | (row.0 << (s * n)))
}

fn scratch_spec(conds: &BTreeSet<FrameCondition>) -> (Arena, NameId, LogicSpec) {
    let mut arena = Arena::new();
    let agent = arena.name("a");
    let agents = crate::syntax::AgentSet::from_ids(vec![agent]).expect("one agent");
    let mut spec = LogicSpec::k_for(&agents);
    let conds_vec: Vec<FrameCondition> = conds.iter().copied().collect();
    spec.set(agent, &conds_vec);
    (arena, agent, spec)
}

fn relation_model(n: usize, agent: NameId, rows: &[StateSet]) -> KripkeModel {
    let mut m = KripkeModel::new(n, &[agent]).expect("desk-scale state count");
    for (s, &row) in rows.iter().enumerate() {
        m.set_row(agent, s, row);
    }
    m
}

/// All relations on `n` states satisfying `conds`, by checking each raw mask.
fn enumerate_by_filter(conds: &BTreeSet<FrameCondition>, n: usize) -> Vec<Vec<StateSet>> {
    let (_, agent, spec) = scratch_spec(conds);
    let mut out = Vec::new();
    for raw in 0..(1u64 << (n * n)) {
        let rows = rows_from_mask(n, raw);
        let m = relation_model(n, agent, &rows);
        if spec_conditions_hold(&m, &spec).is_none() {
            out.push(rows);
        }
    }
    out
}

/// Same relation set, produced by closing every raw mask and deduplicating.
fn enumerate_by_closure(conds: &BTreeSet<FrameCondition>, n: usize) -> Vec<Vec<StateSet>> {
    let (_, agent, spec) = scratch_spec(conds);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for raw in 0..(1u64 << (n * n)) {
        let rows = rows_from_mask(n, raw);
        let m = relation_model(n, agent, &rows);
        let closed = close_logic(&m, &spec);
        let closed_rows: Vec<StateSet> = (0..n).map(|s| closed.successors(agent, s)).collect();
        if seen.insert(mask_from_rows(n, &closed_rows)) {
            out.push(closed_rows);
        }
    }
    out
}

type RelationSet = std::sync::Arc<Vec<Vec<StateSet>>>;

/// Legal relations for one agent, cached per condition set and state count.
/// `None` means the raw space is too large to enumerate.
fn legal_relations(conds: &BTreeSet<FrameCondition>, n: usize) -> Option<RelationSet> {
    if n > MAX_ENUMERABLE_STATES {
        return None;
    }
    static CACHE: OnceLock<Mutex<HashMap<(u8, usize), RelationSet>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (condition_mask(conds), n);
    if let Some(hit) = cache.lock().expect("relation cache").get(&key) {
        return Some(hit.clone());
    }
    // Filtering visits every raw mask anyway; closing pays off from three
    // states up, where most masks collapse onto the same closed relation.
    let computed: RelationSet = if n <= 2 {
        enumerate_by_filter(conds, n).into()
    } else {
        enumerate_by_closure(conds, n).into()
    };
    Some(
        cache
            .lock()
            .expect("relation cache")
            .entry(key)
            .or_insert(computed)
            .clone(),
    )
}

fn permutations_fixing_zero(n: usize) -> Vec<Vec<usize>> {
    fn go(rest: &mut Vec<usize>, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            acc.push(x);
            go(rest, acc, out);
            acc.pop();
            rest.insert(i, x);
        }
    }
    let mut rest: Vec<usize> = (1..n).collect();
    let mut out = Vec::new();
    go(&mut rest, &mut vec![0], &mut out);
    out
}

fn permute_set(set: StateSet, perm: &[usize], n: usize) -> StateSet {
    let mut out = StateSet::EMPTY;
    for s in set.iter(n) {
        out.insert(perm[s]);
    }
    out
}

/// Smallest encoding of the model over all state permutations fixing state 0.
fn canonical_key(model: &KripkeModel, props: &[NameId], perms: &[Vec<usize>]) -> Vec<u64> {
    let n = model.n_states();
    let mut best: Option<Vec<u64>> = None;
    for perm in perms {
        let mut key = Vec::with_capacity(model.agents().len() * n + props.len());
        for &a in model.agents() {
            for new_s in 0..n {
                // perm maps old to new; find the old state landing on new_s.
                let old = perm.iter().position(|&x| x == new_s).expect("bijection");
                key.push(permute_set(model.successors(a, old), perm, n).0);
            }
        }
        for &p in props {
            key.push(permute_set(model.prop_states(p), perm, n).0);
        }
        if best.as_ref().map_or(true, |b| key < *b) {
            best = Some(key);
        }
    }
    best.expect("at least the identity permutation")
}

/// Exhaustive bounded satisfiability: enumerate models of the logic with
/// 1..=max_states states in a fixed canonical order (designated state 0,
/// per-agent legal relations, then valuations) and return the first witness.
pub fn bounded_sat(
    arena: &Arena,
    f: FormulaId,
    spec: &LogicSpec,
    budget: &SearchBudget,
) -> Result<OracleResult, OracleError> {
    budget.validate()?;
    if !arena.is_closed(f) {
        return Err(OracleError::OpenFormula);
    }
    let props: Vec<NameId> = arena.props_of(f).into_iter().collect();
    if props.len() > budget.max_propositions {
        return Err(OracleError::TooManyPropositions {
            found: props.len(),
            allowed: budget.max_propositions,
        });
    }
    for agent in arena.agents_of(f) {
        if !spec.contains_agent(agent) {
            return Err(OracleError::UnknownAgent(arena.name_str(agent).to_string()));
        }
    }
    let agents: Vec<NameId> = spec.agents().collect();
    let mut tried: u64 = 0;
    for n in 1..=budget.max_states {
        let mut per_agent: Vec<RelationSet> = Vec::with_capacity(agents.len());
        for &a in &agents {
            match legal_relations(&spec.conditions(a), n) {
                Some(set) => per_agent.push(set),
                None => {
                    return Ok(OracleResult::BudgetExhausted {
                        states_completed: n - 1,
                        candidates_tried: tried,
                    })
                }
            }
        }
        let val_bits = props.len() * n;
        if val_bits > 40 {
            return Ok(OracleResult::BudgetExhausted {
                states_completed: n - 1,
                candidates_tried: tried,
            });
        }
        let val_count = 1u64 << val_bits;
        let low = (1u64 << n) - 1;
        let perms = if budget.modulo_isomorphism && n <= MAX_ISO_STATES {
            permutations_fixing_zero(n)
        } else {
            Vec::new()
        };
        let mut iso_seen: HashSet<Vec<u64>> = HashSet::new();
        let mut idx = vec![0usize; agents.len()];
        'frames: loop {
            let mut model = KripkeModel::new(n, &agents).expect("desk-scale state count");
            for (ai, &a) in agents.iter().enumerate() {
                for (s, &row) in per_agent[ai][idx[ai]].iter().enumerate() {
                    model.set_row(a, s, row);
                }
            }
            model.set_designated(Some(0)).expect("state 0 exists");
            // A witness with unreachable states restricts to a reachable one
            // of the same logic (the conditions are universal Horn clauses),
            // so only fully reachable candidates enter the canonical order.
            if model.reachable_from(0).len() == n {
                for vmask in 0..val_count {
                    tried += 1;
                    if tried > budget.enumeration_cap {
                        return Ok(OracleResult::BudgetExhausted {
                            states_completed: n - 1,
                            candidates_tried: tried - 1,
                        });
                    }
                    for (pi, &p) in props.iter().enumerate() {
                        model.set_prop(p, StateSet((vmask >> (pi * n)) & low));
                    }
                    if !perms.is_empty() && !iso_seen.insert(canonical_key(&model, &props, &perms))
                    {
                        continue;
                    }
                    let mut env = Environment::new();
                    if eval_set(&model, arena, f, &mut env).contains(0) {
                        let verified = model_check(&model, arena, 0, f)
                            .expect("closed formula at a real state");
                        assert!(
                            verified && check_logic(&model, spec),
                            "oracle witness failed re-verification"
                        );
                        return Ok(OracleResult::Witness(model, 0));
                    }
                }
            }
            let mut pos = agents.len();
            loop {
                if pos == 0 {
                    break 'frames;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < per_agent[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
    Ok(OracleResult::NoModelUpTo(budget.max_states))
}
