//! Corpus builders: exhaustive enumeration of small formulas and seeded
//! random generation for translation cross-checks.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{formula_size, subformulas, Arena, FormulaId, NameId, Node};

/// Canonical binder names, assigned in preorder; one per nesting slot.
const BINDER_POOL: [&str; 8] = ["X", "Y", "Z", "W", "V", "U", "S", "R"];

/// Which formulas a corpus may contain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFilter {
    Any,
    /// No least fixed points (greatest ones allowed).
    MuFree,
    /// No fixed points at all.
    RecursionFree,
}

impl CorpusFilter {
    fn allows(self, arena: &Arena, f: FormulaId) -> bool {
        match self {
            CorpusFilter::Any => true,
            CorpusFilter::MuFree => !arena.has_mu(f),
            CorpusFilter::RecursionFree => !arena.has_recursion(f),
        }
    }
}

fn union_size(a: &BTreeSet<FormulaId>, b: &BTreeSet<FormulaId>) -> usize {
    a.len() + b.iter().filter(|x| !a.contains(x)).count()
}

/// Every closed formula whose subformula count is at most `size_cap`, over
/// the given agents and propositions, each binder pattern listed once with
/// canonical variable names (preorder `X`, `Y`, `Z`, ...).
///
/// Formulas are built bottom-up by exact size.  A subterm's new binders
/// occupy a contiguous block of the preorder name sequence, so every layer
/// is indexed by the block's starting offset: a binder at offset `j` is
/// named `pool[j]` and its body lives at offset `j + 1`, while `f & g`
/// places `g` at `j` plus the number of binders inside `f`.
pub fn enumerate_formulas(
    arena: &mut Arena,
    agents: &[NameId],
    props: &[NameId],
    size_cap: usize,
) -> Vec<FormulaId> {
    assert!(
        size_cap >= 1 && size_cap <= BINDER_POOL.len(),
        "size cap must fit the binder name pool"
    );
    let pool: Vec<NameId> = BINDER_POOL.iter().map(|s| arena.name(s)).collect();
    // sets[k-1][j]: formulas of size k whose first new binder is pool[j].
    let mut sets: Vec<Vec<Vec<FormulaId>>> = vec![vec![Vec::new(); size_cap]; size_cap];
    let mut subs: HashMap<FormulaId, BTreeSet<FormulaId>> = HashMap::new();
    let mut binders: HashMap<FormulaId, usize> = HashMap::new();
    for j in 0..size_cap {
        let mut layer = vec![arena.top(), arena.bottom()];
        for &p in props {
            layer.push(arena.lit(p, true));
            layer.push(arena.lit(p, false));
        }
        for &v in pool.iter().take(j) {
            layer.push(arena.var(v));
        }
        record(arena, &layer, 1, &mut subs, &mut binders);
        sets[0][j] = layer;
    }
    for k in 2..=size_cap {
        for j in 0..size_cap {
            let mut layer: Vec<FormulaId> = Vec::new();
            for gi in 0..sets[k - 2][j].len() {
                let g = sets[k - 2][j][gi];
                for &a in agents {
                    layer.push(arena.boxed(a, g));
                    layer.push(arena.diamond(a, g));
                }
            }
            if j + 1 < size_cap {
                for gi in 0..sets[k - 2][j + 1].len() {
                    let g = sets[k - 2][j + 1][gi];
                    layer.push(arena.mu(pool[j], g));
                    layer.push(arena.nu(pool[j], g));
                }
            }
            for sf in 1..k {
                for fi in 0..sets[sf - 1][j].len() {
                    let f = sets[sf - 1][j][fi];
                    let goff = j + binders[&f];
                    if goff >= size_cap {
                        continue;
                    }
                    for sg in 1..k {
                        if sf + sg < k - 1 {
                            continue;
                        }
                        for gi in 0..sets[sg - 1][goff].len() {
                            let g = sets[sg - 1][goff][gi];
                            if union_size(&subs[&f], &subs[&g]) == k - 1 {
                                layer.push(arena.and(f, g));
                                layer.push(arena.or(f, g));
                            }
                        }
                    }
                }
            }
            record(arena, &layer, k, &mut subs, &mut binders);
            sets[k - 1][j] = layer;
        }
    }
    let mut out = Vec::new();
    for k in 1..=size_cap {
        for &f in &sets[k - 1][0] {
            if arena.is_closed(f) {
                out.push(f);
            }
        }
    }
    out
}

fn record(
    arena: &Arena,
    layer: &[FormulaId],
    size: usize,
    subs: &mut HashMap<FormulaId, BTreeSet<FormulaId>>,
    binders: &mut HashMap<FormulaId, usize>,
) {
    for &f in layer {
        let s = subformulas(arena, f);
        debug_assert_eq!(s.len(), size, "layer member has the wrong size");
        let b = s
            .iter()
            .filter(|&&x| matches!(arena.node(x), Node::Mu { .. } | Node::Nu { .. }))
            .count();
        binders.insert(f, b);
        subs.insert(f, s);
    }
}

/// The exhaustive tier of a corpus stops here; larger formulas are sampled.
const EXHAUSTIVE_TIER: usize = 3;

/// Deterministic corpus: every closed formula up to size three (capped at
/// `size_cap`), then seeded random formulas up to `size_cap` until `count`
/// distinct entries exist or the space runs dry.
pub fn generate_corpus(
    arena: &mut Arena,
    agents: &[NameId],
    props: &[NameId],
    size_cap: usize,
    seed: u64,
    count: usize,
    filter: CorpusFilter,
) -> Vec<FormulaId> {
    let tier = size_cap.min(EXHAUSTIVE_TIER);
    let mut out: Vec<FormulaId> = enumerate_formulas(arena, agents, props, tier)
        .into_iter()
        .filter(|&f| filter.allows(arena, f))
        .collect();
    let mut seen: HashSet<FormulaId> = out.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0usize;
    let attempt_cap = count.saturating_mul(200).max(1000);
    while out.len() < count && attempts < attempt_cap {
        attempts += 1;
        let f = random_formula(arena, &mut rng, agents, props, size_cap, filter);
        debug_assert!(arena.is_closed(f));
        if formula_size(arena, f) <= size_cap && filter.allows(arena, f) && seen.insert(f) {
            out.push(f);
        }
    }
    out
}

fn random_formula(
    arena: &mut Arena,
    rng: &mut ChaCha8Rng,
    agents: &[NameId],
    props: &[NameId],
    budget: usize,
    filter: CorpusFilter,
) -> FormulaId {
    let mut counter = 0u32;
    let mut ctx: Vec<NameId> = Vec::new();
    go(arena, rng, agents, props, budget, filter, &mut ctx, &mut counter)
}

fn atom(
    arena: &mut Arena,
    rng: &mut ChaCha8Rng,
    props: &[NameId],
    ctx: &[NameId],
) -> FormulaId {
    let n = 2 + 2 * props.len() + ctx.len();
    match rng.random_range(0..n) {
        0 => arena.top(),
        1 => arena.bottom(),
        i if i < 2 + 2 * props.len() => {
            let p = props[(i - 2) / 2];
            arena.lit(p, i % 2 == 0)
        }
        i => arena.var(ctx[i - 2 - 2 * props.len()]),
    }
}

fn go(
    arena: &mut Arena,
    rng: &mut ChaCha8Rng,
    agents: &[NameId],
    props: &[NameId],
    budget: usize,
    filter: CorpusFilter,
    ctx: &mut Vec<NameId>,
    counter: &mut u32,
) -> FormulaId {
    #[derive(Clone, Copy)]
    enum C {
        Atom,
        Modal,
        Mu,
        Nu,
        Binary,
    }
    let mut choices = vec![C::Atom];
    if budget >= 2 && !agents.is_empty() {
        choices.extend([C::Modal, C::Modal]);
    }
    if budget >= 2 && filter == CorpusFilter::Any {
        choices.extend([C::Mu, C::Nu]);
    }
    if budget >= 2 && filter == CorpusFilter::MuFree {
        choices.push(C::Nu);
    }
    if budget >= 3 {
        choices.extend([C::Binary, C::Binary, C::Binary]);
    }
    match choices[rng.random_range(0..choices.len())] {
        C::Atom => atom(arena, rng, props, ctx),
        C::Modal => {
            let a = agents[rng.random_range(0..agents.len())];
            let body = go(arena, rng, agents, props, budget - 1, filter, ctx, counter);
            if rng.random_range(0..2) == 0 {
                arena.boxed(a, body)
            } else {
                arena.diamond(a, body)
            }
        }
        kind @ (C::Mu | C::Nu) => {
            let v = arena.name(&format!("X{counter}"));
            *counter += 1;
            ctx.push(v);
            let body = go(arena, rng, agents, props, budget - 1, filter, ctx, counter);
            ctx.pop();
            if matches!(kind, C::Mu) {
                arena.mu(v, body)
            } else {
                arena.nu(v, body)
            }
        }
        C::Binary => {
            let l = rng.random_range(1..budget - 1);
            let lhs = go(arena, rng, agents, props, l, filter, ctx, counter);
            let rhs = go(arena, rng, agents, props, budget - 1 - l, filter, ctx, counter);
            if rng.random_range(0..2) == 0 {
                arena.and(lhs, rhs)
            } else {
                arena.or(lhs, rhs)
            }
        }
    }
}
