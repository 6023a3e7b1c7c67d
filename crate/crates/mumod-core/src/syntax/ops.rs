//! Structural operations: negation, measures, subformula sets, binding
//! tables, substitution, closure, and the axiom/invariant builders used by
//! the translations.

use super::{AgentSet, Arena, FormulaId, NameId, Node, SyntaxError};
use crate::logic::FrameCondition;
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Number of distinct subterms of `f`.  Because terms are hash-consed this
/// counts shared subterms once, which is the measure the size bounds of the
/// translations are stated against.
pub fn formula_size(arena: &Arena, f: FormulaId) -> usize {
    subformulas(arena, f).len()
}

/// All distinct subterms of `f`, including `f` itself.
pub fn subformulas(arena: &Arena, f: FormulaId) -> BTreeSet<FormulaId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        if !seen.insert(g) {
            continue;
        }
        match arena.node(g) {
            Node::And { lhs, rhs } | Node::Or { lhs, rhs } => {
                stack.push(lhs);
                stack.push(rhs);
            }
            Node::Box { body, .. }
            | Node::Diamond { body, .. }
            | Node::Mu { body, .. }
            | Node::Nu { body, .. } => stack.push(body),
            _ => {}
        }
    }
    seen
}

/// Structural dual of `f`: swaps `tt`/`ff`, literal polarity, `&`/`|`,
/// box/diamond, and `mu`/`nu`.  Variable occurrences are kept as they are;
/// together with the binder swap this is the negation normal form of `!f`
/// for closed `f`, and for open `f` it is the dual in which every free
/// variable is read under the dualized binding discipline.  Involutive.
pub fn negate(arena: &mut Arena, f: FormulaId) -> FormulaId {
    fn go(arena: &mut Arena, f: FormulaId, memo: &mut HashMap<FormulaId, FormulaId>) -> FormulaId {
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let out = match arena.node(f) {
            Node::Top => arena.bottom(),
            Node::Bottom => arena.top(),
            Node::Lit { prop, positive } => arena.lit(prop, !positive),
            Node::Var { name } => arena.var(name),
            Node::And { lhs, rhs } => {
                let l = go(arena, lhs, memo);
                let r = go(arena, rhs, memo);
                arena.or(l, r)
            }
            Node::Or { lhs, rhs } => {
                let l = go(arena, lhs, memo);
                let r = go(arena, rhs, memo);
                arena.and(l, r)
            }
            Node::Box { agent, body } => {
                let b = go(arena, body, memo);
                arena.diamond(agent, b)
            }
            Node::Diamond { agent, body } => {
                let b = go(arena, body, memo);
                arena.boxed(agent, b)
            }
            Node::Mu { var, body } => {
                let b = go(arena, body, memo);
                arena.nu(var, b)
            }
            Node::Nu { var, body } => {
                let b = go(arena, body, memo);
                arena.mu(var, b)
            }
        };
        memo.insert(f, out);
        out
    }
    go(arena, f, &mut HashMap::new())
}

/// Maximum nesting of modalities.  Defined only on recursion-free formulas.
pub fn modal_depth(arena: &Arena, f: FormulaId) -> Result<u32, SyntaxError> {
    if arena.has_recursion(f) {
        return Err(SyntaxError::RecursiveModalDepth);
    }
    fn go(arena: &Arena, f: FormulaId, memo: &mut HashMap<FormulaId, u32>) -> u32 {
        if let Some(&d) = memo.get(&f) {
            return d;
        }
        let d = match arena.node(f) {
            Node::Top | Node::Bottom | Node::Lit { .. } | Node::Var { .. } => 0,
            Node::And { lhs, rhs } | Node::Or { lhs, rhs } => {
                go(arena, lhs, memo).max(go(arena, rhs, memo))
            }
            Node::Box { body, .. } | Node::Diamond { body, .. } => 1 + go(arena, body, memo),
            Node::Mu { body, .. } | Node::Nu { body, .. } => go(arena, body, memo),
        };
        memo.insert(f, d);
        d
    }
    Ok(go(arena, f, &mut HashMap::new()))
}

/// Subterms of `f` together with the dual of each subterm.
pub fn signed_subformulas(arena: &mut Arena, f: FormulaId) -> BTreeSet<FormulaId> {
    let subs = subformulas(arena, f);
    let mut out = subs.clone();
    for s in subs {
        out.insert(negate(arena, s));
    }
    out
}

/// Binder map of a formula with unique binders: variable name to the fixed
/// point formula that binds it, plus the strict order `x < y` meaning the
/// binder of `x` is a proper subterm of the binder of `y`.
#[derive(Clone, Debug)]
pub struct BindingTable {
    fx: BTreeMap<NameId, FormulaId>,
    below: BTreeSet<(NameId, NameId)>,
    free: BTreeSet<NameId>,
}

impl BindingTable {
    /// The binding formula `fx(x)`.
    pub fn fx(&self, x: NameId) -> Option<FormulaId> {
        self.fx.get(&x).copied()
    }

    /// Strict order: the binder of `x` is a proper subterm of the binder of `y`.
    pub fn lt(&self, x: NameId, y: NameId) -> bool {
        self.below.contains(&(x, y))
    }

    pub fn variables(&self) -> impl Iterator<Item = NameId> + '_ {
        self.fx.keys().copied()
    }

    pub fn free_variables(&self) -> &BTreeSet<NameId> {
        &self.free
    }

    pub fn len(&self) -> usize {
        self.fx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fx.is_empty()
    }

    /// True when `f` is a least fixed point variable in this table.
    pub fn is_least(&self, arena: &Arena, x: NameId) -> bool {
        matches!(
            self.fx(x).map(|f| arena.node(f)),
            Some(Node::Mu { .. })
        )
    }
}

/// Build the binding table of `f`, rejecting duplicate binder names.
pub fn binding_table(arena: &Arena, f: FormulaId) -> Result<BindingTable, SyntaxError> {
    let mut fx = BTreeMap::new();
    for sub in subformulas(arena, f) {
        if let Node::Mu { var, body: _ } | Node::Nu { var, body: _ } = arena.node(sub) {
            if let Some(prev) = fx.insert(var, sub) {
                if prev != sub {
                    return Err(SyntaxError::DuplicateBinder(
                        arena.name_str(var).to_string(),
                    ));
                }
            }
        }
    }
    let mut below = BTreeSet::new();
    for (&x, &bx) in &fx {
        for (&y, &by) in &fx {
            if bx != by && subformulas(arena, by).contains(&bx) {
                below.insert((x, y));
            }
        }
    }
    let free = arena.free_vars(f).iter().copied().collect();
    Ok(BindingTable { fx, below, free })
}

/// Substitute `g` for free occurrences of the recursion variable `x` in `f`.
pub fn substitute(
    arena: &mut Arena,
    f: FormulaId,
    x: NameId,
    g: FormulaId,
) -> Result<FormulaId, SyntaxError> {
    let g_free: BTreeSet<NameId> = arena.free_vars(g).iter().copied().collect();
    fn go(
        arena: &mut Arena,
        f: FormulaId,
        x: NameId,
        g: FormulaId,
        g_free: &BTreeSet<NameId>,
        memo: &mut HashMap<FormulaId, FormulaId>,
    ) -> Result<FormulaId, SyntaxError> {
        if !arena.free_vars(f).contains(&x) {
            return Ok(f);
        }
        if let Some(&r) = memo.get(&f) {
            return Ok(r);
        }
        let out = match arena.node(f) {
            Node::Var { name } if name == x => g,
            Node::Var { .. } | Node::Top | Node::Bottom | Node::Lit { .. } => f,
            Node::And { lhs, rhs } => {
                let l = go(arena, lhs, x, g, g_free, memo)?;
                let r = go(arena, rhs, x, g, g_free, memo)?;
                arena.and(l, r)
            }
            Node::Or { lhs, rhs } => {
                let l = go(arena, lhs, x, g, g_free, memo)?;
                let r = go(arena, rhs, x, g, g_free, memo)?;
                arena.or(l, r)
            }
            Node::Box { agent, body } => {
                let b = go(arena, body, x, g, g_free, memo)?;
                arena.boxed(agent, b)
            }
            Node::Diamond { agent, body } => {
                let b = go(arena, body, x, g, g_free, memo)?;
                arena.diamond(agent, b)
            }
            Node::Mu { var, body } => {
                if g_free.contains(&var) {
                    return Err(SyntaxError::CaptureDetected);
                }
                let b = go(arena, body, x, g, g_free, memo)?;
                arena.mu(var, b)
            }
            Node::Nu { var, body } => {
                if g_free.contains(&var) {
                    return Err(SyntaxError::CaptureDetected);
                }
                let b = go(arena, body, x, g, g_free, memo)?;
                arena.nu(var, b)
            }
        };
        memo.insert(f, out);
        Ok(out)
    }
    go(arena, f, x, g, &g_free, &mut HashMap::new())
}

/// Substitute `g` for the proposition `p` in `f`: positive occurrences
/// become `g`, negated occurrences become the dual of `g`.
pub fn substitute_prop(arena: &mut Arena, f: FormulaId, p: NameId, g: FormulaId) -> FormulaId {
    let neg_g = negate(arena, g);
    fn go(
        arena: &mut Arena,
        f: FormulaId,
        p: NameId,
        g: FormulaId,
        neg_g: FormulaId,
        memo: &mut HashMap<FormulaId, FormulaId>,
    ) -> FormulaId {
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let out = match arena.node(f) {
            Node::Lit { prop, positive } if prop == p => {
                if positive {
                    g
                } else {
                    neg_g
                }
            }
            Node::Top | Node::Bottom | Node::Lit { .. } | Node::Var { .. } => f,
            Node::And { lhs, rhs } => {
                let l = go(arena, lhs, p, g, neg_g, memo);
                let r = go(arena, rhs, p, g, neg_g, memo);
                arena.and(l, r)
            }
            Node::Or { lhs, rhs } => {
                let l = go(arena, lhs, p, g, neg_g, memo);
                let r = go(arena, rhs, p, g, neg_g, memo);
                arena.or(l, r)
            }
            Node::Box { agent, body } => {
                let b = go(arena, body, p, g, neg_g, memo);
                arena.boxed(agent, b)
            }
            Node::Diamond { agent, body } => {
                let b = go(arena, body, p, g, neg_g, memo);
                arena.diamond(agent, b)
            }
            Node::Mu { var, body } => {
                let b = go(arena, body, p, g, neg_g, memo);
                arena.mu(var, b)
            }
            Node::Nu { var, body } => {
                let b = go(arena, body, p, g, neg_g, memo);
                arena.nu(var, b)
            }
        };
        memo.insert(f, out);
        out
    }
    go(arena, f, p, g, neg_g, &mut HashMap::new())
}

/// Close `f` by repeatedly substituting the binding formula of a minimal
/// free variable (minimal in the binding-table order).  Terminates within
/// one substitution per table entry; a free variable missing from `bt` is
/// reported instead of looping.
pub fn closure_cl(
    arena: &mut Arena,
    f: FormulaId,
    bt: &BindingTable,
) -> Result<FormulaId, SyntaxError> {
    let mut cur = f;
    for _ in 0..=bt.len() {
        let free: Vec<NameId> = arena.free_vars(cur).to_vec();
        if free.is_empty() {
            return Ok(cur);
        }
        // Minimal free variable: no other free variable lies strictly below.
        let mut minimal = None;
        for &x in &free {
            if bt.fx(x).is_none() {
                return Err(SyntaxError::IncompleteBindingTable(
                    arena.name_str(x).to_string(),
                ));
            }
            if free.iter().all(|&y| y == x || !bt.lt(y, x)) {
                minimal = Some(x);
                break;
            }
        }
        let x = minimal.expect("a finite strict order has a minimal element");
        let fx = bt.fx(x).unwrap();
        cur = substitute(arena, cur, x, fx)?;
    }
    // Each step removes the chosen minimal variable and can only introduce
    // variables bound strictly further out, so running past the table length
    // means the table did not come from one formula.
    Err(SyntaxError::IncompleteBindingTable("<cycle>".to_string()))
}

/// The frame axiom schema for `cond` and `agent`, instantiated over the
/// placeholder proposition `p`, with implications already expanded to NNF.
pub fn build_axiom(
    arena: &mut Arena,
    cond: FrameCondition,
    agent: NameId,
    p: NameId,
) -> FormulaId {
    let pos = arena.lit(p, true);
    let neg = arena.lit(p, false);
    match cond {
        // <a>tt
        FrameCondition::Serial => {
            let t = arena.top();
            arena.diamond(agent, t)
        }
        // [a]p -> p
        FrameCondition::Reflexive => {
            let l = arena.diamond(agent, neg);
            arena.or(l, pos)
        }
        // <a>[a]p -> p
        FrameCondition::Symmetric => {
            let dn = arena.diamond(agent, neg);
            let l = arena.boxed(agent, dn);
            arena.or(l, pos)
        }
        // [a]p -> [a][a]p
        FrameCondition::Transitive => {
            let l = arena.diamond(agent, neg);
            let bp = arena.boxed(agent, pos);
            let r = arena.boxed(agent, bp);
            arena.or(l, r)
        }
        // <a>[a]p -> [a]p
        FrameCondition::Euclidean => {
            let dn = arena.diamond(agent, neg);
            let l = arena.boxed(agent, dn);
            let r = arena.boxed(agent, pos);
            arena.or(l, r)
        }
    }
}

/// Bounded invariant: conjunction of `[A]^i f` for `i` from 0 to `d`, where
/// `[A]` abbreviates the conjunction of `[a]` over all agents.
pub fn build_inv_d(arena: &mut Arena, f: FormulaId, d: u32, agents: &AgentSet) -> FormulaId {
    let mut layers = Vec::with_capacity(d as usize + 1);
    let mut layer = f;
    layers.push(layer);
    for _ in 0..d {
        let boxes: Vec<FormulaId> = agents.iter().map(|a| arena.boxed(a, layer)).collect();
        layer = arena.conj(&boxes);
        layers.push(layer);
    }
    arena.conj(&layers)
}

/// Invariant `nu X.(f & [A]X)` with a fresh variable.
pub fn build_inv(arena: &mut Arena, f: FormulaId, agents: &AgentSet) -> FormulaId {
    let x = arena.fresh_var();
    let vx = arena.var(x);
    let boxes: Vec<FormulaId> = agents.iter().map(|a| arena.boxed(a, vx)).collect();
    let all = arena.conj(&boxes);
    let body = arena.and(f, all);
    arena.nu(x, body)
}

/// Eventuality `mu X.(f | <A>X)` with a fresh variable.
pub fn build_eve(arena: &mut Arena, f: FormulaId, agents: &AgentSet) -> FormulaId {
    let x = arena.fresh_var();
    let vx = arena.var(x);
    let diamonds: Vec<FormulaId> = agents.iter().map(|a| arena.diamond(a, vx)).collect();
    let any = arena.disj(&diamonds);
    let body = arena.or(f, any);
    arena.mu(x, body)
}

/// Rename binders apart so that no two distinct fixed points share a
/// variable name.  Shared subterms keep their sharing.
pub fn uniquify_binders(arena: &mut Arena, f: FormulaId) -> FormulaId {
    type Env = Vec<(NameId, NameId)>;
    struct St {
        claimed: BTreeSet<NameId>,
        used: BTreeSet<NameId>,
        memo: HashMap<(FormulaId, Env), FormulaId>,
    }
    fn relevant(arena: &Arena, f: FormulaId, env: &Env) -> Env {
        let free = arena.free_vars(f);
        env.iter()
            .filter(|(from, _)| free.contains(from))
            .copied()
            .collect()
    }
    fn fresh_variant(arena: &mut Arena, base: NameId, st: &St) -> NameId {
        let base_str = arena.name_str(base).to_string();
        let mut k = 1u32;
        loop {
            let cand = format!("{base_str}{k}");
            let id = arena.name(&cand);
            if !st.claimed.contains(&id) && !st.used.contains(&id) {
                return id;
            }
            k += 1;
        }
    }
    fn go(arena: &mut Arena, f: FormulaId, env: &Env, st: &mut St) -> FormulaId {
        let key = (f, relevant(arena, f, env));
        if let Some(&r) = st.memo.get(&key) {
            return r;
        }
        let out = match arena.node(f) {
            Node::Top | Node::Bottom | Node::Lit { .. } => f,
            Node::Var { name } => {
                let target = env
                    .iter()
                    .rev()
                    .find(|(from, _)| *from == name)
                    .map(|(_, to)| *to)
                    .unwrap_or(name);
                arena.var(target)
            }
            Node::And { lhs, rhs } => {
                let l = go(arena, lhs, env, st);
                let r = go(arena, rhs, env, st);
                arena.and(l, r)
            }
            Node::Or { lhs, rhs } => {
                let l = go(arena, lhs, env, st);
                let r = go(arena, rhs, env, st);
                arena.or(l, r)
            }
            Node::Box { agent, body } => {
                let b = go(arena, body, env, st);
                arena.boxed(agent, b)
            }
            Node::Diamond { agent, body } => {
                let b = go(arena, body, env, st);
                arena.diamond(agent, b)
            }
            Node::Mu { var, body } | Node::Nu { var, body } => {
                let chosen = if st.claimed.contains(&var) {
                    fresh_variant(arena, var, st)
                } else {
                    var
                };
                st.claimed.insert(chosen);
                let mut inner = env.clone();
                inner.push((var, chosen));
                let b = go(arena, body, &inner, st);
                if matches!(arena.node(f), Node::Mu { .. }) {
                    arena.mu(chosen, b)
                } else {
                    arena.nu(chosen, b)
                }
            }
        };
        st.memo.insert(key, out);
        out
    }
    let mut used = BTreeSet::new();
    for sub in subformulas(arena, f) {
        match arena.node(sub) {
            Node::Var { name } => {
                used.insert(name);
            }
            Node::Mu { var, .. } | Node::Nu { var, .. } => {
                used.insert(var);
            }
            _ => {}
        }
    }
    let mut st = St {
        claimed: BTreeSet::new(),
        used,
        memo: HashMap::new(),
    };
    go(arena, f, &Vec::new(), &mut st)
}
