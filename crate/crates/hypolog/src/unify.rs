//! Weak (proximity-based) unification, t-norms and the binding store.

use crate::sym::Sym;
use crate::syntax::{Term, VarId};
use std::collections::HashMap;

/// Triangular norms used to compose approximation degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TNorm {
    Min,
    Product,
    Luka,
}

impl TNorm {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            TNorm::Min => a.min(b),
            TNorm::Product => a * b,
            TNorm::Luka => (a + b - 1.0).max(0.0),
        }
    }

    /// Fold a sequence of degrees; the empty sequence composes to 1.
    pub fn compose(self, degrees: impl IntoIterator<Item = f64>) -> f64 {
        degrees.into_iter().fold(1.0, |acc, d| self.apply(acc, d))
    }
}

impl std::str::FromStr for TNorm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "min" | "godel" => Ok(TNorm::Min),
            "product" => Ok(TNorm::Product),
            "luka" | "lukasiewicz" => Ok(TNorm::Luka),
            other => Err(format!("unknown t-norm `{other}` (min, product, luka)")),
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
#[error("{0}")]
pub struct RelationError(pub String);

/// A reflexive, symmetric fuzzy relation on symbols. Degrees are stored
/// once per unordered pair; reflexive entries are implicit. An absent
/// pair has degree 0 and can never unify, whatever the lambda-cut.
#[derive(Debug, Clone, Default)]
pub struct ProximityRelation {
    pairs: HashMap<(Sym, Sym), f64>,
    adjacency: HashMap<Sym, Vec<(Sym, f64)>>,
}

fn canon(a: Sym, b: Sym) -> (Sym, Sym) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl ProximityRelation {
    pub fn identity() -> ProximityRelation {
        ProximityRelation::default()
    }

    pub fn is_identity(&self) -> bool {
        self.pairs.is_empty()
    }

    /// R(a, b). Reflexivity and symmetry are built in.
    pub fn query(&self, a: Sym, b: Sym) -> f64 {
        if a == b {
            1.0
        } else {
            self.pairs.get(&canon(a, b)).copied().unwrap_or(0.0)
        }
    }

    /// Distinct symbols proximate to `s`, sorted for determinism. Does
    /// not include `s` itself.
    pub fn neighbors(&self, s: Sym) -> Vec<(Sym, f64)> {
        let mut v = self.adjacency.get(&s).cloned().unwrap_or_default();
        v.sort_by_key(|&(sym, _)| sym);
        v
    }

    fn insert(&mut self, a: Sym, b: Sym, degree: f64) {
        if a == b || degree <= 0.0 {
            return;
        }
        self.pairs.insert(canon(a, b), degree);
        for (x, y) in [(a, b), (b, a)] {
            let adj = self.adjacency.entry(x).or_default();
            match adj.iter_mut().find(|(s, _)| *s == y) {
                Some(e) => e.1 = degree,
                None => adj.push((y, degree)),
            }
        }
    }
}

/// Build the relation from parsed equations: symmetric closure, then an
/// optional t-norm transitive closure (turning proximity into
/// similarity). Conflicting degrees for one pair are an error.
pub fn build_relation(
    equations: &[(Sym, Sym, f64)],
    transitivity: bool,
    tnorm: TNorm,
) -> Result<ProximityRelation, RelationError> {
    let mut rel = ProximityRelation::default();
    for &(a, b, d) in equations {
        if a == b {
            if d != 1.0 {
                return Err(RelationError(format!(
                    "reflexive proximity {a} ~ {a} must be 1, found {d}"
                )));
            }
            continue;
        }
        let existing = rel.query(a, b);
        if existing > 0.0 && existing != d {
            return Err(RelationError(format!(
                "conflicting degrees for {a} ~ {b}: {existing} and {d}"
            )));
        }
        rel.insert(a, b, d);
    }
    if transitivity {
        // fixpoint of R(a,c) := max(R(a,c), R(a,b) tnorm R(b,c))
        let mut symbols: Vec<Sym> = rel.adjacency.keys().copied().collect();
        symbols.sort();
        loop {
            let mut changed = false;
            for &b in &symbols {
                for &a in &symbols {
                    for &c in &symbols {
                        if a >= c {
                            continue;
                        }
                        let through = tnorm.apply(rel.query(a, b), rel.query(b, c));
                        if through > rel.query(a, c) {
                            rel.insert(a, c, through);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
    Ok(rel)
}

/// The shared binding arena: one slot per run-time variable, with a trail
/// for backtracking.
#[derive(Debug, Default)]
pub struct Bindings {
    slots: Vec<Option<Term>>,
    trail: Vec<VarId>,
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn new_var(&mut self) -> VarId {
        self.slots.push(None);
        (self.slots.len() - 1) as VarId
    }

    pub fn n_vars(&self) -> u32 {
        self.slots.len() as u32
    }

    /// Trail position; pass it to [`Bindings::undo_to`] on backtracking.
    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.slots[v as usize] = None;
        }
    }

    pub fn bind(&mut self, v: VarId, t: Term) {
        debug_assert!(self.slots[v as usize].is_none());
        self.slots[v as usize] = Some(t);
        self.trail.push(v);
    }

    /// Follow variable chains one level: the result is either an unbound
    /// variable or a non-variable term.
    pub fn walk(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        while let Term::Var(v) = cur {
            match &self.slots[v as usize] {
                Some(next) => cur = next.clone(),
                None => break,
            }
        }
        cur
    }

    /// Fully substitute bindings into `t`. Safe on cyclic bindings (no
    /// occurs check by default): a variable met again inside its own
    /// value is left as a variable.
    pub fn resolve(&self, t: &Term) -> Term {
        let mut on_stack = Vec::new();
        self.resolve_rec(t, &mut on_stack)
    }

    fn resolve_rec(&self, t: &Term, on_stack: &mut Vec<VarId>) -> Term {
        match t {
            Term::Var(v) => match &self.slots[*v as usize] {
                Some(val) if !on_stack.contains(v) => {
                    on_stack.push(*v);
                    let r = self.resolve_rec(val, on_stack);
                    on_stack.pop();
                    r
                }
                _ => Term::Var(*v),
            },
            Term::Comp(f, args) => Term::Comp(
                *f,
                args.iter().map(|a| self.resolve_rec(a, on_stack)).collect(),
            ),
            other => other.clone(),
        }
    }

    fn occurs(&self, v: VarId, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => v == w,
            Term::Comp(_, args) => args.iter().any(|a| self.occurs(v, a)),
            _ => false,
        }
    }
}

/// Classical syntactic unification. On failure the caller is expected to
/// undo to its own mark; partial bindings are trailed.
pub fn unify(b: &mut Bindings, t1: &Term, t2: &Term, occurs_check: bool) -> bool {
    let x = b.walk(t1);
    let y = b.walk(t2);
    match (&x, &y) {
        (Term::Var(v), Term::Var(w)) if v == w => true,
        (Term::Var(v), _) => {
            if occurs_check && b.occurs(*v, &y) {
                return false;
            }
            b.bind(*v, y);
            true
        }
        (_, Term::Var(w)) => {
            if occurs_check && b.occurs(*w, &x) {
                return false;
            }
            b.bind(*w, x);
            true
        }
        (Term::Const(a), Term::Const(c)) => a == c,
        (Term::Num(a), Term::Num(c)) => a == c,
        (Term::Ctx(a), Term::Ctx(c)) => a == c,
        (Term::Comp(f, fa), Term::Comp(g, ga)) => {
            f == g && fa.len() == ga.len() && fa.iter().zip(ga).all(|(a, c)| unify(b, a, c, occurs_check))
        }
        _ => false,
    }
}

/// Weak unification: like [`unify`] but symbol clashes are resolved
/// through the proximity relation, accumulating an approximation degree.
/// Returns the composed degree, which is guaranteed `>= lambda`; `None`
/// is failure. Partial bindings are trailed either way.
#[allow(clippy::too_many_arguments)]
pub fn weak_unify(
    b: &mut Bindings,
    t1: &Term,
    t2: &Term,
    rel: &ProximityRelation,
    tnorm: TNorm,
    lambda: f64,
    occurs_check: bool,
) -> Option<f64> {
    let mut degree = 1.0;
    if weak_unify_rec(b, t1, t2, rel, tnorm, lambda, occurs_check, &mut degree) {
        Some(degree)
    } else {
        None
    }
}

#[allow(clippy::too_many_arguments)]
fn weak_unify_rec(
    b: &mut Bindings,
    t1: &Term,
    t2: &Term,
    rel: &ProximityRelation,
    tnorm: TNorm,
    lambda: f64,
    occurs_check: bool,
    degree: &mut f64,
) -> bool {
    let x = b.walk(t1);
    let y = b.walk(t2);
    match (&x, &y) {
        (Term::Var(v), Term::Var(w)) if v == w => true,
        (Term::Var(v), _) => {
            if occurs_check && b.occurs(*v, &y) {
                return false;
            }
            b.bind(*v, y);
            true
        }
        (_, Term::Var(w)) => {
            if occurs_check && b.occurs(*w, &x) {
                return false;
            }
            b.bind(*w, x);
            true
        }
        (Term::Const(a), Term::Const(c)) => step(rel.query(*a, *c), tnorm, lambda, degree),
        (Term::Num(a), Term::Num(c)) => a == c,
        (Term::Ctx(a), Term::Ctx(c)) => a == c,
        (Term::Comp(f, fa), Term::Comp(g, ga)) => {
            fa.len() == ga.len()
                && step(rel.query(*f, *g), tnorm, lambda, degree)
                && fa
                    .iter()
                    .zip(ga)
                    .all(|(a, c)| weak_unify_rec(b, a, c, rel, tnorm, lambda, occurs_check, degree))
        }
        _ => false,
    }
}

fn step(r: f64, tnorm: TNorm, lambda: f64, degree: &mut f64) -> bool {
    if r <= 0.0 {
        return false;
    }
    *degree = tnorm.apply(*degree, r);
    // degrees only shrink under a t-norm, so prune as soon as the
    // composition drops below the cut
    *degree >= lambda
}
