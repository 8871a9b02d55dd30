//! Reference interpreter for hypothetical (weak) SLD resolution.
//!
//! Executes the transition system directly over states of goal, program,
//! bindings and approximation degree. The static program never changes;
//! hypotheses assumed by `R => G` are pushed on a persistent store that is
//! only visible while proving `G`. Two store layouts are provided: a plain
//! list (strategy A) and a balanced tree keyed by predicate and arity
//! (strategy B). Both enumerate candidate clauses in the same order, so
//! they produce identical answer sequences.

use crate::answer::{Answer, SolveStats};
use crate::builtins::call_builtin;
use crate::sym::Sym;
use crate::syntax::{
    goal_to_string, Atom, Goal, Program, Query, Rule, Term, VarId,
};
use crate::unify::{Bindings, ProximityRelation, TNorm};
use crate::{EngineError, Flow, SolveConfig};
use std::collections::HashMap;
use std::ops::ControlFlow;
use std::sync::Arc;

/// Hypothesis-store layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Ordered list scanned linearly.
    ListA,
    /// Balanced ordered tree keyed by predicate/arity.
    TreeB,
}

/// A standardized clause: variables are dense 0..n_vars.
#[derive(Debug, Clone)]
struct MetaClause {
    rule: Rule,
    n_vars: u32,
}

/// One assumed hypothesis. `seq` is the global assumption order, used to
/// enumerate hypotheses identically under both store layouts.
#[derive(Debug)]
struct Hyp {
    clause: Arc<MetaClause>,
    seq: u64,
}

// ---------------------------------------------------------------------
// stores

type ListStore = Option<Arc<ListNode>>;

struct ListNode {
    hyp: Arc<Hyp>,
    next: ListStore,
}

#[derive(Clone, Default)]
struct TreeStore(Option<Arc<TreeNode>>);

struct TreeNode {
    key: (Sym, u16),
    val: Arc<Vec<Arc<Hyp>>>,
    left: TreeStore,
    right: TreeStore,
    height: u8,
}

impl TreeStore {
    fn height(&self) -> u8 {
        self.0.as_ref().map_or(0, |n| n.height)
    }

    fn make(key: (Sym, u16), val: Arc<Vec<Arc<Hyp>>>, left: TreeStore, right: TreeStore) -> TreeStore {
        let height = 1 + left.height().max(right.height());
        TreeStore(Some(Arc::new(TreeNode { key, val, left, right, height })))
    }

    fn get(&self, key: (Sym, u16)) -> Option<Arc<Vec<Arc<Hyp>>>> {
        let mut cur = self;
        while let Some(n) = &cur.0 {
            match key.cmp(&n.key) {
                std::cmp::Ordering::Equal => return Some(n.val.clone()),
                std::cmp::Ordering::Less => cur = &n.left,
                std::cmp::Ordering::Greater => cur = &n.right,
            }
        }
        None
    }

    fn insert(&self, key: (Sym, u16), hyp: Arc<Hyp>) -> TreeStore {
        match &self.0 {
            None => TreeStore::make(key, Arc::new(vec![hyp]), TreeStore(None), TreeStore(None)),
            Some(n) => match key.cmp(&n.key) {
                std::cmp::Ordering::Equal => {
                    let mut v = (*n.val).clone();
                    v.push(hyp);
                    TreeStore::make(key, Arc::new(v), n.left.clone(), n.right.clone())
                }
                std::cmp::Ordering::Less => {
                    TreeStore::rebalance(n.key, n.val.clone(), n.left.insert(key, hyp), n.right.clone())
                }
                std::cmp::Ordering::Greater => {
                    TreeStore::rebalance(n.key, n.val.clone(), n.left.clone(), n.right.insert(key, hyp))
                }
            },
        }
    }

    fn rebalance(key: (Sym, u16), val: Arc<Vec<Arc<Hyp>>>, left: TreeStore, right: TreeStore) -> TreeStore {
        let bf = left.height() as i16 - right.height() as i16;
        if bf > 1 {
            let l = left.0.as_ref().unwrap();
            if l.left.height() >= l.right.height() {
                // right rotation
                let new_right = TreeStore::make(key, val, l.right.clone(), right);
                TreeStore::make(l.key, l.val.clone(), l.left.clone(), new_right)
            } else {
                // left-right rotation
                let lr = l.right.0.as_ref().unwrap();
                let new_left = TreeStore::make(l.key, l.val.clone(), l.left.clone(), lr.left.clone());
                let new_right = TreeStore::make(key, val, lr.right.clone(), right);
                TreeStore::make(lr.key, lr.val.clone(), new_left, new_right)
            }
        } else if bf < -1 {
            let r = right.0.as_ref().unwrap();
            if r.right.height() >= r.left.height() {
                // left rotation
                let new_left = TreeStore::make(key, val, left, r.left.clone());
                TreeStore::make(r.key, r.val.clone(), new_left, r.right.clone())
            } else {
                // right-left rotation
                let rl = r.left.0.as_ref().unwrap();
                let new_left = TreeStore::make(key, val, left, rl.left.clone());
                let new_right = TreeStore::make(r.key, r.val.clone(), rl.right.clone(), r.right.clone());
                TreeStore::make(rl.key, rl.val.clone(), new_left, new_right)
            }
        } else {
            TreeStore::make(key, val, left, right)
        }
    }
}

#[derive(Clone)]
enum Store {
    List(ListStore),
    Tree(TreeStore),
}

impl Store {
    fn empty(strategy: Strategy) -> Store {
        match strategy {
            Strategy::ListA => Store::List(None),
            Strategy::TreeB => Store::Tree(TreeStore(None)),
        }
    }

    fn assume(&self, hyp: Arc<Hyp>) -> Store {
        match self {
            Store::List(l) => Store::List(Some(Arc::new(ListNode { hyp, next: l.clone() }))),
            Store::Tree(t) => {
                let key = hyp.clause.rule.head.key();
                Store::Tree(t.insert(key, hyp))
            }
        }
    }

    /// Hypotheses whose head may weakly match a goal with predicate
    /// `pred` and arity `arity`, in assumption order.
    fn candidates(&self, pred: Sym, arity: u16, rel: &ProximityRelation) -> Vec<Arc<Hyp>> {
        match self {
            Store::List(l) => {
                let mut out = Vec::new();
                let mut cur = l;
                while let Some(n) = cur {
                    let h = &n.hyp.clause.rule.head;
                    if h.arity() == arity && rel.query(pred, h.pred) > 0.0 {
                        out.push(n.hyp.clone());
                    }
                    cur = &n.next;
                }
                out.reverse(); // list is newest first
                out
            }
            Store::Tree(t) => {
                let mut out = Vec::new();
                if let Some(v) = t.get((pred, arity)) {
                    out.extend(v.iter().cloned());
                }
                for (p, _) in rel.neighbors(pred) {
                    if let Some(v) = t.get((p, arity)) {
                        out.extend(v.iter().cloned());
                    }
                }
                out.sort_by_key(|h| h.seq);
                out
            }
        }
    }
}

// ---------------------------------------------------------------------
// tracing

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceLabel {
    Rule1,
    Rule2,
    Builtin,
    Empty,
}

impl std::fmt::Display for TraceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TraceLabel::Rule1 => "rule 1",
            TraceLabel::Rule2 => "rule 2",
            TraceLabel::Builtin => "builtin",
            TraceLabel::Empty => "empty",
        };
        f.write_str(s)
    }
}

/// One transition of the interpreter, with the state it produced.
#[derive(Debug, Clone)]
pub struct TraceEvent {
    pub label: TraceLabel,
    /// Implication nesting depth (0 for the outer derivation).
    pub depth: u32,
    /// The reached state, rendered as a goal/degree tuple.
    pub state: String,
}

impl std::fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for _ in 0..self.depth {
            write!(f, "  ")?;
        }
        write!(f, "{}: {}", self.label, self.state)
    }
}

// ---------------------------------------------------------------------
// the interpreter

type Cont = Option<Arc<ContNode>>;

struct ContNode {
    goal: Arc<Goal>,
    store: Store,
    next: Cont,
}

fn cons(goal: Arc<Goal>, store: Store, next: Cont) -> Cont {
    Some(Arc::new(ContNode { goal, store, next }))
}

struct Ctx<'a> {
    b: Bindings,
    rel: &'a ProximityRelation,
    lambda: f64,
    tnorm: TNorm,
    occurs_check: bool,
    depth_budget: Option<u64>,
    step_limit: Option<u64>,
    statics: Vec<Arc<MetaClause>>,
    seq: u64,
    stats: SolveStats,
    steps: u64,
    trace: Option<Vec<TraceEvent>>,
    impl_depth: u32,
}

/// Continuation for a finished (sub)derivation: bindings live in the ctx,
/// the arguments are the reached degree and branch depth.
type K<'k> = &'k mut dyn FnMut(&mut Ctx, f64, u64) -> Result<Flow, EngineError>;

impl Ctx<'_> {
    fn record(&mut self, label: TraceLabel, goal: Option<&Goal>, cont: &Cont, alpha: f64) {
        if self.trace.is_none() {
            return;
        }
        let state = self.render_state(goal, cont, alpha);
        let depth = self.impl_depth;
        self.trace.as_mut().unwrap().push(TraceEvent { label, depth, state });
    }

    fn render_state(&self, goal: Option<&Goal>, cont: &Cont, alpha: f64) -> String {
        let mut parts = Vec::new();
        if let Some(g) = goal {
            let g = self.resolve_goal(g);
            parts.push(goal_to_string(&g, &[]));
        }
        let mut cur = cont;
        while let Some(n) = cur {
            let g = self.resolve_goal(&n.goal);
            parts.push(goal_to_string(&g, &[]));
            cur = &n.next;
        }
        let goals = if parts.is_empty() { "□".to_string() } else { parts.join(", ") };
        format!("⟨{goals}, {alpha}⟩")
    }

    fn resolve_goal(&self, g: &Goal) -> Goal {
        match g {
            Goal::True => Goal::True,
            Goal::Atom(a) => Goal::Atom(self.resolve_atom(a)),
            Goal::Builtin(a) => Goal::Builtin(self.resolve_atom(a)),
            Goal::Conj(l, r) => Goal::conj(self.resolve_goal(l), self.resolve_goal(r)),
            Goal::Disj(l, r) => Goal::disj(self.resolve_goal(l), self.resolve_goal(r)),
            Goal::Implication(h, g) => Goal::implication(
                Rule {
                    head: self.resolve_atom(&h.head),
                    body: self.resolve_goal(&h.body),
                    grade: h.grade,
                },
                self.resolve_goal(g),
            ),
        }
    }

    fn resolve_atom(&self, a: &Atom) -> Atom {
        Atom {
            pred: a.pred,
            args: a.args.iter().map(|t| self.b.resolve(t)).collect(),
        }
    }

    /// Rename a standardized clause apart with fresh arena variables.
    fn instantiate(&mut self, c: &MetaClause) -> (Atom, Goal) {
        let base = self.b.n_vars();
        let map: Vec<VarId> = (0..c.n_vars).map(|_| self.b.new_var()).collect();
        debug_assert!(map.iter().all(|&v| v >= base));
        (instantiate_atom(&c.rule.head, &map), instantiate_goal(&c.rule.body, &map))
    }

    /// Snapshot a hypothesis under the current bindings. Variables still
    /// free at assumption time become clause-local: each later use of the
    /// hypothesis renames them fresh.
    fn capture(&mut self, hyp: &Rule) -> MetaClause {
        let head = self.resolve_atom(&hyp.head);
        let body = self.resolve_goal(&hyp.body);
        let mut map: HashMap<VarId, VarId> = HashMap::new();
        let head = Atom {
            pred: head.pred,
            args: head.args.iter().map(|t| renumber_term(t, &mut map)).collect(),
        };
        let body = renumber_goal(&body, &mut map);
        MetaClause {
            rule: Rule { head, body, grade: hyp.grade },
            n_vars: map.len() as u32,
        }
    }

    fn over_step_limit(&mut self) -> bool {
        self.steps += 1;
        match self.step_limit {
            Some(l) if self.steps > l => {
                self.stats.step_limited = true;
                true
            }
            _ => false,
        }
    }

    fn over_depth_budget(&mut self, depth: u64) -> bool {
        match self.depth_budget {
            Some(d) if depth >= d => {
                self.stats.depth_pruned = true;
                true
            }
            _ => false,
        }
    }
}

pub(crate) fn instantiate_term(t: &Term, map: &[VarId]) -> Term {
    match t {
        Term::Var(v) => Term::Var(map[*v as usize]),
        Term::Comp(f, args) => Term::Comp(*f, args.iter().map(|a| instantiate_term(a, map)).collect()),
        other => other.clone(),
    }
}

pub(crate) fn instantiate_atom(a: &Atom, map: &[VarId]) -> Atom {
    Atom {
        pred: a.pred,
        args: a.args.iter().map(|t| instantiate_term(t, map)).collect(),
    }
}

pub(crate) fn instantiate_goal(g: &Goal, map: &[VarId]) -> Goal {
    match g {
        Goal::True => Goal::True,
        Goal::Atom(a) => Goal::Atom(instantiate_atom(a, map)),
        Goal::Builtin(a) => Goal::Builtin(instantiate_atom(a, map)),
        Goal::Conj(l, r) => Goal::conj(instantiate_goal(l, map), instantiate_goal(r, map)),
        Goal::Disj(l, r) => Goal::disj(instantiate_goal(l, map), instantiate_goal(r, map)),
        Goal::Implication(h, g) => Goal::implication(
            Rule {
                head: instantiate_atom(&h.head, map),
                body: instantiate_goal(&h.body, map),
                grade: h.grade,
            },
            instantiate_goal(g, map),
        ),
    }
}

pub(crate) fn renumber_term(t: &Term, map: &mut HashMap<VarId, VarId>) -> Term {
    match t {
        Term::Var(v) => {
            let next = map.len() as VarId;
            Term::Var(*map.entry(*v).or_insert(next))
        }
        Term::Comp(f, args) => Term::Comp(*f, args.iter().map(|a| renumber_term(a, map)).collect()),
        other => other.clone(),
    }
}

pub(crate) fn renumber_goal(g: &Goal, map: &mut HashMap<VarId, VarId>) -> Goal {
    match g {
        Goal::True => Goal::True,
        Goal::Atom(a) => Goal::Atom(renumber_atom(a, map)),
        Goal::Builtin(a) => Goal::Builtin(renumber_atom(a, map)),
        Goal::Conj(l, r) => Goal::conj(renumber_goal(l, map), renumber_goal(r, map)),
        Goal::Disj(l, r) => Goal::disj(renumber_goal(l, map), renumber_goal(r, map)),
        Goal::Implication(h, g) => Goal::implication(
            Rule {
                head: renumber_atom(&h.head, map),
                body: renumber_goal(&h.body, map),
                grade: h.grade,
            },
            renumber_goal(g, map),
        ),
    }
}

pub(crate) fn renumber_atom(a: &Atom, map: &mut HashMap<VarId, VarId>) -> Atom {
    Atom {
        pred: a.pred,
        args: a.args.iter().map(|t| renumber_term(t, map)).collect(),
    }
}

fn run(
    ctx: &mut Ctx,
    goal: &Goal,
    store: &Store,
    cont: &Cont,
    alpha: f64,
    depth: u64,
    k: K,
) -> Result<Flow, EngineError> {
    match goal {
        Goal::True => step_cont(ctx, cont, alpha, depth, k),
        Goal::Conj(l, r) => {
            let cont2 = cons(r.clone(), store.clone(), cont.clone());
            run(ctx, l, store, &cont2, alpha, depth, k)
        }
        Goal::Disj(l, r) => {
            if run(ctx, l, store, cont, alpha, depth, k)?.is_break() {
                return Ok(ControlFlow::Break(()));
            }
            run(ctx, r, store, cont, alpha, depth, k)
        }
        Goal::Builtin(a) => {
            let mark = ctx.b.mark();
            if call_builtin(&mut ctx.b, a, ctx.occurs_check)? {
                ctx.record(TraceLabel::Builtin, None, cont, alpha);
                let flow = step_cont(ctx, cont, alpha, depth, k)?;
                ctx.b.undo_to(mark);
                Ok(flow)
            } else {
                ctx.b.undo_to(mark);
                Ok(ControlFlow::Continue(()))
            }
        }
        Goal::Atom(a) => rule1(ctx, a, store, cont, alpha, depth, k),
        Goal::Implication(h, g) => rule2(ctx, h, g, store, cont, alpha, depth, k),
    }
}

fn step_cont(ctx: &mut Ctx, cont: &Cont, alpha: f64, depth: u64, k: K) -> Result<Flow, EngineError> {
    match cont {
        None => k(ctx, alpha, depth),
        Some(n) => {
            let goal = n.goal.clone();
            let store = n.store.clone();
            let next = n.next.clone();
            run(ctx, &goal, &store, &next, alpha, depth, k)
        }
    }
}

/// Clause resolution: try every candidate, static clauses in program
/// order first, then hypotheses in assumption order.
#[allow(clippy::too_many_arguments)]
fn rule1(
    ctx: &mut Ctx,
    goal: &Atom,
    store: &Store,
    cont: &Cont,
    alpha: f64,
    depth: u64,
    k: K,
) -> Result<Flow, EngineError> {
    if ctx.over_depth_budget(depth) {
        return Ok(ControlFlow::Continue(()));
    }
    let mut candidates: Vec<Arc<MetaClause>> = Vec::new();
    for c in &ctx.statics {
        let h = &c.rule.head;
        if h.arity() == goal.arity() && ctx.rel.query(goal.pred, h.pred) > 0.0 {
            candidates.push(c.clone());
        }
    }
    for h in store.candidates(goal.pred, goal.arity(), ctx.rel) {
        candidates.push(h.clause.clone());
    }
    for c in candidates {
        if ctx.over_step_limit() {
            return Ok(ControlFlow::Break(()));
        }
        let mark = ctx.b.mark();
        let (head, body) = ctx.instantiate(&c);
        let mut beta = ctx.rel.query(goal.pred, head.pred);
        let mut ok = beta > 0.0;
        if ok {
            for (ga, ha) in goal.args.iter().zip(&head.args) {
                match crate::unify::weak_unify(
                    &mut ctx.b, ga, ha, ctx.rel, ctx.tnorm, ctx.lambda, ctx.occurs_check,
                ) {
                    Some(d) => beta = ctx.tnorm.apply(beta, d),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if ok {
            let alpha2 = ctx.tnorm.apply(ctx.tnorm.apply(c.rule.grade, beta), alpha);
            if alpha2 >= ctx.lambda {
                ctx.stats.resolutions += 1;
                ctx.record(TraceLabel::Rule1, Some(&body), cont, alpha2);
                if run(ctx, &body, store, cont, alpha2, depth + 1, k)?.is_break() {
                    ctx.b.undo_to(mark);
                    return Ok(ControlFlow::Break(()));
                }
            }
        }
        ctx.b.undo_to(mark);
    }
    Ok(ControlFlow::Continue(()))
}

/// Embedded implication: snapshot the hypothesis, prove the consequent
/// under the extended store starting from degree 1, then compose the
/// inner degree into the outer one.
#[allow(clippy::too_many_arguments)]
fn rule2(
    ctx: &mut Ctx,
    hyp: &Rule,
    conseq: &Goal,
    store: &Store,
    cont: &Cont,
    alpha: f64,
    depth: u64,
    k: K,
) -> Result<Flow, EngineError> {
    if ctx.over_depth_budget(depth) {
        return Ok(ControlFlow::Continue(()));
    }
    if ctx.over_step_limit() {
        return Ok(ControlFlow::Break(()));
    }
    let clause = Arc::new(ctx.capture(hyp));
    let seq = ctx.seq;
    ctx.seq += 1;
    ctx.stats.registrations += 1;
    let store2 = store.assume(Arc::new(Hyp { clause, seq }));
    ctx.record(TraceLabel::Rule2, Some(conseq), &None, 1.0);
    ctx.impl_depth += 1;
    let lambda = ctx.lambda;
    let tnorm = ctx.tnorm;
    let cont = cont.clone();
    let mut inner_k = |ctx: &mut Ctx, inner_alpha: f64, inner_depth: u64| {
        ctx.record(TraceLabel::Empty, None, &None, inner_alpha);
        let combined = tnorm.apply(alpha, inner_alpha);
        if combined < lambda {
            return Ok(ControlFlow::Continue(()));
        }
        ctx.impl_depth -= 1;
        let flow = step_cont(ctx, &cont, combined, inner_depth, k);
        ctx.impl_depth += 1;
        flow
    };
    let flow = run(ctx, conseq, &store2, &None, 1.0, depth + 1, &mut inner_k);
    ctx.impl_depth -= 1;
    flow
}

/// Run `query` and hand every answer to `sink`.
pub fn solve_meta(
    program: &Program,
    rel: &ProximityRelation,
    cfg: &SolveConfig,
    query: &Query,
    sink: &mut dyn FnMut(Answer) -> Flow,
) -> Result<SolveStats, EngineError> {
    let (stats, _) = solve_meta_inner(program, rel, cfg, query, sink, false)?;
    Ok(stats)
}

/// Like [`solve_meta`], also returning the transitions taken.
pub fn trace_meta(
    program: &Program,
    rel: &ProximityRelation,
    cfg: &SolveConfig,
    query: &Query,
    sink: &mut dyn FnMut(Answer) -> Flow,
) -> Result<(SolveStats, Vec<TraceEvent>), EngineError> {
    solve_meta_inner(program, rel, cfg, query, sink, true)
}

fn solve_meta_inner(
    program: &Program,
    rel: &ProximityRelation,
    cfg: &SolveConfig,
    query: &Query,
    sink: &mut dyn FnMut(Answer) -> Flow,
    trace: bool,
) -> Result<(SolveStats, Vec<TraceEvent>), EngineError> {
    let statics: Vec<Arc<MetaClause>> = program
        .clauses
        .iter()
        .map(|c| Arc::new(MetaClause { rule: c.rule.clone(), n_vars: c.n_vars }))
        .collect();
    let mut ctx = Ctx {
        b: Bindings::new(),
        rel,
        lambda: cfg.lambda,
        tnorm: cfg.tnorm,
        occurs_check: cfg.occurs_check,
        depth_budget: cfg.depth_budget,
        step_limit: cfg.step_limit,
        statics,
        seq: 0,
        stats: SolveStats::default(),
        steps: 0,
        trace: if trace { Some(Vec::new()) } else { None },
        impl_depth: 0,
    };
    // query variables become the first arena slots, in source order
    let map: Vec<VarId> = (0..query.n_vars).map(|_| ctx.b.new_var()).collect();
    let goal = instantiate_goal(&query.goal, &map);
    let store = Store::empty(cfg.strategy);
    let named: Vec<(Sym, VarId)> = query
        .var_names
        .iter()
        .enumerate()
        .filter_map(|(i, n)| n.map(|name| (name, map[i])))
        .collect();
    let mut k = |ctx: &mut Ctx, alpha: f64, _depth: u64| {
        ctx.record(TraceLabel::Empty, None, &None, alpha);
        let bindings = named
            .iter()
            .map(|&(name, v)| (name, ctx.b.resolve(&Term::Var(v))))
            .collect();
        Ok(sink(Answer { bindings, degree: alpha }))
    };
    let _ = run(&mut ctx, &goal, &store, &None, 1.0, 0, &mut k)?;
    Ok((ctx.stats, ctx.trace.unwrap_or_default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_goal, parse_program};
    use crate::unify::build_relation;

    fn answers(src: &str, goal: &str, cfg: &SolveConfig) -> Vec<Answer> {
        let p = parse_program(src).unwrap();
        let rel = build_relation(&p.proximity, p.directives.transitivity.unwrap_or(false), cfg.tnorm)
            .unwrap();
        let q = parse_goal(goal).unwrap();
        let mut out = Vec::new();
        solve_meta(&p, &rel, cfg, &q, &mut |a| {
            out.push(a);
            ControlFlow::Continue(())
        })
        .unwrap();
        out
    }

    fn count(src: &str, goal: &str) -> usize {
        answers(src, goal, &SolveConfig::default()).len()
    }

    #[test]
    fn plain_sld() {
        assert_eq!(count("p(1). p(2). q(X) :- p(X).", "q(X)"), 2);
        assert_eq!(count("p(1).", "p(2)"), 0);
        let a = answers("e(1,2). e(2,3). path(X,Y) :- e(X,Y). path(X,Z) :- e(X,Y), path(Y,Z).",
            "path(1, Z)", &SolveConfig::default());
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn scoped_hypotheses() {
        // assumptions visible only inside the consequent
        assert_eq!(count("a :- (d => b), e. b :- c. c :- d. e.", "a"), 1);
        assert_eq!(count("p :- (q :- r) => q. r. r.", "p"), 2);
        assert_eq!(count("p :- (q => q), q.", "p"), 0);
        assert_eq!(count("p :- q => q => q.", "p"), 2);
    }

    #[test]
    fn capture_freezes_bindings() {
        assert_eq!(count("p(X) :- g(X), (q(X) => r). g(1). r :- q(2).", "p(X)"), 0);
        assert_eq!(count("p :- g(X, Y), (q(X, Y) => q(1, 2)). g(X, X).", "p"), 0);
        // a bound shared variable is frozen into the hypothesis
        assert_eq!(count("p(X) :- g(X), (q(X) => r). g(2). r :- q(2).", "p(X)"), 1);
        // free hypothesis variables are fresh per use
        assert_eq!(count("p :- q(X) => (q(1), q(2)).", "p"), 1);
    }

    #[test]
    fn weak_resolution_degrees() {
        let cfg = SolveConfig { lambda: 0.5, ..SolveConfig::default() };
        let a = answers("g ~ h = 0.6. g(1) with 0.7.", "h(1)", &cfg);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].degree, 0.6);
        let cfg = SolveConfig { lambda: 0.7, ..SolveConfig::default() };
        let a = answers("g ~ h = 0.6. g(1) with 0.7.", "h(1)", &cfg);
        assert_eq!(a.len(), 0);
    }

    #[test]
    fn grades_compose() {
        let cfg = SolveConfig { tnorm: TNorm::Product, ..SolveConfig::default() };
        let a = answers("p :- q with 0.5. q with 0.5.", "p", &cfg);
        assert_eq!(a.len(), 1);
        assert!((a[0].degree - 0.25).abs() < 1e-12);
        let cfg = SolveConfig::default();
        let a = answers("p :- q with 0.5. q with 0.75.", "p", &cfg);
        assert_eq!(a[0].degree, 0.5);
    }

    #[test]
    fn strategies_agree() {
        let progs = [
            "p :- q => q => q.",
            "p :- (q :- r) => q. r. r.",
            "a :- (d => b), e. b :- c. c :- d. e.",
            "p(X) :- g(X), (q(X) => r(X)). g(1). g(2). r(X) :- q(X).",
        ];
        for src in progs {
            let goal = if src.starts_with("a") { "a" } else if src.contains("p(X)") { "p(X)" } else { "p" };
            let a = answers(src, goal, &SolveConfig { strategy: Strategy::ListA, ..SolveConfig::default() });
            let b = answers(src, goal, &SolveConfig { strategy: Strategy::TreeB, ..SolveConfig::default() });
            assert_eq!(a.len(), b.len(), "on {src}");
            crate::answer::compare_answer_sequences(&a, &b).unwrap();
        }
    }

    #[test]
    fn disjunction_and_builtins() {
        assert_eq!(count("p(X) :- X = 1 ; X = 2.", "p(Y)"), 2);
        assert_eq!(count("p(X) :- q(X), X > 1. q(1). q(2). q(3).", "p(X)"), 2);
        let a = answers("len(0) :- true. len(N) :- N > 0, N1 is N - 1, len(N1).", "len(3)",
            &SolveConfig::default());
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn builtin_errors_surface() {
        let p = parse_program("p :- X > 1.").unwrap();
        let q = parse_goal("p").unwrap();
        let rel = ProximityRelation::identity();
        let r = solve_meta(&p, &rel, &SolveConfig::default(), &q, &mut |_| ControlFlow::Continue(()));
        assert!(matches!(r, Err(EngineError::Arith(_))));
    }

    #[test]
    fn depth_budget_prunes() {
        let cfg = SolveConfig { depth_budget: Some(20), ..SolveConfig::default() };
        let p = parse_program("loop :- loop.").unwrap();
        let q = parse_goal("loop").unwrap();
        let rel = ProximityRelation::identity();
        let stats = solve_meta(&p, &rel, &cfg, &q, &mut |_| ControlFlow::Continue(())).unwrap();
        assert!(stats.depth_pruned);
    }

    #[test]
    fn step_limit_stops() {
        let cfg = SolveConfig { step_limit: Some(100), ..SolveConfig::default() };
        let p = parse_program("loop :- loop.").unwrap();
        let q = parse_goal("loop").unwrap();
        let rel = ProximityRelation::identity();
        let stats = solve_meta(&p, &rel, &cfg, &q, &mut |_| ControlFlow::Continue(())).unwrap();
        assert!(stats.step_limited);
    }

    #[test]
    fn trace_counts() {
        let p = parse_program("a :- (d => b), e. b :- c. c :- d. e.").unwrap();
        let rel = ProximityRelation::identity();
        let q = parse_goal("a").unwrap();
        let (_, events) =
            trace_meta(&p, &rel, &SolveConfig::default(), &q, &mut |_| ControlFlow::Continue(()))
                .unwrap();
        let outer: Vec<_> = events.iter().filter(|e| e.depth == 0).collect();
        let inner: Vec<_> = events.iter().filter(|e| e.depth == 1).collect();
        assert_eq!(outer.len(), 4, "events: {events:#?}");
        assert_eq!(inner.len(), 4, "events: {events:#?}");
        assert_eq!(outer.last().unwrap().label, TraceLabel::Empty);
        assert!(outer.last().unwrap().state.contains('□'));

        let q = parse_goal("true").unwrap();
        let (_, events) =
            trace_meta(&p, &rel, &SolveConfig::default(), &q, &mut |_| ControlFlow::Continue(()))
                .unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].label, TraceLabel::Empty);

        let q = parse_goal("fail").unwrap();
        let (_, events) =
            trace_meta(&p, &rel, &SolveConfig::default(), &q, &mut |_| ControlFlow::Continue(()))
                .unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn stats_count_work() {
        let p = parse_program("p :- q => q. r.").unwrap();
        let rel = ProximityRelation::identity();
        let q = parse_goal("p").unwrap();
        let stats = solve_meta(&p, &rel, &SolveConfig::default(), &q, &mut |_| ControlFlow::Continue(()))
            .unwrap();
        assert_eq!(stats.registrations, 1);
        assert_eq!(stats.resolutions, 2); // p and the assumed q
    }

    #[test]
    fn early_stop() {
        let p = parse_program("p(1). p(2). p(3).").unwrap();
        let rel = ProximityRelation::identity();
        let q = parse_goal("p(X)").unwrap();
        let mut n = 0;
        solve_meta(&p, &rel, &SolveConfig::default(), &q, &mut |_| {
            n += 1;
            ControlFlow::Break(())
        })
        .unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn proximity_on_predicates_and_tree_strategy() {
        let src = "near ~ close = 0.8. near(1). p(X) :- close(X).";
        for strategy in [Strategy::ListA, Strategy::TreeB] {
            let cfg = SolveConfig { strategy, ..SolveConfig::default() };
            let a = answers(src, "p(X)", &cfg);
            assert_eq!(a.len(), 1);
            assert_eq!(a[0].degree, 0.8);
        }
        // hypotheses found through proximity as well
        let src2 = "near ~ close = 0.8. p :- near(1) => close(1).";
        for strategy in [Strategy::ListA, Strategy::TreeB] {
            let cfg = SolveConfig { strategy, ..SolveConfig::default() };
            let a = answers(src2, "p", &cfg);
            assert_eq!(a.len(), 1);
            assert_eq!(a[0].degree, 0.8);
        }
    }
}
