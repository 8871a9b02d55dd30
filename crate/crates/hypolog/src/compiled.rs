//! Solver that interprets translated programs directly.
//!
//! Resolution works against the expansion entries produced by
//! [`crate::translate`]: predicate-level proximity is frozen in each
//! entry's `beta`, so goal predicates match entry predicates exactly and
//! only the arguments are weakly unified. Hypotheses are not program
//! clauses here; assuming one registers a snapshot of its shared-variable
//! values under a fresh context identifier, and the corresponding
//! hypothesis clause only applies when a registration passes the prefix
//! check against the current context. Snapshots are taken at registration
//! time and instantiated fresh on every use, so later bindings of the
//! registered variables are not observable. For hypothesis clauses the
//! registered values are bound before the weak head unification, which is
//! what makes proximity between goal arguments and registered values
//! count towards the degree.

use crate::answer::{Answer, SolveStats};
use crate::builtins::call_builtin;
use crate::context::{ContextId, Registration, RegistrationStore};
use crate::meta::{instantiate_atom, instantiate_term, renumber_term};
use crate::sym::Sym;
use crate::syntax::{Atom, Query, Term, VarId};
use crate::translate::{translate_query, TClause, TGoal, TranslatedProgram};
use crate::unify::{unify, weak_unify, Bindings, ProximityRelation, TNorm};
use crate::{EngineError, Flow, SolveConfig};
use std::collections::HashMap;
use std::ops::ControlFlow;
use std::sync::Arc;

type Cont = Option<Arc<ContNode>>;

struct ContNode {
    goal: Arc<TGoal>,
    ctx: ContextId,
    next: Cont,
}

fn cons(goal: Arc<TGoal>, ctx: ContextId, next: Cont) -> Cont {
    Some(Arc::new(ContNode { goal, ctx, next }))
}

/// Completion continuation, invoked once per solution of the current
/// (sub)derivation with the accumulated degree and reached depth.
type K<'k> = &'k mut dyn FnMut(&mut CCtx, f64, u64) -> Result<Flow, EngineError>;

struct CCtx<'a> {
    b: Bindings,
    rel: &'a ProximityRelation,
    lambda: f64,
    tnorm: TNorm,
    occurs_check: bool,
    depth_budget: Option<u64>,
    step_limit: Option<u64>,
    trim: bool,
    prog: &'a TranslatedProgram,
    extra: &'a [Arc<TClause>],
    store: RegistrationStore,
    stats: SolveStats,
    steps: u64,
}

impl CCtx<'_> {
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

    fn candidates(&self, pred: Sym, arity: u16) -> Vec<Arc<TClause>> {
        let mut v: Vec<Arc<TClause>> = self.prog.candidates(pred, arity).cloned().collect();
        v.extend(
            self.extra
                .iter()
                .filter(|c| c.pred == pred && c.arity() == arity)
                .cloned(),
        );
        v
    }

    /// Weakly unify the goal arguments with the renamed head, folding the
    /// argument degrees into the entry degree.
    fn head_degree(&mut self, cl: &TClause, map: &[VarId], goal: &Atom) -> Option<f64> {
        let mut beta = cl.beta;
        for (ga, ha) in goal.args.iter().zip(&cl.head_args) {
            let h = instantiate_term(ha, map);
            match weak_unify(
                &mut self.b, ga, &h, self.rel, self.tnorm, self.lambda, self.occurs_check,
            ) {
                Some(d) => beta = self.tnorm.apply(beta, d),
                None => return None,
            }
        }
        Some(beta)
    }

    /// Instantiate a registration snapshot with fresh variables.
    fn fresh_copy(&mut self, t: &Term, vmap: &mut HashMap<VarId, VarId>) -> Term {
        match t {
            Term::Var(v) => {
                if let Some(&w) = vmap.get(v) {
                    Term::Var(w)
                } else {
                    let w = self.b.new_var();
                    vmap.insert(*v, w);
                    Term::Var(w)
                }
            }
            Term::Comp(f, args) => Term::Comp(
                *f,
                args.iter().map(|a| self.fresh_copy(a, vmap)).collect(),
            ),
            other => other.clone(),
        }
    }
}

fn instantiate_tgoal(g: &TGoal, map: &[VarId]) -> TGoal {
    match g {
        TGoal::True => TGoal::True,
        TGoal::Builtin(a) => TGoal::Builtin(instantiate_atom(a, map)),
        TGoal::Call(a) => TGoal::Call(instantiate_atom(a, map)),
        TGoal::Conj(l, r) => TGoal::Conj(
            Arc::new(instantiate_tgoal(l, map)),
            Arc::new(instantiate_tgoal(r, map)),
        ),
        TGoal::Disj(l, r) => TGoal::Disj(
            Arc::new(instantiate_tgoal(l, map)),
            Arc::new(instantiate_tgoal(r, map)),
        ),
        TGoal::Impl { reg_id, shared, inner } => TGoal::Impl {
            reg_id: *reg_id,
            shared: shared.iter().map(|t| instantiate_term(t, map)).collect(),
            inner: Arc::new(instantiate_tgoal(inner, map)),
        },
    }
}

fn run(
    c: &mut CCtx,
    goal: &TGoal,
    cctx: &ContextId,
    cont: &Cont,
    alpha: f64,
    depth: u64,
    k: K,
) -> Result<Flow, EngineError> {
    match goal {
        TGoal::True => step_cont(c, cont, alpha, depth, k),
        TGoal::Conj(l, r) => {
            let cont2 = cons(r.clone(), cctx.clone(), cont.clone());
            run(c, l, cctx, &cont2, alpha, depth, k)
        }
        TGoal::Disj(l, r) => {
            if run(c, l, cctx, cont, alpha, depth, k)?.is_break() {
                return Ok(ControlFlow::Break(()));
            }
            run(c, r, cctx, cont, alpha, depth, k)
        }
        TGoal::Builtin(a) => {
            let mark = c.b.mark();
            if call_builtin(&mut c.b, a, c.occurs_check)? {
                let flow = step_cont(c, cont, alpha, depth, k)?;
                c.b.undo_to(mark);
                Ok(flow)
            } else {
                c.b.undo_to(mark);
                Ok(ControlFlow::Continue(()))
            }
        }
        TGoal::Call(a) => resolve(c, a, cctx, cont, alpha, depth, k),
        TGoal::Impl { reg_id, shared, inner } => {
            implication(c, *reg_id, shared, inner, cctx, cont, alpha, depth, k)
        }
    }
}

fn step_cont(c: &mut CCtx, cont: &Cont, alpha: f64, depth: u64, k: K) -> Result<Flow, EngineError> {
    match cont {
        None => k(c, alpha, depth),
        Some(n) => {
            let goal = n.goal.clone();
            let ctx = n.ctx.clone();
            let next = n.next.clone();
            run(c, &goal, &ctx, &next, alpha, depth, k)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn resolve(
    c: &mut CCtx,
    goal: &Atom,
    cctx: &ContextId,
    cont: &Cont,
    alpha: f64,
    depth: u64,
    k: K,
) -> Result<Flow, EngineError> {
    if c.over_depth_budget(depth) {
        return Ok(ControlFlow::Continue(()));
    }
    for cl in c.candidates(goal.pred, goal.arity()) {
        if c.over_step_limit() {
            return Ok(ControlFlow::Break(()));
        }
        let mark = c.b.mark();
        let map: Vec<VarId> = (0..cl.n_vars).map(|_| c.b.new_var()).collect();
        let flow = match cl.reg_id {
            None => apply_static(c, &cl, &map, goal, cctx, cont, alpha, depth, k)?,
            Some(rid) => apply_hypothesis(c, &cl, rid, &map, goal, cctx, cont, alpha, depth, k)?,
        };
        c.b.undo_to(mark);
        if flow.is_break() {
            return Ok(ControlFlow::Break(()));
        }
    }
    Ok(ControlFlow::Continue(()))
}

#[allow(clippy::too_many_arguments)]
fn apply_static(
    c: &mut CCtx,
    cl: &TClause,
    map: &[VarId],
    goal: &Atom,
    cctx: &ContextId,
    cont: &Cont,
    alpha: f64,
    depth: u64,
    k: K,
) -> Result<Flow, EngineError> {
    if let Some(beta) = c.head_degree(cl, map, goal) {
        let alpha2 = c.tnorm.apply(c.tnorm.apply(cl.grade, beta), alpha);
        if alpha2 >= c.lambda {
            c.stats.resolutions += 1;
            let body = instantiate_tgoal(&cl.body, map);
            return run(c, &body, cctx, cont, alpha2, depth + 1, k);
        }
    }
    Ok(ControlFlow::Continue(()))
}

#[allow(clippy::too_many_arguments)]
fn apply_hypothesis(
    c: &mut CCtx,
    cl: &TClause,
    rid: u32,
    map: &[VarId],
    goal: &Atom,
    cctx: &ContextId,
    cont: &Cont,
    alpha: f64,
    depth: u64,
    k: K,
) -> Result<Flow, EngineError> {
    let regs: Vec<Registration> = c.store.lookup(rid).to_vec();
    for r in regs {
        if !r.context.is_prefix_of(cctx) {
            continue;
        }
        if c.over_step_limit() {
            return Ok(ControlFlow::Break(()));
        }
        let mark = c.b.mark();
        let mut vmap = HashMap::new();
        let mut ok = true;
        for (&sv, val) in cl.shared_vars.iter().zip(&r.shared_values) {
            let copy = c.fresh_copy(val, &mut vmap);
            if !unify(&mut c.b, &Term::Var(map[sv as usize]), &copy, c.occurs_check) {
                ok = false;
                break;
            }
        }
        if ok {
            if let Some(beta) = c.head_degree(cl, map, goal) {
                let alpha2 = c.tnorm.apply(c.tnorm.apply(cl.grade, beta), alpha);
                if alpha2 >= c.lambda {
                    c.stats.resolutions += 1;
                    let body = instantiate_tgoal(&cl.body, map);
                    if run(c, &body, cctx, cont, alpha2, depth + 1, k)?.is_break() {
                        c.b.undo_to(mark);
                        return Ok(ControlFlow::Break(()));
                    }
                }
            }
        }
        c.b.undo_to(mark);
    }
    Ok(ControlFlow::Continue(()))
}

#[allow(clippy::too_many_arguments)]
fn implication(
    c: &mut CCtx,
    reg_id: u32,
    shared: &[Term],
    inner: &TGoal,
    cctx: &ContextId,
    cont: &Cont,
    alpha: f64,
    depth: u64,
    k: K,
) -> Result<Flow, EngineError> {
    if c.over_depth_budget(depth) {
        return Ok(ControlFlow::Continue(()));
    }
    if c.over_step_limit() {
        return Ok(ControlFlow::Break(()));
    }
    let i = c.store.fresh_index();
    let new_ctx = cctx.extend(i);
    // snapshot under the current bindings; free variables become
    // universal, as assertion would make them
    let mut rmap = HashMap::new();
    let values: Vec<Term> = shared
        .iter()
        .map(|t| {
            let r = c.b.resolve(t);
            renumber_term(&r, &mut rmap)
        })
        .collect();
    let prev_len = c.store.count_for(reg_id);
    c.store.register(reg_id, values, new_ctx.clone());
    c.stats.registrations += 1;
    let lambda = c.lambda;
    let tnorm = c.tnorm;
    let cont2 = cont.clone();
    let mut inner_k = |c: &mut CCtx, inner_alpha: f64, inner_depth: u64| {
        let combined = tnorm.apply(alpha, inner_alpha);
        if combined < lambda {
            return Ok(ControlFlow::Continue(()));
        }
        step_cont(c, &cont2, combined, inner_depth, k)
    };
    let flow = run(c, inner, &new_ctx, &None, 1.0, depth + 1, &mut inner_k)?;
    if c.trim {
        // the subtree is exhausted, so every registration made under it
        // (including our own) is unreachable from any live context
        c.store.truncate(reg_id, prev_len);
    }
    Ok(flow)
}

/// Run `query` against a translated program and hand every answer to
/// `sink`.
pub fn solve_compiled(
    prog: &TranslatedProgram,
    rel: &ProximityRelation,
    cfg: &SolveConfig,
    query: &Query,
    sink: &mut dyn FnMut(Answer) -> Flow,
) -> Result<SolveStats, EngineError> {
    let tq = translate_query(prog.next_rule_id, rel, cfg.lambda, query);
    let mut c = CCtx {
        b: Bindings::new(),
        rel,
        lambda: cfg.lambda,
        tnorm: cfg.tnorm,
        occurs_check: cfg.occurs_check,
        depth_budget: cfg.depth_budget,
        step_limit: cfg.step_limit,
        trim: cfg.trim_registrations,
        prog,
        extra: &tq.extra,
        store: RegistrationStore::new(),
        stats: SolveStats::default(),
        steps: 0,
    };
    let map: Vec<VarId> = (0..query.n_vars).map(|_| c.b.new_var()).collect();
    let goal = instantiate_tgoal(&tq.goal, &map);
    let named: Vec<(Sym, VarId)> = query
        .var_names
        .iter()
        .enumerate()
        .filter_map(|(i, n)| n.map(|name| (name, map[i])))
        .collect();
    let root = ContextId::root();
    let mut k = |c: &mut CCtx, alpha: f64, _depth: u64| {
        let bindings = named
            .iter()
            .map(|&(name, v)| (name, c.b.resolve(&Term::Var(v))))
            .collect();
        Ok(sink(Answer { bindings, degree: alpha }))
    };
    let _ = run(&mut c, &goal, &root, &None, 1.0, 0, &mut k)?;
    Ok(c.stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::answer::compare_answer_multisets;
    use crate::meta::solve_meta;
    use crate::syntax::{parse_goal, parse_program};
    use crate::translate::translate_program;
    use crate::unify::build_relation;

    fn solve(src: &str, goal: &str, cfg: &SolveConfig) -> (Vec<Answer>, SolveStats) {
        let p = parse_program(src).unwrap();
        let rel =
            build_relation(&p.proximity, p.directives.transitivity.unwrap_or(false), cfg.tnorm)
                .unwrap();
        let tp = translate_program(&p, &rel, cfg.lambda);
        let q = parse_goal(goal).unwrap();
        let mut out = Vec::new();
        let stats = solve_compiled(&tp, &rel, cfg, &q, &mut |a| {
            out.push(a);
            ControlFlow::Continue(())
        })
        .unwrap();
        (out, stats)
    }

    fn answers(src: &str, goal: &str, cfg: &SolveConfig) -> Vec<String> {
        solve(src, goal, cfg).0.iter().map(|a| a.to_string()).collect()
    }

    fn check_against_meta(src: &str, goal: &str, cfg: &SolveConfig) {
        let p = parse_program(src).unwrap();
        let rel =
            build_relation(&p.proximity, p.directives.transitivity.unwrap_or(false), cfg.tnorm)
                .unwrap();
        let q = parse_goal(goal).unwrap();
        let mut m = Vec::new();
        solve_meta(&p, &rel, cfg, &q, &mut |a| {
            m.push(a);
            ControlFlow::Continue(())
        })
        .unwrap();
        let (c, _) = solve(src, goal, cfg);
        if let Err(e) = compare_answer_multisets(&m, &c) {
            panic!("{src} ?- {goal}: {e}");
        }
    }

    #[test]
    fn plain_resolution() {
        let cfg = SolveConfig::default();
        assert_eq!(answers("p(1). p(2).", "p(X)", &cfg), vec!["X = 1", "X = 2"]);
        assert_eq!(answers("p(X) :- q(X). q(a).", "p(Y)", &cfg), vec!["Y = a"]);
        assert!(answers("p(1).", "q(1)", &cfg).is_empty());
    }

    #[test]
    fn hypotheses_are_scoped() {
        let cfg = SolveConfig::default();
        assert_eq!(answers("r :- q.", "q => r", &cfg), vec!["true"]);
        // the assumption is gone once the implication is solved
        assert!(answers("r :- q.", "(q => r), q", &cfg).is_empty());
        // sibling implications do not see each other's assumptions
        assert!(answers("r :- q. s :- t.", "(q => r), (q => s)", &cfg).is_empty());
        // nested contexts inherit outer assumptions
        assert_eq!(answers("r :- q, t.", "q => (t => r)", &cfg), vec!["true"]);
    }

    #[test]
    fn recursion_registers_once_per_level() {
        let cfg = SolveConfig::default();
        let src = "p(0). p(N) :- N > 0, N1 is N - 1, (q => p(N1)).";
        let (out, stats) = solve(src, "p(3)", &cfg);
        assert_eq!(out.len(), 1);
        assert_eq!(stats.registrations, 3);
    }

    #[test]
    fn snapshot_frozen_at_registration() {
        // X is still free when q(X) is assumed, so the hypothesis is
        // universal; the later binding X = 3 must not narrow it
        let cfg = SolveConfig::default();
        let src = "p :- (q(X) => r(X)). r(3) :- q(7).";
        assert_eq!(answers(src, "p", &cfg), vec!["true"]);
    }

    #[test]
    fn registered_value_meets_proximity() {
        let cfg = SolveConfig::default();
        let src = "p :- s(X), (q(X) => r). s(a). r :- q(b). a ~ b = 0.8.";
        let (out, _) = solve(src, "p", &cfg);
        assert_eq!(out.len(), 1);
        assert!((out[0].degree - 0.8).abs() < 1e-9);
        // under a cut above the entry degree the derivation dies
        let strict = SolveConfig { lambda: 0.9, ..SolveConfig::default() };
        assert!(answers(src, "p", &strict).is_empty());
    }

    #[test]
    fn degrees_and_cut() {
        let src = "q(a). p ~ q = 0.6.";
        let cfg = SolveConfig::default();
        let (out, _) = solve(src, "p(a)", &cfg);
        assert_eq!(out.len(), 1);
        assert!((out[0].degree - 0.6).abs() < 1e-9);
        let cut = SolveConfig { lambda: 0.7, ..SolveConfig::default() };
        assert!(answers(src, "p(a)", &cut).is_empty());
    }

    #[test]
    fn matches_meta_on_mixed_programs() {
        let cfg = SolveConfig::default();
        for (src, goal) in [
            ("p(X) :- g(X), (q(X) => r). g(1). r :- q(2).", "p(Y)"),
            ("p(X) :- g(X), (q(X) => r). g(1). r :- q(1).", "p(Y)"),
            ("p :- q => q.", "p"),
            ("p :- (a ; b), (c => (d ; c)). b.", "p"),
            ("p(X) :- X = f(Y), Y \\= 1, Y = 2.", "p(Z)"),
            ("len(0). len(N) :- N > 0, M is N - 1, len(M).", "len(4)"),
            ("p :- (q(X) :- r(X)) => q(1). r(1).", "p"),
            ("p :- ((q with 0.5) => q).", "p"),
            ("q(a). q(b). p ~ q = 0.6. a ~ b = 0.3.", "p(b)"),
        ] {
            check_against_meta(src, goal, &cfg);
        }
    }

    #[test]
    fn matches_meta_under_cuts_and_tnorms() {
        let src = "p(X) :- g(X), (q(X) => r) with 0.8. g(1) with 0.7. r :- q(2) with 0.9. p ~ s = 0.6. q ~ t = 0.4.";
        for lambda in [0.0, 0.25, 0.5, 0.65] {
            for tnorm in [TNorm::Min, TNorm::Product, TNorm::Luka] {
                let cfg = SolveConfig { lambda, tnorm, ..SolveConfig::default() };
                check_against_meta(src, "p(Y)", &cfg);
                check_against_meta(src, "s(Y)", &cfg);
                check_against_meta(src, "t(2) => r", &cfg);
            }
        }
    }

    #[test]
    fn trim_mode_same_answers() {
        let src = "p(0). p(N) :- N > 0, N1 is N - 1, (q => p(N1)).";
        let plain = SolveConfig::default();
        let trim = SolveConfig { trim_registrations: true, ..SolveConfig::default() };
        assert_eq!(answers(src, "p(3)", &plain), answers(src, "p(3)", &trim));
        let hyp = "r :- q. s :- (q => r), (q => r).";
        assert_eq!(answers(hyp, "s", &plain), answers(hyp, "s", &trim));
    }

    #[test]
    fn depth_budget_prunes() {
        let src = "p :- p.";
        let cfg = SolveConfig { depth_budget: Some(50), ..SolveConfig::default() };
        let (out, stats) = solve(src, "p", &cfg);
        assert!(out.is_empty());
        assert!(stats.depth_pruned);
    }

    #[test]
    fn step_limit_stops() {
        let src = "p. p :- p.";
        let cfg = SolveConfig { step_limit: Some(100), ..SolveConfig::default() };
        let (_, stats) = solve(src, "p", &cfg);
        assert!(stats.step_limited);
    }
}
