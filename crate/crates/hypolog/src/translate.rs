//! Translation of hypothetical programs into flat clauses with explicit
//! context identifiers, plus the Prolog text emitters.
//!
//! Every source rule becomes one translated clause per proximity entry of
//! its head predicate (the expansion freezes the predicate-level degree as
//! `beta`). Every embedded implication `H => G` becomes an `Impl` goal
//! carrying a registration identifier and the list of variables shared
//! between `H` and the rest of its rule; `H` itself is split off as a
//! standalone clause guarded by a registration lookup. The compiled solver
//! in [`crate::compiled`] interprets this form directly; the emitters
//! print it (or the simpler inline form) as loadable Prolog text.

use crate::meta::{renumber_atom, renumber_goal};
use crate::sym::Sym;
use crate::syntax::{Atom, Goal, Num, Program, Query, Rule, Term, VarId};
use crate::unify::ProximityRelation;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

// ---------------------------------------------------------------------
// translated form

/// One translated clause. `head_args` and `body` use clause-local
/// variables `0..n_vars`; hypothesis clauses additionally list which of
/// those variables receive the registered shared values.
#[derive(Debug)]
pub struct TClause {
    /// Entry predicate. For an expansion entry this is the proximate
    /// symbol, not necessarily the source head symbol.
    pub pred: Sym,
    pub head_args: Vec<Term>,
    pub n_vars: u32,
    /// Unique over the whole translated program.
    pub rule_id: u32,
    /// `Some(id)` marks a hypothesis clause: it only applies when a
    /// registration with this identifier passes the context check.
    pub reg_id: Option<u32>,
    /// Clause-local variables bound to the registered shared values, in
    /// shared-list order. Empty for source clauses.
    pub shared_vars: Vec<VarId>,
    /// Rule grade.
    pub grade: f64,
    /// Proximity degree of this expansion entry.
    pub beta: f64,
    pub body: TGoal,
}

impl TClause {
    pub fn arity(&self) -> u16 {
        self.head_args.len() as u16
    }

    pub fn is_hypothesis(&self) -> bool {
        self.reg_id.is_some()
    }
}

/// Translated goals. `Call` resolves against translated clauses; `Impl`
/// registers its hypothesis under a fresh context index and proves the
/// inner goal there.
#[derive(Debug, Clone)]
pub enum TGoal {
    True,
    Builtin(Atom),
    Call(Atom),
    Conj(Arc<TGoal>, Arc<TGoal>),
    Disj(Arc<TGoal>, Arc<TGoal>),
    Impl {
        reg_id: u32,
        /// Shared-variable terms as seen at the implication site.
        shared: Vec<Term>,
        inner: Arc<TGoal>,
    },
}

#[derive(Debug)]
pub struct TranslatedProgram {
    pub clauses: Vec<Arc<TClause>>,
    index: HashMap<(Sym, u16), Vec<usize>>,
    /// First rule identifier not used by the program; query translation
    /// continues from here.
    pub next_rule_id: u32,
    pub lambda: f64,
}

impl TranslatedProgram {
    fn build(clauses: Vec<Arc<TClause>>, next_rule_id: u32, lambda: f64) -> TranslatedProgram {
        let mut index: HashMap<(Sym, u16), Vec<usize>> = HashMap::new();
        for (i, c) in clauses.iter().enumerate() {
            index.entry((c.pred, c.arity())).or_default().push(i);
        }
        TranslatedProgram { clauses, index, next_rule_id, lambda }
    }

    /// Entries whose head matches `pred/arity`, in translation order.
    pub fn candidates(&self, pred: Sym, arity: u16) -> impl Iterator<Item = &Arc<TClause>> + '_ {
        self.index
            .get(&(pred, arity))
            .into_iter()
            .flatten()
            .map(|&i| &self.clauses[i])
    }
}

/// A translated query: its goal plus the hypothesis clauses split off
/// from implications occurring in the query itself.
#[derive(Debug)]
pub struct TranslatedQuery {
    pub goal: TGoal,
    pub extra: Vec<Arc<TClause>>,
}

// ---------------------------------------------------------------------
// shared variables

fn count_term(t: &Term, m: &mut HashMap<VarId, usize>) {
    match t {
        Term::Var(v) => *m.entry(*v).or_insert(0) += 1,
        Term::Comp(_, args) => {
            for a in args {
                count_term(a, m);
            }
        }
        _ => {}
    }
}

fn count_atom(a: &Atom, m: &mut HashMap<VarId, usize>) {
    for t in &a.args {
        count_term(t, m);
    }
}

fn count_goal(g: &Goal, m: &mut HashMap<VarId, usize>) {
    match g {
        Goal::True => {}
        Goal::Atom(a) | Goal::Builtin(a) => count_atom(a, m),
        Goal::Conj(l, r) | Goal::Disj(l, r) => {
            count_goal(l, m);
            count_goal(r, m);
        }
        Goal::Implication(h, c) => {
            count_rule(h, m);
            count_goal(c, m);
        }
    }
}

fn count_rule(r: &Rule, m: &mut HashMap<VarId, usize>) {
    count_atom(&r.head, m);
    count_goal(&r.body, m);
}

/// Variables occurring both in `hyp` and in the rest of `enclosing`
/// (which contains `hyp`), in first-occurrence order within `hyp`.
pub fn shared_vars(hyp: &Rule, enclosing: &Rule) -> Vec<VarId> {
    let mut encl = HashMap::new();
    count_rule(enclosing, &mut encl);
    shared_against(hyp, &encl)
}

fn shared_against(hyp: &Rule, enclosing_counts: &HashMap<VarId, usize>) -> Vec<VarId> {
    let mut own = HashMap::new();
    count_rule(hyp, &mut own);
    let mut order = Vec::new();
    hyp.vars_into(&mut order);
    order.retain(|v| enclosing_counts.get(v).copied().unwrap_or(0) > own[v]);
    order
}

// ---------------------------------------------------------------------
// translation

struct Tr<'a> {
    rel: &'a ProximityRelation,
    lambda: f64,
    next_id: u32,
    out: Vec<Arc<TClause>>,
}

impl Tr<'_> {
    fn alloc(&mut self) -> u32 {
        let i = self.next_id;
        self.next_id += 1;
        i
    }

    /// Expansion entries for a head symbol: the symbol itself first, then
    /// its proximity neighbors by name, dropping degrees under the cut.
    fn entries_for(&self, p: Sym) -> Vec<(Sym, f64)> {
        let mut ns: Vec<(Sym, f64)> = self
            .rel
            .neighbors(p)
            .into_iter()
            .filter(|&(q, b)| q != p && b >= self.lambda)
            .collect();
        ns.sort_by(|x, y| x.0.name().cmp(y.0.name()));
        let mut v = vec![(p, 1.0)];
        v.extend(ns);
        v
    }

    fn clause(&mut self, head: &Atom, body: &Goal, grade: f64, n_vars: u32) {
        let mut counts = HashMap::new();
        count_atom(head, &mut counts);
        count_goal(body, &mut counts);
        let tbody = self.goal(body, &counts);
        for (pred, beta) in self.entries_for(head.pred) {
            let rule_id = self.alloc();
            self.out.push(Arc::new(TClause {
                pred,
                head_args: head.args.clone(),
                n_vars,
                rule_id,
                reg_id: None,
                shared_vars: Vec::new(),
                grade,
                beta,
                body: tbody.clone(),
            }));
        }
    }

    fn goal(&mut self, g: &Goal, encl: &HashMap<VarId, usize>) -> TGoal {
        match g {
            Goal::True => TGoal::True,
            Goal::Atom(a) => TGoal::Call(a.clone()),
            Goal::Builtin(a) => TGoal::Builtin(a.clone()),
            Goal::Conj(l, r) => {
                TGoal::Conj(Arc::new(self.goal(l, encl)), Arc::new(self.goal(r, encl)))
            }
            Goal::Disj(l, r) => {
                TGoal::Disj(Arc::new(self.goal(l, encl)), Arc::new(self.goal(r, encl)))
            }
            Goal::Implication(h, c) => {
                // implications nested in the consequent get their
                // identifiers first
                let inner = self.goal(c, encl);
                let shared = shared_against(h, encl);
                let reg_id = self.hyp(h, &shared);
                TGoal::Impl {
                    reg_id,
                    shared: shared.into_iter().map(Term::Var).collect(),
                    inner: Arc::new(inner),
                }
            }
        }
    }

    /// Split a hypothesis off as standalone clauses (one per expansion
    /// entry, all guarded by the same registration id).
    fn hyp(&mut self, h: &Rule, shared: &[VarId]) -> u32 {
        let mut map = HashMap::new();
        let head = renumber_atom(&h.head, &mut map);
        let body = renumber_goal(&h.body, &mut map);
        let shared_local: Vec<VarId> = shared.iter().map(|v| map[v]).collect();
        let n_vars = map.len() as u32;
        let entries = self.entries_for(h.head.pred);
        let reg_id = self.next_id;
        let ids: Vec<u32> = entries.iter().map(|_| self.alloc()).collect();
        let mut counts = HashMap::new();
        count_atom(&head, &mut counts);
        count_goal(&body, &mut counts);
        let tbody = self.goal(&body, &counts);
        for ((pred, beta), rule_id) in entries.into_iter().zip(ids) {
            self.out.push(Arc::new(TClause {
                pred,
                head_args: head.args.clone(),
                n_vars,
                rule_id,
                reg_id: Some(reg_id),
                shared_vars: shared_local.clone(),
                grade: h.grade,
                beta,
                body: tbody.clone(),
            }));
        }
        reg_id
    }
}

pub fn translate_program(
    program: &Program,
    rel: &ProximityRelation,
    lambda: f64,
) -> TranslatedProgram {
    let mut tr = Tr { rel, lambda, next_id: 0, out: Vec::new() };
    for c in &program.clauses {
        tr.clause(&c.rule.head, &c.rule.body, c.rule.grade, c.n_vars);
    }
    TranslatedProgram::build(tr.out, tr.next_id, lambda)
}

/// Translate a query goal, continuing rule identifiers after the
/// program's. Shared variables of query-level implications are computed
/// against the rest of the query goal.
pub fn translate_query(
    next_rule_id: u32,
    rel: &ProximityRelation,
    lambda: f64,
    query: &Query,
) -> TranslatedQuery {
    let mut tr = Tr { rel, lambda, next_id: next_rule_id, out: Vec::new() };
    let mut counts = HashMap::new();
    count_goal(&query.goal, &mut counts);
    let goal = tr.goal(&query.goal, &counts);
    TranslatedQuery { goal, extra: tr.out }
}

// ---------------------------------------------------------------------
// emission

/// Output style of [`emit_prolog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    /// Context lists threaded through extra arguments; hypotheses are
    /// asserted inline as rules guarded by `chk/2`.
    CrispInline,
    /// Hypotheses split into standalone clauses guarded by `reg/3` and
    /// `chk/2`, with explicit rule identifiers.
    CrispReg,
    /// Like `CrispReg` plus proximity expansion, `over_lambda/1`,
    /// `unify/1` argument linearization and `degree_comp/2`.
    Fuzzy,
}

impl std::str::FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Dialect, String> {
        match s {
            "crisp-prop" | "crisp-inline" => Ok(Dialect::CrispInline),
            "crisp-pred" | "crisp-reg" => Ok(Dialect::CrispReg),
            "fuzzy" => Ok(Dialect::Fuzzy),
            _ => Err(format!(
                "unknown dialect `{s}` (expected crisp-prop, crisp-pred or fuzzy)"
            )),
        }
    }
}

pub fn emit_prolog(
    program: &Program,
    rel: &ProximityRelation,
    lambda: f64,
    dialect: Dialect,
) -> String {
    match dialect {
        Dialect::CrispInline => emit_inline(program),
        Dialect::CrispReg => {
            emit_translated(&translate_program(program, &ProximityRelation::identity(), 0.0), false)
        }
        Dialect::Fuzzy => emit_translated(&translate_program(program, rel, lambda), true),
    }
}

/// Runtime support predicates the emitted text expects.
pub fn emit_prelude(dialect: Dialect) -> String {
    let mut s = String::from(
        ":- op(1150, xfx, =>).\n\
         :- dynamic ci/1, reg/3.\n\
         get_ci(I) :- (retract(ci(I0)) -> I is I0 + 1 ; I = 0), assertz(ci(I)).\n\
         chk(S1, S2) :- append(_, S1, S2).\n",
    );
    match dialect {
        Dialect::CrispInline => {
            s.push_str(
                "'=>'((H :- B), G) :- get_ci(I), hyp_index(H, I), assertz((H :- B)), call(G).\n\
                 hyp_index(H, I) :- functor(H, _, N), P is N - 1, arg(P, H, [I|_]).\n",
            );
        }
        Dialect::CrispReg => {
            s.push_str(
                "'=>'(IR, XS, G, IC, SC) :- get_ci(IC), assertz(reg(IR, XS, [IC|SC])), call(G).\n",
            );
        }
        Dialect::Fuzzy => {
            s.push_str(
                "'=>'(IR, XS, G, IC, SC) :- get_ci(IC), assertz(reg(IR, XS, [IC|SC])), call(G).\n\
                 % identity-relation, minimum t-norm instances\n\
                 :- dynamic lambda_cut/1.\n\
                 lambda_cut(0.0).\n\
                 over_lambda(B) :- lambda_cut(L), B >= L.\n\
                 degree_comp(Ds, D) :- min_list(Ds, D).\n\
                 unify([]).\n\
                 unify([(X, X, 1)|T]) :- unify(T).\n",
            );
        }
    }
    s
}

/// Split into lines with all whitespace removed and trailing periods,
/// blank lines and comment lines dropped, for golden comparisons.
pub fn normalize_listing(s: &str) -> Vec<String> {
    s.lines()
        .map(|l| l.chars().filter(|c| !c.is_whitespace()).collect::<String>())
        .map(|l| l.strip_suffix('.').map(str::to_string).unwrap_or(l))
        .filter(|l| !l.is_empty() && !l.starts_with('%'))
        .collect()
}

// Clause text is built with variable placeholders first; names are
// assigned afterwards in first-occurrence order (single-occurrence
// variables print as `_`). For standalone hypothesis clauses the head's
// trailing context/degree variables rank after the body.
const VO: char = '\u{e000}';
const VC: char = '\u{e001}';

struct Em {
    next: u32,
    out: String,
    order: Vec<u32>,
    head_len: usize,
}

impl Em {
    fn new(n_vars: u32) -> Em {
        Em { next: n_vars, out: String::new(), order: Vec::new(), head_len: 0 }
    }

    fn fresh(&mut self) -> u32 {
        let v = self.next;
        self.next += 1;
        v
    }

    fn lit(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn var(&mut self, v: u32) {
        self.order.push(v);
        let _ = write!(self.out, "{VO}{v}{VC}");
    }

    fn head_done(&mut self) {
        self.head_len = self.order.len();
    }

    fn ident(&mut self, s: &str) {
        let plain = s
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_lowercase())
            && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if plain {
            self.out.push_str(s);
        } else {
            let _ = write!(self.out, "'{s}'");
        }
    }

    /// Degrees and grades: integral values print without a decimal part.
    fn num(&mut self, d: f64) {
        if d == d.trunc() && d.is_finite() && d.abs() < 1e15 {
            let _ = write!(self.out, "{}", d as i64);
        } else {
            let _ = write!(self.out, "{d}");
        }
    }

    fn term(&mut self, t: &Term) {
        match t {
            Term::Var(v) => self.var(*v),
            Term::Const(s) => self.ident(s.name()),
            Term::Num(Num::Int(i)) => {
                let _ = write!(self.out, "{i}");
            }
            Term::Num(Num::Float(f)) => {
                if *f == f.trunc() && f.is_finite() {
                    let _ = write!(self.out, "{f:.1}");
                } else {
                    let _ = write!(self.out, "{f}");
                }
            }
            Term::Comp(f, args) if f.name() == "." && args.len() == 2 => {
                self.lit("[");
                self.term(&args[0]);
                let mut cur = &args[1];
                loop {
                    match cur {
                        Term::Comp(g, a2) if g.name() == "." && a2.len() == 2 => {
                            self.lit(", ");
                            self.term(&a2[0]);
                            cur = &a2[1];
                        }
                        Term::Const(s) if s.name() == "[]" => break,
                        other => {
                            self.lit("|");
                            self.term(other);
                            break;
                        }
                    }
                }
                self.lit("]");
            }
            Term::Comp(f, args)
                if args.len() == 2 && matches!(f.name(), "+" | "-" | "*" | "//") =>
            {
                self.lit("(");
                self.term(&args[0]);
                self.lit(f.name());
                self.term(&args[1]);
                self.lit(")");
            }
            Term::Comp(f, args) if args.len() == 1 && f.name() == "-" => {
                self.lit("-(");
                self.term(&args[0]);
                self.lit(")");
            }
            Term::Comp(f, args) => {
                self.ident(f.name());
                self.lit("(");
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.lit(", ");
                    }
                    self.term(a);
                }
                self.lit(")");
            }
            Term::Ctx(c) => {
                let _ = write!(self.out, "{c}");
            }
        }
    }

    fn builtin(&mut self, a: &Atom) {
        match (a.pred.name(), a.args.len()) {
            (op @ ("=" | "\\=" | "is" | "<" | ">" | "=<" | ">="), 2) => {
                self.term(&a.args[0]);
                let _ = write!(self.out, " {op} ");
                self.term(&a.args[1]);
            }
            _ => {
                self.ident(a.pred.name());
                if !a.args.is_empty() {
                    self.lit("(");
                    for (i, t) in a.args.iter().enumerate() {
                        if i > 0 {
                            self.lit(", ");
                        }
                        self.term(t);
                    }
                    self.lit(")");
                }
            }
        }
    }

    fn finish(self, deferred: &[u32]) -> String {
        let mut naming: Vec<u32> = Vec::new();
        let mut moved: Vec<u32> = Vec::new();
        for (i, &v) in self.order.iter().enumerate() {
            if i < self.head_len && deferred.contains(&v) {
                moved.push(v);
            } else {
                naming.push(v);
            }
        }
        naming.extend(moved);
        let mut counts: HashMap<u32, usize> = HashMap::new();
        for &v in &naming {
            *counts.entry(v).or_insert(0) += 1;
        }
        let mut names: HashMap<u32, String> = HashMap::new();
        let mut next = 0usize;
        for &v in &naming {
            names.entry(v).or_insert_with(|| {
                if counts[&v] > 1 {
                    let n = var_letter(next);
                    next += 1;
                    n
                } else {
                    "_".to_string()
                }
            });
        }
        let mut res = String::new();
        let mut it = self.out.chars();
        while let Some(c) = it.next() {
            if c == VO {
                let mut digits = String::new();
                for d in it.by_ref() {
                    if d == VC {
                        break;
                    }
                    digits.push(d);
                }
                res.push_str(&names[&digits.parse::<u32>().unwrap()]);
            } else {
                res.push(c);
            }
        }
        res
    }
}

fn var_letter(i: usize) -> String {
    let c = (b'A' + (i % 26) as u8) as char;
    if i < 26 {
        c.to_string()
    } else {
        format!("{c}{}", i / 26)
    }
}

/// A context expression: index variables newest first over a base.
#[derive(Clone)]
struct ECtx {
    ixs: Vec<u32>,
    base: Option<u32>,
}

impl ECtx {
    fn base(v: u32) -> ECtx {
        ECtx { ixs: Vec::new(), base: Some(v) }
    }

    fn push(&self, i: u32) -> ECtx {
        let mut ixs = vec![i];
        ixs.extend(self.ixs.iter().copied());
        ECtx { ixs, base: self.base }
    }
}

fn push_ctx(em: &mut Em, c: &ECtx) {
    if c.ixs.is_empty() {
        match c.base {
            Some(v) => em.var(v),
            None => em.lit("[]"),
        }
    } else {
        em.lit("[");
        for (k, &i) in c.ixs.iter().enumerate() {
            if k > 0 {
                em.lit(", ");
            }
            em.var(i);
        }
        if let Some(v) = c.base {
            em.lit("|");
            em.var(v);
        }
        em.lit("]");
    }
}

// ---- inline dialect

fn flatten<'a>(g: &'a Goal, out: &mut Vec<&'a Goal>) {
    match g {
        Goal::True => {}
        Goal::Conj(l, r) => {
            flatten(l, out);
            flatten(r, out);
        }
        other => out.push(other),
    }
}

fn emit_inline(program: &Program) -> String {
    let mut out = String::new();
    for c in &program.clauses {
        let mut em = Em::new(c.n_vars);
        let s = em.fresh();
        em.ident(c.rule.head.pred.name());
        em.lit("(");
        for a in &c.rule.head.args {
            em.term(a);
            em.lit(", ");
        }
        em.lit("[], ");
        em.var(s);
        em.lit(")");
        em.head_done();
        let mut leaves = Vec::new();
        flatten(&c.rule.body, &mut leaves);
        if !leaves.is_empty() {
            em.lit(" :- ");
            inline_items(&mut em, &leaves, &ECtx::base(s));
        }
        em.lit(".");
        out.push_str(&em.finish(&[]));
        out.push('\n');
    }
    out
}

fn inline_goal(em: &mut Em, g: &Goal, ctx: &ECtx) {
    let mut leaves = Vec::new();
    flatten(g, &mut leaves);
    inline_items(em, &leaves, ctx);
}

fn inline_items(em: &mut Em, leaves: &[&Goal], ctx: &ECtx) {
    if leaves.is_empty() {
        em.lit("true");
        return;
    }
    let wrap = leaves.len() > 1;
    for (i, g) in leaves.iter().enumerate() {
        if i > 0 {
            em.lit(", ");
        }
        inline_leaf(em, g, ctx, wrap);
    }
}

fn inline_leaf(em: &mut Em, g: &Goal, ctx: &ECtx, wrap: bool) {
    match g {
        Goal::Atom(a) => {
            em.ident(a.pred.name());
            em.lit("(");
            for t in &a.args {
                em.term(t);
                em.lit(", ");
            }
            let c = em.fresh();
            em.var(c);
            em.lit(", ");
            push_ctx(em, ctx);
            em.lit(")");
        }
        Goal::Builtin(a) => em.builtin(a),
        Goal::Disj(l, r) => {
            em.lit("(");
            inline_goal(em, l, ctx);
            em.lit(" ; ");
            inline_goal(em, r, ctx);
            em.lit(")");
        }
        Goal::Implication(h, g2) => {
            if wrap {
                em.lit("(");
            }
            let i = em.fresh();
            let hctx = ctx.push(i);
            let s2 = em.fresh();
            em.lit("(");
            em.ident(h.head.pred.name());
            em.lit("(");
            for t in &h.head.args {
                em.term(t);
                em.lit(", ");
            }
            push_ctx(em, &hctx);
            em.lit(", ");
            em.var(s2);
            em.lit(") :- chk(");
            push_ctx(em, &hctx);
            em.lit(", ");
            em.var(s2);
            em.lit(")");
            let mut hl = Vec::new();
            flatten(&h.body, &mut hl);
            if !hl.is_empty() {
                em.lit(", ");
                inline_items(em, &hl, &ECtx::base(s2));
            }
            em.lit(") => ");
            let mut cl = Vec::new();
            flatten(g2, &mut cl);
            if cl.len() == 1 {
                inline_leaf(em, cl[0], &hctx, false);
            } else {
                em.lit("(");
                inline_items(em, &cl, &hctx);
                em.lit(")");
            }
            if wrap {
                em.lit(")");
            }
        }
        Goal::True | Goal::Conj(..) => unreachable!(),
    }
}

// ---- translated dialects (reg and fuzzy)

fn tflatten<'a>(g: &'a TGoal, out: &mut Vec<&'a TGoal>) {
    match g {
        TGoal::True => {}
        TGoal::Conj(l, r) => {
            tflatten(l, out);
            tflatten(r, out);
        }
        other => out.push(other),
    }
}

fn emit_translated(tp: &TranslatedProgram, fuzzy: bool) -> String {
    let mut out = String::new();
    let (hyps, sources): (Vec<_>, Vec<_>) =
        tp.clauses.iter().partition(|c| c.is_hypothesis());
    for tc in sources.iter().chain(&hyps) {
        let line = if fuzzy {
            emit_fuzzy_clause(tc)
        } else {
            emit_reg_clause(tc)
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn emit_head(em: &mut Em, tc: &TClause, linear: Option<&[u32]>, s: u32, d: Option<u32>) {
    em.ident(tc.pred.name());
    em.lit("(");
    match linear {
        Some(xs) => {
            for &x in xs {
                em.var(x);
                em.lit(", ");
            }
        }
        None => {
            for a in &tc.head_args {
                em.term(a);
                em.lit(", ");
            }
        }
    }
    em.lit("[");
    for (i, &v) in tc.shared_vars.iter().enumerate() {
        if i > 0 {
            em.lit(", ");
        }
        em.var(v);
    }
    em.lit("], ");
    let _ = write!(em.out, "{}", tc.rule_id);
    em.lit(", ");
    if tc.is_hypothesis() {
        let a = em.fresh();
        let b = em.fresh();
        em.lit("[");
        em.var(a);
        em.lit("|");
        em.var(b);
        em.lit("]");
    } else {
        em.lit("[]");
    }
    em.lit(", ");
    em.var(s);
    if let Some(d) = d {
        em.lit(", ");
        em.var(d);
    }
    em.lit(")");
    em.head_done();
}

fn emit_reg_guard(em: &mut Em, tc: &TClause, s: u32, first: &mut bool) {
    if let Some(reg_id) = tc.reg_id {
        let cr = em.fresh();
        sep(em, first);
        em.lit("reg(");
        let _ = write!(em.out, "{reg_id}");
        em.lit(", [");
        for (i, &v) in tc.shared_vars.iter().enumerate() {
            if i > 0 {
                em.lit(", ");
            }
            em.var(v);
        }
        em.lit("], ");
        em.var(cr);
        em.lit(")");
        sep(em, first);
        em.lit("chk(");
        em.var(cr);
        em.lit(", ");
        em.var(s);
        em.lit(")");
    }
}

fn sep(em: &mut Em, first: &mut bool) {
    if *first {
        em.lit(" :- ");
        *first = false;
    } else {
        em.lit(", ");
    }
}

fn emit_reg_clause(tc: &TClause) -> String {
    let mut em = Em::new(tc.n_vars);
    let s = em.fresh();
    emit_head(&mut em, tc, None, s, None);
    let mut first = true;
    emit_reg_guard(&mut em, tc, s, &mut first);
    let mut leaves = Vec::new();
    tflatten(&tc.body, &mut leaves);
    let total = leaves.len() + if tc.is_hypothesis() { 2 } else { 0 };
    for g in &leaves {
        sep(&mut em, &mut first);
        reg_leaf(&mut em, g, &ECtx::base(s), total > 1);
    }
    em.lit(".");
    let deferred = if tc.is_hypothesis() { vec![s] } else { vec![] };
    em.finish(&deferred)
}

fn reg_goal(em: &mut Em, g: &TGoal, ctx: &ECtx) {
    let mut leaves = Vec::new();
    tflatten(g, &mut leaves);
    if leaves.is_empty() {
        em.lit("true");
    } else if leaves.len() == 1 {
        reg_leaf(em, leaves[0], ctx, false);
    } else {
        em.lit("(");
        for (i, g2) in leaves.iter().enumerate() {
            if i > 0 {
                em.lit(", ");
            }
            reg_leaf(em, g2, ctx, true);
        }
        em.lit(")");
    }
}

fn reg_leaf(em: &mut Em, g: &TGoal, ctx: &ECtx, wrap: bool) {
    match g {
        TGoal::Call(a) => {
            em.ident(a.pred.name());
            em.lit("(");
            for t in &a.args {
                em.term(t);
                em.lit(", ");
            }
            for _ in 0..3 {
                let v = em.fresh();
                em.var(v);
                em.lit(", ");
            }
            push_ctx(em, ctx);
            em.lit(")");
        }
        TGoal::Builtin(a) => em.builtin(a),
        TGoal::Disj(l, r) => {
            em.lit("(");
            reg_goal(em, l, ctx);
            em.lit(" ; ");
            reg_goal(em, r, ctx);
            em.lit(")");
        }
        TGoal::Impl { reg_id, shared, inner } => {
            if wrap {
                em.lit("(");
            }
            em.lit("=>(");
            let _ = write!(em.out, "{reg_id}");
            em.lit(", [");
            for (i, t) in shared.iter().enumerate() {
                if i > 0 {
                    em.lit(", ");
                }
                em.term(t);
            }
            em.lit("], ");
            let ic = em.fresh();
            reg_goal(em, inner, &ctx.push(ic));
            em.lit(", ");
            em.var(ic);
            em.lit(", ");
            push_ctx(em, ctx);
            em.lit(")");
            if wrap {
                em.lit(")");
            }
        }
        TGoal::True | TGoal::Conj(..) => unreachable!(),
    }
}

fn emit_fuzzy_clause(tc: &TClause) -> String {
    let mut em = Em::new(tc.n_vars);
    let s = em.fresh();
    let d = em.fresh();
    let xs: Vec<u32> = (0..tc.head_args.len()).map(|_| em.fresh()).collect();
    emit_head(&mut em, tc, Some(&xs), s, Some(d));
    em.lit(" :- over_lambda(");
    em.num(if tc.is_hypothesis() { tc.grade } else { tc.beta });
    em.lit(")");
    let mut first = false;
    emit_reg_guard(&mut em, tc, s, &mut first);
    let mut arg_degs = Vec::new();
    if !xs.is_empty() {
        em.lit(", unify([");
        for (i, &x) in xs.iter().enumerate() {
            if i > 0 {
                em.lit(", ");
            }
            em.lit("(");
            em.var(x);
            em.lit(", ");
            em.term(&tc.head_args[i]);
            em.lit(", ");
            let dv = em.fresh();
            arg_degs.push(dv);
            em.var(dv);
            em.lit(")");
        }
        em.lit("])");
    }
    let mut goal_degs = Vec::new();
    let mut leaves = Vec::new();
    tflatten(&tc.body, &mut leaves);
    for g in &leaves {
        em.lit(", ");
        fuzzy_leaf(&mut em, g, &ECtx::base(s), &mut goal_degs);
    }
    em.lit(", degree_comp([");
    em.num(tc.grade);
    em.lit(", ");
    em.num(tc.beta);
    for dv in arg_degs.iter().chain(&goal_degs) {
        em.lit(", ");
        em.var(*dv);
    }
    em.lit("], ");
    em.var(d);
    em.lit(").");
    em.finish(&[s, d])
}

fn fuzzy_goal(em: &mut Em, g: &TGoal, ctx: &ECtx, degs: &mut Vec<u32>) {
    let mut leaves = Vec::new();
    tflatten(g, &mut leaves);
    if leaves.is_empty() {
        em.lit("true");
    } else {
        if leaves.len() > 1 {
            em.lit("(");
        }
        for (i, g2) in leaves.iter().enumerate() {
            if i > 0 {
                em.lit(", ");
            }
            fuzzy_leaf(em, g2, ctx, degs);
        }
        if leaves.len() > 1 {
            em.lit(")");
        }
    }
}

fn fuzzy_leaf(em: &mut Em, g: &TGoal, ctx: &ECtx, degs: &mut Vec<u32>) {
    match g {
        TGoal::Call(a) => {
            em.ident(a.pred.name());
            em.lit("(");
            for t in &a.args {
                em.term(t);
                em.lit(", ");
            }
            for _ in 0..3 {
                let v = em.fresh();
                em.var(v);
                em.lit(", ");
            }
            push_ctx(em, ctx);
            em.lit(", ");
            let dv = em.fresh();
            degs.push(dv);
            em.var(dv);
            em.lit(")");
        }
        TGoal::Builtin(a) => em.builtin(a),
        TGoal::Disj(l, r) => {
            em.lit("(");
            fuzzy_goal(em, l, ctx, degs);
            em.lit(" ; ");
            fuzzy_goal(em, r, ctx, degs);
            em.lit(")");
        }
        TGoal::Impl { reg_id, shared, inner } => {
            em.lit("(=>(");
            let _ = write!(em.out, "{reg_id}");
            em.lit(", [");
            for (i, t) in shared.iter().enumerate() {
                if i > 0 {
                    em.lit(", ");
                }
                em.term(t);
            }
            em.lit("], ");
            let ic = em.fresh();
            fuzzy_goal(em, inner, &ctx.push(ic), degs);
            em.lit(", ");
            em.var(ic);
            em.lit(", ");
            push_ctx(em, ctx);
            em.lit("))");
        }
        TGoal::True | TGoal::Conj(..) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_goal, parse_program};
    use crate::unify::{build_relation, TNorm};

    fn norm(s: &str) -> Vec<String> {
        normalize_listing(s)
    }

    fn emit(src: &str, lambda: f64, dialect: Dialect) -> String {
        let p = parse_program(src).unwrap();
        let rel = build_relation(&p.proximity, false, TNorm::Min).unwrap();
        emit_prolog(&p, &rel, lambda, dialect)
    }

    #[test]
    fn inline_listing_propositional() {
        let out = emit("p :- q => q.", 0.0, Dialect::CrispInline);
        assert_eq!(
            norm(&out),
            norm("p([], A) :- (q([B|A], C) :- chk([B|A], C)) => q(_, [B|A]).")
        );
    }

    #[test]
    fn inline_listing_predicates() {
        let out = emit(
            "p(X) :- g(X), (q(X) => r). g(1). r :- q(2).",
            0.0,
            Dialect::CrispInline,
        );
        let expected = "\
            p(A,[],B) :- g(A,_,B), ((q(A,[C|B],D):-chk([C|B],D)) => r(_,[C|B])).\n\
            g(1,[],_).\n\
            r([],A) :- q(2,_,A).";
        assert_eq!(norm(&out), norm(expected));
    }

    #[test]
    fn reg_listing() {
        let out = emit(
            "p(X) :- g(X), (q(X) => r). g(1). r :- q(2).",
            0.0,
            Dialect::CrispReg,
        );
        let expected = "\
            p(A,[],1,[],B) :- g(A, _, _, _, B), (=>(0,[A], r(_, _, _, [C|B]),C, B)).\n\
            g(1,[],2,[],_).\n\
            r([],3,[],A) :- q(2, _, _, _, A).\n\
            q(A,[A],0,[_|_],C) :- reg(0, [A], B), chk(B, C).";
        assert_eq!(norm(&out), norm(expected));
    }

    #[test]
    fn fuzzy_translation_expands_entries() {
        let src = "p(X) :- g(X), (q(X) => r) with 0.8. g(1) with 0.7. r :- q(2) with 0.9. p ~ s = 0.6.";
        let p = parse_program(src).unwrap();
        let rel = build_relation(&p.proximity, false, TNorm::Min).unwrap();
        let tp = translate_program(&p, &rel, 0.5);
        let summary: Vec<(&str, u32, Option<u32>, f64)> = tp
            .clauses
            .iter()
            .map(|c| (c.pred.name(), c.rule_id, c.reg_id, c.beta))
            .collect();
        assert_eq!(
            summary,
            vec![
                ("q", 0, Some(0), 1.0),
                ("p", 1, None, 1.0),
                ("s", 2, None, 0.6),
                ("g", 3, None, 1.0),
                ("r", 4, None, 1.0),
            ]
        );
        // under a higher cut the s entry is dropped
        let tp2 = translate_program(&p, &rel, 0.7);
        assert_eq!(tp2.clauses.len(), 4);
        assert!(tp2.clauses.iter().all(|c| c.pred.name() != "s"));

        let out = emit_translated(&tp, true);
        assert!(out.contains("over_lambda(0.6)"), "{out}");
        assert!(out.contains("degree_comp([0.8, 0.6,"), "{out}");
        assert!(out.contains("degree_comp([0.8, 1,"), "{out}");
        assert!(out.contains("reg(0, ["), "{out}");
        // deterministic output
        assert_eq!(out, emit_translated(&translate_program(&p, &rel, 0.5), true));
    }

    #[test]
    fn fuzzy_fact_entry_shape() {
        let out = emit("g(1) with 0.7.", 0.0, Dialect::Fuzzy);
        assert_eq!(
            norm(&out),
            norm("g(A, [], 0, [], _, C) :- over_lambda(1), unify([(A, 1, B)]), degree_comp([0.7, 1, B], C).")
        );
    }

    #[test]
    fn shared_vars_cases() {
        let p = parse_program("p(X) :- (q(X, Y, Z) => r(Y)).").unwrap();
        let rule = &p.clauses[0].rule;
        let Goal::Implication(h, _) = &rule.body else { panic!() };
        // X occurs in the head, Y in the consequent, Z only in the
        // hypothesis
        let sv = shared_vars(h, rule);
        let mut order = Vec::new();
        h.vars_into(&mut order);
        assert_eq!(sv, vec![order[0], order[1]]);

        let p2 = parse_program("p :- (q(Z) => r).").unwrap();
        let Goal::Implication(h2, _) = &p2.clauses[0].rule.body else { panic!() };
        assert!(shared_vars(h2, &p2.clauses[0].rule).is_empty());
    }

    #[test]
    fn nested_implications_number_inside_out() {
        let p = parse_program("p :- q => r => s.").unwrap();
        let tp = translate_program(&p, &ProximityRelation::identity(), 0.0);
        let ids: Vec<(&str, u32, Option<u32>)> = tp
            .clauses
            .iter()
            .map(|c| (c.pred.name(), c.rule_id, c.reg_id))
            .collect();
        assert_eq!(
            ids,
            vec![("r", 0, Some(0)), ("q", 1, Some(1)), ("p", 2, None)]
        );
        let body = &tp.clauses[2].body;
        let TGoal::Impl { reg_id: 1, inner, .. } = body else {
            panic!("outer: {body:?}")
        };
        let TGoal::Impl { reg_id: 0, inner: inner2, .. } = inner.as_ref() else {
            panic!("inner: {inner:?}")
        };
        assert!(matches!(inner2.as_ref(), TGoal::Call(a) if a.pred.name() == "s"));
    }

    #[test]
    fn query_translation_continues_ids() {
        let p = parse_program("p(1).").unwrap();
        let tp = translate_program(&p, &ProximityRelation::identity(), 0.0);
        assert_eq!(tp.next_rule_id, 1);
        let q = parse_goal("(q(X) => r(X)), p(X)").unwrap();
        let tq = translate_query(tp.next_rule_id, &ProximityRelation::identity(), 0.0, &q);
        assert_eq!(tq.extra.len(), 1);
        let hc = &tq.extra[0];
        assert_eq!(hc.pred.name(), "q");
        assert_eq!(hc.rule_id, 1);
        assert_eq!(hc.reg_id, Some(1));
        assert_eq!(hc.shared_vars.len(), 1);
        let TGoal::Conj(l, _) = &tq.goal else { panic!() };
        assert!(matches!(l.as_ref(), TGoal::Impl { reg_id: 1, .. }));
    }

    #[test]
    fn rule_ids_unique_and_dense() {
        let src = "p(X) :- (a => b), (c(X) => d). q :- (e => (f => g)). a ~ c = 0.9.";
        let p = parse_program(src).unwrap();
        let rel = build_relation(&p.proximity, false, TNorm::Min).unwrap();
        let tp = translate_program(&p, &rel, 0.0);
        let mut ids: Vec<u32> = tp.clauses.iter().map(|c| c.rule_id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), tp.clauses.len());
        assert_eq!(*ids.last().unwrap() as usize, tp.clauses.len() - 1);
        assert_eq!(tp.next_rule_id as usize, tp.clauses.len());
    }

    #[test]
    fn candidates_index_matches_order() {
        let p = parse_program("p(1). q. p(2). p ~ q = 0.5.").unwrap();
        let rel = build_relation(&p.proximity, false, TNorm::Min).unwrap();
        let tp = translate_program(&p, &rel, 0.0);
        let ps: Vec<u32> = tp
            .candidates(crate::sym::Sym::new("p"), 1)
            .map(|c| c.rule_id)
            .collect();
        // both p clauses, in program order; the q expansion entry for p
        // has arity 0 and does not show up here
        assert_eq!(ps.len(), 2);
        assert!(ps[0] < ps[1]);
        let qs: Vec<&str> = tp
            .candidates(crate::sym::Sym::new("q"), 0)
            .map(|c| c.pred.name())
            .collect();
        assert_eq!(qs, vec!["q"]);
    }
}
