use crate::context::ContextId;
use crate::sym::Sym;
use crate::unify::TNorm;
use std::cmp::Ordering;
use std::sync::Arc;

/// Clause-local (or, inside a solver, arena-global) variable index.
pub type VarId = u32;

/// Integer or floating point number. The two kinds never unify with each
/// other.
#[derive(Debug, Clone, Copy)]
pub enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    pub fn as_f64(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Float(f) => f,
        }
    }
}

impl PartialEq for Num {
    fn eq(&self, other: &Num) -> bool {
        match (self, other) {
            (Num::Int(a), Num::Int(b)) => a == b,
            (Num::Float(a), Num::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}
impl Eq for Num {}

impl std::hash::Hash for Num {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            Num::Int(i) => (0u8, *i).hash(state),
            Num::Float(f) => (1u8, f.to_bits()).hash(state),
        }
    }
}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Num) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Num {
    fn cmp(&self, other: &Num) -> Ordering {
        match (self, other) {
            (Num::Int(a), Num::Int(b)) => a.cmp(b),
            (Num::Float(a), Num::Float(b)) => a.to_bits().cmp(&b.to_bits()),
            (Num::Int(_), Num::Float(_)) => Ordering::Less,
            (Num::Float(_), Num::Int(_)) => Ordering::Greater,
        }
    }
}

/// First-order terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(VarId),
    Const(Sym),
    Num(Num),
    Comp(Sym, Vec<Term>),
    /// Run-time context identifier. Never produced by the parser; flows
    /// through the extra arguments of translated clauses.
    Ctx(ContextId),
}

impl Term {
    pub fn int(i: i64) -> Term {
        Term::Num(Num::Int(i))
    }

    pub fn float(f: f64) -> Term {
        Term::Num(Num::Float(f))
    }

    pub fn comp(name: &str, args: Vec<Term>) -> Term {
        Term::Comp(Sym::new(name), args)
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(Sym::new(name))
    }

    /// Collect variables in first-occurrence order.
    pub fn vars_into(&self, out: &mut Vec<VarId>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::Comp(_, args) => {
                for a in args {
                    a.vars_into(out);
                }
            }
            _ => {}
        }
    }
}

/// An atomic formula `p(t1, ..., tn)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub pred: Sym,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom {
            pred: Sym::new(pred),
            args,
        }
    }

    pub fn arity(&self) -> u16 {
        self.args.len() as u16
    }

    pub fn key(&self) -> (Sym, u16) {
        (self.pred, self.arity())
    }

    pub fn vars_into(&self, out: &mut Vec<VarId>) {
        for a in &self.args {
            a.vars_into(out);
        }
    }
}

/// Goal formulas: rule bodies and queries.
#[derive(Debug, Clone, PartialEq)]
pub enum Goal {
    True,
    Atom(Atom),
    /// A call to one of the fixed builtins (`true`, `fail`, `=`, `\=`,
    /// `is`, `<`, `>`, `=<`, `>=`). Classified at parse time.
    Builtin(Atom),
    Conj(Arc<Goal>, Arc<Goal>),
    Disj(Arc<Goal>, Arc<Goal>),
    /// `hypothesis => consequent`.
    Implication(Arc<Rule>, Arc<Goal>),
}

impl Goal {
    pub fn conj(l: Goal, r: Goal) -> Goal {
        Goal::Conj(Arc::new(l), Arc::new(r))
    }

    pub fn disj(l: Goal, r: Goal) -> Goal {
        Goal::Disj(Arc::new(l), Arc::new(r))
    }

    pub fn implication(hyp: Rule, conseq: Goal) -> Goal {
        Goal::Implication(Arc::new(hyp), Arc::new(conseq))
    }

    pub fn vars_into(&self, out: &mut Vec<VarId>) {
        match self {
            Goal::True => {}
            Goal::Atom(a) | Goal::Builtin(a) => a.vars_into(out),
            Goal::Conj(l, r) | Goal::Disj(l, r) => {
                l.vars_into(out);
                r.vars_into(out);
            }
            Goal::Implication(h, g) => {
                h.vars_into(out);
                g.vars_into(out);
            }
        }
    }
}

/// A graded rule `head :- body with grade`. A fact is a rule whose body
/// is `True`; an ungraded rule has grade 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub head: Atom,
    pub body: Goal,
    pub grade: f64,
}

impl Rule {
    pub fn fact(head: Atom) -> Rule {
        Rule {
            head,
            body: Goal::True,
            grade: 1.0,
        }
    }

    pub fn vars_into(&self, out: &mut Vec<VarId>) {
        self.head.vars_into(out);
        self.body.vars_into(out);
    }
}

/// A top-level program rule together with its variable table. Variable
/// ids in the rule index into `var_names`; `None` entries come from `_`.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub rule: Rule,
    pub n_vars: u32,
    pub var_names: Vec<Option<Sym>>,
}

/// A parsed query goal with its variable table.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub goal: Goal,
    pub n_vars: u32,
    pub var_names: Vec<Option<Sym>>,
}

/// Per-file directive values; `None` means "not set, use the session
/// default".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Directives {
    pub lambda_cut: Option<f64>,
    pub t_norm: Option<TNorm>,
    pub transitivity: Option<bool>,
}

/// A parsed program: rules in source order, proximity equations and
/// directives.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Program {
    pub clauses: Vec<Clause>,
    pub proximity: Vec<(Sym, Sym, f64)>,
    pub directives: Directives,
}

impl Program {
    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty() && self.proximity.is_empty()
    }
}

/// The fixed builtin table. `true` is represented as [`Goal::True`], so it
/// is special-cased by the parser rather than listed here.
pub fn is_builtin(pred: Sym, arity: u16) -> bool {
    let name = pred.name();
    matches!(
        (name, arity),
        ("true", 0)
            | ("fail", 0)
            | ("=", 2)
            | ("\\=", 2)
            | ("is", 2)
            | ("<", 2)
            | (">", 2)
            | ("=<", 2)
            | (">=", 2)
    )
}
