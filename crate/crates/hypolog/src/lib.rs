//! A fuzzy logic-programming engine with embedded implications.
//!
//! Programs are Horn-like rules whose bodies may contain *embedded
//! implications* `R => G`: prove `G` after temporarily assuming the rule
//! `R`. Assumptions are scoped to the sub-proof of the consequent and may
//! be reused there any number of times. On top of that, predicate,
//! function and constant symbols may be related by a *proximity relation*,
//! so resolution uses weak (similarity-based) unification and every answer
//! carries an approximation degree composed with a t-norm and pruned by a
//! lambda-cut.
//!
//! Two independent solvers are provided and cross-validated:
//!
//! * [`meta`] — a reference interpreter that executes the hypothetical
//!   transition systems directly over `(goal, program, substitution,
//!   degree)` states, with two hypothesis-store strategies;
//! * [`compiled`] — a solver for programs compiled by [`translate`] into
//!   clauses with explicit context identifiers, shared-variable lists and
//!   registration calls, plus expanded clauses per proximity entry.

pub mod answer;
pub mod bench;
pub mod builtins;
pub mod compiled;
pub mod context;
pub mod harness;
pub mod meta;
pub mod sym;
pub mod syntax;
pub mod translate;
pub mod unify;

pub use answer::{Answer, SolveStats};
pub use sym::Sym;
pub use syntax::{Atom, Clause, Goal, Num, Program, Query, Rule, Term};
pub use unify::{ProximityRelation, TNorm};

use std::ops::ControlFlow;

/// Shared solver configuration for both engines.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub lambda: f64,
    pub tnorm: TNorm,
    pub occurs_check: bool,
    /// Hypothesis-store strategy for the meta engine (ignored by the
    /// compiled engine).
    pub strategy: meta::Strategy,
    /// Prune any branch deeper than this many resolution/assumption
    /// steps. `None` means unbounded.
    pub depth_budget: Option<u64>,
    /// Abort the whole solve after this many resolution steps. Used by
    /// the randomized harness to skip runaway searches; `None` in normal
    /// operation.
    pub step_limit: Option<u64>,
    /// Drop registrations again when the implication that created them is
    /// exhausted. Purely a memory optimization; answers are unchanged.
    pub trim_registrations: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            lambda: 0.0,
            tnorm: TNorm::Min,
            occurs_check: false,
            strategy: meta::Strategy::ListA,
            depth_budget: None,
            step_limit: None,
            trim_registrations: false,
        }
    }
}

/// Errors surfaced while solving a query (distinct from plain failure).
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum EngineError {
    #[error("arithmetic error: {0}")]
    Arith(String),
    #[error("unknown builtin {0}")]
    UnknownBuiltin(String),
}

/// Continue or stop the enumeration of answers.
pub type Flow = ControlFlow<()>;

/// Which solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    MetaA,
    MetaB,
    Compiled,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::MetaA, Engine::MetaB, Engine::Compiled];

    pub fn name(self) -> &'static str {
        match self {
            Engine::MetaA => "meta-a",
            Engine::MetaB => "meta-b",
            Engine::Compiled => "compiled",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "meta-a" => Ok(Engine::MetaA),
            "meta-b" => Ok(Engine::MetaB),
            "compiled" => Ok(Engine::Compiled),
            other => Err(format!("unknown engine `{other}` (meta-a, meta-b, compiled)")),
        }
    }
}

/// Run `engine` on `query`, passing every answer to `sink` until it asks
/// to stop.
pub fn solve(
    engine: Engine,
    program: &Program,
    relation: &ProximityRelation,
    config: &SolveConfig,
    query: &Query,
    sink: &mut dyn FnMut(Answer) -> Flow,
) -> Result<SolveStats, EngineError> {
    match engine {
        Engine::MetaA | Engine::MetaB => {
            let mut cfg = config.clone();
            cfg.strategy = if engine == Engine::MetaA {
                meta::Strategy::ListA
            } else {
                meta::Strategy::TreeB
            };
            meta::solve_meta(program, relation, &cfg, query, &mut |a| sink(a))
        }
        Engine::Compiled => {
            let translated = translate::translate_program(program, relation, config.lambda);
            compiled::solve_compiled(&translated, relation, config, query, sink)
        }
    }
}

/// Collect up to `limit` answers (all of them if `None`).
pub fn solve_collect(
    engine: Engine,
    program: &Program,
    relation: &ProximityRelation,
    config: &SolveConfig,
    query: &Query,
    limit: Option<usize>,
) -> Result<(Vec<Answer>, SolveStats), EngineError> {
    let mut answers = Vec::new();
    let stats = solve(engine, program, relation, config, query, &mut |a| {
        answers.push(a);
        match limit {
            Some(n) if answers.len() >= n => ControlFlow::Break(()),
            _ => ControlFlow::Continue(()),
        }
    })?;
    Ok((answers, stats))
}
