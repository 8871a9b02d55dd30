//! Randomized program generation and cross-engine checking.
//!
//! Programs are generated as source text from a seeded RNG, parsed back
//! and solved by every engine under identical budgets. The engines must
//! agree on the answer multiset; a disagreement is shrunk by deleting
//! rules and reported together with the seed and a loadable program.

use crate::answer::{compare_answer_multisets, degrees_eq, Answer};
use crate::syntax::{parse_program, program_to_string};
use crate::unify::build_relation;
use crate::{
    solve_collect, Engine, EngineError, Goal, Program, ProximityRelation, Query, SolveConfig,
    TNorm,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

/// Bounds for the program generator. Generation is a pure function of
/// the spec, so the same seed always yields the same case.
#[derive(Debug, Clone)]
pub struct GenSpec {
    pub max_rules: usize,
    pub max_body_len: usize,
    /// Maximum nesting depth of implications inside consequents.
    pub max_nesting: usize,
    pub max_arity: usize,
    /// Number of distinct constants available to the generator.
    pub const_pool: usize,
    pub proximity_entries: usize,
    /// Clause grades and proximity degrees are drawn uniformly from this
    /// pool. Must not contain 0.
    pub grades: Vec<f64>,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            max_rules: 8,
            max_body_len: 3,
            max_nesting: 3,
            max_arity: 2,
            const_pool: 3,
            proximity_entries: 4,
            grades: vec![0.25, 0.5, 0.75, 1.0, 1.0],
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn with_seed(&self, seed: u64) -> GenSpec {
        GenSpec { seed, ..self.clone() }
    }
}

/// A generated test case: the program, a query on one of its predicates
/// and the solver settings drawn for it.
#[derive(Debug, Clone)]
pub struct GenCase {
    pub program: Program,
    pub query: Query,
    pub lambda: f64,
    pub tnorm: TNorm,
    pub goal_src: String,
}

impl GenCase {
    /// Loadable source text of the program (directives included).
    pub fn source(&self) -> String {
        program_to_string(&self.program)
    }

    pub fn relation(&self) -> Result<ProximityRelation, String> {
        build_relation(
            &self.program.proximity,
            self.program.directives.transitivity.unwrap_or(false),
            self.tnorm,
        )
        .map_err(|e| e.to_string())
    }

    pub fn config(&self, depth_budget: u64, step_limit: u64) -> SolveConfig {
        SolveConfig {
            lambda: self.lambda,
            tnorm: self.tnorm,
            depth_budget: Some(depth_budget),
            step_limit: Some(step_limit),
            ..SolveConfig::default()
        }
    }
}

const PRED_NAMES: [&str; 4] = ["p", "q", "r", "s"];
const CONST_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const VAR_NAMES: [&str; 3] = ["X", "Y", "Z"];

struct Gen<'a> {
    spec: &'a GenSpec,
    rng: ChaCha8Rng,
    /// Predicate pool with a fixed arity per predicate.
    preds: Vec<(&'static str, usize)>,
}

impl<'a> Gen<'a> {
    fn new(spec: &'a GenSpec) -> Gen<'a> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let preds = PRED_NAMES
            .iter()
            .map(|n| (*n, rng.gen_range(0..=spec.max_arity)))
            .collect();
        Gen { spec, rng, preds }
    }

    fn grade(&mut self) -> f64 {
        self.spec.grades[self.rng.gen_range(0..self.spec.grades.len())]
    }

    fn term(&mut self, out: &mut String) {
        let n_consts = self.spec.const_pool.min(CONST_NAMES.len());
        match self.rng.gen_range(0..10u32) {
            0..=3 => out.push_str(VAR_NAMES[self.rng.gen_range(0..VAR_NAMES.len())]),
            4..=7 if n_consts > 0 => {
                out.push_str(CONST_NAMES[self.rng.gen_range(0..n_consts)])
            }
            _ => {
                let _ = write!(out, "{}", self.rng.gen_range(0..3));
            }
        }
    }

    fn atom(&mut self, out: &mut String) {
        let (name, arity) = self.preds[self.rng.gen_range(0..self.preds.len())];
        out.push_str(name);
        if arity > 0 {
            out.push('(');
            for i in 0..arity {
                if i > 0 {
                    out.push_str(", ");
                }
                self.term(out);
            }
            out.push(')');
        }
    }

    /// Builtins are limited to forms that cannot raise arithmetic errors.
    fn builtin(&mut self, out: &mut String) {
        match self.rng.gen_range(0..5u32) {
            0 => out.push_str("true"),
            1 => out.push_str("fail"),
            2 | 3 => {
                self.term(out);
                out.push_str(if self.rng.gen_bool(0.7) { " = " } else { " \\= " });
                self.term(out);
            }
            _ => {
                let a = self.rng.gen_range(0..3);
                let b = self.rng.gen_range(0..3);
                let op = ["<", ">", "=<", ">="][self.rng.gen_range(0..4)];
                let _ = write!(out, "{a} {op} {b}");
            }
        }
    }

    fn implication(&mut self, out: &mut String, nesting: usize) {
        out.push('(');
        // hypothesis: a fact, or a small rule, possibly graded
        let graded = self.rng.gen_bool(0.5);
        let grade = if graded { self.grade() } else { 1.0 };
        let with_body = self.rng.gen_bool(0.4);
        if with_body || grade != 1.0 {
            out.push('(');
            self.atom(out);
            if with_body {
                out.push_str(" :- ");
                self.atom(out);
                if self.rng.gen_bool(0.3) {
                    out.push_str(", ");
                    self.atom(out);
                }
            }
            if grade != 1.0 {
                let _ = write!(out, " with {grade}");
            }
            out.push(')');
        } else {
            self.atom(out);
        }
        out.push_str(" => (");
        self.goal(out, nesting - 1, 2);
        out.push_str("))");
    }

    fn leaf(&mut self, out: &mut String, nesting: usize) {
        let roll = self.rng.gen_range(0..10u32);
        if nesting > 0 && roll < 3 {
            self.implication(out, nesting);
        } else if roll < 5 {
            self.builtin(out);
        } else if roll < 6 {
            out.push('(');
            self.atom(out);
            out.push_str(" ; ");
            self.atom(out);
            out.push(')');
        } else {
            self.atom(out);
        }
    }

    fn goal(&mut self, out: &mut String, nesting: usize, max_len: usize) {
        let len = self.rng.gen_range(1..=max_len.max(1));
        for i in 0..len {
            if i > 0 {
                out.push_str(", ");
            }
            self.leaf(out, nesting);
        }
    }

    fn program_source(&mut self) -> String {
        let mut out = String::new();
        let lambda = [0.0, 0.25, 0.5][self.rng.gen_range(0..3)];
        let tnorm = ["min", "product", "luka"][self.rng.gen_range(0..3)];
        let _ = writeln!(out, ":- lambda_cut({lambda:?}).");
        let _ = writeln!(out, ":- t_norm({tnorm}).");
        if self.rng.gen_bool(0.5) {
            let _ = writeln!(out, ":- transitivity(yes).");
        }
        // proximity equations over constants and predicate names,
        // deduplicated so the relation builder sees no conflicts
        let n_consts = self.spec.const_pool.min(CONST_NAMES.len());
        let mut pool: Vec<&str> = CONST_NAMES[..n_consts].to_vec();
        pool.extend(PRED_NAMES);
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for _ in 0..self.spec.proximity_entries {
            let i = self.rng.gen_range(0..pool.len());
            let j = self.rng.gen_range(0..pool.len());
            let d = self.grade();
            if i == j || seen.contains(&(i, j)) || seen.contains(&(j, i)) {
                continue;
            }
            seen.push((i, j));
            let _ = writeln!(out, "{} ~ {} = {d}", pool[i], pool[j]);
            out.pop();
            out.push_str(".\n");
        }
        let n_rules = self.rng.gen_range(0..=self.spec.max_rules);
        for _ in 0..n_rules {
            self.atom(&mut out);
            if self.rng.gen_bool(0.65) {
                out.push_str(" :- ");
                let nesting = self.spec.max_nesting;
                let len = self.spec.max_body_len;
                self.goal(&mut out, nesting, len);
            }
            let g = self.grade();
            if g != 1.0 {
                let _ = write!(out, " with {g}");
            }
            out.push_str(".\n");
        }
        out
    }

    fn goal_source(&mut self) -> String {
        let (name, arity) = self.preds[self.rng.gen_range(0..self.preds.len())];
        let mut out = String::from(name);
        if arity > 0 {
            out.push('(');
            for i in 0..arity {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(VAR_NAMES[i % VAR_NAMES.len()]);
            }
            out.push(')');
        }
        out
    }
}

/// Generate a program within the spec's bounds.
pub fn gen_program(spec: &GenSpec) -> Program {
    gen_case(spec).program
}

/// Generate a full test case: program, query, lambda and t-norm.
pub fn gen_case(spec: &GenSpec) -> GenCase {
    let mut g = Gen::new(spec);
    let src = g.program_source();
    let goal_src = g.goal_source();
    let program = parse_program(&src).expect("generator must emit parseable programs");
    let query = crate::syntax::parse_goal(&goal_src).expect("generator goal parses");
    GenCase {
        lambda: program.directives.lambda_cut.unwrap_or(0.0),
        tnorm: program.directives.t_norm.unwrap_or(TNorm::Min),
        program,
        query,
        goal_src,
    }
}

/// Maximum implication nesting depth occurring in a goal.
pub fn implication_depth(g: &Goal) -> usize {
    match g {
        Goal::Conj(l, r) | Goal::Disj(l, r) => implication_depth(l).max(implication_depth(r)),
        Goal::Implication(h, c) => {
            1 + implication_depth(&h.body).max(implication_depth(c))
        }
        _ => 0,
    }
}

/// Maximum implication nesting depth over all rule bodies.
pub fn program_implication_depth(p: &Program) -> usize {
    p.clauses
        .iter()
        .map(|c| implication_depth(&c.rule.body))
        .max()
        .unwrap_or(0)
}

/// Outcome of a cross-engine run.
#[derive(Debug)]
pub enum CheckOutcome {
    /// All engines produced the same answer multiset.
    Agree { answers: usize },
    /// Some engine hit the step limit; the comparison is inconclusive
    /// and the seed is skipped for every engine alike.
    Skipped,
    Fail(Box<Counterexample>),
}

/// A reproducible disagreement between engines.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub seed: u64,
    /// Loadable source of the (shrunk) program.
    pub program: String,
    pub goal: String,
    pub lambda: f64,
    pub tnorm: TNorm,
    pub detail: String,
    /// Answer sets per engine name.
    pub answer_sets: Vec<(String, Vec<Answer>)>,
}

impl std::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "engines disagree (seed {}): {}", self.seed, self.detail)?;
        writeln!(f, "%% program (lambda {}, {:?})", self.lambda, self.tnorm)?;
        write!(f, "{}", self.program)?;
        writeln!(f, "?- {}.", self.goal)?;
        for (name, answers) in &self.answer_sets {
            writeln!(f, "{name}: {} answers", answers.len())?;
            for a in answers {
                writeln!(f, "  {a}")?;
            }
        }
        Ok(())
    }
}

type EngineRun = Result<(Vec<Answer>, crate::SolveStats), EngineError>;

fn run_engines(case: &GenCase, cfg: &SolveConfig) -> Result<Vec<(Engine, EngineRun)>, String> {
    let rel = case.relation()?;
    Ok(Engine::ALL
        .iter()
        .map(|&e| {
            (
                e,
                solve_collect(e, &case.program, &rel, cfg, &case.query, None),
            )
        })
        .collect())
}

fn check_runs(case: &GenCase, seed: u64, cfg: &SolveConfig) -> CheckOutcome {
    let runs = match run_engines(case, cfg) {
        Ok(r) => r,
        Err(e) => {
            return CheckOutcome::Fail(Box::new(counterexample(
                case,
                seed,
                format!("relation error: {e}"),
                &[],
            )))
        }
    };
    // engine errors must be symmetric; a mixed outcome is a divergence
    let errs = runs.iter().filter(|(_, r)| r.is_err()).count();
    if errs == runs.len() {
        return CheckOutcome::Skipped;
    }
    if errs > 0 {
        let detail = runs
            .iter()
            .map(|(e, r)| match r {
                Ok((a, _)) => format!("{}: {} answers", e.name(), a.len()),
                Err(err) => format!("{}: error {err}", e.name()),
            })
            .collect::<Vec<_>>()
            .join("; ");
        return CheckOutcome::Fail(Box::new(counterexample(case, seed, detail, &[])));
    }
    let runs: Vec<(Engine, Vec<Answer>, crate::SolveStats)> = runs
        .into_iter()
        .map(|(e, r)| {
            let (a, s) = r.unwrap();
            (e, a, s)
        })
        .collect();
    if runs.iter().any(|(_, _, s)| s.step_limited) {
        return CheckOutcome::Skipped;
    }
    let (base_engine, base, _) = &runs[0];
    for (e, answers, _) in &runs[1..] {
        if let Err(msg) = compare_answer_multisets(base, answers) {
            let sets: Vec<(String, Vec<Answer>)> = runs
                .iter()
                .map(|(e, a, _)| (e.name().to_string(), a.clone()))
                .collect();
            return CheckOutcome::Fail(Box::new(counterexample(
                case,
                seed,
                format!("{} vs {}: {msg}", base_engine.name(), e.name()),
                &sets,
            )));
        }
    }
    CheckOutcome::Agree { answers: base.len() }
}

fn counterexample(
    case: &GenCase,
    seed: u64,
    detail: String,
    sets: &[(String, Vec<Answer>)],
) -> Counterexample {
    Counterexample {
        seed,
        program: case.source(),
        goal: case.goal_src.clone(),
        lambda: case.lambda,
        tnorm: case.tnorm,
        detail,
        answer_sets: sets.to_vec(),
    }
}

/// Solve the case with every engine under equal budgets and compare the
/// answer multisets.
pub fn check_equivalence(case: &GenCase, depth_budget: u64, step_limit: u64) -> CheckOutcome {
    let cfg = case.config(depth_budget, step_limit);
    check_runs(case, 0, &cfg)
}

/// Try to delete rules from a failing case while the failure persists.
fn shrink(mut case: GenCase, seed: u64, cfg: &SolveConfig) -> Counterexample {
    loop {
        let mut reduced = false;
        let mut i = 0;
        while i < case.program.clauses.len() {
            let mut candidate = case.clone();
            candidate.program.clauses.remove(i);
            if let CheckOutcome::Fail(_) = check_runs(&candidate, seed, cfg) {
                case = candidate;
                reduced = true;
            } else {
                i += 1;
            }
        }
        if !reduced {
            break;
        }
    }
    match check_runs(&case, seed, cfg) {
        CheckOutcome::Fail(ce) => *ce,
        // a flaky failure cannot happen with deterministic engines, but
        // fall back to reporting the unshrunk case just in case
        _ => counterexample(&case, seed, "failure vanished while shrinking".into(), &[]),
    }
}

/// Generate the case for `spec`, cross-check the engines and shrink any
/// counterexample before reporting it.
pub fn run_seed(spec: &GenSpec, depth_budget: u64, step_limit: u64) -> CheckOutcome {
    let case = gen_case(spec);
    let cfg = case.config(depth_budget, step_limit);
    match check_runs(&case, spec.seed, &cfg) {
        CheckOutcome::Fail(_) => CheckOutcome::Fail(Box::new(shrink(case, spec.seed, &cfg))),
        other => other,
    }
}

/// Tally of a seed sweep.
#[derive(Debug, Default, Clone, Copy)]
pub struct SweepStats {
    pub agreed: usize,
    pub skipped: usize,
    pub total_answers: usize,
}

/// Run `n_seeds` consecutive seeds starting at `spec.seed`; stop at the
/// first counterexample.
pub fn sweep(
    spec: &GenSpec,
    n_seeds: u64,
    depth_budget: u64,
    step_limit: u64,
) -> Result<SweepStats, Box<Counterexample>> {
    let mut stats = SweepStats::default();
    for s in spec.seed..spec.seed + n_seeds {
        match run_seed(&spec.with_seed(s), depth_budget, step_limit) {
            CheckOutcome::Agree { answers } => {
                stats.agreed += 1;
                stats.total_answers += answers;
            }
            CheckOutcome::Skipped => stats.skipped += 1,
            CheckOutcome::Fail(ce) => return Err(ce),
        }
    }
    Ok(stats)
}

/// Base seed for randomized tests, overridable via `HYPOLOG_SEED`.
pub fn env_seed(default: u64) -> u64 {
    std::env::var("HYPOLOG_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

/// Check that every answer in `small` has a distinct counterpart in
/// `large` (sub-multiset inclusion up to renaming and degree noise).
pub fn sub_multiset(small: &[Answer], large: &[Answer]) -> Result<(), String> {
    let s: Vec<Answer> = small.iter().map(Answer::canonical).collect();
    let mut l: Vec<Option<Answer>> = large.iter().map(|a| Some(a.canonical())).collect();
    for (i, a) in s.iter().enumerate() {
        let found = l.iter_mut().find(|slot| {
            slot.as_ref()
                .is_some_and(|b| a.bindings == b.bindings && degrees_eq(a.degree, b.degree))
        });
        match found {
            Some(slot) => *slot = None,
            None => return Err(format!("answer #{i} `{a}` has no counterpart")),
        }
    }
    Ok(())
}
