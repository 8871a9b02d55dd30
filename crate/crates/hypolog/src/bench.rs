//! Benchmark program families.
//!
//! Three scalable families of hypothetical programs stress the hypothesis
//! machinery in different ways:
//!
//! * `hypo1` assumes `n` distinct propositions and then proves their
//!   conjunction (many registrations, each used once);
//! * `hypo2` assumes the same fact once per level of an `n`-deep
//!   arithmetic recursion and proves it at the bottom (registrations
//!   accumulate along one context path);
//! * `hypo3` nests `n` assumptions of one proposition and proves it
//!   innermost (one goal matched against `n` registrations).
//!
//! The runner first checks that all requested engines agree on the answer
//! multiset and only then reports timings; it never asserts an ordering
//! between engines.

use crate::answer::compare_answer_multisets;
use crate::syntax::{Atom, Clause, Goal, Program, Query, Rule, Term};
use crate::{solve_collect, Answer, Engine, ProximityRelation, SolveConfig, Sym};
use std::fmt::Write as _;
use std::time::Instant;

fn prop(name: &str) -> Goal {
    Goal::Atom(Atom::new(name, vec![]))
}

fn fact(name: &str) -> Rule {
    Rule::fact(Atom::new(name, vec![]))
}

/// Build one benchmark instance. `name` is `hypo1`, `hypo2` or `hypo3`.
pub fn gen_bench(name: &str, n: usize) -> Result<(Program, Query), String> {
    if n < 1 {
        return Err(format!("benchmark size must be >= 1, got {n}"));
    }
    match name {
        "hypo1" => Ok(hypo1(n)),
        "hypo2" => Ok(hypo2(n)),
        "hypo3" => Ok(hypo3(n)),
        other => Err(format!("unknown benchmark `{other}` (hypo1, hypo2, hypo3)")),
    }
}

fn ground_query(goal: Goal) -> Query {
    Query { goal, n_vars: 0, var_names: vec![] }
}

/// p :- a1 => a2 => ... => an => (a1, a2, ..., an).
fn hypo1(n: usize) -> (Program, Query) {
    let names: Vec<String> = (1..=n).map(|i| format!("a{i}")).collect();
    let mut body = prop(&names[n - 1]);
    for name in names.iter().rev().skip(1) {
        body = Goal::conj(prop(name), body);
    }
    for name in names.iter().rev() {
        body = Goal::implication(fact(name), body);
    }
    let clause = Clause {
        rule: Rule { head: Atom::new("p", vec![]), body, grade: 1.0 },
        n_vars: 0,
        var_names: vec![],
    };
    let program = Program { clauses: vec![clause], ..Program::default() };
    (program, ground_query(prop("p")))
}

/// p(0) :- a.  p(N) :- N > 0, N1 is N - 1, (a => p(N1)).
/// The base case has no global clause for `a`; it is provable only from
/// the assumptions accumulated on the way down, one per level.
fn hypo2(n: usize) -> (Program, Query) {
    let base = Clause {
        rule: Rule {
            head: Atom::new("p", vec![Term::int(0)]),
            body: prop("a"),
            grade: 1.0,
        },
        n_vars: 0,
        var_names: vec![],
    };
    let nv = Term::Var(0);
    let n1v = Term::Var(1);
    let step_body = Goal::conj(
        Goal::Builtin(Atom::new(">", vec![nv.clone(), Term::int(0)])),
        Goal::conj(
            Goal::Builtin(Atom::new(
                "is",
                vec![n1v.clone(), Term::comp("-", vec![nv.clone(), Term::int(1)])],
            )),
            Goal::implication(fact("a"), Goal::Atom(Atom::new("p", vec![n1v]))),
        ),
    );
    let step = Clause {
        rule: Rule { head: Atom::new("p", vec![nv]), body: step_body, grade: 1.0 },
        n_vars: 2,
        var_names: vec![Some(Sym::new("N")), Some(Sym::new("N1"))],
    };
    let program = Program { clauses: vec![base, step], ..Program::default() };
    let query = ground_query(Goal::Atom(Atom::new("p", vec![Term::int(n as i64)])));
    (program, query)
}

/// p :- a => a => ... => a  (n assumptions around a final call to a).
fn hypo3(n: usize) -> (Program, Query) {
    let mut body = prop("a");
    for _ in 0..n {
        body = Goal::implication(fact("a"), body);
    }
    let clause = Clause {
        rule: Rule { head: Atom::new("p", vec![]), body, grade: 1.0 },
        n_vars: 0,
        var_names: vec![],
    };
    let program = Program { clauses: vec![clause], ..Program::default() };
    (program, ground_query(prop("p")))
}

/// One timed table cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub program: String,
    pub engine: String,
    pub size: usize,
    pub cputime_ms: f64,
    pub answers: usize,
    pub inferences: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub cells: Vec<BenchCell>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("program,engine,size,cputime_ms,answers,inferences\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{},{}",
                c.program, c.engine, c.size, c.cputime_ms, c.answers, c.inferences
            );
        }
        out
    }

    pub fn from_csv(s: &str) -> Result<BenchReport, String> {
        let mut lines = s.lines();
        let header = lines.next().ok_or("empty report")?;
        if header.trim() != "program,engine,size,cputime_ms,answers,inferences" {
            return Err(format!("unexpected header `{header}`"));
        }
        let mut cells = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(format!("line {}: expected 6 fields", i + 2));
            }
            let bad = |what: &str| format!("line {}: bad {what}", i + 2);
            cells.push(BenchCell {
                program: f[0].to_string(),
                engine: f[1].to_string(),
                size: f[2].parse().map_err(|_| bad("size"))?,
                cputime_ms: f[3].parse().map_err(|_| bad("cputime"))?,
                answers: f[4].parse().map_err(|_| bad("answers"))?,
                inferences: f[5].parse().map_err(|_| bad("inferences"))?,
            });
        }
        Ok(BenchReport { cells })
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:<10} {:>8} {:>12} {:>9} {:>11}",
            "program", "engine", "size", "cputime_ms", "answers", "inferences"
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{:<8} {:<10} {:>8} {:>12.3} {:>9} {:>11}",
                c.program, c.engine, c.size, c.cputime_ms, c.answers, c.inferences
            );
        }
        out
    }
}

/// Solvers recurse once per assumption, so deep instances need a big
/// stack. All benchmark cells run on a dedicated thread.
pub const BENCH_STACK: usize = 512 * 1024 * 1024;

fn on_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(BENCH_STACK)
            .spawn_scoped(s, f)
            .expect("spawn bench thread")
            .join()
            .expect("bench thread panicked")
    })
}

fn run_cell(
    program: &Program,
    query: &Query,
    engine: Engine,
) -> Result<(Vec<Answer>, crate::SolveStats), String> {
    let rel = ProximityRelation::identity();
    let cfg = SolveConfig::default();
    on_big_stack(|| solve_collect(engine, program, &rel, &cfg, query, None))
        .map_err(|e| format!("{}: {e}", engine.name()))
}

/// Run the cross product of benchmarks, engines and sizes. For each
/// (benchmark, size) the engines' answer multisets are compared first;
/// timing a cell is refused if any engine disagrees. Reported time is the
/// median of `trials` runs (at least 3).
pub fn run_bench(
    names: &[&str],
    engines: &[Engine],
    sizes: &[usize],
    trials: usize,
) -> Result<BenchReport, String> {
    let trials = trials.max(3);
    let mut report = BenchReport::default();
    for &name in names {
        for &size in sizes {
            let (program, query) = gen_bench(name, size)?;
            // correctness gate: all engines must agree before any timing
            let mut runs = Vec::new();
            for &e in engines {
                runs.push((e, run_cell(&program, &query, e)?));
            }
            if let Some((e0, (a0, _))) = runs.first() {
                for (e, (a, _)) in &runs[1..] {
                    if let Err(msg) = compare_answer_multisets(a0, a) {
                        return Err(format!(
                            "{name} n={size}: {} and {} disagree: {msg} \
                             ({} vs {} answers)",
                            e0.name(),
                            e.name(),
                            a0.len(),
                            a.len()
                        ));
                    }
                }
            }
            for (e, (answers, stats)) in runs {
                let mut times: Vec<f64> = (0..trials)
                    .map(|_| {
                        // fresh stores and arenas every trial
                        let t = Instant::now();
                        let _ = run_cell(&program, &query, e);
                        t.elapsed().as_secs_f64() * 1000.0
                    })
                    .collect();
                times.sort_by(f64::total_cmp);
                report.cells.push(BenchCell {
                    program: name.to_string(),
                    engine: e.name().to_string(),
                    size,
                    cputime_ms: times[times.len() / 2],
                    answers: answers.len(),
                    inferences: stats.inferences(),
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::program_to_string;

    fn answers(name: &str, n: usize, engine: Engine) -> usize {
        let (p, q) = gen_bench(name, n).unwrap();
        run_cell(&p, &q, engine).unwrap().0.len()
    }

    #[test]
    fn smallest_instances() {
        let (p, _) = gen_bench("hypo3", 1).unwrap();
        assert_eq!(program_to_string(&p), "p :- a => a.\n");
        let (p, _) = gen_bench("hypo1", 2).unwrap();
        assert_eq!(program_to_string(&p), "p :- a1 => a2 => (a1, a2).\n");
        assert!(gen_bench("hypo1", 0).is_err());
        assert!(gen_bench("nope", 5).is_err());
    }

    #[test]
    fn answer_counts_match_hand_derivation() {
        // hypo1: each assumption proves exactly one conjunct, one answer
        for n in [1, 2, 5] {
            for e in Engine::ALL {
                assert_eq!(answers("hypo1", n, e), 1, "hypo1 n={n} {}", e.name());
            }
        }
        // hypo2/hypo3: at the innermost goal all n registrations lie on
        // the current context path, so `a` has n proofs
        for n in [1, 3, 7] {
            for e in Engine::ALL {
                assert_eq!(answers("hypo2", n, e), n, "hypo2 n={n} {}", e.name());
                assert_eq!(answers("hypo3", n, e), n, "hypo3 n={n} {}", e.name());
            }
        }
    }

    #[test]
    fn registration_counts() {
        let (p, q) = gen_bench("hypo2", 10).unwrap();
        for e in Engine::ALL {
            let (_, stats) = run_cell(&p, &q, e).unwrap();
            assert_eq!(stats.registrations, 10, "{}", e.name());
        }
    }

    #[test]
    fn report_round_trips_through_csv() {
        let report = run_bench(&["hypo1"], &Engine::ALL, &[5, 10], 3).unwrap();
        assert_eq!(report.cells.len(), 6);
        let csv = report.to_csv();
        let parsed = BenchReport::from_csv(&csv).unwrap();
        assert_eq!(parsed.to_csv(), csv);
        assert!(BenchReport::from_csv("bogus\n1,2,3").is_err());
    }

    #[test]
    fn empty_engine_list_gives_empty_table() {
        let report = run_bench(&["hypo1", "hypo2", "hypo3"], &[], &[4], 3).unwrap();
        assert!(report.cells.is_empty());
        assert_eq!(report.to_csv().lines().count(), 1);
    }

    #[test]
    fn medium_sizes_agree_across_engines() {
        let report = run_bench(&["hypo2"], &Engine::ALL, &[60], 3).unwrap();
        let counts: Vec<usize> = report.cells.iter().map(|c| c.answers).collect();
        assert_eq!(counts, vec![60, 60, 60]);
    }
}
