//! End-to-end acceptance checks. Each test prints one PASS/FAIL line so
//! the whole gate is readable from the test output.

use hypolog::bench::{gen_bench, BENCH_STACK};
use hypolog::context::ContextId;
use hypolog::harness::{env_seed, gen_case, sub_multiset, sweep, CheckOutcome, GenSpec};
use hypolog::syntax::{parse_goal, parse_program};
use hypolog::translate::{emit_prolog, normalize_listing, Dialect};
use hypolog::unify::build_relation;
use hypolog::{
    solve_collect, Answer, Engine, ProximityRelation, SolveConfig, SolveStats,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

fn check(n: u32, desc: &str, f: impl FnOnce() -> Result<(), String>) {
    match f() {
        Ok(()) => println!("acceptance {n}: PASS - {desc}"),
        Err(e) => {
            println!("acceptance {n}: FAIL - {desc}");
            panic!("acceptance {n} failed: {e}");
        }
    }
}

fn solve_src(
    src: &str,
    goal: &str,
    engine: Engine,
    cfg: &SolveConfig,
) -> Result<(Vec<Answer>, SolveStats), String> {
    let p = parse_program(src).map_err(|e| e.to_string())?;
    let rel = build_relation(
        &p.proximity,
        p.directives.transitivity.unwrap_or(false),
        cfg.tnorm,
    )
    .map_err(|e| e.to_string())?;
    let q = parse_goal(goal).map_err(|e| e.to_string())?;
    solve_collect(engine, &p, &rel, cfg, &q, None).map_err(|e| e.to_string())
}

#[test]
fn a1_golden_programs_have_exact_answer_counts() {
    check(1, "golden programs, exact answer counts, every engine < 1 s", || {
        let cases: [(&str, &str, usize); 6] = [
            ("a :- (d => b), e. b :- c. c :- d. e.", "a", 1),
            ("p :- (q :- r) => q. r. r.", "p", 2),
            ("p :- (q => q), q.", "p", 0),
            ("p :- q => q => q.", "p", 2),
            ("p(X) :- g(X), (q(X) => r). g(1). r :- q(2).", "p(X)", 0),
            ("p :- g(X, Y), (q(X, Y) => q(1, 2)). g(X, X).", "p", 0),
        ];
        let cfg = SolveConfig::default();
        for (src, goal, want) in cases {
            for e in Engine::ALL {
                let t = Instant::now();
                let (answers, _) = solve_src(src, goal, e, &cfg)?;
                let elapsed = t.elapsed();
                if answers.len() != want {
                    return Err(format!(
                        "{} on `{src}` ?- {goal}: got {} answers, want {want}",
                        e.name(),
                        answers.len()
                    ));
                }
                if elapsed > Duration::from_secs(1) {
                    return Err(format!("{} took {elapsed:?} on `{src}`", e.name()));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn a2_recursion_registers_once_per_level() {
    check(2, "the arithmetic recursion registers its hypothesis N times", || {
        for n in [1usize, 10, 100] {
            let (p, q) = gen_bench("hypo2", n)?;
            for e in Engine::ALL {
                let (_, stats) =
                    solve_collect(e, &p, &ProximityRelation::identity(), &SolveConfig::default(), &q, None)
                        .map_err(|e| e.to_string())?;
                if stats.registrations != n as u64 {
                    return Err(format!(
                        "{} at N={n}: {} registrations",
                        e.name(),
                        stats.registrations
                    ));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn a3_translations_match_golden_listings() {
    check(3, "emitted Prolog matches the three golden listings", || {
        let cases: [(&str, Dialect, &str); 3] = [
            ("p :- q => q.", Dialect::CrispInline, include_str!("golden/crisp_prop.pl")),
            (
                "p(X) :- g(X), (q(X) => r). g(1). r :- q(2).",
                Dialect::CrispInline,
                include_str!("golden/crisp_pred.pl"),
            ),
            (
                "p(X) :- g(X), (q(X) => r). g(1). r :- q(2).",
                Dialect::CrispReg,
                include_str!("golden/crisp_reg.pl"),
            ),
        ];
        for (src, dialect, golden) in cases {
            let p = parse_program(src).map_err(|e| e.to_string())?;
            let rel = ProximityRelation::identity();
            let out = emit_prolog(&p, &rel, 0.0, dialect);
            if normalize_listing(&out) != normalize_listing(golden) {
                return Err(format!(
                    "{dialect:?} of `{src}` diverges from golden:\n--- emitted\n{out}\n--- golden\n{golden}"
                ));
            }
        }
        Ok(())
    });
}

#[test]
fn a4_proximity_degree_is_exact_and_cut_applies() {
    // hand derivation for the single resolution step: the clause grade is
    // 0.7, the head predicates are 0.6-close, the argument is identical,
    // so the degree is min(0.7, min(0.6, 1)) = 0.6
    check(4, "0.6-degree answer survives lambda 0.5 and dies at 0.7", || {
        let src = "g ~ h = 0.6. g(1) with 0.7.";
        for e in Engine::ALL {
            let cfg = SolveConfig { lambda: 0.5, ..SolveConfig::default() };
            let (answers, _) = solve_src(src, "h(1)", e, &cfg)?;
            if answers.len() != 1 {
                return Err(format!("{}: {} answers at lambda 0.5", e.name(), answers.len()));
            }
            #[allow(clippy::float_cmp)] // the constants are exactly representable
            if answers[0].degree != 0.6 {
                return Err(format!("{}: degree {} != 0.6", e.name(), answers[0].degree));
            }
            let cfg = SolveConfig { lambda: 0.7, ..SolveConfig::default() };
            let (answers, _) = solve_src(src, "h(1)", e, &cfg)?;
            if !answers.is_empty() {
                return Err(format!("{}: {} answers at lambda 0.7", e.name(), answers.len()));
            }
        }
        Ok(())
    });
}

#[test]
fn a5_engines_agree_on_1000_random_programs() {
    check(5, "1000 random seeds, all engines agree within budget, < 5 min", || {
        let spec = GenSpec::default().with_seed(env_seed(0));
        let t = Instant::now();
        let stats = sweep(&spec, 1000, 200, 20_000).map_err(|ce| ce.to_string())?;
        let elapsed = t.elapsed();
        if elapsed > Duration::from_secs(300) {
            return Err(format!("sweep took {elapsed:?}"));
        }
        if stats.agreed < 500 {
            return Err(format!("only {} seeds were conclusive", stats.agreed));
        }
        Ok(())
    });
}

#[test]
fn a6_raising_lambda_only_removes_answers() {
    check(6, "answers at lambda+0.2 are a sub-multiset of answers at lambda", || {
        let spec = GenSpec::default();
        let base = env_seed(0) + 50_000;
        let mut compared = 0;
        let mut seed = base;
        while compared < 200 {
            if seed - base > 2000 {
                return Err(format!("only {compared} comparable seeds in 2000"));
            }
            let case = gen_case(&spec.with_seed(seed));
            seed += 1;
            let rel = case.relation()?;
            let mut low_cfg = case.config(200, 20_000);
            let mut high_cfg = low_cfg.clone();
            high_cfg.lambda = (low_cfg.lambda + 0.2).min(1.0);
            low_cfg.lambda = case.lambda;
            let mut per_engine = Vec::new();
            for e in [Engine::MetaA, Engine::Compiled] {
                let (low, ls) = solve_collect(e, &case.program, &rel, &low_cfg, &case.query, None)
                    .map_err(|e| e.to_string())?;
                let (high, hs) =
                    solve_collect(e, &case.program, &rel, &high_cfg, &case.query, None)
                        .map_err(|e| e.to_string())?;
                if ls.step_limited || hs.step_limited {
                    per_engine.clear();
                    break;
                }
                per_engine.push((e, low, high));
            }
            if per_engine.is_empty() {
                continue;
            }
            for (e, low, high) in &per_engine {
                if let Err(msg) = sub_multiset(high, low) {
                    return Err(format!(
                        "seed {}: {} not monotone at lambda {} -> {}: {msg}\n{}",
                        seed - 1,
                        e.name(),
                        low_cfg.lambda,
                        high_cfg.lambda,
                        case.source()
                    ));
                }
            }
            compared += 1;
        }
        Ok(())
    });
}

#[test]
fn a7_unit_grades_and_identity_relation_degenerate_to_crisp() {
    check(7, "with unit grades and no proximity all degrees are exactly 1", || {
        let spec = GenSpec {
            proximity_entries: 0,
            grades: vec![1.0],
            ..GenSpec::default()
        };
        let base = env_seed(0) + 100_000;
        let mut compared = 0;
        let mut seed = base;
        while compared < 200 {
            if seed - base > 2000 {
                return Err(format!("only {compared} conclusive seeds in 2000"));
            }
            let mut case = gen_case(&spec.with_seed(seed));
            seed += 1;
            case.lambda = 0.0;
            case.program.directives.lambda_cut = Some(0.0);
            match hypolog::harness::check_equivalence(&case, 200, 20_000) {
                CheckOutcome::Skipped => continue,
                CheckOutcome::Fail(ce) => return Err(ce.to_string()),
                CheckOutcome::Agree { .. } => {}
            }
            let rel = case.relation()?;
            let cfg = case.config(200, 20_000);
            for e in Engine::ALL {
                let (answers, _) =
                    solve_collect(e, &case.program, &rel, &cfg, &case.query, None)
                        .map_err(|e| e.to_string())?;
                #[allow(clippy::float_cmp)]
                if let Some(a) = answers.iter().find(|a| a.degree != 1.0) {
                    return Err(format!(
                        "seed {}: {} produced degree {}\n{}",
                        seed - 1,
                        e.name(),
                        a.degree,
                        case.source()
                    ));
                }
            }
            compared += 1;
        }
        Ok(())
    });
}

#[test]
fn a8_large_benchmarks_finish_and_agree() {
    check(8, "hypo1 n=2000, hypo2/hypo3 n=3000 each finish < 60 s per engine", || {
        for (name, n) in [("hypo1", 2000usize), ("hypo2", 3000), ("hypo3", 3000)] {
            let (p, q) = gen_bench(name, n)?;
            let mut counts = Vec::new();
            for e in Engine::ALL {
                let t = Instant::now();
                let result = std::thread::scope(|s| {
                    std::thread::Builder::new()
                        .stack_size(BENCH_STACK)
                        .spawn_scoped(s, || {
                            solve_collect(
                                e,
                                &p,
                                &ProximityRelation::identity(),
                                &SolveConfig::default(),
                                &q,
                                None,
                            )
                        })
                        .expect("spawn")
                        .join()
                        .expect("solver panicked")
                });
                let elapsed = t.elapsed();
                let (answers, _) = result.map_err(|e| e.to_string())?;
                if elapsed > Duration::from_secs(60) {
                    return Err(format!("{name} n={n} {}: {elapsed:?}", e.name()));
                }
                counts.push((e.name(), answers.len()));
            }
            if counts.iter().any(|(_, c)| *c != counts[0].1) {
                return Err(format!("{name} n={n}: answer counts differ: {counts:?}"));
            }
        }
        Ok(())
    });
}

#[test]
fn a9_context_prefix_order_laws() {
    check(9, "prefix order laws on 100000 random context pairs and triples", || {
        let mut rng = ChaCha8Rng::seed_from_u64(env_seed(9));
        let rand_ctx = |rng: &mut ChaCha8Rng| {
            let mut c = ContextId::root();
            for _ in 0..rng.gen_range(0..=5) {
                c = c.extend(rng.gen_range(0..4));
            }
            c
        };
        // draw related contexts often enough that the conditional laws
        // actually fire
        let derived = |rng: &mut ChaCha8Rng, from: &ContextId| {
            if rng.gen_bool(0.5) {
                let mut c = from.clone();
                for _ in 0..rng.gen_range(0..=3) {
                    c = c.extend(rng.gen_range(0..4));
                }
                c
            } else {
                rand_ctx(rng)
            }
        };
        let mut antisym_hits = 0u32;
        let mut trans_hits = 0u32;
        let mut total_hits = 0u32;
        for i in 0..100_000 {
            let a = rand_ctx(&mut rng);
            let b = derived(&mut rng, &a);
            let c = derived(&mut rng, &b);
            if !a.is_prefix_of(&a) {
                return Err(format!("iteration {i}: not reflexive on {a}"));
            }
            if a.is_prefix_of(&b) && b.is_prefix_of(&a) {
                antisym_hits += 1;
                if a.indexes() != b.indexes() {
                    return Err(format!("iteration {i}: antisymmetry fails on {a}, {b}"));
                }
            }
            if a.is_prefix_of(&b) && b.is_prefix_of(&c) {
                trans_hits += 1;
                if !a.is_prefix_of(&c) {
                    return Err(format!("iteration {i}: transitivity fails"));
                }
            }
            if a.is_prefix_of(&c) && b.is_prefix_of(&c) {
                total_hits += 1;
                if !a.is_prefix_of(&b) && !b.is_prefix_of(&a) {
                    return Err(format!(
                        "iteration {i}: downward totality fails on {a}, {b}, {c}"
                    ));
                }
            }
        }
        // the laws must actually have been exercised
        if antisym_hits < 100 || trans_hits < 1000 || total_hits < 1000 {
            return Err(format!(
                "premises fired too rarely: {antisym_hits}/{trans_hits}/{total_hits}"
            ));
        }
        Ok(())
    });
}
