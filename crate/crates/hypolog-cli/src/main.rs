//! Command line front end: batch queries, Prolog emission, benchmarks
//! and an interactive REPL.

use clap::Parser;
use hypolog::bench::{run_bench, BENCH_STACK};
use hypolog::meta::trace_meta;
use hypolog::syntax::{parse_goal, parse_program, term_to_string};
use hypolog::translate::{emit_prelude, emit_prolog, Dialect};
use hypolog::unify::build_relation;
use hypolog::{
    solve_collect, Answer, Engine, Program, ProximityRelation, Query, SolveConfig, TNorm,
};
use std::io::{BufRead, Write};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "hypolog", version, about = "Fuzzy logic programming with embedded implications")]
struct Args {
    /// Program file to load.
    file: Option<std::path::PathBuf>,

    /// Solver to use: meta-a, meta-b or compiled.
    #[arg(long, default_value = "compiled")]
    engine: String,

    /// Lambda cut; overrides a lambda_cut directive in the file.
    #[arg(long)]
    lambda: Option<f64>,

    /// T-norm: min, product or luka; overrides a t_norm directive.
    #[arg(long)]
    tnorm: Option<String>,

    /// Goal to solve in batch mode (without the closing dot).
    #[arg(long)]
    goal: Option<String>,

    /// Enumerate every answer instead of stopping at the first.
    #[arg(long)]
    all: bool,

    /// Stop after N answers.
    #[arg(short = 'n', long = "answers", value_name = "N")]
    n: Option<usize>,

    /// Print the Prolog translation and exit: crisp-prop, crisp-pred or
    /// fuzzy.
    #[arg(long, value_name = "DIALECT")]
    emit: Option<String>,

    /// Run a benchmark family: hypo1, hypo2 or hypo3.
    #[arg(long, value_name = "NAME")]
    bench: Option<String>,

    /// Benchmark instance size.
    #[arg(long, default_value_t = 100)]
    size: usize,

    /// Output benchmark results as CSV instead of a table.
    #[arg(long)]
    csv: bool,

    /// Print the transitions of the reference interpreter.
    #[arg(long)]
    trace: bool,
}

/// Session settings. A loaded file's directives override these until the
/// next load; `set` changes them directly.
#[derive(Debug, Clone)]
struct Session {
    engine: Engine,
    lambda: f64,
    tnorm: TNorm,
    transitivity: bool,
    limit: Option<usize>,
    trace: bool,
}

impl Default for Session {
    fn default() -> Self {
        Session {
            engine: Engine::Compiled,
            lambda: 0.0,
            tnorm: TNorm::Min,
            transitivity: false,
            limit: None,
            trace: false,
        }
    }
}

impl Session {
    fn absorb_directives(&mut self, program: &Program) {
        if let Some(l) = program.directives.lambda_cut {
            self.lambda = l;
        }
        if let Some(t) = program.directives.t_norm {
            self.tnorm = t;
        }
        if let Some(tr) = program.directives.transitivity {
            self.transitivity = tr;
        }
    }

    fn config(&self) -> SolveConfig {
        SolveConfig {
            lambda: self.lambda,
            tnorm: self.tnorm,
            ..SolveConfig::default()
        }
    }

    fn relation(&self, program: &Program) -> Result<ProximityRelation, String> {
        build_relation(&program.proximity, self.transitivity, self.tnorm)
            .map_err(|e| e.to_string())
    }
}

fn parse_tnorm(s: &str) -> Result<TNorm, String> {
    match s {
        "min" => Ok(TNorm::Min),
        "product" => Ok(TNorm::Product),
        "luka" => Ok(TNorm::Luka),
        other => Err(format!("unknown t-norm `{other}` (min, product, luka)")),
    }
}

fn fmt_degree(d: f64) -> String {
    if d == d.trunc() && d.is_finite() {
        format!("{}", d as i64)
    } else {
        format!("{d}")
    }
}

fn fmt_answer(a: &Answer) -> String {
    let mut out = String::new();
    if a.bindings.is_empty() {
        out.push_str("true");
    } else {
        for (i, (name, t)) in a.bindings.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&format!("{name} = {}", term_to_string(t, &[])));
        }
    }
    out.push_str(&format!(" with degree {}", fmt_degree(a.degree)));
    out
}

/// Deeply recursive programs need a large stack; run every solve on a
/// dedicated thread.
fn on_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(BENCH_STACK)
            .spawn_scoped(s, f)
            .expect("spawn solver thread")
            .join()
            .expect("solver thread panicked")
    })
}

fn solve_once(
    session: &Session,
    program: &Program,
    query: &Query,
    limit: Option<usize>,
) -> Result<Vec<Answer>, String> {
    let rel = session.relation(program)?;
    let cfg = session.config();
    let engine = session.engine;
    let run = || {
        if session.trace {
            let mut cfg = cfg.clone();
            cfg.strategy = hypolog::meta::Strategy::ListA;
            let mut answers = Vec::new();
            let traced = trace_meta(program, &rel, &cfg, query, &mut |a| {
                answers.push(a);
                match limit {
                    Some(n) if answers.len() >= n => std::ops::ControlFlow::Break(()),
                    _ => std::ops::ControlFlow::Continue(()),
                }
            });
            traced.map(|(_, events)| {
                for e in &events {
                    eprintln!("{e}");
                }
                answers
            })
        } else {
            solve_collect(engine, program, &rel, &cfg, query, limit).map(|(a, _)| a)
        }
    };
    on_big_stack(run).map_err(|e| e.to_string())
}

fn load_program(path: &std::path::Path) -> Result<Program, String> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_program(&src).map_err(|e| e.to_string())
}

fn do_emit(session: &Session, program: &Program, dialect: &str) -> Result<String, String> {
    let d: Dialect = dialect.parse()?;
    let rel = session.relation(program)?;
    let mut out = emit_prelude(d);
    out.push('\n');
    out.push_str(&emit_prolog(program, &rel, session.lambda, d));
    Ok(out)
}

fn do_bench(name: &str, size: usize, csv: bool) -> Result<String, String> {
    let report = run_bench(&[name], &Engine::ALL, &[size], 3)?;
    Ok(if csv { report.to_csv() } else { report.to_table() })
}

fn batch(args: &Args) -> Result<bool, String> {
    let mut session = Session {
        engine: args.engine.parse()?,
        trace: args.trace,
        ..Session::default()
    };
    if let Some(name) = &args.bench {
        print!("{}", do_bench(name, args.size, args.csv)?);
        return Ok(true);
    }
    let program = match &args.file {
        Some(p) => load_program(p)?,
        None => Program::default(),
    };
    session.absorb_directives(&program);
    if let Some(l) = args.lambda {
        if !(0.0..=1.0).contains(&l) {
            return Err(format!("lambda must be in [0,1], got {l}"));
        }
        session.lambda = l;
    }
    if let Some(t) = &args.tnorm {
        session.tnorm = parse_tnorm(t)?;
    }
    if let Some(d) = &args.emit {
        print!("{}", do_emit(&session, &program, d)?);
        return Ok(true);
    }
    let Some(goal_src) = &args.goal else {
        return Err("nothing to do: pass --goal, --emit or --bench (or no \
                    arguments for the REPL)"
            .into());
    };
    let query = parse_goal(goal_src).map_err(|e| e.to_string())?;
    let limit = if args.all { None } else { Some(args.n.unwrap_or(1)) };
    let answers = solve_once(&session, &program, &query, limit)?;
    for a in &answers {
        println!("{}", fmt_answer(a));
    }
    if answers.is_empty() {
        println!("no");
    }
    Ok(!answers.is_empty())
}

// ---------------------------------------------------------------------
// REPL

fn repl() -> ExitCode {
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    let mut session = Session::default();
    let mut program = Program::default();
    // a command read while enumerating answers is replayed afterwards
    let mut pending: Option<String> = None;
    println!("hypolog. Commands: load FILE, set KEY VALUE, GOAL., emit [DIALECT], trace on|off, bench NAME [SIZE], quit.");
    loop {
        let line = match pending.take() {
            Some(l) => l,
            None => {
                print!("?- ");
                let _ = std::io::stdout().flush();
                match lines.next() {
                    Some(Ok(l)) => l,
                    _ => break,
                }
            }
        };
        let line = line.trim().to_string();
        if line.is_empty() {
            continue;
        }
        match run_command(&line, &mut session, &mut program, &mut lines) {
            Ok(ReplFlow::Continue) => {}
            Ok(ReplFlow::Replay(l)) => pending = Some(l),
            Ok(ReplFlow::Quit) => break,
            Err(e) => println!("error: {e}"),
        }
    }
    ExitCode::SUCCESS
}

enum ReplFlow {
    Continue,
    /// A non-`;` line typed during answer enumeration; treat it as the
    /// next command.
    Replay(String),
    Quit,
}

fn run_command(
    line: &str,
    session: &mut Session,
    program: &mut Program,
    lines: &mut dyn Iterator<Item = std::io::Result<String>>,
) -> Result<ReplFlow, String> {
    let (cmd, rest) = match line.split_once(char::is_whitespace) {
        Some((c, r)) => (c, r.trim()),
        None => (line, ""),
    };
    match cmd {
        "quit" | "exit" | "halt" => Ok(ReplFlow::Quit),
        "load" => {
            if rest.is_empty() {
                return Err("usage: load FILE".into());
            }
            *program = load_program(std::path::Path::new(rest))?;
            *session = Session {
                engine: session.engine,
                trace: session.trace,
                ..Session::default()
            };
            session.absorb_directives(program);
            println!(
                "loaded {} clauses, {} proximity entries",
                program.clauses.len(),
                program.proximity.len()
            );
            Ok(ReplFlow::Continue)
        }
        "set" => {
            let (key, value) = rest
                .split_once(char::is_whitespace)
                .map(|(k, v)| (k, v.trim()))
                .ok_or("usage: set KEY VALUE")?;
            match key {
                "lambda" => {
                    let l: f64 = value.parse().map_err(|_| "lambda must be a number")?;
                    if !(0.0..=1.0).contains(&l) {
                        return Err("lambda must be in [0,1]".into());
                    }
                    session.lambda = l;
                }
                "tnorm" | "t_norm" => session.tnorm = parse_tnorm(value)?,
                "engine" => session.engine = value.parse()?,
                "transitivity" => {
                    session.transitivity = match value {
                        "yes" | "on" | "true" => true,
                        "no" | "off" | "false" => false,
                        _ => return Err("transitivity expects yes/no".into()),
                    }
                }
                "limit" => {
                    session.limit = match value {
                        "all" => None,
                        n => Some(n.parse().map_err(|_| "limit expects a number or `all`")?),
                    }
                }
                other => return Err(format!("unknown key `{other}`")),
            }
            Ok(ReplFlow::Continue)
        }
        "trace" => {
            session.trace = match rest {
                "on" => true,
                "off" => false,
                _ => return Err("usage: trace on|off".into()),
            };
            Ok(ReplFlow::Continue)
        }
        "emit" => {
            let dialect = if rest.is_empty() { "fuzzy" } else { rest };
            print!("{}", do_emit(session, program, dialect)?);
            Ok(ReplFlow::Continue)
        }
        "bench" => {
            let (name, size) = match rest.split_once(char::is_whitespace) {
                Some((n, s)) => (
                    n,
                    s.trim().parse().map_err(|_| "bench size must be a number")?,
                ),
                None if !rest.is_empty() => (rest, 30),
                None => return Err("usage: bench NAME [SIZE]".into()),
            };
            print!("{}", do_bench(name, size, false)?);
            Ok(ReplFlow::Continue)
        }
        _ => {
            // anything else is a goal, terminated by '.'
            let text = line
                .strip_prefix("?-")
                .unwrap_or(line)
                .trim()
                .strip_suffix('.')
                .ok_or("goals must end with `.`")?
                .to_string();
            let query = parse_goal(&text).map_err(|e| e.to_string())?;
            let answers = solve_once(session, program, &query, session.limit)?;
            let mut it = answers.iter();
            let Some(first) = it.next() else {
                println!("no");
                return Ok(ReplFlow::Continue);
            };
            println!("{}", fmt_answer(first));
            for a in it {
                // `;` asks for the next answer, anything else becomes the
                // next command
                print!("; for more ");
                let _ = std::io::stdout().flush();
                match lines.next() {
                    Some(Ok(l)) if l.trim() == ";" => println!("{}", fmt_answer(a)),
                    Some(Ok(l)) if !l.trim().is_empty() => {
                        return Ok(ReplFlow::Replay(l));
                    }
                    Some(Ok(_)) => return Ok(ReplFlow::Continue),
                    _ => return Ok(ReplFlow::Quit),
                }
            }
            println!("no (more) answers");
            Ok(ReplFlow::Continue)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let interactive = args.goal.is_none()
        && args.emit.is_none()
        && args.bench.is_none()
        && args.file.is_none();
    if interactive {
        return repl();
    }
    match batch(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
