use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use branchcrawler::concolic::Subject;
use branchcrawler::corpus::{corpus_from_env, load_corpus_dir, CorpusEntry};
use branchcrawler::lang::load;
use branchcrawler::oracle::{oracle, DEFAULT_INPUT_CAP};
use branchcrawler::report::{aggregate, bench_notes, correlation, ordering_flags, Correlation};
use branchcrawler::session::{
    check_session_dir, run_session, write_session_dir, SessionResult, WriteOptions,
};
use branchcrawler::strategy::{Budgets, StrategyKind};

#[derive(Parser)]
#[command(
    name = "branchcrawler",
    version,
    about = "Concolic test generation for exhaustive branch coverage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate tests for one program with one strategy.
    Run(RunArgs),
    /// Run the corpus × strategy grid with repetitions and aggregate the counters.
    Bench(BenchArgs),
    /// Enumerate every valid input and report the reachable branches.
    Oracle(OracleArgs),
    /// Re-verify a session directory.
    Check { dir: PathBuf },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Labeling decisions allowed per solve.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    solver_budget: u64,
    /// Stop a session after this many solver calls.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_solver_calls: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    #[arg(long, default_value = "dfs")]
    strategy: StrategyKind,
    #[command(flatten)]
    solver: SolverArgs,
    /// Session directory (default: <program>-<strategy>-s<seed>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the CFG as Graphviz dot and the branch table as CSV.
    #[arg(long)]
    dump_cfg: bool,
    /// Also write the MT scheduler turn log.
    #[arg(long)]
    quantum_log: bool,
    /// Precondition over the parameters, used when the program has no `requires` clause.
    #[arg(long)]
    precondition: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    /// Corpus directory (default: $BRANCHCRAWLER_CORPUS, else the built-in corpus).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// `all` or a comma-separated list of strategies.
    #[arg(long, default_value = "all")]
    strategies: String,
    /// Repetitions per cell (default: 10, and 100 for mt).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    repeat: Option<u32>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "bench")]
    out: PathBuf,
    /// Keep a session directory for every cell under <out>/sessions.
    #[arg(long)]
    sessions: bool,
}

#[derive(Args)]
struct OracleArgs {
    file: PathBuf,
    #[arg(long)]
    precondition: Option<String>,
    /// Largest number of input vectors to enumerate.
    #[arg(long, default_value_t = DEFAULT_INPUT_CAP)]
    cap: u128,
}

/// Failure classes mapped to exit codes.
enum Failure {
    /// Bad input: unreadable files, diagnostics, bad flags.
    Input(String),
    /// The engine or a re-verification found an inconsistency.
    Engine(String),
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn budgets(a: &SolverArgs, seed: u64) -> Budgets {
    Budgets {
        solver_budget: a.solver_budget,
        max_solver_calls: a.max_solver_calls,
        seed,
    }
}

fn load_subject(path: &Path, precondition: Option<&str>) -> Result<(String, Subject), Failure> {
    let source = read(path)?;
    let program = load(&source, precondition).map_err(|d| {
        let text: Vec<String> =
            d.0.iter()
                .map(|x| format!("{}:{x}", path.display()))
                .collect();
        Failure::Input(text.join("\n"))
    })?;
    for w in program.warnings() {
        eprintln!("{}:{w}", path.display());
    }
    let subject = Subject::new(program)
        .map_err(|_| Failure::Input(format!("{}: constants overflow", path.display())))?;
    Ok((source, subject))
}

fn cmd_run(a: RunArgs) -> Outcome {
    let (source, subject) = load_subject(&a.file, a.precondition.as_deref())?;
    let result = run_session(&subject, a.strategy, budgets(&a.solver, a.solver.seed))
        .map_err(|e| Failure::Engine(e.to_string()))?;
    let out = a.out.unwrap_or_else(|| {
        PathBuf::from(format!(
            "{}-{}-s{}",
            subject.program().name(),
            a.strategy,
            a.solver.seed
        ))
    });
    let options = WriteOptions {
        dump_cfg: a.dump_cfg,
        quantum_log: a.quantum_log,
    };
    write_session_dir(
        &out,
        &subject,
        &source,
        a.precondition.as_deref(),
        &result,
        options,
    )
    .map_err(|e| write_err(&out, e))?;
    println!("{}", result.summary());
    println!("session written to {}", out.display());
    Ok(())
}

fn parse_strategies(s: &str) -> Result<Vec<StrategyKind>, Failure> {
    if s == "all" {
        return Ok(StrategyKind::ALL.to_vec());
    }
    let mut out: Vec<StrategyKind> = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|e: branchcrawler::strategy::UnknownStrategy| {
                    Failure::Input(e.to_string())
                })
        })
        .collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn cmd_bench(a: BenchArgs) -> Outcome {
    let corpus = match &a.corpus {
        Some(dir) => load_corpus_dir(dir),
        None => corpus_from_env(),
    }
    .map_err(|e| Failure::Input(e.to_string()))?;
    let strategies = parse_strategies(&a.strategies)?;
    let mut reference = StrategyKind::Dfs;
    if !strategies.contains(&reference) {
        reference = strategies[0];
        eprintln!("dfs not selected; percentages are relative to {reference}");
    }
    let subjects: Vec<(CorpusEntry, Subject)> = corpus
        .into_iter()
        .map(|e| {
            let s = e.subject().map_err(|err| Failure::Input(err.to_string()))?;
            Ok((e, s))
        })
        .collect::<Result<_, Failure>>()?;
    let mut cells = Vec::new();
    for (i, _) in subjects.iter().enumerate() {
        for &k in &strategies {
            let reps = a
                .repeat
                .unwrap_or(if k == StrategyKind::Mt { 100 } else { 10 });
            for r in 0..reps {
                cells.push((i, k, a.solver.seed + u64::from(r)));
            }
        }
    }
    let results: Vec<SessionResult> = cells
        .par_iter()
        .map(|&(i, k, seed)| {
            let (entry, subject) = &subjects[i];
            let r = run_session(subject, k, budgets(&a.solver, seed))
                .map_err(|e| Failure::Engine(format!("{} [{k}] seed {seed}: {e}", entry.name)))?;
            if a.sessions {
                let dir = a
                    .out
                    .join("sessions")
                    .join(&entry.name)
                    .join(k.name())
                    .join(format!("seed-{seed}"));
                write_session_dir(
                    &dir,
                    subject,
                    &entry.source,
                    entry.precondition.as_deref(),
                    &r,
                    WriteOptions::default(),
                )
                .map_err(|e| write_err(&dir, e))?;
            }
            Ok(r)
        })
        .collect::<Result<_, Failure>>()?;
    let table = aggregate(&results, reference).map_err(|e| Failure::Engine(e.to_string()))?;
    let flags = ordering_flags(&results);
    fs::create_dir_all(&a.out).map_err(|e| write_err(&a.out, e))?;
    let files = [
        ("bench.csv", table.to_csv()),
        ("bench_relative.csv", table.to_relative_csv()),
        (
            "bench_notes.txt",
            bench_notes(&table, &flags, a.solver.solver_budget),
        ),
    ];
    for (name, text) in files {
        let p = a.out.join(name);
        fs::write(&p, text).map_err(|e| write_err(&p, e))?;
    }
    for (p, c) in correlation(&table) {
        match c {
            Correlation::Rho(r) => println!("{p}: rho {r:.3}"),
            Correlation::Undefined => println!("{p}: rho undefined"),
        }
    }
    println!(
        "{} sessions, {} ordering flags; tables in {}",
        results.len(),
        flags.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Outcome {
    let (_, subject) = load_subject(&a.file, a.precondition.as_deref())?;
    let truth = oracle(subject.program(), subject.cfg(), a.cap)
        .map_err(|e| Failure::Input(e.to_string()))?;
    println!(
        "{}: {} inputs, {} valid, {} aborted",
        subject.program().name(),
        truth.enumerated,
        truth.valid,
        truth.aborted
    );
    println!(
        "branches {}, reachable {}, feasible paths {}",
        subject.cfg().branch_count(),
        truth.reachable.len(),
        truth.paths.len()
    );
    for b in truth.unreachable(subject.cfg()) {
        let d = subject.cfg().decision(b.decision);
        println!("unreachable {b} at {} ({})", d.span, d.text);
    }
    Ok(())
}

fn cmd_check(dir: PathBuf) -> Outcome {
    let report = check_session_dir(&dir).map_err(|e| Failure::Input(e.to_string()))?;
    println!(
        "{}: {} tests replayed, {} unsat claims verified",
        dir.display(),
        report.tests_replayed,
        report.unsat_claims_verified
    );
    if let Some(size) = report.unsat_unchecked {
        println!("unsat claims not re-checked: domain of {size} inputs exceeds the oracle cap");
    }
    if report.failures.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = report.failures.iter().map(ToString::to_string).collect();
    Err(Failure::Engine(lines.join("\n")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Check { dir } => cmd_check(dir),
    }));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Input(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Engine(msg))) => {
            eprintln!("engine failure: {msg}");
            ExitCode::from(2)
        }
        // assertion failures inside the engine; the panic hook has already printed them
        Err(_) => ExitCode::from(2),
    }
}
