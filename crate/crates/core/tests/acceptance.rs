//! Acceptance suite. Prints one PASS/FAIL line per criterion, then fails if any criterion did.
//!
//! Run with `cargo test -p branchcrawler --test acceptance`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use branchcrawler::cfg::BranchId;
use branchcrawler::concolic::Subject;
use branchcrawler::corpus::{build_corpus, CorpusEntry};
use branchcrawler::coverage::{BranchStatus, ExplainedOutcome};
use branchcrawler::lang::{load, RelOp};
use branchcrawler::oracle::{oracle, run_direct, OracleResult, DEFAULT_INPUT_CAP};
use branchcrawler::report::{aggregate, correlation, ordering_flags, Correlation};
use branchcrawler::session::{
    check_session_dir, run_session, write_session_dir, SessionResult, WriteOptions,
};
use branchcrawler::solver::{
    Constraint, LinExpr, PushOutcome, SolveOutcome, SolverState, SymVar, VarId,
};
use branchcrawler::strategy::{AttemptOutcome, Budgets, Phase, Priority, StrategyKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 10;
const MT_SEEDS: u64 = 100;
const CELL_LIMIT: Duration = Duration::from_secs(60);
const RANDOM_PROGRAMS: u64 = 1000;
const MIN_RHO: f64 = 0.8;

const P1: &str = "fun main(x: int[-4..4]) { if (x < 0) { r = 0 - x; } else { r = x; } }";
const P2: &str = "fun main(x: int[0..10]) { if (x >= 0) { r = 1; } else { r = 2; } }";

struct Verdict {
    id: u32,
    pass: bool,
    detail: String,
}

fn verdict(id: u32, problems: &[String], ok_detail: String) -> Verdict {
    Verdict {
        id,
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            ok_detail
        } else {
            let mut d = format!("{} problem(s); first: {}", problems.len(), problems[0]);
            if problems.len() > 1 {
                d.push_str(&format!("; last: {}", problems[problems.len() - 1]));
            }
            d
        },
    }
}

struct EntryRuns {
    entry: CorpusEntry,
    subject: Subject,
    oracle: OracleResult,
    results: Vec<SessionResult>,
}

fn seeds_for(kind: StrategyKind) -> u64 {
    if kind == StrategyKind::Mt {
        MT_SEEDS
    } else {
        SEEDS
    }
}

fn run_corpus() -> Vec<EntryRuns> {
    let entries = build_corpus();
    std::thread::scope(|scope| {
        let handles: Vec<_> = entries
            .into_iter()
            .map(|entry| {
                scope.spawn(move || {
                    let subject = entry.subject().unwrap();
                    let oracle =
                        oracle(subject.program(), subject.cfg(), DEFAULT_INPUT_CAP).unwrap();
                    let mut results = Vec::new();
                    for kind in StrategyKind::ALL {
                        for seed in 0..seeds_for(kind) {
                            let budgets = Budgets {
                                seed,
                                ..Budgets::default()
                            };
                            match run_session(&subject, kind, budgets) {
                                Ok(r) => results.push(r),
                                Err(e) => panic!("{} {kind} seed {seed}: {e}", entry.name),
                            }
                        }
                    }
                    EntryRuns {
                        entry,
                        subject,
                        oracle,
                        results,
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

fn tag(r: &SessionResult) -> String {
    format!("{} {} seed {}", r.program, r.strategy, r.seed)
}

fn covered(r: &SessionResult) -> BTreeSet<BranchId> {
    r.covered_set().into_iter().collect()
}

fn exhaustive(runs: &[EntryRuns]) -> Verdict {
    let mut problems = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut unknown = 0;
    for er in runs {
        for r in &er.results {
            slowest = slowest.max(r.wall_time);
            if r.wall_time >= CELL_LIMIT {
                problems.push(format!("{} took {:?}", tag(r), r.wall_time));
            }
            unknown += r.unknown_outcomes();
            if r.unknown_outcomes() > 0 {
                problems.push(format!(
                    "{}: {} Unknown outcomes",
                    tag(r),
                    r.unknown_outcomes()
                ));
            }
            let explained: BTreeSet<BranchId> = r.explanations.iter().map(|e| e.branch).collect();
            if r.covered + explained.len() != r.branches {
                problems.push(format!(
                    "{}: {} covered + {} explained != {} branches",
                    tag(r),
                    r.covered,
                    explained.len(),
                    r.branches
                ));
            }
        }
    }
    let sessions: usize = runs.iter().map(|e| e.results.len()).sum();
    verdict(
        1,
        &problems,
        format!("{sessions} sessions, all branches covered or explained, {unknown} Unknown, slowest session {slowest:.2?}"),
    )
}

fn oracle_equivalence(runs: &[EntryRuns]) -> Verdict {
    let mut problems = Vec::new();
    for er in runs {
        for r in &er.results {
            if covered(r) != er.oracle.reachable {
                problems.push(format!("{}: covered set differs from the oracle", tag(r)));
            }
        }
    }
    verdict(
        2,
        &problems,
        format!("covered == oracle-reachable for {} entries x 5 strategies ({SEEDS} seeds, {MT_SEEDS} for mt)", runs.len()),
    )
}

fn unreachability(runs: &[EntryRuns], scratch: &Path) -> Verdict {
    let mut problems = Vec::new();
    let mut demonstrated = 0;
    let mut verified = 0;
    for er in runs {
        let unreachable: BTreeSet<BranchId> = er
            .oracle
            .unreachable(er.subject.cfg())
            .into_iter()
            .collect();
        for r in &er.results {
            for e in &r.explanations {
                let all_unsat = !e.attempts.is_empty()
                    && e.attempts
                        .iter()
                        .all(|a| matches!(a.outcome, ExplainedOutcome::Unsat { .. }));
                if unreachable.contains(&e.branch) {
                    if e.status != BranchStatus::DemonstratedUnreachable || !all_unsat {
                        problems.push(format!("{}: {} is {}", tag(r), e.branch, e.status.label()));
                    }
                    demonstrated += 1;
                } else {
                    problems.push(format!(
                        "{}: reachable {} has an explanation",
                        tag(r),
                        e.branch
                    ));
                }
            }
        }
        for r in er.results.iter().filter(|r| r.seed == 0) {
            let dir = scratch.join(format!("c3-{}-{}", er.entry.name, r.strategy));
            write_session_dir(
                &dir,
                &er.subject,
                &er.entry.source,
                er.entry.precondition.as_deref(),
                r,
                WriteOptions::default(),
            )
            .unwrap();
            match check_session_dir(&dir) {
                Ok(report) => {
                    verified += report.unsat_claims_verified;
                    if report.unsat_unchecked.is_some() {
                        problems.push(format!("{}: Unsat claims not re-checked", tag(r)));
                    }
                    if !unreachable.is_empty() && report.unsat_claims_verified == 0 {
                        problems.push(format!("{}: check verified no Unsat claims", tag(r)));
                    }
                    problems.extend(
                        report
                            .failures
                            .iter()
                            .map(|f| format!("{}: check: {f}", tag(r))),
                    );
                }
                Err(e) => problems.push(format!("{}: check: {e}", tag(r))),
            }
        }
    }
    verdict(
        3,
        &problems,
        format!("{demonstrated} unreachable-branch explanations, all DemonstratedUnreachable; check re-verified {verified} Unsat claims"),
    )
}

fn prefix_violations(subject: &Subject, r: &SessionResult) -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut problems = Vec::new();
    for a in &r.attempts {
        let AttemptOutcome::NewTest { test, path } = a.outcome else {
            continue;
        };
        checked += 1;
        let mut expected = a.prefix.clone();
        expected.push(a.flipped_to);
        let record = r.tests.iter().find(|t| t.test.id == test).unwrap();
        let replay = run_direct(subject.program(), subject.cfg(), &record.test.inputs()).branches;
        if !replay.starts_with(&expected) || r.paths[path].branches != replay {
            problems.push(format!(
                "{} attempt {}: path does not extend flip(p{}, {})",
                tag(r),
                a.seq,
                a.path,
                a.index
            ));
        }
    }
    (checked, problems)
}

fn prefix_soundness(runs: &[EntryRuns]) -> Verdict {
    let mut problems = Vec::new();
    let mut checked = 0;
    for er in runs {
        for r in &er.results {
            let (n, p) = prefix_violations(&er.subject, r);
            checked += n;
            problems.extend(p);
        }
    }
    let random: Vec<(usize, Vec<String>)> = std::thread::scope(|scope| {
        let workers = 8;
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut checked = 0;
                    let mut problems = Vec::new();
                    for seed in (0..RANDOM_PROGRAMS).filter(|s| s % workers == w) {
                        let src = common::random_program(seed);
                        let subject = Subject::new(load(&src, None).unwrap()).unwrap();
                        for kind in StrategyKind::ALL {
                            match run_session(
                                &subject,
                                kind,
                                Budgets {
                                    seed,
                                    ..Budgets::default()
                                },
                            ) {
                                Ok(r) => {
                                    let (n, p) = prefix_violations(&subject, &r);
                                    checked += n;
                                    problems.extend(
                                        p.into_iter().map(|p| format!("random #{seed}: {p}")),
                                    );
                                }
                                Err(e) => problems.push(format!("random #{seed} {kind}: {e}")),
                            }
                        }
                    }
                    (checked, problems)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (n, p) in random {
        checked += n;
        problems.extend(p);
    }
    verdict(
        4,
        &problems,
        format!("{checked} NewTest results (corpus + {RANDOM_PROGRAMS} random programs x 5 strategies), 0 violations"),
    )
}

fn random_system(rng: &mut ChaCha8Rng) -> (Vec<SymVar>, Vec<Constraint>) {
    let n = rng.gen_range(1..=3);
    let width = match n {
        1 => 60,
        2 => 40,
        _ => 20,
    };
    let vars: Vec<SymVar> = (0..n)
        .map(|i| {
            let lo = rng.gen_range(-10..=10);
            SymVar {
                name: format!("x{i}"),
                lo,
                hi: lo + rng.gen_range(0..width),
            }
        })
        .collect();
    let ops = [
        RelOp::Lt,
        RelOp::Le,
        RelOp::Eq,
        RelOp::Ne,
        RelOp::Gt,
        RelOp::Ge,
    ];
    let cs = (0..rng.gen_range(0..=4))
        .map(|_| {
            let v = |rng: &mut ChaCha8Rng| LinExpr::var(VarId(rng.gen_range(0..n as u32)));
            let lhs = match rng.gen_range(0..6) {
                0 => v(rng).mul(&v(rng)).unwrap(),
                1 => v(rng)
                    .div(&LinExpr::constant(rng.gen_range(1..=4)))
                    .unwrap()
                    .unwrap(),
                2 => v(rng)
                    .rem(&LinExpr::constant(rng.gen_range(1..=4)))
                    .unwrap()
                    .unwrap(),
                _ => (0..rng.gen_range(1..=3)).fold(LinExpr::constant(0), |acc, _| {
                    acc.add(&v(rng).scale(rng.gen_range(-3..=3)).unwrap())
                        .unwrap()
                }),
            };
            let op = ops[rng.gen_range(0..ops.len())];
            Constraint::cmp(lhs, op, LinExpr::constant(rng.gen_range(-15..=15))).unwrap()
        })
        .collect();
    (vars, cs)
}

fn models(vars: &[SymVar]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|m| {
                (v.lo..=v.hi).map(move |x| {
                    let mut m = m.clone();
                    m.push(x);
                    m
                })
            })
            .collect();
    }
    out
}

fn solver_correctness() -> Verdict {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let systems = 3000;
    let mut sat = 0;
    for k in 0..systems {
        let (vars, cs) = random_system(&mut rng);
        let seed = if k % 2 == 0 { 0 } else { rng.gen() };
        let all = models(&vars);
        assert!(all.len() <= 10_000);
        let truth = all.iter().any(|m| cs.iter().all(|c| c.holds(m)));
        let mut s = SolverState::init(vars, Vec::new(), seed).unwrap();
        let mut consistent = true;
        for c in &cs {
            if s.push(c.clone()) == PushOutcome::Inconsistent {
                consistent = false;
                break;
            }
        }
        let outcome = if consistent {
            s.solve(10_000_000)
        } else {
            SolveOutcome::Unsat
        };
        match outcome {
            SolveOutcome::Sat(m) if truth && cs.iter().all(|c| c.holds(&m)) => sat += 1,
            SolveOutcome::Unsat if !truth => {}
            other => problems.push(format!(
                "system {k}: got {other:?}, enumeration says sat={truth}"
            )),
        }
    }
    let sequences = 10_000;
    for k in 0..sequences {
        let (vars, pool) = random_system(&mut rng);
        if pool.is_empty() {
            continue;
        }
        let mut s = SolverState::init(vars.clone(), Vec::new(), 0).unwrap();
        let mut live: Vec<Constraint> = Vec::new();
        for _ in 0..rng.gen_range(1..30) {
            if (rng.gen_bool(0.6) || live.is_empty()) && s.is_consistent() {
                let c = pool[rng.gen_range(0..pool.len())].clone();
                s.push(c.clone());
                live.push(c);
            } else if !live.is_empty() {
                s.pop();
                live.pop();
            }
            let mut fresh = SolverState::init(vars.clone(), Vec::new(), 0).unwrap();
            let mut fresh_ok = true;
            for c in &live {
                if fresh.push(c.clone()) == PushOutcome::Inconsistent {
                    fresh_ok = false;
                    break;
                }
            }
            if fresh_ok != s.is_consistent() || (fresh_ok && fresh.intervals() != s.intervals()) {
                problems.push(format!(
                    "sequence {k}: state differs from rebuild at depth {}",
                    live.len()
                ));
                break;
            }
        }
    }
    // a starved budget is the only source of Unknown
    let vars: Vec<SymVar> = (0..3)
        .map(|i| SymVar {
            name: format!("x{i}"),
            lo: 0,
            hi: 50,
        })
        .collect();
    let mut s = SolverState::init(vars, Vec::new(), 0).unwrap();
    let p = LinExpr::var(VarId(0))
        .mul(&LinExpr::var(VarId(1)))
        .unwrap()
        .mul(&LinExpr::var(VarId(2)))
        .unwrap();
    s.push(Constraint::cmp(p, RelOp::Eq, LinExpr::constant(125_000)).unwrap());
    if s.solve(3) != (SolveOutcome::Unknown { budget: 3 }) {
        problems.push("starved budget did not report Unknown".to_string());
    }
    verdict(
        5,
        &problems,
        format!("{systems} systems agree with enumeration ({sat} sat), {sequences} push/pop sequences match rebuild"),
    )
}

fn counter_contracts(runs: &[EntryRuns]) -> (Verdict, usize) {
    let mut problems = Vec::new();
    let s1 = Subject::new(load(P1, None).unwrap()).unwrap();
    let r = run_session(&s1, StrategyKind::Dfs, Budgets::default()).unwrap();
    if r.counters.solver_calls != 2 || r.counters.hopeful_flips != 0 {
        problems.push(format!(
            "P1 dfs: {} solver calls, {} hopeful flips",
            r.counters.solver_calls, r.counters.hopeful_flips
        ));
    }
    let s2 = Subject::new(load(P2, None).unwrap()).unwrap();
    for kind in StrategyKind::ALL {
        let r = run_session(&s2, kind, Budgets::default()).unwrap();
        if r.attempts.len() != 1 || !matches!(r.attempts[0].outcome, AttemptOutcome::Unsat { .. }) {
            problems.push(format!("P2 {kind}: {} attempts", r.attempts.len()));
        }
    }
    let all: Vec<SessionResult> = runs
        .iter()
        .flat_map(|e| e.results.iter().cloned())
        .collect();
    let flags = ordering_flags(&all);
    let free: Vec<&str> = runs
        .iter()
        .filter(|e| e.oracle.unreachable(e.subject.cfg()).is_empty())
        .map(|e| e.entry.name.as_str())
        .collect();
    let free_flags = flags
        .iter()
        .filter(|f| free.contains(&f.program.as_str()))
        .count();
    let detail = format!(
        "P1 dfs 2 calls / 0 hopeful, P2 1 Unsat attempt; ordering flags: {} total, {} on unreachable-free entries {:?} (reported, not failed)",
        flags.len(),
        free_flags,
        free
    );
    (verdict(6, &problems, detail), flags.len())
}

fn correlation_check(runs: &[EntryRuns]) -> Verdict {
    let all: Vec<SessionResult> = runs
        .iter()
        .flat_map(|e| e.results.iter().cloned())
        .collect();
    let table = aggregate(&all, StrategyKind::Dfs).unwrap();
    let mut problems = Vec::new();
    let mut shown = Vec::new();
    for (p, c) in correlation(&table) {
        match c {
            Correlation::Rho(r) => {
                shown.push(format!("{p} {r:.3}"));
                if r < MIN_RHO {
                    problems.push(format!("{p}: rho {r:.3} < {MIN_RHO}"));
                }
            }
            Correlation::Undefined => problems.push(format!("{p}: rho undefined")),
        }
    }
    verdict(
        7,
        &problems,
        format!("rho >= {MIN_RHO}: {}", shown.join(", ")),
    )
}

fn definitional(runs: &[EntryRuns]) -> Verdict {
    let mut problems = Vec::new();
    let mut quanta = 0;
    for er in runs {
        for r in &er.results {
            if r.strategy == StrategyKind::Else {
                let mut backtracking = BTreeSet::new();
                for a in &r.attempts {
                    match a.phase {
                        Some(Phase::Backtrack) => {
                            backtracking.insert(a.task);
                        }
                        Some(Phase::Advance) if backtracking.contains(&a.task) || a.hopeful => {
                            problems.push(format!(
                                "{}: attempt {} advances after backtracking or is hopeful",
                                tag(r),
                                a.seq
                            ));
                        }
                        _ => {}
                    }
                }
            }
            if r.strategy == StrategyKind::Mt {
                quanta += r.quantum_log.len();
                for q in &r.quantum_log {
                    if q.priority == Priority::Low && q.high_waiting > 0 {
                        problems.push(format!(
                            "{}: low quantum at turn {} with {} high waiting",
                            tag(r),
                            q.turn,
                            q.high_waiting
                        ));
                    }
                }
            }
            if r.covered == r.branches {
                // the attempt that completed coverage is the last one in the log
                let mut seen = BTreeSet::new();
                let mut done_at = None;
                for t in &r.tests {
                    seen.extend(t.newly_covered.iter().copied());
                    if seen.len() == r.branches {
                        done_at = Some(t.test.id);
                        break;
                    }
                }
                let last_ok = match (done_at, r.attempts.last()) {
                    (Some(0), None) => true,
                    (Some(id), Some(a)) => {
                        matches!(a.outcome, AttemptOutcome::NewTest { test, .. } if test == id)
                    }
                    _ => false,
                };
                let mt_ok = r.strategy != StrategyKind::Mt
                    || r.quantum_log
                        .last()
                        .is_some_and(|q| q.action.contains("new-path"));
                if !last_ok || !mt_ok {
                    problems.push(format!("{}: activity after full coverage", tag(r)));
                }
            }
        }
    }
    verdict(
        8,
        &problems,
        format!("else phase order holds, {quanta} mt quanta with no low turn while high waits, no solver work after full coverage"),
    )
}

fn dir_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn determinism(runs: &[EntryRuns], scratch: &Path) -> Verdict {
    let mut problems = Vec::new();
    let mut cells = 0;
    let opts = WriteOptions {
        dump_cfg: true,
        quantum_log: true,
    };
    for er in runs {
        for kind in StrategyKind::ALL {
            cells += 1;
            let seed = 1;
            let mut dumps = Vec::new();
            for run in 0..2 {
                let r = run_session(
                    &er.subject,
                    kind,
                    Budgets {
                        seed,
                        ..Budgets::default()
                    },
                )
                .unwrap();
                let dir = scratch.join(format!("c9-{}-{kind}-{run}", er.entry.name));
                write_session_dir(
                    &dir,
                    &er.subject,
                    &er.entry.source,
                    er.entry.precondition.as_deref(),
                    &r,
                    opts,
                )
                .unwrap();
                dumps.push(dir_bytes(&dir));
            }
            if dumps[0] != dumps[1] {
                problems.push(format!(
                    "{} {kind}: session directories differ",
                    er.entry.name
                ));
            }
        }
    }
    verdict(
        9,
        &problems,
        format!("{cells} cells, two runs each, byte-identical session directories"),
    )
}

#[test]
fn acceptance() {
    let scratch = tempfile::tempdir().unwrap();
    let runs = run_corpus();
    let (c6, _) = counter_contracts(&runs);
    let verdicts = vec![
        exhaustive(&runs),
        oracle_equivalence(&runs),
        unreachability(&runs, scratch.path()),
        prefix_soundness(&runs),
        solver_correctness(),
        c6,
        correlation_check(&runs),
        definitional(&runs),
        determinism(&runs, scratch.path()),
    ];
    // written to the real stdout so the lines survive test output capture
    let mut out = std::io::stdout().lock();
    for v in &verdicts {
        let status = if v.pass { "PASS" } else { "FAIL" };
        writeln!(out, "{status} criterion {}: {}", v.id, v.detail).unwrap();
    }
    out.flush().unwrap();
    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
