//! A complete test-generation session and its on-disk report bundle.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cfg::BranchId;
use crate::concolic::{parse_test_file, EngineError, RuntimeAbort, Subject, TestCase};
use crate::coverage::{BranchStatus, CoverageMap, ExplainedOutcome, Explanation};
use crate::lang::{load, Diagnostics};
use crate::oracle::{oracle, run_direct, DomainTooLarge, DEFAULT_INPUT_CAP};
use crate::strategy::{
    explore, Budgets, Counters, FlipAttempt, QuantumRecord, SessionOutcome, StrategyKind,
    TestRecord,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSummary {
    pub id: usize,
    pub test: usize,
    pub branches: Vec<BranchId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort: Option<RuntimeAbort>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionResult {
    pub program: String,
    pub strategy: StrategyKind,
    pub seed: u64,
    pub solver_budget: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_solver_calls: Option<u64>,
    pub outcome: SessionOutcome,
    pub branches: usize,
    pub covered: usize,
    pub counters: Counters,
    pub coverage: CoverageMap,
    pub explanations: Vec<Explanation>,
    pub tests: Vec<TestRecord>,
    pub paths: Vec<PathSummary>,
    pub attempts: Vec<FlipAttempt>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub quantum_log: Vec<QuantumRecord>,
    /// Kept out of the report bundle so identical runs produce identical files.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SessionResult {
    pub fn unknown_outcomes(&self) -> usize {
        self.attempts
            .iter()
            .filter(|a| matches!(a.outcome, crate::strategy::AttemptOutcome::Unknown { .. }))
            .count()
    }

    pub fn covered_set(&self) -> Vec<BranchId> {
        self.coverage
            .branches()
            .filter(|(_, s)| matches!(s, BranchStatus::Covered { .. }))
            .map(|(b, _)| b)
            .collect()
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} [{}] seed {}: coverage {}/{}",
            self.program, self.strategy, self.seed, self.covered, self.branches
        );
        let unreachable = self
            .explanations
            .iter()
            .filter(|e| e.status == BranchStatus::DemonstratedUnreachable)
            .count();
        let unknown = self.explanations.len() - unreachable;
        let c = &self.counters;
        let _ = write!(
            s,
            ", {unreachable} unreachable, {unknown} unknown; {} tests, {} solver calls, {} hopeful flips",
            c.tests_generated, c.solver_calls, c.hopeful_flips
        );
        match self.outcome {
            SessionOutcome::Complete => {}
            SessionOutcome::Incomplete => s.push_str(" (incomplete: solver-call cap reached)"),
            SessionOutcome::Vacuous => s.push_str(" (vacuous: no valid inputs)"),
            SessionOutcome::PreconditionTooHard { budget } => {
                let _ = write!(s, " (precondition too hard for budget {budget})");
            }
        }
        s
    }
}

/// Runs one session.
pub fn run_session(
    subject: &Subject,
    kind: StrategyKind,
    budgets: Budgets,
) -> Result<SessionResult, EngineError> {
    let start = Instant::now();
    let ex = explore(subject, kind, budgets)?;
    Ok(SessionResult {
        program: subject.program().name().to_string(),
        strategy: kind,
        seed: budgets.seed,
        solver_budget: budgets.solver_budget,
        max_solver_calls: budgets.max_solver_calls,
        outcome: ex.outcome,
        branches: ex.coverage.len(),
        covered: ex.coverage.covered_count(),
        counters: ex.counters,
        coverage: ex.coverage,
        explanations: ex.explanations,
        tests: ex.tests,
        paths: ex
            .paths
            .into_iter()
            .map(|p| PathSummary {
                id: p.id,
                test: p.test,
                branches: p.branches(),
                abort: p.abort,
            })
            .collect(),
        attempts: ex.attempts,
        quantum_log: ex.quantum_log,
        wall_time: start.elapsed(),
    })
}

/// Optional extras for the session directory.
#[derive(Debug, Clone, Copy, Default)]
pub struct WriteOptions {
    pub dump_cfg: bool,
    pub quantum_log: bool,
}

pub fn test_file_name(id: usize) -> String {
    format!("test_{id:04}.txt")
}

fn branch_list(bs: &[BranchId]) -> String {
    bs.iter()
        .map(BranchId::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn coverage_csv(subject: &Subject, result: &SessionResult) -> String {
    let mut out = String::from("branch,line,column,status,first_test,covers\n");
    for (b, status) in result.coverage.branches() {
        let d = subject.cfg().decision(b.decision);
        let first = match status {
            BranchStatus::Covered { first_test } => first_test.to_string(),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            b,
            d.span.line,
            d.span.col,
            status.label(),
            first,
            result.coverage.count(b)
        );
    }
    out
}

pub fn manifest_csv(result: &SessionResult) -> String {
    let mut out = String::from("test,provenance,path,newly_covered\n");
    for t in &result.tests {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            t.test.id,
            t.test.provenance,
            t.path,
            branch_list(&t.newly_covered)
        );
    }
    out
}

pub fn explanations_text(result: &SessionResult) -> String {
    let mut out = format!(
        "# {}: {} uncovered of {} branches; solver budget {} labeling decisions per solve\n",
        result.program,
        result.explanations.len(),
        result.branches,
        result.solver_budget
    );
    for e in &result.explanations {
        out.push_str(&e.to_string());
    }
    out
}

pub fn quantum_log_csv(log: &[QuantumRecord]) -> String {
    let mut out = String::from(QuantumRecord::CSV_HEADER);
    out.push('\n');
    for r in log {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Writes the report bundle. `source` and `external_precondition` are stored so that `check`
/// can rebuild the program exactly.
pub fn write_session_dir(
    dir: &Path,
    subject: &Subject,
    source: &str,
    external_precondition: Option<&str>,
    result: &SessionResult,
    options: WriteOptions,
) -> io::Result<()> {
    fs::create_dir_all(dir.join("tests"))?;
    fs::write(dir.join("program.bc"), source)?;
    let pre = dir.join("precondition.txt");
    match external_precondition {
        Some(p) => fs::write(&pre, format!("{p}\n"))?,
        None if pre.exists() => fs::remove_file(&pre)?,
        None => {}
    }
    let json = serde_json::to_string_pretty(result).map_err(io::Error::other)?;
    fs::write(dir.join("session.json"), json + "\n")?;
    fs::write(dir.join("coverage.csv"), coverage_csv(subject, result))?;
    fs::write(dir.join("explanations.txt"), explanations_text(result))?;
    fs::write(dir.join("manifest.csv"), manifest_csv(result))?;
    for t in &result.tests {
        fs::write(
            dir.join("tests").join(test_file_name(t.test.id)),
            t.test.render(subject.program()),
        )?;
    }
    if options.dump_cfg {
        fs::write(dir.join("cfg.dot"), subject.cfg().to_dot(subject.program()))?;
        fs::write(dir.join("branches.csv"), subject.cfg().branch_table_csv())?;
    }
    if options.quantum_log {
        fs::write(
            dir.join("quantum_log.csv"),
            quantum_log_csv(&result.quantum_log),
        )?;
    }
    Ok(())
}

/// Problems that stop `check` from examining a directory at all.
#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("program.bc: {0}")]
    Program(Diagnostics),
    #[error("session.json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("program.bc: constants overflow the engine width")]
    Overflow,
}

/// A claim in the session directory that did not hold up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckFailure {
    /// A test file is unreadable, invalid, or replays to a different path.
    Replay {
        file: String,
        reason: String,
    },
    Coverage {
        branch: BranchId,
        reason: String,
    },
    /// An Unsat explanation whose prefix some valid input follows.
    UnsatClaim {
        branch: BranchId,
        attempt: usize,
    },
}

impl std::fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CheckFailure::Replay { file, reason } => {
                write!(f, "replay of tests/{file} failed: {reason}")
            }
            CheckFailure::Coverage { branch, reason } => {
                write!(f, "coverage of {branch}: {reason}")
            }
            CheckFailure::UnsatClaim { branch, attempt } => write!(
                f,
                "explanation of {branch}: attempt {attempt} claims Unsat but the prefix is feasible"
            ),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub tests_replayed: usize,
    pub unsat_claims_verified: usize,
    /// Set when the domain exceeds the oracle cap and Unsat claims could not be re-checked.
    pub unsat_unchecked: Option<u128>,
    pub failures: Vec<CheckFailure>,
}

/// Re-verifies a session directory: replays every test on the direct interpreter and re-checks
/// every Unsat claim by enumeration.
pub fn check_session_dir(dir: &Path) -> Result<CheckReport, CheckError> {
    let read =
        |p: PathBuf| fs::read_to_string(&p).map_err(|source| CheckError::Io { path: p, source });
    let source = read(dir.join("program.bc"))?;
    let pre_path = dir.join("precondition.txt");
    let pre = if pre_path.exists() {
        Some(read(pre_path)?.trim().to_string())
    } else {
        None
    };
    let program = load(&source, pre.as_deref()).map_err(CheckError::Program)?;
    let subject = Subject::new(program).map_err(|_| CheckError::Overflow)?;
    let result: SessionResult = serde_json::from_str(&read(dir.join("session.json"))?)?;
    let mut report = CheckReport::default();
    let program = subject.program();
    let mut covered = vec![false; subject.cfg().branch_count()];

    for t in &result.tests {
        let file = test_file_name(t.test.id);
        let fail = |reason: String| CheckFailure::Replay {
            file: file.clone(),
            reason,
        };
        let text = match fs::read_to_string(dir.join("tests").join(&file)) {
            Ok(t) => t,
            Err(e) => {
                report.failures.push(fail(e.to_string()));
                continue;
            }
        };
        let inputs = match parse_test_file(program, &text).and_then(|inputs| {
            TestCase::new(program, t.test.id, &inputs, t.test.provenance).map(|_| inputs)
        }) {
            Ok(i) => i,
            Err(e) => {
                report.failures.push(fail(e.to_string()));
                continue;
            }
        };
        if inputs != t.test.inputs() {
            report.failures.push(fail(
                "values differ from the ones recorded in session.json".to_string(),
            ));
            continue;
        }
        let run = run_direct(program, subject.cfg(), &inputs);
        let Some(recorded) = result.paths.get(t.path) else {
            report
                .failures
                .push(fail(format!("session names unknown path {}", t.path)));
            continue;
        };
        if run.branches != recorded.branches {
            report.failures.push(fail(format!(
                "expected [{}], replayed [{}]",
                branch_list(&recorded.branches),
                branch_list(&run.branches)
            )));
            continue;
        }
        for b in &run.branches {
            covered[b.index()] = true;
        }
        report.tests_replayed += 1;
    }

    for (b, status) in result.coverage.branches() {
        let is_covered = matches!(status, BranchStatus::Covered { .. });
        if is_covered != covered[b.index()] {
            report.failures.push(CheckFailure::Coverage {
                branch: b,
                reason: if is_covered {
                    "claimed covered but no replayed test covers it".to_string()
                } else {
                    "a replayed test covers it but it is reported uncovered".to_string()
                },
            });
        }
    }

    match oracle(program, subject.cfg(), DEFAULT_INPUT_CAP) {
        Ok(truth) => {
            for e in &result.explanations {
                for a in &e.attempts {
                    if let ExplainedOutcome::Unsat { .. } = a.outcome {
                        if truth.prefix_feasible(&a.prefix) {
                            report.failures.push(CheckFailure::UnsatClaim {
                                branch: e.branch,
                                attempt: a.attempt,
                            });
                        } else {
                            report.unsat_claims_verified += 1;
                        }
                    }
                }
                if e.status == BranchStatus::DemonstratedUnreachable
                    && truth.reachable.contains(&e.branch)
                {
                    report.failures.push(CheckFailure::Coverage {
                        branch: e.branch,
                        reason: "claimed unreachable but some valid input covers it".to_string(),
                    });
                }
            }
        }
        Err(DomainTooLarge { size, .. }) => report.unsat_unchecked = Some(size),
    }
    Ok(report)
}
