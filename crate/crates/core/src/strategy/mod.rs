//! Path-exploration strategies over the concolic core.

mod mt;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cfg::BranchId;
use crate::concolic::{
    execute, flip, initial_test, EngineError, FlipOutcome, FlipRequest, InitialOutcome, Path,
    RuntimeAbort, Subject, TestCase,
};
use crate::coverage::{finalize_explanations, CoverageMap, Explanation, SessionLimits};
use crate::solver::{PushOutcome, SolverState};

pub use mt::{Priority, QuantumRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Dfs,
    Eager,
    Lookahead,
    Else,
    Mt,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Dfs,
        StrategyKind::Eager,
        StrategyKind::Lookahead,
        StrategyKind::Else,
        StrategyKind::Mt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Dfs => "dfs",
            StrategyKind::Eager => "eager",
            StrategyKind::Lookahead => "lookahead",
            StrategyKind::Else => "else",
            StrategyKind::Mt => "mt",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy `{0}` (expected dfs, eager, lookahead, else or mt)")]
pub struct UnknownStrategy(pub String);

impl FromStr for StrategyKind {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    /// Labeling decisions allowed per solve.
    pub solver_budget: u64,
    /// Stop the session (as incomplete) once this many solver calls have been made.
    pub max_solver_calls: Option<u64>,
    pub seed: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            solver_budget: 100_000,
            max_solver_calls: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Advance,
    Backtrack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttemptOutcome {
    NewTest { test: usize, path: usize },
    Unsat { by_propagation: bool },
    Unknown { budget: u64 },
}

/// One attempt to negate `c_index` of a path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipAttempt {
    pub seq: usize,
    /// The suffix task (MT: the worker) that made the attempt.
    pub task: usize,
    pub path: usize,
    pub index: usize,
    /// Branches `b_0 .. b_{index-1}`.
    pub prefix: Vec<BranchId>,
    pub flipped_to: BranchId,
    pub hopeful: bool,
    pub phase: Option<Phase>,
    pub outcome: AttemptOutcome,
    /// Live conjunction for Unsat and Unknown outcomes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub solver_calls: u64,
    pub flip_attempts: u64,
    /// Hopeful flips that reached the solver.
    pub hopeful_flips: u64,
    /// Hopeful flips refuted by propagation before any solve.
    pub hopeful_refuted_by_propagation: u64,
    /// Flips skipped by the connectivity filter.
    pub pruned_flips: u64,
    pub propagation_steps: u64,
    pub search_nodes: u64,
    pub tests_generated: u64,
    /// Branches first covered at a position past the flipped one.
    pub fortuitous_coverage: u64,
    pub runtime_aborts: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRecord {
    pub test: TestCase,
    pub path: usize,
    pub newly_covered: Vec<BranchId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort: Option<RuntimeAbort>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionOutcome {
    Complete,
    /// The solver-call cap stopped exploration.
    Incomplete,
    /// No input satisfies the precondition.
    Vacuous,
    PreconditionTooHard {
        budget: u64,
    },
}

/// Everything a strategy run produces, before reporting.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub outcome: SessionOutcome,
    pub counters: Counters,
    pub coverage: CoverageMap,
    pub explanations: Vec<Explanation>,
    pub tests: Vec<TestRecord>,
    pub paths: Vec<Path>,
    pub attempts: Vec<FlipAttempt>,
    pub quantum_log: Vec<QuantumRecord>,
}

/// A solver state together with the branch ids of its live constraints.
#[derive(Debug, Clone)]
pub(crate) struct Cursor {
    solver: SolverState,
    live: Vec<BranchId>,
}

impl Cursor {
    fn new(solver: SolverState) -> Self {
        Cursor {
            solver,
            live: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    Covered,
    CallCap,
}

pub(crate) struct Explorer<'s> {
    subject: &'s Subject,
    budgets: Budgets,
    coverage: CoverageMap,
    tests: Vec<TestRecord>,
    paths: Vec<Path>,
    attempts: Vec<FlipAttempt>,
    tried: HashSet<Vec<BranchId>>,
    counters: Counters,
    stop: Option<Stop>,
    next_task: usize,
}

impl<'s> Explorer<'s> {
    fn new(subject: &'s Subject, budgets: Budgets) -> Self {
        Explorer {
            subject,
            budgets,
            coverage: CoverageMap::new(subject.cfg().branch_count()),
            tests: Vec::new(),
            paths: Vec::new(),
            attempts: Vec::new(),
            tried: HashSet::new(),
            counters: Counters::default(),
            stop: None,
            next_task: 0,
        }
    }

    fn new_task(&mut self) -> usize {
        self.next_task += 1;
        self.next_task - 1
    }

    fn stopped(&mut self) -> bool {
        if self.stop.is_none() && self.coverage.is_complete() {
            self.stop = Some(Stop::Covered);
        }
        self.stop.is_some()
    }

    /// Registers a test and its execution as a new path; returns the path id.
    fn record(
        &mut self,
        test: TestCase,
        steps: Vec<crate::concolic::PathStep>,
        abort: Option<RuntimeAbort>,
        flipped: Option<usize>,
    ) -> usize {
        let path = self.paths.len();
        let mut newly = Vec::new();
        for (k, s) in steps.iter().enumerate() {
            if self.coverage.mark_covered(s.branch, test.id) {
                newly.push(s.branch);
                if flipped.is_some_and(|i| k > i) {
                    self.counters.fortuitous_coverage += 1;
                }
            }
        }
        if abort.is_some() {
            self.counters.runtime_aborts += 1;
        }
        self.paths.push(Path {
            id: path,
            test: test.id,
            steps,
            abort,
        });
        self.tests.push(TestRecord {
            test,
            path,
            newly_covered: newly,
            abort,
        });
        self.counters.tests_generated = self.tests.len() as u64;
        path
    }

    /// Pops and pushes until the cursor holds exactly the first `k` constraints of `path`.
    fn position(&mut self, cur: &mut Cursor, path: usize, k: usize) {
        let p = &self.paths[path];
        let common = cur
            .live
            .iter()
            .zip(&p.steps)
            .take_while(|(a, s)| **a == s.branch)
            .count();
        let keep = common.min(k);
        cur.solver.pop_to(keep);
        cur.live.truncate(keep);
        let before = cur.solver.propagation_steps();
        for s in &p.steps[keep..k] {
            let r = cur.solver.push(s.constraint());
            assert_eq!(
                r,
                PushOutcome::Consistent,
                "a covered path's own prefix was refuted"
            );
            cur.live.push(s.branch);
        }
        self.counters.propagation_steps += cur.solver.propagation_steps() - before;
    }

    /// Whether the flip of position `i` passes the connectivity filter.
    fn passes_filter(&self, path: usize, i: usize) -> bool {
        let to = self.paths[path].steps[i].branch.opposite();
        self.subject
            .reach()
            .can_lead_to_uncovered(to, &self.coverage)
    }

    /// Attempts `flip(path, i)`; returns the id of a newly covered path.
    ///
    /// `None` also covers skipped flips: already stopped, already tried, filtered out.
    fn attempt(
        &mut self,
        cur: &mut Cursor,
        task: usize,
        path: usize,
        i: usize,
        filter: bool,
        phase: Option<Phase>,
    ) -> Result<Option<usize>, EngineError> {
        if self.stopped() {
            return Ok(None);
        }
        let p = &self.paths[path];
        let key = p.flip_prefix(i);
        if self.tried.contains(&key) {
            return Ok(None);
        }
        let flipped_to = p.steps[i].branch.opposite();
        let hopeful = self.coverage.is_covered(flipped_to);
        if filter && !self.passes_filter(path, i) {
            self.counters.pruned_flips += 1;
            return Ok(None);
        }
        if self
            .budgets
            .max_solver_calls
            .is_some_and(|cap| self.counters.solver_calls >= cap)
        {
            self.stop = Some(Stop::CallCap);
            return Ok(None);
        }
        self.position(cur, path, i);
        self.tried.insert(key);
        let (prop0, nodes0) = (cur.solver.propagation_steps(), cur.solver.search_nodes());
        let p = &self.paths[path];
        let result = flip(
            self.subject,
            FlipRequest {
                path: p,
                index: i,
                hopeful,
            },
            &mut cur.solver,
            self.budgets.solver_budget,
            self.tests.len(),
        )?;
        let prefix: Vec<BranchId> = p.steps[..i].iter().map(|s| s.branch).collect();
        cur.live.push(flipped_to);
        self.counters.propagation_steps += cur.solver.propagation_steps() - prop0;
        self.counters.search_nodes += cur.solver.search_nodes() - nodes0;
        self.counters.flip_attempts += 1;
        if result.solver_called {
            self.counters.solver_calls += 1;
            if hopeful {
                self.counters.hopeful_flips += 1;
            }
        } else if hopeful {
            self.counters.hopeful_refuted_by_propagation += 1;
        }
        let (outcome, formula, child) = match result.outcome {
            FlipOutcome::NewTest { test, execution } => {
                let test_id = test.id;
                let child = self.record(test, execution.steps, execution.abort, Some(i));
                (
                    AttemptOutcome::NewTest {
                        test: test_id,
                        path: child,
                    },
                    None,
                    Some(child),
                )
            }
            FlipOutcome::InfeasiblePrefix {
                by_propagation,
                formula,
            } => (
                AttemptOutcome::Unsat { by_propagation },
                Some(formula),
                None,
            ),
            FlipOutcome::Unknown { formula, budget } => {
                (AttemptOutcome::Unknown { budget }, Some(formula), None)
            }
        };
        self.attempts.push(FlipAttempt {
            seq: self.attempts.len(),
            task,
            path,
            index: i,
            prefix,
            flipped_to,
            hopeful,
            phase,
            outcome,
            formula,
        });
        Ok(child)
    }

    fn dfs(&mut self, cur: &mut Cursor, path: usize, s0: usize) -> Result<(), EngineError> {
        let task = self.new_task();
        for i in (s0..self.paths[path].len()).rev() {
            if self.stopped() {
                break;
            }
            if let Some(child) = self.attempt(cur, task, path, i, false, None)? {
                self.dfs(cur, child, i + 1)?;
            }
        }
        Ok(())
    }

    fn eager(
        &mut self,
        cur: &mut Cursor,
        path: usize,
        s0: usize,
        filter: bool,
    ) -> Result<(), EngineError> {
        let task = self.new_task();
        for i in s0..self.paths[path].len() {
            if self.stopped() {
                break;
            }
            if let Some(child) = self.attempt(cur, task, path, i, filter, None)? {
                self.eager(cur, child, i + 1, filter)?;
            }
        }
        Ok(())
    }

    fn else_(&mut self, cur: &mut Cursor, path: usize, s0: usize) -> Result<(), EngineError> {
        let task = self.new_task();
        let len = self.paths[path].len();
        let mut advanced = vec![false; len];
        for i in s0..len {
            if self.stopped() {
                return Ok(());
            }
            if !self
                .coverage
                .is_covered(self.paths[path].steps[i].branch.opposite())
            {
                advanced[i] = true;
                if let Some(child) =
                    self.attempt(cur, task, path, i, false, Some(Phase::Advance))?
                {
                    self.else_(cur, child, i + 1)?;
                }
            }
        }
        for i in (s0..len).rev() {
            if self.stopped() {
                break;
            }
            if advanced[i] {
                continue;
            }
            if let Some(child) = self.attempt(cur, task, path, i, true, Some(Phase::Backtrack))? {
                self.else_(cur, child, i + 1)?;
            }
        }
        Ok(())
    }

    fn finish(mut self, quantum_log: Vec<QuantumRecord>) -> Result<Exploration, EngineError> {
        let incomplete = self.stop == Some(Stop::CallCap) && !self.coverage.is_complete();
        let limits = SessionLimits {
            incomplete,
            aborted_runs: self.counters.runtime_aborts > 0,
        };
        let explanations = finalize_explanations(
            &self.attempts,
            &mut self.coverage,
            self.subject.reach(),
            limits,
        )?;
        Ok(Exploration {
            outcome: if incomplete {
                SessionOutcome::Incomplete
            } else {
                SessionOutcome::Complete
            },
            counters: self.counters,
            coverage: self.coverage,
            explanations,
            tests: self.tests,
            paths: self.paths,
            attempts: self.attempts,
            quantum_log,
        })
    }
}

fn degenerate(subject: &Subject, outcome: SessionOutcome, solver_calls: u64) -> Exploration {
    Exploration {
        outcome,
        counters: Counters {
            solver_calls,
            ..Counters::default()
        },
        coverage: CoverageMap::new(subject.cfg().branch_count()),
        explanations: Vec::new(),
        tests: Vec::new(),
        paths: Vec::new(),
        attempts: Vec::new(),
        quantum_log: Vec::new(),
    }
}

/// Runs one strategy to termination.
pub fn explore(
    subject: &Subject,
    kind: StrategyKind,
    budgets: Budgets,
) -> Result<Exploration, EngineError> {
    let Ok(mut solver) = subject.init_solver(budgets.seed) else {
        return Ok(degenerate(subject, SessionOutcome::Vacuous, 0));
    };
    let first = match initial_test(subject, &mut solver, budgets.solver_budget)? {
        InitialOutcome::Test(t) => t,
        InitialOutcome::Vacuous => return Ok(degenerate(subject, SessionOutcome::Vacuous, 1)),
        InitialOutcome::TooHard { budget } => {
            return Ok(degenerate(
                subject,
                SessionOutcome::PreconditionTooHard { budget },
                1,
            ))
        }
    };
    let mut ex = Explorer::new(subject, budgets);
    ex.counters.solver_calls = 1;
    ex.counters.propagation_steps = solver.propagation_steps();
    ex.counters.search_nodes = solver.search_nodes();
    let run = execute(subject, &first);
    let root = ex.record(first, run.steps, run.abort, None);
    let mut cur = Cursor::new(solver);
    let log = match kind {
        StrategyKind::Dfs => ex.dfs(&mut cur, root, 0).map(|_| Vec::new())?,
        StrategyKind::Eager => ex.eager(&mut cur, root, 0, false).map(|_| Vec::new())?,
        StrategyKind::Lookahead => ex.eager(&mut cur, root, 0, true).map(|_| Vec::new())?,
        StrategyKind::Else => ex.else_(&mut cur, root, 0).map(|_| Vec::new())?,
        StrategyKind::Mt => mt::schedule(&mut ex, cur, root)?,
    };
    ex.finish(log)
}
