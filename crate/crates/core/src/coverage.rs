//! Per-branch coverage state and the explanations attached to branches left uncovered.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cfg::{BranchId, ReachSet};
use crate::concolic::EngineError;
use crate::strategy::{AttemptOutcome, FlipAttempt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BranchStatus {
    Uncovered,
    Covered { first_test: usize },
    DemonstratedUnreachable,
    Unknown,
}

impl BranchStatus {
    pub fn label(&self) -> &'static str {
        match self {
            BranchStatus::Uncovered => "uncovered",
            BranchStatus::Covered { .. } => "covered",
            BranchStatus::DemonstratedUnreachable => "unreachable",
            BranchStatus::Unknown => "unknown",
        }
    }
}

/// Coverage of every branch of one program.
///
/// Sessions run single-stream (the MT scheduler is cooperative), so workers observe each other's
/// publishes between quanta simply by sharing this map; `snapshot` exists for callers that want
/// a frozen view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageMap {
    status: Vec<BranchStatus>,
    counts: Vec<u64>,
}

impl CoverageMap {
    pub fn new(branch_count: usize) -> Self {
        CoverageMap {
            status: vec![BranchStatus::Uncovered; branch_count],
            counts: vec![0; branch_count],
        }
    }

    pub fn len(&self) -> usize {
        self.status.len()
    }

    pub fn is_empty(&self) -> bool {
        self.status.is_empty()
    }

    /// Records a cover; true the first time `branch` is covered.
    pub fn mark_covered(&mut self, branch: BranchId, test: usize) -> bool {
        let i = branch.index();
        self.counts[i] += 1;
        match self.status[i] {
            BranchStatus::Covered { .. } => false,
            BranchStatus::Uncovered => {
                self.status[i] = BranchStatus::Covered { first_test: test };
                true
            }
            s => panic!(
                "branch {branch} covered after being finalized as {}",
                s.label()
            ),
        }
    }

    pub fn is_covered(&self, branch: BranchId) -> bool {
        matches!(self.status[branch.index()], BranchStatus::Covered { .. })
    }

    pub fn status(&self, branch: BranchId) -> BranchStatus {
        self.status[branch.index()]
    }

    pub fn count(&self, branch: BranchId) -> u64 {
        self.counts[branch.index()]
    }

    pub fn covered_count(&self) -> usize {
        self.status
            .iter()
            .filter(|s| matches!(s, BranchStatus::Covered { .. }))
            .count()
    }

    pub fn is_complete(&self) -> bool {
        self.covered_count() == self.status.len()
    }

    pub fn branches(&self) -> impl Iterator<Item = (BranchId, BranchStatus)> + '_ {
        self.status
            .iter()
            .enumerate()
            .map(|(i, s)| (BranchId::from_index(i), *s))
    }

    pub fn snapshot(&self) -> CoverageMap {
        self.clone()
    }

    fn set_final(&mut self, branch: BranchId, status: BranchStatus) {
        assert_eq!(self.status[branch.index()], BranchStatus::Uncovered);
        self.status[branch.index()] = status;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ExplainedOutcome {
    Unsat { by_propagation: bool },
    Unknown { budget: u64 },
}

/// One failed flip that could have led to the branch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplainedAttempt {
    pub attempt: usize,
    /// Branch ids of `flip(p, i)`, the last one being the flipped-to branch.
    pub prefix: Vec<BranchId>,
    pub formula: String,
    #[serde(flatten)]
    pub outcome: ExplainedOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub branch: BranchId,
    pub status: BranchStatus,
    pub attempts: Vec<ExplainedAttempt>,
    /// Why the explanation is weaker than the attempts alone suggest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unsat = self
            .attempts
            .iter()
            .filter(|a| matches!(a.outcome, ExplainedOutcome::Unsat { .. }))
            .count();
        match self.status {
            BranchStatus::DemonstratedUnreachable => writeln!(
                f,
                "{}: unreachable: all {} prefixes Unsat",
                self.branch,
                self.attempts.len()
            )?,
            _ => writeln!(
                f,
                "{}: unknown: {} of {} prefixes Unsat",
                self.branch,
                unsat,
                self.attempts.len()
            )?,
        }
        if let Some(note) = &self.note {
            writeln!(f, "  note: {note}")?;
        }
        for a in &self.attempts {
            let prefix = a
                .prefix
                .iter()
                .map(BranchId::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            let outcome = match &a.outcome {
                ExplainedOutcome::Unsat {
                    by_propagation: true,
                } => "unsat (propagation)".to_string(),
                ExplainedOutcome::Unsat {
                    by_propagation: false,
                } => "unsat".to_string(),
                ExplainedOutcome::Unknown { budget } => format!("unknown (budget {budget})"),
            };
            writeln!(f, "  attempt {} [{}] {}", a.attempt, prefix, outcome)?;
            writeln!(f, "    {}", a.formula)?;
        }
        Ok(())
    }
}

/// What else happened in the session that limits the strength of an explanation.
#[derive(Debug, Clone, Copy, Default)]
pub struct SessionLimits {
    /// A global solver-call cap stopped exploration early.
    pub incomplete: bool,
    /// Some run aborted, so part of the tree behind it was never explored.
    pub aborted_runs: bool,
}

/// Classifies every branch left uncovered and moves it to its final status.
pub fn finalize_explanations(
    attempts: &[FlipAttempt],
    coverage: &mut CoverageMap,
    reach: &ReachSet,
    limits: SessionLimits,
) -> Result<Vec<Explanation>, EngineError> {
    let uncovered: Vec<BranchId> = coverage
        .branches()
        .filter(|(_, s)| *s == BranchStatus::Uncovered)
        .map(|(b, _)| b)
        .collect();
    let mut out = Vec::new();
    for branch in uncovered {
        let gathered: Vec<ExplainedAttempt> = attempts
            .iter()
            .filter(|a| a.flipped_to == branch || reach.reaches(a.flipped_to, branch))
            .filter_map(|a| {
                let outcome = match a.outcome {
                    AttemptOutcome::NewTest { .. } => return None,
                    AttemptOutcome::Unsat { by_propagation } => {
                        ExplainedOutcome::Unsat { by_propagation }
                    }
                    AttemptOutcome::Unknown { budget } => ExplainedOutcome::Unknown { budget },
                };
                let mut prefix = a.prefix.clone();
                prefix.push(a.flipped_to);
                Some(ExplainedAttempt {
                    attempt: a.seq,
                    prefix,
                    formula: a.formula.clone().unwrap_or_default(),
                    outcome,
                })
            })
            .collect();
        let all_unsat = gathered
            .iter()
            .all(|a| matches!(a.outcome, ExplainedOutcome::Unsat { .. }));
        let note = if limits.incomplete {
            Some("exploration stopped at the solver-call cap".to_string())
        } else if limits.aborted_runs {
            Some("runtime aborts cut parts of the path tree".to_string())
        } else {
            None
        };
        if gathered.is_empty() && note.is_none() {
            return Err(EngineError::Unexplained(branch));
        }
        let status = if !gathered.is_empty() && all_unsat && note.is_none() {
            BranchStatus::DemonstratedUnreachable
        } else {
            BranchStatus::Unknown
        };
        coverage.set_final(branch, status);
        out.push(Explanation {
            branch,
            status,
            attempts: gathered,
            note,
        });
    }
    Ok(out)
}
