//! The multi-threaded strategy as a deterministic cooperative scheduler.
//!
//! Each logical worker owns one suffix and a private solver state. A turn runs one quantum of
//! one worker: a single flip attempt, or the transition that ends a phase. Workers stay High
//! while advancing along their suffix and drop to Low for the backtracking sweep; Low workers
//! run only when no High worker is waiting. Both queues are FIFO.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{AttemptOutcome, Cursor, Explorer, Phase};
use crate::concolic::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Priority {
    High,
    Low,
}

/// One scheduler turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumRecord {
    pub turn: usize,
    pub worker: usize,
    pub priority: Priority,
    pub phase: Phase,
    pub action: String,
    /// High workers queued (besides this one) when the turn started.
    pub high_waiting: usize,
}

impl QuantumRecord {
    pub const CSV_HEADER: &'static str = "turn,worker,priority,phase,action,high_waiting";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.turn,
            self.worker,
            match self.priority {
                Priority::High => "high",
                Priority::Low => "low",
            },
            match self.phase {
                Phase::Advance => "advance",
                Phase::Backtrack => "backtrack",
            },
            self.action,
            self.high_waiting
        )
    }
}

struct Worker {
    id: usize,
    path: usize,
    s0: usize,
    phase: Phase,
    /// Next index to examine: ascending in Advance, one past it (descending) in Backtrack.
    next: usize,
    advanced: Vec<bool>,
    cursor: Cursor,
}

enum Quantum {
    Continue,
    Demote,
    Finished,
}

impl Explorer<'_> {
    fn spawn(&mut self, path: usize, s0: usize, cursor: Cursor) -> Worker {
        let len = self.paths[path].len();
        Worker {
            id: self.new_task(),
            path,
            s0,
            phase: Phase::Advance,
            next: s0,
            advanced: vec![false; len],
            cursor,
        }
    }

    /// Runs one quantum; a child worker is returned when the flip found a new path.
    fn quantum(
        &mut self,
        w: &mut Worker,
    ) -> Result<(Quantum, String, Option<Worker>), EngineError> {
        let len = self.paths[w.path].len();
        loop {
            let i = match w.phase {
                Phase::Advance => {
                    while w.next < len
                        && self
                            .coverage
                            .is_covered(self.paths[w.path].steps[w.next].branch.opposite())
                    {
                        w.next += 1;
                    }
                    if w.next == len {
                        w.phase = Phase::Backtrack;
                        w.next = len;
                        return Ok((Quantum::Demote, "advance-done".to_string(), None));
                    }
                    w.advanced[w.next] = true;
                    w.next += 1;
                    w.next - 1
                }
                Phase::Backtrack => {
                    while w.next > w.s0 && w.advanced[w.next - 1] {
                        w.next -= 1;
                    }
                    if w.next == w.s0 {
                        return Ok((Quantum::Finished, "finish".to_string(), None));
                    }
                    w.next -= 1;
                    w.next
                }
            };
            let before = self.attempts.len();
            let filter = w.phase == Phase::Backtrack;
            let child = self.attempt(&mut w.cursor, w.id, w.path, i, filter, Some(w.phase))?;
            if self.attempts.len() == before {
                if self.stop.is_some() {
                    return Ok((Quantum::Finished, "halt".to_string(), None));
                }
                continue;
            }
            let outcome = match self.attempts[before].outcome {
                AttemptOutcome::NewTest { path, .. } => format!("new-path-{path}"),
                AttemptOutcome::Unsat { .. } => "unsat".to_string(),
                AttemptOutcome::Unknown { .. } => "unknown".to_string(),
            };
            let spawned = child.map(|c| self.spawn(c, i + 1, w.cursor.clone()));
            return Ok((Quantum::Continue, format!("flip-{i}-{outcome}"), spawned));
        }
    }
}

pub(super) fn schedule(
    ex: &mut Explorer<'_>,
    cursor: Cursor,
    root: usize,
) -> Result<Vec<QuantumRecord>, EngineError> {
    let mut high: VecDeque<Worker> = VecDeque::new();
    let mut low: VecDeque<Worker> = VecDeque::new();
    let first = ex.spawn(root, 0, cursor);
    high.push_back(first);
    let mut log = Vec::new();
    while !ex.stopped() {
        let (mut w, priority) = match high.pop_front() {
            Some(w) => (w, Priority::High),
            None => match low.pop_front() {
                Some(w) => (w, Priority::Low),
                None => break,
            },
        };
        let high_waiting = high.len();
        let phase = w.phase;
        let (q, action, child) = ex.quantum(&mut w)?;
        log.push(QuantumRecord {
            turn: log.len(),
            worker: w.id,
            priority,
            phase,
            action,
            high_waiting,
        });
        match q {
            Quantum::Continue if priority == Priority::High => high.push_back(w),
            Quantum::Continue | Quantum::Demote => low.push_back(w),
            Quantum::Finished => {}
        }
        if let Some(c) = child {
            high.push_back(c);
        }
    }
    Ok(log)
}
