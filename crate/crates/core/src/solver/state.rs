use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::propagate::{fixpoint, Store};
use super::term::{Constraint, VarId};

/// A symbolic input with its declared domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymVar {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

/// Full assignment, indexed by `VarId`.
pub type Model = Vec<i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(Model),
    Unsat,
    /// The labeling budget ran out; carries the budget that was spent.
    Unknown {
        budget: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushOutcome {
    Consistent,
    Inconsistent,
}

/// Propagation alone refuted the precondition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("precondition is unsatisfiable")]
pub struct PreconditionUnsat;

#[derive(Debug, Clone)]
struct Level {
    constraint: Constraint,
    trail_len: usize,
}

/// Incremental constraint store: a base level holding the precondition and one level per
/// pushed constraint, each recording the interval changes needed to undo it.
#[derive(Debug, Clone)]
pub struct SolverState {
    vars: Vec<SymVar>,
    names: Vec<String>,
    current: Vec<(i64, i64)>,
    base: Vec<Constraint>,
    levels: Vec<Level>,
    trail: Vec<(VarId, (i64, i64))>,
    /// Depth of the level whose push emptied a domain.
    failed_at: Option<usize>,
    seed: u64,
    value_offsets: Vec<u64>,
    solve_calls: u64,
    propagation_steps: u64,
    search_nodes: u64,
}

impl SolverState {
    /// Builds the base level from the precondition conjuncts and propagates it.
    pub fn init(
        vars: Vec<SymVar>,
        precondition: Vec<Constraint>,
        seed: u64,
    ) -> Result<Self, PreconditionUnsat> {
        assert!(vars.iter().all(|v| v.lo <= v.hi), "empty variable domain");
        let value_offsets = if seed == 0 {
            vec![0; vars.len()]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..vars.len()).map(|_| rng.gen()).collect()
        };
        let mut state = SolverState {
            names: vars.iter().map(|v| v.name.clone()).collect(),
            current: vars.iter().map(|v| (v.lo, v.hi)).collect(),
            vars,
            base: precondition,
            levels: Vec::new(),
            trail: Vec::new(),
            failed_at: None,
            seed,
            value_offsets,
            solve_calls: 0,
            propagation_steps: 0,
            search_nodes: 0,
        };
        let mut store = Store::new(&mut state.current, None);
        let result = fixpoint(&mut store, state.base.iter());
        state.propagation_steps += store.steps;
        result.map_err(|_| PreconditionUnsat)?;
        Ok(state)
    }

    pub fn vars(&self) -> &[SymVar] {
        &self.vars
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of pushed levels above the base.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn is_consistent(&self) -> bool {
        self.failed_at.is_none()
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.current
    }

    pub fn solve_calls(&self) -> u64 {
        self.solve_calls
    }

    pub fn propagation_steps(&self) -> u64 {
        self.propagation_steps
    }

    pub fn search_nodes(&self) -> u64 {
        self.search_nodes
    }

    /// Precondition conjuncts followed by every pushed constraint, bottom to top.
    pub fn live_constraints(&self) -> impl Iterator<Item = &Constraint> + Clone {
        self.base
            .iter()
            .chain(self.levels.iter().map(|l| &l.constraint))
    }

    /// The conjunction of live constraints, rendered with variable names.
    pub fn formula_text(&self) -> String {
        let parts: Vec<String> = self
            .live_constraints()
            .map(|c| match c {
                Constraint::Cmp(_) => c.display(&self.names),
                _ => format!("({})", c.display(&self.names)),
            })
            .collect();
        if parts.is_empty() {
            "true".to_string()
        } else {
            parts.join(" && ")
        }
    }

    /// Same intervals and same live constraints; counters are ignored.
    pub fn same_store(&self, other: &SolverState) -> bool {
        self.current == other.current
            && self.base == other.base
            && self.levels.len() == other.levels.len()
            && self
                .levels
                .iter()
                .zip(&other.levels)
                .all(|(a, b)| a.constraint == b.constraint)
            && self.failed_at == other.failed_at
    }

    /// Adds a level holding `c` and propagates to a fixpoint. Propagation is not a solver call.
    pub fn push(&mut self, c: Constraint) -> PushOutcome {
        assert!(
            self.failed_at.is_none(),
            "push onto an inconsistent solver state"
        );
        let trail_len = self.trail.len();
        self.levels.push(Level {
            constraint: c,
            trail_len,
        });
        let constraints: Vec<&Constraint> = self
            .base
            .iter()
            .chain(self.levels.iter().map(|l| &l.constraint))
            .collect();
        let mut store = Store::new(&mut self.current, Some(&mut self.trail));
        let result = fixpoint(&mut store, constraints.iter().copied());
        self.propagation_steps += store.steps;
        match result {
            Ok(()) => PushOutcome::Consistent,
            Err(_) => {
                self.failed_at = Some(self.levels.len());
                PushOutcome::Inconsistent
            }
        }
    }

    /// Removes the top level and restores the intervals it changed.
    pub fn pop(&mut self) {
        let level = self.levels.pop().expect("pop of the base level");
        while self.trail.len() > level.trail_len {
            let (v, old) = self.trail.pop().unwrap();
            self.current[v.index()] = old;
        }
        if self.failed_at.is_some_and(|d| d > self.levels.len()) {
            self.failed_at = None;
        }
    }

    pub fn pop_to(&mut self, depth: usize) {
        while self.levels.len() > depth {
            self.pop();
        }
    }

    /// Searches for a model of the live constraints, labeling variables in declaration order.
    ///
    /// `budget` bounds the number of labeling decisions. Each call counts as one solver call.
    pub fn solve(&mut self, budget: u64) -> SolveOutcome {
        assert!(
            self.failed_at.is_none(),
            "solve on an inconsistent solver state"
        );
        self.solve_calls += 1;
        let constraints: Vec<&Constraint> = self.live_constraints().collect();
        let mut relevant = BTreeSet::new();
        for c in &constraints {
            c.collect_vars(&mut relevant);
        }
        let order: Vec<VarId> = relevant.into_iter().collect();
        let mut search = Search {
            constraints: &constraints,
            order: &order,
            offsets: &self.value_offsets,
            budget,
            nodes: 0,
        };
        let mut iv = self.current.clone();
        let result = search.label(&mut iv, 0);
        self.search_nodes += search.nodes;
        match result {
            Err(OutOfBudget) => SolveOutcome::Unknown { budget },
            Ok(None) => SolveOutcome::Unsat,
            Ok(Some(mut model)) => {
                // unconstrained inputs take their first value in search order
                for (i, slot) in model.iter_mut().enumerate() {
                    if !order.contains(&VarId(i as u32)) {
                        let (lo, hi) = self.current[i];
                        *slot = first_value(lo, hi, self.value_offsets[i]);
                    }
                }
                assert!(
                    self.live_constraints().all(|c| c.holds(&model)),
                    "solver produced a model that violates a live constraint"
                );
                SolveOutcome::Sat(model)
            }
        }
    }
}

struct OutOfBudget;

struct Search<'a> {
    constraints: &'a [&'a Constraint],
    order: &'a [VarId],
    offsets: &'a [u64],
    budget: u64,
    nodes: u64,
}

impl Search<'_> {
    fn label(&mut self, iv: &mut [(i64, i64)], from: usize) -> Result<Option<Model>, OutOfBudget> {
        let next = self.order[from..]
            .iter()
            .position(|v| iv[v.index()].0 < iv[v.index()].1)
            .map(|p| from + p);
        let Some(k) = next else {
            let model: Model = iv.iter().map(|&(lo, _)| lo).collect();
            return Ok(self
                .constraints
                .iter()
                .all(|c| c.holds(&model))
                .then_some(model));
        };
        let var = self.order[k];
        let (lo, hi) = iv[var.index()];
        for value in value_order(lo, hi, self.offsets[var.index()]) {
            if self.nodes >= self.budget {
                return Err(OutOfBudget);
            }
            self.nodes += 1;
            let mut child = iv.to_vec();
            child[var.index()] = (value, value);
            let mut store = Store::new(&mut child, None);
            if fixpoint(&mut store, self.constraints.iter().copied()).is_err() {
                continue;
            }
            if let Some(model) = self.label(&mut child, k + 1)? {
                return Ok(Some(model));
            }
        }
        Ok(None)
    }
}

fn first_value(lo: i64, hi: i64, offset: u64) -> i64 {
    value_order(lo, hi, offset).next().unwrap()
}

/// Ascending from `lo` when `offset` is zero, otherwise the same sequence rotated.
fn value_order(lo: i64, hi: i64, offset: u64) -> impl Iterator<Item = i64> {
    let size = (hi as i128 - lo as i128 + 1) as u128;
    let start = lo as i128 + (offset as u128 % size) as i128;
    let start = start as i64;
    (start..=hi).chain(lo..start)
}
