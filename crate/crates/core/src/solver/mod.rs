//! Incremental finite-domain constraint solver.
//!
//! `SolverState` keeps a stack of levels, one per pushed constraint. Pushing runs
//! bounds-consistency propagation to a fixpoint (counted as propagation, not as a solver call);
//! popping restores the previous intervals exactly. `solve` is a budgeted depth-first labeling
//! search whose models are checked against every live constraint before being returned.

mod propagate;
mod state;
mod term;

pub use state::{Model, PreconditionUnsat, PushOutcome, SolveOutcome, SolverState, SymVar};
pub use term::{Atom, Comparison, Constraint, LinExpr, Overflow, VarId};
