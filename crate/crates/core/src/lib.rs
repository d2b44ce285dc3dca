//! Concolic test generation for exhaustive branch coverage of small imperative programs.
//!
//! A session covers every branch it can and explains every branch it cannot: either with an
//! infeasibility demonstration (all prefixes leading to it are Unsat) or with the formulas the
//! solver gave up on. Five exploration strategies are provided so their cost in solver calls
//! and hopeful flips can be compared.

pub mod cfg;
pub mod concolic;
pub mod corpus;
pub mod coverage;
pub mod lang;
pub mod oracle;
pub mod report;
pub mod session;
pub mod solver;
pub mod strategy;
