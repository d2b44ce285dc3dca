//! Front end for the `.bc` mini-language: lexing, parsing, pretty-printing and validation.
//!
//! A program is a single function over bounded integer parameters (scalars and fixed-length
//! arrays). Conditions are pure, loops carry a static iteration cap, and an optional
//! `requires` clause restricts the inputs:
//!
//! ```text
//! fun abs(x: int[-4..4]) requires x != 3; {
//!   if (x < 0) { r = 0 - x; } else { r = x; }
//! }
//! ```

mod ast;
mod diag;
mod eval;
mod lexer;
mod parser;
mod pretty;
mod validate;

pub use ast::*;
pub use diag::{Diagnostic, Diagnostics};
pub use eval::{apply, eval_cond, eval_expr, satisfies_precondition, Env, EvalError, InputEnv};
pub use parser::{parse, parse_condition};
pub use pretty::{pretty_cond, pretty_expr, pretty_param, pretty_program};
pub use validate::{
    validate, ArraySlot, CheckedProgram, InputVar, Slot, DOMAIN_MAX, DOMAIN_MIN, MAX_ARRAY_LEN,
};

/// Parses and validates in one step.
pub fn load(
    source: &str,
    external_precondition: Option<&str>,
) -> Result<CheckedProgram, Diagnostics> {
    let program = parse(source)?;
    let external = external_precondition.map(parse_condition).transpose()?;
    validate(program, external)
}
