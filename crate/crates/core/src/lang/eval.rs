//! Direct concrete evaluation of source expressions and conditions over input values.

use super::ast::{BinOp, Cond, Expr};
use super::validate::{CheckedProgram, Slot};

/// Why a concrete evaluation could not produce a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalError {
    DivisionByZero,
    IndexOutOfRange { index: i64, len: usize },
    Overflow,
    Unbound,
}

/// Variable lookup used by the evaluators.
pub trait Env {
    fn scalar(&self, name: &str) -> Option<i64>;
    fn cell(&self, name: &str, index: i64) -> Result<i64, EvalError>;
}

/// Parameters only, read from a flattened input vector.
pub struct InputEnv<'a> {
    pub program: &'a CheckedProgram,
    pub inputs: &'a [i64],
}

impl Env for InputEnv<'_> {
    fn scalar(&self, name: &str) -> Option<i64> {
        let p = self
            .program
            .program()
            .params
            .iter()
            .position(|p| p.name == name)?;
        if self.program.program().params[p].is_array() {
            return None;
        }
        self.program
            .inputs()
            .iter()
            .position(|v| v.param == p)
            .map(|i| self.inputs[i])
    }

    fn cell(&self, name: &str, index: i64) -> Result<i64, EvalError> {
        let Some(Slot::Array(a)) = self.program.slot(name) else {
            return Err(EvalError::Unbound);
        };
        let arr = &self.program.arrays()[a];
        if index < 0 || index as usize >= arr.len {
            return Err(EvalError::IndexOutOfRange {
                index,
                len: arr.len,
            });
        }
        Ok(self.inputs[arr.first_input + index as usize])
    }
}

pub fn eval_expr(e: &Expr, env: &impl Env) -> Result<i64, EvalError> {
    match e {
        Expr::Int(v) => Ok(*v),
        Expr::Var(n, _) => env.scalar(n).ok_or(EvalError::Unbound),
        Expr::Index(n, idx, _) => env.cell(n, eval_expr(idx, env)?),
        Expr::Neg(a) => eval_expr(a, env)?.checked_neg().ok_or(EvalError::Overflow),
        Expr::Bin(op, a, b) => {
            let (x, y) = (eval_expr(a, env)?, eval_expr(b, env)?);
            apply(*op, x, y)
        }
    }
}

pub fn apply(op: BinOp, x: i64, y: i64) -> Result<i64, EvalError> {
    match op {
        BinOp::Add => x.checked_add(y).ok_or(EvalError::Overflow),
        BinOp::Sub => x.checked_sub(y).ok_or(EvalError::Overflow),
        BinOp::Mul => x.checked_mul(y).ok_or(EvalError::Overflow),
        BinOp::Div if y == 0 => Err(EvalError::DivisionByZero),
        BinOp::Mod if y == 0 => Err(EvalError::DivisionByZero),
        BinOp::Div => x.checked_div(y).ok_or(EvalError::Overflow),
        BinOp::Mod => x.checked_rem(y).ok_or(EvalError::Overflow),
    }
}

/// Short-circuit evaluation of a condition.
pub fn eval_cond(c: &Cond, env: &impl Env) -> Result<bool, EvalError> {
    match c {
        Cond::Cmp { op, lhs, rhs, .. } => Ok(op.holds(eval_expr(lhs, env)?, eval_expr(rhs, env)?)),
        Cond::And(a, b) => Ok(eval_cond(a, env)? && eval_cond(b, env)?),
        Cond::Or(a, b) => Ok(eval_cond(a, env)? || eval_cond(b, env)?),
        Cond::Not(a) => Ok(!eval_cond(a, env)?),
    }
}

/// Whether `inputs` satisfy the program's precondition. Evaluation errors count as false.
pub fn satisfies_precondition(program: &CheckedProgram, inputs: &[i64]) -> bool {
    match program.precondition() {
        None => true,
        Some(pre) => eval_cond(pre, &InputEnv { program, inputs }).unwrap_or(false),
    }
}
