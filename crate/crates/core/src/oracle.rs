//! Ground truth by exhaustive enumeration.
//!
//! Runs every input vector of the declared domains through a direct AST interpreter. Nothing
//! here touches the solver, the symbolic store or the CFG lowering; the CFG is consulted only
//! to name the decision an atom belongs to.

use std::collections::{BTreeSet, HashMap};

use crate::cfg::{BranchId, Cfg};
use crate::lang::{
    apply, eval_cond, CheckedProgram, Cond, Env, EvalError, Expr, LValue, Stmt, StmtKind,
};

pub const DEFAULT_INPUT_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("input domain has {size} points, more than the oracle cap of {cap}; use a smaller variant")]
pub struct DomainTooLarge {
    pub size: u128,
    pub cap: u128,
}

/// How a direct run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunEnd {
    Exit,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRun {
    pub branches: Vec<BranchId>,
    pub end: RunEnd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub reachable: BTreeSet<BranchId>,
    pub paths: BTreeSet<Vec<BranchId>>,
    /// Input vectors enumerated and, of those, the ones satisfying the precondition.
    pub enumerated: u128,
    pub valid: u128,
    pub aborted: u128,
}

impl OracleResult {
    pub fn unreachable(&self, cfg: &Cfg) -> Vec<BranchId> {
        cfg.branches()
            .filter(|b| !self.reachable.contains(b))
            .collect()
    }

    /// Whether some valid input follows `prefix`.
    pub fn prefix_feasible(&self, prefix: &[BranchId]) -> bool {
        self.paths
            .range(prefix.to_vec()..)
            .next()
            .is_some_and(|p| p.starts_with(prefix))
    }
}

struct Store<'p> {
    scalars: HashMap<&'p str, i64>,
    arrays: HashMap<&'p str, Vec<i64>>,
}

impl Env for Store<'_> {
    fn scalar(&self, name: &str) -> Option<i64> {
        // locals read before any write hold zero
        Some(self.scalars.get(name).copied().unwrap_or(0))
    }

    fn cell(&self, name: &str, index: i64) -> Result<i64, EvalError> {
        let a = self.arrays.get(name).ok_or(EvalError::Unbound)?;
        if index < 0 || index as usize >= a.len() {
            return Err(EvalError::IndexOutOfRange {
                index,
                len: a.len(),
            });
        }
        Ok(a[index as usize])
    }
}

fn value(e: &Expr, env: &Store<'_>) -> Result<i64, EvalError> {
    match e {
        Expr::Int(v) => Ok(*v),
        Expr::Var(n, _) => Ok(env.scalar(n).unwrap()),
        Expr::Index(n, i, _) => env.cell(n, value(i, env)?),
        Expr::Neg(a) => value(a, env)?.checked_neg().ok_or(EvalError::Overflow),
        Expr::Bin(op, a, b) => {
            let x = value(a, env)?;
            apply(*op, x, value(b, env)?)
        }
    }
}

struct Runner<'a> {
    cfg: &'a Cfg,
    trace: Vec<BranchId>,
}

impl Runner<'_> {
    /// Evaluates a condition with short-circuiting, logging each atom's outcome.
    fn cond(&mut self, c: &Cond, env: &Store<'_>) -> Result<bool, EvalError> {
        match c {
            Cond::Cmp { span, .. } => {
                let v = eval_cond(c, env)?;
                let d = self
                    .cfg
                    .decision_at(*span)
                    .expect("every atom has a decision");
                self.trace.push(BranchId {
                    decision: d,
                    polarity: v,
                });
                Ok(v)
            }
            Cond::And(a, b) => Ok(self.cond(a, env)? && self.cond(b, env)?),
            Cond::Or(a, b) => Ok(self.cond(a, env)? || self.cond(b, env)?),
            Cond::Not(a) => Ok(!self.cond(a, env)?),
        }
    }

    fn block<'p>(&mut self, b: &'p [Stmt], env: &mut Store<'p>) -> Result<(), EvalError> {
        for s in b {
            self.stmt(s, env)?;
        }
        Ok(())
    }

    fn stmt<'p>(&mut self, s: &'p Stmt, env: &mut Store<'p>) -> Result<(), EvalError> {
        match &s.kind {
            StmtKind::Skip => {}
            StmtKind::Assign { target, value: e } => {
                let v = value(e, env)?;
                match target {
                    LValue::Var(n) => {
                        env.scalars.insert(n, v);
                    }
                    LValue::Index(n, i) => {
                        let i = value(i, env)?;
                        let a = env.arrays.get_mut(n.as_str()).ok_or(EvalError::Unbound)?;
                        if i < 0 || i as usize >= a.len() {
                            return Err(EvalError::IndexOutOfRange {
                                index: i,
                                len: a.len(),
                            });
                        }
                        a[i as usize] = v;
                    }
                }
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                if self.cond(cond, env)? {
                    self.block(then_block, env)?;
                } else {
                    self.block(else_block, env)?;
                }
            }
            StmtKind::While { cond, cap, body } => {
                let cap = cap.expect("validated loop cap");
                let mut n = 0;
                while self.cond(cond, env)? {
                    n += 1;
                    if n > cap {
                        // reported like any other runtime failure
                        return Err(EvalError::Overflow);
                    }
                    self.block(body, env)?;
                }
            }
        }
        Ok(())
    }
}

/// Runs one input vector directly on the source program.
pub fn run_direct(program: &CheckedProgram, cfg: &Cfg, inputs: &[i64]) -> OracleRun {
    let mut env = Store {
        scalars: HashMap::new(),
        arrays: HashMap::new(),
    };
    let mut at = 0;
    for p in &program.program().params {
        if p.is_array() {
            env.arrays
                .insert(&p.name, inputs[at..at + p.width()].to_vec());
        } else {
            env.scalars.insert(&p.name, inputs[at]);
        }
        at += p.width();
    }
    let mut r = Runner {
        cfg,
        trace: Vec::new(),
    };
    let end = match r.block(&program.program().body, &mut env) {
        Ok(()) => RunEnd::Exit,
        Err(_) => RunEnd::Aborted,
    };
    OracleRun {
        branches: r.trace,
        end,
    }
}

/// Whether `inputs` satisfy the precondition, evaluated directly.
pub fn precondition_holds(program: &CheckedProgram, inputs: &[i64]) -> bool {
    crate::lang::satisfies_precondition(program, inputs)
}

/// Enumerates every input vector (odometer order) satisfying the precondition.
pub fn oracle(
    program: &CheckedProgram,
    cfg: &Cfg,
    cap: u128,
) -> Result<OracleResult, DomainTooLarge> {
    let size = program.domain_size();
    if size > cap {
        return Err(DomainTooLarge { size, cap });
    }
    let vars = program.inputs();
    let mut inputs: Vec<i64> = vars.iter().map(|v| v.lo).collect();
    let mut result = OracleResult {
        reachable: BTreeSet::new(),
        paths: BTreeSet::new(),
        enumerated: 0,
        valid: 0,
        aborted: 0,
    };
    loop {
        result.enumerated += 1;
        if precondition_holds(program, &inputs) {
            result.valid += 1;
            let run = run_direct(program, cfg, &inputs);
            if run.end == RunEnd::Aborted {
                result.aborted += 1;
            }
            result.reachable.extend(run.branches.iter().copied());
            result.paths.insert(run.branches);
        }
        let mut k = vars.len();
        loop {
            if k == 0 {
                return Ok(result);
            }
            k -= 1;
            if inputs[k] < vars[k].hi {
                inputs[k] += 1;
                break;
            }
            inputs[k] = vars[k].lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::build_cfg;
    use crate::lang::load;

    fn run(src: &str) -> (Cfg, OracleResult) {
        let p = load(src, None).unwrap();
        let cfg = build_cfg(&p);
        let r = oracle(&p, &cfg, DEFAULT_INPUT_CAP).unwrap();
        (cfg, r)
    }

    #[test]
    fn abs_program() {
        let (_, r) = run("fun main(x: int[-4..4]) { if (x < 0) { r = 0 - x; } else { r = x; } }");
        assert_eq!(r.reachable.len(), 2);
        assert_eq!(r.paths.len(), 2);
        assert_eq!(r.valid, 9);
    }

    #[test]
    fn dead_else() {
        let (cfg, r) = run("fun main(x: int[0..10]) { if (x >= 0) { r = 1; } else { r = 2; } }");
        assert_eq!(r.reachable.len(), 1);
        assert_eq!(r.paths.len(), 1);
        assert_eq!(r.unreachable(&cfg), vec![BranchId::new(0, false)]);
    }

    #[test]
    fn counting_loop() {
        let (_, r) = run("fun main(n: int[0..2]) { i = 0; while (i < n) cap 3 { i = i + 1; } }");
        assert_eq!(r.reachable.len(), 2);
        assert_eq!(r.paths.len(), 3);
        assert!(r.prefix_feasible(&[BranchId::new(0, true), BranchId::new(0, true)]));
        assert!(!r.prefix_feasible(&[BranchId::new(0, true); 3]));
    }

    #[test]
    fn refuses_large_domains() {
        let p = load("fun main(x: int[0..999], y: int[0..9999]) { skip; }", None).unwrap();
        let cfg = build_cfg(&p);
        let e = oracle(&p, &cfg, DEFAULT_INPUT_CAP).unwrap_err();
        assert_eq!(e.size, 10_000_000);
    }

    #[test]
    fn precondition_filters_inputs() {
        let (_, r) = run("fun main(x: int[0..9]) requires x % 2 == 0; { if (x == 3) { r = 1; } else { r = 0; } }");
        assert_eq!(r.valid, 5);
        assert_eq!(r.reachable.len(), 1);
    }
}
