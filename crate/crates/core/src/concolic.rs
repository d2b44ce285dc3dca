//! Concolic execution: one interpreter pass computes concrete values and, alongside them,
//! symbolic expressions over the inputs, so every run yields its path predicate.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cfg::{build_cfg, BranchId, Cfg, NodeKind, RExpr, RTarget, ReachSet};
use crate::lang::{
    apply, satisfies_precondition, BinOp, CheckedProgram, Cond, EvalError, Expr, RelOp, Slot, Span,
};
use crate::solver::{
    Constraint, LinExpr, Overflow, PreconditionUnsat, PushOutcome, SolveOutcome, SolverState,
    SymVar, VarId,
};

/// Everything derived once per program: checked source, CFG, reach sets, precondition constraints.
#[derive(Debug, Clone)]
pub struct Subject {
    program: CheckedProgram,
    cfg: Cfg,
    reach: ReachSet,
    precondition: Vec<Constraint>,
}

impl Subject {
    pub fn new(program: CheckedProgram) -> Result<Subject, Overflow> {
        let cfg = build_cfg(&program);
        let reach = ReachSet::compute(&cfg);
        let precondition = match program.precondition() {
            None => Vec::new(),
            Some(c) => precondition_constraints(&program, c)?,
        };
        Ok(Subject {
            program,
            cfg,
            reach,
            precondition,
        })
    }

    pub fn program(&self) -> &CheckedProgram {
        &self.program
    }

    pub fn cfg(&self) -> &Cfg {
        &self.cfg
    }

    pub fn reach(&self) -> &ReachSet {
        &self.reach
    }

    pub fn precondition(&self) -> &[Constraint] {
        &self.precondition
    }

    pub fn sym_vars(&self) -> Vec<SymVar> {
        self.program
            .inputs()
            .iter()
            .map(|v| SymVar {
                name: v.name.clone(),
                lo: v.lo,
                hi: v.hi,
            })
            .collect()
    }

    /// Solver state whose base level holds the precondition.
    pub fn init_solver(&self, seed: u64) -> Result<SolverState, PreconditionUnsat> {
        SolverState::init(self.sym_vars(), self.precondition.clone(), seed)
    }
}

fn precondition_constraints(
    program: &CheckedProgram,
    c: &Cond,
) -> Result<Vec<Constraint>, Overflow> {
    let whole = cond_constraint(program, c)?;
    Ok(match whole {
        Constraint::And(parts) => parts,
        other => vec![other],
    })
}

fn cond_constraint(program: &CheckedProgram, c: &Cond) -> Result<Constraint, Overflow> {
    Ok(match c {
        Cond::Cmp { op, lhs, rhs, .. } => {
            match (input_expr(program, lhs)?, input_expr(program, rhs)?) {
                (Some(l), Some(r)) => Constraint::cmp(l, *op, r)?,
                // statically undefined (constant division by zero): never satisfied
                _ => Constraint::Or(Vec::new()),
            }
        }
        Cond::And(a, b) => {
            let mut parts = Vec::new();
            for side in [a, b] {
                match cond_constraint(program, side)? {
                    Constraint::And(inner) => parts.extend(inner),
                    other => parts.push(other),
                }
            }
            Constraint::And(parts)
        }
        Cond::Or(a, b) => {
            let mut parts = Vec::new();
            for side in [a, b] {
                match cond_constraint(program, side)? {
                    Constraint::Or(inner) => parts.extend(inner),
                    other => parts.push(other),
                }
            }
            Constraint::Or(parts)
        }
        Cond::Not(a) => cond_constraint(program, a)?.negate(),
    })
}

/// Symbolic value of a parameter-only expression; `None` if it divides by constant zero.
fn input_expr(program: &CheckedProgram, e: &Expr) -> Result<Option<LinExpr>, Overflow> {
    let var_of = |name: &str, cell: Option<usize>| {
        program
            .inputs()
            .iter()
            .position(|v| program.program().params[v.param].name == name && v.cell == cell)
            .map(|i| LinExpr::var(VarId(i as u32)))
    };
    Ok(Some(match e {
        Expr::Int(v) => LinExpr::constant(*v),
        Expr::Var(n, _) => var_of(n, None).expect("validated precondition parameter"),
        Expr::Index(n, idx, _) => {
            let Some(idx) = input_expr(program, idx)? else {
                return Ok(None);
            };
            let Some(Slot::Array(a)) = program.slot(n) else {
                panic!("validated precondition array `{n}`");
            };
            let len = program.arrays()[a].len;
            match idx.as_constant() {
                Some(i) if i < 0 || i as usize >= len => return Ok(None),
                Some(i) => var_of(n, Some(i as usize)).unwrap(),
                None => {
                    let cells = (0..len).map(|c| var_of(n, Some(c)).unwrap()).collect();
                    LinExpr::select(cells, idx)
                }
            }
        }
        Expr::Neg(a) => match input_expr(program, a)? {
            Some(v) => v.neg()?,
            None => return Ok(None),
        },
        Expr::Bin(op, a, b) => {
            let (Some(x), Some(y)) = (input_expr(program, a)?, input_expr(program, b)?) else {
                return Ok(None);
            };
            match op {
                BinOp::Add => x.add(&y)?,
                BinOp::Sub => x.sub(&y)?,
                BinOp::Mul => x.mul(&y)?,
                BinOp::Div => match x.div(&y) {
                    Some(r) => r?,
                    None => return Ok(None),
                },
                BinOp::Mod => match x.rem(&y) {
                    Some(r) => r?,
                    None => return Ok(None),
                },
            }
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(i64),
    Array(Vec<i64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Initial,
    /// Solution of `pred(flip(p, index))` for path `path`.
    Flip {
        path: usize,
        index: usize,
    },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Initial => f.write_str("initial"),
            Provenance::Flip { path, index } => write!(f, "flip(p{path},{index})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TestCaseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("parameter `{0}` is missing")]
    Missing(String),
    #[error("value {value} of `{name}` is outside its domain [{lo}..{hi}]")]
    OutOfDomain {
        name: String,
        value: i64,
        lo: i64,
        hi: i64,
    },
    #[error("inputs violate the precondition")]
    Precondition,
}

/// Concrete input values for one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: usize,
    pub values: Vec<ParamValue>,
    pub provenance: Provenance,
}

impl TestCase {
    /// Builds a test from a flattened input vector, checking domains and the precondition.
    pub fn new(
        program: &CheckedProgram,
        id: usize,
        inputs: &[i64],
        provenance: Provenance,
    ) -> Result<Self, TestCaseError> {
        for (v, &x) in program.inputs().iter().zip(inputs) {
            if x < v.lo || x > v.hi {
                return Err(TestCaseError::OutOfDomain {
                    name: v.name.clone(),
                    value: x,
                    lo: v.lo,
                    hi: v.hi,
                });
            }
        }
        if !satisfies_precondition(program, inputs) {
            return Err(TestCaseError::Precondition);
        }
        let mut values = Vec::new();
        let mut at = 0;
        for p in &program.program().params {
            if p.is_array() {
                values.push(ParamValue::Array(inputs[at..at + p.width()].to_vec()));
            } else {
                values.push(ParamValue::Scalar(inputs[at]));
            }
            at += p.width();
        }
        Ok(TestCase {
            id,
            values,
            provenance,
        })
    }

    /// Flattened inputs, in solver variable order.
    pub fn inputs(&self) -> Vec<i64> {
        let mut out = Vec::new();
        for v in &self.values {
            match v {
                ParamValue::Scalar(x) => out.push(*x),
                ParamValue::Array(xs) => out.extend(xs),
            }
        }
        out
    }

    /// `name=value` lines; arrays as comma-separated values.
    pub fn render(&self, program: &CheckedProgram) -> String {
        let mut out = String::new();
        for (p, v) in program.program().params.iter().zip(&self.values) {
            let text = match v {
                ParamValue::Scalar(x) => x.to_string(),
                ParamValue::Array(xs) => {
                    xs.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
                }
            };
            out.push_str(&format!("{}={}\n", p.name, text));
        }
        out
    }
}

/// Reads a test file back into a flattened input vector. Domain and precondition checks are
/// left to `TestCase::new`.
pub fn parse_test_file(program: &CheckedProgram, text: &str) -> Result<Vec<i64>, TestCaseError> {
    let params = &program.program().params;
    let mut seen: Vec<Option<Vec<i64>>> = vec![None; params.len()];
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |message: String| TestCaseError::Syntax {
            line: line_no,
            message,
        };
        let (name, value) = line
            .split_once('=')
            .ok_or_else(|| syntax("expected `name=value`".to_string()))?;
        let (name, value) = (name.trim(), value.trim());
        let p = params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| syntax(format!("unknown parameter `{name}`")))?;
        if seen[p].is_some() {
            return Err(syntax(format!("parameter `{name}` given twice")));
        }
        let values = value
            .split(',')
            .map(|v| v.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| syntax(format!("bad integer for `{name}`: {e}")))?;
        if values.len() != params[p].width() {
            return Err(syntax(format!(
                "`{name}` needs {} value(s), found {}",
                params[p].width(),
                values.len()
            )));
        }
        seen[p] = Some(values);
    }
    let mut out = Vec::new();
    for (p, v) in params.iter().zip(seen) {
        out.extend(v.ok_or_else(|| TestCaseError::Missing(p.name.clone()))?);
    }
    Ok(out)
}

/// One atomic decision taken by a run, with its input-level constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathStep {
    pub branch: BranchId,
    /// Definedness conditions (non-zero divisors, in-range indices) met on the way here.
    pub guards: Vec<Constraint>,
    /// Condition of the branch actually taken.
    pub taken: Constraint,
}

impl PathStep {
    /// `guards ∧ c_i`.
    pub fn constraint(&self) -> Constraint {
        self.with_guards(self.taken.clone())
    }

    /// `guards ∧ ¬c_i`.
    pub fn flipped(&self) -> Constraint {
        self.with_guards(self.taken.negate())
    }

    fn with_guards(&self, c: Constraint) -> Constraint {
        if self.guards.is_empty() {
            c
        } else {
            let mut parts = self.guards.clone();
            parts.push(c);
            Constraint::And(parts)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbortCause {
    LoopCapExceeded { cap: u32 },
    DivisionByZero,
    IndexOutOfRange { index: i64, len: usize },
    Overflow,
}

impl fmt::Display for AbortCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortCause::LoopCapExceeded { cap } => write!(f, "loop cap {cap} exceeded"),
            AbortCause::DivisionByZero => f.write_str("division by zero"),
            AbortCause::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            AbortCause::Overflow => f.write_str("integer overflow"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeAbort {
    pub line: u32,
    pub col: u32,
    pub cause: AbortCause,
}

impl fmt::Display for RuntimeAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.cause)
    }
}

/// Result of one concolic run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub steps: Vec<PathStep>,
    pub abort: Option<RuntimeAbort>,
}

impl Execution {
    pub fn branches(&self) -> Vec<BranchId> {
        self.steps.iter().map(|s| s.branch).collect()
    }
}

/// A covered path, with the test that covered it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub id: usize,
    pub test: usize,
    pub steps: Vec<PathStep>,
    pub abort: Option<RuntimeAbort>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn branches(&self) -> Vec<BranchId> {
        self.steps.iter().map(|s| s.branch).collect()
    }

    /// Branch sequence of `flip(p, i)`: the first `i` branches, then the opposite of branch `i`.
    pub fn flip_prefix(&self, i: usize) -> Vec<BranchId> {
        let mut out: Vec<BranchId> = self.steps[..i].iter().map(|s| s.branch).collect();
        out.push(self.steps[i].branch.opposite());
        out
    }
}

#[derive(Debug, Clone)]
struct SymValue {
    conc: i64,
    sym: LinExpr,
}

impl SymValue {
    fn constant(v: i64) -> Self {
        SymValue {
            conc: v,
            sym: LinExpr::constant(v),
        }
    }
}

fn overflow(_: Overflow) -> AbortCause {
    AbortCause::Overflow
}

struct Machine<'a> {
    subject: &'a Subject,
    inputs: &'a [i64],
    scalars: Vec<SymValue>,
    arrays: Vec<Vec<SymValue>>,
    iterations: Vec<u32>,
    guards: Vec<Constraint>,
    steps: Vec<PathStep>,
}

/// Runs the program on `inputs`, recording every atomic decision with its input constraint.
pub fn execute_inputs(subject: &Subject, inputs: &[i64]) -> Execution {
    let program = subject.program();
    let mut scalars = vec![SymValue::constant(0); program.scalars().len()];
    for (i, v) in program.inputs().iter().enumerate() {
        if v.cell.is_none() {
            let slot = program.param_scalar_slot(v.param).unwrap();
            scalars[slot] = SymValue {
                conc: inputs[i],
                sym: LinExpr::var(VarId(i as u32)),
            };
        }
    }
    let arrays = program
        .arrays()
        .iter()
        .map(|a| {
            (0..a.len)
                .map(|c| SymValue {
                    conc: inputs[a.first_input + c],
                    sym: LinExpr::var(VarId((a.first_input + c) as u32)),
                })
                .collect()
        })
        .collect();
    let mut m = Machine {
        subject,
        inputs,
        scalars,
        arrays,
        iterations: vec![0; subject.cfg().loops().len()],
        guards: Vec::new(),
        steps: Vec::new(),
    };
    let abort = m.run().err();
    Execution {
        steps: m.steps,
        abort,
    }
}

/// `execute_inputs` on a test case's values.
pub fn execute(subject: &Subject, test: &TestCase) -> Execution {
    execute_inputs(subject, &test.inputs())
}

impl Machine<'_> {
    fn run(&mut self) -> Result<(), RuntimeAbort> {
        let cfg = self.subject.cfg();
        let mut at = cfg.entry();
        loop {
            let node = &cfg.nodes()[at];
            let fail = |cause| RuntimeAbort {
                line: node.span.line,
                col: node.span.col,
                cause,
            };
            at = match &node.kind {
                NodeKind::Exit => return Ok(()),
                NodeKind::Entry | NodeKind::Join => node.succ[0],
                NodeKind::LoopEnter(l) => {
                    self.iterations[*l] = 0;
                    node.succ[0]
                }
                NodeKind::LoopBody(l) => {
                    self.iterations[*l] += 1;
                    let cap = cfg.loops()[*l].cap;
                    if self.iterations[*l] > cap {
                        return Err(fail(AbortCause::LoopCapExceeded { cap }));
                    }
                    node.succ[0]
                }
                NodeKind::Assign { target, value } => {
                    self.assign(target, value).map_err(fail)?;
                    node.succ[0]
                }
                NodeKind::Decision(d) => {
                    let dec = cfg.decision(*d);
                    let taken = self.decide(dec.op, &dec.lhs, &dec.rhs).map_err(fail)?;
                    let (outcome, c) = taken;
                    self.steps.push(PathStep {
                        branch: BranchId {
                            decision: *d,
                            polarity: outcome,
                        },
                        guards: std::mem::take(&mut self.guards),
                        taken: c,
                    });
                    node.succ[usize::from(!outcome)]
                }
            };
        }
    }

    fn decide(
        &mut self,
        op: RelOp,
        lhs: &RExpr,
        rhs: &RExpr,
    ) -> Result<(bool, Constraint), AbortCause> {
        let l = self.eval(lhs)?;
        let r = self.eval(rhs)?;
        let outcome = op.holds(l.conc, r.conc);
        let op = if outcome { op } else { op.negate() };
        let c = Constraint::cmp(l.sym, op, r.sym).map_err(overflow)?;
        Ok((outcome, c))
    }

    fn check_agreement(&self, v: &SymValue) {
        if cfg!(debug_assertions) {
            assert_eq!(
                v.sym.eval(self.inputs),
                Some(v.conc),
                "symbolic value disagrees with the concrete run"
            );
        }
    }

    fn assign(&mut self, target: &RTarget, value: &RExpr) -> Result<(), AbortCause> {
        let v = self.eval(value)?;
        self.check_agreement(&v);
        match target {
            RTarget::Scalar(i) => self.scalars[*i] = v,
            RTarget::Index(a, idx) => {
                let i = self.eval(idx)?;
                assert!(
                    i.sym.as_constant().is_some(),
                    "array write index depends on inputs; validation should have rejected it"
                );
                let len = self.arrays[*a].len();
                if i.conc < 0 || i.conc as usize >= len {
                    return Err(AbortCause::IndexOutOfRange { index: i.conc, len });
                }
                self.arrays[*a][i.conc as usize] = v;
            }
        }
        Ok(())
    }

    fn guard(&mut self, lhs: &LinExpr, op: RelOp, rhs: i64) -> Result<(), AbortCause> {
        if lhs.as_constant().is_none() {
            let g = Constraint::cmp(lhs.clone(), op, LinExpr::constant(rhs)).map_err(overflow)?;
            if !self.guards.contains(&g) {
                self.guards.push(g);
            }
        }
        Ok(())
    }

    fn eval(&mut self, e: &RExpr) -> Result<SymValue, AbortCause> {
        Ok(match e {
            RExpr::Const(v) => SymValue::constant(*v),
            RExpr::Scalar(i) => self.scalars[*i].clone(),
            RExpr::Index(a, idx) => {
                let i = self.eval(idx)?;
                let len = self.arrays[*a].len();
                if i.conc < 0 || i.conc as usize >= len {
                    return Err(AbortCause::IndexOutOfRange { index: i.conc, len });
                }
                let cell = &self.arrays[*a][i.conc as usize];
                if i.sym.as_constant().is_some() {
                    cell.clone()
                } else {
                    let conc = cell.conc;
                    self.guard(&i.sym, RelOp::Ge, 0)?;
                    self.guard(&i.sym, RelOp::Le, len as i64 - 1)?;
                    let cells = self.arrays[*a].iter().map(|c| c.sym.clone()).collect();
                    SymValue {
                        conc,
                        sym: LinExpr::select(cells, i.sym),
                    }
                }
            }
            RExpr::Neg(a) => {
                let v = self.eval(a)?;
                SymValue {
                    conc: v.conc.checked_neg().ok_or(AbortCause::Overflow)?,
                    sym: v.sym.neg().map_err(overflow)?,
                }
            }
            RExpr::Bin(op, a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                let conc = apply(*op, x.conc, y.conc).map_err(|e| match e {
                    EvalError::DivisionByZero => AbortCause::DivisionByZero,
                    _ => AbortCause::Overflow,
                })?;
                let sym = match op {
                    BinOp::Add => x.sym.add(&y.sym),
                    BinOp::Sub => x.sym.sub(&y.sym),
                    BinOp::Mul => x.sym.mul(&y.sym),
                    BinOp::Div | BinOp::Mod => {
                        self.guard(&y.sym, RelOp::Ne, 0)?;
                        let r = if *op == BinOp::Div {
                            x.sym.div(&y.sym)
                        } else {
                            x.sym.rem(&y.sym)
                        };
                        r.expect("divisor is concretely non-zero")
                    }
                }
                .map_err(overflow)?;
                SymValue { conc, sym }
            }
        })
    }
}

/// Fatal inconsistencies inside the engine.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("flip({index}) produced a path without the flipped prefix\n  original:  {original}\n  generated: {generated}")]
    PrefixViolation {
        index: usize,
        original: String,
        generated: String,
    },
    #[error("solver model rejected as a test case: {0}")]
    BadModel(#[from] TestCaseError),
    #[error("branch {0} is uncovered but no flip attempt explains it")]
    Unexplained(BranchId),
    #[error("arithmetic overflow while building constraints")]
    Overflow(#[from] Overflow),
}

fn render_branches(bs: &[BranchId]) -> String {
    bs.iter()
        .map(BranchId::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// A request to negate step `index` of `path`.
#[derive(Debug, Clone, Copy)]
pub struct FlipRequest<'a> {
    pub path: &'a Path,
    pub index: usize,
    /// Whether the opposite branch was already covered when the strategy chose this flip.
    pub hopeful: bool,
}

#[derive(Debug, Clone)]
pub enum FlipOutcome {
    NewTest {
        test: TestCase,
        execution: Execution,
    },
    /// `pred(flip(p, i))` is unsatisfiable; `by_propagation` when the push alone refuted it.
    InfeasiblePrefix {
        by_propagation: bool,
        formula: String,
    },
    Unknown {
        formula: String,
        budget: u64,
    },
}

#[derive(Debug, Clone)]
pub struct FlipResult {
    pub outcome: FlipOutcome,
    pub solver_called: bool,
}

/// Pushes `¬c_i` and, unless propagation refutes it, solves once.
///
/// The solver must hold exactly the precondition and `c_0 .. c_{i-1}`. The pushed level is
/// left in place for the caller to pop.
pub fn flip(
    subject: &Subject,
    request: FlipRequest<'_>,
    solver: &mut SolverState,
    budget: u64,
    test_id: usize,
) -> Result<FlipResult, EngineError> {
    let FlipRequest { path, index, .. } = request;
    debug_assert_eq!(
        solver.depth(),
        index,
        "solver not positioned at the flip prefix"
    );
    if solver.push(path.steps[index].flipped()) == PushOutcome::Inconsistent {
        return Ok(FlipResult {
            outcome: FlipOutcome::InfeasiblePrefix {
                by_propagation: true,
                formula: solver.formula_text(),
            },
            solver_called: false,
        });
    }
    let outcome = match solver.solve(budget) {
        SolveOutcome::Sat(model) => {
            let test = TestCase::new(
                subject.program(),
                test_id,
                &model,
                Provenance::Flip {
                    path: path.id,
                    index,
                },
            )?;
            let execution = execute(subject, &test);
            let expected = path.flip_prefix(index);
            let got = execution.branches();
            if got.len() <= index || got[..=index] != expected[..] {
                return Err(EngineError::PrefixViolation {
                    index,
                    original: render_branches(&path.branches()),
                    generated: render_branches(&got),
                });
            }
            FlipOutcome::NewTest { test, execution }
        }
        SolveOutcome::Unsat => FlipOutcome::InfeasiblePrefix {
            by_propagation: false,
            formula: solver.formula_text(),
        },
        SolveOutcome::Unknown { budget } => FlipOutcome::Unknown {
            formula: solver.formula_text(),
            budget,
        },
    };
    Ok(FlipResult {
        outcome,
        solver_called: true,
    })
}

#[derive(Debug, Clone)]
pub enum InitialOutcome {
    Test(TestCase),
    /// No input satisfies the precondition.
    Vacuous,
    /// The budget ran out on the bare precondition.
    TooHard {
        budget: u64,
    },
}

/// First test: one solve on the base level. Counts as a solver call.
pub fn initial_test(
    subject: &Subject,
    solver: &mut SolverState,
    budget: u64,
) -> Result<InitialOutcome, EngineError> {
    Ok(match solver.solve(budget) {
        SolveOutcome::Sat(model) => InitialOutcome::Test(TestCase::new(
            subject.program(),
            0,
            &model,
            Provenance::Initial,
        )?),
        SolveOutcome::Unsat => InitialOutcome::Vacuous,
        SolveOutcome::Unknown { budget } => InitialOutcome::TooHard { budget },
    })
}

/// Source position of the statement that aborted, for reports.
pub fn abort_span(abort: &RuntimeAbort) -> Span {
    Span::new(abort.line, abort.col)
}
