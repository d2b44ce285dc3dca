//! Static checks that turn a parsed `Program` into a `CheckedProgram`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::*;
use super::diag::{Diagnostic, Diagnostics};
use super::pretty::pretty_cond;

/// Domain bounds must fit in 32 bits; arithmetic runs in 64 bits with overflow checks.
pub const DOMAIN_MIN: i64 = i32::MIN as i64;
pub const DOMAIN_MAX: i64 = i32::MAX as i64;
pub const MAX_ARRAY_LEN: usize = 4096;

/// One flattened input: a scalar parameter or one cell of an array parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputVar {
    pub name: String,
    pub param: usize,
    pub cell: Option<usize>,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Scalar(usize),
    Array(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArraySlot {
    pub name: String,
    pub len: usize,
    /// Index of cell 0 in the flattened input list.
    pub first_input: usize,
}

/// A program that passed validation, with its resolved precondition and variable layout.
#[derive(Debug, Clone)]
pub struct CheckedProgram {
    program: Program,
    precondition: Option<Cond>,
    inputs: Vec<InputVar>,
    scalars: Vec<String>,
    /// Scalar slot of each scalar parameter, by parameter index.
    param_scalar: Vec<Option<usize>>,
    arrays: Vec<ArraySlot>,
    slots: HashMap<String, Slot>,
    warnings: Vec<Diagnostic>,
}

impl CheckedProgram {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn name(&self) -> &str {
        &self.program.name
    }

    pub fn precondition(&self) -> Option<&Cond> {
        self.precondition.as_ref()
    }

    pub fn inputs(&self) -> &[InputVar] {
        &self.inputs
    }

    pub fn input_names(&self) -> Vec<String> {
        self.inputs.iter().map(|v| v.name.clone()).collect()
    }

    /// Scalar variable names; parameters first, then locals in first-assignment order.
    pub fn scalars(&self) -> &[String] {
        &self.scalars
    }

    pub fn arrays(&self) -> &[ArraySlot] {
        &self.arrays
    }

    pub fn slot(&self, name: &str) -> Option<Slot> {
        self.slots.get(name).copied()
    }

    pub fn param_scalar_slot(&self, param: usize) -> Option<usize> {
        self.param_scalar[param]
    }

    /// Non-fatal findings, e.g. an inline precondition overriding the command-line one.
    pub fn warnings(&self) -> &[Diagnostic] {
        &self.warnings
    }

    /// Number of concrete input vectors in the declared domains, saturating.
    pub fn domain_size(&self) -> u128 {
        self.inputs
            .iter()
            .map(|v| (v.hi - v.lo + 1) as u128)
            .fold(1u128, |acc, n| acc.saturating_mul(n))
    }

    pub fn loop_count(&self) -> usize {
        fn count(block: &Block) -> usize {
            block
                .iter()
                .map(|s| match &s.kind {
                    StmtKind::If {
                        then_block,
                        else_block,
                        ..
                    } => count(then_block) + count(else_block),
                    StmtKind::While { body, .. } => 1 + count(body),
                    _ => 0,
                })
                .sum()
        }
        count(&self.program.body)
    }
}

/// Validates `program` against the domain, cap and precondition rules.
///
/// `external` is a precondition supplied outside the source (command line). An inline
/// `requires` clause wins; if both are present and differ, a warning is recorded.
pub fn validate(program: Program, external: Option<Cond>) -> Result<CheckedProgram, Diagnostics> {
    let mut problems = Vec::new();
    let mut warnings = Vec::new();

    if program.params.is_empty() {
        problems.push(Diagnostic::new(
            program.span,
            "program must declare at least one parameter",
        ));
    }
    if program.body.is_empty() {
        problems.push(Diagnostic::new(
            program.span,
            "program body must contain at least one statement",
        ));
    }
    for p in &program.params {
        if p.lo > p.hi {
            problems.push(Diagnostic::new(
                p.span,
                format!("empty domain [{}..{}] for `{}`", p.lo, p.hi, p.name),
            ));
        }
        if p.lo < DOMAIN_MIN || p.hi > DOMAIN_MAX {
            problems.push(Diagnostic::new(
                p.span,
                format!("domain of `{}` does not fit in 32-bit integers", p.name),
            ));
        }
        if let ParamKind::Array(n) = p.kind {
            if n == 0 {
                problems.push(Diagnostic::new(
                    p.span,
                    format!("array `{}` has length 0", p.name),
                ));
            } else if n > MAX_ARRAY_LEN {
                problems.push(Diagnostic::new(
                    p.span,
                    format!("array `{}` is longer than {MAX_ARRAY_LEN}", p.name),
                ));
            }
        }
    }
    check_caps(&program.body, &mut problems);

    let precondition = match (&program.requires, external) {
        (Some(inline), Some(ext)) => {
            if inline.strip_spans() != ext.strip_spans() {
                warnings.push(Diagnostic::new(
                    program.span,
                    format!(
                        "inline precondition `{}` overrides command-line precondition `{}`",
                        pretty_cond(inline),
                        pretty_cond(&ext)
                    ),
                ));
            }
            Some(inline.clone())
        }
        (Some(inline), None) => Some(inline.clone()),
        (None, ext) => ext,
    };
    if let Some(pre) = &precondition {
        check_precondition(pre, &program.params, &mut problems);
    }

    // Layout: parameters, then locals.
    let mut inputs = Vec::new();
    let mut scalars = Vec::new();
    let mut arrays = Vec::new();
    let mut slots = HashMap::new();
    let mut param_scalar = Vec::new();
    for (pi, p) in program.params.iter().enumerate() {
        match p.kind {
            ParamKind::Scalar => {
                slots.insert(p.name.clone(), Slot::Scalar(scalars.len()));
                param_scalar.push(Some(scalars.len()));
                scalars.push(p.name.clone());
                inputs.push(InputVar {
                    name: p.name.clone(),
                    param: pi,
                    cell: None,
                    lo: p.lo,
                    hi: p.hi,
                });
            }
            ParamKind::Array(n) => {
                slots.insert(p.name.clone(), Slot::Array(arrays.len()));
                param_scalar.push(None);
                arrays.push(ArraySlot {
                    name: p.name.clone(),
                    len: n,
                    first_input: inputs.len(),
                });
                for c in 0..n.min(MAX_ARRAY_LEN) {
                    inputs.push(InputVar {
                        name: format!("{}[{}]", p.name, c),
                        param: pi,
                        cell: Some(c),
                        lo: p.lo,
                        hi: p.hi,
                    });
                }
            }
        }
    }
    let mut locals = Vec::new();
    collect_locals(&program.body, &mut locals);
    for name in locals {
        if !slots.contains_key(&name) {
            slots.insert(name.clone(), Slot::Scalar(scalars.len()));
            scalars.push(name);
        }
    }

    check_array_writes(&program, &mut problems);

    if !problems.is_empty() {
        return Err(Diagnostics(problems));
    }
    Ok(CheckedProgram {
        program,
        precondition,
        inputs,
        scalars,
        param_scalar,
        arrays,
        slots,
        warnings,
    })
}

fn check_caps(block: &Block, out: &mut Vec<Diagnostic>) {
    for s in block {
        match &s.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                check_caps(then_block, out);
                check_caps(else_block, out);
            }
            StmtKind::While { cap, body, .. } => {
                match cap {
                    None => out.push(Diagnostic::new(s.span, "loop cap required")),
                    Some(0) => out.push(Diagnostic::new(s.span, "loop cap must be positive")),
                    Some(_) => {}
                }
                check_caps(body, out);
            }
            _ => {}
        }
    }
}

fn check_precondition(cond: &Cond, params: &[ParamDecl], out: &mut Vec<Diagnostic>) {
    let kinds: HashMap<&str, bool> = params
        .iter()
        .map(|p| (p.name.as_str(), p.is_array()))
        .collect();
    let mut visit = |name: &str, span: Span, indexed: bool| match kinds.get(name) {
        None => out.push(Diagnostic::new(span, format!("unknown parameter {name}"))),
        Some(&is_array) if is_array != indexed => out.push(Diagnostic::new(
            span,
            format!("parameter {name} used with the wrong shape"),
        )),
        _ => {}
    };
    for atom in cond.atoms() {
        if let Cond::Cmp { lhs, rhs, .. } = atom {
            walk_names(lhs, &mut visit);
            walk_names(rhs, &mut visit);
        }
    }
}

fn walk_names(e: &Expr, f: &mut impl FnMut(&str, Span, bool)) {
    match e {
        Expr::Int(_) => {}
        Expr::Var(n, s) => f(n, *s, false),
        Expr::Index(n, i, s) => {
            f(n, *s, true);
            walk_names(i, f);
        }
        Expr::Neg(a) => walk_names(a, f),
        Expr::Bin(_, a, b) => {
            walk_names(a, f);
            walk_names(b, f);
        }
    }
}

fn collect_locals(block: &Block, out: &mut Vec<String>) {
    for s in block {
        match &s.kind {
            StmtKind::Assign {
                target: LValue::Var(n),
                ..
            } => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                collect_locals(then_block, out);
                collect_locals(else_block, out);
            }
            StmtKind::While { body, .. } => collect_locals(body, out),
            _ => {}
        }
    }
}

/// Rejects array writes whose index may depend on inputs (flow-insensitive taint).
fn check_array_writes(program: &Program, out: &mut Vec<Diagnostic>) {
    let params: BTreeSet<&str> = program.params.iter().map(|p| p.name.as_str()).collect();
    let mut assigns: BTreeMap<&str, Vec<&Expr>> = BTreeMap::new();
    let mut writes: Vec<(&Expr, Span)> = Vec::new();
    collect_assigns(&program.body, &mut assigns, &mut writes);

    let mut tainted: BTreeSet<&str> = params.clone();
    loop {
        let before = tainted.len();
        for (name, values) in &assigns {
            if !tainted.contains(name) && values.iter().any(|e| expr_tainted(e, &tainted)) {
                tainted.insert(name);
            }
        }
        if tainted.len() == before {
            break;
        }
    }
    for (idx, span) in writes {
        if expr_tainted(idx, &tainted) {
            out.push(Diagnostic::new(
                span,
                "array write with an input-dependent index is not supported",
            ));
        }
    }
}

fn collect_assigns<'a>(
    block: &'a Block,
    assigns: &mut BTreeMap<&'a str, Vec<&'a Expr>>,
    writes: &mut Vec<(&'a Expr, Span)>,
) {
    for s in block {
        match &s.kind {
            StmtKind::Assign { target, value } => match target {
                LValue::Var(n) => assigns.entry(n.as_str()).or_default().push(value),
                LValue::Index(_, idx) => writes.push((idx, s.span)),
            },
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                collect_assigns(then_block, assigns, writes);
                collect_assigns(else_block, assigns, writes);
            }
            StmtKind::While { body, .. } => collect_assigns(body, assigns, writes),
            StmtKind::Skip => {}
        }
    }
}

fn expr_tainted(e: &Expr, tainted: &BTreeSet<&str>) -> bool {
    match e {
        Expr::Int(_) => false,
        Expr::Var(n, _) => tainted.contains(n.as_str()),
        // every array holds input-derived cells
        Expr::Index(..) => true,
        Expr::Neg(a) => expr_tainted(a, tainted),
        Expr::Bin(_, a, b) => expr_tainted(a, tainted) || expr_tainted(b, tainted),
    }
}
