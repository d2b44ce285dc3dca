//! Symbolic integer expressions over input variables and the constraints built from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::lang::RelOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Arithmetic overflowed the engine's 64-bit integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("integer overflow")]
pub struct Overflow;

/// A non-linear building block of a `LinExpr`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(VarId),
    Mul(Box<LinExpr>, Box<LinExpr>),
    /// Truncating division.
    Div(Box<LinExpr>, Box<LinExpr>),
    /// Remainder with the sign of the dividend.
    Mod(Box<LinExpr>, Box<LinExpr>),
    /// Array read with a symbolic index; an out-of-range index makes the read undefined.
    Select(Vec<LinExpr>, Box<LinExpr>),
}

/// `constant + sum(coef * atom)`, with atoms sorted and coefficients non-zero.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LinExpr {
    constant: i64,
    terms: Vec<(Atom, i64)>,
}

impl LinExpr {
    pub fn constant(v: i64) -> Self {
        LinExpr {
            constant: v,
            terms: Vec::new(),
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::atom(Atom::Var(v))
    }

    fn atom(a: Atom) -> Self {
        LinExpr {
            constant: 0,
            terms: vec![(a, 1)],
        }
    }

    pub fn as_constant(&self) -> Option<i64> {
        self.terms.is_empty().then_some(self.constant)
    }

    pub fn constant_part(&self) -> i64 {
        self.constant
    }

    pub fn terms(&self) -> &[(Atom, i64)] {
        &self.terms
    }

    fn from_map(constant: i64, map: BTreeMap<Atom, i64>) -> Self {
        LinExpr {
            constant,
            terms: map.into_iter().filter(|(_, c)| *c != 0).collect(),
        }
    }

    fn combine(&self, other: &LinExpr, sign: i64) -> Result<LinExpr, Overflow> {
        let constant = other
            .constant
            .checked_mul(sign)
            .and_then(|c| self.constant.checked_add(c))
            .ok_or(Overflow)?;
        let mut map: BTreeMap<Atom, i64> = self.terms.iter().cloned().collect();
        for (a, c) in &other.terms {
            let c = c.checked_mul(sign).ok_or(Overflow)?;
            let slot = map.entry(a.clone()).or_insert(0);
            *slot = slot.checked_add(c).ok_or(Overflow)?;
        }
        Ok(Self::from_map(constant, map))
    }

    pub fn add(&self, other: &LinExpr) -> Result<LinExpr, Overflow> {
        self.combine(other, 1)
    }

    pub fn sub(&self, other: &LinExpr) -> Result<LinExpr, Overflow> {
        self.combine(other, -1)
    }

    pub fn scale(&self, k: i64) -> Result<LinExpr, Overflow> {
        if k == 0 {
            return Ok(LinExpr::constant(0));
        }
        let constant = self.constant.checked_mul(k).ok_or(Overflow)?;
        let terms = self
            .terms
            .iter()
            .map(|(a, c)| c.checked_mul(k).map(|c| (a.clone(), c)).ok_or(Overflow))
            .collect::<Result<_, _>>()?;
        Ok(LinExpr { constant, terms })
    }

    pub fn neg(&self) -> Result<LinExpr, Overflow> {
        self.scale(-1)
    }

    pub fn mul(&self, other: &LinExpr) -> Result<LinExpr, Overflow> {
        match (self.as_constant(), other.as_constant()) {
            (Some(k), _) => other.scale(k),
            (_, Some(k)) => self.scale(k),
            _ => {
                let (a, b) = if self <= other {
                    (self, other)
                } else {
                    (other, self)
                };
                Ok(Self::atom(Atom::Mul(
                    Box::new(a.clone()),
                    Box::new(b.clone()),
                )))
            }
        }
    }

    /// Truncating division; `None` when both sides are constant and the divisor is zero.
    pub fn div(&self, other: &LinExpr) -> Option<Result<LinExpr, Overflow>> {
        match (self.as_constant(), other.as_constant()) {
            (_, Some(0)) => None,
            (Some(a), Some(b)) => Some(a.checked_div(b).map(LinExpr::constant).ok_or(Overflow)),
            (_, Some(1)) => Some(Ok(self.clone())),
            _ => Some(Ok(Self::atom(Atom::Div(
                Box::new(self.clone()),
                Box::new(other.clone()),
            )))),
        }
    }

    pub fn rem(&self, other: &LinExpr) -> Option<Result<LinExpr, Overflow>> {
        match (self.as_constant(), other.as_constant()) {
            (_, Some(0)) => None,
            (Some(a), Some(b)) => Some(a.checked_rem(b).map(LinExpr::constant).ok_or(Overflow)),
            (_, Some(1)) | (_, Some(-1)) => Some(Ok(LinExpr::constant(0))),
            _ => Some(Ok(Self::atom(Atom::Mod(
                Box::new(self.clone()),
                Box::new(other.clone()),
            )))),
        }
    }

    /// Read of `cells[index]` for a non-constant index.
    pub fn select(cells: Vec<LinExpr>, index: LinExpr) -> LinExpr {
        Self::atom(Atom::Select(cells, Box::new(index)))
    }

    /// Value under a full assignment; `None` if some sub-term is undefined or overflows.
    pub fn eval(&self, values: &[i64]) -> Option<i64> {
        let mut acc = self.constant;
        for (a, c) in &self.terms {
            acc = acc.checked_add(c.checked_mul(a.eval(values)?)?)?;
        }
        Some(acc)
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        for (a, _) in &self.terms {
            a.collect_vars(out);
        }
    }

    pub fn display(&self, names: &[String]) -> String {
        let mut out = String::new();
        self.write(&mut out, names);
        out
    }

    fn write(&self, out: &mut String, names: &[String]) {
        if self.terms.is_empty() {
            let _ = write!(out, "{}", self.constant);
            return;
        }
        for (i, (a, c)) in self.terms.iter().enumerate() {
            let mag = c.unsigned_abs();
            if i == 0 {
                if *c < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if *c < 0 { " - " } else { " + " });
            }
            if mag != 1 {
                let _ = write!(out, "{mag}*");
            }
            a.write(out, names);
        }
        if self.constant != 0 {
            let _ = write!(
                out,
                " {} {}",
                if self.constant < 0 { '-' } else { '+' },
                self.constant.unsigned_abs()
            );
        }
    }
}

impl Atom {
    pub fn eval(&self, values: &[i64]) -> Option<i64> {
        match self {
            Atom::Var(v) => values.get(v.index()).copied(),
            Atom::Mul(a, b) => a.eval(values)?.checked_mul(b.eval(values)?),
            Atom::Div(a, b) => {
                let d = b.eval(values)?;
                if d == 0 {
                    None
                } else {
                    a.eval(values)?.checked_div(d)
                }
            }
            Atom::Mod(a, b) => {
                let d = b.eval(values)?;
                if d == 0 {
                    None
                } else {
                    a.eval(values)?.checked_rem(d)
                }
            }
            Atom::Select(cells, idx) => {
                let i = idx.eval(values)?;
                let i = usize::try_from(i).ok()?;
                cells.get(i)?.eval(values)
            }
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Atom::Var(v) => {
                out.insert(*v);
            }
            Atom::Mul(a, b) | Atom::Div(a, b) | Atom::Mod(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Atom::Select(cells, idx) => {
                for c in cells {
                    c.collect_vars(out);
                }
                idx.collect_vars(out);
            }
        }
    }

    fn write(&self, out: &mut String, names: &[String]) {
        match self {
            Atom::Var(v) => match names.get(v.index()) {
                Some(n) => out.push_str(n),
                None => {
                    let _ = write!(out, "v{}", v.0);
                }
            },
            Atom::Mul(a, b) | Atom::Div(a, b) | Atom::Mod(a, b) => {
                let op = match self {
                    Atom::Mul(..) => "*",
                    Atom::Div(..) => "/",
                    _ => "%",
                };
                out.push('(');
                a.write(out, names);
                let _ = write!(out, ") {op} (");
                b.write(out, names);
                out.push(')');
            }
            Atom::Select(cells, idx) => {
                out.push_str("select([");
                for (i, c) in cells.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    c.write(out, names);
                }
                out.push_str("], ");
                idx.write(out, names);
                out.push(')');
            }
        }
    }
}

/// `lhs op rhs`, kept together with the normalized difference `lhs - rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Comparison {
    lhs: LinExpr,
    op: RelOp,
    rhs: LinExpr,
    diff: LinExpr,
}

impl Comparison {
    pub fn new(lhs: LinExpr, op: RelOp, rhs: LinExpr) -> Result<Self, Overflow> {
        let diff = lhs.sub(&rhs)?;
        Ok(Comparison { lhs, op, rhs, diff })
    }

    pub fn op(&self) -> RelOp {
        self.op
    }

    pub fn lhs(&self) -> &LinExpr {
        &self.lhs
    }

    pub fn rhs(&self) -> &LinExpr {
        &self.rhs
    }

    /// `lhs - rhs`; the comparison is `diff op 0`.
    pub fn diff(&self) -> &LinExpr {
        &self.diff
    }

    pub fn negate(&self) -> Comparison {
        Comparison {
            op: self.op.negate(),
            ..self.clone()
        }
    }

    pub fn holds(&self, values: &[i64]) -> bool {
        match (self.lhs.eval(values), self.rhs.eval(values)) {
            (Some(a), Some(b)) => self.op.holds(a, b),
            _ => false,
        }
    }
}

/// A constraint over input variables. Path constraints are single comparisons, possibly
/// conjoined with definedness guards; preconditions may use the full boolean structure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint {
    Cmp(Comparison),
    And(Vec<Constraint>),
    Or(Vec<Constraint>),
}

impl Constraint {
    pub fn cmp(lhs: LinExpr, op: RelOp, rhs: LinExpr) -> Result<Self, Overflow> {
        Comparison::new(lhs, op, rhs).map(Constraint::Cmp)
    }

    /// Closed-form negation (De Morgan for the connectives).
    pub fn negate(&self) -> Constraint {
        match self {
            Constraint::Cmp(c) => Constraint::Cmp(c.negate()),
            Constraint::And(cs) => Constraint::Or(cs.iter().map(Constraint::negate).collect()),
            Constraint::Or(cs) => Constraint::And(cs.iter().map(Constraint::negate).collect()),
        }
    }

    /// Conjunction, flattening a single element.
    pub fn all(mut parts: Vec<Constraint>) -> Constraint {
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Constraint::And(parts)
        }
    }

    /// Truth under a full assignment. Undefined sub-terms make a comparison false.
    pub fn holds(&self, values: &[i64]) -> bool {
        match self {
            Constraint::Cmp(c) => c.holds(values),
            Constraint::And(cs) => cs.iter().all(|c| c.holds(values)),
            Constraint::Or(cs) => cs.iter().any(|c| c.holds(values)),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Constraint::Cmp(c) => {
                c.lhs.collect_vars(out);
                c.rhs.collect_vars(out);
            }
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().for_each(|c| c.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn display(&self, names: &[String]) -> String {
        match self {
            Constraint::Cmp(c) => format!(
                "{} {} {}",
                c.lhs.display(names),
                c.op.symbol(),
                c.rhs.display(names)
            ),
            Constraint::And(cs) if cs.is_empty() => "true".to_string(),
            Constraint::Or(cs) if cs.is_empty() => "false".to_string(),
            Constraint::And(cs) | Constraint::Or(cs) => {
                let sep = if matches!(self, Constraint::And(_)) {
                    " && "
                } else {
                    " || "
                };
                let parts: Vec<String> = cs
                    .iter()
                    .map(|c| match c {
                        Constraint::Cmp(_) => c.display(names),
                        _ => format!("({})", c.display(names)),
                    })
                    .collect();
                parts.join(sep)
            }
        }
    }
}
