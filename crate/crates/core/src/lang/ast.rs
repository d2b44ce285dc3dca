//! Syntax tree for `.bc` programs.

use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub params: Vec<ParamDecl>,
    /// Inline `requires <cond>;` clause.
    pub requires: Option<Cond>,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Scalar,
    /// Fixed-length integer array.
    Array(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub kind: ParamKind,
    /// Inclusive per-element domain.
    pub lo: i64,
    pub hi: i64,
    pub span: Span,
}

impl ParamDecl {
    /// Number of input values the parameter contributes.
    pub fn width(&self) -> usize {
        match self.kind {
            ParamKind::Scalar => 1,
            ParamKind::Array(n) => n,
        }
    }

    pub fn is_array(&self) -> bool {
        matches!(self.kind, ParamKind::Array(_))
    }
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Assign {
        target: LValue,
        value: Expr,
    },
    /// An absent `else` is an empty block; its branch still exists.
    If {
        cond: Cond,
        then_block: Block,
        else_block: Block,
    },
    /// `cap` is mandatory after validation.
    While {
        cond: Cond,
        cap: Option<u32>,
        body: Block,
    },
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Var(String),
    Index(String, Expr),
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Var(n) | LValue::Index(n, _) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Var(String, Span),
    Index(String, Box<Expr>, Span),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// Comparison operators, shared by source conditions and solver constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelOp {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> RelOp {
        match self {
            RelOp::Lt => RelOp::Ge,
            RelOp::Le => RelOp::Gt,
            RelOp::Eq => RelOp::Ne,
            RelOp::Ne => RelOp::Eq,
            RelOp::Gt => RelOp::Le,
            RelOp::Ge => RelOp::Lt,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            RelOp::Gt => a > b,
            RelOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    /// An atomic comparison; `span` locates the left operand and identifies the atom.
    Cmp {
        op: RelOp,
        lhs: Expr,
        rhs: Expr,
        span: Span,
    },
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

impl Cond {
    /// Comparison atoms in left-to-right source order.
    pub fn atoms(&self) -> Vec<&Cond> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Cond>) {
        match self {
            Cond::Cmp { .. } => out.push(self),
            Cond::And(a, b) | Cond::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Cond::Not(a) => a.collect_atoms(out),
        }
    }
}

/// Structural copy with every span reset, used to compare programs modulo layout.
pub trait StripSpans {
    fn strip_spans(&self) -> Self;
}

impl StripSpans for Program {
    fn strip_spans(&self) -> Self {
        Program {
            name: self.name.clone(),
            params: self
                .params
                .iter()
                .map(|p| ParamDecl {
                    span: Span::default(),
                    ..p.clone()
                })
                .collect(),
            requires: self.requires.as_ref().map(StripSpans::strip_spans),
            body: self.body.strip_spans(),
            span: Span::default(),
        }
    }
}

impl StripSpans for Block {
    fn strip_spans(&self) -> Self {
        self.iter().map(StripSpans::strip_spans).collect()
    }
}

impl StripSpans for Stmt {
    fn strip_spans(&self) -> Self {
        let kind = match &self.kind {
            StmtKind::Assign { target, value } => StmtKind::Assign {
                target: match target {
                    LValue::Var(n) => LValue::Var(n.clone()),
                    LValue::Index(n, e) => LValue::Index(n.clone(), e.strip_spans()),
                },
                value: value.strip_spans(),
            },
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => StmtKind::If {
                cond: cond.strip_spans(),
                then_block: then_block.strip_spans(),
                else_block: else_block.strip_spans(),
            },
            StmtKind::While { cond, cap, body } => StmtKind::While {
                cond: cond.strip_spans(),
                cap: *cap,
                body: body.strip_spans(),
            },
            StmtKind::Skip => StmtKind::Skip,
        };
        Stmt {
            kind,
            span: Span::default(),
        }
    }
}

impl StripSpans for Expr {
    fn strip_spans(&self) -> Self {
        match self {
            Expr::Int(v) => Expr::Int(*v),
            Expr::Var(n, _) => Expr::Var(n.clone(), Span::default()),
            Expr::Index(n, i, _) => {
                Expr::Index(n.clone(), Box::new(i.strip_spans()), Span::default())
            }
            Expr::Neg(e) => Expr::Neg(Box::new(e.strip_spans())),
            Expr::Bin(op, a, b) => {
                Expr::Bin(*op, Box::new(a.strip_spans()), Box::new(b.strip_spans()))
            }
        }
    }
}

impl StripSpans for Cond {
    fn strip_spans(&self) -> Self {
        match self {
            Cond::Cmp { op, lhs, rhs, .. } => Cond::Cmp {
                op: *op,
                lhs: lhs.strip_spans(),
                rhs: rhs.strip_spans(),
                span: Span::default(),
            },
            Cond::And(a, b) => Cond::And(Box::new(a.strip_spans()), Box::new(b.strip_spans())),
            Cond::Or(a, b) => Cond::Or(Box::new(a.strip_spans()), Box::new(b.strip_spans())),
            Cond::Not(a) => Cond::Not(Box::new(a.strip_spans())),
        }
    }
}
