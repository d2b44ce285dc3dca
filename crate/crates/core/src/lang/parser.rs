//! Recursive descent parser for `.bc` programs and standalone conditions.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::diag::{Diagnostic, Diagnostics};
use super::lexer::{tokenize, Tok, Token};

const MAX_NESTING: usize = 200;

type PResult<T> = Result<T, Diagnostic>;

/// Parses a whole program and resolves its identifiers.
pub fn parse(source: &str) -> Result<Program, Diagnostics> {
    let tokens = tokenize(source)?;
    let mut p = Parser::new(tokens);
    let program = p.program().map_err(|d| Diagnostics(vec![d]))?;
    let problems = resolve(&program);
    if problems.is_empty() {
        Ok(program)
    } else {
        Err(Diagnostics(problems))
    }
}

/// Parses a standalone condition, as passed on the command line.
pub fn parse_condition(source: &str) -> Result<Cond, Diagnostics> {
    let tokens = tokenize(source)?;
    let mut p = Parser::new(tokens);
    let cond = p.cond().map_err(|d| Diagnostics(vec![d]))?;
    p.expect(Tok::Eof, "end of condition")
        .map_err(|d| Diagnostics(vec![d]))?;
    Ok(cond)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            pos: 0,
            depth: 0,
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        Diagnostic::new(
            self.span(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(n) => {
                let span = self.bump().span;
                Ok((n, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            Err(Diagnostic::new(self.span(), "nesting too deep"))
        } else {
            Ok(())
        }
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn program(&mut self) -> PResult<Program> {
        let span = self.span();
        self.expect(Tok::Fun, "`fun`")?;
        let (name, _) = self.ident("function name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.param()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        let requires = if self.eat(&Tok::Requires) {
            let c = self.cond()?;
            self.expect(Tok::Semi, "`;` after precondition")?;
            Some(c)
        } else {
            None
        };
        let body = self.block()?;
        self.expect(Tok::Eof, "end of input")?;
        Ok(Program {
            name,
            params,
            requires,
            body,
            span,
        })
    }

    fn signed_int(&mut self) -> PResult<i64> {
        let negative = self.eat(&Tok::Minus);
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    fn param(&mut self) -> PResult<ParamDecl> {
        let (name, span) = self.ident("parameter name")?;
        self.expect(Tok::Colon, "`:`")?;
        self.expect(Tok::IntKw, "`int`")?;
        self.expect(Tok::LBracket, "`[` opening the domain")?;
        let lo = self.signed_int()?;
        self.expect(Tok::DotDot, "`..`")?;
        let hi = self.signed_int()?;
        self.expect(Tok::RBracket, "`]`")?;
        let kind = if self.eat(&Tok::LBracket) {
            let len = match *self.peek() {
                Tok::Int(v) => {
                    self.bump();
                    v
                }
                _ => return Err(self.unexpected("array length")),
            };
            self.expect(Tok::RBracket, "`]`")?;
            ParamKind::Array(usize::try_from(len).unwrap_or(usize::MAX))
        } else {
            ParamKind::Scalar
        };
        Ok(ParamDecl {
            name,
            kind,
            lo,
            hi,
            span,
        })
    }

    fn block(&mut self) -> PResult<Block> {
        self.enter()?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        self.leave();
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Skip => {
                self.bump();
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Skip
            }
            Tok::If => return self.if_stmt(),
            Tok::While => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.cond()?;
                self.expect(Tok::RParen, "`)`")?;
                let cap = if self.eat(&Tok::Cap) {
                    match *self.peek() {
                        Tok::Int(v) => {
                            let at = self.span();
                            self.bump();
                            Some(
                                u32::try_from(v)
                                    .map_err(|_| Diagnostic::new(at, "loop cap is too large"))?,
                            )
                        }
                        _ => return Err(self.unexpected("loop cap")),
                    }
                } else {
                    None
                };
                let body = self.block()?;
                StmtKind::While { cond, cap, body }
            }
            Tok::Ident(name) => {
                self.bump();
                let target = if self.eat(&Tok::LBracket) {
                    let idx = self.expr()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    LValue::Index(name, idx)
                } else {
                    LValue::Var(name)
                };
                self.expect(Tok::Assign, "`=`")?;
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Assign { target, value }
            }
            _ => return Err(self.unexpected("statement")),
        };
        Ok(Stmt { kind, span })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        self.expect(Tok::If, "`if`")?;
        self.expect(Tok::LParen, "`(`")?;
        let cond = self.cond()?;
        self.expect(Tok::RParen, "`)`")?;
        let then_block = self.block()?;
        let else_block = if self.eat(&Tok::Else) {
            if *self.peek() == Tok::If {
                self.enter()?;
                let nested = self.if_stmt()?;
                self.leave();
                vec![nested]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt {
            kind: StmtKind::If {
                cond,
                then_block,
                else_block,
            },
            span,
        })
    }

    pub(crate) fn cond(&mut self) -> PResult<Cond> {
        self.enter()?;
        let mut lhs = self.cond_and()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.cond_and()?;
            lhs = Cond::Or(Box::new(lhs), Box::new(rhs));
        }
        self.leave();
        Ok(lhs)
    }

    fn cond_and(&mut self) -> PResult<Cond> {
        let mut lhs = self.cond_not()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.cond_not()?;
            lhs = Cond::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cond_not(&mut self) -> PResult<Cond> {
        if self.eat(&Tok::Bang) {
            self.enter()?;
            let inner = self.cond_not()?;
            self.leave();
            return Ok(Cond::Not(Box::new(inner)));
        }
        self.cond_atom()
    }

    fn cond_atom(&mut self) -> PResult<Cond> {
        if *self.peek() == Tok::LParen {
            let saved = (self.pos, self.depth);
            let grouped = (|| {
                self.bump();
                let c = self.cond()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok::<_, Diagnostic>(c)
            })();
            match grouped {
                Ok(c) if !continues_expression(self.peek()) => return Ok(c),
                Ok(_) => {
                    (self.pos, self.depth) = saved;
                }
                Err(first) => {
                    (self.pos, self.depth) = saved;
                    return self.comparison().map_err(|second| later(first, second));
                }
            }
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Cond> {
        let span = self.span();
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Lt => RelOp::Lt,
            Tok::Le => RelOp::Le,
            Tok::EqEq => RelOp::Eq,
            Tok::Ne => RelOp::Ne,
            Tok::Gt => RelOp::Gt,
            Tok::Ge => RelOp::Ge,
            Tok::Assign => {
                return Err(Diagnostic::new(
                    self.span(),
                    "assignment not allowed in condition",
                ));
            }
            _ => return Err(self.unexpected("comparison operator")),
        };
        self.bump();
        let rhs = self.expr()?;
        if *self.peek() == Tok::Assign {
            return Err(Diagnostic::new(
                self.span(),
                "assignment not allowed in condition",
            ));
        }
        Ok(Cond::Cmp { op, lhs, rhs, span })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        self.leave();
        Ok(lhs)
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            self.enter()?;
            let inner = self.unary()?;
            self.leave();
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Ident(name) => {
                let span = self.bump().span;
                if self.eat(&Tok::LBracket) {
                    let idx = self.expr()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    Ok(Expr::Index(name, Box::new(idx), span))
                } else {
                    Ok(Expr::Var(name, span))
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Assign => Err(Diagnostic::new(
                self.span(),
                "assignment not allowed in condition",
            )),
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn continues_expression(tok: &Tok) -> bool {
    matches!(
        tok,
        Tok::Lt
            | Tok::Le
            | Tok::EqEq
            | Tok::Ne
            | Tok::Gt
            | Tok::Ge
            | Tok::Plus
            | Tok::Minus
            | Tok::Star
            | Tok::Slash
            | Tok::Percent
            | Tok::Assign
    )
}

fn later(a: Diagnostic, b: Diagnostic) -> Diagnostic {
    if b.span >= a.span {
        b
    } else {
        a
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Binding {
    Scalar,
    Array,
}

/// Checks identifier use in the body: declared, used with the right shape, no duplicate parameters.
fn resolve(program: &Program) -> Vec<Diagnostic> {
    let mut problems = Vec::new();
    let mut names: HashMap<&str, Binding> = HashMap::new();
    for p in &program.params {
        let b = if p.is_array() {
            Binding::Array
        } else {
            Binding::Scalar
        };
        if names.insert(&p.name, b).is_some() {
            problems.push(Diagnostic::new(
                p.span,
                format!("duplicate parameter `{}`", p.name),
            ));
        }
    }
    let mut locals = BTreeSet::new();
    collect_locals(&program.body, &mut locals);
    for (name, span) in &locals {
        match names.get(name.as_str()) {
            Some(Binding::Array) => {
                problems.push(Diagnostic::new(
                    *span,
                    format!("cannot assign to array `{name}` without an index"),
                ));
            }
            Some(Binding::Scalar) => {}
            None => {
                names.insert(name, Binding::Scalar);
            }
        }
    }
    check_block(&program.body, &names, &mut problems);
    problems
}

fn collect_locals<'a>(block: &'a Block, out: &mut BTreeSet<(&'a String, Span)>) {
    for s in block {
        match &s.kind {
            StmtKind::Assign {
                target: LValue::Var(n),
                ..
            } => {
                if !out.iter().any(|(m, _)| *m == n) {
                    out.insert((n, s.span));
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

fn check_block(block: &Block, names: &HashMap<&str, Binding>, out: &mut Vec<Diagnostic>) {
    for s in block {
        match &s.kind {
            StmtKind::Assign { target, value } => {
                if let LValue::Index(n, idx) = target {
                    match names.get(n.as_str()) {
                        Some(Binding::Array) => {}
                        Some(Binding::Scalar) => {
                            out.push(Diagnostic::new(s.span, format!("`{n}` is not an array")))
                        }
                        None => out.push(Diagnostic::new(
                            s.span,
                            format!("use of undeclared identifier `{n}`"),
                        )),
                    }
                    check_expr(idx, names, out);
                }
                check_expr(value, names, out);
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                check_cond(cond, names, out);
                check_block(then_block, names, out);
                check_block(else_block, names, out);
            }
            StmtKind::While { cond, body, .. } => {
                check_cond(cond, names, out);
                check_block(body, names, out);
            }
            StmtKind::Skip => {}
        }
    }
}

fn check_cond(cond: &Cond, names: &HashMap<&str, Binding>, out: &mut Vec<Diagnostic>) {
    match cond {
        Cond::Cmp { lhs, rhs, .. } => {
            check_expr(lhs, names, out);
            check_expr(rhs, names, out);
        }
        Cond::And(a, b) | Cond::Or(a, b) => {
            check_cond(a, names, out);
            check_cond(b, names, out);
        }
        Cond::Not(a) => check_cond(a, names, out),
    }
}

fn check_expr(expr: &Expr, names: &HashMap<&str, Binding>, out: &mut Vec<Diagnostic>) {
    match expr {
        Expr::Int(_) => {}
        Expr::Var(n, span) => match names.get(n.as_str()) {
            Some(Binding::Scalar) => {}
            Some(Binding::Array) => out.push(Diagnostic::new(
                *span,
                format!("array `{n}` used without an index"),
            )),
            None => out.push(Diagnostic::new(
                *span,
                format!("use of undeclared identifier `{n}`"),
            )),
        },
        Expr::Index(n, idx, span) => {
            match names.get(n.as_str()) {
                Some(Binding::Array) => {}
                Some(Binding::Scalar) => {
                    out.push(Diagnostic::new(*span, format!("`{n}` is not an array")))
                }
                None => out.push(Diagnostic::new(
                    *span,
                    format!("use of undeclared identifier `{n}`"),
                )),
            }
            check_expr(idx, names, out);
        }
        Expr::Neg(e) => check_expr(e, names, out),
        Expr::Bin(_, a, b) => {
            check_expr(a, names, out);
            check_expr(b, names, out);
        }
    }
}
