//! Canonical source rendering. `parse(pretty(p))` reproduces `p` up to spans.

use std::fmt::Write;

use super::ast::*;

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    let params: Vec<String> = p.params.iter().map(pretty_param).collect();
    let _ = write!(out, "fun {}({})", p.name, params.join(", "));
    if let Some(req) = &p.requires {
        let _ = write!(out, "\n  requires {};", pretty_cond(req));
    }
    out.push(' ');
    write_block(&mut out, &p.body, 0);
    out.push('\n');
    out
}

pub fn pretty_param(p: &ParamDecl) -> String {
    match p.kind {
        ParamKind::Scalar => format!("{}: int[{}..{}]", p.name, p.lo, p.hi),
        ParamKind::Array(n) => format!("{}: int[{}..{}][{}]", p.name, p.lo, p.hi, n),
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_block(out: &mut String, block: &Block, level: usize) {
    if block.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for s in block {
        indent(out, level + 1);
        write_stmt(out, s, level + 1);
        out.push('\n');
    }
    indent(out, level);
    out.push('}');
}

fn write_stmt(out: &mut String, s: &Stmt, level: usize) {
    match &s.kind {
        StmtKind::Assign { target, value } => {
            match target {
                LValue::Var(n) => out.push_str(n),
                LValue::Index(n, i) => {
                    let _ = write!(out, "{}[{}]", n, pretty_expr(i));
                }
            }
            let _ = write!(out, " = {};", pretty_expr(value));
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let _ = write!(out, "if ({}) ", pretty_cond(cond));
            write_block(out, then_block, level);
            out.push_str(" else ");
            write_block(out, else_block, level);
        }
        StmtKind::While { cond, cap, body } => {
            let _ = write!(out, "while ({}) ", pretty_cond(cond));
            if let Some(c) = cap {
                let _ = write!(out, "cap {c} ");
            }
            write_block(out, body, level);
        }
        StmtKind::Skip => out.push_str("skip;"),
    }
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

// `min_prec` is the binding strength the context requires; weaker operators get parentheses.
fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    match e {
        Expr::Int(v) if *v < 0 => {
            let _ = write!(out, "({v})");
        }
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Var(n, _) => out.push_str(n),
        Expr::Index(n, i, _) => {
            let _ = write!(out, "{}[", n);
            write_expr(out, i, 0);
            out.push(']');
        }
        Expr::Neg(inner) => {
            out.push('-');
            write_expr(out, inner, 3);
        }
        Expr::Bin(op, a, b) => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                out.push('(');
            }
            write_expr(out, a, prec);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, prec + 1);
            if paren {
                out.push(')');
            }
        }
    }
}

pub fn pretty_cond(c: &Cond) -> String {
    let mut out = String::new();
    write_cond(&mut out, c, 0);
    out
}

// Precedence: `||` 1, `&&` 2, `!` and atoms 3.
fn write_cond(out: &mut String, c: &Cond, min_prec: u8) {
    match c {
        Cond::Cmp { op, lhs, rhs, .. } => {
            let paren = min_prec > 3;
            if paren {
                out.push('(');
            }
            write_expr(out, lhs, 0);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, 0);
            if paren {
                out.push(')');
            }
        }
        Cond::Or(a, b) | Cond::And(a, b) => {
            let (prec, sym) = if matches!(c, Cond::Or(..)) {
                (1, "||")
            } else {
                (2, "&&")
            };
            let paren = prec < min_prec;
            if paren {
                out.push('(');
            }
            write_cond(out, a, prec);
            let _ = write!(out, " {sym} ");
            write_cond(out, b, prec + 1);
            if paren {
                out.push(')');
            }
        }
        Cond::Not(inner) => {
            out.push('!');
            write_cond(out, inner, 4);
        }
    }
}
