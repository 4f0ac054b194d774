//! Pretty-printer producing source that reparses to an equal tree.

use super::ast::{Expr, ExprKind, Literal};

#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Primary,
    Unary,
    Binary,
    Keyword,
    Expression,
}

fn level(e: &Expr) -> Level {
    match &e.kind {
        ExprKind::Literal(_) | ExprKind::Var(_) | ExprKind::Super | ExprKind::Block { .. } => {
            Level::Primary
        }
        ExprKind::Unary { .. } => Level::Unary,
        ExprKind::Binary { .. } => Level::Binary,
        ExprKind::Keyword { .. } => Level::Keyword,
        ExprKind::Assign(..) | ExprKind::Return(_) => Level::Expression,
    }
}

fn wrap(e: &Expr, max: Level, out: &mut String) {
    if level(e) > max {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn is_plain_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {
            s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ':')
        }
        Some(_) => s.chars().all(|c| "+-*/\\<>=~@%&?,|".contains(c)),
        None => false,
    }
}

pub fn write_literal(l: &Literal, out: &mut String) {
    match l {
        Literal::Int(i) => out.push_str(&i.to_string()),
        Literal::Str(s) => {
            out.push('\'');
            out.push_str(&s.replace('\'', "''"));
            out.push('\'');
        }
        Literal::Sym(s) if is_plain_symbol(s) => {
            out.push('#');
            out.push_str(s);
        }
        Literal::Sym(s) => {
            out.push_str("#'");
            out.push_str(&s.replace('\'', "''"));
            out.push('\'');
        }
        Literal::True => out.push_str("true"),
        Literal::False => out.push_str("false"),
        Literal::Nil => out.push_str("nil"),
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Literal(l) => write_literal(l, out),
        ExprKind::Var(n) => out.push_str(n),
        ExprKind::Super => out.push_str("super"),
        ExprKind::Assign(n, v) => {
            out.push_str(n);
            out.push_str(" := ");
            write_expr(v, out);
        }
        ExprKind::Return(v) => {
            out.push_str("^ ");
            write_expr(v, out);
        }
        ExprKind::Unary { recv, selector } => {
            wrap(recv, Level::Unary, out);
            out.push(' ');
            out.push_str(selector);
        }
        ExprKind::Binary { recv, op, arg } => {
            wrap(recv, Level::Binary, out);
            out.push(' ');
            out.push_str(op);
            out.push(' ');
            wrap(arg, Level::Unary, out);
        }
        ExprKind::Keyword { recv, selector, args } => {
            wrap(recv, Level::Binary, out);
            let parts = selector.split_inclusive(':');
            for (part, arg) in parts.zip(args) {
                out.push(' ');
                out.push_str(part);
                out.push(' ');
                wrap(arg, Level::Binary, out);
            }
        }
        ExprKind::Block { params, temps, body } => {
            out.push('[');
            for p in params {
                out.push(':');
                out.push_str(p);
                out.push(' ');
            }
            if !params.is_empty() {
                out.push_str("| ");
            }
            if !temps.is_empty() {
                out.push_str("| ");
                for t in temps {
                    out.push_str(t);
                    out.push(' ');
                }
                out.push_str("| ");
            }
            write_statements(body, out);
            out.push(']');
        }
    }
}

fn write_statements(body: &[Expr], out: &mut String) {
    for (i, s) in body.iter().enumerate() {
        if i > 0 {
            out.push_str(". ");
        }
        write_expr(s, out);
    }
}

/// Render an expression (or statement) as source text.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}
