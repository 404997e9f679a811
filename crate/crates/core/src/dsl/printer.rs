//! Canonical printer. Output is byte-stable for a given AST and re-parses to
//! the same AST.

use std::fmt::Write;

use super::ast::{Expr, FunctionDef, Program, UnaryOp};

// Precedence slots for operand positions. Binary operators use 1..=6.
const PREC_OPEN: u8 = 0;
const PREC_UNARY: u8 = 7;
const PREC_POSTFIX: u8 = 8;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for def in p.functions.values() {
        out.push_str(&print_function(def));
        out.push('\n');
    }
    out
}

pub fn print_function(def: &FunctionDef) -> String {
    format!("fn {}({}) = {}", def.name, def.params.join(", "), print_expr(&def.body))
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, PREC_OPEN);
    out
}

fn is_open_form(e: &Expr) -> bool {
    matches!(e, Expr::Let { .. } | Expr::If { .. } | Expr::For { .. })
}

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Let { .. } | Expr::If { .. } | Expr::For { .. } => PREC_OPEN,
        Expr::Binary(op, _, _) => op.precedence(),
        Expr::Unary(..) => PREC_UNARY,
        Expr::Int(n) if *n < 0 => PREC_UNARY,
        _ => PREC_POSTFIX,
    }
}

fn write_list(out: &mut String, items: &[Expr]) {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, x, PREC_OPEN);
    }
}

/// Writes `e` so that it parses back as a single operand binding at least as
/// tightly as `min_prec`.
fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let needs_parens = if min_prec == PREC_OPEN {
        false
    } else if is_open_form(e) {
        true
    } else {
        expr_prec(e) < min_prec
    };
    if needs_parens {
        out.push('(');
        write_expr(out, e, PREC_OPEN);
        out.push(')');
        return;
    }
    match e {
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Var(v) => out.push_str(v),
        Expr::List(xs) => {
            out.push('[');
            write_list(out, xs);
            out.push(']');
        }
        Expr::Tuple(xs) => {
            out.push('(');
            write_list(out, xs);
            if xs.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
        Expr::Let { name, value, body } => {
            let _ = write!(out, "let {name} = ");
            write_expr(out, value, PREC_OPEN);
            out.push_str(" in ");
            write_expr(out, body, PREC_OPEN);
        }
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if ");
            write_expr(out, cond, PREC_OPEN);
            out.push_str(" then ");
            write_expr(out, then_branch, PREC_OPEN);
            out.push_str(" else ");
            write_expr(out, else_branch, PREC_OPEN);
        }
        Expr::For {
            var,
            lo,
            hi,
            acc,
            init,
            body,
        } => {
            let _ = write!(out, "for {var} in ");
            write_expr(out, lo, PREC_OPEN);
            out.push_str(" .. ");
            write_expr(out, hi, PREC_OPEN);
            let _ = write!(out, " with {acc} = ");
            write_expr(out, init, PREC_OPEN);
            out.push_str(" do ");
            write_expr(out, body, PREC_OPEN);
        }
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnaryOp::Neg => '-',
                UnaryOp::Not => '!',
            });
            // `-3` would lex back as a literal, so a non-negative literal
            // operand (possibly under postfix operators) gets parentheses.
            let mut operand = String::new();
            write_expr(&mut operand, inner, PREC_UNARY);
            if *op == UnaryOp::Neg && operand.starts_with(|c: char| c.is_ascii_digit()) {
                out.push('(');
                out.push_str(&operand);
                out.push(')');
            } else {
                out.push_str(&operand);
            }
        }
        Expr::Binary(op, lhs, rhs) => {
            let prec = op.precedence();
            write_expr(out, lhs, prec);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, prec + 1);
        }
        Expr::Index(base, index) => {
            write_expr(out, base, postfix_base_prec(base));
            out.push('[');
            write_expr(out, index, PREC_OPEN);
            out.push(']');
        }
        Expr::Slice { base, lo, hi } => {
            write_expr(out, base, postfix_base_prec(base));
            out.push('[');
            write_expr(out, lo, PREC_OPEN);
            out.push_str(" : ");
            write_expr(out, hi, PREC_OPEN);
            out.push(']');
        }
        Expr::Project(base, field) => {
            write_expr(out, base, postfix_base_prec(base));
            let _ = write!(out, ".{field}");
        }
        Expr::BuiltinCall(b, args) => {
            out.push_str(b.name());
            out.push('(');
            write_list(out, args);
            out.push(')');
        }
        Expr::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            write_list(out, args);
            out.push(')');
        }
    }
}

// A negative literal parses as a postfix base (`-3[0]`), so it needs no
// parentheses there; every other unary form does.
fn postfix_base_prec(base: &Expr) -> u8 {
    match base {
        Expr::Int(n) if *n < 0 => PREC_UNARY,
        _ => PREC_POSTFIX,
    }
}
