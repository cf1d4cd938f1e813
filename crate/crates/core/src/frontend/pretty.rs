//! Canonical source printer. The output re-parses to the same AST.

use std::fmt::Write;

use super::ast::*;

pub fn module_to_string(m: &ModuleDecl) -> String {
    let mut out = String::new();
    let params =
        |ps: &[ParamDecl]| ps.iter().map(|p| format!("{} : {}", p.name.name, p.dtype)).collect::<Vec<_>>().join(", ");
    let _ = writeln!(out, "{}({{{}}}, {{{}}})", m.name.name, params(&m.inputs), params(&m.outputs));
    for method in &m.methods {
        out.push_str("  method\n");
        for s in &method.statements {
            let _ = writeln!(out, "    {};", stmt_to_string(s));
        }
        out.push_str("  end method;\n");
    }
    out.push_str("end module;\n");
    out
}

pub fn stmt_to_string(s: &Stmt) -> String {
    let exprs = |es: &[Expr]| es.iter().map(expr_to_string).collect::<Vec<_>>().join(", ");
    match &s.kind {
        StmtKind::Bind { target, dtype, rhs } => {
            let rhs = match rhs {
                BindRhs::Expr(e) => expr_to_string(e),
                BindRhs::For { begin, end, step } => {
                    format!("for({}, {}, {})", expr_to_string(begin), expr_to_string(end), expr_to_string(step))
                }
                BindRhs::Select(e) => format!("select({})", expr_to_string(e)),
            };
            format!("{} : {} = {}", target.name, dtype, rhs)
        }
        StmtKind::When(e) => format!("when({})", expr_to_string(e)),
        StmtKind::Test(e) => format!("test({})", expr_to_string(e)),
        StmtKind::Verify(e) => format!("verify({})", expr_to_string(e)),
        StmtKind::Call(site) | StmtKind::Dcall(site) => {
            let outs = site.outs.iter().map(|o| o.name.as_str()).collect::<Vec<_>>().join(", ");
            format!("{}({}, {{{}}}, {{{}}})", s.kind.keyword(), site.callee.name, exprs(&site.args), outs)
        }
        StmtKind::Find { callee, args, target } => {
            format!("find({}, {{{}}}, {})", callee.name, exprs(args), target.name)
        }
    }
}

// Binding strength, loosest first.
const CMP: u8 = 1;
const SUM: u8 = 2;
const TERM: u8 = 3;
const UNARY: u8 = 4;
const POW: u8 = 5;
const ATOM: u8 = 6;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Compare(..) => CMP,
        ExprKind::Binary(BinOp::Add | BinOp::Sub, ..) => SUM,
        ExprKind::Binary(BinOp::Mul | BinOp::Div, ..) => TERM,
        ExprKind::Neg(_) => UNARY,
        ExprKind::Binary(BinOp::Pow, ..) => POW,
        _ => ATOM,
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_at(out: &mut String, e: &Expr, min: u8) {
    if level(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Real(v) => {
            let _ = write!(out, "{v:?}");
        }
        ExprKind::Bool(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Neg(inner) => {
            out.push('-');
            // `--` would open a comment
            if matches!(inner.kind, ExprKind::Neg(_)) {
                out.push('(');
                write_expr(out, inner);
                out.push(')');
            } else {
                write_at(out, inner, UNARY);
            }
        }
        ExprKind::Binary(op, l, r) => {
            let (lmin, rmin) = match op {
                BinOp::Add | BinOp::Sub => (SUM, TERM),
                BinOp::Mul | BinOp::Div => (TERM, UNARY),
                // right associative; the exponent may itself be a negation
                BinOp::Pow => (ATOM, UNARY),
            };
            write_at(out, l, lmin);
            if *op == BinOp::Pow {
                out.push('^');
            } else {
                let _ = write!(out, " {} ", op.symbol());
            }
            write_at(out, r, rmin);
        }
        ExprKind::Compare(op, l, r) => {
            write_at(out, l, SUM);
            let _ = write!(out, " {} ", op.symbol());
            write_at(out, r, SUM);
        }
        ExprKind::Func(f, args) => {
            out.push_str(f.name());
            out.push('(');
            write_list(out, args);
            out.push(')');
        }
        ExprKind::List(items) => {
            out.push('[');
            write_list(out, items);
            out.push(']');
        }
    }
}

fn write_list(out: &mut String, items: &[Expr]) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, item);
    }
}
