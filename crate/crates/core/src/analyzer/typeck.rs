//! Monomorphic expression typing.

use crate::diag::Span;
use crate::frontend::ast::{BinOp, CmpOp, Expr, ExprKind, Func};
use crate::value::Dtype;

#[derive(Debug, Clone, PartialEq)]
pub struct TypeIssue {
    pub span: Span,
    pub message: String,
    /// Set for problems that are only worth a warning.
    pub warning: bool,
}

/// Compute the type of `e`, looking variables up with `lookup`.
///
/// Returns `None` when the expression is ill-typed or reads an unknown variable;
/// the reason is appended to `issues` (unknown variables are left to the caller).
pub fn type_of(e: &Expr, lookup: &dyn Fn(&str) -> Option<Dtype>, issues: &mut Vec<TypeIssue>) -> Option<Dtype> {
    fn fail(issues: &mut Vec<TypeIssue>, span: Span, message: String) -> Option<Dtype> {
        issues.push(TypeIssue { span, message, warning: false });
        None
    }
    match &e.kind {
        ExprKind::Int(_) => Some(Dtype::Int),
        ExprKind::Real(_) => Some(Dtype::Real),
        ExprKind::Bool(_) => Some(Dtype::Bool),
        ExprKind::Var(name) => lookup(name),
        ExprKind::Neg(inner) => {
            let t = type_of(inner, lookup, issues)?;
            if t.is_numeric() {
                Some(t)
            } else {
                fail(issues, e.span, format!("cannot negate a value of type {t}"))
            }
        }
        ExprKind::Binary(op, l, r) => {
            let lt = type_of(l, lookup, issues);
            let rt = type_of(r, lookup, issues);
            let (lt, rt) = (lt?, rt?);
            if !lt.is_numeric() || !rt.is_numeric() {
                return fail(
                    issues,
                    e.span,
                    format!("operator `{}` needs numeric operands, found {lt} and {rt}", op.symbol()),
                );
            }
            Some(match op {
                BinOp::Div | BinOp::Pow => Dtype::Real,
                _ if lt == Dtype::Int && rt == Dtype::Int => Dtype::Int,
                _ => Dtype::Real,
            })
        }
        ExprKind::Compare(op, l, r) => {
            let lt = type_of(l, lookup, issues);
            let rt = type_of(r, lookup, issues);
            let (lt, rt) = (lt?, rt?);
            let numeric = lt.is_numeric() && rt.is_numeric();
            match op {
                CmpOp::Eq | CmpOp::Ne => {
                    if !(numeric || lt == rt) {
                        return fail(issues, e.span, format!("cannot compare {lt} with {rt}"));
                    }
                    if numeric && (lt == Dtype::Real || rt == Dtype::Real) {
                        issues.push(TypeIssue {
                            span: e.span,
                            message: format!("`{}` compares real values exactly", op.symbol()),
                            warning: true,
                        });
                    }
                }
                _ => {
                    if !numeric {
                        return fail(
                            issues,
                            e.span,
                            format!("ordering `{}` needs numeric operands, found {lt} and {rt}", op.symbol()),
                        );
                    }
                }
            }
            Some(Dtype::Bool)
        }
        ExprKind::Func(f, args) => {
            let ts: Vec<Option<Dtype>> = args.iter().map(|a| type_of(a, lookup, issues)).collect();
            let ts: Vec<Dtype> = ts.into_iter().collect::<Option<_>>()?;
            let bad = |want: &str| format!("`{}` expects {want}, found ({})", f.name(), join(&ts));
            match f {
                Func::Sqrt if ts[0].is_numeric() => Some(Dtype::Real),
                Func::Abs if ts[0].is_numeric() => Some(ts[0]),
                Func::Min | Func::Max if ts.iter().all(|t| t.is_numeric()) => {
                    Some(if ts.iter().all(|t| *t == Dtype::Int) { Dtype::Int } else { Dtype::Real })
                }
                Func::Div | Func::Mod if ts.iter().all(|t| *t == Dtype::Int) => Some(Dtype::Int),
                Func::Len if ts[0] == Dtype::List => Some(Dtype::Int),
                Func::Cons if ts[1] == Dtype::List => Some(Dtype::List),
                Func::Sqrt | Func::Abs => fail(issues, e.span, bad("a number")),
                Func::Min | Func::Max => fail(issues, e.span, bad("two numbers")),
                Func::Div | Func::Mod => fail(issues, e.span, bad("two ints")),
                Func::Len => fail(issues, e.span, bad("a list")),
                Func::Cons => fail(issues, e.span, bad("a value and a list")),
            }
        }
        ExprKind::List(items) => {
            let ts: Vec<Option<Dtype>> = items.iter().map(|a| type_of(a, lookup, issues)).collect();
            ts.into_iter().collect::<Option<Vec<_>>>()?;
            Some(Dtype::List)
        }
    }
}

fn join(ts: &[Dtype]) -> String {
    ts.iter().map(|t| t.keyword()).collect::<Vec<_>>().join(", ")
}
