//! Value-level operators shared by the lowered graph and emitted code.

use crate::frontend::ast::{BinOp, CmpOp, Func};
use crate::value::{Dtype, List, Value};

use super::RuntimeFault;

type R<T> = Result<T, RuntimeFault>;

fn mismatch(expected: Dtype, found: &Value) -> RuntimeFault {
    RuntimeFault::Dtype { expected, found: found.clone() }
}

fn finite(v: f64, what: &str) -> R<Value> {
    if v.is_finite() {
        Ok(Value::Real(v))
    } else {
        Err(RuntimeFault::Domain(format!("{what} has no finite result")))
    }
}

fn real(v: &Value) -> R<f64> {
    v.as_real().ok_or_else(|| mismatch(Dtype::Real, v))
}

fn int(v: &Value) -> R<i64> {
    v.as_int().ok_or_else(|| mismatch(Dtype::Int, v))
}

/// Store-time conversion to a declared type.
pub fn coerce(v: Value, to: Dtype) -> R<Value> {
    match v.clone().coerce(to) {
        Some(v) => Ok(v),
        None => Err(mismatch(to, &v)),
    }
}

pub fn truth(v: &Value) -> R<bool> {
    v.as_bool().ok_or_else(|| mismatch(Dtype::Bool, v))
}

pub fn to_real(v: &Value) -> R<f64> {
    real(v)
}

pub fn to_int(v: &Value) -> R<i64> {
    int(v)
}

pub fn to_list(v: &Value) -> R<List> {
    v.as_list().cloned().ok_or_else(|| mismatch(Dtype::List, v))
}

pub fn neg(v: &Value) -> R<Value> {
    match v {
        Value::Int(i) => i.checked_neg().map(Value::Int).ok_or(RuntimeFault::Overflow),
        Value::Real(r) => Ok(Value::Real(-r)),
        other => Err(mismatch(Dtype::Real, other)),
    }
}

pub fn binary(op: BinOp, a: &Value, b: &Value) -> R<Value> {
    if let (Value::Int(x), Value::Int(y), BinOp::Add | BinOp::Sub | BinOp::Mul) = (a, b, op) {
        let r = match op {
            BinOp::Add => x.checked_add(*y),
            BinOp::Sub => x.checked_sub(*y),
            _ => x.checked_mul(*y),
        };
        return r.map(Value::Int).ok_or(RuntimeFault::Overflow);
    }
    let (x, y) = (real(a)?, real(b)?);
    match op {
        BinOp::Add => finite(x + y, "addition"),
        BinOp::Sub => finite(x - y, "subtraction"),
        BinOp::Mul => finite(x * y, "multiplication"),
        BinOp::Div if y == 0.0 => Err(RuntimeFault::DivisionByZero),
        BinOp::Div => finite(x / y, "division"),
        BinOp::Pow => {
            let r = x.powf(y);
            if r.is_nan() {
                Err(RuntimeFault::Domain(format!("{x:?}^{y:?} is undefined")))
            } else {
                finite(r, "power")
            }
        }
    }
}

pub fn compare(op: CmpOp, a: &Value, b: &Value) -> R<bool> {
    let ord = match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.partial_cmp(y),
        _ if a.as_real().is_some() && b.as_real().is_some() => real(a)?.partial_cmp(&real(b)?),
        _ => {
            return match op {
                CmpOp::Eq | CmpOp::Ne if a.dtype() == b.dtype() => Ok((a == b) == (op == CmpOp::Eq)),
                _ => Err(mismatch(a.dtype(), b)),
            }
        }
    };
    let ord = ord.ok_or_else(|| RuntimeFault::Domain("comparison with NaN".into()))?;
    use std::cmp::Ordering::*;
    Ok(match op {
        CmpOp::Le => ord != Greater,
        CmpOp::Ge => ord != Less,
        CmpOp::Lt => ord == Less,
        CmpOp::Gt => ord == Greater,
        CmpOp::Eq => ord == Equal,
        CmpOp::Ne => ord != Equal,
    })
}

pub fn apply(f: Func, args: &[Value]) -> R<Value> {
    match (f, args) {
        (Func::Sqrt, [x]) => {
            let x = real(x)?;
            if x < 0.0 {
                Err(RuntimeFault::Domain(format!("sqrt of negative number {x:?}")))
            } else {
                Ok(Value::Real(x.sqrt()))
            }
        }
        (Func::Abs, [Value::Int(i)]) => i.checked_abs().map(Value::Int).ok_or(RuntimeFault::Overflow),
        (Func::Abs, [x]) => Ok(Value::Real(real(x)?.abs())),
        (Func::Min | Func::Max, [Value::Int(x), Value::Int(y)]) => {
            Ok(Value::Int(if f == Func::Min { *x.min(y) } else { *x.max(y) }))
        }
        (Func::Min | Func::Max, [x, y]) => {
            let (x, y) = (real(x)?, real(y)?);
            Ok(Value::Real(if f == Func::Min { x.min(y) } else { x.max(y) }))
        }
        (Func::Div | Func::Mod, [x, y]) => {
            let (x, y) = (int(x)?, int(y)?);
            if y == 0 {
                return Err(RuntimeFault::DivisionByZero);
            }
            let r = if f == Func::Div { x.checked_div_euclid(y) } else { x.checked_rem_euclid(y) };
            r.map(Value::Int).ok_or(RuntimeFault::Overflow)
        }
        (Func::Len, [l]) => Ok(Value::Int(to_list(l)?.len() as i64)),
        (Func::Cons, [x, l]) => {
            let l = to_list(l)?;
            let mut items = Vec::with_capacity(l.len() + 1);
            items.push(x.clone());
            items.extend(l.iter().cloned());
            Ok(Value::list(items))
        }
        _ => Err(RuntimeFault::Internal(format!("`{}` applied to {} argument(s)", f.name(), args.len()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_arithmetic_stays_integral() {
        assert_eq!(binary(BinOp::Add, &Value::Int(3), &Value::Int(0)).unwrap(), Value::Int(3));
        assert_eq!(binary(BinOp::Div, &Value::Int(7), &Value::Int(2)).unwrap(), Value::Real(3.5));
        assert_eq!(binary(BinOp::Pow, &Value::Int(2), &Value::Int(3)).unwrap(), Value::Real(8.0));
        assert_eq!(binary(BinOp::Mul, &Value::Int(2), &Value::Real(1.5)).unwrap(), Value::Real(3.0));
    }

    #[test]
    fn faults() {
        assert_eq!(binary(BinOp::Div, &Value::Real(1.0), &Value::Int(0)), Err(RuntimeFault::DivisionByZero));
        assert_eq!(binary(BinOp::Add, &Value::Int(i64::MAX), &Value::Int(1)), Err(RuntimeFault::Overflow));
        assert!(matches!(apply(Func::Sqrt, &[Value::Real(-1.0)]), Err(RuntimeFault::Domain(_))));
        assert!(matches!(binary(BinOp::Pow, &Value::Real(-8.0), &Value::Real(0.5)), Err(RuntimeFault::Domain(_))));
        assert_eq!(apply(Func::Mod, &[Value::Int(1), Value::Int(0)]), Err(RuntimeFault::DivisionByZero));
    }

    #[test]
    fn sqrt_of_two() {
        let one = Value::Real(1.0);
        let sq = binary(BinOp::Pow, &one, &Value::Int(2)).unwrap();
        let sum = binary(BinOp::Add, &sq, &sq).unwrap();
        assert_eq!(apply(Func::Sqrt, &[sum]).unwrap(), Value::Real(std::f64::consts::SQRT_2));
    }

    #[test]
    fn comparisons_promote() {
        assert!(compare(CmpOp::Le, &Value::Real(1.0), &Value::Real(2.0)).unwrap());
        assert!(compare(CmpOp::Eq, &Value::Int(2), &Value::Real(2.0)).unwrap());
        assert!(compare(CmpOp::Ne, &Value::list(vec![]), &Value::list(vec![Value::Int(1)])).unwrap());
        assert!(compare(CmpOp::Lt, &Value::Bool(true), &Value::Bool(false)).is_err());
    }

    #[test]
    fn euclidean_integer_division() {
        assert_eq!(apply(Func::Div, &[Value::Int(-7), Value::Int(2)]).unwrap(), Value::Int(-4));
        assert_eq!(apply(Func::Mod, &[Value::Int(-7), Value::Int(2)]).unwrap(), Value::Int(1));
        assert_eq!(apply(Func::Mod, &[Value::Int(407), Value::Int(100)]).unwrap(), Value::Int(7));
    }

    #[test]
    fn list_functions() {
        let l = apply(Func::Cons, &[Value::Int(1), Value::list(vec![Value::Int(2)])]).unwrap();
        assert_eq!(l, Value::list(vec![Value::Int(1), Value::Int(2)]));
        assert_eq!(apply(Func::Len, &[l]).unwrap(), Value::Int(2));
    }

    #[test]
    fn coerce_promotes_int_only() {
        assert_eq!(coerce(Value::Int(2), Dtype::Real).unwrap(), Value::Real(2.0));
        assert!(coerce(Value::Real(2.0), Dtype::Int).is_err());
    }
}
