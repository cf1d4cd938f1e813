//! Runtime values and the closed set of declared data types.

use std::fmt;
use std::sync::Arc;

/// Declared type of a parameter or variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dtype {
    Real,
    Int,
    Bool,
    List,
}

impl Dtype {
    pub fn keyword(self) -> &'static str {
        match self {
            Dtype::Real => "real",
            Dtype::Int => "int",
            Dtype::Bool => "bool",
            Dtype::List => "list",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Dtype> {
        match word {
            "real" => Some(Dtype::Real),
            "int" => Some(Dtype::Int),
            "bool" => Some(Dtype::Bool),
            "list" => Some(Dtype::List),
            _ => None,
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Dtype::Real | Dtype::Int)
    }

    /// Whether a value of type `from` may be stored where `self` is declared.
    /// The only implicit conversion is `int` to `real`.
    pub fn accepts(self, from: Dtype) -> bool {
        self == from || (self == Dtype::Real && from == Dtype::Int)
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A list value. Lists are immutable once built and cheap to clone.
pub type List = Arc<[Value]>;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Bool(bool),
    List(List),
}

impl Value {
    pub fn dtype(&self) -> Dtype {
        match self {
            Value::Real(_) => Dtype::Real,
            Value::Int(_) => Dtype::Int,
            Value::Bool(_) => Dtype::Bool,
            Value::List(_) => Dtype::List,
        }
    }

    pub fn list(items: Vec<Value>) -> Value {
        Value::List(items.into())
    }

    pub fn as_real(&self) -> Option<f64> {
        match *self {
            Value::Real(v) => Some(v),
            Value::Int(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match *self {
            Value::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&List> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    /// Convert to the declared type, promoting `int` to `real` when needed.
    /// Returns `None` when the value does not fit the declaration.
    pub fn coerce(self, to: Dtype) -> Option<Value> {
        match (self, to) {
            (Value::Int(v), Dtype::Real) => Some(Value::Real(v as f64)),
            (v, to) if v.dtype() == to => Some(v),
            _ => None,
        }
    }

    /// Relative/absolute closeness used when comparing solution streams.
    /// Ints, bools and list shapes must match exactly.
    pub fn approx_eq(&self, other: &Value, rel: f64) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => a == b || (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0),
            (Value::List(a), Value::List(b)) => {
                a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.approx_eq(y, rel))
            }
            (a, b) => a == b,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Real(v) => {
                serde_json::Number::from_f64(*v).map(serde_json::Value::Number).unwrap_or(serde_json::Value::Null)
            }
            Value::Int(v) => serde_json::Value::from(*v),
            Value::Bool(v) => serde_json::Value::Bool(*v),
            Value::List(items) => serde_json::Value::Array(items.iter().map(Value::to_json).collect()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(v) => write!(f, "{v:?}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}
