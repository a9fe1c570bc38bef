//! Ground values and the primitive operations on them.
//!
//! Integers are 64-bit with overflow reported as a fault; floats are IEEE
//! doubles and any non-finite result is a fault. `int ** int` requires a
//! non-negative exponent and stays integral.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{BinOp, Expr, Type, UnOp};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum Fault {
    #[error("division by zero")]
    ZeroDivision,
    #[error("integer overflow")]
    Overflow,
    #[error("result is not a finite number")]
    NonFinite,
    #[error("{0}")]
    Domain(String),
    #[error("operand types do not match: {0}")]
    Type(String),
}

impl Value {
    pub fn from_expr(e: &Expr) -> Option<Value> {
        Some(match e {
            Expr::Int(n) => Value::Int(*n),
            Expr::Float(x) => Value::Float(*x),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Str(s) => Value::Str(s.clone()),
            _ => return None,
        })
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Value::Int(n) => Expr::Int(*n),
            Value::Float(x) => Expr::Float(*x),
            Value::Bool(b) => Expr::Bool(*b),
            Value::Str(s) => Expr::Str(s.clone()),
        }
    }

    pub fn ty(&self) -> Type {
        match self {
            Value::Int(_) => Type::Int,
            Value::Float(_) => Type::Float,
            Value::Bool(_) => Type::Bool,
            Value::Str(_) => Type::Str,
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(n) => Some(*n as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    /// Exact structural identity; floats compare by bit pattern.
    pub fn identical(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            _ => self == other,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print_expr(&self.to_expr()))
    }
}

fn finite(x: f64) -> Result<Value, Fault> {
    if x.is_finite() {
        Ok(Value::Float(x))
    } else {
        Err(Fault::NonFinite)
    }
}

fn type_err(op: &str, a: &Value, b: &Value) -> Fault {
    Fault::Type(format!("{} {op} {}", a.ty(), b.ty()))
}

pub fn float_pow(base: f64, exp: f64) -> Result<Value, Fault> {
    if base == 0.0 && exp < 0.0 {
        return Err(Fault::ZeroDivision);
    }
    if base < 0.0 && exp.fract() != 0.0 {
        return Err(Fault::Domain("negative base with a fractional exponent".into()));
    }
    finite(base.powf(exp))
}

pub fn apply_unop(op: UnOp, v: &Value) -> Result<Value, Fault> {
    match (op, v) {
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (UnOp::Neg, Value::Int(n)) => n.checked_neg().map(Value::Int).ok_or(Fault::Overflow),
        (UnOp::Neg, Value::Float(x)) => Ok(Value::Float(-x)),
        _ => Err(Fault::Type(format!("{op:?} {}", v.ty()))),
    }
}

pub fn apply_binop(op: BinOp, a: &Value, b: &Value) -> Result<Value, Fault> {
    use Value::*;
    let sym = op.symbol();
    match op {
        BinOp::And | BinOp::Or => match (a, b) {
            (Bool(x), Bool(y)) => Ok(Bool(if op == BinOp::And { *x && *y } else { *x || *y })),
            _ => Err(type_err(sym, a, b)),
        },
        BinOp::Eq | BinOp::Ne => {
            let eq = match (a, b) {
                (Str(x), Str(y)) => x == y,
                (Bool(x), Bool(y)) => x == y,
                (Int(x), Int(y)) => x == y,
                _ => match (a.as_f64(), b.as_f64()) {
                    (Some(x), Some(y)) => x == y,
                    _ => return Err(type_err(sym, a, b)),
                },
            };
            Ok(Bool(if op == BinOp::Eq { eq } else { !eq }))
        }
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = match (a, b) {
                (Str(x), Str(y)) => x.cmp(y),
                (Int(x), Int(y)) => x.cmp(y),
                _ => match (a.as_f64(), b.as_f64()) {
                    (Some(x), Some(y)) => x.partial_cmp(&y).ok_or(Fault::NonFinite)?,
                    _ => return Err(type_err(sym, a, b)),
                },
            };
            use std::cmp::Ordering::*;
            Ok(Bool(match op {
                BinOp::Lt => ord == Less,
                BinOp::Le => ord != Greater,
                BinOp::Gt => ord == Greater,
                _ => ord != Less,
            }))
        }
        BinOp::Add => match (a, b) {
            (Str(x), Str(y)) => Ok(Str(format!("{x}{y}"))),
            (Int(x), Int(y)) => x.checked_add(*y).map(Int).ok_or(Fault::Overflow),
            _ => num2(a, b, sym).and_then(|(x, y)| finite(x + y)),
        },
        BinOp::Sub => match (a, b) {
            (Int(x), Int(y)) => x.checked_sub(*y).map(Int).ok_or(Fault::Overflow),
            _ => num2(a, b, sym).and_then(|(x, y)| finite(x - y)),
        },
        BinOp::Mul => match (a, b) {
            (Int(x), Int(y)) => x.checked_mul(*y).map(Int).ok_or(Fault::Overflow),
            _ => num2(a, b, sym).and_then(|(x, y)| finite(x * y)),
        },
        BinOp::Div => {
            let (x, y) = num2(a, b, sym)?;
            if y == 0.0 {
                return Err(Fault::ZeroDivision);
            }
            finite(x / y)
        }
        BinOp::FloorDiv => match (a, b) {
            (Int(x), Int(y)) => {
                if *y == 0 {
                    return Err(Fault::ZeroDivision);
                }
                let q = x.checked_div(*y).ok_or(Fault::Overflow)?;
                // round toward negative infinity
                let q = if (x % y != 0) && ((*x < 0) != (*y < 0)) { q - 1 } else { q };
                Ok(Int(q))
            }
            _ => {
                let (x, y) = num2(a, b, sym)?;
                if y == 0.0 {
                    return Err(Fault::ZeroDivision);
                }
                finite((x / y).floor())
            }
        },
        BinOp::Pow => match (a, b) {
            (Int(x), Int(y)) => {
                if *y < 0 {
                    return Err(Fault::Domain("negative exponent for an int power".into()));
                }
                let e = u32::try_from(*y).map_err(|_| Fault::Overflow)?;
                x.checked_pow(e).map(Int).ok_or(Fault::Overflow)
            }
            _ => {
                let (x, y) = num2(a, b, sym)?;
                float_pow(x, y)
            }
        },
    }
}

fn num2(a: &Value, b: &Value, sym: &str) -> Result<(f64, f64), Fault> {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err(type_err(sym, a, b)),
    }
}

pub fn slice(s: &str, lo: Option<usize>, hi: Option<usize>) -> String {
    let n = s.chars().count();
    let lo = lo.unwrap_or(0).min(n);
    let hi = hi.unwrap_or(n).min(n);
    if lo >= hi {
        return String::new();
    }
    s.chars().skip(lo).take(hi - lo).collect()
}

/// Built-in calls evaluated directly by the arithmetic rules.
pub const PRIMITIVES: &[&str] = &["float", "float.is_integer", "len"];

pub fn is_primitive(name: &str) -> bool {
    PRIMITIVES.contains(&name)
}

pub fn primitive_type(name: &str) -> Option<Type> {
    Some(match name {
        "float" => Type::Func(vec![Type::Float], Box::new(Type::Float)),
        "float.is_integer" => Type::Func(vec![Type::Float], Box::new(Type::Bool)),
        "len" => Type::Func(vec![Type::Str], Box::new(Type::Int)),
        _ => return None,
    })
}

pub fn call_primitive(name: &str, args: &[Value]) -> Result<Value, Fault> {
    match (name, args) {
        ("float", [v]) => v
            .as_f64()
            .map(Value::Float)
            .ok_or_else(|| Fault::Type(format!("float({})", v.ty()))),
        ("float.is_integer", [v]) => v
            .as_f64()
            .map(|x| Value::Bool(x.is_finite() && x.fract() == 0.0))
            .ok_or_else(|| Fault::Type(format!("float.is_integer({})", v.ty()))),
        ("len", [Value::Str(s)]) => Ok(Value::Int(s.chars().count() as i64)),
        _ => Err(Fault::Type(format!("bad call to {name}"))),
    }
}

/// Evaluates an expression built only from literals, operators, slices,
/// conditionals and primitive calls. `None` if anything else occurs.
pub fn eval_ground(e: &Expr) -> Option<Result<Value, Fault>> {
    Some(match e {
        Expr::Int(_) | Expr::Float(_) | Expr::Bool(_) | Expr::Str(_) => Ok(Value::from_expr(e)?),
        Expr::Unary(op, x) => eval_ground(x)?.and_then(|v| apply_unop(*op, &v)),
        Expr::Binary(op @ (BinOp::And | BinOp::Or), l, r) => match eval_ground(l)? {
            Ok(Value::Bool(b)) if b == (*op == BinOp::Or) => Ok(Value::Bool(b)),
            Ok(Value::Bool(_)) => eval_ground(r)?,
            Ok(v) => Err(Fault::Type(format!("{} {}", v.ty(), op.symbol()))),
            Err(f) => Err(f),
        },
        Expr::Binary(op, l, r) => {
            let a = eval_ground(l)?;
            let b = eval_ground(r)?;
            match (a, b) {
                (Ok(a), Ok(b)) => apply_binop(*op, &a, &b),
                (Err(f), _) | (_, Err(f)) => Err(f),
            }
        }
        Expr::Slice(b, lo, hi) => match eval_ground(b)? {
            Ok(Value::Str(s)) => Ok(Value::Str(slice(&s, *lo, *hi))),
            Ok(v) => Err(Fault::Type(format!("slice of {}", v.ty()))),
            Err(f) => Err(f),
        },
        Expr::Cond(t, g, x) => match eval_ground(g)? {
            Ok(Value::Bool(true)) => eval_ground(t)?,
            Ok(Value::Bool(false)) => eval_ground(x)?,
            Ok(v) => Err(Fault::Type(format!("guard of type {}", v.ty()))),
            Err(f) => Err(f),
        },
        Expr::Call(f, args) if is_primitive(f) => {
            let mut vals = Vec::new();
            for a in args {
                match eval_ground(a)? {
                    Ok(v) => vals.push(v),
                    Err(f) => return Some(Err(f)),
                }
            }
            call_primitive(f, &vals)
        }
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr;

    fn ev(s: &str) -> Result<Value, Fault> {
        eval_ground(&parse_expr(s).unwrap()).unwrap()
    }

    #[test]
    fn python_integer_semantics() {
        assert_eq!(ev("2*14+2*7"), Ok(Value::Int(42)));
        assert_eq!(ev("-7//2"), Ok(Value::Int(-4)));
        assert_eq!(ev("7//-2"), Ok(Value::Int(-4)));
        assert_eq!(ev("7/2"), Ok(Value::Float(3.5)));
        assert_eq!(ev("1//0"), Err(Fault::ZeroDivision));
        assert_eq!(ev("2**10"), Ok(Value::Int(1024)));
        assert!(ev("2**-1").is_err());
        assert_eq!(ev("9223372036854775807+1"), Err(Fault::Overflow));
    }

    #[test]
    fn floats() {
        assert_eq!(ev("17+float(5)**2"), Ok(Value::Float(42.0)));
        assert!(matches!(ev("(-1.0)**0.5"), Err(Fault::Domain(_))));
        assert_eq!(ev("float.is_integer(2)"), Ok(Value::Bool(true)));
        assert_eq!(ev("float.is_integer(0.5)"), Ok(Value::Bool(false)));
    }

    #[test]
    fn strings_and_booleans() {
        assert_eq!(ev("'What is it'[0:4]=='What'"), Ok(Value::Bool(true)));
        assert_eq!(ev("'ab'+'c'"), Ok(Value::Str("abc".into())));
        assert_eq!(ev("'abc'[5:9]"), Ok(Value::Str(String::new())));
        assert_eq!(ev("False and 1//0==0"), Ok(Value::Bool(false)));
        assert_eq!(ev("len('héllo')"), Ok(Value::Int(5)));
    }
}
