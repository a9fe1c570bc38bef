//! A direct recursive interpreter for the language subset.
//!
//! Function bodies run as statements with an environment, the way Python
//! runs them, instead of by substitution. Globals are evaluated when first
//! read. Library functions with contracts evaluate their precondition and
//! then their result formula; a false precondition is `ERROR`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

use substep_core::syntax::{BinOp, Expr, Program, Stmt, UnOp};

#[derive(Clone, Debug, PartialEq)]
pub enum RefValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl fmt::Display for RefValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefValue::Int(n) => write!(f, "{n}"),
            RefValue::Float(x) => write!(f, "{x:?}"),
            RefValue::Bool(b) => f.write_str(if *b { "True" } else { "False" }),
            RefValue::Str(s) => write!(f, "'{s}'"),
        }
    }
}

/// How evaluation ended.
#[derive(Clone, Debug, PartialEq)]
pub enum RefOutcome {
    Value(RefValue),
    /// `ERROR` was evaluated or a contract's precondition was false.
    Error,
    /// An operation had no result: division by zero, overflow, a type error.
    Fault(String),
}

enum Stop {
    Error,
    Fault(String),
}

type R<T> = Result<T, Stop>;

fn fault<T>(msg: impl Into<String>) -> R<T> {
    Err(Stop::Fault(msg.into()))
}

/// Evaluation budget, counted in expression nodes.
pub const FUEL: u64 = 1_000_000;

pub struct Interpreter<'p> {
    program: &'p Program,
    globals: RefCell<BTreeMap<String, RefValue>>,
    fuel: RefCell<u64>,
}

type Env = BTreeMap<String, RefValue>;

impl<'p> Interpreter<'p> {
    pub fn new(program: &'p Program) -> Interpreter<'p> {
        Interpreter {
            program,
            globals: RefCell::new(BTreeMap::new()),
            fuel: RefCell::new(FUEL),
        }
    }

    pub fn run(&self) -> RefOutcome {
        self.outcome(&self.program.goal, &Env::new())
    }

    /// Evaluates `e` with the given variables in scope.
    pub fn outcome(&self, e: &Expr, env: &Env) -> RefOutcome {
        match self.eval(e, env) {
            Ok(v) => RefOutcome::Value(v),
            Err(Stop::Error) => RefOutcome::Error,
            Err(Stop::Fault(m)) => RefOutcome::Fault(m),
        }
    }

    /// Calls a program or library function on values.
    pub fn call_values(&self, name: &str, args: Vec<RefValue>) -> RefOutcome {
        match self.call(name, args) {
            Ok(v) => RefOutcome::Value(v),
            Err(Stop::Error) => RefOutcome::Error,
            Err(Stop::Fault(m)) => RefOutcome::Fault(m),
        }
    }

    fn tick(&self) -> R<()> {
        let mut f = self.fuel.borrow_mut();
        if *f == 0 {
            return fault("out of fuel");
        }
        *f -= 1;
        Ok(())
    }

    fn global(&self, name: &str) -> R<RefValue> {
        if let Some(v) = self.globals.borrow().get(name) {
            return Ok(v.clone());
        }
        let Some(def) = self.program.var(name) else {
            return fault(format!("unbound name {name}"));
        };
        let v = self.eval(&def.value, &Env::new())?;
        self.globals.borrow_mut().insert(name.into(), v.clone());
        Ok(v)
    }

    fn eval(&self, e: &Expr, env: &Env) -> R<RefValue> {
        self.tick()?;
        match e {
            Expr::Int(n) => Ok(RefValue::Int(*n)),
            Expr::Float(x) => Ok(RefValue::Float(*x)),
            Expr::Bool(b) => Ok(RefValue::Bool(*b)),
            Expr::Str(s) => Ok(RefValue::Str(s.clone())),
            Expr::Var(v) => match env.get(v) {
                Some(x) => Ok(x.clone()),
                None => self.global(v),
            },
            Expr::Unary(op, a) => {
                let a = self.eval(a, env)?;
                match (op, a) {
                    (UnOp::Not, RefValue::Bool(b)) => Ok(RefValue::Bool(!b)),
                    (UnOp::Neg, RefValue::Int(n)) => n.checked_neg().map(RefValue::Int).ok_or(Stop::Fault("overflow".into())),
                    (UnOp::Neg, RefValue::Float(x)) => Ok(RefValue::Float(-x)),
                    (op, v) => fault(format!("{op:?} of {v}")),
                }
            }
            Expr::Binary(op @ (BinOp::And | BinOp::Or), l, r) => match self.eval(l, env)? {
                RefValue::Bool(b) if b == (*op == BinOp::Or) => Ok(RefValue::Bool(b)),
                RefValue::Bool(_) => match self.eval(r, env)? {
                    RefValue::Bool(c) => Ok(RefValue::Bool(c)),
                    v => fault(format!("{v} is not a bool")),
                },
                v => fault(format!("{v} is not a bool")),
            },
            Expr::Binary(op, l, r) => {
                let a = self.eval(l, env)?;
                let b = self.eval(r, env)?;
                binary(*op, a, b)
            }
            Expr::Slice(s, lo, hi) => match self.eval(s, env)? {
                RefValue::Str(s) => {
                    let chars: Vec<char> = s.chars().collect();
                    let hi = hi.unwrap_or(chars.len()).min(chars.len());
                    let lo = lo.unwrap_or(0).min(hi);
                    Ok(RefValue::Str(chars[lo..hi].iter().collect()))
                }
                v => fault(format!("cannot slice {v}")),
            },
            Expr::Call(f, args) => {
                let vals = args.iter().map(|a| self.eval(a, env)).collect::<R<Vec<_>>>()?;
                self.call(f, vals)
            }
            Expr::Cond(then, guard, otherwise) => match self.eval(guard, env)? {
                RefValue::Bool(true) => self.eval(then, env),
                RefValue::Bool(false) => self.eval(otherwise, env),
                v => fault(format!("guard {v} is not a bool")),
            },
            Expr::Error => Err(Stop::Error),
            Expr::Apply(..) | Expr::Lambda(..) => fault("first-class functions are not supported"),
        }
    }

    fn call(&self, name: &str, args: Vec<RefValue>) -> R<RefValue> {
        use RefValue::*;
        match (name, args.as_slice()) {
            ("float", [v]) => return Ok(Float(num(v)?)),
            ("float.is_integer", [v]) => return Ok(Bool(num(v)?.fract() == 0.0)),
            ("len", [Str(s)]) => return Ok(Int(s.chars().count() as i64)),
            ("math.pow", [x, y]) => {
                let (x, y) = (num(x)?, num(y)?);
                if x < 0.0 && y.fract() != 0.0 {
                    return Err(Stop::Error);
                }
                return float_result(pow(x, y)?);
            }
            ("math.sqrt" | "sqrt", [x]) => {
                let x = num(x)?;
                if x < 0.0 {
                    return Err(Stop::Error);
                }
                return float_result(pow(x, 0.5)?);
            }
            _ => {}
        }
        if let Some(f) = self.program.func(name) {
            if f.params.len() != args.len() {
                return fault(format!("{name} takes {} arguments", f.params.len()));
            }
            let env: Env = f.params.iter().map(|(p, _)| p.clone()).zip(args).collect();
            return self.exec(&f.body, env)?.ok_or_else(|| Stop::Fault(format!("{name} did not return")));
        }
        if let Some(t) = self.program.stubs().find(|t| t.name == name) {
            let env: Env = t.params.iter().map(|(p, _)| p.clone()).zip(args).collect();
            return match self.eval(&t.pre, &env)? {
                Bool(true) => self.eval(&t.post, &env),
                Bool(false) => Err(Stop::Error),
                v => fault(format!("precondition gave {v}")),
            };
        }
        fault(format!("unknown function {name}"))
    }

    fn exec(&self, body: &[Stmt], mut env: Env) -> R<Option<RefValue>> {
        for s in body {
            match s {
                Stmt::Assign { name, value, .. } => {
                    let v = self.eval(value, &env)?;
                    env.insert(name.clone(), v);
                }
                Stmt::If { guard, then, otherwise, .. } => {
                    let branch = match self.eval(guard, &env)? {
                        RefValue::Bool(true) => then,
                        RefValue::Bool(false) => otherwise,
                        v => return fault(format!("guard {v} is not a bool")),
                    };
                    if let Some(v) = self.exec(branch, env.clone())? {
                        return Ok(Some(v));
                    }
                }
                Stmt::Return { value, .. } => return self.eval(value, &env).map(Some),
            }
        }
        Ok(None)
    }
}

fn num(v: &RefValue) -> R<f64> {
    match v {
        RefValue::Int(n) => Ok(*n as f64),
        RefValue::Float(x) => Ok(*x),
        other => fault(format!("{other} is not a number")),
    }
}

fn float_result(x: f64) -> R<RefValue> {
    if x.is_finite() {
        Ok(RefValue::Float(x))
    } else {
        fault("non-finite result")
    }
}

fn pow(x: f64, y: f64) -> R<f64> {
    if x == 0.0 && y < 0.0 {
        return fault("zero to a negative power");
    }
    if x < 0.0 && y.fract() != 0.0 {
        return fault("complex result");
    }
    Ok(x.powf(y))
}

fn binary(op: BinOp, a: RefValue, b: RefValue) -> R<RefValue> {
    use RefValue::*;
    let overflow = || Stop::Fault("overflow".into());
    match (op, &a, &b) {
        (BinOp::Add, Str(x), Str(y)) => return Ok(Str(format!("{x}{y}"))),
        (BinOp::Add, Int(x), Int(y)) => return x.checked_add(*y).map(Int).ok_or_else(overflow),
        (BinOp::Sub, Int(x), Int(y)) => return x.checked_sub(*y).map(Int).ok_or_else(overflow),
        (BinOp::Mul, Int(x), Int(y)) => return x.checked_mul(*y).map(Int).ok_or_else(overflow),
        (BinOp::FloorDiv, Int(_), Int(0)) => return fault("division by zero"),
        (BinOp::FloorDiv, Int(x), Int(y)) => {
            let q = x.checked_div_euclid(*y).ok_or_else(overflow)?;
            // Python rounds the quotient down, not toward zero
            let q = if *y < 0 && x.rem_euclid(*y) != 0 { q - 1 } else { q };
            return Ok(Int(q));
        }
        (BinOp::Pow, Int(_), Int(y)) if *y < 0 => return fault("negative int exponent"),
        (BinOp::Pow, Int(x), Int(y)) => {
            let e = u32::try_from(*y).map_err(|_| overflow())?;
            return x.checked_pow(e).map(Int).ok_or_else(overflow);
        }
        (BinOp::Eq | BinOp::Ne, _, _) => {
            let eq = match (&a, &b) {
                (Int(x), Int(y)) => x == y,
                (Str(x), Str(y)) => x == y,
                (Bool(x), Bool(y)) => x == y,
                (Int(_) | Float(_), Int(_) | Float(_)) => num(&a)? == num(&b)?,
                _ => return fault("incomparable"),
            };
            return Ok(Bool(eq == (op == BinOp::Eq)));
        }
        (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, _, _) => {
            let ord = match (&a, &b) {
                (Int(x), Int(y)) => x.partial_cmp(y),
                (Str(x), Str(y)) => x.partial_cmp(y),
                (Int(_) | Float(_), Int(_) | Float(_)) => num(&a)?.partial_cmp(&num(&b)?),
                _ => return fault("incomparable"),
            };
            let ord = ord.ok_or_else(|| Stop::Fault("unordered".into()))?;
            let r = match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            };
            return Ok(Bool(r));
        }
        _ => {}
    }
    let (x, y) = (num(&a)?, num(&b)?);
    let r = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div if y == 0.0 => return fault("division by zero"),
        BinOp::Div => x / y,
        BinOp::FloorDiv if y == 0.0 => return fault("division by zero"),
        BinOp::FloorDiv => (x / y).floor(),
        BinOp::Pow => pow(x, y)?,
        _ => return fault(format!("{op:?} on {a} and {b}")),
    };
    float_result(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use substep_core::syntax::parse_program;

    fn run(src: &str) -> RefOutcome {
        let p = parse_program(src).unwrap();
        Interpreter::new(&p).run()
    }

    #[test]
    fn python_arithmetic() {
        assert_eq!(run("# |-\n-7//2"), RefOutcome::Value(RefValue::Int(-4)));
        assert_eq!(run("# |-\n7//-2"), RefOutcome::Value(RefValue::Int(-4)));
        assert_eq!(run("# |-\n7//2"), RefOutcome::Value(RefValue::Int(3)));
        assert_eq!(run("# |-\n1/4"), RefOutcome::Value(RefValue::Float(0.25)));
        assert!(matches!(run("# |-\n1//0"), RefOutcome::Fault(_)));
    }

    #[test]
    fn contracts_and_error() {
        assert_eq!(run("import math\n# |-\nmath.pow(-1.0, 0.5)"), RefOutcome::Error);
        assert_eq!(run("import math\n# |-\n17+math.pow(5, 2)"), RefOutcome::Value(RefValue::Float(42.0)));
        assert_eq!(run("# |-\n1 if False else ERROR"), RefOutcome::Error);
        assert_eq!(run("# |-\nFalse and ERROR"), RefOutcome::Value(RefValue::Bool(false)));
    }

    #[test]
    fn statements() {
        let src = "def f(n: int) -> int:\n    m: int = n+1\n    if m>3:\n        return m\n    else:\n        return 0\n\n# |-\n\nf(5)+f(1)";
        assert_eq!(run(src), RefOutcome::Value(RefValue::Int(6)));
    }
}
