//! Safe expressions: every variable safe, every callee trusted, and every
//! precondition entailed where the call happens.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::syntax::subst::{format_path, free_vars, Path};
use crate::syntax::*;
use crate::value::{eval_ground, is_primitive, Value};

use super::entail::{decide, Entailment};
use super::guards::extend_for_child;
use super::registry::TrustRegistry;
use super::types::TypeEnv;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnsafeReason {
    UntrustedCallee,
    UnprovablePrecondition,
    UnsafeVariableDefinition,
}

impl UnsafeReason {
    pub fn code(self) -> &'static str {
        match self {
            UnsafeReason::UntrustedCallee => "untrusted-callee",
            UnsafeReason::UnprovablePrecondition => "unprovable-precondition",
            UnsafeReason::UnsafeVariableDefinition => "unsafe-variable-definition",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub safe: bool,
    pub path: Option<Path>,
    pub reason: Option<UnsafeReason>,
    pub detail: String,
}

impl SafetyReport {
    fn safe() -> SafetyReport {
        SafetyReport {
            safe: true,
            path: None,
            reason: None,
            detail: String::new(),
        }
    }

    pub fn message(&self) -> String {
        match (&self.path, self.reason) {
            (Some(p), Some(r)) => format!("{} at {}: {}", r.code(), format_path(p), self.detail),
            _ => "safe".into(),
        }
    }
}

struct Unsafe {
    path: Path,
    reason: UnsafeReason,
    detail: String,
}

/// Everything safety depends on besides the expression and its guards.
#[derive(Clone, Debug)]
pub struct SafetyEnv {
    pub registry: TrustRegistry,
    pub types: TypeEnv,
    /// Free names assumed safe (symbolic inputs).
    pub symbols: BTreeSet<String>,
    /// Verdict for each global definition, computed once in definition order.
    global_safe: BTreeMap<String, Result<(), String>>,
}

impl SafetyEnv {
    pub fn new(p: &Program, registry: &TrustRegistry, types: &TypeEnv) -> SafetyEnv {
        let mut env = SafetyEnv {
            registry: registry.clone(),
            types: types.clone(),
            symbols: BTreeSet::new(),
            global_safe: BTreeMap::new(),
        };
        for v in p.vars() {
            let r = env.is_safe(&v.value, &[]);
            let verdict = if r.safe { Ok(()) } else { Err(r.message()) };
            env.global_safe.insert(v.name.clone(), verdict);
        }
        env
    }

    /// An environment with no program definitions.
    pub fn bare(registry: &TrustRegistry, types: &TypeEnv) -> SafetyEnv {
        SafetyEnv::new(
            &Program {
                items: vec![],
                goal: Expr::Int(0),
            },
            registry,
            types,
        )
    }

    pub fn with_symbols(mut self, symbols: impl IntoIterator<Item = String>) -> SafetyEnv {
        self.symbols.extend(symbols);
        self
    }

    pub fn with_registry(&self, registry: &TrustRegistry) -> SafetyEnv {
        let mut env = self.clone();
        env.registry = registry.clone();
        env
    }

    pub fn global_verdict(&self, name: &str) -> Option<&Result<(), String>> {
        self.global_safe.get(name)
    }

    pub fn is_safe(&self, e: &Expr, ctx: &[Expr]) -> SafetyReport {
        let mut checker = Checker {
            env: self,
            bound: Vec::new(),
        };
        match checker.check(e, &mut Vec::new(), &mut ctx.to_vec()) {
            Ok(()) => SafetyReport::safe(),
            Err(u) => SafetyReport {
                safe: false,
                path: Some(u.path),
                reason: Some(u.reason),
                detail: u.detail,
            },
        }
    }

    /// Is `claim` entailed by `ctx`, evaluating it directly when ground.
    pub fn holds(&self, claim: &Expr, ctx: &[Expr]) -> bool {
        if free_vars(claim).iter().all(|v| is_primitive(v))
            && eval_ground(claim) == Some(Ok(Value::Bool(true))) {
                return true;
            }
        decide(ctx, claim, &|v| self.types.is_int_var(v)) == Entailment::Proved
    }
}

struct Checker<'a> {
    env: &'a SafetyEnv,
    bound: Vec<BTreeSet<String>>,
}

impl Checker<'_> {
    fn is_bound(&self, v: &str) -> bool {
        self.bound.iter().any(|s| s.contains(v))
    }

    fn is_int(&self, e: &Expr, ctx_types: &TypeEnv) -> Option<bool> {
        match ctx_types.type_of(e) {
            Ok(Some(Type::Int)) => Some(true),
            Ok(Some(Type::Float)) => Some(false),
            _ => None,
        }
    }

    fn child(&mut self, parent: &Expr, i: usize, path: &mut Path, ctx: &mut Vec<Expr>) -> Result<(), Unsafe> {
        let kid = parent.children()[i];
        let saved = ctx.clone();
        extend_for_child(parent, i, ctx);
        path.push(i);
        let r = self.check(kid, path, ctx);
        path.pop();
        *ctx = saved;
        r
    }

    fn need(&self, claim: Expr, path: &Path, ctx: &[Expr], what: &str) -> Result<(), Unsafe> {
        if self.env.holds(&claim, ctx) {
            Ok(())
        } else {
            Err(Unsafe {
                path: path.clone(),
                reason: UnsafeReason::UnprovablePrecondition,
                detail: format!("{what} requires {}", print_expr(&claim)),
            })
        }
    }

    fn check(&mut self, e: &Expr, path: &mut Path, ctx: &mut Vec<Expr>) -> Result<(), Unsafe> {
        match e {
            Expr::Int(_) | Expr::Float(_) | Expr::Bool(_) | Expr::Str(_) => Ok(()),
            Expr::Error => self.need(Expr::Bool(false), path, ctx, "ERROR"),
            Expr::Var(v) => {
                if self.is_bound(v) || self.env.symbols.contains(v) {
                    return Ok(());
                }
                match self.env.global_safe.get(v) {
                    Some(Err(why)) => Err(Unsafe {
                        path: path.clone(),
                        reason: UnsafeReason::UnsafeVariableDefinition,
                        detail: format!("definition of {v} is unsafe ({why})"),
                    }),
                    _ => Ok(()),
                }
            }
            Expr::Unary(..) | Expr::Slice(..) => self.child(e, 0, path, ctx),
            Expr::Binary(op, l, r) => {
                self.child(e, 0, path, ctx)?;
                self.child(e, 1, path, ctx)?;
                self.operator(*op, l, r, path, ctx)
            }
            Expr::Cond(..) => {
                self.child(e, 1, path, ctx)?;
                self.child(e, 0, path, ctx)?;
                self.child(e, 2, path, ctx)
            }
            Expr::Call(f, args) => {
                for i in 0..args.len() {
                    self.child(e, i, path, ctx)?;
                }
                self.call(f, args, path, ctx)
            }
            Expr::Apply(callee, args) => {
                for i in 0..args.len() {
                    self.child(e, i + 1, path, ctx)?;
                }
                match &**callee {
                    Expr::Lambda(..) => self.child(e, 0, path, ctx),
                    Expr::Var(f) if !self.is_bound(f) => self.call(f, args, path, ctx),
                    _ => Err(Unsafe {
                        path: path.clone(),
                        reason: UnsafeReason::UntrustedCallee,
                        detail: format!("callee {} is not a trusted function", print_expr(callee)),
                    }),
                }
            }
            Expr::Lambda(params, _) => {
                let nd = params.iter().filter(|p| p.default.is_some()).count();
                for i in 0..nd {
                    self.child(e, i, path, ctx)?;
                }
                self.bound.push(params.iter().map(|p| p.name.clone()).collect());
                let r = self.child(e, nd, path, ctx);
                self.bound.pop();
                r
            }
        }
    }

    fn call(&mut self, f: &str, args: &[Expr], path: &Path, ctx: &[Expr]) -> Result<(), Unsafe> {
        if is_primitive(f) {
            return Ok(());
        }
        match self.env.registry.spec(f) {
            Some(spec) => self.need(spec.pre_at(args), path, ctx, f),
            None => Err(Unsafe {
                path: path.clone(),
                reason: UnsafeReason::UntrustedCallee,
                detail: format!("{f} is not trusted"),
            }),
        }
    }

    fn operator(&mut self, op: BinOp, l: &Expr, r: &Expr, path: &Path, ctx: &[Expr]) -> Result<(), Unsafe> {
        // lambda-bound names have no recorded type; treat them as unknown
        let types = &self.env.types;
        let ne0 = || Expr::binary(BinOp::Ne, r.clone(), Expr::Int(0));
        match op {
            BinOp::Div | BinOp::FloorDiv => self.need(ne0(), path, ctx, op.symbol()),
            BinOp::Pow => {
                let (li, ri) = (self.is_int(l, types), self.is_int(r, types));
                if li == Some(true) && ri == Some(true) {
                    return self.need(
                        Expr::binary(BinOp::Ge, r.clone(), Expr::Int(0)),
                        path,
                        ctx,
                        "**",
                    );
                }
                let zero_neg = Expr::not(Expr::binary(
                    BinOp::And,
                    Expr::binary(BinOp::Eq, l.clone(), zero_like(li)),
                    Expr::binary(BinOp::Lt, r.clone(), Expr::Int(0)),
                ));
                self.need(zero_neg, path, ctx, "**")?;
                if ri != Some(true) {
                    let neg_frac = Expr::not(Expr::binary(
                        BinOp::And,
                        Expr::binary(BinOp::Lt, l.clone(), Expr::Int(0)),
                        Expr::not(Expr::Call("float.is_integer".into(), vec![r.clone()])),
                    ));
                    self.need(neg_frac, path, ctx, "**")?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn zero_like(is_int: Option<bool>) -> Expr {
    if is_int == Some(true) {
        Expr::Int(0)
    } else {
        Expr::Float(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> SafetyEnv {
        let types = TypeEnv::default().with(
            ["a", "b", "x", "y", "z"]
                .iter()
                .map(|n| (n.to_string(), Type::Int)),
        );
        SafetyEnv::bare(&TrustRegistry::with_builtins(), &types)
            .with_symbols(["a", "b", "x", "y", "z"].map(String::from))
    }

    fn safe(src: &str) -> SafetyReport {
        env().is_safe(&parse_expr(src).unwrap(), &[])
    }

    #[test]
    fn sqrt_examples() {
        let r = safe("2*sqrt(a-b)");
        assert!(!r.safe);
        assert_eq!(r.reason, Some(UnsafeReason::UnprovablePrecondition));
        assert_eq!(r.path, Some(vec![1]));
        assert!(safe("2*(sqrt(a-b) if a>b else sqrt(b-a))").safe);
        assert!(safe("2*sqrt(a-b if a>b else b-a)").safe);
    }

    #[test]
    fn and_is_not_commutative() {
        assert!(safe("y>0 and x/y>z").safe);
        let r = safe("x/y>z and y>0");
        assert!(!r.safe);
        assert_eq!(r.path, Some(vec![0, 0]));
    }

    #[test]
    fn untrusted_and_variables() {
        let p = parse_program(
            "def f(n: int) -> int:\n    return n\nq: int = 1//0\nw: int = 3+2\n# |-\nw\n",
        )
        .unwrap();
        let reg = TrustRegistry::for_program(&p);
        let types = TypeEnv::for_program(&p, &reg);
        let env = SafetyEnv::new(&p, &reg, &types);
        let check = |s: &str| env.is_safe(&parse_expr(s).unwrap(), &[]);
        assert_eq!(check("f(1)").reason, Some(UnsafeReason::UntrustedCallee));
        assert_eq!(check("q+1").reason, Some(UnsafeReason::UnsafeVariableDefinition));
        assert!(check("w*2").safe);
        assert!(!check("math.pow(-1.0, 0.5)").safe);
        assert!(check("math.pow(5, 2)").safe);
        assert!(check("ERROR if False else 1").safe);
        assert!(!check("ERROR if w>0 else 1").safe);
    }
}
