//! Type checking.
//!
//! `int` widens to `float` at call sites, annotated definitions and in mixed
//! arithmetic. `==`/`!=` demand identical operand types. `ERROR` has no type
//! of its own and joins with anything.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::subst::Path;
use crate::syntax::*;
use crate::value::primitive_type;

use super::registry::TrustRegistry;

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("type error in {location} at {}: expected {expected}, found {found}", crate::syntax::subst::format_path(path))]
pub struct TypeError {
    pub location: String,
    pub path: Path,
    pub expected: String,
    pub found: String,
}

/// Types of every global name, plus symbolic variables when executing
/// symbolically.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeEnv {
    pub globals: BTreeMap<String, Type>,
}

/// `None` stands for the type of `ERROR`, which fits anywhere.
pub type MaybeType = Option<Type>;

pub fn join(a: &MaybeType, b: &MaybeType) -> Result<MaybeType, (Type, Type)> {
    match (a, b) {
        (None, x) | (x, None) => Ok(x.clone()),
        (Some(x), Some(y)) if x == y => Ok(Some(x.clone())),
        (Some(x), Some(y)) if x.is_numeric() && y.is_numeric() => Ok(Some(Type::Float)),
        (Some(x), Some(y)) => Err((x.clone(), y.clone())),
    }
}

/// `after` may replace `before`: same type, `ERROR`, or `int` in a `float` slot.
pub fn subsumes(before: &MaybeType, after: &MaybeType) -> bool {
    match (before, after) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(b), Some(a)) => a.widens_to(b),
    }
}

impl TypeEnv {
    pub fn for_program(p: &Program, reg: &TrustRegistry) -> TypeEnv {
        let mut env = TypeEnv::default();
        for (name, e) in reg.entries() {
            env.globals.insert(name.clone(), e.spec.signature());
        }
        for item in &p.items {
            match item {
                Item::Func(f) => {
                    env.globals.insert(f.name.clone(), f.signature());
                }
                Item::Trusted(t) => {
                    env.globals.insert(
                        t.name.clone(),
                        Type::Func(t.params.iter().map(|(_, t)| t.clone()).collect(), Box::new(t.ret.clone())),
                    );
                }
                Item::Var(v) => {
                    let ty = match &v.ty {
                        Some(t) => Some(t.clone()),
                        None => env.type_of(&v.value).ok().flatten(),
                    };
                    if let Some(t) = ty {
                        env.globals.insert(v.name.clone(), t);
                    }
                }
                Item::Import(_) => {}
            }
        }
        env
    }

    pub fn with(&self, extra: impl IntoIterator<Item = (String, Type)>) -> TypeEnv {
        let mut env = self.clone();
        env.globals.extend(extra);
        env
    }

    pub fn lookup(&self, name: &str) -> Option<Type> {
        self.globals
            .get(name)
            .cloned()
            .or_else(|| primitive_type(name))
    }

    pub fn is_int_var(&self, name: &str) -> bool {
        self.lookup(name) == Some(Type::Int)
    }

    pub fn type_of(&self, e: &Expr) -> Result<MaybeType, TypeError> {
        Typer {
            env: self,
            scopes: Vec::new(),
            location: "expression".into(),
        }
        .infer(e, &mut Vec::new())
    }

    /// Types `e` with extra local bindings in scope (e.g. function parameters).
    pub fn type_in(
        &self,
        e: &Expr,
        locals: &[(String, Type)],
        location: &str,
    ) -> Result<MaybeType, TypeError> {
        Typer {
            env: self,
            scopes: vec![locals.iter().cloned().collect()],
            location: location.into(),
        }
        .infer(e, &mut Vec::new())
    }

    /// Type of the sub-expression at `path`, with enclosing lambda parameters
    /// typed from their arguments or defaults where possible.
    pub fn type_at(&self, root: &Expr, path: &[usize]) -> Result<MaybeType, TypeError> {
        let mut t = Typer {
            env: self,
            scopes: Vec::new(),
            location: "expression".into(),
        };
        t.infer_at(root, path, &mut Vec::new())
    }
}

struct Typer<'a> {
    env: &'a TypeEnv,
    scopes: Vec<BTreeMap<String, Type>>,
    location: String,
}

impl Typer<'_> {
    fn err(&self, path: &Path, expected: impl Into<String>, found: impl Into<String>) -> TypeError {
        TypeError {
            location: self.location.clone(),
            path: path.clone(),
            expected: expected.into(),
            found: found.into(),
        }
    }

    fn lookup(&self, name: &str) -> Option<Type> {
        for s in self.scopes.iter().rev() {
            if let Some(t) = s.get(name) {
                return Some(t.clone());
            }
        }
        self.env.lookup(name)
    }

    fn child(&mut self, e: &Expr, i: usize, path: &mut Path) -> Result<MaybeType, TypeError> {
        path.push(i);
        let r = self.infer(e, path);
        path.pop();
        r
    }

    fn expect(
        &mut self,
        e: &Expr,
        i: usize,
        want: &Type,
        path: &mut Path,
    ) -> Result<(), TypeError> {
        path.push(i);
        let r = self.check(e, want, path);
        path.pop();
        r
    }

    fn check(&mut self, e: &Expr, want: &Type, path: &mut Path) -> Result<(), TypeError> {
        if let (Expr::Lambda(params, body), Type::Func(ps, ret)) = (e, want) {
            if params.len() != ps.len() {
                return Err(self.err(path, want.to_string(), "lambda of different arity"));
            }
            self.scopes.push(
                params
                    .iter()
                    .zip(ps)
                    .map(|(p, t)| (p.name.clone(), t.clone()))
                    .collect(),
            );
            let n = params.iter().filter(|p| p.default.is_some()).count();
            path.push(n);
            let r = self.check(body, ret, path);
            path.pop();
            self.scopes.pop();
            return r;
        }
        match self.infer(e, path)? {
            None => Ok(()),
            Some(t) if t.widens_to(want) => Ok(()),
            Some(t) => Err(self.err(path, want.to_string(), t.to_string())),
        }
    }

    fn infer(&mut self, e: &Expr, path: &mut Path) -> Result<MaybeType, TypeError> {
        Ok(Some(match e {
            Expr::Int(_) => Type::Int,
            Expr::Float(_) => Type::Float,
            Expr::Bool(_) => Type::Bool,
            Expr::Str(_) => Type::Str,
            Expr::Error => return Ok(None),
            Expr::Var(v) => self
                .lookup(v)
                .ok_or_else(|| self.err(path, "a defined name", format!("undefined '{v}'")))?,
            Expr::Unary(UnOp::Not, x) => {
                self.expect(x, 0, &Type::Bool, path)?;
                Type::Bool
            }
            Expr::Unary(UnOp::Neg, x) => match self.child(x, 0, path)? {
                None => return Ok(None),
                Some(t) if t.is_numeric() => t,
                Some(t) => return Err(self.err(path, "a number", t.to_string())),
            },
            Expr::Binary(op, l, r) => return self.binary(*op, l, r, path),
            Expr::Slice(b, _, _) => {
                self.expect(b, 0, &Type::Str, path)?;
                Type::Str
            }
            Expr::Call(f, args) => {
                let ft = self
                    .lookup(f)
                    .ok_or_else(|| self.err(path, "a defined function", format!("undefined '{f}'")))?;
                return self.apply(&ft, args, 0, path);
            }
            Expr::Apply(callee, args) => {
                if let Expr::Lambda(params, body) = &**callee {
                    return self.apply_lambda(params, body, args, path);
                }
                let ft = match self.child(callee, 0, path)? {
                    Some(t) => t,
                    None => return Ok(None),
                };
                return self.apply(&ft, args, 1, path);
            }
            Expr::Cond(t, g, x) => {
                self.expect(g, 1, &Type::Bool, path)?;
                let a = self.child(t, 0, path)?;
                let b = self.child(x, 2, path)?;
                return join(&a, &b).map_err(|(a, b)| {
                    self.err(path, format!("branches of one type ({a})"), b.to_string())
                });
            }
            Expr::Lambda(..) => {
                return Err(self.err(path, "a lambda in call position", "a bare lambda"))
            }
        }))
    }

    fn apply(&mut self, ft: &Type, args: &[Expr], offset: usize, path: &mut Path) -> Result<MaybeType, TypeError> {
        let Type::Func(ps, ret) = ft else {
            return Err(self.err(path, "a function", ft.to_string()));
        };
        if ps.len() != args.len() {
            return Err(self.err(
                path,
                format!("{} argument(s)", ps.len()),
                format!("{}", args.len()),
            ));
        }
        for (i, (a, p)) in args.iter().zip(ps).enumerate() {
            self.expect(a, i + offset, p, path)?;
        }
        Ok(Some((**ret).clone()))
    }

    fn apply_lambda(
        &mut self,
        params: &[Param],
        body: &Expr,
        args: &[Expr],
        path: &mut Path,
    ) -> Result<MaybeType, TypeError> {
        let required = params.iter().filter(|p| p.default.is_none()).count();
        if args.len() < required || args.len() > params.len() {
            return Err(self.err(path, format!("{required} argument(s)"), args.len().to_string()));
        }
        let mut scope = BTreeMap::new();
        // defaults are children 0.. of the lambda, which is child 0 of the application
        path.push(0);
        let mut di = 0;
        for (i, p) in params.iter().enumerate() {
            let t = if i < args.len() {
                path.pop();
                let t = self.child(&args[i], i + 1, path)?;
                path.push(0);
                t
            } else if let Some(d) = &p.default {
                self.child(d, di, path)?
            } else {
                None
            };
            if p.default.is_some() {
                di += 1;
            }
            if let Some(t) = t {
                scope.insert(p.name.clone(), t);
            }
        }
        self.scopes.push(scope);
        let r = self.child(body, di, path);
        self.scopes.pop();
        path.pop();
        r
    }

    fn binary(&mut self, op: BinOp, l: &Expr, r: &Expr, path: &mut Path) -> Result<MaybeType, TypeError> {
        if op.is_logical() {
            self.expect(l, 0, &Type::Bool, path)?;
            self.expect(r, 1, &Type::Bool, path)?;
            return Ok(Some(Type::Bool));
        }
        let a = self.child(l, 0, path)?;
        let b = self.child(r, 1, path)?;
        let (a, b) = match (a, b) {
            (Some(a), Some(b)) => (a, b),
            (a, b) => {
                // ERROR operand: result type follows the other side where it can
                return Ok(if op.is_comparison() {
                    Some(Type::Bool)
                } else {
                    a.or(b).filter(|t| t.is_numeric() || *t == Type::Str)
                });
            }
        };
        let mismatch = |s: &Self| {
            s.err(
                path,
                format!("operands suitable for '{}'", op.symbol()),
                format!("{a} and {b}"),
            )
        };
        match op {
            BinOp::Eq | BinOp::Ne => {
                if a != b || matches!(a, Type::Func(..)) {
                    return Err(mismatch(self));
                }
                Ok(Some(Type::Bool))
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let ok = (a.is_numeric() && b.is_numeric()) || (a == Type::Str && b == Type::Str);
                if !ok {
                    return Err(mismatch(self));
                }
                Ok(Some(Type::Bool))
            }
            BinOp::Add if a == Type::Str && b == Type::Str => Ok(Some(Type::Str)),
            BinOp::Div => {
                if !(a.is_numeric() && b.is_numeric()) {
                    return Err(mismatch(self));
                }
                Ok(Some(Type::Float))
            }
            _ => {
                if !(a.is_numeric() && b.is_numeric()) {
                    return Err(mismatch(self));
                }
                Ok(Some(if a == Type::Int && b == Type::Int {
                    Type::Int
                } else {
                    Type::Float
                }))
            }
        }
    }

    fn infer_at(&mut self, e: &Expr, path: &[usize], cur: &mut Path) -> Result<MaybeType, TypeError> {
        let Some((&i, rest)) = path.split_first() else {
            return self.infer(e, cur);
        };
        match e {
            Expr::Apply(callee, args) if i == 0 => {
                if let Expr::Lambda(params, body) = &**callee {
                    let mut scope = BTreeMap::new();
                    for (k, p) in params.iter().enumerate() {
                        let t = if k < args.len() {
                            self.infer(&args[k], cur).ok().flatten()
                        } else {
                            p.default.as_ref().and_then(|d| self.infer(d, cur).ok().flatten())
                        };
                        if let Some(t) = t {
                            scope.insert(p.name.clone(), t);
                        }
                    }
                    let Some((&j, rest2)) = rest.split_first() else {
                        return Err(self.err(cur, "an expression", "a bare lambda"));
                    };
                    let n = params.iter().filter(|p| p.default.is_some()).count();
                    cur.push(0);
                    cur.push(j);
                    let r = if j == n {
                        self.scopes.push(scope);
                        let r = self.infer_at(body, rest2, cur);
                        self.scopes.pop();
                        r
                    } else {
                        let d = params.iter().filter_map(|p| p.default.as_ref()).nth(j);
                        match d {
                            Some(d) => self.infer_at(d, rest2, cur),
                            None => Err(self.err(cur, "a valid path", "out of range")),
                        }
                    };
                    cur.pop();
                    cur.pop();
                    return r;
                }
                self.descend(e, i, rest, cur)
            }
            _ => self.descend(e, i, rest, cur),
        }
    }

    fn descend(&mut self, e: &Expr, i: usize, rest: &[usize], cur: &mut Path) -> Result<MaybeType, TypeError> {
        let child = e
            .children()
            .into_iter()
            .nth(i)
            .ok_or_else(|| self.err(cur, "a valid path", "out of range"))?;
        cur.push(i);
        let r = self.infer_at(child, rest, cur);
        cur.pop();
        r
    }
}

/// Full program check: definitions against annotations, function bodies,
/// contract lines, and the goal.
pub fn type_check(p: &Program, reg: &TrustRegistry) -> Result<(TypeEnv, MaybeType), Vec<TypeError>> {
    let env = TypeEnv::for_program(p, reg);
    let mut errors = Vec::new();
    for item in &p.items {
        match item {
            Item::Var(v) => {
                let loc = format!("definition of {}", v.name);
                match (&v.ty, env.type_in(&v.value, &[], &loc)) {
                    (_, Err(e)) => errors.push(e),
                    (Some(want), Ok(Some(t))) if !t.widens_to(want) => errors.push(TypeError {
                        location: loc,
                        path: vec![],
                        expected: want.to_string(),
                        found: t.to_string(),
                    }),
                    _ => {}
                }
            }
            Item::Func(f) => {
                check_block(&env, &f.name, &f.body, &mut f.params.clone(), &f.ret, &mut errors);
                if let Some(spec) = &f.spec {
                    check_contract(&env, &f.name, &f.params, &f.ret, spec.pre.as_ref(), spec.post.as_ref(), spec.progress.as_ref(), &mut errors);
                }
            }
            Item::Trusted(t) => {
                check_contract(&env, &t.name, &t.params, &t.ret, Some(&t.pre), Some(&t.post), None, &mut errors);
            }
            Item::Import(_) => {}
        }
    }
    let goal = match env.type_in(&p.goal, &[], "goal") {
        Ok(t) => t,
        Err(e) => {
            errors.push(e);
            None
        }
    };
    if errors.is_empty() {
        Ok((env, goal))
    } else {
        Err(errors)
    }
}

#[allow(clippy::too_many_arguments)]
fn check_contract(
    env: &TypeEnv,
    name: &str,
    params: &[(String, Type)],
    ret: &Type,
    pre: Option<&Expr>,
    post: Option<&Expr>,
    progress: Option<&Expr>,
    errors: &mut Vec<TypeError>,
) {
    let mut want = |e: Option<&Expr>, t: &Type, what: &str| {
        let Some(e) = e else { return };
        let loc = format!("{what} of {name}");
        match env.type_in(e, params, &loc) {
            Err(err) => errors.push(err),
            Ok(Some(found)) if !found.widens_to(t) => errors.push(TypeError {
                location: loc,
                path: vec![],
                expected: t.to_string(),
                found: found.to_string(),
            }),
            _ => {}
        }
    };
    want(pre, &Type::Bool, "precondition");
    want(post, ret, "expected result");
    want(progress, &Type::Int, "progress expression");
}

fn check_block(
    env: &TypeEnv,
    fname: &str,
    stmts: &[Stmt],
    scope: &mut Vec<(String, Type)>,
    ret: &Type,
    errors: &mut Vec<TypeError>,
) {
    let mark = scope.len();
    for s in stmts {
        match s {
            Stmt::Assign { name, ty, value, line } => {
                let loc = format!("{fname}, line {line}");
                match env.type_in(value, scope, &loc) {
                    Err(e) => errors.push(e),
                    Ok(Some(t)) if !t.widens_to(ty) => errors.push(TypeError {
                        location: loc,
                        path: vec![],
                        expected: ty.to_string(),
                        found: t.to_string(),
                    }),
                    _ => {}
                }
                scope.push((name.clone(), ty.clone()));
            }
            Stmt::Return { value, line } => {
                let loc = format!("{fname}, line {line}");
                match env.type_in(value, scope, &loc) {
                    Err(e) => errors.push(e),
                    Ok(Some(t)) if !t.widens_to(ret) => errors.push(TypeError {
                        location: loc,
                        path: vec![],
                        expected: ret.to_string(),
                        found: t.to_string(),
                    }),
                    _ => {}
                }
            }
            Stmt::If { guard, then, otherwise, line } => {
                let loc = format!("{fname}, line {line}");
                match env.type_in(guard, scope, &loc) {
                    Err(e) => errors.push(e),
                    Ok(Some(t)) if t != Type::Bool => errors.push(TypeError {
                        location: loc,
                        path: vec![],
                        expected: "bool".into(),
                        found: t.to_string(),
                    }),
                    _ => {}
                }
                if let Some((name, _, _)) = crate::syntax::normalize::conditional_def(then, otherwise) {
                    check_block(env, fname, then, scope, ret, errors);
                    check_block(env, fname, otherwise, scope, ret, errors);
                    if let Some(Stmt::Assign { ty, .. }) = then.first() {
                        scope.push((name.to_string(), ty.clone()));
                    }
                    continue;
                }
                check_block(env, fname, then, scope, ret, errors);
                check_block(env, fname, otherwise, scope, ret, errors);
            }
        }
    }
    scope.truncate(mark);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty(src: &str, env: &[(&str, Type)]) -> Result<MaybeType, TypeError> {
        let env = TypeEnv::default().with(env.iter().map(|(n, t)| (n.to_string(), t.clone())));
        env.type_of(&parse_expr(src).unwrap())
    }

    #[test]
    fn arithmetic_types() {
        assert_eq!(ty("2*14+2*7", &[]), Ok(Some(Type::Int)));
        assert_eq!(ty("7/2", &[]), Ok(Some(Type::Float)));
        assert_eq!(ty("1+2.0", &[]), Ok(Some(Type::Float)));
        assert!(ty("x+y", &[("x", Type::Str), ("y", Type::Bool)]).is_err());
        assert!(ty("1==1.0", &[]).is_err());
    }

    #[test]
    fn widening_at_calls() {
        let reg = TrustRegistry::with_builtins();
        let p = parse_program("import math\na=5\nb=2\n# |-\n17+math.pow(a, b)\n").unwrap();
        let (_, goal) = type_check(&p, &reg).unwrap();
        assert_eq!(goal, Some(Type::Float));
    }

    #[test]
    fn error_joins_with_anything() {
        assert_eq!(ty("x if x>0 else ERROR", &[("x", Type::Int)]), Ok(Some(Type::Int)));
        assert_eq!(ty("1 if True else 2.5", &[]), Ok(Some(Type::Float)));
        assert!(ty("1 if True else 'a'", &[]).is_err());
    }

    #[test]
    fn lambda_application() {
        assert_eq!(ty("(lambda s: s+'?')('Cool')", &[]), Ok(Some(Type::Str)));
        assert_eq!(ty("(lambda a=14: 3*a)()", &[]), Ok(Some(Type::Int)));
        let root = parse_expr("(lambda a=14: 3*a)()").unwrap();
        let env = TypeEnv::default();
        assert_eq!(env.type_at(&root, &[0, 1, 1]), Ok(Some(Type::Int)));
    }
}
