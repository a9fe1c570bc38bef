//! Conversion of statement-form function bodies into single expressions.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::*;
use super::subst::subst_many;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum NormalizeError {
    #[error("local '{name}' is defined by an unsafe expression: {reason}")]
    UnsafeLocal {
        name: String,
        expr: Expr,
        reason: String,
    },
    #[error("function '{0}' has a block that does not end in a return")]
    MissingReturn(String),
}

/// Callback deciding whether a local initializer may be substituted; receives
/// the local's name, its initializer (earlier locals already substituted away)
/// and the guards in force at the definition.
pub type LocalCheck<'a> = dyn FnMut(&str, &Expr, &[Expr]) -> Result<(), String> + 'a;

/// Body as one expression, with every local substituted by its definition.
/// No safety check is performed on initializers.
pub fn normalize_to_expression(f: &FuncDef) -> Result<Expr, NormalizeError> {
    normalize_with(f, &mut |_, _, _| Ok(()))
}

pub fn normalize_with(f: &FuncDef, check: &mut LocalCheck<'_>) -> Result<Expr, NormalizeError> {
    block(&f.name, &f.body, BTreeMap::new(), &mut Vec::new(), check)
}

fn block(
    fname: &str,
    stmts: &[Stmt],
    mut env: BTreeMap<String, Expr>,
    guards: &mut Vec<Expr>,
    check: &mut LocalCheck<'_>,
) -> Result<Expr, NormalizeError> {
    for stmt in stmts {
        match stmt {
            Stmt::Return { value, .. } => return Ok(subst_many(value, &env)),
            Stmt::Assign { name, value, .. } => {
                let v = subst_many(value, &env);
                check(name, &v, guards).map_err(|reason| NormalizeError::UnsafeLocal {
                    name: name.clone(),
                    expr: v.clone(),
                    reason,
                })?;
                env.insert(name.clone(), v);
            }
            Stmt::If {
                guard,
                then,
                otherwise,
                ..
            } => {
                let g = subst_many(guard, &env);
                if let Some((name, a, b)) = conditional_def(then, otherwise) {
                    guards.push(g.clone());
                    let a = subst_many(a, &env);
                    let ra = check(name, &a, guards);
                    guards.pop();
                    guards.push(Expr::not(g.clone()));
                    let b = subst_many(b, &env);
                    let rb = check(name, &b, guards);
                    guards.pop();
                    let v = Expr::cond(a, g, b);
                    if let Err(reason) = ra.and(rb) {
                        return Err(NormalizeError::UnsafeLocal {
                            name: name.to_string(),
                            expr: v,
                            reason,
                        });
                    }
                    env.insert(name.to_string(), v);
                    continue;
                }
                guards.push(g.clone());
                let t = block(fname, then, env.clone(), guards, check)?;
                guards.pop();
                guards.push(Expr::not(g.clone()));
                let o = block(fname, otherwise, env.clone(), guards, check)?;
                guards.pop();
                return Ok(Expr::cond(t, g, o));
            }
        }
    }
    Err(NormalizeError::MissingReturn(fname.to_string()))
}

/// `if c: v: T = a else: v: T = b` yields `(v, a, b)`.
pub fn conditional_def<'a>(then: &'a [Stmt], otherwise: &'a [Stmt]) -> Option<(&'a str, &'a Expr, &'a Expr)> {
    match (then, otherwise) {
        (
            [Stmt::Assign {
                name: n1,
                ty: t1,
                value: a,
                ..
            }],
            [Stmt::Assign {
                name: n2,
                ty: t2,
                value: b,
                ..
            }],
        ) if n1 == n2 && t1 == t2 => Some((n1, a, b)),
        _ => None,
    }
}

/// The structure-preserving lambda form: parameters become lambda parameters,
/// locals become let-style `(lambda a=e: rest)()` wrappers, and statement
/// `if`s become conditional expressions.
pub fn to_lambda(f: &FuncDef) -> Result<Expr, NormalizeError> {
    let body = let_block(&f.name, &f.body)?;
    Ok(Expr::Lambda(
        f.params
            .iter()
            .map(|(n, _)| Param {
                name: n.clone(),
                default: None,
            })
            .collect(),
        Box::new(body),
    ))
}

fn let_block(fname: &str, stmts: &[Stmt]) -> Result<Expr, NormalizeError> {
    let Some((first, rest)) = stmts.split_first() else {
        return Err(NormalizeError::MissingReturn(fname.to_string()));
    };
    match first {
        Stmt::Return { value, .. } => Ok(value.clone()),
        Stmt::Assign { name, value, .. } => Ok(let_in(name, value.clone(), let_block(fname, rest)?)),
        Stmt::If {
            guard,
            then,
            otherwise,
            ..
        } => {
            if let Some((name, a, b)) = conditional_def(then, otherwise) {
                let v = Expr::cond(a.clone(), guard.clone(), b.clone());
                return Ok(let_in(name, v, let_block(fname, rest)?));
            }
            Ok(Expr::cond(
                let_block(fname, then)?,
                guard.clone(),
                let_block(fname, otherwise)?,
            ))
        }
    }
}

fn let_in(name: &str, value: Expr, body: Expr) -> Expr {
    Expr::Apply(
        Box::new(Expr::Lambda(
            vec![Param {
                name: name.to_string(),
                default: Some(value),
            }],
            Box::new(body),
        )),
        vec![],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, print_expr};

    fn func(src: &str) -> FuncDef {
        let p = parse_program(&format!("{src}\n# |-\n0\n")).unwrap();
        let f = p.funcs().next().unwrap().clone();
        f
    }

    #[test]
    fn statement_if_becomes_conditional() {
        let f = func(
            "def recPunct(sentence: string) -> string:\n    if sentence[0:4]=='What':\n        return sentence+'?'\n    else:\n        return sentence+'.'\n",
        );
        assert_eq!(
            print_expr(&normalize_to_expression(&f).unwrap()),
            "sentence+'?' if sentence[0:4]=='What' else sentence+'.'"
        );
    }

    #[test]
    fn locals_are_substituted() {
        let f = func("def f(x: int) -> int:\n    a: int = x+1\n    return a*a\n");
        assert_eq!(print_expr(&normalize_to_expression(&f).unwrap()), "(x+1)*(x+1)");
        let f = func("def f(x: int) -> int:\n    return x\n");
        assert_eq!(print_expr(&normalize_to_expression(&f).unwrap()), "x");
    }

    #[test]
    fn conditional_definitions_merge() {
        let f = func(
            "def f(c: bool) -> int:\n    if c:\n        v: int = 1\n    else:\n        v: int = 2\n    return v+v\n",
        );
        assert_eq!(
            print_expr(&normalize_to_expression(&f).unwrap()),
            "(1 if c else 2)+(1 if c else 2)"
        );
        assert_eq!(
            print_expr(&to_lambda(&f).unwrap()),
            "lambda c: (lambda v=(1 if c else 2): v+v)()"
        );
    }

    #[test]
    fn unsafe_local_is_reported_with_guards() {
        let f = func(
            "def f(x: int) -> int:\n    if x>0:\n        a: int = 10//x\n        return a\n    else:\n        return 0\n",
        );
        let mut seen = Vec::new();
        let r = normalize_with(&f, &mut |n, e, g| {
            seen.push((n.to_string(), print_expr(e), g.iter().map(print_expr).collect::<Vec<_>>()));
            Err("division".into())
        });
        assert!(matches!(r, Err(NormalizeError::UnsafeLocal { .. })));
        assert_eq!(seen[0], ("a".into(), "10//x".into(), vec!["x>0".into()]));
    }
}
