//! Evaluation contexts: an expression with one hole, plus pattern matching
//! with metavariables (capitalized names) to find the sub-expression to plug.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::subst::{alpha_eq, all_paths, get_at, replace_at, Path};
use crate::syntax::*;

/// Printed in place of the hole.
pub const HOLE: &str = "_";

#[derive(Clone, Debug, PartialEq, Error)]
#[error("no sub-expression of {expr} matches {pattern}")]
pub struct NoMatch {
    pub expr: String,
    pub pattern: String,
}

/// `root` with a hole at `hole`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalContext {
    pub root: Expr,
    #[serde(with = "super::path_serde")]
    pub hole: Path,
}

impl EvalContext {
    pub fn hole() -> EvalContext {
        EvalContext {
            root: Expr::var(HOLE),
            hole: Vec::new(),
        }
    }

    /// The context as an expression with `_` at the hole.
    pub fn to_expr(&self) -> Expr {
        replace_at(&self.root, &self.hole, Expr::var(HOLE)).expect("hole path is valid")
    }

    /// Reads a context back from an expression containing exactly one `_`.
    pub fn from_expr(e: &Expr) -> Option<EvalContext> {
        let holes: Vec<Path> = all_paths(e)
            .into_iter()
            .filter(|p| matches!(get_at(e, p), Some(Expr::Var(v)) if v == HOLE))
            .collect();
        match holes.as_slice() {
            [p] => Some(EvalContext {
                root: e.clone(),
                hole: p.clone(),
            }),
            _ => None,
        }
    }
}

impl fmt::Display for EvalContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(&self.to_expr()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub context: EvalContext,
    pub matched: Expr,
    pub bindings: BTreeMap<String, Expr>,
}

pub fn is_metavar(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

/// Matches `e` against `pat`, extending `binds`. Repeated metavariables must
/// bind alpha-equal expressions.
pub fn match_pattern(pat: &Expr, e: &Expr, binds: &mut BTreeMap<String, Expr>) -> bool {
    match (pat, e) {
        (Expr::Var(m), _) if is_metavar(m) => match binds.get(m) {
            Some(prev) => alpha_eq(prev, e),
            None => {
                binds.insert(m.clone(), e.clone());
                true
            }
        },
        (Expr::Var(a), Expr::Var(b)) => a == b,
        (Expr::Int(a), Expr::Int(b)) => a == b,
        (Expr::Float(a), Expr::Float(b)) => a.to_bits() == b.to_bits(),
        (Expr::Bool(a), Expr::Bool(b)) => a == b,
        (Expr::Str(a), Expr::Str(b)) => a == b,
        (Expr::Error, Expr::Error) => true,
        (Expr::Unary(o1, x), Expr::Unary(o2, y)) => o1 == o2 && match_pattern(x, y, binds),
        (Expr::Binary(o1, l1, r1), Expr::Binary(o2, l2, r2)) => {
            o1 == o2 && match_pattern(l1, l2, binds) && match_pattern(r1, r2, binds)
        }
        (Expr::Slice(x, a1, b1), Expr::Slice(y, a2, b2)) => a1 == a2 && b1 == b2 && match_pattern(x, y, binds),
        (Expr::Call(f, xs), Expr::Call(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_pattern(x, y, binds))
        }
        (Expr::Apply(f, xs), Expr::Apply(g, ys)) => {
            xs.len() == ys.len()
                && match_pattern(f, g, binds)
                && xs.iter().zip(ys).all(|(x, y)| match_pattern(x, y, binds))
        }
        (Expr::Cond(t1, g1, e1), Expr::Cond(t2, g2, e2)) => {
            match_pattern(t1, t2, binds) && match_pattern(g1, g2, binds) && match_pattern(e1, e2, binds)
        }
        (Expr::Lambda(..), Expr::Lambda(..)) => alpha_eq(pat, e),
        _ => false,
    }
}

/// The first sub-expression (pre-order) matching `pattern`.
pub fn decompose(e: &Expr, pattern: &Expr) -> Result<Decomposition, NoMatch> {
    for path in all_paths(e) {
        let sub = get_at(e, &path).expect("path from all_paths");
        let mut bindings = BTreeMap::new();
        if match_pattern(pattern, sub, &mut bindings) {
            return Ok(Decomposition {
                context: EvalContext {
                    root: e.clone(),
                    hole: path,
                },
                matched: sub.clone(),
                bindings,
            });
        }
    }
    Err(NoMatch {
        expr: print_expr(e),
        pattern: print_expr(pattern),
    })
}

pub fn recompose(ctx: &EvalContext, plug: &Expr) -> Expr {
    replace_at(&ctx.root, &ctx.hole, plug.clone()).expect("hole path is valid")
}

/// Replaces metavariables in `pat` by their bindings.
pub fn instantiate(pat: &Expr, binds: &BTreeMap<String, Expr>) -> Expr {
    match pat {
        Expr::Var(m) if is_metavar(m) => binds.get(m).cloned().unwrap_or_else(|| pat.clone()),
        _ => {
            let mut out = pat.clone();
            for (slot, orig) in out.children_mut().into_iter().zip(pat.children()) {
                *slot = instantiate(orig, binds);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn if_true_context() {
        let e = parse_expr("1 + (0 if True else 100)").unwrap();
        let pat = parse_expr("E1 if True else E2").unwrap();
        let d = decompose(&e, &pat).unwrap();
        assert_eq!(d.context.to_string(), "1+_");
        assert_eq!(print_expr(&d.matched), "0 if True else 100");
        assert_eq!(print_expr(&recompose(&d.context, &d.bindings["E1"])), "1+0");
        assert_eq!(recompose(&d.context, &d.matched), e);
    }

    #[test]
    fn whole_match_and_failure() {
        let e = parse_expr("a if True else b").unwrap();
        let d = decompose(&e, &parse_expr("X if True else Y").unwrap()).unwrap();
        assert_eq!(d.context.hole, Vec::<usize>::new());
        assert_eq!(d.context.to_string(), "_");
        assert!(decompose(&e, &parse_expr("X if False else Y").unwrap()).is_err());
        let ctx = EvalContext::from_expr(&parse_expr("1+_").unwrap()).unwrap();
        assert_eq!(ctx.hole, vec![1]);
    }
}
