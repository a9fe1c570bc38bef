//! Relation actions implemented in code rather than by inference rules.
//!
//! An action sees the premise with the current substitution applied and
//! either fails with a message or returns terms to unify with some of its
//! arguments, which is how it binds output metavariables.

use crate::snm::context::{decompose, recompose, EvalContext};
use crate::snm::script::parse_line;
use crate::snm::Trace;
use crate::syntax::Expr;

use super::term::{Judgment, Term};

pub const BUILTIN_ACTIONS: [&str; 4] = ["ctx-lookup", "decompose", "recompose", "snm-rewrite"];

/// What actions may consult beyond the premise itself.
#[derive(Clone, Debug, Default)]
pub struct ActionEnv {
    /// Program and settings for `snm-rewrite`; its own steps are ignored.
    pub snm: Option<Trace>,
}

pub(super) type Outputs = Vec<(usize, Term)>;

pub(super) fn run(action: &str, j: &Judgment, env: &ActionEnv) -> Result<Outputs, String> {
    match action {
        "ctx-lookup" if matches!(j.args.first(), Some(Term::Meta(_))) => ctx_search(&j.args),
        "ctx-lookup" => ctx_lookup(&j.args).map(|()| Vec::new()),
        "decompose" => decompose_action(&j.args),
        "recompose" => recompose_action(&j.args),
        "snm-rewrite" => snm_rewrite(&j.args, env),
        other => Err(format!("unknown builtin action '{other}'")),
    }
}

fn arity(args: &[Term], n: usize) -> Result<(), String> {
    if args.len() == n {
        Ok(())
    } else {
        Err(format!("expected {n} arguments, found {}", args.len()))
    }
}

fn closed<'a>(t: &'a Term, what: &str) -> Result<&'a Term, String> {
    if t.is_closed() {
        Ok(t)
    } else {
        Err(format!("{what} {t} is not determined yet"))
    }
}

fn ctx_lookup(args: &[Term]) -> Result<(), String> {
    arity(args, 3)?;
    let Term::App(x, xa) = closed(&args[0], "hypothesis name")? else {
        return Err(format!("{} is not a hypothesis name", args[0]));
    };
    if !xa.is_empty() {
        return Err(format!("{} is not a hypothesis name", args[0]));
    }
    let p = closed(&args[1], "proposition")?;
    let mut g = &args[2];
    loop {
        match g {
            Term::App(n, a) if n == "GCons" && a.len() == 3 => {
                if matches!(&a[0], Term::App(y, ya) if y == x && ya.is_empty()) {
                    return if &a[1] == p {
                        Ok(())
                    } else {
                        Err("Proposition does not match".into())
                    };
                }
                g = &a[2];
            }
            Term::App(n, a) if n == "GNil" && a.is_empty() => return Err(format!("Hypothesis not found: {x}")),
            other => return Err(format!("context {other} is not determined yet")),
        }
    }
}

/// IsIn(X, P, G) with X undetermined: X names the innermost hypothesis of P.
fn ctx_search(args: &[Term]) -> Result<Outputs, String> {
    arity(args, 3)?;
    let p = closed(&args[1], "proposition")?;
    let mut g = &args[2];
    loop {
        match g {
            Term::App(n, a) if n == "GCons" && a.len() == 3 => {
                if &a[1] == p {
                    return Ok(vec![(0, a[0].clone())]);
                }
                g = &a[2];
            }
            Term::App(n, a) if n == "GNil" && a.is_empty() => return Err(format!("no hypothesis proves {p}")),
            other => return Err(format!("context {other} is not determined yet")),
        }
    }
}

fn code<'a>(t: &'a Term, what: &str) -> Result<&'a Expr, String> {
    match closed(t, what)? {
        Term::Code(e) => Ok(e),
        other => Err(format!("{what} {other} is not an expression")),
    }
}

/// Decompose(E, CTX, PATTERN): CTX is E with a hole where the first
/// sub-expression matching PATTERN was.
fn decompose_action(args: &[Term]) -> Result<Outputs, String> {
    arity(args, 3)?;
    let e = code(&args[0], "expression")?;
    let Term::Code(pat) = &args[2] else {
        return Err(format!("pattern {} is not an expression", args[2]));
    };
    let d = decompose(e, pat).map_err(|m| m.to_string())?;
    Ok(vec![(1, Term::Code(d.context.to_expr())), (2, Term::Code(d.matched))])
}

/// Recompose(CTX, X, OUT): OUT is CTX with X in the hole.
fn recompose_action(args: &[Term]) -> Result<Outputs, String> {
    arity(args, 3)?;
    let c = code(&args[0], "context")?;
    let ctx = EvalContext::from_expr(c).ok_or_else(|| format!("{} does not have exactly one hole", args[0]))?;
    let x = code(&args[1], "expression")?;
    Ok(vec![(2, Term::Code(recompose(&ctx, x)))])
}

/// The run so far: `sig` or `run(START, then(...then(nil, A1)..., Ak))`.
fn history(sig: &Term) -> Result<Option<(Expr, Vec<String>)>, String> {
    match sig {
        Term::App(n, a) if n == "sig" && a.is_empty() => Ok(None),
        Term::App(n, a) if n == "run" && a.len() == 2 => {
            let Term::Code(start) = &a[0] else {
                return Err(format!("{sig} is not a run"));
            };
            let mut apps = Vec::new();
            let mut h = &a[1];
            loop {
                match h {
                    Term::App(n, x) if n == "nil" && x.is_empty() => break,
                    Term::App(n, x) if n == "then" && x.len() == 2 => {
                        let Term::Text(s) = &x[1] else {
                            return Err(format!("{h} is not a history"));
                        };
                        apps.push(s.clone());
                        h = &x[0];
                    }
                    _ => return Err(format!("{h} is not a history")),
                }
            }
            apps.reverse();
            Ok(Some((start.clone(), apps)))
        }
        _ => Err(format!("{sig} is not a signature")),
    }
}

pub(super) fn extend_history(sig: &Term, start: &Expr, line: &str) -> Term {
    let prev = match sig {
        Term::App(n, a) if n == "run" && a.len() == 2 => a[1].clone(),
        _ => Term::atom("nil"),
    };
    Term::App(
        "run".into(),
        vec![Term::Code(start.clone()), Term::App("then".into(), vec![prev, Term::Text(line.into())])],
    )
}

/// Rewrite(SIG, E, RULE, ARGS, EOUT, SIG2): applying RULE at ARGS (`@path
/// k=v ...`) to E, after the steps recorded in SIG, gives EOUT.
fn snm_rewrite(args: &[Term], env: &ActionEnv) -> Result<Outputs, String> {
    arity(args, 6)?;
    let base = env.snm.as_ref().ok_or("no program was supplied for snm-rewrite")?;
    let sig = closed(&args[0], "signature")?;
    let e = code(&args[1], "expression")?;
    let Term::Text(rule) = closed(&args[2], "rule")? else {
        return Err(format!("{} is not a rule name", args[2]));
    };
    let Term::Text(at) = closed(&args[3], "rule arguments")? else {
        return Err(format!("{} is not a rule argument list", args[3]));
    };
    let (start, done) = history(sig)?.unwrap_or_else(|| (e.clone(), Vec::new()));
    let mut t = base.restart(start.clone());
    for line in &done {
        let app = parse_line(line)?.ok_or("empty step in history")?;
        t.apply(&app).map_err(|err| err.to_string())?;
    }
    if t.current() != e {
        return Err(format!(
            "{} is not where the recorded steps lead",
            crate::syntax::print_expr(e)
        ));
    }
    let line = format!("{rule} {at}");
    let app = parse_line(&line)?.ok_or("missing rule")?;
    t.apply(&app).map_err(|err| err.to_string())?;
    Ok(vec![
        (4, Term::Code(t.current().clone())),
        (5, extend_history(sig, &start, line.trim())),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(items: &[(&str, &str)]) -> Term {
        items.iter().rev().fold(Term::atom("GNil"), |g, (x, p)| {
            Term::App("GCons".into(), vec![Term::atom(x), Term::atom(p), g])
        })
    }

    #[test]
    fn lookup_messages() {
        let g = ctx(&[("x", "p"), ("y", "q")]);
        assert_eq!(ctx_lookup(&[Term::atom("y"), Term::atom("q"), g.clone()]), Ok(()));
        let g1 = ctx(&[("x", "p")]);
        assert_eq!(
            ctx_lookup(&[Term::atom("x"), Term::atom("q"), g1.clone()]),
            Err("Proposition does not match".into())
        );
        assert_eq!(
            ctx_lookup(&[Term::atom("z"), Term::atom("p"), g1]),
            Err("Hypothesis not found: z".into())
        );
    }
}
