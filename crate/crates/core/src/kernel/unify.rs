//! First-order unification. Quoted code unifies by pattern matching when one
//! side still contains metavariables, and by alpha-equivalence otherwise.

use std::collections::BTreeMap;

use crate::snm::context::{instantiate, match_pattern};
use crate::syntax::subst::alpha_eq;
use crate::syntax::Expr;

use super::term::{code_metas, Judgment, Subst, Term};

fn code_binds(s: &Subst) -> BTreeMap<String, Expr> {
    s.iter()
        .filter_map(|(k, v)| match v {
            Term::Code(e) => Some((k.clone(), e.clone())),
            _ => None,
        })
        .collect()
}

pub fn apply(t: &Term, s: &Subst) -> Term {
    match t {
        Term::Meta(m) => match s.get(m) {
            Some(v) => apply(v, s),
            None => t.clone(),
        },
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| apply(a, s)).collect()),
        Term::Code(e) => {
            if code_metas(e).is_empty() {
                t.clone()
            } else {
                Term::Code(instantiate(e, &code_binds(s)))
            }
        }
        Term::Text(_) => t.clone(),
    }
}

pub fn apply_judgment(j: &Judgment, s: &Subst) -> Judgment {
    Judgment {
        rel: j.rel.clone(),
        args: j.args.iter().map(|a| apply(a, s)).collect(),
    }
}

fn occurs(m: &str, t: &Term) -> bool {
    let mut ms = Vec::new();
    t.metas(&mut ms);
    ms.iter().any(|x| x == m)
}

/// Extends `s` so that `a` and `b` become equal, or explains why not.
pub fn unify(a: &Term, b: &Term, s: &mut Subst) -> Result<(), String> {
    let a = apply(a, s);
    let b = apply(b, s);
    match (&a, &b) {
        (Term::Meta(x), Term::Meta(y)) if x == y => Ok(()),
        (Term::Meta(x), t) | (t, Term::Meta(x)) => {
            if occurs(x, t) {
                return Err(format!("{x} occurs in {t}"));
            }
            s.insert(x.clone(), t.clone());
            Ok(())
        }
        (Term::App(f, xs), Term::App(g, ys)) => {
            if f != g || xs.len() != ys.len() {
                return Err(format!("{a} does not match {b}"));
            }
            for (x, y) in xs.iter().zip(ys) {
                unify(x, y, s).map_err(|_| format!("{a} does not match {b}"))?;
            }
            Ok(())
        }
        (Term::Code(x), Term::Code(y)) => {
            let (open_x, open_y) = (!code_metas(x).is_empty(), !code_metas(y).is_empty());
            let (pat, e) = match (open_x, open_y) {
                (false, false) => {
                    return if alpha_eq(x, y) {
                        Ok(())
                    } else {
                        Err(format!("{a} does not match {b}"))
                    }
                }
                (true, false) => (x, y),
                (false, true) => (y, x),
                (true, true) => return Err(format!("cannot unify two open code patterns {a} and {b}")),
            };
            let mut binds = BTreeMap::new();
            if !match_pattern(pat, e, &mut binds) {
                return Err(format!("{a} does not match {b}"));
            }
            for (k, v) in binds {
                s.insert(k, Term::Code(v));
            }
            Ok(())
        }
        (Term::Text(x), Term::Text(y)) if x == y => Ok(()),
        _ => Err(format!("{a} does not match {b}")),
    }
}

pub fn unify_judgments(a: &Judgment, b: &Judgment, s: &mut Subst) -> Result<(), String> {
    if a.rel != b.rel || a.args.len() != b.args.len() {
        return Err(format!("{a} does not match {b}"));
    }
    let mut trial = s.clone();
    for (x, y) in a.args.iter().zip(&b.args) {
        if unify(x, y, &mut trial).is_err() {
            return Err(format!("{} does not match {}", apply_judgment(a, s), apply_judgment(b, s)));
        }
    }
    *s = trial;
    Ok(())
}

/// Renames every metavariable `M` of a rule instance to `M_k`.
pub fn rename(t: &Term, k: usize) -> Term {
    match t {
        Term::Meta(m) => Term::Meta(format!("{m}_{k}")),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| rename(a, k)).collect()),
        Term::Code(e) => {
            let binds = code_metas(e)
                .into_iter()
                .map(|m| {
                    let new = Expr::var(&format!("{m}_{k}"));
                    (m, new)
                })
                .collect();
            Term::Code(instantiate(e, &binds))
        }
        Term::Text(_) => t.clone(),
    }
}

pub fn rename_judgment(j: &Judgment, k: usize) -> Judgment {
    Judgment {
        rel: j.rel.clone(),
        args: j.args.iter().map(|a| rename(a, k)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr;

    #[test]
    fn nat_unification() {
        let mut s = Subst::new();
        let pat = Term::App("S".into(), vec![Term::App("S".into(), vec![Term::Meta("N".into())])]);
        unify(&pat, &Term::nat(4), &mut s).unwrap();
        assert_eq!(s["N"], Term::nat(2));
        let mut s = Subst::new();
        assert!(unify(&pat, &Term::nat(1), &mut s).is_err());
    }

    #[test]
    fn code_patterns() {
        let mut s = Subst::new();
        let pat = Term::Code(parse_expr("E1 if True else E2").unwrap());
        let e = Term::Code(parse_expr("0 if True else 100").unwrap());
        unify(&pat, &e, &mut s).unwrap();
        assert_eq!(s["E1"], Term::Code(Expr::Int(0)));
        assert_eq!(apply(&pat, &s), e);
    }
}
