//! Free variables, capture-avoiding substitution, alpha-equivalence, and
//! path addressing over [`Expr`].
//!
//! A call `f(args)` counts as an occurrence of the name `f`, so substituting a
//! lambda for a function-typed parameter turns the call into an application.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;

pub fn free_vars(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(e, &mut Vec::new(), &mut out);
    out
}

fn collect_free(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match e {
        Expr::Var(v) => {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        }
        Expr::Call(f, args) => {
            if !bound.contains(f) {
                out.insert(f.clone());
            }
            for a in args {
                collect_free(a, bound, out);
            }
        }
        Expr::Lambda(params, body) => {
            for p in params {
                if let Some(d) = &p.default {
                    collect_free(d, bound, out);
                }
            }
            let n = bound.len();
            bound.extend(params.iter().map(|p| p.name.clone()));
            collect_free(body, bound, out);
            bound.truncate(n);
        }
        _ => {
            for c in e.children() {
                collect_free(c, bound, out);
            }
        }
    }
}

/// Every name mentioned anywhere, bound or free.
pub fn all_names(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    e.walk(&mut |x| match x {
        Expr::Var(v) | Expr::Call(v, _) => {
            out.insert(v.clone());
        }
        Expr::Lambda(ps, _) => {
            for p in ps {
                out.insert(p.name.clone());
            }
        }
        _ => {}
    });
    out
}

pub fn occurs_free(e: &Expr, name: &str) -> bool {
    free_vars(e).contains(name)
}

/// Number of free occurrences of `name`.
pub fn count_free(e: &Expr, name: &str) -> usize {
    match e {
        Expr::Var(v) => usize::from(v == name),
        Expr::Call(f, args) => {
            usize::from(f == name) + args.iter().map(|a| count_free(a, name)).sum::<usize>()
        }
        Expr::Lambda(params, body) => {
            let d: usize = params
                .iter()
                .filter_map(|p| p.default.as_ref())
                .map(|x| count_free(x, name))
                .sum();
            if params.iter().any(|p| p.name == name) {
                d
            } else {
                d + count_free(body, name)
            }
        }
        _ => e.children().into_iter().map(|c| count_free(c, name)).sum(),
    }
}

/// `base_k` for the least `k >= 1` not in `avoid`. An existing `_k` suffix is
/// replaced rather than stacked.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = match base.rsplit_once('_') {
        Some((s, k)) if !s.is_empty() && !k.is_empty() && k.chars().all(|c| c.is_ascii_digit()) => s,
        _ => base,
    };
    (1..)
        .map(|k| format!("{stem}_{k}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded")
}

/// Simultaneous capture-avoiding substitution of free names.
pub fn subst_many(e: &Expr, map: &BTreeMap<String, Expr>) -> Expr {
    if map.is_empty() {
        return e.clone();
    }
    match e {
        Expr::Var(v) => map.get(v).cloned().unwrap_or_else(|| e.clone()),
        Expr::Call(f, args) => {
            let args: Vec<Expr> = args.iter().map(|a| subst_many(a, map)).collect();
            match map.get(f) {
                None => Expr::Call(f.clone(), args),
                Some(Expr::Var(g)) => Expr::Call(g.clone(), args),
                Some(other) => Expr::Apply(Box::new(other.clone()), args),
            }
        }
        Expr::Lambda(params, body) => {
            let mut params: Vec<Param> = params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    default: p.default.as_ref().map(|d| subst_many(d, map)),
                })
                .collect();
            let mut inner: BTreeMap<String, Expr> = map
                .iter()
                .filter(|(k, _)| !params.iter().any(|p| &p.name == *k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            if inner.is_empty() {
                return Expr::Lambda(params, body.clone());
            }
            let incoming: BTreeSet<String> = inner
                .iter()
                .filter(|(k, _)| occurs_free(body, k))
                .flat_map(|(_, v)| free_vars(v))
                .collect();
            let mut body = (**body).clone();
            let mut avoid = incoming.clone();
            avoid.extend(all_names(&body));
            avoid.extend(inner.keys().cloned());
            for p in params.iter_mut() {
                if incoming.contains(&p.name) {
                    let fresh = fresh_name(&p.name, &avoid);
                    avoid.insert(fresh.clone());
                    body = rename_free(&body, &p.name, &fresh);
                    p.name = fresh;
                }
            }
            inner.retain(|k, _| occurs_free(&body, k));
            Expr::Lambda(params, Box::new(subst_many(&body, &inner)))
        }
        _ => {
            let mut out = e.clone();
            for (slot, orig) in out.children_mut().into_iter().zip(e.children()) {
                *slot = subst_many(orig, map);
            }
            out
        }
    }
}

pub fn subst(e: &Expr, name: &str, value: &Expr) -> Expr {
    let mut m = BTreeMap::new();
    m.insert(name.to_string(), value.clone());
    subst_many(e, &m)
}

pub fn rename_free(e: &Expr, from: &str, to: &str) -> Expr {
    subst(e, from, &Expr::Var(to.to_string()))
}

/// Replace only the `k`-th free occurrence (pre-order) of `name`.
pub fn subst_nth(e: &Expr, name: &str, k: usize, value: &Expr) -> Expr {
    let mut seen = 0;
    subst_nth_inner(e, name, k, value, &mut seen)
}

fn subst_nth_inner(e: &Expr, name: &str, k: usize, value: &Expr, seen: &mut usize) -> Expr {
    match e {
        Expr::Var(v) if v == name => {
            let hit = *seen == k;
            *seen += 1;
            if hit {
                value.clone()
            } else {
                e.clone()
            }
        }
        Expr::Call(f, args) => {
            let hit = f == name && *seen == k;
            if f == name {
                *seen += 1;
            }
            let args: Vec<Expr> = args
                .iter()
                .map(|a| subst_nth_inner(a, name, k, value, seen))
                .collect();
            if hit {
                match value {
                    Expr::Var(g) => Expr::Call(g.clone(), args),
                    other => Expr::Apply(Box::new(other.clone()), args),
                }
            } else {
                Expr::Call(f.clone(), args)
            }
        }
        Expr::Lambda(params, body) => {
            let params2: Vec<Param> = params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    default: p
                        .default
                        .as_ref()
                        .map(|d| subst_nth_inner(d, name, k, value, seen)),
                })
                .collect();
            if params.iter().any(|p| p.name == name) {
                return Expr::Lambda(params2, body.clone());
            }
            let before = *seen;
            let n = count_free(body, name);
            if k >= before && k < before + n {
                let local = k - before;
                *seen += n;
                let body2 = subst_nth_in_lambda(&params2, body, name, local, value);
                return body2;
            }
            *seen += n;
            Expr::Lambda(params2, body.clone())
        }
        _ => {
            let mut out = e.clone();
            for (slot, orig) in out.children_mut().into_iter().zip(e.children()) {
                *slot = subst_nth_inner(orig, name, k, value, seen);
            }
            out
        }
    }
}

fn subst_nth_in_lambda(params: &[Param], body: &Expr, name: &str, k: usize, value: &Expr) -> Expr {
    let fv = free_vars(value);
    let mut params = params.to_vec();
    let mut body = body.clone();
    let mut avoid = fv.clone();
    avoid.extend(all_names(&body));
    avoid.insert(name.to_string());
    for p in params.iter_mut() {
        if fv.contains(&p.name) {
            let fresh = fresh_name(&p.name, &avoid);
            avoid.insert(fresh.clone());
            body = rename_free(&body, &p.name, &fresh);
            p.name = fresh;
        }
    }
    Expr::Lambda(params, Box::new(subst_nth(&body, name, k, value)))
}

/// Structural equality up to consistent renaming of lambda-bound names.
pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    alpha_eq_env(a, b, &mut Vec::new())
}

fn alpha_eq_env(a: &Expr, b: &Expr, env: &mut Vec<(String, String)>) -> bool {
    let name_eq = |x: &str, y: &str, env: &Vec<(String, String)>| {
        for (l, r) in env.iter().rev() {
            if l == x || r == y {
                return l == x && r == y;
            }
        }
        x == y
    };
    match (a, b) {
        (Expr::Var(x), Expr::Var(y)) => name_eq(x, y, env),
        (Expr::Call(f, xs), Expr::Call(g, ys)) => {
            name_eq(f, g, env)
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| alpha_eq_env(x, y, env))
        }
        (Expr::Lambda(ps, bx), Expr::Lambda(qs, by)) => {
            if ps.len() != qs.len() {
                return false;
            }
            for (p, q) in ps.iter().zip(qs) {
                match (&p.default, &q.default) {
                    (None, None) => {}
                    (Some(x), Some(y)) if alpha_eq_env(x, y, env) => {}
                    _ => return false,
                }
            }
            let n = env.len();
            env.extend(ps.iter().zip(qs).map(|(p, q)| (p.name.clone(), q.name.clone())));
            let r = alpha_eq_env(bx, by, env);
            env.truncate(n);
            r
        }
        (Expr::Int(x), Expr::Int(y)) => x == y,
        (Expr::Float(x), Expr::Float(y)) => x.to_bits() == y.to_bits(),
        (Expr::Bool(x), Expr::Bool(y)) => x == y,
        (Expr::Str(x), Expr::Str(y)) => x == y,
        (Expr::Error, Expr::Error) => true,
        (Expr::Unary(o1, x), Expr::Unary(o2, y)) => o1 == o2 && alpha_eq_env(x, y, env),
        (Expr::Binary(o1, l1, r1), Expr::Binary(o2, l2, r2)) => {
            o1 == o2 && alpha_eq_env(l1, l2, env) && alpha_eq_env(r1, r2, env)
        }
        (Expr::Slice(x, a1, b1), Expr::Slice(y, a2, b2)) => {
            a1 == a2 && b1 == b2 && alpha_eq_env(x, y, env)
        }
        (Expr::Apply(f, xs), Expr::Apply(g, ys)) => {
            xs.len() == ys.len()
                && alpha_eq_env(f, g, env)
                && xs.iter().zip(ys).all(|(x, y)| alpha_eq_env(x, y, env))
        }
        (Expr::Cond(t1, g1, e1), Expr::Cond(t2, g2, e2)) => {
            alpha_eq_env(t1, t2, env) && alpha_eq_env(g1, g2, env) && alpha_eq_env(e1, e2, env)
        }
        _ => false,
    }
}

// ---- paths ----------------------------------------------------------------

pub type Path = Vec<usize>;

pub fn get_at<'a>(e: &'a Expr, path: &[usize]) -> Option<&'a Expr> {
    let mut cur = e;
    for &i in path {
        cur = cur.children().into_iter().nth(i)?;
    }
    Some(cur)
}

pub fn get_at_mut<'a>(e: &'a mut Expr, path: &[usize]) -> Option<&'a mut Expr> {
    let mut cur = e;
    for &i in path {
        cur = cur.children_mut().into_iter().nth(i)?;
    }
    Some(cur)
}

/// Copy of `e` with the subtree at `path` replaced.
pub fn replace_at(e: &Expr, path: &[usize], new: Expr) -> Option<Expr> {
    let mut out = e.clone();
    *get_at_mut(&mut out, path)? = new;
    Some(out)
}

/// All paths in pre-order.
pub fn all_paths(e: &Expr) -> Vec<Path> {
    let mut out = Vec::new();
    fn go(e: &Expr, cur: &mut Path, out: &mut Vec<Path>) {
        out.push(cur.clone());
        for (i, c) in e.children().into_iter().enumerate() {
            cur.push(i);
            go(c, cur, out);
            cur.pop();
        }
    }
    go(e, &mut Vec::new(), &mut out);
    out
}

pub fn format_path(p: &[usize]) -> String {
    if p.is_empty() {
        return "root".into();
    }
    p.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
}

pub fn parse_path(s: &str) -> Option<Path> {
    let s = s.trim();
    if s.is_empty() || s == "root" || s == "." {
        return Some(Vec::new());
    }
    s.split('.').map(|p| p.parse().ok()).collect()
}

/// Names bound by lambdas strictly above `path`.
pub fn binders_above(e: &Expr, path: &[usize]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut cur = e;
    for &i in path {
        if let Expr::Lambda(ps, _) = cur {
            let n_defaults = ps.iter().filter(|p| p.default.is_some()).count();
            if i == n_defaults {
                out.extend(ps.iter().map(|p| p.name.clone()));
            }
        }
        match cur.children().into_iter().nth(i) {
            Some(c) => cur = c,
            None => break,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_expr, print_expr};

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn substitution_is_capture_avoiding() {
        let e = p("lambda y: x+y");
        let r = subst(&e, "x", &p("y*2"));
        assert_eq!(print_expr(&r), "lambda y_1: y*2+y_1");
    }

    #[test]
    fn bound_names_shadow() {
        let e = p("x+(lambda x: x)(1)");
        assert_eq!(print_expr(&subst(&e, "x", &p("5"))), "5+(lambda x: x)(1)");
    }

    #[test]
    fn call_callee_is_an_occurrence() {
        let e = p("g(3)");
        assert_eq!(print_expr(&subst(&e, "g", &p("lambda n: n+1"))), "(lambda n: n+1)(3)");
        assert_eq!(print_expr(&subst(&e, "g", &p("h"))), "h(3)");
    }

    #[test]
    fn nth_occurrence() {
        let e = p("a*a+a");
        assert_eq!(print_expr(&subst_nth(&e, "a", 1, &p("14"))), "a*14+a");
        assert_eq!(count_free(&e, "a"), 3);
    }

    #[test]
    fn alpha() {
        assert!(alpha_eq(&p("lambda a: a+z"), &p("lambda b: b+z")));
        assert!(!alpha_eq(&p("lambda a: a+z"), &p("lambda z: z+z")));
        assert!(alpha_eq(&p("(x**y)"), &p("x**y")));
    }

    #[test]
    fn fresh_names_use_subscripts() {
        let avoid: BTreeSet<String> = ["b".to_string(), "b_1".to_string()].into();
        assert_eq!(fresh_name("b", &avoid), "b_2");
        assert_eq!(fresh_name("b_1", &avoid), "b_2");
    }

    #[test]
    fn paths() {
        let e = p("1+(0 if True else 100)");
        assert_eq!(get_at(&e, &[1, 1]), Some(&Expr::Bool(true)));
        let r = replace_at(&e, &[1], Expr::Int(0)).unwrap();
        assert_eq!(print_expr(&r), "1+0");
        assert_eq!(parse_path("0.2.1"), Some(vec![0, 2, 1]));
        assert_eq!(format_path(&[]), "root");
    }
}
