//! Guard entailment over linear integer arithmetic.
//!
//! Comparisons between linear integer terms become constraints `t <= 0`.
//! Everything else boolean (float comparisons, calls, boolean variables) is
//! an opaque atom keyed by its printed form, so syntactically matching guards
//! still decide claims. Unsatisfiability is checked clause by clause on the
//! disjunctive normal form with Fourier-Motzkin elimination plus integer
//! tightening, which is sound but incomplete.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::subst::alpha_eq;
use crate::syntax::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entailment {
    Proved,
    Refuted,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("claim `{0}` lies outside the decidable fragment")]
pub struct UnsupportedFragment(pub String);

const MAX_CLAUSES: usize = 4096;
const MAX_CONSTRAINTS: usize = 400;
const MAX_COEFF: i128 = 1 << 62;

/// `sum(coeffs[v] * v) + constant`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Lin {
    coeffs: BTreeMap<String, i128>,
    constant: i128,
}

impl Lin {
    fn constant(c: i128) -> Lin {
        Lin {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    fn var(v: &str) -> Lin {
        Lin {
            coeffs: [(v.to_string(), 1)].into(),
            constant: 0,
        }
    }

    fn scale(mut self, k: i128) -> Option<Lin> {
        for c in self.coeffs.values_mut() {
            *c = c.checked_mul(k)?;
        }
        self.constant = self.constant.checked_mul(k)?;
        Some(self)
    }

    fn add(mut self, other: &Lin) -> Option<Lin> {
        for (v, c) in &other.coeffs {
            let e = self.coeffs.entry(v.clone()).or_insert(0);
            *e = e.checked_add(*c)?;
        }
        self.coeffs.retain(|_, c| *c != 0);
        self.constant = self.constant.checked_add(other.constant)?;
        Some(self)
    }

    fn sub(self, other: &Lin) -> Option<Lin> {
        self.add(&other.clone().scale(-1)?)
    }

    fn too_big(&self) -> bool {
        self.constant.abs() > MAX_COEFF || self.coeffs.values().any(|c| c.abs() > MAX_COEFF)
    }
}

#[derive(Clone, Debug)]
enum F {
    Const(bool),
    /// `lin <= 0`
    Le(Lin),
    Opaque(String),
    And(Vec<F>),
    Or(Vec<F>),
    Not(Box<F>),
}

struct Builder<'a> {
    is_int: &'a dyn Fn(&str) -> bool,
    opaque_seen: bool,
}

impl Builder<'_> {
    fn lin(&self, e: &Expr) -> Option<Lin> {
        match e {
            Expr::Int(n) => Some(Lin::constant(*n as i128)),
            Expr::Var(v) if (self.is_int)(v) => Some(Lin::var(v)),
            Expr::Unary(UnOp::Neg, x) => self.lin(x)?.scale(-1),
            Expr::Binary(BinOp::Add, l, r) => self.lin(l)?.add(&self.lin(r)?),
            Expr::Binary(BinOp::Sub, l, r) => self.lin(l)?.sub(&self.lin(r)?),
            Expr::Binary(BinOp::Mul, l, r) => {
                let (a, b) = (self.lin(l)?, self.lin(r)?);
                if a.coeffs.is_empty() {
                    b.scale(a.constant)
                } else if b.coeffs.is_empty() {
                    a.scale(b.constant)
                } else {
                    None
                }
            }
            _ => None,
        }
        .filter(|l| !l.too_big())
    }

    fn opaque(&mut self, e: &Expr) -> F {
        self.opaque_seen = true;
        F::Opaque(print_expr(e))
    }

    fn formula(&mut self, e: &Expr) -> F {
        match e {
            Expr::Bool(b) => F::Const(*b),
            Expr::Unary(UnOp::Not, x) => F::Not(Box::new(self.formula(x))),
            Expr::Binary(BinOp::And, l, r) => F::And(vec![self.formula(l), self.formula(r)]),
            Expr::Binary(BinOp::Or, l, r) => F::Or(vec![self.formula(l), self.formula(r)]),
            Expr::Cond(t, g, x) => {
                let g = self.formula(g);
                F::Or(vec![
                    F::And(vec![g.clone(), self.formula(t)]),
                    F::And(vec![F::Not(Box::new(g)), self.formula(x)]),
                ])
            }
            Expr::Binary(op, ..) if op.is_comparison() => {
                if let Some(split) = lift_cond(e) {
                    return self.formula(&split);
                }
                let Expr::Binary(op, l, r) = e else { unreachable!() };
                match (self.lin(l), self.lin(r)) {
                    (Some(a), Some(b)) => self.compare(*op, a, b).unwrap_or_else(|| self.opaque(e)),
                    _ => self.opaque_comparison(*op, l, r),
                }
            }
            _ => self.opaque(e),
        }
    }

    fn compare(&self, op: BinOp, a: Lin, b: Lin) -> Option<F> {
        let one = Lin::constant(1);
        Some(match op {
            BinOp::Le => F::Le(a.sub(&b)?),
            BinOp::Lt => F::Le(a.sub(&b)?.add(&one)?),
            BinOp::Ge => F::Le(b.sub(&a)?),
            BinOp::Gt => F::Le(b.sub(&a)?.add(&one)?),
            BinOp::Eq => F::And(vec![F::Le(a.clone().sub(&b)?), F::Le(b.sub(&a)?)]),
            BinOp::Ne => F::Or(vec![
                F::Le(a.clone().sub(&b)?.add(&one)?),
                F::Le(b.sub(&a)?.add(&one)?),
            ]),
            _ => return None,
        })
    }

    /// Keys non-linear comparisons so that `a>b`, `b<a` and `not a<=b`
    /// share one atom.
    fn opaque_comparison(&mut self, op: BinOp, l: &Expr, r: &Expr) -> F {
        let atom = |s: &mut Self, op, l: &Expr, r: &Expr| {
            s.opaque(&Expr::binary(op, l.clone(), r.clone()))
        };
        match op {
            BinOp::Eq => atom(self, BinOp::Eq, l, r),
            BinOp::Ne => F::Not(Box::new(atom(self, BinOp::Eq, l, r))),
            BinOp::Lt => atom(self, BinOp::Lt, l, r),
            BinOp::Gt => atom(self, BinOp::Lt, r, l),
            BinOp::Le => F::Not(Box::new(atom(self, BinOp::Lt, r, l))),
            BinOp::Ge => F::Not(Box::new(atom(self, BinOp::Lt, l, r))),
            _ => unreachable!("not a comparison"),
        }
    }
}

/// Finds a conditional among the arithmetic operands of a comparison and
/// hoists it: `(a if g else b) > 0` becomes `(a>0 if g else b>0)`.
fn lift_cond(e: &Expr) -> Option<Expr> {
    fn find(e: &Expr) -> Option<(Expr, Expr, Expr)> {
        match e {
            Expr::Cond(t, g, x) => Some(((**t).clone(), (**g).clone(), (**x).clone())),
            Expr::Unary(UnOp::Neg, x) => find(x),
            Expr::Binary(op, l, r) if op.is_arithmetic() || op.is_comparison() => {
                find(l).or_else(|| find(r))
            }
            _ => None,
        }
    }
    fn plug(e: &Expr, with: &Expr) -> Expr {
        match e {
            Expr::Cond(..) => with.clone(),
            Expr::Unary(UnOp::Neg, x) => Expr::Unary(UnOp::Neg, Box::new(plug(x, with))),
            Expr::Binary(op, l, r) if op.is_arithmetic() || op.is_comparison() => {
                if find(l).is_some() {
                    Expr::binary(*op, plug(l, with), (**r).clone())
                } else {
                    Expr::binary(*op, (**l).clone(), plug(r, with))
                }
            }
            _ => e.clone(),
        }
    }
    let (t, g, x) = find(e)?;
    Some(Expr::cond(plug(e, &t), g, plug(e, &x)))
}

/// A conjunction of literals.
#[derive(Clone, Debug, Default)]
struct Clause {
    lins: Vec<Lin>,
    pos: BTreeSet<String>,
    neg: BTreeSet<String>,
}

impl Clause {
    fn merge(&self, other: &Clause) -> Clause {
        let mut c = self.clone();
        c.lins.extend(other.lins.iter().cloned());
        c.pos.extend(other.pos.iter().cloned());
        c.neg.extend(other.neg.iter().cloned());
        c
    }
}

/// Disjunction of clauses; `None` when the expansion exceeds the cap.
fn dnf(f: &F, positive: bool) -> Option<Vec<Clause>> {
    Some(match (f, positive) {
        (F::Const(b), p) => {
            if *b == p {
                vec![Clause::default()]
            } else {
                vec![]
            }
        }
        (F::Le(l), true) => vec![Clause {
            lins: vec![l.clone()],
            ..Clause::default()
        }],
        // not (t <= 0)  <=>  -t + 1 <= 0
        (F::Le(l), false) => vec![Clause {
            lins: vec![l.clone().scale(-1)?.add(&Lin::constant(1))?],
            ..Clause::default()
        }],
        (F::Opaque(k), true) => vec![Clause {
            pos: [k.clone()].into(),
            ..Clause::default()
        }],
        (F::Opaque(k), false) => vec![Clause {
            neg: [k.clone()].into(),
            ..Clause::default()
        }],
        (F::Not(x), p) => dnf(x, !p)?,
        (F::And(xs), true) | (F::Or(xs), false) => {
            let mut acc = vec![Clause::default()];
            for x in xs {
                let d = dnf(x, positive)?;
                let mut next = Vec::new();
                for a in &acc {
                    for b in &d {
                        next.push(a.merge(b));
                        if next.len() > MAX_CLAUSES {
                            return None;
                        }
                    }
                }
                acc = next;
            }
            acc
        }
        (F::Or(xs), true) | (F::And(xs), false) => {
            let mut acc = Vec::new();
            for x in xs {
                acc.extend(dnf(x, positive)?);
                if acc.len() > MAX_CLAUSES {
                    return None;
                }
            }
            acc
        }
    })
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    let q = a / b;
    if a % b != 0 && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

/// Divides by the coefficient gcd, rounding the constant up (valid over the
/// integers). `Err(())` if the constraint is a false constant.
fn tighten(mut l: Lin) -> Result<Option<Lin>, ()> {
    if l.coeffs.is_empty() {
        return if l.constant <= 0 { Ok(None) } else { Err(()) };
    }
    let g = l.coeffs.values().fold(0, |g, c| gcd(g, *c));
    if g > 1 {
        for c in l.coeffs.values_mut() {
            *c /= g;
        }
        l.constant = div_ceil(l.constant, g);
    }
    Ok(Some(l))
}

/// `Some(true)` if the constraints have no integer solution, `Some(false)`
/// if the real shadow is satisfiable, `None` if the work cap was hit.
fn lin_unsat(cs: Vec<Lin>) -> Option<bool> {
    let mut cur: BTreeSet<Lin> = BTreeSet::new();
    for c in cs {
        match tighten(c) {
            Err(()) => return Some(true),
            Ok(Some(c)) => {
                cur.insert(c);
            }
            Ok(None) => {}
        }
    }
    loop {
        let var = match cur.iter().flat_map(|c| c.coeffs.keys()).next() {
            Some(v) => v.clone(),
            None => return Some(false),
        };
        let (mut lower, mut upper, mut rest) = (Vec::new(), Vec::new(), BTreeSet::new());
        for c in cur {
            match c.coeffs.get(&var).copied() {
                Some(a) if a > 0 => upper.push((a, c)),
                Some(a) => lower.push((-a, c)),
                None => {
                    rest.insert(c);
                }
            }
        }
        for (a_up, up) in &upper {
            for (a_lo, lo) in &lower {
                let combined = up.clone().scale(*a_lo)?.add(&lo.clone().scale(*a_up)?)?;
                if combined.too_big() {
                    return None;
                }
                match tighten(combined) {
                    Err(()) => return Some(true),
                    Ok(Some(c)) => {
                        rest.insert(c);
                    }
                    Ok(None) => {}
                }
                if rest.len() > MAX_CONSTRAINTS {
                    return None;
                }
            }
        }
        cur = rest;
    }
}

/// `Some(true)` when provably unsatisfiable, `Some(false)` when some clause
/// survives, `None` on resource limits.
fn unsat(f: &F) -> Option<bool> {
    let clauses = dnf(f, true)?;
    let mut gave_up = false;
    for c in clauses {
        if c.pos.intersection(&c.neg).next().is_some() {
            continue;
        }
        match lin_unsat(c.lins) {
            Some(true) => {}
            Some(false) => return Some(false),
            None => gave_up = true,
        }
    }
    if gave_up {
        None
    } else {
        Some(true)
    }
}

/// Decides whether `guards` force `claim` true (proved) or false (refuted).
/// `is_int` tells which variables range over the integers.
pub fn entails(
    guards: &[Expr],
    claim: &Expr,
    is_int: &dyn Fn(&str) -> bool,
) -> Result<Entailment, UnsupportedFragment> {
    for g in guards {
        if alpha_eq(g, claim) {
            return Ok(Entailment::Proved);
        }
        if alpha_eq(g, &Expr::not(claim.clone())) || alpha_eq(&Expr::not(g.clone()), claim) {
            return Ok(Entailment::Refuted);
        }
    }
    let mut b = Builder {
        is_int,
        opaque_seen: false,
    };
    let ctx = F::And(guards.iter().map(|g| b.formula(g)).collect());
    b.opaque_seen = false;
    let c = b.formula(claim);
    let claim_opaque = b.opaque_seen;
    let with_neg = F::And(vec![ctx.clone(), F::Not(Box::new(c.clone()))]);
    if unsat(&with_neg) == Some(true) {
        return Ok(Entailment::Proved);
    }
    let with_claim = F::And(vec![ctx, c]);
    if unsat(&with_claim) == Some(true) {
        return Ok(Entailment::Refuted);
    }
    if claim_opaque {
        Err(UnsupportedFragment(print_expr(claim)))
    } else {
        Ok(Entailment::Unknown)
    }
}

/// Same as [`entails`], with unsupported claims reported as unknown.
pub fn decide(guards: &[Expr], claim: &Expr, is_int: &dyn Fn(&str) -> bool) -> Entailment {
    entails(guards, claim, is_int).unwrap_or(Entailment::Unknown)
}

/// If the guards force `var` to a single integer, that value.
pub fn forced_value(guards: &[Expr], var: &str, is_int: &dyn Fn(&str) -> bool) -> Option<i64> {
    if !is_int(var) {
        return None;
    }
    // candidate values come from equalities written in the guards
    let mut cands = BTreeSet::new();
    for g in guards {
        g.walk(&mut |e| {
            if let Expr::Binary(BinOp::Eq, l, r) = e {
                for (a, b) in [(l, r), (r, l)] {
                    if matches!(&**a, Expr::Var(v) if v == var) {
                        if let Expr::Int(n) = &**b {
                            cands.insert(*n);
                        }
                    }
                }
            }
        });
    }
    cands.into_iter().find(|n| {
        let claim = Expr::binary(BinOp::Eq, Expr::var(var), Expr::Int(*n));
        decide(guards, &claim, is_int) == Entailment::Proved
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(_: &str) -> bool {
        true
    }

    fn check(guards: &[&str], claim: &str) -> Result<Entailment, UnsupportedFragment> {
        let gs: Vec<Expr> = guards.iter().map(|g| parse_expr(g).unwrap()).collect();
        entails(&gs, &parse_expr(claim).unwrap(), &ints)
    }

    #[test]
    fn integer_tightening() {
        assert_eq!(check(&["y>0", "not y==1"], "y>1"), Ok(Entailment::Proved));
        assert_eq!(check(&["y>0", "not y==1"], "y-1>0"), Ok(Entailment::Proved));
        assert_eq!(check(&[], "y>y-1"), Ok(Entailment::Proved));
        assert_eq!(check(&["y>0"], "y>1"), Ok(Entailment::Unknown));
    }

    #[test]
    fn refutation() {
        assert_eq!(check(&[], "y>y"), Ok(Entailment::Refuted));
        assert_eq!(check(&[], "y>y+1"), Ok(Entailment::Refuted));
        assert_eq!(check(&["x<3"], "x>5"), Ok(Entailment::Refuted));
        assert_eq!(check(&["2*x==1"], "True"), Ok(Entailment::Proved));
        assert_eq!(check(&["2*x==1"], "False"), Ok(Entailment::Proved));
    }

    #[test]
    fn opaque_atoms_match_syntactically() {
        let floats = |_: &str| false;
        let g = parse_expr("not (a<0 and not float.is_integer(b))").unwrap();
        assert_eq!(entails(std::slice::from_ref(&g), &g, &floats), Ok(Entailment::Proved));
        assert_eq!(
            entails(&[parse_expr("a>b").unwrap()], &parse_expr("b<a").unwrap(), &floats),
            Ok(Entailment::Proved)
        );
        assert!(entails(&[], &parse_expr("a*a>=0").unwrap(), &ints).is_err());
    }

    #[test]
    fn forced_values() {
        let gs = [parse_expr("y==1").unwrap()];
        assert_eq!(forced_value(&gs, "y", &ints), Some(1));
        assert_eq!(forced_value(&[], "y", &ints), None);
    }
}
