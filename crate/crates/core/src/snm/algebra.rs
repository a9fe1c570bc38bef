//! Polynomial normal form used to justify symbolic `result=` steps.
//!
//! Sums of products of atoms with integer coefficients. An atom is a variable
//! or any sub-expression outside the fragment (kept whole, compared by its
//! printed form). Exponents are linear forms over integer variables, so
//! `x*x**(y-1)` and `x**y` normalize alike.

use std::collections::BTreeMap;

use crate::syntax::*;

/// `c + sum(k_i * v_i)` over integer variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Lin {
    c: i128,
    terms: BTreeMap<String, i128>,
}

impl Lin {
    fn constant(c: i128) -> Lin {
        Lin { c, terms: BTreeMap::new() }
    }

    fn is_zero(&self) -> bool {
        self.c == 0 && self.terms.is_empty()
    }

    fn as_const(&self) -> Option<i128> {
        self.terms.is_empty().then_some(self.c)
    }

    fn add(&self, o: &Lin) -> Lin {
        let mut out = self.clone();
        out.c += o.c;
        for (v, k) in &o.terms {
            *out.terms.entry(v.clone()).or_insert(0) += k;
        }
        out.terms.retain(|_, k| *k != 0);
        out
    }

    fn scale(&self, s: i128) -> Lin {
        if s == 0 {
            return Lin::default();
        }
        Lin {
            c: self.c * s,
            terms: self.terms.iter().map(|(v, k)| (v.clone(), k * s)).collect(),
        }
    }

    fn of(e: &Expr, is_int: &dyn Fn(&str) -> bool) -> Option<Lin> {
        Some(match e {
            Expr::Int(n) => Lin::constant(*n as i128),
            Expr::Var(v) if is_int(v) => Lin {
                c: 0,
                terms: [(v.clone(), 1)].into(),
            },
            Expr::Unary(UnOp::Neg, x) => Lin::of(x, is_int)?.scale(-1),
            Expr::Binary(BinOp::Add, l, r) => Lin::of(l, is_int)?.add(&Lin::of(r, is_int)?),
            Expr::Binary(BinOp::Sub, l, r) => Lin::of(l, is_int)?.add(&Lin::of(r, is_int)?.scale(-1)),
            Expr::Binary(BinOp::Mul, l, r) => {
                let (a, b) = (Lin::of(l, is_int)?, Lin::of(r, is_int)?);
                match (a.as_const(), b.as_const()) {
                    (Some(k), _) => b.scale(k),
                    (_, Some(k)) => a.scale(k),
                    _ => return None,
                }
            }
            _ => return None,
        })
    }

    fn to_expr(&self) -> Expr {
        let mut out: Option<Expr> = None;
        for (v, k) in &self.terms {
            out = Some(add_term(out, *k, Expr::var(v)));
        }
        match out {
            None => Expr::Int(self.c as i64),
            Some(e) if self.c > 0 => Expr::binary(BinOp::Add, e, Expr::Int(self.c as i64)),
            Some(e) if self.c < 0 => Expr::binary(BinOp::Sub, e, Expr::Int(-self.c as i64)),
            Some(e) => e,
        }
    }
}

fn add_term(acc: Option<Expr>, k: i128, base: Expr) -> Expr {
    let mag = k.unsigned_abs();
    let term = if mag == 1 {
        base
    } else {
        Expr::binary(BinOp::Mul, Expr::Int(mag as i64), base)
    };
    match acc {
        None if k < 0 => Expr::Unary(UnOp::Neg, Box::new(term)),
        None => term,
        Some(a) if k < 0 => Expr::binary(BinOp::Sub, a, term),
        Some(a) => Expr::binary(BinOp::Add, a, term),
    }
}

/// Atom key to exponent; zero exponents are dropped.
type Mono = BTreeMap<String, Lin>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Mono, i128>,
    /// Expression behind each atom key.
    atoms: BTreeMap<String, Expr>,
}

impl Eq for Poly {}

const MAX_EXPAND: i128 = 12;

impl Poly {
    fn constant(c: i128) -> Poly {
        let mut p = Poly::default();
        if c != 0 {
            p.terms.insert(Mono::new(), c);
        }
        p
    }

    fn atom(key: String, e: Expr) -> Poly {
        let mut p = Poly::default();
        p.terms.insert([(key.clone(), Lin::constant(1))].into(), 1);
        p.atoms.insert(key, e);
        p
    }

    fn merge_atoms(&mut self, o: &Poly) {
        for (k, v) in &o.atoms {
            self.atoms.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }

    fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        out.merge_atoms(o);
        for (m, c) in &o.terms {
            *out.terms.entry(m.clone()).or_insert(0) += c;
        }
        out.terms.retain(|_, c| *c != 0);
        out
    }

    fn neg(&self) -> Poly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -*c;
        }
        out
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::default();
        out.merge_atoms(self);
        out.merge_atoms(o);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let mut m = m1.clone();
                for (a, e) in m2 {
                    let sum = m.get(a).map_or(e.clone(), |x| x.add(e));
                    if sum.is_zero() {
                        m.remove(a);
                    } else {
                        m.insert(a.clone(), sum);
                    }
                }
                *out.terms.entry(m).or_insert(0) += c1 * c2;
            }
        }
        out.terms.retain(|_, c| *c != 0);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every atom is a plain variable.
    pub fn is_pure(&self) -> bool {
        self.atoms.values().all(|e| matches!(e, Expr::Var(_)))
    }

    pub fn of(e: &Expr, is_int: &dyn Fn(&str) -> bool) -> Poly {
        let opaque = || Poly::atom(print_expr(e), e.clone());
        match e {
            Expr::Int(n) => Poly::constant(*n as i128),
            Expr::Var(v) => Poly::atom(v.clone(), e.clone()),
            Expr::Unary(UnOp::Neg, x) => Poly::of(x, is_int).neg(),
            Expr::Binary(BinOp::Add, l, r) => Poly::of(l, is_int).add(&Poly::of(r, is_int)),
            Expr::Binary(BinOp::Sub, l, r) => Poly::of(l, is_int).add(&Poly::of(r, is_int).neg()),
            Expr::Binary(BinOp::Mul, l, r) => Poly::of(l, is_int).mul(&Poly::of(r, is_int)),
            Expr::Binary(BinOp::Pow, b, k) => {
                let Some(k) = Lin::of(k, is_int) else {
                    return opaque();
                };
                let base = Poly::of(b, is_int);
                if let Some(n) = k.as_const() {
                    if (0..=MAX_EXPAND).contains(&n) {
                        let mut out = Poly::constant(1);
                        for _ in 0..n {
                            out = out.mul(&base);
                        }
                        out.merge_atoms(&base);
                        return out;
                    }
                }
                // a single monomial with unit coefficient raised to a linear power
                if base.terms.len() == 1 {
                    let (m, c) = base.terms.iter().next().expect("one term");
                    if *c == 1 {
                        let mut m2 = Mono::new();
                        for (a, ex) in m {
                            let prod = match (ex.as_const(), k.as_const()) {
                                (Some(x), _) => k.scale(x),
                                (_, Some(y)) => ex.scale(y),
                                _ => return opaque(),
                            };
                            if !prod.is_zero() {
                                m2.insert(a.clone(), prod);
                            }
                        }
                        let mut out = Poly::default();
                        out.terms.insert(m2, 1);
                        out.merge_atoms(&base);
                        return out;
                    }
                }
                opaque()
            }
            _ => opaque(),
        }
    }

    /// Canonical expression: terms by descending total constant degree, then
    /// by atom order.
    pub fn to_expr(&self) -> Expr {
        let mut terms: Vec<(&Mono, &i128)> = self.terms.iter().collect();
        terms.sort_by_key(|(m, _)| {
            let deg: i128 = m.values().map(|e| e.as_const().unwrap_or(1)).sum();
            -deg
        });
        let mut out: Option<Expr> = None;
        for (m, c) in terms {
            if m.is_empty() {
                out = Some(match out {
                    None => Expr::Int(*c as i64),
                    Some(a) if *c < 0 => Expr::binary(BinOp::Sub, a, Expr::Int(-*c as i64)),
                    Some(a) => Expr::binary(BinOp::Add, a, Expr::Int(*c as i64)),
                });
                continue;
            }
            let mut prod: Option<Expr> = None;
            for (a, ex) in m {
                let base = self.atoms.get(a).cloned().unwrap_or_else(|| Expr::var(a));
                let f = match ex.as_const() {
                    Some(1) => base,
                    _ => Expr::binary(BinOp::Pow, base, ex.to_expr()),
                };
                prod = Some(match prod {
                    None => f,
                    Some(p) => Expr::binary(BinOp::Mul, p, f),
                });
            }
            out = Some(add_term(out, *c, prod.expect("non-empty monomial")));
        }
        out.unwrap_or(Expr::Int(0))
    }
}

/// Do `a` and `b` have the same normal form?
pub fn equivalent(a: &Expr, b: &Expr, is_int: &dyn Fn(&str) -> bool) -> bool {
    Poly::of(a, is_int) == Poly::of(b, is_int)
}

/// The canonical form of a polynomial in plain variables, if `e` is one.
pub fn canonical(e: &Expr, is_int: &dyn Fn(&str) -> bool) -> Option<Expr> {
    let ok = !e.contains(&|x| {
        !matches!(
            x,
            Expr::Int(_)
                | Expr::Var(_)
                | Expr::Unary(UnOp::Neg, _)
                | Expr::Binary(BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Pow, _, _)
        )
    });
    if !ok {
        return None;
    }
    let p = Poly::of(e, is_int);
    p.is_pure().then(|| p.to_expr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(a: &str, b: &str) -> bool {
        let int = |v: &str| v == "y" || v == "n";
        equivalent(&parse_expr(a).unwrap(), &parse_expr(b).unwrap(), &int)
    }

    #[test]
    fn whitelist_laws() {
        assert!(eq("x*x", "x**2"));
        assert!(eq("x*x**(y-1)", "x**y"));
        assert!(eq("1+(x-1)", "x"));
        assert!(eq("x+y", "y+x"));
        assert!(eq("(a+b)*c", "c*b+a*c"));
        assert!(eq("2*14", "14+14"));
        assert!(!eq("x*x", "x**3"));
        assert!(!eq("x/y", "y/x"));
        assert!(eq("x/y+1", "1+x/y"));
    }

    #[test]
    fn canonical_forms() {
        let int = |_: &str| false;
        let c = |s: &str| canonical(&parse_expr(s).unwrap(), &int).map(|e| print_expr(&e));
        assert_eq!(c("x*x").as_deref(), Some("x**2"));
        assert_eq!(c("2*a+2*b").as_deref(), Some("2*a+2*b"));
        assert_eq!(c("a-a").as_deref(), Some("0"));
        assert_eq!(c("x/2"), None);
    }
}
