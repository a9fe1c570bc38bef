//! Trusted functions and their contracts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::syntax::subst::subst_many;
use crate::syntax::*;

/// The unit of trust: what a call may assume and what it is replaced by.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    /// "argList is legal"
    pub pre: Expr,
    /// The expected result.
    pub post: Expr,
    pub progress: Option<Expr>,
    pub pmin: Option<i64>,
}

impl FunctionSpec {
    pub fn signature(&self) -> Type {
        Type::Func(
            self.params.iter().map(|(_, t)| t.clone()).collect(),
            Box::new(self.ret.clone()),
        )
    }

    fn bind(&self, args: &[Expr]) -> BTreeMap<String, Expr> {
        self.params
            .iter()
            .map(|(n, _)| n.clone())
            .zip(args.iter().cloned())
            .collect()
    }

    pub fn pre_at(&self, args: &[Expr]) -> Expr {
        subst_many(&self.pre, &self.bind(args))
    }

    pub fn post_at(&self, args: &[Expr]) -> Expr {
        subst_many(&self.post, &self.bind(args))
    }

    pub fn progress_at(&self, args: &[Expr]) -> Option<Expr> {
        self.progress.as_ref().map(|p| subst_many(p, &self.bind(args)))
    }

    /// The guard conjuncts for a self-call with `call_args` made while
    /// checking the call `outer_args`: the callee precondition, then
    /// `progr > pmin` and `progr > progr'`. A missing pmin counts as 0.
    pub fn simpler_conjuncts(&self, outer_args: &[Expr], call_args: &[Expr]) -> Option<Vec<Expr>> {
        let progr = self.progress_at(outer_args)?;
        let progr2 = self.progress_at(call_args)?;
        Some(vec![
            self.pre_at(call_args),
            Expr::binary(BinOp::Gt, progr.clone(), Expr::Int(self.pmin.unwrap_or(0))),
            Expr::binary(BinOp::Gt, progr, progr2),
        ])
    }

    /// Spec for a user function carrying contract lines, if it has both a
    /// precondition and an expected result.
    pub fn from_func(f: &FuncDef) -> Option<FunctionSpec> {
        let s = f.spec.as_ref()?;
        Some(FunctionSpec {
            name: f.name.clone(),
            params: f.params.clone(),
            ret: f.ret.clone(),
            pre: s.pre.clone().unwrap_or(Expr::Bool(true)),
            post: s.post.clone()?,
            progress: s.progress.clone(),
            pmin: s.pmin,
        })
    }

    pub fn from_stub(t: &TrustedStub) -> FunctionSpec {
        FunctionSpec {
            name: t.name.clone(),
            params: t.params.clone(),
            ret: t.ret.clone(),
            pre: t.pre.clone(),
            post: t.post.clone(),
            progress: None,
            pmin: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Builtin,
    Verified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustEntry {
    pub spec: FunctionSpec,
    pub provenance: Provenance,
}

/// Name to contract. Extending returns a new registry; the old one is
/// untouched.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrustRegistry {
    entries: BTreeMap<String, TrustEntry>,
}

fn spec(name: &str, params: &[(&str, Type)], ret: Type, pre: &str, post: &str) -> FunctionSpec {
    FunctionSpec {
        name: name.into(),
        params: params.iter().map(|(n, t)| (n.to_string(), t.clone())).collect(),
        ret,
        pre: parse_expr(pre).expect("builtin precondition"),
        post: parse_expr(post).expect("builtin result"),
        progress: None,
        pmin: None,
    }
}

impl TrustRegistry {
    pub fn empty() -> TrustRegistry {
        TrustRegistry::default()
    }

    /// Library functions trusted from the start.
    pub fn with_builtins() -> TrustRegistry {
        let f = Type::Float;
        let mut r = TrustRegistry::default();
        for s in [
            spec(
                "math.pow",
                &[("x", f.clone()), ("y", f.clone())],
                f.clone(),
                "not (x<0 and not float.is_integer(y))",
                "float(x)**y",
            ),
            spec("math.sqrt", &[("x", f.clone())], f.clone(), "x>=0", "x**0.5"),
            spec("sqrt", &[("x", f.clone())], f.clone(), "x>=0", "x**0.5"),
        ] {
            r.entries.insert(
                s.name.clone(),
                TrustEntry {
                    spec: s,
                    provenance: Provenance::Builtin,
                },
            );
        }
        r
    }

    /// Builtins plus the program's trusted stubs.
    pub fn for_program(p: &Program) -> TrustRegistry {
        let mut r = TrustRegistry::with_builtins();
        for t in p.stubs() {
            r.entries.insert(
                t.name.clone(),
                TrustEntry {
                    spec: FunctionSpec::from_stub(t),
                    provenance: Provenance::Builtin,
                },
            );
        }
        r
    }

    pub fn get(&self, name: &str) -> Option<&TrustEntry> {
        self.entries.get(name)
    }

    pub fn spec(&self, name: &str) -> Option<&FunctionSpec> {
        self.entries.get(name).map(|e| &e.spec)
    }

    pub fn is_trusted(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &TrustEntry)> {
        self.entries.iter()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn extended(&self, spec: FunctionSpec, provenance: Provenance) -> TrustRegistry {
        let mut r = self.clone();
        r.entries
            .insert(spec.name.clone(), TrustEntry { spec, provenance });
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_pow_contract() {
        let r = TrustRegistry::with_builtins();
        let s = r.spec("math.pow").unwrap();
        let args = [Expr::Int(5), Expr::Int(2)];
        assert_eq!(print_expr(&s.post_at(&args)), "float(5)**2");
        assert_eq!(
            print_expr(&s.pre_at(&args)),
            "not (5<0 and not float.is_integer(2))"
        );
    }

    #[test]
    fn extension_is_copy_on_write() {
        let r = TrustRegistry::with_builtins();
        let s = spec("id", &[("n", Type::Int)], Type::Int, "True", "n");
        let r2 = r.extended(s, Provenance::Verified);
        assert!(!r.is_trusted("id"));
        assert!(r2.is_trusted("id"));
        assert_eq!(r2.get("id").unwrap().provenance, Provenance::Verified);
    }
}
