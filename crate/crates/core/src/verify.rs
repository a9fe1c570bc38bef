//! Verification of untrusted functions against their contracts.
//!
//! A function `f` with precondition `pre` and expected result `post` is
//! verified by stepping `f(x1..xk) if pre else ERROR` to
//! `post if pre else ERROR`, where the `xi` are symbolic and assumed safe.
//! Recursive calls may only be replaced by the contract through
//! name-to-spec-simpler, whose extra conjuncts carry the progress argument.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::types::subsumes;
use crate::analysis::entail::decide;
use crate::analysis::{Checked, Entailment, FunctionSpec, Provenance, TrustRegistry};
use crate::snm::{Mode, RuleId, Trace};
use crate::syntax::subst::{alpha_eq, get_at};
use crate::syntax::*;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("no function named '{0}'")]
    UnknownFunction(String),
    #[error("'{0}' has no contract; add '#: pre:' and '#: post:' lines above it")]
    MissingSpec(String),
    #[error("'{0}' is already trusted")]
    AlreadyTrusted(String),
    #[error("contract of '{name}': {message}")]
    SpecTypeError { name: String, message: String },
    #[error("'{0}' calls itself but declares no '#: progress:' expression")]
    MissingProgress(String),
    #[error("'{name}' takes {expected} parameters, {found} symbols were given")]
    SymbolCount {
        name: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Open,
    Discharged,
    Failed,
}

/// What has to be shown for one function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obligation {
    pub spec: FunctionSpec,
    /// Symbolic arguments of the outer call, with their types.
    pub symbols: Vec<(String, Type)>,
    pub initial: Expr,
    pub target: Expr,
    pub status: Status,
}

impl Obligation {
    pub fn args(&self) -> Vec<Expr> {
        self.symbols.iter().map(|(n, _)| Expr::var(n)).collect()
    }
}

/// The final expression did not reach the target.
#[derive(Clone, Debug, PartialEq, Error, Serialize, Deserialize)]
#[error("not discharged: reached `{}`, expected `{}`", print_expr(.last), print_expr(.target))]
pub struct NotDischarged {
    #[serde(rename = "final")]
    pub last: Expr,
    pub target: Expr,
}

fn stmt_calls(s: &Stmt, name: &str) -> bool {
    let calls = |e: &Expr| e.contains(&|sub| matches!(sub, Expr::Call(g, _) if g == name));
    match s {
        Stmt::Assign { value, .. } | Stmt::Return { value, .. } => calls(value),
        Stmt::If {
            guard, then, otherwise, ..
        } => calls(guard) || then.iter().chain(otherwise).any(|s| stmt_calls(s, name)),
    }
}

fn recursive(f: &FuncDef) -> bool {
    f.body.iter().any(|s| stmt_calls(s, &f.name))
}

fn spec_types(checked: &Checked, spec: &FunctionSpec) -> Result<(), VerifyError> {
    let bad = |message: String| VerifyError::SpecTypeError {
        name: spec.name.clone(),
        message,
    };
    let check = |e: &Expr, what: &str, want: Type| -> Result<(), VerifyError> {
        let ty = checked
            .types
            .type_in(e, &spec.params, what)
            .map_err(|err| bad(err.to_string()))?;
        if !subsumes(&Some(want.clone()), &ty) || ty.is_none() {
            return Err(bad(format!(
                "{what} `{}` should be {want}, found {}",
                print_expr(e),
                ty.map_or("ERROR".into(), |t| t.to_string())
            )));
        }
        Ok(())
    };
    check(&spec.pre, "precondition", Type::Bool)?;
    check(&spec.post, "expected result", spec.ret.clone())?;
    if let Some(p) = &spec.progress {
        check(p, "progress", Type::Int)?;
    }
    Ok(())
}

/// Sets up the obligation for `name` and a verification trace starting at
/// its guarded call. `symbols` names the symbolic arguments; by default they
/// are the parameter names. Symbols shadow globals of the same name.
pub fn begin_verification(
    checked: &Checked,
    name: &str,
    symbols: Option<&[String]>,
) -> Result<(Obligation, Trace), VerifyError> {
    let f = checked
        .program
        .func(name)
        .ok_or_else(|| VerifyError::UnknownFunction(name.into()))?;
    if checked.registry.is_trusted(name) {
        return Err(VerifyError::AlreadyTrusted(name.into()));
    }
    let spec = FunctionSpec::from_func(f).ok_or_else(|| VerifyError::MissingSpec(name.into()))?;
    spec_types(checked, &spec)?;
    if recursive(f) && spec.progress.is_none() {
        return Err(VerifyError::MissingProgress(name.into()));
    }
    let names: Vec<String> = match symbols {
        Some(s) => s.to_vec(),
        None => spec.params.iter().map(|(n, _)| n.clone()).collect(),
    };
    if names.len() != spec.params.len() {
        return Err(VerifyError::SymbolCount {
            name: name.into(),
            expected: spec.params.len(),
            found: names.len(),
        });
    }
    let symbols: Vec<(String, Type)> = names
        .into_iter()
        .zip(spec.params.iter().map(|(_, t)| t.clone()))
        .collect();
    let args: Vec<Expr> = symbols.iter().map(|(n, _)| Expr::var(n)).collect();
    let pre = spec.pre_at(&args);
    let initial = Expr::cond(Expr::Call(name.into(), args.clone()), pre.clone(), Expr::Error);
    let target = Expr::cond(spec.post_at(&args), pre.clone(), Expr::Error);
    let trace = Trace::for_verification(checked.clone(), initial.clone(), &symbols, spec.clone(), args, vec![pre]);
    Ok((
        Obligation {
            spec,
            symbols,
            initial,
            target,
            status: Status::Open,
        },
        trace,
    ))
}

/// The guard conjuncts a self-call with `call_args` must satisfy:
/// the precondition at the call, `progr > pmin` and `progr > progr'`.
/// Whether they hold is left to consider-tests.
pub fn check_progress(spec: &FunctionSpec, outer_args: &[Expr], call_args: &[Expr]) -> Vec<Expr> {
    spec.simpler_conjuncts(outer_args, call_args).unwrap_or_default()
}

/// One conjunct introduced by name-to-spec-simpler and what the guards at
/// that point say about it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjunctReport {
    pub step: usize,
    pub conjunct: String,
    pub guards: Vec<String>,
    pub verdict: Entailment,
}

/// Decides every conjunct introduced by name-to-spec-simpler steps of `t`
/// under the guards in force where the step was taken.
pub fn assess_conjuncts(t: &Trace) -> Vec<ConjunctReport> {
    let Some(spec) = t.verifying() else {
        return Vec::new();
    };
    let is_int = |v: &str| t.types().is_int_var(v);
    let outer: Vec<Expr> = match &t.initial {
        Expr::Cond(call, _, _) => match &**call {
            Expr::Call(_, a) => a.clone(),
            _ => return Vec::new(),
        },
        _ => return Vec::new(),
    };
    let mut out = Vec::new();
    for (i, st) in t.steps.iter().enumerate() {
        if st.app.rule != RuleId::NameToSpecSimpler {
            continue;
        }
        let Some(Expr::Call(_, args)) = get_at(&st.before, &st.app.target) else {
            continue;
        };
        let Some(mut guards) = crate::analysis::context_at(&st.before, &st.app.target, &t.base) else {
            continue;
        };
        let mut seen = Vec::new();
        guards.retain(|g| {
            let fresh = !seen.iter().any(|s| alpha_eq(s, g));
            seen.push(g.clone());
            fresh
        });
        for c in check_progress(spec, &outer, args) {
            out.push(ConjunctReport {
                step: i + 1,
                conjunct: print_expr(&c),
                guards: guards.iter().map(print_expr).collect(),
                verdict: decide(&guards, &c, &is_int),
            });
        }
    }
    out
}

/// Promotes the function if `t` ends at the obligation's target.
pub fn finish_verification(
    ob: &mut Obligation,
    t: &Trace,
    registry: &TrustRegistry,
) -> Result<TrustRegistry, NotDischarged> {
    let not_done = || NotDischarged {
        last: t.current().clone(),
        target: ob.target.clone(),
    };
    let ours = t.mode == Mode::Verification
        && t.verifying().is_some_and(|s| s.name == ob.spec.name)
        && alpha_eq(&t.initial, &ob.initial);
    if !ours || !alpha_eq(t.current(), &ob.target) {
        ob.status = Status::Failed;
        return Err(not_done());
    }
    ob.status = Status::Discharged;
    Ok(promote(registry, &ob.spec))
}

/// Adds `spec` as verified. Promoting the same spec twice changes nothing.
pub fn promote(registry: &TrustRegistry, spec: &FunctionSpec) -> TrustRegistry {
    registry.extended(spec.clone(), Provenance::Verified)
}

/// Outcome of a verification attempt, for the CLI and service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub function: String,
    pub status: Status,
    pub initial: String,
    pub target: String,
    #[serde(rename = "final")]
    pub last: String,
    /// Index and message of a script step that could not be applied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<(usize, String)>,
    pub conjuncts: Vec<ConjunctReport>,
}

impl VerifyReport {
    pub fn new(ob: &Obligation, t: &Trace, failed_step: Option<(usize, String)>) -> VerifyReport {
        VerifyReport {
            function: ob.spec.name.clone(),
            status: ob.status,
            initial: print_expr(&ob.initial),
            target: print_expr(&ob.target),
            last: print_expr(t.current()),
            failed_step,
            conjuncts: assess_conjuncts(t),
        }
    }

    /// Conjuncts the guards contradict.
    pub fn refuted(&self) -> impl Iterator<Item = &ConjunctReport> {
        self.conjuncts.iter().filter(|c| c.verdict == Entailment::Refuted)
    }
}
