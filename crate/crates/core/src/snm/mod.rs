//! The substitution machine: a catalog of rewrite rules applied at explicit
//! positions, automatic stepping strategies, and recorded traces.

pub mod algebra;
pub mod context;
pub mod render;
mod rules;
pub mod script;
pub mod strategy;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{context_at, Checked, FunctionSpec, GuardContext, SafetyEnv, TypeEnv};
use crate::syntax::subst::{format_path, get_at, parse_path, Path};
use crate::syntax::{Expr, Type};

pub use context::{decompose, recompose, Decomposition, EvalContext, NoMatch};
pub use render::{render_two_column, rule_label, TraceView};
pub use script::{format_script, parse_script, ScriptError};
pub use strategy::{auto_step, run_to_value, Halt, Outcome, Run, Strategy, DEFAULT_STEP_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleId {
    Arithmetic,
    StringArithmetic,
    BooleanArithmetic,
    NameToDef,
    NameToBody,
    NameToSpec,
    NameToSpecSimpler,
    IfTrue,
    IfFalse,
    IfIrrelevant,
    ConsiderTests,
    CasesSplit,
    FuncToLambda,
    BetaParam,
    FuncToBody,
    AlphaFresh,
}

/// One parameter a rule accepts, for palettes and validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub required: bool,
    pub doc: &'static str,
}

const RESULT: ParamSpec = ParamSpec {
    name: "result",
    required: false,
    doc: "an equal expression to produce instead of the evaluated value",
};

impl RuleId {
    pub const ALL: [RuleId; 16] = [
        RuleId::Arithmetic,
        RuleId::StringArithmetic,
        RuleId::BooleanArithmetic,
        RuleId::NameToDef,
        RuleId::NameToBody,
        RuleId::NameToSpec,
        RuleId::NameToSpecSimpler,
        RuleId::IfTrue,
        RuleId::IfFalse,
        RuleId::IfIrrelevant,
        RuleId::ConsiderTests,
        RuleId::CasesSplit,
        RuleId::FuncToLambda,
        RuleId::BetaParam,
        RuleId::FuncToBody,
        RuleId::AlphaFresh,
    ];

    pub fn id(self) -> &'static str {
        match self {
            RuleId::Arithmetic => "arithmetic",
            RuleId::StringArithmetic => "string-arithmetic",
            RuleId::BooleanArithmetic => "boolean-arithmetic",
            RuleId::NameToDef => "name-to-def",
            RuleId::NameToBody => "name-to-body",
            RuleId::NameToSpec => "name-to-spec",
            RuleId::NameToSpecSimpler => "name-to-spec-simpler",
            RuleId::IfTrue => "if-true",
            RuleId::IfFalse => "if-false",
            RuleId::IfIrrelevant => "if-irrelevant",
            RuleId::ConsiderTests => "consider-tests",
            RuleId::CasesSplit => "cases-split",
            RuleId::FuncToLambda => "func-to-lambda",
            RuleId::BetaParam => "beta-param",
            RuleId::FuncToBody => "func-to-body",
            RuleId::AlphaFresh => "alpha-fresh",
        }
    }

    pub fn parse(s: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.id() == s)
    }

    /// Palette grouping.
    pub fn family(self) -> &'static str {
        match self {
            RuleId::Arithmetic | RuleId::StringArithmetic | RuleId::BooleanArithmetic => "arithmetic",
            RuleId::NameToDef | RuleId::NameToBody | RuleId::NameToSpec | RuleId::NameToSpecSimpler => "names",
            RuleId::IfTrue | RuleId::IfFalse | RuleId::IfIrrelevant | RuleId::ConsiderTests | RuleId::CasesSplit => {
                "conditionals"
            }
            RuleId::FuncToLambda | RuleId::BetaParam | RuleId::FuncToBody | RuleId::AlphaFresh => "lambda",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            RuleId::Arithmetic => "evaluate numeric operations and comparisons on literals",
            RuleId::StringArithmetic => "evaluate concatenation, slicing and comparison of string literals",
            RuleId::BooleanArithmetic => "simplify not/and/or on literals, left to right",
            RuleId::NameToDef => "replace a variable with its definition",
            RuleId::NameToBody => "replace a call of an untrusted function with its body",
            RuleId::NameToSpec => "replace a call of a trusted function with its specified result",
            RuleId::NameToSpecSimpler => "use the specification for a smaller recursive call",
            RuleId::IfTrue => "keep the first branch of a conditional whose test is True",
            RuleId::IfFalse => "keep the second branch of a conditional whose test is False",
            RuleId::IfIrrelevant => "drop a safe test whose branches are identical",
            RuleId::ConsiderTests => "simplify using the tests known to hold here",
            RuleId::CasesSplit => "wrap an expression in a test with identical branches",
            RuleId::FuncToLambda => "replace a function name with its lambda form",
            RuleId::BetaParam => "substitute one lambda parameter",
            RuleId::FuncToBody => "unwrap a lambda application with no parameters left",
            RuleId::AlphaFresh => "rename bound names to fresh subscripted names",
        }
    }

    pub fn params(self) -> &'static [ParamSpec] {
        match self {
            RuleId::Arithmetic | RuleId::StringArithmetic | RuleId::BooleanArithmetic => &[RESULT],
            RuleId::NameToDef => &[
                ParamSpec {
                    name: "var",
                    required: false,
                    doc: "comma-separated names; every occurrence inside the target is replaced",
                },
                ParamSpec {
                    name: "remove",
                    required: false,
                    doc: "true to delete the definition once it is no longer used",
                },
            ],
            RuleId::CasesSplit => &[ParamSpec {
                name: "guard",
                required: true,
                doc: "the safe boolean test to split on",
            }],
            RuleId::BetaParam => &[ParamSpec {
                name: "var",
                required: false,
                doc: "the parameter to substitute (default: the first)",
            }],
            RuleId::AlphaFresh => &[ParamSpec {
                name: "map",
                required: false,
                doc: "renamings old:new separated by commas (default: every clashing binder)",
            }],
            _ => &[],
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

pub(crate) mod path_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Path, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_path(p))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Path, D::Error> {
        let s = String::deserialize(d)?;
        parse_path(&s).ok_or_else(|| serde::de::Error::custom(format!("bad path '{s}'")))
    }
}

/// A rule, where to apply it, and its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleApp {
    pub rule: RuleId,
    #[serde(with = "path_serde")]
    pub target: Path,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl RuleApp {
    pub fn new(rule: RuleId, target: Path) -> RuleApp {
        RuleApp {
            rule,
            target,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> RuleApp {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub app: RuleApp,
    pub before: Expr,
    pub after: Expr,
    /// Definitions deleted by this step.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Concrete,
    Symbolic,
    Verification,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("invalid path {0}")]
    InvalidPath(String),
    #[error("{rule} is not applicable: {reason}")]
    NotApplicable { rule: RuleId, reason: String },
    #[error("{rule}: bad parameter '{param}': {reason}")]
    BadParam {
        rule: RuleId,
        param: String,
        reason: String,
    },
}

/// What stays fixed while a trace advances.
#[derive(Debug)]
pub(crate) struct Env {
    pub checked: Checked,
    pub types: TypeEnv,
    pub safety: SafetyEnv,
    pub symbols: BTreeSet<String>,
    /// The function being verified, with the symbolic arguments of the outer call.
    pub verifying: Option<(FunctionSpec, Vec<Expr>)>,
}

/// A run of the machine: where it started and every step taken since.
/// Cloning is cheap apart from the step list.
#[derive(Clone, Debug)]
pub struct Trace {
    env: Arc<Env>,
    pub initial: Expr,
    pub steps: Vec<Step>,
    pub mode: Mode,
    /// Guards assumed at the root.
    pub base: GuardContext,
    /// Globals the strategies leave unsubstituted.
    pub hold: BTreeSet<String>,
    /// Let boolean-arithmetic consult the guards silently.
    pub auto_context: bool,
    current: Expr,
    removed: BTreeSet<String>,
}

impl Trace {
    /// A concrete run of the program's goal.
    pub fn new(checked: Checked) -> Trace {
        let goal = checked.program.goal.clone();
        Trace::from_expr(checked, goal, &[])
    }

    /// A run starting at `start`, with `symbols` treated as safe inputs of
    /// the given types that have no definition.
    pub fn from_expr(checked: Checked, start: Expr, symbols: &[(String, Type)]) -> Trace {
        let types = checked.types.with(symbols.iter().cloned());
        let names: BTreeSet<String> = symbols.iter().map(|(n, _)| n.clone()).collect();
        let safety = SafetyEnv::new(&checked.program, &checked.registry, &types).with_symbols(names.clone());
        let mode = if symbols.is_empty() { Mode::Concrete } else { Mode::Symbolic };
        Trace {
            env: Arc::new(Env {
                checked,
                types,
                safety,
                symbols: names,
                verifying: None,
            }),
            initial: start.clone(),
            steps: Vec::new(),
            mode,
            base: Vec::new(),
            hold: BTreeSet::new(),
            auto_context: false,
            current: start,
            removed: BTreeSet::new(),
        }
    }

    /// Marks globals as held; a run with held names is symbolic.
    pub fn with_hold(mut self, names: impl IntoIterator<Item = String>) -> Trace {
        self.hold.extend(names);
        if !self.hold.is_empty() && self.mode == Mode::Concrete {
            self.mode = Mode::Symbolic;
        }
        self
    }

    pub fn with_auto_context(mut self, on: bool) -> Trace {
        self.auto_context = on;
        self
    }

    pub(crate) fn for_verification(
        checked: Checked,
        start: Expr,
        symbols: &[(String, Type)],
        spec: FunctionSpec,
        outer_args: Vec<Expr>,
        base: GuardContext,
    ) -> Trace {
        let mut t = Trace::from_expr(checked, start, symbols);
        Arc::get_mut(&mut t.env).expect("fresh trace").verifying = Some((spec, outer_args));
        t.mode = Mode::Verification;
        t.base = base;
        t
    }

    /// A trace with the same program and settings starting afresh at `start`.
    pub fn restart(&self, start: Expr) -> Trace {
        Trace {
            env: Arc::clone(&self.env),
            initial: start.clone(),
            steps: Vec::new(),
            mode: self.mode,
            base: self.base.clone(),
            hold: self.hold.clone(),
            auto_context: self.auto_context,
            current: start,
            removed: BTreeSet::new(),
        }
    }

    pub fn current(&self) -> &Expr {
        &self.current
    }

    pub fn checked(&self) -> &Checked {
        &self.env.checked
    }

    pub fn types(&self) -> &TypeEnv {
        &self.env.types
    }

    pub fn safety(&self) -> &SafetyEnv {
        &self.env.safety
    }

    pub fn symbols(&self) -> &BTreeSet<String> {
        &self.env.symbols
    }

    /// Name of the function under verification.
    pub fn verifying(&self) -> Option<&FunctionSpec> {
        self.env.verifying.as_ref().map(|(s, _)| s)
    }

    /// Definitions deleted so far.
    pub fn removed(&self) -> &BTreeSet<String> {
        &self.removed
    }

    /// Every expression in order: the start, then each step's result.
    pub fn states(&self) -> impl Iterator<Item = &Expr> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.after))
    }

    pub fn guards_at(&self, path: &[usize]) -> Result<GuardContext, RuleError> {
        context_at(&self.current, path, &self.base).ok_or_else(|| RuleError::InvalidPath(format_path(path)))
    }

    pub fn subexpr(&self, path: &[usize]) -> Result<&Expr, RuleError> {
        get_at(&self.current, path).ok_or_else(|| RuleError::InvalidPath(format_path(path)))
    }

    /// Applies one rule in place.
    pub fn apply(&mut self, app: &RuleApp) -> Result<&Step, RuleError> {
        let (after, removed) = rules::rewrite(self, app)?;
        let before = std::mem::replace(&mut self.current, after.clone());
        self.removed.extend(removed.iter().cloned());
        self.steps.push(Step {
            app: app.clone(),
            before,
            after,
            removed,
        });
        Ok(self.steps.last().expect("just pushed"))
    }

    /// Would `app` succeed? Leaves the trace untouched.
    pub fn check(&self, app: &RuleApp) -> Result<Expr, RuleError> {
        rules::rewrite(self, app).map(|(e, _)| e)
    }

    /// Rules that apply at `path` with default parameters.
    pub fn applicable_rules(&self, path: &[usize]) -> Result<Vec<RuleApp>, RuleError> {
        rules::applicable(self, path)
    }

    /// The trace without its last step.
    pub fn undo(&mut self) -> Option<Step> {
        let s = self.steps.pop()?;
        self.current = s.before.clone();
        for r in &s.removed {
            self.removed.remove(r);
        }
        Some(s)
    }
}

/// Functional form of [`Trace::apply`].
pub fn apply_rule(t: &Trace, app: &RuleApp) -> Result<Trace, RuleError> {
    let mut t = t.clone();
    t.apply(app)?;
    Ok(t)
}

/// Replays `apps` from the start of `t`; on failure returns the index of the
/// failing step and the error.
pub fn replay(t: &Trace, apps: &[RuleApp]) -> Result<Trace, (usize, Trace, RuleError)> {
    let mut t = t.clone();
    for (i, a) in apps.iter().enumerate() {
        if let Err(e) = t.apply(a) {
            return Err((i, t, e));
        }
    }
    Ok(t)
}
