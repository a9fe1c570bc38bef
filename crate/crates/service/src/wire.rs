//! Request and response bodies. Every body carries the schema version.

use serde::{Deserialize, Serialize};

use substep_core::analysis::Diagnostic;
use substep_core::kernel::{CheckReport, ProofNode};
use substep_core::snm::render::TraceView;
use substep_core::snm::{Outcome, ParamSpec, RuleId};
use substep_core::syntax::print_expr;
use substep_core::verify::VerifyReport;

pub const SCHEMA: u32 = 1;

/// A proof or machine script, as text (one step per line) or as a node list.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ScriptBody {
    Text(String),
    Nodes(Vec<ProofNode>),
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `ltr`, `rtl` or `normal`.
    #[serde(default)]
    pub strategy: Option<String>,
    #[serde(default)]
    pub auto_context: bool,
    #[serde(default)]
    pub step_limit: Option<usize>,
    /// Globals left unsubstituted by automatic stepping.
    #[serde(default)]
    pub hold: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyTarget {
    pub function: String,
    /// Names for the symbolic arguments; the parameter names by default.
    #[serde(default)]
    pub symbols: Option<Vec<String>>,
}

/// `logic` names a kernel logic, or `snm` for a machine trace.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRequest {
    pub schema: u32,
    pub logic: String,
    #[serde(default)]
    pub goal: Option<String>,
    #[serde(default)]
    pub script: Option<ScriptBody>,
    /// Program source; required for `snm` and for `Rewrite` premises.
    #[serde(default)]
    pub program: Option<String>,
    #[serde(default)]
    pub config: RunConfig,
    #[serde(default)]
    pub verify: Option<VerifyTarget>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResponse {
    pub schema: u32,
    #[serde(flatten)]
    pub result: CheckResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CheckResult {
    Kernel(CheckReport),
    Snm(SnmReport),
}

impl CheckResponse {
    pub fn valid(&self) -> bool {
        match &self.result {
            CheckResult::Kernel(r) => r.valid,
            CheckResult::Snm(r) => r.valid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnmReport {
    /// Every script step applied (and, when verifying, the obligation discharged).
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub trace: TraceView,
    /// Two-column rendering of the trace.
    pub rendered: String,
    /// How an automatic run ended; absent for scripted traces.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<OutcomeView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerifyReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutcomeView {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl From<&Outcome> for OutcomeView {
    fn from(o: &Outcome) -> Self {
        let (kind, expr, reason) = match o {
            Outcome::Value { value } => ("value", Some(value), None),
            Outcome::Error => ("error", None, None),
            Outcome::StuckSymbolic { residual } => ("stuck-symbolic", Some(residual), None),
            Outcome::Stuck { residual, reason } => ("stuck", Some(residual), Some(reason.clone())),
            Outcome::StepLimit { residual, limit } => ("step-limit", Some(residual), Some(format!("stopped after {limit} steps"))),
        };
        OutcomeView {
            kind,
            expr: expr.map(print_expr),
            reason,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LogicSummary {
    pub name: String,
    pub version: String,
    /// `kernel` for inference-rule logics, `machine` for the rule catalog.
    pub kind: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogicList {
    pub schema: u32,
    pub logics: Vec<LogicSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MachineRule {
    pub id: &'static str,
    pub family: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
}

impl From<RuleId> for MachineRule {
    fn from(r: RuleId) -> Self {
        MachineRule {
            id: r.id(),
            family: r.family(),
            summary: r.summary(),
            params: r.params(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBody {
    pub schema: u32,
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}
