//! Static checks: restrictions on definitions, types, guard entailment and
//! the safe/trusted classification.

pub mod entail;
pub mod grammar;
pub mod guards;
pub mod registry;
pub mod safety;
pub mod types;

pub use entail::{entails, Entailment, UnsupportedFragment};
pub use grammar::{check_grammar, Violation, ViolationKind};
pub use guards::{context_at, GuardContext};
pub use registry::{FunctionSpec, Provenance, TrustEntry, TrustRegistry};
pub use safety::{SafetyEnv, SafetyReport, UnsafeReason};
pub use types::{type_check, TypeEnv, TypeError};

use serde::{Deserialize, Serialize};

use crate::syntax::subst::format_path;
use crate::syntax::{ParseError, Program};

/// Uniform report shape shared by the CLI and the service.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub message: String,
}

impl From<&Violation> for Diagnostic {
    fn from(v: &Violation) -> Self {
        Diagnostic {
            code: v.kind.code().into(),
            path: None,
            line: Some(v.line),
            message: v.message.clone(),
        }
    }
}

impl From<&TypeError> for Diagnostic {
    fn from(e: &TypeError) -> Self {
        Diagnostic {
            code: "type-error".into(),
            path: Some(format_path(&e.path)),
            line: None,
            message: e.to_string(),
        }
    }
}

impl From<&SafetyReport> for Diagnostic {
    fn from(r: &SafetyReport) -> Self {
        Diagnostic {
            code: r.reason.map_or("safe", |r| r.code()).into(),
            path: r.path.as_deref().map(format_path),
            line: None,
            message: r.message(),
        }
    }
}

impl From<&ParseError> for Diagnostic {
    fn from(e: &ParseError) -> Self {
        let code = match e {
            ParseError::Syntax { .. } => "syntax-error",
            ParseError::Grammar { .. } => "grammar-error",
        };
        Diagnostic {
            code: code.into(),
            path: None,
            line: Some(e.line()),
            message: e.to_string(),
        }
    }
}

/// A program that passed every static check, with what later stages need.
#[derive(Clone, Debug)]
pub struct Checked {
    pub program: Program,
    pub registry: TrustRegistry,
    pub types: TypeEnv,
    pub safety: SafetyEnv,
}

impl Checked {
    /// Same program against another registry, e.g. after a promotion.
    pub fn with_registry(&self, registry: &TrustRegistry) -> Checked {
        let types = TypeEnv::for_program(&self.program, registry);
        let safety = SafetyEnv::new(&self.program, registry, &types);
        Checked {
            program: self.program.clone(),
            registry: registry.clone(),
            types,
            safety,
        }
    }
}

/// Grammar, then types. Safety of globals is computed once here.
pub fn check_program(p: &Program) -> Result<Checked, Vec<Diagnostic>> {
    let registry = TrustRegistry::for_program(p);
    let violations = check_grammar(p, &registry);
    if !violations.is_empty() {
        return Err(violations.iter().map(Diagnostic::from).collect());
    }
    let (types, _) = type_check(p, &registry)
        .map_err(|es| es.iter().map(Diagnostic::from).collect::<Vec<_>>())?;
    let safety = SafetyEnv::new(p, &registry, &types);
    Ok(Checked {
        program: p.clone(),
        registry,
        types,
        safety,
    })
}

/// Parse and check in one go.
pub fn load(text: &str) -> Result<Checked, Vec<Diagnostic>> {
    let p = crate::syntax::parse_program(text).map_err(|e| vec![Diagnostic::from(&e)])?;
    check_program(&p)
}
