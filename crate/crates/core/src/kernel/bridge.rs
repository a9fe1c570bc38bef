//! The substitution machine as a logic.
//!
//! `Step(S, E, T)` says that E reaches T by rule steps, where S records the
//! steps taken so far from the start of the run. Each machine rule becomes
//! an inference rule whose builtin `Rewrite` premise performs the step, so
//! every trace converts to a proof and back.

use serde::Serialize;
use thiserror::Error;

use crate::snm::script::parse_line;
use crate::snm::{render::format_app, RuleApp, RuleId, Step, Trace};
use crate::syntax::print_expr;

use super::check::{ProofNode, ProofScript};
use super::term::{Judgment, Term};
use super::{register_logic, Logic};

pub const BRIDGE_NAME: &str = "snm-bridge";

/// Metavariable carrying the `@path k=v` part of a step.
pub const ARGS: &str = "A";
/// Metavariable carrying the expression after a step.
pub const AFTER: &str = "EOUT";

fn document() -> String {
    let mut doc = String::from(
        "logic snm-bridge
sort Expr = code
sort Text = text
sort Hist = nil | then(Hist, Text)
sort Sig = sig | run(Expr, Hist)
relation Step(Sig, Expr, Expr) action=inference
relation Rewrite(Sig, Expr, Text, Text, Expr, Sig) action=builtin:snm-rewrite
relation Decompose(Expr, Expr, Expr) action=builtin:decompose
relation Recompose(Expr, Expr, Expr) action=builtin:recompose
rule done [auto]: / Step(S, E, E)
rule if-true-ctx: Decompose(E, CTX, `E1 if True else E2`), Recompose(CTX, E1, EOUT), Step(S, EOUT, T) / Step(S, E, T)
",
    );
    for r in RuleId::ALL {
        doc.push_str(&format!(
            "rule {r}: Rewrite(S, E, \"{r}\", {ARGS}, {AFTER}, S2), Step(S2, {AFTER}, T) / Step(S, E, T)\n"
        ));
    }
    doc
}

pub fn bridge_snm_logic() -> Logic {
    register_logic(&document()).expect("bridge logic is well formed")
}

fn quote(s: &str) -> String {
    Term::Text(s.into()).to_string()
}

fn code(e: &crate::syntax::Expr) -> String {
    format!("`{}`", print_expr(e))
}

/// `Step(sig, start, end)` for a trace.
pub fn trace_goal(t: &Trace) -> Judgment {
    Judgment {
        rel: "Step".into(),
        args: vec![Term::atom("sig"), Term::Code(t.initial.clone()), Term::Code(t.current().clone())],
    }
}

fn step_node(s: &Step) -> ProofNode {
    let line = format_app(&s.app);
    let args = line.split_once(' ').map_or("", |(_, a)| a).to_string();
    ProofNode::new(s.app.rule.id())
        .bind(ARGS, quote(&args))
        .bind(AFTER, code(&s.after))
}

/// The proof of [`trace_goal`] that replays each step of `t`.
pub fn trace_to_proof(t: &Trace) -> (Judgment, ProofScript) {
    let nodes = t.steps.iter().map(step_node).collect();
    (trace_goal(t), ProofScript { nodes })
}

#[derive(Clone, Debug, PartialEq, Error, Serialize)]
pub enum BridgeError {
    #[error("the goal is not a Step(sig, start, end) judgment with quoted expressions")]
    BadGoal,
    #[error("step {index}: {message}")]
    Step { index: usize, message: String },
    #[error("the steps end at `{reached}`, not at `{expected}`")]
    WrongEnd { reached: String, expected: String },
}

/// Reads a bridge proof back as a trace on `base`'s program. Only nodes for
/// machine rules are accepted.
pub fn proof_to_trace(base: &Trace, goal: &Judgment, script: &ProofScript) -> Result<Trace, BridgeError> {
    let (start, end) = match goal.args.as_slice() {
        [Term::App(s, a), Term::Code(start), Term::Code(end)] if goal.rel == "Step" && s == "sig" && a.is_empty() => {
            (start, end)
        }
        _ => return Err(BridgeError::BadGoal),
    };
    let logic = bridge_snm_logic();
    let mut t = base.restart(start.clone());
    for (i, node) in script.nodes.iter().enumerate() {
        let err = |message: String| BridgeError::Step { index: i + 1, message };
        let rule = RuleId::parse(&node.rule).ok_or_else(|| err(format!("{} is not a machine rule", node.rule)))?;
        let args = match node.bindings.get(ARGS) {
            Some(a) => match logic.parse_term(a, "Text").map_err(|e| err(e.to_string()))? {
                Term::Text(s) => s,
                _ => return Err(err(format!("{ARGS} must be text"))),
            },
            None => String::new(),
        };
        let app: RuleApp = parse_line(&format!("{rule} {args}"))
            .map_err(err)?
            .ok_or_else(|| err("empty step".into()))?;
        t.apply(&app).map_err(|e| err(e.to_string()))?;
        if let Some(after) = node.bindings.get(AFTER) {
            let want = logic.parse_term(after, "Expr").map_err(|e| err(e.to_string()))?;
            if want != Term::Code(t.current().clone()) {
                return Err(err(format!("the step gives `{}`, not {after}", print_expr(t.current()))));
            }
        }
    }
    if t.current() != end {
        return Err(BridgeError::WrongEnd {
            reached: print_expr(t.current()),
            expected: print_expr(end),
        });
    }
    Ok(t)
}
