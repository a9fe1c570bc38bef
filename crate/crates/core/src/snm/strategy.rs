//! Automatic stepping.
//!
//! The applicative strategies walk the expression in evaluation order (tests
//! before branches, left operand of `and`/`or` before the right, arguments
//! before calls, never into lambda bodies) and take the first step found
//! innermost. A run of one operator family over literals, such as
//! `2*14+2*7`, is evaluated as a whole by one arithmetic step once all of its
//! leaves are literals.

use serde::{Deserialize, Serialize};

use crate::syntax::subst::{format_path, Path};
use crate::syntax::*;

use super::algebra;
use super::rules::{ground_family, Family};
use super::{RuleApp, RuleId, Trace};

pub const DEFAULT_STEP_LIMIT: usize = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    Ltr,
    Rtl,
    Normal,
}

impl Strategy {
    pub fn parse(s: &str) -> Option<Strategy> {
        match s {
            "ltr" | "ltr-applicative" => Some(Strategy::Ltr),
            "rtl" | "rtl-applicative" => Some(Strategy::Rtl),
            "normal" | "normal-order" => Some(Strategy::Normal),
            _ => None,
        }
    }
}

/// Why automatic stepping stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Halt {
    /// A literal.
    Terminal,
    /// `ERROR` reached in a position that must be evaluated.
    Error { path: String },
    /// Nothing left to do but symbolic variables remain.
    StuckSymbolic,
    Stuck { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Value { value: Expr },
    Error,
    StuckSymbolic { residual: Expr },
    Stuck { residual: Expr, reason: String },
    StepLimit { residual: Expr, limit: usize },
}

#[derive(Clone, Debug)]
pub struct Run {
    pub trace: Trace,
    pub outcome: Outcome,
}

enum Visit {
    Value,
    Ready(Family),
    Symbolic,
    Step(RuleApp),
    Error(Path),
    Blocked(String),
}

struct Walker<'a> {
    t: &'a Trace,
    order: Strategy,
}

impl Walker<'_> {
    fn family_step(&self, f: Family) -> Visit {
        Visit::Step(RuleApp::new(f.rule(), Vec::new()))
    }

    fn var_step(&self, v: &str, path: &Path) -> Visit {
        let t = self.t;
        let p = &t.checked().program;
        if p.var(v).is_some() && !t.hold.contains(v) && !t.symbols().contains(v) && !t.removed().contains(v) {
            Visit::Step(RuleApp::new(RuleId::NameToDef, path.clone()))
        } else {
            Visit::Symbolic
        }
    }

    fn call_step(&self, f: &str, path: &Path) -> Visit {
        let t = self.t;
        if t.checked().registry.is_trusted(f) {
            Visit::Step(RuleApp::new(RuleId::NameToSpec, path.clone()))
        } else if t.checked().program.func(f).is_some() {
            Visit::Step(RuleApp::new(RuleId::NameToBody, path.clone()))
        } else {
            Visit::Blocked(format!("no rule evaluates a call of '{f}'"))
        }
    }

    /// Leftmost-outermost candidate for normal order.
    fn outer_rule(&self, e: &Expr, path: &Path) -> Option<RuleApp> {
        let app = match e {
            Expr::Var(v) => match self.var_step(v, path) {
                Visit::Step(a) => a,
                _ => return None,
            },
            Expr::Cond(_, g, _) => match **g {
                Expr::Bool(true) => RuleApp::new(RuleId::IfTrue, path.clone()),
                Expr::Bool(false) => RuleApp::new(RuleId::IfFalse, path.clone()),
                _ => return None,
            },
            Expr::Binary(BinOp::And | BinOp::Or, l, _) if matches!(**l, Expr::Bool(_)) => {
                RuleApp::new(RuleId::BooleanArithmetic, path.clone())
            }
            Expr::Call(f, _) if !crate::value::is_primitive(f) => match self.call_step(f, path) {
                Visit::Step(a) => a,
                _ => return None,
            },
            Expr::Apply(f, _) => match &**f {
                Expr::Lambda(ps, _) if ps.is_empty() => RuleApp::new(RuleId::FuncToBody, path.clone()),
                Expr::Lambda(..) => RuleApp::new(RuleId::BetaParam, path.clone()),
                _ => return None,
            },
            _ => return None,
        };
        self.t.check(&app).is_ok().then_some(app)
    }

    fn visit(&self, e: &Expr, path: &mut Path) -> Visit {
        if self.order == Strategy::Normal {
            if let Some(app) = self.outer_rule(e, path) {
                return Visit::Step(app);
            }
        }
        match e {
            _ if e.is_literal() => Visit::Value,
            Expr::Error => Visit::Error(path.clone()),
            Expr::Lambda(..) => Visit::Value,
            Expr::Var(v) => self.var_step(v, path),
            Expr::Cond(_, g, _) => {
                path.push(1);
                let v = self.visit(g, path);
                path.pop();
                match v {
                    Visit::Value => match **g {
                        Expr::Bool(true) => Visit::Step(RuleApp::new(RuleId::IfTrue, path.clone())),
                        Expr::Bool(false) => Visit::Step(RuleApp::new(RuleId::IfFalse, path.clone())),
                        _ => Visit::Blocked("the test is not a boolean".into()),
                    },
                    Visit::Ready(f) => self.family_step(f),
                    other => other,
                }
            }
            Expr::Binary(BinOp::And | BinOp::Or, l, _) => {
                path.push(0);
                let v = self.visit(l, path);
                path.pop();
                match v {
                    Visit::Value | Visit::Ready(_) if ground_family(e) == Some(Family::Bool) => Visit::Ready(Family::Bool),
                    Visit::Value => Visit::Step(RuleApp::new(RuleId::BooleanArithmetic, path.clone())),
                    Visit::Ready(f) => self.family_step(f),
                    other => other,
                }
            }
            Expr::Apply(f, args) => {
                let Expr::Lambda(params, _) = &**f else {
                    return Visit::Blocked("only lambdas can be applied".into());
                };
                let mut ready = None;
                for i in self.ordered(args.len()) {
                    path.push(i + 1);
                    let v = self.visit(&args[i], path);
                    path.pop();
                    match v {
                        Visit::Value | Visit::Symbolic => {}
                        Visit::Ready(f) => {
                            ready.get_or_insert(f);
                        }
                        other => return other,
                    }
                }
                if let Some(f) = ready {
                    return self.family_step(f);
                }
                // defaults of parameters without arguments are evaluated next
                let mut k = 0;
                for (i, p) in params.iter().enumerate() {
                    if let Some(d) = &p.default {
                        if i >= args.len() {
                            path.extend([0, k]);
                            let v = self.visit(d, path);
                            path.truncate(path.len() - 2);
                            match v {
                                Visit::Value | Visit::Symbolic => {}
                                Visit::Ready(f) => return self.family_step(f),
                                other => return other,
                            }
                        }
                        k += 1;
                    }
                }
                let rule = if params.is_empty() { RuleId::FuncToBody } else { RuleId::BetaParam };
                Visit::Step(RuleApp::new(rule, path.clone()))
            }
            _ => {
                let kids = e.children();
                let mut ready: Option<Family> = None;
                let mut symbolic = false;
                for i in self.ordered(kids.len()) {
                    path.push(i);
                    let v = self.visit(kids[i], path);
                    path.pop();
                    match v {
                        Visit::Value => {}
                        Visit::Ready(f) => {
                            ready.get_or_insert(f);
                        }
                        Visit::Symbolic => symbolic = true,
                        other => return other,
                    }
                }
                if !symbolic {
                    if let Some(f) = ground_family(e) {
                        return Visit::Ready(f);
                    }
                }
                if let Some(f) = ready {
                    return self.family_step(f);
                }
                match e {
                    Expr::Call(f, _) if crate::value::is_primitive(f) => {
                        if symbolic {
                            Visit::Symbolic
                        } else {
                            Visit::Blocked(format!("{} cannot be evaluated", print_expr(e)))
                        }
                    }
                    Expr::Call(f, _) => self.call_step(f, path),
                    _ if symbolic => Visit::Symbolic,
                    _ => Visit::Blocked(format!("{} cannot be evaluated", print_expr(e))),
                }
            }
        }
    }

    fn ordered(&self, n: usize) -> Vec<usize> {
        match self.order {
            Strategy::Rtl => (0..n).rev().collect(),
            _ => (0..n).collect(),
        }
    }
}

/// The step `strategy` would take next, or why there is none.
pub fn next_step(t: &Trace, strategy: Strategy) -> Result<RuleApp, Halt> {
    let w = Walker { t, order: strategy };
    let e = t.current();
    match w.visit(e, &mut Vec::new()) {
        Visit::Step(app) => Ok(app),
        Visit::Ready(f) => Ok(RuleApp::new(f.rule(), Vec::new())),
        Visit::Value if e.is_literal() => Err(Halt::Terminal),
        Visit::Value => Err(Halt::StuckSymbolic),
        Visit::Error(p) => Err(Halt::Error { path: format_path(&p) }),
        Visit::Blocked(reason) => Err(Halt::Stuck { reason }),
        Visit::Symbolic => {
            let is_int = |v: &str| t.types().is_int_var(v);
            if let Some(c) = algebra::canonical(e, &is_int) {
                if c.size() <= e.size() && c != *e {
                    let app = RuleApp::new(RuleId::Arithmetic, Vec::new()).with("result", print_expr(&c));
                    if t.check(&app).is_ok() {
                        return Ok(app);
                    }
                }
            }
            Err(Halt::StuckSymbolic)
        }
    }
}

/// Takes exactly one step chosen by `strategy`.
pub fn auto_step(t: &mut Trace, strategy: Strategy) -> Result<(), Halt> {
    let app = next_step(t, strategy)?;
    t.apply(&app).map_err(|e| Halt::Stuck { reason: e.to_string() })?;
    Ok(())
}

/// Steps until a value, `ERROR`, a stuck state, or `limit` steps.
pub fn run_to_value(t: &Trace, strategy: Strategy, limit: usize) -> Run {
    let mut t = t.clone();
    let start = t.steps.len();
    loop {
        if t.steps.len() - start >= limit {
            let residual = t.current().clone();
            return Run {
                trace: t,
                outcome: Outcome::StepLimit { residual, limit },
            };
        }
        match auto_step(&mut t, strategy) {
            Ok(()) => {}
            Err(h) => {
                let residual = t.current().clone();
                let outcome = match h {
                    Halt::Terminal => Outcome::Value { value: residual },
                    Halt::Error { .. } => Outcome::Error,
                    Halt::StuckSymbolic => Outcome::StuckSymbolic { residual },
                    Halt::Stuck { reason } => Outcome::Stuck { residual, reason },
                };
                return Run { trace: t, outcome };
            }
        }
    }
}
