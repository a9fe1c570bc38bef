//! Trace output: the two-column text layout and a structured view.

use serde::{Deserialize, Serialize};

use crate::syntax::subst::{format_path, get_at};
use crate::syntax::*;

use super::{Mode, RuleApp, RuleId, Step, Trace};

/// Width at which long conditionals are broken over several lines.
pub const LAYOUT_WIDTH: usize = 60;

fn and_list(names: &[&str]) -> String {
    match names {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Right-column text for a step, e.g. `name-to-def (x)`.
pub fn rule_label(step: &Step) -> String {
    let app = &step.app;
    let target = get_at(&step.before, &app.target);
    let detail: Option<String> = match app.rule {
        RuleId::Arithmetic | RuleId::BooleanArithmetic => app.param("result").map(|r| format!("= {r}")),
        RuleId::StringArithmetic => app.param("result").map(|r| format!("= {r}")).or_else(|| match target {
            Some(Expr::Slice(..)) => Some("[:]".into()),
            Some(Expr::Binary(op, ..)) => Some(op.symbol().into()),
            Some(Expr::Call(f, _)) => Some(f.clone()),
            _ => None,
        }),
        RuleId::NameToDef => {
            let names: Vec<String> = match (app.param("var"), target) {
                (Some(list), _) => list.split(',').map(|s| s.trim().to_string()).collect(),
                (None, Some(Expr::Var(v))) => vec![v.clone()],
                _ => vec![],
            };
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let mut d = and_list(&refs);
            if !step.removed.is_empty() {
                d.push_str(", removed");
            }
            Some(d)
        }
        RuleId::NameToBody | RuleId::NameToSpec | RuleId::NameToSpecSimpler | RuleId::FuncToLambda => match target {
            Some(Expr::Call(f, _) | Expr::Var(f)) => Some(f.clone()),
            _ => None,
        },
        RuleId::CasesSplit => app.param("guard").map(str::to_string),
        RuleId::BetaParam => app.param("var").map(str::to_string).or_else(|| match target {
            Some(Expr::Apply(f, _)) => match &**f {
                Expr::Lambda(ps, _) => ps.first().map(|p| p.name.clone()),
                _ => None,
            },
            _ => None,
        }),
        RuleId::AlphaFresh => app.param("map").map(|m| m.replace(':', " as ")),
        _ => None,
    };
    match detail {
        Some(d) if !d.is_empty() => format!("{} ({d})", app.rule),
        _ => app.rule.to_string(),
    }
}

/// Expressions in the left column, one arrow row per step:
///
/// ```text
/// x        |
/// ---------+-- name-to-def (x)
/// 2*a+2*b  |
/// ```
pub fn render_two_column(t: &Trace) -> String {
    render_with_footer(t, None)
}

/// As [`render_two_column`], with a closing arrow row such as `Q.E.D.`.
pub fn render_with_footer(t: &Trace, footer: Option<&str>) -> String {
    let blocks: Vec<Vec<String>> = t.states().map(|e| print_layout(e, LAYOUT_WIDTH)).collect();
    let width = blocks
        .iter()
        .flatten()
        .map(|l| l.chars().count())
        .max()
        .unwrap_or(0)
        + 1;
    let mut out = String::new();
    let arrow = |out: &mut String, label: &str| {
        out.push_str(&"-".repeat(width));
        out.push_str("+-- ");
        out.push_str(label);
        out.push('\n');
    };
    for (i, block) in blocks.iter().enumerate() {
        if i > 0 {
            arrow(&mut out, &rule_label(&t.steps[i - 1]));
        }
        for line in block {
            let pad = width - line.chars().count();
            out.push_str(line);
            out.push_str(&" ".repeat(pad));
            out.push_str("|\n");
        }
    }
    if let Some(f) = footer {
        arrow(&mut out, f);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepView {
    pub index: usize,
    #[serde(flatten)]
    pub app: RuleApp,
    pub label: String,
    pub before: String,
    pub after: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed: Vec<String>,
}

/// Serializable summary of a trace, with printed expressions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceView {
    pub mode: Mode,
    pub initial: String,
    pub steps: Vec<StepView>,
    #[serde(rename = "final")]
    pub last: String,
}

impl TraceView {
    pub fn of(t: &Trace) -> TraceView {
        TraceView {
            mode: t.mode,
            initial: print_expr(&t.initial),
            steps: t
                .steps
                .iter()
                .enumerate()
                .map(|(i, s)| StepView {
                    index: i + 1,
                    app: s.app.clone(),
                    label: rule_label(s),
                    before: print_expr(&s.before),
                    after: print_expr(&s.after),
                    removed: s.removed.clone(),
                })
                .collect(),
            last: print_expr(t.current()),
        }
    }
}

/// `rule @path k=v` for one application.
pub fn format_app(app: &RuleApp) -> String {
    let mut s = format!("{} @{}", app.rule, format_path(&app.target));
    for (k, v) in &app.params {
        if v.contains(char::is_whitespace) || v.contains('"') || v.is_empty() {
            s.push_str(&format!(" {k}=\"{}\"", v.replace('\\', "\\\\").replace('"', "\\\"")));
        } else {
            s.push_str(&format!(" {k}={v}"));
        }
    }
    s
}
