//! Backward proof checking.
//!
//! A script is a list of nodes in pre-order. Each node refines one open goal
//! (the first unless it names another) with an inference rule, or runs the
//! builtin action of the goal's relation. Builtin premises of a rule run as
//! soon as the rule is applied; `[auto]` rules close goals between steps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::builtins::{self, ActionEnv};
use super::term::{Judgment, Subst};
use super::unify::{apply_judgment, rename_judgment, unify, unify_judgments};
use super::{Action, Logic};

/// One refinement: a rule (or builtin action) name, optional bindings for
/// its metavariables written as terms, and the open goal it targets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofNode {
    pub rule: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bindings: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<usize>,
}

impl ProofNode {
    pub fn new(rule: &str) -> ProofNode {
        ProofNode {
            rule: rule.into(),
            ..ProofNode::default()
        }
    }

    pub fn bind(mut self, meta: &str, term: impl Into<String>) -> ProofNode {
        self.bindings.insert(meta.into(), term.into());
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProofScript {
    pub nodes: Vec<ProofNode>,
}

impl ProofScript {
    /// Text form, one node per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            out.push_str(&n.rule);
            if let Some(g) = n.goal {
                out.push_str(&format!(" @{g}"));
            }
            for (k, v) in &n.bindings {
                out.push_str(&format!(" {k}={v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Splits on whitespace outside brackets, quotes and backticks.
fn chunks(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for c in line.chars() {
        if let Some(q) = quote {
            cur.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' && q == '"' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '`' => {
                quote = Some(c);
                cur.push(c);
            }
            '(' | '[' => {
                depth += 1;
                cur.push(c);
            }
            ')' | ']' => {
                depth -= 1;
                cur.push(c);
            }
            c if c.is_whitespace() && depth == 0 => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if quote.is_some() || depth != 0 {
        return Err("unbalanced brackets or quotes".into());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

/// `rule [@goal] [M=term ...]` per line; `#` starts a comment line.
pub fn parse_script(text: &str) -> Result<ProofScript, String> {
    let mut nodes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| format!("proof line {}: {m}", i + 1);
        let parts = chunks(line).map_err(err)?;
        let mut node = ProofNode::new(&parts[0]);
        for p in &parts[1..] {
            if let Some(g) = p.strip_prefix('@') {
                node.goal = Some(g.parse().map_err(|_| err(format!("bad goal index '{g}'")))?);
            } else if let Some((k, v)) = p.split_once('=') {
                node.bindings.insert(k.into(), v.into());
            } else {
                return Err(err(format!("expected M=term, found '{p}'")));
            }
        }
        nodes.push(node);
    }
    Ok(ProofScript { nodes })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ProofState {
    pub open: Vec<Judgment>,
}

impl ProofState {
    pub fn new(goal: Judgment) -> ProofState {
        ProofState { open: vec![goal] }
    }

    pub fn is_complete(&self) -> bool {
        self.open.is_empty()
    }
}

fn base_name(m: &str) -> &str {
    m.rsplit_once('_').map_or(m, |(b, k)| if k.chars().all(|c| c.is_ascii_digit()) { b } else { m })
}

fn run_builtin(logic: &Logic, j: &Judgment, s: &mut Subst, env: &ActionEnv) -> Result<bool, String> {
    let Some(Action::Builtin(a)) = logic.relation(&j.rel).map(|r| &r.action) else {
        return Ok(false);
    };
    let inst = apply_judgment(j, s);
    let outs = builtins::run(a, &inst, env)?;
    for (i, t) in outs {
        unify(&inst.args[i], &t, s).map_err(|_| format!("{a} produced {t}, which does not match {}", inst.args[i]))?;
    }
    Ok(true)
}

/// Refines open goal `goal` with `rule` under `bindings` (keyed by the
/// rule's own metavariable names). `fresh` distinguishes metavariables of
/// different rule instances.
pub fn apply_backward(
    logic: &Logic,
    state: &ProofState,
    goal: usize,
    rule: &str,
    bindings: &Subst,
    env: &ActionEnv,
    fresh: usize,
) -> Result<ProofState, String> {
    let g = state
        .open
        .get(goal)
        .ok_or_else(|| format!("there is no open goal #{goal}"))?
        .clone();
    let mut open = state.open.clone();
    let rel = logic.relation(&g.rel).ok_or_else(|| format!("unknown relation '{}'", g.rel))?;
    if let Action::Builtin(a) = &rel.action {
        if rule != a {
            return Err(format!("{} is proved by the builtin action {a}, not {rule}", g.rel));
        }
        run_builtin(logic, &g, &mut Subst::new(), env)?;
        open.remove(goal);
        return Ok(ProofState { open });
    }
    let r = logic.rule(rule).ok_or_else(|| format!("unknown rule '{rule}'"))?;
    let mut s = Subst::new();
    for (k, v) in bindings {
        if !r.metas.contains_key(k) {
            return Err(format!("rule {rule} has no metavariable {k}"));
        }
        s.insert(format!("{k}_{fresh}"), v.clone());
    }
    let concl = rename_judgment(&r.conclusion, fresh);
    unify_judgments(&concl, &g, &mut s).map_err(|_| {
        format!(
            "conclusion {} of {rule} does not unify with {g}",
            apply_judgment(&r.conclusion, &Subst::new())
        )
    })?;
    let mut pending = Vec::new();
    for p in &r.premises {
        let p = rename_judgment(p, fresh);
        if !run_builtin(logic, &p, &mut s, env).map_err(|e| format!("premise {}: {e}", apply_judgment(&p, &s)))? {
            pending.push(p);
        }
    }
    let mut new_goals = Vec::new();
    for p in pending {
        let inst = apply_judgment(&p, &s);
        if let Some(m) = inst.metas().first() {
            return Err(format!(
                "metavariable {} of {rule} is not determined; give it as a binding",
                base_name(m)
            ));
        }
        new_goals.push(inst);
    }
    open.splice(goal..=goal, new_goals);
    Ok(ProofState { open })
}

/// Closes goals that an `[auto]` rule proves outright.
fn auto_close(logic: &Logic, state: ProofState, env: &ActionEnv) -> ProofState {
    let autos: Vec<_> = logic.rules.iter().filter(|r| r.auto).collect();
    if autos.is_empty() {
        return state;
    }
    let mut open = Vec::new();
    for g in state.open {
        let single = ProofState { open: vec![g.clone()] };
        let closed = autos.iter().any(|r| {
            apply_backward(logic, &single, 0, &r.name, &Subst::new(), env, usize::MAX)
                .is_ok_and(|s| s.open.is_empty())
        });
        if !closed {
            open.push(g);
        }
    }
    ProofState { open }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepReport {
    pub index: usize,
    pub rule: String,
    pub status: StepStatus,
    pub before: Vec<Judgment>,
    pub after: Vec<Judgment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub logic: String,
    pub goal: Judgment,
    pub valid: bool,
    /// 1-based index of the first step that failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<usize>,
    pub steps: Vec<StepReport>,
    pub open: Vec<Judgment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

fn parse_bindings(logic: &Logic, node: &ProofNode) -> Result<Subst, String> {
    let Some(rule) = logic.rule(&node.rule) else {
        return Ok(Subst::new());
    };
    let mut s = Subst::new();
    for (k, v) in &node.bindings {
        let sort = rule
            .metas
            .get(k)
            .ok_or_else(|| format!("rule {} has no metavariable {k}", rule.name))?;
        let t = logic.parse_term(v, sort).map_err(|e| format!("binding {k}: {e}"))?;
        if !t.is_closed() {
            return Err(format!("binding {k}={v} must not contain metavariables"));
        }
        s.insert(k.clone(), t);
    }
    Ok(s)
}

/// Replays `script` against `goal`, recording the state around every step.
pub fn check_proof(logic: &Logic, goal: &Judgment, script: &ProofScript, env: &ActionEnv) -> CheckReport {
    let mut state = auto_close(logic, ProofState::new(goal.clone()), env);
    let mut steps = Vec::new();
    let mut failed = None;
    let mut message = None;
    for (i, node) in script.nodes.iter().enumerate() {
        let before = state.open.clone();
        if failed.is_some() {
            steps.push(StepReport {
                index: i + 1,
                rule: node.rule.clone(),
                status: StepStatus::Skipped,
                before: before.clone(),
                after: before,
                error: None,
            });
            continue;
        }
        let result = if state.open.is_empty() {
            Err("no open goals are left".to_string())
        } else {
            parse_bindings(logic, node).and_then(|b| {
                apply_backward(logic, &state, node.goal.unwrap_or(0), &node.rule, &b, env, i)
            })
        };
        match result {
            Ok(next) => {
                state = auto_close(logic, next, env);
                steps.push(StepReport {
                    index: i + 1,
                    rule: node.rule.clone(),
                    status: StepStatus::Ok,
                    before,
                    after: state.open.clone(),
                    error: None,
                });
            }
            Err(e) => {
                failed = Some(i + 1);
                message = Some(format!("step {}: {e}", i + 1));
                steps.push(StepReport {
                    index: i + 1,
                    rule: node.rule.clone(),
                    status: StepStatus::Failed,
                    before: before.clone(),
                    after: before,
                    error: Some(e),
                });
            }
        }
    }
    let valid = failed.is_none() && state.is_complete();
    if failed.is_none() && !valid {
        message = Some(format!("{} goal(s) remain open", state.open.len()));
    }
    CheckReport {
        logic: logic.name.clone(),
        goal: goal.clone(),
        valid,
        failed_step: failed,
        steps,
        open: state.open,
        message,
    }
}

/// Depth-bounded exhaustive backward search using only metavariables the
/// goal determines. Returns the first proof found.
pub fn search(logic: &Logic, goal: &Judgment, depth: usize, env: &ActionEnv) -> Option<ProofScript> {
    fn go(logic: &Logic, state: ProofState, depth: usize, env: &ActionEnv, acc: &mut Vec<ProofNode>) -> bool {
        let Some(g) = state.open.first() else {
            return true;
        };
        if depth == 0 {
            return false;
        }
        let names: Vec<String> = match logic.relation(&g.rel).map(|r| &r.action) {
            Some(Action::Builtin(a)) => vec![a.clone()],
            _ => logic.rules.iter().map(|r| r.name.clone()).collect(),
        };
        for name in names {
            if let Ok(next) = apply_backward(logic, &state, 0, &name, &Subst::new(), env, acc.len()) {
                acc.push(ProofNode::new(&name));
                if go(logic, auto_close(logic, next, env), depth - 1, env, acc) {
                    return true;
                }
                acc.pop();
            }
        }
        false
    }
    let mut acc = Vec::new();
    let start = auto_close(logic, ProofState::new(goal.clone()), env);
    go(logic, start, depth, env, &mut acc).then_some(ProofScript { nodes: acc })
}
