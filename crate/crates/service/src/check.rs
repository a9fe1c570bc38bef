//! Request handling as plain functions of the request and the logic table.

use substep_core::analysis::{load, Checked, Diagnostic};
use substep_core::kernel::{self, check_proof, ActionEnv, LogicError, ProofScript};
use substep_core::snm::{self, render_two_column, replay, run_to_value, Strategy, Trace, TraceView, DEFAULT_STEP_LIMIT};
use substep_core::verify::{begin_verification, finish_verification, VerifyReport};

use crate::wire::*;
use crate::{Service, ServiceError};

/// Name under which the machine's rule catalog is served.
pub const SNM: &str = "snm";

impl Service {
    pub fn check(&self, req: &CheckRequest) -> Result<CheckResponse, ServiceError> {
        if req.schema != SCHEMA {
            return Err(ServiceError::BadRequest(format!(
                "unsupported schema version {} (expected {SCHEMA})",
                req.schema
            )));
        }
        let result = if req.logic == SNM {
            CheckResult::Snm(self.check_trace(req)?)
        } else {
            CheckResult::Kernel(self.check_kernel(req)?)
        };
        Ok(CheckResponse { schema: SCHEMA, result })
    }

    fn check_kernel(&self, req: &CheckRequest) -> Result<kernel::CheckReport, ServiceError> {
        let logic = self
            .logics
            .get(&req.logic)
            .ok_or_else(|| ServiceError::NotFound(format!("no logic named '{}'", req.logic)))?;
        let goal_text = req
            .goal
            .as_deref()
            .ok_or_else(|| ServiceError::BadRequest("a kernel check needs a goal".into()))?;
        let goal = logic.parse_goal(goal_text).map_err(|e| match e {
            LogicError::Syntax { .. } => ServiceError::BadRequest(format!("goal: {e}")),
            e => ServiceError::unprocessable(format!("goal: {e}")),
        })?;
        let script = match &req.script {
            None => ProofScript::default(),
            Some(ScriptBody::Text(t)) => kernel::parse_script(t).map_err(ServiceError::BadRequest)?,
            Some(ScriptBody::Nodes(nodes)) => ProofScript { nodes: nodes.clone() },
        };
        let env = ActionEnv {
            snm: req.program.as_deref().map(|p| self.program(p, &req.config)).transpose()?,
        };
        Ok(check_proof(logic, &goal, &script, &env))
    }

    fn program(&self, text: &str, config: &RunConfig) -> Result<Trace, ServiceError> {
        let checked = load_program(text)?;
        Ok(Trace::new(checked)
            .with_hold(config.hold.iter().cloned())
            .with_auto_context(config.auto_context))
    }

    fn step_limit(&self, config: &RunConfig) -> usize {
        config.step_limit.unwrap_or(DEFAULT_STEP_LIMIT).min(self.step_limit_cap)
    }

    fn check_trace(&self, req: &CheckRequest) -> Result<SnmReport, ServiceError> {
        let text = req
            .program
            .as_deref()
            .ok_or_else(|| ServiceError::BadRequest("an snm check needs a program".into()))?;
        let strategy = match req.config.strategy.as_deref() {
            None => Strategy::default(),
            Some(s) => Strategy::parse(s).ok_or_else(|| ServiceError::BadRequest(format!("unknown strategy '{s}'")))?,
        };
        let apps = match &req.script {
            None => None,
            Some(ScriptBody::Text(t)) => Some(snm::parse_script(t).map_err(|e| ServiceError::BadRequest(e.to_string()))?),
            Some(ScriptBody::Nodes(_)) => {
                return Err(ServiceError::BadRequest("an snm script is text, one rule per line".into()))
            }
        };
        let base = self.program(text, &req.config)?;
        let mut obligation = None;
        let start = match &req.verify {
            None => base,
            Some(v) => {
                let (ob, t) = begin_verification(base.checked(), &v.function, v.symbols.as_deref())
                    .map_err(|e| ServiceError::unprocessable(e.to_string()))?;
                obligation = Some(ob);
                t.with_auto_context(req.config.auto_context)
            }
        };
        let (trace, failed, outcome) = match apps {
            Some(apps) => match replay(&start, &apps) {
                Ok(t) => (t, None, None),
                Err((i, t, e)) => (t, Some((i + 1, e.to_string())), None),
            },
            None => {
                let run = run_to_value(&start, strategy, self.step_limit(&req.config));
                (run.trace, None, Some(OutcomeView::from(&run.outcome)))
            }
        };
        let mut valid = failed.is_none();
        let mut message = failed.as_ref().map(|(i, m)| format!("step {i}: {m}"));
        let verification = obligation.map(|mut ob| {
            if let Err(nd) = finish_verification(&mut ob, &trace, &start.checked().registry) {
                valid = false;
                message.get_or_insert_with(|| nd.to_string());
            }
            VerifyReport::new(&ob, &trace, failed.clone())
        });
        Ok(SnmReport {
            valid,
            failed_step: failed.map(|(i, _)| i),
            message,
            rendered: render_two_column(&trace),
            trace: TraceView::of(&trace),
            outcome,
            verification,
        })
    }
}

pub fn load_program(text: &str) -> Result<Checked, ServiceError> {
    load(text).map_err(|diagnostics: Vec<Diagnostic>| ServiceError::Unprocessable {
        message: format!("program rejected with {} diagnostic(s)", diagnostics.len()),
        diagnostics,
    })
}
