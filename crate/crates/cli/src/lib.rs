//! Command-line front end. Every command except `serve` builds a service
//! request, so the CLI and the HTTP API give the same answers.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use substep_core::snm::RuleId;
use substep_service::wire::{CheckRequest, CheckResponse, CheckResult, RunConfig, ScriptBody, SnmReport, VerifyTarget, SCHEMA};
use substep_service::{Service, ServiceError, SNM};

#[derive(Debug, Parser)]
#[command(name = "substep", version, about = "Step programs by substitution, verify functions, check proofs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a program's goal to a value, or replay a rule script.
    Trace {
        file: PathBuf,
        /// Rule script to replay instead of stepping automatically.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Globals to leave unsubstituted, comma separated.
        #[arg(long, value_delimiter = ',')]
        hold: Vec<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Verify a function against its contract.
    Verify {
        file: PathBuf,
        function: String,
        /// Discharge script; without one the default strategy runs.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Names of the symbolic arguments, comma separated.
        #[arg(long, value_delimiter = ',')]
        symbols: Option<Vec<String>>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check a proof of a goal in a kernel logic.
    Check {
        logic: String,
        goal: String,
        proof: PathBuf,
        /// Program for logics whose rules run the machine.
        #[arg(long)]
        program: Option<PathBuf>,
        #[arg(long, env = "SUBSTEP_LOGICS")]
        logics: Option<PathBuf>,
        #[arg(long, env = "SUBSTEP_FORMAT", default_value = "two-column")]
        format: Format,
    },
    /// List the rules of a logic (`snm` for the machine).
    Rules {
        #[arg(default_value = SNM)]
        logic: String,
        #[arg(long, env = "SUBSTEP_LOGICS")]
        logics: Option<PathBuf>,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "SUBSTEP_LISTEN", default_value = "127.0.0.1:8080")]
        listen: String,
        #[arg(long, env = "SUBSTEP_LOGICS")]
        logics: Option<PathBuf>,
        /// Largest step limit a request may use.
        #[arg(long, env = "SUBSTEP_STEP_LIMIT", default_value_t = substep_service::DEFAULT_STEP_LIMIT_CAP)]
        step_limit: usize,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, env = "SUBSTEP_STRATEGY", default_value = "ltr")]
    pub strategy: StrategyArg,
    #[arg(long, env = "SUBSTEP_STEP_LIMIT", default_value_t = substep_core::snm::DEFAULT_STEP_LIMIT)]
    pub step_limit: usize,
    /// Let boolean arithmetic consult the guards in force.
    #[arg(long, env = "SUBSTEP_AUTO_CONTEXT")]
    pub auto_context: bool,
    #[arg(long, env = "SUBSTEP_FORMAT", default_value = "two-column")]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Ltr,
    Rtl,
    Normal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    TwoColumn,
    Structured,
}

/// Result categories and their exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    /// A value, a stuck-symbolic residual, a valid proof or a discharged obligation.
    Success,
    /// The input could not be read, parsed or checked.
    Diagnostics,
    /// The run reached `ERROR`.
    Error,
    /// No rule applies, or the step limit was hit.
    Stuck,
    /// An invalid proof or script, or an obligation not discharged.
    Rejected,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Success => 0,
            Category::Diagnostics => 1,
            Category::Error => 2,
            Category::Stuck => 3,
            Category::Rejected => 4,
        }
    }
}

/// Category of a check response.
pub fn categorize(res: &CheckResponse) -> Category {
    match &res.result {
        CheckResult::Kernel(r) if r.valid => Category::Success,
        CheckResult::Kernel(_) => Category::Rejected,
        CheckResult::Snm(r) if !r.valid => Category::Rejected,
        CheckResult::Snm(r) if r.verification.is_some() => Category::Success,
        CheckResult::Snm(r) => match r.outcome.as_ref().map(|o| o.kind) {
            Some("value" | "stuck-symbolic") => Category::Success,
            Some("error") => Category::Error,
            Some(_) => Category::Stuck,
            None if r.trace.last == "ERROR" => Category::Error,
            None => Category::Success,
        },
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn service(logics: Option<&Path>) -> Result<Service, String> {
    Service::load(logics).map_err(|e| e.to_string())
}

fn config(run: &RunArgs, hold: Vec<String>) -> RunConfig {
    let strategy = match run.strategy {
        StrategyArg::Ltr => "ltr",
        StrategyArg::Rtl => "rtl",
        StrategyArg::Normal => "normal",
    };
    RunConfig {
        strategy: Some(strategy.into()),
        auto_context: run.auto_context,
        step_limit: Some(run.step_limit),
        hold,
    }
}

fn report_error(e: &ServiceError, err: &mut dyn Write) {
    let _ = writeln!(err, "error: {e}");
    if let ServiceError::Unprocessable { diagnostics, .. } = e {
        for d in diagnostics {
            let at = match (d.line, &d.path) {
                (Some(l), _) => format!("line {l}: "),
                (None, Some(p)) => format!("at {p}: "),
                _ => String::new(),
            };
            let _ = writeln!(err, "  [{}] {at}{}", d.code, d.message);
        }
    }
}

fn print_snm(r: &SnmReport, format: Format, res: &CheckResponse, out: &mut dyn Write, err: &mut dyn Write) {
    if format == Format::Structured {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(res).expect("responses serialize"));
        return;
    }
    let _ = write!(out, "{}", r.rendered);
    if let Some(v) = &r.verification {
        let _ = writeln!(out);
        for c in &v.conjuncts {
            let _ = writeln!(out, "{:?}: {} under {}", c.verdict, c.conjunct, c.guards.join(", "));
        }
        if r.valid {
            let _ = writeln!(out, "Q.E.D. {} is now trusted", v.function);
        } else {
            let _ = writeln!(out, "not discharged");
            let _ = writeln!(out, "  reached: {}", v.last);
            let _ = writeln!(out, "  target:  {}", v.target);
        }
    }
    if let Some(m) = &r.message {
        let _ = writeln!(err, "{m}");
    }
    if let Some(o) = &r.outcome {
        let detail = [o.expr.as_deref(), o.reason.as_deref()].into_iter().flatten().collect::<Vec<_>>().join(": ");
        let _ = writeln!(err, "outcome: {}{}{detail}", o.kind, if detail.is_empty() { "" } else { " " });
    }
}

fn print_kernel(res: &CheckResponse, format: Format, out: &mut dyn Write) {
    let CheckResult::Kernel(r) = &res.result else { return };
    if format == Format::Structured {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(res).expect("responses serialize"));
        return;
    }
    let list = |js: &[substep_core::kernel::Judgment]| {
        if js.is_empty() {
            "(none)".to_string()
        } else {
            js.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(", ")
        }
    };
    for s in &r.steps {
        let _ = writeln!(out, "{:>3}. {:<16} {:?}: {} => {}", s.index, s.rule, s.status, list(&s.before), list(&s.after));
        if let Some(e) = &s.error {
            let _ = writeln!(out, "     {e}");
        }
    }
    if r.valid {
        let _ = writeln!(out, "valid: {}", r.goal);
    } else {
        let _ = writeln!(out, "invalid: {}", r.message.as_deref().unwrap_or("open goals remain"));
        let _ = writeln!(out, "open: {}", list(&r.open));
    }
}

fn respond(svc: &Service, req: CheckRequest, err: &mut dyn Write) -> Result<CheckResponse, Category> {
    svc.check(&req).map_err(|e| {
        report_error(&e, err);
        Category::Diagnostics
    })
}

fn rules(svc: &Service, logic: &str, out: &mut dyn Write) -> Result<(), String> {
    if logic == SNM {
        for r in RuleId::ALL {
            let params: Vec<String> = r
                .params()
                .iter()
                .map(|p| if p.required { p.name.to_string() } else { format!("[{}]", p.name) })
                .collect();
            let _ = writeln!(out, "{:<22} {:<10} {:<28} {}", r.id(), r.family(), params.join(" "), r.summary());
        }
        return Ok(());
    }
    let l = svc.logics.get(logic).ok_or_else(|| format!("no logic named '{logic}'"))?;
    for r in &l.rules {
        let premises: Vec<String> = r.premises.iter().map(|p| p.to_string()).collect();
        let auto = if r.auto { " [auto]" } else { "" };
        let sep = if premises.is_empty() { "" } else { " " };
        let _ = writeln!(out, "{}{auto}: {}{sep}/ {}", r.name, premises.join(", "), r.conclusion);
    }
    Ok(())
}

/// Runs every command but `serve`; returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let outcome = match cli.command {
        Command::Trace { file, script, hold, run } => (|| {
            let program = read(&file).map_err(|m| (m, Category::Diagnostics))?;
            let script = script.map(|s| read(&s)).transpose().map_err(|m| (m, Category::Diagnostics))?;
            let req = CheckRequest {
                schema: SCHEMA,
                logic: SNM.into(),
                goal: None,
                script: script.map(ScriptBody::Text),
                program: Some(program),
                config: config(&run, hold),
                verify: None,
            };
            let res = respond(&Service::default(), req, err).map_err(|c| (String::new(), c))?;
            if let CheckResult::Snm(r) = &res.result {
                print_snm(r, run.format, &res, out, err);
            }
            Ok(categorize(&res))
        })(),
        Command::Verify { file, function, script, symbols, run } => (|| {
            let program = read(&file).map_err(|m| (m, Category::Diagnostics))?;
            let script = script.map(|s| read(&s)).transpose().map_err(|m| (m, Category::Diagnostics))?;
            let req = CheckRequest {
                schema: SCHEMA,
                logic: SNM.into(),
                goal: None,
                script: script.map(ScriptBody::Text),
                program: Some(program),
                config: config(&run, vec![]),
                verify: Some(VerifyTarget { function, symbols }),
            };
            let res = respond(&Service::default(), req, err).map_err(|c| (String::new(), c))?;
            if let CheckResult::Snm(r) = &res.result {
                print_snm(r, run.format, &res, out, err);
            }
            Ok(categorize(&res))
        })(),
        Command::Check { logic, goal, proof, program, logics, format } => (|| {
            let svc = service(logics.as_deref()).map_err(|m| (m, Category::Diagnostics))?;
            let script = read(&proof).map_err(|m| (m, Category::Diagnostics))?;
            let program = program.map(|p| read(&p)).transpose().map_err(|m| (m, Category::Diagnostics))?;
            let req = CheckRequest {
                schema: SCHEMA,
                logic,
                goal: Some(goal),
                script: Some(ScriptBody::Text(script)),
                program,
                config: RunConfig::default(),
                verify: None,
            };
            let res = respond(&svc, req, err).map_err(|c| (String::new(), c))?;
            print_kernel(&res, format, out);
            Ok(categorize(&res))
        })(),
        Command::Rules { logic, logics } => service(logics.as_deref())
            .and_then(|svc| rules(&svc, &logic, out))
            .map(|()| Category::Success)
            .map_err(|m| (m, Category::Diagnostics)),
        Command::Serve { .. } => {
            let _ = writeln!(err, "serve runs from the binary entry point");
            Err((String::new(), Category::Diagnostics))
        }
    };
    match outcome {
        Ok(c) => c.exit_code(),
        Err((message, c)) => {
            if !message.is_empty() {
                let _ = writeln!(err, "error: {message}");
            }
            c.exit_code()
        }
    }
}
