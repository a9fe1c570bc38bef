//! Acceptance suite: one PASS/FAIL line per criterion. Failures are reported,
//! never skipped, and the test fails if any criterion does.
//!
//! Tolerances: ints, bools and strings compare exactly; floats compare by
//! bit pattern; printed expressions compare as strings.

use std::io::{Read, Write};
use std::net::TcpStream;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde_json::{json, Value as Json};

use substep_core::analysis::safety::{SafetyEnv, UnsafeReason};
use substep_core::analysis::types::TypeEnv;
use substep_core::analysis::{load, Checked, Entailment, Provenance, TrustRegistry};
use substep_core::kernel::bridge::{bridge_snm_logic, proof_to_trace, trace_to_proof, AFTER};
use substep_core::kernel::logics::{even, first_order};
use substep_core::kernel::{check_proof, parse_script as proof_script, search, ActionEnv};
use substep_core::snm::{parse_script, render_two_column, rule_label, replay, run_to_value, Outcome, Strategy, Trace};
use substep_core::syntax::{parse_expr, parse_program, print_expr, Expr, Type};
use substep_core::value::Value;
use substep_core::verify::{begin_verification, finish_verification, Status, VerifyReport};
use substep_oracle::{generate, Interpreter, RefOutcome, RefValue, Shape};

type Verdict = Result<String, String>;

fn root(rel: &str) -> String {
    format!("{}/../../{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn text(rel: &str) -> String {
    std::fs::read_to_string(root(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn checked(program: &str) -> Checked {
    load(&text(&format!("programs/{program}"))).unwrap()
}

fn scripted(program: &str, script: &str) -> Result<Trace, String> {
    let apps = parse_script(&text(&format!("programs/{script}"))).map_err(|e| e.to_string())?;
    replay(&Trace::new(checked(program)), &apps).map_err(|(i, _, e)| format!("{script} step {}: {e}", i + 1))
}

fn rules(t: &Trace) -> Vec<&'static str> {
    t.steps.iter().map(|s| s.app.rule.id()).collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn last(t: &Trace) -> String {
    print_expr(t.current())
}

fn float_result(t: &Trace, want: f64) -> Result<(), String> {
    match Value::from_expr(t.current()) {
        Some(Value::Float(x)) if x.to_bits() == want.to_bits() => Ok(()),
        _ => Err(format!("expected float {want:?}, reached {}", last(t))),
    }
}

fn ints_first() -> Verdict {
    let t = scripted("ints.py", "ints_defs_first.script")?;
    ensure(rules(&t) == ["name-to-def", "name-to-def", "name-to-def", "arithmetic"], || format!("rules {:?}", rules(&t)))?;
    ensure(last(&t) == "42" && t.steps.len() == 4, || format!("{} after {} steps", last(&t), t.steps.len()))?;
    ensure(render_two_column(&t) == text("golden/ints.trace"), || "two-column output differs from golden/ints.trace".into())?;
    Ok("42 in 4 steps, golden file identical".into())
}

fn ints_late() -> Verdict {
    let t = scripted("ints.py", "ints_defs_late.script")?;
    let want = ["name-to-def", "name-to-def", "arithmetic", "name-to-def", "arithmetic"];
    ensure(rules(&t) == want, || format!("rules {:?}", rules(&t)))?;
    let labels: Vec<String> = t.steps.iter().map(rule_label).collect();
    let order = ["name-to-def (x)", "name-to-def (b)", "arithmetic", "name-to-def (a)", "arithmetic"];
    ensure(labels == order, || format!("labels {labels:?}"))?;
    ensure(last(&t) == "42", || format!("reached {}", last(&t)))?;
    Ok(format!("42 in 5 steps ({})", labels.join("; ")))
}

fn punctuation() -> Verdict {
    let t = scripted("rec_punct.py", "rec_punct.script")?;
    let want = ["name-to-body", "string-arithmetic", "string-arithmetic", "if-true", "string-arithmetic"];
    ensure(rules(&t) == want, || format!("rules {:?}", rules(&t)))?;
    ensure(*t.current() == Expr::Str("What is it?".into()), || format!("reached {}", last(&t)))?;
    Ok("'What is it?' in 5 steps".into())
}

fn library_call() -> Verdict {
    let direct = scripted("pow_call.py", "pow_call_direct.script")?;
    float_result(&direct, 42.0)?;
    let late = scripted("pow_call.py", "pow_call_late.script")?;
    float_result(&late, 42.0)?;
    ensure(rules(&late).contains(&"if-true"), || "late path has no if-true discharge".into())?;
    ensure(rules(&late)[0] == "name-to-spec", || "late path does not start with name-to-spec".into())?;
    Ok("42.0 on both paths (bit-identical)".into())
}

fn power_auto() -> Verdict {
    let r = run_to_value(&Trace::new(checked("power.py")), Strategy::Ltr, 1000);
    ensure(r.outcome == Outcome::Value { value: Expr::Int(25) }, || format!("{:?}", r.outcome))?;
    Ok(format!("25 after {} steps", r.trace.steps.len()))
}

fn power_held() -> Verdict {
    let t = Trace::new(checked("power.py")).with_hold(["x".to_string()]);
    let r = run_to_value(&t, Strategy::Ltr, 1000);
    let want = Outcome::StuckSymbolic { residual: parse_expr("x ** 2").unwrap() };
    ensure(r.outcome == want, || format!("{:?}", r.outcome))?;
    Ok("stuck-symbolic at x**2".into())
}

fn discharge(program: &str) -> Result<(VerifyReport, Option<TrustRegistry>), String> {
    let c = checked(program);
    let symbols = ["x".to_string(), "y".to_string()];
    let (mut ob, t) = begin_verification(&c, "power", Some(&symbols)).map_err(|e| e.to_string())?;
    let apps = parse_script(&text("programs/power_discharge.script")).map_err(|e| e.to_string())?;
    let (t, failed) = match replay(&t, &apps) {
        Ok(t) => (t, None),
        Err((i, t, e)) => (t, Some((i + 1, e.to_string()))),
    };
    let reg = finish_verification(&mut ob, &t, &c.registry).ok();
    Ok((VerifyReport::new(&ob, &t, failed), reg))
}

fn power_verification() -> Verdict {
    let (report, reg) = discharge("power.py")?;
    ensure(report.status == Status::Discharged, || format!("status {:?}", report.status))?;
    let reg = reg.ok_or("no registry after discharge")?;
    ensure(reg.get("power").is_some_and(|e| e.provenance == Provenance::Verified), || "power not in registry".into())?;
    let conj: Vec<&str> = report.conjuncts.iter().map(|c| c.conjunct.as_str()).collect();
    ensure(conj == ["y-1>0", "y>1", "y>y-1"], || format!("conjuncts {conj:?}"))?;
    for c in &report.conjuncts {
        ensure(c.verdict == Entailment::Proved && c.guards == ["y>0", "not y==1"], || format!("{c:?}"))?;
    }
    for (program, refuted) in [("power_same_arg.py", "y>y"), ("power_grows.py", "y>y+1")] {
        let (r, reg) = discharge(program)?;
        ensure(reg.is_none() && r.status != Status::Discharged, || format!("{program} was discharged"))?;
        let got: Vec<&str> = r.refuted().map(|c| c.conjunct.as_str()).collect();
        ensure(got.contains(&refuted), || format!("{program}: refuted {got:?}"))?;
    }
    Ok("discharged; 3 conjuncts proved; y and y+1 mutations refuted".into())
}

fn safety() -> Verdict {
    let names = ["a", "b", "x", "y", "z"];
    let types = TypeEnv::default().with(names.iter().map(|n| (n.to_string(), Type::Int)));
    let env = SafetyEnv::bare(&TrustRegistry::with_builtins(), &types).with_symbols(names.map(String::from));
    let check = |src: &str| env.is_safe(&parse_expr(src).unwrap(), &[]);
    let r = check("2*sqrt(a-b)");
    ensure(!r.safe && r.reason == Some(UnsafeReason::UnprovablePrecondition), || format!("2*sqrt(a-b): {r:?}"))?;
    ensure(check("2*(sqrt(a-b) if a>b else sqrt(b-a))").safe, || "guarded sqrt is unsafe".into())?;
    ensure(check("y>0 and x/y>z").safe, || "y>0 and x/y>z is unsafe".into())?;
    ensure(!check("x/y>z and y>0").safe, || "x/y>z and y>0 is safe".into())?;
    ensure(!check("math.pow(-1.0, 0.5)").safe, || "math.pow(-1.0, 0.5) is safe".into())?;
    for s in [Strategy::Ltr, Strategy::Rtl, Strategy::Normal] {
        let r = run_to_value(&Trace::new(checked("pow_undefined.py")), s, 100);
        ensure(r.outcome == Outcome::Error, || format!("pow_undefined under {s:?}: {:?}", r.outcome))?;
    }
    Ok("5 classifications as published; math.pow(-1.0, 0.5) runs to ERROR".into())
}

fn same_value(v: &Value, r: &RefValue) -> bool {
    match (v, r) {
        (Value::Int(a), RefValue::Int(b)) => a == b,
        (Value::Float(a), RefValue::Float(b)) => a.to_bits() == b.to_bits(),
        (Value::Bool(a), RefValue::Bool(b)) => a == b,
        (Value::Str(a), RefValue::Str(b)) => a == b,
        _ => false,
    }
}

fn oracle() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0xacce);
    let (mut programs, mut errors) = (0, 0);
    for shape in Shape::ALL {
        for _ in 0..200 {
            let src = generate(&mut rng, shape);
            let c = load(&src).map_err(|d| format!("generated program rejected: {d:?}"))?;
            let p = parse_program(&src).unwrap();
            let want = Interpreter::new(&p).run();
            errors += usize::from(want == RefOutcome::Error);
            for s in [Strategy::Ltr, Strategy::Rtl, Strategy::Normal] {
                let got = run_to_value(&Trace::new(c.clone()), s, 20_000).outcome;
                let agree = match (&got, &want) {
                    (Outcome::Value { value }, RefOutcome::Value(r)) => Value::from_expr(value).is_some_and(|v| same_value(&v, r)),
                    (Outcome::Error, RefOutcome::Error) => true,
                    (Outcome::Stuck { .. }, RefOutcome::Fault(_)) => true,
                    _ => false,
                };
                ensure(agree, || format!("{s:?}: {got:?} vs {want:?}\n{src}"))?;
            }
            programs += 1;
        }
    }
    ensure(programs >= 500, || format!("only {programs} programs"))?;
    Ok(format!("{programs} programs x 3 strategies agree ({errors} ERROR outcomes)"))
}

fn kernel() -> Verdict {
    let env = ActionEnv::default();
    let l = even();
    let g4 = l.parse_goal("even(4)").unwrap();
    let r = check_proof(&l, &g4, &proof_script("even-nonzero\neven-nonzero\neven-zero").unwrap(), &env);
    ensure(r.valid && r.steps.len() == 3, || format!("even(4): {:?}", r.message))?;
    let g3 = l.parse_goal("even(3)").unwrap();
    let r = check_proof(&l, &g3, &proof_script("even-nonzero\neven-zero").unwrap(), &env);
    ensure(!r.valid, || "even(3) accepted".into())?;
    ensure(search(&l, &g3, 5, &env).is_none(), || "search found a proof of even(3)".into())?;

    let fo = first_order();
    let lookup = |goal: &str| {
        let r = check_proof(&fo, &fo.parse_goal(goal).unwrap(), &proof_script("ctx-lookup").unwrap(), &env);
        r.steps.first().and_then(|s| s.error.clone())
    };
    let a = lookup("IsIn(x, q, [x:p])");
    ensure(a.as_deref() == Some("Proposition does not match"), || format!("{a:?}"))?;
    let b = lookup("IsIn(x, p, [y:p])");
    ensure(b.as_deref() == Some("Hypothesis not found: x"), || format!("{b:?}"))?;

    let bl = bridge_snm_logic();
    let g = bl.parse_goal("Step(sig, `1 + (0 if True else 100)`, `1 + 0`)").unwrap();
    let r = check_proof(&bl, &g, &proof_script("if-true-ctx").unwrap(), &env);
    ensure(r.valid, || format!("if-true-ctx: {:?}", r.message))?;
    Ok("even(4) valid, even(3) invalid with no proof to depth 5, lookup messages verbatim, if-true-ctx valid".into())
}

fn golden_traces() -> Vec<(&'static str, Trace)> {
    let mut out = Vec::new();
    for (name, program, script) in [
        ("ints", "ints.py", "ints_defs_first.script"),
        ("ints_late", "ints.py", "ints_defs_late.script"),
        ("rec_punct", "rec_punct.py", "rec_punct.script"),
        ("pow_call_direct", "pow_call.py", "pow_call_direct.script"),
        ("pow_call_late", "pow_call.py", "pow_call_late.script"),
    ] {
        out.push((name, scripted(program, script).unwrap()));
    }
    out.push(("power", run_to_value(&Trace::new(checked("power.py")), Strategy::Ltr, 1000).trace));
    let held = Trace::new(checked("power.py")).with_hold(["x".to_string()]);
    out.push(("power_symbolic", run_to_value(&held, Strategy::Ltr, 1000).trace));
    out
}

fn bridge() -> Verdict {
    let l = bridge_snm_logic();
    let mut mutations = 0;
    for (name, t) in golden_traces() {
        ensure(render_two_column(&t) == text(&format!("golden/{name}.trace")), || format!("{name} differs from golden"))?;
        let env = ActionEnv { snm: Some(t.clone()) };
        let (goal, proof) = trace_to_proof(&t);
        let r = check_proof(&l, &goal, &proof, &env);
        ensure(r.valid, || format!("{name}: {:?}", r.message))?;
        let back = proof_to_trace(&t, &goal, &proof).map_err(|e| format!("{name}: {e}"))?;
        ensure(back.steps == t.steps, || format!("{name}: round trip changed the steps"))?;
        for i in 0..proof.nodes.len() {
            let mut bad = proof.clone();
            let wrong = if print_expr(&t.steps[i].after) == "0" { "`1`" } else { "`0`" };
            bad.nodes[i].bindings.insert(AFTER.into(), wrong.into());
            let r = check_proof(&l, &goal, &bad, &env);
            ensure(!r.valid && r.failed_step == Some(i + 1), || format!("{name}: mutation at {} gave {:?}", i + 1, r.failed_step))?;
            ensure(proof_to_trace(&t, &goal, &bad).is_err(), || format!("{name}: mutated proof converted back"))?;
            mutations += 1;
        }
    }
    Ok(format!("7 golden traces round-trip; {mutations} single-step mutations rejected at their index"))
}

fn http(addr: std::net::SocketAddr, body: &str) -> (u16, Json) {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(
        s,
        "POST /check HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = String::new();
    s.read_to_string(&mut raw).unwrap();
    let (head, rest) = raw.split_once("\r\n\r\n").unwrap();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    (status, serde_json::from_str(rest).unwrap_or(Json::Null))
}

fn requests() -> Vec<String> {
    let program = |p: &str| text(&format!("programs/{p}"));
    let mut reqs = Vec::new();
    for i in 0..10usize {
        let n = 2 * (i % 4);
        let steps: Vec<&str> = std::iter::repeat_n("even-nonzero", n / 2).chain(["even-zero"]).collect();
        reqs.push(json!({"schema": 1, "logic": "even", "goal": format!("even({n})"), "script": steps.join("\n")}));
        reqs.push(json!({"schema": 1, "logic": "even", "goal": format!("even({})", n + 1), "script": steps.join("\n")}));
        reqs.push(json!({"schema": 1, "logic": "snm", "program": program("ints.py"), "script": program("ints_defs_first.script")}));
        let (file, strategy) = [("power.py", "ltr"), ("pow_call.py", "rtl"), ("rec_punct.py", "normal")][i % 3];
        reqs.push(json!({"schema": 1, "logic": "snm", "program": program(file), "config": {"strategy": strategy}}));
        reqs.push(match i % 3 {
            0 => json!({"schema": 1, "logic": "first-order", "goal": "Proves(GNil, imp(p, and(p, p)))",
                "script": "imp-intro X=h\nand-intro\nvar\nvar"}),
            1 => json!({"schema": 1, "logic": "even", "goal": "even(p)"}),
            _ => json!({"schema": 1, "logic": "snm", "program": program("power.py"),
                "script": program("power_discharge.script"), "verify": {"function": "power", "symbols": ["x", "y"]}}),
        });
    }
    reqs.into_iter().map(|r| r.to_string()).collect()
}

fn statelessness() -> Verdict {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let service = substep_service::Service::load(Some(std::path::Path::new(&root("logics")))).map_err(|e| e.to_string())?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    rt.spawn(substep_service::serve(listener, service));

    let reqs = requests();
    ensure(reqs.len() == 50, || format!("{} requests", reqs.len()))?;
    let sequential: Vec<(u16, Json)> = reqs.iter().map(|r| http(addr, r)).collect();
    let mut order: Vec<usize> = (0..reqs.len()).collect();
    order.shuffle(&mut StdRng::seed_from_u64(0x5ca1e));
    for &i in &order {
        let got = http(addr, &reqs[i]);
        ensure(got == sequential[i], || format!("request {i} answered differently after shuffling"))?;
    }
    let statuses: Vec<u16> = sequential.iter().map(|(s, _)| *s).collect();
    ensure(statuses.contains(&200) && statuses.iter().any(|&s| s != 200), || format!("statuses {statuses:?}"))?;
    Ok("50 mixed requests: shuffled replay identical to sequential replay over HTTP".into())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("program trace, definitions first", ints_first),
        ("order independence", ints_late),
        ("punctuation by string rules", punctuation),
        ("library call by contract, direct and late", library_call),
        ("power auto run", power_auto),
        ("stuck-symbolic residual", power_held),
        ("power verification and mutations", power_verification),
        ("safety classifications", safety),
        ("oracle equivalence", oracle),
        ("kernel", kernel),
        ("trace/proof bridge", bridge),
        ("service statelessness", statelessness),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why}", i + 1);
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
