//! Reference traces. Set UPDATE_GOLDEN=1 to rewrite the files under golden/.

use substep_core::analysis::load;
use substep_core::snm::{parse_script, render_two_column, replay, run_to_value, Outcome, Strategy, Trace};
use substep_core::syntax::{parse_expr, print_expr};

fn root(rel: &str) -> String {
    format!("{}/../../{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn trace_of(name: &str) -> Trace {
    Trace::new(load(&std::fs::read_to_string(root(&format!("programs/{name}"))).unwrap()).unwrap())
}

fn scripted(program: &str, script: &str) -> Trace {
    let apps = parse_script(&std::fs::read_to_string(root(&format!("programs/{script}"))).unwrap()).unwrap();
    replay(&trace_of(program), &apps)
        .map_err(|(i, _, e)| format!("{script} step {i}: {e}"))
        .unwrap()
}

fn golden(name: &str, t: &Trace) {
    let path = root(&format!("golden/{name}.trace"));
    let got = render_two_column(t);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {path}; run with UPDATE_GOLDEN=1"));
    assert_eq!(got, want, "{name} differs from its golden file");
}

fn last(t: &Trace) -> String {
    print_expr(t.current())
}

#[test]
fn ints_in_definition_order() {
    let t = scripted("ints.py", "ints_defs_first.script");
    assert_eq!(t.steps.len(), 4);
    assert_eq!(last(&t), "42");
    golden("ints", &t);
}

#[test]
fn ints_in_another_order() {
    let t = scripted("ints.py", "ints_defs_late.script");
    assert_eq!(t.steps.len(), 5);
    assert_eq!(last(&t), "42");
    golden("ints_late", &t);
}

#[test]
fn ints_auto_run_matches_the_script() {
    let r = run_to_value(&trace_of("ints.py"), Strategy::Ltr, 100);
    assert_eq!(r.trace.steps, scripted("ints.py", "ints_defs_first.script").steps);
}

#[test]
fn rec_punct() {
    let t = scripted("rec_punct.py", "rec_punct.script");
    assert_eq!(t.steps.len(), 5);
    assert_eq!(last(&t), "'What is it?'");
    golden("rec_punct", &t);
}

#[test]
fn pow_call_both_paths() {
    for (script, name) in [("pow_call_direct.script", "pow_call_direct"), ("pow_call_late.script", "pow_call_late")] {
        let t = scripted("pow_call.py", script);
        assert_eq!(last(&t), "42.0", "{script}");
        golden(name, &t);
    }
    let r = run_to_value(&trace_of("pow_call.py"), Strategy::Ltr, 100);
    assert_eq!(r.outcome, Outcome::Value { value: parse_expr("42.0").unwrap() });
}

#[test]
fn pow_outside_its_domain_is_an_error() {
    for s in [Strategy::Ltr, Strategy::Rtl, Strategy::Normal] {
        let r = run_to_value(&trace_of("pow_undefined.py"), s, 100);
        assert_eq!(r.outcome, Outcome::Error, "{s:?}");
    }
}

#[test]
fn power_auto_run() {
    let r = run_to_value(&trace_of("power.py"), Strategy::Ltr, 100);
    assert_eq!(r.outcome, Outcome::Value { value: parse_expr("25").unwrap() });
    assert_eq!(r.trace.steps.len(), 10);
    golden("power", &r.trace);
}

#[test]
fn power_with_x_held_is_stuck_symbolic() {
    let t = trace_of("power.py").with_hold(["x".to_string()]);
    let r = run_to_value(&t, Strategy::Ltr, 100);
    assert_eq!(
        r.outcome,
        Outcome::StuckSymbolic { residual: parse_expr("x**2").unwrap() }
    );
    golden("power_symbolic", &r.trace);
}

#[test]
fn power_with_both_names_in_one_step() {
    let mut t = trace_of("power.py");
    t.apply(&substep_core::snm::script::parse_line("name-to-def @root var=x,y").unwrap().unwrap())
        .unwrap();
    assert_eq!(last(&t), "power(3+2, 2)");
    let r = run_to_value(&t, Strategy::Ltr, 100);
    assert_eq!(r.trace.steps.len(), 9);
    assert_eq!(last(&r.trace), "25");
}
