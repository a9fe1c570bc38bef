use proptest::prelude::*;

use substep_core::analysis::load;
use substep_core::kernel::bridge::{bridge_snm_logic, proof_to_trace, trace_to_proof, BridgeError, AFTER};
use substep_core::kernel::logics::{even, first_order};
use substep_core::kernel::{
    apply_backward, check_proof, parse_script, search, ActionEnv, Judgment, ProofNode, ProofScript, ProofState,
    StepStatus, Subst, Term,
};
use substep_core::snm::{parse_script as parse_snm_script, replay, run_to_value, Strategy as Order, Trace};

fn program(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../programs/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn trace_of(name: &str) -> Trace {
    Trace::new(load(&program(name)).unwrap())
}

fn script(rules: &[&str]) -> ProofScript {
    ProofScript {
        nodes: rules.iter().map(|r| ProofNode::new(r)).collect(),
    }
}

fn env() -> ActionEnv {
    ActionEnv::default()
}

#[test]
fn even_four_in_three_steps() {
    let l = even();
    let goal = l.parse_goal("even(4)").unwrap();
    let r = check_proof(&l, &goal, &script(&["even-nonzero", "even-nonzero", "even-zero"]), &env());
    assert!(r.valid, "{r:?}");
    assert_eq!(r.steps.len(), 3);
    assert!(r.open.is_empty());
    let shown: Vec<String> = r.steps.iter().map(|s| s.before[0].to_string()).collect();
    assert_eq!(shown, ["even(4)", "even(2)", "even(0)"]);
    assert!(r.steps[2].after.is_empty());
}

#[test]
fn explicit_binding_refines_to_premise() {
    let l = even();
    let goal = l.parse_goal("even(4)").unwrap();
    let mut b = Subst::new();
    b.insert("N".into(), Term::nat(2));
    let s = apply_backward(&l, &ProofState::new(goal), 0, "even-nonzero", &b, &env(), 0).unwrap();
    assert_eq!(s.open, vec![l.parse_goal("even(2)").unwrap()]);
    let mut wrong = Subst::new();
    wrong.insert("N".into(), Term::nat(3));
    let goal = l.parse_goal("even(4)").unwrap();
    assert!(apply_backward(&l, &ProofState::new(goal), 0, "even-nonzero", &wrong, &env(), 0).is_err());
}

#[test]
fn even_zero_closes_even_zero() {
    let l = even();
    let goal = l.parse_goal("even(0)").unwrap();
    let s = apply_backward(&l, &ProofState::new(goal), 0, "even-zero", &Subst::new(), &env(), 0).unwrap();
    assert!(s.is_complete());
}

#[test]
fn wrong_axiom_fails_at_step_one() {
    let l = even();
    let goal = l.parse_goal("even(4)").unwrap();
    let r = check_proof(&l, &goal, &script(&["even-zero"]), &env());
    assert!(!r.valid);
    assert_eq!(r.failed_step, Some(1));
    assert!(r.message.unwrap().contains("does not unify"));
}

#[test]
fn even_three_is_not_provable() {
    let l = even();
    let goal = l.parse_goal("even(3)").unwrap();
    let r = check_proof(&l, &goal, &script(&["even-nonzero"]), &env());
    assert!(!r.valid);
    assert_eq!(r.failed_step, None);
    assert_eq!(r.open, vec![l.parse_goal("even(1)").unwrap()]);
    let r = check_proof(&l, &goal, &script(&["even-nonzero", "even-zero"]), &env());
    assert_eq!(r.failed_step, Some(2));
    for depth in 0..=5 {
        assert_eq!(search(&l, &goal, depth, &env()), None);
    }
    assert_eq!(search(&l, &l.parse_goal("even(4)").unwrap(), 5, &env()).unwrap().nodes.len(), 3);
}

#[test]
fn failed_step_is_followed_by_skipped_steps() {
    let l = even();
    let goal = l.parse_goal("even(4)").unwrap();
    let r = check_proof(&l, &goal, &script(&["even-zero", "even-nonzero", "even-zero"]), &env());
    let st: Vec<_> = r.steps.iter().map(|s| s.status).collect();
    assert_eq!(st, [StepStatus::Failed, StepStatus::Skipped, StepStatus::Skipped]);
}

#[test]
fn context_lookup() {
    let l = first_order();
    let check = |goal: &str| {
        let g = l.parse_goal(goal).unwrap();
        check_proof(&l, &g, &script(&["ctx-lookup"]), &env())
    };
    assert!(check("IsIn(x, p, [x:p, y:q])").valid);
    assert_eq!(
        check("IsIn(x, q, [x:p])").steps[0].error.as_deref(),
        Some("Proposition does not match")
    );
    assert_eq!(
        check("IsIn(z, p, [x:p])").steps[0].error.as_deref(),
        Some("Hypothesis not found: z")
    );
}

#[test]
fn first_order_proof_uses_lookup() {
    let l = first_order();
    let g = l.parse_goal("Proves([], imp(p, and(p, p)))").unwrap();
    let s = parse_script("imp-intro X=h\nand-intro\nvar\nvar\n").unwrap();
    let r = check_proof(&l, &g, &s, &env());
    assert!(r.valid, "{r:?}");
    let g = l.parse_goal("Proves([h:q], p)").unwrap();
    let r = check_proof(&l, &g, &parse_script("var X=h").unwrap(), &env());
    assert!(r.message.unwrap().contains("Proposition does not match"));
}

#[test]
fn if_true_in_context() {
    let l = bridge_snm_logic();
    let g = l.parse_goal("Step(sig, `1 + (0 if True else 100)`, `1 + 0`)").unwrap();
    let r = check_proof(&l, &g, &script(&["if-true-ctx"]), &env());
    assert!(r.valid, "{r:?}");
    assert_eq!(r.steps.len(), 1);
    let g = l.parse_goal("Step(sig, `1 + (0 if True else 100)`, `1 + 100`)").unwrap();
    assert!(!check_proof(&l, &g, &script(&["if-true-ctx"]), &env()).valid);
}

#[test]
fn report_law_and_determinism() {
    let l = even();
    let goal = l.parse_goal("even(6)").unwrap();
    let s = script(&["even-nonzero", "even-nonzero", "even-zero", "even-zero"]);
    let a = check_proof(&l, &goal, &s, &env());
    assert_eq!(a.steps.len(), s.nodes.len());
    for w in a.steps.windows(2) {
        assert_eq!(w[0].after, w[1].before);
    }
    let b = check_proof(&l, &goal, &s, &env());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

fn snm_env(t: &Trace) -> ActionEnv {
    ActionEnv { snm: Some(t.clone()) }
}

fn bridge_round_trip(t: &Trace) {
    let l = bridge_snm_logic();
    let (goal, proof) = trace_to_proof(t);
    assert_eq!(proof.nodes.len(), t.steps.len());
    let r = check_proof(&l, &goal, &proof, &snm_env(t));
    assert!(r.valid, "{}", r.message.unwrap_or_default());
    let back = proof_to_trace(t, &goal, &proof).unwrap();
    assert_eq!(back.steps, t.steps);
}

#[test]
fn ints_trace_converts_to_a_four_step_proof() {
    let t = run_to_value(&trace_of("ints.py"), Order::default(), 100).trace;
    assert_eq!(t.steps.len(), 4);
    bridge_round_trip(&t);
}

#[test]
fn terminal_value_has_an_empty_proof() {
    let base = trace_of("ints.py");
    let t = base.restart(substep_core::syntax::Expr::Int(42));
    let (goal, proof) = trace_to_proof(&t);
    assert!(proof.nodes.is_empty());
    assert!(check_proof(&bridge_snm_logic(), &goal, &proof, &snm_env(&t)).valid);
}

#[test]
fn tampered_step_fails_at_its_index() {
    let t = run_to_value(&trace_of("ints.py"), Order::default(), 100).trace;
    let l = bridge_snm_logic();
    let (goal, proof) = trace_to_proof(&t);
    for i in 0..proof.nodes.len() {
        let mut bad = proof.clone();
        bad.nodes[i].bindings.insert(AFTER.into(), "`7 + 7`".into());
        let r = check_proof(&l, &goal, &bad, &snm_env(&t));
        assert!(!r.valid);
        assert_eq!(r.failed_step, Some(i + 1));
        assert!(matches!(
            proof_to_trace(&t, &goal, &bad),
            Err(BridgeError::Step { index, .. }) if index == i + 1
        ));
    }
}

#[test]
fn corpus_traces_round_trip() {
    let runs = ["ints.py", "rec_punct.py", "pow_call.py", "power.py"];
    for p in runs {
        bridge_round_trip(&run_to_value(&trace_of(p), Order::default(), 200).trace);
    }
    let scripted = [
        ("ints.py", "ints_defs_first.script"),
        ("ints.py", "ints_defs_late.script"),
        ("rec_punct.py", "rec_punct.script"),
        ("pow_call.py", "pow_call_direct.script"),
        ("pow_call.py", "pow_call_late.script"),
    ];
    for (p, s) in scripted {
        let apps = parse_snm_script(&program(s)).unwrap();
        let t = replay(&trace_of(p), &apps).map_err(|(i, _, e)| format!("{s} {i}: {e}")).unwrap();
        bridge_round_trip(&t);
    }
}

// Every solution maps each metavariable to a subterm of the goal, so
// enumerating those assignments decides unifiability.

fn prop() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![Just(Term::atom("p")), Just(Term::atom("q"))];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::App("and".into(), vec![a, b])),
            (inner.clone(), inner).prop_map(|(a, b)| Term::App("imp".into(), vec![a, b])),
        ]
    })
}

fn pattern() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::atom("p")),
        Just(Term::atom("q")),
        Just(Term::Meta("P".into())),
        Just(Term::Meta("Q".into())),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::App("and".into(), vec![a, b])),
            (inner.clone(), inner).prop_map(|(a, b)| Term::App("imp".into(), vec![a, b])),
        ]
    })
}

fn subterms(t: &Term, out: &mut Vec<Term>) {
    out.push(t.clone());
    if let Term::App(_, args) = t {
        for a in args {
            subterms(a, out);
        }
    }
}

fn plug(t: &Term, p: &Term, q: &Term) -> Term {
    match t {
        Term::Meta(m) if m == "P" => p.clone(),
        Term::Meta(_) => q.clone(),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| plug(a, p, q)).collect()),
        other => other.clone(),
    }
}

fn brute_force(pat: &Term, goal: &Term) -> bool {
    let mut subs = Vec::new();
    subterms(goal, &mut subs);
    subs.iter().any(|p| subs.iter().any(|q| &plug(pat, p, q) == goal))
}

proptest! {
    #[test]
    fn backward_step_iff_a_substitution_exists(pat in pattern(), goal in prop()) {
        let src = format!(
            "logic t\nsort Prop = atom | and(Prop, Prop) | imp(Prop, Prop)\nrelation Holds(Prop)\nrule r: / Holds({pat})\n"
        );
        let l = substep_core::kernel::register_logic(&src).unwrap();
        let g = Judgment { rel: "Holds".into(), args: vec![goal.clone()] };
        let ok = apply_backward(&l, &ProofState::new(g), 0, "r", &Subst::new(), &env(), 0).is_ok();
        prop_assert_eq!(ok, brute_force(&pat, &goal));
    }

    #[test]
    fn even_proofs_exist_exactly_for_even_numbers(n in 0u64..9) {
        let l = even();
        let goal = l.parse_goal(&format!("even({n})")).unwrap();
        let found = search(&l, &goal, 6, &env());
        prop_assert_eq!(found.is_some(), n % 2 == 0);
        if let Some(s) = found {
            prop_assert!(check_proof(&l, &goal, &s, &env()).valid);
        }
    }
}
