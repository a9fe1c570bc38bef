//! Auto-stepping agrees with a direct interpreter on random ground programs.

use rand::rngs::StdRng;
use rand::SeedableRng;

use substep_core::analysis::load;
use substep_core::snm::{run_to_value, Outcome, Strategy, Trace};
use substep_core::syntax::parse_program;
use substep_core::value::Value;
use substep_oracle::{generate, Interpreter, RefOutcome, RefValue, Shape};

pub const PROGRAMS_PER_SHAPE: usize = 200;
const STEP_LIMIT: usize = 20_000;

fn same_value(v: &Value, r: &RefValue) -> bool {
    match (v, r) {
        (Value::Int(a), RefValue::Int(b)) => a == b,
        (Value::Float(a), RefValue::Float(b)) => a.to_bits() == b.to_bits(),
        (Value::Bool(a), RefValue::Bool(b)) => a == b,
        (Value::Str(a), RefValue::Str(b)) => a == b,
        _ => false,
    }
}

fn agrees(o: &Outcome, r: &RefOutcome) -> bool {
    match (o, r) {
        (Outcome::Value { value }, RefOutcome::Value(rv)) => Value::from_expr(value).is_some_and(|v| same_value(&v, rv)),
        (Outcome::Error, RefOutcome::Error) => true,
        (Outcome::Stuck { .. }, RefOutcome::Fault(_)) => true,
        _ => false,
    }
}

#[test]
fn random_programs_match_the_reference_interpreter() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut counts = [0usize; 3];
    let mut failures = Vec::new();
    for shape in Shape::ALL {
        for _ in 0..PROGRAMS_PER_SHAPE {
            let src = generate(&mut rng, shape);
            let checked = load(&src).unwrap_or_else(|d| panic!("generated program rejected: {d:?}\n{src}"));
            let program = parse_program(&src).unwrap();
            let expected = Interpreter::new(&program).run();
            match &expected {
                RefOutcome::Value(_) => counts[0] += 1,
                RefOutcome::Error => counts[1] += 1,
                RefOutcome::Fault(_) => counts[2] += 1,
            }
            for s in [Strategy::Ltr, Strategy::Rtl, Strategy::Normal] {
                let run = run_to_value(&Trace::new(checked.clone()), s, STEP_LIMIT);
                if !agrees(&run.outcome, &expected) {
                    failures.push(format!("{s:?}: got {:?}, expected {expected:?}\n{src}", run.outcome));
                }
            }
        }
    }
    eprintln!("values {}, errors {}, faults {}", counts[0], counts[1], counts[2]);
    assert!(failures.is_empty(), "{} disagreements, first:\n{}", failures.len(), failures[0]);
    assert!(counts[1] >= 20, "too few ERROR outcomes: {}", counts[1]);
}
