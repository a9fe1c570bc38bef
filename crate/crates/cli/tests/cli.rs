use std::process::{Command, Output};

fn root(rel: &str) -> String {
    format!("{}/../../{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn substep(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_substep"));
    c.current_dir(root(""));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("SUBSTEP_")) {
        c.env_remove(k);
    }
    c.args(args).envs(env.iter().copied()).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    substep(args, &[]).status.code().unwrap()
}

fn temp(text: &str) -> tempfile::NamedTempFile {
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), text).unwrap();
    f
}

#[test]
fn exit_code_table() {
    let bad_program = temp("x: int = 'a'\n\n# |-\n\nx\n");
    let divide = temp("# |-\n\n1//0\n");
    let bad_script = temp("name-to-def @root var=x\nif-true @root\n");
    let even4 = temp("even-nonzero\neven-nonzero\neven-zero\n");
    let bad = bad_program.path().to_str().unwrap();
    let div = divide.path().to_str().unwrap();
    let script = bad_script.path().to_str().unwrap();
    let proof = even4.path().to_str().unwrap();
    let table: &[(&[&str], i32)] = &[
        (&["trace", "programs/ints.py"], 0),
        (&["trace", "programs/power.py", "--hold", "x"], 0),
        (&["trace", "programs/ints.py", "--script", "programs/ints_defs_late.script"], 0),
        (&["trace", bad], 1),
        (&["trace", "programs/missing.py"], 1),
        (&["trace", "programs/pow_undefined.py"], 2),
        (&["trace", "programs/pow_undefined.py", "--strategy", "normal"], 2),
        (&["trace", div], 3),
        (&["trace", "programs/power.py", "--step-limit", "3"], 3),
        (&["trace", "programs/ints.py", "--script", script], 4),
        (
            &["verify", "programs/power.py", "power", "--symbols", "x,y", "--script", "programs/power_discharge.script"],
            0,
        ),
        (&["verify", "programs/power.py", "nonesuch"], 1),
        (&["verify", "programs/power.py", "power"], 4),
        (
            &["verify", "programs/power_grows.py", "power", "--symbols", "x,y", "--script", "programs/power_discharge.script"],
            4,
        ),
        (&["check", "even", "even(4)", proof], 0),
        (&["check", "even", "even(3)", proof], 4),
        (&["check", "even", "Proves(GNil, p)", proof], 1),
        (&["check", "nonesuch", "even(4)", proof], 1),
        (&["rules", "even"], 0),
        (&["rules"], 0),
        (&["rules", "nonesuch"], 1),
    ];
    for (args, want) in table {
        assert_eq!(code(args), *want, "substep {}", args.join(" "));
    }
}

#[test]
fn two_column_output_matches_golden_files() {
    let cases: &[(&[&str], &str)] = &[
        (&["trace", "programs/ints.py", "--script", "programs/ints_defs_first.script"], "ints"),
        (&["trace", "programs/ints.py", "--script", "programs/ints_defs_late.script"], "ints_late"),
        (&["trace", "programs/rec_punct.py", "--script", "programs/rec_punct.script"], "rec_punct"),
        (&["trace", "programs/pow_call.py", "--script", "programs/pow_call_direct.script"], "pow_call_direct"),
        (&["trace", "programs/pow_call.py", "--script", "programs/pow_call_late.script"], "pow_call_late"),
        (&["trace", "programs/power.py"], "power"),
        (&["trace", "programs/power.py", "--hold", "x"], "power_symbolic"),
    ];
    for (args, golden) in cases {
        let out = substep(args, &[]);
        let want = std::fs::read_to_string(root(&format!("golden/{golden}.trace"))).unwrap();
        assert_eq!(String::from_utf8(out.stdout).unwrap(), want, "{golden}");
    }
}

#[test]
fn rules_lists_the_palette() {
    let out = String::from_utf8(substep(&["rules", "even"], &[]).stdout).unwrap();
    assert_eq!(out.lines().count(), 2);
    assert!(out.starts_with("even-zero: / even(0)"), "{out}");
    let out = String::from_utf8(substep(&["rules"], &[]).stdout).unwrap();
    assert_eq!(out.lines().count(), 16);
    let logics = root("logics");
    let out = substep(&["rules", "first-order", "--logics", &logics], &[]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);
}

#[test]
fn environment_overrides_flags() {
    let out = substep(&["trace", "programs/power.py"], &[("SUBSTEP_STEP_LIMIT", "3")]);
    assert_eq!(out.status.code(), Some(3));
    let out = substep(&["trace", "programs/ints.py"], &[("SUBSTEP_FORMAT", "structured")]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["outcome"]["expr"], "42");
    assert_eq!(v["schema"], 1);
    let out = substep(&["trace", "programs/ints.py", "--format", "structured"], &[("SUBSTEP_STRATEGY", "rtl")]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["trace"]["steps"][1]["label"], "name-to-def (b)");
    let logics = root("logics");
    let out = substep(&["rules", "first-order"], &[("SUBSTEP_LOGICS", &logics)]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn diagnostics_go_to_stderr() {
    let f = temp("x: int = 'a'\n\n# |-\n\nx\n");
    let out = substep(&["trace", f.path().to_str().unwrap()], &[]);
    assert!(out.stdout.is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("error:"), "{err}");
}
