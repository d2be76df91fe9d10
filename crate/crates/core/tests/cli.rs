mod common;

use std::io::Write;
use std::process::{Command, Stdio};

use mmk::cli::{run_command, Report};

fn models() -> String {
    format!("{}/models/statemachines.xmf", env!("CARGO_MANIFEST_DIR"))
}

fn data(name: &str) -> String {
    common::data_dir().join(name).display().to_string()
}

fn run(args: &[&str]) -> Report {
    let mut argv = vec!["mmk".to_string()];
    argv.extend(args.iter().map(|a| a.to_string()));
    run_command(&argv)
}

#[test]
fn duplicate_transition_names_fail_the_check() {
    let r = run(&["check", &models(), &data("cli/duplicate.xmf")]);
    assert!(
        r.lines.contains(&"FAIL StateMachines::StateMachine::NoTwoTransitionsWithTheSameName m1".to_string()),
        "{r:?}"
    );
    assert_eq!(r.exit_code, 1);
    let ok = run(&["check", &models(), &data("cli/corrected.xmf")]);
    assert!(ok.lines.iter().all(|l| l.starts_with("OK ")), "{ok:?}");
    assert_eq!(ok.exit_code, 0);
}

#[test]
fn check_lines_follow_declaration_order() {
    let r = run(&["check", &models(), &data("cli/corrected.xmf")]);
    let names: Vec<&str> =
        r.lines.iter().filter(|l| l.ends_with(" m1")).map(|l| l.split("::").last().unwrap()).collect();
    assert_eq!(
        names,
        ["StatesHaveUniqueNames m1", "StatesIncludeInitialState m1", "NoTwoTransitionsWithTheSameName m1"]
    );
}

#[test]
fn map_prints_a_literal() {
    let r = run(&["map", &models(), &data("cli/onoff.xmf"), "--map", "StateMachines::Transition2Op", "--input", "t"]);
    assert_eq!(r.lines, [r#"CPP::Operation[name = "OnOff", body = "state = Off"]"#]);
    assert_eq!(r.exit_code, 0);
}

#[test]
fn sm_run_prints_the_trace() {
    let r = run(&["sm", "run", &data("cli/toggle.xmf"), "--events", "toggle,toggle"]);
    assert_eq!(
        r.lines,
        ["STATE Off", "FIRE Off->On", "STATE On", "FIRE On->Off", "STATE Off", "HALT no-enabled-transition"]
    );
}

#[test]
fn sync_run_ends_quiescent() {
    let r = run(&["sync", "run", &data("cli/points.xmf"), "--max-iter", "200"]);
    assert_eq!(r.lines.last().unwrap(), "STATUS fixpoint");
    let fires: Vec<&String> = r.lines.iter().filter(|l| l.starts_with("FIRE ")).collect();
    assert_eq!(fires.len(), 199);
    assert!(fires.last().unwrap().starts_with("FIRE r1 unchanged"));
    let short = run(&["sync", "run", &data("cli/points.xmf"), "--max-iter", "5"]);
    assert_eq!(short.lines.last().unwrap(), "STATUS budget-exhausted");
}

#[test]
fn xaction_verbs() {
    let f = data("xaction/arith.xa");
    let want = run(&["xaction", "run", &f]);
    assert_eq!(want.exit_code, 0);
    assert!(want.lines.contains(&"sum = 22".to_string()));
    for via in ["d1", "d2", "vm"] {
        assert_eq!(run(&["xaction", "run", &f, "--via", via]).lines, want.lines, "{via}");
    }
    let pp = run(&["xaction", "pp", &f]);
    assert_eq!(pp.lines[0], "begin");
    let code = run(&["xaction", "compile", &f]);
    assert!(code.lines.iter().any(|l| l.starts_with("SetLocal(")));
    assert!(run(&["xaction", "d1", &f]).lines[0].starts_with("let "));
}

#[test]
fn reports_are_reproducible() {
    let args = ["check", &models(), &data("cli/duplicate.xmf")];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.text(), b.text());
}

#[test]
fn exit_code_matches_failure_lines() {
    let cases: Vec<Vec<String>> = vec![
        vec!["check".into(), models(), data("cli/duplicate.xmf")],
        vec!["check".into(), models(), data("cli/corrected.xmf")],
        vec!["eval".into(), data("cli/two.xocl")],
        vec!["eval".into(), "/no/such/file".into()],
        vec!["bogus".into()],
        vec!["xaction".into(), "run".into(), data("cli/two.xocl")],
    ];
    for c in cases {
        let args: Vec<&str> = c.iter().map(String::as_str).collect();
        let r = run(&args);
        let failing = r.lines.iter().any(|l| l.starts_with("FAIL ") || l.starts_with("ERROR "));
        assert_eq!(r.exit_code == 0, !failing, "{c:?} {r:?}");
        assert!(r.lines.iter().all(|l| l.trim_end() == l));
    }
}

fn binary(args: &[&str], stdin: &str) -> (String, i32) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_mmk"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap())
}

#[test]
fn binary_exit_codes() {
    assert_eq!(binary(&["eval", &data("cli/two.xocl")], ""), ("2\n".to_string(), 0));
    assert_eq!(binary(&["check", &models(), &data("cli/duplicate.xmf")], "").1, 1);
    assert_eq!(binary(&["check", &models(), &data("cli/corrected.xmf")], "").1, 0);
    assert_eq!(binary(&["nonsense"], "").1, 2);
}

#[test]
fn repl_echoes_returned_values() {
    let (out, code) = binary(&["repl"], "@State X end\n1+1\n1 +\n2+2\n");
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "<State X> returned.");
    assert_eq!(lines[1], "2 returned.");
    assert!(lines[2].starts_with("ERROR"));
    assert_eq!(lines[3], "4 returned.");
}
