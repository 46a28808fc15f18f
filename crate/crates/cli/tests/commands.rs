use std::process::Command as Process;

use distlaw::dsl::Workbench;
use distlaw_cli::{run_command, Command, Flags, Outcome};
use serde_json::{json, Value};

fn dsl(name: &str) -> String {
    format!("{}/../core/dsl/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn load(name: &str) -> Workbench {
    Workbench::load(dsl(name)).unwrap()
}

fn schema() -> jsonschema::Validator {
    let src = include_str!("../schema/report.schema.json");
    jsonschema::validator_for(&serde_json::from_str::<Value>(src).unwrap()).unwrap()
}

fn valid(out: &Outcome) {
    let v = schema();
    let report: Value = serde_json::from_str(&out.render(true)).unwrap();
    let errors: Vec<String> = v.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}\n{report:#}");
}

fn flags() -> Flags {
    Flags { json: true, ..Flags::default() }
}

fn unknown_workbench() -> Workbench {
    let src = std::fs::read_to_string(dsl("stream.dsl")).unwrap();
    let src = src.replace("theory commutative-semiring;", "theory generic { eq times-one: x * [1] = x; }");
    Workbench::parse(&src).unwrap()
}

fn bin(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_distlaw")).args(args).output().unwrap()
}

#[test]
fn command_names_round_trip() {
    for c in Command::ALL {
        assert_eq!(c.name().parse::<Command>().unwrap(), c);
    }
    assert!("cfg member".parse::<Command>().is_err());
}

#[test]
fn preservation_exit_codes() {
    assert_eq!(run_command(&load("stream.dsl"), Command::CheckPreservation, &flags()).status, 0);
    let out = run_command(&load("three-zeros.dsl"), Command::CheckPreservation, &Flags::default());
    assert_eq!(out.status, 1);
    assert!(out.text.contains("witness at t: n1 vs n3 (Distinct)"), "{}", out.text);
    let out = run_command(&unknown_workbench(), Command::CheckPreservation, &flags());
    assert_eq!(out.status, 2);
    assert_eq!(out.report["verdict"], "Unknown");
    assert_eq!(out.report["cases"][0]["witness"]["equiv"], "Unknown");
}

#[test]
fn membership_prints_the_bit() {
    let wb = load("cfg.dsl");
    let run = |w: &str| run_command(&wb, Command::CfgMember, &Flags { word: Some(w.into()), ..Flags::default() });
    let out = run("aabb");
    assert_eq!((out.status, out.text.as_str()), (0, "1\n"));
    let out = run("aab");
    assert_eq!((out.status, out.text.as_str()), (1, "0\n"));
    assert_eq!(run("ε").status, 0);
    assert_eq!(run("abc").status, 3);
    let out = run_command(&wb, Command::CfgMember, &Flags { word: Some("ab".into()), state: Some("A".into()), ..flags() });
    assert_eq!(out.report["member"], true);
    let out = run_command(&wb, Command::CfgMember, &Flags { word: Some("".into()), state: Some("A".into()), ..flags() });
    assert_eq!(out.report["member"], false);
}

#[test]
fn bounded_language_equivalence() {
    let wb = load("cfg.dsl");
    let eq = |rhs: &str, n: usize| {
        run_command(&wb, Command::CfgEquiv, &Flags { against: Some(rhs.into()), maxlen: Some(n), ..flags() })
    };
    let out = eq("1 + A", 6);
    assert_eq!(out.status, 0);
    assert_eq!(out.report["counterexample"], Value::Null);
    let out = eq("1", 2);
    assert_eq!(out.status, 1);
    assert_eq!(out.report["counterexample"], "ab");
    let out = run_command(&wb, Command::CfgEquiv, &Flags { against: Some("1".into()), ..flags() });
    assert_eq!(out.status, 3);
    assert!(out.report["error"].as_str().unwrap().contains("--maxlen"));
}

#[test]
fn run_and_stream() {
    let wb = load("stream.dsl");
    let out = run_command(&wb, Command::Run, &Flags { state: Some("X".into()), word: Some("t".into()), ..flags() });
    assert_eq!(out.report["output"], "1");
    assert_eq!(out.report["next"], "[1]");
    let out = run_command(&wb, Command::Stream, &Flags { state: Some("[1/2] * nat".into()), n: Some(4), ..Flags::default() });
    assert_eq!(out.text, "(1/2, 1, 3/2, 2)\n");
    let out = run_command(&load("cfg.dsl"), Command::Run, &Flags { state: Some("S".into()), word: Some("ab".into()), ..flags() });
    assert_eq!(out.status, 0);
    assert_eq!(out.report["output"], "1");
}

#[test]
fn missing_sections_are_usage_errors() {
    let out = run_command(&load("stream.dsl"), Command::CfgMember, &Flags { word: Some("t".into()), ..flags() });
    assert_eq!(out.status, 3);
    assert!(out.report["error"].as_str().unwrap().contains("no grammar section"), "{}", out.report);
    let out = run_command(&load("three-zeros.dsl"), Command::Run, &Flags { state: Some("n1".into()), ..flags() });
    assert_eq!(out.status, 3);
    assert!(out.report["error"].as_str().unwrap().contains("no system section"));
    let out = run_command(&load("stream.dsl"), Command::Stream, &flags());
    assert_eq!(out.status, 3);
    assert!(out.report["error"].as_str().unwrap().contains("--state"));
}

#[test]
fn algebra_check_needs_a_horizon() {
    let wb = load("stream.dsl");
    let base = Flags { state: Some("L * L".into()), leaves: vec!["L = nat".into()], ..flags() };
    assert_eq!(run_command(&wb, Command::AlgebraCheck, &base).status, 3);
    let out = run_command(&wb, Command::AlgebraCheck, &Flags { n: Some(4), ..base.clone() });
    assert_eq!(out.status, 0);
    assert_eq!(out.report["direct"], "(1, 4, 10, 20)");
    let bad = Flags { leaves: vec!["L".into()], n: Some(4), ..base };
    assert_eq!(run_command(&wb, Command::AlgebraCheck, &bad).status, 3);
}

#[test]
fn every_report_validates() {
    let stream = load("stream.dsl");
    let cfg = load("cfg.dsl");
    let cases: Vec<(&Workbench, Command, Flags)> = vec![
        (&stream, Command::CheckPreservation, Flags { trace: true, ..flags() }),
        (&cfg, Command::CheckPreservation, flags()),
        (&stream, Command::Run, Flags { state: Some("nat".into()), word: Some("tt".into()), ..flags() }),
        (&stream, Command::Stream, Flags { state: Some("nat".into()), n: Some(3), ..flags() }),
        (&cfg, Command::CfgMember, Flags { word: Some("ab".into()), ..flags() }),
        (&cfg, Command::CfgEquiv, Flags { against: Some("1".into()), maxlen: Some(3), ..flags() }),
        (&cfg, Command::QuotientCommute, Flags { max_size: Some(3), depth: Some(2), ..flags() }),
        (&stream, Command::AlgebraCheck, Flags { state: Some("[2] * L".into()), n: Some(3), leaves: vec!["L=sigma".into()], ..flags() }),
        (&stream, Command::CfgMember, flags()),
    ];
    for (wb, cmd, f) in &cases {
        let out = run_command(wb, *cmd, f);
        assert_eq!(out.report["command"], cmd.name());
        valid(&out);
    }
    let three = load("three-zeros.dsl");
    valid(&run_command(&three, Command::CheckPreservation, &Flags { trace: true, ..flags() }));
    valid(&run_command(&unknown_workbench(), Command::CheckPreservation, &flags()));
}

#[test]
fn schema_rejects_malformed_reports() {
    let v = schema();
    assert!(!v.is_valid(&json!({ "command": "run" })));
    assert!(!v.is_valid(&json!({ "command": "run", "status": 0 })));
    assert!(!v.is_valid(&json!({ "command": "stream", "status": 3 })));
    assert!(!v.is_valid(&json!({ "command": "check-preservation", "status": 0, "verdict": "Maybe", "schemes": [], "cases": [] })));
    assert!(v.is_valid(&json!({ "command": "stream", "status": 3, "error": "x" })));
}

#[test]
fn mutated_rules_break_commutation() {
    let mut wb = load("stream.dsl");
    let law = wb.law.clone().unwrap();
    let mut rule = law.spec().rule("+").unwrap().clone();
    rule.out = distlaw::behaviour::OutExpr::token("ox");
    let law = law.with_spec(law.spec().with_rule(rule).unwrap()).unwrap();
    wb.system = Some(wb.system.unwrap().with_law(law.clone()).unwrap());
    wb.law = Some(law);
    let out = run_command(&wb, Command::QuotientCommute, &Flags { max_size: Some(3), depth: Some(2), ..flags() });
    assert_eq!(out.status, 1);
    assert!(!out.report["quotient"]["violations"].as_array().unwrap().is_empty());
    valid(&out);
}

#[test]
fn binary_exit_codes() {
    let ok = bin(&["check-preservation", &dsl("stream.dsl")]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).ends_with("verdict: Holds\n"));
    assert_eq!(bin(&["check-preservation", &dsl("three-zeros.dsl")]).status.code(), Some(1));
    let member = bin(&["cfg-member", &dsl("cfg.dsl"), "--word", "aabb"]);
    assert_eq!((member.status.code(), member.stdout.as_slice()), (Some(0), &b"1\n"[..]));
    let member = bin(&["cfg", "member", &dsl("cfg.dsl"), "--word", "aab"]);
    assert_eq!((member.status.code(), member.stdout.as_slice()), (Some(1), &b"0\n"[..]));
    let equiv = bin(&["cfg", "equiv", &dsl("cfg.dsl"), "--against", "1 + A", "--maxlen", "4"]);
    assert_eq!(equiv.status.code(), Some(0));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(bin(&["run", &dsl("stream.dsl"), "--depth", "x"]).status.code(), Some(3));
    assert_eq!(bin(&["run", &dsl("stream.dsl")]).status.code(), Some(3));
    assert_eq!(bin(&["run", "/nonexistent.dsl", "--state", "X"]).status.code(), Some(3));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn binary_json_output() {
    let out = bin(&["stream", &dsl("stream.dsl"), "--state", "ones * ones", "--n", "5", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["prefix"], json!(["1", "2", "3", "4", "5"]));
    let out = bin(&["cfg-member", &dsl("stream.dsl"), "--word", "t", "--json"]);
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(schema().is_valid(&report));
}

#[test]
fn diagnostics_carry_positions() {
    let dir = std::env::temp_dir().join(format!("distlaw-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.dsl");
    std::fs::write(&path, "signature {\n  op plus/2;\n}\noutputs rational;\nalphabet { t };\nsystem {\n  z: out = 0; next = plus(z, z, z);\n}\n").unwrap();
    let out = bin(&["run", path.to_str().unwrap(), "--state", "z"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("7:22") && err.contains("arity"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}
