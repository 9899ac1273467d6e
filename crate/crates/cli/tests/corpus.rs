use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Deserialize;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_cpi");

#[derive(Debug, Deserialize)]
struct Expectation {
    runs: Vec<Run>,
}

#[derive(Debug, Deserialize)]
struct Run {
    args: Vec<String>,
    exit: i32,
    #[serde(default)]
    json: Option<Value>,
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn cases() -> Vec<PathBuf> {
    let mut out = Vec::new();
    for section in fs::read_dir(corpus_dir()).unwrap() {
        let section = section.unwrap().path();
        for entry in fs::read_dir(&section).unwrap() {
            let path = entry.unwrap().path();
            if path.to_string_lossy().ends_with(".expect.json") {
                out.push(path);
            }
        }
    }
    out.sort();
    out
}

fn cpi(dir: &Path, args: &[String]) -> (i32, String) {
    let out = Command::new(BIN)
        .current_dir(dir)
        .env_remove("CPI_FRESH_START")
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8(out.stdout).unwrap())
}

/// `expected` is a subset of `actual`: objects match key by key, and every
/// element of an expected array matches some element of the actual array.
/// An empty expected array demands an empty actual array.
fn subset(expected: &Value, actual: &Value) -> bool {
    match (expected, actual) {
        (Value::Object(e), Value::Object(a)) => {
            e.iter().all(|(k, v)| a.get(k).is_some_and(|w| subset(v, w)))
        }
        (Value::Array(e), Value::Array(a)) => {
            if e.is_empty() {
                return a.is_empty();
            }
            e.iter().all(|v| a.iter().any(|w| subset(v, w)))
        }
        _ => expected == actual,
    }
}

#[test]
fn corpus_replays_to_recorded_expectations() {
    let cases = cases();
    assert!(cases.len() >= 20, "corpus went missing: {} cases", cases.len());
    let mut failures = Vec::new();
    for case in &cases {
        let dir = case.parent().unwrap();
        let exp: Expectation = serde_json::from_str(&fs::read_to_string(case).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", case.display()));
        for run in &exp.runs {
            let mut args = vec!["--json".to_string()];
            args.extend(run.args.iter().cloned());
            let (code, stdout) = cpi(dir, &args);
            let label = format!("{} {:?}", case.display(), run.args);
            if code != run.exit {
                failures.push(format!("{label}: exit {code}, expected {}\n{stdout}", run.exit));
                continue;
            }
            if let Some(want) = &run.json {
                let got: Value = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("{label}: {e}\n{stdout}"));
                if !subset(want, &got) {
                    failures.push(format!("{label}: output does not contain {want}\n{stdout}"));
                }
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n\n"));
}

#[test]
fn every_section_has_cases() {
    let cases = cases();
    for section in [
        "intro",
        "syntax",
        "nonforwarding",
        "closed-domains",
        "authentication",
        "groups",
        "open-groups",
        "encoding",
        "laws",
    ] {
        assert!(
            cases.iter().any(|c| c.parent().unwrap().ends_with(section)),
            "no cases in {section}"
        );
    }
}

#[test]
fn encoded_output_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let src = corpus_dir().join("encoding");
    for case in ["open_forward.cpi", "forward.cpi"] {
        let (code, text) = cpi(&src, &["encode".into(), "--with-handlers".into(), case.into()]);
        assert_eq!(code, 0);
        assert!(text.starts_with("-- encoded"));
        let file = dir.path().join(case);
        fs::write(&file, &text).unwrap();
        let (code, out) = cpi(dir.path(), &["--json".into(), "parse".into(), case.into()]);
        assert_eq!(code, 0, "{out}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["valid_cpi"], Value::Bool(true));

        // Without the marker line the reserved names are refused.
        let body: String = text.lines().skip(1).collect::<Vec<_>>().join("\n");
        fs::write(&file, &body).unwrap();
        let (code, _) = cpi(dir.path(), &["parse".into(), case.into()]);
        assert_eq!(code, 1);
        let (code, _) = cpi(dir.path(), &["--allow-reserved".into(), "parse".into(), case.into()]);
        assert_eq!(code, 0);
    }
}

#[test]
fn fresh_start_shifts_encoder_numbering() {
    let src = corpus_dir().join("encoding");
    let run = |start: Option<&str>| {
        let mut cmd = Command::new(BIN);
        cmd.current_dir(&src).args(["--json", "encode", "open_forward.cpi"]);
        match start {
            Some(s) => cmd.env("CPI_FRESH_START", s),
            None => cmd.env_remove("CPI_FRESH_START"),
        };
        let out = cmd.output().unwrap();
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["encoded"].as_str().unwrap().to_string()
    };
    let base = run(None);
    let shifted = run(Some("40"));
    assert!(base.contains("#xp_0") && base.contains("#e1_1"));
    assert!(shifted.contains("#xp_40") && shifted.contains("#e1_41"));
    assert_eq!(run(Some("40")), shifted);
}

#[test]
fn seeded_law_runs_are_reproducible() {
    let dir = corpus_dir();
    let args: Vec<String> = ["--json", "--seed", "11", "bisim", "--laws", "--instances", "15"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let (c1, a) = cpi(&dir, &args);
    let (c2, b) = cpi(&dir, &args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
}

#[test]
fn usage_and_io_errors_exit_one() {
    let dir = corpus_dir();
    assert_eq!(cpi(&dir, &["frobnicate".into()]).0, 1);
    assert_eq!(cpi(&dir, &["bisim".into()]).0, 1);
    let (code, out) = cpi(&dir, &["--json".into(), "parse".into(), "missing.cpi".into()]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"], "io");
    assert_eq!(cpi(&dir, &["--help".into()]).0, 0);
}
