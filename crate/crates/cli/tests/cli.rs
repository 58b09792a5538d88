use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(rel: &str) -> String {
    fixtures().join(rel).to_string_lossy().into_owned()
}

fn svsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svsp"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn clean_fixture_checks_silently() {
    let o = svsp(&["check", &fixture("mini_gks.svsp")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let o = svsp(&["check", &fixture("mini_gks.svsp"), "--format", "json"]);
    assert_eq!(
        serde_json::from_slice::<Value>(&o.stdout).unwrap(),
        Value::Array(vec![])
    );
}

#[test]
fn duplicate_function_line() {
    let o = svsp(&["check", &fixture("dup_func.svsp")]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(
        out.starts_with("E001 error OPEN_GKS 14:1 duplicate identifier"),
        "{out}"
    );
}

#[test]
fn json_output_parses_for_every_fixture() {
    let mut files = vec![fixture("mini_gks.svsp"), fixture("dup_func.svsp")];
    for entry in std::fs::read_dir(fixtures().join("defects")).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "svsp") {
            files.push(p.to_string_lossy().into_owned());
        }
    }
    for f in files {
        let o = svsp(&["check", &f, "--format", "json"]);
        let v: Value = serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{f}: {e}"));
        for d in v.as_array().unwrap() {
            for key in ["code", "severity", "entity", "message", "line", "col"] {
                assert!(d.get(key).is_some(), "{f}: {d} lacks {key}");
            }
        }
    }
}

#[test]
fn strict_turns_warnings_into_findings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("warn.svsp");
    std::fs::write(&path, "type N int\ndata scratch : N\n").unwrap();
    let p = path.to_string_lossy();
    let o = svsp(&["check", &p]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).starts_with("W101 warning scratch 2:1"),
        "{}",
        stdout(&o)
    );
    assert_eq!(svsp(&["check", &p, "--strict"]).status.code(), Some(1));
}

#[test]
fn exit_codes_for_usage_syntax_and_io() {
    assert_eq!(svsp(&[]).status.code(), Some(2));
    assert_eq!(svsp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        svsp(&["check", &fixture("mini_gks.svsp"), "--colour"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        svsp(&["check", "/nonexistent/x.svsp"]).status.code(),
        Some(3)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.svsp");
    std::fs::write(&bad, "func F {\n").unwrap();
    let o = svsp(&["check", &bad.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("E000 error"), "{}", stdout(&o));
    let o = svsp(&[
        "query",
        &fixture("mini_gks.svsp"),
        "kind=element & class.group=x",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn fmt_prints_and_rewrites_canonical_text() {
    let o = svsp(&["fmt", &fixture("mini_gks.svsp")]);
    assert_eq!(o.status.code(), Some(0));
    let canonical = stdout(&o);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.svsp");
    std::fs::copy(fixtures().join("mini_gks.svsp"), &path).unwrap();
    let p = path.to_string_lossy();
    assert_eq!(svsp(&["fmt", &p, "--write"]).status.code(), Some(0));
    assert!(svsp(&["fmt", &p, "--write"]).stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), canonical);
    assert_eq!(stdout(&svsp(&["fmt", &p])), canonical);
}

#[test]
fn query_text_and_json() {
    let o = svsp(&["query", &fixture("mini_gks.svsp"), "class.states~GKCL"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "id\nOPEN_GKS\n");
    let o = svsp(&[
        "query",
        &fixture("mini_gks.svsp"),
        "refs=line_width",
        "--select",
        "id,class.category",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        v,
        serde_json::json!([
            {"id": "SET_LINE_WIDTH", "class.category": "attribute"},
            {"id": "POLYLINE", "class.category": "output"}
        ])
    );
}

#[test]
fn run_happy_and_gate_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let o = svsp(&[
        "run",
        &fixture("mini_gks.svsp"),
        &fixture("scripts/happy.svs"),
        "--trace",
        &trace.to_string_lossy(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).ends_with("5 passed, 0 failed\n"),
        "{}",
        stdout(&o)
    );
    let t: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    let records = t.as_array().unwrap();
    assert_eq!(records.len(), 5);
    assert!(records.iter().all(|r| r["outcome"] == "ok"));
    assert_eq!(records[3]["function"], "SET_LINE_WIDTH");

    let o = svsp(&[
        "run",
        &fixture("mini_gks.svsp"),
        &fixture("scripts/gate.svs"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("1 passed, 0 failed\n"));
}

#[test]
fn failing_directives_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("s.svs");
    std::fs::write(
        &script,
        "assert-status line_width known\ncall OPEN_GKS error_file=\"e\"\n",
    )
    .unwrap();
    let o = svsp(&["run", &fixture("mini_gks.svsp"), &script.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(
        out.starts_with("FAIL 1: assert-status line_width known"),
        "{out}"
    );
    assert!(out.ends_with("1 passed, 1 failed\n"), "{out}");

    std::fs::write(&script, "call\n").unwrap();
    let o = svsp(&["run", &fixture("mini_gks.svsp"), &script.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());

    // Inconsistent specifications are not simulated.
    let o = svsp(&[
        "run",
        &fixture("dup_func.svsp"),
        &fixture("scripts/gate.svs"),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn edit_applies_changes_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let changes = dir.path().join("changes.json");
    let out = dir.path().join("out.svsp");
    std::fs::write(
        &changes,
        serde_json::json!([
            {"op": "add", "kind": "type", "decl": "type Angle real"},
            {"op": "add", "kind": "element", "decl": "data angle : Angle restrict value >= 0.0"},
            {"op": "add", "kind": "function", "decl":
                "func SET_ANGLE { class category = attribute group = text level = L0a states = [GKOP] param angle in effect set_angle { pre angle known abstract } }"}
        ])
        .to_string(),
    )
    .unwrap();
    let o = svsp(&[
        "edit",
        &fixture("mini_gks.svsp"),
        "--apply",
        &changes.to_string_lossy(),
        "--out",
        &out.to_string_lossy(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(o.stdout.is_empty());
    let edited = std::fs::read_to_string(&out).unwrap();
    assert!(edited.contains("func SET_ANGLE {"));
    assert_eq!(
        svsp(&["check", &out.to_string_lossy()]).status.code(),
        Some(0)
    );

    // A duplicate stops the batch and nothing is written.
    std::fs::remove_file(&out).unwrap();
    std::fs::write(
        &changes,
        r#"[{"op": "add", "kind": "type", "decl": "type Angle real"},
            {"op": "add", "kind": "element", "decl": "data lw : WidthScale"}]"#,
    )
    .unwrap();
    let o = svsp(&[
        "edit",
        &fixture("mini_gks.svsp"),
        "--apply",
        &changes.to_string_lossy(),
        "--out",
        &out.to_string_lossy(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("p2 add element lw"), "{err}");
    assert!(err.contains("E001 error lw"), "{err}");

    std::fs::write(&changes, "{not json").unwrap();
    let o = svsp(&[
        "edit",
        &fixture("mini_gks.svsp"),
        "--apply",
        &changes.to_string_lossy(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn serve_refuses_a_missing_file() {
    let o = svsp(&["serve", "/nonexistent/x.svsp", "--no-ui"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn serve_answers_over_tcp() {
    use std::io::{Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::time::{Duration, Instant};

    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_svsp"))
        .args(["serve", &fixture("mini_gks.svsp"), "--no-ui"])
        .env("SVSP_PORT", port.to_string())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(10);
    let mut stream = loop {
        match TcpStream::connect(("127.0.0.1", port)) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => {
                child.kill().unwrap();
                panic!("server never came up: {e}");
            }
        }
    };
    stream
        .write_all(b"GET /api/functions?where=class.states~GKCL HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.ends_with("[\"OPEN_GKS\"]"), "{response}");
}
