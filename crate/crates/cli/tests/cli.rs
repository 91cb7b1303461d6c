use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::Value;

const MANGO_QUERY: &str =
    "How much is a bottle with text that says Naked Mighty Mango 290 Calories?";

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> String {
    root().join("crates/core/fixtures").join(name).display().to_string()
}

fn deixis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deixis"))
        .args(args)
        .env_remove("DEIXIS_CHAT_URL")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn resolve_prints_rewritten_query() {
    let out = deixis(&[
        "resolve", "--scene", &fixture("mango.json"), "--gaze", "950,550", "--query", "How much is this?",
    ]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(stdout(&out), format!("{MANGO_QUERY}\n"));
}

#[test]
fn resolve_trace_is_json() {
    let out = deixis(&[
        "resolve", "--scene", &fixture("salt-boxes.json"), "--gaze", "700,600", "--point", "1150,600",
        "--query", "How much is that?", "--trace",
    ]);
    assert!(out.status.success());
    let turn: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let outcome = &turn["trace"]["resolutions"][0]["outcome"];
    assert_eq!(outcome["source"], "parent_hit");
    assert!(outcome["phrase"].as_str().unwrap().contains("diamond crystal"));
    assert_eq!(turn["trace"]["snapshot"]["point_px"], serde_json::json!([1150.0, 600.0]));
    assert_eq!(turn["trace"]["frame_purged"], true);
}

#[test]
fn resolve_modes_on_empty_scene() {
    let scene = fixture("empty.json");
    let base = ["resolve", "--scene", &scene, "--gaze", "10,10", "--query", "What is this?"];
    let v1 = deixis(&base);
    assert_eq!(stdout(&v1), "Sorry, I did not understand your question.\n");
    let v2 = deixis(&[&base[..], &["--mode", "v2"]].concat());
    assert!(stdout(&v2).contains("User query:\nWhat is this?\n"));
}

#[test]
fn bad_arguments_exit_nonzero() {
    let out = deixis(&["resolve", "--scene", &fixture("mango.json"), "--gaze", "950", "--query", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = deixis(&["resolve", "--scene", "/nonexistent.json", "--gaze", "1,1", "--query", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: loading scene"));
}

#[test]
fn backends_file_and_env_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("script.json"), r#"{"default": "About $2.99."}"#).unwrap();
    let cfg = dir.path().join("backends.json");
    std::fs::write(
        &cfg,
        r#"{"chat": {"transport": {"type": "mock_fixture", "path": "script.json"}}}"#,
    )
    .unwrap();
    let cfg = cfg.display().to_string();
    let scene = fixture("mango.json");
    let args = ["resolve", "--scene", &scene, "--gaze", "950,550", "--query", "How much is this?", "--backends", &cfg];
    assert_eq!(stdout(&deixis(&args)), "About $2.99.\n");

    // an unreachable chat endpoint from the environment wins over the file
    let out = Command::new(env!("CARGO_BIN_EXE_deixis"))
        .args(args)
        .env("DEIXIS_CHAT_URL", "http://127.0.0.1:9/v1/chat/completions")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "Sorry, I did not understand your question.\n");
}

#[test]
fn corpus_stats_match_oracle() {
    let diary = root().join("crates/core/corpus/diary.jsonl").display().to_string();
    let out = deixis(&["corpus", "stats", "--file", &diary, "--json"]);
    assert!(out.status.success());
    let stats: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let oracle: Value = serde_json::from_str(
        &std::fs::read_to_string(root().join("crates/core/corpus/diary.oracle.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(stats["lexemes"], oracle["lexemes"]);
    assert_eq!(stats["entries"], 48);

    let table = stdout(&deixis(&["corpus", "stats", "--bundled", "part3"]));
    assert!(table.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["satisfactory", "13"]));
}

#[test]
fn replay_session_exit_codes() {
    let tutorial = root().join("crates/pipeline/sessions/tutorial.json").display().to_string();
    let out = deixis(&["replay", "--session", &tutorial]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).ends_with("4 turns, 0 failed\n"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"turns": [{"query": "Set a timer", "scene": "no-scene", "gaze_px": [1, 1], "expect": {"answer": "Done."}}]}"#,
    )
    .unwrap();
    let out = deixis(&["replay", "--session", &bad.display().to_string()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("FAIL #0"));
}

#[test]
fn replay_corpus_json() {
    let corpus = root().join("crates/core/corpus/part2.jsonl").display().to_string();
    let bindings = root().join("crates/pipeline/sessions/part2-bindings.json").display().to_string();
    let out = deixis(&[
        "replay", "--corpus", &corpus, "--bindings", &bindings, "--fixtures", &fixture(""), "--json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["skipped"], 0);
    assert_eq!(report["ran"], report["entries"].as_array().unwrap().len());
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn http(port: u16, method: &str, path: &str, body: &str) -> Option<(u16, Value)> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .ok()?;
    let mut raw = String::new();
    s.read_to_string(&mut raw).ok()?;
    let status = raw.split_whitespace().nth(1)?.parse().ok()?;
    let (_, payload) = raw.split_once("\r\n\r\n")?;
    Some((status, serde_json::from_str(payload).unwrap_or(Value::Null)))
}

#[test]
fn serve_answers_queries() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let _server = Server(
        Command::new(env!("CARGO_BIN_EXE_deixis"))
            .args(["serve", "--bind", &format!("127.0.0.1:{port}"), "--fixtures", &fixture("")])
            .env_remove("DEIXIS_CHAT_URL")
            .stdout(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let deadline = Instant::now() + Duration::from_secs(10);
    let health = loop {
        if let Some(r) = http(port, "GET", "/healthz", "") {
            break r;
        }
        assert!(Instant::now() < deadline, "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert_eq!(health.0, 200);

    let (status, created) = http(port, "POST", "/v1/sessions", "").unwrap();
    assert_eq!(status, 201);
    let id = created["session_id"].as_str().unwrap();
    let (status, turn) = http(
        port,
        "POST",
        &format!("/v1/sessions/{id}/query"),
        r#"{"text": "How much is this?", "scene_ref": "mango", "gaze_px": [950, 550]}"#,
    )
    .unwrap();
    assert_eq!(status, 200);
    assert_eq!(turn["answer"], MANGO_QUERY);
}
