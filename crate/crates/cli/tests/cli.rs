use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use trustkit::sim::{transcript_from_jsonl, ExperimentTable};
use trustkit::Mission;

fn trustkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trustkit")).current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_is_deterministic_and_guarded() {
    let dir = tempfile::tempdir().unwrap();
    let o = trustkit(dir.path(), &["generate", "--seed", "7", "--sites", "40", "--out", "m.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read(dir.path().join("m.json")).unwrap();
    let mission = Mission::from_json(std::str::from_utf8(&first).unwrap()).unwrap();
    assert_eq!(mission.n_sites(), 40);

    let o = trustkit(dir.path(), &["generate", "--seed", "7", "--sites", "40", "--out", "m.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--force"));

    let o = trustkit(dir.path(), &["generate", "--seed", "7", "--sites", "40", "--out", "m.json", "--force"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(dir.path().join("m.json")).unwrap(), first);

    let o = trustkit(dir.path(), &["generate", "--seed", "7", "--sites", "0", "--out", "z.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("z.json").exists());
}

#[test]
fn generate_without_seed_reports_it() {
    let dir = tempfile::tempdir().unwrap();
    let o = trustkit(dir.path(), &["generate", "--sites", "5", "--out", "a.json"]);
    assert!(o.status.success());
    let err = stderr(&o);
    let seed = err.lines().find_map(|l| l.strip_prefix("seed: ")).expect("seed printed").trim().to_owned();
    let o = trustkit(dir.path(), &["generate", "--sites", "5", "--seed", &seed, "--out", "b.json"]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read(dir.path().join("a.json")).unwrap(),
        std::fs::read(dir.path().join("b.json")).unwrap()
    );
}

#[test]
fn run_writes_transcript_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    trustkit(dir.path(), &["generate", "--seed", "3", "--out", "m.json"]);
    let args = ["run", "--mission", "m.json", "--strategy", "adaptive", "--seed", "11", "--human-weight", "0.8"];
    let a = trustkit(dir.path(), &args);
    assert!(a.status.success(), "{}", stderr(&a));
    let records = transcript_from_jsonl(std::str::from_utf8(&a.stdout).unwrap()).unwrap();
    assert_eq!(records.len(), 40);
    assert!(stderr(&a).contains("agreements"));
    let b = trustkit(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);

    let o = trustkit(
        dir.path(),
        &[
            "run", "--mission", "m.json", "--strategy", "non_learner", "--seed", "2", "--human-trust", "8,12,3,4",
            "--feedback", "sampled", "--transcript", "t.jsonl", "--metrics", "metrics.json",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    let records = transcript_from_jsonl(&std::fs::read_to_string(dir.path().join("t.jsonl")).unwrap()).unwrap();
    let agreements = records.iter().filter(|r| r.recommendation == r.human_action).count();
    assert_eq!(metrics["agreements"], agreements);
}

#[test]
fn run_argument_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    trustkit(dir.path(), &["generate", "--seed", "3", "--sites", "4", "--out", "m.json"]);
    let o = trustkit(dir.path(), &["run", "--mission", "m.json", "--strategy", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for s in ["non_learner", "non_adaptive_learner", "adaptive_learner"] {
        assert!(err.contains(s), "{err}");
    }
    let o = trustkit(dir.path(), &["run", "--mission", "missing.json", "--strategy", "adaptive"]);
    assert_eq!(o.status.code(), Some(2));
    let o = trustkit(dir.path(), &["run", "--mission", "m.json", "--strategy", "adaptive", "--human-weight", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(dir.path().join("c.json"), r#"{"human": {"colour": 1}}"#).unwrap();
    let o = trustkit(dir.path(), &["run", "--mission", "m.json", "--strategy", "adaptive", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e.json"), r#"{"n_humans": 10, "seed": 5, "mission": {"n_sites": 10}}"#).unwrap();
    let o = trustkit(dir.path(), &["experiment", "--config", "e.json", "--jobs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = ExperimentTable::from_csv(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 30);
    let summary = stderr(&o);
    assert!(summary.contains("se") && summary.contains("paired t-tests"), "{summary}");

    let o4 = trustkit(dir.path(), &["experiment", "--config", "e.json", "--jobs", "4", "--out", "t.csv"]);
    assert!(o4.status.success());
    assert_eq!(std::fs::read(dir.path().join("t.csv")).unwrap(), o.stdout);
    assert_eq!(String::from_utf8(o4.stdout).unwrap(), summary);

    let o = trustkit(dir.path(), &["experiment", "--config", "absent.json"]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(dir.path().join("bad.json"), r#"{"n_humanz": 3}"#).unwrap();
    let o = trustkit(dir.path(), &["experiment", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
}

fn get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut out = String::new();
    s.read_to_string(&mut out).ok()?;
    Some(out)
}

#[test]
fn serve_answers_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let web = dir.path().join("web");
    std::fs::create_dir(&web).unwrap();
    std::fs::write(web.join("index.html"), "client").unwrap();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_trustkit"))
        .current_dir(dir.path())
        .env("TRUSTKIT_LOG", "info")
        .args(["serve", "--port", &port.to_string(), "--data-dir", "logs", "--static-dir", "web"])
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let health = loop {
        if let Some(r) = get(port, "/v1/health") {
            break r;
        }
        assert!(Instant::now() < deadline, "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    let page = get(port, "/index.html").unwrap();
    assert!(page.ends_with("client"), "{page}");
    child.kill().unwrap();
    let mut err = String::new();
    child.stderr.take().unwrap().read_to_string(&mut err).unwrap();
    child.wait().unwrap();
    assert!(err.contains("listening"), "{err}");
    assert!(dir.path().join("logs").is_dir());
}

#[test]
fn serve_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.json"), r#"{"belief_points": 0}"#).unwrap();
    let o = trustkit(dir.path(), &["serve", "--config", "s.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = trustkit(dir.path(), &["serve", "--static-dir", "nowhere"]);
    assert_eq!(o.status.code(), Some(2));
}
