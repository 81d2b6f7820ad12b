use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value as Json;

const YES_NO: &str = "response = input(\"Please enter (y)es or (n)o\")\n\
while response != 'y' or response != 'n':\n    response = input(\"Please enter (y)es or (n)o\")\n";

fn inq(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inq"))
        .args(args)
        .current_dir(dir)
        .env_remove("INQ_LOG_DIR")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analyze_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "clean.nvl", "x = 1\nprint(x)\n");
    write(d.path(), "infinite.nvl", YES_NO);
    write(d.path(), "broken.nvl", "x = 1\nwhile x <\n    pass\n");
    write(d.path(), "info.nvl", "x = 3\nx == 4\n");

    let clean = inq(&["analyze", "clean.nvl"], d.path());
    assert_eq!(clean.status.code(), Some(0));
    assert_eq!(stdout(&clean).trim(), "no findings");

    let inf = inq(&["analyze", "infinite.nvl", "--format", "json"], d.path());
    assert_eq!(inf.status.code(), Some(3));
    let r: Json = serde_json::from_str(&stdout(&inf)).unwrap();
    assert_eq!(r["diagnostics"].as_array().unwrap().len(), 1);
    assert_eq!(r["diagnostics"][0]["rule_id"], "S01");
    assert_eq!(r["diagnostics"][0]["span"]["start_line"], 2);
    assert_eq!(r["diagnostics"][0]["span"]["start_col"], 1);

    let text = inq(&["analyze", "infinite.nvl"], d.path());
    assert!(stdout(&text).starts_with("infinite.nvl:2:1: S01"), "{}", stdout(&text));

    let broken = inq(&["analyze", "broken.nvl"], d.path());
    assert_eq!(broken.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&broken.stderr).contains("broken.nvl:2:"), "{:?}", broken);

    let info = inq(&["analyze", "info.nvl"], d.path());
    assert_eq!(info.status.code(), Some(0));
    assert!(stdout(&info).contains("S08"));
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    for args in [&["analyze"][..], &["analyze", "a.nvl", "--format", "xml"], &["serve"], &["serve", "--stdio", "--http", "80"], &["bogus"]] {
        assert_eq!(inq(args, d.path()).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(inq(&["analyze", "missing.nvl"], d.path()).status.code(), Some(2));
}

#[test]
fn run_prints_the_transcript() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "yn.nvl", YES_NO);
    write(d.path(), "hello.nvl", "name = input()\nprint('hi ' + name)\n");
    let ok = inq(&["run", "hello.nvl", "--input", "ada"], d.path());
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok), "hi ada\n");
    let stuck = inq(&["run", "yn.nvl", "--input", "y", "--budget", "500"], d.path());
    assert_eq!(stuck.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&stuck.stderr).contains("no more input"));
}

#[test]
fn serve_stdio_answers_each_line() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_inq"))
        .args(["serve", "--stdio"])
        .env_remove("INQ_LOG_DIR")
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    writeln!(stdin, r#"{{"id":1,"method":"analyze","params":{{"source":"x = 1\n"}}}}"#).unwrap();
    writeln!(stdin, r#"{{"id":2,"method":"nothing"}}"#).unwrap();
    drop(stdin);
    let out = child.wait_with_output().unwrap();
    let lines: Vec<Json> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["result"]["diagnostics"], Json::Array(vec![]));
    assert_eq!(lines[1]["error"]["code"], 601);
}

#[test]
fn report_writes_category_csv() {
    let d = tempfile::tempdir().unwrap();
    let logs = d.path().join("logs");
    std::fs::create_dir(&logs).unwrap();
    let line = |rule: &str, cat: &str, verdict: &str| {
        format!(
            r#"{{"session_id":"{}","learner_hash":"0123456789abcdef","ts":1,"kind":"question-answered","payload":{{"rule_id":"{rule}","category":"{cat}","question_kind":"YesNo","verdict":"{verdict}"}}}}"#,
            "a".repeat(32)
        )
    };
    let log = [line("S01", "loops", "Incorrect"), line("S01", "loops", "Correct"), line("S06", "types", "TooLoose"), line("S04", "loops", "Incorrect")];
    write(&logs, "events.ndjson", &(log.join("\n") + "\n"));
    let out = inq(&["report", "logs", "--csv"], d.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let mut rows = csv.lines();
    assert_eq!(rows.next(), Some("category,count"));
    let counts: std::collections::BTreeMap<&str, &str> = rows.map(|r| r.split_once(',').unwrap()).collect();
    assert_eq!(counts["loops"], "2");
    assert_eq!(counts["types"], "1");
    assert_eq!(counts["io"], "0");
}

#[test]
fn version_prints_the_crate_version() {
    let d = tempfile::tempdir().unwrap();
    let out = inq(&["version"], d.path());
    assert_eq!(stdout(&out).trim(), format!("inq {}", env!("CARGO_PKG_VERSION")));
}
