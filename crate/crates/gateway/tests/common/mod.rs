#![allow(dead_code)]

use std::io::{BufReader, Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::Arc;

use serde_json::{json, Value as Json};

use inq_core::analysis::Analyses;
use inq_core::inquiry::generate_questions;
use inq_core::lang::parse;
use inq_core::remedy::{apply, synthesize};
use inq_core::smells::detect;
use inq_gateway::{Config, Gateway, HttpServer, ManualClock};

pub const YES_NO: &str = "response = input(\"Please enter (y)es or (n)o\")\n\
while response != 'y' or response != 'n':\n    response = input(\"Please enter (y)es or (n)o\")\n";

pub const YES_NO_FIXED: &str = "response = input(\"Please enter (y)es or (n)o\")\n\
while response != 'y' and response != 'n':\n    response = input(\"Please enter (y)es or (n)o\")\nprint(response)\n";

pub fn gateway(config: Config) -> Gateway {
    Gateway::new(config, Arc::new(ManualClock::new(1_700_000_000_000))).unwrap()
}

/// Ids of the questions the engine asks about `source`, computed without
/// the gateway.
pub fn question_ids(source: &str) -> Vec<String> {
    let a = Analyses::new(&parse(source).unwrap());
    generate_questions(&detect(&a), &a).into_iter().map(|q| q.question_id).collect()
}

pub fn request(id: u64, method: &str, params: Json) -> String {
    json!({ "id": id, "method": method, "params": params }).to_string()
}

/// The yes/no program with its S01 reminder inserted.
pub fn yes_no_with_reminder() -> String {
    let a = Analyses::new(&parse(YES_NO).unwrap());
    let d = detect(&a);
    apply(YES_NO, &synthesize(&d[0], &a)).unwrap()
}

/// Twelve requests walking the whole loop on the yes/no program.
pub fn scripted_session() -> Vec<String> {
    let q = question_ids(YES_NO).remove(0);
    let queue = json!(["x"]);
    let reminded = yes_no_with_reminder();
    let steps = vec![
        ("analyze", json!({ "source": YES_NO })),
        ("question.get", json!({ "question_id": q })),
        ("question.answer", json!({ "question_id": q, "answer": { "type": "range", "lo": 0, "hi": 100, "infinite": false } })),
        ("run", json!({ "source": YES_NO, "inputs": queue, "budget": 10000, "cycle": true, "experiment": true })),
        ("remedy.apply", json!({ "question_id": q })),
        ("analyze", json!({ "source": reminded })),
        ("remedy.toggle", json!({ "show": false })),
        ("remedy.toggle", json!({ "show": true })),
        ("question.get", json!({ "question_id": q })),
        ("analyze", json!({ "source": YES_NO_FIXED })),
        ("run", json!({ "source": YES_NO_FIXED, "inputs": ["maybe", "y"] })),
        ("event.log", json!({ "kind": "question-shown", "payload": { "note": "card opened" } })),
    ];
    steps.into_iter().enumerate().map(|(i, (m, p))| request(i as u64 + 1, m, p)).collect()
}

pub fn run_stdio(gw: &Gateway, lines: &[String]) -> Vec<String> {
    let input = lines.join("\n") + "\n";
    let mut out = Vec::new();
    gw.serve_stdio(BufReader::new(input.as_bytes()), &mut out).unwrap();
    String::from_utf8(out).unwrap().lines().map(String::from).collect()
}

pub struct HttpReply {
    pub status: u16,
    pub session: Option<String>,
    pub body: String,
}

/// Minimal HTTP/1.1 client: one request per connection.
pub fn post(addr: SocketAddr, path: &str, session: Option<&str>, body: &str) -> HttpReply {
    let mut s = TcpStream::connect(addr).unwrap();
    let mut head = format!("POST {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n", body.len());
    if let Some(id) = session {
        head.push_str(&format!("X-Inq-Session: {id}\r\n"));
    }
    head.push_str("\r\n");
    s.write_all(head.as_bytes()).unwrap();
    s.write_all(body.as_bytes()).unwrap();
    let mut raw = String::new();
    s.read_to_string(&mut raw).unwrap();
    let (headers, body) = raw.split_once("\r\n\r\n").unwrap();
    let status = headers.split(' ').nth(1).unwrap().parse().unwrap();
    let session = headers
        .lines()
        .find_map(|l| l.split_once(':').filter(|(k, _)| k.eq_ignore_ascii_case("x-inq-session")).map(|(_, v)| v.trim().to_string()));
    HttpReply { status, session, body: body.to_string() }
}

/// Send the lines over HTTP in one session and collect the bodies.
pub fn run_http(gw: Gateway, lines: &[String]) -> Vec<String> {
    let server = HttpServer::start(Arc::new(gw), "127.0.0.1:0").unwrap();
    let mut session: Option<String> = None;
    let mut out = Vec::new();
    for l in lines {
        let r = post(server.addr(), "/rpc", session.as_deref(), l);
        assert_eq!(r.status, 200);
        session = r.session;
        out.push(r.body);
    }
    server.shutdown();
    out
}

/// The `result` (or `error`) member of a response line, re-serialized.
pub fn payload(line: &str) -> String {
    let v: Json = serde_json::from_str(line).unwrap();
    v.get("result").or_else(|| v.get("error")).unwrap().to_string()
}
