//! Transports. Each HTTP session is served by its own worker thread fed
//! through a channel, so its requests run one at a time in arrival order.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use tiny_http::{Header, Method, Server, StatusCode};

use inq_core::session::{new_session_id, SessionError};

use crate::clock::Clock;
use crate::rpc::{self, Response, RpcError};
use crate::session::{Config, Session, Shared};

pub const SESSION_HEADER: &str = "X-Inq-Session";

type Job = (String, Sender<String>);

struct Worker {
    jobs: Sender<Job>,
    last_seen: u64,
}

pub struct Gateway {
    shared: Arc<Shared>,
    workers: Mutex<HashMap<String, Worker>>,
}

fn is_session_id(s: &str) -> bool {
    s.len() == 32 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

impl Gateway {
    pub fn new(config: Config, clock: Arc<dyn Clock>) -> Result<Gateway, SessionError> {
        Ok(Gateway { shared: Arc::new(Shared::new(config, clock)?), workers: Mutex::new(HashMap::new()) })
    }

    /// A session driven directly by the caller, as the stdio transport and
    /// the CLI do.
    pub fn local_session(&self) -> Session {
        Session::new(self.shared.clone(), new_session_id())
    }

    /// Answer newline-delimited envelopes until the input ends.
    pub fn serve_stdio(&self, input: impl BufRead, mut output: impl Write) -> io::Result<()> {
        let mut session = self.local_session();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            writeln!(output, "{}", session.handle_line(&line))?;
            output.flush()?;
        }
        Ok(())
    }

    pub fn session_count(&self) -> usize {
        self.workers.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    /// Queue a request for a session, creating the session when the id is
    /// missing, malformed, unknown or expired. Returns the id actually used
    /// and where the response line will arrive.
    pub fn submit(&self, session_id: Option<&str>, body: String) -> (String, Receiver<String>) {
        let now = self.shared.clock.now_ms();
        let ttl = self.shared.config.session_ttl_ms;
        let mut workers = self.workers.lock().unwrap_or_else(|e| e.into_inner());
        workers.retain(|_, w| now.saturating_sub(w.last_seen) < ttl);

        let id = match session_id {
            Some(id) if is_session_id(id) => id.to_string(),
            _ => new_session_id(),
        };
        let worker = workers.entry(id.clone()).or_insert_with(|| {
            let (jobs, rx) = mpsc::channel::<Job>();
            let mut session = Session::new(self.shared.clone(), id.clone());
            thread::spawn(move || {
                for (body, reply) in rx {
                    let _ = reply.send(session.handle_line(&body));
                }
            });
            Worker { jobs, last_seen: now }
        });
        worker.last_seen = now;
        let (reply, response) = mpsc::channel();
        if worker.jobs.send((body, reply.clone())).is_err() {
            let err = Response::from_outcome(serde_json::Value::Null, Err(RpcError::new(rpc::INTERNAL, "session worker stopped")));
            let _ = reply.send(err.to_line());
        }
        (id, response)
    }
}

/// HTTP transport: `POST /rpc` with one envelope per request body.
pub struct HttpServer {
    server: Arc<Server>,
    addr: SocketAddr,
    thread: Option<JoinHandle<()>>,
}

fn header(name: &str, value: &str) -> Header {
    Header::from_bytes(name.as_bytes(), value.as_bytes()).expect("ascii header")
}

impl HttpServer {
    pub fn start(gateway: Arc<Gateway>, addr: &str) -> io::Result<HttpServer> {
        let server = Arc::new(Server::http(addr).map_err(|e| io::Error::new(io::ErrorKind::AddrNotAvailable, e.to_string()))?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| io::Error::new(io::ErrorKind::Unsupported, "not an IP listener"))?;
        let listener = server.clone();
        let thread = thread::spawn(move || {
            for mut rq in listener.incoming_requests() {
                if rq.url() != "/rpc" {
                    let _ = rq.respond(tiny_http::Response::from_string("not found").with_status_code(StatusCode(404)));
                    continue;
                }
                if *rq.method() != Method::Post {
                    let _ = rq.respond(tiny_http::Response::from_string("use POST").with_status_code(StatusCode(405)));
                    continue;
                }
                let mut body = String::new();
                if rq.as_reader().read_to_string(&mut body).is_err() {
                    let _ = rq.respond(tiny_http::Response::from_string("body is not UTF-8").with_status_code(StatusCode(400)));
                    continue;
                }
                let requested = rq
                    .headers()
                    .iter()
                    .find(|h| h.field.equiv(SESSION_HEADER))
                    .map(|h| h.value.as_str().trim().to_string());
                let (id, reply) = gateway.submit(requested.as_deref(), body);
                thread::spawn(move || {
                    let line = reply.recv().unwrap_or_else(|_| {
                        Response::from_outcome(serde_json::Value::Null, Err(RpcError::new(rpc::INTERNAL, "no response"))).to_line()
                    });
                    let resp = tiny_http::Response::from_string(line)
                        .with_header(header("Content-Type", "application/json"))
                        .with_header(header(SESSION_HEADER, &id));
                    let _ = rq.respond(resp);
                });
            }
        });
        Ok(HttpServer { server, addr, thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Block until the server stops.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    pub fn shutdown(mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
