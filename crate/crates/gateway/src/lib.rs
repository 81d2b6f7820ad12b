//! JSON RPC gateway and command line for the inq tutoring engine.
//!
//! Envelopes travel as newline-delimited JSON over stdio or as the body of
//! `POST /rpc`. Both transports share [`session::Session`], so the same
//! requests give the same result bytes either way.

pub mod clock;
pub mod rpc;
pub mod server;
pub mod session;

pub use clock::{Clock, ManualClock, SystemClock};
pub use rpc::{Request, Response, RpcError};
pub use server::{Gateway, HttpServer, SESSION_HEADER};
pub use session::{Config, Session};
