//! Interaction event log and instructor reports.
//!
//! Events are appended to `events.ndjson`, one JSON record per line. Learner
//! identifiers are stored only as a salted hash.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::inquiry::QuestionKind;
use crate::smells::{Category, RuleId};

pub const LOG_FILE: &str = "events.ndjson";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Analyze,
    QuestionShown,
    QuestionAnswered,
    ExplanationShown,
    ExperimentRun,
    RemedyApplied,
    RemedyToggled,
    ProgramRun,
    Edit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub session_id: String,
    pub learner_hash: String,
    pub ts: u64,
    pub kind: EventKind,
    pub payload: Map<String, Json>,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("record contains the learner identifier in clear text")]
    PrivacyViolation,
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("log storage is full")]
    StorageFull,
    #[error("log write failed: {0}")]
    IoFailure(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    /// Records appended through this writer so far.
    pub seq: u64,
}

/// First 16 hex digits of SHA-256 over salt then identifier.
pub fn learner_hash(salt: &str, learner_id: &str) -> String {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update(learner_id.as_bytes());
    hex::encode(&h.finalize()[..8])
}

/// 32 random hex digits.
pub fn new_session_id() -> String {
    let mut bytes = [0u8; 16];
    rand::thread_rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

fn is_hex(s: &str, len: usize) -> bool {
    s.len() == len && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

/// Who is writing: the session token, the hashed learner and the clear
/// identifier kept only to refuse records that leak it.
#[derive(Debug, Clone)]
pub struct Identity {
    pub session_id: String,
    pub learner_hash: String,
    learner_id: String,
    /// Source text may appear in payloads only when set at session start.
    pub log_source: bool,
}

impl Identity {
    pub fn new(salt: &str, learner_id: &str, log_source: bool) -> Identity {
        Identity {
            session_id: new_session_id(),
            learner_hash: learner_hash(salt, learner_id),
            learner_id: learner_id.to_string(),
            log_source,
        }
    }

    pub fn with_session_id(mut self, session_id: impl Into<String>) -> Identity {
        self.session_id = session_id.into();
        self
    }

    pub fn event(&self, ts: u64, kind: EventKind, payload: Map<String, Json>) -> EventRecord {
        EventRecord { session_id: self.session_id.clone(), learner_hash: self.learner_hash.clone(), ts, kind, payload }
    }
}

/// Check a record against the writer's identity and return its NDJSON
/// line, without the trailing newline.
pub fn validate(identity: &Identity, event: &EventRecord) -> Result<String, SessionError> {
    if !is_hex(&event.session_id, 32) {
        return Err(SessionError::InvalidRecord("session_id must be 32 lowercase hex digits".into()));
    }
    if !is_hex(&event.learner_hash, 16) {
        return Err(SessionError::InvalidRecord("learner_hash must be 16 lowercase hex digits".into()));
    }
    if !identity.log_source && event.payload.contains_key("source") {
        return Err(SessionError::InvalidRecord("source text is not logged in this session".into()));
    }
    let line = serde_json::to_string(event).map_err(|e| SessionError::InvalidRecord(e.to_string()))?;
    // Only the payload is free-form; the fixed field names would match
    // short identifiers such as "learner".
    let payload = serde_json::to_string(&event.payload).map_err(|e| SessionError::InvalidRecord(e.to_string()))?;
    let id = &identity.learner_id;
    if !id.is_empty() && payload.contains(id.as_str()) {
        return Err(SessionError::PrivacyViolation);
    }
    Ok(line)
}

/// Append-only writer for one log file.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    identity: Identity,
    seq: u64,
}

impl EventLog {
    /// Open (creating if needed) `dir/events.ndjson`.
    pub fn open(dir: &Path, identity: Identity) -> Result<EventLog, SessionError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(EventLog { path, file, identity, seq: 0 })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn identity(&self) -> &Identity {
        &self.identity
    }

    pub fn validate(&self, event: &EventRecord) -> Result<String, SessionError> {
        validate(&self.identity, event)
    }

    /// Append one record and flush it to disk before acknowledging.
    pub fn log_event(&mut self, event: &EventRecord) -> Result<Ack, SessionError> {
        let mut line = self.validate(event)?;
        line.push('\n');
        let write = self.file.write_all(line.as_bytes()).and_then(|_| self.file.sync_data());
        match write {
            Ok(()) => {
                self.seq += 1;
                Ok(Ack { seq: self.seq })
            }
            Err(e) if e.kind() == io::ErrorKind::StorageFull => Err(SessionError::StorageFull),
            Err(e) => Err(SessionError::IoFailure(e)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedLine {
    pub file: String,
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub from: u64,
    pub to: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub window: Option<Window>,
    pub total_events: u64,
    pub misconceptions: u64,
    pub per_category: BTreeMap<Category, u64>,
    pub per_rule: BTreeMap<RuleId, u64>,
    pub answers: BTreeMap<QuestionKind, u64>,
    /// Share of answers graded Correct, per question kind; 0 when none.
    pub correctness_rate: BTreeMap<QuestionKind, f64>,
    pub sessions: u64,
    pub unknown_kinds: u64,
    pub malformed: Vec<MalformedLine>,
}

const KINDS: [QuestionKind; 4] =
    [QuestionKind::NumericExact, QuestionKind::NumericRange, QuestionKind::MultipleChoice, QuestionKind::YesNo];

impl Default for AggregateReport {
    fn default() -> Self {
        AggregateReport {
            window: None,
            total_events: 0,
            misconceptions: 0,
            per_category: Category::ALL.into_iter().map(|c| (c, 0)).collect(),
            per_rule: RuleId::ALL.into_iter().map(|r| (r, 0)).collect(),
            answers: KINDS.into_iter().map(|k| (k, 0)).collect(),
            correctness_rate: KINDS.into_iter().map(|k| (k, 0.0)).collect(),
            sessions: 0,
            unknown_kinds: 0,
            malformed: Vec::new(),
        }
    }
}

impl AggregateReport {
    /// CSV with columns `category,count`, one row per category.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,count\n");
        for (c, n) in &self.per_category {
            out.push_str(&format!("{c},{n}\n"));
        }
        out
    }
}

fn log_files(path: &Path) -> io::Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "ndjson"))
        .collect();
    files.sort();
    Ok(files)
}

#[derive(Deserialize)]
struct RawRecord {
    session_id: String,
    #[allow(dead_code)]
    learner_hash: String,
    ts: u64,
    kind: String,
    #[serde(default)]
    payload: Map<String, Json>,
}

fn payload_enum<T: for<'de> Deserialize<'de>>(payload: &Map<String, Json>, key: &str) -> Option<T> {
    payload.get(key).and_then(|v| serde_json::from_value(v.clone()).ok())
}

/// Roll up every `.ndjson` file under `path` (or `path` itself).
/// Malformed lines are listed and skipped.
pub fn aggregate(path: &Path) -> io::Result<AggregateReport> {
    let mut report = AggregateReport::default();
    let mut sessions = BTreeSet::new();
    let mut correct: BTreeMap<QuestionKind, u64> = BTreeMap::new();
    for file in log_files(path)? {
        let name = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let reader = BufReader::new(File::open(&file)?);
        for (i, line) in reader.split(b'\n').enumerate() {
            let line = line?;
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let malformed = |reason: String| MalformedLine { file: name.clone(), line: i as u64 + 1, reason };
            let rec: RawRecord = match serde_json::from_slice(&line) {
                Ok(r) => r,
                Err(e) => {
                    report.malformed.push(malformed(e.to_string()));
                    continue;
                }
            };
            let Ok(kind) = serde_json::from_value::<EventKind>(Json::String(rec.kind.clone())) else {
                report.unknown_kinds += 1;
                continue;
            };
            report.total_events += 1;
            sessions.insert(rec.session_id);
            report.window = Some(match report.window {
                None => Window { from: rec.ts, to: rec.ts },
                Some(w) => Window { from: w.from.min(rec.ts), to: w.to.max(rec.ts) },
            });
            if kind != EventKind::QuestionAnswered {
                continue;
            }
            let verdict = rec.payload.get("verdict").and_then(Json::as_str).unwrap_or("");
            if let Some(k) = payload_enum::<QuestionKind>(&rec.payload, "question_kind") {
                *report.answers.entry(k).or_default() += 1;
                if verdict == "Correct" {
                    *correct.entry(k).or_default() += 1;
                }
            }
            if verdict != "Correct" {
                report.misconceptions += 1;
                if let Some(c) = payload_enum::<Category>(&rec.payload, "category") {
                    *report.per_category.entry(c).or_default() += 1;
                }
                if let Some(r) = payload_enum::<RuleId>(&rec.payload, "rule_id") {
                    *report.per_rule.entry(r).or_default() += 1;
                }
            }
        }
    }
    for (k, n) in &report.answers {
        let rate = if *n == 0 { 0.0 } else { correct.get(k).copied().unwrap_or(0) as f64 / *n as f64 };
        report.correctness_rate.insert(*k, rate);
    }
    report.sessions = sessions.len() as u64;
    Ok(report)
}

/// Payload for a graded answer.
pub fn answered_payload(rule: RuleId, category: Category, kind: QuestionKind, verdict: &str) -> Map<String, Json> {
    let mut m = Map::new();
    m.insert("rule_id".into(), Json::String(rule.to_string()));
    m.insert("category".into(), Json::String(category.to_string()));
    m.insert("question_kind".into(), serde_json::to_value(kind).expect("plain enum"));
    m.insert("verdict".into(), Json::String(verdict.into()));
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity() -> Identity {
        Identity::new("salt", "alice@example.edu", false)
    }

    #[test]
    fn hash_shape() {
        let h = learner_hash("salt", "alice@example.edu");
        assert!(is_hex(&h, 16));
        assert_ne!(h, learner_hash("other", "alice@example.edu"));
        assert!(is_hex(&new_session_id(), 32));
    }

    #[test]
    fn append_and_privacy() {
        let dir = tempfile::tempdir().unwrap();
        let id = identity();
        let mut log = EventLog::open(dir.path(), id.clone()).unwrap();
        let p = answered_payload(RuleId::S01, Category::Loops, QuestionKind::NumericRange, "Incorrect");
        log.log_event(&id.event(1, EventKind::QuestionAnswered, p)).unwrap();
        assert_eq!(fs::read_to_string(log.path()).unwrap().lines().count(), 1);

        let mut leak = Map::new();
        leak.insert("note".into(), Json::String("by alice@example.edu".into()));
        assert!(matches!(
            log.log_event(&id.event(2, EventKind::Edit, leak)),
            Err(SessionError::PrivacyViolation)
        ));
        let mut src = Map::new();
        src.insert("source".into(), Json::String("x = 1".into()));
        assert!(log.log_event(&id.event(3, EventKind::Edit, src)).is_err());
        let text = fs::read_to_string(log.path()).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(!text.contains("alice"));
    }

    #[test]
    fn empty_log_is_all_zero() {
        let dir = tempfile::tempdir().unwrap();
        let r = aggregate(dir.path()).unwrap();
        assert_eq!(r, AggregateReport::default());
        assert!(r.per_category.values().all(|n| *n == 0));
    }

    #[test]
    fn hand_counted_log() {
        let dir = tempfile::tempdir().unwrap();
        let a = identity();
        let b = identity();
        let mut log = EventLog::open(dir.path(), a.clone()).unwrap();
        for (who, verdict) in [(&a, "Incorrect"), (&a, "TooLoose"), (&b, "Incorrect"), (&b, "Correct")] {
            let p = answered_payload(RuleId::S01, Category::Loops, QuestionKind::NumericRange, verdict);
            log.log_event(&who.event(10, EventKind::QuestionAnswered, p)).unwrap();
        }
        log.log_event(&a.event(5, EventKind::Analyze, Map::new())).unwrap();
        let r = aggregate(dir.path()).unwrap();
        assert_eq!(r.per_category[&Category::Loops], 3);
        assert_eq!(r.per_rule[&RuleId::S01], 3);
        assert_eq!(r.correctness_rate[&QuestionKind::NumericRange], 0.25);
        assert_eq!(r.sessions, 2);
        assert_eq!(r.window, Some(Window { from: 5, to: 10 }));
        assert!(r.to_csv().starts_with("category,count\nloops,3\n"));
    }

    #[test]
    fn truncated_and_unknown_lines() {
        let dir = tempfile::tempdir().unwrap();
        let id = identity();
        let mut log = EventLog::open(dir.path(), id.clone()).unwrap();
        log.log_event(&id.event(1, EventKind::Edit, Map::new())).unwrap();
        let mut f = OpenOptions::new().append(true).open(log.path()).unwrap();
        writeln!(f, "{{\"session_id\":\"{}\",\"learner_hash\":\"{}\",\"ts\":2,\"kind\":\"typing\",\"payload\":{{}}}}", id.session_id, id.learner_hash).unwrap();
        write!(f, "{{\"session_id\":\"abc").unwrap();
        let r = aggregate(dir.path()).unwrap();
        assert_eq!(r.total_events, 1);
        assert_eq!(r.unknown_kinds, 1);
        assert_eq!(r.malformed.len(), 1);
        assert_eq!(r.malformed[0].line, 3);
    }
}
