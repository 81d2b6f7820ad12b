//! One learner's editing session: the document, its last analysis, the
//! question board and the remedy toggle. Every RPC method lands here.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};

use inq_core::analysis::Analyses;
use inq_core::explain::explain;
use inq_core::inquiry::{Answer, InquiryError, QuestionBoard};
use inq_core::interp::{run, ExecConfig, ExecStatus, Value, DEFAULT_STEP_BUDGET};
use inq_core::lang::{parse, ParseError, SourceSpan};
use inq_core::remedy::{apply, strip_markers, synthesize, RemedyError};
use inq_core::session::{self as telemetry, aggregate, answered_payload, AggregateReport, EventKind, EventLog, Identity, SessionError};
use inq_core::smells::{detect, Diagnostic, RuleId};

use crate::clock::Clock;
use crate::rpc::{self, Request, Response, RpcError};

/// Largest step budget a `run` request may ask for.
pub const MAX_RUN_BUDGET: u64 = 1_000_000;
/// Idle time after which an HTTP session is dropped.
pub const DEFAULT_SESSION_TTL_MS: u64 = 8 * 60 * 60 * 1000;

#[derive(Debug, Clone)]
pub struct Config {
    pub salt: String,
    pub learner: String,
    pub log_dir: Option<PathBuf>,
    pub log_source: bool,
    pub session_ttl_ms: u64,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            salt: String::new(),
            learner: "learner".into(),
            log_dir: None,
            log_source: false,
            session_ttl_ms: DEFAULT_SESSION_TTL_MS,
        }
    }
}

impl Config {
    /// Read INQ_SALT, INQ_LEARNER, INQ_LOG_DIR and INQ_LOG_SOURCE.
    pub fn from_env() -> Config {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let mut c = Config::default();
        if let Some(s) = var("INQ_SALT") {
            c.salt = s;
        }
        if let Some(l) = var("INQ_LEARNER").or_else(|| var("USER")) {
            c.learner = l;
        }
        c.log_dir = var("INQ_LOG_DIR").map(PathBuf::from);
        c.log_source = var("INQ_LOG_SOURCE").is_some_and(|v| matches!(v.as_str(), "1" | "true" | "yes" | "on"));
        c
    }
}

/// What every session shares: configuration, the clock and the single
/// telemetry writer.
pub struct Shared {
    pub config: Config,
    pub clock: Arc<dyn Clock>,
    log: Option<Mutex<EventLog>>,
}

impl Shared {
    pub fn new(config: Config, clock: Arc<dyn Clock>) -> Result<Shared, SessionError> {
        let log = match &config.log_dir {
            Some(dir) => Some(Mutex::new(EventLog::open(dir, identity(&config, telemetry::new_session_id()))?)),
            None => None,
        };
        Ok(Shared { config, clock, log })
    }

    fn record(&self, identity: &Identity, kind: EventKind, payload: Map<String, Json>) -> Result<u64, SessionError> {
        let event = identity.event(self.clock.now_ms(), kind, payload);
        telemetry::validate(identity, &event)?;
        match &self.log {
            Some(log) => Ok(log.lock().unwrap_or_else(|e| e.into_inner()).log_event(&event)?.seq),
            None => Ok(0),
        }
    }
}

fn identity(config: &Config, session_id: String) -> Identity {
    Identity::new(&config.salt, &config.learner, config.log_source).with_session_id(session_id)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Annotation {
    pub span: SourceSpan,
    pub rule_id: RuleId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeResult {
    pub diagnostics: Vec<Diagnostic>,
    pub annotations: Vec<Annotation>,
    pub parse_errors: Vec<ParseError>,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    #[serde(flatten)]
    pub status: ExecStatus,
    pub stdout: String,
    pub steps_used: u64,
    pub final_env: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeParams {
    source: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuestionParams {
    question_id: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerParams {
    question_id: String,
    answer: Answer,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunParams {
    source: String,
    #[serde(default)]
    inputs: Vec<String>,
    budget: Option<u64>,
    #[serde(default)]
    cycle: bool,
    /// Set by clients replaying a suggested experiment.
    #[serde(default)]
    experiment: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ToggleParams {
    show: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventParams {
    kind: EventKind,
    #[serde(default)]
    payload: Map<String, Json>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

fn params<T: DeserializeOwned>(p: &Json) -> Result<T, RpcError> {
    let p = if p.is_null() { Json::Object(Map::new()) } else { p.clone() };
    serde_json::from_value(p).map_err(|e| RpcError::invalid_params(e.to_string()))
}

fn to_json<T: Serialize>(v: &T) -> Json {
    serde_json::to_value(v).expect("result types always serialize")
}

fn session_error(e: SessionError) -> RpcError {
    match e {
        SessionError::PrivacyViolation => RpcError::new(rpc::PRIVACY_VIOLATION, e.to_string()),
        SessionError::InvalidRecord(_) => RpcError::invalid_params(e.to_string()),
        SessionError::StorageFull | SessionError::IoFailure(_) => RpcError::new(rpc::INTERNAL, e.to_string()),
    }
}

fn unknown_question(id: &str) -> RpcError {
    RpcError::new(rpc::NOT_FOUND, format!("no open question with id {id}; re-analyze"))
}

fn parse_failure(errors: &[ParseError]) -> RpcError {
    let first = errors.first().map(|e| e.to_string()).unwrap_or_default();
    RpcError::invalid_params(format!("source does not parse: {first}"))
}

pub struct Session {
    shared: Arc<Shared>,
    identity: Identity,
    /// Full text, including hidden remedy lines.
    document: String,
    show: bool,
    analyses: Option<Analyses>,
    diagnostics: Vec<Diagnostic>,
    board: QuestionBoard,
}

impl Session {
    pub fn new(shared: Arc<Shared>, session_id: String) -> Session {
        let identity = identity(&shared.config, session_id);
        Session {
            shared,
            identity,
            document: String::new(),
            show: true,
            analyses: None,
            diagnostics: Vec::new(),
            board: QuestionBoard::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.identity.session_id
    }

    /// The text the learner currently sees.
    pub fn view(&self) -> String {
        strip_markers(&self.document, self.show)
    }

    /// Handle one raw envelope and return the response line.
    pub fn handle_line(&mut self, body: &str) -> String {
        match rpc::decode(body) {
            Ok(req) => self.handle(&req).to_line(),
            Err(resp) => resp.to_line(),
        }
    }

    pub fn handle(&mut self, req: &Request) -> Response {
        Response::from_outcome(req.id.clone(), self.call(&req.method, &req.params))
    }

    pub fn call(&mut self, method: &str, p: &Json) -> Result<Json, RpcError> {
        match method {
            "analyze" => {
                let AnalyzeParams { source } = params(p)?;
                Ok(to_json(&self.analyze(source)))
            }
            "question.get" => {
                let QuestionParams { question_id } = params(p)?;
                self.question_get(&question_id)
            }
            "question.answer" => {
                let AnswerParams { question_id, answer } = params(p)?;
                self.question_answer(&question_id, &answer)
            }
            "run" => self.run(params(p)?),
            "remedy.apply" => {
                let QuestionParams { question_id } = params(p)?;
                self.remedy_apply(&question_id)
            }
            "remedy.toggle" => {
                let ToggleParams { show } = params(p)?;
                self.remedy_toggle(show)
            }
            "event.log" => {
                let EventParams { kind, payload } = params(p)?;
                let seq = self.shared.record(&self.identity, kind, payload).map_err(session_error)?;
                Ok(json!({ "seq": seq }))
            }
            "report.aggregate" => {
                let NoParams {} = params(p)?;
                let report = match &self.shared.config.log_dir {
                    Some(dir) if dir.exists() => {
                        aggregate(dir).map_err(|e| RpcError::new(rpc::INTERNAL, e.to_string()))?
                    }
                    _ => AggregateReport::default(),
                };
                Ok(to_json(&report))
            }
            _ => Err(RpcError::new(rpc::METHOD_NOT_FOUND, format!("method not found: {method}"))),
        }
    }

    /// Telemetry the engine emits on its own. A failing log never fails
    /// the learner's request.
    fn note(&self, kind: EventKind, payload: Json) {
        let payload = match payload {
            Json::Object(m) => m,
            _ => Map::new(),
        };
        let _ = self.shared.record(&self.identity, kind, payload);
    }

    pub fn analyze(&mut self, source: String) -> AnalyzeResult {
        if source != self.view() {
            self.note(EventKind::Edit, json!({ "chars": source.chars().count() }));
            self.document = source.clone();
        }
        let result = self.reanalyze(&source);
        self.note(
            EventKind::Analyze,
            json!({
                "diagnostics": result.diagnostics.len(),
                "questions": result.annotations.iter().filter(|a| a.question_id.is_some()).count(),
                "parse_ok": result.parse_errors.is_empty(),
            }),
        );
        result
    }

    fn reanalyze(&mut self, text: &str) -> AnalyzeResult {
        match parse(text) {
            Ok(program) => {
                let analyses = Analyses::new(&program);
                let diagnostics = detect(&analyses);
                self.board.refresh(&diagnostics, &analyses);
                let annotations = diagnostics
                    .iter()
                    .map(|d| Annotation {
                        span: d.span,
                        rule_id: d.rule_id,
                        question_id: self.board.for_diagnostic(d).map(|q| q.question_id.clone()),
                    })
                    .collect();
                self.analyses = Some(analyses);
                self.diagnostics = diagnostics.clone();
                AnalyzeResult { diagnostics, annotations, parse_errors: Vec::new() }
            }
            Err(parse_errors) => {
                self.analyses = None;
                self.diagnostics.clear();
                self.board.clear();
                AnalyzeResult { diagnostics: Vec::new(), annotations: Vec::new(), parse_errors }
            }
        }
    }

    fn question_get(&mut self, id: &str) -> Result<Json, RpcError> {
        let q = self.board.get(id).ok_or_else(|| unknown_question(id))?;
        let client = q.to_client();
        self.note(EventKind::QuestionShown, json!({ "rule_id": client.rule_id, "question_kind": client.kind }));
        Ok(to_json(&client))
    }

    fn question_answer(&mut self, id: &str, answer: &Answer) -> Result<Json, RpcError> {
        let now = self.shared.clock.now_ms();
        let judgment = self.board.answer(id, answer, now).map_err(|e| match e {
            InquiryError::UnknownQuestion(id) => unknown_question(&id),
            InquiryError::SchemaMismatch(_) => RpcError::new(rpc::SCHEMA_MISMATCH, e.to_string()),
        })?;
        let q = self.board.get(id).expect("answered question stays open until refresh");
        let analyses = self.analyses.as_ref().expect("open questions imply a parsed document");
        let explanation = explain(q, &judgment, &analyses.program);
        let verdict = format!("{:?}", judgment.verdict);
        self.note(EventKind::QuestionAnswered, Json::Object(answered_payload(q.rule_id(), q.topic, q.kind, &verdict)));
        self.note(
            EventKind::ExplanationShown,
            json!({ "rule_id": q.rule_id(), "experiment": explanation.experiment.is_some() }),
        );
        Ok(json!({ "verdict": judgment.verdict, "explanation": explanation }))
    }

    fn run(&mut self, p: RunParams) -> Result<Json, RpcError> {
        let budget = p.budget.unwrap_or(DEFAULT_STEP_BUDGET);
        if budget == 0 || budget > MAX_RUN_BUDGET {
            return Err(RpcError::invalid_params(format!("budget must be between 1 and {MAX_RUN_BUDGET}")));
        }
        let program = parse(&p.source).map_err(|e| parse_failure(&e))?;
        let mut config = ExecConfig::with_inputs(p.inputs).budget(budget);
        config.cycle_inputs = p.cycle;
        let r = run(&program, &config);
        let summary = RunSummary { status: r.status, stdout: r.stdout, steps_used: r.steps_used, final_env: r.final_env };
        let json = to_json(&summary);
        let kind = if p.experiment { EventKind::ExperimentRun } else { EventKind::ProgramRun };
        self.note(kind, json!({ "status": json["status"], "steps": summary.steps_used }));
        Ok(json)
    }

    fn remedy_apply(&mut self, id: &str) -> Result<Json, RpcError> {
        let q = self.board.get(id).ok_or_else(|| unknown_question(id))?;
        let analyses = self.analyses.as_ref().expect("open questions imply a parsed document");
        let rule = q.rule_id();
        let remedies = synthesize(&q.diagnostic, analyses);
        let view = self.view();
        let new_source = apply(&view, &remedies).map_err(|e| match e {
            RemedyError::StaleAnchor(_) => RpcError::new(rpc::CONFLICT, e.to_string()),
            RemedyError::Parse(_) => RpcError::new(rpc::CONFLICT, e.to_string()),
        })?;
        self.document = new_source.clone();
        self.show = true;
        self.reanalyze(&new_source);
        self.note(EventKind::RemedyApplied, json!({ "rule_id": rule, "count": remedies.len() }));
        Ok(json!({ "new_source": new_source }))
    }

    fn remedy_toggle(&mut self, show: bool) -> Result<Json, RpcError> {
        self.show = show;
        let view = self.view();
        self.reanalyze(&view);
        self.note(EventKind::RemedyToggled, json!({ "show": show }));
        Ok(json!({ "new_source": view }))
    }
}
