//! End-to-end acceptance checks. Prints one PASS or FAIL line per check.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde_json::{json, Map, Value as Json};

use common::*;
use inq_core::analysis::{Analyses, IterationBound};
use inq_core::inquiry::{check_answer, generate_questions, Answer, AnswerSchema, GroundTruth, InquiryError, QuestionKind, Verdict};
use inq_core::interp::{run, ExecConfig, ExecStatus};
use inq_core::lang::{parse, tokenize};
use inq_core::remedy::{apply, loop_assertion, strip_markers};
use inq_core::session::{aggregate, answered_payload, EventKind, EventLog, Identity};
use inq_core::smells::{detect, Category, RuleId};
use inq_core::testgen::{
    arbitrary_program, brute_force_class, catalog_conditions, classifier_class, closed_program, random_condition,
    round_trips, soundness_violations,
};
use inq_gateway::Config;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn canonical_fixture() -> Outcome {
    let start = Instant::now();
    let a = Analyses::new(&parse(YES_NO).unwrap());
    let diags = detect(&a);
    if diags.len() != 1 || diags[0].rule_id != RuleId::S01 || diags[0].span.start_line != 2 || diags[0].span.start_col != 1 {
        return Err(format!("expected one S01 on the while header, got {diags:?}"));
    }
    let qs = generate_questions(&diags, &a);
    let q = &qs[0];
    if q.kind != QuestionKind::NumericRange || q.ground_truth != GroundTruth::Bound(IterationBound::Infinite) {
        return Err(format!("question is {:?} with truth {:?}", q.kind, q.ground_truth));
    }

    let mut s = gateway(Config::default()).local_session();
    let analyzed = s.call("analyze", &json!({ "source": YES_NO })).map_err(|e| e.to_string())?;
    if analyzed["annotations"][0]["question_id"] != q.question_id.as_str() {
        return Err(format!("annotation does not carry the question: {analyzed}"));
    }
    let answer = json!({ "type": "range", "lo": 0, "hi": 100, "infinite": false });
    let judged = s.call("question.answer", &json!({ "question_id": q.question_id, "answer": answer })).map_err(|e| e.to_string())?;
    if judged["verdict"] != "Incorrect" {
        return Err(format!("verdict {}", judged["verdict"]));
    }
    let queue = judged["explanation"]["experiment"]["input_queue"].clone();
    if !queue.is_array() {
        return Err("explanation has no experiment".into());
    }
    let ran = s
        .call("run", &json!({ "source": YES_NO, "inputs": queue, "budget": 10000, "cycle": true }))
        .map_err(|e| e.to_string())?;
    if ran["status"] != "BudgetExhausted" {
        return Err(format!("replay ended with {}", ran["status"]));
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("queue {queue}, replay exhausted budget 10000, {} ms", elapsed.as_millis()))
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus")
}

fn parser_round_trip() -> Outcome {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    if files.len() < 100 {
        return Err(format!("only {} corpus files", files.len()));
    }
    let mut failed = Vec::new();
    for f in &files {
        let src = std::fs::read_to_string(f).unwrap();
        if round_trips(&src) != Ok(true) {
            failed.push(f.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    for seed in 0..500u64 {
        if round_trips(&arbitrary_program(seed)) != Ok(true) {
            failed.push(format!("generated seed {seed}"));
        }
    }
    if failed.is_empty() {
        Ok(format!("{} corpus files + 500 generated programs", files.len()))
    } else {
        Err(format!("{} failures, first {}", failed.len(), failed[0]))
    }
}

fn analysis_soundness() -> Outcome {
    let (mut completed, mut violations, mut seed) = (0, Vec::new(), 0u64);
    while completed < 200 && seed < 5000 {
        let p = parse(&closed_program(seed)).unwrap();
        if let Some(v) = soundness_violations(&p, 100_000) {
            completed += 1;
            violations.extend(v.into_iter().map(|m| format!("seed {seed}: {m}")));
        }
        seed += 1;
    }
    if completed < 200 {
        return Err(format!("only {completed} programs completed"));
    }
    if violations.is_empty() {
        Ok(format!("200 completed programs ({seed} generated), 0 violations"))
    } else {
        Err(format!("{} violations, first {}", violations.len(), violations[0]))
    }
}

fn classifier_vs_grid() -> Outcome {
    let mut cases = catalog_conditions();
    let catalog = cases.len();
    cases.extend((0..300).map(random_condition));
    let disagree: Vec<String> = cases
        .iter()
        .filter(|c| classifier_class(c) != brute_force_class(c))
        .map(|c| format!("{} ({:?} vs {:?})", c.text, classifier_class(c), brute_force_class(c)))
        .collect();
    if disagree.is_empty() {
        Ok(format!("{catalog} catalog + 300 random conditions agree"))
    } else {
        Err(format!("{} disagreements, first {}", disagree.len(), disagree[0]))
    }
}

fn remedy_transparency() -> Outcome {
    let relex = |s: &str| tokenize(s).0.into_iter().map(|t| (t.kind, t.value)).collect::<Vec<_>>();
    let (mut checked, mut seed, mut violations) = (0, 0u64, Vec::new());
    while checked < 100 && seed < 20_000 {
        let src = closed_program(seed);
        seed += 1;
        let p = parse(&src).unwrap();
        let a = Analyses::new(&p);
        let remedies: Vec<_> = a.bounds.keys().flat_map(|id| loop_assertion(&a, *id)).collect();
        if remedies.is_empty() {
            continue;
        }
        let before = run(&p, &ExecConfig::default());
        if before.status != ExecStatus::Completed {
            continue;
        }
        checked += 1;
        let out = match apply(&src, &remedies) {
            Ok(o) => o,
            Err(e) => {
                violations.push(format!("seed {}: {e}", seed - 1));
                continue;
            }
        };
        let stripped = strip_markers(&out, false);
        if stripped != src || relex(&stripped) != relex(&src) {
            violations.push(format!("seed {}: strip is not the identity", seed - 1));
        }
        let after = match parse(&out) {
            Ok(q) => run(&q, &ExecConfig::default()),
            Err(_) => {
                violations.push(format!("seed {}: remedied text does not parse", seed - 1));
                continue;
            }
        };
        if after.status != ExecStatus::Completed || after.stdout != before.stdout || after.final_env != before.final_env {
            violations.push(format!("seed {}: behaviour changed ({:?})", seed - 1, after.status));
        }
    }
    if checked < 100 {
        return Err(format!("only {checked} programs had assertions"));
    }
    if violations.is_empty() {
        Ok("100 programs with loop-exit assertions, 0 violations".into())
    } else {
        Err(format!("{} violations, first {}", violations.len(), violations[0]))
    }
}

/// The grading rule stated directly.
fn expected_verdict(truth: Option<u64>, lo: u64, hi: u64, infinite: bool) -> Option<Verdict> {
    if lo > hi && !infinite {
        return None;
    }
    Some(match truth {
        None if infinite => Verdict::Correct,
        None => Verdict::Incorrect,
        Some(_) if infinite => Verdict::Incorrect,
        Some(n) if lo <= n && n <= hi => {
            if hi - lo <= n.max(2) {
                Verdict::Correct
            } else {
                Verdict::TooLoose
            }
        }
        Some(_) => Verdict::Incorrect,
    })
}

fn grading_contract() -> Outcome {
    let a = Analyses::new(&parse(YES_NO).unwrap());
    let base = generate_questions(&detect(&a), &a).remove(0);
    if !matches!(base.schema, AnswerSchema::NumericRange { infinite_option: true }) {
        return Err("fixture question is not a range question".into());
    }
    let truths: Vec<Option<u64>> = (0..=20).map(Some).chain([None]).collect();
    let (mut cases, mut wrong) = (0, Vec::new());
    for truth in truths {
        let mut q = base.clone();
        q.ground_truth = GroundTruth::Bound(truth.map_or(IterationBound::Infinite, IterationBound::Exact));
        for lo in 0..=40 {
            for hi in 0..=40 {
                for infinite in [false, true] {
                    cases += 1;
                    let got = match check_answer(&q, &Answer::Range { lo, hi, infinite }, 0) {
                        Ok(j) if (j.verdict == Verdict::Correct) == j.misconception.is_none() => Some(j.verdict),
                        Ok(_) => {
                            wrong.push(format!("misconception record out of step at {truth:?} {lo}..{hi}"));
                            continue;
                        }
                        Err(InquiryError::SchemaMismatch(_)) => None,
                        Err(e) => {
                            wrong.push(e.to_string());
                            continue;
                        }
                    };
                    let want = expected_verdict(truth, lo, hi, infinite);
                    if got != want {
                        wrong.push(format!("truth {truth:?}, answer {lo}..{hi} infinite={infinite}: {got:?}, want {want:?}"));
                    }
                }
            }
        }
    }
    if wrong.is_empty() {
        Ok(format!("{cases} answers graded as specified"))
    } else {
        Err(format!("{} mismatches, first {}", wrong.len(), wrong[0]))
    }
}

fn telemetry_reconciliation() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let learners: Vec<Identity> = (0..4).map(|k| Identity::new("acceptance-salt", &format!("student-{k:03}"), false)).collect();
    let mut log = EventLog::open(dir.path(), learners[0].clone()).unwrap();
    let verdicts = ["Correct", "Incorrect", "TooLoose", "Correct", "Incorrect"];
    let kinds = [QuestionKind::NumericRange, QuestionKind::YesNo, QuestionKind::MultipleChoice];
    let mut per_category: BTreeMap<Category, u64> = BTreeMap::new();
    let mut per_rule: BTreeMap<RuleId, u64> = BTreeMap::new();
    let mut answers: BTreeMap<QuestionKind, u64> = BTreeMap::new();
    let mut misconceptions = 0;
    for k in 0..1000u64 {
        let who = &learners[(k * 7 % 4) as usize];
        let event = if k % 3 == 0 {
            who.event(k, EventKind::Analyze, Map::new())
        } else {
            let rule = RuleId::ALL[(k * 5 % 9) as usize];
            let verdict = verdicts[(k % 5) as usize];
            let kind = kinds[(k % 3) as usize];
            *answers.entry(kind).or_default() += 1;
            if verdict != "Correct" {
                misconceptions += 1;
                *per_category.entry(rule.category()).or_default() += 1;
                *per_rule.entry(rule).or_default() += 1;
            }
            who.event(k, EventKind::QuestionAnswered, answered_payload(rule, rule.category(), kind, verdict))
        };
        log.log_event(&event).map_err(|e| e.to_string())?;
    }
    let r = aggregate(dir.path()).map_err(|e| e.to_string())?;
    let mut diffs = Vec::new();
    if r.total_events != 1000 {
        diffs.push(format!("total {}", r.total_events));
    }
    if r.misconceptions != misconceptions {
        diffs.push(format!("misconceptions {} vs {misconceptions}", r.misconceptions));
    }
    if r.sessions != 4 {
        diffs.push(format!("sessions {}", r.sessions));
    }
    for c in Category::ALL {
        if r.per_category.get(&c).copied().unwrap_or(0) != per_category.get(&c).copied().unwrap_or(0) {
            diffs.push(format!("category {c}"));
        }
    }
    for rule in RuleId::ALL {
        if r.per_rule.get(&rule).copied().unwrap_or(0) != per_rule.get(&rule).copied().unwrap_or(0) {
            diffs.push(format!("rule {rule}"));
        }
    }
    for (kind, n) in &answers {
        if r.answers.get(kind) != Some(n) {
            diffs.push(format!("answers {kind:?}"));
        }
    }
    if !diffs.is_empty() {
        return Err(format!("report disagrees: {}", diffs.join(", ")));
    }

    let config = Config { learner: "student-000".into(), salt: "acceptance-salt".into(), log_dir: Some(dir.path().into()), ..Config::default() };
    let mut s = gateway(config).local_session();
    let leak = s.call("event.log", &json!({ "kind": "edit", "payload": { "user": "student-000" } }));
    let lines = std::fs::read_to_string(dir.path().join("events.ndjson")).unwrap().lines().count();
    match leak {
        Err(e) if e.code == 403 && lines == 1000 => Ok(format!("1000 events reconcile ({misconceptions} misconceptions); clear-text id rejected")),
        other => Err(format!("clear-text id not rejected: {other:?}, {lines} lines")),
    }
}

fn transport_equivalence() -> Outcome {
    let script = scripted_session();
    if script.len() != 12 {
        return Err(format!("script has {} steps", script.len()));
    }
    let stdio = run_stdio(&gateway(Config::default()), &script);
    let http = run_http(gateway(Config::default()), &script);
    if stdio.len() != 12 || http.len() != 12 {
        return Err(format!("{} stdio and {} http responses", stdio.len(), http.len()));
    }
    for (k, (a, b)) in stdio.iter().zip(&http).enumerate() {
        if payload(a) != payload(b) {
            return Err(format!("step {} differs:\n  stdio {a}\n  http  {b}", k + 1));
        }
    }
    let results = stdio.iter().filter(|l| serde_json::from_str::<Json>(l).unwrap().get("result").is_some()).count();
    Ok(format!("12 steps byte-identical ({results} results, {} errors)", 12 - results))
}

fn main() {
    let checks: [Check; 8] = [
        ("canonical fixture", canonical_fixture),
        ("parser round trip", parser_round_trip),
        ("analysis soundness", analysis_soundness),
        ("condition classifier", classifier_vs_grid),
        ("remedy transparency", remedy_transparency),
        ("grading contract", grading_contract),
        ("telemetry reconciliation", telemetry_reconciliation),
        ("transport equivalence", transport_equivalence),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}
