use std::fs;
use std::path::PathBuf;

use inq_core::analysis::Analyses;
use inq_core::explain::{explain, find_surprise_input};
use inq_core::inquiry::{check_answer, generate_questions, Answer, AnswerSchema, GroundTruth, Verdict};
use inq_core::lang::{parse, tokenize};
use inq_core::remedy::{apply, strip_markers, synthesize};
use inq_core::smells::{detect, RuleId};
use inq_core::testgen::round_trips;

fn corpus() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut files: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect()
}

fn rules(src: &str) -> Vec<RuleId> {
    let a = Analyses::new(&parse(src).unwrap());
    detect(&a).into_iter().map(|d| d.rule_id).collect()
}

#[test]
fn every_file_round_trips() {
    let files = corpus();
    assert!(files.len() >= 100);
    for (name, src) in &files {
        assert_eq!(round_trips(src), Ok(true), "{name}");
    }
}

#[test]
fn expected_findings() {
    let expect: &[(&str, &[RuleId])] = &[
        ("yes_no_loop", &[RuleId::S01]),
        ("yes_no_fixed", &[]),
        ("count_up", &[]),
        ("step_two", &[]),
        ("empty_range", &[RuleId::S02]),
        ("type_mismatch", &[RuleId::S02, RuleId::S05, RuleId::S06]),
        ("string_digits", &[RuleId::S02, RuleId::S05, RuleId::S06]),
        ("unassigned", &[RuleId::S07]),
        ("bare_compare", &[RuleId::S08]),
        ("division_compare", &[RuleId::S09]),
        ("break_first", &[RuleId::S03]),
        ("while_true_break", &[]),
        ("while_no_update", &[RuleId::S04]),
        ("always_true_if", &[RuleId::S05]),
        ("never_true_if", &[RuleId::S02, RuleId::S05]),
        ("while_false", &[RuleId::S02]),
        ("triple_or", &[RuleId::S01]),
        ("and_tautology_loop", &[RuleId::S01]),
        ("update_wrong_var", &[RuleId::S01]),
        ("guarded_unassigned", &[RuleId::S07]),
        ("collatz", &[]),
        ("prime_check", &[]),
        ("password", &[]),
        ("menu", &[]),
    ];
    let files: std::collections::BTreeMap<_, _> = corpus().into_iter().collect();
    for (name, want) in expect {
        assert_eq!(rules(&files[*name]), *want, "{name}");
    }
}

#[test]
fn questions_experiments_and_remedies_hold_up() {
    for (name, src) in corpus() {
        let program = parse(&src).unwrap();
        let a = Analyses::new(&program);
        let diags = detect(&a);
        let questions = generate_questions(&diags, &a);
        let mut nodes: Vec<_> = questions.iter().map(|q| q.node()).collect();
        nodes.dedup();
        assert_eq!(nodes.len(), questions.len(), "{name}: one question per node");

        for q in &questions {
            assert!(q.prompt.contains(&format!("line {}", q.diagnostic.span.start_line)), "{name}");
            let wrong = match (&q.schema, &q.ground_truth) {
                (AnswerSchema::YesNo, GroundTruth::YesNo(t)) => Answer::YesNo { value: !t },
                (AnswerSchema::MultipleChoice { options }, GroundTruth::Choice(i)) => Answer::Choice { index: (i + 1) % options.len() },
                _ => Answer::Range { lo: 0, hi: 0, infinite: false },
            };
            let j = check_answer(q, &wrong, 0).unwrap();
            if j.verdict == Verdict::Correct {
                continue;
            }
            let e = explain(q, &j, &program);
            assert!(!e.summary.is_empty() && !e.cause.is_empty());
            if let Some(x) = &e.experiment {
                assert!(x.verify(&program), "{name}: prediction not reproduced");
            }
        }

        for d in diags.iter().filter(|d| d.is_question_worthy()) {
            if program.uses_input() {
                let first = find_surprise_input(&program, d);
                assert_eq!(first, find_surprise_input(&program, d), "{name}: search is deterministic");
            }
            let remedies = synthesize(d, &a);
            assert!(remedies.len() <= 2);
            let out = apply(&src, &remedies).unwrap();
            assert!(parse(&out).is_ok(), "{name}:\n{out}");
            assert_eq!(strip_markers(&out, false), src, "{name}");
            let relex = |s: &str| tokenize(s).0.into_iter().map(|t| (t.kind, t.value)).collect::<Vec<_>>();
            assert_eq!(relex(&strip_markers(&out, false)), relex(&src));
        }
    }
}
