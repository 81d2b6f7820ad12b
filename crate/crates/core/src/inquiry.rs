//! Questions built from diagnostics, answer grading and the per-session
//! question board.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{Analyses, IterationBound};
use crate::lang::pretty::expr_to_string;
use crate::lang::{pretty_print, NodeId, Program, SourceSpan};
use crate::smells::{Category, Diagnostic, Evidence, RuleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuestionKind {
    NumericExact,
    NumericRange,
    MultipleChoice,
    YesNo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnswerSchema {
    NumericExact,
    /// A `(lo, hi)` pair of non-negative integers plus an "infinite" box.
    NumericRange { infinite_option: bool },
    MultipleChoice { options: Vec<String> },
    YesNo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum GroundTruth {
    Bound(IterationBound),
    Choice(usize),
    YesNo(bool),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Answer {
    Exact { value: u64 },
    Range { lo: u64, hi: u64, #[serde(default)] infinite: bool },
    Choice { index: usize },
    YesNo { value: bool },
}

/// A question as held by the engine. Deliberately not `Serialize`: the
/// wire form is [`ClientQuestion`], which has no ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub question_id: String,
    pub diagnostic: Diagnostic,
    pub kind: QuestionKind,
    pub prompt: String,
    pub schema: AnswerSchema,
    pub ground_truth: GroundTruth,
    pub topic: Category,
    /// Rule id plus the printed subtree; identifies the construct across
    /// edits that leave it unchanged.
    pub construct_key: String,
}

impl Question {
    pub fn rule_id(&self) -> RuleId {
        self.diagnostic.rule_id
    }

    pub fn node(&self) -> NodeId {
        self.diagnostic.node
    }

    pub fn to_client(&self) -> ClientQuestion {
        ClientQuestion {
            question_id: self.question_id.clone(),
            rule_id: self.diagnostic.rule_id,
            node: self.diagnostic.node,
            span: self.diagnostic.span,
            kind: self.kind,
            prompt: self.prompt.clone(),
            schema: self.schema.clone(),
            topic: self.topic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientQuestion {
    pub question_id: String,
    pub rule_id: RuleId,
    pub node: NodeId,
    pub span: SourceSpan,
    pub kind: QuestionKind,
    pub prompt: String,
    pub schema: AnswerSchema,
    pub topic: Category,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Correct,
    Incorrect,
    TooLoose,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisconceptionRecord {
    pub category: Category,
    pub rule_id: RuleId,
    pub kind: QuestionKind,
    pub given: Answer,
    pub truth: GroundTruth,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerJudgment {
    pub verdict: Verdict,
    pub truth: GroundTruth,
    pub misconception: Option<MisconceptionRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InquiryError {
    #[error("answer does not fit the question: {0}")]
    SchemaMismatch(String),
    #[error("no open question with id {0}")]
    UnknownQuestion(String),
}

/// Which rule gets the question when several fire on one node.
const PRIORITY: [RuleId; 7] = [RuleId::S01, RuleId::S06, RuleId::S07, RuleId::S03, RuleId::S04, RuleId::S02, RuleId::S05];

fn priority(rule: RuleId) -> usize {
    PRIORITY.iter().position(|r| *r == rule).unwrap_or(PRIORITY.len())
}

/// Printed form of the statement or expression with this id.
pub fn subtree_text(program: &Program, node: NodeId) -> Option<String> {
    if let Some(s) = program.find_stmt(node) {
        return Some(pretty_print(&Program { statements: vec![s.clone()] }));
    }
    program.find_expr(node).map(expr_to_string)
}

fn short_hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..8])
}

/// One question per question-worthy diagnostic, at most one per node.
pub fn generate_questions(diagnostics: &[Diagnostic], analyses: &Analyses) -> Vec<Question> {
    let mut best: BTreeMap<NodeId, &Diagnostic> = BTreeMap::new();
    for d in diagnostics.iter().filter(|d| d.is_question_worthy()) {
        match best.get(&d.node) {
            Some(cur) if priority(cur.rule_id) <= priority(d.rule_id) => {}
            _ => {
                best.insert(d.node, d);
            }
        }
    }
    let mut chosen: Vec<&Diagnostic> = best.into_values().collect();
    chosen.sort_by_key(|d| (d.span.start_offset, d.rule_id));
    chosen.into_iter().filter_map(|d| build_question(d, analyses)).collect()
}

fn build_question(d: &Diagnostic, analyses: &Analyses) -> Option<Question> {
    let program = &analyses.program;
    let line = d.span.start_line;
    let text = subtree_text(program, d.node)?;
    let path = program.node_path(d.node)?;
    let path_str = format!("{path:?}");
    let question_id = short_hash(&[&d.rule_id.to_string(), &path_str, &text]);
    let construct_key = format!("{}\u{0}{}", d.rule_id, text);
    let range = AnswerSchema::NumericRange { infinite_option: true };

    let (kind, prompt, schema, truth) = match d.rule_id {
        RuleId::S01 => (
            QuestionKind::NumericRange,
            format!("How many times will the loop on line {line} run its body?"),
            range,
            GroundTruth::Bound(IterationBound::Infinite),
        ),
        RuleId::S04 => (
            QuestionKind::NumericRange,
            format!("Once the loop on line {line} starts, how many times will it run its body?"),
            range,
            GroundTruth::Bound(IterationBound::Infinite),
        ),
        RuleId::S03 => {
            let truth = match d.bound() {
                Some(b @ IterationBound::Exact(n)) if n <= 1 => b,
                Some(IterationBound::Range(a, b)) if b <= 1 => {
                    if a == b {
                        IterationBound::Exact(a)
                    } else {
                        IterationBound::Range(a, b)
                    }
                }
                _ => IterationBound::Range(0, 1),
            };
            (
                QuestionKind::NumericRange,
                format!("How many times can the loop on line {line} run its body?"),
                range,
                GroundTruth::Bound(truth),
            )
        }
        RuleId::S02 => (
            QuestionKind::YesNo,
            format!("Will the body under line {line} ever run?"),
            AnswerSchema::YesNo,
            GroundTruth::YesNo(false),
        ),
        RuleId::S05 => match d.condition_class()? {
            crate::analysis::ConditionClass::Tautology => (
                QuestionKind::YesNo,
                format!("Can the condition on line {line} ever be false?"),
                AnswerSchema::YesNo,
                GroundTruth::YesNo(false),
            ),
            crate::analysis::ConditionClass::Contradiction => (
                QuestionKind::YesNo,
                format!("Can the condition on line {line} ever be true?"),
                AnswerSchema::YesNo,
                GroundTruth::YesNo(false),
            ),
            _ => return None,
        },
        RuleId::S06 => {
            let outcome = d.evidence.iter().find_map(|e| match e {
                Evidence::CrossType { outcome, .. } => Some(*outcome),
                _ => None,
            })?;
            (
                QuestionKind::MultipleChoice,
                format!("What is the result of `{}` on line {line}?", text),
                AnswerSchema::MultipleChoice {
                    options: vec![
                        "Always True".into(),
                        "Always False".into(),
                        "It depends on the values".into(),
                        "It stops the program with an error".into(),
                    ],
                },
                GroundTruth::Choice(if outcome { 0 } else { 1 }),
            )
        }
        RuleId::S07 => {
            let name = d.evidence.iter().find_map(|e| match e {
                Evidence::Reaching { name, .. } => Some(name.clone()),
                _ => None,
            })?;
            (
                QuestionKind::MultipleChoice,
                format!("What value does '{name}' have when line {line} reads it?"),
                AnswerSchema::MultipleChoice {
                    options: vec![
                        "0".into(),
                        "An empty string".into(),
                        format!("The value assigned to '{name}' further down"),
                        format!("None: the program stops with an error because '{name}' is not yet assigned"),
                    ],
                },
                GroundTruth::Choice(3),
            )
        }
        RuleId::S08 | RuleId::S09 => return None,
    };
    Some(Question {
        question_id,
        diagnostic: d.clone(),
        kind,
        prompt,
        schema,
        ground_truth: truth,
        topic: d.category,
        construct_key,
    })
}

fn check_shape(question: &Question, answer: &Answer) -> Result<(), InquiryError> {
    let ok = match (&question.schema, answer) {
        (AnswerSchema::NumericExact, Answer::Exact { .. }) => true,
        (AnswerSchema::NumericRange { infinite_option }, Answer::Range { lo, hi, infinite }) => {
            if lo > hi && !infinite {
                return Err(InquiryError::SchemaMismatch(format!("lower end {lo} is above upper end {hi}")));
            }
            *infinite_option || !infinite
        }
        (AnswerSchema::MultipleChoice { options }, Answer::Choice { index }) => {
            if *index >= options.len() {
                return Err(InquiryError::SchemaMismatch(format!(
                    "option {index} does not exist; there are {}",
                    options.len()
                )));
            }
            true
        }
        (AnswerSchema::YesNo, Answer::YesNo { .. }) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(InquiryError::SchemaMismatch(format!("a {:?} question cannot take this answer", question.kind)))
    }
}

/// The widest range that still counts as an answer for a loop running
/// `n` times.
pub fn width_allowance(n: u64) -> u64 {
    n.max(2)
}

fn grade_range(truth: &IterationBound, lo: u64, hi: u64, infinite: bool) -> Verdict {
    let (a, b) = match *truth {
        IterationBound::Infinite => {
            return if infinite { Verdict::Correct } else { Verdict::Incorrect };
        }
        IterationBound::Exact(n) => (n, n),
        IterationBound::Range(a, b) => (a, b),
        IterationBound::AtLeast(_) | IterationBound::Unknown => return Verdict::Incorrect,
    };
    if infinite || lo > a || hi < b {
        Verdict::Incorrect
    } else if hi - lo <= width_allowance(b) {
        Verdict::Correct
    } else {
        Verdict::TooLoose
    }
}

/// Grade an answer. Pure: the same inputs give the same judgment.
pub fn check_answer(question: &Question, answer: &Answer, at_ms: u64) -> Result<AnswerJudgment, InquiryError> {
    check_shape(question, answer)?;
    let verdict = match (&question.ground_truth, answer) {
        (GroundTruth::Bound(b), Answer::Range { lo, hi, infinite }) => grade_range(b, *lo, *hi, *infinite),
        (GroundTruth::Bound(IterationBound::Exact(n)), Answer::Exact { value }) => {
            if value == n {
                Verdict::Correct
            } else {
                Verdict::Incorrect
            }
        }
        (GroundTruth::Choice(i), Answer::Choice { index }) if i == index => Verdict::Correct,
        (GroundTruth::YesNo(t), Answer::YesNo { value }) if t == value => Verdict::Correct,
        _ => Verdict::Incorrect,
    };
    let misconception = (verdict != Verdict::Correct).then(|| MisconceptionRecord {
        category: question.topic,
        rule_id: question.rule_id(),
        kind: question.kind,
        given: answer.clone(),
        truth: question.ground_truth.clone(),
        timestamp: at_ms,
    });
    Ok(AnswerJudgment { verdict, truth: question.ground_truth.clone(), misconception })
}

/// Open questions and cooled-down constructs for one editing session.
///
/// A construct that has been answered is not asked about again until its
/// printed text changes.
#[derive(Debug, Clone, Default)]
pub struct QuestionBoard {
    open: BTreeMap<String, Question>,
    cooldown: BTreeSet<String>,
}

impl QuestionBoard {
    pub fn new() -> QuestionBoard {
        QuestionBoard::default()
    }

    /// Replace the open questions after a re-analysis. Ids whose node path
    /// or text changed disappear; cooled-down constructs are skipped.
    pub fn refresh(&mut self, diagnostics: &[Diagnostic], analyses: &Analyses) -> Vec<&Question> {
        self.open = generate_questions(diagnostics, analyses)
            .into_iter()
            .filter(|q| !self.cooldown.contains(&q.construct_key))
            .map(|q| (q.question_id.clone(), q))
            .collect();
        let mut qs: Vec<&Question> = self.open.values().collect();
        qs.sort_by_key(|q| (q.diagnostic.span.start_offset, q.rule_id()));
        qs
    }

    pub fn get(&self, question_id: &str) -> Option<&Question> {
        self.open.get(question_id)
    }

    /// Question open for this diagnostic, if any.
    pub fn for_diagnostic(&self, d: &Diagnostic) -> Option<&Question> {
        self.open.values().find(|q| q.diagnostic.node == d.node && q.diagnostic.rule_id == d.rule_id)
    }

    pub fn open_count(&self) -> usize {
        self.open.len()
    }

    /// Grade an open question and cool its construct down. The question
    /// stays retrievable until the next refresh.
    pub fn answer(&mut self, question_id: &str, answer: &Answer, at_ms: u64) -> Result<AnswerJudgment, InquiryError> {
        let q = self.open.get(question_id).ok_or_else(|| InquiryError::UnknownQuestion(question_id.into()))?;
        let judgment = check_answer(q, answer, at_ms)?;
        self.cooldown.insert(q.construct_key.clone());
        Ok(judgment)
    }

    pub fn is_cooling(&self, construct_key: &str) -> bool {
        self.cooldown.contains(construct_key)
    }

    pub fn clear(&mut self) {
        self.open.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::smells::detect;

    fn questions(src: &str) -> (Analyses, Vec<Question>) {
        let a = Analyses::new(&parse(src).unwrap());
        let d = detect(&a);
        let q = generate_questions(&d, &a);
        (a, q)
    }

    fn range(lo: u64, hi: u64, infinite: bool) -> Answer {
        Answer::Range { lo, hi, infinite }
    }

    #[test]
    fn yes_no_loop_question() {
        let (_, qs) = questions(crate::fixtures::ORIGINAL_LOOP);
        assert_eq!(qs.len(), 1);
        let q = &qs[0];
        assert_eq!(q.kind, QuestionKind::NumericRange);
        assert_eq!(q.ground_truth, GroundTruth::Bound(IterationBound::Infinite));
        assert!(q.prompt.contains("line 2"));
        let j = check_answer(q, &range(0, 100, false), 7).unwrap();
        assert_eq!(j.verdict, Verdict::Incorrect);
        let m = j.misconception.unwrap();
        assert_eq!((m.rule_id, m.category, m.timestamp), (RuleId::S01, Category::Loops, 7));
        assert_eq!(check_answer(q, &range(0, 0, true), 7).unwrap().verdict, Verdict::Correct);
    }

    #[test]
    fn no_diagnostics_no_questions() {
        let (a, _) = questions("x = 1\n");
        assert!(generate_questions(&[], &a).is_empty());
    }

    #[test]
    fn dead_loop_is_yes_no() {
        let (_, qs) = questions("while False:\n    print(1)\n");
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].kind, QuestionKind::YesNo);
        assert_eq!(qs[0].ground_truth, GroundTruth::YesNo(false));
    }

    #[test]
    fn one_question_per_node() {
        let (_, qs) = questions("x = int(input())\nif x == '5':\n    print(x)\n");
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].rule_id(), RuleId::S06);
        assert_eq!(qs[0].ground_truth, GroundTruth::Choice(1));
    }

    #[test]
    fn grading_examples() {
        let q = Question {
            question_id: "q".into(),
            diagnostic: questions(crate::fixtures::ORIGINAL_LOOP).1[0].diagnostic.clone(),
            kind: QuestionKind::NumericRange,
            prompt: String::new(),
            schema: AnswerSchema::NumericRange { infinite_option: true },
            ground_truth: GroundTruth::Bound(IterationBound::Exact(5)),
            topic: Category::Loops,
            construct_key: String::new(),
        };
        assert_eq!(check_answer(&q, &range(4, 6, false), 0).unwrap().verdict, Verdict::Correct);
        assert_eq!(check_answer(&q, &range(0, 50, false), 0).unwrap().verdict, Verdict::TooLoose);
        assert_eq!(check_answer(&q, &range(6, 9, false), 0).unwrap().verdict, Verdict::Incorrect);
        assert!(matches!(
            check_answer(&q, &Answer::YesNo { value: true }, 0),
            Err(InquiryError::SchemaMismatch(_))
        ));
        assert!(check_answer(&q, &range(6, 4, false), 0).is_err());
        let zero = Question { ground_truth: GroundTruth::Bound(IterationBound::Exact(0)), ..q };
        assert_eq!(check_answer(&zero, &range(0, 0, false), 0).unwrap().verdict, Verdict::Correct);
    }

    #[test]
    fn board_cooldown_survives_unrelated_edits() {
        let src = crate::fixtures::ORIGINAL_LOOP;
        let a = Analyses::new(&parse(src).unwrap());
        let mut board = QuestionBoard::new();
        let id = board.refresh(&detect(&a), &a)[0].question_id.clone();
        board.answer(&id, &range(0, 100, false), 1).unwrap();
        assert!(board.get(&id).is_some());

        let edited = format!("# note\n{src}");
        let a2 = Analyses::new(&parse(&edited).unwrap());
        assert!(board.refresh(&detect(&a2), &a2).is_empty());
        assert!(board.get(&id).is_none());

        let changed = src.replace("'n'", "'no'");
        let a3 = Analyses::new(&parse(&changed).unwrap());
        assert_eq!(board.refresh(&detect(&a3), &a3).len(), 1);
    }

    #[test]
    fn question_ids_are_stable_and_distinct() {
        let src = "while False:\n    pass\nwhile True:\n    pass\n";
        let (_, a) = questions(src);
        let (_, b) = questions(src);
        let ids: Vec<_> = a.iter().map(|q| q.question_id.clone()).collect();
        assert_eq!(ids, b.iter().map(|q| q.question_id.clone()).collect::<Vec<_>>());
        assert_eq!(ids.len(), 2);
        assert_ne!(ids[0], ids[1]);
        assert_eq!(ids[0].len(), 16);
    }

    #[test]
    fn client_form_hides_truth() {
        let (_, qs) = questions(crate::fixtures::ORIGINAL_LOOP);
        let json = serde_json::to_string(&qs[0].to_client()).unwrap();
        assert!(!json.contains("truth"));
        assert!(!json.contains("Infinite"));
    }
}
