//! Explanations of actual behavior, with verified input experiments.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::analysis::IterationBound;
use crate::inquiry::{AnswerJudgment, GroundTruth, Question, Verdict};
use crate::interp::{self, ExecConfig, ExecResult, ExecStatus, RuntimeErrorKind, DEFAULT_STEP_BUDGET};
use crate::lang::pretty::expr_to_string;
use crate::lang::{BoolOpKind, CompareOp, Expr, ExprKind, NodeId, Program, StmtKind};
use crate::smells::{Category, Diagnostic, Evidence, RuleId};

/// Longest input queue tried.
pub const MAX_QUEUE_LEN: usize = 3;
/// Pool entries beyond this are not used in the search.
pub const MAX_POOL: usize = 10;
/// Upper limit on interpreter runs per search.
pub const MAX_RUNS: usize = 400;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Observation {
    NoTermination { budget: u64 },
    Output { text: String },
    Error { kind: RuntimeErrorKind },
}

impl Observation {
    /// What a finished run shows, if it is one of the predictable outcomes.
    pub fn of(result: &ExecResult, budget: u64) -> Option<Observation> {
        match &result.status {
            ExecStatus::BudgetExhausted => Some(Observation::NoTermination { budget }),
            ExecStatus::Completed => Some(Observation::Output { text: result.stdout.clone() }),
            ExecStatus::RuntimeError { kind, .. } => Some(Observation::Error { kind: *kind }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Experiment {
    pub input_queue: Vec<String>,
    /// The queue restarts from its first line when used up.
    pub cycle_inputs: bool,
    pub budget: u64,
    pub prediction: Observation,
}

impl Experiment {
    pub fn config(&self) -> ExecConfig {
        let mut c = ExecConfig::with_inputs(self.input_queue.clone()).budget(self.budget);
        c.cycle_inputs = self.cycle_inputs;
        c
    }

    /// Re-run the experiment and compare with its prediction.
    pub fn verify(&self, program: &Program) -> bool {
        let r = interp::run(program, &self.config());
        Observation::of(&r, self.budget).as_ref() == Some(&self.prediction)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub summary: String,
    pub cause: String,
    pub experiment: Option<Experiment>,
    /// Topic key into the help pack.
    pub reference: Category,
}

/// Bundled help text for a topic.
pub fn help_text(topic: Category) -> &'static str {
    match topic {
        Category::Loops => include_str!("../help/loops.txt"),
        Category::Conditionals => include_str!("../help/conditionals.txt"),
        Category::Variables => include_str!("../help/variables.txt"),
        Category::Types => include_str!("../help/types.txt"),
        Category::Io => include_str!("../help/io.txt"),
    }
}

pub fn explain(question: &Question, judgment: &AnswerJudgment, program: &Program) -> Explanation {
    let d = &question.diagnostic;
    let (summary, cause) = templates(d, program);
    if judgment.verdict == Verdict::Correct {
        return Explanation {
            summary: format!("Correct. {}", confirmation(&judgment.truth)),
            cause,
            experiment: None,
            reference: d.category,
        };
    }
    let experiment = find_surprise_input(program, d).map(|(input_queue, prediction)| Experiment {
        input_queue,
        cycle_inputs: true,
        budget: DEFAULT_STEP_BUDGET,
        prediction,
    });
    Explanation { summary, cause, experiment, reference: d.category }
}

fn confirmation(truth: &GroundTruth) -> String {
    match truth {
        GroundTruth::Bound(IterationBound::Infinite) => "The loop never stops.".into(),
        GroundTruth::Bound(b) => format!("The body runs {b} times."),
        GroundTruth::YesNo(true) => "The answer is yes.".into(),
        GroundTruth::YesNo(false) => "The answer is no.".into(),
        GroundTruth::Choice(_) => "That is what happens.".into(),
    }
}

fn loop_cond(program: &Program, node: NodeId) -> Option<&Expr> {
    match &program.find_stmt(node)?.kind {
        StmtKind::While { cond, .. } => Some(cond),
        _ => None,
    }
}

/// `v != a or v != b` over one variable and distinct literals.
pub fn is_or_of_not_equals(e: &Expr) -> bool {
    let ExprKind::BoolOp { op: BoolOpKind::Or, operands } = &e.kind else { return false };
    let mut subject = None;
    let mut literals = BTreeSet::new();
    for o in operands {
        let ExprKind::Compare { op: CompareOp::NotEq, lhs, rhs } = &o.kind else { return false };
        let (name, lit) = match (&lhs.kind, &rhs.kind) {
            (ExprKind::Name(n), l) | (l, ExprKind::Name(n)) => (n, l),
            _ => return false,
        };
        let lit = match lit {
            ExprKind::Str(s) => format!("s{s}"),
            ExprKind::Int(i) => format!("i{i}"),
            _ => return false,
        };
        if subject.get_or_insert(name) != &name {
            return false;
        }
        literals.insert(lit);
    }
    operands.len() >= 2 && literals.len() == operands.len()
}

fn templates(d: &Diagnostic, program: &Program) -> (String, String) {
    let line = d.span.start_line;
    let cond_text = |id: NodeId| {
        loop_cond(program, id)
            .or_else(|| program.find_expr(id))
            .map(expr_to_string)
            .unwrap_or_default()
    };
    match d.rule_id {
        RuleId::S01 => {
            let cond = loop_cond(program, d.node);
            let cause = match cond {
                Some(c) if is_or_of_not_equals(c) => format!(
                    "`{}` uses 'or' of two != tests, which is always true: every value differs from at least one of them. Use 'and' to keep looping only while the value matches neither.",
                    expr_to_string(c)
                ),
                Some(c) => format!(
                    "`{}` is true for every value its variables can have here, and nothing in the body leaves the loop.",
                    expr_to_string(c)
                ),
                None => "The loop condition never becomes false.".into(),
            };
            ("This loop can never exit: the condition is true for every possible input.".into(), cause)
        }
        RuleId::S04 => {
            let names = d
                .evidence
                .iter()
                .find_map(|e| match e {
                    Evidence::Unchanged { names } => Some(names.join("', '")),
                    _ => None,
                })
                .unwrap_or_default();
            (
                format!("Once this loop starts it never stops: nothing in its body changes '{names}'."),
                format!(
                    "The condition `{}` only reads '{names}', and the body never assigns a new value to it, so the condition stays true.",
                    cond_text(d.node)
                ),
            )
        }
        RuleId::S02 => match program.find_stmt(d.node).map(|s| &s.kind) {
            Some(StmtKind::While { cond, .. }) => (
                "The body of this loop never runs.".into(),
                format!("The condition `{}` is already false when the loop is first reached.", expr_to_string(cond)),
            ),
            Some(StmtKind::ForRange { .. }) => (
                "The body of this loop never runs.".into(),
                "The range produces no numbers: with a positive step, start must be below stop.".into(),
            ),
            _ => (
                "The code under this condition never runs.".into(),
                format!("The condition `{}` is false for every possible value.", cond_text(d.node)),
            ),
        },
        RuleId::S05 => match d.condition_class() {
            Some(crate::analysis::ConditionClass::Tautology) => (
                "This condition is always true, so its body always runs and any elif or else after it never does.".into(),
                format!("The condition `{}` is true for every possible value.", cond_text(d.node)),
            ),
            _ => (
                "This condition is never true, so its body never runs.".into(),
                format!("The condition `{}` is false for every possible value.", cond_text(d.node)),
            ),
        },
        RuleId::S03 => {
            let exit_line = d
                .evidence
                .iter()
                .find_map(|e| match e {
                    Evidence::Exit { stmt } => program.find_stmt(*stmt).map(|s| s.span.start_line),
                    _ => None,
                })
                .unwrap_or(line);
            (
                "This loop runs its body at most once.".into(),
                format!(
                    "Line {exit_line} leaves the loop on the very first pass every time, so the loop never goes back to its condition."
                ),
            )
        }
        RuleId::S06 => {
            let (outcome, value_type, literal_type) = d
                .evidence
                .iter()
                .find_map(|e| match e {
                    Evidence::CrossType { outcome, value_type, literal_type, .. } => {
                        Some((*outcome, value_type.clone(), literal_type.clone()))
                    }
                    _ => None,
                })
                .unwrap_or((false, "int".into(), "str".into()));
            (
                format!(
                    "`{}` is always {}.",
                    cond_text(d.node),
                    if outcome { "True" } else { "False" }
                ),
                format!(
                    "It compares a value of type {value_type} with a {literal_type} literal. Values of different types are never equal; convert one side with int(...) or str(...)."
                ),
            )
        }
        RuleId::S07 => {
            let name = d
                .evidence
                .iter()
                .find_map(|e| match e {
                    Evidence::Reaching { name, .. } => Some(name.clone()),
                    _ => None,
                })
                .unwrap_or_default();
            (
                format!("Reading '{name}' on line {line} stops the program with an error."),
                format!(
                    "No assignment to '{name}' can run before this line. A variable exists only once a value has been assigned to it."
                ),
            )
        }
        RuleId::S08 => (
            "This line computes True or False and then throws the result away.".into(),
            "A comparison on its own line changes nothing. To store a value use a single '='.".into(),
        ),
        RuleId::S09 => (
            "The '/' here produces a float, not an int.".into(),
            "'/' always gives a float, so exact == tests against whole numbers are fragile. '//' gives a whole number.".into(),
        ),
    }
}

fn letter_not_mentioned(literals: &[String]) -> String {
    const ORDER: &str = "xzqjkwvyabcdefghilmnoprstu";
    let used: BTreeSet<char> = literals.iter().flat_map(|s| s.to_lowercase().chars().collect::<Vec<_>>()).collect();
    ORDER.chars().find(|c| !used.contains(c)).unwrap_or('x').to_string()
}

fn string_literals(program: &Program) -> (Vec<String>, Vec<String>) {
    let mut excluded = BTreeSet::new();
    let mut all = Vec::new();
    program.walk_exprs(&mut |e| match &e.kind {
        ExprKind::Call { callee, args } if callee == "input" || callee == "print" => {
            for a in args {
                if let ExprKind::Str(_) = a.kind {
                    excluded.insert(a.id);
                }
            }
        }
        ExprKind::Str(s) => all.push((e.id, s.clone())),
        _ => {}
    });
    let every = all.iter().map(|(_, s)| s.clone()).collect();
    let kept = all.into_iter().filter(|(id, _)| !excluded.contains(id)).map(|(_, s)| s).collect();
    (kept, every)
}

/// Candidate input lines, in search order.
pub fn candidate_pool(program: &Program) -> Vec<String> {
    let (literals, every) = string_literals(program);
    let mut pool: Vec<String> = vec![letter_not_mentioned(&every)];
    pool.extend(literals.iter().cloned());
    for s in &literals {
        let mut cap = s.to_lowercase();
        if let Some(first) = cap.get(0..1) {
            cap = first.to_uppercase() + &cap[1..];
        }
        pool.extend([s.to_uppercase(), s.to_lowercase(), cap]);
    }
    pool.extend(["", "0", "1", "-1"].map(String::from));
    pool.push("abcdefghijklmnopqrst".into());
    let mut seen = BTreeSet::new();
    pool.retain(|s| seen.insert(s.clone()));
    pool.truncate(MAX_POOL);
    pool
}

/// Input queues over the pool: shorter first, then in pool-index order.
fn queues(pool: &[String]) -> impl Iterator<Item = Vec<String>> + '_ {
    (1..=MAX_QUEUE_LEN).flat_map(move |len| {
        let total = pool.len().pow(len as u32);
        (0..total).map(move |mut k| {
            let mut idx = vec![0; len];
            for slot in idx.iter_mut().rev() {
                *slot = k % pool.len();
                k /= pool.len();
            }
            idx.into_iter().map(|i| pool[i].clone()).collect()
        })
    })
}

fn exhibits(d: &Diagnostic, r: &ExecResult, program: &Program) -> bool {
    match d.rule_id {
        RuleId::S01 | RuleId::S04 => {
            r.status == ExecStatus::BudgetExhausted
                && r.loop_stats.get(&d.node).is_some_and(|s| s.in_progress.is_some())
        }
        RuleId::S07 => matches!(
            r.status,
            ExecStatus::RuntimeError { kind: RuntimeErrorKind::UnknownName, span, .. } if d.span.contains(&span) || span.contains(&d.span)
        ),
        RuleId::S02 | RuleId::S05 | RuleId::S03 | RuleId::S06 | RuleId::S08 | RuleId::S09 => {
            if r.status != ExecStatus::Completed {
                return false;
            }
            match program.find_stmt(d.node) {
                Some(s) if s.is_loop() => {
                    let stats = r.loop_stats.get(&d.node).copied().unwrap_or_default();
                    match d.rule_id {
                        RuleId::S03 => stats.entries > 0 && stats.max_per_entry.is_some_and(|m| m <= 1),
                        _ => stats.entries > 0 && stats.total == 0,
                    }
                }
                _ => {
                    r.branch_counts.get(&d.node).is_some_and(|b| b.evaluated > 0)
                        || r.compare_counts.get(&d.node).is_some_and(|(t, f)| t + f > 0)
                        || d.rule_id == RuleId::S08
                        || d.rule_id == RuleId::S09
                }
            }
        }
    }
}

/// First input queue whose run shows the diagnosed behavior, with what it
/// shows. Every returned observation has been seen in an actual run.
pub fn find_surprise_input(program: &Program, diagnostic: &Diagnostic) -> Option<(Vec<String>, Observation)> {
    if !program.uses_input() {
        return None;
    }
    let pool = candidate_pool(program);
    for queue in queues(&pool).take(MAX_RUNS) {
        let config = ExecConfig::with_inputs(queue.clone()).cycling();
        let r = interp::run(program, &config);
        if exhibits(diagnostic, &r, program) {
            if let Some(obs) = Observation::of(&r, config.step_budget) {
                return Some((queue, obs));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Analyses;
    use crate::inquiry::{check_answer, generate_questions, Answer};
    use crate::lang::parse;
    use crate::smells::detect;

    fn first_diag(src: &str) -> (Program, Diagnostic) {
        let p = parse(src).unwrap();
        let d = detect(&Analyses::new(&p)).into_iter().next().expect("a diagnostic");
        (p, d)
    }

    #[test]
    fn yes_no_loop_explanation() {
        let p = parse(crate::fixtures::ORIGINAL_LOOP).unwrap();
        let a = Analyses::new(&p);
        let q = generate_questions(&detect(&a), &a).remove(0);
        let j = check_answer(&q, &Answer::Range { lo: 0, hi: 100, infinite: false }, 0).unwrap();
        let e = explain(&q, &j, &p);
        assert_eq!(e.summary, "This loop can never exit: the condition is true for every possible input.");
        assert!(e.cause.contains("'or' of two != tests"));
        let x = e.experiment.unwrap();
        assert_eq!(x.input_queue, vec!["x".to_string()]);
        assert_eq!(x.prediction, Observation::NoTermination { budget: DEFAULT_STEP_BUDGET });
        assert!(x.verify(&p));
        let short = Experiment { budget: 10_000, prediction: Observation::NoTermination { budget: 10_000 }, ..x };
        assert!(short.verify(&p));
    }

    #[test]
    fn closed_program_has_no_experiment() {
        let (p, d) = first_diag("while False:\n    print(1)\n");
        assert_eq!(find_surprise_input(&p, &d), None);
        let a = Analyses::new(&p);
        let q = generate_questions(&detect(&a), &a).remove(0);
        let j = check_answer(&q, &Answer::YesNo { value: true }, 0).unwrap();
        let e = explain(&q, &j, &p);
        assert!(e.summary.contains("never runs"));
        assert!(e.experiment.is_none());
    }

    #[test]
    fn cross_type_experiment_uses_the_literal() {
        let (p, d) = first_diag("x = int(input())\nif x == '5':\n    print('five')\nprint('done')\n");
        let (q, obs) = find_surprise_input(&p, &d).unwrap();
        assert_eq!(q, vec!["5".to_string()]);
        assert_eq!(obs, Observation::Output { text: "done\n".into() });
    }

    #[test]
    fn guarded_unassigned_read() {
        let (p, d) = first_diag("r = input()\nif r == 'go':\n    print(y)\n");
        assert_eq!(d.rule_id, RuleId::S07);
        let (q, obs) = find_surprise_input(&p, &d).unwrap();
        assert_eq!(q, vec!["go".to_string()]);
        assert_eq!(obs, Observation::Error { kind: RuntimeErrorKind::UnknownName });
    }

    #[test]
    fn pool_order() {
        let p = parse("a = input('name?')\nif a == 'Yes':\n    print('hi')\n").unwrap();
        let pool = candidate_pool(&p);
        assert_eq!(&pool[..4], &["x", "Yes", "YES", "yes"]);
        assert!(pool.contains(&String::new()));
    }

    #[test]
    fn every_rule_has_text() {
        let p = parse("x = 1\n").unwrap();
        for rule in RuleId::ALL {
            let d = Diagnostic {
                rule_id: rule,
                span: Default::default(),
                node: NodeId(0),
                category: rule.category(),
                severity: rule.severity(),
                message: String::new(),
                evidence: Vec::new(),
            };
            let (s, c) = templates(&d, &p);
            assert!(!s.is_empty() && !c.is_empty(), "{rule}");
        }
        for c in Category::ALL {
            assert!(!help_text(c).trim().is_empty());
        }
    }
}
