//! Rule catalog of novice code smells.
//!
//! | rule | finding | category |
//! |------|---------|----------|
//! | S01 | loop condition always true, body cannot leave | loops |
//! | S02 | loop or branch body can never run | conditionals |
//! | S03 | loop body always leaves during the first pass | loops |
//! | S04 | loop condition variables never change in the body | loops |
//! | S05 | `if`/`elif` condition always true or always false | conditionals |
//! | S06 | int compared with a string literal, or the reverse | types |
//! | S07 | variable read before any assignment | variables |
//! | S08 | comparison used as a statement | conditionals |
//! | S09 | `/` result tested with `==` against an int | types |

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::bounds::body_can_exit;
use crate::analysis::intervals::eval;
use crate::analysis::{AbstractEnv, AbstractValue, Analyses, ConditionClass, IterationBound};
use crate::lang::{BinaryOp, CompareOp, Expr, ExprKind, NodeId, SourceSpan, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    S01,
    S02,
    S03,
    S04,
    S05,
    S06,
    S07,
    S08,
    S09,
}

impl RuleId {
    pub const ALL: [RuleId; 9] = [
        RuleId::S01,
        RuleId::S02,
        RuleId::S03,
        RuleId::S04,
        RuleId::S05,
        RuleId::S06,
        RuleId::S07,
        RuleId::S08,
        RuleId::S09,
    ];

    pub fn category(self) -> Category {
        match self {
            RuleId::S01 | RuleId::S03 | RuleId::S04 => Category::Loops,
            RuleId::S02 | RuleId::S05 | RuleId::S08 => Category::Conditionals,
            RuleId::S06 | RuleId::S09 => Category::Types,
            RuleId::S07 => Category::Variables,
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            RuleId::S08 | RuleId::S09 => Severity::Info,
            _ => Severity::QuestionWorthy,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            RuleId::S01 => "loop condition is always true",
            RuleId::S02 => "code that can never run",
            RuleId::S03 => "loop runs at most once",
            RuleId::S04 => "loop variable never updated",
            RuleId::S05 => "condition with a fixed outcome",
            RuleId::S06 => "comparison between different types",
            RuleId::S07 => "variable used before assignment",
            RuleId::S08 => "comparison has no effect",
            RuleId::S09 => "division result compared with an integer",
        }
    }

    pub fn parse(s: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.to_string() == s)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Loops,
    Conditionals,
    Variables,
    Types,
    Io,
}

impl Category {
    pub const ALL: [Category; 5] =
        [Category::Loops, Category::Conditionals, Category::Variables, Category::Types, Category::Io];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Loops => "loops",
            Category::Conditionals => "conditionals",
            Category::Variables => "variables",
            Category::Types => "types",
            Category::Io => "io",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    QuestionWorthy,
    Info,
}

/// Analysis facts a diagnostic rests on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fact", rename_all = "snake_case")]
pub enum Evidence {
    Condition { expr: NodeId, class: ConditionClass },
    Bound { loop_id: NodeId, bound: IterationBound },
    /// The statement that leaves the loop on every first pass.
    Exit { stmt: NodeId },
    /// Condition variables with no definition inside the loop body.
    Unchanged { names: Vec<String> },
    /// A use site and the definitions reaching it.
    Reaching { use_site: NodeId, name: String, defs: Vec<NodeId> },
    /// A comparison whose outcome is fixed by the operand types.
    CrossType { expr: NodeId, outcome: bool, value_type: String, literal_type: String },
    Syntax { pattern: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub rule_id: RuleId,
    pub span: SourceSpan,
    pub node: NodeId,
    pub category: Category,
    pub severity: Severity,
    pub message: String,
    pub evidence: Vec<Evidence>,
}

impl Diagnostic {
    fn new(rule: RuleId, node: NodeId, span: SourceSpan, message: String, evidence: Vec<Evidence>) -> Diagnostic {
        Diagnostic {
            rule_id: rule,
            span,
            node,
            category: rule.category(),
            severity: rule.severity(),
            message,
            evidence,
        }
    }

    pub fn is_question_worthy(&self) -> bool {
        self.severity == Severity::QuestionWorthy
    }

    pub fn bound(&self) -> Option<IterationBound> {
        self.evidence.iter().find_map(|e| match e {
            Evidence::Bound { bound, .. } => Some(*bound),
            _ => None,
        })
    }

    pub fn condition_class(&self) -> Option<ConditionClass> {
        self.evidence.iter().find_map(|e| match e {
            Evidence::Condition { class, .. } => Some(*class),
            _ => None,
        })
    }
}

/// Run every rule. Output is sorted by span start, then rule id.
pub fn detect(analyses: &Analyses) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let program = &analyses.program;
    program.walk(&mut |s| {
        loop_rules(analyses, s, &mut out);
        if let StmtKind::If { arms, .. } = &s.kind {
            for arm in arms {
                if let Some(class) = analyses.conditions.get(&arm.cond.id) {
                    branch_rules(arm.cond.id, arm.cond.span, &arm.header, *class, &mut out);
                }
            }
        }
        if let StmtKind::Expr(e) = &s.kind {
            if matches!(e.kind, ExprKind::Compare { .. } | ExprKind::BoolOp { .. }) {
                out.push(Diagnostic::new(
                    RuleId::S08,
                    s.id,
                    s.span,
                    "This comparison is computed and then thrown away; it does not change anything.".into(),
                    vec![Evidence::Syntax { pattern: "bare comparison statement".into() }],
                ));
            }
        }
        for (e, env) in exprs_with_env(analyses, s) {
            e.walk(&mut |x| expr_rules(x, env, &mut out));
        }
    });
    for site in analyses.reaching.unassigned_uses() {
        out.push(Diagnostic::new(
            RuleId::S07,
            site.node,
            site.span,
            format!("'{}' is read here, but no assignment to it can happen before this point.", site.name),
            vec![Evidence::Reaching { use_site: site.node, name: site.name.clone(), defs: Vec::new() }],
        ));
    }
    out.sort_by_key(|d| (d.span.start_offset, d.rule_id));
    out
}

/// Expressions owned by a reachable statement, each with the abstract state
/// it is evaluated in.
fn exprs_with_env<'a>(analyses: &'a Analyses, s: &'a Stmt) -> Vec<(&'a Expr, &'a AbstractEnv)> {
    match &s.kind {
        StmtKind::If { arms, .. } => arms
            .iter()
            .filter_map(|a| analyses.intervals.arm_env.get(&a.cond.id).map(|env| (&a.cond, env)))
            .collect(),
        StmtKind::ForRange { .. } => match analyses.intervals.loop_entry.get(&s.id) {
            Some(env) => s.own_exprs().into_iter().map(|e| (e, env)).collect(),
            None => Vec::new(),
        },
        _ => match analyses.intervals.before.get(&s.id) {
            Some(env) => s.own_exprs().into_iter().map(|e| (e, env)).collect(),
            None => Vec::new(),
        },
    }
}

fn loop_rules(analyses: &Analyses, s: &Stmt, out: &mut Vec<Diagnostic>) {
    let (body, cond) = match &s.kind {
        StmtKind::While { cond, body, .. } => (body, Some(cond)),
        StmtKind::ForRange { body, .. } => (body, None),
        _ => return,
    };
    let span = s.header_span();
    let bound = analyses.bound(s.id).unwrap_or(IterationBound::Unknown);
    let header_class = cond.and_then(|c| analyses.conditions.get(&c.id)).copied();
    let entry_class = analyses.entry_conditions.get(&s.id).copied();
    let can_exit = body_can_exit(body);

    let s01 = bound == IterationBound::Infinite && header_class == Some(ConditionClass::Tautology) && !can_exit;
    if let (true, Some(c)) = (s01, cond) {
        out.push(Diagnostic::new(
            RuleId::S01,
            s.id,
            span,
            "This loop's condition is true every time it is checked, and nothing in the body leaves the loop.".into(),
            vec![
                Evidence::Condition { expr: c.id, class: ConditionClass::Tautology },
                Evidence::Bound { loop_id: s.id, bound },
            ],
        ));
    }

    let never_runs = bound == IterationBound::Exact(0) || entry_class == Some(ConditionClass::Contradiction);
    if never_runs {
        let mut evidence = Vec::new();
        if let (Some(c), Some(ConditionClass::Contradiction)) = (cond, entry_class) {
            evidence.push(Evidence::Condition { expr: c.id, class: ConditionClass::Contradiction });
        }
        evidence.push(Evidence::Bound { loop_id: s.id, bound: IterationBound::Exact(0) });
        out.push(Diagnostic::new(
            RuleId::S02,
            s.id,
            span,
            "The body of this loop can never run: the loop is finished before it starts.".into(),
            evidence,
        ));
    }

    if let Some(exit) = first_pass_exit(body) {
        let mut evidence = vec![Evidence::Exit { stmt: exit }];
        if bound != IterationBound::Unknown {
            evidence.push(Evidence::Bound { loop_id: s.id, bound });
        }
        out.push(Diagnostic::new(
            RuleId::S03,
            s.id,
            span,
            "Every pass through this loop body reaches a statement that leaves the loop, so it runs at most once.".into(),
            evidence,
        ));
    }

    if let Some(c) = cond {
        if !s01 && !never_runs && !can_exit && !c.contains_call() {
            let names = c.names();
            let inside: BTreeSet<NodeId> = {
                let mut ids = BTreeSet::new();
                for st in body {
                    st.walk(&mut |x| {
                        ids.insert(x.id);
                    });
                }
                ids
            };
            let mut use_sites = Vec::new();
            c.walk(&mut |e| {
                if let ExprKind::Name(_) = e.kind {
                    use_sites.push(e.id);
                }
            });
            let updated = use_sites.iter().any(|u| {
                analyses.reaching.reaching(*u).is_some_and(|defs| defs.iter().any(|d| inside.contains(d)))
            });
            if !names.is_empty() && !updated {
                out.push(Diagnostic::new(
                    RuleId::S04,
                    s.id,
                    span,
                    format!(
                        "Nothing in this loop changes {}, so once the loop starts its condition never changes.",
                        names.iter().map(|n| format!("'{n}'")).collect::<Vec<_>>().join(" or ")
                    ),
                    vec![
                        Evidence::Unchanged { names: names.iter().map(|n| n.to_string()).collect() },
                        Evidence::Bound { loop_id: s.id, bound },
                    ],
                ));
            }
        }
    }
}

/// The statement that leaves the loop if it sits at the top level of the
/// body with no `continue` for this loop before it.
fn first_pass_exit(body: &[Stmt]) -> Option<NodeId> {
    fn has_continue(s: &Stmt) -> bool {
        match &s.kind {
            StmtKind::Continue => true,
            StmtKind::While { .. } | StmtKind::ForRange { .. } => false,
            _ => s.bodies().iter().any(|b| b.iter().any(has_continue)),
        }
    }
    for s in body {
        match s.kind {
            StmtKind::Break | StmtKind::Return(_) => return Some(s.id),
            _ if has_continue(s) => return None,
            _ => {}
        }
    }
    None
}

fn branch_rules(
    cond: NodeId,
    cond_span: SourceSpan,
    _header: &SourceSpan,
    class: ConditionClass,
    out: &mut Vec<Diagnostic>,
) {
    match class {
        ConditionClass::Contradiction => {
            out.push(Diagnostic::new(
                RuleId::S02,
                cond,
                cond_span,
                "This condition is false every time it is checked, so the code under it never runs.".into(),
                vec![Evidence::Condition { expr: cond, class }],
            ));
            out.push(Diagnostic::new(
                RuleId::S05,
                cond,
                cond_span,
                "This condition always has the same outcome: it is never true.".into(),
                vec![Evidence::Condition { expr: cond, class }],
            ));
        }
        ConditionClass::Tautology => out.push(Diagnostic::new(
            RuleId::S05,
            cond,
            cond_span,
            "This condition always has the same outcome: it is always true.".into(),
            vec![Evidence::Condition { expr: cond, class }],
        )),
        _ => {}
    }
}

fn type_name(v: &AbstractValue) -> Option<&'static str> {
    match v {
        AbstractValue::IntRange(_) => Some("int"),
        AbstractValue::StrSet(_) => Some("str"),
        _ => None,
    }
}

fn literal_type(e: &Expr) -> Option<&'static str> {
    match &e.kind {
        ExprKind::Int(_) => Some("int"),
        ExprKind::Unary { operand, .. } if matches!(operand.kind, ExprKind::Int(_)) => Some("int"),
        ExprKind::Str(_) => Some("str"),
        _ => None,
    }
}

fn expr_rules(e: &Expr, env: &AbstractEnv, out: &mut Vec<Diagnostic>) {
    let ExprKind::Compare { op, lhs, rhs } = &e.kind else { return };
    if matches!(op, CompareOp::Eq | CompareOp::NotEq) {
        let pair = match (literal_type(lhs), literal_type(rhs)) {
            (None, Some(t)) => Some((lhs, t)),
            (Some(t), None) => Some((rhs, t)),
            _ => None,
        };
        if let Some((other, lit_ty)) = pair {
            if let Some(val_ty) = type_name(&eval(other, env)) {
                if val_ty != lit_ty {
                    let outcome = *op == CompareOp::NotEq;
                    out.push(Diagnostic::new(
                        RuleId::S06,
                        e.id,
                        e.span,
                        format!(
                            "This compares a{} {val_ty} with a{} {lit_ty}, which are never equal, so the result is always {}.",
                            if val_ty == "int" { "n" } else { "" },
                            if lit_ty == "int" { "n" } else { "" },
                            if outcome { "True" } else { "False" }
                        ),
                        vec![Evidence::CrossType {
                            expr: e.id,
                            outcome,
                            value_type: val_ty.into(),
                            literal_type: lit_ty.into(),
                        }],
                    ));
                }
            }
        }
    }
    if *op == CompareOp::Eq {
        let is_div = |x: &Expr| matches!(x.kind, ExprKind::Binary { op: BinaryOp::Div, .. });
        if (is_div(lhs) && literal_type(rhs) == Some("int")) || (is_div(rhs) && literal_type(lhs) == Some("int")) {
            out.push(Diagnostic::new(
                RuleId::S09,
                e.id,
                e.span,
                "'/' always gives a float; comparing it with == to a whole number is fragile. '//' gives a whole number.".into(),
                vec![Evidence::Syntax { pattern: "division compared with int literal".into() }],
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn rules(src: &str) -> Vec<RuleId> {
        detect(&Analyses::new(&parse(src).unwrap())).into_iter().map(|d| d.rule_id).collect()
    }

    #[test]
    fn yes_no_loop_is_exactly_s01() {
        let p = parse(crate::fixtures::ORIGINAL_LOOP).unwrap();
        let d = detect(&Analyses::new(&p));
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].rule_id, RuleId::S01);
        assert_eq!(d[0].node, p.statements[1].id);
        assert_eq!(d[0].span.start_line, 2);
        assert_eq!(d[0].span.end_line, 2);
    }

    #[test]
    fn clean_program() {
        assert!(rules("x = 1").is_empty());
    }

    #[test]
    fn unchanged_loop_variable() {
        assert_eq!(rules("x = int(input())\nwhile x > 0:\n    print(x)\n"), vec![RuleId::S04]);
    }

    #[test]
    fn each_rule_triggers() {
        assert_eq!(rules("while False:\n    print(1)\n"), vec![RuleId::S02]);
        assert_eq!(rules("n = int(input())\nwhile n > 0:\n    n -= 1\n    break\n"), vec![RuleId::S03]);
        assert_eq!(rules("n = int(input())\nif n > 5 or n <= 5:\n    print(n)\n"), vec![RuleId::S05]);
        assert_eq!(rules("x = int(input())\nif x == '5':\n    print(x)\n"), vec![RuleId::S02, RuleId::S05, RuleId::S06]);
        assert_eq!(rules("print(y)\n"), vec![RuleId::S07]);
        assert_eq!(rules("x = 1\nx == 2\n"), vec![RuleId::S08]);
        assert_eq!(rules("n = int(input())\nif n / 2 == 3:\n    print(n)\n"), vec![RuleId::S09]);
    }

    #[test]
    fn near_misses_stay_quiet() {
        assert!(rules("r = input()\nwhile r != 'y' and r != 'n':\n    r = input()\n").is_empty());
        assert!(rules("while True:\n    r = input()\n    if r == 'q':\n        break\n").is_empty());
        assert!(rules("for i in range(3):\n    if i == 1:\n        break\n").is_empty());
        assert!(rules("x = int(input())\nwhile x > 0:\n    x -= 1\n").is_empty());
        assert!(rules("x = input()\nif x == '5':\n    print(x)\n").is_empty());
        assert!(rules("y = 2\nprint(y)\n").is_empty());
        assert!(rules("x = 1\nb = x == 2\n").is_empty());
        assert!(rules("n = int(input())\nif n // 2 == 3:\n    print(n)\n").is_empty());
    }

    #[test]
    fn output_is_sorted_and_deterministic() {
        let src = "print(a)\nwhile False:\n    pass\nx = 1\nx == 1\n";
        let a = Analyses::new(&parse(src).unwrap());
        let d1 = detect(&a);
        assert_eq!(d1, detect(&a));
        let keys: Vec<_> = d1.iter().map(|d| (d.span.start_offset, d.rule_id)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
