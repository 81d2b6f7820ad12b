//! Reminder comments and assertions inserted into the learner's code.
//!
//! Every inserted line ends with a marker `  # [inq:xxxxxxxx]` so the
//! lines can be hidden, shown or removed without touching anything else.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{AbstractValue, Analyses, Bound, IterationBound};
use crate::explain::is_or_of_not_equals;
use crate::inquiry::subtree_text;
use crate::lang::{parse, tokenize, NodeId, ParseError, Program, Stmt, StmtKind, TokenKind};
use crate::smells::{Diagnostic, Evidence, RuleId};

pub const MAX_REMEDIES_PER_DIAGNOSTIC: usize = 2;
const MARKER_PREFIX: &str = "  # [inq:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemedyKind {
    Assertion,
    Comment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    Before,
    After,
    LoopExit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Remedy {
    pub kind: RemedyKind,
    pub anchor: NodeId,
    pub placement: Placement,
    /// The line to insert, without indentation or marker.
    pub text: String,
    pub marker_id: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RemedyError {
    #[error("the code changed: node {0} no longer exists")]
    StaleAnchor(NodeId),
    #[error("source does not parse: {}", .0.first().map(|e| e.to_string()).unwrap_or_default())]
    Parse(Vec<ParseError>),
}

fn marker_hash(seed: &str) -> String {
    hex::encode(&Sha256::digest(seed.as_bytes())[..4])
}

fn make(program: &Program, kind: RemedyKind, anchor: NodeId, placement: Placement, text: String, salt: &str) -> Remedy {
    let path = program.node_path(anchor).unwrap_or_default();
    let subtree = subtree_text(program, anchor).unwrap_or_default();
    let seed = format!("{salt}|{path:?}|{subtree}|{kind:?}|{placement:?}|{text}");
    Remedy { kind, anchor, placement, text, marker_id: marker_hash(&seed) }
}

/// The statement whose own expressions include `expr`.
fn owner_stmt(program: &Program, expr: NodeId) -> Option<&Stmt> {
    let mut found = None;
    program.walk(&mut |s| {
        for e in s.own_exprs() {
            e.walk(&mut |x| {
                if x.id == expr {
                    found = Some(s);
                }
            });
        }
    });
    found
}

/// First statement of the `if`/`elif` arm whose condition is `cond`.
fn arm_body_start(program: &Program, cond: NodeId) -> Option<NodeId> {
    let mut found = None;
    program.walk(&mut |s| {
        if let StmtKind::If { arms, .. } = &s.kind {
            for a in arms {
                if a.cond.id == cond {
                    found = a.body.first().map(|b| b.id);
                }
            }
        }
    });
    found
}

/// Loop-exit assertion bounding the loop's controlling variable, plus a
/// comment. Empty unless the bound is finite and the exit interval is
/// finite on both ends.
pub fn loop_assertion(analyses: &Analyses, loop_id: NodeId) -> Vec<Remedy> {
    let program = &analyses.program;
    let Some(stmt) = program.find_stmt(loop_id) else { return Vec::new() };
    let bound = analyses.bound(loop_id).unwrap_or(IterationBound::Unknown);
    let min_iters = match bound {
        IterationBound::Exact(n) => n,
        IterationBound::Range(a, _) => a,
        _ => return Vec::new(),
    };
    let var = match &stmt.kind {
        StmtKind::ForRange { var, .. } if min_iters >= 1 => var.clone(),
        StmtKind::While { cond, body, .. } => {
            let mut written = BTreeSet::new();
            for s in body {
                s.walk(&mut |x| match &x.kind {
                    StmtKind::Assign { target, .. } | StmtKind::AugAssign { target, .. } => {
                        written.insert(target.clone());
                    }
                    StmtKind::ForRange { var, .. } => {
                        written.insert(var.clone());
                    }
                    _ => {}
                });
            }
            let mut names: Vec<String> = cond.names().into_iter().map(String::from).filter(|n| written.contains(n)).collect();
            names.dedup();
            if names.len() != 1 {
                return Vec::new();
            }
            names.remove(0)
        }
        _ => return Vec::new(),
    };
    let Some(AbstractValue::IntRange(iv)) = analyses.intervals.exit_value(loop_id, &var) else { return Vec::new() };
    let (Bound::Finite(a), Bound::Finite(b)) = (iv.lo, iv.hi) else { return Vec::new() };
    let comment = if a == b {
        format!("# After this loop, {var} is always {a}")
    } else {
        format!("# After this loop, {var} is between {a} and {b}")
    };
    vec![
        make(program, RemedyKind::Comment, loop_id, Placement::LoopExit, comment, "exit-note"),
        make(
            program,
            RemedyKind::Assertion,
            loop_id,
            Placement::LoopExit,
            format!("assert {a} <= {var} and {var} <= {b}"),
            "exit-assert",
        ),
    ]
}

/// Remedies for one diagnostic, at most two.
pub fn synthesize(diagnostic: &Diagnostic, analyses: &Analyses) -> Vec<Remedy> {
    let program = &analyses.program;
    let d = diagnostic;
    let comment = |anchor: NodeId, text: String| make(program, RemedyKind::Comment, anchor, Placement::Before, text, &d.rule_id.to_string());
    let mut out = match d.rule_id {
        RuleId::S01 => {
            let text = match program.find_stmt(d.node).map(|s| &s.kind) {
                Some(StmtKind::While { cond, .. }) if is_or_of_not_equals(cond) => {
                    "# This loop cannot exit: 'or' of two != tests is always true".to_string()
                }
                _ => "# This loop cannot exit: its condition is always true".to_string(),
            };
            vec![comment(d.node, text)]
        }
        RuleId::S04 => {
            let names = d
                .evidence
                .iter()
                .find_map(|e| match e {
                    Evidence::Unchanged { names } => Some(names.join(", ")),
                    _ => None,
                })
                .unwrap_or_default();
            vec![comment(d.node, format!("# Once started this loop cannot exit: nothing in it changes {names}"))]
        }
        RuleId::S02 if program.find_stmt(d.node).is_some_and(Stmt::is_loop) => {
            vec![comment(d.node, "# The body of this loop never runs".into())]
        }
        RuleId::S02 | RuleId::S05 => {
            let Some(first) = arm_body_start(program, d.node) else { return Vec::new() };
            let text = match d.condition_class() {
                Some(crate::analysis::ConditionClass::Tautology) => "# The condition above is always true",
                _ => "# This code never runs: the condition above is always false",
            };
            vec![comment(first, text.into())]
        }
        RuleId::S03 => {
            let mut v = vec![comment(d.node, "# This loop runs its body at most once".into())];
            v.extend(loop_assertion(analyses, d.node).into_iter().filter(|r| r.kind == RemedyKind::Assertion));
            v
        }
        RuleId::S06 => {
            let outcome = d.evidence.iter().find_map(|e| match e {
                Evidence::CrossType { outcome, value_type, literal_type, .. } => {
                    Some(format!("# Comparing {value_type} with {literal_type} is always {}", if *outcome { "True" } else { "False" }))
                }
                _ => None,
            });
            match (outcome, owner_stmt(program, d.node)) {
                (Some(text), Some(s)) => vec![comment(s.id, text)],
                _ => Vec::new(),
            }
        }
        RuleId::S07 => {
            let name = d.evidence.iter().find_map(|e| match e {
                Evidence::Reaching { name, .. } => Some(name.clone()),
                _ => None,
            });
            let anchor = program.find_stmt(d.node).map(|s| s.id).or_else(|| owner_stmt(program, d.node).map(|s| s.id));
            match (name, anchor) {
                (Some(n), Some(a)) => vec![comment(a, format!("# '{n}' has no value yet when this line runs"))],
                _ => Vec::new(),
            }
        }
        RuleId::S08 | RuleId::S09 => Vec::new(),
    };
    out.truncate(MAX_REMEDIES_PER_DIAGNOSTIC);
    out
}

/// Byte offset where the marker starts, if this line (without its line
/// ending) carries one as a trailing comment.
fn marker_at(line: &str) -> Option<usize> {
    let start = line.len().checked_sub(MARKER_PREFIX.len() + 9)?;
    let tail = line.get(start..)?;
    let hex = tail.strip_prefix(MARKER_PREFIX)?.strip_suffix(']')?;
    (hex.len() == 8 && hex.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))).then_some(start)
}

/// Lines of `source` with their line endings kept.
fn split_lines(source: &str) -> Vec<&str> {
    source.split_inclusive('\n').collect()
}

fn strip_eol(line: &str) -> &str {
    line.strip_suffix('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).unwrap_or(line)
}

/// Zero-based indices of lines whose marker lies inside a comment token.
fn marked_lines(source: &str) -> BTreeSet<usize> {
    let (tokens, _) = tokenize(source);
    let comment_starts: Vec<(u32, usize)> = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Comment)
        .map(|t| (t.span.start_line, t.span.start_offset))
        .collect();
    let mut out = BTreeSet::new();
    let mut offset = 0;
    for (i, line) in split_lines(source).into_iter().enumerate() {
        if let Some(pos) = marker_at(strip_eol(line)) {
            let abs = offset + pos + 2;
            if comment_starts.iter().any(|(l, s)| *l as usize == i + 1 && *s <= abs) {
                out.insert(i);
            }
        }
        offset += line.len();
    }
    out
}

/// Marker ids present in a document.
pub fn marker_ids(source: &str) -> BTreeSet<String> {
    let lines = split_lines(source);
    marked_lines(source)
        .into_iter()
        .filter_map(|i| {
            let l = strip_eol(lines[i]);
            marker_at(l).map(|p| l[p + MARKER_PREFIX.len()..l.len() - 1].to_string())
        })
        .collect()
}

/// (before-placement, reversed indentation, request order)
type InsertKey = (bool, std::cmp::Reverse<usize>, usize);

/// Insert remedies. Marker ids already used in `source`, or repeated in
/// `remedies`, are replaced by fresh ones.
pub fn apply(source: &str, remedies: &[Remedy]) -> Result<String, RemedyError> {
    if remedies.is_empty() {
        return Ok(source.to_string());
    }
    let program = parse(source).map_err(RemedyError::Parse)?;
    let eol = if source.contains("\r\n") { "\r\n" } else { "\n" };
    let lines = split_lines(source);
    let mut used = marker_ids(source);

    // (insert before this zero-based line index, sort key, text). Lines
    // closing a block go first, innermost first, then lines opening one.
    let mut inserts: Vec<(usize, InsertKey, String)> = Vec::new();
    for (order, r) in remedies.iter().enumerate() {
        let stmt = program.find_stmt(r.anchor).ok_or(RemedyError::StaleAnchor(r.anchor))?;
        let first_line = stmt.span.start_line as usize - 1;
        let indent: String = lines[first_line].chars().take_while(|c| *c == ' ' || *c == '\t').collect();
        let at = match r.placement {
            Placement::Before => first_line,
            Placement::After | Placement::LoopExit => stmt.span.end_line as usize,
        };
        let mut id = r.marker_id.clone();
        let mut n = 0;
        while !used.insert(id.clone()) {
            n += 1;
            id = marker_hash(&format!("{}|{n}", r.marker_id));
        }
        let key = (r.placement == Placement::Before, std::cmp::Reverse(indent.len()), order);
        inserts.push((at, key, format!("{indent}{}{MARKER_PREFIX}{id}]", r.text)));
    }
    inserts.sort_by_key(|(at, key, _)| (*at, *key));

    let mut out = String::with_capacity(source.len() + inserts.len() * 64);
    let mut pending = inserts.into_iter().peekable();
    for (i, line) in lines.iter().enumerate() {
        while let Some((_, _, text)) = pending.next_if(|(at, _, _)| *at == i) {
            out.push_str(&text);
            out.push_str(eol);
        }
        out.push_str(line);
    }
    let tail: Vec<String> = pending.map(|(_, _, t)| t).collect();
    if !tail.is_empty() {
        let unterminated = !source.is_empty() && !source.ends_with('\n');
        if unterminated {
            out.push_str(eol);
        }
        for (k, t) in tail.iter().enumerate() {
            out.push_str(t);
            if !unterminated || k + 1 < tail.len() {
                out.push_str(eol);
            }
        }
    }
    Ok(out)
}

/// `show = false` removes every marked line; `show = true` returns the
/// text unchanged.
pub fn strip_markers(source: &str, show: bool) -> String {
    if show {
        return source.to_string();
    }
    let marked = marked_lines(source);
    if marked.is_empty() {
        return source.to_string();
    }
    let lines = split_lines(source);
    let mut out = String::with_capacity(source.len());
    for (i, line) in lines.iter().enumerate() {
        if !marked.contains(&i) {
            out.push_str(line);
        }
    }
    // A removed final line without a terminator leaves the previous line's
    // ending behind.
    let last = lines.len() - 1;
    if marked.contains(&last) && !lines[last].ends_with('\n') {
        let kept_last = (0..last).rev().find(|i| !marked.contains(i));
        if kept_last.is_some() {
            if out.ends_with("\r\n") {
                out.truncate(out.len() - 2);
            } else if out.ends_with('\n') {
                out.truncate(out.len() - 1);
            }
        }
    }
    out
}
