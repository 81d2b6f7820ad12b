//! Loop iteration bounds.
//!
//! Tried in order: constant `range()` bounds, a closed form for a single
//! induction variable, tautological conditions with no way out,
//! contradictions at entry, a bounded concrete run for programs that read
//! no input, and finally interval-based ranges.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::condition::{classify_condition, finite_bounds, ConditionClass};
use super::domain::AbstractEnv;
use super::intervals::eval;
use super::Analyses;
use crate::interp::{ExecResult, ExecStatus};
use crate::lang::{AugOp, BinaryOp, CompareOp, Expr, ExprKind, NodeId, Stmt, StmtKind};

/// Iterations per arrival at a loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum IterationBound {
    Exact(u64),
    Range(u64, u64),
    /// Observed lower bound from a run cut short by the step budget.
    AtLeast(u64),
    /// No path leaves the loop normally.
    Infinite,
    Unknown,
}

impl IterationBound {
    fn range(lo: u64, hi: u64) -> IterationBound {
        if lo == hi {
            IterationBound::Exact(lo)
        } else {
            IterationBound::Range(lo, hi)
        }
    }

    /// Whether a finished loop that ran `n` times is consistent with this
    /// bound.
    pub fn admits(&self, n: u64) -> bool {
        match *self {
            IterationBound::Exact(e) => n == e,
            IterationBound::Range(lo, hi) => lo <= n && n <= hi,
            IterationBound::AtLeast(lo) => n >= lo,
            IterationBound::Infinite => false,
            IterationBound::Unknown => true,
        }
    }

    pub fn is_finite_known(&self) -> bool {
        matches!(self, IterationBound::Exact(_) | IterationBound::Range(..))
    }
}

impl fmt::Display for IterationBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IterationBound::Exact(1) => f.write_str("exactly 1 time"),
            IterationBound::Exact(n) => write!(f, "exactly {n} times"),
            IterationBound::Range(lo, hi) => write!(f, "between {lo} and {hi} times"),
            IterationBound::AtLeast(n) => write!(f, "at least {n} times"),
            IterationBound::Infinite => f.write_str("forever"),
            IterationBound::Unknown => f.write_str("an unknown number of times"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node {0} is not a loop")]
pub struct NotALoop(pub NodeId);

/// Whether some path in `body` leaves the enclosing loop directly: a
/// `break` not nested in an inner loop, or any `return`.
pub fn body_can_exit(body: &[Stmt]) -> bool {
    fn scan(stmts: &[Stmt], nested: bool) -> bool {
        stmts.iter().any(|s| match &s.kind {
            StmtKind::Break => !nested,
            StmtKind::Return(_) => true,
            StmtKind::While { body, .. } | StmtKind::ForRange { body, .. } => scan(body, true),
            _ => s.bodies().iter().any(|b| scan(b, nested)),
        })
    }
    scan(body, false)
}

/// Whether `body` contains a `continue` for the enclosing loop.
fn body_continues(body: &[Stmt]) -> bool {
    body.iter().any(|s| match &s.kind {
        StmtKind::Continue => true,
        StmtKind::While { .. } | StmtKind::ForRange { .. } => false,
        _ => s.bodies().iter().any(|b| body_continues(b)),
    })
}

/// Statements anywhere in `body` that assign `name`.
fn writes<'a>(body: &'a [Stmt], name: &str) -> Vec<&'a Stmt> {
    let mut out = Vec::new();
    for s in body {
        s.walk(&mut |s| match &s.kind {
            StmtKind::Assign { target, .. } | StmtKind::AugAssign { target, .. } if target == name => out.push(s),
            StmtKind::ForRange { var, .. } if var == name => out.push(s),
            _ => {}
        });
    }
    out
}

fn constant(e: &Expr, env: &AbstractEnv, body: &[Stmt]) -> Option<i64> {
    if e.names().iter().any(|n| !writes(body, n).is_empty()) || e.contains_call() {
        return None;
    }
    eval(e, env).as_interval()?.singleton()
}

/// Interval of an expression whose variables the body leaves alone.
fn stable_interval(e: &Expr, env: &AbstractEnv, body: &[Stmt]) -> Option<(i64, i64)> {
    if e.names().iter().any(|n| !writes(body, n).is_empty()) || e.contains_call() {
        return None;
    }
    finite_bounds(&eval(e, env))
}

/// The per-iteration change `v += d`, `v -= d`, `v = v + d`, `v = d + v`
/// or `v = v - d`.
fn step_of(s: &Stmt, v: &str, env: &AbstractEnv, body: &[Stmt]) -> Option<i64> {
    match &s.kind {
        StmtKind::AugAssign { op: AugOp::Add, value, .. } => constant(value, env, body),
        StmtKind::AugAssign { op: AugOp::Sub, value, .. } => constant(value, env, body)?.checked_neg(),
        StmtKind::Assign { value, .. } => {
            let ExprKind::Binary { op, lhs, rhs } = &value.kind else { return None };
            let is_v = |e: &Expr| matches!(&e.kind, ExprKind::Name(n) if n == v);
            match op {
                BinaryOp::Add if is_v(lhs) => constant(rhs, env, body),
                BinaryOp::Add if is_v(rhs) => constant(lhs, env, body),
                BinaryOp::Sub if is_v(lhs) => constant(rhs, env, body)?.checked_neg(),
                _ => None,
            }
        }
        _ => None,
    }
}

struct Induction<'a> {
    var: &'a str,
    op: CompareOp,
    limit: &'a Expr,
    step: i64,
}

/// Recognize `while v OP limit` with exactly one unconditional top-level
/// update of `v` by a constant, and no break, continue or return.
fn induction<'a>(cond: &'a Expr, body: &'a [Stmt], entry: &AbstractEnv) -> Option<Induction<'a>> {
    let ExprKind::Compare { op, lhs, rhs } = &cond.kind else { return None };
    let (var, op, limit) = match (&lhs.kind, &rhs.kind) {
        (ExprKind::Name(v), _) if !rhs.names().contains(&v.as_str()) => (v.as_str(), *op, &**rhs),
        (_, ExprKind::Name(v)) if !lhs.names().contains(&v.as_str()) => (v.as_str(), op.flipped(), &**lhs),
        _ => return None,
    };
    if body_can_exit(body) || body_continues(body) {
        return None;
    }
    let w = writes(body, var);
    if w.len() != 1 || !body.iter().any(|s| std::ptr::eq(s, w[0])) {
        return None;
    }
    let step = step_of(w[0], var, entry, body)?;
    Some(Induction { var, op, limit, step })
}

/// Iterations of `while v OP k` starting from `v0`, stepping by `d`.
/// `None` means the condition never turns false.
pub fn closed_form(v0: i64, d: i64, op: CompareOp, k: i64) -> Option<u64> {
    let (v0, d, k) = (v0 as i128, d as i128, k as i128);
    let holds = |v: i128| op.holds(&v, &k);
    if !holds(v0) {
        return Some(0);
    }
    let ceil_div = |a: i128, b: i128| (a + b - 1) / b;
    let n: i128 = match op {
        CompareOp::Lt if d > 0 => ceil_div(k - v0, d),
        CompareOp::LtE if d > 0 => (k - v0) / d + 1,
        CompareOp::Gt if d < 0 => ceil_div(v0 - k, -d),
        CompareOp::GtE if d < 0 => (v0 - k) / -d + 1,
        CompareOp::NotEq if d != 0 && (k - v0) % d == 0 && (k - v0) / d > 0 => (k - v0) / d,
        CompareOp::Eq if d != 0 => 1,
        _ => return None,
    };
    u64::try_from(n).ok()
}

/// Compute the bound for one loop.
pub fn loop_bound(analyses: &Analyses, loop_id: NodeId) -> Result<IterationBound, NotALoop> {
    let program = &analyses.program;
    let stmt = program.find_stmt(loop_id).filter(|s| s.is_loop()).ok_or(NotALoop(loop_id))?;
    let Some(entry) = analyses.intervals.loop_entry.get(&loop_id) else {
        // never reached
        return Ok(IterationBound::Unknown);
    };
    let header = analyses.intervals.before.get(&loop_id).unwrap_or(entry);

    match &stmt.kind {
        StmtKind::ForRange { start, stop, step, body, .. } => {
            if !body_can_exit(body) {
                let fold = |e: &Option<Expr>, default: i64| match e {
                    Some(e) => eval(e, entry).as_interval().and_then(|i| i.singleton()),
                    None => Some(default),
                };
                let stop_v = eval(stop, entry).as_interval().and_then(|i| i.singleton());
                if let (Some(a), Some(b), Some(s)) = (fold(start, 0), stop_v, fold(step, 1)) {
                    if s == 0 {
                        return Ok(IterationBound::Unknown);
                    }
                    let (a, b, s) = (a as i128, b as i128, s as i128);
                    let n = if s > 0 { (b - a + s - 1).div_euclid(s) } else { (a - b + (-s) - 1).div_euclid(-s) };
                    return Ok(IterationBound::Exact(n.max(0) as u64));
                }
            }
        }
        StmtKind::While { cond, body, .. } => {
            if let Some(ind) = induction(cond, body, entry) {
                let v0 = entry.get(ind.var).and_then(|v| v.as_interval()).and_then(|i| i.singleton());
                let k = constant(ind.limit, entry, body);
                if let (Some(v0), Some(k)) = (v0, k) {
                    return Ok(match closed_form(v0, ind.step, ind.op, k) {
                        Some(n) => IterationBound::Exact(n),
                        None => IterationBound::Infinite,
                    });
                }
            }
            if !body_can_exit(body) && classify_condition(cond, header) == ConditionClass::Tautology {
                return Ok(IterationBound::Infinite);
            }
            if classify_condition(cond, entry) == ConditionClass::Contradiction {
                return Ok(IterationBound::Exact(0));
            }
        }
        _ => unreachable!(),
    }

    if let Some(run) = analyses.closed_run() {
        if let Some(b) = observed(run, loop_id) {
            return Ok(b);
        }
    }

    if let StmtKind::While { cond, body, .. } = &stmt.kind {
        if let Some(b) = interval_range(cond, body, entry) {
            return Ok(b);
        }
    }
    Ok(IterationBound::Unknown)
}

fn observed(run: &ExecResult, loop_id: NodeId) -> Option<IterationBound> {
    let stats = run.loop_stats.get(&loop_id)?;
    if stats.entries == 0 {
        return None;
    }
    let finished = stats.min_per_entry.zip(stats.max_per_entry);
    match &run.status {
        ExecStatus::Completed => finished.map(|(lo, hi)| IterationBound::range(lo, hi)),
        // an error ends the current entry for good; its count is final
        ExecStatus::RuntimeError { .. } | ExecStatus::AssertionFailed { .. } => {
            let counts = finished.into_iter().flat_map(|(a, b)| [a, b]).chain(stats.in_progress);
            let (lo, hi) = counts.fold((u64::MAX, 0), |(lo, hi), c| (lo.min(c), hi.max(c)));
            Some(IterationBound::range(lo, hi))
        }
        _ => {
            let lo = finished.map(|(lo, _)| lo).into_iter().chain(stats.in_progress).min()?;
            Some(IterationBound::AtLeast(lo))
        }
    }
}

/// Bounds from the intervals of the start value and the limit, for an
/// induction loop whose operands are not single constants.
fn interval_range(cond: &Expr, body: &[Stmt], entry: &AbstractEnv) -> Option<IterationBound> {
    let ind = induction(cond, body, entry)?;
    let (vlo, vhi) = entry.get(ind.var).and_then(finite_bounds)?;
    let (klo, khi) = stable_interval(ind.limit, entry, body)?;
    let (lo, hi) = match ind.op {
        CompareOp::Lt | CompareOp::LtE if ind.step > 0 => {
            (closed_form(vhi, ind.step, ind.op, klo)?, closed_form(vlo, ind.step, ind.op, khi)?)
        }
        CompareOp::Gt | CompareOp::GtE if ind.step < 0 => {
            (closed_form(vlo, ind.step, ind.op, khi)?, closed_form(vhi, ind.step, ind.op, klo)?)
        }
        _ => return None,
    };
    Some(IterationBound::range(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn bound(src: &str, index: usize) -> IterationBound {
        let p = parse(src).unwrap();
        let a = Analyses::new(&p);
        loop_bound(&a, p.statements[index].id).unwrap()
    }

    #[test]
    fn ladder_examples() {
        assert_eq!(bound("for i in range(5):\n    pass\n", 0), IterationBound::Exact(5));
        assert_eq!(bound("while False:\n    pass\n", 0), IterationBound::Exact(0));
        assert_eq!(bound(crate::fixtures::ORIGINAL_LOOP, 1), IterationBound::Infinite);
        assert_eq!(bound("i = 0\nwhile i < 7:\n    i += 2", 1), IterationBound::Exact(4));
    }

    #[test]
    fn ranges_with_steps() {
        assert_eq!(bound("for i in range(10, 0, -3):\n    pass\n", 0), IterationBound::Exact(4));
        assert_eq!(bound("for i in range(3, 1):\n    pass\n", 0), IterationBound::Exact(0));
        assert_eq!(bound("n = 4\nfor i in range(n, 2 * n):\n    pass\n", 1), IterationBound::Exact(4));
        assert_eq!(bound("s = int(input())\nfor i in range(s):\n    pass\n", 1), IterationBound::Unknown);
    }

    #[test]
    fn not_a_loop() {
        let p = parse("x = 1").unwrap();
        assert_eq!(loop_bound(&Analyses::new(&p), p.statements[0].id), Err(NotALoop(p.statements[0].id)));
    }

    #[test]
    fn closed_forms() {
        assert_eq!(closed_form(0, 2, CompareOp::Lt, 7), Some(4));
        assert_eq!(closed_form(0, 1, CompareOp::LtE, 5), Some(6));
        assert_eq!(closed_form(10, -3, CompareOp::Gt, 0), Some(4));
        assert_eq!(closed_form(0, 3, CompareOp::NotEq, 10), None);
        assert_eq!(closed_form(0, 5, CompareOp::NotEq, 10), Some(2));
        assert_eq!(closed_form(0, -1, CompareOp::Lt, 10), None);
        assert_eq!(closed_form(5, 1, CompareOp::Eq, 5), Some(1));
    }

    #[test]
    fn break_defeats_closed_forms() {
        let src = "for i in range(5):\n    if i == 2:\n        break\n";
        assert_eq!(bound(src, 0), IterationBound::Exact(3));
        let src = "i = 0\nwhile i < 10:\n    i += 1\n    if i == 4:\n        break\n";
        assert_eq!(bound(src, 1), IterationBound::Exact(4));
    }

    #[test]
    fn budget_censored_run() {
        let src = "i = 0\nwhile i < 1000000:\n    i += 2\n    i -= 1\n";
        assert!(matches!(bound(src, 1), IterationBound::AtLeast(n) if n > 1000));
    }

    #[test]
    fn interval_ranges_for_input_dependent_limits() {
        let src = "n = int(input())\nif n > 10:\n    n = 10\nif n < 0:\n    n = 0\ni = 0\nwhile i < n:\n    i += 1\n";
        assert_eq!(bound(src, 4), IterationBound::Range(0, 10));
    }

    #[test]
    fn unchanged_variable_with_tautology_in_env() {
        let src = "x = 1\nwhile x > 0:\n    print(x)\n";
        assert_eq!(bound(src, 1), IterationBound::Infinite);
    }
}
