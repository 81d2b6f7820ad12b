//! Tautology and contradiction detection by finite-model checking.
//!
//! Inside the decidable fragment (boolean combinations of comparisons
//! between names and int/str/bool literals), a comparison only sees which
//! region of the number line, or which literal, a variable falls in. One
//! representative per region is enough, so evaluating the condition over a
//! small candidate grid decides it exactly.
//!
//! Variables compared with each other share a group; a group of `k`
//! variables gets `k` representatives per region so that every equality
//! pattern among them is realizable.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::domain::{AbstractEnv, AbstractValue, Bound};
use crate::interp::{compare_values, Value};
use crate::lang::{BoolOpKind, CompareOp, Expr, ExprKind, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionClass {
    Tautology,
    Contradiction,
    Contingent,
    Undecided,
}

/// Grids larger than this are not enumerated.
const MAX_GRID: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Str,
    Bool,
}

fn literal(e: &Expr) -> Option<Value> {
    match &e.kind {
        ExprKind::Int(v) => Some(Value::Int(*v)),
        ExprKind::Str(s) => Some(Value::Str(s.clone())),
        ExprKind::Bool(b) => Some(Value::Bool(*b)),
        ExprKind::Unary { op: UnaryOp::Neg, operand } => match operand.kind {
            ExprKind::Int(v) => v.checked_neg().map(Value::Int),
            _ => None,
        },
        _ => None,
    }
}

fn ty_of(v: &Value) -> Ty {
    match v {
        Value::Int(_) => Ty::Int,
        Value::Str(_) => Ty::Str,
        Value::Bool(_) => Ty::Bool,
        Value::Float(_) => unreachable!("float literals are outside the fragment"),
    }
}

#[derive(Default)]
struct Facts {
    vars: BTreeSet<String>,
    /// Literals each variable is compared against directly.
    literals: BTreeMap<String, Vec<Value>>,
    /// Pairs of variables compared with each other, with the operator.
    pairs: Vec<(String, String, CompareOp)>,
    /// Literal comparisons with an ordering operator, per variable.
    ordered: BTreeSet<String>,
    /// Variables used directly for their truthiness.
    bare: BTreeSet<String>,
}

/// Collect what the condition says about each variable; `None` when the
/// condition leaves the fragment.
fn collect(e: &Expr, f: &mut Facts) -> Option<()> {
    match &e.kind {
        ExprKind::BoolOp { operands, .. } => operands.iter().try_for_each(|o| collect(o, f)),
        ExprKind::Unary { op: UnaryOp::Not, operand } => collect(operand, f),
        ExprKind::Name(n) => {
            f.vars.insert(n.clone());
            f.bare.insert(n.clone());
            Some(())
        }
        ExprKind::Compare { op, lhs, rhs } => match (&lhs.kind, &rhs.kind) {
            (ExprKind::Name(a), ExprKind::Name(b)) => {
                f.vars.insert(a.clone());
                f.vars.insert(b.clone());
                f.pairs.push((a.clone(), b.clone(), *op));
                Some(())
            }
            (ExprKind::Name(n), _) | (_, ExprKind::Name(n)) => {
                let other = if matches!(lhs.kind, ExprKind::Name(_)) { rhs } else { lhs };
                let lit = literal(other)?;
                f.vars.insert(n.clone());
                f.literals.entry(n.clone()).or_default().push(lit);
                if op.is_ordering() {
                    f.ordered.insert(n.clone());
                }
                Some(())
            }
            _ => {
                literal(lhs)?;
                literal(rhs)?;
                Some(())
            }
        },
        _ => literal(e).map(|_| ()),
    }
}

struct Groups {
    parent: BTreeMap<String, String>,
}

impl Groups {
    fn find(&self, x: &str) -> String {
        let mut cur = x.to_string();
        while let Some(p) = self.parent.get(&cur) {
            if *p == cur {
                break;
            }
            cur = p.clone();
        }
        cur
    }

    fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent.insert(ra, rb);
        }
    }
}

fn env_type(v: &AbstractValue) -> Option<Ty> {
    match v {
        AbstractValue::IntRange(_) => Some(Ty::Int),
        AbstractValue::StrSet(_) => Some(Ty::Str),
        AbstractValue::BoolSet(_) => Some(Ty::Bool),
        AbstractValue::FloatTop | AbstractValue::Top => None,
    }
}

fn eval(e: &Expr, assignment: &BTreeMap<&str, &Value>) -> Option<Value> {
    Some(match &e.kind {
        ExprKind::Name(n) => (*assignment.get(n.as_str())?).clone(),
        ExprKind::Unary { op: UnaryOp::Not, operand } => Value::Bool(!eval(operand, assignment)?.truthy()),
        ExprKind::Compare { op, lhs, rhs } => {
            Value::Bool(compare_values(*op, &eval(lhs, assignment)?, &eval(rhs, assignment)?).ok()?)
        }
        ExprKind::BoolOp { op, operands } => {
            let mut last = None;
            for o in operands {
                let v = eval(o, assignment)?;
                let decided = match op {
                    BoolOpKind::And => !v.truthy(),
                    BoolOpKind::Or => v.truthy(),
                };
                last = Some(v);
                if decided {
                    break;
                }
            }
            last?
        }
        _ => literal(e)?,
    })
}

fn int_candidates(points: &BTreeSet<i64>, k: i64) -> BTreeSet<i64> {
    let mut out = BTreeSet::new();
    for &p in points {
        for d in -k..=k {
            if let Some(v) = p.checked_add(d) {
                out.insert(v);
            }
        }
    }
    let base = points.iter().max().map_or(0, |m| m.saturating_add(k + 1));
    for j in 0..k {
        out.insert(base.saturating_add(j));
    }
    out
}

fn fresh_strings(avoid: &BTreeSet<String>, k: usize) -> Vec<String> {
    (0..).map(|i| format!("\u{1}fresh{i}")).filter(|s| !avoid.contains(s)).take(k).collect()
}

/// Classify a condition under the variable facts in `env`. Variables absent
/// from `env` take their type from the literals they are compared with.
pub fn classify_condition(cond: &Expr, env: &AbstractEnv) -> ConditionClass {
    let mut facts = Facts::default();
    if collect(cond, &mut facts).is_none() {
        return ConditionClass::Undecided;
    }

    let mut groups = Groups { parent: BTreeMap::new() };
    for (a, b, _) in &facts.pairs {
        groups.union(a, b);
    }

    // variable types
    let mut types: BTreeMap<&str, Ty> = BTreeMap::new();
    for v in &facts.vars {
        let ty = match env.get(v) {
            Some(val) => match env_type(val) {
                Some(t) => t,
                None => return ConditionClass::Undecided,
            },
            None => {
                let lits: BTreeSet<_> = facts.literals.get(v).into_iter().flatten().map(|l| ty_of(l) as u8).collect();
                match lits.len() {
                    0 => continue,
                    1 => ty_of(&facts.literals[v][0]),
                    _ => return ConditionClass::Undecided,
                }
            }
        };
        types.insert(v, ty);
    }
    // untyped variables inherit from their group, else default
    for v in &facts.vars {
        if types.contains_key(v.as_str()) {
            continue;
        }
        let root = groups.find(v);
        let inherited = facts.vars.iter().filter(|w| groups.find(w) == root).find_map(|w| types.get(w.as_str()).copied());
        let ty = inherited.unwrap_or(if facts.bare.contains(v) { Ty::Bool } else { Ty::Int });
        types.insert(v, ty);
    }
    for (a, b, _) in &facts.pairs {
        if types[a.as_str()] != types[b.as_str()] {
            return ConditionClass::Undecided;
        }
    }
    // strings have no finite set of order regions
    for v in &facts.ordered {
        if types[v.as_str()] == Ty::Str {
            return ConditionClass::Undecided;
        }
    }
    if facts.pairs.iter().any(|(a, _, op)| op.is_ordering() && types[a.as_str()] == Ty::Str) {
        return ConditionClass::Undecided;
    }

    // candidate values per group, then per variable
    let mut by_root: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for v in &facts.vars {
        by_root.entry(groups.find(v)).or_default().push(v);
    }
    let mut candidates: Vec<(&str, Vec<Value>)> = Vec::new();
    for members in by_root.values() {
        let k = members.len();
        let ty = types[members[0]];
        let mut lits: Vec<&Value> = members.iter().flat_map(|m| facts.literals.get(*m).into_iter().flatten()).collect();
        let zero = Value::Int(0);
        let empty = Value::Str(String::new());
        if members.iter().any(|m| facts.bare.contains(*m)) {
            lits.push(if ty == Ty::Str { &empty } else { &zero });
        }
        match ty {
            Ty::Int => {
                let mut points: BTreeSet<i64> =
                    lits.iter().filter_map(|l| if let Value::Int(i) = l { Some(*i) } else { None }).collect();
                for m in members {
                    if let Some(AbstractValue::IntRange(i)) = env.get(*m) {
                        points.extend(i.lo.finite());
                        points.extend(i.hi.finite());
                    }
                }
                let grid = int_candidates(&points, k as i64);
                for m in members {
                    let vals: Vec<Value> = match env.get(*m) {
                        Some(AbstractValue::IntRange(i)) => grid.iter().filter(|v| i.contains(**v)).map(|v| Value::Int(*v)).collect(),
                        _ => grid.iter().map(|v| Value::Int(*v)).collect(),
                    };
                    candidates.push((m, vals));
                }
            }
            Ty::Str => {
                let mut set: BTreeSet<String> =
                    lits.iter().filter_map(|l| if let Value::Str(s) = l { Some(s.clone()) } else { None }).collect();
                for m in members {
                    if let Some(AbstractValue::StrSet(Some(s))) = env.get(*m) {
                        set.extend(s.iter().cloned());
                    }
                }
                let fresh = fresh_strings(&set, k);
                set.extend(fresh);
                for m in members {
                    let vals: Vec<Value> = match env.get(*m) {
                        Some(AbstractValue::StrSet(Some(s))) => s.iter().map(|x| Value::Str(x.clone())).collect(),
                        _ => set.iter().map(|x| Value::Str(x.clone())).collect(),
                    };
                    candidates.push((m, vals));
                }
            }
            Ty::Bool => {
                for m in members {
                    let vals: Vec<Value> = match env.get(*m) {
                        Some(AbstractValue::BoolSet(b)) => b.iter().map(|x| Value::Bool(*x)).collect(),
                        _ => vec![Value::Bool(false), Value::Bool(true)],
                    };
                    candidates.push((m, vals));
                }
            }
        }
    }
    if candidates.iter().any(|(_, v)| v.is_empty()) {
        // no value is possible at all: the point is unreachable
        return ConditionClass::Undecided;
    }
    let size = candidates.iter().try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()));
    if size.is_none_or(|s| s > MAX_GRID) {
        return ConditionClass::Undecided;
    }

    let mut seen_true = false;
    let mut seen_false = false;
    let mut idx = vec![0usize; candidates.len()];
    loop {
        let assignment: BTreeMap<&str, &Value> =
            candidates.iter().zip(&idx).map(|((name, vals), i)| (*name, &vals[*i])).collect();
        match eval(cond, &assignment) {
            Some(v) if v.truthy() => seen_true = true,
            Some(_) => seen_false = true,
            None => return ConditionClass::Undecided,
        }
        if seen_true && seen_false {
            return ConditionClass::Contingent;
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return if seen_true { ConditionClass::Tautology } else { ConditionClass::Contradiction };
            }
            idx[pos] += 1;
            if idx[pos] < candidates[pos].1.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Lowest and highest values of a finite interval bound, if any.
pub(crate) fn finite_bounds(v: &AbstractValue) -> Option<(i64, i64)> {
    match v {
        AbstractValue::IntRange(i) => match (i.lo, i.hi) {
            (Bound::Finite(a), Bound::Finite(b)) => Some((a, b)),
            _ => None,
        },
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::domain::Interval;
    use crate::lang::{parse, StmtKind};

    fn cond(src: &str) -> Expr {
        let p = parse(&format!("c = {src}\n")).unwrap();
        let StmtKind::Assign { value, .. } = &p.statements[0].kind else { panic!() };
        value.clone()
    }

    fn classify(src: &str) -> ConditionClass {
        classify_condition(&cond(src), &AbstractEnv::new())
    }

    #[test]
    fn yes_no_condition_is_tautology() {
        assert_eq!(classify("response != 'y' or response != 'n'"), ConditionClass::Tautology);
        let env = AbstractEnv::from([("response".to_string(), AbstractValue::any_str())]);
        assert_eq!(classify_condition(&cond("response != 'y' or response != 'n'"), &env), ConditionClass::Tautology);
    }

    #[test]
    fn basic_classes() {
        assert_eq!(classify("x == 1 and x == 2"), ConditionClass::Contradiction);
        assert_eq!(classify("x > 3 and x < 10"), ConditionClass::Contingent);
        assert_eq!(classify("x < 5 or x >= 5"), ConditionClass::Tautology);
        assert_eq!(classify("x > 3 and x < 4"), ConditionClass::Contradiction);
        assert_eq!(classify("True"), ConditionClass::Tautology);
        assert_eq!(classify("not False and 1 == 1"), ConditionClass::Tautology);
        assert_eq!(classify("x == y or x != y"), ConditionClass::Tautology);
        assert_eq!(classify("x < y and y < x"), ConditionClass::Contradiction);
        assert_eq!(classify("b or not b"), ConditionClass::Tautology);
    }

    #[test]
    fn outside_fragment_is_undecided() {
        assert_eq!(classify("x < 1.5"), ConditionClass::Undecided);
        assert_eq!(classify("len(s) > 0"), ConditionClass::Undecided);
        assert_eq!(classify("x + 1 > 0"), ConditionClass::Undecided);
        assert_eq!(classify("s < 'm'"), ConditionClass::Undecided);
        let env = AbstractEnv::from([("x".to_string(), AbstractValue::FloatTop)]);
        assert_eq!(classify_condition(&cond("x > 0"), &env), ConditionClass::Undecided);
    }

    #[test]
    fn environment_narrows_candidates() {
        let env = AbstractEnv::from([("i".to_string(), AbstractValue::IntRange(Interval::range(0, 6)))]);
        assert_eq!(classify_condition(&cond("i < 7"), &env), ConditionClass::Tautology);
        assert_eq!(classify_condition(&cond("i > 6"), &env), ConditionClass::Contradiction);
        let env = AbstractEnv::from([("x".to_string(), AbstractValue::any_int())]);
        // an int is never equal to a string
        assert_eq!(classify_condition(&cond("x == '5'"), &env), ConditionClass::Contradiction);
        assert_eq!(classify_condition(&cond("x < '5'"), &env), ConditionClass::Undecided);
    }
}
