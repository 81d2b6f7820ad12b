//! Interval abstract interpretation over a [`Cfg`].
//!
//! Conditions refine the state along true/false edges. At loop headers a
//! variable whose value grew on three consecutive visits is widened to
//! infinity; two descending passes then recover bounds such as the exit
//! interval of a counting loop.

use std::collections::{BTreeMap, BTreeSet};

use super::cfg::{BlockId, Cfg, EdgeKind, Instr};
use super::domain::{join_env, join_state, AbstractEnv, AbstractValue, Bound, Interval, Truth, MAX_STR_SET};
use super::StmtIndex;
use crate::lang::{BinaryOp, BoolOpKind, CompareOp, Expr, ExprKind, NodeId, StmtKind, UnaryOp};

pub const WIDENING_THRESHOLD: u32 = 3;
const NARROWING_PASSES: usize = 2;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalFacts {
    /// State just before each reachable statement executes. For loops this
    /// is the header state, which covers every arrival at the condition.
    pub before: BTreeMap<NodeId, AbstractEnv>,
    /// State after each reachable simple statement.
    pub after: BTreeMap<NodeId, AbstractEnv>,
    /// Per loop: the state on arrival from outside the loop.
    pub loop_entry: BTreeMap<NodeId, AbstractEnv>,
    /// Per loop: the state after leaving it, by the condition or a break.
    pub loop_exit: BTreeMap<NodeId, AbstractEnv>,
    /// Per `if`/`elif` condition expression: the state it is evaluated in.
    pub arm_env: BTreeMap<NodeId, AbstractEnv>,
    /// Block visits spent reaching the fixpoint, and the allowance for it.
    pub iterations: usize,
    pub iteration_bound: usize,
}

impl IntervalFacts {
    pub fn value_after(&self, stmt: NodeId, name: &str) -> Option<&AbstractValue> {
        self.after.get(&stmt)?.get(name)
    }

    pub fn value_before(&self, stmt: NodeId, name: &str) -> Option<&AbstractValue> {
        self.before.get(&stmt)?.get(name)
    }

    pub fn exit_value(&self, loop_id: NodeId, name: &str) -> Option<&AbstractValue> {
        self.loop_exit.get(&loop_id)?.get(name)
    }

    /// Flattened view: (statement, variable) → value after the statement.
    pub fn points(&self) -> BTreeMap<(NodeId, String), AbstractValue> {
        let mut out = BTreeMap::new();
        for (id, env) in &self.after {
            for (k, v) in env {
                out.insert((*id, k.clone()), v.clone());
            }
        }
        out
    }

    pub(crate) fn merge(&mut self, o: IntervalFacts) {
        self.before.extend(o.before);
        self.after.extend(o.after);
        self.loop_entry.extend(o.loop_entry);
        self.loop_exit.extend(o.loop_exit);
        self.arm_env.extend(o.arm_env);
        self.iterations += o.iterations;
        self.iteration_bound += o.iteration_bound;
    }
}

/// Abstract value of an expression.
pub fn eval(e: &Expr, env: &AbstractEnv) -> AbstractValue {
    match &e.kind {
        ExprKind::Int(v) => AbstractValue::IntRange(Interval::exact(*v)),
        ExprKind::Float(_) => AbstractValue::FloatTop,
        ExprKind::Str(s) => AbstractValue::str_exact(s),
        ExprKind::Bool(b) => AbstractValue::BoolSet([*b].into()),
        ExprKind::Name(n) => env.get(n).cloned().unwrap_or(AbstractValue::Top),
        ExprKind::Unary { op: UnaryOp::Neg, operand } => match eval(operand, env) {
            AbstractValue::IntRange(i) => AbstractValue::IntRange(i.neg()),
            AbstractValue::FloatTop => AbstractValue::FloatTop,
            _ => AbstractValue::Top,
        },
        ExprKind::Unary { op: UnaryOp::Not, operand } => bool_set(match eval(operand, env).truthiness() {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }),
        ExprKind::Binary { op, lhs, rhs } => binary(*op, &eval(lhs, env), &eval(rhs, env)),
        ExprKind::Compare { op, lhs, rhs } => {
            AbstractValue::BoolSet(compare_outcomes(*op, &eval(lhs, env), &eval(rhs, env)))
        }
        ExprKind::BoolOp { op, operands } => {
            let mut acc: Option<AbstractValue> = None;
            for (i, o) in operands.iter().enumerate() {
                let v = eval(o, env);
                let last = i + 1 == operands.len();
                let t = v.truthiness();
                // a value decides the result when it is falsy for `and` or
                // truthy for `or`; otherwise evaluation moves on
                let (stops, continues) = match op {
                    BoolOpKind::And => (t != Truth::True, t != Truth::False),
                    BoolOpKind::Or => (t != Truth::False, t != Truth::True),
                };
                if stops || last {
                    acc = Some(match acc {
                        None => v,
                        Some(a) => a.join(&v),
                    });
                }
                if !continues {
                    break;
                }
            }
            acc.unwrap_or(AbstractValue::Top)
        }
        ExprKind::Call { callee, args } => call(callee, args, env),
    }
}

fn bool_set(t: Truth) -> AbstractValue {
    AbstractValue::BoolSet(match t {
        Truth::True => [true].into(),
        Truth::False => [false].into(),
        Truth::Unknown => [false, true].into(),
    })
}

fn call(callee: &str, args: &[Expr], env: &AbstractEnv) -> AbstractValue {
    let arg = args.first().map(|a| eval(a, env));
    match callee {
        "input" => AbstractValue::any_str(),
        "int" => match arg {
            Some(AbstractValue::IntRange(i)) => AbstractValue::IntRange(i),
            Some(AbstractValue::StrSet(Some(set))) => {
                let parsed: Vec<i64> = set.iter().filter_map(|s| s.trim().parse::<i64>().ok()).collect();
                match (parsed.iter().min(), parsed.iter().max()) {
                    (Some(lo), Some(hi)) => AbstractValue::IntRange(Interval::range(*lo, *hi)),
                    _ => AbstractValue::any_int(),
                }
            }
            _ => AbstractValue::any_int(),
        },
        "str" => match arg {
            Some(AbstractValue::IntRange(i)) => match i.singleton() {
                Some(v) => AbstractValue::str_exact(&v.to_string()),
                None => AbstractValue::any_str(),
            },
            Some(s @ AbstractValue::StrSet(_)) => s,
            Some(AbstractValue::BoolSet(b)) => AbstractValue::StrSet(Some(
                b.iter().map(|x| if *x { "True".to_string() } else { "False".to_string() }).collect(),
            )),
            _ => AbstractValue::any_str(),
        },
        "len" => match arg {
            Some(AbstractValue::StrSet(Some(set))) => {
                let lens: Vec<i64> = set.iter().map(|s| s.chars().count() as i64).collect();
                AbstractValue::IntRange(Interval::range(*lens.iter().min().unwrap_or(&0), *lens.iter().max().unwrap_or(&0)))
            }
            _ => AbstractValue::IntRange(Interval { lo: Bound::Finite(0), hi: Bound::PosInf }),
        },
        // print and range produce no usable value; user functions are not
        // analyzed across calls
        _ => AbstractValue::Top,
    }
}

fn binary(op: BinaryOp, l: &AbstractValue, r: &AbstractValue) -> AbstractValue {
    use AbstractValue::*;
    match (op, l, r) {
        (BinaryOp::Div, IntRange(_) | FloatTop, IntRange(_) | FloatTop) => FloatTop,
        (_, IntRange(a), IntRange(b)) => IntRange(match op {
            BinaryOp::Add => a.add(b),
            BinaryOp::Sub => a.sub(b),
            BinaryOp::Mul => a.mul(b),
            BinaryOp::FloorDiv => a.floor_div(b),
            BinaryOp::Mod => a.floor_mod(b),
            BinaryOp::Div => unreachable!(),
        }),
        (_, IntRange(_) | FloatTop, IntRange(_) | FloatTop) => FloatTop,
        (BinaryOp::Add, StrSet(Some(a)), StrSet(Some(b))) if a.len() * b.len() <= MAX_STR_SET => StrSet(Some(
            a.iter().flat_map(|x| b.iter().map(move |y| format!("{x}{y}"))).collect(),
        )),
        (BinaryOp::Add, StrSet(_), StrSet(_)) => StrSet(None),
        (BinaryOp::Mul, StrSet(_), IntRange(_)) | (BinaryOp::Mul, IntRange(_), StrSet(_)) => StrSet(None),
        _ => Top,
    }
}

/// Possible outcomes of a comparison between abstract values.
pub fn compare_outcomes(op: CompareOp, l: &AbstractValue, r: &AbstractValue) -> BTreeSet<bool> {
    use AbstractValue::*;
    let both: BTreeSet<bool> = [false, true].into();
    match (l, r) {
        (IntRange(a), IntRange(b)) => {
            let (always, never) = match op {
                CompareOp::Eq => (a.singleton().is_some() && a == b, a.meet(b).is_none()),
                CompareOp::NotEq => (a.meet(b).is_none(), a.singleton().is_some() && a == b),
                CompareOp::Lt => (a.hi < b.lo, a.lo >= b.hi),
                CompareOp::LtE => (a.hi <= b.lo, a.lo > b.hi),
                CompareOp::Gt => (a.lo > b.hi, a.hi <= b.lo),
                CompareOp::GtE => (a.lo >= b.hi, a.hi < b.lo),
            };
            if always {
                [true].into()
            } else if never {
                [false].into()
            } else {
                both
            }
        }
        (StrSet(Some(a)), StrSet(Some(b))) => {
            a.iter().flat_map(|x| b.iter().map(move |y| op.holds(x, y))).collect()
        }
        (BoolSet(a), BoolSet(b)) => a.iter().flat_map(|x| b.iter().map(move |y| op.holds(x, y))).collect(),
        _ if !op.is_ordering() && kinds_differ(l, r) => [op == CompareOp::NotEq].into(),
        _ => both,
    }
}

/// Whether every value of `l` has a different type from every value of `r`
/// (ints and floats count as the same type).
fn kinds_differ(l: &AbstractValue, r: &AbstractValue) -> bool {
    use AbstractValue::*;
    let class = |v: &AbstractValue| match v {
        IntRange(_) | FloatTop => Some(0),
        StrSet(_) => Some(1),
        BoolSet(_) => Some(2),
        Top => None,
    };
    matches!((class(l), class(r)), (Some(a), Some(b)) if a != b)
}

/// Narrow `env` assuming `cond` evaluated to `truth`. `None` means the
/// assumption is impossible.
pub fn refine(env: &AbstractEnv, cond: &Expr, truth: bool) -> Option<AbstractEnv> {
    let refined = match &cond.kind {
        ExprKind::BoolOp { op, operands } => {
            // `and` true / `or` false: every operand had that truth value
            let all_same = matches!((op, truth), (BoolOpKind::And, true) | (BoolOpKind::Or, false));
            if all_same {
                let mut cur = env.clone();
                for o in operands {
                    cur = refine(&cur, o, truth)?;
                }
                Some(cur)
            } else {
                // operand i decided the result after all earlier operands
                // went the other way
                let mut acc: Option<AbstractEnv> = None;
                let mut prefix = Some(env.clone());
                for o in operands {
                    let Some(p) = prefix else { break };
                    acc = join_state(&acc, &refine(&p, o, truth));
                    prefix = refine(&p, o, !truth);
                }
                acc
            }
        }
        ExprKind::Unary { op: UnaryOp::Not, operand } => refine(env, operand, !truth),
        ExprKind::Compare { op, lhs, rhs } => {
            let op = if truth { *op } else { op.negated() };
            let mut cur = env.clone();
            if let ExprKind::Name(a) = &lhs.kind {
                let other = eval(rhs, &cur);
                cur = refine_name(&cur, a, op, &other)?;
            }
            if let ExprKind::Name(b) = &rhs.kind {
                let other = eval(lhs, &cur);
                cur = refine_name(&cur, b, op.flipped(), &other)?;
            }
            Some(cur)
        }
        ExprKind::Name(n) => match env.get(n) {
            Some(v) => {
                let nv = refine_truthy(v, truth)?;
                let mut cur = env.clone();
                cur.insert(n.clone(), nv);
                Some(cur)
            }
            None => Some(env.clone()),
        },
        _ => Some(env.clone()),
    }?;
    let possible = match eval(cond, &refined).truthiness() {
        Truth::True => truth,
        Truth::False => !truth,
        Truth::Unknown => true,
    };
    possible.then_some(refined)
}

fn refine_truthy(v: &AbstractValue, truth: bool) -> Option<AbstractValue> {
    use AbstractValue::*;
    match v {
        IntRange(i) => {
            if truth {
                let mut i = *i;
                if i.lo == Bound::Finite(0) {
                    i = Interval::new(Bound::Finite(1), i.hi)?;
                }
                if i.hi == Bound::Finite(0) {
                    i = Interval::new(i.lo, Bound::Finite(-1))?;
                }
                Some(IntRange(i))
            } else {
                i.meet(&Interval::exact(0)).map(IntRange)
            }
        }
        BoolSet(b) => b.contains(&truth).then(|| BoolSet([truth].into())),
        StrSet(Some(s)) => {
            let kept: BTreeSet<String> = s.iter().filter(|x| x.is_empty() != truth).cloned().collect();
            (!kept.is_empty()).then_some(StrSet(Some(kept)))
        }
        StrSet(None) if !truth => Some(AbstractValue::str_exact("")),
        other => Some(other.clone()),
    }
}

fn refine_name(env: &AbstractEnv, name: &str, op: CompareOp, other: &AbstractValue) -> Option<AbstractEnv> {
    use AbstractValue::*;
    let Some(cur) = env.get(name) else { return Some(env.clone()) };
    let new = match (cur, other) {
        (IntRange(v), IntRange(o)) => IntRange(match op {
            CompareOp::Lt => Interval::new(v.lo, v.hi.min(o.hi.offset(-1)))?,
            CompareOp::LtE => Interval::new(v.lo, v.hi.min(o.hi))?,
            CompareOp::Gt => Interval::new(v.lo.max(o.lo.offset(1)), v.hi)?,
            CompareOp::GtE => Interval::new(v.lo.max(o.lo), v.hi)?,
            CompareOp::Eq => v.meet(o)?,
            CompareOp::NotEq => match o.singleton() {
                Some(c) => {
                    let mut r = *v;
                    if r.lo == Bound::Finite(c) {
                        r = Interval::new(Bound::Finite(c).offset(1), r.hi)?;
                    }
                    if r.hi == Bound::Finite(c) {
                        r = Interval::new(r.lo, Bound::Finite(c).offset(-1))?;
                    }
                    r
                }
                None => *v,
            },
        }),
        (StrSet(v), StrSet(Some(o))) => match op {
            CompareOp::Eq => match v {
                None => StrSet(Some(o.clone())),
                Some(v) => {
                    let m: BTreeSet<String> = v.intersection(o).cloned().collect();
                    if m.is_empty() {
                        return None;
                    }
                    StrSet(Some(m))
                }
            },
            CompareOp::NotEq if o.len() == 1 => match v {
                Some(v) => {
                    let m: BTreeSet<String> = v.difference(o).cloned().collect();
                    if m.is_empty() {
                        return None;
                    }
                    StrSet(Some(m))
                }
                None => cur.clone(),
            },
            _ => cur.clone(),
        },
        (BoolSet(v), BoolSet(o)) => {
            let m: BTreeSet<bool> = match op {
                CompareOp::Eq => v.intersection(o).copied().collect(),
                CompareOp::NotEq if o.len() == 1 => v.difference(o).copied().collect(),
                _ => v.clone(),
            };
            if m.is_empty() {
                return None;
            }
            BoolSet(m)
        }
        // equality with a string or bool pins the type of an unknown value
        (Top, StrSet(Some(o))) if op == CompareOp::Eq => StrSet(Some(o.clone())),
        (Top, BoolSet(o)) if op == CompareOp::Eq => BoolSet(o.clone()),
        (v, o) if kinds_differ(v, o) => {
            return match op {
                CompareOp::Eq => None,
                _ => Some(env.clone()),
            }
        }
        _ => cur.clone(),
    };
    let mut out = env.clone();
    out.insert(name.to_string(), new);
    Some(out)
}

/// Hull of the values a `range(start, stop, step)` loop variable takes.
fn range_values(start: &AbstractValue, stop: &AbstractValue, step: &AbstractValue) -> Option<AbstractValue> {
    let (Some(a), Some(b), Some(s)) = (start.as_interval(), stop.as_interval(), step.as_interval()) else {
        return Some(AbstractValue::any_int());
    };
    let up = Interval::new(a.lo, b.hi.offset(-1));
    let down = Interval::new(b.lo.offset(1), a.hi);
    let pos = s.hi > Bound::Finite(0);
    let neg = s.lo < Bound::Finite(0);
    let hull = match (pos, neg) {
        (true, false) => up,
        (false, true) => down,
        (true, true) => match (up, down) {
            (Some(u), Some(d)) => Some(u.join(&d)),
            (u, d) => u.or(d),
        },
        // a zero step raises before any iteration
        (false, false) => None,
    };
    hull.map(AbstractValue::IntRange)
}

struct Solver<'a, 'p> {
    cfg: &'a Cfg,
    index: &'a StmtIndex<'p>,
    initial: AbstractEnv,
    outs: Vec<Option<AbstractEnv>>,
    ins: Vec<Option<AbstractEnv>>,
}

impl Solver<'_, '_> {
    fn transfer_instr(&self, env: AbstractEnv, instr: &Instr) -> Option<AbstractEnv> {
        let Instr::Stmt { stmt } = instr else { return Some(env) };
        let s = self.index[stmt];
        let mut env = env;
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let v = eval(value, &env);
                env.insert(target.clone(), v);
            }
            StmtKind::AugAssign { target, op, value } => {
                let cur = env.get(target).cloned().unwrap_or(AbstractValue::Top);
                let v = binary(op.binary(), &cur, &eval(value, &env));
                env.insert(target.clone(), v);
            }
            StmtKind::Assert { cond, .. } => return refine(&env, cond, true),
            _ => {}
        }
        Some(env)
    }

    fn transfer_block(&self, b: BlockId, input: &Option<AbstractEnv>) -> Option<AbstractEnv> {
        let mut state = input.clone();
        for instr in &self.cfg.blocks[b].instrs {
            state = state.and_then(|env| self.transfer_instr(env, instr));
        }
        state
    }

    /// State carried along an edge out of `from`.
    fn edge_state(&self, from: BlockId, branch: Option<bool>) -> Option<AbstractEnv> {
        let out = self.outs[from].as_ref()?;
        let Some(truth) = branch else { return Some(out.clone()) };
        let Some(Instr::Cond { stmt, arm }) = self.cfg.blocks[from].instrs.last() else {
            return Some(out.clone());
        };
        match &self.index[stmt].kind {
            StmtKind::If { arms, .. } => refine(out, &arms[*arm].cond, truth),
            StmtKind::While { cond, .. } => refine(out, cond, truth),
            StmtKind::ForRange { var, start, stop, step, .. } => {
                if !truth {
                    return Some(out.clone());
                }
                let start = start.as_ref().map_or(AbstractValue::IntRange(Interval::exact(0)), |e| eval(e, out));
                let step = step.as_ref().map_or(AbstractValue::IntRange(Interval::exact(1)), |e| eval(e, out));
                let values = range_values(&start, &eval(stop, out), &step)?;
                let mut env = out.clone();
                env.insert(var.clone(), values);
                Some(env)
            }
            _ => Some(out.clone()),
        }
    }

    fn block_input(&self, b: BlockId, skip_back_edges: bool) -> Option<AbstractEnv> {
        let mut acc = if b == Cfg::ENTRY { Some(self.initial.clone()) } else { None };
        for e in self.cfg.predecessors(b) {
            if skip_back_edges && e.kind == EdgeKind::LoopBack {
                continue;
            }
            acc = join_state(&acc, &self.edge_state(e.from, e.branch));
        }
        acc
    }
}

fn var_count(cfg: &Cfg, index: &StmtIndex<'_>) -> usize {
    let mut names: BTreeSet<&str> = cfg.params.iter().map(String::as_str).collect();
    for b in &cfg.blocks {
        for i in &b.instrs {
            match &index[&i.stmt()].kind {
                StmtKind::Assign { target, .. } | StmtKind::AugAssign { target, .. } => {
                    names.insert(target);
                }
                StmtKind::ForRange { var, .. } => {
                    names.insert(var);
                }
                _ => {}
            }
        }
    }
    names.len().max(1)
}

fn grew(old: Option<&AbstractValue>, new: &AbstractValue) -> bool {
    match old {
        None => true,
        Some(o) => !o.covers(new),
    }
}

fn widen_value(old: &AbstractValue, new: &AbstractValue) -> AbstractValue {
    match (old, new) {
        (AbstractValue::IntRange(o), AbstractValue::IntRange(n)) => AbstractValue::IntRange(n.widen(o)),
        (AbstractValue::StrSet(_), AbstractValue::StrSet(_)) => AbstractValue::any_str(),
        _ => new.clone(),
    }
}

/// Run the analysis on one graph. Function parameters start as `Top`.
pub fn interval_analysis(cfg: &Cfg, index: &StmtIndex<'_>) -> IntervalFacts {
    let n = cfg.blocks.len();
    let initial: AbstractEnv = cfg.params.iter().map(|p| (p.clone(), AbstractValue::Top)).collect();
    let mut solver = Solver { cfg, index, initial, outs: vec![None; n], ins: vec![None; n] };
    let order = cfg.reverse_postorder();
    let vars = var_count(cfg, index);
    let bound = n * vars * 6;
    let mut growth: BTreeMap<(BlockId, String), u32> = BTreeMap::new();
    let mut iterations = 0;

    loop {
        let mut changed = false;
        for &b in &order {
            iterations += 1;
            let mut input = solver.block_input(b, false);
            if cfg.loop_headers.contains_key(&b) {
                if let (Some(old), Some(new)) = (&solver.ins[b], &input) {
                    let mut widened = join_env(old, new);
                    for (k, v) in widened.iter_mut() {
                        let counter = growth.entry((b, k.clone())).or_default();
                        if grew(old.get(k), v) {
                            *counter += 1;
                        } else {
                            *counter = 0;
                        }
                        if *counter >= WIDENING_THRESHOLD {
                            if let Some(o) = old.get(k) {
                                *v = widen_value(o, v);
                            }
                        }
                    }
                    input = Some(widened);
                }
            }
            if input != solver.ins[b] {
                changed = true;
                solver.ins[b] = input;
            }
            solver.outs[b] = solver.transfer_block(b, &solver.ins[b]);
        }
        if !changed || iterations > bound * 4 {
            break;
        }
    }

    for _ in 0..NARROWING_PASSES {
        for &b in &order {
            solver.ins[b] = solver.block_input(b, false);
            solver.outs[b] = solver.transfer_block(b, &solver.ins[b]);
        }
    }

    let mut facts = IntervalFacts { iterations, iteration_bound: bound, ..Default::default() };
    for &b in &order {
        let mut state = solver.ins[b].clone();
        for instr in &cfg.blocks[b].instrs {
            let Some(env) = state else { break };
            let s = index[&instr.stmt()];
            match instr {
                Instr::Cond { arm, .. } => {
                    if let StmtKind::If { arms, .. } = &s.kind {
                        facts.arm_env.insert(arms[*arm].cond.id, env.clone());
                    }
                    if *arm == 0 {
                        facts.before.insert(s.id, env.clone());
                    }
                    state = Some(env);
                }
                Instr::Stmt { .. } => {
                    facts.before.insert(s.id, env.clone());
                    state = solver.transfer_instr(env, instr);
                    if let Some(after) = &state {
                        facts.after.insert(s.id, after.clone());
                    }
                }
            }
        }
    }
    for (&header, &loop_id) in &cfg.loop_headers {
        if let Some(env) = solver.block_input(header, true) {
            facts.loop_entry.insert(loop_id, env);
        }
        let mut exit = None;
        for x in cfg.loop_exits.get(&loop_id).into_iter().flatten() {
            exit = join_state(&exit, &solver.edge_state(x.from, x.branch));
        }
        if let Some(env) = exit {
            facts.loop_exit.insert(loop_id, env);
        }
    }
    facts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{cfg::build_cfg, stmt_index};
    use crate::lang::{parse, Program};

    fn analyze(p: &Program) -> IntervalFacts {
        interval_analysis(&build_cfg(p), &stmt_index(p))
    }

    fn int(lo: i64, hi: i64) -> AbstractValue {
        AbstractValue::IntRange(Interval::range(lo, hi))
    }

    #[test]
    fn constant_assignment() {
        let p = parse("i = 0").unwrap();
        assert_eq!(analyze(&p).value_after(p.statements[0].id, "i"), Some(&int(0, 0)));
    }

    #[test]
    fn counting_loop_exit_interval() {
        let p = parse("i = 0\nwhile i < 7:\n    i += 2").unwrap();
        let f = analyze(&p);
        assert_eq!(f.exit_value(p.statements[1].id, "i"), Some(&int(7, 8)));
        assert!(f.iterations <= f.iteration_bound, "{} > {}", f.iterations, f.iteration_bound);
    }

    #[test]
    fn input_is_any_string() {
        let p = parse("s = input()").unwrap();
        assert_eq!(analyze(&p).value_after(p.statements[0].id, "s"), Some(&AbstractValue::any_str()));
    }

    #[test]
    fn yes_no_loop_exit_is_unreachable_in_practice() {
        let p = parse(crate::fixtures::ORIGINAL_LOOP).unwrap();
        let f = analyze(&p);
        // the exit requires response == 'y' and response == 'n'
        assert!(!f.loop_exit.contains_key(&p.statements[1].id));
    }

    #[test]
    fn branch_refinement() {
        let p = parse("x = int(input())\nif x > 3 and x < 10:\n    y = x\nelse:\n    y = 0\n").unwrap();
        let f = analyze(&p);
        let StmtKind::If { arms, .. } = &p.statements[1].kind else { panic!() };
        assert_eq!(f.value_after(arms[0].body[0].id, "y"), Some(&int(4, 9)));
    }

    #[test]
    fn for_loop_variable_range() {
        let p = parse("t = 0\nfor i in range(1, 5):\n    t += i\n").unwrap();
        let f = analyze(&p);
        let StmtKind::ForRange { body, .. } = &p.statements[1].kind else { panic!() };
        assert_eq!(f.value_before(body[0].id, "i"), Some(&int(1, 4)));
    }

    #[test]
    fn string_equality_refines() {
        let p = parse("s = input()\nif s == 'a' or s == 'b':\n    t = s\n").unwrap();
        let f = analyze(&p);
        let StmtKind::If { arms, .. } = &p.statements[1].kind else { panic!() };
        let expect = AbstractValue::StrSet(Some(["a".to_string(), "b".to_string()].into()));
        assert_eq!(f.value_after(arms[0].body[0].id, "t"), Some(&expect));
    }

    #[test]
    fn widening_terminates_on_unbounded_growth() {
        let p = parse("i = 0\nj = 0\nwhile True:\n    i += 1\n    j -= 3\n").unwrap();
        let f = analyze(&p);
        assert!(f.iterations <= f.iteration_bound);
        let StmtKind::While { body, .. } = &p.statements[2].kind else { panic!() };
        assert_eq!(
            f.value_after(body[0].id, "i"),
            Some(&AbstractValue::IntRange(Interval { lo: Bound::Finite(1), hi: Bound::PosInf }))
        );
    }
}
