//! Seeded random program and condition generators for property tests.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::{classify_condition, AbstractEnv, AbstractValue, Analyses, ConditionClass, IntervalFacts, IterationBound};
use crate::interp::{compare_values, run_observed, ExecConfig, ExecStatus, Observer, ScopeView, Value};
use crate::lang::{
    parse, pretty_print, NodeId, AugOp, BinaryOp, BoolOpKind, CompareOp, ElseArm, Expr, ExprKind, IfArm, Program, SourceSpan, Stmt,
    StmtKind, UnaryOp,
};

const NAMES: &[&str] = &["a", "b", "c", "n", "i", "total", "word"];
const STR_PIECES: &[&str] = &["", "y", "n", "hello", "it's", "say \"hi\"", "back\\slash", "tab\there", "line\nbreak", "é"];
const FLOATS: &[f64] = &[0.5, 1.25, 3.0, 2.5e-7, 1e20, 10.0];
const COMPARES: [CompareOp; 6] =
    [CompareOp::Eq, CompareOp::NotEq, CompareOp::Lt, CompareOp::LtE, CompareOp::Gt, CompareOp::GtE];

fn e(kind: ExprKind) -> Expr {
    Expr::synthetic(kind)
}

fn s(kind: StmtKind) -> Stmt {
    Stmt::synthetic(kind)
}

struct Arbitrary {
    rng: StdRng,
    has_func: bool,
}

impl Arbitrary {
    fn name(&mut self) -> String {
        NAMES.choose(&mut self.rng).unwrap().to_string()
    }

    fn leaf(&mut self) -> Expr {
        match self.rng.gen_range(0..6) {
            0 => e(ExprKind::Int(self.rng.gen_range(0..1000))),
            1 => e(ExprKind::Float(*FLOATS.choose(&mut self.rng).unwrap())),
            2 => e(ExprKind::Str(STR_PIECES.choose(&mut self.rng).unwrap().to_string())),
            3 => e(ExprKind::Bool(self.rng.gen())),
            _ => e(ExprKind::Name(self.name())),
        }
    }

    fn expr(&mut self, depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.leaf();
        }
        let d = depth - 1;
        match self.rng.gen_range(0..6) {
            0 => e(ExprKind::Unary {
                op: if self.rng.gen() { UnaryOp::Neg } else { UnaryOp::Not },
                operand: Box::new(self.expr(d)),
            }),
            1 => {
                let op = *[BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::FloorDiv, BinaryOp::Mod]
                    .choose(&mut self.rng)
                    .unwrap();
                e(ExprKind::Binary { op, lhs: Box::new(self.expr(d)), rhs: Box::new(self.expr(d)) })
            }
            2 => e(ExprKind::Compare {
                op: *COMPARES.choose(&mut self.rng).unwrap(),
                lhs: Box::new(self.expr(d)),
                rhs: Box::new(self.expr(d)),
            }),
            3 => {
                let n = self.rng.gen_range(2..=3);
                e(ExprKind::BoolOp {
                    op: if self.rng.gen() { BoolOpKind::And } else { BoolOpKind::Or },
                    operands: (0..n).map(|_| self.expr(d)).collect(),
                })
            }
            4 => {
                let (callee, arity) = match self.rng.gen_range(0..5) {
                    0 => ("len", 1),
                    1 => ("int", 1),
                    2 => ("str", 1),
                    3 => ("input", self.rng.gen_range(0..=1)),
                    _ if self.has_func => ("f", 2),
                    _ => ("print", 1),
                };
                e(ExprKind::Call { callee: callee.into(), args: (0..arity).map(|_| self.expr(d)).collect() })
            }
            _ => self.leaf(),
        }
    }

    fn comment(&mut self) -> Option<String> {
        self.rng.gen_bool(0.15).then(|| [" note", " TODO: check", "", " x = 1 # nested"].choose(&mut self.rng).unwrap().to_string())
    }

    fn body(&mut self, depth: u32, in_loop: bool, in_func: bool) -> Vec<Stmt> {
        let n = self.rng.gen_range(1..=3);
        let mut out: Vec<Stmt> = (0..n).map(|_| self.stmt(depth, in_loop, in_func)).collect();
        if out.iter().all(|s| matches!(s.kind, StmtKind::Comment(_))) {
            out.push(s(StmtKind::Pass));
        }
        out
    }

    fn stmt(&mut self, depth: u32, in_loop: bool, in_func: bool) -> Stmt {
        let compound = depth > 0 && self.rng.gen_bool(0.35);
        let mut st = if compound {
            let d = depth - 1;
            match self.rng.gen_range(0..3) {
                0 => {
                    let arms = (0..self.rng.gen_range(1..=3))
                        .map(|_| IfArm {
                            cond: self.expr(2),
                            body: self.body(d, in_loop, in_func),
                            header: SourceSpan::default(),
                            header_comment: self.comment(),
                        })
                        .collect();
                    let else_body = self.rng.gen_bool(0.5).then(|| ElseArm {
                        body: self.body(d, in_loop, in_func),
                        header: SourceSpan::default(),
                        header_comment: self.comment(),
                    });
                    s(StmtKind::If { arms, else_body })
                }
                1 => s(StmtKind::While { cond: self.expr(2), body: self.body(d, true, in_func), header: SourceSpan::default() }),
                _ => {
                    let args = self.rng.gen_range(1..=3);
                    let stop_first = self.expr(1);
                    let (start, stop, step) = match args {
                        1 => (None, stop_first, None),
                        2 => (Some(stop_first), self.expr(1), None),
                        _ => (Some(stop_first), self.expr(1), Some(self.expr(1))),
                    };
                    s(StmtKind::ForRange {
                        var: self.name(),
                        start,
                        stop,
                        step,
                        body: self.body(d, true, in_func),
                        header: SourceSpan::default(),
                    })
                }
            }
        } else {
            match self.rng.gen_range(0..10) {
                0 | 1 => s(StmtKind::Assign { target: self.name(), value: self.expr(3) }),
                2 => s(StmtKind::AugAssign {
                    target: self.name(),
                    op: *[AugOp::Add, AugOp::Sub, AugOp::Mul, AugOp::FloorDiv, AugOp::Mod].choose(&mut self.rng).unwrap(),
                    value: self.expr(2),
                }),
                3 => s(StmtKind::Expr(e(ExprKind::Call {
                    callee: "print".into(),
                    args: (0..self.rng.gen_range(0..=3)).map(|_| self.expr(2)).collect(),
                }))),
                4 => s(StmtKind::Expr(self.expr(2))),
                5 => s(StmtKind::Pass),
                6 => s(StmtKind::Assert {
                    cond: self.expr(2),
                    message: self.rng.gen_bool(0.3).then(|| e(ExprKind::Str("failed".into()))),
                }),
                7 => s(StmtKind::Comment([" a comment", "", "# double", " [inq:0000] not a marker"].choose(&mut self.rng).unwrap().to_string())),
                8 if in_loop => s(if self.rng.gen() { StmtKind::Break } else { StmtKind::Continue }),
                9 if in_func => s(StmtKind::Return(self.rng.gen_bool(0.7).then(|| self.expr(2)))),
                _ => s(StmtKind::Assign { target: self.name(), value: self.leaf() }),
            }
        };
        if !matches!(st.kind, StmtKind::Comment(_)) {
            st.trailing_comment = self.comment();
        }
        st
    }
}

/// A random syntactically valid program, built as a tree and printed.
pub fn arbitrary_program(seed: u64) -> String {
    let mut g = Arbitrary { rng: StdRng::seed_from_u64(seed), has_func: false };
    let mut statements = Vec::new();
    if g.rng.gen_bool(0.4) {
        g.has_func = true;
        statements.push(s(StmtKind::FuncDef {
            name: "f".into(),
            params: vec!["p".into(), "q".into()],
            body: g.body(2, false, true),
            header: SourceSpan::default(),
        }));
    }
    for _ in 0..g.rng.gen_range(1..=6) {
        statements.push(g.stmt(3, false, false));
    }
    pretty_print(&Program { statements })
}

struct Closed {
    rng: StdRng,
    out: String,
    vars: Vec<String>,
    loop_vars: usize,
}

impl Closed {
    fn line(&mut self, indent: usize, text: &str) {
        self.out.push_str(&"    ".repeat(indent));
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn var(&mut self) -> String {
        self.vars.choose(&mut self.rng).unwrap().clone()
    }

    fn small(&mut self) -> i64 {
        self.rng.gen_range(-6..=12)
    }

    fn operand(&mut self) -> String {
        if self.rng.gen_bool(0.6) {
            self.var()
        } else {
            self.small().to_string()
        }
    }

    fn int_expr(&mut self) -> String {
        let a = self.operand();
        match self.rng.gen_range(0..6) {
            0 => a,
            1 => format!("{a} + {}", self.operand()),
            2 => format!("{a} - {}", self.operand()),
            3 => format!("{a} // {}", self.rng.gen_range(1..=4)),
            4 => format!("{a} % {}", self.rng.gen_range(1..=5)),
            _ => format!("{a} * {}", self.rng.gen_range(-2..=2)),
        }
    }

    fn cond(&mut self) -> String {
        let one = |g: &mut Closed| {
            let op = COMPARES.choose(&mut g.rng).unwrap().symbol();
            let lhs = g.var();
            let rhs = g.operand();
            format!("{lhs} {op} {rhs}")
        };
        match self.rng.gen_range(0..4) {
            0 => format!("{} and {}", one(self), one(self)),
            1 => format!("{} or {}", one(self), one(self)),
            2 => format!("not {}", one(self)),
            _ => one(self),
        }
    }

    fn block(&mut self, indent: usize, depth: u32, in_loop: bool) {
        for _ in 0..self.rng.gen_range(1..=3) {
            self.stmt(indent, depth, in_loop);
        }
    }

    fn stmt(&mut self, indent: usize, depth: u32, in_loop: bool) {
        let choice = if depth == 0 { self.rng.gen_range(0..4) } else { self.rng.gen_range(0..8) };
        match choice {
            0 | 1 => {
                let v = self.var();
                let x = self.int_expr();
                self.line(indent, &format!("{v} = {x}"));
            }
            2 => {
                let x = self.int_expr();
                self.line(indent, &format!("print({x})"));
            }
            3 if in_loop && self.rng.gen_bool(0.3) => {
                let c = self.cond();
                self.line(indent, &format!("if {c}:"));
                let exit = if self.rng.gen() { "break" } else { "continue" };
                self.line(indent + 1, exit);
            }
            3 => {
                let v = self.var();
                let k = self.rng.gen_range(1..=3);
                self.line(indent, &format!("{v} += {k}"));
            }
            4 | 5 => {
                let c = self.cond();
                self.line(indent, &format!("if {c}:"));
                self.block(indent + 1, depth - 1, in_loop);
                if self.rng.gen() {
                    let c = self.cond();
                    self.line(indent, &format!("elif {c}:"));
                    self.block(indent + 1, depth - 1, in_loop);
                }
                if self.rng.gen() {
                    self.line(indent, "else:");
                    self.block(indent + 1, depth - 1, in_loop);
                }
            }
            6 => {
                let v = format!("k{}", self.loop_vars);
                self.loop_vars += 1;
                let (a, b) = (self.rng.gen_range(-3..=4), self.rng.gen_range(-2..=8));
                let header = match self.rng.gen_range(0..3) {
                    0 => format!("for {v} in range({b}):"),
                    1 => format!("for {v} in range({a}, {b}):"),
                    _ => format!("for {v} in range({b}, {a}, -{}):", self.rng.gen_range(1..=2)),
                };
                self.line(indent, &header);
                self.vars.push(v.clone());
                self.block(indent + 1, depth - 1, true);
                self.vars.retain(|x| *x != v);
            }
            _ => {
                let w = format!("w{}", self.loop_vars);
                self.loop_vars += 1;
                let start = self.rng.gen_range(-4..=3);
                let stop = self.rng.gen_range(-2..=10);
                let step = self.rng.gen_range(1..=3);
                self.line(indent, &format!("{w} = {start}"));
                let up = self.rng.gen_bool(0.7);
                if up {
                    self.line(indent, &format!("while {w} < {stop}:"));
                } else {
                    self.line(indent, &format!("while {w} > {}:", start - stop));
                }
                self.block(indent + 1, depth - 1, true);
                self.line(indent + 1, &format!("{w} {} {step}", if up { "+=" } else { "-=" }));
                self.vars.push(w);
            }
        }
    }
}

/// A program with no input whose loops all have constant bounds, so it
/// normally completes quickly. Runtime errors are still possible.
pub fn closed_program(seed: u64) -> String {
    let mut g = Closed { rng: StdRng::seed_from_u64(seed), out: String::new(), vars: Vec::new(), loop_vars: 0 };
    if g.rng.gen_bool(0.3) {
        g.line(0, "def g(p):");
        g.line(1, "t = 0");
        g.line(1, "for m in range(p):");
        g.line(2, "t += m");
        g.line(1, "return t");
    }
    for v in ["a", "b", "c"] {
        let x = g.small();
        g.line(0, &format!("{v} = {x}"));
        g.vars.push(v.to_string());
    }
    if g.out.starts_with("def") {
        let arg = g.rng.gen_range(0..6);
        g.line(0, &format!("c = g({arg})"));
    }
    for _ in 0..g.rng.gen_range(2..=5) {
        g.stmt(0, 2, false);
    }
    g.out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarType {
    Int,
    Str,
}

/// A condition over up to three typed variables.
#[derive(Debug, Clone)]
pub struct ConditionCase {
    pub text: String,
    pub vars: Vec<(String, VarType)>,
}

/// A random condition with at most three variables and six literals.
pub fn random_condition(seed: u64) -> ConditionCase {
    let mut rng = StdRng::seed_from_u64(seed);
    let nvars = rng.gen_range(1..=3);
    let vars: Vec<(String, VarType)> = ["x", "y", "z"][..nvars]
        .iter()
        .map(|n| (n.to_string(), if rng.gen_bool(0.7) { VarType::Int } else { VarType::Str }))
        .collect();
    let mut literals = 0;
    fn atom(rng: &mut StdRng, vars: &[(String, VarType)], literals: &mut usize) -> String {
        let (name, ty) = vars.choose(rng).unwrap().clone();
        let use_literal = *literals < 6 && (vars.len() == 1 || rng.gen_bool(0.7));
        if use_literal {
            *literals += 1;
            let cross = rng.gen_bool(0.1);
            let lit = match (ty, cross) {
                (VarType::Int, false) | (VarType::Str, true) => rng.gen_range(-5..=15).to_string(),
                _ => format!("'{}'", ["a", "b", "yes", ""].choose(rng).unwrap()),
            };
            let op = if ty == VarType::Str || cross {
                *[CompareOp::Eq, CompareOp::NotEq].choose(rng).unwrap()
            } else {
                *COMPARES.choose(rng).unwrap()
            };
            if rng.gen_bool(0.2) {
                format!("{lit} {} {name}", op.flipped().symbol())
            } else {
                format!("{name} {} {lit}", op.symbol())
            }
        } else {
            let same: Vec<&(String, VarType)> = vars.iter().filter(|(_, t)| *t == ty).collect();
            let (other, _) = same.choose(rng).unwrap();
            let op = if ty == VarType::Str {
                *[CompareOp::Eq, CompareOp::NotEq].choose(rng).unwrap()
            } else {
                *COMPARES.choose(rng).unwrap()
            };
            format!("{name} {} {other}", op.symbol())
        }
    }
    fn build(rng: &mut StdRng, vars: &[(String, VarType)], literals: &mut usize, depth: u32) -> String {
        if depth == 0 || rng.gen_bool(0.35) {
            return atom(rng, vars, literals);
        }
        match rng.gen_range(0..5) {
            0 => format!("not ({})", build(rng, vars, literals, depth - 1)),
            1 | 2 => format!("({}) and ({})", build(rng, vars, literals, depth - 1), build(rng, vars, literals, depth - 1)),
            _ => format!("({}) or ({})", build(rng, vars, literals, depth - 1), build(rng, vars, literals, depth - 1)),
        }
    }
    let text = build(&mut rng, &vars, &mut literals, 3);
    ConditionCase { text, vars }
}

/// Conditions from the rule catalog's triggers and near misses, with `x`
/// and `y` integers and `r` a string.
pub fn catalog_conditions() -> Vec<ConditionCase> {
    const TEXTS: &[&str] = &[
        "r != 'y' or r != 'n'",
        "r != 'y' and r != 'n'",
        "r == 'y' and r == 'n'",
        "r == 'y' or r == 'n'",
        "not (r == 'y' or r == 'n')",
        "x > 5 or x < 10",
        "x > 10 and x < 5",
        "x > 0 and x < 10",
        "x >= 0 or x < 0",
        "x == 1 or x != 1",
        "x != 1 or x != 2",
        "x != 1 and x != 2",
        "x < 10",
        "x >= 90",
        "not (x == 3)",
        "x == 'y'",
        "r == 5",
        "r != 5",
        "x < x",
        "x <= x",
        "x < y or x >= y",
        "x < y and y < x",
        "x > 0 and y > 0",
        "True",
        "False",
        "not True",
        "True or x > 3",
        "False and x > 3",
        "1 < 2",
    ];
    TEXTS
        .iter()
        .map(|t| {
            let code: String = t.split('\'').step_by(2).collect::<Vec<_>>().join(" ");
            let vars = [("x", VarType::Int), ("y", VarType::Int), ("r", VarType::Str)]
                .into_iter()
                .filter(|(n, _)| code.split(|c: char| !c.is_alphanumeric()).any(|w| w == *n))
                .map(|(n, ty)| (n.to_string(), ty))
                .collect();
            ConditionCase { text: t.to_string(), vars }
        })
        .collect()
}

/// Outcome of `parse(pretty_print(parse(src)))` compared with `parse(src)`.
pub fn round_trips(src: &str) -> Result<bool, String> {
    let p1 = parse(src).map_err(|e| format!("{e:?}"))?;
    let printed = pretty_print(&p1);
    let p2 = parse(&printed).map_err(|e| format!("reprint does not parse: {e:?}\n{printed}"))?;
    Ok(p1.structurally_eq(&p2))
}

struct SoundnessObserver<'a> {
    facts: &'a IntervalFacts,
    violations: Vec<String>,
}

impl SoundnessObserver<'_> {
    fn check(&mut self, at: &str, env: Option<&AbstractEnv>, scope: &ScopeView<'_>) {
        let Some(env) = env else {
            self.violations.push(format!("{at}: executed but analysed as unreachable"));
            return;
        };
        for (name, v) in scope.vars {
            match env.get(name) {
                Some(av) if av.contains(v) => {}
                other => self.violations.push(format!("{at}: {name} = {v:?} outside {other:?}")),
            }
        }
    }
}

impl Observer for SoundnessObserver<'_> {
    fn before_stmt(&mut self, stmt: &Stmt, scope: &ScopeView<'_>) {
        if matches!(stmt.kind, StmtKind::Comment(_) | StmtKind::FuncDef { .. }) {
            return;
        }
        let env = match stmt.kind {
            StmtKind::ForRange { .. } => self.facts.loop_entry.get(&stmt.id),
            _ => self.facts.before.get(&stmt.id),
        };
        let at = format!("before {} (line {})", stmt.id, stmt.span.start_line);
        self.check(&at, env, scope);
    }

    fn loop_exit(&mut self, loop_id: NodeId, scope: &ScopeView<'_>) {
        let env = self.facts.loop_exit.get(&loop_id);
        self.check(&format!("exit of {loop_id}"), env, scope);
    }
}

/// Run `program` with `budget` steps and compare every observed value and
/// loop count with the analysis. `None` if the run does not complete.
pub fn soundness_violations(program: &Program, budget: u64) -> Option<Vec<String>> {
    let analyses = Analyses::new(program);
    let mut obs = SoundnessObserver { facts: &analyses.intervals, violations: Vec::new() };
    let result = run_observed(program, &ExecConfig::default().budget(budget), &mut obs);
    if result.status != ExecStatus::Completed {
        return None;
    }
    let mut violations = obs.violations;
    for (id, stats) in &result.loop_stats {
        let bound = analyses.bound(*id).unwrap_or(IterationBound::Unknown);
        for n in [stats.min_per_entry, stats.max_per_entry].into_iter().flatten() {
            if !bound.admits(n) {
                violations.push(format!("loop {id}: ran {n} times, bound {bound}"));
            }
        }
    }
    Some(violations)
}

fn eval_concrete(e: &Expr, env: &BTreeMap<&str, Value>) -> Option<Value> {
    Some(match &e.kind {
        ExprKind::Int(v) => Value::Int(*v),
        ExprKind::Str(v) => Value::Str(v.clone()),
        ExprKind::Bool(v) => Value::Bool(*v),
        ExprKind::Name(n) => env.get(n.as_str())?.clone(),
        ExprKind::Unary { op: UnaryOp::Not, operand } => Value::Bool(!eval_concrete(operand, env)?.truthy()),
        ExprKind::Unary { op: UnaryOp::Neg, operand } => match eval_concrete(operand, env)? {
            Value::Int(v) => Value::Int(v.checked_neg()?),
            _ => return None,
        },
        ExprKind::Compare { op, lhs, rhs } => {
            Value::Bool(compare_values(*op, &eval_concrete(lhs, env)?, &eval_concrete(rhs, env)?).ok()?)
        }
        ExprKind::BoolOp { op, operands } => {
            let mut last = Value::Bool(*op == BoolOpKind::And);
            for o in operands {
                last = eval_concrete(o, env)?;
                if last.truthy() == (*op == BoolOpKind::Or) {
                    break;
                }
            }
            last
        }
        _ => return None,
    })
}

/// Exhaustive evaluation of a generated condition over a value grid wide
/// enough to cover every ordering of the variables and literals.
pub fn brute_force_class(case: &ConditionCase) -> ConditionClass {
    let cond = condition_expr(&case.text);
    let mut ints = Vec::new();
    let mut strs = BTreeSet::new();
    cond.walk(&mut |e| match &e.kind {
        ExprKind::Int(v) => ints.extend([*v, -*v]),
        ExprKind::Str(v) => {
            strs.insert(v.clone());
        }
        _ => {}
    });
    let lo = ints.iter().min().copied().unwrap_or(0) - 4;
    let hi = ints.iter().max().copied().unwrap_or(0) + 4;
    let int_grid: Vec<Value> = (lo..=hi).map(Value::Int).collect();
    let mut str_grid: Vec<Value> = strs.into_iter().map(Value::Str).collect();
    str_grid.extend(["#p", "#q", "#r"].map(|s| Value::Str(s.to_string())));

    let (mut seen_true, mut seen_false) = (false, false);
    let mut idx = vec![0usize; case.vars.len()];
    let grid = |t: VarType| if t == VarType::Int { &int_grid } else { &str_grid };
    'outer: loop {
        let env: BTreeMap<&str, Value> =
            case.vars.iter().zip(&idx).map(|((n, t), i)| (n.as_str(), grid(*t)[*i].clone())).collect();
        match eval_concrete(&cond, &env) {
            Some(v) if v.truthy() => seen_true = true,
            Some(_) => seen_false = true,
            None => return ConditionClass::Undecided,
        }
        for (k, (_, t)) in case.vars.iter().enumerate() {
            idx[k] += 1;
            if idx[k] < grid(*t).len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    match (seen_true, seen_false) {
        (true, false) => ConditionClass::Tautology,
        (false, true) => ConditionClass::Contradiction,
        _ => ConditionClass::Contingent,
    }
}

/// The classifier's verdict for a generated condition, with each variable
/// unconstrained within its type.
pub fn classifier_class(case: &ConditionCase) -> ConditionClass {
    let cond = condition_expr(&case.text);
    let env: AbstractEnv = case
        .vars
        .iter()
        .map(|(n, t)| (n.clone(), if *t == VarType::Int { AbstractValue::any_int() } else { AbstractValue::any_str() }))
        .collect();
    classify_condition(&cond, &env)
}

fn condition_expr(text: &str) -> Expr {
    let p = parse(&format!("if {text}:\n    pass\n")).expect("generated condition parses");
    match p.statements.into_iter().next().map(|s| s.kind) {
        Some(StmtKind::If { mut arms, .. }) => arms.remove(0).cond,
        _ => unreachable!("an if statement"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    #[test]
    fn catalog_conditions_agree() {
        for c in catalog_conditions() {
            assert_eq!(classifier_class(&c), brute_force_class(&c), "{}", c.text);
        }
    }

    #[test]
    fn generated_text_parses() {
        for seed in 0..200 {
            let src = arbitrary_program(seed);
            assert!(parse(&src).is_ok(), "seed {seed}:\n{src}\n{:?}", parse(&src).err());
            let closed = closed_program(seed);
            let p = parse(&closed).unwrap_or_else(|e| panic!("seed {seed}:\n{closed}\n{e:?}"));
            assert!(!p.uses_input());
            let c = random_condition(seed);
            assert!(parse(&format!("if {}:\n    pass\n", c.text)).is_ok(), "{}", c.text);
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(arbitrary_program(7), arbitrary_program(7));
        assert_eq!(closed_program(7), closed_program(7));
        assert_eq!(random_condition(7).text, random_condition(7).text);
    }

    #[test]
    fn oracles_smoke() {
        let mut done = 0;
        for seed in 0..300 {
            let p = parse(&closed_program(seed)).unwrap();
            if let Some(v) = soundness_violations(&p, 100_000) {
                done += 1;
                assert!(v.is_empty(), "seed {seed}:\n{}\n{v:#?}", closed_program(seed));
            }
            assert_eq!(round_trips(&arbitrary_program(seed)), Ok(true), "seed {seed}");
            let c = random_condition(seed);
            assert_eq!(classifier_class(&c), brute_force_class(&c), "seed {seed}: {}", c.text);
        }
        assert!(done > 150, "{done}");
    }
}
