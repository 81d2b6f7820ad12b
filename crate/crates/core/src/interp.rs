//! Bounded tree-walking interpreter.
//!
//! Used as ground truth everywhere else: loop counts for questions,
//! counterexample search for explanations, and transparency checks for
//! inserted assertions. Nothing here touches real I/O.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{
    AugOp, BinaryOp, BoolOpKind, CompareOp, Expr, ExprKind, NodeId, Program, SourceSpan, Stmt, StmtKind, UnaryOp,
};

pub const DEFAULT_STEP_BUDGET: u64 = 100_000;
pub const DEFAULT_MAX_OUTPUT_BYTES: usize = 65_536;
const MAX_CALL_DEPTH: usize = 64;
const MAX_STRING_CHARS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Str(_) => "str",
            Value::Bool(_) => "bool",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Int(v) => *v != 0,
            Value::Float(v) => *v != 0.0,
            Value::Str(s) => !s.is_empty(),
            Value::Bool(b) => *b,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => f.write_str(&format_float(*v)),
            Value::Str(s) => f.write_str(s),
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
        }
    }
}

/// Render a float the way Python's `repr` does.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{:e}", v.abs());
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if v < 0.0 { "-" } else { "" };
    if (-4..16).contains(&exp) {
        let point = exp + 1;
        let body = if point <= 0 {
            format!("0.{}{}", "0".repeat((-point) as usize), digits)
        } else if point as usize >= digits.len() {
            format!("{}{}.0", digits, "0".repeat(point as usize - digits.len()))
        } else {
            format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
        };
        format!("{sign}{body}")
    } else {
        let exp_sign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{mantissa}e{exp_sign}{:02}", exp.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecConfig {
    pub step_budget: u64,
    pub input_queue: Vec<String>,
    pub max_output_bytes: usize,
    /// Restart the input queue from its first line once it runs out,
    /// instead of stopping with `InputExhausted`. Experiments use this.
    #[serde(default)]
    pub cycle_inputs: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            step_budget: DEFAULT_STEP_BUDGET,
            input_queue: Vec::new(),
            max_output_bytes: DEFAULT_MAX_OUTPUT_BYTES,
            cycle_inputs: false,
        }
    }
}

impl ExecConfig {
    pub fn with_inputs<S: Into<String>>(inputs: impl IntoIterator<Item = S>) -> Self {
        ExecConfig { input_queue: inputs.into_iter().map(Into::into).collect(), ..Default::default() }
    }

    pub fn budget(mut self, steps: u64) -> Self {
        self.step_budget = steps.max(1);
        self
    }

    pub fn cycling(mut self) -> Self {
        self.cycle_inputs = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuntimeErrorKind {
    DivisionByZero,
    IntOverflow,
    TypeMismatch,
    BadIntParse,
    UnknownName,
    /// `range()` with a step of zero.
    BadRangeStep,
    /// Call depth or string size beyond the interpreter's limits.
    ResourceLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum ExecStatus {
    Completed,
    BudgetExhausted,
    RuntimeError { kind: RuntimeErrorKind, span: SourceSpan, message: String },
    InputExhausted { span: SourceSpan },
    AssertionFailed { span: SourceSpan, message: String },
    OutputTruncated,
}

/// Per-loop iteration statistics. An *entry* is one arrival at the loop
/// from outside; iterations are counted per entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoopStats {
    pub entries: u64,
    pub total: u64,
    /// Smallest and largest iteration counts over finished entries.
    pub min_per_entry: Option<u64>,
    pub max_per_entry: Option<u64>,
    /// Iterations of the entry still running when execution stopped.
    pub in_progress: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BranchStats {
    pub evaluated: u64,
    pub taken: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecResult {
    pub status: ExecStatus,
    pub stdout: String,
    /// Total body executions per loop whose header was reached.
    pub loop_counts: BTreeMap<NodeId, u64>,
    pub loop_stats: BTreeMap<NodeId, LoopStats>,
    /// Keyed by the condition expression of each `if`/`elif` arm.
    pub branch_counts: BTreeMap<NodeId, BranchStats>,
    /// Keyed by comparison expression: how often it was true / false.
    pub compare_counts: BTreeMap<NodeId, (u64, u64)>,
    pub steps_used: u64,
    pub final_env: BTreeMap<String, Value>,
}

/// Read-only view of the variables visible at a program point.
pub struct ScopeView<'a> {
    /// `None` at top level, otherwise the function being executed.
    pub function: Option<&'a str>,
    pub vars: &'a BTreeMap<String, Value>,
}

/// Hooks for watching an execution, e.g. to check analysis soundness.
pub trait Observer {
    fn before_stmt(&mut self, _stmt: &Stmt, _scope: &ScopeView<'_>) {}
    fn loop_exit(&mut self, _loop_id: NodeId, _scope: &ScopeView<'_>) {}
}

struct NoObserver;
impl Observer for NoObserver {}

pub fn run(program: &Program, config: &ExecConfig) -> ExecResult {
    run_observed(program, config, &mut NoObserver)
}

pub fn run_observed(program: &Program, config: &ExecConfig, observer: &mut dyn Observer) -> ExecResult {
    let mut m = Machine {
        config,
        observer,
        steps: 0,
        stdout: String::new(),
        input_pos: 0,
        globals: BTreeMap::new(),
        frames: Vec::new(),
        functions: BTreeMap::new(),
        loop_stats: BTreeMap::new(),
        active_loops: Vec::new(),
        branch_counts: BTreeMap::new(),
        compare_counts: BTreeMap::new(),
    };
    let status = match m.exec_block(&program.statements) {
        Ok(_) => ExecStatus::Completed,
        Err(Halt(status)) => status,
    };
    for (id, count) in std::mem::take(&mut m.active_loops) {
        let stats = m.loop_stats.entry(id).or_default();
        stats.in_progress = Some(stats.in_progress.map_or(count, |c| c.min(count)));
    }
    ExecResult {
        status,
        stdout: m.stdout,
        loop_counts: m.loop_stats.iter().map(|(k, v)| (*k, v.total)).collect(),
        loop_stats: m.loop_stats,
        branch_counts: m.branch_counts,
        compare_counts: m.compare_counts,
        steps_used: m.steps,
        final_env: m.globals,
    }
}

pub(crate) struct Halt(ExecStatus);

pub(crate) type Exec<T> = Result<T, Halt>;

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Option<Value>),
}

struct Frame<'p> {
    name: &'p str,
    locals: BTreeMap<String, Value>,
    local_names: BTreeSet<&'p str>,
}

struct Function<'p> {
    params: &'p [String],
    body: &'p [Stmt],
    local_names: BTreeSet<&'p str>,
}

struct Machine<'p, 'c> {
    config: &'c ExecConfig,
    observer: &'c mut dyn Observer,
    steps: u64,
    stdout: String,
    input_pos: usize,
    globals: BTreeMap<String, Value>,
    frames: Vec<Frame<'p>>,
    functions: BTreeMap<&'p str, Function<'p>>,
    loop_stats: BTreeMap<NodeId, LoopStats>,
    active_loops: Vec<(NodeId, u64)>,
    branch_counts: BTreeMap<NodeId, BranchStats>,
    compare_counts: BTreeMap<NodeId, (u64, u64)>,
}

fn error<T>(kind: RuntimeErrorKind, span: SourceSpan, message: impl Into<String>) -> Exec<T> {
    Err(Halt(ExecStatus::RuntimeError { kind, span, message: message.into() }))
}

/// Names assigned anywhere in a function body (its locals, with params).
fn assigned_names<'p>(body: &'p [Stmt], out: &mut BTreeSet<&'p str>) {
    for s in body {
        s.walk(&mut |st| match &st.kind {
            StmtKind::Assign { target, .. } | StmtKind::AugAssign { target, .. } => {
                out.insert(target.as_str());
            }
            StmtKind::ForRange { var, .. } => {
                out.insert(var.as_str());
            }
            _ => {}
        });
    }
}

fn scope_view<'a>(frames: &'a [Frame<'_>], globals: &'a BTreeMap<String, Value>) -> ScopeView<'a> {
    match frames.last() {
        Some(f) => ScopeView { function: Some(f.name), vars: &f.locals },
        None => ScopeView { function: None, vars: globals },
    }
}

impl<'p, 'c> Machine<'p, 'c> {
    fn tick(&mut self) -> Exec<()> {
        if self.steps >= self.config.step_budget {
            return Err(Halt(ExecStatus::BudgetExhausted));
        }
        self.steps += 1;
        Ok(())
    }

    fn lookup(&self, name: &str, span: SourceSpan) -> Exec<Value> {
        if let Some(frame) = self.frames.last() {
            if frame.local_names.contains(name) {
                return match frame.locals.get(name) {
                    Some(v) => Ok(v.clone()),
                    None => error(
                        RuntimeErrorKind::UnknownName,
                        span,
                        format!("local variable '{name}' used before assignment"),
                    ),
                };
            }
        }
        match self.globals.get(name) {
            Some(v) => Ok(v.clone()),
            None => error(RuntimeErrorKind::UnknownName, span, format!("name '{name}' is not defined")),
        }
    }

    fn store(&mut self, name: &str, value: Value) {
        match self.frames.last_mut() {
            Some(f) => f.locals.insert(name.to_string(), value),
            None => self.globals.insert(name.to_string(), value),
        };
    }

    fn exec_block(&mut self, stmts: &'p [Stmt]) -> Exec<Flow> {
        for s in stmts {
            match self.exec(s)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec(&mut self, s: &'p Stmt) -> Exec<Flow> {
        if matches!(s.kind, StmtKind::Comment(_)) {
            return Ok(Flow::Normal);
        }
        self.observer.before_stmt(s, &scope_view(&self.frames, &self.globals));
        match &s.kind {
            StmtKind::While { cond, body, .. } => return self.exec_while(s.id, cond, body),
            StmtKind::ForRange { var, start, stop, step, body, .. } => {
                return self.exec_for(s, var, start.as_ref(), stop, step.as_ref(), body)
            }
            _ => {}
        }
        self.tick()?;
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let v = self.eval_value(value)?;
                self.store(target, v);
            }
            StmtKind::AugAssign { target, op, value } => {
                let current = self.lookup(target, s.span)?;
                let rhs = self.eval_value(value)?;
                let v = self.binary(op_of(*op), current, rhs, s.span)?;
                self.store(target, v);
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
            }
            StmtKind::If { arms, else_body } => {
                for arm in arms {
                    let taken = self.eval_value(&arm.cond)?.truthy();
                    let stats = self.branch_counts.entry(arm.cond.id).or_default();
                    stats.evaluated += 1;
                    if taken {
                        stats.taken += 1;
                        return self.exec_block(&arm.body);
                    }
                }
                if let Some(e) = else_body {
                    return self.exec_block(&e.body);
                }
            }
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Pass => {}
            StmtKind::Return(v) => {
                let value = match v {
                    Some(e) => self.eval(e)?,
                    None => None,
                };
                return Ok(Flow::Return(value));
            }
            StmtKind::FuncDef { name, params, body, .. } => {
                let mut local_names: BTreeSet<&str> = params.iter().map(String::as_str).collect();
                assigned_names(body, &mut local_names);
                self.functions.insert(name, Function { params, body, local_names });
            }
            StmtKind::Assert { cond, message } => {
                if !self.eval_value(cond)?.truthy() {
                    let message = match message {
                        Some(m) => self.eval_value(m)?.to_string(),
                        None => String::new(),
                    };
                    return Err(Halt(ExecStatus::AssertionFailed { span: s.span, message }));
                }
            }
            StmtKind::Comment(_) | StmtKind::While { .. } | StmtKind::ForRange { .. } => unreachable!(),
        }
        Ok(Flow::Normal)
    }

    fn enter_loop(&mut self, id: NodeId) {
        self.loop_stats.entry(id).or_default().entries += 1;
        self.active_loops.push((id, 0));
    }

    fn count_iteration(&mut self, id: NodeId) {
        self.loop_stats.entry(id).or_default().total += 1;
        if let Some(top) = self.active_loops.last_mut() {
            top.1 += 1;
        }
    }

    fn leave_loop(&mut self, id: NodeId) {
        let (_, count) = self.active_loops.pop().expect("loop stack underflow");
        let stats = self.loop_stats.entry(id).or_default();
        stats.min_per_entry = Some(stats.min_per_entry.map_or(count, |m| m.min(count)));
        stats.max_per_entry = Some(stats.max_per_entry.map_or(count, |m| m.max(count)));
        self.observer.loop_exit(id, &scope_view(&self.frames, &self.globals));
    }

    fn exec_while(&mut self, id: NodeId, cond: &'p Expr, body: &'p [Stmt]) -> Exec<Flow> {
        self.enter_loop(id);
        loop {
            self.tick()?;
            if !self.eval_value(cond)?.truthy() {
                break;
            }
            self.count_iteration(id);
            match self.exec_block(body)? {
                Flow::Normal | Flow::Continue => {}
                Flow::Break => break,
                ret @ Flow::Return(_) => {
                    self.active_loops.pop();
                    return Ok(ret);
                }
            }
        }
        self.leave_loop(id);
        Ok(Flow::Normal)
    }

    fn int_arg(&mut self, e: &'p Expr) -> Exec<i64> {
        match self.eval_value(e)? {
            Value::Int(v) => Ok(v),
            other => error(
                RuntimeErrorKind::TypeMismatch,
                e.span,
                format!("range() needs whole numbers, got {}", other.type_name()),
            ),
        }
    }

    fn exec_for(
        &mut self,
        s: &'p Stmt,
        var: &str,
        start: Option<&'p Expr>,
        stop: &'p Expr,
        step: Option<&'p Expr>,
        body: &'p [Stmt],
    ) -> Exec<Flow> {
        let start_v = match start {
            Some(e) => self.int_arg(e)?,
            None => 0,
        };
        let stop_v = self.int_arg(stop)?;
        let step_v = match step {
            Some(e) => self.int_arg(e)?,
            None => 1,
        };
        if step_v == 0 {
            return error(RuntimeErrorKind::BadRangeStep, s.header_span(), "range() step must not be zero");
        }
        self.enter_loop(s.id);
        let mut current = start_v as i128;
        loop {
            self.tick()?;
            let more = if step_v > 0 { current < stop_v as i128 } else { current > stop_v as i128 };
            if !more {
                break;
            }
            self.store(var, Value::Int(current as i64));
            self.count_iteration(s.id);
            match self.exec_block(body)? {
                Flow::Normal | Flow::Continue => {}
                Flow::Break => break,
                ret @ Flow::Return(_) => {
                    self.active_loops.pop();
                    return Ok(ret);
                }
            }
            current += step_v as i128;
        }
        self.leave_loop(s.id);
        Ok(Flow::Normal)
    }

    fn eval_value(&mut self, e: &'p Expr) -> Exec<Value> {
        match self.eval(e)? {
            Some(v) => Ok(v),
            None => error(RuntimeErrorKind::TypeMismatch, e.span, "this call does not produce a value"),
        }
    }

    /// `None` only for calls that return nothing.
    fn eval(&mut self, e: &'p Expr) -> Exec<Option<Value>> {
        let v = match &e.kind {
            ExprKind::Int(v) => Value::Int(*v),
            ExprKind::Float(v) => Value::Float(*v),
            ExprKind::Str(s) => Value::Str(s.clone()),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Name(n) => self.lookup(n, e.span)?,
            ExprKind::Unary { op: UnaryOp::Not, operand } => Value::Bool(!self.eval_value(operand)?.truthy()),
            ExprKind::Unary { op: UnaryOp::Neg, operand } => match self.eval_value(operand)? {
                Value::Int(v) => match v.checked_neg() {
                    Some(n) => Value::Int(n),
                    None => return error(RuntimeErrorKind::IntOverflow, e.span, "integer overflow"),
                },
                Value::Float(v) => Value::Float(-v),
                other => {
                    return error(
                        RuntimeErrorKind::TypeMismatch,
                        e.span,
                        format!("cannot negate a {}", other.type_name()),
                    )
                }
            },
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval_value(lhs)?;
                let r = self.eval_value(rhs)?;
                self.binary(*op, l, r, e.span)?
            }
            ExprKind::Compare { op, lhs, rhs } => {
                let l = self.eval_value(lhs)?;
                let r = self.eval_value(rhs)?;
                let result = compare(*op, &l, &r, e.span)?;
                let counts = self.compare_counts.entry(e.id).or_default();
                if result {
                    counts.0 += 1;
                } else {
                    counts.1 += 1;
                }
                Value::Bool(result)
            }
            ExprKind::BoolOp { op, operands } => {
                let mut last = None;
                for o in operands {
                    let v = self.eval_value(o)?;
                    let decided = match op {
                        BoolOpKind::And => !v.truthy(),
                        BoolOpKind::Or => v.truthy(),
                    };
                    last = Some(v);
                    if decided {
                        break;
                    }
                }
                last.expect("boolean operator without operands")
            }
            ExprKind::Call { callee, args } => return self.call(callee, args, e.span),
        };
        Ok(Some(v))
    }

    fn binary(&self, op: BinaryOp, l: Value, r: Value, span: SourceSpan) -> Exec<Value> {
        use Value::*;
        let overflow = || error(RuntimeErrorKind::IntOverflow, span, "integer overflow");
        let mismatch = |l: &Value, r: &Value| {
            error(
                RuntimeErrorKind::TypeMismatch,
                span,
                format!("unsupported operand types for {}: {} and {}", op.symbol(), l.type_name(), r.type_name()),
            )
        };
        match (op, &l, &r) {
            (BinaryOp::Add, Str(a), Str(b)) => {
                if a.chars().count() + b.chars().count() > MAX_STRING_CHARS {
                    return error(RuntimeErrorKind::ResourceLimit, span, "string too long");
                }
                Ok(Str(format!("{a}{b}")))
            }
            (BinaryOp::Mul, Str(s), Int(n)) | (BinaryOp::Mul, Int(n), Str(s)) => {
                let n = (*n).max(0) as u128;
                if n * s.chars().count() as u128 > MAX_STRING_CHARS as u128 {
                    return error(RuntimeErrorKind::ResourceLimit, span, "string too long");
                }
                Ok(Str(s.repeat(n as usize)))
            }
            (_, Int(a), Int(b)) => {
                let (a, b) = (*a, *b);
                let v = match op {
                    BinaryOp::Add => a.checked_add(b),
                    BinaryOp::Sub => a.checked_sub(b),
                    BinaryOp::Mul => a.checked_mul(b),
                    BinaryOp::Div => {
                        if b == 0 {
                            return error(RuntimeErrorKind::DivisionByZero, span, "division by zero");
                        }
                        return Ok(Float(a as f64 / b as f64));
                    }
                    BinaryOp::FloorDiv => {
                        if b == 0 {
                            return error(RuntimeErrorKind::DivisionByZero, span, "integer division by zero");
                        }
                        floor_div(a, b)
                    }
                    BinaryOp::Mod => {
                        if b == 0 {
                            return error(RuntimeErrorKind::DivisionByZero, span, "modulo by zero");
                        }
                        Some(floor_mod(a, b))
                    }
                };
                match v {
                    Some(v) => Ok(Int(v)),
                    None => overflow(),
                }
            }
            (_, Int(_) | Float(_), Int(_) | Float(_)) => {
                let a = as_f64(&l);
                let b = as_f64(&r);
                let v = match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div | BinaryOp::FloorDiv | BinaryOp::Mod if b == 0.0 => {
                        return error(RuntimeErrorKind::DivisionByZero, span, "float division by zero")
                    }
                    BinaryOp::Div => a / b,
                    BinaryOp::FloorDiv => (a / b).floor(),
                    BinaryOp::Mod => {
                        let r = a % b;
                        if r != 0.0 && ((r < 0.0) != (b < 0.0)) {
                            r + b
                        } else {
                            r
                        }
                    }
                };
                Ok(Float(v))
            }
            _ => mismatch(&l, &r),
        }
    }

    fn call(&mut self, callee: &'p str, args: &'p [Expr], span: SourceSpan) -> Exec<Option<Value>> {
        let arity = |n: usize, ok: &dyn Fn(usize) -> bool| -> Exec<()> {
            if ok(n) {
                Ok(())
            } else {
                error(RuntimeErrorKind::TypeMismatch, span, format!("{callee}() got {n} arguments"))
            }
        };
        match callee {
            "print" => {
                let mut parts = Vec::with_capacity(args.len());
                for a in args {
                    parts.push(self.eval_value(a)?.to_string());
                }
                let mut line = parts.join(" ");
                line.push('\n');
                self.write_out(&line)?;
                Ok(None)
            }
            "input" => {
                arity(args.len(), &|n| n <= 1)?;
                // The prompt is evaluated but kept out of the transcript.
                if let Some(p) = args.first() {
                    self.eval_value(p)?;
                }
                let queue = &self.config.input_queue;
                let line = if self.input_pos < queue.len() {
                    Some(queue[self.input_pos].clone())
                } else if self.config.cycle_inputs && !queue.is_empty() {
                    Some(queue[self.input_pos % queue.len()].clone())
                } else {
                    None
                };
                match line {
                    Some(l) => {
                        self.input_pos += 1;
                        Ok(Some(Value::Str(l)))
                    }
                    None => Err(Halt(ExecStatus::InputExhausted { span })),
                }
            }
            "int" => {
                arity(args.len(), &|n| n == 1)?;
                let v = self.eval_value(&args[0])?;
                let out = match v {
                    Value::Int(i) => i,
                    Value::Bool(b) => b as i64,
                    Value::Float(f) => {
                        let t = f.trunc();
                        if !t.is_finite() || t < i64::MIN as f64 || t >= i64::MAX as f64 {
                            return error(RuntimeErrorKind::IntOverflow, span, "float too large for int()");
                        }
                        t as i64
                    }
                    Value::Str(s) => match parse_int_literal(&s) {
                        Some(i) => i,
                        None => {
                            return error(
                                RuntimeErrorKind::BadIntParse,
                                span,
                                format!("invalid literal for int(): {s:?}"),
                            )
                        }
                    },
                };
                Ok(Some(Value::Int(out)))
            }
            "str" => {
                arity(args.len(), &|n| n == 1)?;
                let v = self.eval_value(&args[0])?;
                Ok(Some(Value::Str(v.to_string())))
            }
            "len" => {
                arity(args.len(), &|n| n == 1)?;
                match self.eval_value(&args[0])? {
                    Value::Str(s) => Ok(Some(Value::Int(s.chars().count() as i64))),
                    other => error(
                        RuntimeErrorKind::TypeMismatch,
                        span,
                        format!("object of type {} has no len()", other.type_name()),
                    ),
                }
            }
            "range" => error(RuntimeErrorKind::TypeMismatch, span, "range() can only be used in a for loop"),
            _ => self.call_user(callee, args, span),
        }
    }

    fn call_user(&mut self, callee: &'p str, args: &'p [Expr], span: SourceSpan) -> Exec<Option<Value>> {
        let Some(f) = self.functions.get(callee) else {
            return error(RuntimeErrorKind::UnknownName, span, format!("name '{callee}' is not defined"));
        };
        let (params, body, local_names) = (f.params, f.body, f.local_names.clone());
        if params.len() != args.len() {
            return error(
                RuntimeErrorKind::TypeMismatch,
                span,
                format!("{callee}() takes {} arguments but {} were given", params.len(), args.len()),
            );
        }
        if self.frames.len() >= MAX_CALL_DEPTH {
            return error(RuntimeErrorKind::ResourceLimit, span, "maximum recursion depth exceeded");
        }
        let mut locals = BTreeMap::new();
        for (p, a) in params.iter().zip(args) {
            locals.insert(p.clone(), self.eval_value(a)?);
        }
        self.frames.push(Frame { name: callee, locals, local_names });
        let depth = self.active_loops.len();
        let flow = self.exec_block(body);
        self.frames.pop();
        debug_assert!(flow.is_err() || self.active_loops.len() == depth);
        match flow? {
            Flow::Return(v) => Ok(v),
            _ => Ok(None),
        }
    }

    fn write_out(&mut self, text: &str) -> Exec<()> {
        let room = self.config.max_output_bytes.saturating_sub(self.stdout.len());
        if text.len() <= room {
            self.stdout.push_str(text);
            return Ok(());
        }
        let mut cut = room;
        while !text.is_char_boundary(cut) {
            cut -= 1;
        }
        self.stdout.push_str(&text[..cut]);
        Err(Halt(ExecStatus::OutputTruncated))
    }
}

fn op_of(op: AugOp) -> BinaryOp {
    op.binary()
}

fn as_f64(v: &Value) -> f64 {
    match v {
        Value::Int(i) => *i as f64,
        Value::Float(f) => *f,
        _ => unreachable!("numeric value expected"),
    }
}

pub fn floor_div(a: i64, b: i64) -> Option<i64> {
    let q = a.checked_div(b)?;
    if a % b != 0 && ((a < 0) != (b < 0)) {
        q.checked_sub(1)
    } else {
        Some(q)
    }
}

pub fn floor_mod(a: i64, b: i64) -> i64 {
    let r = a.checked_rem(b).unwrap_or(0);
    if r != 0 && ((r < 0) != (b < 0)) {
        r + b
    } else {
        r
    }
}

fn parse_int_literal(s: &str) -> Option<i64> {
    let t = s.trim();
    let digits = t.strip_prefix(['+', '-']).unwrap_or(t);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    t.parse().ok()
}

/// Comparison semantics: numbers compare across int/float, equality across
/// other differing types is simply false, ordering across them is an error.
pub(crate) fn compare(op: CompareOp, l: &Value, r: &Value, span: SourceSpan) -> Exec<bool> {
    use Value::*;
    Ok(match (l, r) {
        (Int(a), Int(b)) => op.holds(a, b),
        (Int(_) | Float(_), Int(_) | Float(_)) => op.holds(&as_f64(l), &as_f64(r)),
        (Str(a), Str(b)) => op.holds(a, b),
        (Bool(a), Bool(b)) => op.holds(a, b),
        _ => match op {
            CompareOp::Eq => false,
            CompareOp::NotEq => true,
            _ => {
                return error(
                    RuntimeErrorKind::TypeMismatch,
                    span,
                    format!("'{}' not supported between {} and {}", op.symbol(), l.type_name(), r.type_name()),
                )
            }
        },
    })
}

/// Convenience for comparing outside an execution.
pub fn compare_values(op: CompareOp, l: &Value, r: &Value) -> Result<bool, RuntimeErrorKind> {
    compare(op, l, r, SourceSpan::default()).map_err(|Halt(status)| match status {
        ExecStatus::RuntimeError { kind, .. } => kind,
        _ => RuntimeErrorKind::TypeMismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn run_src(src: &str, inputs: &[&str]) -> ExecResult {
        run(&parse(src).unwrap(), &ExecConfig::with_inputs(inputs.iter().copied()))
    }

    #[test]
    fn prints_sum() {
        let r = run_src("print(1 + 2)", &[]);
        assert_eq!(r.status, ExecStatus::Completed);
        assert_eq!(r.stdout, "3\n");
    }

    #[test]
    fn yes_no_loop_never_finishes() {
        let p = parse(crate::fixtures::ORIGINAL_LOOP).unwrap();
        let inputs = vec!["x"; 20_000];
        let r = run(&p, &ExecConfig::with_inputs(inputs).budget(10_000));
        assert_eq!(r.status, ExecStatus::BudgetExhausted);
        let loop_id = p.statements[1].id;
        assert!(r.loop_counts[&loop_id] >= 1);
        assert_eq!(r.steps_used, 10_000);
    }

    #[test]
    fn counting_loop_iterates_four_times() {
        let p = parse("i = 0\nwhile i < 7:\n    i += 2").unwrap();
        let r = run(&p, &ExecConfig::default());
        assert_eq!(r.status, ExecStatus::Completed);
        // hand trace: i = 0, 2, 4, 6 enter the body; 8 fails the test
        assert_eq!(r.loop_counts[&p.statements[1].id], 4);
        assert_eq!(r.final_env["i"], Value::Int(8));
        // 1 assign + 5 condition checks + 4 body statements
        assert_eq!(r.steps_used, 10);
    }

    #[test]
    fn runtime_error_kinds() {
        let kind = |src: &str, inputs: &[&str]| match run_src(src, inputs).status {
            ExecStatus::RuntimeError { kind, .. } => kind,
            other => panic!("expected error, got {other:?}"),
        };
        assert_eq!(kind("x = 1 // 0", &[]), RuntimeErrorKind::DivisionByZero);
        assert_eq!(kind("x = 9223372036854775807 + 1", &[]), RuntimeErrorKind::IntOverflow);
        assert_eq!(kind("x = 'a' < 1", &[]), RuntimeErrorKind::TypeMismatch);
        assert_eq!(kind("x = 'a' - 'b'", &[]), RuntimeErrorKind::TypeMismatch);
        assert_eq!(kind("x = int('abc')", &[]), RuntimeErrorKind::BadIntParse);
        assert_eq!(kind("print(y)", &[]), RuntimeErrorKind::UnknownName);
        assert_eq!(kind("for i in range(0, 5, 0):\n    pass", &[]), RuntimeErrorKind::BadRangeStep);
        assert_eq!(kind("def f(n):\n    return f(n)\nf(1)", &[]), RuntimeErrorKind::ResourceLimit);
    }

    #[test]
    fn python_like_semantics() {
        let r = run_src(
            "a = 7 // -2\nb = -7 % 3\nc = 7 / 2\nd = 'ab' * 3\ne = 1 == '1'\nf = 2 == 2.0\ng = 0 or 'x'\nh = str(0.1 + 0.2)",
            &[],
        );
        assert_eq!(r.status, ExecStatus::Completed);
        let env = &r.final_env;
        assert_eq!(env["a"], Value::Int(-4));
        assert_eq!(env["b"], Value::Int(2));
        assert_eq!(env["c"], Value::Float(3.5));
        assert_eq!(env["d"], Value::Str("ababab".into()));
        assert_eq!(env["e"], Value::Bool(false));
        assert_eq!(env["f"], Value::Bool(true));
        assert_eq!(env["g"], Value::Str("x".into()));
        assert_eq!(env["h"], Value::Str("0.30000000000000004".into()));
    }

    #[test]
    fn float_repr_matches_python() {
        assert_eq!(format_float(1.0), "1.0");
        assert_eq!(format_float(1e16), "1e+16");
        assert_eq!(format_float(1.5e-5), "1.5e-05");
        assert_eq!(format_float(0.0001), "0.0001");
        assert_eq!(format_float(123.456), "123.456");
        assert_eq!(format_float(-2.5), "-2.5");
    }

    #[test]
    fn input_queue_and_prompt() {
        let r = run_src("a = input('name? ')\nprint('hi', a)", &["bo"]);
        assert_eq!(r.stdout, "hi bo\n");
        let r = run_src("a = input()\nb = input()", &["1"]);
        assert!(matches!(r.status, ExecStatus::InputExhausted { .. }));
        let p = parse("a = input()\nb = input()\nc = input()").unwrap();
        let r = run(&p, &ExecConfig::with_inputs(["1", "2"]).cycling());
        assert_eq!(r.final_env["c"], Value::Str("1".into()));
    }

    #[test]
    fn functions_have_local_scope() {
        let r = run_src("x = 10\ndef f(a):\n    y = a + x\n    return y\nz = f(5)", &[]);
        assert_eq!(r.final_env["z"], Value::Int(15));
        assert!(!r.final_env.contains_key("y"));
        let r = run_src("x = 10\ndef f():\n    x = x + 1\n    return x\nz = f()", &[]);
        assert!(matches!(r.status, ExecStatus::RuntimeError { kind: RuntimeErrorKind::UnknownName, .. }));
    }

    #[test]
    fn assertion_failure_and_output_truncation() {
        let r = run_src("assert 1 == 2, 'nope'", &[]);
        assert!(matches!(r.status, ExecStatus::AssertionFailed { ref message, .. } if message == "nope"));
        let p = parse("while True:\n    print('aaaaaaaaaa')").unwrap();
        let cfg = ExecConfig { max_output_bytes: 25, ..Default::default() };
        let r = run(&p, &cfg);
        assert_eq!(r.status, ExecStatus::OutputTruncated);
        assert_eq!(r.stdout.len(), 25);
    }

    #[test]
    fn nested_loop_statistics() {
        let p = parse("for i in range(3):\n    j = 0\n    while j < i:\n        j += 1").unwrap();
        let r = run(&p, &ExecConfig::default());
        let StmtKind::ForRange { body, .. } = &p.statements[0].kind else { unreachable!() };
        let inner = body[1].id;
        let s = r.loop_stats[&inner];
        assert_eq!((s.entries, s.total, s.min_per_entry, s.max_per_entry), (3, 3, Some(0), Some(2)));
        assert_eq!(r.loop_counts[&p.statements[0].id], 3);
    }

    #[test]
    fn budget_monotonicity_example() {
        let p = parse("t = 0\nfor i in range(10):\n    t += i\nprint(t)").unwrap();
        let first = run(&p, &ExecConfig::default());
        let exact = run(&p, &ExecConfig::default().budget(first.steps_used));
        assert_eq!(first, exact);
        let short = run(&p, &ExecConfig::default().budget(first.steps_used - 1));
        assert_eq!(short.status, ExecStatus::BudgetExhausted);
    }
}
