//! Syntax tree for NovLang.
//!
//! Every statement and expression carries a [`SourceSpan`] and a [`NodeId`].
//! Ids are assigned in pre-order after parsing, so the same traversal of an
//! unmodified program always yields the same ids.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Byte offsets plus 1-based line/column (columns count characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start_offset: usize,
    pub end_offset: usize,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: SourceSpan) -> SourceSpan {
        let (start, end) = (
            if other.start_offset < self.start_offset { other } else { self },
            if other.end_offset > self.end_offset { other } else { self },
        );
        SourceSpan {
            start_offset: start.start_offset,
            start_line: start.start_line,
            start_col: start.start_col,
            end_offset: end.end_offset,
            end_line: end.end_line,
            end_col: end.end_col,
        }
    }

    pub fn contains(&self, inner: &SourceSpan) -> bool {
        self.start_offset <= inner.start_offset && inner.end_offset <= self.end_offset
    }

    pub fn text<'s>(&self, source: &'s str) -> &'s str {
        &source[self.start_offset..self.end_offset]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub statements: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: NodeId,
    pub span: SourceSpan,
    pub kind: StmtKind,
    /// Comment text (without the leading `#`) written after the statement on
    /// the same line. For compound statements this is the header line.
    pub trailing_comment: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AugOp {
    Add,
    Sub,
    Mul,
    FloorDiv,
    Mod,
}

impl AugOp {
    pub fn binary(self) -> BinaryOp {
        match self {
            AugOp::Add => BinaryOp::Add,
            AugOp::Sub => BinaryOp::Sub,
            AugOp::Mul => BinaryOp::Mul,
            AugOp::FloorDiv => BinaryOp::FloorDiv,
            AugOp::Mod => BinaryOp::Mod,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            AugOp::Add => "+=",
            AugOp::Sub => "-=",
            AugOp::Mul => "*=",
            AugOp::FloorDiv => "//=",
            AugOp::Mod => "%=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign {
        target: String,
        value: Expr,
    },
    AugAssign {
        target: String,
        op: AugOp,
        value: Expr,
    },
    Expr(Expr),
    If {
        arms: Vec<IfArm>,
        else_body: Option<ElseArm>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
        header: SourceSpan,
    },
    ForRange {
        var: String,
        start: Option<Expr>,
        stop: Expr,
        step: Option<Expr>,
        body: Vec<Stmt>,
        header: SourceSpan,
    },
    Break,
    Continue,
    Pass,
    Return(Option<Expr>),
    FuncDef {
        name: String,
        params: Vec<String>,
        body: Vec<Stmt>,
        header: SourceSpan,
    },
    Assert {
        cond: Expr,
        message: Option<Expr>,
    },
    /// A comment on its own line; text excludes the leading `#`.
    Comment(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfArm {
    pub cond: Expr,
    pub body: Vec<Stmt>,
    pub header: SourceSpan,
    pub header_comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElseArm {
    pub body: Vec<Stmt>,
    pub header: SourceSpan,
    pub header_comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub id: NodeId,
    pub span: SourceSpan,
    pub kind: ExprKind,
    /// Number of redundant-or-not parenthesis pairs written around this
    /// expression in the source.
    pub parens: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::FloorDiv => "//",
            BinaryOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "==",
            CompareOp::NotEq => "!=",
            CompareOp::Lt => "<",
            CompareOp::LtE => "<=",
            CompareOp::Gt => ">",
            CompareOp::GtE => ">=",
        }
    }

    /// The operator that gives the same result with operands swapped.
    pub fn flipped(self) -> CompareOp {
        match self {
            CompareOp::Lt => CompareOp::Gt,
            CompareOp::LtE => CompareOp::GtE,
            CompareOp::Gt => CompareOp::Lt,
            CompareOp::GtE => CompareOp::LtE,
            other => other,
        }
    }

    pub fn negated(self) -> CompareOp {
        match self {
            CompareOp::Eq => CompareOp::NotEq,
            CompareOp::NotEq => CompareOp::Eq,
            CompareOp::Lt => CompareOp::GtE,
            CompareOp::LtE => CompareOp::Gt,
            CompareOp::Gt => CompareOp::LtE,
            CompareOp::GtE => CompareOp::Lt,
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CompareOp::Eq | CompareOp::NotEq)
    }

    pub fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            CompareOp::Eq => lhs == rhs,
            CompareOp::NotEq => lhs != rhs,
            CompareOp::Lt => lhs < rhs,
            CompareOp::LtE => lhs <= rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::GtE => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoolOpKind {
    And,
    Or,
}

impl BoolOpKind {
    pub fn keyword(self) -> &'static str {
        match self {
            BoolOpKind::And => "and",
            BoolOpKind::Or => "or",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Name(String),
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Compare {
        op: CompareOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    BoolOp {
        op: BoolOpKind,
        operands: Vec<Expr>,
    },
    Call {
        callee: String,
        args: Vec<Expr>,
    },
}

pub const BUILTINS: &[&str] = &["input", "print", "int", "str", "len", "range"];

impl Expr {
    /// An expression with placeholder id and span, for synthesized code.
    pub fn synthetic(kind: ExprKind) -> Expr {
        Expr { id: NodeId::default(), span: SourceSpan::default(), kind, parens: 0 }
    }

    /// Pre-order walk over this expression and all sub-expressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Unary { operand, .. } => operand.walk(f),
            ExprKind::Binary { lhs, rhs, .. } | ExprKind::Compare { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::BoolOp { operands, .. } => operands.iter().for_each(|e| e.walk(f)),
            ExprKind::Call { args, .. } => args.iter().for_each(|e| e.walk(f)),
            _ => {}
        }
    }

    /// Variable names read by this expression, in first-occurrence order.
    pub fn names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        self.walk(&mut |e| {
            if let ExprKind::Name(n) = &e.kind {
                if !out.contains(&n.as_str()) {
                    out.push(n);
                }
            }
        });
        out
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e.kind, ExprKind::Call { .. }));
        found
    }

    pub fn calls(&self, callee_name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let ExprKind::Call { callee, .. } = &e.kind {
                found |= callee == callee_name;
            }
        });
        found
    }
}

impl Stmt {
    pub fn synthetic(kind: StmtKind) -> Stmt {
        Stmt { id: NodeId::default(), span: SourceSpan::default(), kind, trailing_comment: None }
    }

    /// Span of the line that introduces this statement: the header for
    /// compound statements, the whole statement otherwise.
    pub fn header_span(&self) -> SourceSpan {
        match &self.kind {
            StmtKind::While { header, .. }
            | StmtKind::ForRange { header, .. }
            | StmtKind::FuncDef { header, .. } => *header,
            StmtKind::If { arms, .. } => arms[0].header,
            _ => self.span,
        }
    }

    pub fn is_loop(&self) -> bool {
        matches!(self.kind, StmtKind::While { .. } | StmtKind::ForRange { .. })
    }

    /// Direct child statement lists (bodies) of a compound statement.
    pub fn bodies(&self) -> Vec<&[Stmt]> {
        match &self.kind {
            StmtKind::If { arms, else_body } => {
                let mut v: Vec<&[Stmt]> = arms.iter().map(|a| a.body.as_slice()).collect();
                if let Some(e) = else_body {
                    v.push(&e.body);
                }
                v
            }
            StmtKind::While { body, .. }
            | StmtKind::ForRange { body, .. }
            | StmtKind::FuncDef { body, .. } => vec![body.as_slice()],
            _ => Vec::new(),
        }
    }

    /// Expressions owned directly by this statement (not by nested bodies).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Assign { value, .. } | StmtKind::AugAssign { value, .. } => vec![value],
            StmtKind::Expr(e) => vec![e],
            StmtKind::If { arms, .. } => arms.iter().map(|a| &a.cond).collect(),
            StmtKind::While { cond, .. } => vec![cond],
            StmtKind::ForRange { start, stop, step, .. } => {
                start.iter().chain(std::iter::once(stop)).chain(step.iter()).collect()
            }
            StmtKind::Return(Some(e)) => vec![e],
            StmtKind::Assert { cond, message } => std::iter::once(cond).chain(message.iter()).collect(),
            _ => Vec::new(),
        }
    }

    /// Pre-order walk over this statement and every nested statement.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        for body in self.bodies() {
            for s in body {
                s.walk(f);
            }
        }
    }
}

impl Program {
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        for s in &self.statements {
            s.walk(f);
        }
    }

    pub fn walk_exprs<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        self.walk(&mut |s| {
            for e in s.own_exprs() {
                e.walk(f);
            }
        });
    }

    pub fn find_stmt(&self, id: NodeId) -> Option<&Stmt> {
        let mut found = None;
        self.walk(&mut |s| {
            if s.id == id {
                found = Some(s);
            }
        });
        found
    }

    pub fn find_expr(&self, id: NodeId) -> Option<&Expr> {
        let mut found = None;
        self.walk_exprs(&mut |e| {
            if e.id == id {
                found = Some(e);
            }
        });
        found
    }

    /// Span of the statement or expression with this id.
    pub fn span_of(&self, id: NodeId) -> Option<SourceSpan> {
        self.find_stmt(id)
            .map(|s| s.span)
            .or_else(|| self.find_expr(id).map(|e| e.span))
    }

    /// Child-index path from the root to a node: statement indices within
    /// bodies, then expression positions. `None` if the id is absent.
    pub fn node_path(&self, id: NodeId) -> Option<Vec<u32>> {
        fn in_expr(e: &Expr, id: NodeId, path: &mut Vec<u32>) -> bool {
            if e.id == id {
                return true;
            }
            let children: Vec<&Expr> = match &e.kind {
                ExprKind::Unary { operand, .. } => vec![operand],
                ExprKind::Binary { lhs, rhs, .. } | ExprKind::Compare { lhs, rhs, .. } => vec![lhs, rhs],
                ExprKind::BoolOp { operands, .. } => operands.iter().collect(),
                ExprKind::Call { args, .. } => args.iter().collect(),
                _ => Vec::new(),
            };
            for (i, c) in children.into_iter().enumerate() {
                path.push(i as u32);
                if in_expr(c, id, path) {
                    return true;
                }
                path.pop();
            }
            false
        }
        fn in_stmts(stmts: &[Stmt], id: NodeId, path: &mut Vec<u32>) -> bool {
            for (i, s) in stmts.iter().enumerate() {
                path.push(i as u32);
                if s.id == id {
                    return true;
                }
                for (j, e) in s.own_exprs().into_iter().enumerate() {
                    path.push(1000 + j as u32);
                    if in_expr(e, id, path) {
                        return true;
                    }
                    path.pop();
                }
                for (j, b) in s.bodies().into_iter().enumerate() {
                    path.push(2000 + j as u32);
                    if in_stmts(b, id, path) {
                        return true;
                    }
                    path.pop();
                }
                path.pop();
            }
            false
        }
        let mut path = Vec::new();
        in_stmts(&self.statements, id, &mut path).then_some(path)
    }

    /// Names of user-defined functions.
    pub fn function_names(&self) -> Vec<&str> {
        self.statements
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::FuncDef { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Whether any `input()` call appears anywhere in the program.
    pub fn uses_input(&self) -> bool {
        let mut found = false;
        self.walk_exprs(&mut |e| {
            if let ExprKind::Call { callee, .. } = &e.kind {
                found |= callee == "input";
            }
        });
        found
    }

    /// Copy with every id and span cleared, for structural comparison.
    pub fn normalized(&self) -> Program {
        let mut p = self.clone();
        fn expr(e: &mut Expr) {
            e.id = NodeId::default();
            e.span = SourceSpan::default();
            match &mut e.kind {
                ExprKind::Unary { operand, .. } => expr(operand),
                ExprKind::Binary { lhs, rhs, .. } | ExprKind::Compare { lhs, rhs, .. } => {
                    expr(lhs);
                    expr(rhs);
                }
                ExprKind::BoolOp { operands, .. } => operands.iter_mut().for_each(expr),
                ExprKind::Call { args, .. } => args.iter_mut().for_each(expr),
                _ => {}
            }
        }
        fn stmts(list: &mut [Stmt]) {
            for s in list {
                s.id = NodeId::default();
                s.span = SourceSpan::default();
                match &mut s.kind {
                    StmtKind::Assign { value, .. } | StmtKind::AugAssign { value, .. } => expr(value),
                    StmtKind::Expr(e) => expr(e),
                    StmtKind::If { arms, else_body } => {
                        for a in arms {
                            a.header = SourceSpan::default();
                            expr(&mut a.cond);
                            stmts(&mut a.body);
                        }
                        if let Some(e) = else_body {
                            e.header = SourceSpan::default();
                            stmts(&mut e.body);
                        }
                    }
                    StmtKind::While { cond, body, header } => {
                        *header = SourceSpan::default();
                        expr(cond);
                        stmts(body);
                    }
                    StmtKind::ForRange { start, stop, step, body, header, .. } => {
                        *header = SourceSpan::default();
                        start.iter_mut().for_each(expr);
                        expr(stop);
                        step.iter_mut().for_each(expr);
                        stmts(body);
                    }
                    StmtKind::FuncDef { body, header, .. } => {
                        *header = SourceSpan::default();
                        stmts(body);
                    }
                    StmtKind::Return(Some(e)) => expr(e),
                    StmtKind::Assert { cond, message } => {
                        expr(cond);
                        message.iter_mut().for_each(expr);
                    }
                    _ => {}
                }
            }
        }
        stmts(&mut p.statements);
        p
    }

    /// Equality ignoring spans and node ids.
    pub fn structurally_eq(&self, other: &Program) -> bool {
        self.normalized() == other.normalized()
    }
}
