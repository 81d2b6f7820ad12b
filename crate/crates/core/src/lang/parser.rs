//! Recursive descent parser with line-level error recovery.

use super::ast::*;
use super::lexer::{Token, TokenKind, TokenValue};
use super::ParseError;

type PResult<T> = Result<T, ParseError>;

pub(crate) struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    pub(crate) errors: Vec<ParseError>,
    loop_depth: u32,
    in_function: bool,
    block_depth: u32,
}

const EXPR_START: &[&str] = &["expression"];

impl<'t> Parser<'t> {
    pub(crate) fn new(tokens: &'t [Token]) -> Self {
        Parser { tokens, pos: 0, errors: Vec::new(), loop_depth: 0, in_function: false, block_depth: 0 }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_kind(&self) -> TokenKind {
        self.peek().kind
    }

    fn peek_kind_at(&self, ahead: usize) -> TokenKind {
        self.tokens[(self.pos + ahead).min(self.tokens.len() - 1)].kind
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: TokenKind) -> Option<Token> {
        (self.peek_kind() == kind).then(|| self.bump())
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Token> {
        if self.peek_kind() == kind {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[kind.describe()]))
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let tok = self.peek();
        let found = match tok.kind {
            TokenKind::Name => format!("name '{}'", tok.text()),
            k => k.describe().to_string(),
        };
        let message = match expected {
            [] => format!("unexpected {found}"),
            [one] => format!("expected {one}, found {found}"),
            many => format!("expected one of {}, found {found}", many.join(", ")),
        };
        ParseError::new(tok.span, message, expected.iter().map(|s| s.to_string()).collect())
    }

    /// Skip the rest of the current line, and the indented block it opens.
    fn recover(&mut self) {
        while !matches!(self.peek_kind(), TokenKind::Newline | TokenKind::Eof) {
            self.bump();
        }
        self.eat(TokenKind::Newline);
        if self.peek_kind() == TokenKind::Indent {
            let mut depth = 0;
            loop {
                match self.bump().kind {
                    TokenKind::Indent => depth += 1,
                    TokenKind::Dedent => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    TokenKind::Eof => break,
                    _ => {}
                }
            }
        }
    }

    pub(crate) fn parse_program(&mut self) -> Program {
        let statements = self.parse_statements(true);
        Program { statements }
    }

    /// Statements until a Dedent (not consumed) or Eof.
    fn parse_statements(&mut self, top: bool) -> Vec<Stmt> {
        let mut out = Vec::new();
        loop {
            match self.peek_kind() {
                TokenKind::Eof => break,
                TokenKind::Dedent if !top => break,
                TokenKind::Dedent | TokenKind::Newline => {
                    self.bump();
                }
                TokenKind::Indent => {
                    // Already reported by the lexer; keep the statements.
                    self.bump();
                    let inner = self.parse_statements(false);
                    out.extend(inner);
                    self.eat(TokenKind::Dedent);
                }
                _ => match self.parse_statement() {
                    Ok(s) => out.push(s),
                    Err(e) => {
                        self.errors.push(e);
                        self.recover();
                    }
                },
            }
        }
        out
    }

    fn end_simple(&mut self) -> PResult<Option<String>> {
        let comment = self.eat(TokenKind::Comment).map(|t| t.text().to_string());
        match self.peek_kind() {
            TokenKind::Newline => {
                self.bump();
                Ok(comment)
            }
            TokenKind::Eof => Ok(comment),
            _ => Err(self.unexpected(&["end of line"])),
        }
    }

    fn simple(&mut self, first: &Token, kind: StmtKind, last_span: SourceSpan) -> PResult<Stmt> {
        let trailing_comment = self.end_simple()?;
        Ok(Stmt { id: NodeId::default(), span: first.span.to(last_span), kind, trailing_comment })
    }

    fn parse_statement(&mut self) -> PResult<Stmt> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Comment => {
                self.bump();
                self.end_simple()?;
                Ok(Stmt {
                    id: NodeId::default(),
                    span: tok.span,
                    kind: StmtKind::Comment(tok.text().to_string()),
                    trailing_comment: None,
                })
            }
            TokenKind::If => self.parse_if(),
            TokenKind::While => self.parse_while(),
            TokenKind::For => self.parse_for(),
            TokenKind::Def => self.parse_def(),
            TokenKind::Break | TokenKind::Continue => {
                self.bump();
                if self.loop_depth == 0 {
                    let word = if tok.kind == TokenKind::Break { "break" } else { "continue" };
                    self.errors.push(ParseError::new(tok.span, format!("'{word}' outside of a loop"), vec![]));
                }
                let kind = if tok.kind == TokenKind::Break { StmtKind::Break } else { StmtKind::Continue };
                self.simple(&tok, kind, tok.span)
            }
            TokenKind::Pass => {
                self.bump();
                self.simple(&tok, StmtKind::Pass, tok.span)
            }
            TokenKind::Return => {
                self.bump();
                if !self.in_function {
                    self.errors.push(ParseError::new(tok.span, "'return' outside of a function", vec![]));
                }
                let value = if matches!(self.peek_kind(), TokenKind::Newline | TokenKind::Comment | TokenKind::Eof) {
                    None
                } else {
                    Some(self.parse_expr()?)
                };
                let last = value.as_ref().map(|e| e.span).unwrap_or(tok.span);
                self.simple(&tok, StmtKind::Return(value), last)
            }
            TokenKind::Assert => {
                self.bump();
                let cond = self.parse_expr()?;
                let message = if self.eat(TokenKind::Comma).is_some() { Some(self.parse_expr()?) } else { None };
                let last = message.as_ref().unwrap_or(&cond).span;
                self.simple(&tok, StmtKind::Assert { cond, message }, last)
            }
            TokenKind::Name if self.is_assignment_ahead() => {
                self.bump();
                let op_tok = self.bump();
                let target = tok.text().to_string();
                let value = self.parse_expr()?;
                let last = value.span;
                let kind = match op_tok.kind {
                    TokenKind::Assign => StmtKind::Assign { target, value },
                    k => StmtKind::AugAssign {
                        target,
                        op: match k {
                            TokenKind::PlusAssign => AugOp::Add,
                            TokenKind::MinusAssign => AugOp::Sub,
                            TokenKind::StarAssign => AugOp::Mul,
                            TokenKind::SlashSlashAssign => AugOp::FloorDiv,
                            _ => AugOp::Mod,
                        },
                        value,
                    },
                };
                self.simple(&tok, kind, last)
            }
            TokenKind::Elif | TokenKind::Else => Err(ParseError::new(
                tok.span,
                format!("{} without a matching 'if'", tok.kind.describe()),
                vec![],
            )),
            _ => {
                let e = self.parse_expr()?;
                let span = e.span;
                self.simple(&tok, StmtKind::Expr(e), span)
            }
        }
    }

    fn is_assignment_ahead(&self) -> bool {
        matches!(
            self.peek_kind_at(1),
            TokenKind::Assign
                | TokenKind::PlusAssign
                | TokenKind::MinusAssign
                | TokenKind::StarAssign
                | TokenKind::SlashSlashAssign
                | TokenKind::PercentAssign
        )
    }

    /// After the ':' of a header: optional comment, newline, indented body.
    fn parse_suite(&mut self) -> PResult<(Option<String>, Vec<Stmt>)> {
        let comment = self.eat(TokenKind::Comment).map(|t| t.text().to_string());
        if self.peek_kind() != TokenKind::Newline {
            return Err(self.unexpected(&["end of line"]));
        }
        self.bump();
        if self.peek_kind() != TokenKind::Indent {
            return Err(self.unexpected(&[TokenKind::Indent.describe()]));
        }
        self.bump();
        self.block_depth += 1;
        let body = self.parse_statements(false);
        self.block_depth -= 1;
        self.eat(TokenKind::Dedent);
        if body.iter().all(|s| matches!(s.kind, StmtKind::Comment(_))) {
            let span = body.last().map(|s| s.span).unwrap_or(self.peek().span);
            return Err(ParseError::new(span, "block contains no statements", vec!["statement".into()]));
        }
        Ok((comment, body))
    }

    fn body_span(first: SourceSpan, body: &[Stmt]) -> SourceSpan {
        body.last().map(|s| first.to(s.span)).unwrap_or(first)
    }

    fn parse_if(&mut self) -> PResult<Stmt> {
        let if_tok = self.bump();
        let mut arms = Vec::new();
        let cond = self.parse_expr()?;
        let colon = self.expect(TokenKind::Colon)?;
        let (header_comment, body) = self.parse_suite()?;
        arms.push(IfArm { cond, body, header: if_tok.span.to(colon.span), header_comment });
        let mut else_body = None;
        loop {
            match self.peek_kind() {
                TokenKind::Elif => {
                    let kw = self.bump();
                    let cond = self.parse_expr()?;
                    let colon = self.expect(TokenKind::Colon)?;
                    let (header_comment, body) = self.parse_suite()?;
                    arms.push(IfArm { cond, body, header: kw.span.to(colon.span), header_comment });
                }
                TokenKind::Else => {
                    let kw = self.bump();
                    let colon = self.expect(TokenKind::Colon)?;
                    let (header_comment, body) = self.parse_suite()?;
                    else_body = Some(ElseArm { body, header: kw.span.to(colon.span), header_comment });
                    break;
                }
                _ => break,
            }
        }
        let last_body = else_body.as_ref().map(|e| &e.body).unwrap_or(&arms.last().unwrap().body);
        let span = Self::body_span(if_tok.span, last_body);
        Ok(Stmt { id: NodeId::default(), span, kind: StmtKind::If { arms, else_body }, trailing_comment: None })
    }

    fn parse_loop_body(&mut self) -> PResult<(Option<String>, Vec<Stmt>)> {
        self.loop_depth += 1;
        let r = self.parse_suite();
        self.loop_depth -= 1;
        r
    }

    fn parse_while(&mut self) -> PResult<Stmt> {
        let kw = self.bump();
        let cond = self.parse_expr()?;
        let colon = self.expect(TokenKind::Colon)?;
        let header = kw.span.to(colon.span);
        let (trailing_comment, body) = self.parse_loop_body()?;
        let span = Self::body_span(header, &body);
        Ok(Stmt { id: NodeId::default(), span, kind: StmtKind::While { cond, body, header }, trailing_comment })
    }

    fn parse_for(&mut self) -> PResult<Stmt> {
        let kw = self.bump();
        let var = self.expect(TokenKind::Name)?.text().to_string();
        self.expect(TokenKind::In)?;
        let range_tok = self.peek().clone();
        if !(range_tok.kind == TokenKind::Name && range_tok.text() == "range") {
            return Err(ParseError::new(
                range_tok.span,
                "only 'for <name> in range(...)' loops are supported",
                vec!["range".into()],
            ));
        }
        self.bump();
        self.expect(TokenKind::LParen)?;
        let args = self.parse_args()?;
        let close = self.expect(TokenKind::RParen)?;
        let (start, stop, step) = match args.len() {
            1 => (None, args.into_iter().next().unwrap(), None),
            2 => {
                let mut it = args.into_iter();
                (it.next(), it.next().unwrap(), None)
            }
            3 => {
                let mut it = args.into_iter();
                (it.next(), it.next().unwrap(), it.next())
            }
            n => {
                return Err(ParseError::new(
                    range_tok.span.to(close.span),
                    format!("range() takes 1 to 3 arguments, got {n}"),
                    vec![],
                ))
            }
        };
        let colon = self.expect(TokenKind::Colon)?;
        let header = kw.span.to(colon.span);
        let (trailing_comment, body) = self.parse_loop_body()?;
        let span = Self::body_span(header, &body);
        Ok(Stmt {
            id: NodeId::default(),
            span,
            kind: StmtKind::ForRange { var, start, stop, step, body, header },
            trailing_comment,
        })
    }

    fn parse_def(&mut self) -> PResult<Stmt> {
        let kw = self.bump();
        if self.block_depth > 0 {
            self.errors.push(ParseError::new(kw.span, "function definitions are only allowed at the top level", vec![]));
        }
        let name = self.expect(TokenKind::Name)?.text().to_string();
        self.expect(TokenKind::LParen)?;
        let mut params = Vec::new();
        if self.peek_kind() != TokenKind::RParen {
            loop {
                let p = self.expect(TokenKind::Name)?;
                if params.iter().any(|q: &String| q == p.text()) {
                    self.errors.push(ParseError::new(p.span, format!("duplicate parameter '{}'", p.text()), vec![]));
                }
                params.push(p.text().to_string());
                if self.eat(TokenKind::Comma).is_none() {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen)?;
        let colon = self.expect(TokenKind::Colon)?;
        let header = kw.span.to(colon.span);
        let saved = (self.loop_depth, self.in_function);
        self.loop_depth = 0;
        self.in_function = true;
        let r = self.parse_suite();
        (self.loop_depth, self.in_function) = saved;
        let (trailing_comment, body) = r?;
        let span = Self::body_span(header, &body);
        Ok(Stmt { id: NodeId::default(), span, kind: StmtKind::FuncDef { name, params, body, header }, trailing_comment })
    }

    fn parse_args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if self.peek_kind() == TokenKind::RParen {
            return Ok(args);
        }
        loop {
            args.push(self.parse_expr()?);
            if self.eat(TokenKind::Comma).is_none() || self.peek_kind() == TokenKind::RParen {
                break;
            }
        }
        Ok(args)
    }

    pub(crate) fn parse_expr(&mut self) -> PResult<Expr> {
        self.parse_boolop(BoolOpKind::Or)
    }

    fn parse_boolop(&mut self, op: BoolOpKind) -> PResult<Expr> {
        let (tok, next): (TokenKind, fn(&mut Self) -> PResult<Expr>) = match op {
            BoolOpKind::Or => (TokenKind::Or, |p| p.parse_boolop(BoolOpKind::And)),
            BoolOpKind::And => (TokenKind::And, |p| p.parse_not()),
        };
        let first = next(self)?;
        if self.peek_kind() != tok {
            return Ok(first);
        }
        let mut operands = vec![first];
        while self.eat(tok).is_some() {
            operands.push(next(self)?);
        }
        let span = operands[0].span.to(operands.last().unwrap().span);
        Ok(Expr { id: NodeId::default(), span, kind: ExprKind::BoolOp { op, operands }, parens: 0 })
    }

    fn parse_not(&mut self) -> PResult<Expr> {
        if let Some(kw) = self.eat(TokenKind::Not) {
            let operand = self.parse_not()?;
            let span = kw.span.to(operand.span);
            return Ok(Expr {
                id: NodeId::default(),
                span,
                kind: ExprKind::Unary { op: UnaryOp::Not, operand: Box::new(operand) },
                parens: 0,
            });
        }
        self.parse_comparison()
    }

    fn compare_op(kind: TokenKind) -> Option<CompareOp> {
        Some(match kind {
            TokenKind::EqEq => CompareOp::Eq,
            TokenKind::NotEq => CompareOp::NotEq,
            TokenKind::Lt => CompareOp::Lt,
            TokenKind::LtE => CompareOp::LtE,
            TokenKind::Gt => CompareOp::Gt,
            TokenKind::GtE => CompareOp::GtE,
            _ => return None,
        })
    }

    fn parse_comparison(&mut self) -> PResult<Expr> {
        let lhs = self.parse_arith()?;
        let Some(op) = Self::compare_op(self.peek_kind()) else {
            return Ok(lhs);
        };
        self.bump();
        let rhs = self.parse_arith()?;
        if Self::compare_op(self.peek_kind()).is_some() {
            return Err(ParseError::new(
                self.peek().span,
                "chained comparisons are not supported; combine them with 'and'",
                vec![],
            ));
        }
        let span = lhs.span.to(rhs.span);
        Ok(Expr {
            id: NodeId::default(),
            span,
            kind: ExprKind::Compare { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
            parens: 0,
        })
    }

    fn binary(lhs: Expr, op: BinaryOp, rhs: Expr) -> Expr {
        let span = lhs.span.to(rhs.span);
        Expr { id: NodeId::default(), span, kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, parens: 0 }
    }

    fn parse_arith(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.parse_term()?;
            lhs = Self::binary(lhs, op, rhs);
        }
    }

    fn parse_term(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                TokenKind::SlashSlash => BinaryOp::FloorDiv,
                TokenKind::Percent => BinaryOp::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = Self::binary(lhs, op, rhs);
        }
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        if let Some(minus) = self.eat(TokenKind::Minus) {
            let operand = self.parse_unary()?;
            let span = minus.span.to(operand.span);
            return Ok(Expr {
                id: NodeId::default(),
                span,
                kind: ExprKind::Unary { op: UnaryOp::Neg, operand: Box::new(operand) },
                parens: 0,
            });
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        let leaf = |kind| Ok(Expr { id: NodeId::default(), span: tok.span, kind, parens: 0 });
        match (tok.kind, &tok.value) {
            (TokenKind::Int, TokenValue::Int(v)) => {
                self.bump();
                leaf(ExprKind::Int(*v))
            }
            (TokenKind::Float, TokenValue::Float(v)) => {
                self.bump();
                leaf(ExprKind::Float(*v))
            }
            (TokenKind::Str, TokenValue::Text(s)) => {
                self.bump();
                leaf(ExprKind::Str(s.clone()))
            }
            (TokenKind::True, _) => {
                self.bump();
                leaf(ExprKind::Bool(true))
            }
            (TokenKind::False, _) => {
                self.bump();
                leaf(ExprKind::Bool(false))
            }
            (TokenKind::Name, TokenValue::Text(name)) => {
                self.bump();
                if self.eat(TokenKind::LParen).is_some() {
                    let args = self.parse_args()?;
                    let close = self.expect(TokenKind::RParen)?;
                    return Ok(Expr {
                        id: NodeId::default(),
                        span: tok.span.to(close.span),
                        kind: ExprKind::Call { callee: name.clone(), args },
                        parens: 0,
                    });
                }
                leaf(ExprKind::Name(name.clone()))
            }
            (TokenKind::LParen, _) => {
                self.bump();
                let mut inner = self.parse_expr()?;
                let close = self.expect(TokenKind::RParen)?;
                inner.parens = inner.parens.saturating_add(1);
                inner.span = tok.span.to(close.span);
                Ok(inner)
            }
            _ => Err(self.unexpected(EXPR_START)),
        }
    }
}

/// Assign pre-order ids: statement, its own expressions, then its bodies.
pub(crate) fn assign_ids(program: &mut Program) {
    fn expr(e: &mut Expr, next: &mut u32) {
        e.id = NodeId(*next);
        *next += 1;
        match &mut e.kind {
            ExprKind::Unary { operand, .. } => expr(operand, next),
            ExprKind::Binary { lhs, rhs, .. } | ExprKind::Compare { lhs, rhs, .. } => {
                expr(lhs, next);
                expr(rhs, next);
            }
            ExprKind::BoolOp { operands, .. } => operands.iter_mut().for_each(|o| expr(o, next)),
            ExprKind::Call { args, .. } => args.iter_mut().for_each(|a| expr(a, next)),
            _ => {}
        }
    }
    fn stmts(list: &mut [Stmt], next: &mut u32) {
        for s in list {
            s.id = NodeId(*next);
            *next += 1;
            match &mut s.kind {
                StmtKind::Assign { value, .. } | StmtKind::AugAssign { value, .. } => expr(value, next),
                StmtKind::Expr(e) => expr(e, next),
                StmtKind::If { arms, else_body } => {
                    for a in arms.iter_mut() {
                        expr(&mut a.cond, next);
                    }
                    for a in arms.iter_mut() {
                        stmts(&mut a.body, next);
                    }
                    if let Some(e) = else_body {
                        stmts(&mut e.body, next);
                    }
                }
                StmtKind::While { cond, body, .. } => {
                    expr(cond, next);
                    stmts(body, next);
                }
                StmtKind::ForRange { start, stop, step, body, .. } => {
                    if let Some(e) = start {
                        expr(e, next);
                    }
                    expr(stop, next);
                    if let Some(e) = step {
                        expr(e, next);
                    }
                    stmts(body, next);
                }
                StmtKind::FuncDef { body, .. } => stmts(body, next),
                StmtKind::Return(Some(e)) => expr(e, next),
                StmtKind::Assert { cond, message } => {
                    expr(cond, next);
                    if let Some(m) = message {
                        expr(m, next);
                    }
                }
                _ => {}
            }
        }
    }
    let mut next = 0;
    stmts(&mut program.statements, &mut next);
}
