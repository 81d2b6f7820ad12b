//! Indentation-aware lexer.
//!
//! Produces `Indent`/`Dedent`/`Newline` tokens the way Python does, with one
//! difference: comments are real tokens. A comment on its own line is placed
//! at the block level of the code that follows it, so that it can be carried
//! through the tree as a statement.

use super::ast::SourceSpan;
use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Int,
    Float,
    Str,
    Name,
    Comment,
    // keywords
    If,
    Elif,
    Else,
    While,
    For,
    In,
    Def,
    Return,
    Break,
    Continue,
    Pass,
    Assert,
    And,
    Or,
    Not,
    True,
    False,
    // punctuation and operators
    LParen,
    RParen,
    Comma,
    Colon,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashSlashAssign,
    PercentAssign,
    Plus,
    Minus,
    Star,
    Slash,
    SlashSlash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
    // layout
    Newline,
    Indent,
    Dedent,
    Eof,
}

impl TokenKind {
    pub fn describe(self) -> &'static str {
        use TokenKind::*;
        match self {
            Int => "integer",
            Float => "float",
            Str => "string",
            Name => "name",
            Comment => "comment",
            If => "'if'",
            Elif => "'elif'",
            Else => "'else'",
            While => "'while'",
            For => "'for'",
            In => "'in'",
            Def => "'def'",
            Return => "'return'",
            Break => "'break'",
            Continue => "'continue'",
            Pass => "'pass'",
            Assert => "'assert'",
            And => "'and'",
            Or => "'or'",
            Not => "'not'",
            True => "'True'",
            False => "'False'",
            LParen => "'('",
            RParen => "')'",
            Comma => "','",
            Colon => "':'",
            Assign => "'='",
            PlusAssign => "'+='",
            MinusAssign => "'-='",
            StarAssign => "'*='",
            SlashSlashAssign => "'//='",
            PercentAssign => "'%='",
            Plus => "'+'",
            Minus => "'-'",
            Star => "'*'",
            Slash => "'/'",
            SlashSlash => "'//'",
            Percent => "'%'",
            EqEq => "'=='",
            NotEq => "'!='",
            Lt => "'<'",
            LtE => "'<='",
            Gt => "'>'",
            GtE => "'>='",
            Newline => "end of line",
            Indent => "indented block",
            Dedent => "dedent",
            Eof => "end of file",
        }
    }

    fn keyword(word: &str) -> Option<TokenKind> {
        use TokenKind::*;
        Some(match word {
            "if" => If,
            "elif" => Elif,
            "else" => Else,
            "while" => While,
            "for" => For,
            "in" => In,
            "def" => Def,
            "return" => Return,
            "break" => Break,
            "continue" => Continue,
            "pass" => Pass,
            "assert" => Assert,
            "and" => And,
            "or" => Or,
            "not" => Not,
            "True" => True,
            "False" => False,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenValue {
    None,
    Int(i64),
    Float(f64),
    /// Decoded string literal, identifier, or comment text (after `#`).
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub value: TokenValue,
    pub span: SourceSpan,
}

impl Token {
    pub fn text(&self) -> &str {
        match &self.value {
            TokenValue::Text(s) => s,
            _ => "",
        }
    }
}

struct Line<'s> {
    start: usize,
    /// Content without the line terminator.
    text: &'s str,
    number: u32,
}

fn split_lines(source: &str) -> Vec<Line<'_>> {
    let mut lines = Vec::new();
    let mut start = 0;
    let mut number = 1;
    for (i, ch) in source.char_indices() {
        if ch == '\n' {
            let mut text = &source[start..i];
            if let Some(t) = text.strip_suffix('\r') {
                text = t;
            }
            lines.push(Line { start, text, number });
            start = i + 1;
            number += 1;
        }
    }
    if start < source.len() {
        let mut text = &source[start..];
        if let Some(t) = text.strip_suffix('\r') {
            text = t;
        }
        lines.push(Line { start, text, number });
    }
    lines
}

#[derive(Clone, Copy, PartialEq)]
enum LineClass {
    Blank,
    Comment,
    Code,
}

fn classify(text: &str) -> LineClass {
    match text.trim_start_matches([' ', '\t']).chars().next() {
        None => LineClass::Blank,
        Some('#') => LineClass::Comment,
        Some(_) => LineClass::Code,
    }
}

/// Leading-space count; tabs are reported as an error and counted as 4.
fn indentation(line: &Line<'_>, errors: &mut Vec<ParseError>) -> u32 {
    let mut width = 0;
    for (i, ch) in line.text.char_indices() {
        match ch {
            ' ' => width += 1,
            '\t' => {
                let col = line.text[..i].chars().count() as u32 + 1;
                errors.push(ParseError::new(
                    point_span(line.start + i, line.number, col, 1),
                    "tab characters are not allowed in indentation; use spaces",
                    vec![],
                ));
                width += 4;
            }
            _ => break,
        }
    }
    width
}

fn point_span(offset: usize, line: u32, col: u32, len: usize) -> SourceSpan {
    SourceSpan {
        start_offset: offset,
        end_offset: offset + len,
        start_line: line,
        start_col: col,
        end_line: line,
        end_col: col + len as u32,
    }
}

fn first_word(text: &str) -> &str {
    let t = text.trim_start();
    let end = t.find(|c: char| !(c.is_alphanumeric() || c == '_')).unwrap_or(t.len());
    &t[..end]
}

struct Lexer<'s> {
    source: &'s str,
    tokens: Vec<Token>,
    errors: Vec<ParseError>,
    stack: Vec<u32>,
    depth: u32,
}

/// Tokenize `source`. Lexical errors are collected; the token stream is
/// still produced so the parser can report further problems.
pub fn tokenize(source: &str) -> (Vec<Token>, Vec<ParseError>) {
    let mut lx = Lexer { source, tokens: Vec::new(), errors: Vec::new(), stack: vec![0], depth: 0 };
    let lines = split_lines(source);
    let classes: Vec<LineClass> = lines.iter().map(|l| classify(l.text)).collect();
    let mut scratch = Vec::new();
    let indents: Vec<u32> = lines.iter().map(|l| indentation(l, &mut scratch)).collect();
    // Block opened by the previous logical line and not yet populated.
    let mut pending_block = false;
    for (idx, line) in lines.iter().enumerate() {
        if lx.depth > 0 {
            // Continuation of a parenthesized expression.
            lx.scan_line(line, 0);
            if lx.depth == 0 {
                pending_block = lx.finish_logical_line(line);
            }
            continue;
        }
        match classes[idx] {
            LineClass::Blank => continue,
            LineClass::Code => {
                let ind = indentation(line, &mut lx.errors);
                lx.set_indent(ind, line, pending_block);
                let lead = line.text.len() - line.text.trim_start_matches([' ', '\t']).len();
                lx.scan_line(line, lead);
                if lx.depth == 0 {
                    pending_block = lx.finish_logical_line(line);
                }
            }
            LineClass::Comment => {
                let own = indentation(line, &mut lx.errors);
                let next = (idx + 1..lines.len()).find(|&j| classes[j] == LineClass::Code);
                let next_indent = next.map(|j| indents[j]).unwrap_or(0);
                let next_continues =
                    next.map(|j| matches!(first_word(lines[j].text), "elif" | "else")).unwrap_or(false);
                let top = *lx.stack.last().unwrap();
                let effective = if pending_block && next_indent > top {
                    next_indent
                } else if next_continues {
                    top
                } else {
                    lx.stack
                        .iter()
                        .copied()
                        .filter(|&l| l >= next_indent && l <= top)
                        .min_by_key(|&l| (l as i64 - own as i64).abs())
                        .unwrap_or(top)
                };
                lx.set_indent(effective, line, pending_block);
                if effective > top {
                    pending_block = false;
                }
                let lead = line.text.len() - line.text.trim_start_matches([' ', '\t']).len();
                lx.scan_line(line, lead);
                lx.push_newline(line);
            }
        }
    }
    if lx.depth > 0 {
        let end = source.len();
        let (l, c) = line_col(source, end);
        lx.errors.push(ParseError::new(point_span(end, l, c, 0), "unclosed '(' at end of file", vec![")".into()]));
        if let Some(last) = lines.last() {
            lx.push_newline(last);
        }
    }
    let end = source.len();
    let (l, c) = line_col(source, end);
    let eof_span = point_span(end, l, c, 0);
    while lx.stack.len() > 1 {
        lx.stack.pop();
        lx.tokens.push(Token { kind: TokenKind::Dedent, value: TokenValue::None, span: eof_span });
    }
    lx.tokens.push(Token { kind: TokenKind::Eof, value: TokenValue::None, span: eof_span });
    (lx.tokens, lx.errors)
}

pub(crate) fn line_col(source: &str, offset: usize) -> (u32, u32) {
    let before = &source[..offset];
    let line = before.matches('\n').count() as u32 + 1;
    let col = before.rsplit('\n').next().unwrap_or("").chars().count() as u32 + 1;
    (line, col)
}

impl<'s> Lexer<'s> {
    fn set_indent(&mut self, indent: u32, line: &Line<'_>, pending_block: bool) {
        let span = point_span(line.start, line.number, 1, 0);
        let top = *self.stack.last().unwrap();
        if indent > top {
            if !pending_block {
                self.errors.push(ParseError::new(
                    point_span(line.start, line.number, 1, indent as usize),
                    "unexpected indent",
                    vec![],
                ));
            }
            self.stack.push(indent);
            self.tokens.push(Token { kind: TokenKind::Indent, value: TokenValue::None, span });
        } else if indent < top {
            while *self.stack.last().unwrap() > indent {
                self.stack.pop();
                self.tokens.push(Token { kind: TokenKind::Dedent, value: TokenValue::None, span });
            }
            if *self.stack.last().unwrap() != indent {
                self.errors.push(ParseError::new(
                    point_span(line.start, line.number, 1, indent as usize),
                    "unindent does not match any outer indentation level",
                    vec![],
                ));
                self.stack.push(indent);
            }
        }
    }

    /// Emit the NEWLINE ending a logical line; returns whether the line
    /// opened a block (ended with ':').
    fn finish_logical_line(&mut self, line: &Line<'_>) -> bool {
        let opens = self
            .tokens
            .iter()
            .rev()
            .find(|t| t.kind != TokenKind::Comment)
            .map(|t| t.kind == TokenKind::Colon)
            .unwrap_or(false);
        self.push_newline(line);
        opens
    }

    fn push_newline(&mut self, line: &Line<'_>) {
        let offset = line.start + line.text.len();
        let col = line.text.chars().count() as u32 + 1;
        let len = usize::from(offset < self.source.len());
        self.tokens.push(Token {
            kind: TokenKind::Newline,
            value: TokenValue::None,
            span: point_span(offset, line.number, col, len),
        });
    }

    fn scan_line(&mut self, line: &Line<'_>, from: usize) {
        let text = line.text;
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        // index into `chars`
        let mut i = chars.iter().position(|&(b, _)| b >= from).unwrap_or(chars.len());
        let col_of = |ci: usize| ci as u32 + 1;
        let byte_of = |ci: usize| if ci < chars.len() { chars[ci].0 } else { text.len() };
        let mk_span = |a: usize, b: usize| SourceSpan {
            start_offset: line.start + byte_of(a),
            end_offset: line.start + byte_of(b),
            start_line: line.number,
            start_col: col_of(a),
            end_line: line.number,
            end_col: col_of(b),
        };
        while i < chars.len() {
            let (_, c) = chars[i];
            if c == ' ' || c == '\t' {
                i += 1;
                continue;
            }
            let start = i;
            if c == '#' {
                if self.depth > 0 {
                    self.errors.push(ParseError::new(
                        mk_span(start, chars.len()),
                        "comments inside parentheses are not supported",
                        vec![],
                    ));
                    return;
                }
                let body = &text[byte_of(i + 1)..];
                self.tokens.push(Token {
                    kind: TokenKind::Comment,
                    value: TokenValue::Text(body.to_string()),
                    span: mk_span(start, chars.len()),
                });
                return;
            }
            if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|(_, d)| d.is_ascii_digit())) {
                let mut j = i;
                let mut is_float = false;
                while j < chars.len() && chars[j].1.is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && chars[j].1 == '.' {
                    is_float = true;
                    j += 1;
                    while j < chars.len() && chars[j].1.is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < chars.len() && (chars[j].1 == 'e' || chars[j].1 == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k].1 == '+' || chars[k].1 == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].1.is_ascii_digit() {
                        while k < chars.len() && chars[k].1.is_ascii_digit() {
                            k += 1;
                        }
                        is_float = true;
                        j = k;
                    }
                }
                let lit = &text[byte_of(i)..byte_of(j)];
                let span = mk_span(i, j);
                if j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                    self.errors.push(ParseError::new(span, format!("invalid number literal '{lit}'"), vec![]));
                }
                if is_float {
                    match lit.parse::<f64>() {
                        Ok(v) if v.is_finite() => {
                            self.tokens.push(Token { kind: TokenKind::Float, value: TokenValue::Float(v), span })
                        }
                        _ => {
                            self.errors.push(ParseError::new(span, format!("float literal '{lit}' is out of range"), vec![]));
                            self.tokens.push(Token { kind: TokenKind::Float, value: TokenValue::Float(0.0), span });
                        }
                    }
                } else {
                    match lit.parse::<i64>() {
                        Ok(v) => self.tokens.push(Token { kind: TokenKind::Int, value: TokenValue::Int(v), span }),
                        Err(_) => {
                            self.errors.push(ParseError::new(
                                span,
                                format!("integer literal '{lit}' does not fit in 64 bits"),
                                vec![],
                            ));
                            self.tokens.push(Token { kind: TokenKind::Int, value: TokenValue::Int(0), span });
                        }
                    }
                }
                i = j;
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let mut j = i;
                while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                    j += 1;
                }
                let word = &text[byte_of(i)..byte_of(j)];
                let span = mk_span(i, j);
                match TokenKind::keyword(word) {
                    Some(kind) => self.tokens.push(Token { kind, value: TokenValue::None, span }),
                    None => self.tokens.push(Token {
                        kind: TokenKind::Name,
                        value: TokenValue::Text(word.to_string()),
                        span,
                    }),
                }
                i = j;
                continue;
            }
            if c == '\'' || c == '"' {
                let mut j = i + 1;
                let mut value = String::new();
                let mut closed = false;
                while j < chars.len() {
                    let ch = chars[j].1;
                    if ch == c {
                        closed = true;
                        j += 1;
                        break;
                    }
                    if ch == '\\' && j + 1 < chars.len() {
                        let esc = chars[j + 1].1;
                        match esc {
                            'n' => value.push('\n'),
                            't' => value.push('\t'),
                            'r' => value.push('\r'),
                            '0' => value.push('\0'),
                            '\\' => value.push('\\'),
                            '\'' => value.push('\''),
                            '"' => value.push('"'),
                            'x' => {
                                let hex: String = chars.iter().skip(j + 2).take(2).map(|&(_, h)| h).collect();
                                match (hex.len() == 2).then(|| u8::from_str_radix(&hex, 16).ok()).flatten() {
                                    Some(b) => {
                                        value.push(b as char);
                                        j += 4;
                                        continue;
                                    }
                                    None => {
                                        self.errors.push(ParseError::new(
                                            mk_span(j, (j + 2).min(chars.len())),
                                            "invalid \\x escape",
                                            vec![],
                                        ));
                                        value.push_str("\\x");
                                    }
                                }
                            }
                            other => {
                                value.push('\\');
                                value.push(other);
                            }
                        }
                        j += 2;
                        continue;
                    }
                    value.push(ch);
                    j += 1;
                }
                let span = mk_span(i, j);
                if !closed {
                    self.errors.push(ParseError::new(span, "unterminated string literal", vec![c.to_string()]));
                }
                self.tokens.push(Token { kind: TokenKind::Str, value: TokenValue::Text(value), span });
                i = j;
                continue;
            }
            let next = chars.get(i + 1).map(|&(_, c)| c);
            let next2 = chars.get(i + 2).map(|&(_, c)| c);
            use TokenKind::*;
            let (kind, len) = match (c, next, next2) {
                ('/', Some('/'), Some('=')) => (SlashSlashAssign, 3),
                ('/', Some('/'), _) => (SlashSlash, 2),
                ('/', _, _) => (Slash, 1),
                ('+', Some('='), _) => (PlusAssign, 2),
                ('-', Some('='), _) => (MinusAssign, 2),
                ('*', Some('='), _) => (StarAssign, 2),
                ('%', Some('='), _) => (PercentAssign, 2),
                ('=', Some('='), _) => (EqEq, 2),
                ('!', Some('='), _) => (NotEq, 2),
                ('<', Some('='), _) => (LtE, 2),
                ('>', Some('='), _) => (GtE, 2),
                ('+', _, _) => (Plus, 1),
                ('-', _, _) => (Minus, 1),
                ('*', _, _) => (Star, 1),
                ('%', _, _) => (Percent, 1),
                ('=', _, _) => (Assign, 1),
                ('<', _, _) => (Lt, 1),
                ('>', _, _) => (Gt, 1),
                ('(', _, _) => (LParen, 1),
                (')', _, _) => (RParen, 1),
                (',', _, _) => (Comma, 1),
                (':', _, _) => (Colon, 1),
                _ => {
                    let msg = if c == '\u{2018}' || c == '\u{2019}' || c == '\u{201c}' || c == '\u{201d}' {
                        format!("typographic quote '{c}' is not a string delimiter; use ' or \"")
                    } else {
                        format!("unexpected character '{c}'")
                    };
                    self.errors.push(ParseError::new(mk_span(i, i + 1), msg, vec![]));
                    i += 1;
                    continue;
                }
            };
            match kind {
                LParen => self.depth += 1,
                RParen => self.depth = self.depth.saturating_sub(1),
                _ => {}
            }
            self.tokens.push(Token { kind, value: TokenValue::None, span: mk_span(start, start + len) });
            i += len;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        let (toks, errs) = tokenize(src);
        assert!(errs.is_empty(), "{errs:?}");
        toks.into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn simple_assignment() {
        assert_eq!(kinds("x = 1"), vec![Name, Assign, Int, Newline, Eof]);
    }

    #[test]
    fn blocks_produce_indent_and_dedent() {
        assert_eq!(
            kinds("while x:\n    x -= 1\ny = 2\n"),
            vec![While, Name, Colon, Newline, Indent, Name, MinusAssign, Int, Newline, Dedent, Name, Assign, Int, Newline, Eof]
        );
    }

    #[test]
    fn comment_line_follows_next_code_level() {
        let k = kinds("while x:\n    x -= 1\n# after\ny = 2\n");
        let dedent = k.iter().position(|&t| t == Dedent).unwrap();
        let comment = k.iter().position(|&t| t == Comment).unwrap();
        assert!(dedent < comment);
        // comment before body content goes inside the block
        let k = kinds("while x:\n# first\n    x -= 1\n");
        assert_eq!(&k[..6], &[While, Name, Colon, Newline, Indent, Comment]);
    }

    #[test]
    fn comment_before_elif_stays_in_block() {
        let k = kinds("if a:\n    b = 1\n# note\nelif c:\n    d = 1\n");
        let comment = k.iter().position(|&t| t == Comment).unwrap();
        let dedent = k.iter().position(|&t| t == Dedent).unwrap();
        assert!(comment < dedent);
    }

    #[test]
    fn crlf_and_trailing_comment() {
        assert_eq!(kinds("x = 1  # hi\r\ny = 2\r\n"), vec![Name, Assign, Int, Comment, Newline, Name, Assign, Int, Newline, Eof]);
        let (toks, _) = tokenize("x = 1  # hi\r\n");
        assert_eq!(toks[3].text(), " hi");
    }

    #[test]
    fn tabs_are_rejected() {
        let (_, errs) = tokenize("while x:\n\tx -= 1\n");
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("tab"));
    }

    #[test]
    fn string_escapes_and_floats() {
        let (toks, errs) = tokenize(r#"s = 'a\'b\n' + "c" + 1.5e3"#);
        assert!(errs.is_empty());
        assert_eq!(toks[2].value, TokenValue::Text("a'b\n".into()));
        assert_eq!(toks[6].value, TokenValue::Float(1500.0));
    }

    #[test]
    fn parenthesized_continuation() {
        assert_eq!(kinds("x = (1 +\n     2)\n"), vec![Name, Assign, LParen, Int, Plus, Int, RParen, Newline, Eof]);
    }

    #[test]
    fn typographic_quotes_are_errors() {
        let (_, errs) = tokenize("x = \u{201c}hi\u{201d}");
        assert!(!errs.is_empty());
        assert!(errs[0].message.contains("typographic"));
    }
}
