//! NovLang front end: lexer, parser, syntax tree and pretty-printer.

pub mod ast;
pub mod lexer;
mod parser;
pub mod pretty;

use serde::Serialize;
use thiserror::Error;

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};
pub use pretty::pretty_print;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{}:{}: {message}", span.start_line, span.start_col)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(span: SourceSpan, message: impl Into<String>, expected: Vec<String>) -> Self {
        let message = message.into();
        debug_assert!(!message.is_empty());
        ParseError { span, message, expected }
    }
}

/// Parse a NovLang source file. All errors found are returned, sorted by
/// position; recovery resumes at the next line.
pub fn parse(source: &str) -> Result<Program, Vec<ParseError>> {
    let (tokens, mut errors) = tokenize(source);
    let mut parser = parser::Parser::new(&tokens);
    let mut program = parser.parse_program();
    errors.append(&mut parser.errors);
    if errors.is_empty() {
        parser::assign_ids(&mut program);
        Ok(program)
    } else {
        errors.sort_by_key(|e| (e.span.start_offset, e.span.end_offset));
        errors.dedup();
        Err(errors)
    }
}

/// A call to a name that is neither a builtin nor a function defined in
/// the program. Reported separately from parse errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnresolvedCall {
    pub node: NodeId,
    pub span: SourceSpan,
    pub callee: String,
}

pub fn unresolved_calls(program: &Program) -> Vec<UnresolvedCall> {
    let defined = program.function_names();
    let mut out = Vec::new();
    program.walk_exprs(&mut |e| {
        if let ExprKind::Call { callee, .. } = &e.kind {
            if !BUILTINS.contains(&callee.as_str()) && !defined.contains(&callee.as_str()) {
                out.push(UnresolvedCall { node: e.id, span: e.span, callee: callee.clone() });
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::fixtures::ORIGINAL_LOOP;

    #[test]
    fn minimal_statement() {
        let p = parse("x = 1").unwrap();
        assert_eq!(p.statements.len(), 1);
        assert!(matches!(&p.statements[0].kind, StmtKind::Assign { target, value } if target == "x" && value.kind == ExprKind::Int(1)));
    }

    #[test]
    fn yes_no_loop_shape() {
        let p = parse(ORIGINAL_LOOP).unwrap();
        assert_eq!(p.statements.len(), 2);
        let StmtKind::While { cond, body, .. } = &p.statements[1].kind else { panic!("expected while") };
        let ExprKind::BoolOp { op: BoolOpKind::Or, operands } = &cond.kind else { panic!("expected or") };
        assert_eq!(operands.len(), 2);
        assert!(operands.iter().all(|o| matches!(o.kind, ExprKind::Compare { op: CompareOp::NotEq, .. })));
        assert_eq!(body.len(), 1);
        assert!(matches!(body[0].kind, StmtKind::Assign { .. }));
    }

    #[test]
    fn missing_condition_reports_column_six() {
        let errs = parse("while:\n    x = 1\n").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!((errs[0].span.start_line, errs[0].span.start_col), (1, 6));
        assert_eq!(errs[0].expected, vec!["expression".to_string()]);
    }

    #[test]
    fn recovery_collects_second_error() {
        let errs = parse("while:\n    x = 1\ny = = 2\nz = 3\n").unwrap_err();
        assert_eq!(errs.len(), 2, "{errs:?}");
        assert_eq!(errs[1].span.start_line, 3);
    }

    #[test]
    fn break_outside_loop_is_error() {
        let errs = parse("break\n").unwrap_err();
        assert!(errs[0].message.contains("outside of a loop"));
        assert!(parse("def f():\n    return 1\n").is_ok());
        assert!(parse("return 1\n").is_err());
        // break inside a def inside a loop is not in a loop
        assert!(parse("while True:\n    def f():\n        break\n").is_err());
    }

    #[test]
    fn ids_are_preorder_and_unique() {
        let p = parse("x = 1 + 2\nif x > 1:\n    print(x)\n").unwrap();
        let mut ids = Vec::new();
        p.walk(&mut |s| {
            ids.push(s.id.0);
            for e in s.own_exprs() {
                e.walk(&mut |x| ids.push(x.id.0));
            }
        });
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), ids.len());
        assert_eq!(p.statements[0].id, NodeId(0));
        assert_eq!(p.node_path(NodeId(0)), Some(vec![0]));
    }

    #[test]
    fn unresolved_calls_are_not_parse_errors() {
        let p = parse("foo(1)\ndef bar():\n    pass\nbar()\n").unwrap();
        let u = unresolved_calls(&p);
        assert_eq!(u.len(), 1);
        assert_eq!(u[0].callee, "foo");
    }

    #[test]
    fn chained_comparison_rejected() {
        assert!(parse("x = 1 < 2 < 3\n").is_err());
    }
}
