//! Canonical printer: 4-space indentation, LF newlines, comments verbatim.

use super::ast::*;

const INDENT: &str = "    ";

pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    print_block(&program.statements, 0, &mut out);
    out
}

fn print_block(stmts: &[Stmt], depth: usize, out: &mut String) {
    for s in stmts {
        print_stmt(s, depth, out);
    }
}

fn line_end(comment: &Option<String>, out: &mut String) {
    if let Some(c) = comment {
        out.push_str("  #");
        out.push_str(c);
    }
    out.push('\n');
}

fn print_stmt(s: &Stmt, depth: usize, out: &mut String) {
    let pad = INDENT.repeat(depth);
    out.push_str(&pad);
    match &s.kind {
        StmtKind::Assign { target, value } => {
            out.push_str(&format!("{target} = {}", expr_to_string(value)));
        }
        StmtKind::AugAssign { target, op, value } => {
            out.push_str(&format!("{target} {} {}", op.symbol(), expr_to_string(value)));
        }
        StmtKind::Expr(e) => out.push_str(&expr_to_string(e)),
        StmtKind::Break => out.push_str("break"),
        StmtKind::Continue => out.push_str("continue"),
        StmtKind::Pass => out.push_str("pass"),
        StmtKind::Return(v) => {
            out.push_str("return");
            if let Some(e) = v {
                out.push(' ');
                out.push_str(&expr_to_string(e));
            }
        }
        StmtKind::Assert { cond, message } => {
            out.push_str("assert ");
            out.push_str(&expr_to_string(cond));
            if let Some(m) = message {
                out.push_str(", ");
                out.push_str(&expr_to_string(m));
            }
        }
        StmtKind::Comment(text) => {
            out.push('#');
            out.push_str(text);
            out.push('\n');
            return;
        }
        StmtKind::If { arms, else_body } => {
            for (i, arm) in arms.iter().enumerate() {
                if i > 0 {
                    out.push_str(&pad);
                    out.push_str("elif ");
                } else {
                    out.push_str("if ");
                }
                out.push_str(&expr_to_string(&arm.cond));
                out.push(':');
                line_end(&arm.header_comment, out);
                print_block(&arm.body, depth + 1, out);
            }
            if let Some(e) = else_body {
                out.push_str(&pad);
                out.push_str("else:");
                line_end(&e.header_comment, out);
                print_block(&e.body, depth + 1, out);
            }
            return;
        }
        StmtKind::While { cond, body, .. } => {
            out.push_str("while ");
            out.push_str(&expr_to_string(cond));
            out.push(':');
            line_end(&s.trailing_comment, out);
            print_block(body, depth + 1, out);
            return;
        }
        StmtKind::ForRange { var, start, stop, step, body, .. } => {
            let mut args: Vec<String> = Vec::new();
            if let Some(e) = start {
                args.push(expr_to_string(e));
            }
            args.push(expr_to_string(stop));
            if let Some(e) = step {
                args.push(expr_to_string(e));
            }
            out.push_str(&format!("for {var} in range({}):", args.join(", ")));
            line_end(&s.trailing_comment, out);
            print_block(body, depth + 1, out);
            return;
        }
        StmtKind::FuncDef { name, params, body, .. } => {
            out.push_str(&format!("def {name}({}):", params.join(", ")));
            line_end(&s.trailing_comment, out);
            print_block(body, depth + 1, out);
            return;
        }
    }
    line_end(&s.trailing_comment, out);
}

/// Binding strength; higher binds tighter.
fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::BoolOp { op: BoolOpKind::Or, .. } => 1,
        ExprKind::BoolOp { op: BoolOpKind::And, .. } => 2,
        ExprKind::Unary { op: UnaryOp::Not, .. } => 3,
        ExprKind::Compare { .. } => 4,
        ExprKind::Binary { op: BinaryOp::Add | BinaryOp::Sub, .. } => 5,
        ExprKind::Binary { .. } => 6,
        ExprKind::Unary { op: UnaryOp::Neg, .. } => 7,
        _ => 8,
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, false, &mut out);
    out
}

fn write_child(child: &Expr, needs_parens: bool, out: &mut String) {
    write_expr(child, needs_parens, out);
}

fn write_expr(e: &Expr, needs_parens: bool, out: &mut String) {
    let parens = if needs_parens && e.parens == 0 { 1 } else { e.parens as usize };
    for _ in 0..parens {
        out.push('(');
    }
    let prec = precedence(e);
    match &e.kind {
        ExprKind::Int(v) => out.push_str(&v.to_string()),
        ExprKind::Float(v) => out.push_str(&format_float_literal(*v)),
        ExprKind::Str(s) => out.push_str(&quote_str(s)),
        ExprKind::Bool(b) => out.push_str(if *b { "True" } else { "False" }),
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Unary { op: UnaryOp::Neg, operand } => {
            out.push('-');
            write_child(operand, precedence(operand) < prec, out);
        }
        ExprKind::Unary { op: UnaryOp::Not, operand } => {
            out.push_str("not ");
            write_child(operand, precedence(operand) < prec, out);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            write_child(lhs, precedence(lhs) < prec, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_child(rhs, precedence(rhs) <= prec, out);
        }
        ExprKind::Compare { op, lhs, rhs } => {
            write_child(lhs, precedence(lhs) <= prec, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_child(rhs, precedence(rhs) <= prec, out);
        }
        ExprKind::BoolOp { op, operands } => {
            for (i, o) in operands.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                    out.push_str(op.keyword());
                    out.push(' ');
                }
                write_child(o, precedence(o) <= prec, out);
            }
        }
        ExprKind::Call { callee, args } => {
            out.push_str(callee);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, false, out);
            }
            out.push(')');
        }
    }
    for _ in 0..parens {
        out.push(')');
    }
}

/// A float literal that lexes back to the same value.
pub fn format_float_literal(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains(['.', 'e']) {
        s
    } else {
        format!("{s}.0")
    }
}

pub fn quote_str(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => out.push_str(&format!("\\x{:02x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, tokenize};

    #[test]
    fn identity_on_canonical_input() {
        assert_eq!(pretty_print(&parse("x = 1").unwrap()), "x = 1\n");
    }

    #[test]
    fn token_kinds_survive_for_yes_no_loop() {
        let src = crate::fixtures::ORIGINAL_LOOP;
        let printed = pretty_print(&parse(src).unwrap());
        let kinds = |s: &str| tokenize(s).0.into_iter().map(|t| t.kind).collect::<Vec<_>>();
        assert_eq!(kinds(src), kinds(&printed));
    }

    #[test]
    fn comments_are_verbatim() {
        let src = "# header  \nx = 1  #  trailing\nwhile x < 3:  # loop\n    # inside\n    x += 1\n";
        let printed = pretty_print(&parse(src).unwrap());
        assert!(printed.contains("# header  \n"));
        assert!(printed.contains("#  trailing"));
        assert!(printed.contains("    # inside\n"));
        assert!(parse(&printed).unwrap().structurally_eq(&parse(src).unwrap()));
    }

    #[test]
    fn parentheses_are_kept_and_added() {
        let src = "x = (a + b) * c\ny = not (a and b) or c\nz = a - (b - c)\n";
        let p = parse(src).unwrap();
        let printed = pretty_print(&p);
        assert_eq!(printed, src);
        // a synthesized tree gets the parentheses its shape needs
        let sum = Expr::synthetic(ExprKind::Binary {
            op: BinaryOp::Add,
            lhs: Box::new(Expr::synthetic(ExprKind::Int(1))),
            rhs: Box::new(Expr::synthetic(ExprKind::Int(2))),
        });
        let prod = Expr::synthetic(ExprKind::Binary {
            op: BinaryOp::Mul,
            lhs: Box::new(sum),
            rhs: Box::new(Expr::synthetic(ExprKind::Int(3))),
        });
        assert_eq!(expr_to_string(&prod), "(1 + 2) * 3");
    }

    #[test]
    fn floats_and_strings_roundtrip() {
        let src = "a = 1.0\nb = 1e+20\nc = 'x\\y'\nd = \"it's\\n\"\n";
        let p = parse(src).unwrap();
        let printed = pretty_print(&p);
        assert!(parse(&printed).unwrap().structurally_eq(&p), "{printed}");
    }
}
