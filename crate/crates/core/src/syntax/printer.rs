//! Expression printing.
//!
//! Arithmetic and comparison operators print without spaces (`2*14+2*7`,
//! `y-1>0`), word operators with spaces. Parentheses are inserted only where
//! the host precedence rules require them, so `parse_expr(print_expr(e)) == e`.

use super::ast::*;

/// Default column budget before [`print_layout`] breaks a conditional.
pub const LAYOUT_WIDTH: usize = 60;

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write(&mut out, e, 0);
    out
}

pub fn print_str_lit(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

pub fn print_float(x: f64) -> String {
    format!("{x:?}")
}

/// Binding strength of the node's outermost construct (higher binds tighter).
pub fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Lambda(..) => 0,
        Expr::Cond(..) => 1,
        Expr::Binary(op, ..) => binop_prec(*op),
        Expr::Unary(UnOp::Not, _) => 4,
        Expr::Unary(UnOp::Neg, _) => 8,
        Expr::Int(n) if *n < 0 => 8,
        Expr::Float(x) if x.is_sign_negative() => 8,
        _ => 10,
    }
}

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 2,
        BinOp::And => 3,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
        BinOp::Add | BinOp::Sub => 6,
        BinOp::Mul | BinOp::Div | BinOp::FloorDiv => 7,
        BinOp::Pow => 9,
    }
}

/// Minimum precedence for the (left, right) operands of `op`.
fn operand_mins(op: BinOp) -> (u8, u8) {
    match op {
        BinOp::Or => (2, 3),
        BinOp::And => (3, 4),
        op if op.is_comparison() => (6, 6),
        BinOp::Add | BinOp::Sub => (6, 7),
        BinOp::Mul | BinOp::Div | BinOp::FloorDiv => (7, 8),
        _ => (10, 8),
    }
}

fn op_text(op: BinOp) -> String {
    if op.is_logical() {
        format!(" {} ", op.symbol())
    } else {
        op.symbol().to_string()
    }
}

fn write(out: &mut String, e: &Expr, min: u8) {
    if prec(e) < min {
        out.push('(');
        write(out, e, 0);
        out.push(')');
        return;
    }
    match e {
        Expr::Int(n) => out.push_str(&n.to_string()),
        Expr::Float(x) => out.push_str(&print_float(*x)),
        Expr::Bool(b) => out.push_str(if *b { "True" } else { "False" }),
        Expr::Str(s) => out.push_str(&print_str_lit(s)),
        Expr::Var(v) => out.push_str(v),
        Expr::Error => out.push_str("ERROR"),
        Expr::Unary(UnOp::Not, x) => {
            out.push_str("not ");
            write(out, x, 4);
        }
        Expr::Unary(UnOp::Neg, x) => {
            out.push('-');
            // `-5` would read back as a literal
            let force = matches!(**x, Expr::Int(n) if n >= 0)
                || matches!(**x, Expr::Float(f) if !f.is_sign_negative());
            write(out, x, if force { 11 } else { 8 });
        }
        Expr::Binary(op, l, r) => {
            let (lm, rm) = operand_mins(*op);
            write(out, l, lm);
            out.push_str(&op_text(*op));
            write(out, r, rm);
        }
        Expr::Slice(base, lo, hi) => {
            write(out, base, 10);
            out.push('[');
            if let Some(lo) = lo {
                out.push_str(&lo.to_string());
            }
            out.push(':');
            if let Some(hi) = hi {
                out.push_str(&hi.to_string());
            }
            out.push(']');
        }
        Expr::Call(f, args) => {
            out.push_str(f);
            write_args(out, args);
        }
        Expr::Apply(f, args) => {
            write(out, f, 10);
            write_args(out, args);
        }
        Expr::Cond(t, g, x) => {
            write(out, t, 2);
            out.push_str(" if ");
            write(out, g, 2);
            out.push_str(" else ");
            write(out, x, 1);
        }
        Expr::Lambda(params, body) => {
            out.push_str("lambda");
            for (i, p) in params.iter().enumerate() {
                out.push_str(if i == 0 { " " } else { ", " });
                out.push_str(&p.name);
                if let Some(d) = &p.default {
                    out.push('=');
                    write(out, d, 2);
                }
            }
            out.push_str(": ");
            write(out, body, 0);
        }
    }
}

fn write_args(out: &mut String, args: &[Expr]) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write(out, a, 0);
    }
    out.push(')');
}

// ---- multi-line layout ----------------------------------------------------

/// Lines under construction; blocks hang from the column where they start.
#[derive(Default)]
struct Doc {
    lines: Vec<String>,
}

impl Doc {
    fn text(&mut self, s: &str) {
        match self.lines.last_mut() {
            Some(l) => l.push_str(s),
            None => self.lines.push(s.to_string()),
        }
    }

    fn block(&mut self, block: Vec<String>) {
        let col = self.lines.last().map_or(0, |l| l.chars().count());
        let mut it = block.into_iter();
        if let Some(first) = it.next() {
            self.text(&first);
        }
        for l in it {
            self.lines.push(format!("{}{}", " ".repeat(col), l));
        }
    }

    fn newline(&mut self, s: &str) {
        self.lines.push(s.to_string());
    }
}

/// Prints `e` across several lines when the flat form exceeds `width`,
/// breaking conditionals into the `(then / if guard else / otherwise)` shape.
pub fn print_layout(e: &Expr, width: usize) -> Vec<String> {
    layout(e, 0, width)
}

fn layout(e: &Expr, min: u8, width: usize) -> Vec<String> {
    let mut flat = String::new();
    write(&mut flat, e, min);
    if flat.chars().count() <= width || !has_cond(e) {
        return vec![flat];
    }
    let mut d = Doc::default();
    if let Expr::Cond(t, g, x) = e {
        d.text("(   ");
        d.block(layout(t, 2, width));
        d.newline(" if ");
        d.block(layout(g, 2, width));
        d.text(" else");
        d.newline("    ");
        d.block(layout(x, 1, width));
        d.newline(")");
        return d.lines;
    }
    if prec(e) < min {
        d.text("(");
        d.block(layout(e, 0, width));
        d.text(")");
        return d.lines;
    }
    match e {
        Expr::Unary(UnOp::Not, x) => {
            d.text("not ");
            d.block(layout(x, 4, width));
        }
        Expr::Unary(UnOp::Neg, x) => {
            d.text("-");
            d.block(layout(x, 8, width));
        }
        Expr::Binary(op, l, r) => {
            let (lm, rm) = operand_mins(*op);
            d.block(layout(l, lm, width));
            d.text(&op_text(*op));
            d.block(layout(r, rm, width));
        }
        Expr::Slice(base, lo, hi) => {
            d.block(layout(base, 10, width));
            d.text(&format!(
                "[{}:{}]",
                lo.map(|n| n.to_string()).unwrap_or_default(),
                hi.map(|n| n.to_string()).unwrap_or_default()
            ));
        }
        Expr::Call(f, args) => {
            d.text(f);
            layout_args(&mut d, args, width);
        }
        Expr::Apply(f, args) => {
            d.block(layout(f, 10, width));
            layout_args(&mut d, args, width);
        }
        Expr::Lambda(params, body) => {
            d.text("lambda");
            for (i, p) in params.iter().enumerate() {
                d.text(if i == 0 { " " } else { ", " });
                d.text(&p.name);
                if let Some(def) = &p.default {
                    d.text("=");
                    d.block(layout(def, 2, width));
                }
            }
            d.text(": ");
            d.block(layout(body, 0, width));
        }
        _ => d.text(&flat),
    }
    d.lines
}

fn layout_args(d: &mut Doc, args: &[Expr], width: usize) {
    d.text("(");
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            d.text(", ");
        }
        d.block(layout(a, 0, width));
    }
    d.text(")");
}

fn has_cond(e: &Expr) -> bool {
    e.contains(&|x| matches!(x, Expr::Cond(..)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr;

    fn rt(src: &str) -> String {
        print_expr(&parse_expr(src).unwrap())
    }

    #[test]
    fn compact_arithmetic() {
        assert_eq!(rt("2 * 14 + 2 * 7"), "2*14+2*7");
        assert_eq!(rt("(2*a)+(2*b)"), "2*a+2*b");
        assert_eq!(rt("2*(a+b)"), "2*(a+b)");
        assert_eq!(rt("a-(b-c)"), "a-(b-c)");
        assert_eq!(rt("(a-b)-c"), "a-b-c");
    }

    #[test]
    fn power_and_negation() {
        assert_eq!(rt("x**y**z"), "x**y**z");
        assert_eq!(rt("(x**y)**z"), "(x**y)**z");
        assert_eq!(rt("-5**2"), "-5**2");
        assert_eq!(rt("(-5)**2"), "(-5)**2");
        assert_eq!(rt("2**-1"), "2**-1");
        assert_eq!(
            print_expr(&Expr::Unary(UnOp::Neg, Box::new(Expr::Int(5)))),
            "-(5)"
        );
        assert_eq!(parse_expr("-5").unwrap(), Expr::Int(-5));
    }

    #[test]
    fn words_and_conditionals() {
        assert_eq!(
            rt("power(x,y) if y>0 else ERROR"),
            "power(x, y) if y>0 else ERROR"
        );
        assert_eq!(rt("not (a<0 and not b)"), "not (a<0 and not b)");
        assert_eq!(rt("(a if b else c) if d else e"), "(a if b else c) if d else e");
        assert_eq!(rt("a if b else c if d else e"), "a if b else c if d else e");
        assert_eq!(rt("x*(x if c else 1)"), "x*(x if c else 1)");
    }

    #[test]
    fn strings() {
        assert_eq!(rt("\"What is it\""), "'What is it'");
        assert_eq!(rt("\"it's\""), "\"it's\"");
        assert_eq!(rt("s[0:4]"), "s[0:4]");
        assert_eq!(rt("s[:4]"), "s[:4]");
    }

    #[test]
    fn floats() {
        assert_eq!(rt("42.0"), "42.0");
        assert_eq!(rt("1e-7"), "1e-7");
        assert_eq!(rt("17+5.0**2"), "17+5.0**2");
    }

    #[test]
    fn layout_breaks_long_conditionals() {
        let e = parse_expr(
            "'What is it'+'?' if 'What is it'[0:4]=='What' else 'What is it'+'.'",
        )
        .unwrap();
        let lines = print_layout(&e, LAYOUT_WIDTH);
        assert_eq!(
            lines,
            vec![
                "(   'What is it'+'?'",
                " if 'What is it'[0:4]=='What' else",
                "    'What is it'+'.'",
                ")",
            ]
        );
        let joined = lines.join("\n");
        assert_eq!(parse_expr(&joined).unwrap(), e);
    }
}
