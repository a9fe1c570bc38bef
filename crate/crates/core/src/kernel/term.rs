//! Terms of a logic and their concrete syntax.
//!
//! ```text
//! even(S(S(N)))        constructor application, N a metavariable
//! even(4)              numeral sugar for sorts with O and S
//! [x:p, y:q]           list sugar for sorts with GNil and GCons
//! `1 + (0 if True else 100)`   a quoted program expression
//! "name-to-def @root"  a text literal
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::snm::context::is_metavar;
use crate::syntax::subst::free_vars;
use crate::syntax::{print_expr, Expr};

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Meta(String),
    App(String, Vec<Term>),
    /// A program expression; capitalized variables inside are metavariables.
    Code(Expr),
    Text(String),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::App(name.into(), Vec::new())
    }

    pub fn nat(n: u64) -> Term {
        (0..n).fold(Term::atom("O"), |t, _| Term::App("S".into(), vec![t]))
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Term::Meta(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_closed),
            Term::Code(e) => code_metas(e).is_empty(),
            Term::Text(_) => true,
        }
    }

    /// Metavariables in order of first appearance.
    pub fn metas(&self, out: &mut Vec<String>) {
        match self {
            Term::Meta(m) => {
                if !out.contains(m) {
                    out.push(m.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.metas(out)),
            Term::Code(e) => {
                for m in code_metas(e) {
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
            }
            Term::Text(_) => {}
        }
    }

    fn as_nat(&self) -> Option<u64> {
        match self {
            Term::App(o, a) if o == "O" && a.is_empty() => Some(0),
            Term::App(s, a) if s == "S" && a.len() == 1 => a[0].as_nat().map(|n| n + 1),
            _ => None,
        }
    }

    fn as_list(&self) -> Option<Vec<(&Term, &Term)>> {
        let mut out = Vec::new();
        let mut t = self;
        loop {
            match t {
                Term::App(n, a) if n == "GNil" && a.is_empty() => return Some(out),
                Term::App(n, a) if n == "GCons" && a.len() == 3 => {
                    out.push((&a[0], &a[1]));
                    t = &a[2];
                }
                _ => return None,
            }
        }
    }
}

pub fn code_metas(e: &Expr) -> Vec<String> {
    free_vars(e).into_iter().filter(|v| is_metavar(v)).collect()
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.as_nat() {
            return write!(f, "{n}");
        }
        if let Some(items) = self.as_list() {
            f.write_str("[")?;
            for (i, (k, v)) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{k}:{v}")?;
            }
            return f.write_str("]");
        }
        match self {
            Term::Meta(m) => f.write_str(m),
            Term::App(name, args) if args.is_empty() => f.write_str(name),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Term::Code(e) => write!(f, "`{}`", print_expr(e)),
            Term::Text(s) => write!(f, "{s:?}"),
        }
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A relation applied to terms: a goal, premise or conclusion.
#[derive(Clone, Debug, PartialEq)]
pub struct Judgment {
    pub rel: String,
    pub args: Vec<Term>,
}

impl Judgment {
    pub fn metas(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.args.iter().for_each(|a| a.metas(&mut out));
        out
    }

    pub fn is_closed(&self) -> bool {
        self.args.iter().all(Term::is_closed)
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.rel)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for Judgment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub type Subst = BTreeMap<String, Term>;

// ---- unsorted parse trees --------------------------------------------------

/// A term as written, before sorts decide what each name means.
#[derive(Clone, Debug, PartialEq)]
pub enum Raw {
    Name(String, Vec<Raw>),
    Num(u64),
    List(Vec<(Raw, Raw)>),
    Code(String),
    Text(String),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Num(u64),
    Code(String),
    Text(String),
    Punct(char),
}

fn lex(s: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' | ')' | ',' | '[' | ']' | ':' | '/' => {
                out.push(Tok::Punct(c));
                i += 1;
            }
            '`' => {
                let end = cs[i + 1..]
                    .iter()
                    .position(|&c| c == '`')
                    .ok_or("unterminated `code`")?;
                out.push(Tok::Code(cs[i + 1..i + 1 + end].iter().collect()));
                i += end + 2;
            }
            '"' => {
                let mut text = String::new();
                i += 1;
                loop {
                    match cs.get(i) {
                        None => return Err("unterminated string".into()),
                        Some('"') => break,
                        Some('\\') => {
                            text.push(*cs.get(i + 1).ok_or("unterminated string")?);
                            i += 2;
                        }
                        Some(&c) => {
                            text.push(c);
                            i += 1;
                        }
                    }
                }
                out.push(Tok::Text(text));
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < cs.len() && cs[i].is_ascii_digit() {
                    i += 1;
                }
                let n: String = cs[start..i].iter().collect();
                out.push(Tok::Num(n.parse().map_err(|_| format!("numeral {n} is too large"))?));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < cs.len() && (cs[i].is_alphanumeric() || matches!(cs[i], '_' | '-' | '.' | '\'')) {
                    i += 1;
                }
                out.push(Tok::Name(cs[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character '{other}'")),
        }
    }
    Ok(out)
}

pub struct RawParser {
    toks: Vec<Tok>,
    pos: usize,
}

impl RawParser {
    pub fn new(s: &str) -> Result<RawParser, String> {
        Ok(RawParser { toks: lex(s)?, pos: 0 })
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn eat(&mut self, c: char) -> bool {
        if self.toks.get(self.pos) == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), String> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(format!("expected '{c}'{}", self.here()))
        }
    }

    fn here(&self) -> String {
        match self.toks.get(self.pos) {
            None => " at end of input".into(),
            Some(t) => format!(" before {t:?}"),
        }
    }

    pub fn term(&mut self) -> Result<Raw, String> {
        let tok = self.toks.get(self.pos).cloned().ok_or("expected a term at end of input")?;
        self.pos += 1;
        match tok {
            Tok::Num(n) => Ok(Raw::Num(n)),
            Tok::Code(c) => Ok(Raw::Code(c)),
            Tok::Text(t) => Ok(Raw::Text(t)),
            Tok::Name(n) => {
                let mut args = Vec::new();
                if self.eat('(')
                    && !self.eat(')') {
                        loop {
                            args.push(self.term()?);
                            if self.eat(')') {
                                break;
                            }
                            self.expect(',')?;
                        }
                    }
                Ok(Raw::Name(n, args))
            }
            Tok::Punct('[') => {
                let mut items = Vec::new();
                if !self.eat(']') {
                    loop {
                        let k = self.term()?;
                        self.expect(':')?;
                        let v = self.term()?;
                        items.push((k, v));
                        if self.eat(']') {
                            break;
                        }
                        self.expect(',')?;
                    }
                }
                Ok(Raw::List(items))
            }
            Tok::Punct(c) => Err(format!("unexpected '{c}'")),
        }
    }

    /// `rel(args)`, returned as a raw name application.
    pub fn judgment(&mut self) -> Result<(String, Vec<Raw>), String> {
        match self.term()? {
            Raw::Name(n, args) => Ok((n, args)),
            other => Err(format!("expected a relation, found {other:?}")),
        }
    }

    /// Comma-separated judgments up to `stop` or the end.
    pub fn judgments(&mut self, stop: Option<char>) -> Result<Vec<(String, Vec<Raw>)>, String> {
        let mut out = Vec::new();
        let done = |p: &RawParser| p.at_end() || stop.is_some_and(|c| p.toks.get(p.pos) == Some(&Tok::Punct(c)));
        if done(self) {
            return Ok(out);
        }
        loop {
            out.push(self.judgment()?);
            if !self.eat(',') {
                break;
            }
        }
        if !done(self) {
            return Err(format!("expected ','{}", self.here()));
        }
        Ok(out)
    }
}
