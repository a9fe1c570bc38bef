//! Indentation-aware tokenizer.
//!
//! Produces `Indent`/`Dedent`/`Newline` tokens the way the host language does,
//! plus two line-level tokens of our own: the turnstile line `# |-` and
//! contract lines beginning with `#:`.

use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Int(i64),
    Float(f64),
    Str(String),
    Ident(String),
    Punct(&'static str),
    Ellipsis,
    Newline,
    Indent,
    Dedent,
    Turnstile,
    Meta(String),
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const PUNCTS: &[&str] = &[
    "**", "//", "==", "!=", "<=", ">=", "->", "+=", "-=", "*=", "/=", "+", "-", "*", "/", "<",
    ">", "(", ")", "[", "]", ":", ",", "=", ".", "%", "{", "}", "@", "&", "|", "^", "~",
];

struct Lexer<'a> {
    src: &'a [char],
    pos: usize,
    line: usize,
    col: usize,
    depth: usize,
    indents: Vec<usize>,
    out: Vec<Token>,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut lx = Lexer {
        src: &chars,
        pos: 0,
        line: 1,
        col: 1,
        depth: 0,
        indents: vec![0],
        out: Vec::new(),
    };
    lx.run()?;
    Ok(lx.out)
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.src.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn push(&mut self, tok: Tok, line: usize, col: usize) {
        self.out.push(Token { tok, line, col });
    }

    fn rest_of_line(&self) -> String {
        self.src[self.pos..]
            .iter()
            .take_while(|&&c| c != '\n')
            .collect()
    }

    fn skip_line(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    fn run(&mut self) -> Result<(), ParseError> {
        let mut at_line_start = true;
        while self.pos < self.src.len() {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                let mut width = 0;
                while let Some(c) = self.peek() {
                    match c {
                        ' ' => width += 1,
                        '\t' => return Err(self.err("tabs are not allowed for indentation")),
                        '\r' => {}
                        _ => break,
                    }
                    self.bump();
                }
                let rest = self.rest_of_line();
                let trimmed = rest.trim();
                if trimmed.is_empty() {
                    self.bump();
                    at_line_start = true;
                    continue;
                }
                if trimmed.starts_with('#') {
                    let (line, col) = (self.line, self.col);
                    if trimmed == "# |-" || trimmed == "#|-" {
                        self.close_indents(0, line)?;
                        self.push(Tok::Turnstile, line, col);
                        self.push(Tok::Newline, line, col);
                    } else if let Some(meta) = trimmed.strip_prefix("#:") {
                        if width == 0 {
                            self.close_indents(0, line)?;
                        }
                        self.push(Tok::Meta(meta.trim().to_string()), line, col);
                        self.push(Tok::Newline, line, col);
                    }
                    self.skip_line();
                    self.bump();
                    at_line_start = true;
                    continue;
                }
                let line = self.line;
                let top = *self.indents.last().unwrap();
                if width > top {
                    self.indents.push(width);
                    self.push(Tok::Indent, line, 1);
                } else if width < top {
                    self.close_indents(width, line)?;
                }
            }
            let Some(c) = self.peek() else { break };
            let (line, col) = (self.line, self.col);
            match c {
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        if !matches!(
                            self.out.last().map(|t| &t.tok),
                            Some(Tok::Newline) | None
                        ) {
                            self.push(Tok::Newline, line, col);
                        }
                        at_line_start = true;
                    }
                }
                ' ' | '\r' => {
                    self.bump();
                }
                '\t' => {
                    self.bump();
                }
                '\\' if self.peek_at(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '#' => self.skip_line(),
                '"' | '\'' => {
                    let s = self.string(c)?;
                    self.push(Tok::Str(s), line, col);
                }
                '0'..='9' => {
                    let t = self.number()?;
                    self.push(t, line, col);
                }
                '.' if self.peek_at(1) == Some('.') && self.peek_at(2) == Some('.') => {
                    self.bump();
                    self.bump();
                    self.bump();
                    self.push(Tok::Ellipsis, line, col);
                }
                '.' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => {
                    let t = self.number()?;
                    self.push(t, line, col);
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut id = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_alphanumeric() || c == '_' {
                            id.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.push(Tok::Ident(id), line, col);
                }
                _ => {
                    let p = PUNCTS
                        .iter()
                        .find(|p| {
                            p.chars()
                                .enumerate()
                                .all(|(i, pc)| self.peek_at(i) == Some(pc))
                        })
                        .ok_or_else(|| self.err(format!("unexpected character {c:?}")))?;
                    for _ in 0..p.len() {
                        self.bump();
                    }
                    match *p {
                        "(" | "[" | "{" => self.depth += 1,
                        ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
                        _ => {}
                    }
                    self.push(Tok::Punct(p), line, col);
                }
            }
        }
        let line = self.line;
        if !matches!(self.out.last().map(|t| &t.tok), Some(Tok::Newline) | None) {
            self.push(Tok::Newline, line, 1);
        }
        self.close_indents(0, line)?;
        self.push(Tok::Eof, line, 1);
        Ok(())
    }

    fn close_indents(&mut self, width: usize, line: usize) -> Result<(), ParseError> {
        while *self.indents.last().unwrap() > width {
            self.indents.pop();
            self.push(Tok::Dedent, line, 1);
        }
        if *self.indents.last().unwrap() != width {
            return Err(ParseError::Syntax {
                line,
                col: 1,
                message: "inconsistent dedent".into(),
            });
        }
        Ok(())
    }

    fn string(&mut self, quote: char) -> Result<String, ParseError> {
        let triple = self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote);
        let n = if triple { 3 } else { 1 };
        for _ in 0..n {
            self.bump();
        }
        let mut s = String::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(self.err("unterminated string literal"));
            };
            if c == quote {
                if !triple {
                    self.bump();
                    return Ok(s);
                }
                if self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                    self.bump();
                    self.bump();
                    self.bump();
                    return Ok(s);
                }
            }
            if c == '\n' && !triple {
                return Err(self.err("unterminated string literal"));
            }
            self.bump();
            if c == '\\' {
                let e = self.bump().ok_or_else(|| self.err("bad escape"))?;
                match e {
                    'n' => s.push('\n'),
                    't' => s.push('\t'),
                    'r' => s.push('\r'),
                    '\\' => s.push('\\'),
                    '\'' => s.push('\''),
                    '"' => s.push('"'),
                    '0' => s.push('\0'),
                    '\n' => {}
                    other => return Err(self.err(format!("unsupported escape \\{other}"))),
                }
            } else {
                s.push(c);
            }
        }
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let mut text = String::new();
        let mut is_float = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == '_' {
                if c != '_' {
                    text.push(c);
                }
                self.bump();
            } else if c == '.' && !is_float && self.peek_at(1) != Some('.') {
                is_float = true;
                text.push(c);
                self.bump();
            } else if c == 'e' || c == 'E' {
                let signed = matches!(self.peek_at(1), Some('+') | Some('-'));
                let digit_at = if signed { 2 } else { 1 };
                if !self.peek_at(digit_at).is_some_and(|d| d.is_ascii_digit()) {
                    break;
                }
                is_float = true;
                text.push('e');
                self.bump();
                if signed {
                    text.push(self.bump().unwrap());
                }
                while let Some(d) = self.peek().filter(|d| d.is_ascii_digit()) {
                    text.push(d);
                    self.bump();
                }
                break;
            } else {
                break;
            }
        }
        if self.peek().is_some_and(|c| c.is_alphabetic() || c == '_') {
            return Err(self.err("malformed number literal"));
        }
        if is_float {
            text.parse::<f64>()
                .map(Tok::Float)
                .map_err(|_| self.err(format!("bad float literal {text}")))
        } else {
            text.parse::<i64>()
                .map(Tok::Int)
                .map_err(|_| self.err(format!("integer literal {text} out of range")))
        }
    }
}
