use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

const RESERVED: &[&str] = &[
    "True", "False", "ERROR", "and", "or", "not", "if", "else", "elif", "lambda", "def",
    "return", "import", "while", "for", "class", "pass", "in", "is", "None", "from", "with",
    "try", "except", "raise", "global", "nonlocal", "yield", "del", "assert", "break",
    "continue", "async", "await", "as", "finally",
];

/// Parses a whole source file: definitions, the `# |-` line, then the goal.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    p.program()
}

/// Parses a single expression (surrounding blank lines allowed).
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    p.skip_newlines();
    let e = p.expr()?;
    p.skip_newlines();
    p.expect_eof()?;
    Ok(e)
}

/// Parses a type annotation such as `int` or `Callable[[str], str]`.
pub fn parse_type(text: &str) -> Result<Type, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let t = p.ty()?;
    p.skip_newlines();
    p.expect_eof()?;
    Ok(t)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn grammar(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Grammar {
            line,
            col,
            message: message.into(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected '{p}', found {}", describe(self.peek()))))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected '{kw}', found {}", describe(self.peek()))))
        }
    }

    fn expect_newline(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Newline => {
                self.next();
                Ok(())
            }
            Tok::Eof => Ok(()),
            other => Err(self.syntax(format!("expected end of line, found {}", describe(other)))),
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            other => Err(self.syntax(format!("unexpected {} after expression", describe(other)))),
        }
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Tok::Newline) {
            self.next();
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.next();
                Ok(s)
            }
            Tok::Ident(s) => Err(self.grammar(format!("'{s}' is not supported here"))),
            other => Err(self.syntax(format!("expected a name, found {}", describe(&other)))),
        }
    }

    fn binder(&mut self) -> Result<String, ParseError> {
        let name = self.ident()?;
        if name == "_" {
            return Err(self.grammar("'_' is reserved for evaluation-context holes"));
        }
        Ok(name)
    }

    // ---- program structure ------------------------------------------------

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut items = Vec::new();
        let mut doc: Option<String> = None;
        let mut meta: Vec<(String, usize)> = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Newline => {
                    self.next();
                }
                Tok::Turnstile => {
                    self.next();
                    break;
                }
                Tok::Eof => return Err(self.syntax("missing '# |-' line before the goal")),
                Tok::Indent => return Err(self.syntax("unexpected indentation")),
                Tok::Str(s) if matches!(self.peek_at(1), Tok::Newline | Tok::Eof) => {
                    self.next();
                    self.expect_newline()?;
                    doc = Some(s);
                }
                Tok::Meta(m) => {
                    let line = self.here().0;
                    self.next();
                    meta.push((m, line));
                }
                Tok::Ident(kw) if kw == "import" => {
                    self.next();
                    let mut name = self.ident()?;
                    while self.eat_punct(".") {
                        name.push('.');
                        name.push_str(&self.ident()?);
                    }
                    self.expect_newline()?;
                    items.push(Item::Import(name));
                }
                Tok::Ident(kw) if kw == "def" => {
                    let stub = parse_meta(&meta)?;
                    meta.clear();
                    items.push(self.def(doc.take(), stub)?);
                }
                Tok::Ident(kw)
                    if matches!(
                        kw.as_str(),
                        "if" | "while" | "for" | "class" | "return" | "from" | "with" | "try"
                    ) =>
                {
                    return Err(self.grammar(format!(
                        "'{kw}' is not allowed among top-level definitions"
                    )));
                }
                Tok::Ident(_) => {
                    if !meta.is_empty() {
                        return Err(self.syntax("contract lines must precede a function"));
                    }
                    items.push(Item::Var(self.global(doc.take())?));
                }
                other => {
                    return Err(self.syntax(format!("unexpected {}", describe(&other))));
                }
            }
        }
        while matches!(self.peek(), Tok::Newline | Tok::Meta(_)) {
            self.next();
        }
        if matches!(self.peek(), Tok::Eof) {
            return Err(self.syntax("expected a goal expression after '# |-'"));
        }
        let goal = self.expr()?;
        self.skip_newlines();
        if !matches!(self.peek(), Tok::Eof) {
            return Err(self.syntax("exactly one goal expression may follow '# |-'"));
        }
        Ok(Program { items, goal })
    }

    fn global(&mut self, doc: Option<String>) -> Result<VarDef, ParseError> {
        let line = self.here().0;
        let name = self.binder()?;
        let ty = if self.eat_punct(":") {
            Some(self.ty()?)
        } else {
            None
        };
        if !self.is_punct("=") {
            return Err(self.grammar("only definitions of the form 'name: type = expr' are allowed"));
        }
        self.next();
        let value = self.expr()?;
        self.expect_newline()?;
        Ok(VarDef {
            name,
            ty,
            value,
            doc,
            line,
        })
    }

    fn def(&mut self, doc: Option<String>, stub: Option<SpecStub>) -> Result<Item, ParseError> {
        let line = self.here().0;
        self.expect_kw("def")?;
        let name = self.binder()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        while !self.is_punct(")") {
            let p = self.binder()?;
            if !self.eat_punct(":") {
                return Err(self.grammar(format!("parameter '{p}' needs a type annotation")));
            }
            let t = self.ty()?;
            params.push((p, t));
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        if !self.eat_punct("->") {
            return Err(self.grammar(format!("function '{name}' needs a return type annotation")));
        }
        let ret = self.ty()?;
        self.expect_punct(":")?;
        // Stub: `def f(...) -> T: ...`
        let is_stub = if matches!(self.peek(), Tok::Ellipsis) {
            self.next();
            self.expect_newline()?;
            true
        } else if matches!(self.peek(), Tok::Newline)
            && matches!(self.peek_at(1), Tok::Indent)
            && matches!(self.peek_at(2), Tok::Ellipsis)
        {
            self.next();
            self.next();
            self.next();
            self.expect_newline()?;
            if !matches!(self.peek(), Tok::Dedent) {
                return Err(self.syntax("a stub body may only contain '...'"));
            }
            self.next();
            true
        } else {
            false
        };
        if is_stub {
            let stub = stub.unwrap_or_default();
            let (Some(pre), Some(post)) = (stub.pre, stub.post) else {
                return Err(self.syntax(format!(
                    "stub '{name}' needs '#: pre:' and '#: post:' contract lines"
                )));
            };
            return Ok(Item::Trusted(TrustedStub {
                name,
                params,
                ret,
                pre,
                post,
                doc,
                line,
            }));
        }
        let body = self.block()?;
        Ok(Item::Func(FuncDef {
            name,
            params,
            ret,
            body,
            doc,
            spec: stub,
            line,
        }))
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if !matches!(self.peek(), Tok::Newline) {
            // single-line body: `def f(x: int) -> int: return x`
            let s = self.stmt()?;
            return Ok(vec![s]);
        }
        self.next();
        if !matches!(self.peek(), Tok::Indent) {
            return Err(self.syntax("expected an indented block"));
        }
        self.next();
        let mut stmts = Vec::new();
        loop {
            match self.peek() {
                Tok::Dedent => {
                    self.next();
                    break;
                }
                Tok::Newline => {
                    self.next();
                }
                Tok::Eof | Tok::Turnstile => break,
                Tok::Str(_) if stmts.is_empty() => {
                    // docstring inside the body
                    self.next();
                    self.expect_newline()?;
                }
                _ => stmts.push(self.stmt()?),
            }
        }
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let line = self.here().0;
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "return" => {
                self.next();
                let value = self.expr()?;
                self.expect_newline()?;
                Ok(Stmt::Return { value, line })
            }
            Tok::Ident(kw) if kw == "if" => {
                self.next();
                let guard = self.expr()?;
                self.expect_punct(":")?;
                let then = self.block()?;
                if self.is_kw("elif") {
                    return Err(self.grammar("'elif' is not supported; nest an if inside else"));
                }
                let otherwise = if self.eat_kw("else") {
                    self.expect_punct(":")?;
                    self.block()?
                } else {
                    Vec::new()
                };
                Ok(Stmt::If {
                    guard,
                    then,
                    otherwise,
                    line,
                })
            }
            Tok::Ident(kw)
                if matches!(
                    kw.as_str(),
                    "while" | "for" | "class" | "import" | "pass" | "def" | "global" | "del"
                ) =>
            {
                Err(self.grammar(format!("'{kw}' is not allowed in function bodies")))
            }
            Tok::Ident(_) => {
                let name = self.binder()?;
                if self.eat_punct(":") {
                    let ty = self.ty()?;
                    self.expect_punct("=")?;
                    let value = self.expr()?;
                    self.expect_newline()?;
                    Ok(Stmt::Assign {
                        name,
                        ty,
                        value,
                        line,
                    })
                } else if self.is_punct("=")
                    || self.is_punct("+=")
                    || self.is_punct("-=")
                    || self.is_punct("*=")
                    || self.is_punct("/=")
                {
                    Err(self.grammar(format!(
                        "reassignment of '{name}' is not allowed; local definitions need a type"
                    )))
                } else {
                    Err(self.grammar("expression statements are not allowed"))
                }
            }
            other => Err(self.syntax(format!("unexpected {}", describe(&other)))),
        }
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        let name = match self.next() {
            Tok::Ident(s) => s,
            other => return Err(self.syntax(format!("expected a type, found {}", describe(&other)))),
        };
        match name.as_str() {
            "int" => Ok(Type::Int),
            "float" => Ok(Type::Float),
            "bool" => Ok(Type::Bool),
            "str" | "string" => Ok(Type::Str),
            "Callable" => {
                self.expect_punct("[")?;
                self.expect_punct("[")?;
                let mut params = Vec::new();
                while !self.is_punct("]") {
                    params.push(self.ty()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct("]")?;
                self.expect_punct(",")?;
                let ret = self.ty()?;
                self.expect_punct("]")?;
                Ok(Type::Func(params, Box::new(ret)))
            }
            other => Err(self.grammar(format!("unsupported type '{other}'"))),
        }
    }

    // ---- expressions ------------------------------------------------------

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("lambda") {
            let mut params = Vec::new();
            while !self.is_punct(":") {
                let name = self.binder()?;
                let default = if self.eat_punct("=") {
                    Some(self.cond_expr()?)
                } else {
                    None
                };
                params.push(Param { name, default });
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(":")?;
            let body = self.expr()?;
            return Ok(Expr::Lambda(params, Box::new(body)));
        }
        self.cond_expr()
    }

    fn cond_expr(&mut self) -> Result<Expr, ParseError> {
        let then = self.or_expr()?;
        if self.eat_kw("if") {
            let guard = self.or_expr()?;
            self.expect_kw("else")?;
            let otherwise = self.expr()?;
            return Ok(Expr::cond(then, guard, otherwise));
        }
        Ok(then)
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.and_expr()?;
        while self.eat_kw("or") {
            let r = self.and_expr()?;
            l = Expr::binary(BinOp::Or, l, r);
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.not_expr()?;
        while self.eat_kw("and") {
            let r = self.not_expr()?;
            l = Expr::binary(BinOp::And, l, r);
        }
        Ok(l)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("not") {
            let e = self.not_expr()?;
            return Ok(Expr::not(e));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let l = self.additive()?;
        let op = match self.peek() {
            Tok::Punct("==") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct(">=") => BinOp::Ge,
            Tok::Ident(s) if s == "in" || s == "is" => {
                return Err(self.grammar(format!("'{s}' comparisons are not supported")))
            }
            _ => return Ok(l),
        };
        self.next();
        let r = self.additive()?;
        if matches!(
            self.peek(),
            Tok::Punct("==" | "!=" | "<" | "<=" | ">" | ">=")
        ) {
            return Err(self.grammar("chained comparisons are not supported"));
        }
        Ok(Expr::binary(op, l, r))
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => BinOp::Add,
                Tok::Punct("-") => BinOp::Sub,
                _ => return Ok(l),
            };
            self.next();
            let r = self.term()?;
            l = Expr::binary(op, l, r);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("*") => BinOp::Mul,
                Tok::Punct("/") => BinOp::Div,
                Tok::Punct("//") => BinOp::FloorDiv,
                Tok::Punct("%") | Tok::Punct("@") => {
                    return Err(self.grammar("operator not supported"))
                }
                _ => return Ok(l),
            };
            self.next();
            let r = self.unary()?;
            l = Expr::binary(op, l, r);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.is_punct("-") {
            self.next();
            // `-5` is a literal unless it is the base of `**` (`-5**2` is `-(5**2)`).
            let folds = !matches!(self.peek_at(1), Tok::Punct("**") | Tok::Punct("(") | Tok::Punct("["));
            match self.peek().clone() {
                Tok::Int(n) if folds => {
                    self.next();
                    return Ok(Expr::Int(-n));
                }
                Tok::Float(x) if folds => {
                    self.next();
                    return Ok(Expr::Float(-x));
                }
                _ => {}
            }
            let e = self.unary()?;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(e)));
        }
        if self.is_punct("+") || self.is_punct("~") {
            return Err(self.grammar("unary operator not supported"));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.postfix()?;
        if self.eat_punct("**") {
            let exp = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        loop {
            if self.is_punct("(") {
                self.next();
                let args = self.args()?;
                e = match e {
                    Expr::Var(name) => Expr::Call(name, args),
                    other => Expr::Apply(Box::new(other), args),
                };
            } else if self.is_punct("[") {
                self.next();
                let lo = self.slice_bound()?;
                if !self.eat_punct(":") {
                    return Err(self.grammar("only slices s[lo:hi] are supported, not indexing"));
                }
                let hi = self.slice_bound()?;
                self.expect_punct("]")?;
                e = Expr::Slice(Box::new(e), lo, hi);
            } else if self.is_punct(".") {
                return Err(self.grammar("attribute access is only supported in function names"));
            } else {
                return Ok(e);
            }
        }
    }

    fn slice_bound(&mut self) -> Result<Option<usize>, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) if n >= 0 => {
                self.next();
                Ok(Some(n as usize))
            }
            Tok::Punct(":") | Tok::Punct("]") => Ok(None),
            _ => Err(self.grammar("slice bounds must be non-negative integer literals")),
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        while !self.is_punct(")") {
            args.push(self.expr()?);
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(Expr::Int(n))
            }
            Tok::Float(x) => {
                self.next();
                Ok(Expr::Float(x))
            }
            Tok::Str(s) => {
                self.next();
                let mut s = s;
                // implicit concatenation of adjacent literals
                while let Tok::Str(more) = self.peek().clone() {
                    self.next();
                    s.push_str(&more);
                }
                Ok(Expr::Str(s))
            }
            Tok::Punct("(") => {
                self.next();
                if self.is_punct(")") {
                    return Err(self.grammar("tuples are not supported"));
                }
                let e = self.expr()?;
                if self.is_punct(",") {
                    return Err(self.grammar("tuples are not supported"));
                }
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                "True" => {
                    self.next();
                    Ok(Expr::Bool(true))
                }
                "False" => {
                    self.next();
                    Ok(Expr::Bool(false))
                }
                "ERROR" => {
                    self.next();
                    Ok(Expr::Error)
                }
                "lambda" => self.expr(),
                _ => {
                    let mut name = self.ident()?;
                    if self.is_punct(".") && matches!(self.peek_at(1), Tok::Ident(_)) {
                        while self.eat_punct(".") {
                            name.push('.');
                            match self.next() {
                                Tok::Ident(part) => name.push_str(&part),
                                other => {
                                    return Err(
                                        self.syntax(format!("expected a name, found {}", describe(&other)))
                                    )
                                }
                            }
                        }
                        if !self.is_punct("(") {
                            return Err(self.grammar(format!(
                                "attribute access '{name}' is only supported for calls"
                            )));
                        }
                    }
                    Ok(Expr::Var(name))
                }
            },
            Tok::Punct("[") | Tok::Punct("{") => Err(self.grammar("collections are not supported")),
            other => Err(self.syntax(format!("unexpected {}", describe(&other)))),
        }
    }
}

fn parse_meta(lines: &[(String, usize)]) -> Result<Option<SpecStub>, ParseError> {
    if lines.is_empty() {
        return Ok(None);
    }
    let mut stub = SpecStub::default();
    for (text, line) in lines {
        let at = |e: ParseError| match e {
            ParseError::Syntax { col, message, .. } => ParseError::Syntax {
                line: *line,
                col,
                message,
            },
            ParseError::Grammar { col, message, .. } => ParseError::Grammar {
                line: *line,
                col,
                message,
            },
        };
        if text == "trusted" {
            stub.trusted = true;
            continue;
        }
        let Some((key, value)) = text.split_once(':') else {
            return Err(ParseError::Syntax {
                line: *line,
                col: 1,
                message: format!("malformed contract line '#: {text}'"),
            });
        };
        let value = value.trim();
        match key.trim() {
            "pre" => stub.pre = Some(parse_expr(value).map_err(at)?),
            "post" => stub.post = Some(parse_expr(value).map_err(at)?),
            "progress" => stub.progress = Some(parse_expr(value).map_err(at)?),
            "pmin" => {
                stub.pmin = Some(match parse_expr(value).map_err(at)? {
                    Expr::Int(n) => n,
                    _ => {
                        return Err(ParseError::Syntax {
                            line: *line,
                            col: 1,
                            message: "pmin must be an integer literal".into(),
                        })
                    }
                })
            }
            other => {
                return Err(ParseError::Syntax {
                    line: *line,
                    col: 1,
                    message: format!("unknown contract key '{other}'"),
                })
            }
        }
    }
    Ok(Some(stub))
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(n) => format!("number {n}"),
        Tok::Float(x) => format!("number {x}"),
        Tok::Str(_) => "string literal".into(),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Punct(p) => format!("'{p}'"),
        Tok::Ellipsis => "'...'".into(),
        Tok::Newline => "end of line".into(),
        Tok::Indent => "indentation".into(),
        Tok::Dedent => "dedent".into(),
        Tok::Turnstile => "'# |-'".into(),
        Tok::Meta(_) => "contract line".into(),
        Tok::Eof => "end of input".into(),
    }
}
