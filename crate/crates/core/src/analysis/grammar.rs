//! Structural restrictions on definitions and function bodies.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::syntax::normalize::conditional_def;
use crate::syntax::subst::free_vars;
use crate::syntax::*;
use crate::value::is_primitive;

use super::registry::TrustRegistry;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "kebab-case")]
pub enum ViolationKind {
    DuplicateDefinition(String),
    ShadowsGlobal(String),
    UseOutsideBlock(String),
    UndefinedName(String),
    NonReturningBranch,
    MissingReturn,
    UnreachableCode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub line: usize,
    pub message: String,
}

impl ViolationKind {
    pub fn code(&self) -> &'static str {
        match self {
            ViolationKind::DuplicateDefinition(_) => "duplicate-definition",
            ViolationKind::ShadowsGlobal(_) => "shadows-global",
            ViolationKind::UseOutsideBlock(_) => "use-outside-block",
            ViolationKind::UndefinedName(_) => "undefined-name",
            ViolationKind::NonReturningBranch => "non-returning-branch",
            ViolationKind::MissingReturn => "missing-return",
            ViolationKind::UnreachableCode => "unreachable-code",
        }
    }
}

struct Checker<'a> {
    out: Vec<Violation>,
    reg: &'a TrustRegistry,
    globals: BTreeSet<String>,
    /// names defined anywhere in the current function
    fn_names: BTreeSet<String>,
    fname: String,
}

impl Checker<'_> {
    fn push(&mut self, kind: ViolationKind, line: usize) {
        let message = match &kind {
            ViolationKind::DuplicateDefinition(n) => format!("'{n}' is defined more than once"),
            ViolationKind::ShadowsGlobal(n) => format!("local '{n}' reuses the name of a global"),
            ViolationKind::UseOutsideBlock(n) => {
                format!("'{n}' is used outside the block that defines it")
            }
            ViolationKind::UndefinedName(n) => format!("'{n}' is used before it is defined"),
            ViolationKind::NonReturningBranch => {
                format!("in {}: an if must return in both branches or define one variable in both", self.fname)
            }
            ViolationKind::MissingReturn => format!("in {}: block does not end in a return", self.fname),
            ViolationKind::UnreachableCode => format!("in {}: statement after a return", self.fname),
        };
        self.out.push(Violation { kind, line, message });
    }

    fn known(&self, name: &str, scope: &[String]) -> bool {
        scope.iter().any(|s| s == name)
            || self.globals.contains(name)
            || self.reg.is_trusted(name)
            || is_primitive(name)
    }

    fn uses(&mut self, e: &Expr, scope: &[String], hidden: &BTreeSet<String>, line: usize) {
        for v in free_vars(e) {
            if self.known(&v, scope) {
                continue;
            }
            if hidden.contains(&v) {
                self.push(ViolationKind::UseOutsideBlock(v), line);
            } else {
                self.push(ViolationKind::UndefinedName(v), line);
            }
        }
    }

    fn define(&mut self, name: &str, line: usize) {
        if !self.fn_names.insert(name.to_string()) {
            self.push(ViolationKind::DuplicateDefinition(name.into()), line);
        }
        if self.globals.contains(name) {
            self.push(ViolationKind::ShadowsGlobal(name.into()), line);
        }
    }

    /// Checks a block; `scope` holds names visible on entry. Returns names
    /// defined inside nested blocks (for use-outside-block reports).
    fn block(&mut self, stmts: &[Stmt], scope: &mut Vec<String>, hidden: &mut BTreeSet<String>, line: usize) {
        let mark = scope.len();
        let mut returned = false;
        let mut last_line = line;
        for s in stmts {
            let sl = stmt_line(s);
            last_line = sl;
            if returned {
                self.push(ViolationKind::UnreachableCode, sl);
                break;
            }
            match s {
                Stmt::Assign { name, value, line, .. } => {
                    self.uses(value, scope, hidden, *line);
                    self.define(name, *line);
                    scope.push(name.clone());
                }
                Stmt::Return { value, line } => {
                    self.uses(value, scope, hidden, *line);
                    returned = true;
                }
                Stmt::If { guard, then, otherwise, line } => {
                    self.uses(guard, scope, hidden, *line);
                    if let Some((name, a, b)) = conditional_def(then, otherwise) {
                        self.uses(a, scope, hidden, *line);
                        self.uses(b, scope, hidden, *line);
                        self.define(name, *line);
                        scope.push(name.to_string());
                        continue;
                    }
                    if otherwise.is_empty() {
                        self.push(ViolationKind::NonReturningBranch, *line);
                    }
                    let before: BTreeSet<String> = self.fn_names.clone();
                    self.block(then, scope, hidden, *line);
                    self.block(otherwise, scope, hidden, *line);
                    for n in self.fn_names.difference(&before) {
                        hidden.insert(n.clone());
                    }
                    returned = true;
                }
            }
        }
        if !returned {
            self.push(ViolationKind::MissingReturn, last_line);
        }
        scope.truncate(mark);
    }
}

fn stmt_line(s: &Stmt) -> usize {
    match s {
        Stmt::Assign { line, .. } | Stmt::If { line, .. } | Stmt::Return { line, .. } => *line,
    }
}

/// All restriction violations in `p`; empty when the program is admissible.
pub fn check_grammar(p: &Program, reg: &TrustRegistry) -> Vec<Violation> {
    let mut c = Checker {
        out: Vec::new(),
        reg,
        globals: BTreeSet::new(),
        fn_names: BTreeSet::new(),
        fname: String::new(),
    };
    for item in &p.items {
        match item {
            Item::Import(_) => {}
            Item::Var(v) => {
                c.uses(&v.value, &[], &BTreeSet::new(), v.line);
                if !c.globals.insert(v.name.clone()) {
                    c.push(ViolationKind::DuplicateDefinition(v.name.clone()), v.line);
                }
            }
            Item::Trusted(t) => {
                if !c.globals.insert(t.name.clone()) {
                    c.push(ViolationKind::DuplicateDefinition(t.name.clone()), t.line);
                }
            }
            Item::Func(f) => {
                // a function may call itself
                if !c.globals.insert(f.name.clone()) {
                    c.push(ViolationKind::DuplicateDefinition(f.name.clone()), f.line);
                }
                c.fname = f.name.clone();
                c.fn_names.clear();
                let mut scope = Vec::new();
                for (n, _) in &f.params {
                    if !c.fn_names.insert(n.clone()) {
                        c.push(ViolationKind::DuplicateDefinition(n.clone()), f.line);
                    }
                    scope.push(n.clone());
                }
                c.block(&f.body, &mut scope, &mut BTreeSet::new(), f.line);
                if let Some(spec) = &f.spec {
                    for e in [&spec.pre, &spec.post, &spec.progress].into_iter().flatten() {
                        c.uses(e, &scope, &BTreeSet::new(), f.line);
                    }
                }
            }
        }
    }
    c.fname = "goal".into();
    c.uses(&p.goal, &[], &BTreeSet::new(), 0);
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<ViolationKind> {
        let p = parse_program(src).unwrap();
        check_grammar(&p, &TrustRegistry::for_program(&p))
            .into_iter()
            .map(|v| v.kind)
            .collect()
    }

    #[test]
    fn power_is_admissible() {
        let src = "x=3+2\ny=2\ndef power(b: float, e: int) -> float:\n    if e==1:\n        return b\n    else:\n        return b*power(b, e-1)\n# |-\npower(x,y)\n";
        assert_eq!(kinds(src), vec![]);
    }

    #[test]
    fn duplicate_local() {
        let src = "def f(x: int) -> int:\n    a: int = 1\n    a: int = 2\n    return a\n# |-\nf(1)\n";
        assert_eq!(kinds(src), vec![ViolationKind::DuplicateDefinition("a".into())]);
    }

    #[test]
    fn conditional_definition_is_fine() {
        let src = "def f(c: bool) -> int:\n    if c:\n        v: int = 1\n    else:\n        v: int = 2\n    return v\n# |-\nf(True)\n";
        assert_eq!(kinds(src), vec![]);
    }

    #[test]
    fn scoping_and_returns() {
        let src = "g: int = 1\ndef f(x: int) -> int:\n    g: int = 2\n    return g\n# |-\nf(1)\n";
        assert_eq!(kinds(src), vec![ViolationKind::ShadowsGlobal("g".into())]);
        let src = "def f(x: int) -> int:\n    if x>0:\n        return 1\n# |-\nf(1)\n";
        assert!(kinds(src).contains(&ViolationKind::NonReturningBranch));
        let src = "def f(x: int) -> int:\n    a: int = 1\n# |-\nf(1)\n";
        assert_eq!(kinds(src), vec![ViolationKind::MissingReturn]);
        let src = "def f(x: int) -> int:\n    return x\n    a: int = 1\n# |-\nf(1)\n";
        assert_eq!(kinds(src), vec![ViolationKind::UnreachableCode]);
        let src = "a: int = b\nb: int = 1\n# |-\na\n";
        assert_eq!(kinds(src), vec![ViolationKind::UndefinedName("b".into())]);
    }
}
