//! A small deductive kernel: logics declared as data (sorts, relations,
//! inference rules over metavariables), relation actions, and backward
//! proof checking that reports the proof state after every step.
//!
//! Logic documents are line based:
//!
//! ```text
//! logic even
//! sort Nat = O | S(Nat)
//! relation even(Nat) action=inference
//! rule even-zero: / even(0)
//! rule even-nonzero: even(N) / even(S(S(N)))
//! ```
//!
//! Capitalized names that are not constructors are metavariables. A sort
//! may instead be `atom` (any lowercase name), `code` (a quoted program
//! expression) or `text` (a string literal). Rules marked `[auto]` close
//! matching goals without a script step.

mod builtins;
pub mod bridge;
mod check;
pub mod logics;
pub mod term;
mod unify;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use builtins::{ActionEnv, BUILTIN_ACTIONS};
pub use check::{
    apply_backward, check_proof, parse_script, search, CheckReport, ProofNode, ProofScript, ProofState, StepReport, StepStatus,
};
pub use term::{Judgment, Subst, Term};

use term::{Raw, RawParser};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown sort '{0}'")]
    UnknownSort(String),
    #[error("unknown relation '{0}'")]
    UnknownRelation(String),
    #[error("unknown builtin action '{0}'")]
    UnknownBuiltinAction(String),
    #[error("signature error: {0}")]
    Signature(String),
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ctor {
    pub name: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "constructors", rename_all = "lowercase")]
pub enum SortKind {
    Ctors(Vec<Ctor>),
    Atom,
    Code,
    Text,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SortDef {
    pub name: String,
    #[serde(flatten)]
    pub kind: SortKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Inference,
    Builtin(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationDef {
    pub name: String,
    pub args: Vec<String>,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rule {
    pub name: String,
    pub premises: Vec<Judgment>,
    pub conclusion: Judgment,
    pub auto: bool,
    /// Sort of every metavariable.
    pub metas: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Logic {
    pub name: String,
    pub version: String,
    pub sorts: Vec<SortDef>,
    pub relations: Vec<RelationDef>,
    pub rules: Vec<Rule>,
}

impl Logic {
    pub fn sort(&self, name: &str) -> Option<&SortDef> {
        self.sorts.iter().find(|s| s.name == name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationDef> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    fn ctor(&self, sort: &str, name: &str) -> Option<&Ctor> {
        match &self.sort(sort)?.kind {
            SortKind::Ctors(cs) => cs.iter().find(|c| c.name == name),
            _ => None,
        }
    }

    /// Parses a closed judgment such as `even(4)`.
    pub fn parse_goal(&self, text: &str) -> Result<Judgment, LogicError> {
        let syntax = |message: String| LogicError::Syntax { line: 1, message };
        let mut p = RawParser::new(text).map_err(syntax)?;
        let (rel, args) = p.judgment().map_err(syntax)?;
        if !p.at_end() {
            return Err(syntax("unexpected text after the goal".into()));
        }
        let mut metas = BTreeMap::new();
        let j = self.elaborate_judgment(&rel, &args, &mut metas)?;
        if !j.is_closed() {
            return Err(LogicError::SortMismatch(format!("goal {j} contains metavariables")));
        }
        Ok(j)
    }

    /// Parses a term of the given sort, e.g. a binding in a proof script.
    pub fn parse_term(&self, text: &str, sort: &str) -> Result<Term, LogicError> {
        let syntax = |message: String| LogicError::Syntax { line: 1, message };
        let mut p = RawParser::new(text).map_err(syntax)?;
        let raw = p.term().map_err(syntax)?;
        if !p.at_end() {
            return Err(syntax("unexpected text after the term".into()));
        }
        self.elaborate(&raw, sort, &mut BTreeMap::new())
    }

    fn elaborate_judgment(
        &self,
        rel: &str,
        args: &[Raw],
        metas: &mut BTreeMap<String, String>,
    ) -> Result<Judgment, LogicError> {
        let r = self.relation(rel).ok_or_else(|| LogicError::UnknownRelation(rel.into()))?;
        if r.args.len() != args.len() {
            return Err(LogicError::Signature(format!(
                "{rel} takes {} arguments, {} given",
                r.args.len(),
                args.len()
            )));
        }
        let args = r
            .args
            .iter()
            .zip(args)
            .map(|(s, a)| self.elaborate(a, s, metas))
            .collect::<Result<_, _>>()?;
        Ok(Judgment { rel: rel.into(), args })
    }

    fn elaborate(&self, raw: &Raw, sort: &str, metas: &mut BTreeMap<String, String>) -> Result<Term, LogicError> {
        let def = self.sort(sort).ok_or_else(|| LogicError::UnknownSort(sort.into()))?;
        let mismatch = |what: String| LogicError::SortMismatch(format!("{what} is not a {sort}"));
        let mut meta = |name: &str| -> Result<Term, LogicError> {
            match metas.get(name) {
                Some(s) if s != sort => Err(LogicError::SortMismatch(format!(
                    "metavariable {name} is used as {s} and as {sort}"
                ))),
                _ => {
                    metas.insert(name.into(), sort.into());
                    Ok(Term::Meta(name.into()))
                }
            }
        };
        match (raw, &def.kind) {
            (Raw::Name(n, args), SortKind::Ctors(_)) => match self.ctor(sort, n) {
                Some(c) => {
                    if c.args.len() != args.len() {
                        return Err(LogicError::Signature(format!(
                            "{n} takes {} arguments, {} given",
                            c.args.len(),
                            args.len()
                        )));
                    }
                    let c = c.clone();
                    let args = c
                        .args
                        .iter()
                        .zip(args)
                        .map(|(s, a)| self.elaborate(a, s, metas))
                        .collect::<Result<_, _>>()?;
                    Ok(Term::App(n.clone(), args))
                }
                None if args.is_empty() && is_meta_name(n) => meta(n),
                // an `atom` alternative admits any other lowercase name
                None if args.is_empty() && self.ctor(sort, "atom").is_some() => Ok(Term::atom(n)),
                None => Err(mismatch(n.clone())),
            },
            (Raw::Name(n, args), _) if args.is_empty() && is_meta_name(n) => meta(n),
            (Raw::Name(n, args), SortKind::Atom) if args.is_empty() => Ok(Term::atom(n)),
            (Raw::Num(k), SortKind::Ctors(_)) if self.ctor(sort, "O").is_some() && self.ctor(sort, "S").is_some() => {
                Ok(Term::nat(*k))
            }
            (Raw::List(items), SortKind::Ctors(_)) => {
                let Some(cons) = self.ctor(sort, "GCons").filter(|c| c.args.len() == 3).cloned() else {
                    return Err(mismatch("a list".into()));
                };
                if self.ctor(sort, "GNil").is_none() {
                    return Err(mismatch("a list".into()));
                }
                let mut t = Term::atom("GNil");
                for (k, v) in items.iter().rev() {
                    let k = self.elaborate(k, &cons.args[0], metas)?;
                    let v = self.elaborate(v, &cons.args[1], metas)?;
                    t = Term::App("GCons".into(), vec![k, v, t]);
                }
                Ok(t)
            }
            (Raw::Code(src), SortKind::Code) => {
                let e = crate::syntax::parse_expr(src).map_err(|e| LogicError::Syntax {
                    line: 1,
                    message: format!("in `{src}`: {e}"),
                })?;
                for m in term::code_metas(&e) {
                    meta(&m)?;
                }
                Ok(Term::Code(e))
            }
            (Raw::Text(s), SortKind::Text) => Ok(Term::Text(s.clone())),
            (other, _) => Err(mismatch(format!("{other:?}"))),
        }
    }
}

fn is_meta_name(n: &str) -> bool {
    n.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

fn parse_ctor(text: &str) -> Result<Ctor, String> {
    let text = text.trim();
    match text.split_once('(') {
        None => Ok(Ctor {
            name: text.into(),
            args: Vec::new(),
        }),
        Some((name, rest)) => {
            let inner = rest.strip_suffix(')').ok_or_else(|| format!("missing ')' in {text}"))?;
            Ok(Ctor {
                name: name.trim().into(),
                args: inner.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            })
        }
    }
}

/// Parses and validates a logic document.
pub fn register_logic(doc: &str) -> Result<Logic, LogicError> {
    let mut name = None;
    let mut version = "1".to_string();
    let mut sorts = Vec::new();
    let mut relations = Vec::new();
    let mut raw_rules = Vec::new();
    for (i, line) in doc.lines().enumerate() {
        let ln = i + 1;
        let syntax = |message: String| LogicError::Syntax { line: ln, message };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match kw {
            "logic" => name = Some(rest.to_string()),
            "version" => version = rest.to_string(),
            "sort" => {
                let (n, body) = rest.split_once('=').ok_or_else(|| syntax("expected 'sort Name = ...'".into()))?;
                let kind = match body.trim() {
                    "atom" => SortKind::Atom,
                    "code" => SortKind::Code,
                    "text" => SortKind::Text,
                    b => SortKind::Ctors(b.split('|').map(parse_ctor).collect::<Result<_, _>>().map_err(syntax)?),
                };
                sorts.push(SortDef {
                    name: n.trim().into(),
                    kind,
                });
            }
            "relation" => {
                let (sig, action) = match rest.rsplit_once("action=") {
                    Some((s, a)) => (s.trim(), a.trim()),
                    None => (rest, "inference"),
                };
                let c = parse_ctor(sig).map_err(syntax)?;
                let action = match action {
                    "inference" => Action::Inference,
                    a => match a.strip_prefix("builtin:") {
                        Some(b) => Action::Builtin(b.into()),
                        None => return Err(syntax(format!("unknown action '{a}'"))),
                    },
                };
                relations.push(RelationDef {
                    name: c.name,
                    args: c.args,
                    action,
                });
            }
            "rule" => {
                let (head, body) = rest.split_once(':').ok_or_else(|| syntax("expected 'rule name: premises / conclusion'".into()))?;
                let head = head.trim();
                let (rname, auto) = match head.strip_suffix("[auto]") {
                    Some(h) => (h.trim(), true),
                    None => (head, false),
                };
                raw_rules.push((ln, rname.to_string(), auto, body.to_string()));
            }
            other => return Err(syntax(format!("unknown declaration '{other}'"))),
        }
    }
    let name = name.ok_or(LogicError::Syntax {
        line: 1,
        message: "missing 'logic <name>' line".into(),
    })?;
    let mut logic = Logic {
        name,
        version,
        sorts,
        relations,
        rules: Vec::new(),
    };
    // signatures
    for s in &logic.sorts {
        if let SortKind::Ctors(cs) = &s.kind {
            for c in cs {
                for a in &c.args {
                    logic.sort(a).ok_or_else(|| LogicError::UnknownSort(a.clone()))?;
                }
            }
        }
    }
    for r in &logic.relations {
        for a in &r.args {
            logic.sort(a).ok_or_else(|| LogicError::UnknownSort(a.clone()))?;
        }
        if let Action::Builtin(b) = &r.action {
            if !BUILTIN_ACTIONS.contains(&b.as_str()) {
                return Err(LogicError::UnknownBuiltinAction(b.clone()));
            }
        }
    }
    for (ln, rname, auto, body) in raw_rules {
        let syntax = |message: String| LogicError::Syntax { line: ln, message };
        let mut p = RawParser::new(&body).map_err(syntax)?;
        let prem = p.judgments(Some('/')).map_err(syntax)?;
        if !p.eat('/') {
            return Err(syntax("expected '/' between premises and conclusion".into()));
        }
        let (crel, cargs) = p.judgment().map_err(syntax)?;
        if !p.at_end() {
            return Err(syntax("unexpected text after the conclusion".into()));
        }
        let mut metas = BTreeMap::new();
        let conclusion = logic.elaborate_judgment(&crel, &cargs, &mut metas)?;
        if logic.relation(&crel).map(|r| &r.action) != Some(&Action::Inference) {
            return Err(LogicError::Signature(format!(
                "rule {rname} concludes {crel}, which is not proved by inference"
            )));
        }
        let premises = prem
            .iter()
            .map(|(r, a)| logic.elaborate_judgment(r, a, &mut metas))
            .collect::<Result<Vec<_>, _>>()?;
        logic.rules.push(Rule {
            name: rname,
            premises,
            conclusion,
            auto,
            metas,
        });
    }
    Ok(logic)
}

/// Logics keyed by name; built once, then only read.
#[derive(Clone, Debug, Default)]
pub struct LogicTable {
    logics: BTreeMap<String, Logic>,
}

impl LogicTable {
    /// The logics every server starts with.
    pub fn builtin() -> LogicTable {
        let mut t = LogicTable::default();
        t.insert(logics::even());
        t.insert(bridge::bridge_snm_logic());
        t
    }

    pub fn insert(&mut self, l: Logic) {
        self.logics.insert(l.name.clone(), l);
    }

    pub fn get(&self, name: &str) -> Option<&Logic> {
        self.logics.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Logic> {
        self.logics.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_registers() {
        let l = logics::even();
        assert_eq!(l.sorts.len(), 1);
        assert_eq!(l.relations.len(), 1);
        assert_eq!(l.rules.len(), 2);
        assert_eq!(l.parse_goal("even(4)").unwrap().args[0], Term::nat(4));
        assert_eq!(l.rule("even-nonzero").unwrap().metas["N"], "Nat");
    }

    #[test]
    fn registration_errors() {
        assert!(matches!(
            register_logic("logic l\nrelation r(Foo)"),
            Err(LogicError::UnknownSort(s)) if s == "Foo"
        ));
        assert!(matches!(
            register_logic("logic l\nsort A = a\nrelation r(A) action=builtin:nope"),
            Err(LogicError::UnknownBuiltinAction(_))
        ));
        let empty = register_logic("logic empty").unwrap();
        assert!(empty.rules.is_empty());
    }
}
