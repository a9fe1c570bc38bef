//! Step scripts: one `rule @path key=value ...` per line, `#` comments.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::syntax::subst::parse_path;

use super::render::format_app;
use super::{RuleApp, RuleId};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("script line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

fn tokens(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    let mut any = false;
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                quoted = !quoted;
                any = true;
            }
            '\\' if quoted => match chars.next() {
                Some(n) => cur.push(n),
                None => return Err("dangling escape".into()),
            },
            c if c.is_whitespace() && !quoted => {
                if any || !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                    any = false;
                }
            }
            c => cur.push(c),
        }
    }
    if quoted {
        return Err("unterminated quote".into());
    }
    if any || !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

pub fn parse_line(text: &str) -> Result<Option<RuleApp>, String> {
    let body = match text.find('#') {
        Some(i) if !text[..i].contains('"') => &text[..i],
        _ => text,
    };
    let toks = tokens(body)?;
    let Some((rule, rest)) = toks.split_first() else {
        return Ok(None);
    };
    let rule = RuleId::parse(rule).ok_or_else(|| format!("unknown rule '{rule}'"))?;
    let mut target = Vec::new();
    let mut params = BTreeMap::new();
    for t in rest {
        if let Some(p) = t.strip_prefix('@') {
            target = parse_path(p).ok_or_else(|| format!("bad path '{p}'"))?;
        } else if let Some((k, v)) = t.split_once('=') {
            params.insert(k.to_string(), v.to_string());
        } else {
            return Err(format!("expected @path or key=value, found '{t}'"));
        }
    }
    Ok(Some(RuleApp { rule, target, params }))
}

pub fn parse_script(text: &str) -> Result<Vec<RuleApp>, ScriptError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(app)) => out.push(app),
            Ok(None) => {}
            Err(message) => return Err(ScriptError { line: i + 1, message }),
        }
    }
    Ok(out)
}

pub fn format_script(apps: &[RuleApp]) -> String {
    apps.iter().map(|a| format_app(a) + "\n").collect()
}
