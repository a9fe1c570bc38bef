//! The rule catalog. Every rule rewrites only the sub-expression at its
//! target and refuses rather than silently doing nothing.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::entail::{decide, forced_value, Entailment};
use crate::analysis::types::subsumes;
use crate::syntax::normalize::{normalize_with, to_lambda};
use crate::syntax::subst::*;
use crate::syntax::*;
use crate::value::{eval_ground, is_primitive, Value};

use super::algebra;
use super::{RuleApp, RuleError, RuleId, Trace};

type Rewrite = Result<(Expr, Vec<String>), RuleError>;

/// Which arithmetic rule evaluates an operator node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Family {
    Arith,
    Str,
    Bool,
}

impl Family {
    pub fn rule(self) -> RuleId {
        match self {
            Family::Arith => RuleId::Arithmetic,
            Family::Str => RuleId::StringArithmetic,
            Family::Bool => RuleId::BooleanArithmetic,
        }
    }

    fn of_rule(r: RuleId) -> Option<Family> {
        match r {
            RuleId::Arithmetic => Some(Family::Arith),
            RuleId::StringArithmetic => Some(Family::Str),
            RuleId::BooleanArithmetic => Some(Family::Bool),
            _ => None,
        }
    }

    fn noun(self) -> &'static str {
        match self {
            Family::Arith => "numeric",
            Family::Str => "string",
            Family::Bool => "boolean",
        }
    }
}

fn ground_value(e: &Expr) -> Option<Value> {
    eval_ground(e)?.ok()
}

/// The family of an operator node, judged by its operand values.
fn op_family(e: &Expr) -> Option<Family> {
    Some(match e {
        Expr::Unary(UnOp::Neg, _) => Family::Arith,
        Expr::Unary(UnOp::Not, _) => Family::Bool,
        Expr::Binary(BinOp::And | BinOp::Or, _, _) => Family::Bool,
        Expr::Binary(op, l, _) if op.is_comparison() => match ground_value(l)? {
            Value::Str(_) => Family::Str,
            Value::Bool(_) => Family::Bool,
            _ => Family::Arith,
        },
        Expr::Binary(BinOp::Add, l, _) if matches!(ground_value(l)?, Value::Str(_)) => Family::Str,
        Expr::Binary(..) => Family::Arith,
        Expr::Slice(..) => Family::Str,
        Expr::Call(f, _) if f == "len" => Family::Str,
        Expr::Call(f, _) if is_primitive(f) => Family::Arith,
        _ => return None,
    })
}

/// `Some(f)` when `e` is a non-literal built only from literals and
/// operators of family `f`.
pub(crate) fn ground_family(e: &Expr) -> Option<Family> {
    if e.is_literal() {
        return None;
    }
    let f = op_family(e)?;
    for c in e.children() {
        if !c.is_literal() && ground_family(c) != Some(f) {
            return None;
        }
    }
    Some(f)
}

fn not_applicable(rule: RuleId, reason: impl Into<String>) -> RuleError {
    RuleError::NotApplicable {
        rule,
        reason: reason.into(),
    }
}

fn bad_param(rule: RuleId, param: &str, reason: impl Into<String>) -> RuleError {
    RuleError::BadParam {
        rule,
        param: param.into(),
        reason: reason.into(),
    }
}

fn parse_param(rule: RuleId, name: &str, text: &str) -> Result<Expr, RuleError> {
    parse_expr(text).map_err(|e| bad_param(rule, name, e.to_string()))
}

struct Site<'a> {
    t: &'a Trace,
    app: &'a RuleApp,
    target: &'a Expr,
    guards: Vec<Expr>,
}

impl Site<'_> {
    fn fail(&self, reason: impl Into<String>) -> RuleError {
        not_applicable(self.app.rule, reason)
    }

    fn is_int(&self) -> impl Fn(&str) -> bool + '_ {
        |v: &str| self.t.types().is_int_var(v)
    }

    fn safe(&self, e: &Expr, what: &str) -> Result<(), RuleError> {
        let r = self.t.safety().is_safe(e, &self.guards);
        if r.safe {
            Ok(())
        } else {
            Err(self.fail(format!("{what} {} is not safe ({})", print_expr(e), r.message())))
        }
    }

    /// Type of `replacement` placed at the target, checked against the target's.
    fn same_type(&self, replacement: &Expr) -> Result<(), RuleError> {
        let root = self.t.current();
        let before = self
            .t
            .types()
            .type_at(root, &self.app.target)
            .map_err(|e| self.fail(e.to_string()))?;
        let swapped = replace_at(root, &self.app.target, replacement.clone()).expect("valid target");
        let after = self
            .t
            .types()
            .type_at(&swapped, &self.app.target)
            .map_err(|e| self.fail(e.to_string()))?;
        if subsumes(&before, &after) {
            Ok(())
        } else {
            Err(self.fail(format!(
                "{} has type {} but the target has type {}",
                print_expr(replacement),
                show_type(&after),
                show_type(&before)
            )))
        }
    }

    fn bound_here(&self) -> BTreeSet<String> {
        binders_above(self.t.current(), &self.app.target)
    }

    /// A global definition usable at the target.
    fn definition(&self, name: &str) -> Result<&Expr, RuleError> {
        if self.bound_here().contains(name) {
            return Err(self.fail(format!("'{name}' is a lambda parameter here; use beta-param")));
        }
        if self.t.symbols().contains(name) {
            return Err(self.fail(format!("'{name}' is a symbolic variable with no definition")));
        }
        if self.t.removed().contains(name) {
            return Err(self.fail(format!("the definition of '{name}' was removed")));
        }
        let p = &self.t.checked().program;
        match p.var(name) {
            Some(v) => Ok(&v.value),
            None if p.func(name).is_some() => Err(self.fail(format!("'{name}' is a function; use func-to-lambda"))),
            None => Err(self.fail(format!("'{name}' has no definition"))),
        }
    }
}

fn show_type(t: &Option<Type>) -> String {
    t.as_ref().map_or("ERROR".into(), |t| t.to_string())
}

pub(crate) fn rewrite(t: &Trace, app: &RuleApp) -> Rewrite {
    let target = t.subexpr(&app.target)?;
    let guards = t.guards_at(&app.target)?;
    for k in app.params.keys() {
        if !app.rule.params().iter().any(|p| p.name == k) {
            return Err(bad_param(app.rule, k, "unknown parameter"));
        }
    }
    let site = Site {
        t,
        app,
        target,
        guards,
    };
    let (new, removed) = match app.rule {
        RuleId::Arithmetic | RuleId::StringArithmetic | RuleId::BooleanArithmetic => (family_rule(&site)?, vec![]),
        RuleId::NameToDef => return name_to_def(&site),
        RuleId::NameToBody => (name_to_body(&site)?, vec![]),
        RuleId::NameToSpec => (name_to_spec(&site)?, vec![]),
        RuleId::NameToSpecSimpler => (name_to_spec_simpler(&site)?, vec![]),
        RuleId::IfTrue | RuleId::IfFalse => (if_literal(&site)?, vec![]),
        RuleId::IfIrrelevant => (if_irrelevant(&site)?, vec![]),
        RuleId::ConsiderTests => (consider_tests(&site)?, vec![]),
        RuleId::CasesSplit => (cases_split(&site)?, vec![]),
        RuleId::FuncToLambda => (func_to_lambda(&site)?, vec![]),
        RuleId::BetaParam => (beta_param(&site)?, vec![]),
        RuleId::FuncToBody => (func_to_body(&site)?, vec![]),
        RuleId::AlphaFresh => (alpha_fresh(&site)?, vec![]),
    };
    Ok((replace_at(t.current(), &app.target, new).expect("valid target"), removed))
}

// ---- arithmetic family ------------------------------------------------------

fn family_rule(s: &Site) -> Result<Expr, RuleError> {
    let fam = Family::of_rule(s.app.rule).expect("arithmetic rule");
    if let Some(text) = s.app.param("result") {
        let r = parse_param(s.app.rule, "result", text)?;
        return result_form(s, r);
    }
    let mut faults = Vec::new();
    let mut count = 0;
    let out = evaluate_family(s.target, fam, &mut count, &mut faults);
    if count > 0 {
        return Ok(out);
    }
    if fam == Family::Bool {
        if let Some(e) = boolean_law(s)? {
            return Ok(e);
        }
    }
    match faults.first() {
        Some(f) => Err(s.fail(f.clone())),
        None => Err(s.fail(format!("no {} operation on literals here", fam.noun()))),
    }
}

/// Evaluates every maximal ground sub-expression of family `fam`; those that
/// fault are left in place and reported.
fn evaluate_family(e: &Expr, fam: Family, count: &mut usize, faults: &mut Vec<String>) -> Expr {
    if ground_family(e) == Some(fam) {
        match eval_ground(e) {
            Some(Ok(v)) => {
                *count += 1;
                return v.to_expr();
            }
            Some(Err(f)) => {
                faults.push(format!("{} fails: {f}", print_expr(e)));
                return e.clone();
            }
            None => {}
        }
    }
    let mut out = e.clone();
    for (slot, orig) in out.children_mut().into_iter().zip(e.children()) {
        *slot = evaluate_family(orig, fam, count, faults);
    }
    out
}

fn boolean_law(s: &Site) -> Result<Option<Expr>, RuleError> {
    if let Expr::Binary(op @ (BinOp::And | BinOp::Or), l, r) = s.target {
        let is_and = *op == BinOp::And;
        if let Expr::Bool(b) = **l {
            // True and X, False or X -> X; False and X -> False; True or X -> True
            return Ok(Some(if b == is_and { (**r).clone() } else { Expr::Bool(b) }));
        }
        if let Expr::Bool(b) = **r {
            s.safe(l, "left operand")?;
            return Ok(Some(if b == is_and { (**l).clone() } else { Expr::Bool(b) }));
        }
    }
    if s.t.auto_context && !s.target.is_literal() {
        let ty = s.t.types().type_at(s.t.current(), &s.app.target).ok().flatten();
        if ty == Some(Type::Bool) && s.t.safety().is_safe(s.target, &s.guards).safe {
            match decide(&s.guards, s.target, &s.is_int()) {
                Entailment::Proved => return Ok(Some(Expr::Bool(true))),
                Entailment::Refuted => return Ok(Some(Expr::Bool(false))),
                Entailment::Unknown => {}
            }
        }
    }
    Ok(None)
}

fn result_form(s: &Site, r: Expr) -> Result<Expr, RuleError> {
    s.same_type(&r)?;
    let ground = |e: &Expr| free_vars(e).iter().all(|v| is_primitive(v));
    if ground(s.target) && ground(&r) {
        return match (eval_ground(s.target), eval_ground(&r)) {
            (Some(Ok(a)), Some(Ok(b))) if a.identical(&b) => Ok(r),
            (Some(Ok(a)), Some(Ok(b))) => Err(s.fail(format!("{} is {} but {} is {}", print_expr(s.target), a, print_expr(&r), b))),
            _ => Err(s.fail("both sides must evaluate without fault")),
        };
    }
    s.safe(s.target, "target")?;
    s.safe(&r, "result")?;
    let is_int = s.is_int();
    let mut forced = BTreeMap::new();
    for v in free_vars(s.target).union(&free_vars(&r)) {
        if is_int(v) {
            if let Some(n) = forced_value(&s.guards, v, &is_int) {
                forced.insert(v.clone(), Expr::Int(n));
            }
        }
    }
    let a = subst_many(s.target, &forced);
    let b = subst_many(&r, &forced);
    if algebra::equivalent(&a, &b, &is_int) {
        return Ok(r);
    }
    if let (Expr::Binary(op, x, y), Expr::Bool(v)) = (&a, &b) {
        if op.is_comparison() && algebra::equivalent(x, y, &is_int) {
            let holds = matches!(op, BinOp::Eq | BinOp::Le | BinOp::Ge);
            if holds == *v {
                return Ok(r);
            }
        }
    }
    Err(s.fail(format!("cannot show {} equals {}", print_expr(s.target), print_expr(&r))))
}

// ---- names --------------------------------------------------------------------

fn name_to_def(s: &Site) -> Rewrite {
    let names: Vec<String> = match (s.app.param("var"), s.target) {
        (Some(list), _) => list.split(',').map(|n| n.trim().to_string()).filter(|n| !n.is_empty()).collect(),
        (None, Expr::Var(v)) => vec![v.clone()],
        (None, _) => return Err(s.fail("the target is not a variable; pass var=NAME")),
    };
    if names.is_empty() {
        return Err(bad_param(s.app.rule, "var", "no names given"));
    }
    let mut map = BTreeMap::new();
    for n in &names {
        let def = s.definition(n)?;
        if count_free(s.target, n) == 0 {
            return Err(s.fail(format!("'{n}' does not occur here")));
        }
        map.insert(n.clone(), def.clone());
    }
    let new = subst_many(s.target, &map);
    let remove = match s.app.param("remove") {
        None | Some("false") => false,
        Some("true") => true,
        Some(other) => return Err(bad_param(s.app.rule, "remove", format!("expected true or false, got '{other}'"))),
    };
    let after = replace_at(s.t.current(), &s.app.target, new).expect("valid target");
    if !remove {
        return Ok((after, vec![]));
    }
    let p = &s.t.checked().program;
    for n in &names {
        if occurs_free(&after, n) {
            return Err(s.fail(format!("'{n}' is still used")));
        }
        for v in p.vars() {
            if &v.name != n && !s.t.removed().contains(&v.name) && occurs_free(&v.value, n) {
                return Err(s.fail(format!("the definition of '{}' still uses '{n}'", v.name)));
            }
        }
        for f in p.funcs() {
            let mut used = false;
            f.body.iter().for_each(|st| st_exprs(st, &mut |e| used |= occurs_free(e, n)));
            if used {
                return Err(s.fail(format!("function '{}' still uses '{n}'", f.name)));
            }
        }
        if let Some(Err(why)) = s.t.safety().global_verdict(n) {
            return Err(s.fail(format!("the definition of '{n}' is not safe: {why}")));
        }
    }
    Ok((after, names))
}

fn st_exprs(st: &Stmt, f: &mut dyn FnMut(&Expr)) {
    match st {
        Stmt::Assign { value, .. } | Stmt::Return { value, .. } => f(value),
        Stmt::If { guard, then, otherwise, .. } => {
            f(guard);
            for s in then.iter().chain(otherwise) {
                st_exprs(s, f);
            }
        }
    }
}

fn call_parts<'a>(s: &Site<'a>) -> Result<(&'a str, &'a [Expr]), RuleError> {
    match s.target {
        Expr::Call(f, args) => Ok((f, args)),
        _ => Err(s.fail("the target is not a function call")),
    }
}

fn args_safe(s: &Site, args: &[Expr]) -> Result<(), RuleError> {
    for a in args {
        s.safe(a, "argument")?;
    }
    Ok(())
}

fn name_to_body(s: &Site) -> Result<Expr, RuleError> {
    let (name, args) = call_parts(s)?;
    if s.bound_here().contains(name) {
        return Err(s.fail(format!("'{name}' is a lambda parameter here")));
    }
    let Some(f) = s.t.checked().program.func(name) else {
        return Err(s.fail(match s.t.checked().registry.is_trusted(name) {
            true => format!("'{name}' has no body available; use name-to-spec"),
            false => format!("'{name}' is not a function of this program"),
        }));
    };
    if s.t.checked().registry.is_trusted(name) {
        return Err(s.fail(format!("'{name}' is trusted; use name-to-spec")));
    }
    if args.len() != f.params.len() {
        return Err(s.fail(format!("'{name}' takes {} arguments, got {}", f.params.len(), args.len())));
    }
    args_safe(s, args)?;
    let bind: BTreeMap<String, Expr> = f.param_names().into_iter().zip(args.iter().cloned()).collect();
    let body = normalize_with(f, &mut |local, init, local_guards| {
        let init = subst_many(init, &bind);
        let mut ctx = s.guards.clone();
        ctx.extend(local_guards.iter().map(|g| subst_many(g, &bind)));
        let r = s.t.safety().is_safe(&init, &ctx);
        if r.safe {
            Ok(())
        } else {
            Err(format!("local '{local}' = {}: {}", print_expr(&init), r.message()))
        }
    })
    .map_err(|e| s.fail(e.to_string()))?;
    Ok(subst_many(&body, &bind))
}

fn name_to_spec(s: &Site) -> Result<Expr, RuleError> {
    let (name, args) = call_parts(s)?;
    if s.bound_here().contains(name) {
        return Err(s.fail(format!("'{name}' is a lambda parameter here")));
    }
    let Some(spec) = s.t.checked().registry.spec(name) else {
        return Err(s.fail(if is_primitive(name) {
            format!("'{name}' is evaluated by arithmetic")
        } else {
            format!("'{name}' is not trusted")
        }));
    };
    if args.len() != spec.params.len() {
        return Err(s.fail(format!("'{name}' takes {} arguments, got {}", spec.params.len(), args.len())));
    }
    args_safe(s, args)?;
    Ok(Expr::cond(spec.post_at(args), spec.pre_at(args), Expr::Error))
}

fn name_to_spec_simpler(s: &Site) -> Result<Expr, RuleError> {
    let (name, args) = call_parts(s)?;
    let Some((spec, outer)) = s.t.env.verifying.as_ref() else {
        return Err(s.fail("only available while verifying a function"));
    };
    if name != spec.name {
        return Err(s.fail(format!("only calls of '{}' itself qualify", spec.name)));
    }
    let inlined = s.t.steps.iter().any(|st| {
        st.app.rule == RuleId::NameToBody
            && matches!(get_at(&st.before, &st.app.target), Some(Expr::Call(g, _)) if g == name)
    });
    if !inlined {
        return Err(s.fail(format!("only inside the body of '{name}'; apply name-to-body first")));
    }
    if args.len() != spec.params.len() {
        return Err(s.fail(format!("'{name}' takes {} arguments, got {}", spec.params.len(), args.len())));
    }
    args_safe(s, args)?;
    let conj = spec
        .simpler_conjuncts(outer, args)
        .ok_or_else(|| s.fail(format!("'{name}' has no progress expression")))?;
    let guard = conj
        .into_iter()
        .reduce(|a, b| Expr::binary(BinOp::And, a, b))
        .expect("three conjuncts");
    Ok(Expr::cond(spec.post_at(args), guard, Expr::Error))
}

// ---- conditionals ---------------------------------------------------------------

fn if_literal(s: &Site) -> Result<Expr, RuleError> {
    let want = s.app.rule == RuleId::IfTrue;
    match s.target {
        Expr::Cond(t, g, x) => match **g {
            Expr::Bool(b) if b == want => Ok(if b { (**t).clone() } else { (**x).clone() }),
            Expr::Bool(_) => Err(s.fail(format!("the test is {}", !want))),
            _ => Err(s.fail("the test is not a literal")),
        },
        _ => Err(s.fail("the target is not a conditional")),
    }
}

fn if_irrelevant(s: &Site) -> Result<Expr, RuleError> {
    let Expr::Cond(t, g, x) = s.target else {
        return Err(s.fail("the target is not a conditional"));
    };
    if !alpha_eq(t, x) {
        return Err(s.fail("the branches differ"));
    }
    s.safe(g, "test")?;
    Ok((**t).clone())
}

fn consider_tests(s: &Site) -> Result<Expr, RuleError> {
    let ty = s
        .t
        .types()
        .type_at(s.t.current(), &s.app.target)
        .map_err(|e| s.fail(e.to_string()))?;
    let is_int = s.is_int();
    if ty == Some(Type::Bool) && !s.target.is_literal() {
        s.safe(s.target, "test")?;
        return match decide(&s.guards, s.target, &is_int) {
            Entailment::Proved => Ok(Expr::Bool(true)),
            Entailment::Refuted => Ok(Expr::Bool(false)),
            Entailment::Unknown => Err(s.fail(format!("the tests in force do not decide {}", print_expr(s.target)))),
        };
    }
    if let Expr::Var(v) = s.target {
        if is_int(v) {
            if let Some(n) = forced_value(&s.guards, v, &is_int) {
                return Ok(Expr::Int(n));
            }
        }
        for g in s.guards.iter().rev() {
            if let Expr::Binary(BinOp::Eq, l, r) = g {
                let other = match (&**l, &**r) {
                    (Expr::Var(a), o) if a == v => o,
                    (o, Expr::Var(b)) if b == v => o,
                    _ => continue,
                };
                if !occurs_free(other, v) && s.t.safety().is_safe(other, &s.guards).safe {
                    return Ok(other.clone());
                }
            }
        }
        return Err(s.fail(format!("no test fixes the value of '{v}'")));
    }
    Err(s.fail("the target is neither a test nor a variable"))
}

fn cases_split(s: &Site) -> Result<Expr, RuleError> {
    let text = s
        .app
        .param("guard")
        .ok_or_else(|| bad_param(s.app.rule, "guard", "required"))?;
    let c = parse_param(s.app.rule, "guard", text)?;
    let local: Vec<(String, Type)> = Vec::new();
    match s.t.types().type_in(&c, &local, "guard") {
        Ok(Some(Type::Bool)) => {}
        Ok(other) => return Err(bad_param(s.app.rule, "guard", format!("has type {}", show_type(&other)))),
        Err(e) => return Err(bad_param(s.app.rule, "guard", e.to_string())),
    }
    s.safe(&c, "test")?;
    Ok(Expr::cond(s.target.clone(), c, s.target.clone()))
}

// ---- lambda forms ---------------------------------------------------------------

fn func_to_lambda(s: &Site) -> Result<Expr, RuleError> {
    let (name, args) = match s.target {
        Expr::Call(f, args) => (f.as_str(), Some(args)),
        Expr::Var(f) => (f.as_str(), None),
        _ => return Err(s.fail("the target is not a function name or call")),
    };
    if s.bound_here().contains(name) {
        return Err(s.fail(format!("'{name}' is a lambda parameter here")));
    }
    let f = s
        .t
        .checked()
        .program
        .func(name)
        .ok_or_else(|| s.fail(format!("'{name}' is not a function of this program")))?;
    let lam = to_lambda(f).map_err(|e| s.fail(e.to_string()))?;
    Ok(match args {
        Some(args) => Expr::Apply(Box::new(lam), args.clone()),
        None => lam,
    })
}

fn beta_param(s: &Site) -> Result<Expr, RuleError> {
    let Expr::Apply(callee, args) = s.target else {
        return Err(s.fail("the target is not a lambda application"));
    };
    let Expr::Lambda(params, body) = &**callee else {
        return Err(s.fail("the applied expression is not a lambda"));
    };
    if params.is_empty() {
        return Err(s.fail("no parameters left; use func-to-body"));
    }
    let idx = match s.app.param("var") {
        Some(v) => params
            .iter()
            .position(|p| p.name == v)
            .ok_or_else(|| bad_param(s.app.rule, "var", format!("no parameter '{v}'")))?,
        None => 0,
    };
    if args.len() > params.len() {
        return Err(s.fail("more arguments than parameters"));
    }
    let value = if idx < args.len() {
        args[idx].clone()
    } else {
        params[idx]
            .default
            .clone()
            .ok_or_else(|| s.fail(format!("parameter '{}' has no argument", params[idx].name)))?
    };
    s.safe(&value, "argument")?;
    let var = params[idx].name.clone();
    let mut rest: Vec<Param> = params.clone();
    rest.remove(idx);
    let mut args = args.clone();
    if idx < args.len() {
        args.remove(idx);
    }
    // remaining parameters must not capture names in the substituted value
    let fv = free_vars(&value);
    let mut body = (**body).clone();
    let mut avoid = all_names(&body);
    avoid.extend(fv.iter().cloned());
    for p in rest.iter_mut() {
        if fv.contains(&p.name) {
            let fresh = fresh_name(&p.name, &avoid);
            avoid.insert(fresh.clone());
            body = rename_free(&body, &p.name, &fresh);
            p.name = fresh;
        }
    }
    let body = subst(&body, &var, &value);
    Ok(Expr::Apply(Box::new(Expr::Lambda(rest, Box::new(body))), args))
}

fn func_to_body(s: &Site) -> Result<Expr, RuleError> {
    match s.target {
        Expr::Apply(callee, args) if args.is_empty() => match &**callee {
            Expr::Lambda(ps, body) if ps.is_empty() => Ok((**body).clone()),
            Expr::Lambda(..) => Err(s.fail("parameters remain; use beta-param")),
            _ => Err(s.fail("the applied expression is not a lambda")),
        },
        _ => Err(s.fail("the target is not an application without arguments")),
    }
}

fn alpha_fresh(s: &Site) -> Result<Expr, RuleError> {
    let root = s.t.current();
    let mut avoid = all_names(root);
    let p = &s.t.checked().program;
    avoid.extend(p.items.iter().map(|i| i.name().to_string()));
    let explicit: Option<BTreeMap<String, String>> = match s.app.param("map") {
        None => None,
        Some(text) => {
            let mut m = BTreeMap::new();
            for pair in text.split(',').filter(|x| !x.trim().is_empty()) {
                let (a, b) = pair
                    .split_once(':')
                    .ok_or_else(|| bad_param(s.app.rule, "map", format!("'{pair}' is not old:new")))?;
                let (a, b) = (a.trim().to_string(), b.trim().to_string());
                if avoid.contains(&b) {
                    return Err(bad_param(s.app.rule, "map", format!("'{b}' is not fresh")));
                }
                m.insert(a, b);
            }
            Some(m)
        }
    };
    let mut seen = s.bound_here();
    seen.extend(p.items.iter().map(|i| i.name().to_string()));
    let mut changed = false;
    let out = freshen(s.target, &explicit, &mut seen, &mut avoid, &mut changed);
    if !changed {
        return Err(s.fail("no bound name needs renaming"));
    }
    Ok(out)
}

fn freshen(
    e: &Expr,
    explicit: &Option<BTreeMap<String, String>>,
    seen: &mut BTreeSet<String>,
    avoid: &mut BTreeSet<String>,
    changed: &mut bool,
) -> Expr {
    let mut out = e.clone();
    if let Expr::Lambda(params, body) = &mut out {
        let mut b = (**body).clone();
        for p in params.iter_mut() {
            let new = match explicit {
                Some(m) => m.get(&p.name).cloned(),
                None if seen.contains(&p.name) => Some(fresh_name(&p.name, avoid)),
                None => None,
            };
            if let Some(n) = new {
                avoid.insert(n.clone());
                b = rename_free(&b, &p.name, &n);
                p.name = n;
                *changed = true;
            }
            seen.insert(p.name.clone());
        }
        **body = b;
    }
    let originals: Vec<Expr> = out.children().into_iter().cloned().collect();
    for (slot, orig) in out.children_mut().into_iter().zip(originals) {
        *slot = freshen(&orig, explicit, seen, avoid, changed);
    }
    out
}

// ---- palette ---------------------------------------------------------------------

pub(crate) fn applicable(t: &Trace, path: &[usize]) -> Result<Vec<RuleApp>, RuleError> {
    let target = t.subexpr(path)?;
    let mut out = Vec::new();
    for rule in RuleId::ALL {
        let app = RuleApp::new(rule, path.to_vec());
        let app = match rule {
            RuleId::CasesSplit => continue,
            RuleId::NameToDef if !matches!(target, Expr::Var(_)) => {
                let p = &t.checked().program;
                let bound = binders_above(t.current(), path);
                let names: Vec<String> = free_vars(target)
                    .into_iter()
                    .filter(|v| {
                        p.var(v).is_some()
                            && !bound.contains(v)
                            && !t.symbols().contains(v)
                            && !t.removed().contains(v)
                    })
                    .collect();
                if names.is_empty() {
                    continue;
                }
                app.with("var", names.join(","))
            }
            _ => app,
        };
        if rewrite(t, &app).is_ok() {
            out.push(app);
        }
    }
    Ok(out)
}
