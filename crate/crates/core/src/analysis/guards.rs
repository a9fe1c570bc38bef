//! Guard contexts: the tests known to hold at a position.

use crate::syntax::subst::free_vars;
use crate::syntax::*;

/// Conjunction of the boolean expressions in force, innermost last.
pub type GuardContext = Vec<Expr>;

/// Guards in force at `path` below `root`, starting from `base`. Guards are
/// recorded as written. `None` if the path is invalid.
pub fn context_at(root: &Expr, path: &[usize], base: &[Expr]) -> Option<GuardContext> {
    let mut ctx = base.to_vec();
    let mut cur = root;
    for &i in path {
        let kids = cur.children();
        let next = *kids.get(i)?;
        extend_for_child(cur, i, &mut ctx);
        cur = next;
    }
    Some(ctx)
}

/// What entering child `i` of `parent` adds to (or removes from) `ctx`.
pub fn extend_for_child(parent: &Expr, i: usize, ctx: &mut GuardContext) {
    match parent {
        Expr::Cond(_, g, _) if i == 0 => ctx.push((**g).clone()),
        Expr::Cond(_, g, _) if i == 2 => ctx.push(Expr::not((**g).clone())),
        Expr::Binary(BinOp::And, l, _) if i == 1 => ctx.push((**l).clone()),
        Expr::Binary(BinOp::Or, l, _) if i == 1 => ctx.push(Expr::not((**l).clone())),
        Expr::Lambda(params, _) if i == params.iter().filter(|p| p.default.is_some()).count() => {
            // facts about an outer variable say nothing about a parameter of the same name
            ctx.retain(|g| {
                let fv = free_vars(g);
                !params.iter().any(|p| fv.contains(&p.name))
            });
        }
        _ => {}
    }
}
