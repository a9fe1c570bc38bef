//! Random ground programs in the subset.
//!
//! Operations that can fault (integer division, unbounded products, powers
//! of zero) are not generated, so a run ends in a value or in `ERROR`. The
//! `ERROR` cases come from the literal in a conditional branch and from
//! `math.pow` and `sqrt` outside their domains. Every function's `if` test
//! reads every parameter and local without short-circuiting, so any order
//! of evaluation meets the same `ERROR`s. Local initializers must be safe,
//! so they contain no calls and no `ERROR`.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty {
    Int,
    Float,
    Bool,
    Str,
}

impl Ty {
    pub const ALL: [Ty; 4] = [Ty::Int, Ty::Float, Ty::Bool, Ty::Str];

    fn name(self) -> &'static str {
        match self {
            Ty::Int => "int",
            Ty::Float => "float",
            Ty::Bool => "bool",
            Ty::Str => "str",
        }
    }
}

/// What kind of program to favour.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// Globals and operators only.
    Expressions,
    /// Several functions calling earlier ones.
    Functions,
    /// Frequent `ERROR` branches and out-of-domain library calls.
    Errors,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Expressions, Shape::Functions, Shape::Errors];
}

struct Func {
    name: String,
    params: Vec<Ty>,
    ret: Ty,
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    shape: Shape,
    funcs: Vec<Func>,
    /// Generating a local initializer.
    safe: bool,
}

const FLOATS: [&str; 6] = ["0.5", "1.5", "2.0", "2.25", "3.0", "0.25"];
const STRS: [&str; 5] = ["'What'", "'is'", "'ab'", "''", "'What is it'"];

impl<R: Rng> Gen<'_, R> {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn error_rate(&self) -> f64 {
        match self.shape {
            Shape::Errors => 0.25,
            _ => 0.03,
        }
    }

    fn var(&mut self, ty: Ty, scope: &[(String, Ty)]) -> Option<String> {
        let vs: Vec<&String> = scope.iter().filter(|(_, t)| *t == ty).map(|(n, _)| n).collect();
        vs.choose(self.rng).map(|s| s.to_string())
    }

    fn leaf(&mut self, ty: Ty, scope: &[(String, Ty)]) -> String {
        if self.chance(0.5) {
            if let Some(v) = self.var(ty, scope) {
                return v;
            }
        }
        match ty {
            Ty::Int => self.rng.gen_range(0..10).to_string(),
            Ty::Float => FLOATS.choose(self.rng).unwrap().to_string(),
            Ty::Bool => if self.chance(0.5) { "True" } else { "False" }.into(),
            Ty::Str => STRS.choose(self.rng).unwrap().to_string(),
        }
    }

    fn call(&mut self, ty: Ty, depth: u32, scope: &[(String, Ty)]) -> Option<String> {
        let cands: Vec<usize> = (0..self.funcs.len()).filter(|&i| self.funcs[i].ret == ty).collect();
        let &i = cands.choose(self.rng)?;
        let params = self.funcs[i].params.clone();
        let args: Vec<String> = params.iter().map(|&t| self.expr(t, depth, scope)).collect();
        Some(format!("{}({})", self.funcs[i].name, args.join(", ")))
    }

    fn expr(&mut self, ty: Ty, depth: u32, scope: &[(String, Ty)]) -> String {
        if depth == 0 || self.chance(0.2) {
            return self.leaf(ty, scope);
        }
        let d = depth - 1;
        if self.chance(0.15) {
            let g = self.expr(Ty::Bool, d, scope);
            let err = if self.safe { 0.0 } else { self.error_rate() };
            let a = if self.chance(err) { "ERROR".into() } else { self.expr(ty, d, scope) };
            let b = if self.chance(err) { "ERROR".into() } else { self.expr(ty, d, scope) };
            return format!("({a} if {g} else {b})");
        }
        let call_rate = if self.shape == Shape::Functions { 0.35 } else { 0.15 };
        if !self.safe && self.chance(call_rate) {
            if let Some(c) = self.call(ty, d, scope) {
                return c;
            }
        }
        match ty {
            Ty::Int => match self.rng.gen_range(0..4) {
                0 => format!("({}+{})", self.expr(Ty::Int, d, scope), self.expr(Ty::Int, d, scope)),
                1 => format!("({}-{})", self.expr(Ty::Int, d, scope), self.expr(Ty::Int, d, scope)),
                2 => format!("({}*{})", self.expr(Ty::Int, d, scope), self.rng.gen_range(0..4)),
                _ => format!("len({})", self.expr(Ty::Str, d, scope)),
            },
            Ty::Float => {
                let lib = match (self.safe, self.shape) {
                    (true, _) => 0,
                    (false, Shape::Errors) => 4,
                    (false, _) => 1,
                };
                match self.rng.gen_range(0..5 + lib) {
                    0 => format!("({}+{})", self.expr(Ty::Float, d, scope), self.expr(Ty::Float, d, scope)),
                    1 => format!("({}-{})", self.expr(Ty::Float, d, scope), self.expr(Ty::Float, d, scope)),
                    2 => format!("({}*{})", self.expr(Ty::Float, d, scope), FLOATS.choose(self.rng).unwrap()),
                    3 => format!("({}/{})", self.expr(Ty::Float, d, scope), FLOATS.choose(self.rng).unwrap()),
                    4 => format!("float({})", self.expr(Ty::Int, d, scope)),
                    k if k % 2 == 0 => {
                        let e = ["0.5", "2.0", "1.5"].choose(self.rng).unwrap();
                        format!("math.pow({}, {e})", self.expr(Ty::Float, d, scope))
                    }
                    _ => format!("sqrt({})", self.expr(Ty::Float, d, scope)),
                }
            }
            Ty::Bool => match self.rng.gen_range(0..6) {
                0 => format!("({}<{})", self.expr(Ty::Int, d, scope), self.expr(Ty::Int, d, scope)),
                1 => format!("({}>={})", self.expr(Ty::Float, d, scope), self.expr(Ty::Float, d, scope)),
                2 => format!("({}=={})", self.expr(Ty::Str, d, scope), self.expr(Ty::Str, d, scope)),
                3 => format!("(not {})", self.expr(Ty::Bool, d, scope)),
                4 => format!("({} and {})", self.expr(Ty::Bool, d, scope), self.expr(Ty::Bool, d, scope)),
                _ => format!("({} or {})", self.expr(Ty::Bool, d, scope), self.expr(Ty::Bool, d, scope)),
            },
            Ty::Str => match self.rng.gen_range(0..2) {
                0 => format!("({}+{})", self.expr(Ty::Str, d, scope), self.expr(Ty::Str, d, scope)),
                _ => {
                    let lo = self.rng.gen_range(0..3);
                    let hi = lo + self.rng.gen_range(0..4);
                    format!("{}[{lo}:{hi}]", self.expr(Ty::Str, d, scope))
                }
            },
        }
    }

    /// A test that evaluates every name in `names`.
    fn strict_test(&mut self, names: &[(String, Ty)]) -> String {
        let atoms: Vec<String> = names
            .iter()
            .map(|(n, t)| {
                let k = self.rng.gen_range(0..4);
                match t {
                    Ty::Int => format!("({n}>{k})"),
                    Ty::Float => format!("({n}>{k}.5)"),
                    Ty::Bool => n.clone(),
                    Ty::Str => format!("(len({n})>{k})"),
                }
            })
            .collect();
        atoms
            .into_iter()
            .reduce(|a, b| format!("({a}=={b})"))
            .unwrap_or_else(|| "True".into())
    }

    fn function(&mut self, index: usize, globals: &[(String, Ty)]) -> String {
        let name = format!("f{index}");
        let arity = self.rng.gen_range(1..=2);
        let params: Vec<Ty> = (0..arity).map(|_| *Ty::ALL.choose(self.rng).unwrap()).collect();
        let ret = *Ty::ALL.choose(self.rng).unwrap();
        let mut scope: Vec<(String, Ty)> = globals.to_vec();
        let mut forced = Vec::new();
        let mut sig = Vec::new();
        for (i, t) in params.iter().enumerate() {
            let p = ["a", "b"][i].to_string();
            sig.push(format!("{p}: {}", t.name()));
            scope.push((p.clone(), *t));
            forced.push((p, *t));
        }
        let mut body = String::new();
        if self.chance(0.4) {
            let t = *Ty::ALL.choose(self.rng).unwrap();
            self.safe = true;
            let v = self.expr(t, 2, &scope);
            self.safe = false;
            body.push_str(&format!("    t: {} = {v}\n", t.name()));
            scope.push(("t".into(), t));
            forced.push(("t".into(), t));
        }
        let test = self.strict_test(&forced);
        let yes = self.expr(ret, 2, &scope);
        let no = self.expr(ret, 2, &scope);
        self.funcs.push(Func {
            name: name.clone(),
            params,
            ret,
        });
        format!(
            "def {name}({}) -> {}:\n{body}    if {test}:\n        return {yes}\n    else:\n        return {no}\n",
            sig.join(", "),
            ret.name()
        )
    }
}

/// A random program with its goal after the `# |-` line.
pub fn generate<R: Rng>(rng: &mut R, shape: Shape) -> String {
    let mut g = Gen {
        rng,
        shape,
        funcs: Vec::new(),
        safe: false,
    };
    let mut out = String::from("import math\n\n");
    let mut globals: Vec<(String, Ty)> = Vec::new();
    let n_globals = g.rng.gen_range(0..=3);
    for i in 0..n_globals {
        let t = *Ty::ALL.choose(g.rng).unwrap();
        let v = g.expr(t, 2, &globals);
        out.push_str(&format!("g{i}: {} = {v}\n", t.name()));
        globals.push((format!("g{i}"), t));
    }
    let n_funcs = match shape {
        Shape::Expressions => 0,
        Shape::Functions => g.rng.gen_range(1..=3),
        Shape::Errors => g.rng.gen_range(0..=2),
    };
    for i in 0..n_funcs {
        out.push('\n');
        let f = g.function(i, &globals);
        out.push_str(&f);
    }
    let t = *Ty::ALL.choose(g.rng).unwrap();
    let goal = g.expr(t, 3, &globals);
    out.push_str(&format!("\n# |-\n\n{goal}\n"));
    out
}
