use std::fmt;

use serde::{Deserialize, Serialize};

/// Type annotations admitted by the language.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Type {
    Int,
    Float,
    Bool,
    Str,
    Func(Vec<Type>, Box<Type>),
}

impl Type {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Int | Type::Float)
    }

    /// `int` is accepted wherever `float` is expected.
    pub fn widens_to(&self, other: &Type) -> bool {
        self == other || (*self == Type::Int && *other == Type::Float)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Float => f.write_str("float"),
            Type::Bool => f.write_str("bool"),
            Type::Str => f.write_str("str"),
            Type::Func(params, ret) => {
                f.write_str("Callable[[")?;
                for (i, p) in params.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "], {ret}]")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Pow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Pow => "**",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    pub fn is_arithmetic(self) -> bool {
        !self.is_comparison() && !self.is_logical()
    }

    /// The comparison that holds exactly when `self` does not.
    pub fn negated_comparison(self) -> Option<BinOp> {
        Some(match self {
            BinOp::Eq => BinOp::Ne,
            BinOp::Ne => BinOp::Eq,
            BinOp::Lt => BinOp::Ge,
            BinOp::Le => BinOp::Gt,
            BinOp::Gt => BinOp::Le,
            BinOp::Ge => BinOp::Lt,
            _ => return None,
        })
    }
}

/// A lambda parameter; `default` is set for let-style bindings `lambda a=14: ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub default: Option<Expr>,
}

/// Expressions. `Cond` stores its parts in source order: `then if guard else otherwise`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Slice(Box<Expr>, Option<usize>, Option<usize>),
    Call(String, Vec<Expr>),
    Apply(Box<Expr>, Vec<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    Lambda(Vec<Param>, Box<Expr>),
    Error,
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn cond(then: Expr, guard: Expr, otherwise: Expr) -> Expr {
        Expr::Cond(Box::new(then), Box::new(guard), Box::new(otherwise))
    }

    pub fn is_literal(&self) -> bool {
        matches!(
            self,
            Expr::Int(_) | Expr::Float(_) | Expr::Bool(_) | Expr::Str(_)
        )
    }

    /// Literals and `ERROR`: the expressions a run can end on.
    pub fn is_terminal(&self) -> bool {
        self.is_literal() || matches!(self, Expr::Error)
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Int(_)
            | Expr::Float(_)
            | Expr::Bool(_)
            | Expr::Str(_)
            | Expr::Var(_)
            | Expr::Error => vec![],
            Expr::Unary(_, e) | Expr::Slice(e, _, _) => vec![e],
            Expr::Binary(_, l, r) => vec![l, r],
            Expr::Call(_, args) => args.iter().collect(),
            Expr::Apply(f, args) => std::iter::once(&**f).chain(args.iter()).collect(),
            Expr::Cond(t, g, e) => vec![t, g, e],
            Expr::Lambda(params, body) => params
                .iter()
                .filter_map(|p| p.default.as_ref())
                .chain(std::iter::once(&**body))
                .collect(),
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Int(_)
            | Expr::Float(_)
            | Expr::Bool(_)
            | Expr::Str(_)
            | Expr::Var(_)
            | Expr::Error => vec![],
            Expr::Unary(_, e) | Expr::Slice(e, _, _) => vec![e],
            Expr::Binary(_, l, r) => vec![l, r],
            Expr::Call(_, args) => args.iter_mut().collect(),
            Expr::Apply(f, args) => std::iter::once(&mut **f).chain(args.iter_mut()).collect(),
            Expr::Cond(t, g, e) => vec![t, g, e],
            Expr::Lambda(params, body) => params
                .iter_mut()
                .filter_map(|p| p.default.as_mut())
                .chain(std::iter::once(&mut **body))
                .collect(),
        }
    }

    /// Pre-order walk over every node.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn contains(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.contains(pred))
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Expr::size).sum::<usize>()
    }
}

/// Function-body statements in the restricted statement grammar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Stmt {
    Assign {
        name: String,
        ty: Type,
        value: Expr,
        line: usize,
    },
    If {
        guard: Expr,
        then: Vec<Stmt>,
        otherwise: Vec<Stmt>,
        line: usize,
    },
    Return {
        value: Expr,
        line: usize,
    },
}

/// Machine-readable contract lines (`#: pre: ...`) attached to a definition.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpecStub {
    pub trusted: bool,
    pub pre: Option<Expr>,
    pub post: Option<Expr>,
    pub progress: Option<Expr>,
    pub pmin: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarDef {
    pub name: String,
    /// `None` for unannotated globals such as `a=5`; the type is then inferred.
    pub ty: Option<Type>,
    pub value: Expr,
    pub doc: Option<String>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    pub body: Vec<Stmt>,
    pub doc: Option<String>,
    pub spec: Option<SpecStub>,
    pub line: usize,
}

impl FuncDef {
    pub fn signature(&self) -> Type {
        Type::Func(
            self.params.iter().map(|(_, t)| t.clone()).collect(),
            Box::new(self.ret.clone()),
        )
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|(n, _)| n.clone()).collect()
    }
}

/// A body-less `def f(...) -> T: ...` whose behaviour is given by its contract.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustedStub {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    pub pre: Expr,
    pub post: Expr,
    pub doc: Option<String>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Item {
    Import(String),
    Var(VarDef),
    Func(FuncDef),
    Trusted(TrustedStub),
}

impl Item {
    pub fn name(&self) -> &str {
        match self {
            Item::Import(m) => m,
            Item::Var(v) => &v.name,
            Item::Func(f) => &f.name,
            Item::Trusted(t) => &t.name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub items: Vec<Item>,
    pub goal: Expr,
}

impl Program {
    pub fn var(&self, name: &str) -> Option<&VarDef> {
        self.items.iter().find_map(|i| match i {
            Item::Var(v) if v.name == name => Some(v),
            _ => None,
        })
    }

    pub fn func(&self, name: &str) -> Option<&FuncDef> {
        self.items.iter().find_map(|i| match i {
            Item::Func(f) if f.name == name => Some(f),
            _ => None,
        })
    }

    pub fn vars(&self) -> impl Iterator<Item = &VarDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Var(v) => Some(v),
            _ => None,
        })
    }

    pub fn funcs(&self) -> impl Iterator<Item = &FuncDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Func(f) => Some(f),
            _ => None,
        })
    }

    pub fn stubs(&self) -> impl Iterator<Item = &TrustedStub> {
        self.items.iter().filter_map(|i| match i {
            Item::Trusted(t) => Some(t),
            _ => None,
        })
    }
}
