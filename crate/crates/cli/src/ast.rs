//! Syntax tree of DSL programs.

/// A node with its source position. Equality ignores the position.
#[derive(Debug, Clone)]
pub struct Located<T> {
    pub line: usize,
    pub col: usize,
    pub node: T,
}

impl<T: PartialEq> PartialEq for Located<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Program {
    pub stmts: Vec<Located<Stmt>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Space { name: String, expr: SpaceExpr },
    Gen { defs: Vec<(String, GenDef)> },
    Fn { name: String, def: FnDef },
    Assign { name: String, lit: AssignLit },
    Samples { points: Vec<PointLit> },
    Use { name: String },
    Command { cmd: Command, space: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    EvalAt { func: String, point: PointLit },
    EvalUnder { func: String, assignment: AssignRef },
    Classify { assignment: AssignRef },
    Xi { point: PointLit },
    XiAtlas { k: usize, point: PointLit },
    Probe { witnesses: Vec<String>, toward: PointLit, along: Along },
    Spec { samples: Option<usize> },
    Density { assignment: AssignRef, tol: f64, family: Vec<String>, budget: Option<usize> },
    Split { func: String },
    Export,
}

impl Command {
    /// Whether the command reads the active space.
    pub fn uses_space(&self) -> bool {
        !matches!(self, Command::Xi { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceExpr {
    pub base: SpaceBase,
    pub mods: Vec<Modifier>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceBase {
    Euclid(usize),
    Seq,
    Circle,
    Interval(f64, f64),
    Set(Vec<PointLit>),
    Union(String, String),
    Restrict(String, Box<SpaceExpr>),
    Tilde(PointLit),
    Spec(String, Option<usize>),
}

impl SpaceBase {
    /// Carrier literals accept modifiers; derived spaces do not.
    pub fn is_carrier(&self) -> bool {
        matches!(self, SpaceBase::Euclid(_) | SpaceBase::Seq | SpaceBase::Circle | SpaceBase::Interval(..) | SpaceBase::Set(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Gt,
    Ne,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Modifier {
    Minus(Vec<PointLit>),
    Where(Expr, Rel),
    Box(f64, f64),
    Sphere(Vec<f64>, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenDef {
    Proj(usize),
    Theta(PointLit),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FnDef {
    Expr(Expr),
    Atlas(Vec<Piece>),
    XiAtlas(usize),
    CutoffSum(PointLit),
    Pair(String, String),
}

/// One chart: `x in (lo, hi) and … => body`; no bounds means everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub bounds: Vec<(String, f64, f64)>,
    pub body: Expr,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssignLit {
    pub entries: Vec<(String, f64)>,
    pub tail: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssignRef {
    Named(String),
    Lit(AssignLit),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Along {
    /// Translates of `z_k` toward the target.
    Z,
    Paths(Vec<Vec<PointLit>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointLit {
    Vec(Vec<f64>),
    Z(usize),
    Seq(Vec<(usize, f64)>),
    Zero,
    Left(Box<PointLit>),
    Right(Box<PointLit>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Cutoff,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Cutoff => "cutoff",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "cutoff" => Func::Cutoff,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Name(String),
    Pi(usize),
    Rho(usize),
    Hat(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
    Bump(Vec<f64>, f64),
    Dist2(Vec<f64>),
}

impl Expr {
    /// Leaf names in order of first appearance, as the library spells them.
    pub fn leaves(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<String>) {
        let mut push = |s: String| {
            if !out.contains(&s) {
                out.push(s);
            }
        };
        match self {
            Expr::Num(_) => {}
            Expr::Name(n) => push(n.clone()),
            Expr::Pi(i) => push(format!("pi({i})")),
            Expr::Rho(k) => push(format!("rho({k})")),
            Expr::Hat(n) => push(format!("hat({n})")),
            Expr::Bump(c, _) | Expr::Dist2(c) => {
                for i in 1..=c.len() {
                    push(format!("pi({i})"));
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.collect_leaves(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }
}
