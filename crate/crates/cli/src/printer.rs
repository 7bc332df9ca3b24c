//! Canonical source text for programs; reparsing it gives an equal tree.

use std::fmt::{self, Display, Formatter, Write};

use crate::ast::*;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for s in &p.stmts {
        let _ = writeln!(out, "{};", s.node);
    }
    out
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

impl Display for PointLit {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            PointLit::Vec(v) => write!(f, "({})", list(v, |x| num(*x))),
            PointLit::Z(k) => write!(f, "z({k})"),
            PointLit::Seq(e) => write!(f, "seq{{{}}}", list(e, |(i, v)| format!("{i}: {}", num(*v)))),
            PointLit::Zero => f.write_str("0"),
            PointLit::Left(p) => write!(f, "left({p})"),
            PointLit::Right(p) => write!(f, "right({p})"),
        }
    }
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Num(v) if v.is_sign_negative() => PREC_UNARY,
        Expr::Add(..) | Expr::Sub(..) => PREC_SUM,
        Expr::Mul(..) | Expr::Div(..) => PREC_PRODUCT,
        Expr::Neg(_) => PREC_UNARY,
        Expr::Pow(..) => PREC_POWER,
        _ => PREC_ATOM,
    }
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let paren = prec(e) < min;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Num(v) => out.push_str(&num(*v)),
        Expr::Name(n) => out.push_str(n),
        Expr::Pi(i) => {
            let _ = write!(out, "pi({i})");
        }
        Expr::Rho(k) => {
            let _ = write!(out, "rho({k})");
        }
        Expr::Hat(n) => {
            let _ = write!(out, "hat({n})");
        }
        Expr::Neg(a) => {
            out.push('-');
            write_expr(out, a, PREC_POWER);
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            let (op, p) = match e {
                Expr::Add(..) => (" + ", PREC_SUM),
                Expr::Sub(..) => (" - ", PREC_SUM),
                Expr::Mul(..) => (" * ", PREC_PRODUCT),
                _ => (" / ", PREC_PRODUCT),
            };
            write_expr(out, a, p);
            out.push_str(op);
            write_expr(out, b, p + 1);
        }
        Expr::Pow(a, n) => {
            write_expr(out, a, PREC_ATOM);
            let _ = write!(out, "^{n}");
        }
        Expr::Call(func, a) => {
            out.push_str(func.name());
            out.push('(');
            write_expr(out, a, 0);
            out.push(')');
        }
        Expr::Bump(c, r) => {
            let _ = write!(out, "bump({}, {})", PointLit::Vec(c.clone()), num(*r));
        }
        Expr::Dist2(c) => {
            let _ = write!(out, "dist2({})", PointLit::Vec(c.clone()));
        }
    }
    if paren {
        out.push(')');
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self, 0);
        f.write_str(&s)
    }
}

impl Display for SpaceExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match &self.base {
            SpaceBase::Euclid(n) => write!(f, "R^{n}")?,
            SpaceBase::Seq => f.write_str("R^N")?,
            SpaceBase::Circle => f.write_str("circle")?,
            SpaceBase::Interval(a, b) => write!(f, "interval({}, {})", num(*a), num(*b))?,
            SpaceBase::Set(pts) => write!(f, "set{{{}}}", list(pts, |p| p.to_string()))?,
            SpaceBase::Union(a, b) => write!(f, "union({a}, {b})")?,
            SpaceBase::Restrict(a, e) => write!(f, "restrict {a} to {e}")?,
            SpaceBase::Tilde(p) => write!(f, "tilde({p})")?,
            SpaceBase::Spec(a, None) => write!(f, "spec {a}")?,
            SpaceBase::Spec(a, Some(n)) => write!(f, "spec {a} [{n}]")?,
        }
        for m in &self.mods {
            match m {
                Modifier::Minus(pts) => write!(f, " minus {{{}}}", list(pts, |p| p.to_string()))?,
                Modifier::Where(e, rel) => {
                    let r = match rel {
                        Rel::Eq => "=",
                        Rel::Gt => ">",
                        Rel::Ne => "!=",
                    };
                    write!(f, " where {e} {r} 0")?
                }
                Modifier::Box(lo, hi) => write!(f, " box({}, {})", num(*lo), num(*hi))?,
                Modifier::Sphere(c, r) => write!(f, " sphere({}, {})", PointLit::Vec(c.clone()), num(*r))?,
            }
        }
        Ok(())
    }
}

impl Display for AssignLit {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.entries.iter().map(|(k, v)| format!("{k}: {}", num(*v))).collect();
        if let Some(t) = self.tail {
            parts.push(format!("*: {}", num(t)));
        }
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl Display for AssignRef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            AssignRef::Named(n) => f.write_str(n),
            AssignRef::Lit(l) => l.fmt(f),
        }
    }
}

impl Display for Command {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Command::EvalAt { func, point } => write!(f, "eval {func} at {point}"),
            Command::EvalUnder { func, assignment } => write!(f, "eval {func} under {assignment}"),
            Command::Classify { assignment } => write!(f, "classify {assignment}"),
            Command::Xi { point } => write!(f, "xi at {point}"),
            Command::XiAtlas { k, point } => write!(f, "xi atlas {k} at {point}"),
            Command::Probe { witnesses, toward, along } => {
                write!(f, "probe {} toward {toward} along ", witnesses.join(", "))?;
                match along {
                    Along::Z => f.write_str("z"),
                    Along::Paths(paths) => {
                        f.write_str(&list(paths, |path| format!("[{}]", list(path, |p| p.to_string()))))
                    }
                }
            }
            Command::Spec { samples: None } => f.write_str("spec"),
            Command::Spec { samples: Some(n) } => write!(f, "spec {n}"),
            Command::Density { assignment, tol, family, budget } => {
                write!(f, "density {assignment} tol {} family {{{}}}", num(*tol), family.join(", "))?;
                if let Some(b) = budget {
                    write!(f, " budget {b}")?;
                }
                Ok(())
            }
            Command::Split { func } => write!(f, "split {func}"),
            Command::Export => f.write_str("export"),
        }
    }
}

impl Display for Stmt {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Space { name, expr } => write!(f, "space {name} = {expr}"),
            Stmt::Gen { defs } => {
                let parts = list(defs, |(n, d)| match d {
                    GenDef::Proj(i) => format!("{n} = pi({i})"),
                    GenDef::Theta(p) => format!("{n} = theta({p})"),
                    GenDef::Expr(e) => format!("{n} = {e}"),
                });
                write!(f, "gen {parts}")
            }
            Stmt::Fn { name, def } => {
                write!(f, "fn {name} = ")?;
                match def {
                    FnDef::Expr(e) => write!(f, "{e}"),
                    FnDef::Atlas(pieces) => {
                        let body = pieces
                            .iter()
                            .map(|p| {
                                let cond = if p.bounds.is_empty() {
                                    "all".to_string()
                                } else {
                                    p.bounds
                                        .iter()
                                        .map(|(g, lo, hi)| format!("{g} in ({}, {})", num(*lo), num(*hi)))
                                        .collect::<Vec<_>>()
                                        .join(" and ")
                                };
                                format!("{cond} => {}", p.body)
                            })
                            .collect::<Vec<_>>()
                            .join(" | ");
                        write!(f, "atlas {{ {body} }}")
                    }
                    FnDef::XiAtlas(k) => write!(f, "xi_atlas({k})"),
                    FnDef::CutoffSum(p) => write!(f, "cutoffsum({p})"),
                    FnDef::Pair(a, b) => write!(f, "pair({a}, {b})"),
                }
            }
            Stmt::Assign { name, lit } => write!(f, "assign {name} = {lit}"),
            Stmt::Samples { points } => write!(f, "samples {{{}}}", list(points, |p| p.to_string())),
            Stmt::Use { name } => write!(f, "use {name}"),
            Stmt::Command { cmd, space: None } => cmd.fmt(f),
            Stmt::Command { cmd, space: Some(s) } => write!(f, "{cmd} in {s}"),
        }
    }
}
