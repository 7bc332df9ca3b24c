use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::scalar::{hadamard_integral, Dual, Scalar};
use super::special::{bump_profile_jet, cutoff_jet};
use crate::error::{Error, Result};

/// Domain predicate attached to a reciprocal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guard {
    NonZero,
    Positive,
}

impl Guard {
    fn admits(self, v: f64) -> bool {
        match self {
            Guard::NonZero => v != 0.0 && v.is_finite(),
            Guard::Positive => v > 0.0 && v.is_finite(),
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::NonZero => f.write_str("denominator != 0"),
            Guard::Positive => f.write_str("denominator > 0"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    Const { value: f64 },
    Slot { index: usize },
    Add { lhs: Arc<Expr>, rhs: Arc<Expr> },
    /// Left-to-right n-ary sum.
    Sum { terms: Vec<Arc<Expr>> },
    Mul { lhs: Arc<Expr>, rhs: Arc<Expr> },
    Neg { arg: Arc<Expr> },
    Recip { arg: Arc<Expr>, guard: Guard },
    Powi { arg: Arc<Expr>, exp: u32 },
    Exp { arg: Arc<Expr> },
    Sin { arg: Arc<Expr> },
    Cos { arg: Arc<Expr> },
    Cutoff { arg: Arc<Expr> },
    BumpProfile { arg: Arc<Expr> },
    Compose { outer: Arc<SmoothMap>, inners: Vec<Arc<Expr>> },
    /// `∫₀¹ ∂_slot map(center + t(x − center)) dt` by fixed Gauss–Legendre.
    HadamardQuad { map: Arc<SmoothMap>, center: Vec<f64>, slot: usize },
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const { value }
    }

    pub fn slot(index: usize) -> Expr {
        Expr::Slot { index }
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        Expr::Sum { terms: terms.into_iter().map(Arc::new).collect() }
    }

    pub fn recip(self, guard: Guard) -> Expr {
        Expr::Recip { arg: Arc::new(self), guard }
    }

    pub fn powi(self, exp: u32) -> Expr {
        Expr::Powi { arg: Arc::new(self), exp }
    }

    pub fn exp(self) -> Expr {
        Expr::Exp { arg: Arc::new(self) }
    }

    pub fn sin(self) -> Expr {
        Expr::Sin { arg: Arc::new(self) }
    }

    pub fn cos(self) -> Expr {
        Expr::Cos { arg: Arc::new(self) }
    }

    pub fn cutoff(self) -> Expr {
        Expr::Cutoff { arg: Arc::new(self) }
    }

    pub fn bump_profile(self) -> Expr {
        Expr::BumpProfile { arg: Arc::new(self) }
    }

    /// Largest slot index referenced directly by this tree (compose inners included).
    fn max_slot(&self) -> Option<usize> {
        match self {
            Expr::Const { .. } => None,
            Expr::Slot { index } => Some(*index),
            Expr::Add { lhs, rhs } | Expr::Mul { lhs, rhs } => lhs.max_slot().max(rhs.max_slot()),
            Expr::Sum { terms } => terms.iter().filter_map(|t| t.max_slot()).max(),
            Expr::Neg { arg }
            | Expr::Recip { arg, .. }
            | Expr::Powi { arg, .. }
            | Expr::Exp { arg }
            | Expr::Sin { arg }
            | Expr::Cos { arg }
            | Expr::Cutoff { arg }
            | Expr::BumpProfile { arg } => arg.max_slot(),
            Expr::Compose { inners, .. } => inners.iter().filter_map(|t| t.max_slot()).max(),
            Expr::HadamardQuad { map, .. } => map.arity.checked_sub(1),
        }
    }

    pub(crate) fn eval<T: Scalar>(&self, args: &[T], dim: usize) -> Result<T> {
        Ok(match self {
            Expr::Const { value } => T::constant(*value, dim),
            Expr::Slot { index } => args[*index].clone(),
            Expr::Add { lhs, rhs } => lhs.eval(args, dim)?.add(&rhs.eval(args, dim)?),
            Expr::Sum { terms } => {
                let mut iter = terms.iter();
                let mut acc = match iter.next() {
                    Some(t) => t.eval(args, dim)?,
                    None => return Ok(T::constant(0.0, dim)),
                };
                for t in iter {
                    acc = acc.add(&t.eval(args, dim)?);
                }
                acc
            }
            Expr::Mul { lhs, rhs } => lhs.eval(args, dim)?.mul(&rhs.eval(args, dim)?),
            Expr::Neg { arg } => arg.eval(args, dim)?.neg(),
            Expr::Recip { arg, guard } => {
                let a = arg.eval(args, dim)?;
                if !guard.admits(a.value()) {
                    return Err(Error::GuardViolation { guard: guard.to_string(), value: a.value() });
                }
                a.recip()
            }
            Expr::Powi { arg, exp } => arg.eval(args, dim)?.powi(*exp),
            Expr::Exp { arg } => arg.eval(args, dim)?.exp(),
            Expr::Sin { arg } => arg.eval(args, dim)?.sin(),
            Expr::Cos { arg } => arg.eval(args, dim)?.cos(),
            Expr::Cutoff { arg } => {
                let a = arg.eval(args, dim)?;
                let (f, df, d2f) = cutoff_jet(a.value());
                a.unary(f, df, d2f)
            }
            Expr::BumpProfile { arg } => {
                let a = arg.eval(args, dim)?;
                let (f, df, d2f) = bump_profile_jet(a.value());
                a.unary(f, df, d2f)
            }
            Expr::Compose { outer, inners } => {
                let vals = inners.iter().map(|e| e.eval(args, dim)).collect::<Result<Vec<T>>>()?;
                outer.body.eval(&vals, dim)?
            }
            Expr::HadamardQuad { map, center, slot } => hadamard_integral(map, center, *slot, args)?,
        })
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // 0: sum level, 1: product level, 2: atom level
        let paren = |f: &mut fmt::Formatter<'_>, needed: bool, body: &dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result| {
            if needed {
                f.write_str("(")?;
                body(f)?;
                f.write_str(")")
            } else {
                body(f)
            }
        };
        match self {
            Expr::Const { value } => {
                if *value < 0.0 {
                    write!(f, "({value:?})")
                } else {
                    write!(f, "{value:?}")
                }
            }
            Expr::Slot { index } => write!(f, "u{}", index + 1),
            Expr::Add { lhs, rhs } => paren(f, prec > 0, &|f| {
                lhs.fmt_prec(f, 0)?;
                f.write_str(" + ")?;
                rhs.fmt_prec(f, 1)
            }),
            Expr::Sum { terms } => {
                if terms.is_empty() {
                    return f.write_str("0.0");
                }
                paren(f, prec > 0 && terms.len() > 1, &|f| {
                    for (i, t) in terms.iter().enumerate() {
                        if i > 0 {
                            f.write_str(" + ")?;
                        }
                        t.fmt_prec(f, if terms.len() > 1 { 1 } else { prec })?;
                    }
                    Ok(())
                })
            }
            Expr::Mul { lhs, rhs } => paren(f, prec > 1, &|f| {
                lhs.fmt_prec(f, 1)?;
                f.write_str(" * ")?;
                rhs.fmt_prec(f, 2)
            }),
            Expr::Neg { arg } => {
                f.write_str("-")?;
                arg.fmt_prec(f, 2)
            }
            Expr::Recip { arg, .. } => paren(f, prec > 1, &|f| {
                f.write_str("1 / ")?;
                arg.fmt_prec(f, 2)
            }),
            Expr::Powi { arg, exp } => {
                arg.fmt_prec(f, 2)?;
                write!(f, "^{exp}")
            }
            Expr::Exp { arg } => write!(f, "exp({arg})"),
            Expr::Sin { arg } => write!(f, "sin({arg})"),
            Expr::Cos { arg } => write!(f, "cos({arg})"),
            Expr::Cutoff { arg } => write!(f, "cutoff({arg})"),
            Expr::BumpProfile { arg } => write!(f, "bump_profile({arg})"),
            Expr::Compose { outer, inners } => {
                write!(f, "[{}](", outer.body)?;
                for (i, e) in inners.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
            Expr::HadamardQuad { map, center, slot } => {
                write!(f, "hadamard_quad[{}; d{}; at {:?}]", map.body, slot + 1, center)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add { lhs: Arc::new(self), rhs: Arc::new(rhs) }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul { lhs: Arc::new(self), rhs: Arc::new(rhs) }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg { arg: Arc::new(self) }
    }
}

/// A smooth map `ℝⁿ → ℝ` given by an immutable expression tree over `arity` slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothMap {
    arity: usize,
    body: Arc<Expr>,
}

impl SmoothMap {
    pub fn new(arity: usize, body: Expr) -> Result<SmoothMap> {
        if let Some(slot) = body.max_slot() {
            if slot >= arity {
                return Err(Error::SlotOutOfRange { slot, arity });
            }
        }
        Ok(SmoothMap { arity, body: Arc::new(body) })
    }

    pub fn constant(arity: usize, value: f64) -> SmoothMap {
        SmoothMap { arity, body: Arc::new(Expr::constant(value)) }
    }

    /// The coordinate projection `(u₁,…,uₙ) ↦ u_{index+1}`.
    pub fn projection(arity: usize, index: usize) -> Result<SmoothMap> {
        SmoothMap::new(arity, Expr::slot(index))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    pub(crate) fn eval_generic<T: Scalar>(&self, args: &[T]) -> Result<T> {
        if args.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: args.len() });
        }
        let dim = args.first().map(Scalar::dim).unwrap_or(0);
        self.body.eval(args, dim)
    }

    pub fn eval(&self, args: &[f64]) -> Result<f64> {
        self.eval_generic(args)
    }

    /// All first partials at `args`, by forward-mode structural differentiation.
    pub fn partials(&self, args: &[f64]) -> Result<Vec<f64>> {
        if args.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: args.len() });
        }
        Ok(self.eval_generic(&Dual::seed(args))?.grad)
    }

    /// Value and gradient in one pass.
    pub fn value_and_partials(&self, args: &[f64]) -> Result<(f64, Vec<f64>)> {
        if args.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: args.len() });
        }
        let d = self.eval_generic(&Dual::seed(args))?;
        Ok((d.value, d.grad))
    }

    /// `outer ∘ (inners…)`. All inners must share an arity; `arity` is used
    /// when `inners` is empty.
    pub fn compose_with_arity(outer: &SmoothMap, inners: &[SmoothMap], arity: usize) -> Result<SmoothMap> {
        if inners.len() != outer.arity {
            return Err(Error::ArityMismatch { expected: outer.arity, got: inners.len() });
        }
        if let Some(bad) = inners.iter().find(|m| m.arity != arity) {
            return Err(Error::ArityMismatch { expected: arity, got: bad.arity });
        }
        Ok(SmoothMap {
            arity,
            body: Arc::new(Expr::Compose {
                outer: Arc::new(outer.clone()),
                inners: inners.iter().map(|m| m.body.clone()).collect(),
            }),
        })
    }

    pub fn compose(outer: &SmoothMap, inners: &[SmoothMap]) -> Result<SmoothMap> {
        let arity = match inners.first() {
            Some(m) => m.arity,
            None => return Err(Error::Invalid("composition needs at least one inner map".into())),
        };
        SmoothMap::compose_with_arity(outer, inners, arity)
    }
}

impl fmt::Display for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) -> {}", (1..=self.arity).map(|i| format!("u{i}")).collect::<Vec<_>>().join(", "), self.body)
    }
}
