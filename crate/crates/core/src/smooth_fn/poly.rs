//! Sparse multivariate polynomials, used to recognise polynomial bodies and
//! integrate their Hadamard factors symbolically.

use std::collections::BTreeMap;

use super::expr::Expr;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Poly {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Poly {
        let mut p = Poly::zero(nvars);
        if c != 0.0 {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Poly {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(e, 1.0);
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    fn insert(&mut self, e: Vec<u32>, c: f64) {
        let slot = self.terms.entry(e).or_insert(0.0);
        *slot += c;
    }

    fn prune(mut self) -> Poly {
        self.terms.retain(|_, c| *c != 0.0);
        self
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), *c);
        }
        out.prune()
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect() }.prune()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert(e, ca * cb);
            }
        }
        out.prune()
    }

    pub fn powi(&self, n: u32) -> Poly {
        let mut acc = Poly::constant(self.nvars, 1.0);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Substitutes `inners[i]` for variable `i`.
    pub fn substitute(&self, inners: &[Poly]) -> Poly {
        let nvars = inners.first().map(|p| p.nvars).unwrap_or(0);
        let mut out = Poly::zero(nvars);
        for (e, c) in &self.terms {
            let mut term = Poly::constant(nvars, *c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&inners[i].powi(k));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Recognises polynomial expression trees; `None` for anything transcendental.
    pub fn from_expr(e: &Expr, nvars: usize) -> Option<Poly> {
        Some(match e {
            Expr::Const { value } => Poly::constant(nvars, *value),
            Expr::Slot { index } => Poly::var(nvars, *index),
            Expr::Add { lhs, rhs } => Poly::from_expr(lhs, nvars)?.add(&Poly::from_expr(rhs, nvars)?),
            Expr::Sum { terms } => {
                let mut acc = Poly::zero(nvars);
                for t in terms {
                    acc = acc.add(&Poly::from_expr(t, nvars)?);
                }
                acc
            }
            Expr::Mul { lhs, rhs } => Poly::from_expr(lhs, nvars)?.mul(&Poly::from_expr(rhs, nvars)?),
            Expr::Neg { arg } => Poly::from_expr(arg, nvars)?.scale(-1.0),
            Expr::Powi { arg, exp } => Poly::from_expr(arg, nvars)?.powi(*exp),
            Expr::Compose { outer, inners } => {
                let outer_poly = Poly::from_expr(outer.body(), outer.arity())?;
                let inner_polys = inners.iter().map(|i| Poly::from_expr(i, nvars)).collect::<Option<Vec<_>>>()?;
                if inner_polys.is_empty() {
                    let c = outer_poly.terms.values().sum::<f64>();
                    Poly::constant(nvars, c)
                } else {
                    outer_poly.substitute(&inner_polys)
                }
            }
            _ => return None,
        })
    }
}
