//! Number types the expression evaluator is generic over.
//!
//! `f64` gives plain values, [`Dual`] carries a gradient and [`Dual2`] carries
//! a gradient plus a dense Hessian. Every elementary function is routed
//! through [`Scalar::unary`] with its first and second derivative, so the
//! chain rule is applied structurally rather than by differencing.

use super::expr::SmoothMap;
use super::quadrature::gauss_legendre_01;
use crate::error::{Error, Result};

pub(crate) trait Scalar: Clone + std::fmt::Debug {
    fn constant(c: f64, dim: usize) -> Self;
    fn value(&self) -> f64;
    fn dim(&self) -> usize;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Applies a scalar function given its value and first two derivatives at `self.value()`.
    fn unary(&self, f: f64, df: f64, d2f: f64) -> Self;
    /// `∂_slot map` evaluated at `at`, lifted into this number type.
    fn partial_of(map: &SmoothMap, slot: usize, at: &[Self]) -> Result<Self>;

    fn neg(&self) -> Self {
        self.unary(-self.value(), -1.0, 0.0)
    }

    fn recip(&self) -> Self {
        let a = self.value();
        let r = 1.0 / a;
        self.unary(r, -r * r, 2.0 * r * r * r)
    }

    fn powi(&self, n: u32) -> Self {
        let a = self.value();
        let f = powi(a, n);
        let df = if n == 0 { 0.0 } else { n as f64 * powi(a, n - 1) };
        let d2f = if n < 2 { 0.0 } else { (n as f64) * ((n - 1) as f64) * powi(a, n - 2) };
        self.unary(f, df, d2f)
    }

    fn exp(&self) -> Self {
        let e = self.value().exp();
        self.unary(e, e, e)
    }

    fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.unary(s, c, -s)
    }

    fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.unary(c, -s, -c)
    }
}

/// Integer power by repeated squaring. Shared by every evaluation path so
/// that direct numeric code and expression evaluation agree bit for bit.
pub fn powi(mut base: f64, mut n: u32) -> f64 {
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        n >>= 1;
        if n > 0 {
            base *= base;
        }
    }
    acc
}

impl Scalar for f64 {
    fn constant(c: f64, _dim: usize) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn dim(&self) -> usize {
        0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn unary(&self, f: f64, _df: f64, _d2f: f64) -> Self {
        f
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
    fn powi(&self, n: u32) -> Self {
        powi(*self, n)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn partial_of(map: &SmoothMap, slot: usize, at: &[Self]) -> Result<Self> {
        let seeded = Dual::seed(at);
        let out = map.eval_generic(&seeded)?;
        Ok(out.grad[slot])
    }
}

/// Value together with a gradient with respect to `dim` seed variables.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dual {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl Dual {
    pub fn seed(at: &[f64]) -> Vec<Dual> {
        let n = at.len();
        at.iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut grad = vec![0.0; n];
                grad[i] = 1.0;
                Dual { value: v, grad }
            })
            .collect()
    }
}

impl Scalar for Dual {
    fn constant(c: f64, dim: usize) -> Self {
        Dual { value: c, grad: vec![0.0; dim] }
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn dim(&self) -> usize {
        self.grad.len()
    }
    fn add(&self, other: &Self) -> Self {
        Dual {
            value: self.value + other.value,
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| a + b).collect(),
        }
    }
    fn mul(&self, other: &Self) -> Self {
        let (a, b) = (self.value, other.value);
        Dual {
            value: a * b,
            grad: self.grad.iter().zip(&other.grad).map(|(da, db)| a * db + b * da).collect(),
        }
    }
    fn unary(&self, f: f64, df: f64, _d2f: f64) -> Self {
        Dual { value: f, grad: self.grad.iter().map(|d| df * d).collect() }
    }
    fn partial_of(map: &SmoothMap, slot: usize, at: &[Self]) -> Result<Self> {
        let dim = at.first().map(Scalar::dim).unwrap_or(0);
        let point: Vec<f64> = at.iter().map(|d| d.value).collect();
        let second = map.eval_generic(&Dual2::seed(&point))?;
        let n = point.len();
        // d/dx_j [∂_slot f(y(x))] = Σ_k ∂_k ∂_slot f(y) · ∂y_k/∂x_j
        let mut grad = vec![0.0; dim];
        for (k, yk) in at.iter().enumerate() {
            let h = second.hess[slot * n + k];
            for (g, d) in grad.iter_mut().zip(&yk.grad) {
                *g += h * d;
            }
        }
        Ok(Dual { value: second.grad[slot], grad })
    }
}

/// Value, gradient and row-major Hessian.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dual2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Dual2 {
    pub fn seed(at: &[f64]) -> Vec<Dual2> {
        let n = at.len();
        at.iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut grad = vec![0.0; n];
                grad[i] = 1.0;
                Dual2 { value: v, grad, hess: vec![0.0; n * n] }
            })
            .collect()
    }
}

impl Scalar for Dual2 {
    fn constant(c: f64, dim: usize) -> Self {
        Dual2 { value: c, grad: vec![0.0; dim], hess: vec![0.0; dim * dim] }
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn dim(&self) -> usize {
        self.grad.len()
    }
    fn add(&self, other: &Self) -> Self {
        Dual2 {
            value: self.value + other.value,
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| a + b).collect(),
        }
    }
    fn mul(&self, other: &Self) -> Self {
        let (a, b) = (self.value, other.value);
        let n = self.grad.len();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                hess[idx] = a * other.hess[idx]
                    + b * self.hess[idx]
                    + self.grad[i] * other.grad[j]
                    + other.grad[i] * self.grad[j];
            }
        }
        Dual2 {
            value: a * b,
            grad: self.grad.iter().zip(&other.grad).map(|(da, db)| a * db + b * da).collect(),
            hess,
        }
    }
    fn unary(&self, f: f64, df: f64, d2f: f64) -> Self {
        let n = self.grad.len();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                hess[idx] = d2f * self.grad[i] * self.grad[j] + df * self.hess[idx];
            }
        }
        Dual2 { value: f, grad: self.grad.iter().map(|d| df * d).collect(), hess }
    }
    fn partial_of(_map: &SmoothMap, _slot: usize, _at: &[Self]) -> Result<Self> {
        Err(Error::DerivativeOrder)
    }
}

/// `∫₀¹ ∂_slot f(c + t(x − c)) dt` in any number type, by 32-node Gauss–Legendre.
pub(crate) fn hadamard_integral<T: Scalar>(
    map: &SmoothMap,
    center: &[f64],
    slot: usize,
    args: &[T],
) -> Result<T> {
    let dim = args.first().map(Scalar::dim).unwrap_or(0);
    let mut acc = T::constant(0.0, dim);
    for &(t, w) in gauss_legendre_01() {
        let along: Vec<T> = args
            .iter()
            .zip(center)
            .map(|(x, &c)| {
                // c + t (x − c)
                let shifted = x.add(&T::constant(-c, dim));
                shifted.mul(&T::constant(t, dim)).add(&T::constant(c, dim))
            })
            .collect();
        let d = T::partial_of(map, slot, &along)?;
        acc = acc.add(&d.mul(&T::constant(w, dim)));
    }
    Ok(acc)
}
