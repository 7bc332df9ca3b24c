#![allow(dead_code)]

use diffspace::smooth_fn::{Expr, SmoothMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A polynomial kept as plain coefficient/exponent data, evaluated without the library.
#[derive(Debug, Clone)]
pub struct RandPoly {
    pub arity: usize,
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl RandPoly {
    pub fn random(rng: &mut impl Rng, max_arity: usize, max_degree: u32) -> RandPoly {
        let arity = rng.random_range(1..=max_arity);
        let nterms = rng.random_range(1..=6);
        let terms = (0..nterms)
            .map(|_| {
                let c = rng.random_range(-2.0..2.0);
                let mut left = rng.random_range(0..=max_degree);
                let mut exps = vec![0u32; arity];
                while left > 0 {
                    exps[rng.random_range(0..arity)] += 1;
                    left -= 1;
                }
                (c, exps)
            })
            .collect();
        RandPoly { arity, terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// `∂_i` by differentiating the monomials by hand.
    pub fn partial(&self, i: usize, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .filter(|(_, e)| e[i] > 0)
            .map(|(c, e)| {
                let mut prod = c * e[i] as f64;
                for (j, (&k, &v)) in e.iter().zip(x).enumerate() {
                    let k = if j == i { k - 1 } else { k };
                    prod *= v.powi(k as i32);
                }
                prod
            })
            .sum()
    }

    pub fn to_map(&self) -> SmoothMap {
        let body = Expr::sum(self.terms.iter().map(|(c, e)| {
            let mut t = Expr::constant(*c);
            for (j, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t * Expr::slot(j).powi(k);
                }
            }
            t
        }));
        SmoothMap::new(self.arity, body).unwrap()
    }
}

/// A random guard-free expression tree over `arity` slots.
pub fn random_expr(rng: &mut impl Rng, arity: usize, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return if rng.random_bool(0.3) {
            Expr::constant(rng.random_range(-2.0..2.0))
        } else {
            Expr::slot(rng.random_range(0..arity))
        };
    }
    let a = random_expr(rng, arity, depth - 1);
    match rng.random_range(0..8) {
        0 => a + random_expr(rng, arity, depth - 1),
        1 => a * random_expr(rng, arity, depth - 1),
        2 => -a,
        3 => a.sin(),
        4 => a.cos(),
        // keep exp's argument bounded
        5 => a.sin().exp(),
        6 => a.powi(rng.random_range(0..4)),
        _ => a - random_expr(rng, arity, depth - 1),
    }
}

pub fn random_point(rng: &mut impl Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..r)).collect()
}

/// Central difference of `f` along coordinate `i` with step `h`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// Mixed tolerance `|a − b| ≤ tol · max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
