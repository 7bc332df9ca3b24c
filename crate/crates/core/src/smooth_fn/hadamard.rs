use std::sync::Arc;

use super::expr::{Expr, SmoothMap};
use super::poly::Poly;
use crate::error::{Error, Result};

/// First-order Hadamard factorisation `f = f(p) + Σ gᵢ·(πᵢ − pᵢ)`.
#[derive(Debug, Clone)]
pub struct HadamardFactors {
    pub value_at_center: f64,
    pub factors: Vec<SmoothMap>,
    /// True when the factors were integrated symbolically.
    pub exact: bool,
}

impl HadamardFactors {
    /// `f(p) + Σ gᵢ(x)(xᵢ − pᵢ)`, the right-hand side of the identity.
    pub fn reconstruct(&self, center: &[f64], x: &[f64]) -> Result<f64> {
        let mut acc = self.value_at_center;
        for ((g, &xi), &pi) in self.factors.iter().zip(x).zip(center) {
            acc += g.eval(x)? * (xi - pi);
        }
        Ok(acc)
    }
}

/// Computes `gᵢ(x) = ∫₀¹ ∂ᵢ f(p + t(x − p)) dt` as smooth maps.
///
/// Polynomial bodies are integrated exactly in shifted coordinates `h = x − p`:
/// a monomial `c·h^α` contributes `c·αᵢ/|α| · h^(α−eᵢ)` to `gᵢ`. Everything else
/// gets a 32-node Gauss–Legendre quadrature node.
pub fn hadamard_factors(map: &SmoothMap, center: &[f64]) -> Result<HadamardFactors> {
    let n = map.arity();
    if center.len() != n {
        return Err(Error::ArityMismatch { expected: n, got: center.len() });
    }
    let value_at_center = map.eval(center)?;

    if let Some(poly) = Poly::from_expr(map.body(), n) {
        let shifted_vars: Vec<Poly> =
            (0..n).map(|i| Poly::var(n, i).add(&Poly::constant(n, center[i]))).collect();
        let shifted = poly.substitute(&shifted_vars);
        let mut factors = Vec::with_capacity(n);
        for i in 0..n {
            let mut terms = Vec::new();
            for (alpha, &c) in shifted.terms() {
                if alpha[i] == 0 {
                    continue;
                }
                let total: u32 = alpha.iter().sum();
                let coeff = c * alpha[i] as f64 / total as f64;
                let mut term = Expr::constant(coeff);
                for (j, &k) in alpha.iter().enumerate() {
                    let k = if j == i { k - 1 } else { k };
                    if k == 0 {
                        continue;
                    }
                    let h = if center[j] == 0.0 {
                        Expr::slot(j)
                    } else {
                        Expr::slot(j) + Expr::constant(-center[j])
                    };
                    term = term * if k == 1 { h } else { h.powi(k) };
                }
                terms.push(term);
            }
            let body = if terms.is_empty() { Expr::constant(0.0) } else { Expr::sum(terms) };
            factors.push(SmoothMap::new(n, body)?);
        }
        return Ok(HadamardFactors { value_at_center, factors, exact: true });
    }

    let shared = Arc::new(map.clone());
    let factors = (0..n)
        .map(|slot| SmoothMap::new(n, Expr::HadamardQuad { map: shared.clone(), center: center.to_vec(), slot }))
        .collect::<Result<Vec<_>>>()?;
    Ok(HadamardFactors { value_at_center, factors, exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(i: usize) -> Expr {
        Expr::slot(i)
    }

    #[test]
    fn square_at_three() {
        // ∫₀¹ 2(3 + t(x−3)) dt = x + 3
        let f = SmoothMap::new(1, u(0).powi(2)).unwrap();
        let h = hadamard_factors(&f, &[3.0]).unwrap();
        assert!(h.exact);
        assert_eq!(h.value_at_center, 9.0);
        for x in [-2.0, 0.0, 1.5, 7.0] {
            assert!((h.factors[0].eval(&[x]).unwrap() - (x + 3.0)).abs() < 1e-12);
            assert!((h.reconstruct(&[3.0], &[x]).unwrap() - x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_has_zero_factors() {
        let f = SmoothMap::constant(2, 4.5);
        let h = hadamard_factors(&f, &[1.0, -1.0]).unwrap();
        assert_eq!(h.value_at_center, 4.5);
        for g in &h.factors {
            assert_eq!(g.eval(&[0.3, 0.9]).unwrap(), 0.0);
        }
    }

    #[test]
    fn transcendental_uses_quadrature() {
        let f = SmoothMap::new(2, u(0).sin() * u(1)).unwrap();
        let p = [0.0, 1.0];
        let h = hadamard_factors(&f, &p).unwrap();
        assert!(!h.exact);
        let x = [0.5, 2.0];
        let fx = f.eval(&x).unwrap();
        assert!((fx - h.reconstruct(&p, &x).unwrap()).abs() <= 1e-9);
        let g0 = h.factors[0].eval(&p).unwrap();
        let g1 = h.factors[1].eval(&p).unwrap();
        assert!((g0 - 1.0).abs() < 1e-12 && g1.abs() < 1e-12);
    }

    #[test]
    fn quadrature_factor_has_partials() {
        let f = SmoothMap::new(1, u(0).exp()).unwrap();
        let h = hadamard_factors(&f, &[0.0]).unwrap();
        // g(x) = (eˣ − 1)/x, g'(x) = (x eˣ − eˣ + 1)/x²
        let x = 0.7f64;
        let d = h.factors[0].partials(&[x]).unwrap()[0];
        let expected = (x * x.exp() - x.exp() + 1.0) / (x * x);
        assert!((d - expected).abs() < 1e-12, "{d} vs {expected}");
    }

    #[test]
    fn center_length_checked() {
        let f = SmoothMap::new(2, u(0) * u(1)).unwrap();
        assert!(hadamard_factors(&f, &[1.0]).is_err());
    }
}
