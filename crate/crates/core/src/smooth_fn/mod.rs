//! Smooth maps `ℝⁿ → ℝ` as expression trees, with exact first partials.

mod expr;
mod hadamard;
mod poly;
mod quadrature;
mod scalar;
pub mod special;

pub use expr::{Expr, Guard, SmoothMap};
pub use hadamard::{hadamard_factors, HadamardFactors};
pub use quadrature::{gauss_legendre_01, GAUSS_NODES};
pub use scalar::powi;

/// The one-dimensional cutoff: 1 on `(−∞, 1/2]`, 0 on `[1, ∞)`, values in `[0, 1]`.
pub fn cutoff1d() -> SmoothMap {
    SmoothMap::new(1, Expr::slot(0).cutoff()).expect("slot 0 of arity 1")
}

/// `(x₁ − p₁)² + … + (xₙ − pₙ)²`.
pub fn distance_sq(p: &[f64]) -> SmoothMap {
    SmoothMap::new(p.len(), distance_sq_expr(p)).expect("slots bounded by p.len()")
}

fn distance_sq_expr(p: &[f64]) -> Expr {
    Expr::sum(p.iter().enumerate().map(|(i, &c)| {
        let d = if c == 0.0 { Expr::slot(i) } else { Expr::slot(i) + Expr::constant(-c) };
        d.powi(2)
    }))
}

/// Bump `ψ(|x − p|² / r²)`: 1 at `p`, positive inside the open ball, 0 outside.
pub fn bump_ball(p: &[f64], r: f64) -> crate::Result<SmoothMap> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(crate::Error::Invalid(format!("bump radius must be positive, got {r}")));
    }
    let s = distance_sq_expr(p) * Expr::constant(1.0 / (r * r));
    SmoothMap::new(p.len(), s.bump_profile())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_examples() {
        let phi = cutoff1d();
        assert_eq!(phi.eval(&[0.25]).unwrap(), 1.0);
        assert_eq!(phi.eval(&[1.5]).unwrap(), 0.0);
        let v = phi.eval(&[0.75]).unwrap();
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_sq(&[0.0, 0.0]).eval(&[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(distance_sq(&[2.0, 3.0]).eval(&[2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(distance_sq(&[1.0, 0.0, 0.0]).eval(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn bump_examples() {
        let p = [1.0, -2.0];
        let b = bump_ball(&p, 0.5).unwrap();
        assert_eq!(b.eval(&p).unwrap(), 1.0);
        assert_eq!(b.eval(&[1.5, -2.0]).unwrap(), 0.0);
        assert_eq!(b.eval(&[3.0, 0.0]).unwrap(), 0.0);
        let half = b.eval(&[1.25, -2.0]).unwrap();
        assert!(half > 0.0 && half < 1.0);
        // ψ(1/4) = exp(−1/3)
        assert!((half - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
        assert!(bump_ball(&p, 0.0).is_err());
    }
}
