use std::sync::OnceLock;

pub const GAUSS_NODES: usize = 32;

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`, ascending in `t`.
pub fn gauss_legendre_01() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_NODES;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule.push(((1.0 - x) / 2.0, w / 2.0));
        }
        rule.sort_by(|a, b| a.0.total_cmp(&b.0));
        rule
    })
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        let s: f64 = gauss_legendre_01().iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn integrates_high_degree_polynomials_exactly() {
        // ∫₀¹ t^k dt = 1/(k+1), exact up to degree 63
        for k in [0u32, 5, 31, 63] {
            let q: f64 = gauss_legendre_01().iter().map(|(t, w)| w * t.powi(k as i32)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}: {q}");
        }
    }

    #[test]
    fn nodes_inside_unit_interval() {
        assert_eq!(gauss_legendre_01().len(), GAUSS_NODES);
        assert!(gauss_legendre_01().iter().all(|(t, _)| *t > 0.0 && *t < 1.0));
    }
}
