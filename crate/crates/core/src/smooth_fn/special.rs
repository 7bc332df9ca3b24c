//! Closed forms for the two flat-glued primitives.
//!
//! Both return `(f, f', f'')` so they plug into the structural chain rule.
//! Whenever the exponential underflows to zero the derivatives are reported
//! as zero too, which avoids `0 · ∞` near the gluing points.

/// `h(s) = exp(-1/s)` for `s > 0`, else 0, with two derivatives.
fn flat_jet(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let h = (-1.0 / s).exp();
    if h == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let s2 = s * s;
    (h, h / s2, h * (1.0 - 2.0 * s) / (s2 * s2))
}

/// The cutoff `φ(t) = h(1−t) / (h(1−t) + h(t−1/2))`.
///
/// `φ ∈ [0, 1]`, `φ = 1` on `(−∞, 1/2]`, `φ = 0` on `[1, ∞)`.
pub fn cutoff_jet(t: f64) -> (f64, f64, f64) {
    let (a, da, d2a) = flat_jet(1.0 - t);
    let (b, db, d2b) = flat_jet(t - 0.5);
    if b == 0.0 {
        return (1.0, 0.0, 0.0);
    }
    if a == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    // a(t) = h(1−t) flips the sign of odd derivatives.
    let (da, d2a) = (-da, d2a);
    let s = a + b;
    let ds = da + db;
    let num = da * b - a * db;
    let dnum = d2a * b - a * d2b;
    let f = a / s;
    let df = num / (s * s);
    let d2f = (dnum * s - 2.0 * num * ds) / (s * s * s);
    (f, df, d2f)
}

pub fn cutoff(t: f64) -> f64 {
    cutoff_jet(t).0
}

/// The bump profile `ψ(s) = e · exp(−1/(1−s)) = exp(−s/(1−s))` for `s < 1`, else 0.
///
/// The second form is used so that `ψ(0) = 1` exactly.
pub fn bump_profile_jet(s: f64) -> (f64, f64, f64) {
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let w = 1.0 - s;
    let psi = (-s / w).exp();
    if psi == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let dg = -1.0 / (w * w);
    let d2g = -2.0 / (w * w * w);
    (psi, psi * dg, psi * (dg * dg + d2g))
}

pub fn bump_profile(s: f64) -> f64 {
    bump_profile_jet(s).0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn cutoff_plateaus_are_exact() {
        assert_eq!(cutoff(0.25), 1.0);
        assert_eq!(cutoff(0.5), 1.0);
        assert_eq!(cutoff(-7.0), 1.0);
        assert_eq!(cutoff(1.0), 0.0);
        assert_eq!(cutoff(1.5), 0.0);
        let mid = cutoff(0.75);
        assert!(mid > 0.0 && mid < 1.0);
        // symmetric construction: h(1/4) / (2 h(1/4))
        assert!((mid - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        for &t in &[0.55, 0.6, 0.7, 0.75, 0.8, 0.9, 0.97] {
            let (_, d, d2) = cutoff_jet(t);
            let fd = central(cutoff, t, 1e-6);
            assert!((d - fd).abs() < 1e-5 * (1.0 + d.abs()), "t={t}: {d} vs {fd}");
            let fd2 = central(|x| cutoff_jet(x).1, t, 1e-6);
            assert!((d2 - fd2).abs() < 1e-4 * (1.0 + d2.abs()), "t={t}: {d2} vs {fd2}");
        }
    }

    #[test]
    fn bump_profile_shape() {
        assert_eq!(bump_profile(0.0), 1.0);
        assert_eq!(bump_profile(1.0), 0.0);
        assert_eq!(bump_profile(3.0), 0.0);
        let q = bump_profile(0.25);
        assert!(q > 0.0 && q < 1.0);
        for &s in &[-0.5, 0.1, 0.5, 0.9] {
            let (_, d, d2) = bump_profile_jet(s);
            let fd = central(bump_profile, s, 1e-6);
            assert!((d - fd).abs() < 1e-5 * (1.0 + d.abs()));
            let fd2 = central(|x| bump_profile_jet(x).1, s, 1e-6);
            assert!((d2 - fd2).abs() < 1e-4 * (1.0 + d2.abs()));
        }
    }
}
