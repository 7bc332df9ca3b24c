//! The sequence space `ℝ^ℕ`: the cutoff sum `ξ = Σ_k φ(k² ρ_k)`, its
//! truncation, the probe sequence `z_k → 0` along which it diverges, the
//! `θ_p`-augmented structure and prolongation checks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::carrier::{Carrier, OpenInterval, Point, SeqPoint, Side};
use crate::error::{Error, Result};
use crate::smooth_fn::{powi, special::cutoff, Expr, SmoothMap};
use crate::structure::{
    compose_elements, partial_sum_squares, AlgebraElement, Atlas, AtlasPiece, DifferentialSpace, GenRef, Generator,
    Region,
};

/// Upper bound on explicitly evaluated terms of the cutoff sum.
pub const MAX_TERMS: usize = 20_000_000;
/// A probe diverges when its values grow strictly over at least this many points…
pub const DIVERGENCE_MIN_POINTS: usize = 20;
/// …and the last value reaches this threshold.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;
/// Probe limits differing by more than this rule out a continuous prolongation.
pub const LIMIT_TOL: f64 = 1e-6;
/// Number of trailing probe values averaged into a limit estimate.
pub const LIMIT_WINDOW: usize = 5;
/// Final probe distance required for a probe to count as converging.
pub const PROBE_TOL: f64 = 1e-3;

/// `ρ_k(p) = Σ_{i ≤ k} p_i²`.
pub fn rho(k: usize, p: &SeqPoint) -> f64 {
    let mut acc = 0.0;
    for &(i, v) in p.entries() {
        if i > k {
            break;
        }
        acc += powi(v, 2);
    }
    acc
}

/// `z_k`: the single-support point with `1/(k√2)` at index `k`.
pub fn z(k: usize) -> Result<SeqPoint> {
    if k == 0 {
        return Err(Error::Invalid("z(k) needs k ≥ 1".into()));
    }
    SeqPoint::single(k, 1.0 / (k as f64 * std::f64::consts::SQRT_2))
}

/// Outcome of summing the cutoff series up to its last nonzero term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    /// First index with `k² ρ_k > 1`; every term from here on is exactly 0.
    pub k0: usize,
    /// Leading terms with `ρ_j = 0`, each exactly `φ(0) = 1`, counted without evaluation.
    pub unit_prefix: usize,
    /// Terms evaluated after the prefix (indices `unit_prefix+1 .. k0`).
    pub terms_evaluated: usize,
    pub value: f64,
    /// `(j, φ(j² ρ_j))` for the evaluated terms, when requested.
    pub trace: Vec<(usize, f64)>,
}

/// `ξ(p) = Σ_k φ(k² ρ_k(p))`.
pub fn xi(p: &SeqPoint) -> Result<TruncationReport> {
    xi_centered(&SeqPoint::zero(), p)
}

/// `ξ(p)` with the evaluated terms recorded.
pub fn xi_traced(p: &SeqPoint) -> Result<TruncationReport> {
    cutoff_sum(&SeqPoint::zero(), p, true)
}

/// `Σ_k φ(k² ρ_k(p − center))`, the cutoff sum translated to `center`.
pub fn xi_centered(center: &SeqPoint, p: &SeqPoint) -> Result<TruncationReport> {
    cutoff_sum(center, p, false)
}

fn cutoff_sum(center: &SeqPoint, p: &SeqPoint, trace: bool) -> Result<TruncationReport> {
    let d = p.sub(center);
    let entries = d.entries();
    let first = match entries.first() {
        Some(e) => e.0,
        None => return Err(Error::DivergentAtZero),
    };
    // ρ_j = 0 for j < first, so those terms are φ(0) = 1.
    let unit_prefix = first - 1;
    let mut value = unit_prefix as f64;
    let mut out = Vec::new();
    let mut rho = 0.0;
    let mut next = 0;
    let mut j = first;
    loop {
        while next < entries.len() && entries[next].0 <= j {
            rho += powi(entries[next].1, 2);
            next += 1;
        }
        let t = ((j * j) as f64) * rho;
        if t > 1.0 {
            break;
        }
        let term = cutoff(t);
        value += term;
        if trace {
            out.push((j, term));
        }
        if j - unit_prefix >= MAX_TERMS {
            return Err(Error::TruncationBudget(MAX_TERMS));
        }
        j += 1;
    }
    Ok(TruncationReport { k0: j, unit_prefix, terms_evaluated: j - first, value, trace: out })
}

fn rho_name(k: usize) -> String {
    format!("rho({k})")
}

/// Ensures `rho(1..=k)` exist as composite generators of `space`.
pub fn ensure_rho_generators(space: &mut DifferentialSpace, k: usize) -> Result<Vec<GenRef>> {
    (1..=k)
        .map(|j| {
            let name = rho_name(j);
            match space.generator_by_name(&name) {
                Ok(g) => Ok(g),
                Err(_) => space.add_generator(&name, partial_sum_squares(j, &SeqPoint::zero())),
            }
        })
        .collect()
}

/// Registers `ξ` as the explicit atlas `{(U_k, Σ_{j<k} φ(j² ρ_j)) : 2 ≤ k ≤ big_k}`
/// with `U_k = {ρ_k > 1/k²}`.
pub fn xi_atlas(space: &mut DifferentialSpace, name: &str, big_k: usize) -> Result<Arc<AlgebraElement>> {
    if big_k < 2 {
        return Err(Error::Invalid("xi atlas needs K ≥ 2".into()));
    }
    if !matches!(space.carrier(), Carrier::SeqSpace(_)) {
        return Err(Error::Invalid("xi atlas lives on a sequence space".into()));
    }
    let rhos = ensure_rho_generators(space, big_k)?;
    let mut pieces = Vec::with_capacity(big_k - 1);
    for k in 2..=big_k {
        let bound = 1.0 / ((k * k) as f64);
        let region = Region { bounds: vec![(rhos[k - 1].clone(), OpenInterval::above(bound)?)] };
        let body = Expr::sum((1..k).map(|j| (Expr::constant((j * j) as f64) * Expr::slot(j - 1)).cutoff()));
        let map = SmoothMap::new(k - 1, body)?;
        pieces.push(AtlasPiece { region, map, inputs: rhos[..k - 1].to_vec() });
    }
    space.register_atlas(name, Atlas::Pieces(pieces)).map_err(|e| match e {
        Error::AtlasCoverage { hint } => Error::AtlasCoverage { hint: format!("{hint}; try a larger K than {big_k}") },
        other => other,
    })
}

/// Registers the lazily generated cutoff-sum atlas centred at `center`.
pub fn register_xi(space: &mut DifferentialSpace, name: &str, center: &SeqPoint) -> Result<Arc<AlgebraElement>> {
    if !matches!(space.carrier(), Carrier::SeqSpace(_)) {
        return Err(Error::Invalid("xi lives on a sequence space".into()));
    }
    if space.carrier().contains(&Point::Seq(center.clone()))? {
        return Err(Error::Invalid(format!("xi centred at {center} is undefined at a carrier point")));
    }
    space.register_atlas(name, Atlas::CutoffSum { center: center.clone() })
}

/// Probe indices `k_i = round(10^(6 i / 19))`, 20 strictly increasing values from 1 to 10⁶.
pub fn default_probe_indices() -> Vec<usize> {
    let n = DIVERGENCE_MIN_POINTS;
    let mut ks: Vec<usize> = (0..n)
        .map(|i| 10f64.powf(6.0 * i as f64 / (n - 1) as f64).round() as usize)
        .collect();
    ks.dedup();
    ks
}

/// `center + z_k` along [`default_probe_indices`].
pub fn default_probe(center: &SeqPoint) -> Result<Vec<Point>> {
    default_probe_indices().into_iter().map(|k| Ok(Point::Seq(center.add(&z(k)?)))).collect()
}

/// Strict growth over at least [`DIVERGENCE_MIN_POINTS`] values ending at or above [`DIVERGENCE_THRESHOLD`].
pub fn divergence_fires(values: &[f64]) -> bool {
    values.len() >= DIVERGENCE_MIN_POINTS
        && values.windows(2).all(|w| w[1] > w[0])
        && values.last().is_some_and(|v| *v >= DIVERGENCE_THRESHOLD)
}

/// Space `(ℝ^ℕ, Ṽ)`: the projection family plus `θ_p`, named `theta`.
pub fn tilde_structure(p: &SeqPoint) -> Result<DifferentialSpace> {
    let mut s = DifferentialSpace::new("Vtilde", Carrier::sequences());
    s.add_generator(THETA, Generator::Indicator { point: Point::Seq(p.clone()) })?;
    s.add_samples(vec![Point::Seq(p.clone())])?;
    Ok(s)
}

pub const THETA: &str = "theta";

/// `(ℝ^ℕ − {p}, (V_ℕ)) ⊕ ({p}, F(p))` built from the sides of `tilde`.
pub fn tilde_as_union(tilde: &DifferentialSpace, p: &SeqPoint) -> Result<DifferentialSpace> {
    let punctured = Carrier::sequences().minus(vec![Point::Seq(p.clone())])?;
    let left = tilde.restrict("Vpunct", punctured)?;
    let right = tilde.restrict("Vpoint", Carrier::FiniteSet(vec![Point::Seq(p.clone())]))?;
    DifferentialSpace::union_space("Vsplit", left, right)
}

/// Splits an element `f` of `Ṽ` into `(f with θ_p ↦ 0, f(p))`.
pub fn tilde_decompose(tilde: &DifferentialSpace, p: &SeqPoint, name: &str) -> Result<AlgebraElement> {
    let theta = tilde.generator_by_name(THETA)?;
    let f = tilde.resolve(name)?;
    let left = substitute_generator(&f, &theta, 0.0)?;
    let at_p = tilde.eval_element(&f, &Point::Seq(p.clone()))?;
    Ok(AlgebraElement::Pair { left: Arc::new(left), right: Arc::new(AlgebraElement::constant(at_p)) })
}

fn substitute_generator(e: &AlgebraElement, g: &GenRef, value: f64) -> Result<AlgebraElement> {
    match e {
        AlgebraElement::Global { map, inputs } => {
            let kept: Vec<GenRef> = inputs.iter().filter(|h| *h != g).cloned().collect();
            let m = kept.len();
            let inners = inputs
                .iter()
                .map(|h| match kept.iter().position(|k| k == h) {
                    Some(i) => SmoothMap::projection(m, i),
                    None => Ok(SmoothMap::constant(m, value)),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(AlgebraElement::Global { map: SmoothMap::compose_with_arity(map, &inners, m)?, inputs: kept })
        }
        AlgebraElement::Composite { outer, inputs } => {
            let subs = inputs.iter().map(|i| substitute_generator(i, g, value).map(Arc::new)).collect::<Result<Vec<_>>>()?;
            compose_elements(outer, &subs)
        }
        other => Err(Error::Invalid(format!("cannot split a {} element", kind_of(other)))),
    }
}

fn kind_of(e: &AlgebraElement) -> &'static str {
    match e {
        AlgebraElement::Global { .. } => "global",
        AlgebraElement::Local { .. } => "local",
        AlgebraElement::Composite { .. } => "composite",
        AlgebraElement::Pair { .. } => "pair",
    }
}

/// Result of trying to prolong elements to a candidate point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Prolongation {
    Prolongable { values: Vec<(String, f64)> },
    Obstructed { witness: String, probe: Vec<Point>, values: Vec<f64> },
}

fn distance(a: &Point, b: &Point) -> Result<f64> {
    match (a, b) {
        (Point::FiniteVec(x), Point::FiniteVec(y)) if x.len() == y.len() => {
            Ok(x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
        }
        (Point::Seq(x), Point::Seq(y)) => Ok(x.sup_distance(y)),
        (Point::Tagged { side: s, inner: x }, Point::Tagged { side: t, inner: y }) if s == t => distance(x, y),
        _ => Err(Error::VariantMismatch(format!("distance between {a} and {b}"))),
    }
}

/// Checks whether each witness extends continuously to `candidate`.
///
/// Inside the carrier the prolongation is the element itself. Outside, each
/// witness is evaluated along each probe: divergence or disagreeing limits
/// obstruct, otherwise the averaged tail values are reported as the limits.
pub fn tilde_membership(
    space: &DifferentialSpace,
    candidate: &Point,
    witnesses: &[&str],
    probes: &[Vec<Point>],
) -> Result<Prolongation> {
    if witnesses.is_empty() {
        return Err(Error::EmptyWitnesses);
    }
    let candidate = space.carrier().coerce(candidate.clone());
    if space.carrier().contains(&candidate)? {
        let values = witnesses
            .iter()
            .map(|w| Ok((w.to_string(), space.eval_named(w, &candidate)?)))
            .collect::<Result<Vec<_>>>()?;
        return Ok(Prolongation::Prolongable { values });
    }
    if probes.is_empty() {
        return Err(Error::ProbeNotConverging("no probes given".into()));
    }
    let probes: Vec<Vec<Point>> =
        probes.iter().map(|pr| pr.iter().map(|q| space.carrier().coerce(q.clone())).collect()).collect();
    for probe in &probes {
        check_converges(probe, &candidate)?;
        for q in probe {
            if !space.carrier().contains(q)? {
                return Err(Error::ProbeNotConverging(format!("probe point {q} is outside the carrier")));
            }
        }
    }
    let mut limits = Vec::with_capacity(witnesses.len());
    for w in witnesses {
        let element = space.resolve(w)?;
        let mut first_limit: Option<f64> = None;
        for probe in &probes {
            let values = probe.iter().map(|q| space.eval_element(&element, q)).collect::<Result<Vec<_>>>()?;
            if divergence_fires(&values) {
                return Ok(Prolongation::Obstructed { witness: w.to_string(), probe: probe.clone(), values });
            }
            let tail = &values[values.len().saturating_sub(LIMIT_WINDOW)..];
            let limit = tail.iter().sum::<f64>() / tail.len() as f64;
            match first_limit {
                None => first_limit = Some(limit),
                Some(l) if (l - limit).abs() > LIMIT_TOL => {
                    return Ok(Prolongation::Obstructed { witness: w.to_string(), probe: probe.clone(), values });
                }
                Some(_) => {}
            }
        }
        limits.push((w.to_string(), first_limit.expect("at least one probe")));
    }
    Ok(Prolongation::Prolongable { values: limits })
}

fn check_converges(probe: &[Point], candidate: &Point) -> Result<()> {
    let ds = probe.iter().map(|q| distance(q, candidate)).collect::<Result<Vec<_>>>()?;
    let last = *ds.last().ok_or_else(|| Error::ProbeNotConverging("empty probe".into()))?;
    if ds.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::ProbeNotConverging("distances to the candidate increase".into()));
    }
    if last > PROBE_TOL {
        return Err(Error::ProbeNotConverging(format!("final distance {last} exceeds {PROBE_TOL}")));
    }
    Ok(())
}

/// Side of a tagged point, if any.
pub fn side_of(p: &Point) -> Option<Side> {
    match p {
        Point::Tagged { side, .. } => Some(*side),
        _ => None,
    }
}
