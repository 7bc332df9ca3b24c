//! Homomorphisms `χ: C → ℝ`: evaluations, candidates given by generator
//! values, extension by the composition law, classification, the hat map
//! and the space `(Spec C, Ĉ)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::carrier::{Carrier, Point, SeqPoint, Side};
use crate::error::{Error, Result};
use crate::seqspace;
use crate::smooth_fn::{distance_sq, Guard, SmoothMap};
use crate::structure::{AlgebraElement, Atlas, DifferentialSpace, GenRef, Generator, UNIT_LEFT, UNIT_RIGHT};
use crate::EQ_TOL;

/// Carrier samples searched for fiber points.
pub const FIBER_SAMPLES: usize = 1000;
/// Carrier samples that make up an obstruction probe.
pub const PROBE_POINTS: usize = 20;
/// Samples drawn per batch by the density search.
pub const DENSITY_BATCH: usize = 1000;

/// A candidate `χ` given by its generator values. On projection families,
/// coordinates without an explicit value take `tail`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratorAssignment {
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub tail: f64,
}

impl GeneratorAssignment {
    pub fn new<S: Into<String>>(values: impl IntoIterator<Item = (S, f64)>) -> GeneratorAssignment {
        GeneratorAssignment { values: values.into_iter().map(|(k, v)| (k.into(), v)).collect(), tail: 0.0 }
    }

    pub fn with_tail(mut self, tail: f64) -> GeneratorAssignment {
        self.tail = tail;
        self
    }

    /// The generator values of `ev_p`.
    pub fn from_point(space: &DifferentialSpace, p: &Point) -> Result<GeneratorAssignment> {
        let p = space.carrier().coerce(p.clone());
        let mut values = BTreeMap::new();
        collect_values(space, &p, "", &mut values)?;
        Ok(GeneratorAssignment { values, tail: 0.0 })
    }

    /// Errors unless every name is a generator of `space`.
    pub fn validate(&self, space: &DifferentialSpace) -> Result<()> {
        for name in self.values.keys() {
            space.generator_by_name(name)?;
        }
        Ok(())
    }

    fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied().or_else(|| {
            // restricted generators `x|M` also answer to `x`
            let bare = name.split('|').next()?;
            if bare == name {
                None
            } else {
                self.values.get(bare).copied()
            }
        })
    }
}

fn collect_values(space: &DifferentialSpace, p: &Point, prefix: &str, out: &mut BTreeMap<String, f64>) -> Result<()> {
    for g in space.listed_generators() {
        out.insert(format!("{prefix}{}", space.generator_name(&g)), space.generator_value(&g, p)?);
    }
    if space.generators().projection_family {
        if let Point::Seq(s) = p {
            for &(i, v) in s.entries() {
                out.insert(format!("{prefix}pi({i})"), v);
            }
        }
    }
    if let Some((l, r)) = space.sides() {
        for (side, sub, pre) in [(Side::Left, l, "L."), (Side::Right, r, "R.")] {
            match p {
                Point::Tagged { side: s, inner } if *s == side => {
                    collect_values(sub, inner, &format!("{prefix}{pre}"), out)?;
                }
                _ => {
                    // `(0, g)` and `(f, 0)` vanish off their side
                    let mut zeros = BTreeMap::new();
                    if let Ok(q) = sub.samples(1).map(|v| v.into_iter().next()) {
                        if let Some(q) = q {
                            collect_values(sub, &q, &format!("{prefix}{pre}"), &mut zeros)?;
                        }
                    }
                    for k in zeros.into_keys() {
                        out.insert(k, 0.0);
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Homomorphism {
    Evaluation { point: Point },
    FromAssignment { assignment: GeneratorAssignment },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagnosis {
    NotInCarrier,
    DivergentAlongProbe,
    AlgebraicContradiction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum HomOutcome {
    Evaluation { points: Vec<Point> },
    Obstructed { witness: Option<String>, probe: Vec<Point>, diagnosis: Diagnosis },
}

impl HomOutcome {
    pub fn is_evaluation(&self) -> bool {
        matches!(self, HomOutcome::Evaluation { .. })
    }
}

/// `ev_p`.
pub fn ev(space: &DifferentialSpace, p: &Point) -> Result<Homomorphism> {
    let p = space.carrier().coerce(p.clone());
    if !space.carrier().contains(&p)? {
        return Err(Error::NotInCarrier);
    }
    Ok(Homomorphism::Evaluation { point: p })
}

/// `χ(f)` for the element registered as `name`.
pub fn apply_hom(space: &DifferentialSpace, h: &Homomorphism, name: &str) -> Result<f64> {
    let element = space.resolve(name)?;
    apply_hom_element(space, h, &element, name)
}

/// `χ(f)` for an unregistered element; `label` names it in errors.
pub fn apply_hom_element(space: &DifferentialSpace, h: &Homomorphism, f: &AlgebraElement, label: &str) -> Result<f64> {
    match h {
        Homomorphism::Evaluation { point } => space.eval_element(f, point),
        Homomorphism::FromAssignment { assignment } => extend(space, assignment, f, label, ""),
    }
}

/// The composition law `χ(ω∘(f₁,…,fₙ)) = ω(χ(f₁),…,χ(fₙ))` down to generators.
fn extend(space: &DifferentialSpace, a: &GeneratorAssignment, f: &AlgebraElement, label: &str, prefix: &str) -> Result<f64> {
    match f {
        AlgebraElement::Global { map, inputs } => {
            let args = inputs.iter().map(|g| generator_under(space, a, g, prefix)).collect::<Result<Vec<_>>>()?;
            map.eval(&args)
        }
        AlgebraElement::Composite { outer, inputs } => {
            let args = inputs.iter().map(|e| extend(space, a, e, label, prefix)).collect::<Result<Vec<_>>>()?;
            outer.eval(&args)
        }
        AlgebraElement::Local { .. } => Err(Error::LocalUnderAssignment(label.to_string())),
        AlgebraElement::Pair { left, right } => {
            let (l, r) = space.sides().ok_or(Error::NotUnion)?;
            let unit_l = named_value(a, &format!("{prefix}{UNIT_LEFT}"))?;
            let unit_r = named_value(a, &format!("{prefix}{UNIT_RIGHT}"))?;
            // χ((f,g)) = χ((f,0))·χ((1,0)) + χ((0,g))·χ((0,1)), with χ((f,0)) read off the L. generators
            // a side whose idempotent is sent to 0 contributes 0 and needs no values
            let fl = if unit_l == 0.0 { 0.0 } else { extend(l, a, left, label, &format!("{prefix}L."))? };
            let gr = if unit_r == 0.0 { 0.0 } else { extend(r, a, right, label, &format!("{prefix}R."))? };
            Ok(fl * unit_l + gr * unit_r)
        }
    }
}

fn named_value(a: &GeneratorAssignment, name: &str) -> Result<f64> {
    a.get(name).ok_or_else(|| Error::Unassigned(name.to_string()))
}

/// `χ(g)` for a generator: the assigned value, the tail for unlisted
/// coordinates of a projection family, or the composition law for composite
/// generators whose coordinates are assigned.
fn generator_under(space: &DifferentialSpace, a: &GeneratorAssignment, g: &GenRef, prefix: &str) -> Result<f64> {
    let name = space.generator_name(g);
    if let Some(v) = a.get(&format!("{prefix}{name}")) {
        return Ok(v);
    }
    match g {
        GenRef::Coordinate(i) => coordinate_under(space, a, *i, prefix),
        GenRef::Named(_) => match space.generator(g) {
            Some(Generator::Projection { index }) if space.generators().projection_family => {
                coordinate_under(space, a, *index, prefix)
            }
            Some(Generator::Composite { map, coords }) => {
                let args = coords.iter().map(|&c| coordinate_under(space, a, c, prefix)).collect::<Result<Vec<_>>>()?;
                map.eval(&args)
            }
            _ => Err(Error::Unassigned(format!("{prefix}{name}"))),
        },
        GenRef::Side(side, inner) => {
            let sub = space.side(*side)?;
            let pre = match side {
                Side::Left => "L.",
                Side::Right => "R.",
            };
            generator_under(sub, a, inner, &format!("{prefix}{pre}"))
        }
    }
}

fn coordinate_under(space: &DifferentialSpace, a: &GeneratorAssignment, i: usize, prefix: &str) -> Result<f64> {
    if let Some(v) = a.get(&format!("{prefix}pi({i})")) {
        return Ok(v);
    }
    for g in space.listed_generators() {
        if space.projection_index(&g) == Some(i) {
            if let Some(v) = a.get(&format!("{prefix}{}", space.generator_name(&g))) {
                return Ok(v);
            }
        }
    }
    if space.generators().projection_family {
        Ok(a.tail)
    } else {
        Err(Error::MissingProjection(i))
    }
}

fn dimension(carrier: &Carrier) -> Option<usize> {
    match carrier {
        Carrier::FiniteDim(fd) => Some(fd.dim),
        Carrier::FiniteSet(pts) => match pts.first() {
            Some(Point::FiniteVec(v)) if pts.iter().all(|p| p.as_vec().is_some_and(|w| w.len() == v.len())) => {
                Some(v.len())
            }
            _ => None,
        },
        _ => None,
    }
}

/// The point `p` with `p_i = χ(π_i)`.
pub fn recover_point(space: &DifferentialSpace, h: &Homomorphism) -> Result<Point> {
    let a = match h {
        Homomorphism::Evaluation { point } => return Ok(point.clone()),
        Homomorphism::FromAssignment { assignment } => assignment,
    };
    match space.carrier() {
        Carrier::SeqSpace(_) => Ok(Point::Seq(sequence_candidate(space, a)?)),
        c => {
            let n = dimension(c).ok_or_else(|| Error::Invalid(format!("no coordinates on a {} carrier", c.kind())))?;
            let coords = (1..=n).map(|i| coordinate_under(space, a, i, "")).collect::<Result<Vec<_>>>()?;
            Ok(Point::FiniteVec(coords))
        }
    }
}

fn sequence_candidate(space: &DifferentialSpace, a: &GeneratorAssignment) -> Result<SeqPoint> {
    let mut entries = BTreeMap::new();
    for (name, &v) in &a.values {
        if let Ok(g) = space.generator_by_name(name) {
            if let Some(i) = space.projection_index(&g) {
                entries.insert(i, v);
            }
        }
    }
    SeqPoint::new(entries.into_iter().filter(|(_, v)| *v != 0.0).collect())
}

/// Decides whether `a` is an evaluation, and if not, why.
pub fn classify(space: &DifferentialSpace, a: &GeneratorAssignment) -> Result<HomOutcome> {
    a.validate(space)?;
    if space.sides().is_some() {
        return union_classify(space, a).map(|(_, outcome)| outcome);
    }
    if matches!(space.carrier(), Carrier::SeqSpace(_)) && a.tail != 0.0 {
        // a nonzero tail has infinite support
        return Ok(HomOutcome::Obstructed { witness: None, probe: Vec::new(), diagnosis: Diagnosis::NotInCarrier });
    }
    let h = Homomorphism::FromAssignment { assignment: a.clone() };
    let p = match recover_point(space, &h) {
        Ok(p) => p,
        Err(Error::MissingProjection(_)) | Err(Error::Invalid(_)) => return fiber_search(space, a),
        Err(e) => return Err(e),
    };
    if let Some(name) = contradicted_generator(space, a, &p)? {
        return Ok(HomOutcome::Obstructed {
            witness: Some(name),
            probe: vec![p],
            diagnosis: Diagnosis::AlgebraicContradiction,
        });
    }
    if space.carrier().contains(&p)? {
        return Ok(HomOutcome::Evaluation { points: vec![p] });
    }
    obstruct(space, &p)
}

/// An assigned non-projection generator whose value differs from its value at `p`.
fn contradicted_generator(space: &DifferentialSpace, a: &GeneratorAssignment, p: &Point) -> Result<Option<String>> {
    for g in space.listed_generators() {
        if space.projection_index(&g).is_some() {
            continue;
        }
        let name = space.generator_name(&g);
        if let Some(v) = a.get(&name) {
            match space.generator_value(&g, p) {
                Ok(forced) if (forced - v).abs() > EQ_TOL => return Ok(Some(name)),
                Ok(_) => {}
                // undefined at p: p is outside and the obstruction step decides
                Err(Error::GuardViolation { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(None)
}

fn obstruct(space: &DifferentialSpace, p: &Point) -> Result<HomOutcome> {
    match (space.carrier(), p) {
        (Carrier::SeqSpace(_), Point::Seq(q)) => {
            let witness = cutoff_witness_name(space, q);
            let probe = seqspace::default_probe(q)?;
            let values = probe
                .iter()
                .map(|z| Ok(seqspace::xi_centered(q, z.as_seq().expect("sequence probe"))?.value))
                .collect::<Result<Vec<_>>>()?;
            if !seqspace::divergence_fires(&values) {
                return Err(Error::ProbeNotConverging(format!("cutoff sum at {q} stayed below the threshold")));
            }
            Ok(HomOutcome::Obstructed { witness: Some(witness), probe, diagnosis: Diagnosis::DivergentAlongProbe })
        }
        (_, Point::FiniteVec(v)) => Ok(HomOutcome::Obstructed {
            witness: Some(inverse_distance_name(space, v)?),
            probe: nearest_samples(space, p, PROBE_POINTS)?,
            diagnosis: Diagnosis::AlgebraicContradiction,
        }),
        _ => Ok(HomOutcome::Obstructed { witness: None, probe: Vec::new(), diagnosis: Diagnosis::NotInCarrier }),
    }
}

fn cutoff_witness_name(space: &DifferentialSpace, q: &SeqPoint) -> String {
    for (name, e) in space.elements() {
        if let AlgebraElement::Local { atlas: Atlas::CutoffSum { center } } = &**e {
            if center == q {
                return name.to_string();
            }
        }
    }
    if q.is_zero() {
        "xi".to_string()
    } else {
        format!("xi[{q}]")
    }
}

/// `1/ω` with `ω = Σ (π_i − p_i)²`: an element of `C` on any carrier missing `p`.
pub fn inverse_distance(space: &DifferentialSpace, p: &[f64]) -> Result<AlgebraElement> {
    let inputs = (1..=p.len()).map(|i| projection_ref(space, i)).collect::<Result<Vec<_>>>()?;
    let omega = distance_sq(p);
    let map = SmoothMap::new(p.len(), omega.body().clone().recip(Guard::Positive))?;
    Ok(AlgebraElement::Global { map, inputs })
}

/// The name under which the witness `1/ω` is reported: `1/<name>` when a
/// registered element agrees with `ω` on samples, otherwise `1/dist2(p)`.
pub fn inverse_distance_name(space: &DifferentialSpace, p: &[f64]) -> Result<String> {
    let omega = distance_sq(p);
    let samples = space.samples(16)?;
    'elements: for (name, e) in space.elements() {
        if !e.is_global() {
            continue;
        }
        for q in &samples {
            let want = omega.eval(q.as_vec().unwrap_or(&[]));
            match (space.eval_element(e, q), want) {
                (Ok(v), Ok(w)) if (v - w).abs() <= EQ_TOL * w.abs().max(1.0) => {}
                _ => continue 'elements,
            }
        }
        return Ok(format!("1/{name}"));
    }
    Ok(format!("1/dist2({})", Point::FiniteVec(p.to_vec())))
}

fn projection_ref(space: &DifferentialSpace, i: usize) -> Result<GenRef> {
    space
        .listed_generators()
        .into_iter()
        .find(|g| space.projection_index(g) == Some(i))
        .ok_or(Error::MissingProjection(i))
}

fn point_distance(a: &Point, b: &Point) -> f64 {
    match (a, b) {
        (Point::FiniteVec(x), Point::FiniteVec(y)) => {
            x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
        }
        (Point::Seq(x), Point::Seq(y)) => x.sup_distance(y),
        _ => f64::INFINITY,
    }
}

/// Up to `n` carrier samples closest to `p`, nearest first.
pub fn nearest_samples(space: &DifferentialSpace, p: &Point, n: usize) -> Result<Vec<Point>> {
    let mut pts = space.samples(FIBER_SAMPLES)?;
    pts.extend(space.registered_samples().iter().cloned());
    pts.sort_by(|a, b| point_distance(a, p).total_cmp(&point_distance(b, p)));
    pts.dedup();
    pts.truncate(n);
    Ok(pts)
}

/// All sampled points whose assigned generator values match `a`.
fn fiber_search(space: &DifferentialSpace, a: &GeneratorAssignment) -> Result<HomOutcome> {
    let mut pts = match space.carrier() {
        Carrier::FiniteSet(all) => all.clone(),
        _ => space.samples(FIBER_SAMPLES)?,
    };
    pts.extend(space.registered_samples().iter().cloned());
    let gens: Vec<(GenRef, f64)> = a
        .values
        .iter()
        .map(|(n, &v)| Ok((space.generator_by_name(n)?, v)))
        .collect::<Result<_>>()?;
    let mut fiber: Vec<Point> = Vec::new();
    for q in pts {
        let matches = gens
            .iter()
            .all(|(g, v)| matches!(space.generator_value(g, &q), Ok(w) if (w - v).abs() <= EQ_TOL));
        if matches && !fiber.contains(&q) {
            fiber.push(q);
        }
    }
    if fiber.is_empty() {
        return Err(Error::FiberNotFound);
    }
    Ok(HomOutcome::Evaluation { points: fiber })
}

/// Splits a candidate on a union by its values on `(1,0)` and `(0,1)`, then
/// classifies the projected assignment on the selected side.
pub fn union_classify(space: &DifferentialSpace, a: &GeneratorAssignment) -> Result<(Side, HomOutcome)> {
    space.sides().ok_or(Error::NotUnion)?;
    let left = named_value(a, UNIT_LEFT)?;
    let right = named_value(a, UNIT_RIGHT)?;
    let is_bit = |v: f64| v == 0.0 || v == 1.0;
    if !(is_bit(left) && is_bit(right) && left + right == 1.0) {
        return Err(Error::IdempotentViolation { left, right });
    }
    let side = if left == 1.0 { Side::Left } else { Side::Right };
    let (own, other) = match side {
        Side::Left => ("L.", "R."),
        Side::Right => ("R.", "L."),
    };
    let mut projected = BTreeMap::new();
    for (name, &v) in &a.values {
        if let Some(rest) = name.strip_prefix(own) {
            projected.insert(rest.to_string(), v);
        } else if name.starts_with(other) && v != 0.0 {
            // χ((0,g)) = χ((0,g))·χ((0,1)) = 0
            let outcome = HomOutcome::Obstructed {
                witness: Some(name.clone()),
                probe: Vec::new(),
                diagnosis: Diagnosis::AlgebraicContradiction,
            };
            return Ok((side, outcome));
        }
    }
    let sub = space.side(side)?;
    let outcome = classify(sub, &GeneratorAssignment { values: projected, tail: a.tail })?;
    let outcome = match outcome {
        HomOutcome::Evaluation { points } => {
            HomOutcome::Evaluation { points: points.into_iter().map(|p| Point::tagged(side, p)).collect() }
        }
        HomOutcome::Obstructed { witness, probe, diagnosis } => HomOutcome::Obstructed {
            witness: witness.map(|w| format!("{own}{w}")),
            probe: probe.into_iter().map(|p| Point::tagged(side, p)).collect(),
            diagnosis,
        },
    };
    Ok((side, outcome))
}

/// `f̂`, evaluable on homomorphisms: `f̂(χ) = χ(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hat {
    name: String,
    element: Arc<AlgebraElement>,
}

impl Hat {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, space: &DifferentialSpace, h: &Homomorphism) -> Result<f64> {
        apply_hom_element(space, h, &self.element, &self.name)
    }
}

/// `τ(f) = f̂`.
pub fn hat(space: &DifferentialSpace, name: &str) -> Result<Hat> {
    Ok(Hat { name: name.to_string(), element: space.resolve(name)? })
}

/// `ι(p) = (g(p))_g` over the listed generators.
pub fn iota(space: &DifferentialSpace, p: &Point) -> Result<Vec<f64>> {
    space.listed_generators().iter().map(|g| space.generator_value(g, p)).collect()
}

/// `κ(χ) = (χ(g))_g` over the listed generators.
pub fn kappa(space: &DifferentialSpace, h: &Homomorphism) -> Result<Vec<f64>> {
    space
        .listed_generators()
        .iter()
        .map(|g| match h {
            Homomorphism::Evaluation { point } => space.generator_value(g, point),
            Homomorphism::FromAssignment { assignment } => generator_under(space, assignment, g, ""),
        })
        .collect()
}

/// `(Spec C, Ĉ)` over the accepted assignments found among `samples` carrier
/// samples (every point, for a finite carrier) and `candidates`. Points are generator-embedding images; the
/// generators are `ĝ` for the listed generators `g`, and global elements are
/// transported as `ω∘(ĝ…)`. On projection families the points are the
/// sequences themselves and the generators the projections.
pub fn spec_space(space: &DifferentialSpace, samples: usize, candidates: &[GeneratorAssignment]) -> Result<DifferentialSpace> {
    if space.sides().is_some() {
        return Err(Error::Invalid("take the spectrum of each side of a union".into()));
    }
    let mut accepted: Vec<Point> = Vec::new();
    let mut push = |p: Point| {
        if !accepted.contains(&p) {
            accepted.push(p);
        }
    };
    let window = match space.carrier() {
        Carrier::FiniteSet(all) => all.clone(),
        _ => space.samples(samples)?,
    };
    for p in window {
        push(p);
    }
    for a in candidates {
        if let Ok(HomOutcome::Evaluation { points }) = classify(space, a) {
            for p in points {
                push(p);
            }
        }
    }
    let family = space.generators().projection_family;
    let images = accepted
        .iter()
        .map(|p| if family { Ok(p.clone()) } else { iota(space, p).map(Point::FiniteVec) })
        .collect::<Result<Vec<_>>>()?;
    let mut images_dedup: Vec<Point> = Vec::new();
    for p in images {
        if !images_dedup.contains(&p) {
            images_dedup.push(p);
        }
    }
    let mut spec = DifferentialSpace::new(format!("Spec {}", space.name()), Carrier::FiniteSet(images_dedup));
    spec.set_seed(space.seed());
    if family {
        spec.generators_mut().projection_family = true;
    }
    for (i, g) in space.listed_generators().iter().enumerate() {
        let name = format!("hat({})", space.generator_name(g));
        if family {
            let generator = space.generator(g).cloned().expect("listed generator");
            spec.add_generator(&name, generator)?;
        } else {
            spec.add_generator(&name, Generator::Projection { index: i + 1 })?;
        }
    }
    for (name, e) in space.elements() {
        if spec.has_element(name) || spec.has_element(&format!("hat({name})")) {
            continue;
        }
        if let AlgebraElement::Global { map, inputs } = &**e {
            let transported = AlgebraElement::Global { map: map.clone(), inputs: inputs.clone() };
            spec.register(&format!("hat({name})"), transported)?;
        }
    }
    Ok(spec)
}

/// A carrier point where every element of `family` is within `tol` of its
/// value under `a`. Evaluations return their own point; otherwise carrier
/// samples are searched in batches up to `budget`.
pub fn density_witness(
    space: &DifferentialSpace,
    a: &GeneratorAssignment,
    tol: f64,
    family: &[&str],
    budget: usize,
) -> Result<Point> {
    match classify(space, a)? {
        HomOutcome::Evaluation { points } => Ok(points.into_iter().next().expect("nonempty evaluation")),
        HomOutcome::Obstructed { .. } => nearest_sample(space, a, tol, family, budget),
    }
}

/// The sample search behind [`density_witness`], without the evaluation shortcut.
pub fn nearest_sample(
    space: &DifferentialSpace,
    a: &GeneratorAssignment,
    tol: f64,
    family: &[&str],
    budget: usize,
) -> Result<Point> {
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let h = Homomorphism::FromAssignment { assignment: a.clone() };
    let targets = family.iter().map(|f| apply_hom(space, &h, f)).collect::<Result<Vec<_>>>()?;
    let elements = family.iter().map(|f| space.resolve(f)).collect::<Result<Vec<_>>>()?;
    let mut best = f64::INFINITY;
    let mut seen = 0;
    while seen < budget {
        let n = DENSITY_BATCH.min(budget - seen);
        for i in 0..n {
            let p = space.carrier().sample_one(space.seed(), seen + i)?;
            let mut gap: f64 = 0.0;
            for (e, t) in elements.iter().zip(&targets) {
                gap = gap.max((space.eval_element(e, &p)? - t).abs());
            }
            if gap <= tol {
                return Ok(p);
            }
            best = best.min(gap);
        }
        seen += n;
    }
    Err(Error::DensityBudget { samples: budget, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth_fn::Expr;

    fn plane_minus_origin() -> DifferentialSpace {
        let c = Carrier::euclidean(2).minus(vec![Point::FiniteVec(vec![0.0, 0.0])]).unwrap();
        DifferentialSpace::with_coordinates("M", c, &["x", "y"]).unwrap()
    }

    fn assign(pairs: &[(&str, f64)]) -> GeneratorAssignment {
        GeneratorAssignment::new(pairs.iter().map(|(k, v)| (k.to_string(), *v)))
    }

    #[test]
    fn ev_on_polynomial() {
        let mut s = DifferentialSpace::with_coordinates("R2", Carrier::euclidean(2), &["x", "y"]).unwrap();
        let f = SmoothMap::new(2, Expr::slot(0).powi(2) + Expr::slot(1)).unwrap();
        s.superpose("f", &f, &["x", "y"]).unwrap();
        let h = ev(&s, &Point::FiniteVec(vec![2.0, 3.0])).unwrap();
        assert_eq!(apply_hom(&s, &h, "f").unwrap(), 7.0);
    }

    #[test]
    fn assignment_extends_by_composition() {
        let mut s = DifferentialSpace::with_coordinates("R2", Carrier::euclidean(2), &["x", "y"]).unwrap();
        let f = SmoothMap::new(2, Expr::slot(0).exp() * Expr::slot(1)).unwrap();
        s.superpose("f", &f, &["x", "y"]).unwrap();
        let h = Homomorphism::FromAssignment { assignment: assign(&[("x", 2.0), ("y", 3.0)]) };
        let v = apply_hom(&s, &h, "f").unwrap();
        assert!((v - 22.1671682968).abs() < 1e-9);
    }

    #[test]
    fn classify_plane_minus_origin() {
        let s = plane_minus_origin();
        match classify(&s, &assign(&[("x", 0.0), ("y", 0.0)])).unwrap() {
            HomOutcome::Obstructed { witness, diagnosis, probe } => {
                assert_eq!(diagnosis, Diagnosis::AlgebraicContradiction);
                assert!(witness.unwrap().starts_with("1/"));
                assert_eq!(probe.len(), PROBE_POINTS);
            }
            other => panic!("unexpected {other:?}"),
        }
        let out = classify(&s, &assign(&[("x", 1.0), ("y", 0.0)])).unwrap();
        assert_eq!(out, HomOutcome::Evaluation { points: vec![Point::FiniteVec(vec![1.0, 0.0])] });
    }

    #[test]
    fn registered_distance_names_the_witness() {
        let mut s = plane_minus_origin();
        s.superpose("w", &distance_sq(&[0.0, 0.0]), &["x", "y"]).unwrap();
        match classify(&s, &assign(&[("x", 0.0), ("y", 0.0)])).unwrap() {
            HomOutcome::Obstructed { witness, .. } => assert_eq!(witness.as_deref(), Some("1/w")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverse_distance_is_the_reciprocal() {
        let s = plane_minus_origin();
        let inv = inverse_distance(&s, &[0.0, 0.0]).unwrap();
        let q = Point::FiniteVec(vec![1.0, 1.0]);
        assert_eq!(s.eval_element(&inv, &q).unwrap(), 0.5);
    }

    #[test]
    fn local_elements_need_classification() {
        let mut m = DifferentialSpace::new("M", Carrier::sequences_minus_origin());
        seqspace::register_xi(&mut m, "xi", &SeqPoint::zero()).unwrap();
        let h = Homomorphism::FromAssignment { assignment: assign(&[("pi(1)", 1.0)]) };
        assert_eq!(apply_hom(&m, &h, "xi").unwrap_err(), Error::LocalUnderAssignment("xi".into()));
    }

    #[test]
    fn sequence_space_origin_is_obstructed() {
        let mut m = DifferentialSpace::new("M", Carrier::sequences_minus_origin());
        seqspace::register_xi(&mut m, "xi", &SeqPoint::zero()).unwrap();
        match classify(&m, &GeneratorAssignment::default()).unwrap() {
            HomOutcome::Obstructed { witness, diagnosis, probe } => {
                assert_eq!(witness.as_deref(), Some("xi"));
                assert_eq!(diagnosis, Diagnosis::DivergentAlongProbe);
                assert_eq!(probe.len(), seqspace::DIVERGENCE_MIN_POINTS);
            }
            other => panic!("unexpected {other:?}"),
        }
        let out = classify(&m, &assign(&[("pi(3)", 0.5)])).unwrap();
        assert_eq!(out, HomOutcome::Evaluation { points: vec![Point::Seq(SeqPoint::single(3, 0.5).unwrap())] });
        let tail = classify(&m, &GeneratorAssignment::default().with_tail(1.0)).unwrap();
        assert!(matches!(tail, HomOutcome::Obstructed { diagnosis: Diagnosis::NotInCarrier, .. }));
    }

    #[test]
    fn tilde_examples() {
        let p = SeqPoint::from_prefix(&[1.0, -0.5]).unwrap();
        let t = seqspace::tilde_structure(&p).unwrap();
        let mut a = assign(&[("pi(1)", 1.0), ("pi(2)", -0.5), (seqspace::THETA, 1.0)]);
        assert_eq!(classify(&t, &a).unwrap(), HomOutcome::Evaluation { points: vec![Point::Seq(p.clone())] });
        a.values.insert(seqspace::THETA.into(), 0.0);
        match classify(&t, &a).unwrap() {
            HomOutcome::Obstructed { witness, diagnosis, .. } => {
                assert_eq!(witness.as_deref(), Some(seqspace::THETA));
                assert_eq!(diagnosis, Diagnosis::AlgebraicContradiction);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_separating_generator_returns_fiber() {
        let mut s = DifferentialSpace::new("R", Carrier::euclidean(1));
        let sq = SmoothMap::new(1, Expr::slot(0).powi(2)).unwrap();
        s.add_generator("sq", Generator::Composite { map: sq, coords: vec![1] }).unwrap();
        s.add_samples(vec![Point::FiniteVec(vec![1.5]), Point::FiniteVec(vec![-1.5])]).unwrap();
        match classify(&s, &assign(&[("sq", 2.25)])).unwrap() {
            HomOutcome::Evaluation { points } => {
                assert!(points.contains(&Point::FiniteVec(vec![1.5])));
                assert!(points.contains(&Point::FiniteVec(vec![-1.5])));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(classify(&s, &assign(&[("sq", -1.0)])).unwrap_err(), Error::FiberNotFound);
    }

    #[test]
    fn recover_point_examples() {
        let s = plane_minus_origin();
        let h = Homomorphism::FromAssignment { assignment: assign(&[("x", 0.5), ("y", -1.0)]) };
        assert_eq!(recover_point(&s, &h).unwrap(), Point::FiniteVec(vec![0.5, -1.0]));
        let h = Homomorphism::FromAssignment { assignment: assign(&[("x", 0.5)]) };
        assert_eq!(recover_point(&s, &h).unwrap_err(), Error::MissingProjection(2));
    }

    fn circle_interval() -> DifferentialSpace {
        let circle = DifferentialSpace::with_coordinates("S", Carrier::unit_circle(), &["x", "y"]).unwrap();
        let interval = DifferentialSpace::with_coordinates("I", Carrier::open_interval(0.0, 1.0).unwrap(), &["t"]).unwrap();
        DifferentialSpace::union_space("U", circle, interval).unwrap()
    }

    #[test]
    fn union_routes_by_idempotents() {
        let u = circle_interval();
        let q = Point::tagged(Side::Right, Point::FiniteVec(vec![0.25]));
        let a = GeneratorAssignment::from_point(&u, &q).unwrap();
        assert_eq!(a.values[UNIT_RIGHT], 1.0);
        assert_eq!(a.values["L.x"], 0.0);
        let (side, out) = union_classify(&u, &a).unwrap();
        assert_eq!(side, Side::Right);
        assert_eq!(out, HomOutcome::Evaluation { points: vec![q] });
        let bad = assign(&[(UNIT_LEFT, 0.5), (UNIT_RIGHT, 0.5)]);
        assert!(matches!(union_classify(&u, &bad), Err(Error::IdempotentViolation { .. })));
    }

    #[test]
    fn pair_under_assignment_matches_evaluation() {
        let mut u = circle_interval();
        u.register_pair("f", "x", "t").unwrap();
        for q in u.samples(20).unwrap() {
            let a = GeneratorAssignment::from_point(&u, &q).unwrap();
            let h = Homomorphism::FromAssignment { assignment: a };
            assert_eq!(apply_hom(&u, &h, "f").unwrap(), u.eval_named("f", &q).unwrap());
            assert_eq!(apply_hom(&u, &h, "L.x").unwrap(), u.eval_named("L.x", &q).unwrap());
        }
    }

    #[test]
    fn hat_and_density() {
        let s = DifferentialSpace::with_coordinates("S", Carrier::unit_circle(), &["x", "y"]).unwrap();
        let q = s.samples(1).unwrap().remove(0);
        let x = hat(&s, "x").unwrap();
        assert_eq!(x.eval(&s, &ev(&s, &q).unwrap()).unwrap(), q.coord(1).unwrap());
        let a = GeneratorAssignment::from_point(&s, &q).unwrap();
        assert_eq!(density_witness(&s, &a, 1e-3, &["x", "y"], 1000).unwrap(), q);
        let p = nearest_sample(&s, &a, 1e-3, &["x", "y"], 200_000).unwrap();
        assert!((p.coord(1).unwrap() - q.coord(1).unwrap()).abs() <= 1e-3);
        let off = assign(&[("x", 0.123456789), ("y", 0.0)]);
        assert!(matches!(nearest_sample(&s, &off, 1e-12, &["x"], 10), Err(Error::DensityBudget { .. })));
    }

    #[test]
    fn spec_space_of_circle() {
        let s = DifferentialSpace::with_coordinates("S", Carrier::unit_circle(), &["x", "y"]).unwrap();
        let spec = spec_space(&s, 50, &[]).unwrap();
        match spec.carrier() {
            Carrier::FiniteSet(pts) => assert_eq!(pts.len(), 50),
            other => panic!("unexpected {other:?}"),
        }
        for p in s.samples(50).unwrap() {
            let image = Point::FiniteVec(iota(&s, &p).unwrap());
            assert!(spec.carrier().contains(&image).unwrap());
            let a = GeneratorAssignment::from_point(&spec, &image).unwrap();
            assert_eq!(classify(&spec, &a).unwrap(), HomOutcome::Evaluation { points: vec![image] });
        }
    }
}
