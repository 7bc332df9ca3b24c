//! Underlying sets of differential spaces, their points and samplers.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smooth_fn::{distance_sq, Expr, SmoothMap};
use crate::EQ_TOL;

/// Rejection attempts allowed per sample before giving up.
pub const SAMPLE_ATTEMPTS: usize = 10_000;

/// A finitely supported real sequence in canonical form: 1-based indices
/// strictly increasing, every listed value nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, f64)>", into = "Vec<(usize, f64)>")]
pub struct SeqPoint {
    entries: Vec<(usize, f64)>,
}

impl SeqPoint {
    pub fn zero() -> SeqPoint {
        SeqPoint { entries: Vec::new() }
    }

    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<SeqPoint> {
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidPoint(format!("duplicate sequence index {}", w[0].0)));
            }
        }
        if let Some((i, v)) = entries.iter().find(|(i, v)| *i == 0 || !v.is_finite()) {
            return Err(Error::InvalidPoint(format!("bad sequence entry ({i}, {v})")));
        }
        entries.retain(|(_, v)| *v != 0.0);
        Ok(SeqPoint { entries })
    }

    /// `(x₁, …, xₙ, 0, 0, …)`.
    pub fn from_prefix(prefix: &[f64]) -> Result<SeqPoint> {
        SeqPoint::new(prefix.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect())
    }

    pub fn single(index: usize, value: f64) -> Result<SeqPoint> {
        SeqPoint::new(vec![(index, value)])
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// The 1-based coordinate `i`; zero off the support.
    pub fn coord(&self, i: usize) -> f64 {
        match self.entries.binary_search_by_key(&i, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn max_index(&self) -> usize {
        self.entries.last().map(|e| e.0).unwrap_or(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.1.abs()).fold(0.0, f64::max)
    }

    /// Coordinatewise `self − other`.
    pub fn sub(&self, other: &SeqPoint) -> SeqPoint {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(i, x)), Some(&&(j, y))) => {
                    if i == j {
                        out.push((i, x - y));
                        a.next();
                        b.next();
                    } else if i < j {
                        out.push((i, x));
                        a.next();
                    } else {
                        out.push((j, -y));
                        b.next();
                    }
                }
                (Some(&&(i, x)), None) => {
                    out.push((i, x));
                    a.next();
                }
                (None, Some(&&(j, y))) => {
                    out.push((j, -y));
                    b.next();
                }
                (None, None) => break,
            }
        }
        out.retain(|e| e.1 != 0.0);
        SeqPoint { entries: out }
    }

    pub fn add(&self, other: &SeqPoint) -> SeqPoint {
        let neg = SeqPoint { entries: other.entries.iter().map(|&(i, v)| (i, -v)).collect() };
        self.sub(&neg)
    }

    /// Supremum distance to `other`.
    pub fn sup_distance(&self, other: &SeqPoint) -> f64 {
        self.sub(other).max_abs()
    }
}

impl TryFrom<Vec<(usize, f64)>> for SeqPoint {
    type Error = Error;
    fn try_from(v: Vec<(usize, f64)>) -> Result<SeqPoint> {
        SeqPoint::new(v)
    }
}

impl From<SeqPoint> for Vec<(usize, f64)> {
    fn from(p: SeqPoint) -> Self {
        p.entries
    }
}

impl fmt::Display for SeqPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("seq{")?;
        for (k, (i, v)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{i}: {v:?}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    FiniteVec(Vec<f64>),
    Seq(SeqPoint),
    Tagged { side: Side, inner: Box<Point> },
}

impl Point {
    pub fn tagged(side: Side, inner: Point) -> Point {
        Point::Tagged { side, inner: Box::new(inner) }
    }

    pub fn as_vec(&self) -> Option<&[f64]> {
        match self {
            Point::FiniteVec(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_seq(&self) -> Option<&SeqPoint> {
        match self {
            Point::Seq(s) => Some(s),
            _ => None,
        }
    }

    /// 1-based coordinate of a vector or sequence point.
    pub fn coord(&self, i: usize) -> Option<f64> {
        match self {
            Point::FiniteVec(v) => i.checked_sub(1).and_then(|k| v.get(k).copied()),
            Point::Seq(s) => (i >= 1).then(|| s.coord(i)),
            Point::Tagged { .. } => None,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::FiniteVec(v) => {
                f.write_str("(")?;
                for (k, x) in v.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x:?}")?;
                }
                f.write_str(")")
            }
            Point::Seq(s) => write!(f, "{s}"),
            Point::Tagged { side, inner } => write!(f, "{side}({inner})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `= 0` within [`EQ_TOL`].
    Zero,
    Positive,
    NonZero,
}

/// A condition `g(x) rel 0` with `g` a smooth map of the ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub map: SmoothMap,
    pub relation: Relation,
}

impl Constraint {
    fn holds(&self, x: &[f64]) -> bool {
        match self.map.eval(x) {
            Ok(v) => match self.relation {
                Relation::Zero => v.abs() <= EQ_TOL,
                Relation::Positive => v > 0.0,
                Relation::NonZero => v != 0.0,
            },
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Uniform in `[lo, hi]ⁿ`, then rejection against the constraints.
    Box { lo: f64, hi: f64 },
    /// Uniform on the sphere `|x − center| = radius`.
    Sphere { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDim {
    pub dim: usize,
    pub constraints: Vec<Constraint>,
    pub excluded: Vec<Vec<f64>>,
    pub sampler: Sampler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqSpace {
    pub excluded: Vec<SeqPoint>,
    /// Largest support size of sampled points.
    pub support_bound: usize,
    /// Largest index used by the sampler.
    pub max_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Carrier {
    FiniteDim(FiniteDim),
    SeqSpace(SeqSpace),
    FiniteSet(Vec<Point>),
    Union(Box<Carrier>, Box<Carrier>),
}

impl Carrier {
    /// `ℝⁿ`, sampled in `[−2, 2]ⁿ`.
    pub fn euclidean(dim: usize) -> Carrier {
        Carrier::FiniteDim(FiniteDim {
            dim,
            constraints: Vec::new(),
            excluded: Vec::new(),
            sampler: Sampler::Box { lo: -2.0, hi: 2.0 },
        })
    }

    /// The unit circle `x² + y² − 1 = 0` with an angle sampler.
    pub fn unit_circle() -> Carrier {
        let map = distance_sq(&[0.0, 0.0]);
        let map = SmoothMap::new(2, map.body().clone() + Expr::constant(-1.0)).expect("arity 2");
        Carrier::FiniteDim(FiniteDim {
            dim: 2,
            constraints: vec![Constraint { map, relation: Relation::Zero }],
            excluded: Vec::new(),
            sampler: Sampler::Sphere { center: vec![0.0, 0.0], radius: 1.0 },
        })
    }

    /// The open interval `(lo, hi) ⊂ ℝ`.
    pub fn open_interval(lo: f64, hi: f64) -> Result<Carrier> {
        if !(lo < hi) {
            return Err(Error::InvalidCarrier(format!("empty interval ({lo}, {hi})")));
        }
        let above = SmoothMap::new(1, Expr::slot(0) + Expr::constant(-lo))?;
        let below = SmoothMap::new(1, Expr::constant(hi) - Expr::slot(0))?;
        Ok(Carrier::FiniteDim(FiniteDim {
            dim: 1,
            constraints: vec![
                Constraint { map: above, relation: Relation::Positive },
                Constraint { map: below, relation: Relation::Positive },
            ],
            excluded: Vec::new(),
            sampler: Sampler::Box { lo, hi },
        }))
    }

    /// `ℝ^ℕ`.
    pub fn sequences() -> Carrier {
        Carrier::SeqSpace(SeqSpace { excluded: Vec::new(), support_bound: 4, max_index: 20 })
    }

    /// `ℝ^ℕ − {0}`.
    pub fn sequences_minus_origin() -> Carrier {
        Carrier::SeqSpace(SeqSpace { excluded: vec![SeqPoint::zero()], support_bound: 4, max_index: 20 })
    }

    pub fn union(left: Carrier, right: Carrier) -> Carrier {
        Carrier::Union(Box::new(left), Box::new(right))
    }

    /// Removes points. Each must already satisfy the carrier's constraints.
    pub fn minus(self, points: Vec<Point>) -> Result<Carrier> {
        match self {
            Carrier::FiniteDim(mut fd) => {
                for p in points {
                    match p {
                        Point::FiniteVec(v) if v.len() == fd.dim => {
                            if !fd.constraints.iter().all(|c| c.holds(&v)) {
                                return Err(Error::InvalidCarrier(format!(
                                    "excluded point {} violates the constraints",
                                    Point::FiniteVec(v)
                                )));
                            }
                            if !fd.excluded.contains(&v) {
                                fd.excluded.push(v);
                            }
                        }
                        other => return Err(Error::VariantMismatch(format!("cannot remove {other} from ℝ^{}", fd.dim))),
                    }
                }
                Ok(Carrier::FiniteDim(fd))
            }
            Carrier::SeqSpace(mut ss) => {
                for p in points {
                    let s = match p {
                        Point::Seq(s) => s,
                        Point::FiniteVec(v) => SeqPoint::from_prefix(&v)?,
                        other => return Err(Error::VariantMismatch(format!("cannot remove {other} from ℝ^ℕ"))),
                    };
                    if !ss.excluded.contains(&s) {
                        ss.excluded.push(s);
                    }
                }
                Ok(Carrier::SeqSpace(ss))
            }
            Carrier::FiniteSet(mut pts) => {
                pts.retain(|q| !points.contains(q));
                Ok(Carrier::FiniteSet(pts))
            }
            Carrier::Union(..) => Err(Error::InvalidCarrier("remove points from a union side instead".into())),
        }
    }

    pub fn with_constraint(self, constraint: Constraint) -> Result<Carrier> {
        match self {
            Carrier::FiniteDim(mut fd) => {
                if constraint.map.arity() != fd.dim {
                    return Err(Error::ArityMismatch { expected: fd.dim, got: constraint.map.arity() });
                }
                fd.constraints.push(constraint);
                fd.excluded.retain(|p| fd.constraints.iter().all(|c| c.holds(p)));
                Ok(Carrier::FiniteDim(fd))
            }
            _ => Err(Error::InvalidCarrier("constraints apply to finite-dimensional carriers".into())),
        }
    }

    pub fn with_sampler(self, sampler: Sampler) -> Result<Carrier> {
        match self {
            Carrier::FiniteDim(mut fd) => {
                if let Sampler::Sphere { center, radius } = &sampler {
                    if center.len() != fd.dim || !(*radius > 0.0) {
                        return Err(Error::InvalidCarrier("sphere sampler does not fit the dimension".into()));
                    }
                }
                if let Sampler::Box { lo, hi } = &sampler {
                    if !(lo < hi) {
                        return Err(Error::InvalidCarrier("empty sampling box".into()));
                    }
                }
                fd.sampler = sampler;
                Ok(Carrier::FiniteDim(fd))
            }
            _ => Err(Error::InvalidCarrier("samplers apply to finite-dimensional carriers".into())),
        }
    }

    pub fn is_sequence_carrier(&self) -> bool {
        match self {
            Carrier::SeqSpace(_) => true,
            Carrier::FiniteSet(pts) => pts.iter().any(|p| matches!(p, Point::Seq(_))),
            _ => false,
        }
    }

    /// Brings a point literal into this carrier's representation: vectors
    /// become sequence prefixes on sequence carriers.
    pub fn coerce(&self, p: Point) -> Point {
        match (self, p) {
            (c, Point::FiniteVec(v)) if c.is_sequence_carrier() => match SeqPoint::from_prefix(&v) {
                Ok(s) => Point::Seq(s),
                Err(_) => Point::FiniteVec(v),
            },
            (Carrier::Union(l, r), Point::Tagged { side, inner }) => {
                let inner = match side {
                    Side::Left => l.coerce(*inner),
                    Side::Right => r.coerce(*inner),
                };
                Point::tagged(side, inner)
            }
            (_, p) => p,
        }
    }

    pub fn contains(&self, p: &Point) -> Result<bool> {
        match (self, p) {
            (Carrier::FiniteDim(fd), Point::FiniteVec(v)) => {
                if v.len() != fd.dim {
                    return Err(Error::VariantMismatch(format!("point of dimension {} in ℝ^{}", v.len(), fd.dim)));
                }
                Ok(fd.constraints.iter().all(|c| c.holds(v)) && !fd.excluded.iter().any(|e| e == v))
            }
            (Carrier::SeqSpace(ss), Point::Seq(s)) => Ok(!ss.excluded.contains(s)),
            (Carrier::FiniteSet(pts), q) => {
                if !pts.is_empty() && !pts.iter().any(|x| same_variant(x, q)) {
                    return Err(Error::VariantMismatch(format!("{q} is not comparable with the set")));
                }
                Ok(pts.contains(q))
            }
            (Carrier::Union(l, r), Point::Tagged { side, inner }) => match side {
                Side::Left => l.contains(inner),
                Side::Right => r.contains(inner),
            },
            (c, q) => Err(Error::VariantMismatch(format!("{q} for a {} carrier", c.kind()))),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Carrier::FiniteDim(_) => "finite-dimensional",
            Carrier::SeqSpace(_) => "sequence",
            Carrier::FiniteSet(_) => "finite set",
            Carrier::Union(..) => "union",
        }
    }

    /// The `index`-th sample under `seed`; a pure function of both.
    pub fn sample_one(&self, seed: u64, index: usize) -> Result<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        match self {
            Carrier::FiniteDim(fd) => {
                for _ in 0..SAMPLE_ATTEMPTS {
                    let x = draw_vec(fd, &mut rng);
                    let p = Point::FiniteVec(x);
                    if self.contains(&p)? {
                        return Ok(p);
                    }
                }
                Err(Error::SamplingBudget { index, attempts: SAMPLE_ATTEMPTS })
            }
            Carrier::SeqSpace(ss) => {
                for _ in 0..SAMPLE_ATTEMPTS {
                    let s = draw_seq(ss, &mut rng);
                    if !ss.excluded.contains(&s) {
                        return Ok(Point::Seq(s));
                    }
                }
                Err(Error::SamplingBudget { index, attempts: SAMPLE_ATTEMPTS })
            }
            Carrier::FiniteSet(pts) => {
                if pts.is_empty() {
                    return Err(Error::InvalidCarrier("cannot sample the empty set".into()));
                }
                Ok(pts[rng.random_range(0..pts.len())].clone())
            }
            Carrier::Union(l, r) => {
                let left = rng.random_bool(0.5);
                let (side, inner, salt) = if left { (Side::Left, l, 1) } else { (Side::Right, r, 2) };
                let sub_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt);
                Ok(Point::tagged(side, inner.sample_one(sub_seed, index)?))
            }
        }
    }

    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<Point>> {
        (0..count).map(|i| self.sample_one(seed, i)).collect()
    }
}

fn same_variant(a: &Point, b: &Point) -> bool {
    match (a, b) {
        (Point::FiniteVec(x), Point::FiniteVec(y)) => x.len() == y.len(),
        (Point::Seq(_), Point::Seq(_)) => true,
        (Point::Tagged { .. }, Point::Tagged { .. }) => true,
        _ => false,
    }
}

fn draw_vec(fd: &FiniteDim, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match &fd.sampler {
        Sampler::Box { lo, hi } => (0..fd.dim).map(|_| rng.random_range(*lo..*hi)).collect(),
        Sampler::Sphere { center, radius } => {
            if fd.dim == 2 {
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let (s, c) = theta.sin_cos();
                vec![center[0] + radius * c, center[1] + radius * s]
            } else {
                let dir: Vec<f64> = (0..fd.dim).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
                let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                dir.iter().zip(center).map(|(d, c)| c + radius * d / norm).collect()
            }
        }
    }
}

fn draw_seq(ss: &SeqSpace, rng: &mut ChaCha8Rng) -> SeqPoint {
    let max_index = ss.max_index.max(1);
    let size = rng.random_range(1..=ss.support_bound.max(1).min(max_index));
    let mut indices: Vec<usize> = Vec::with_capacity(size);
    while indices.len() < size {
        let i = rng.random_range(1..=max_index);
        if !indices.contains(&i) {
            indices.push(i);
        }
    }
    let entries = indices
        .into_iter()
        .map(|i| {
            let mag = rng.random_range(0.1..2.0);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (i, sign * mag)
        })
        .collect();
    SeqPoint::new(entries).expect("distinct nonzero indices")
}

/// An open interval, possibly unbounded on either side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenInterval {
    lo: f64,
    hi: f64,
}

impl OpenInterval {
    pub fn new(lo: f64, hi: f64) -> Result<OpenInterval> {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(Error::Invalid(format!("empty open interval ({lo}, {hi})")));
        }
        Ok(OpenInterval { lo, hi })
    }

    pub fn above(lo: f64) -> Result<OpenInterval> {
        OpenInterval::new(lo, f64::INFINITY)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo < v && v < self.hi
    }
}
