//! Differential structures presented by generators.
//!
//! Elements are built only through superposition ([`DifferentialSpace::superpose`])
//! and localization ([`DifferentialSpace::from_atlas`]); every element
//! therefore lies in the structure generated by the space's generators.
//! Elements are referred to by registered name; structural equality of
//! elements is never decided.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::carrier::{Carrier, OpenInterval, Point, SeqPoint, Side};
use crate::error::{Error, Result};
use crate::seqspace;
use crate::smooth_fn::{Expr, SmoothMap};
use crate::EQ_TOL;

/// Samples used to check atlas agreement and coverage.
pub const ATLAS_CHECK_SAMPLES: usize = 1000;
/// Samples used to check that a newly registered element evaluates.
pub const REGISTRY_CHECK_SAMPLES: usize = 64;
/// Samples used to check that a subcarrier lies inside its parent.
pub const SUBSET_CHECK_SAMPLES: usize = 200;

/// Reference to a generator of a space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenRef {
    /// Index into the space's named generator list.
    Named(usize),
    /// The coordinate projection `π_i` (1-based) of a projection family.
    Coordinate(usize),
    /// A generator of one side of a union, extended by zero to the other side.
    Side(Side, Box<GenRef>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `π_i`, 1-based.
    Projection { index: usize },
    /// A smooth map of the listed 1-based coordinates.
    Composite { map: SmoothMap, coords: Vec<usize> },
    /// `θ_p`: 1 at `point`, 0 elsewhere.
    Indicator { point: Point },
    /// `(1, 0)` or `(0, 1)` on a union.
    Idempotent { side: Side },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedGenerator {
    pub name: String,
    pub generator: Generator,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSet {
    pub named: Vec<NamedGenerator>,
    /// When set, every `π_i` (`i ≥ 1`) is a generator, named `pi(i)`.
    pub projection_family: bool,
}

/// A conjunction of open preimage conditions on generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub bounds: Vec<(GenRef, OpenInterval)>,
}

impl Region {
    pub fn everything() -> Region {
        Region { bounds: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasPiece {
    pub region: Region,
    pub map: SmoothMap,
    pub inputs: Vec<GenRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atlas {
    Pieces(Vec<AtlasPiece>),
    /// The locally finite cutoff sum `Σ_k φ(k² ρ_k(x − center))`, whose
    /// pieces `Σ_{j<k} φ(j² ρ_j)` on `{ρ_k > 1/k²}` are generated on demand.
    CutoffSum { center: SeqPoint },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgebraElement {
    /// `map ∘ (inputs…)`.
    Global { map: SmoothMap, inputs: Vec<GenRef> },
    Local { atlas: Atlas },
    /// Superposition over inputs that are not all global.
    Composite { outer: SmoothMap, inputs: Vec<Arc<AlgebraElement>> },
    /// `(f, g)` on a union, acting side-wise.
    Pair { left: Arc<AlgebraElement>, right: Arc<AlgebraElement> },
}

impl AlgebraElement {
    pub fn constant(c: f64) -> AlgebraElement {
        AlgebraElement::Global { map: SmoothMap::constant(0, c), inputs: Vec::new() }
    }

    pub fn generator(g: GenRef) -> AlgebraElement {
        AlgebraElement::Global { map: SmoothMap::projection(1, 0).expect("arity 1"), inputs: vec![g] }
    }

    pub fn is_global(&self) -> bool {
        matches!(self, AlgebraElement::Global { .. })
    }

    fn as_constant(&self) -> Option<f64> {
        match self {
            AlgebraElement::Global { map, inputs } if inputs.is_empty() => map.eval(&[]).ok(),
            _ => None,
        }
    }
}

/// `outer ∘ (inputs…)` at the element level.
pub fn compose_elements(outer: &SmoothMap, inputs: &[Arc<AlgebraElement>]) -> Result<AlgebraElement> {
    if outer.arity() != inputs.len() {
        return Err(Error::ArityMismatch { expected: outer.arity(), got: inputs.len() });
    }
    let any_pair = inputs.iter().any(|e| matches!(**e, AlgebraElement::Pair { .. }));
    if any_pair {
        let mut lefts = Vec::with_capacity(inputs.len());
        let mut rights = Vec::with_capacity(inputs.len());
        for e in inputs {
            match &**e {
                AlgebraElement::Pair { left, right } => {
                    lefts.push(left.clone());
                    rights.push(right.clone());
                }
                other => match other.as_constant() {
                    Some(_) => {
                        lefts.push(e.clone());
                        rights.push(e.clone());
                    }
                    None => return Err(Error::MixedPair),
                },
            }
        }
        return Ok(AlgebraElement::Pair {
            left: Arc::new(compose_elements(outer, &lefts)?),
            right: Arc::new(compose_elements(outer, &rights)?),
        });
    }

    if inputs.iter().all(|e| e.is_global()) {
        let mut gens: Vec<GenRef> = Vec::new();
        for e in inputs {
            if let AlgebraElement::Global { inputs: gs, .. } = &**e {
                for g in gs {
                    if !gens.contains(g) {
                        gens.push(g.clone());
                    }
                }
            }
        }
        let m = gens.len();
        let mut inners = Vec::with_capacity(inputs.len());
        for e in inputs {
            if let AlgebraElement::Global { map, inputs: gs } = &**e {
                let selectors = gs
                    .iter()
                    .map(|g| SmoothMap::projection(m, gens.iter().position(|h| h == g).expect("collected")))
                    .collect::<Result<Vec<_>>>()?;
                inners.push(SmoothMap::compose_with_arity(map, &selectors, m)?);
            }
        }
        let map = SmoothMap::compose_with_arity(outer, &inners, m)?;
        return Ok(AlgebraElement::Global { map, inputs: gens });
    }

    Ok(AlgebraElement::Composite { outer: outer.clone(), inputs: inputs.to_vec() })
}

#[derive(Debug, Clone)]
pub struct DifferentialSpace {
    name: String,
    carrier: Carrier,
    generators: GeneratorSet,
    elements: Vec<(String, Arc<AlgebraElement>)>,
    index: BTreeMap<String, usize>,
    seed: u64,
    registered_samples: Vec<Point>,
    sides: Option<Arc<(DifferentialSpace, DifferentialSpace)>>,
}

/// JSON-friendly description of a space.
#[derive(Debug, Clone, Serialize)]
pub struct SpaceExport<'a> {
    pub name: &'a str,
    pub carrier: &'a Carrier,
    pub generators: &'a GeneratorSet,
    pub elements: Vec<(&'a str, &'a AlgebraElement)>,
}

impl DifferentialSpace {
    pub fn new(name: impl Into<String>, carrier: Carrier) -> DifferentialSpace {
        let projection_family = matches!(carrier, Carrier::SeqSpace(_));
        DifferentialSpace {
            name: name.into(),
            carrier,
            generators: GeneratorSet { named: Vec::new(), projection_family },
            elements: Vec::new(),
            index: BTreeMap::new(),
            seed: 0,
            registered_samples: Vec::new(),
            sides: None,
        }
    }

    /// A space over `ℝⁿ`-type carriers with generators `x1..xn = π_1..π_n`.
    pub fn with_coordinates(name: impl Into<String>, carrier: Carrier, names: &[&str]) -> Result<DifferentialSpace> {
        let mut s = DifferentialSpace::new(name, carrier);
        for (i, n) in names.iter().enumerate() {
            s.add_generator(n, Generator::Projection { index: i + 1 })?;
        }
        Ok(s)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    pub(crate) fn generators_mut(&mut self) -> &mut GeneratorSet {
        &mut self.generators
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    pub fn sides(&self) -> Option<(&DifferentialSpace, &DifferentialSpace)> {
        self.sides.as_deref().map(|(l, r)| (l, r))
    }

    pub fn side(&self, side: Side) -> Result<&DifferentialSpace> {
        let (l, r) = self.sides().ok_or(Error::NotUnion)?;
        Ok(match side {
            Side::Left => l,
            Side::Right => r,
        })
    }

    pub fn registered_samples(&self) -> &[Point] {
        &self.registered_samples
    }

    pub fn add_samples(&mut self, points: Vec<Point>) -> Result<()> {
        for p in points {
            let p = self.carrier.coerce(p);
            if !self.carrier.contains(&p)? {
                return Err(Error::NotInCarrier);
            }
            self.registered_samples.push(p);
        }
        Ok(())
    }

    /// `count` carrier samples under the space's seed.
    pub fn samples(&self, count: usize) -> Result<Vec<Point>> {
        self.carrier.sample(self.seed, count)
    }

    pub fn export(&self) -> SpaceExport<'_> {
        SpaceExport {
            name: &self.name,
            carrier: &self.carrier,
            generators: &self.generators,
            elements: self.elements.iter().map(|(n, e)| (n.as_str(), &**e)).collect(),
        }
    }

    // ---- generators ----

    /// Adds a generator and registers it as an element of the same name.
    pub fn add_generator(&mut self, name: &str, generator: Generator) -> Result<GenRef> {
        if self.generators.named.iter().any(|g| g.name == name) || self.index.contains_key(name) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        match &generator {
            Generator::Projection { index } => self.check_coordinate(*index)?,
            Generator::Composite { map, coords } => {
                if map.arity() != coords.len() {
                    return Err(Error::ArityMismatch { expected: map.arity(), got: coords.len() });
                }
                for &c in coords {
                    self.check_coordinate(c)?;
                }
            }
            Generator::Indicator { point } => {
                self.carrier.contains(point)?;
            }
            Generator::Idempotent { .. } => {
                if self.sides.is_none() {
                    return Err(Error::NotUnion);
                }
            }
        }
        self.generators.named.push(NamedGenerator { name: name.to_string(), generator });
        let g = GenRef::Named(self.generators.named.len() - 1);
        self.insert_element(name, AlgebraElement::generator(g.clone()))?;
        Ok(g)
    }

    fn check_coordinate(&self, index: usize) -> Result<()> {
        if index == 0 {
            return Err(Error::Invalid("coordinates are 1-based".into()));
        }
        match &self.carrier {
            Carrier::FiniteDim(fd) if index > fd.dim => {
                Err(Error::Invalid(format!("coordinate {index} exceeds dimension {}", fd.dim)))
            }
            Carrier::Union(..) => Err(Error::Invalid("a union has no coordinates".into())),
            _ => Ok(()),
        }
    }

    pub fn generator_name(&self, g: &GenRef) -> String {
        match g {
            GenRef::Named(i) => self.generators.named.get(*i).map(|n| n.name.clone()).unwrap_or_else(|| format!("#{i}")),
            GenRef::Coordinate(i) => format!("pi({i})"),
            GenRef::Side(side, inner) => {
                let prefix = match side {
                    Side::Left => "L.",
                    Side::Right => "R.",
                };
                match self.side(*side) {
                    Ok(s) => format!("{prefix}{}", s.generator_name(inner)),
                    Err(_) => format!("{prefix}?"),
                }
            }
        }
    }

    /// Resolves a generator name. Accepts `pi(i)` for projection families,
    /// `L.name` / `R.name` on unions, and bare parent names of restricted
    /// generators (`x` for `x|M`).
    pub fn generator_by_name(&self, name: &str) -> Result<GenRef> {
        if let Some(i) = self.generators.named.iter().position(|g| g.name == name) {
            return Ok(GenRef::Named(i));
        }
        if let Some(i) = self.generators.named.iter().position(|g| g.name.split('|').next() == Some(name)) {
            return Ok(GenRef::Named(i));
        }
        if let Some(index) = parse_pi(name) {
            if let Some(i) = self
                .generators
                .named
                .iter()
                .position(|g| matches!(g.generator, Generator::Projection { index: j } if j == index))
            {
                return Ok(GenRef::Named(i));
            }
            if self.generators.projection_family && index >= 1 {
                return Ok(GenRef::Coordinate(index));
            }
        }
        for (prefix, side) in [("L.", Side::Left), ("R.", Side::Right)] {
            if let Some(rest) = name.strip_prefix(prefix) {
                if let Ok(s) = self.side(side) {
                    return Ok(GenRef::Side(side, Box::new(s.generator_by_name(rest)?)));
                }
            }
        }
        Err(Error::UnknownName(name.to_string()))
    }

    /// All generators that are explicitly listed (projection families excluded).
    pub fn listed_generators(&self) -> Vec<GenRef> {
        (0..self.generators.named.len()).map(GenRef::Named).collect()
    }

    /// `g(p)` without a carrier-membership check, so it also evaluates the
    /// ambient extension at candidate points.
    pub fn generator_value(&self, g: &GenRef, p: &Point) -> Result<f64> {
        match g {
            GenRef::Coordinate(i) => self.coordinate(p, *i),
            GenRef::Named(i) => {
                let named = self.generators.named.get(*i).ok_or_else(|| Error::UnknownName(format!("#{i}")))?;
                match &named.generator {
                    Generator::Projection { index } => self.coordinate(p, *index),
                    Generator::Composite { map, coords } => {
                        let args = coords.iter().map(|&c| self.coordinate(p, c)).collect::<Result<Vec<_>>>()?;
                        map.eval(&args)
                    }
                    Generator::Indicator { point } => Ok(if point == p { 1.0 } else { 0.0 }),
                    Generator::Idempotent { side } => match p {
                        Point::Tagged { side: s, .. } => Ok(if s == side { 1.0 } else { 0.0 }),
                        other => Err(Error::VariantMismatch(format!("{other} on a union"))),
                    },
                }
            }
            GenRef::Side(side, inner) => match p {
                Point::Tagged { side: s, inner: q } => {
                    if s == side {
                        self.side(*side)?.generator_value(inner, q)
                    } else {
                        Ok(0.0)
                    }
                }
                other => Err(Error::VariantMismatch(format!("{other} on a union"))),
            },
        }
    }

    fn coordinate(&self, p: &Point, i: usize) -> Result<f64> {
        p.coord(i).ok_or_else(|| Error::VariantMismatch(format!("no coordinate {i} on {p}")))
    }

    pub fn generator(&self, g: &GenRef) -> Option<&Generator> {
        match g {
            GenRef::Named(i) => self.generators.named.get(*i).map(|n| &n.generator),
            _ => None,
        }
    }

    /// Coordinate index if `g` is a projection.
    pub fn projection_index(&self, g: &GenRef) -> Option<usize> {
        match g {
            GenRef::Coordinate(i) => Some(*i),
            GenRef::Named(_) => match self.generator(g)? {
                Generator::Projection { index } => Some(*index),
                _ => None,
            },
            GenRef::Side(..) => None,
        }
    }

    // ---- elements ----

    pub fn element(&self, name: &str) -> Result<&Arc<AlgebraElement>> {
        self.index.get(name).map(|&i| &self.elements[i].1).ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    /// Resolves an element name, accepting `pi(i)` for projection families.
    pub fn resolve(&self, name: &str) -> Result<Arc<AlgebraElement>> {
        if let Ok(e) = self.element(name) {
            return Ok(e.clone());
        }
        let g = self.generator_by_name(name)?;
        Ok(Arc::new(AlgebraElement::generator(g)))
    }

    pub fn element_names(&self) -> impl Iterator<Item = &str> {
        self.elements.iter().map(|(n, _)| n.as_str())
    }

    pub fn elements(&self) -> impl Iterator<Item = (&str, &Arc<AlgebraElement>)> {
        self.elements.iter().map(|(n, e)| (n.as_str(), e))
    }

    pub fn has_element(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    fn insert_element(&mut self, name: &str, element: AlgebraElement) -> Result<Arc<AlgebraElement>> {
        if self.index.contains_key(name) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        let e = Arc::new(element);
        self.index.insert(name.to_string(), self.elements.len());
        self.elements.push((name.to_string(), e.clone()));
        Ok(e)
    }

    /// Registers an element after checking that it evaluates on carrier samples.
    pub fn register(&mut self, name: &str, element: AlgebraElement) -> Result<Arc<AlgebraElement>> {
        if self.index.contains_key(name) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        for p in self.samples(REGISTRY_CHECK_SAMPLES)? {
            self.eval_unchecked(&element, &p)?;
        }
        self.insert_element(name, element)
    }

    /// `ω ∘ (inputs…)`, registered under `name`.
    pub fn superpose(&mut self, name: &str, outer: &SmoothMap, inputs: &[&str]) -> Result<Arc<AlgebraElement>> {
        let resolved = inputs.iter().map(|n| self.resolve(n)).collect::<Result<Vec<_>>>()?;
        let e = compose_elements(outer, &resolved)?;
        self.register(name, e)
    }

    /// Registers a localized element. Each piece is `(region, outer, inputs)`
    /// with global inputs; agreement on overlaps and coverage are checked on
    /// [`ATLAS_CHECK_SAMPLES`] carrier samples.
    pub fn from_atlas(&mut self, name: &str, pieces: Vec<(Region, SmoothMap, Vec<&str>)>) -> Result<Arc<AlgebraElement>> {
        let mut built = Vec::with_capacity(pieces.len());
        for (region, outer, inputs) in pieces {
            let resolved = inputs.iter().map(|n| self.resolve(n)).collect::<Result<Vec<_>>>()?;
            match compose_elements(&outer, &resolved)? {
                AlgebraElement::Global { map, inputs } => built.push(AtlasPiece { region, map, inputs }),
                _ => return Err(Error::Invalid("atlas pieces must be global superpositions".into())),
            }
        }
        let atlas = Atlas::Pieces(built);
        self.check_atlas(&atlas, ATLAS_CHECK_SAMPLES)?;
        self.register(name, AlgebraElement::Local { atlas })
    }

    /// Registers an already-built atlas after the same checks as [`Self::from_atlas`].
    pub fn register_atlas(&mut self, name: &str, atlas: Atlas) -> Result<Arc<AlgebraElement>> {
        self.check_atlas(&atlas, ATLAS_CHECK_SAMPLES)?;
        self.register(name, AlgebraElement::Local { atlas })
    }

    fn check_atlas(&self, atlas: &Atlas, n: usize) -> Result<()> {
        let pieces = match atlas {
            Atlas::Pieces(p) => p,
            Atlas::CutoffSum { .. } => return Ok(()),
        };
        for p in self.samples(n)? {
            let mut first: Option<(usize, f64)> = None;
            for (i, piece) in pieces.iter().enumerate() {
                if !self.region_contains(&piece.region, &p) {
                    continue;
                }
                let v = self.eval_piece(piece, &p)?;
                match first {
                    None => first = Some((i, v)),
                    Some((j, w)) => {
                        let gap = (v - w).abs();
                        if !(gap <= EQ_TOL) {
                            return Err(Error::AtlasDisagreement { first: j, second: i, gap });
                        }
                    }
                }
            }
            if first.is_none() {
                return Err(Error::AtlasCoverage { hint: format!("{p} is uncovered; add a piece or enlarge the atlas") });
            }
        }
        Ok(())
    }

    pub fn region_contains(&self, region: &Region, p: &Point) -> bool {
        region.bounds.iter().all(|(g, iv)| matches!(self.generator_value(g, p), Ok(v) if iv.contains(v)))
    }

    fn eval_piece(&self, piece: &AtlasPiece, p: &Point) -> Result<f64> {
        let args = piece.inputs.iter().map(|g| self.generator_value(g, p)).collect::<Result<Vec<_>>>()?;
        piece.map.eval(&args)
    }

    /// `f(p)`; errors if `p` is outside the carrier.
    pub fn eval_element(&self, element: &AlgebraElement, p: &Point) -> Result<f64> {
        if !self.carrier.contains(p)? {
            return Err(Error::NotInCarrier);
        }
        self.eval_unchecked(element, p)
    }

    pub fn eval_named(&self, name: &str, p: &Point) -> Result<f64> {
        let e = self.resolve(name)?;
        self.eval_element(&e, p)
    }

    pub(crate) fn eval_unchecked(&self, element: &AlgebraElement, p: &Point) -> Result<f64> {
        match element {
            AlgebraElement::Global { map, inputs } => {
                let args = inputs.iter().map(|g| self.generator_value(g, p)).collect::<Result<Vec<_>>>()?;
                map.eval(&args)
            }
            AlgebraElement::Composite { outer, inputs } => {
                let args = inputs.iter().map(|e| self.eval_unchecked(e, p)).collect::<Result<Vec<_>>>()?;
                outer.eval(&args)
            }
            AlgebraElement::Local { atlas: Atlas::Pieces(pieces) } => {
                // lowest-indexed covering piece
                let piece = pieces.iter().find(|pc| self.region_contains(&pc.region, p)).ok_or(Error::Uncovered)?;
                self.eval_piece(piece, p)
            }
            AlgebraElement::Local { atlas: Atlas::CutoffSum { center } } => match p {
                Point::Seq(s) => Ok(seqspace::xi_centered(center, s)?.value),
                other => Err(Error::VariantMismatch(format!("cutoff sum at {other}"))),
            },
            AlgebraElement::Pair { left, right } => match p {
                Point::Tagged { side: Side::Left, inner } => self.side(Side::Left)?.eval_unchecked(left, inner),
                Point::Tagged { side: Side::Right, inner } => self.side(Side::Right)?.eval_unchecked(right, inner),
                other => Err(Error::VariantMismatch(format!("pair at untagged point {other}"))),
            },
        }
    }

    // ---- subspaces and unions ----

    /// The subspace structure on `sub`: same generators (renamed `g|name`),
    /// same elements. Containment is checked on samples of `sub`.
    pub fn restrict(&self, name: &str, sub: Carrier) -> Result<DifferentialSpace> {
        if self.sides.is_some() {
            return Err(Error::Invalid("restrict a union side instead".into()));
        }
        for p in sub.sample(self.seed, SUBSET_CHECK_SAMPLES)? {
            match self.carrier.contains(&p) {
                Ok(true) => {}
                _ => return Err(Error::NotSubset),
            }
        }
        if let Carrier::FiniteSet(pts) = &sub {
            for p in pts {
                if !matches!(self.carrier.contains(p), Ok(true)) {
                    return Err(Error::NotSubset);
                }
            }
        }
        let mut generators = self.generators.clone();
        for g in &mut generators.named {
            g.name = format!("{}|{}", g.name, name);
        }
        let registered_samples = self
            .registered_samples
            .iter()
            .filter(|p| matches!(sub.contains(p), Ok(true)))
            .cloned()
            .collect();
        Ok(DifferentialSpace {
            name: name.to_string(),
            carrier: sub,
            generators,
            elements: self.elements.clone(),
            index: self.index.clone(),
            seed: self.seed,
            registered_samples,
            sides: None,
        })
    }

    /// The disjoint union `(M ∪ N, C ⊕ D)`. Registers the idempotents
    /// `unit_L = (1, 0)` and `unit_R = (0, 1)`, and `L.f = (f, 0)`,
    /// `R.g = (0, g)` for every element of the sides.
    pub fn union_space(name: &str, left: DifferentialSpace, right: DifferentialSpace) -> Result<DifferentialSpace> {
        let carrier = Carrier::union(left.carrier.clone(), right.carrier.clone());
        let zero = Arc::new(AlgebraElement::constant(0.0));
        let one = Arc::new(AlgebraElement::constant(1.0));
        let left_elems: Vec<_> = left.elements.iter().map(|(n, e)| (format!("L.{n}"), e.clone())).collect();
        let right_elems: Vec<_> = right.elements.iter().map(|(n, e)| (format!("R.{n}"), e.clone())).collect();
        let mut space = DifferentialSpace::new(name, carrier);
        space.seed = left.seed;
        space.sides = Some(Arc::new((left, right)));
        space.add_generator(UNIT_LEFT, Generator::Idempotent { side: Side::Left })?;
        space.add_generator(UNIT_RIGHT, Generator::Idempotent { side: Side::Right })?;
        // Replace the generator-form idempotents by their pair form.
        space.elements.clear();
        space.index.clear();
        space.insert_element(UNIT_LEFT, AlgebraElement::Pair { left: one.clone(), right: zero.clone() })?;
        space.insert_element(UNIT_RIGHT, AlgebraElement::Pair { left: zero.clone(), right: one })?;
        for (n, e) in left_elems {
            space.insert_element(&n, AlgebraElement::Pair { left: e, right: zero.clone() })?;
        }
        for (n, e) in right_elems {
            space.insert_element(&n, AlgebraElement::Pair { left: zero.clone(), right: e })?;
        }
        Ok(space)
    }

    /// Registers `(f, g)` from an element of each side.
    pub fn register_pair(&mut self, name: &str, left: &str, right: &str) -> Result<Arc<AlgebraElement>> {
        let (l, r) = self.sides().ok_or(Error::NotUnion)?;
        let e = AlgebraElement::Pair { left: l.resolve(left)?, right: r.resolve(right)? };
        self.register(name, e)
    }
}

pub const UNIT_LEFT: &str = "unit_L";
pub const UNIT_RIGHT: &str = "unit_R";

/// Parses `pi(i)`.
pub fn parse_pi(name: &str) -> Option<usize> {
    name.strip_prefix("pi(")?.strip_suffix(')')?.trim().parse().ok()
}

/// Builds `Σ_{i ≤ k} (π_i − c_i)²` as a composite generator over coordinates `1..=k`.
pub fn partial_sum_squares(k: usize, center: &SeqPoint) -> Generator {
    let body = Expr::sum((1..=k).map(|i| {
        let c = center.coord(i);
        let d = if c == 0.0 { Expr::slot(i - 1) } else { Expr::slot(i - 1) + Expr::constant(-c) };
        d.powi(2)
    }));
    Generator::Composite {
        map: SmoothMap::new(k, body).expect("slots below k"),
        coords: (1..=k).collect(),
    }
}
