//! Executes a parsed program against the library, one record per command.

use std::collections::BTreeMap;
use std::sync::Arc;

use diffspace::carrier::{Carrier, Constraint, OpenInterval, Point, Relation, Sampler, SeqPoint, Side};
use diffspace::seqspace::{
    default_probe, ensure_rho_generators, register_xi, tilde_as_union, tilde_decompose, tilde_membership,
    tilde_structure, xi_atlas, xi_traced, z, Prolongation,
};
use diffspace::smooth_fn::{bump_ball, distance_sq, Expr as Term, Guard, SmoothMap};
use diffspace::spectrum::{
    apply_hom, classify, density_witness, spec_space, union_classify, GeneratorAssignment, HomOutcome, Homomorphism,
};
use diffspace::structure::{parse_pi as pi_index, DifferentialSpace, Generator, Region};

use crate::ast::*;
use crate::report::{Record, Report, TRACE_LIMIT};

/// Carrier samples used by `spec` and `space … = spec A` without an explicit count.
pub const DEFAULT_SPEC_SAMPLES: usize = 100;
pub const DEFAULT_DENSITY_BUDGET: usize = 100_000;
/// Samples compared by `split`.
pub const SPLIT_SAMPLES: usize = 200;

#[derive(Debug)]
struct Failure(String);

impl From<diffspace::Error> for Failure {
    fn from(e: diffspace::Error) -> Failure {
        Failure(e.to_string())
    }
}

type RunResult<T> = Result<T, Failure>;

fn fail<T>(msg: impl Into<String>) -> RunResult<T> {
    Err(Failure(msg.into()))
}

/// Interpreter state: defined spaces, the active one and named assignments.
pub struct Runner {
    seed: u64,
    spaces: BTreeMap<String, DifferentialSpace>,
    active: Option<String>,
    assigns: BTreeMap<String, GeneratorAssignment>,
    /// Centres of spaces built with `tilde(P)`.
    tilde_centers: BTreeMap<String, SeqPoint>,
}

pub fn run(program: &Program, seed: u64) -> Report {
    let mut r = Runner::new(seed);
    let mut report = Report::default();
    for s in &program.stmts {
        if let Some(rec) = r.step(&s.node, s.line) {
            report.records.push(rec);
        }
    }
    report
}

impl Runner {
    pub fn new(seed: u64) -> Runner {
        Runner {
            seed,
            spaces: BTreeMap::new(),
            active: None,
            assigns: BTreeMap::new(),
            tilde_centers: BTreeMap::new(),
        }
    }

    /// Runs one statement. Definitions report only failures.
    pub fn step(&mut self, stmt: &Stmt, line: usize) -> Option<Record> {
        let text = stmt.to_string();
        let result = match stmt {
            Stmt::Command { cmd, space } => {
                let mut rec = Record::new(line, text.clone(), self.seed, "ok");
                self.command(cmd, space.as_deref(), &mut rec).map(|_| Some(rec))
            }
            other => self.define(other).map(|_| None),
        };
        match result {
            Ok(rec) => rec,
            Err(Failure(msg)) => {
                let mut rec = Record::new(line, text, self.seed, "error");
                rec.error = Some(msg);
                Some(rec)
            }
        }
    }

    fn target(&self, space: Option<&str>) -> RunResult<String> {
        match space.or(self.active.as_deref()) {
            Some(s) if self.spaces.contains_key(s) => Ok(s.to_string()),
            Some(s) => fail(format!("space `{s}` is not available")),
            None => fail("no active space"),
        }
    }

    fn space(&self, name: &str) -> RunResult<&DifferentialSpace> {
        self.spaces.get(name).ok_or_else(|| Failure(format!("space `{name}` is not available")))
    }

    fn space_mut(&mut self, name: &str) -> RunResult<&mut DifferentialSpace> {
        self.spaces.get_mut(name).ok_or_else(|| Failure(format!("space `{name}` is not available")))
    }

    fn assignment(&self, a: &AssignRef) -> RunResult<GeneratorAssignment> {
        match a {
            AssignRef::Named(n) => self.assigns.get(n).cloned().ok_or_else(|| Failure(format!("unknown assignment `{n}`"))),
            AssignRef::Lit(l) => Ok(assignment(l)),
        }
    }

    // ---- definitions ----

    fn define(&mut self, stmt: &Stmt) -> RunResult<()> {
        match stmt {
            Stmt::Space { name, expr } => {
                if self.spaces.contains_key(name) {
                    return fail(format!("space `{name}` is already defined"));
                }
                let mut space = self.build_space(name, expr)?;
                space.set_seed(self.seed);
                if let SpaceBase::Tilde(p) = &expr.base {
                    self.tilde_centers.insert(name.clone(), seq_point(p)?);
                }
                self.spaces.insert(name.clone(), space);
                self.active = Some(name.clone());
            }
            Stmt::Gen { defs } => {
                let target = self.target(None)?;
                let space = self.space_mut(&target)?;
                for (name, def) in defs {
                    let g = match def {
                        GenDef::Proj(i) => Generator::Projection { index: *i },
                        GenDef::Theta(p) => Generator::Indicator { point: space.carrier().coerce(point(p)?) },
                        GenDef::Expr(e) => {
                            let leaves = e.leaves();
                            let coords = leaves
                                .iter()
                                .map(|l| {
                                    if let Some(i) = pi_index(l) {
                                        return Ok(i);
                                    }
                                    let g = space.generator_by_name(l)?;
                                    space
                                        .projection_index(&g)
                                        .ok_or_else(|| Failure(format!("`{l}` is not a projection generator")))
                                })
                                .collect::<RunResult<Vec<_>>>()?;
                            let map = SmoothMap::new(leaves.len(), lower(e, &leaves)?)?;
                            Generator::Composite { map, coords }
                        }
                    };
                    space.add_generator(name, g)?;
                }
            }
            Stmt::Fn { name, def } => {
                let target = self.target(None)?;
                let space = self.space_mut(&target)?;
                define_fn(space, name, def)?;
            }
            Stmt::Assign { name, lit } => {
                self.assigns.insert(name.clone(), assignment(lit));
            }
            Stmt::Samples { points } => {
                let target = self.target(None)?;
                let space = self.space_mut(&target)?;
                let pts = points.iter().map(point).collect::<RunResult<Vec<_>>>()?;
                space.add_samples(pts)?;
            }
            Stmt::Use { name } => {
                self.space(name)?;
                self.active = Some(name.clone());
            }
            Stmt::Command { .. } => unreachable!("commands are not definitions"),
        }
        Ok(())
    }

    fn build_space(&self, name: &str, expr: &SpaceExpr) -> RunResult<DifferentialSpace> {
        Ok(match &expr.base {
            SpaceBase::Union(a, b) => {
                DifferentialSpace::union_space(name, self.space(a)?.clone(), self.space(b)?.clone())?
            }
            SpaceBase::Restrict(a, inner) => self.space(a)?.restrict(name, carrier(inner)?)?,
            SpaceBase::Tilde(p) => tilde_structure(&seq_point(p)?)?,
            SpaceBase::Spec(a, n) => spec_space(self.space(a)?, n.unwrap_or(DEFAULT_SPEC_SAMPLES), &[])?,
            _ => DifferentialSpace::new(name, carrier(expr)?),
        })
    }

    // ---- commands ----

    fn command(&mut self, cmd: &Command, space: Option<&str>, rec: &mut Record) -> RunResult<()> {
        if let Command::Xi { point: p } = cmd {
            let p = seq_point(p)?;
            let report = xi_traced(&p)?;
            rec.value = Some(report.value);
            rec.k0 = Some(report.k0);
            rec.unit_prefix = Some(report.unit_prefix);
            rec.terms_evaluated = Some(report.terms_evaluated);
            if report.trace.len() > TRACE_LIMIT {
                rec.trace_total = Some(report.trace.len());
            }
            rec.trace = Some(report.trace.into_iter().take(TRACE_LIMIT).collect());
            return Ok(());
        }
        let target = self.target(space)?;
        if let Command::XiAtlas { k, point: p } = cmd {
            let name = format!("xi_atlas({k})");
            let s = self.space_mut(&target)?;
            if !s.has_element(&name) {
                xi_atlas(s, &name, *k)?;
            }
            let p = s.carrier().coerce(point(p)?);
            rec.value = Some(s.eval_named(&name, &p)?);
            return Ok(());
        }
        let s = self.space(&target)?;
        match cmd {
            Command::EvalAt { func, point: p } => {
                let p = s.carrier().coerce(point(p)?);
                rec.value = Some(s.eval_named(func, &p)?);
            }
            Command::EvalUnder { func, assignment } => {
                let h = Homomorphism::FromAssignment { assignment: self.assignment(assignment)? };
                rec.value = Some(apply_hom(s, &h, func)?);
            }
            Command::Classify { assignment } => {
                let a = self.assignment(assignment)?;
                let outcome = if s.sides().is_some() {
                    let (side, outcome) = union_classify(s, &a)?;
                    rec.side = Some(match side {
                        Side::Left => "left".into(),
                        Side::Right => "right".into(),
                    });
                    outcome
                } else {
                    classify(s, &a)?
                };
                match outcome {
                    HomOutcome::Evaluation { points } => {
                        rec.outcome = "evaluation".into();
                        rec.count = Some(points.len());
                        rec.points = Some(points);
                    }
                    HomOutcome::Obstructed { witness, probe, diagnosis } => {
                        rec.outcome = "obstructed".into();
                        rec.witness = witness;
                        rec.probe = Some(probe);
                        rec.diagnosis = Some(format!("{diagnosis:?}"));
                    }
                }
            }
            Command::Probe { witnesses, toward, along } => {
                let candidate = s.carrier().coerce(point(toward)?);
                let probes = match along {
                    Along::Z => match &candidate {
                        Point::Seq(c) => vec![default_probe(c)?],
                        _ => return fail("`along z` needs a sequence target"),
                    },
                    Along::Paths(paths) => paths
                        .iter()
                        .map(|path| path.iter().map(|q| Ok(s.carrier().coerce(point(q)?))).collect::<RunResult<Vec<_>>>())
                        .collect::<RunResult<Vec<_>>>()?,
                };
                let names: Vec<&str> = witnesses.iter().map(String::as_str).collect();
                match tilde_membership(s, &candidate, &names, &probes)? {
                    Prolongation::Prolongable { values } => {
                        rec.outcome = "prolongable".into();
                        rec.values = Some(values);
                    }
                    Prolongation::Obstructed { witness, probe, values } => {
                        rec.outcome = "obstructed".into();
                        rec.witness = Some(witness);
                        rec.probe = Some(probe);
                        rec.series = Some(values);
                    }
                }
            }
            Command::Spec { samples } => {
                let spec = spec_space(s, samples.unwrap_or(DEFAULT_SPEC_SAMPLES), &[])?;
                if let Carrier::FiniteSet(pts) = spec.carrier() {
                    rec.count = Some(pts.len());
                    rec.points = Some(pts.clone());
                }
            }
            Command::Density { assignment, tol, family, budget } => {
                let a = self.assignment(assignment)?;
                let names: Vec<&str> = family.iter().map(String::as_str).collect();
                let p = density_witness(s, &a, *tol, &names, budget.unwrap_or(DEFAULT_DENSITY_BUDGET))?;
                rec.points = Some(vec![p]);
            }
            Command::Split { func } => {
                let center = self
                    .tilde_centers
                    .get(&target)
                    .ok_or_else(|| Failure(format!("`{target}` was not built with tilde(…)")))?;
                let mut split = tilde_as_union(s, center)?;
                split.set_seed(self.seed);
                let pair = split.register("split", tilde_decompose(s, center, func)?)?;
                let at = Point::Seq(center.clone());
                let mut pts = s.samples(SPLIT_SAMPLES)?;
                pts.push(at.clone());
                let mut gap: f64 = 0.0;
                for q in &pts {
                    let side = if *q == at { Side::Right } else { Side::Left };
                    let v = split.eval_element(&pair, &Point::tagged(side, q.clone()))?;
                    gap = gap.max((v - s.eval_named(func, q)?).abs());
                }
                rec.value = Some(gap);
                rec.count = Some(pts.len());
            }
            Command::Export => {
                let v = serde_json::to_value(s.export()).map_err(|e| Failure(e.to_string()))?;
                rec.space = Some(v);
            }
            Command::Xi { .. } | Command::XiAtlas { .. } => unreachable!("handled above"),
        }
        Ok(())
    }
}

fn assignment(l: &AssignLit) -> GeneratorAssignment {
    GeneratorAssignment::new(l.entries.iter().cloned()).with_tail(l.tail.unwrap_or(0.0))
}

fn point(p: &PointLit) -> RunResult<Point> {
    Ok(match p {
        PointLit::Vec(v) => Point::FiniteVec(v.clone()),
        PointLit::Z(k) => Point::Seq(z(*k)?),
        PointLit::Seq(e) => Point::Seq(SeqPoint::new(e.clone())?),
        PointLit::Zero => Point::Seq(SeqPoint::zero()),
        PointLit::Left(q) => Point::tagged(Side::Left, point(q)?),
        PointLit::Right(q) => Point::tagged(Side::Right, point(q)?),
    })
}

fn seq_point(p: &PointLit) -> RunResult<SeqPoint> {
    match Carrier::sequences().coerce(point(p)?) {
        Point::Seq(s) => Ok(s),
        other => fail(format!("{other} is not a sequence")),
    }
}

fn carrier(e: &SpaceExpr) -> RunResult<Carrier> {
    let (mut c, dim) = match &e.base {
        SpaceBase::Euclid(n) => (Carrier::euclidean(*n), *n),
        SpaceBase::Seq => (Carrier::sequences(), 0),
        SpaceBase::Circle => (Carrier::unit_circle(), 2),
        SpaceBase::Interval(a, b) => (Carrier::open_interval(*a, *b)?, 1),
        SpaceBase::Set(pts) => (Carrier::FiniteSet(pts.iter().map(point).collect::<RunResult<_>>()?), 0),
        _ => return fail("not a carrier literal"),
    };
    for m in &e.mods {
        c = match m {
            Modifier::Minus(pts) => {
                let pts = pts.iter().map(|p| Ok(c.coerce(point(p)?))).collect::<RunResult<Vec<_>>>()?;
                c.minus(pts)?
            }
            Modifier::Where(expr, rel) => {
                let slots: Vec<String> = (1..=dim).map(|i| format!("pi({i})")).collect();
                let map = SmoothMap::new(dim, lower(expr, &slots)?)?;
                let relation = match rel {
                    Rel::Eq => Relation::Zero,
                    Rel::Gt => Relation::Positive,
                    Rel::Ne => Relation::NonZero,
                };
                c.with_constraint(Constraint { map, relation })?
            }
            Modifier::Box(lo, hi) => c.with_sampler(Sampler::Box { lo: *lo, hi: *hi })?,
            Modifier::Sphere(center, radius) => {
                c.with_sampler(Sampler::Sphere { center: center.clone(), radius: *radius })?
            }
        };
    }
    Ok(c)
}

fn define_fn(space: &mut DifferentialSpace, name: &str, def: &FnDef) -> RunResult<()> {
    match def {
        FnDef::Expr(e) => {
            let (map, inputs) = compile(space, e)?;
            let inputs: Vec<&str> = inputs.iter().map(String::as_str).collect();
            space.superpose(name, &map, &inputs)?;
        }
        FnDef::Atlas(pieces) => {
            let mut built = Vec::with_capacity(pieces.len());
            for piece in pieces {
                let (map, inputs) = compile(space, &piece.body)?;
                let bounds = piece
                    .bounds
                    .iter()
                    .map(|(g, lo, hi)| Ok((space.generator_by_name(g)?, OpenInterval::new(*lo, *hi)?)))
                    .collect::<RunResult<Vec<_>>>()?;
                built.push((Region { bounds }, map, inputs));
            }
            let pieces = built
                .iter()
                .map(|(r, m, i)| (r.clone(), m.clone(), i.iter().map(String::as_str).collect()))
                .collect();
            space.from_atlas(name, pieces)?;
        }
        FnDef::XiAtlas(k) => {
            xi_atlas(space, name, *k)?;
        }
        FnDef::CutoffSum(p) => {
            register_xi(space, name, &seq_point(p)?)?;
        }
        FnDef::Pair(a, b) => {
            space.register_pair(name, a, b)?;
        }
    }
    Ok(())
}

/// A smooth map over the leaves of `e`, with those leaves as its inputs.
fn compile(space: &mut DifferentialSpace, e: &Expr) -> RunResult<(SmoothMap, Vec<String>)> {
    let leaves = e.leaves();
    let k = leaves.iter().filter_map(|l| l.strip_prefix("rho(")?.strip_suffix(')')?.parse::<usize>().ok()).max();
    if let Some(k) = k {
        ensure_rho_generators(space, k)?;
    }
    let map = SmoothMap::new(leaves.len(), lower(e, &leaves)?)?;
    Ok((map, leaves))
}

/// Lowers to a library expression with `slots[i]` as slot `i`.
fn lower(e: &Expr, slots: &[String]) -> RunResult<Term> {
    let slot = |name: String| -> RunResult<Term> {
        match slots.iter().position(|s| *s == name) {
            Some(i) => Ok(Term::slot(i)),
            None => fail(format!("`{name}` is not available here")),
        }
    };
    let ball = |c: &[f64], map: SmoothMap| -> RunResult<Term> {
        let inners = (1..=c.len()).map(|i| slot(format!("pi({i})")).map(Arc::new)).collect::<RunResult<Vec<_>>>()?;
        Ok(Term::Compose { outer: Arc::new(map), inners })
    };
    Ok(match e {
        Expr::Num(v) => Term::constant(*v),
        Expr::Name(n) => slot(n.clone())?,
        Expr::Pi(i) => slot(format!("pi({i})"))?,
        Expr::Rho(k) => slot(format!("rho({k})"))?,
        Expr::Hat(n) => slot(format!("hat({n})"))?,
        Expr::Neg(a) => -lower(a, slots)?,
        Expr::Add(a, b) => lower(a, slots)? + lower(b, slots)?,
        Expr::Sub(a, b) => lower(a, slots)? - lower(b, slots)?,
        Expr::Mul(a, b) => lower(a, slots)? * lower(b, slots)?,
        Expr::Div(a, b) => lower(a, slots)? * lower(b, slots)?.recip(Guard::NonZero),
        Expr::Pow(a, n) if *n >= 0 => lower(a, slots)?.powi(*n as u32),
        Expr::Pow(a, n) => lower(a, slots)?.powi(n.unsigned_abs()).recip(Guard::NonZero),
        Expr::Call(f, a) => {
            let a = lower(a, slots)?;
            match f {
                Func::Exp => a.exp(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Cutoff => a.cutoff(),
            }
        }
        Expr::Bump(c, r) => ball(c, bump_ball(c, *r)?)?,
        Expr::Dist2(c) => ball(c, distance_sq(c))?,
    })
}
