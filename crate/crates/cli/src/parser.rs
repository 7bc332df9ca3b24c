//! Recursive-descent parser with name checking. Keywords are contextual, so
//! `space`, `at`, `tol` and friends stay usable as element names.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::*;
use crate::diagnostic::Diagnostic;
use crate::lexer::{lex, Tok, Token};

pub const MAX_DIM: usize = 64;
pub const MAX_ATLAS_K: usize = 100;
pub const MAX_RHO: usize = 1000;
pub const MAX_INDEX: usize = 1_000_000_000;
pub const MAX_EXPONENT: usize = 64;
pub const MAX_SPEC_SAMPLES: usize = 10_000;
pub const MAX_DENSITY_BUDGET: usize = 1_000_000;
pub const MAX_DEPTH: usize = 256;

const STATEMENTS: &[&str] =
    &["space", "gen", "fn", "assign", "samples", "use", "eval", "classify", "xi", "probe", "spec", "density", "split", "export"];

pub fn parse_program(src: &str) -> Result<Program, Diagnostic> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, depth: 0, pending: Vec::new(), scope: Scope::default() };
    p.program()
}

/// What the checker knows about a defined space.
#[derive(Debug, Clone, Default)]
struct SpaceInfo {
    names: BTreeSet<String>,
    /// Projection generators by name.
    projections: BTreeMap<String, usize>,
    /// `pi(i)` resolves for every `i`.
    seq: bool,
    dim: Option<usize>,
    sides: Option<Box<(SpaceInfo, SpaceInfo)>>,
    /// Names are only known at run time.
    open: bool,
}

impl SpaceInfo {
    fn knows(&self, name: &str) -> bool {
        if self.open || self.names.contains(name) {
            return true;
        }
        if let Some(i) = pi_index(name) {
            return self.seq || self.projections.values().any(|&j| j == i);
        }
        if let Some(sides) = &self.sides {
            if let Some(rest) = name.strip_prefix("L.") {
                return sides.0.knows(rest);
            }
            if let Some(rest) = name.strip_prefix("R.") {
                return sides.1.knows(rest);
            }
        }
        false
    }

    /// Projection generators, or raw coordinates `pi(i)` of the carrier.
    fn is_projection(&self, name: &str) -> bool {
        self.open
            || self.projections.contains_key(name)
            || pi_index(name).is_some_and(|i| self.seq || self.dim.is_none_or(|d| i <= d))
    }

    fn add_rho(&mut self, k: usize) {
        for j in 1..=k {
            self.names.insert(format!("rho({j})"));
        }
    }
}

fn pi_index(name: &str) -> Option<usize> {
    name.strip_prefix("pi(")?.strip_suffix(')')?.parse().ok()
}

#[derive(Debug, Default)]
struct Scope {
    spaces: BTreeMap<String, SpaceInfo>,
    active: Option<String>,
    assigns: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Need {
    Element,
    Projection,
    LeftElement,
    RightElement,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
    /// Names to resolve once the statement's target space is known.
    pending: Vec<(String, usize, usize, Need)>,
    scope: Scope,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        (self.peek().line, self.peek().col)
    }

    fn fail<T>(&self, expected: &[&str]) -> PResult<T> {
        let t = self.peek();
        let msg = match expected {
            [one] => format!("expected {one}, found {}", t.tok),
            _ => format!("unexpected {}", t.tok),
        };
        Err(Diagnostic::new(t.line, t.col, msg, expected.iter().map(|s| s.to_string()).collect()))
    }

    fn error_at<T>(&self, line: usize, col: usize, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::new(line, col, msg, Vec::new()))
    }

    fn is(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.is(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if self.is(&tok) {
            Ok(self.bump())
        } else {
            self.fail(&[&format!("`{}`", tok.symbol())])
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.fail(&[&format!("`{kw}`")])
        }
    }

    fn ident(&mut self) -> PResult<(String, usize, usize)> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, t.line, t.col))
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn integer(&mut self, lo: usize, hi: usize) -> PResult<usize> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Number { value, integral: true } => {
                if value < lo as f64 || value > hi as f64 {
                    return self.error_at(t.line, t.col, format!("{value} is outside {lo}..={hi}"));
                }
                self.bump();
                Ok(value as usize)
            }
            _ => self.fail(&["integer"]),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().tok {
            Tok::Number { value, .. } => {
                self.bump();
                Ok(if neg { -value } else { value })
            }
            _ => self.fail(&["number"]),
        }
    }

    /// A number or `inf`, optionally negated.
    fn bound(&mut self) -> PResult<f64> {
        let neg = self.eat(&Tok::Minus);
        let v = if self.eat_kw("inf") {
            f64::INFINITY
        } else {
            match self.peek().tok {
                Tok::Number { value, .. } => {
                    self.bump();
                    value
                }
                _ => return self.fail(&["number", "`inf`"]),
            }
        };
        Ok(if neg { -v } else { v })
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let (l, c) = self.here();
            return self.error_at(l, c, format!("nesting deeper than {MAX_DEPTH}"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    // ---- program ----

    fn program(&mut self) -> PResult<Program> {
        let mut stmts = Vec::new();
        while !self.is(&Tok::Eof) {
            if self.eat(&Tok::Semi) {
                continue;
            }
            let (line, col) = self.here();
            let node = self.statement()?;
            self.check(&node, line, col)?;
            stmts.push(Located { line, col, node });
            if !self.eat(&Tok::Semi) && !self.is(&Tok::Eof) {
                return self.fail(&["`;`"]);
            }
        }
        Ok(Program { stmts })
    }

    fn statement(&mut self) -> PResult<Stmt> {
        self.pending.clear();
        let kw = match &self.peek().tok {
            Tok::Ident(s) if STATEMENTS.contains(&s.as_str()) => s.clone(),
            _ => return self.fail(STATEMENTS),
        };
        self.bump();
        let stmt = match kw.as_str() {
            "space" => {
                let (name, ..) = self.ident()?;
                self.expect(Tok::Eq)?;
                Stmt::Space { name, expr: self.space_expr()? }
            }
            "gen" => self.gen_stmt()?,
            "fn" => {
                let (name, ..) = self.ident()?;
                self.expect(Tok::Eq)?;
                Stmt::Fn { name, def: self.fn_def()? }
            }
            "assign" => {
                let (name, ..) = self.ident()?;
                self.expect(Tok::Eq)?;
                Stmt::Assign { name, lit: self.assign_lit()? }
            }
            "samples" => Stmt::Samples { points: self.point_set()? },
            "use" => {
                let (name, line, col) = self.ident()?;
                self.need_space(&name, line, col)?;
                Stmt::Use { name }
            }
            _ => {
                let cmd = self.command(&kw)?;
                let space = if self.eat_kw("in") {
                    let (name, line, col) = self.ident()?;
                    self.need_space(&name, line, col)?;
                    Some(name)
                } else {
                    None
                };
                Stmt::Command { cmd, space }
            }
        };
        Ok(stmt)
    }

    fn need_space(&self, name: &str, line: usize, col: usize) -> PResult<()> {
        if self.scope.spaces.contains_key(name) {
            Ok(())
        } else {
            self.error_at(line, col, format!("unknown space `{name}`"))
        }
    }

    // ---- spaces ----

    fn space_expr(&mut self) -> PResult<SpaceExpr> {
        let (line, col) = self.here();
        let base = self.space_base()?;
        let mut mods = Vec::new();
        loop {
            let m = if self.eat_kw("minus") {
                Modifier::Minus(self.point_set()?)
            } else if self.eat_kw("where") {
                let e = self.expr()?;
                let rel = if self.eat(&Tok::Eq) {
                    Rel::Eq
                } else if self.eat(&Tok::Gt) {
                    Rel::Gt
                } else if self.eat(&Tok::NotEq) {
                    Rel::Ne
                } else {
                    return self.fail(&["`=`", "`>`", "`!=`"]);
                };
                let t = self.peek().clone();
                if t.tok != (Tok::Number { value: 0.0, integral: true }) {
                    return self.fail(&["`0`"]);
                }
                self.bump();
                Modifier::Where(e, rel)
            } else if self.eat_kw("box") {
                self.expect(Tok::LParen)?;
                let lo = self.number()?;
                self.expect(Tok::Comma)?;
                let hi = self.number()?;
                self.expect(Tok::RParen)?;
                Modifier::Box(lo, hi)
            } else if self.eat_kw("sphere") {
                self.expect(Tok::LParen)?;
                let c = self.vector()?;
                self.expect(Tok::Comma)?;
                let r = self.number()?;
                self.expect(Tok::RParen)?;
                Modifier::Sphere(c, r)
            } else {
                break;
            };
            if !base.is_carrier() {
                return self.error_at(line, col, "modifiers apply only to carrier literals");
            }
            mods.push(m);
        }
        let e = SpaceExpr { base, mods };
        self.check_carrier(&e, line, col)?;
        Ok(e)
    }

    fn space_base(&mut self) -> PResult<SpaceBase> {
        const BASES: &[&str] = &["`R`", "`circle`", "`interval`", "`set`", "`union`", "`restrict`", "`tilde`", "`spec`"];
        let kw = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return self.fail(BASES),
        };
        let base = match kw.as_str() {
            "R" => {
                self.bump();
                self.expect(Tok::Caret)?;
                if self.eat_kw("N") {
                    SpaceBase::Seq
                } else {
                    SpaceBase::Euclid(self.integer(1, MAX_DIM)?)
                }
            }
            "circle" => {
                self.bump();
                SpaceBase::Circle
            }
            "interval" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let (line, col) = self.here();
                let a = self.number()?;
                self.expect(Tok::Comma)?;
                let b = self.number()?;
                self.expect(Tok::RParen)?;
                if !(a < b) {
                    return self.error_at(line, col, format!("empty interval ({a}, {b})"));
                }
                SpaceBase::Interval(a, b)
            }
            "set" => {
                self.bump();
                SpaceBase::Set(self.point_set()?)
            }
            "union" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let (a, l1, c1) = self.ident()?;
                self.need_space(&a, l1, c1)?;
                self.expect(Tok::Comma)?;
                let (b, l2, c2) = self.ident()?;
                self.need_space(&b, l2, c2)?;
                self.expect(Tok::RParen)?;
                if self.scope.spaces[&a].sides.is_some() || self.scope.spaces[&b].sides.is_some() {
                    return self.error_at(l1, c1, "union sides must not be unions");
                }
                SpaceBase::Union(a, b)
            }
            "restrict" => {
                self.bump();
                let (a, line, col) = self.ident()?;
                self.need_space(&a, line, col)?;
                if self.scope.spaces[&a].sides.is_some() {
                    return self.error_at(line, col, "restrict a union side instead");
                }
                self.expect_kw("to")?;
                let (l2, c2) = self.here();
                let inner = self.space_expr()?;
                if !inner.base.is_carrier() {
                    return self.error_at(l2, c2, "restriction target must be a carrier literal");
                }
                SpaceBase::Restrict(a, Box::new(inner))
            }
            "tilde" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let p = self.point()?;
                self.expect(Tok::RParen)?;
                SpaceBase::Tilde(p)
            }
            "spec" => {
                self.bump();
                let (a, line, col) = self.ident()?;
                self.need_space(&a, line, col)?;
                let n = if self.eat(&Tok::LBracket) {
                    let n = self.integer(1, MAX_SPEC_SAMPLES)?;
                    self.expect(Tok::RBracket)?;
                    Some(n)
                } else {
                    None
                };
                SpaceBase::Spec(a, n)
            }
            _ => return self.fail(BASES),
        };
        Ok(base)
    }

    /// Constraints are maps of the ambient coordinates `pi(1..dim)`.
    fn check_carrier(&self, e: &SpaceExpr, line: usize, col: usize) -> PResult<()> {
        let dim = match e.base {
            SpaceBase::Euclid(n) => Some(n),
            SpaceBase::Circle => Some(2),
            SpaceBase::Interval(..) => Some(1),
            _ => None,
        };
        for m in &e.mods {
            match m {
                Modifier::Where(expr, _) => {
                    let Some(dim) = dim else {
                        return self.error_at(line, col, "constraints need a finite-dimensional carrier");
                    };
                    for leaf in expr.leaves() {
                        match pi_index(&leaf) {
                            Some(i) if i <= dim => {}
                            _ => return self.error_at(line, col, format!("constraint leaf `{leaf}` is not one of pi(1..{dim})")),
                        }
                    }
                }
                Modifier::Box(..) | Modifier::Sphere(..) if dim.is_none() => {
                    return self.error_at(line, col, "samplers need a finite-dimensional carrier");
                }
                Modifier::Sphere(c, _) if Some(c.len()) != dim => {
                    return self.error_at(line, col, "sphere centre does not match the dimension");
                }
                _ => {}
            }
        }
        Ok(())
    }

    // ---- points ----

    fn point_set(&mut self) -> PResult<Vec<PointLit>> {
        self.expect(Tok::LBrace)?;
        let mut pts = vec![self.point()?];
        while self.eat(&Tok::Comma) {
            pts.push(self.point()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(pts)
    }

    fn vector(&mut self) -> PResult<Vec<f64>> {
        self.expect(Tok::LParen)?;
        let mut v = vec![self.number()?];
        while self.eat(&Tok::Comma) {
            v.push(self.number()?);
        }
        self.expect(Tok::RParen)?;
        Ok(v)
    }

    fn point(&mut self) -> PResult<PointLit> {
        const POINTS: &[&str] = &["`(`", "`z`", "`seq`", "`0`", "`left`", "`right`"];
        self.enter()?;
        let p = match &self.peek().tok {
            Tok::LParen => PointLit::Vec(self.vector()?),
            Tok::Number { value, integral: true } if *value == 0.0 => {
                self.bump();
                PointLit::Zero
            }
            Tok::Ident(s) if s == "z" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let k = self.integer(1, MAX_INDEX)?;
                self.expect(Tok::RParen)?;
                PointLit::Z(k)
            }
            Tok::Ident(s) if s == "seq" => {
                self.bump();
                self.expect(Tok::LBrace)?;
                let mut entries: Vec<(usize, f64)> = Vec::new();
                if !self.is(&Tok::RBrace) {
                    loop {
                        let (line, col) = self.here();
                        let i = self.integer(1, MAX_INDEX)?;
                        if entries.iter().any(|e| e.0 == i) {
                            return self.error_at(line, col, format!("index {i} repeated"));
                        }
                        self.expect(Tok::Colon)?;
                        entries.push((i, self.number()?));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBrace)?;
                PointLit::Seq(entries)
            }
            Tok::Ident(s) if s == "left" || s == "right" => {
                let left = s == "left";
                self.bump();
                self.expect(Tok::LParen)?;
                let inner = Box::new(self.point()?);
                self.expect(Tok::RParen)?;
                if left {
                    PointLit::Left(inner)
                } else {
                    PointLit::Right(inner)
                }
            }
            _ => return self.fail(POINTS),
        };
        self.leave();
        Ok(p)
    }

    // ---- names ----

    /// `name`, `pi(i)`, `rho(k)` or `hat(name)`, optionally with a dotted prefix.
    fn name_ref(&mut self) -> PResult<(String, usize, usize)> {
        self.enter()?;
        let (id, line, col) = self.ident()?;
        let last = id.rsplit('.').next().unwrap_or(&id).to_string();
        let out = if self.is(&Tok::LParen) && (last == "pi" || last == "rho") {
            self.bump();
            let hi = if last == "rho" { MAX_RHO } else { MAX_INDEX };
            let i = self.integer(1, hi)?;
            self.expect(Tok::RParen)?;
            format!("{id}({i})")
        } else if self.is(&Tok::LParen) && last == "hat" {
            self.bump();
            let (inner, ..) = self.name_ref()?;
            self.expect(Tok::RParen)?;
            format!("{id}({inner})")
        } else {
            id
        };
        self.leave();
        Ok((out, line, col))
    }

    fn element_ref(&mut self) -> PResult<String> {
        let (name, line, col) = self.name_ref()?;
        self.pending.push((name.clone(), line, col, Need::Element));
        Ok(name)
    }

    // ---- generators and elements ----

    fn gen_stmt(&mut self) -> PResult<Stmt> {
        let mut defs = Vec::new();
        loop {
            let (name, ..) = self.ident()?;
            self.expect(Tok::Eq)?;
            let (line, col) = self.here();
            let def = if self.is_kw("theta") && self.peek_at(1) == &Tok::LParen {
                self.bump();
                self.bump();
                let p = self.point()?;
                self.expect(Tok::RParen)?;
                GenDef::Theta(p)
            } else {
                match self.expr()? {
                    Expr::Pi(i) => GenDef::Proj(i),
                    e => {
                        for leaf in e.leaves() {
                            self.pending.push((leaf, line, col, Need::Projection));
                        }
                        GenDef::Expr(e)
                    }
                }
            };
            defs.push((name, def));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(Stmt::Gen { defs })
    }

    fn fn_def(&mut self) -> PResult<FnDef> {
        let next_is = |p: &Parser, t: Tok| p.peek_at(1) == &t;
        if self.is_kw("atlas") && next_is(self, Tok::LBrace) {
            self.bump();
            self.bump();
            let mut pieces = vec![self.piece()?];
            while self.eat(&Tok::Bar) {
                pieces.push(self.piece()?);
            }
            self.expect(Tok::RBrace)?;
            return Ok(FnDef::Atlas(pieces));
        }
        if self.is_kw("xi_atlas") && next_is(self, Tok::LParen) {
            self.bump();
            self.bump();
            let k = self.integer(2, MAX_ATLAS_K)?;
            self.expect(Tok::RParen)?;
            return Ok(FnDef::XiAtlas(k));
        }
        if self.is_kw("cutoffsum") && next_is(self, Tok::LParen) {
            self.bump();
            self.bump();
            let p = self.point()?;
            self.expect(Tok::RParen)?;
            return Ok(FnDef::CutoffSum(p));
        }
        if self.is_kw("pair") && next_is(self, Tok::LParen) {
            self.bump();
            self.bump();
            let (a, l1, c1) = self.name_ref()?;
            self.expect(Tok::Comma)?;
            let (b, l2, c2) = self.name_ref()?;
            self.expect(Tok::RParen)?;
            self.pending.push((a.clone(), l1, c1, Need::LeftElement));
            self.pending.push((b.clone(), l2, c2, Need::RightElement));
            return Ok(FnDef::Pair(a, b));
        }
        let (line, col) = self.here();
        let e = self.expr()?;
        for leaf in e.leaves() {
            self.pending.push((leaf, line, col, Need::Element));
        }
        Ok(FnDef::Expr(e))
    }

    fn piece(&mut self) -> PResult<Piece> {
        let mut bounds = Vec::new();
        if self.is_kw("all") && self.peek_at(1) == &Tok::Arrow {
            self.bump();
        } else {
            loop {
                let (g, line, col) = self.name_ref()?;
                self.pending.push((g.clone(), line, col, Need::Element));
                self.expect_kw("in")?;
                self.expect(Tok::LParen)?;
                let (l2, c2) = self.here();
                let lo = self.bound()?;
                self.expect(Tok::Comma)?;
                let hi = self.bound()?;
                self.expect(Tok::RParen)?;
                if !(lo < hi) {
                    return self.error_at(l2, c2, format!("empty interval ({lo}, {hi})"));
                }
                bounds.push((g, lo, hi));
                if !self.eat_kw("and") {
                    break;
                }
            }
        }
        self.expect(Tok::Arrow)?;
        let (line, col) = self.here();
        let body = self.expr()?;
        for leaf in body.leaves() {
            self.pending.push((leaf, line, col, Need::Element));
        }
        Ok(Piece { bounds, body })
    }

    // ---- assignments ----

    fn assign_lit(&mut self) -> PResult<AssignLit> {
        self.expect(Tok::LBrace)?;
        let mut lit = AssignLit::default();
        if !self.is(&Tok::RBrace) {
            loop {
                let (line, col) = self.here();
                if self.eat(&Tok::Star) {
                    if lit.tail.is_some() {
                        return self.error_at(line, col, "tail given twice");
                    }
                    self.expect(Tok::Colon)?;
                    lit.tail = Some(self.number()?);
                } else {
                    let (key, line, col) = self.name_ref()?;
                    if lit.entries.iter().any(|e| e.0 == key) {
                        return self.error_at(line, col, format!("`{key}` assigned twice"));
                    }
                    self.expect(Tok::Colon)?;
                    let v = self.number()?;
                    lit.entries.push((key, v));
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(lit)
    }

    fn assign_ref(&mut self) -> PResult<AssignRef> {
        if self.is(&Tok::LBrace) {
            let lit = self.assign_lit()?;
            // keys of literal assignments are checked against the target space
            if let Some(t) = self.toks.get(self.pos) {
                let (line, col) = (t.line, t.col);
                for (k, _) in &lit.entries {
                    self.pending.push((k.clone(), line, col, Need::Element));
                }
            }
            return Ok(AssignRef::Lit(lit));
        }
        if let Tok::Ident(_) = self.peek().tok {
            let (name, line, col) = self.ident()?;
            if !self.scope.assigns.contains(&name) {
                return self.error_at(line, col, format!("unknown assignment `{name}`"));
            }
            return Ok(AssignRef::Named(name));
        }
        self.fail(&["assignment name", "`{`"])
    }

    // ---- commands ----

    fn command(&mut self, kw: &str) -> PResult<Command> {
        Ok(match kw {
            "eval" => {
                let func = self.element_ref()?;
                if self.eat_kw("at") {
                    Command::EvalAt { func, point: self.point()? }
                } else if self.eat_kw("under") {
                    Command::EvalUnder { func, assignment: self.assign_ref()? }
                } else {
                    return self.fail(&["`at`", "`under`"]);
                }
            }
            "classify" => Command::Classify { assignment: self.assign_ref()? },
            "xi" => {
                if self.eat_kw("at") {
                    Command::Xi { point: self.point()? }
                } else if self.eat_kw("atlas") {
                    let k = self.integer(2, MAX_ATLAS_K)?;
                    self.expect_kw("at")?;
                    Command::XiAtlas { k, point: self.point()? }
                } else {
                    return self.fail(&["`at`", "`atlas`"]);
                }
            }
            "probe" => {
                let mut witnesses = vec![self.element_ref()?];
                while self.eat(&Tok::Comma) {
                    witnesses.push(self.element_ref()?);
                }
                self.expect_kw("toward")?;
                let toward = self.point()?;
                self.expect_kw("along")?;
                let along = if self.eat_kw("z") {
                    Along::Z
                } else {
                    let mut paths = vec![self.path()?];
                    while self.eat(&Tok::Comma) {
                        paths.push(self.path()?);
                    }
                    Along::Paths(paths)
                };
                Command::Probe { witnesses, toward, along }
            }
            "spec" => {
                let samples = match self.peek().tok {
                    Tok::Number { .. } => Some(self.integer(1, MAX_SPEC_SAMPLES)?),
                    _ => None,
                };
                Command::Spec { samples }
            }
            "density" => {
                let assignment = self.assign_ref()?;
                self.expect_kw("tol")?;
                let (line, col) = self.here();
                let tol = self.number()?;
                if !(tol > 0.0) {
                    return self.error_at(line, col, "tolerance must be positive");
                }
                self.expect_kw("family")?;
                self.expect(Tok::LBrace)?;
                let mut family = vec![self.element_ref()?];
                while self.eat(&Tok::Comma) {
                    family.push(self.element_ref()?);
                }
                self.expect(Tok::RBrace)?;
                let budget = if self.eat_kw("budget") { Some(self.integer(1, MAX_DENSITY_BUDGET)?) } else { None };
                Command::Density { assignment, tol, family, budget }
            }
            "split" => Command::Split { func: self.element_ref()? },
            "export" => Command::Export,
            _ => unreachable!("statement keywords are filtered"),
        })
    }

    fn path(&mut self) -> PResult<Vec<PointLit>> {
        self.expect(Tok::LBracket)?;
        let mut pts = vec![self.point()?];
        while self.eat(&Tok::Comma) {
            pts.push(self.point()?);
        }
        self.expect(Tok::RBracket)?;
        Ok(pts)
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&Tok::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                break;
            }
        }
        self.leave();
        Ok(lhs)
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&Tok::Star) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(&Tok::Slash) {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        self.enter()?;
        let e = if self.eat(&Tok::Minus) {
            match self.unary()? {
                Expr::Num(v) => Expr::Num(-v),
                e => Expr::Neg(Box::new(e)),
            }
        } else {
            self.power()?
        };
        self.leave();
        Ok(e)
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.primary()?;
        if !self.eat(&Tok::Caret) {
            return Ok(base);
        }
        let neg = self.eat(&Tok::Minus);
        let n = self.integer(0, MAX_EXPONENT)? as i32;
        Ok(Expr::Pow(Box::new(base), if neg { -n } else { n }))
    }

    fn primary(&mut self) -> PResult<Expr> {
        const PRIMARIES: &[&str] = &["number", "identifier", "`(`", "`-`"];
        let t = self.peek().clone();
        match t.tok {
            Tok::Number { value, .. } => {
                self.bump();
                Ok(Expr::Num(value))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(ref id) => {
                let call = self.peek_at(1) == &Tok::LParen;
                if call {
                    if let Some(func) = Func::from_name(id) {
                        self.bump();
                        let args = self.call_args()?;
                        return match <[Expr; 1]>::try_from(args) {
                            Ok([a]) => Ok(Expr::Call(func, Box::new(a))),
                            Err(args) => self.error_at(t.line, t.col, format!("`{id}` takes 1 argument, got {}", args.len())),
                        };
                    }
                    match id.as_str() {
                        "bump" => {
                            self.bump();
                            self.expect(Tok::LParen)?;
                            let c = self.vector()?;
                            self.expect(Tok::Comma)?;
                            let (line, col) = self.here();
                            let r = self.number()?;
                            if !(r > 0.0) {
                                return self.error_at(line, col, "bump radius must be positive");
                            }
                            self.expect(Tok::RParen)?;
                            return Ok(Expr::Bump(c, r));
                        }
                        "dist2" => {
                            self.bump();
                            self.expect(Tok::LParen)?;
                            let c = self.vector()?;
                            self.expect(Tok::RParen)?;
                            return Ok(Expr::Dist2(c));
                        }
                        _ => {}
                    }
                    let last = id.rsplit('.').next().unwrap_or(id);
                    if !matches!(last, "pi" | "rho" | "hat") {
                        return self.error_at(t.line, t.col, format!("unknown function `{id}`"));
                    }
                    let (name, ..) = self.name_ref()?;
                    return Ok(if let Some(i) = pi_index(&name) {
                        Expr::Pi(i)
                    } else if let Some(k) = name.strip_prefix("rho(").and_then(|r| r.strip_suffix(')')) {
                        Expr::Rho(k.parse().expect("integer checked by name_ref"))
                    } else if let Some(inner) = name.strip_prefix("hat(").and_then(|r| r.strip_suffix(')')) {
                        Expr::Hat(inner.to_string())
                    } else {
                        Expr::Name(name)
                    });
                }
                self.bump();
                Ok(Expr::Name(id.clone()))
            }
            _ => self.fail(PRIMARIES),
        }
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.is(&Tok::RParen) {
            args.push(self.expr()?);
            while self.eat(&Tok::Comma) {
                args.push(self.expr()?);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    // ---- checking ----

    fn check(&mut self, stmt: &Stmt, line: usize, col: usize) -> PResult<()> {
        let pending = std::mem::take(&mut self.pending);
        match stmt {
            Stmt::Space { name, expr } => {
                if self.scope.spaces.contains_key(name) {
                    return self.error_at(line, col, format!("space `{name}` is already defined"));
                }
                let info = self.space_info(expr);
                self.scope.spaces.insert(name.clone(), info);
                self.scope.active = Some(name.clone());
                return Ok(());
            }
            Stmt::Assign { name, .. } => {
                self.scope.assigns.insert(name.clone());
                return Ok(());
            }
            Stmt::Use { name } => {
                self.scope.active = Some(name.clone());
                return Ok(());
            }
            Stmt::Command { cmd, .. } if !cmd.uses_space() => return Ok(()),
            _ => {}
        }
        let target = match stmt {
            Stmt::Command { space: Some(s), .. } => s.clone(),
            _ => match &self.scope.active {
                Some(s) => s.clone(),
                None => return self.error_at(line, col, "no space is defined yet"),
            },
        };
        let info = self.scope.spaces.get(&target).cloned().expect("checked space");
        for (name, l, c, need) in pending {
            let ok = match need {
                Need::Element => info.knows(&name),
                Need::Projection => info.is_projection(&name),
                Need::LeftElement | Need::RightElement => match &info.sides {
                    Some(sides) => {
                        let side = if need == Need::LeftElement { &sides.0 } else { &sides.1 };
                        side.knows(&name)
                    }
                    None => return self.error_at(l, c, format!("`{target}` is not a union")),
                },
            };
            if !ok {
                let what = if need == Need::Projection { "projection generator" } else { "name" };
                return self.error_at(l, c, format!("unknown {what} `{name}` in space `{target}`"));
            }
        }
        let info = self.scope.spaces.get_mut(&target).expect("checked space");
        let mut define = |name: &str| -> PResult<()> {
            if !info.open && info.names.contains(name) {
                return Err(Diagnostic::new(line, col, format!("`{name}` is already defined in `{target}`"), Vec::new()));
            }
            info.names.insert(name.to_string());
            Ok(())
        };
        match stmt {
            Stmt::Gen { defs } => {
                for (name, def) in defs {
                    define(name)?;
                    if let GenDef::Proj(i) = def {
                        if let Some(d) = info.dim {
                            if *i > d {
                                return self.error_at(line, col, format!("pi({i}) exceeds dimension {d}"));
                            }
                        }
                        info.projections.insert(name.clone(), *i);
                    }
                }
            }
            Stmt::Fn { name, def } => {
                define(name)?;
                let rho_max = match def {
                    FnDef::XiAtlas(k) => *k,
                    FnDef::Expr(e) => max_rho(e),
                    FnDef::Atlas(pieces) => pieces.iter().map(|p| max_rho(&p.body)).max().unwrap_or(0),
                    _ => 0,
                };
                info.add_rho(rho_max);
            }
            Stmt::Command { cmd: Command::XiAtlas { k, .. }, .. } => info.add_rho(*k),
            _ => {}
        }
        Ok(())
    }

    fn space_info(&self, e: &SpaceExpr) -> SpaceInfo {
        let mut info = SpaceInfo::default();
        match &e.base {
            SpaceBase::Euclid(n) => info.dim = Some(*n),
            SpaceBase::Circle => info.dim = Some(2),
            SpaceBase::Interval(..) => info.dim = Some(1),
            SpaceBase::Seq => info.seq = true,
            SpaceBase::Set(pts) => {
                if let Some(PointLit::Vec(v)) = pts.first() {
                    info.dim = Some(v.len());
                }
            }
            SpaceBase::Union(a, b) => {
                let (l, r) = (self.scope.spaces[a].clone(), self.scope.spaces[b].clone());
                info.names.insert("unit_L".into());
                info.names.insert("unit_R".into());
                info.open = l.open || r.open;
                info.sides = Some(Box::new((l, r)));
            }
            SpaceBase::Restrict(a, _) => info = self.scope.spaces[a].clone(),
            SpaceBase::Tilde(_) => {
                info.seq = true;
                info.names.insert("theta".into());
            }
            SpaceBase::Spec(..) => info.open = true,
        }
        info
    }
}

fn max_rho(e: &Expr) -> usize {
    match e {
        Expr::Rho(k) => *k,
        Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => max_rho(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => max_rho(a).max(max_rho(b)),
        _ => 0,
    }
}
