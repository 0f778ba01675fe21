//! Line-oriented workspace files.
//!
//! ```text
//! ring <id> (Z | Zmod <n> | Fp <p>)
//! module <id> over <ring-id> gens <g> rels [[r11,...],...]
//! map <id> : <mod-id> -> <mod-id> matrix [[...],...]
//! complex <id> over <ring-id> degrees <lo>..<hi> object <n> <mod-id> ... diff <n> <map-id> ...
//! complex <id> over <ring-id> (sphere | disk) <n> <mod-id>
//! chainmap <id> : <cx-id> -> <cx-id> comp <n> <map-id> ...
//! quiver <id> vertices v1:<ring-id> ... edges e1: v->w ringmap [1] ...
//! repmodule <id> over <quiver-id> at v1 <mod-id> ... edge e1 <map-id> ...
//! liftproblem <id> i <chainmap-id> p <chainmap-id> top <chainmap-id> bottom <chainmap-id>
//! ```
//!
//! Each inner list of `rels` is one relation; `matrix` lists rows. A declaration runs until
//! the next top-level keyword, so blocks may span lines. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;

use crate::complex::{ChainComplex, ChainMap};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::LiftProblem;
use crate::module::{FpModule, ModuleMap};
use crate::quiver::{QuiverRep, QuiverRepModule};
use crate::ring::Ring;

const KEYWORDS: [&str; 8] = ["ring", "module", "map", "complex", "chainmap", "quiver", "repmodule", "liftproblem"];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Int(BigInt),
    Colon,
    Arrow,
    Open,
    Close,
    Comma,
    DotDot,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line, col });
            match c {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                ':' => {
                    push(&mut out, Tok::Colon);
                    i += 1;
                }
                '[' => {
                    push(&mut out, Tok::Open);
                    i += 1;
                }
                ']' => {
                    push(&mut out, Tok::Close);
                    i += 1;
                }
                ',' => {
                    push(&mut out, Tok::Comma);
                    i += 1;
                }
                '.' if chars.get(i + 1) == Some(&'.') => {
                    push(&mut out, Tok::DotDot);
                    i += 2;
                }
                '-' if chars.get(i + 1) == Some(&'>') => {
                    push(&mut out, Tok::Arrow);
                    i += 2;
                }
                c if c.is_ascii_digit() || c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) => {
                    let start = i;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    push(&mut out, Tok::Int(s.parse().expect("digits")));
                }
                c if c.is_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                        i += 1;
                    }
                    push(&mut out, Tok::Word(chars[start..i].iter().collect()));
                }
                _ => return Err(parse_err(line, col, format!("unexpected character '{c}'"))),
            }
        }
    }
    Ok(out)
}

struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Cursor {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.col)).unwrap_or(self.end)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (l, c) = self.here();
        parse_err(l, c, msg)
    }

    fn at_decl_end(&self) -> bool {
        match self.peek() {
            None => true,
            Some(Token { tok: Tok::Word(w), .. }) => KEYWORDS.contains(&w.as_str()),
            _ => false,
        }
    }

    fn next(&mut self, what: &str) -> Result<Token> {
        let t = self.peek().cloned().ok_or_else(|| self.err(format!("expected {what}, found end of input")))?;
        self.pos += 1;
        Ok(t)
    }

    fn word(&mut self, what: &str) -> Result<(String, usize, usize)> {
        let t = self.next(what)?;
        match t.tok {
            Tok::Word(w) => Ok((w, t.line, t.col)),
            other => Err(parse_err(t.line, t.col, format!("expected {what}, found {other:?}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let (w, l, c) = self.word(&format!("'{kw}'"))?;
        if w != kw {
            return Err(parse_err(l, c, format!("expected '{kw}', found '{w}'")));
        }
        Ok(())
    }

    fn is_word(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Word(w), .. }) if w == kw)
    }

    fn int(&mut self, what: &str) -> Result<BigInt> {
        let t = self.next(what)?;
        match t.tok {
            Tok::Int(n) => Ok(n),
            other => Err(parse_err(t.line, t.col, format!("expected {what}, found {other:?}"))),
        }
    }

    fn small(&mut self, what: &str) -> Result<i64> {
        let (l, c) = self.here();
        let n = self.int(what)?;
        i64::try_from(&n).map_err(|_| parse_err(l, c, format!("{what} out of range")))
    }

    fn sym(&mut self, s: Tok, what: &str) -> Result<()> {
        let t = self.next(what)?;
        if t.tok != s {
            return Err(parse_err(t.line, t.col, format!("expected {what}, found {:?}", t.tok)));
        }
        Ok(())
    }

    fn int_list(&mut self) -> Result<Vec<BigInt>> {
        self.sym(Tok::Open, "'['")?;
        let mut out = Vec::new();
        if matches!(self.peek(), Some(Token { tok: Tok::Close, .. })) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.int("integer")?);
            let t = self.next("',' or ']'")?;
            match t.tok {
                Tok::Comma => continue,
                Tok::Close => return Ok(out),
                other => return Err(parse_err(t.line, t.col, format!("expected ',' or ']', found {other:?}"))),
            }
        }
    }

    fn nested_list(&mut self) -> Result<Vec<Vec<BigInt>>> {
        self.sym(Tok::Open, "'['")?;
        let mut out = Vec::new();
        if matches!(self.peek(), Some(Token { tok: Tok::Close, .. })) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.int_list()?);
            let t = self.next("',' or ']'")?;
            match t.tok {
                Tok::Comma => continue,
                Tok::Close => return Ok(out),
                other => return Err(parse_err(t.line, t.col, format!("expected ',' or ']', found {other:?}"))),
            }
        }
    }
}

/// Where a name was used, for dangling-reference diagnostics. Compares by name only.
#[derive(Clone, Debug)]
pub struct Ref {
    pub id: String,
    pub line: usize,
    pub col: usize,
}

impl Ref {
    fn new((id, line, col): (String, usize, usize)) -> Ref {
        Ref { id, line, col }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RingDecl {
    Z,
    Zmod(BigInt),
    Fp(BigInt),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComplexBody {
    Explicit { lo: i64, hi: i64, objects: Vec<(i64, Ref)>, diffs: Vec<(i64, Ref)> },
    Sphere(i64, Ref),
    Disk(i64, Ref),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Ring { id: String, ring: RingDecl },
    Module { id: String, ring: Ref, gens: usize, rels: Vec<Vec<BigInt>> },
    Map { id: String, source: Ref, target: Ref, rows: Vec<Vec<BigInt>> },
    Complex { id: String, ring: Ref, body: ComplexBody },
    ChainMap { id: String, source: Ref, target: Ref, comps: Vec<(i64, Ref)> },
    Quiver { id: String, vertices: Vec<(String, Ref)>, edges: Vec<(String, String, String, Vec<BigInt>)> },
    RepModule { id: String, quiver: Ref, at: Vec<(String, Ref)>, edges: Vec<(String, Ref)> },
    LiftProblem { id: String, i: Ref, p: Ref, top: Ref, bottom: Ref },
}

impl Decl {
    pub fn id(&self) -> &str {
        match self {
            Decl::Ring { id, .. }
            | Decl::Module { id, .. }
            | Decl::Map { id, .. }
            | Decl::Complex { id, .. }
            | Decl::ChainMap { id, .. }
            | Decl::Quiver { id, .. }
            | Decl::RepModule { id, .. }
            | Decl::LiftProblem { id, .. } => id,
        }
    }
}

fn parse_decl(c: &mut Cursor) -> Result<Decl> {
    let (kw, l, col) = c.word("declaration keyword")?;
    let id = c.word("identifier")?.0;
    let d = match kw.as_str() {
        "ring" => {
            let (k, l2, c2) = c.word("ring kind")?;
            let ring = match k.as_str() {
                "Z" => RingDecl::Z,
                "Zmod" => RingDecl::Zmod(c.int("modulus")?),
                "Fp" => RingDecl::Fp(c.int("prime")?),
                _ => return Err(parse_err(l2, c2, format!("unknown ring kind '{k}'"))),
            };
            Decl::Ring { id, ring }
        }
        "module" => {
            c.keyword("over")?;
            let ring = Ref::new(c.word("ring identifier")?);
            c.keyword("gens")?;
            let (l2, c2) = c.here();
            let gens = usize::try_from(c.int("generator count")?).map_err(|_| parse_err(l2, c2, "generator count out of range"))?;
            let rels = if c.is_word("rels") {
                c.keyword("rels")?;
                c.nested_list()?
            } else {
                vec![]
            };
            Decl::Module { id, ring, gens, rels }
        }
        "map" => {
            c.sym(Tok::Colon, "':'")?;
            let source = Ref::new(c.word("module identifier")?);
            c.sym(Tok::Arrow, "'->'")?;
            let target = Ref::new(c.word("module identifier")?);
            c.keyword("matrix")?;
            let rows = c.nested_list()?;
            Decl::Map { id, source, target, rows }
        }
        "complex" => {
            c.keyword("over")?;
            let ring = Ref::new(c.word("ring identifier")?);
            let (form, l2, c2) = c.word("'degrees', 'sphere' or 'disk'")?;
            let body = match form.as_str() {
                "sphere" | "disk" => {
                    let n = c.small("degree")?;
                    let m = Ref::new(c.word("module identifier")?);
                    if form == "sphere" {
                        ComplexBody::Sphere(n, m)
                    } else {
                        ComplexBody::Disk(n, m)
                    }
                }
                "degrees" => {
                    let lo = c.small("lowest degree")?;
                    c.sym(Tok::DotDot, "'..'")?;
                    let hi = c.small("highest degree")?;
                    let (mut objects, mut diffs) = (Vec::new(), Vec::new());
                    while !c.at_decl_end() {
                        let (w, l3, c3) = c.word("'object' or 'diff'")?;
                        let n = c.small("degree")?;
                        let r = Ref::new(c.word("identifier")?);
                        match w.as_str() {
                            "object" => objects.push((n, r)),
                            "diff" => diffs.push((n, r)),
                            _ => return Err(parse_err(l3, c3, format!("expected 'object' or 'diff', found '{w}'"))),
                        }
                    }
                    ComplexBody::Explicit { lo, hi, objects, diffs }
                }
                _ => return Err(parse_err(l2, c2, format!("expected 'degrees', 'sphere' or 'disk', found '{form}'"))),
            };
            Decl::Complex { id, ring, body }
        }
        "chainmap" => {
            c.sym(Tok::Colon, "':'")?;
            let source = Ref::new(c.word("complex identifier")?);
            c.sym(Tok::Arrow, "'->'")?;
            let target = Ref::new(c.word("complex identifier")?);
            let mut comps = Vec::new();
            while !c.at_decl_end() {
                c.keyword("comp")?;
                let n = c.small("degree")?;
                comps.push((n, Ref::new(c.word("map identifier")?)));
            }
            Decl::ChainMap { id, source, target, comps }
        }
        "quiver" => {
            c.keyword("vertices")?;
            let mut vertices = Vec::new();
            while !c.is_word("edges") && !c.at_decl_end() {
                let v = c.word("vertex name")?.0;
                c.sym(Tok::Colon, "':'")?;
                vertices.push((v, Ref::new(c.word("ring identifier")?)));
            }
            let mut edges = Vec::new();
            if c.is_word("edges") {
                c.keyword("edges")?;
                while !c.at_decl_end() {
                    let e = c.word("edge name")?.0;
                    c.sym(Tok::Colon, "':'")?;
                    let v = c.word("vertex name")?.0;
                    c.sym(Tok::Arrow, "'->'")?;
                    let w = c.word("vertex name")?.0;
                    c.keyword("ringmap")?;
                    edges.push((e, v, w, c.int_list()?));
                }
            }
            Decl::Quiver { id, vertices, edges }
        }
        "repmodule" => {
            c.keyword("over")?;
            let quiver = Ref::new(c.word("quiver identifier")?);
            let (mut at, mut edges) = (Vec::new(), Vec::new());
            while !c.at_decl_end() {
                let (w, l3, c3) = c.word("'at' or 'edge'")?;
                let name = c.word("name")?.0;
                let r = Ref::new(c.word("identifier")?);
                match w.as_str() {
                    "at" => at.push((name, r)),
                    "edge" => edges.push((name, r)),
                    _ => return Err(parse_err(l3, c3, format!("expected 'at' or 'edge', found '{w}'"))),
                }
            }
            Decl::RepModule { id, quiver, at, edges }
        }
        "liftproblem" => {
            c.keyword("i")?;
            let i = Ref::new(c.word("chain map identifier")?);
            c.keyword("p")?;
            let p = Ref::new(c.word("chain map identifier")?);
            c.keyword("top")?;
            let top = Ref::new(c.word("chain map identifier")?);
            c.keyword("bottom")?;
            let bottom = Ref::new(c.word("chain map identifier")?);
            Decl::LiftProblem { id, i, p, top, bottom }
        }
        _ => return Err(parse_err(l, col, format!("unknown declaration '{kw}'"))),
    };
    if !c.at_decl_end() {
        return Err(c.err(format!("unexpected token in declaration of '{}'", d.id())));
    }
    Ok(d)
}

/// A map as written; validated as a module map once both ends share a ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawMap {
    pub source: FpModule,
    pub target: FpModule,
    pub matrix: Matrix,
}

impl RawMap {
    pub fn module_map(&self) -> Result<ModuleMap> {
        if self.source.ring() != self.target.ring() {
            return Err(Error::RingMismatch(format!("map {} -> {} changes rings", self.source.ring(), self.target.ring())));
        }
        ModuleMap::new(self.source.clone(), self.target.clone(), self.matrix.clone())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Workspace {
    pub decls: Vec<Decl>,
    pub rings: BTreeMap<String, Ring>,
    pub modules: BTreeMap<String, FpModule>,
    pub maps: BTreeMap<String, RawMap>,
    pub complexes: BTreeMap<String, ChainComplex>,
    pub chainmaps: BTreeMap<String, ChainMap>,
    pub quivers: BTreeMap<String, QuiverRep>,
    pub repmodules: BTreeMap<String, QuiverRepModule>,
    pub problems: BTreeMap<String, LiftProblem>,
}

impl PartialEq for Workspace {
    fn eq(&self, other: &Workspace) -> bool {
        self.decls == other.decls
    }
}

fn lookup<'a, T>(table: &'a BTreeMap<String, T>, r: &Ref, kind: &str) -> Result<&'a T> {
    table.get(&r.id).ok_or_else(|| parse_err(r.line, r.col, format!("undefined {kind} '{}'", r.id)))
}

fn invalid(id: &str, e: Error) -> Error {
    Error::Validation(format!("{id}: {}", e.to_string().trim_start_matches("validation error: ")))
}

fn rows_matrix(ring: &Ring, rows: &[Vec<BigInt>], nrows: usize, ncols: usize, id: &str) -> Result<Matrix> {
    if rows.is_empty() && (nrows == 0 || ncols == 0) {
        return Ok(Matrix::zero(ring, nrows, ncols));
    }
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Validation(format!("{id}: matrix must be {nrows}×{ncols}")));
    }
    Matrix::new(ring, nrows, ncols, rows.concat())
}

impl Workspace {
    fn insert_check(&self, id: &str, line: usize, col: usize) -> Result<()> {
        if self.decls.iter().any(|d| d.id() == id) {
            return Err(parse_err(line, col, format!("duplicate identifier '{id}'")));
        }
        Ok(())
    }

    fn add(&mut self, d: Decl, pos: (usize, usize)) -> Result<()> {
        self.insert_check(d.id(), pos.0, pos.1)?;
        match &d {
            Decl::Ring { id, ring } => {
                let r = match ring {
                    RingDecl::Z => Ring::Integers,
                    RingDecl::Zmod(n) => Ring::zmod(n.clone()).map_err(|e| invalid(id, e))?,
                    RingDecl::Fp(p) => Ring::fp(p.clone()).map_err(|e| invalid(id, e))?,
                };
                self.rings.insert(id.clone(), r);
            }
            Decl::Module { id, ring, gens, rels } => {
                let r = lookup(&self.rings, ring, "ring")?.clone();
                let cols = rows_matrix(&r, rels, rels.len(), *gens, id)?;
                let m = FpModule::new(&r, *gens, cols.transpose()).map_err(|e| invalid(id, e))?;
                self.modules.insert(id.clone(), m);
            }
            Decl::Map { id, source, target, rows } => {
                let s = lookup(&self.modules, source, "module")?.clone();
                let t = lookup(&self.modules, target, "module")?.clone();
                let m = rows_matrix(t.ring(), rows, t.gens(), s.gens(), id)?;
                let raw = RawMap { source: s, target: t, matrix: m };
                if raw.source.ring() == raw.target.ring() {
                    raw.module_map().map_err(|e| invalid(id, e))?;
                }
                self.maps.insert(id.clone(), raw);
            }
            Decl::Complex { id, ring, body } => {
                let r = lookup(&self.rings, ring, "ring")?.clone();
                let x = match body {
                    ComplexBody::Sphere(n, m) | ComplexBody::Disk(n, m) => {
                        let m = lookup(&self.modules, m, "module")?;
                        if m.ring() != &r {
                            return Err(Error::RingMismatch(format!("{id}: module over {}, complex over {r}", m.ring())));
                        }
                        if matches!(body, ComplexBody::Sphere(..)) {
                            ChainComplex::sphere(*n, m)
                        } else {
                            ChainComplex::disk(*n, m)
                        }
                    }
                    ComplexBody::Explicit { lo, hi, objects, diffs } => {
                        if lo > hi {
                            return Err(Error::Validation(format!("{id}: empty degree range {lo}..{hi}")));
                        }
                        let mut objs = Vec::new();
                        for n in *lo..=*hi {
                            let o = match objects.iter().find(|(k, _)| *k == n) {
                                Some((_, m)) => lookup(&self.modules, m, "module")?.clone(),
                                None => FpModule::zero(&r),
                            };
                            objs.push(o);
                        }
                        for (n, m) in objects.iter().chain(diffs.iter()) {
                            if n < lo || n > hi {
                                return Err(parse_err(m.line, m.col, format!("degree {n} outside {lo}..{hi}")));
                            }
                        }
                        let mut ds = Vec::new();
                        for n in lo + 1..=*hi {
                            let (s, t) = (&objs[(n - lo) as usize], &objs[(n - 1 - lo) as usize]);
                            let d = match diffs.iter().find(|(k, _)| *k == n) {
                                Some((_, f)) => {
                                    let raw = lookup(&self.maps, f, "map")?;
                                    if &raw.source != s || &raw.target != t {
                                        return Err(Error::Validation(format!("{id}: diff {n} has the wrong source or target")));
                                    }
                                    raw.module_map().map_err(|e| invalid(id, e))?
                                }
                                None => ModuleMap::zero(s, t),
                            };
                            ds.push(d);
                        }
                        ChainComplex::new(&r, *lo, objs, ds).map_err(|e| invalid(id, e))?
                    }
                };
                self.complexes.insert(id.clone(), x);
            }
            Decl::ChainMap { id, source, target, comps } => {
                let s = lookup(&self.complexes, source, "complex")?.clone();
                let t = lookup(&self.complexes, target, "complex")?.clone();
                for (n, f) in comps {
                    lookup(&self.maps, f, "map")?;
                    if s.object(*n).is_zero() && t.object(*n).is_zero() {
                        return Err(parse_err(f.line, f.col, format!("component in degree {n} outside both supports")));
                    }
                }
                let mut cs = Vec::new();
                for n in s.degrees() {
                    let c = match comps.iter().find(|(k, _)| *k == n) {
                        Some((_, f)) => {
                            let raw = &self.maps[&f.id];
                            if raw.source != s.object(n) || raw.target != t.object(n) {
                                return Err(Error::Validation(format!("{id}: component {n} has the wrong source or target")));
                            }
                            raw.module_map().map_err(|e| invalid(id, e))?
                        }
                        None => ModuleMap::zero(&s.object(n), &t.object(n)),
                    };
                    cs.push(c);
                }
                let f = if s.is_zero() { Ok(ChainMap::zero(&s, &t)) } else { ChainMap::new(s, t, cs) };
                self.chainmaps.insert(id.clone(), f.map_err(|e| invalid(id, e))?);
            }
            Decl::Quiver { id, vertices, edges } => {
                let mut vs = Vec::new();
                for (v, r) in vertices {
                    vs.push((v.clone(), lookup(&self.rings, r, "ring")?.clone()));
                }
                let mut es = Vec::new();
                for (e, v, w, images) in edges {
                    let idx = |name: &str| {
                        vs.iter().position(|(n, _)| n == name).ok_or_else(|| Error::Validation(format!("{id}: edge {e} uses unknown vertex '{name}'")))
                    };
                    es.push((e.clone(), idx(v)?, idx(w)?, images.clone()));
                }
                let q = QuiverRep::new(vs, es).map_err(|e| invalid(id, e))?;
                self.quivers.insert(id.clone(), q);
            }
            Decl::RepModule { id, quiver, at, edges } => {
                let q = lookup(&self.quivers, quiver, "quiver")?.clone();
                let mut mods = Vec::new();
                for (v, r) in &q.vertices {
                    let m = match at.iter().find(|(n, _)| n == v) {
                        Some((_, m)) => lookup(&self.modules, m, "module")?.clone(),
                        None => FpModule::zero(r),
                    };
                    mods.push(m);
                }
                let mut mats = Vec::new();
                for e in &q.edges {
                    let (v, w) = (&mods[e.from], &mods[e.to]);
                    let m = match edges.iter().find(|(n, _)| n == &e.name) {
                        Some((_, f)) => {
                            let raw = lookup(&self.maps, f, "map")?;
                            if &raw.source != v || &raw.target != w {
                                return Err(Error::Validation(format!("{id}: edge {} map has the wrong source or target", e.name)));
                            }
                            raw.matrix.clone()
                        }
                        None => Matrix::zero(q.ring(e.to), w.gens(), v.gens()),
                    };
                    mats.push(m);
                }
                let m = QuiverRepModule::new(&q, mods, mats).map_err(|e| invalid(id, e))?;
                self.repmodules.insert(id.clone(), m);
            }
            Decl::LiftProblem { id, i, p, top, bottom } => {
                let get = |r: &Ref| lookup(&self.chainmaps, r, "chain map").cloned();
                let prob = LiftProblem::new(get(i)?, get(p)?, get(top)?, get(bottom)?).map_err(|e| invalid(id, e))?;
                self.problems.insert(id.clone(), prob);
            }
        }
        self.decls.push(d);
        Ok(())
    }

    pub fn chainmap(&self, id: &str) -> Result<&ChainMap> {
        self.chainmaps.get(id).ok_or_else(|| Error::Validation(format!("no chain map '{id}' in workspace")))
    }

    pub fn complex(&self, id: &str) -> Result<&ChainComplex> {
        self.complexes.get(id).ok_or_else(|| Error::Validation(format!("no complex '{id}' in workspace")))
    }

    pub fn module(&self, id: &str) -> Result<&FpModule> {
        self.modules.get(id).ok_or_else(|| Error::Validation(format!("no module '{id}' in workspace")))
    }

    pub fn map(&self, id: &str) -> Result<ModuleMap> {
        self.maps.get(id).ok_or_else(|| Error::Validation(format!("no map '{id}' in workspace")))?.module_map()
    }

    /// A complex, or a module read as a complex concentrated in degree `0`.
    pub fn complex_or_sphere(&self, id: &str) -> Result<ChainComplex> {
        if let Some(x) = self.complexes.get(id) {
            return Ok(x.clone());
        }
        self.modules
            .get(id)
            .map(|m| ChainComplex::sphere(0, m))
            .ok_or_else(|| Error::Validation(format!("no complex or module '{id}' in workspace")))
    }
}

pub fn parse_workspace(text: &str) -> Result<Workspace> {
    let toks = lex(text)?;
    let end = (text.lines().count().max(1), text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1));
    let mut c = Cursor { toks, pos: 0, end };
    let mut ws = Workspace::default();
    while c.peek().is_some() {
        let pos = c.here();
        let (kw_line, kw_col) = pos;
        let d = parse_decl(&mut c)?;
        let id_pos = c.toks.iter().find(|t| t.line == kw_line && t.col > kw_col).map(|t| (t.line, t.col)).unwrap_or(pos);
        ws.add(d, id_pos)?;
    }
    Ok(ws)
}

fn list(v: &[BigInt]) -> String {
    let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", s.join(","))
}

fn nested(rows: &[Vec<BigInt>]) -> String {
    let s: Vec<String> = rows.iter().map(|r| list(r)).collect();
    format!("[{}]", s.join(","))
}

/// One declaration per line, in input order.
pub fn serialize_workspace(ws: &Workspace) -> String {
    let mut out = String::new();
    for d in &ws.decls {
        match d {
            Decl::Ring { id, ring } => match ring {
                RingDecl::Z => writeln!(out, "ring {id} Z"),
                RingDecl::Zmod(n) => writeln!(out, "ring {id} Zmod {n}"),
                RingDecl::Fp(p) => writeln!(out, "ring {id} Fp {p}"),
            },
            Decl::Module { id, ring, gens, rels } => writeln!(out, "module {id} over {} gens {gens} rels {}", ring.id, nested(rels)),
            Decl::Map { id, source, target, rows } => writeln!(out, "map {id} : {} -> {} matrix {}", source.id, target.id, nested(rows)),
            Decl::Complex { id, ring, body } => {
                let b = match body {
                    ComplexBody::Sphere(n, m) => format!("sphere {n} {}", m.id),
                    ComplexBody::Disk(n, m) => format!("disk {n} {}", m.id),
                    ComplexBody::Explicit { lo, hi, objects, diffs } => {
                        let mut s = format!("degrees {lo}..{hi}");
                        for (n, m) in objects {
                            s.push_str(&format!(" object {n} {}", m.id));
                        }
                        for (n, f) in diffs {
                            s.push_str(&format!(" diff {n} {}", f.id));
                        }
                        s
                    }
                };
                writeln!(out, "complex {id} over {} {b}", ring.id)
            }
            Decl::ChainMap { id, source, target, comps } => {
                let cs: String = comps.iter().map(|(n, f)| format!(" comp {n} {}", f.id)).collect();
                writeln!(out, "chainmap {id} : {} -> {}{cs}", source.id, target.id)
            }
            Decl::Quiver { id, vertices, edges } => {
                let vs: String = vertices.iter().map(|(v, r)| format!(" {v}:{}", r.id)).collect();
                let es: String = edges.iter().map(|(e, v, w, im)| format!(" {e}: {v}->{w} ringmap {}", list(im))).collect();
                let es = if edges.is_empty() { String::new() } else { format!(" edges{es}") };
                writeln!(out, "quiver {id} vertices{vs}{es}")
            }
            Decl::RepModule { id, quiver, at, edges } => {
                let a: String = at.iter().map(|(v, m)| format!(" at {v} {}", m.id)).collect();
                let e: String = edges.iter().map(|(n, f)| format!(" edge {n} {}", f.id)).collect();
                writeln!(out, "repmodule {id} over {}{a}{e}", quiver.id)
            }
            Decl::LiftProblem { id, i, p, top, bottom } => {
                writeln!(out, "liftproblem {id} i {} p {} top {} bottom {}", i.id, p.id, top.id, bottom.id)
            }
        }
        .expect("writing to a string");
    }
    out
}

impl PartialEq for Ref {
    fn eq(&self, other: &Ref) -> bool {
        self.id == other.id
    }
}

impl Eq for Ref {}
