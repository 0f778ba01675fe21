//! Model structures on bounded complexes induced by a cotorsion pair: classification,
//! factorization, lifting, replacements, derived tensor products and axiom checks.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::complex::{
    hom_complex, pushout_chainmaps, pushout_induced, tensor_chainmaps, tensor_complexes, ChainComplex, ChainMap,
    ComplexSum,
};
use crate::cotorsion::{
    complex_class_member, induced_generating_monos, ClassCertificate, ComplexClass, ComplexClassId, CotorsionPairSpec,
};
use crate::error::{Error, Result};
use crate::kaplansky::{icell_decompose, is_pure_mono, lift_elements, CellChain, KaplanskyConfig};
use crate::matrix::Matrix;
use crate::module::{factor_through_mono, Equation, FpModule, MapSystem, ModuleMap, Term};
use crate::report::{CheckRecord, SuiteReport};
use crate::ring::Ring;
use crate::sample::Sampler;

/// Degrees past the input support explored when resolving.
pub const RESOLUTION_SLACK: i64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StructureId {
    Injective,
    Projective,
    Flat,
}

impl fmt::Display for StructureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructureId::Injective => "injective",
            StructureId::Projective => "projective",
            StructureId::Flat => "flat",
        })
    }
}

impl std::str::FromStr for StructureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<StructureId> {
        match s {
            "injective" => Ok(StructureId::Injective),
            "projective" => Ok(StructureId::Projective),
            "flat" => Ok(StructureId::Flat),
            _ => Err(Error::Validation(format!("unknown structure '{s}'"))),
        }
    }
}

type FamilyCache = Arc<Mutex<HashMap<(ComplexClass, i64, i64), ComplexClassId>>>;

#[derive(Clone, Debug)]
pub struct ModelStructureSpec {
    pub ring: Ring,
    pub structure: StructureId,
    pub pair: CotorsionPairSpec,
    pub window: (i64, i64),
    /// `I`: `0 -> D^n(R)`, `S^{n-1}(R) -> D^n(R)` and `S^n(k)` over the window.
    pub generating_cofibrations: Vec<ChainMap>,
    /// `J`: `0 -> D^n(R)` and `0 -> D^n(M)` for sampled nonzero left-class `M`.
    pub generating_trivial_cofibrations: Vec<ChainMap>,
    pub cfg: KaplanskyConfig,
    families: FamilyCache,
}

impl ModelStructureSpec {
    pub fn new(ring: &Ring, structure: StructureId, window: (i64, i64), cfg: KaplanskyConfig) -> Result<ModelStructureSpec> {
        let pair = match structure {
            StructureId::Injective => CotorsionPairSpec::injective(ring, cfg.gamma)?,
            StructureId::Projective => CotorsionPairSpec::projective(ring, cfg.gamma),
            StructureId::Flat => CotorsionPairSpec::flat(ring, cfg.gamma),
        };
        ModelStructureSpec::with_pair(structure, pair, window, cfg)
    }

    /// A structure over an explicitly given pair (used for deliberately broken fixtures).
    pub fn with_pair(structure: StructureId, pair: CotorsionPairSpec, window: (i64, i64), cfg: KaplanskyConfig) -> Result<ModelStructureSpec> {
        if window.0 > window.1 {
            return Err(Error::Validation(format!("empty window {}..{}", window.0, window.1)));
        }
        if structure == StructureId::Injective && !pair.ring.is_quasi_frobenius() {
            return Err(Error::UnsupportedRing(format!("injective structure needs a quasi-Frobenius ring, got {}", pair.ring)));
        }
        let ring = pair.ring.clone();
        let i = induced_generating_monos(&pair, Some(window));
        let zero = ChainComplex::zero(&ring);
        let mut j: Vec<ChainMap> = (window.0..=window.1)
            .map(|n| ChainMap::zero(&zero, &ChainComplex::disk(n, &FpModule::free(&ring, 1))))
            .collect();
        for m in pair.sample_left(2)? {
            if m.is_isomorphic(&FpModule::free(&ring, 1)) {
                continue;
            }
            for n in window.0..=window.1 {
                j.push(ChainMap::zero(&zero, &ChainComplex::disk(n, &m)));
            }
        }
        Ok(ModelStructureSpec {
            ring,
            structure,
            pair,
            window,
            generating_cofibrations: i,
            generating_trivial_cofibrations: j,
            cfg,
            families: Arc::new(Mutex::new(HashMap::new())),
        })
    }

    pub fn is_projective_type(&self) -> bool {
        self.structure != StructureId::Injective
    }

    fn family(&self, kind: ComplexClass, window: (i64, i64)) -> Result<ComplexClassId> {
        let key = (kind, window.0, window.1);
        if let Some(f) = self.families.lock().expect("cache lock").get(&key) {
            return Ok(f.clone());
        }
        let fam = ComplexClassId::with_default_family(kind, &self.pair, window)?;
        self.families.lock().expect("cache lock").insert(key, fam.clone());
        Ok(fam)
    }

    /// Membership certificate for `x` in one of the four complex classes.
    pub fn certify(&self, x: &ChainComplex, kind: ComplexClass) -> Result<ClassCertificate> {
        let window = x.support().map(|(a, b)| (a - 1, b + 1)).unwrap_or((0, 0));
        let cls = match kind {
            ComplexClass::DgFLeft | ComplexClass::DgCRight => self.family(kind, window)?,
            _ => ComplexClassId::new(kind, vec![]),
        };
        complex_class_member(x, &cls, &self.pair)
    }
}

/// The five flags of a map with the certificates behind them.
#[derive(Clone, Debug)]
pub struct MapClassification {
    pub weq: bool,
    pub cof: bool,
    pub fib: bool,
    pub triv_cof: bool,
    pub triv_fib: bool,
    pub certificates: Vec<ClassCertificate>,
}

impl MapClassification {
    pub fn flags(&self) -> [bool; 5] {
        [self.weq, self.cof, self.fib, self.triv_cof, self.triv_fib]
    }

    /// `trivCof = cof ∧ weq` and `trivFib = fib ∧ weq`.
    pub fn consistent(&self) -> bool {
        self.triv_cof == (self.cof && self.weq) && self.triv_fib == (self.fib && self.weq)
    }
}

pub const FLAG_NAMES: [&str; 5] = ["weq", "cof", "fib", "trivCof", "trivFib"];

fn check_ring(spec: &ModelStructureSpec, r: &Ring) -> Result<()> {
    if r != &spec.ring {
        return Err(Error::RingMismatch(format!("map over {r}, structure over {}", spec.ring)));
    }
    if spec.structure == StructureId::Injective && !r.is_quasi_frobenius() {
        return Err(Error::UnsupportedRing(format!("injective structure over {r}")));
    }
    Ok(())
}

pub fn classify_map(f: &ChainMap, spec: &ModelStructureSpec) -> Result<MapClassification> {
    check_ring(spec, f.ring())?;
    let weq = f.is_quasi_iso();
    let mut certs = Vec::new();
    let (mut cof, mut triv_cof, mut fib, mut triv_fib) = (false, false, false, false);
    if f.is_mono() {
        let c = f.cokernel().target().clone();
        let dg = spec.certify(&c, ComplexClass::DgFLeft)?;
        let t = spec.certify(&c, ComplexClass::FTilde)?;
        cof = dg.member;
        triv_cof = t.member;
        certs.push(dg);
        certs.push(t);
    }
    if f.is_epi() {
        let k = f.kernel().source().clone();
        let dg = spec.certify(&k, ComplexClass::DgCRight)?;
        let t = spec.certify(&k, ComplexClass::CTilde)?;
        fib = dg.member;
        triv_fib = t.member;
        certs.push(dg);
        certs.push(t);
    }
    Ok(MapClassification { weq, cof, fib, triv_cof, triv_fib, certificates: certs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FactorMode {
    CofThenTrivFib,
    TrivCofThenFib,
}

impl fmt::Display for FactorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FactorMode::CofThenTrivFib => "cof-trivfib",
            FactorMode::TrivCofThenFib => "trivcof-fib",
        })
    }
}

/// `f = p ∘ i`.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub f: ChainMap,
    pub i: ChainMap,
    pub p: ChainMap,
    pub mode: FactorMode,
    pub cokernel_cert: ClassCertificate,
    pub kernel_cert: ClassCertificate,
    /// Cell decomposition of `i` when its cokernel admits one.
    pub cells: Option<CellChain>,
    pub cell_note: Option<String>,
    /// Degrees explored by the construction.
    pub window: (i64, i64),
    /// Set when the construction stopped at the window edge without converging.
    pub truncated: bool,
}

fn cert_kinds(mode: FactorMode) -> (ComplexClass, ComplexClass) {
    match mode {
        FactorMode::CofThenTrivFib => (ComplexClass::DgFLeft, ComplexClass::CTilde),
        FactorMode::TrivCofThenFib => (ComplexClass::FTilde, ComplexClass::DgCRight),
    }
}

impl Factorization {
    fn build(f: &ChainMap, i: ChainMap, p: ChainMap, mode: FactorMode, spec: &ModelStructureSpec, window: (i64, i64), truncated: bool) -> Result<Factorization> {
        let (ck, kk) = cert_kinds(mode);
        let cokernel_cert = spec.certify(i.cokernel().target(), ck)?;
        let kernel_cert = spec.certify(p.kernel().source(), kk)?;
        let (cells, cell_note) = match icell_decompose(&i, &spec.pair, &spec.cfg) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Ok(Factorization { f: f.clone(), i, p, mode, cokernel_cert, kernel_cert, cells, cell_note, window, truncated })
    }

    /// Recomputes everything from scratch: `p ∘ i = f`, `i` mono, `p` epi, both class
    /// certificates, the weak equivalence, and the cell chain if present.
    pub fn verify(&self, spec: &ModelStructureSpec) -> Result<()> {
        if self.p.compose(&self.i).normalized() != self.f.normalized() {
            return Err(Error::Validation("p ∘ i != f".into()));
        }
        if !self.i.is_mono() || !self.p.is_epi() {
            return Err(Error::Validation("i must be mono and p epi".into()));
        }
        let (ck, kk) = cert_kinds(self.mode);
        let c = spec.certify(self.i.cokernel().target(), ck)?;
        let k = spec.certify(self.p.kernel().source(), kk)?;
        if !c.member || c != self.cokernel_cert {
            return Err(Error::Validation(format!("cokernel certificate: {}", c.failure.unwrap_or_default())));
        }
        if !k.member || k != self.kernel_cert {
            return Err(Error::Validation(format!("kernel certificate: {}", k.failure.unwrap_or_default())));
        }
        let weq_ok = match self.mode {
            FactorMode::CofThenTrivFib => self.p.is_quasi_iso(),
            FactorMode::TrivCofThenFib => self.i.is_quasi_iso(),
        };
        if !weq_ok {
            return Err(Error::Validation("weak equivalence leg is not a quasi-isomorphism".into()));
        }
        if let Some(c) = &self.cells {
            if !c.verify() {
                return Err(Error::Validation("cell chain does not reproduce i".into()));
            }
        }
        Ok(())
    }
}

/// `W_n = X_n ⊕ R^{c_n}` with new free generators attached to a base complex `X`, and a
/// map `W -> Y` extending `g: X -> Y`.
struct CellBuilder {
    ring: Ring,
    base: ChainComplex,
    g: ChainMap,
    cells: BTreeMap<i64, usize>,
    /// Boundaries of new generators in degree `n`, rows `X_{n-1} ⊕ R^{c_{n-1}}`.
    bounds: BTreeMap<i64, Matrix>,
    /// Images of new generators in `Y_n`.
    images: BTreeMap<i64, Matrix>,
}

impl CellBuilder {
    fn new(g: &ChainMap) -> CellBuilder {
        CellBuilder {
            ring: g.ring().clone(),
            base: g.source().clone(),
            g: g.clone(),
            cells: BTreeMap::new(),
            bounds: BTreeMap::new(),
            images: BTreeMap::new(),
        }
    }

    fn c(&self, n: i64) -> usize {
        self.cells.get(&n).copied().unwrap_or(0)
    }

    fn width(&self, n: i64) -> usize {
        self.base.object(n).gens() + self.c(n)
    }

    fn bound(&self, n: i64) -> Matrix {
        self.bounds.get(&n).cloned().unwrap_or_else(|| Matrix::zero(&self.ring, self.width(n - 1), self.c(n)))
    }

    fn image(&self, n: i64) -> Matrix {
        let y = self.g.target().object(n).gens();
        self.images.get(&n).cloned().unwrap_or_else(|| Matrix::zero(&self.ring, y, self.c(n)))
    }

    /// Adds a generator in degree `n` with boundary in `W_{n-1}` and image in `Y_n`.
    fn add(&mut self, n: i64, boundary: &Matrix, image: &Matrix) {
        // Cells attached in the same stage widen `W_{n-1}` after the boundary was computed.
        let pad = self.width(n - 1) - boundary.rows();
        let boundary = boundary.vstack(&Matrix::zero(&self.ring, pad, 1));
        let b = self.bound(n).hstack(&boundary);
        let im = self.image(n).hstack(image);
        let above = self.bound(n + 1);
        let above = above.vstack(&Matrix::zero(&self.ring, 1, above.cols()));
        self.bounds.insert(n, b);
        self.images.insert(n, im);
        self.bounds.insert(n + 1, above);
        *self.cells.entry(n).or_insert(0) += 1;
    }

    /// A disk: a cycle generator in `n - 1` mapping to `d y`, and one in `n` over it mapping to `y`.
    fn add_disk(&mut self, n: i64, y: &Matrix) {
        let dy = self.g.target().d(n).matrix().mul(y);
        let dy = self.g.target().object(n - 1).canonical_rep(&dy);
        self.add(n - 1, &Matrix::zero(&self.ring, self.width(n - 2), 1), &dy);
        let e = Matrix::unit_vector(&self.ring, self.width(n - 1), self.width(n - 1) - 1);
        self.add(n, &e, y);
    }

    fn range(&self) -> Option<(i64, i64)> {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for c in [self.base.support(), self.g.target().support()].into_iter().flatten() {
            lo = lo.min(c.0);
            hi = hi.max(c.1);
        }
        for (&n, &k) in &self.cells {
            if k > 0 {
                lo = lo.min(n);
                hi = hi.max(n);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    fn object(&self, n: i64) -> FpModule {
        self.base.object(n).direct_sum(&FpModule::free(&self.ring, self.c(n))).module
    }

    fn complex(&self) -> ChainComplex {
        let Some((lo, hi)) = self.range() else { return ChainComplex::zero(&self.ring) };
        let objects: Vec<FpModule> = (lo..=hi).map(|n| self.object(n)).collect();
        let diffs = (lo + 1..=hi)
            .map(|n| {
                let dx = self.base.d(n).matrix().vstack(&Matrix::zero(&self.ring, self.c(n - 1), self.base.object(n).gens()));
                let m = dx.hstack(&self.bound(n));
                ModuleMap::new(self.object(n), self.object(n - 1), m).expect("cell boundaries are well defined")
            })
            .collect();
        ChainComplex::new(&self.ring, lo, objects, diffs).expect("attached cells keep d^2 = 0")
    }

    fn inclusion(&self, w: &ChainComplex) -> ChainMap {
        let mats = self
            .base
            .degrees()
            .map(|n| Matrix::identity(&self.ring, self.base.object(n).gens()).vstack(&Matrix::zero(&self.ring, self.c(n), self.base.object(n).gens())))
            .collect();
        ChainMap::from_matrices(&self.base, w, mats).expect("base includes into W")
    }

    fn map(&self, w: &ChainComplex) -> ChainMap {
        let mats = w.degrees().map(|n| self.g.component(n).matrix().hstack(&self.image(n))).collect();
        ChainMap::from_matrices(w, self.g.target(), mats).expect("cell images commute with d")
    }

    /// Makes `H_n(W) -> H_n(Y)` onto by attaching cycle generators.
    fn surject_homology(&mut self, n: i64) {
        let y = self.g.target().clone();
        let w = self.complex();
        let p = self.map(&w);
        let cyc = y.cycles(n);
        let b = factor_through_mono(&cyc, &y.d(n + 1)).expect("boundaries are cycles");
        let q = b.cokernel();
        let r = factor_through_mono(&cyc, &p.component(n).compose(&w.cycles(n))).expect("cycles map to cycles");
        let s = q.compose(&r).cokernel().compose(&q);
        let (canon, _, from) = s.target().simplify();
        if canon.gens() == 0 {
            return;
        }
        let lifts = lift_elements(&s, from.matrix()).expect("epi");
        let zeros = Matrix::zero(&self.ring, self.width(n - 1), 1);
        for j in 0..lifts.cols() {
            let v = cyc.matrix().mul(&lifts.column(j));
            self.add(n, &zeros, &y.object(n).canonical_rep(&v));
        }
    }

    /// Kills `ker(H_n W -> H_n Y)` with generators in degree `n + 1`; returns how many.
    fn kill_kernel(&mut self, n: i64) -> usize {
        let y = self.g.target().clone();
        let w = self.complex();
        let p = self.map(&w);
        let cycw = w.cycles(n);
        if cycw.source().is_zero() {
            return 0;
        }
        let to_h = y.d(n + 1).cokernel();
        let comp = to_h.compose(&p.component(n)).compose(&cycw);
        let ker = comp.kernel();
        let bw = factor_through_mono(&cycw, &w.d(n + 1)).expect("boundaries are cycles");
        let qw = bw.cokernel();
        let img = qw.compose(&ker).image().2;
        if img.matrix().cols() == 0 {
            return 0;
        }
        let lifts = lift_elements(&qw, img.matrix()).expect("homology projection is epi");
        let mut new = Vec::new();
        for j in 0..lifts.cols() {
            let z = cycw.matrix().mul(&lifts.column(j));
            let pz = p.component(n).matrix().mul(&z);
            let wv = lift_elements(&y.d(n + 1), &pz).expect("image of a killed class is a boundary");
            new.push((w.object(n).canonical_rep(&z), y.object(n + 1).canonical_rep(&wv)));
        }
        for (z, wv) in &new {
            self.add(n + 1, z, wv);
        }
        new.len()
    }

    /// Disks on generators of `Y_n` outside the image.
    fn surject(&mut self, n: i64) -> usize {
        let y = self.g.target().clone();
        let w = self.complex();
        let p = self.map(&w);
        let c = p.component(n).cokernel();
        let (canon, _, from) = c.target().simplify();
        if canon.gens() == 0 {
            return 0;
        }
        let lifts = lift_elements(&c, from.matrix()).expect("cokernel projection is epi");
        for j in 0..lifts.cols() {
            self.add_disk(n, &y.object(n).canonical_rep(&lifts.column(j)));
        }
        lifts.cols()
    }

    /// Attaching data for one stage of the small object argument against
    /// `S^{n-1}(R) -> D^n(R)`: non-liftable squares `(z, y)` modulo the liftable ones.
    fn sphere_obstructions(&self, n: i64) -> Vec<(Matrix, Matrix)> {
        let y = self.g.target().clone();
        let w = self.complex();
        let p = self.map(&w);
        let cyc = w.cycles(n - 1);
        let k = cyc.source().clone();
        let sum = k.direct_sum(&y.object(n));
        let cond_m = p.component(n - 1).matrix().mul(cyc.matrix()).hstack(&y.d(n).matrix().neg());
        let cond = ModuleMap::new(sum.module.clone(), y.object(n - 1), cond_m).expect("square condition is a map");
        let q = cond.kernel();
        let dw = factor_through_mono(&cyc, &w.d(n)).expect("boundaries are cycles");
        let lift_m = dw.matrix().vstack(p.component(n).matrix());
        let lifts = ModuleMap::new(w.object(n), sum.module.clone(), lift_m).expect("lift map");
        let into_q = factor_through_mono(&q, &lifts).expect("lifts are squares");
        let obs = into_q.cokernel();
        let (canon, _, from) = obs.target().simplify();
        if canon.gens() == 0 {
            return vec![];
        }
        let gens = lift_elements(&obs, from.matrix()).expect("epi");
        let kg = k.gens();
        (0..gens.cols())
            .map(|j| {
                let v = q.matrix().mul(&gens.column(j));
                let z = cyc.matrix().mul(&v.block(0, 0, kg, 1));
                let yv = v.block(kg, 0, v.rows() - kg, 1);
                (w.object(n - 1).canonical_rep(&z), y.object(n).canonical_rep(&yv))
            })
            .collect()
    }
}

/// Resolves `g: X -> Y` relative to `X`: attaches free cells until the map is an
/// epimorphism and a quasi-isomorphism, exploring up to `RESOLUTION_SLACK` degrees past
/// the input. Returns `(i, p, window, truncated)`.
fn relative_resolution(g: &ChainMap) -> (ChainMap, ChainMap, (i64, i64), bool) {
    let mut b = CellBuilder::new(g);
    let Some((lo, hi)) = b.range() else {
        let z = g.target().clone();
        return (ChainMap::identity(g.source()), ChainMap::identity(&z), (0, 0), false);
    };
    let top = hi + RESOLUTION_SLACK;
    for n in lo..=top {
        if n <= hi {
            b.surject_homology(n);
        }
        let added = b.kill_kernel(n);
        if n >= hi && added == 0 {
            break;
        }
    }
    for n in lo..=hi {
        b.surject(n);
    }
    let w = b.complex();
    let i = b.inclusion(&w);
    let p = b.map(&w);
    let truncated = !p.is_quasi_iso();
    let wtop = w.support().map(|s| s.1).unwrap_or(hi).max(hi);
    (i, p, (lo, wtop), truncated)
}

/// `ρ: P -> X` with `P` a bounded complex of free modules, `ρ` epi and a quasi-isomorphism
/// (unless truncated).
pub fn free_replacement(x: &ChainComplex) -> (ChainMap, bool) {
    let zero = ChainComplex::zero(x.ring());
    let (_, p, _, truncated) = relative_resolution(&ChainMap::zero(&zero, x));
    (p, truncated)
}

fn dual_module(m: &FpModule) -> (FpModule, Matrix) {
    let ring = m.ring();
    let a = m.relations();
    let t = ModuleMap::unchecked(FpModule::free(ring, m.gens()), FpModule::free(ring, a.cols()), a.transpose());
    let k = t.kernel();
    (k.source().clone(), k.matrix().clone())
}

/// `f^*: Hom(N, R) -> Hom(M, R)` for `f: M -> N`.
fn dual_map(f: &ModuleMap) -> ModuleMap {
    let ring = f.ring();
    let (nd, en) = dual_module(f.target());
    let (md, em) = dual_module(f.source());
    let emb = ModuleMap::unchecked(md, FpModule::free(ring, f.source().gens()), em);
    let x = ModuleMap::unchecked(nd, FpModule::free(ring, f.source().gens()), f.matrix().transpose().mul(&en));
    factor_through_mono(&emb, &x).expect("precomposition preserves well-definedness")
}

/// `(X^*)_n = Hom(X_{-n}, R)`.
pub fn dual_complex(x: &ChainComplex) -> ChainComplex {
    let ring = x.ring();
    let Some((lo, hi)) = x.support() else { return ChainComplex::zero(ring) };
    let objects = (-hi..=-lo).map(|n| dual_module(&x.object(-n)).0).collect();
    let diffs = (-hi + 1..=-lo).map(|n| dual_map(&x.d(-n + 1))).collect();
    ChainComplex::new(ring, -hi, objects, diffs).expect("duals of a complex form a complex")
}

pub fn dual_chainmap(g: &ChainMap) -> ChainMap {
    let src = dual_complex(g.target());
    let tgt = dual_complex(g.source());
    let comps = src.degrees().map(|n| dual_map(&g.component(-n))).collect();
    ChainMap::new(src, tgt, comps).expect("dual of a chain map")
}

/// `X -> X^{**}`.
fn evaluation(x: &ChainComplex) -> ChainMap {
    let xdd = dual_complex(&dual_complex(x));
    let comps = x
        .degrees()
        .map(|n| {
            let m = x.object(n);
            let (md, em) = dual_module(&m);
            let (mdd, edd) = dual_module(&md);
            let emb = ModuleMap::unchecked(mdd, FpModule::free(m.ring(), md.gens()), edd);
            let ev = ModuleMap::unchecked(m.clone(), FpModule::free(m.ring(), md.gens()), em.transpose());
            factor_through_mono(&emb, &ev).expect("evaluation lands in the double dual")
        })
        .collect();
    ChainMap::new(x.clone(), xdd, comps).expect("evaluation is a chain map")
}

/// `κ: X -> J` with `J` a bounded complex of free (= injective) modules over a
/// quasi-Frobenius ring, `κ` mono and a quasi-isomorphism (unless truncated): the dual
/// of a free replacement of `X^*`.
pub fn injective_replacement(x: &ChainComplex) -> Result<(ChainMap, bool)> {
    if !x.ring().is_quasi_frobenius() {
        return Err(Error::UnsupportedRing(format!("injective replacement over {}", x.ring())));
    }
    let (rho, truncated) = free_replacement(&dual_complex(x));
    Ok((dual_chainmap(&rho).compose(&evaluation(x)), truncated))
}

fn block_complex(ring: &Ring, range: (i64, i64), obj: impl Fn(i64) -> FpModule, d: impl Fn(i64) -> Matrix) -> Result<ChainComplex> {
    let (lo, hi) = range;
    if lo > hi {
        return Ok(ChainComplex::zero(ring));
    }
    let objects: Vec<FpModule> = (lo..=hi).map(&obj).collect();
    let diffs = (lo + 1..=hi).map(|n| ModuleMap::new(obj(n), obj(n - 1), d(n))).collect::<Result<Vec<_>>>()?;
    ChainComplex::new(ring, lo, objects, diffs)
}

fn span_of(cs: &[&ChainComplex]) -> (i64, i64) {
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for c in cs {
        if let Some((a, b)) = c.support() {
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }
    (lo, hi)
}

/// `Cone(f)_n = X_{n-1} ⊕ Y_n`, `d(x, y) = (-dx, fx + dy)`.
pub fn mapping_cone(f: &ChainMap) -> Result<ChainComplex> {
    let (x, y) = (f.source(), f.target());
    let ring = f.ring().clone();
    let (lo, hi) = span_of(&[&x.shift(1), y]);
    let obj = |n: i64| x.object(n - 1).direct_sum(&y.object(n)).module;
    let d = |n: i64| {
        let top = x.d(n - 1).matrix().neg().hstack(&Matrix::zero(&ring, x.object(n - 2).gens(), y.object(n).gens()));
        let bot = f.component(n - 1).matrix().hstack(y.d(n).matrix());
        top.vstack(&bot)
    };
    block_complex(&ring, (lo, hi), obj, d)
}

/// `Fib(f)_n = X_n ⊕ Y_{n+1}`, `d(x, y) = (dx, -fx - dy)`.
pub fn mapping_cocone(f: &ChainMap) -> Result<ChainComplex> {
    let (x, y) = (f.source(), f.target());
    let ring = f.ring().clone();
    let (lo, hi) = span_of(&[x, &y.shift(-1)]);
    let obj = |n: i64| x.object(n).direct_sum(&y.object(n + 1)).module;
    let d = |n: i64| {
        let top = x.d(n).matrix().hstack(&Matrix::zero(&ring, x.object(n - 1).gens(), y.object(n + 1).gens()));
        let bot = f.component(n).matrix().neg().hstack(&y.d(n + 1).matrix().neg());
        top.vstack(&bot)
    };
    block_complex(&ring, (lo, hi), obj, d)
}

fn injective_cof_trivfib(f: &ChainMap) -> Result<(ChainMap, ChainMap)> {
    let (x, y) = (f.source(), f.target());
    let ring = f.ring().clone();
    let Some((lo, hi)) = x.support() else {
        return Ok((f.clone(), ChainMap::identity(y)));
    };
    // η_n: X_n -> R^{k_n} by the generators of Hom(X_n, R).
    let eta: BTreeMap<i64, Matrix> = (lo..=hi).map(|n| (n, dual_module(&x.object(n)).1.transpose())).collect();
    let k = |n: i64| eta.get(&n).map(|m| m.rows()).unwrap_or(0);
    // E_m = R^{k_m} (bottom of D^{m+1}) ⊕ R^{k_{m-1}} (top of D^m).
    let e_obj = |m: i64| FpModule::free(&ring, k(m) + k(m - 1));
    let e_d = |m: i64| {
        let mut d = Matrix::zero(&ring, k(m - 1) + k(m - 2), k(m) + k(m - 1));
        d.paste(0, k(m), &Matrix::identity(&ring, k(m - 1)));
        d
    };
    let e = block_complex(&ring, (lo, hi + 1), e_obj, e_d)?;
    let eta_at = |m: i64| {
        let gx = x.object(m).gens();
        let low = eta.get(&m).cloned().unwrap_or_else(|| Matrix::zero(&ring, 0, gx));
        let high = eta.get(&(m - 1)).map(|t| t.mul(x.d(m).matrix())).unwrap_or_else(|| Matrix::zero(&ring, 0, gx));
        low.vstack(&high)
    };
    let eta_map = ChainMap::from_matrices(x, &e, x.degrees().map(eta_at).collect())?;
    let sum = ComplexSum::new(&[y.clone(), e.clone()], &ring);
    let i = sum.injections[0].compose(f).add(&sum.injections[1].compose(&eta_map));
    let i = ChainMap::new(x.clone(), sum.complex.clone(), x.degrees().map(|n| i.component(n)).collect())?;
    Ok((i, sum.projections[0].clone()))
}

fn injective_trivcof_fib(f: &ChainMap) -> Result<(ChainMap, ChainMap, bool)> {
    let (x, y) = (f.source(), f.target());
    let ring = f.ring().clone();
    let fib = mapping_cocone(f)?;
    let (kappa, truncated) = injective_replacement(&fib)?;
    let j = kappa.target().clone();
    let kx = |n: i64| kappa.component(n).matrix().block(0, 0, j.object(n).gens(), x.object(n).gens());
    let ky = |n: i64| {
        let m = kappa.component(n);
        let gx = x.object(n).gens();
        m.matrix().block(0, gx, j.object(n).gens(), m.matrix().cols() - gx)
    };
    let range = span_of(&[y, &j]);
    let obj = |n: i64| y.object(n).direct_sum(&j.object(n)).module;
    let d = |n: i64| {
        let top = y.d(n).matrix().hstack(&Matrix::zero(&ring, y.object(n - 1).gens(), j.object(n).gens()));
        let bot = ky(n - 1).hstack(j.d(n).matrix());
        top.vstack(&bot)
    };
    let w = block_complex(&ring, range, obj, d)?;
    let i = ChainMap::from_matrices(x, &w, x.degrees().map(|n| f.component(n).matrix().vstack(&kx(n))).collect())?;
    let p = ChainMap::from_matrices(
        &w,
        y,
        w.degrees()
            .map(|n| Matrix::identity(&ring, y.object(n).gens()).hstack(&Matrix::zero(&ring, y.object(n).gens(), j.object(n).gens())))
            .collect(),
    )?;
    Ok((i, p, truncated))
}

/// Deterministic factorization for bounded complexes.
///
/// Projective-type structures: `CofThenTrivFib` attaches free cells to `X` until the map
/// is an epi quasi-isomorphism; `TrivCofThenFib` adds disks on the missing generators of
/// `Y`. Injective structure: `CofThenTrivFib` is `(f, η): X -> Y ⊕ E` with `E` a sum of
/// disks on free modules; `TrivCofThenFib` glues an injective replacement of the cocone
/// onto `Y`. Maps already in the right class are returned as `(f, 1)` or `(1, f)`.
pub fn factor_map(f: &ChainMap, mode: FactorMode, spec: &ModelStructureSpec) -> Result<Factorization> {
    check_ring(spec, f.ring())?;
    let support = span_of(&[f.source(), f.target()]);
    let window = if support.0 <= support.1 { support } else { (0, 0) };
    let cls = classify_map(f, spec)?;
    match mode {
        FactorMode::CofThenTrivFib if cls.cof => {
            return Factorization::build(f, f.clone(), ChainMap::identity(f.target()), mode, spec, window, false);
        }
        FactorMode::TrivCofThenFib if cls.fib => {
            return Factorization::build(f, ChainMap::identity(f.source()), f.clone(), mode, spec, window, false);
        }
        _ => {}
    }
    let (i, p, window, truncated) = match (spec.is_projective_type(), mode) {
        (true, FactorMode::CofThenTrivFib) => relative_resolution(f),
        (true, FactorMode::TrivCofThenFib) => {
            let mut b = CellBuilder::new(f);
            for n in window.0..=window.1 {
                b.surject(n);
            }
            let w = b.complex();
            (b.inclusion(&w), b.map(&w), window, false)
        }
        (false, FactorMode::CofThenTrivFib) => {
            let (i, p) = injective_cof_trivfib(f)?;
            (i, p, (window.0, window.1 + 1), false)
        }
        (false, FactorMode::TrivCofThenFib) => {
            let (i, p, t) = injective_trivcof_fib(f)?;
            let w = span_of(&[i.target()]);
            (i, p, w, t)
        }
    };
    Factorization::build(f, i, p, mode, spec, window, truncated)
}

/// The small object argument run literally over the windowed generating sets: each stage
/// attaches one cell per generator of the module of non-liftable squares, until none are
/// left or `cfg.step_budget` stages have run. Projective-type structures only.
pub fn factor_map_soa(f: &ChainMap, mode: FactorMode, spec: &ModelStructureSpec) -> Result<Factorization> {
    check_ring(spec, f.ring())?;
    if !spec.is_projective_type() {
        return Err(Error::UnsupportedRing("literal small object argument runs for projective-type structures".into()));
    }
    let mut b = CellBuilder::new(f);
    let mut converged = false;
    for _ in 0..spec.cfg.step_budget {
        let Some((lo, hi)) = b.range() else {
            converged = true;
            break;
        };
        let mut disks = Vec::new();
        let mut spheres = Vec::new();
        let w = b.complex();
        let p = b.map(&w);
        for n in lo..=hi + 1 {
            let c = p.component(n).cokernel();
            let (canon, _, from) = c.target().simplify();
            if canon.gens() > 0 {
                let lifts = lift_elements(&c, from.matrix()).expect("epi");
                for j in 0..lifts.cols() {
                    disks.push((n, f.target().object(n).canonical_rep(&lifts.column(j))));
                }
            }
            if mode == FactorMode::CofThenTrivFib {
                for (z, y) in b.sphere_obstructions(n) {
                    spheres.push((n, z, y));
                }
            }
        }
        if disks.is_empty() && spheres.is_empty() {
            converged = true;
            break;
        }
        for (n, z, y) in spheres {
            b.add(n, &z, &y);
        }
        for (n, y) in disks {
            b.add_disk(n, &y);
        }
    }
    if !converged {
        return Err(Error::budget(format!("small object argument did not converge in {} stages", spec.cfg.step_budget)));
    }
    let w = b.complex();
    let window = w.support().unwrap_or((0, 0));
    Factorization::build(f, b.inclusion(&w), b.map(&w), mode, spec, window, false)
}

/// `(Q, p: Q -> X)` with `0 -> Q` a cofibration and `p` a trivial fibration.
pub fn cofibrant_replacement(x: &ChainComplex, spec: &ModelStructureSpec) -> Result<(ChainComplex, Factorization)> {
    let zero = ChainComplex::zero(x.ring());
    let fz = factor_map(&ChainMap::zero(&zero, x), FactorMode::CofThenTrivFib, spec)?;
    Ok((fz.i.target().clone(), fz))
}

/// `(R, i: X -> R)` with `i` a trivial cofibration and `R -> 0` a fibration.
pub fn fibrant_replacement(x: &ChainComplex, spec: &ModelStructureSpec) -> Result<(ChainComplex, Factorization)> {
    let zero = ChainComplex::zero(x.ring());
    let fz = factor_map(&ChainMap::zero(x, &zero), FactorMode::TrivCofThenFib, spec)?;
    Ok((fz.i.target().clone(), fz))
}

/// A commuting square `p ∘ top = bottom ∘ i` with `i: A -> B`, `p: X -> Y`.
#[derive(Clone, Debug)]
pub struct LiftProblem {
    pub i: ChainMap,
    pub p: ChainMap,
    pub top: ChainMap,
    pub bottom: ChainMap,
}

impl LiftProblem {
    pub fn new(i: ChainMap, p: ChainMap, top: ChainMap, bottom: ChainMap) -> Result<LiftProblem> {
        if top.source() != i.source() || top.target() != p.source() || bottom.source() != i.target() || bottom.target() != p.target() {
            return Err(Error::Validation("lift problem maps do not fit a square".into()));
        }
        if !p.compose(&top).equals(&bottom.compose(&i)) {
            return Err(Error::Validation("square does not commute".into()));
        }
        Ok(LiftProblem { i, p, top, bottom })
    }
}

/// Any diagonal `h: B -> X` with `h ∘ i = top`, `p ∘ h = bottom`, from one linear system.
pub fn find_lift(prob: &LiftProblem) -> Option<ChainMap> {
    let (b, x) = (prob.i.target(), prob.p.source());
    let ring = b.ring().clone();
    if b.is_zero() {
        return Some(ChainMap::zero(b, x));
    }
    let mut sys = MapSystem::new();
    let ids: Vec<usize> = b.degrees().map(|n| sys.unknown(&b.object(n), &x.object(n))).collect();
    let lo = b.lo();
    let idx = |n: i64| ids[(n - lo) as usize];
    for n in b.degrees() {
        let (bn, xn) = (b.object(n), x.object(n));
        let a = prob.i.source().object(n);
        sys.equation(Equation {
            p: a.clone(),
            q: xn.clone(),
            terms: vec![Term { unknown: idx(n), left: Matrix::identity(&ring, xn.gens()), right: prob.i.component(n).matrix().clone() }],
            rhs: prob.top.component(n).matrix().clone(),
        });
        let yn = prob.p.target().object(n);
        sys.equation(Equation {
            p: bn.clone(),
            q: yn,
            terms: vec![Term { unknown: idx(n), left: prob.p.component(n).matrix().clone(), right: Matrix::identity(&ring, bn.gens()) }],
            rhs: prob.bottom.component(n).matrix().clone(),
        });
        if n > lo {
            let xm = x.object(n - 1);
            sys.equation(Equation {
                p: bn.clone(),
                q: xm.clone(),
                terms: vec![
                    Term { unknown: idx(n), left: x.d(n).matrix().clone(), right: Matrix::identity(&ring, bn.gens()) },
                    Term { unknown: idx(n - 1), left: Matrix::identity(&ring, xm.gens()).neg(), right: b.d(n).matrix().clone() },
                ],
                rhs: Matrix::zero(&ring, xm.gens(), bn.gens()),
            });
        } else {
            // Degree below the support of B: d^X_lo ∘ h_lo = 0.
            let xm = x.object(n - 1);
            sys.equation(Equation {
                p: bn.clone(),
                q: xm.clone(),
                terms: vec![Term { unknown: idx(n), left: x.d(n).matrix().clone(), right: Matrix::identity(&ring, bn.gens()) }],
                rhs: Matrix::zero(&ring, xm.gens(), bn.gens()),
            });
        }
    }
    let hi = b.hi();
    // h_hi ∘ d^B_{hi+1} = 0 holds trivially; d^X_{hi+1} terms do not involve h.
    let _ = hi;
    let comps = sys.solve()?;
    let h = ChainMap::new(b.clone(), x.clone(), comps).ok()?;
    (h.compose(&prob.i).equals(&prob.top) && prob.p.compose(&h).equals(&prob.bottom)).then_some(h)
}

/// Lifting axiom: requires `(i trivCof, p fib)` or `(i cof, p trivFib)`.
pub fn solve_lifting(prob: &LiftProblem, spec: &ModelStructureSpec) -> Result<ChainMap> {
    let ci = classify_map(&prob.i, spec)?;
    let cp = classify_map(&prob.p, spec)?;
    if !((ci.triv_cof && cp.fib) || (ci.cof && cp.triv_fib)) {
        return Err(Error::PreconditionFailed("lifting needs (trivCof, fib) or (cof, trivFib)".into()));
    }
    find_lift(prob).ok_or_else(|| Error::Validation("no lift found although the lifting axiom applies".into()))
}

/// Homology of `Q ⊗ Y` for a cofibrant replacement `Q -> X`.
#[derive(Clone, Debug)]
pub struct DerivedTensor {
    /// Nonzero homology, by degree.
    pub homology: Vec<(i64, FpModule)>,
    pub replacement: Factorization,
}

pub fn derived_tensor(x: &ChainComplex, y: &ChainComplex, spec: &ModelStructureSpec) -> Result<DerivedTensor> {
    if !spec.is_projective_type() {
        return Err(Error::PreconditionFailed("derived tensor uses the projective or flat structure".into()));
    }
    let (q, fz) = cofibrant_replacement(x, spec)?;
    let t = tensor_complexes(&q, y);
    let homology = t.degrees().map(|n| (n, t.homology(n))).filter(|(_, h)| !h.is_zero()).collect();
    Ok(DerivedTensor { homology, replacement: fz })
}

/// `(B ⊗ C) ⊔_{A ⊗ C} (A ⊗ D) -> B ⊗ D` for `f: A -> B`, `g: C -> D`.
pub fn pushout_product(f: &ChainMap, g: &ChainMap) -> Result<ChainMap> {
    let ida = ChainMap::identity(f.source());
    let idb = ChainMap::identity(f.target());
    let idc = ChainMap::identity(g.source());
    let idd = ChainMap::identity(g.target());
    let fc = tensor_chainmaps(f, &idc);
    let ag = tensor_chainmaps(&ida, g);
    let (_, u, v) = pushout_chainmaps(&fc, &ag)?;
    let bg = tensor_chainmaps(&idb, g);
    let fd = tensor_chainmaps(f, &idd);
    pushout_induced(&u, &v, &bg, &fd).ok_or_else(|| Error::Validation("pushout cocone does not induce a map".into()))
}

/// `f ⊕ g`.
pub fn sum_map(f: &ChainMap, g: &ChainMap) -> ChainMap {
    let ring = f.ring().clone();
    let s = ComplexSum::new(&[f.source().clone(), g.source().clone()], &ring);
    let t = ComplexSum::new(&[f.target().clone(), g.target().clone()], &ring);
    let m = t.injections[0].compose(f).compose(&s.projections[0]).add(&t.injections[1].compose(g).compose(&s.projections[1]));
    ChainMap::new(s.complex.clone(), t.complex.clone(), s.complex.degrees().map(|n| m.component(n)).collect())
        .expect("sum of chain maps")
}

fn record(checks: &mut Vec<CheckRecord>, name: String, r: Result<Option<String>>) {
    match r {
        Ok(None) => checks.push(CheckRecord::pass(name)),
        Ok(Some(w)) => checks.push(CheckRecord::fail(name, w)),
        Err(e) => checks.push(CheckRecord::fail(name, format!("error: {e}"))),
    }
}

fn describe(f: &ChainMap) -> String {
    format!("{} => {}", f.source(), f.target())
}

/// A commuting square for `(i, p)`: `top` random, `bottom` an extension of `p ∘ top`
/// along `i` when one exists, otherwise the square of a random diagonal.
fn random_square(s: &mut Sampler, i: &ChainMap, p: &ChainMap) -> Result<LiftProblem> {
    let top = s.chain_map(i.source(), p.source());
    match extend_along(i, &p.compose(&top)) {
        Some(bottom) => LiftProblem::new(i.clone(), p.clone(), top, bottom),
        None => {
            let t = s.chain_map(i.target(), p.source());
            LiftProblem::new(i.clone(), p.clone(), t.compose(i), p.compose(&t))
        }
    }
}

/// Some chain map `e: B -> Y` with `e ∘ i = a` for `i: A -> B`, `a: A -> Y`.
pub fn extend_along(i: &ChainMap, a: &ChainMap) -> Option<ChainMap> {
    let (b, y) = (i.target(), a.target());
    let ring = b.ring().clone();
    if b.is_zero() {
        return Some(ChainMap::zero(b, y));
    }
    let mut sys = MapSystem::new();
    let lo = b.lo();
    let ids: Vec<usize> = b.degrees().map(|n| sys.unknown(&b.object(n), &y.object(n))).collect();
    for n in b.degrees() {
        let k = (n - lo) as usize;
        let (bn, yn) = (b.object(n), y.object(n));
        sys.equation(Equation {
            p: i.source().object(n),
            q: yn.clone(),
            terms: vec![Term { unknown: ids[k], left: Matrix::identity(&ring, yn.gens()), right: i.component(n).matrix().clone() }],
            rhs: a.component(n).matrix().clone(),
        });
        let ym = y.object(n - 1);
        let mut terms = vec![Term { unknown: ids[k], left: y.d(n).matrix().clone(), right: Matrix::identity(&ring, bn.gens()) }];
        if n > lo {
            terms.push(Term { unknown: ids[k - 1], left: Matrix::identity(&ring, ym.gens()).neg(), right: b.d(n).matrix().clone() });
        }
        sys.equation(Equation { p: bn.clone(), q: ym.clone(), terms, rhs: Matrix::zero(&ring, ym.gens(), bn.gens()) });
    }
    let comps = sys.solve()?;
    ChainMap::new(b.clone(), y.clone(), comps).ok()
}

/// Seeded verification of weak-equivalence 2-of-3, retract closure of all five flags,
/// both lifting axioms and both factorization axioms. Returns the report and every
/// factorization produced, for further certificate checks.
pub fn check_model_axioms(spec: &ModelStructureSpec, seed: u64, samples: usize) -> Result<(SuiteReport, Vec<Factorization>)> {
    if samples == 0 {
        return Err(Error::PreconditionFailed("samples must be at least 1".into()));
    }
    let mut s = Sampler::new(&spec.ring, seed);
    let mut checks = Vec::new();
    let mut facts = Vec::new();
    for k in 0..samples {
        let tag = format!("{k:03}");
        let f = s.any_map();
        let f2 = s.any_map();
        let extra = s.complex();
        let fa = factor_map(&f, FactorMode::CofThenTrivFib, spec);
        let fb = factor_map(&f, FactorMode::TrivCofThenFib, spec);
        let fa2 = factor_map(&f2, FactorMode::CofThenTrivFib, spec);
        let fb2 = factor_map(&f2, FactorMode::TrivCofThenFib, spec);

        for (name, fz) in [("cof-trivfib", &fa), ("trivcof-fib", &fb)] {
            let r = match fz {
                Ok(fz) => (|| -> Result<Option<String>> {
                    fz.verify(spec)?;
                    let ci = classify_map(&fz.i, spec)?;
                    let cp = classify_map(&fz.p, spec)?;
                    let ok = match fz.mode {
                        FactorMode::CofThenTrivFib => ci.cof && cp.triv_fib,
                        FactorMode::TrivCofThenFib => ci.triv_cof && cp.fib,
                    };
                    Ok((!ok).then(|| describe(&f)))
                })(),
                Err(e) => Err(Error::Validation(e.to_string())),
            };
            record(&mut checks, format!("mc5/{name}/{tag}"), r);
        }

        let r = (|| -> Result<Option<String>> {
            let (fa, fb) = (fa.as_ref().map_err(|e| Error::Validation(e.to_string()))?, fb.as_ref().map_err(|e| Error::Validation(e.to_string()))?);
            let wf = f.is_quasi_iso();
            let ok = fa.p.is_quasi_iso() && fa.i.is_quasi_iso() == wf && fb.i.is_quasi_iso() && fb.p.is_quasi_iso() == wf;
            Ok((!ok).then(|| describe(&f)))
        })();
        record(&mut checks, format!("two-of-three/{tag}"), r);

        let r = (|| -> Result<Option<String>> {
            let cf = classify_map(&f, spec)?;
            let g = sum_map(&f, &ChainMap::identity(&extra));
            let cg = classify_map(&g, spec)?;
            if !cf.consistent() || !cg.consistent() {
                return Ok(Some(format!("inconsistent flags on {}", describe(&f))));
            }
            for (j, name) in FLAG_NAMES.iter().enumerate() {
                if cg.flags()[j] && !cf.flags()[j] {
                    return Ok(Some(format!("{name} not closed under retracts: {}", describe(&f))));
                }
            }
            Ok(None)
        })();
        record(&mut checks, format!("retract/{tag}"), r);

        for (name, i, p) in [
            ("trivcof-fib", fb.as_ref().map(|x| x.i.clone()), fb2.as_ref().map(|x| x.p.clone())),
            ("cof-trivfib", fa.as_ref().map(|x| x.i.clone()), fa2.as_ref().map(|x| x.p.clone())),
        ] {
            let r = (|| -> Result<Option<String>> {
                let i = i.map_err(|e| Error::Validation(e.to_string()))?;
                let p = p.map_err(|e| Error::Validation(e.to_string()))?;
                let prob = random_square(&mut s, &i, &p)?;
                let h = solve_lifting(&prob, spec)?;
                let ok = h.compose(&prob.i).equals(&prob.top) && prob.p.compose(&h).equals(&prob.bottom);
                Ok((!ok).then(|| "lift fails the square".to_string()))
            })();
            record(&mut checks, format!("mc4/{name}/{tag}"), r);
        }
        for fz in [fa, fb, fa2, fb2].into_iter().flatten() {
            facts.push(fz);
        }
    }
    let mut report = SuiteReport::new(format!("model-check --structure {} --ring {}", spec.structure, spec.ring.label()), seed, checks);
    report.sort();
    Ok((report, facts))
}

/// Cyclic test modules `R/(d)` for purity.
fn purity_tests(ring: &Ring) -> Vec<FpModule> {
    ring.cyclic_quotient_generators(crate::cotorsion::DEFAULT_ORDER_BOUND)
        .into_iter()
        .map(|d| FpModule::cyclic(ring, d))
        .collect()
}

/// Seeded verification of the monoidal conditions: (1) left-class modules are flat,
/// (2) the left class is closed under tensor, (3) `R` is in it; (i) cofibrations are
/// degreewise pure, (ii) dg-left ⊗ dg-left is dg-left, (iii) tilde ⊗ dg-left is tilde,
/// (iv) the unit is cofibrant; and pushout-products of cofibrations are cofibrations.
pub fn check_monoidal(spec: &ModelStructureSpec, seed: u64, samples: usize) -> Result<SuiteReport> {
    if !spec.is_projective_type() {
        return Err(Error::PreconditionFailed("monoidal check runs for the projective or flat structure".into()));
    }
    if samples == 0 {
        return Err(Error::PreconditionFailed("samples must be at least 1".into()));
    }
    let ring = spec.ring.clone();
    let pair = &spec.pair;
    let mut checks = Vec::new();
    let left = pair.sample_left(6)?;
    for m in &left {
        let flat = crate::module::is_flat(m);
        record(&mut checks, format!("cond-1/{m}"), Ok((!flat).then(|| m.to_string())));
    }
    for (a, m) in left.iter().enumerate() {
        for n in &left[a..] {
            let t = m.tensor(n);
            let r = pair.left_contains(&t).map(|ok| (!ok).then(|| format!("{m} (x) {n} = {t}")));
            record(&mut checks, format!("cond-2/{m}/{n}"), r);
        }
    }
    let u = FpModule::free(&ring, 1);
    record(&mut checks, "cond-3/unit".into(), pair.left_contains(&u).map(|ok| (!ok).then(|| u.to_string())));
    let zero = ChainComplex::zero(&ring);
    let unit = ChainMap::zero(&zero, &ChainComplex::sphere(0, &u));
    record(&mut checks, "cond-iv/unit".into(), classify_map(&unit, spec).map(|c| (!c.cof).then(|| "0 -> S^0(R)".to_string())));

    let tests = purity_tests(&ring);
    let mut s = Sampler::new(&ring, seed);
    for k in 0..samples {
        let tag = format!("{k:03}");
        let c1 = factor_map(&s.any_map(), FactorMode::CofThenTrivFib, spec)?.i;
        let c2 = factor_map(&s.any_map(), FactorMode::CofThenTrivFib, spec)?.i;
        let bad = c1.source().degrees().find(|&n| !is_pure_mono(&c1.component(n), &tests));
        record(&mut checks, format!("cond-i/{tag}"), Ok(bad.map(|n| format!("degree {n} of {}", describe(&c1)))));

        let (q1, _) = cofibrant_replacement(&s.complex(), spec)?;
        let (q2, _) = cofibrant_replacement(&s.complex(), spec)?;
        let t = tensor_complexes(&q1, &q2);
        let r = spec.certify(&t, ComplexClass::DgFLeft).map(|c| (!c.member).then(|| format!("{q1} (x) {q2}: {}", c.failure.unwrap_or_default())));
        record(&mut checks, format!("cond-ii/{tag}"), r);

        let fb = factor_map(&s.any_map(), FactorMode::TrivCofThenFib, spec)?;
        let mut e = fb.i.cokernel().target().clone();
        if e.is_zero() {
            e = ChainComplex::disk(0, &u);
        }
        let t = tensor_complexes(&e, &q1);
        let r = spec.certify(&t, ComplexClass::FTilde).map(|c| (!c.member).then(|| format!("{e} (x) {q1}: {}", c.failure.unwrap_or_default())));
        record(&mut checks, format!("cond-iii/{tag}"), r);

        let r = (|| -> Result<Option<String>> {
            let pp = pushout_product(&c1, &c2)?;
            let cof = pp.is_mono() && spec.certify(pp.cokernel().target(), ComplexClass::DgFLeft)?.member;
            Ok((!cof).then(|| describe(&pp)))
        })();
        record(&mut checks, format!("pushout-product/{tag}"), r);
    }
    let mut report = SuiteReport::new(format!("monoidal-check --structure {} --ring {}", spec.structure, ring.label()), seed, checks);
    report.sort();
    Ok(report)
}

/// Whether `H_n` of the two cokernels agree in every degree.
pub fn same_cokernel_homology(a: &ChainMap, b: &ChainMap) -> bool {
    let (ca, cb) = (a.cokernel().target().clone(), b.cokernel().target().clone());
    let (lo, hi) = span_of(&[&ca, &cb]);
    (lo..=hi).all(|n| ca.homology(n).is_isomorphic(&cb.homology(n)))
}

/// All chain maps `A -> B` as a module, re-exported for callers building squares.
pub fn hom_generators(a: &ChainComplex, b: &ChainComplex) -> Vec<ChainMap> {
    let h = hom_complex(a, b);
    (0..h.module.gens()).map(|j| h.chain_map(&Matrix::unit_vector(a.ring(), h.module.gens(), j))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::module::tor_n;
    use num_bigint::BigInt;

    fn spec(ring: &Ring, s: StructureId) -> ModelStructureSpec {
        ModelStructureSpec::new(ring, s, (-2, 3), KaplanskyConfig::default()).unwrap()
    }

    fn z() -> Ring {
        Ring::Integers
    }

    #[test]
    fn classification_examples() {
        let r = z();
        let sp = spec(&r, StructureId::Projective);
        let x = ChainComplex::sphere(0, &FpModule::cyclic(&r, 2));
        let c = classify_map(&ChainMap::identity(&x), &sp).unwrap();
        assert_eq!(c.flags(), [true; 5]);
        let zero = ChainComplex::zero(&r);
        let c = classify_map(&ChainMap::zero(&zero, &x), &sp).unwrap();
        assert!(!c.cof && !c.weq);
        let d = ChainComplex::disk(1, &FpModule::free(&r, 1));
        let c = classify_map(&ChainMap::zero(&zero, &d), &sp).unwrap();
        assert!(c.triv_cof && c.cof && c.weq);
        assert!(matches!(ModelStructureSpec::new(&r, StructureId::Injective, (0, 1), KaplanskyConfig::default()), Err(Error::UnsupportedRing(_))));
    }

    #[test]
    fn resolution_of_z_mod_2() {
        let r = z();
        let sp = spec(&r, StructureId::Projective);
        let x = ChainComplex::sphere(0, &FpModule::cyclic(&r, 2));
        let (q, fz) = cofibrant_replacement(&x, &sp).unwrap();
        assert_eq!(q.support(), Some((0, 1)));
        let d1 = q.d(1).matrix().to_i64_rows();
        assert!(d1 == vec![vec![2]] || d1 == vec![vec![-2]], "{q}");
        fz.verify(&sp).unwrap();
        assert!(fz.p.is_quasi_iso());
        let ker = fz.p.kernel().source().clone();
        assert!(ker.is_exact());
        // Already cofibrant.
        let f = ChainComplex::sphere(0, &FpModule::free(&r, 2));
        let (q, _) = cofibrant_replacement(&f, &sp).unwrap();
        assert_eq!(q, f);
    }

    #[test]
    fn factor_disk_to_zero() {
        let r = z();
        let sp = spec(&r, StructureId::Projective);
        let d = ChainComplex::disk(1, &FpModule::free(&r, 1));
        let f = ChainMap::zero(&d, &ChainComplex::zero(&r));
        let fz = factor_map(&f, FactorMode::TrivCofThenFib, &sp).unwrap();
        assert!(fz.i.is_iso());
        assert!(fz.p.equals(&f));
        fz.verify(&sp).unwrap();
    }

    #[test]
    fn injective_structure_over_z4() {
        let r = Ring::zmod(4).unwrap();
        let sp = spec(&r, StructureId::Injective);
        let x = ChainComplex::sphere(0, &FpModule::free(&r, 1));
        let t = ChainComplex::sphere(1, &FpModule::cyclic(&r, 2));
        let mut s = Sampler::new(&r, 3);
        let f = s.chain_map(&t, &x);
        for mode in [FactorMode::CofThenTrivFib, FactorMode::TrivCofThenFib] {
            let fz = factor_map(&f, mode, &sp).unwrap();
            assert!(fz.p.compose(&fz.i).equals(&f));
        }
        let (rx, fz) = fibrant_replacement(&ChainComplex::sphere(0, &FpModule::cyclic(&r, 2)), &sp).unwrap();
        assert!(rx.degrees().all(|n| rx.object(n).relations().is_zero() || n == 0));
        assert!(fz.truncated);
        let x = ChainComplex::disk(1, &FpModule::cyclic(&r, 2));
        let (kappa, truncated) = injective_replacement(&x).unwrap();
        assert!(kappa.is_mono() && kappa.is_quasi_iso() && !truncated);
    }

    #[test]
    fn duality_round_trip() {
        let r = Ring::zmod(4).unwrap();
        let mut s = Sampler::new(&Ring::zmod(6).unwrap(), 2);
        let x = s.complex();
        let ev = evaluation(&x);
        assert!(ev.is_iso());
        let m = FpModule::cyclic(&r, 2);
        let (md, _) = dual_module(&m);
        assert!(md.is_isomorphic(&m));
    }

    #[test]
    fn lifting_examples() {
        let r = z();
        let sp = spec(&r, StructureId::Projective);
        let d = ChainComplex::disk(1, &FpModule::free(&r, 1));
        let zero = ChainComplex::zero(&r);
        let i = ChainMap::zero(&zero, &d);
        let y = ChainComplex::sphere(0, &FpModule::cyclic(&r, 2));
        let x = ChainComplex::disk(1, &FpModule::free(&r, 1)).direct_sum(&ChainComplex::sphere(0, &FpModule::free(&r, 1))).complex;
        let mut s = Sampler::new(&r, 1);
        let p = factor_map(&ChainMap::zero(&zero, &y), FactorMode::CofThenTrivFib, &sp).unwrap().p;
        let _ = x;
        let bottom = s.chain_map(&d, &y);
        let prob = LiftProblem::new(i.clone(), p.clone(), ChainMap::zero(&zero, p.source()), bottom.clone()).unwrap();
        let h = solve_lifting(&prob, &sp).unwrap();
        assert!(p.compose(&h).equals(&bottom));
        let id = ChainMap::identity(&d);
        let top = s.chain_map(&d, p.source());
        let prob = LiftProblem::new(id.clone(), p.clone(), top.clone(), p.compose(&top)).unwrap();
        assert!(solve_lifting(&prob, &sp).unwrap().equals(&top));
        let bad = LiftProblem::new(i, p.clone(), ChainMap::zero(&zero, p.source()), ChainMap::zero(&d, &y));
        assert!(bad.is_ok());
    }

    #[test]
    fn derived_tensor_matches_tor() {
        let r = z();
        let sp = spec(&r, StructureId::Projective);
        let (a, b) = (FpModule::cyclic(&r, 4), FpModule::cyclic(&r, 6));
        let dt = derived_tensor(&ChainComplex::sphere(0, &a), &ChainComplex::sphere(0, &b), &sp).unwrap();
        let degs: Vec<i64> = dt.homology.iter().map(|(n, _)| *n).collect();
        assert_eq!(degs, vec![0, 1]);
        for (n, h) in &dt.homology {
            assert!(h.is_isomorphic(&tor_n(&a, &b, *n as usize).unwrap()));
            assert_eq!(h.invariant_factors(), vec![BigInt::from(2)]);
        }
        let d = ChainComplex::disk(0, &FpModule::free(&r, 2));
        let dt = derived_tensor(&d, &ChainComplex::sphere(0, &b), &sp).unwrap();
        assert!(dt.homology.is_empty());
    }

    #[test]
    fn pushout_products() {
        let r = z();
        let sp = spec(&r, StructureId::Projective);
        let u = FpModule::free(&r, 1);
        let zero = ChainComplex::zero(&r);
        let unit = ChainMap::zero(&zero, &ChainComplex::sphere(0, &u));
        let pp = pushout_product(&unit, &unit).unwrap();
        assert!(pp.source().is_zero() && pp.target().object(0).is_isomorphic(&u));
        let g = ChainMap::new(ChainComplex::sphere(-1, &u), ChainComplex::disk(0, &u), vec![ModuleMap::identity(&u)]).unwrap();
        let pp = pushout_product(&unit, &g).unwrap();
        assert!(pp.is_mono());
        assert!(classify_map(&pp, &sp).unwrap().cof);
        let x = ChainComplex::sphere(0, &FpModule::cyclic(&r, 3));
        let pp = pushout_product(&ChainMap::identity(&x), &g).unwrap();
        assert!(pp.is_iso());
    }

    #[test]
    fn soa_agrees_with_resolution() {
        let r = z();
        let sp = spec(&r, StructureId::Projective);
        let mut s = Sampler::new(&r, 11);
        for _ in 0..4 {
            let f = s.any_map();
            let a = factor_map(&f, FactorMode::CofThenTrivFib, &sp).unwrap();
            let b = factor_map_soa(&f, FactorMode::CofThenTrivFib, &sp).unwrap();
            b.verify(&sp).unwrap();
            assert!(same_cokernel_homology(&a.i, &b.i));
        }
    }

    #[test]
    fn small_suites() {
        let r = z();
        let sp = spec(&r, StructureId::Flat);
        let (rep, _) = check_model_axioms(&sp, 3, 2).unwrap();
        assert_eq!(rep.violations(), 0, "{}", rep.to_text());
        assert!(check_model_axioms(&sp, 3, 0).is_err());
        let rep = check_monoidal(&sp, 3, 1).unwrap();
        assert_eq!(rep.violations(), 0, "{}", rep.to_text());
        let bad = ModelStructureSpec::with_pair(StructureId::Flat, CotorsionPairSpec::mismatched(&r, 2), (-2, 3), KaplanskyConfig::default()).unwrap();
        let rep = check_monoidal(&bad, 3, 1).unwrap();
        let c1 = rep.checks.iter().find(|c| c.name.starts_with("cond-1/") && !c.passed()).unwrap();
        assert_eq!(c1.witness.as_deref(), Some("Z/2"));
    }
}
