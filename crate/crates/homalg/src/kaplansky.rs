//! Small subobjects, filtrations with class quotients, exact subcomplex envelopes and
//! cell decompositions of monomorphisms of complexes.

use std::collections::{HashMap, HashSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::complex::{pushout_chainmaps, pushout_induced, ChainComplex, ChainMap};
use crate::cotorsion::{complex_class_member, ClassId, ClassSpec, ComplexClass, ComplexClassId, CotorsionPairSpec};
use crate::error::{Error, Result};
use crate::linalg::snf;
use crate::matrix::Matrix;
use crate::module::{factor_through_mono, solve_postcompose, FpModule, MapSystem, ModuleMap};
use crate::module::{Equation, Term};
use crate::ring::Ring;

/// Largest finite module searched exhaustively.
pub const EXHAUSTIVE_LIMIT: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KaplanskyConfig {
    pub gamma: usize,
    pub step_budget: usize,
}

impl KaplanskyConfig {
    pub fn new(gamma: usize, step_budget: usize) -> Result<KaplanskyConfig> {
        if gamma == 0 || step_budget == 0 {
            return Err(Error::Validation("gamma and step budget must be at least 1".into()));
        }
        Ok(KaplanskyConfig { gamma, step_budget })
    }
}

impl Default for KaplanskyConfig {
    fn default() -> Self {
        KaplanskyConfig { gamma: 2, step_budget: 16 }
    }
}

/// The submodule of `ambient` generated by the columns of `gens`, as an inclusion.
pub fn span(ambient: &FpModule, gens: &Matrix) -> ModuleMap {
    let free = FpModule::free(ambient.ring(), gens.cols());
    ModuleMap::unchecked(free, ambient.clone(), gens.clone()).image().2
}

/// Whether every column of `x` lies in the submodule `sub`.
pub fn sub_contains(sub: &ModuleMap, x: &Matrix) -> bool {
    let free = FpModule::free(sub.ring(), x.cols());
    factor_through_mono(sub, &ModuleMap::unchecked(free, sub.target().clone(), x.clone())).is_some()
}

/// `sub_a ⊆ sub_b`.
pub fn sub_le(a: &ModuleMap, b: &ModuleMap) -> bool {
    sub_contains(b, a.matrix())
}

pub fn sub_sum(a: &ModuleMap, b: &ModuleMap) -> ModuleMap {
    span(a.target(), &a.matrix().hstack(b.matrix()))
}

/// Preimages of the columns of `y` under an epi `g`.
pub(crate) fn lift_elements(g: &ModuleMap, y: &Matrix) -> Option<Matrix> {
    let free = FpModule::free(g.ring(), y.cols());
    solve_postcompose(g, &ModuleMap::unchecked(free, g.target().clone(), y.clone())).map(|m| m.matrix().clone())
}

/// A `γ`-generated `X' ⊆ X` on which the epi `g: X -> Y` stays epi: the span of preimages
/// of the canonical generators of `Y`, in order.
pub fn find_small_surjecting_sub(g: &ModuleMap, gamma: usize) -> Result<ModuleMap> {
    if !g.is_epi() {
        return Err(Error::PreconditionFailed("map is not an epimorphism".into()));
    }
    let (canon, _, from) = g.target().simplify();
    if canon.gens() > gamma {
        return Err(Error::budget(format!("target needs {} generators, bound is {gamma}", canon.gens())));
    }
    let lifts = lift_elements(g, from.matrix()).expect("epi has preimages");
    let sub = span(g.source(), &lifts);
    assert!(g.compose(&sub).is_epi(), "restriction must stay epi");
    Ok(sub)
}

/// Finite module with elements indexed by canonical mixed-radix coordinates.
pub(crate) struct FiniteModule {
    pub module: FpModule,
    orders: Vec<u64>,
    to: Matrix,
    from: Matrix,
    pub size: usize,
}

impl FiniteModule {
    pub fn new(m: &FpModule, limit: u64) -> Option<FiniteModule> {
        let size = m.cardinality()?.to_u64()?;
        if size > limit {
            return None;
        }
        let (canon, to, from) = m.simplify();
        let orders = canon
            .invariant_factors()
            .iter()
            .map(|d| m.ring().quotient_order(d).and_then(|o| o.to_u64()))
            .collect::<Option<Vec<u64>>>()?;
        Some(FiniteModule { module: m.clone(), orders, to: to.matrix().clone(), from: from.matrix().clone(), size: size as usize })
    }

    fn digits(&self, mut i: usize) -> Vec<u64> {
        let mut d = vec![0; self.orders.len()];
        for k in (0..self.orders.len()).rev() {
            d[k] = (i as u64) % self.orders[k];
            i /= self.orders[k] as usize;
        }
        d
    }

    fn index_of_digits(&self, d: &[u64]) -> usize {
        let mut i = 0usize;
        for (k, &x) in d.iter().enumerate() {
            i = i * self.orders[k] as usize + x as usize;
        }
        i
    }

    /// Index of the element with ambient coordinates `x` (a column).
    pub fn index(&self, x: &Matrix) -> usize {
        let y = self.to.mul(x);
        let d: Vec<u64> = (0..self.orders.len())
            .map(|k| y.get(k, 0).mod_floor(&BigInt::from(self.orders[k])).to_u64().expect("small"))
            .collect();
        self.index_of_digits(&d)
    }

    /// Ambient coordinates of element `i`.
    pub fn element(&self, i: usize) -> Matrix {
        let d = self.digits(i);
        let y = Matrix::column_vector(self.module.ring(), d.iter().map(|&x| BigInt::from(x)).collect());
        self.from.mul(&y)
    }

    fn add(&self, a: usize, b: usize) -> usize {
        let (x, y) = (self.digits(a), self.digits(b));
        let s: Vec<u64> = x.iter().zip(&y).zip(&self.orders).map(|((p, q), o)| (p + q) % o).collect();
        self.index_of_digits(&s)
    }

    /// Subgroup generated by `set ∪ {e}`; over `Z/n` subgroups are exactly the submodules.
    fn extend(&self, set: &[bool], e: usize) -> Vec<bool> {
        let mut out = set.to_vec();
        let mut frontier: Vec<usize> = (0..self.size).filter(|&i| set[i]).collect();
        while let Some(s) = frontier.pop() {
            let t = self.add(s, e);
            if !out[t] {
                out[t] = true;
                frontier.push(t);
            }
        }
        out
    }

    fn closure(&self, gens: &[usize]) -> Vec<bool> {
        let mut set = vec![false; self.size];
        set[0] = true;
        for &g in gens {
            set = self.extend(&set, g);
        }
        set
    }

    /// Submodules containing the span of `seed`, with generating element lists, ordered by
    /// size and then by discovery order.
    pub fn submodules_containing(&self, seed: &[usize]) -> Vec<(Vec<bool>, Vec<usize>)> {
        let start = self.closure(seed);
        let mut seen: HashSet<Vec<bool>> = HashSet::new();
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back((start, seed.to_vec()));
        while let Some((s, gens)) = queue.pop_front() {
            for e in 0..self.size {
                if s[e] {
                    continue;
                }
                let t = self.extend(&s, e);
                if seen.insert(t.clone()) {
                    let mut g = gens.clone();
                    g.push(e);
                    queue.push_back((t, g));
                }
            }
            out.push((s, gens));
        }
        out.sort_by_key(|(s, _)| s.iter().filter(|&&b| b).count());
        out
    }

    pub fn gens_matrix(&self, idx: &[usize]) -> Matrix {
        let ring = self.module.ring();
        let cols: Vec<Matrix> = idx.iter().map(|&i| self.element(i)).collect();
        let refs: Vec<&Matrix> = cols.iter().collect();
        Matrix::hstack_all(ring, self.module.gens(), &refs)
    }
}

/// `X ⊆ S ⊆ F` with `S` and `F/S` in the class.
#[derive(Clone, Debug)]
pub struct Witness {
    pub sub: ModuleMap,
    pub quotient: ModuleMap,
    pub certificates: Vec<String>,
    /// Generator count of `S`.
    pub gens: usize,
}

fn certify(f: &FpModule, x: &ModuleMap, s: ModuleMap, cls: &ClassSpec) -> Result<Witness> {
    let q = s.cokernel();
    let mut certs = Vec::new();
    if !sub_le(x, &s) {
        return Err(Error::Validation("witness does not contain the seed".into()));
    }
    certs.push("X ⊆ S".to_string());
    if !cls.contains(s.source())? {
        return Err(Error::Validation(format!("witness {} not in class {}", s.source(), cls.id)));
    }
    certs.push(format!("S = {} in {}", s.source(), cls.id));
    if !cls.contains(q.target())? {
        return Err(Error::Validation(format!("quotient {} not in class {}", q.target(), cls.id)));
    }
    certs.push(format!("F/S = {} in {}", q.target(), cls.id));
    let gens = s.source().min_gens();
    certs.push(format!("S is {gens}-generated"));
    let _ = f;
    Ok(Witness { sub: s, quotient: q, certificates: certs, gens })
}

/// Saturation of the span of `gens` in a free `Z`-module in canonical coordinates.
fn saturation(ring: &Ring, rank: usize, gens: &Matrix) -> Matrix {
    if gens.cols() == 0 {
        return Matrix::zero(ring, rank, 0);
    }
    let sf = snf(gens);
    sf.u_inv.block(0, 0, rank, sf.rank)
}

/// A small member `S` of the class with `X ⊆ S ⊆ F` and `F/S` in the class.
///
/// Over `Z` (projective or flat class) `S` is the saturation of `X`, a free summand.
/// Over finite rings the submodules containing `X` are searched smallest first.
pub fn kaplansky_witness(f: &FpModule, x: &ModuleMap, cls: &ClassSpec, cfg: &KaplanskyConfig) -> Result<Witness> {
    if !cls.contains(f)? {
        return Err(Error::NotInClass(format!("{f} is not in class {}", cls.id)));
    }
    if x.target() != f {
        return Err(Error::PreconditionFailed("seed is not a submodule of F".into()));
    }
    let ring = f.ring().clone();
    if !ring.is_finite() {
        return match cls.id {
            ClassId::AllObjects => certify(f, x, x.clone(), cls),
            ClassId::Projective | ClassId::Flat => {
                let (canon, to, from) = f.simplify();
                let seed = to.matrix().mul(x.matrix());
                let sat = saturation(&ring, canon.gens(), &seed);
                let s = span(f, &from.matrix().mul(&sat));
                let w = certify(f, x, s, cls)?;
                if w.gens > cfg.gamma.max(x.source().min_gens()) {
                    return Err(Error::budget(format!("witness needs {} generators", w.gens)));
                }
                Ok(w)
            }
            _ => Err(Error::UnsupportedRing(format!("class {} has no witness search over {ring}", cls.id))),
        };
    }
    let fm = FiniteModule::new(f, EXHAUSTIVE_LIMIT)
        .ok_or_else(|| Error::budget(format!("{f} is too large for exhaustive search")))?;
    let seed: Vec<usize> = (0..x.matrix().cols()).map(|j| fm.index(&x.matrix().column(j))).collect();
    for (_, gens) in fm.submodules_containing(&seed) {
        let s = span(f, &fm.gens_matrix(&gens));
        if cls.contains(s.source())? && cls.contains(s.cokernel().target())? {
            return certify(f, x, s, cls);
        }
    }
    Err(Error::NotInClass(format!("no class member between the seed and {f}")))
}

/// `X_0 ⊆ X_1 ⊆ ... ⊆ X_k` inside `ambient`, each quotient in the class and `γ`-generated.
#[derive(Clone, Debug)]
pub struct FiltrationChain {
    pub ambient: FpModule,
    pub steps: Vec<ModuleMap>,
    pub quotients: Vec<FpModule>,
    pub class: ClassSpec,
    pub gamma: usize,
}

impl FiltrationChain {
    pub fn len(&self) -> usize {
        self.quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotients.is_empty()
    }

    pub fn top(&self) -> &ModuleMap {
        self.steps.last().expect("chain has a bottom")
    }

    /// Re-checks inclusions, quotient classes and generator bounds; `reaches` is the
    /// expected top (usually the whole ambient module).
    pub fn validate(&self, reaches: &ModuleMap) -> Result<()> {
        if self.steps.len() != self.quotients.len() + 1 {
            return Err(Error::Validation("chain shape".into()));
        }
        for (k, w) in self.steps.windows(2).enumerate() {
            if !w[0].is_mono() || !w[1].is_mono() {
                return Err(Error::Validation(format!("step {k} is not a submodule")));
            }
            let inc = factor_through_mono(&w[1], &w[0])
                .ok_or_else(|| Error::Validation(format!("step {k} is not contained in step {}", k + 1)))?;
            let q = inc.cokernel().target().clone();
            if !q.is_isomorphic(&self.quotients[k]) {
                return Err(Error::Validation(format!("quotient {k} is {q}, recorded {}", self.quotients[k])));
            }
            if !self.class.contains(&q)? || q.min_gens() > self.gamma {
                return Err(Error::Validation(format!("quotient {k} = {q} fails class or bound")));
            }
        }
        let top = self.top();
        if !(sub_le(top, reaches) && sub_le(reaches, top)) {
            return Err(Error::Validation("chain does not reach the stated top".into()));
        }
        Ok(())
    }
}

/// Filters `A ⊆ B` (with `B/A` in the class) by `γ`-generated class quotients, each step a
/// witness inside `B/X_i` seeded by the first `γ` canonical generators.
pub fn kaplansky_filtration(a: &ModuleMap, cls: &ClassSpec, cfg: &KaplanskyConfig) -> Result<FiltrationChain> {
    let b = a.target().clone();
    if !cls.contains(a.cokernel().target())? {
        return Err(Error::PreconditionFailed(format!("B/A = {} is not in class {}", a.cokernel().target(), cls.id)));
    }
    let mut chain = FiltrationChain {
        ambient: b.clone(),
        steps: vec![a.clone()],
        quotients: vec![],
        class: cls.clone(),
        gamma: cfg.gamma,
    };
    loop {
        let cur = chain.top().clone();
        let pi = cur.cokernel();
        let q = pi.target().clone();
        if q.is_zero() {
            return Ok(chain);
        }
        if chain.len() >= cfg.step_budget {
            return Err(Error::BudgetExceeded {
                context: format!("{} steps did not reach {b}", cfg.step_budget),
                partial: Some(Box::new(chain)),
            });
        }
        let (canon, _, from) = q.simplify();
        let k = canon.gens().min(cfg.gamma);
        let seed = span(&q, &from.matrix().block(0, 0, q.gens(), k));
        let w = kaplansky_witness(&q, &seed, cls, cfg)?;
        let lifts = lift_elements(&pi, w.sub.matrix()).expect("cokernel projection is epi");
        let next = span(&b, &cur.matrix().hstack(&lifts));
        chain.quotients.push(w.sub.source().clone());
        chain.steps.push(next);
    }
}

/// An exact subcomplex `S ⊆ F` containing `X` with cycles and cycle quotients in the class.
#[derive(Clone, Debug)]
pub struct Envelope {
    pub inclusion: ChainMap,
    pub certificates: Vec<String>,
    /// Largest generator count of any `S_n`.
    pub gens_bound: usize,
}

fn sub_intersect_cycles(t: &ModuleMap, d: &ModuleMap) -> ModuleMap {
    // T ∩ ker d, as a submodule of the ambient.
    let k = d.compose(t).kernel();
    span(t.target(), &t.compose(&k).matrix().clone())
}

/// Builds the envelope degree by degree, bottom up: lifts of the previous cycle witness
/// together with `X_n` give `T_n`; a class witness `W_n ⊆ Z_n F` around `T_n ∩ Z_n F` and
/// `d(X_{n+1})` becomes `Z_n S`, and `S_n = T_n + W_n`.
pub fn flat_subcomplex_envelope(
    f: &ChainComplex,
    x: &ChainMap,
    pair: &CotorsionPairSpec,
    cfg: &KaplanskyConfig,
) -> Result<Envelope> {
    let cls = &pair.left;
    let ft = ComplexClassId::new(ComplexClass::FTilde, vec![]);
    if !complex_class_member(f, &ft, pair)?.member {
        return Err(Error::PreconditionFailed("F is not exact with cycles in the class".into()));
    }
    if x.target() != f || !x.is_mono() {
        return Err(Error::PreconditionFailed("X is not a subcomplex of F".into()));
    }
    let ring = f.ring().clone();
    if f.is_zero() {
        return Ok(Envelope { inclusion: ChainMap::zero(&ChainComplex::zero(&ring), f), certificates: vec![], gens_bound: 0 });
    }
    let (lo, hi) = (f.lo(), f.hi());
    // Seed a nonzero cycle when X is zero.
    let x_zero = x.source().is_zero();
    let seed_degree = if x_zero { (lo..=hi).find(|&n| !f.cycles(n).source().is_zero()) } else { None };

    let mut subs: Vec<ModuleMap> = Vec::new();
    let mut w_prev = span(&f.object(lo - 1), &Matrix::zero(&ring, 0, 0));
    let mut certs = Vec::new();
    for n in lo..=hi {
        let fnn = f.object(n);
        let xn = x.component(n);
        let d = f.d(n);
        // Preimages of the generators of W_{n-1}.
        let wl = if w_prev.matrix().cols() == 0 {
            Matrix::zero(&ring, fnn.gens(), 0)
        } else {
            let free = FpModule::free(&ring, w_prev.matrix().cols());
            let target = ModuleMap::unchecked(free, f.object(n - 1), w_prev.matrix().clone());
            solve_postcompose(&d, &target)
                .ok_or_else(|| Error::Validation(format!("cycles in degree {} are not boundaries", n - 1)))?
                .matrix()
                .clone()
        };
        let t = span(&fnn, &xn.matrix().hstack(&wl));
        let zf = f.cycles(n);
        let k = sub_intersect_cycles(&t, &d);
        let dx = x.target().d(n + 1).compose(&x.component(n + 1));
        let mut seed_cols = k.matrix().hstack(dx.matrix());
        if seed_degree == Some(n) {
            seed_cols = seed_cols.hstack(&zf.matrix().column(0));
        }
        // Express the seed inside Z_n F.
        let free = FpModule::free(&ring, seed_cols.cols());
        let seed_map = factor_through_mono(&zf, &ModuleMap::unchecked(free, fnn.clone(), seed_cols))
            .expect("seed consists of cycles");
        let seed = span(zf.source(), seed_map.matrix());
        let w = kaplansky_witness(zf.source(), &seed, cls, cfg)?;
        certs.push(format!("Z_{n} S = {} in {}", w.sub.source(), cls.id));
        certs.push(format!("Z_{n} F / Z_{n} S = {} in {}", w.quotient.target(), cls.id));
        let w_in_f = zf.compose(&w.sub);
        let sn = sub_sum(&t, &w_in_f);
        subs.push(sn);
        w_prev = w_in_f;
    }
    // Assemble S with the induced differentials.
    let objects: Vec<FpModule> = subs.iter().map(|s| s.source().clone()).collect();
    let mut diffs = Vec::new();
    for n in lo + 1..=hi {
        let k = (n - lo) as usize;
        let through = f.d(n).compose(&subs[k]);
        diffs.push(factor_through_mono(&subs[k - 1], &through).expect("S is closed under d"));
    }
    let s = ChainComplex::new(&ring, lo, objects, diffs)?;
    let comps: Vec<ModuleMap> = s.degrees().map(|n| subs[(n - lo) as usize].clone()).collect();
    let inc = ChainMap::new(s.clone(), f.clone(), comps)?;
    let env = Envelope { gens_bound: s.max_gens(), inclusion: inc, certificates: certs };
    verify_envelope(f, x, &env, pair)?;
    Ok(env)
}

/// Re-checks exactness, `X ⊆ S ⊆ F`, and the class of `Z_n S` and `Z_n F / Z_n S`.
pub fn verify_envelope(f: &ChainComplex, x: &ChainMap, env: &Envelope, pair: &CotorsionPairSpec) -> Result<()> {
    let s = env.inclusion.source();
    if !env.inclusion.is_mono() {
        return Err(Error::Validation("S -> F is not mono".into()));
    }
    if !s.is_exact() {
        return Err(Error::Validation("S is not exact".into()));
    }
    if !f.is_zero() && s.is_zero() {
        return Err(Error::Validation("S is zero".into()));
    }
    for n in f.degrees() {
        let sn = env.inclusion.component(n);
        let xn = x.component(n);
        if !sub_contains(&span(&f.object(n), sn.matrix()), xn.matrix()) {
            return Err(Error::Validation(format!("X_{n} not inside S_{n}")));
        }
        let zs = s.cycles(n);
        let zf = f.cycles(n);
        let zs_in_f = sn.compose(&zs);
        let l = factor_through_mono(&zf, &zs_in_f).expect("cycles of S are cycles of F");
        if !pair.left_contains(zs.source())? {
            return Err(Error::Validation(format!("Z_{n} S = {} not in class", zs.source())));
        }
        let q = l.cokernel().target().clone();
        if !pair.left_contains(&q)? {
            return Err(Error::Validation(format!("Z_{n} F / Z_{n} S = {q} not in class")));
        }
    }
    Ok(())
}

/// Which generating mono a cell is a pushout of.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    /// `0 -> S^n(R)`.
    Sphere(i64),
    /// `0 -> D^n(R)`.
    Disk(i64),
    /// `S^{n-1}(R) -> D^n(R)`.
    Boundary(i64),
    /// `S^n(I -> R)` for an ideal `I = (t)`.
    Ideal(i64),
}

/// One pushout square `D <- S -> W_k`, `W_{k+1} = W_k ⊔_S D`.
#[derive(Clone, Debug)]
pub struct Cell {
    pub kind: CellKind,
    pub generator: ChainMap,
    pub attaching: ChainMap,
    pub inclusion: ChainMap,
    pub corner: ChainMap,
}

impl Cell {
    /// Commutativity plus the universal property against the canonical pushout cocone: the
    /// induced comparison map exists and is an isomorphism.
    pub fn verify(&self) -> bool {
        let lhs = self.corner.compose(&self.generator);
        let rhs = self.inclusion.compose(&self.attaching);
        if !lhs.equals(&rhs) {
            return false;
        }
        let Ok((_, u, v)) = pushout_chainmaps(&self.attaching, &self.generator) else {
            return false;
        };
        match pushout_induced(&u, &v, &self.inclusion, &self.corner) {
            Some(phi) => phi.is_iso(),
            None => false,
        }
    }
}

/// `A = W_0 -> W_1 -> ... -> W_m ≅ B`, each step a cell.
#[derive(Clone, Debug)]
pub struct CellChain {
    pub map: ChainMap,
    pub cells: Vec<Cell>,
    /// `W_m -> B`, an isomorphism.
    pub comparison: ChainMap,
}

impl CellChain {
    /// `comparison ∘ inclusions`, which must equal the original mono.
    pub fn compose(&self) -> ChainMap {
        let mut acc = ChainMap::identity(self.map.source());
        for c in &self.cells {
            acc = c.inclusion.compose(&acc);
        }
        self.comparison.compose(&acc)
    }

    pub fn verify(&self) -> bool {
        self.comparison.is_iso()
            && self.compose().normalized() == self.map.normalized()
            && self.cells.iter().all(|c| c.verify())
    }
}

#[derive(Clone, Debug)]
struct NewGen {
    degree: i64,
    /// Coordinates in `B_degree`.
    column: Matrix,
    /// Torsion order `t` with `t g ∈ A`, or `None` for a free generator.
    torsion: Option<BigInt>,
}

/// Writes a mono `f: A -> B` whose cokernel is degreewise free (or, for pairs with ideal
/// generating monos, has torsion only on cycles) as a chain of pushouts of generating monos.
pub fn icell_decompose(f: &ChainMap, pair: &CotorsionPairSpec, _cfg: &KaplanskyConfig) -> Result<CellChain> {
    if !f.is_mono() {
        return Err(Error::PreconditionFailed("map is not mono".into()));
    }
    let ring = f.ring().clone();
    let a = f.source().clone();
    let b = f.target().clone();
    let cok = f.cokernel();
    let (lo, hi) = match (a.support(), b.support()) {
        (_, None) => (0, -1),
        (None, Some(s)) => s,
        (Some(x), Some(y)) => (x.0.min(y.0), x.1.max(y.1)),
    };
    let window = (lo.min(hi), hi);
    let dg = ComplexClassId::with_default_family(ComplexClass::DgFLeft, pair, window)?;
    let cert = complex_class_member(cok.target(), &dg, pair)?;
    let ideal_monos: Vec<&ModuleMap> =
        pair.generating_monos.iter().filter(|k| !k.source().is_zero()).collect();
    if !cert.member && ideal_monos.is_empty() {
        return Err(Error::CertificateMissing(format!(
            "cokernel not certified in {}: {}",
            cert.class,
            cert.failure.unwrap_or_default()
        )));
    }

    // Complement generators: lifts of the canonical generators of each C_n.
    let mut gens: Vec<NewGen> = Vec::new();
    for n in lo..=hi {
        let cn = cok.component(n);
        let (canon, _, from) = cn.target().simplify();
        if canon.gens() == 0 {
            continue;
        }
        let lifts = lift_elements(&cn, from.matrix()).expect("cokernel projection is epi");
        for (j, d) in canon.invariant_factors().iter().enumerate() {
            let torsion = if d.is_zero() { None } else { Some(d.clone()) };
            if torsion.is_some() && ideal_monos.is_empty() {
                return Err(Error::CertificateMissing(format!("cokernel in degree {n} has torsion")));
            }
            gens.push(NewGen { degree: n, column: lifts.column(j), torsion });
        }
    }

    // Final presentation W: W_n = A_n ⊕ R^{k_n}, with torsion relations t g - w.
    let mut w_objects = Vec::new();
    let mut comparison = Vec::new();
    for n in lo..=hi {
        let an = a.object(n);
        let mine: Vec<&NewGen> = gens.iter().filter(|g| g.degree == n).collect();
        let k = mine.len();
        let mut rels = an.relations().block_diag(&Matrix::zero(&ring, k, 0));
        for (j, g) in mine.iter().enumerate() {
            if let Some(t) = &g.torsion {
                let tg = g.column.scale(t);
                let free = FpModule::free(&ring, 1);
                let w = factor_through_mono(&f.component(n), &ModuleMap::unchecked(free, b.object(n), tg))
                    .ok_or_else(|| Error::CertificateMissing("torsion relation leaves the source".into()))?;
                let mut col = Matrix::zero(&ring, an.gens() + k, 1);
                col.paste(0, 0, &w.matrix().neg());
                col.set(an.gens() + j, 0, t.clone());
                rels = rels.hstack(&col);
            }
        }
        let wn = FpModule::new(&ring, an.gens() + k, rels)?;
        let cols: Vec<&Matrix> = mine.iter().map(|g| &g.column).collect();
        let m = f.component(n).matrix().hstack(&Matrix::hstack_all(&ring, b.object(n).gens(), &cols));
        comparison.push(ModuleMap::new(wn.clone(), b.object(n), m)?);
        w_objects.push(wn);
    }
    let comp_inv: Vec<ModuleMap> = comparison
        .iter()
        .map(|c| c.inverse().ok_or_else(|| Error::CertificateMissing("complement does not split".into())))
        .collect::<Result<_>>()?;
    let mut w_diffs = Vec::new();
    for n in lo + 1..=hi {
        let k = (n - lo) as usize;
        w_diffs.push(comp_inv[k - 1].compose(&b.d(n)).compose(&comparison[k]));
    }
    let w_final = ChainComplex::new(&ring, lo, w_objects.clone(), w_diffs)?;

    // Attachment order: by degree; a cycle generator hit exactly by the boundary of a
    // generator one degree up is attached together with it as a disk.
    let offset = |n: i64| a.object(n).gens();
    let index_in_degree: Vec<usize> = gens
        .iter()
        .enumerate()
        .map(|(i, g)| gens[..i].iter().filter(|h| h.degree == g.degree).count())
        .collect();
    let boundary_of = |i: usize| -> Matrix {
        let g = &gens[i];
        let col = offset(g.degree) + index_in_degree[i];
        let dn = w_final.d(g.degree);
        if dn.matrix().rows() == 0 {
            Matrix::zero(&ring, 0, 1)
        } else {
            w_final.object(g.degree - 1).canonical_rep(&dn.matrix().column(col))
        }
    };
    let mut partner: HashMap<usize, usize> = HashMap::new();
    for (i, g) in gens.iter().enumerate() {
        if g.torsion.is_some() {
            continue;
        }
        let bd = boundary_of(i);
        for (j, h) in gens.iter().enumerate() {
            if h.degree != g.degree - 1 || h.torsion.is_some() || partner.values().any(|&p| p == j) {
                continue;
            }
            let hb = boundary_of(j);
            if !hb.is_zero() {
                continue;
            }
            let e = Matrix::unit_vector(&ring, w_final.object(h.degree).gens(), offset(h.degree) + index_in_degree[j]);
            if bd == e {
                partner.insert(i, j);
                break;
            }
        }
    }
    let paired_low: HashSet<usize> = partner.values().copied().collect();
    let mut order: Vec<Vec<usize>> = Vec::new();
    for n in lo..=hi {
        let here: Vec<usize> = (0..gens.len()).filter(|&i| gens[i].degree == n).collect();
        for &i in &here {
            if let Some(&j) = partner.get(&i) {
                order.push(vec![j, i]);
            }
        }
        for &i in &here {
            if !partner.contains_key(&i) && !paired_low.contains(&i) {
                order.push(vec![i]);
            }
        }
    }

    // Stage complexes: A plus the attached generators, as sub-presentations of W.
    let mut attached: HashSet<usize> = HashSet::new();
    let stage = |att: &HashSet<usize>| -> (ChainComplex, Vec<Vec<usize>>) {
        let mut objs = Vec::new();
        let mut keep_all = Vec::new();
        for n in lo..=hi {
            let mut keep: Vec<usize> = (0..offset(n)).collect();
            for (i, g) in gens.iter().enumerate() {
                if g.degree == n && att.contains(&i) {
                    keep.push(offset(n) + index_in_degree[i]);
                }
            }
            let wn = w_final.object(n);
            let rels_all = wn.relations();
            // Relations of W_n supported on the kept generators.
            let mut rel_cols = Vec::new();
            for c in 0..rels_all.cols() {
                let col = rels_all.column(c);
                let inside = (0..wn.gens()).all(|r| keep.contains(&r) || col.get(r, 0).is_zero());
                if inside {
                    rel_cols.push(col.select_rows(&keep));
                }
            }
            let refs: Vec<&Matrix> = rel_cols.iter().collect();
            let rels = Matrix::hstack_all(&ring, keep.len(), &refs);
            objs.push(FpModule::new(&ring, keep.len(), rels).expect("shape"));
            keep_all.push(keep);
        }
        let mut diffs = Vec::new();
        for n in lo + 1..=hi {
            let k = (n - lo) as usize;
            let m = w_final.d(n).matrix().select_rows(&keep_all[k - 1]).select_cols(&keep_all[k]);
            diffs.push(ModuleMap::unchecked(objs[k].clone(), objs[k - 1].clone(), m));
        }
        (ChainComplex::unchecked(&ring, lo, objs, diffs), keep_all)
    };

    let embed = |from: &(ChainComplex, Vec<Vec<usize>>), to: &(ChainComplex, Vec<Vec<usize>>)| -> ChainMap {
        let comps = from
            .0
            .degrees()
            .map(|n| {
                let k = (n - lo) as usize;
                let mut m = Matrix::zero(&ring, to.0.object(n).gens(), from.0.object(n).gens());
                for (c, idx) in from.1[k].iter().enumerate() {
                    let r = to.1[k].iter().position(|x| x == idx).expect("stage grows");
                    m.set(r, c, BigInt::from(1));
                }
                ModuleMap::unchecked(from.0.object(n), to.0.object(n), m)
            })
            .collect();
        ChainMap::unchecked(from.0.clone(), to.0.clone(), comps)
    };

    let start = stage(&attached);
    let a_to_w0 = {
        let comps = a
            .degrees()
            .map(|n| ModuleMap::unchecked(a.object(n), start.0.object(n), Matrix::identity(&ring, a.object(n).gens())))
            .collect();
        ChainMap::unchecked(a.clone(), start.0.clone(), comps)
    };
    let mut cur = start;
    let mut cells = Vec::new();
    let r1 = FpModule::free(&ring, 1);
    for group in &order {
        for &i in group {
            attached.insert(i);
        }
        let next = stage(&attached);
        let inclusion = embed(&cur, &next);
        let top = *group.last().expect("nonempty group");
        let g = &gens[top];
        let n = g.degree;
        let col_in = |i: usize, st: &(ChainComplex, Vec<Vec<usize>>)| -> usize {
            let k = (gens[i].degree - lo) as usize;
            st.1[k].iter().position(|&x| x == offset(gens[i].degree) + index_in_degree[i]).expect("attached")
        };
        let (kind, generator, attaching, corner) = if group.len() == 2 {
            let low = group[0];
            let disk = ChainComplex::disk(n, &r1);
            let gen = ChainMap::zero(&ChainComplex::zero(&ring), &disk);
            let att = ChainMap::zero(&ChainComplex::zero(&ring), &cur.0);
            let comps = disk
                .degrees()
                .map(|m| {
                    let idx = if m == n { col_in(top, &next) } else { col_in(low, &next) };
                    let e = Matrix::unit_vector(&ring, next.0.object(m).gens(), idx);
                    ModuleMap::unchecked(r1.clone(), next.0.object(m), e)
                })
                .collect();
            (CellKind::Disk(n), gen, att, ChainMap::unchecked(disk, next.0.clone(), comps))
        } else if let Some(t) = &g.torsion {
            let k = ideal_monos
                .iter()
                .find(|k| k.cokernel().target().is_isomorphic(&FpModule::cyclic(&ring, t.clone())))
                .ok_or_else(|| Error::CertificateMissing(format!("no generating mono with cokernel R/({t})")))?;
            if !boundary_of(top).is_zero() {
                return Err(Error::CertificateMissing(format!("torsion generator in degree {n} is not a cycle")));
            }
            let gen = crate::cotorsion::sphere_map(n, k);
            let kt = k.matrix().get(0, 0).clone();
            let e = Matrix::unit_vector(&ring, next.0.object(n).gens(), col_in(top, &next));
            // k(1) = kt, so the attaching map sends 1 to kt · g, which lies in W_k.
            let img = next.0.object(n).canonical_rep(&e.scale(&kt));
            let free = FpModule::free(&ring, 1);
            let into_cur = factor_through_mono(&inclusion.component(n), &ModuleMap::unchecked(free, next.0.object(n), img))
                .expect("t g lies in the previous stage");
            let att = ChainMap::new(
                gen.source().clone(),
                cur.0.clone(),
                vec![ModuleMap::unchecked(k.source().clone(), cur.0.object(n), into_cur.matrix().clone())],
            )?;
            let corner = ChainMap::new(
                gen.target().clone(),
                next.0.clone(),
                vec![ModuleMap::unchecked(k.target().clone(), next.0.object(n), e)],
            )?;
            (CellKind::Ideal(n), gen, att, corner)
        } else {
            let bd = boundary_of(top);
            let e = Matrix::unit_vector(&ring, next.0.object(n).gens(), col_in(top, &next));
            if bd.is_zero() {
                let s = ChainComplex::sphere(n, &r1);
                let gen = ChainMap::zero(&ChainComplex::zero(&ring), &s);
                let att = ChainMap::zero(&ChainComplex::zero(&ring), &cur.0);
                let corner = ChainMap::unchecked(s, next.0.clone(), vec![ModuleMap::unchecked(r1.clone(), next.0.object(n), e)]);
                (CellKind::Sphere(n), gen, att, corner)
            } else {
                let s = ChainComplex::sphere(n - 1, &r1);
                let disk = ChainComplex::disk(n, &r1);
                let gen = ChainMap::new(s.clone(), disk.clone(), vec![ModuleMap::identity(&r1)])?;
                // Boundary in the coordinates of the current stage.
                let k = (n - 1 - lo) as usize;
                let bd_cur = bd.select_rows(&cur.1[k]);
                let att = ChainMap::new(
                    s,
                    cur.0.clone(),
                    vec![ModuleMap::unchecked(r1.clone(), cur.0.object(n - 1), bd_cur.clone())],
                )?;
                let bd_next = inclusion.component(n - 1).matrix().mul(&bd_cur);
                let comps = disk
                    .degrees()
                    .map(|m| {
                        let v = if m == n { e.clone() } else { bd_next.clone() };
                        ModuleMap::unchecked(r1.clone(), next.0.object(m), v)
                    })
                    .collect();
                (CellKind::Boundary(n), gen, att, ChainMap::new(disk, next.0.clone(), comps)?)
            }
        };
        cells.push(Cell { kind, generator, attaching, inclusion, corner });
        cur = next;
    }
    // W_m is W itself up to identical presentations; compare to B.
    let last = cur.0.clone();
    let comps: Vec<ModuleMap> = last
        .degrees()
        .map(|n| {
            let k = (n - lo) as usize;
            let full = comparison[k].matrix().select_cols(&cur.1[k]);
            ModuleMap::unchecked(last.object(n), b.object(n), full)
        })
        .collect();
    let comparison_map = ChainMap::new(last, b.clone(), comps)?;
    // Fold A -> W_0 into the first inclusion so that composing starts at A.
    let mut cells = cells;
    if let Some(first) = cells.first_mut() {
        first.inclusion = first.inclusion.compose(&a_to_w0);
        first.attaching = if first.attaching.source().is_zero() {
            ChainMap::zero(first.attaching.source(), &a)
        } else {
            let comps = first
                .attaching
                .source()
                .degrees()
                .map(|n| ModuleMap::unchecked(first.attaching.source().object(n), a.object(n), first.attaching.component(n).matrix().clone()))
                .collect();
            ChainMap::new(first.attaching.source().clone(), a.clone(), comps)?
        };
        let chain = CellChain { map: f.clone(), cells, comparison: comparison_map };
        return Ok(chain);
    }
    let comparison_map = comparison_map.compose(&a_to_w0);
    Ok(CellChain { map: f.clone(), cells, comparison: comparison_map })
}

/// Whether `f` makes its tensor against every test cyclic module injective.
pub fn is_pure_mono(f: &ModuleMap, tests: &[FpModule]) -> bool {
    tests.iter().all(|c| f.tensor(&ModuleMap::identity(c)).is_mono())
}

/// Solves `h ∘ i = top` and `p ∘ h = bottom` for module maps, if possible.
pub fn module_lift(i: &ModuleMap, p: &ModuleMap, top: &ModuleMap, bottom: &ModuleMap) -> Option<ModuleMap> {
    let ring = i.ring().clone();
    let mut sys = MapSystem::new();
    let h = sys.unknown(i.target(), p.source());
    sys.equation(Equation {
        p: i.source().clone(),
        q: p.source().clone(),
        terms: vec![Term { unknown: h, left: Matrix::identity(&ring, p.source().gens()), right: i.matrix().clone() }],
        rhs: top.matrix().clone(),
    });
    sys.equation(Equation {
        p: i.target().clone(),
        q: p.target().clone(),
        terms: vec![Term { unknown: h, left: p.matrix().clone(), right: Matrix::identity(&ring, i.target().gens()) }],
        rhs: bottom.matrix().clone(),
    });
    sys.solve().map(|mut v| v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> Ring {
        Ring::Integers
    }

    fn m(ring: &Ring, rows: &[Vec<i64>]) -> Matrix {
        Matrix::from_rows(ring, rows)
    }

    #[test]
    fn surjecting_subs() {
        let r = z();
        let g = ModuleMap::new(FpModule::free(&r, 2), FpModule::cyclic(&r, 2), m(&r, &[vec![1, 0]])).unwrap();
        let s = find_small_surjecting_sub(&g, 1).unwrap();
        assert_eq!(s.source().gens(), 1);
        assert!(sub_contains(&s, &m(&r, &[vec![1], vec![0]])));
        assert!(!sub_contains(&s, &m(&r, &[vec![0], vec![1]])));
        let id = ModuleMap::identity(&FpModule::free(&r, 1));
        let s = find_small_surjecting_sub(&id, 1).unwrap();
        assert!(s.is_iso());
        let g = ModuleMap::new(FpModule::free(&r, 1), FpModule::cyclic(&r, 6), m(&r, &[vec![1]])).unwrap();
        assert!(find_small_surjecting_sub(&g, 1).unwrap().is_iso());
        let g = ModuleMap::new(FpModule::free(&r, 2), FpModule::free(&r, 2), Matrix::identity(&r, 2)).unwrap();
        assert!(matches!(find_small_surjecting_sub(&g, 1), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn witness_over_z() {
        let r = z();
        let f = FpModule::free(&r, 3);
        let x = span(&f, &m(&r, &[vec![2], vec![3], vec![0]]));
        let cls = ClassSpec::new(ClassId::Projective, 1);
        let w = kaplansky_witness(&f, &x, &cls, &KaplanskyConfig::new(1, 4).unwrap()).unwrap();
        assert_eq!(w.gens, 1);
        assert_eq!(w.quotient.target().invariant_factors(), vec![BigInt::zero(), BigInt::zero()]);
        let all = span(&f, &Matrix::identity(&r, 3));
        let w = kaplansky_witness(&f, &all, &cls, &KaplanskyConfig::new(3, 4).unwrap()).unwrap();
        assert!(w.sub.is_iso() && w.quotient.target().is_zero());
        let t = FpModule::cyclic(&r, 2);
        let err = kaplansky_witness(&t, &span(&t, &Matrix::zero(&r, 1, 0)), &cls, &KaplanskyConfig::default());
        assert!(matches!(err, Err(Error::NotInClass(_))));
    }

    #[test]
    fn witness_over_z6_is_the_idempotent_summand() {
        // 3·Z/6 is generated by the idempotent 3, so it is itself projective.
        let r = Ring::zmod(6).unwrap();
        let f = FpModule::free(&r, 1);
        let x = span(&f, &m(&r, &[vec![3]]));
        let cls = ClassSpec::new(ClassId::Flat, 1);
        let w = kaplansky_witness(&f, &x, &cls, &KaplanskyConfig::default()).unwrap();
        assert_eq!(w.sub.source().cardinality(), Some(BigInt::from(2)));
        assert_eq!(w.quotient.target().cardinality(), Some(BigInt::from(3)));
    }

    #[test]
    fn filtrations() {
        let r = z();
        let b = FpModule::free(&r, 2);
        let zero = span(&b, &Matrix::zero(&r, 2, 0));
        let cls = ClassSpec::new(ClassId::Projective, 1);
        let cfg = KaplanskyConfig::new(1, 4).unwrap();
        let ch = kaplansky_filtration(&zero, &cls, &cfg).unwrap();
        assert_eq!(ch.len(), 2);
        ch.validate(&ModuleMap::identity(&b)).unwrap();
        let ch = kaplansky_filtration(&ModuleMap::identity(&b), &cls, &cfg).unwrap();
        assert!(ch.is_empty());
        let r6 = Ring::zmod(6).unwrap();
        let b6 = FpModule::free(&r6, 1);
        let ch = kaplansky_filtration(&span(&b6, &Matrix::zero(&r6, 1, 0)), &ClassSpec::new(ClassId::Flat, 1), &cfg).unwrap();
        assert_eq!(ch.len(), 1);
        let short = KaplanskyConfig::new(1, 1).unwrap();
        match kaplansky_filtration(&zero, &cls, &short) {
            Err(Error::BudgetExceeded { partial: Some(p), .. }) => assert_eq!(p.len(), 1),
            other => panic!("expected budget failure, got {other:?}"),
        }
    }

    #[test]
    fn envelope_of_a_coordinate() {
        let r = z();
        let pair = CotorsionPairSpec::flat(&r, 1);
        let f2 = FpModule::free(&r, 2);
        let f = ChainComplex::disk(1, &f2);
        let x0 = span(&f2, &m(&r, &[vec![1], vec![0]]));
        let xc = ChainComplex::sphere(0, x0.source());
        let x = ChainMap::new(xc, f.clone(), vec![x0]).unwrap();
        let env = flat_subcomplex_envelope(&f, &x, &pair, &KaplanskyConfig::new(1, 4).unwrap()).unwrap();
        let s = env.inclusion.source();
        assert_eq!(s.support(), Some((0, 1)));
        assert_eq!(s.object(0).gens(), 1);
        assert_eq!(s.object(1).gens(), 1);
        let zero = ChainMap::zero(&ChainComplex::zero(&r), &f);
        let env = flat_subcomplex_envelope(&f, &zero, &pair, &KaplanskyConfig::new(1, 4).unwrap()).unwrap();
        assert!(!env.inclusion.source().is_zero());
        let d0 = ChainComplex::disk(0, &FpModule::free(&r, 1));
        let env = flat_subcomplex_envelope(&d0, &ChainMap::identity(&d0), &pair, &KaplanskyConfig::default()).unwrap();
        assert!(env.inclusion.is_iso());
    }

    #[test]
    fn cells() {
        let r = z();
        let pair = CotorsionPairSpec::projective(&r, 1);
        let cfg = KaplanskyConfig::default();
        let zz = FpModule::free(&r, 1);
        let zero = ChainComplex::zero(&r);
        let s0 = ChainComplex::sphere(0, &zz);
        let ch = icell_decompose(&ChainMap::zero(&zero, &s0), &pair, &cfg).unwrap();
        assert_eq!(ch.cells.len(), 1);
        assert_eq!(ch.cells[0].kind, CellKind::Sphere(0));
        assert!(ch.verify());
        let g = ChainMap::new(ChainComplex::sphere(-1, &zz), ChainComplex::disk(0, &zz), vec![ModuleMap::identity(&zz)]).unwrap();
        let ch = icell_decompose(&g, &pair, &cfg).unwrap();
        assert_eq!(ch.cells.len(), 1);
        assert_eq!(ch.cells[0].kind, CellKind::Boundary(0));
        assert!(ch.verify());
        let sum = ChainComplex::disk(1, &zz).direct_sum(&ChainComplex::disk(0, &zz)).complex;
        let ch = icell_decompose(&ChainMap::zero(&zero, &sum), &pair, &cfg).unwrap();
        assert_eq!(ch.cells.len(), 2);
        assert!(ch.cells.iter().all(|c| matches!(c.kind, CellKind::Disk(_))));
        assert!(ch.verify());
        let t = ChainComplex::sphere(0, &FpModule::cyclic(&r, 2));
        assert!(matches!(icell_decompose(&ChainMap::zero(&zero, &t), &pair, &cfg), Err(Error::CertificateMissing(_))));
    }

    #[test]
    fn torsion_cells_for_the_injective_pair() {
        let r = Ring::zmod(4).unwrap();
        let pair = CotorsionPairSpec::injective(&r, 1).unwrap();
        let zero = ChainComplex::zero(&r);
        let t = ChainComplex::sphere(0, &FpModule::cyclic(&r, 2));
        let ch = icell_decompose(&ChainMap::zero(&zero, &t), &pair, &KaplanskyConfig::default()).unwrap();
        assert_eq!(ch.cells.len(), 1);
        assert_eq!(ch.cells[0].kind, CellKind::Ideal(0));
        assert!(ch.verify());
    }
}
