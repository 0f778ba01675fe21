//! Finitely presented modules and the maps between them.
//!
//! A module is `R^g / im(A)` for a relation matrix `A` with `g` rows. Elements are
//! column vectors of length `g`. A map `M -> N` is a `gens(N) x gens(M)` matrix.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{kernel_basis, snf, SmithForm};
use crate::matrix::Matrix;
use crate::ring::Ring;

#[derive(Debug)]
struct Canonical {
    sf: SmithForm,
    /// Generator indices (in the Smith basis) with non-unit invariant factor.
    kept: Vec<usize>,
    factors: Vec<BigInt>,
}

pub struct FpModule {
    ring: Ring,
    gens: usize,
    relations: Matrix,
    canon: OnceLock<Arc<Canonical>>,
}

impl Clone for FpModule {
    fn clone(&self) -> Self {
        let canon = OnceLock::new();
        if let Some(c) = self.canon.get() {
            let _ = canon.set(c.clone());
        }
        FpModule { ring: self.ring.clone(), gens: self.gens, relations: self.relations.clone(), canon }
    }
}

impl PartialEq for FpModule {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring && self.gens == other.gens && self.relations == other.relations
    }
}

impl Eq for FpModule {}

impl Hash for FpModule {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.ring.hash(state);
        self.gens.hash(state);
        self.relations.hash(state);
    }
}

impl fmt::Debug for FpModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FpModule({} gens over {}, rels {})", self.gens, self.ring, self.relations)
    }
}

impl fmt::Display for FpModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&describe_factors(&self.ring, &self.invariant_factors()))
    }
}

/// Human-readable `Z/2 + Z` style description of `⊕ R/(d_i)`.
pub fn describe_factors(ring: &Ring, factors: &[BigInt]) -> String {
    if factors.is_empty() {
        return "0".to_string();
    }
    factors
        .iter()
        .map(|d| match ring.quotient_order(d) {
            Some(k) if !d.is_zero() => format!("Z/{k}"),
            _ => ring.to_string(),
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

impl FpModule {
    pub fn new(ring: &Ring, gens: usize, relations: Matrix) -> Result<FpModule> {
        if relations.rows() != gens {
            return Err(Error::DimensionMismatch(format!(
                "relation matrix has {} rows for {gens} generators",
                relations.rows()
            )));
        }
        if relations.ring() != ring {
            return Err(Error::RingMismatch(format!("{} vs {}", relations.ring(), ring)));
        }
        Ok(FpModule { ring: ring.clone(), gens, relations, canon: OnceLock::new() })
    }

    pub fn free(ring: &Ring, rank: usize) -> FpModule {
        FpModule::new(ring, rank, Matrix::zero(ring, rank, 0)).expect("shape")
    }

    pub fn zero(ring: &Ring) -> FpModule {
        FpModule::free(ring, 0)
    }

    /// `R/(d)`.
    pub fn cyclic(ring: &Ring, d: impl Into<BigInt>) -> FpModule {
        FpModule::from_factors(ring, &[d.into()])
    }

    /// `⊕ R/(d_i)`, one generator per factor.
    pub fn from_factors(ring: &Ring, factors: &[BigInt]) -> FpModule {
        let n = factors.len();
        let rels = Matrix::diagonal(ring, n, n, factors).nonzero_columns();
        FpModule::new(ring, n, rels).expect("shape")
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn gens(&self) -> usize {
        self.gens
    }

    pub fn relations(&self) -> &Matrix {
        &self.relations
    }

    fn canonical(&self) -> &Canonical {
        self.canon.get_or_init(|| {
            let sf = snf(&self.relations);
            let diag = sf.diagonal();
            let mut kept = Vec::new();
            let mut factors = Vec::new();
            for i in 0..self.gens {
                let d = diag.get(i).cloned().unwrap_or_default();
                if !self.ring.is_unit(&d) {
                    kept.push(i);
                    factors.push(d);
                }
            }
            Arc::new(Canonical { sf, kept, factors })
        })
    }

    /// Invariant factors `d_1 | d_2 | ...`, non-units, with `0` standing for a free summand.
    /// Two modules are isomorphic exactly when these lists agree.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.canonical().factors.clone()
    }

    pub fn is_isomorphic(&self, other: &FpModule) -> bool {
        self.ring == other.ring && self.invariant_factors() == other.invariant_factors()
    }

    pub fn is_zero(&self) -> bool {
        self.canonical().factors.is_empty()
    }

    /// Number of generators of the canonical presentation.
    pub fn min_gens(&self) -> usize {
        self.canonical().factors.len()
    }

    pub fn free_rank(&self) -> usize {
        self.canonical().factors.iter().filter(|d| d.is_zero()).count()
    }

    /// Element count, `None` when infinite.
    pub fn cardinality(&self) -> Option<BigInt> {
        let mut n = BigInt::one();
        for d in &self.canonical().factors {
            n *= self.ring.quotient_order(d)?;
        }
        Some(n)
    }

    /// The canonical presentation `⊕ R/(d_i)` with mutually inverse isomorphisms
    /// `self -> canonical` and `canonical -> self`.
    pub fn simplify(&self) -> (FpModule, ModuleMap, ModuleMap) {
        let c = self.canonical();
        let target = FpModule::from_factors(&self.ring, &c.factors);
        let to = c.sf.u.select_rows(&c.kept);
        let from = c.sf.u_inv.select_cols(&c.kept);
        (
            target.clone(),
            ModuleMap::unchecked(self.clone(), target.clone(), to),
            ModuleMap::unchecked(target, self.clone(), from),
        )
    }

    /// Whether the column `x` is zero in the module.
    pub fn element_is_zero(&self, x: &Matrix) -> bool {
        self.canonical_rep(x).is_zero()
    }

    /// A canonical representative of the class of each column of `x`.
    pub fn canonical_rep(&self, x: &Matrix) -> Matrix {
        let c = self.canonical();
        let y = c.sf.u.select_rows(&c.kept).mul(x);
        let mut y = y;
        for (r, d) in c.factors.iter().enumerate() {
            if d.is_zero() {
                continue;
            }
            for col in 0..y.cols() {
                let v = num_integer::Integer::mod_floor(y.get(r, col), d);
                y.set(r, col, v);
            }
        }
        c.sf.u_inv.select_cols(&c.kept).mul(&y)
    }

    /// Every element of a finite module, as columns in canonical form and
    /// in lexicographic order of canonical coordinates. `None` if infinite or above `limit`.
    pub fn elements(&self, limit: u64) -> Option<Vec<Matrix>> {
        let size = self.cardinality()?.to_u64()?;
        if size > limit {
            return None;
        }
        let c = self.canonical();
        let orders: Vec<u64> =
            c.factors.iter().map(|d| self.ring.quotient_order(d).unwrap().to_u64().unwrap()).collect();
        let from = c.sf.u_inv.select_cols(&c.kept);
        let mut out = Vec::with_capacity(size as usize);
        let mut digits = vec![0u64; orders.len()];
        loop {
            let y = Matrix::column_vector(&self.ring, digits.iter().map(|&x| BigInt::from(x)).collect());
            out.push(from.mul(&y));
            let mut k = orders.len();
            loop {
                if k == 0 {
                    return Some(out);
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < orders[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    /// `self ⊕ other` with injections and projections.
    pub fn direct_sum(&self, other: &FpModule) -> DirectSum {
        DirectSum::new(&[self.clone(), other.clone()])
    }

    pub fn tensor(&self, other: &FpModule) -> FpModule {
        tensor_modules(self, other)
    }

    /// `self^k`.
    pub fn power(&self, k: usize) -> FpModule {
        let id = Matrix::identity(&self.ring, k);
        FpModule::new(&self.ring, self.gens * k, id.kron(&self.relations)).expect("shape")
    }

    /// Presentation with generators reordered by `perm` (new generator `i` is old `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> FpModule {
        FpModule::new(&self.ring, self.gens, self.relations.select_rows(perm)).expect("shape")
    }

    pub fn with_extra_relations(&self, rels: &Matrix) -> FpModule {
        FpModule::new(&self.ring, self.gens, self.relations.hstack(rels)).expect("shape")
    }
}

/// `M_1 ⊕ ... ⊕ M_k` with structure maps.
#[derive(Clone, Debug)]
pub struct DirectSum {
    pub module: FpModule,
    pub injections: Vec<ModuleMap>,
    pub projections: Vec<ModuleMap>,
}

impl DirectSum {
    pub fn new(parts: &[FpModule]) -> DirectSum {
        let ring = parts.first().map(|m| m.ring.clone()).unwrap_or(Ring::Integers);
        DirectSum::with_ring(&ring, parts)
    }

    pub fn with_ring(ring: &Ring, parts: &[FpModule]) -> DirectSum {
        let rels: Vec<&Matrix> = parts.iter().map(|m| &m.relations).collect();
        let total: usize = parts.iter().map(|m| m.gens).sum();
        let module = FpModule::new(ring, total, Matrix::block_diag_all(ring, &rels)).expect("shape");
        let mut injections = Vec::new();
        let mut projections = Vec::new();
        let mut off = 0;
        for m in parts {
            let mut inj = Matrix::zero(ring, total, m.gens);
            inj.paste(off, 0, &Matrix::identity(ring, m.gens));
            projections.push(ModuleMap::unchecked(module.clone(), m.clone(), inj.transpose()));
            injections.push(ModuleMap::unchecked(m.clone(), module.clone(), inj));
            off += m.gens;
        }
        DirectSum { module, injections, projections }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModuleMap {
    source: FpModule,
    target: FpModule,
    matrix: Matrix,
}

impl fmt::Display for ModuleMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} by {}", self.source, self.target, self.matrix)
    }
}

impl ModuleMap {
    /// Checks that the matrix carries source relations into the target relations.
    pub fn new(source: FpModule, target: FpModule, matrix: Matrix) -> Result<ModuleMap> {
        if source.ring != target.ring || matrix.ring() != &source.ring {
            return Err(Error::RingMismatch("map between modules over different rings".into()));
        }
        if matrix.rows() != target.gens || matrix.cols() != source.gens {
            return Err(Error::DimensionMismatch(format!(
                "map matrix is {}x{}, expected {}x{}",
                matrix.rows(),
                matrix.cols(),
                target.gens,
                source.gens
            )));
        }
        let img = matrix.mul(&source.relations);
        if !target.element_is_zero(&img) {
            return Err(Error::Validation(
                "map does not carry source relations into target relations".into(),
            ));
        }
        Ok(ModuleMap { source, target, matrix })
    }

    pub(crate) fn unchecked(source: FpModule, target: FpModule, matrix: Matrix) -> ModuleMap {
        debug_assert!(ModuleMap::new(source.clone(), target.clone(), matrix.clone()).is_ok());
        ModuleMap { source, target, matrix }
    }

    pub fn identity(m: &FpModule) -> ModuleMap {
        ModuleMap { source: m.clone(), target: m.clone(), matrix: Matrix::identity(&m.ring, m.gens) }
    }

    pub fn zero(source: &FpModule, target: &FpModule) -> ModuleMap {
        ModuleMap {
            source: source.clone(),
            target: target.clone(),
            matrix: Matrix::zero(&source.ring, target.gens, source.gens),
        }
    }

    pub fn source(&self) -> &FpModule {
        &self.source
    }

    pub fn target(&self) -> &FpModule {
        &self.target
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn ring(&self) -> &Ring {
        &self.source.ring
    }

    /// `self ∘ f`.
    pub fn compose(&self, f: &ModuleMap) -> ModuleMap {
        assert_eq!(f.target, self.source, "composition of non-composable maps");
        ModuleMap {
            source: f.source.clone(),
            target: self.target.clone(),
            matrix: self.matrix.mul(&f.matrix),
        }
    }

    pub fn add(&self, other: &ModuleMap) -> ModuleMap {
        assert!(self.source == other.source && self.target == other.target, "sum of unrelated maps");
        ModuleMap {
            source: self.source.clone(),
            target: self.target.clone(),
            matrix: self.matrix.add(&other.matrix),
        }
    }

    pub fn neg(&self) -> ModuleMap {
        ModuleMap { source: self.source.clone(), target: self.target.clone(), matrix: self.matrix.neg() }
    }

    pub fn sub(&self, other: &ModuleMap) -> ModuleMap {
        self.add(&other.neg())
    }

    pub fn is_zero(&self) -> bool {
        self.target.element_is_zero(&self.matrix)
    }

    /// Equality as homomorphisms (not as matrices).
    pub fn equals(&self, other: &ModuleMap) -> bool {
        self.source == other.source && self.target == other.target && self.sub(other).is_zero()
    }

    /// The same map with the matrix replaced by canonical representatives.
    pub fn normalized(&self) -> ModuleMap {
        ModuleMap {
            source: self.source.clone(),
            target: self.target.clone(),
            matrix: self.target.canonical_rep(&self.matrix),
        }
    }

    /// Inclusion of the kernel, with the kernel in canonical presentation.
    pub fn kernel(&self) -> ModuleMap {
        let ring = self.ring().clone();
        let g = self.source.gens;
        let big = self.matrix.hstack(&self.target.relations);
        let kb = kernel_basis(&big);
        let k0 = kb.block(0, 0, g, kb.cols());
        let k = k0.cols();
        let kb2 = kernel_basis(&k0.hstack(&self.source.relations));
        let rels = kb2.block(0, 0, k, kb2.cols());
        let raw = FpModule::new(&ring, k, rels).expect("shape");
        let (canon, _, from) = raw.simplify();
        ModuleMap::unchecked(canon, self.source.clone(), k0.mul(&from.matrix))
    }

    /// Projection onto the cokernel, in canonical presentation.
    pub fn cokernel(&self) -> ModuleMap {
        let raw = self.target.with_extra_relations(&self.matrix);
        let (canon, to, _) = raw.simplify();
        ModuleMap::unchecked(self.target.clone(), canon, to.matrix)
    }

    /// `source ↠ image ↪ target`.
    pub fn image(&self) -> (FpModule, ModuleMap, ModuleMap) {
        let ring = self.ring().clone();
        let g = self.source.gens;
        let kb = kernel_basis(&self.matrix.hstack(&self.target.relations));
        let rels = kb.block(0, 0, g, kb.cols());
        let raw = FpModule::new(&ring, g, rels).expect("shape");
        let (canon, to, from) = raw.simplify();
        let epi = ModuleMap::unchecked(self.source.clone(), canon.clone(), to.matrix);
        let mono = ModuleMap::unchecked(canon.clone(), self.target.clone(), self.matrix.mul(&from.matrix));
        (canon, epi, mono)
    }

    pub fn is_mono(&self) -> bool {
        self.kernel().source.is_zero()
    }

    pub fn is_epi(&self) -> bool {
        self.cokernel().target.is_zero()
    }

    pub fn is_iso(&self) -> bool {
        self.is_mono() && self.is_epi()
    }

    /// Two-sided inverse of an isomorphism.
    pub fn inverse(&self) -> Option<ModuleMap> {
        if !self.is_iso() {
            return None;
        }
        let id = ModuleMap::identity(&self.target);
        solve_postcompose(self, &id)
    }

    /// `(f ⊗ g)` on tensor presentations built by [`tensor_modules`].
    pub fn tensor(&self, other: &ModuleMap) -> ModuleMap {
        tensor_maps(self, other)
    }

    pub fn with_source(&self, source: FpModule) -> ModuleMap {
        ModuleMap::new(source, self.target.clone(), self.matrix.clone()).expect("compatible source")
    }
}

/// Kernel inclusion, image, and cokernel projection of `f`.
pub fn map_factorization(f: &ModuleMap) -> (ModuleMap, FpModule, ModuleMap) {
    let k = f.kernel();
    let (im, _, _) = f.image();
    let c = f.cokernel();
    (k, im, c)
}

/// Given a mono `k: K -> Y` and `f: X -> Y` with image inside `im(k)`,
/// returns the unique `l: X -> K` with `k ∘ l = f`.
pub fn factor_through_mono(k: &ModuleMap, f: &ModuleMap) -> Option<ModuleMap> {
    assert_eq!(k.target, f.target);
    let big = k.matrix.hstack(&k.target.relations);
    let sol = crate::linalg::solve_linear(&big, &f.matrix).expect("shapes")?;
    let l = sol.block(0, 0, k.source.gens, f.source.gens);
    Some(ModuleMap::unchecked(f.source.clone(), k.source.clone(), l))
}

/// `ker(out) / im(inp)` for `X --inp--> Y --out--> Z` with `out ∘ inp = 0`.
pub fn homology_at(inp: &ModuleMap, out: &ModuleMap) -> FpModule {
    let k = out.kernel();
    let l = factor_through_mono(&k, inp).expect("composite of consecutive maps must vanish");
    l.cokernel().target.clone()
}

/// Matrix whose columns span all maps `P -> Q`, as vectorized `gens(Q) x gens(P)` matrices.
pub fn hom_basis(p: &FpModule, q: &FpModule) -> Matrix {
    let ring = &p.ring;
    let n = p.gens * q.gens;
    if p.relations.is_zero() {
        return Matrix::identity(ring, n);
    }
    // φ ∘ A ≡ 0 in Q^a, i.e. (A^T ⊗ I) vec φ ∈ im(I_a ⊗ B).
    let a = &p.relations;
    let cond = a.transpose().kron(&Matrix::identity(ring, q.gens));
    let slack = Matrix::identity(ring, a.cols()).kron(&q.relations);
    let kb = kernel_basis(&cond.hstack(&slack));
    kb.block(0, 0, n, kb.cols())
}

/// `Hom(P, Q)` as a module, with the vectorized maps its generators stand for.
#[derive(Clone, Debug)]
pub struct HomModule {
    pub module: FpModule,
    /// Column `i` is `vec` of the map attached to generator `i`.
    pub basis: Matrix,
    pub source: FpModule,
    pub target: FpModule,
}

impl HomModule {
    pub fn map_of(&self, coords: &Matrix) -> ModuleMap {
        let v = self.basis.mul(coords);
        ModuleMap::unchecked(
            self.source.clone(),
            self.target.clone(),
            Matrix::unvectorize(&v, self.target.gens, self.source.gens),
        )
    }
}

pub fn hom_module(p: &FpModule, q: &FpModule) -> HomModule {
    let ring = &p.ring;
    let qp = q.power(p.gens);
    let qa = q.power(p.relations.cols());
    let cond = p.relations.transpose().kron(&Matrix::identity(ring, q.gens));
    let f = ModuleMap::unchecked(qp, qa, cond);
    let k = f.kernel();
    HomModule { module: k.source.clone(), basis: k.matrix.clone(), source: p.clone(), target: q.clone() }
}

/// One term `left ∘ φ_k ∘ right` of a linear equation in unknown maps.
#[derive(Clone, Debug)]
pub struct Term {
    pub unknown: usize,
    pub left: Matrix,
    pub right: Matrix,
}

/// `Σ terms = rhs` as maps `p -> q`.
#[derive(Clone, Debug)]
pub struct Equation {
    pub p: FpModule,
    pub q: FpModule,
    pub terms: Vec<Term>,
    pub rhs: Matrix,
}

/// Linear system whose unknowns are module maps `P_k -> Q_k`; solved exactly by one
/// call to the Smith-form solver.
#[derive(Clone, Debug, Default)]
pub struct MapSystem {
    unknowns: Vec<(FpModule, FpModule)>,
    equations: Vec<Equation>,
}

impl MapSystem {
    pub fn new() -> MapSystem {
        MapSystem::default()
    }

    pub fn unknown(&mut self, p: &FpModule, q: &FpModule) -> usize {
        self.unknowns.push((p.clone(), q.clone()));
        self.unknowns.len() - 1
    }

    pub fn equation(&mut self, eq: Equation) {
        assert_eq!(eq.rhs.rows(), eq.q.gens);
        assert_eq!(eq.rhs.cols(), eq.p.gens);
        self.equations.push(eq);
    }

    pub fn set_rhs(&mut self, equation: usize, rhs: Matrix) {
        let e = &mut self.equations[equation];
        assert_eq!((rhs.rows(), rhs.cols()), (e.q.gens, e.p.gens));
        e.rhs = rhs;
    }

    /// The coefficient matrix with unknowns in Hom-basis coordinates followed by slack
    /// columns for the target relations, plus the Hom bases and their column offsets.
    fn assemble(&self, ring: &Ring) -> (Matrix, Vec<Matrix>, Vec<usize>) {
        let bases: Vec<Matrix> = self.unknowns.iter().map(|(p, q)| hom_basis(p, q)).collect();
        let mut offsets = Vec::new();
        let mut acc = 0;
        for b in &bases {
            offsets.push(acc);
            acc += b.cols();
        }
        let slack_cols: Vec<usize> =
            self.equations.iter().map(|e| e.p.gens * e.q.relations.cols()).collect();
        let total_cols = acc + slack_cols.iter().sum::<usize>();
        let total_rows: usize = self.equations.iter().map(|e| e.p.gens * e.q.gens).sum();
        let mut big = Matrix::zero(ring, total_rows, total_cols);
        let (mut row, mut scol) = (0, acc);
        for (e, &sc) in self.equations.iter().zip(&slack_cols) {
            let rows = e.p.gens * e.q.gens;
            for t in &e.terms {
                let block = t.right.transpose().kron(&t.left).mul(&bases[t.unknown]);
                let off = offsets[t.unknown];
                let existing = big.block(row, off, rows, block.cols());
                big.paste(row, off, &existing.add(&block));
            }
            let slack = Matrix::identity(ring, e.p.gens).kron(&e.q.relations);
            big.paste(row, scol, &slack);
            row += rows;
            scol += sc;
        }
        (big, bases, offsets)
    }

    fn rhs_column(&self, ring: &Ring, rhs: &[&Matrix]) -> Matrix {
        let total_rows: usize = self.equations.iter().map(|e| e.p.gens * e.q.gens).sum();
        let mut col = Matrix::zero(ring, total_rows, 1);
        let mut row = 0;
        for (e, r) in self.equations.iter().zip(rhs) {
            col.paste(row, 0, &r.vectorize());
            row += e.p.gens * e.q.gens;
        }
        col
    }

    pub fn solve(&self) -> Option<Vec<ModuleMap>> {
        let ring = match self.unknowns.first() {
            Some((p, _)) => p.ring.clone(),
            None => return Some(vec![]),
        };
        let (big, bases, offsets) = self.assemble(&ring);
        let rhs: Vec<&Matrix> = self.equations.iter().map(|e| &e.rhs).collect();
        let rhs = self.rhs_column(&ring, &rhs);
        let sol = crate::linalg::solve_linear(&big, &rhs).expect("shapes")?;
        let mut out = Vec::new();
        for (k, (p, q)) in self.unknowns.iter().enumerate() {
            let z = sol.block(offsets[k], 0, bases[k].cols(), 1);
            let v = bases[k].mul(&z);
            let m = Matrix::unvectorize(&v, q.gens, p.gens);
            out.push(ModuleMap::unchecked(p.clone(), q.clone(), m));
        }
        Some(out)
    }

    /// Solvability of the system for each alternative list of right-hand sides (one
    /// matrix per equation), with a single Smith form.
    pub fn solvable_for(&self, alternatives: &[Vec<Matrix>]) -> Vec<bool> {
        let Some(ring) = self.unknowns.first().map(|(p, _)| p.ring.clone()) else {
            return alternatives.iter().map(|r| r.iter().all(|m| m.is_zero())).collect();
        };
        let (big, _, _) = self.assemble(&ring);
        let sf = crate::linalg::snf(&big);
        alternatives
            .iter()
            .map(|r| {
                let refs: Vec<&Matrix> = r.iter().collect();
                crate::linalg::solve_with(&sf, &self.rhs_column(&ring, &refs)).is_some()
            })
            .collect()
    }
}

/// Some `φ: P -> Q` with `t ∘ φ = target`, where `t: Q -> Q'` and `target: P -> Q'`.
pub fn solve_postcompose(t: &ModuleMap, target: &ModuleMap) -> Option<ModuleMap> {
    // Column by column first; the coupled system is only needed when that lift is not
    // well defined on the relations of `P`.
    let a = t.matrix.hstack(&target.target.relations);
    let y = crate::linalg::solve_linear(&a, &target.matrix).expect("shapes")?;
    let m = y.block(0, 0, t.source.gens, target.source.gens);
    if let Ok(phi) = ModuleMap::new(target.source.clone(), t.source.clone(), m) {
        return Some(phi);
    }
    let mut sys = MapSystem::new();
    let u = sys.unknown(&target.source, &t.source);
    sys.equation(Equation {
        p: target.source.clone(),
        q: target.target.clone(),
        terms: vec![Term {
            unknown: u,
            left: t.matrix.clone(),
            right: Matrix::identity(t.ring(), target.source.gens),
        }],
        rhs: target.matrix.clone(),
    });
    sys.solve().map(|mut v| v.remove(0))
}

/// Some `ψ: P' -> Q` with `ψ ∘ s = target`, where `s: P -> P'` and `target: P -> Q`.
pub fn solve_precompose(s: &ModuleMap, target: &ModuleMap) -> Option<ModuleMap> {
    // When `s` is onto, lifting the generators of `P'` through `s` gives the answer directly.
    let gens = ModuleMap::unchecked(FpModule::free(s.ring(), s.target.gens), s.target.clone(), Matrix::identity(s.ring(), s.target.gens));
    if let Some(sec) = solve_postcompose(s, &gens) {
        if let Ok(psi) = ModuleMap::new(s.target.clone(), target.target.clone(), target.matrix.mul(&sec.matrix)) {
            if psi.compose(s).equals(target) {
                return Some(psi);
            }
        }
    }
    let mut sys = MapSystem::new();
    let u = sys.unknown(&s.target, &target.target);
    sys.equation(Equation {
        p: target.source.clone(),
        q: target.target.clone(),
        terms: vec![Term {
            unknown: u,
            left: Matrix::identity(s.ring(), target.target.gens),
            right: s.matrix.clone(),
        }],
        rhs: target.matrix.clone(),
    });
    sys.solve().map(|mut v| v.remove(0))
}

/// A short exact sequence `A ↪ B ↠ C`, validated on construction.
#[derive(Clone, Debug)]
pub struct ShortExactSeq {
    pub i: ModuleMap,
    pub p: ModuleMap,
}

impl ShortExactSeq {
    pub fn new(i: ModuleMap, p: ModuleMap) -> Result<ShortExactSeq> {
        if i.target != p.source {
            return Err(Error::Validation("middle terms differ".into()));
        }
        if !i.is_mono() {
            return Err(Error::Validation("first map is not a monomorphism".into()));
        }
        if !p.is_epi() {
            return Err(Error::Validation("second map is not an epimorphism".into()));
        }
        if !p.compose(&i).is_zero() {
            return Err(Error::Validation("composite is nonzero".into()));
        }
        if factor_through_mono(&i, &p.kernel()).is_none() {
            return Err(Error::Validation("kernel of the epimorphism exceeds the image".into()));
        }
        Ok(ShortExactSeq { i, p })
    }

    pub fn left(&self) -> &FpModule {
        &self.i.source
    }

    pub fn middle(&self) -> &FpModule {
        &self.i.target
    }

    pub fn right(&self) -> &FpModule {
        &self.p.target
    }
}

/// `M ⊗ N`; generator `(i, j)` sits at index `i * gens(N) + j`.
pub fn tensor_modules(m: &FpModule, n: &FpModule) -> FpModule {
    let ring = &m.ring;
    let a = m.relations.kron(&Matrix::identity(ring, n.gens));
    let b = Matrix::identity(ring, m.gens).kron(&n.relations);
    FpModule::new(ring, m.gens * n.gens, a.hstack(&b)).expect("shape")
}

pub fn tensor_maps(f: &ModuleMap, g: &ModuleMap) -> ModuleMap {
    ModuleMap::unchecked(
        tensor_modules(&f.source, &g.source),
        tensor_modules(&f.target, &g.target),
        f.matrix.kron(&g.matrix),
    )
}

/// A free resolution `... -> F_1 -> F_0 -> M -> 0` with `F_i = R^{ranks[i]}`.
#[derive(Clone, Debug)]
pub struct Resolution {
    pub module: FpModule,
    pub ranks: Vec<usize>,
    /// `differentials[i]` is `d_{i+1}: F_{i+1} -> F_i`.
    pub differentials: Vec<Matrix>,
}

impl Resolution {
    pub fn free(&self, i: usize) -> FpModule {
        FpModule::free(self.module.ring(), self.ranks.get(i).copied().unwrap_or(0))
    }

    /// `d_i: F_i -> F_{i-1}` for `i >= 1`; the zero map beyond the computed length.
    pub fn d(&self, i: usize) -> Matrix {
        let ring = self.module.ring();
        match self.differentials.get(i - 1) {
            Some(m) => m.clone(),
            None => Matrix::zero(
                ring,
                self.ranks.get(i - 1).copied().unwrap_or(0),
                self.ranks.get(i).copied().unwrap_or(0),
            ),
        }
    }

    /// Augmentation `F_0 ↠ M` followed by `d_1, ..., d_L` as module maps.
    pub fn maps(&self) -> Vec<ModuleMap> {
        let ring = self.module.ring();
        let mut out = vec![ModuleMap::unchecked(
            self.free(0),
            self.module.clone(),
            Matrix::identity(ring, self.module.gens()),
        )];
        for i in 1..self.ranks.len() {
            out.push(ModuleMap::unchecked(self.free(i), self.free(i - 1), self.d(i)));
        }
        out
    }

    pub fn length(&self) -> usize {
        self.ranks.iter().rposition(|&r| r > 0).unwrap_or(0)
    }
}

/// Syzygy iteration on the given presentation, `length` differentials deep.
pub fn free_resolution(m: &FpModule, length: usize) -> Resolution {
    let ring = m.ring().clone();
    let mut ranks = vec![m.gens()];
    let mut diffs = Vec::new();
    if length >= 1 {
        let sf = snf(m.relations());
        let d1 = m.relations().mul(&sf.v).nonzero_columns();
        ranks.push(d1.cols());
        diffs.push(d1);
    }
    while diffs.len() < length {
        let last = diffs.last().unwrap();
        let next = kernel_basis(last).nonzero_columns();
        ranks.push(next.cols());
        diffs.push(next);
    }
    if ring == Ring::Integers && length >= 2 {
        assert_eq!(ranks[2], 0, "free resolutions over Z have length at most 1");
    }
    Resolution { module: m.clone(), ranks, differentials: diffs }
}

/// `Ext^n_R(M, N)`: cohomology of `Hom(F_•, N)`.
pub fn ext_n(m: &FpModule, n: &FpModule, deg: usize) -> Result<FpModule> {
    if m.ring() != n.ring() {
        return Err(Error::RingMismatch(format!("{} vs {}", m.ring(), n.ring())));
    }
    let ring = m.ring();
    let (mc, _, _) = m.simplify();
    let res = free_resolution(&mc, deg + 1);
    let h = n.gens();
    let cochain = |i: usize| n.power(res.ranks.get(i).copied().unwrap_or(0));
    // δ^i: Hom(F_i, N) -> Hom(F_{i+1}, N), φ ↦ φ ∘ d_{i+1}.
    let delta = |i: usize| {
        let d = res.d(i + 1);
        ModuleMap::unchecked(cochain(i), cochain(i + 1), d.transpose().kron(&Matrix::identity(ring, h)))
    };
    let out = delta(deg);
    let inp = if deg == 0 {
        ModuleMap::zero(&FpModule::zero(ring), &cochain(0))
    } else {
        delta(deg - 1)
    };
    Ok(homology_at(&inp, &out))
}

/// `Tor_n^R(M, N)`: homology of `F_• ⊗ N`.
pub fn tor_n(m: &FpModule, n: &FpModule, deg: usize) -> Result<FpModule> {
    if m.ring() != n.ring() {
        return Err(Error::RingMismatch(format!("{} vs {}", m.ring(), n.ring())));
    }
    let ring = m.ring();
    let (mc, _, _) = m.simplify();
    let res = free_resolution(&mc, deg + 1);
    let h = n.gens();
    let chain = |i: usize| n.power(res.ranks.get(i).copied().unwrap_or(0));
    let d = |i: usize| {
        ModuleMap::unchecked(chain(i), chain(i - 1), res.d(i).kron(&Matrix::identity(ring, h)))
    };
    let inp = d(deg + 1);
    let out = if deg == 0 {
        ModuleMap::zero(&chain(0), &FpModule::zero(ring))
    } else {
        d(deg)
    };
    Ok(homology_at(&inp, &out))
}

/// Whether the canonical epi `R^g ↠ M` has a section.
pub fn is_projective(m: &FpModule) -> bool {
    let (c, _, _) = m.simplify();
    let free = FpModule::free(c.ring(), c.gens());
    let pi = ModuleMap::unchecked(free, c.clone(), Matrix::identity(c.ring(), c.gens()));
    solve_postcompose(&pi, &ModuleMap::identity(&c)).is_some()
}

/// Flatness of a finitely presented module, decided as projectivity. Over finite rings
/// the answer is cross-checked against `Tor_1(M, R/(d)) = 0` for every cyclic `R/(d)`.
pub fn is_flat(m: &FpModule) -> bool {
    let proj = is_projective(m);
    if m.ring().is_finite() {
        assert_eq!(proj, flat_by_tor(m), "projectivity and Tor-flatness disagree on {m:?}");
    }
    proj
}

/// `Tor_1(M, R/(d)) = 0` for all cyclic modules `R/(d)` (finite rings; over `Z`, `d <= 12`).
pub fn flat_by_tor(m: &FpModule) -> bool {
    m.ring()
        .cyclic_quotient_generators(12)
        .iter()
        .all(|d| tor_n(m, &FpModule::cyclic(m.ring(), d.clone()), 1).expect("same ring").is_zero())
}

/// Injectivity over quasi-Frobenius rings, where it coincides with projectivity.
pub fn is_injective(m: &FpModule) -> Result<bool> {
    if !m.ring().is_quasi_frobenius() {
        return Err(Error::UnsupportedRing(format!(
            "no nonzero finitely generated injectives over {}",
            m.ring()
        )));
    }
    Ok(is_projective(m))
}

/// Given rows `A ↪ B ↠ C`, `K ↪ L ↠ M` and a commuting square `f: A -> L`, `g: B -> M`
/// (`q f = g i`), builds `h: B -> L` with `h i = f` and `q h = g`, provided `Ext^1(C, K) = 0`.
///
/// Pullback `Z` of `q` and `g`; `T = Z / (i; f)(A)`; the induced `K ↪ T ↠ C` splits by a
/// section `n`; `n` lifts to `ñ: B -> Z` and `h` is `ñ` followed by the projection to `L`.
pub fn lift_through(
    f: &ModuleMap,
    g: &ModuleMap,
    top: &ShortExactSeq,
    bottom: &ShortExactSeq,
) -> Result<ModuleMap> {
    let (i, p) = (&top.i, &top.p);
    let q = &bottom.p;
    if f.source != *top.left() || f.target != *bottom.middle() {
        return Err(Error::PreconditionFailed("f must map A to L".into()));
    }
    if g.source != *top.middle() || g.target != *bottom.right() {
        return Err(Error::PreconditionFailed("g must map B to M".into()));
    }
    if !q.compose(f).equals(&g.compose(i)) {
        return Err(Error::PreconditionFailed("square does not commute".into()));
    }
    if !ext_n(top.right(), bottom.left(), 1)?.is_zero() {
        return Err(Error::PreconditionFailed("Ext^1(C, K) is nonzero".into()));
    }
    let ring = f.ring().clone();
    let b = top.middle();
    let l = bottom.middle();

    // Z = ker(B ⊕ L -> M, (x, y) ↦ q y - g x).
    let sum = DirectSum::new(&[b.clone(), l.clone()]);
    let diff = q.compose(&sum.projections[1]).sub(&g.compose(&sum.projections[0]));
    let z = diff.kernel();
    let q_tilde = sum.projections[0].compose(&z);
    let g_tilde = sum.projections[1].compose(&z);

    let iota = sum.injections[0].compose(i).add(&sum.injections[1].compose(f));
    let iota_t = factor_through_mono(&z, &iota).expect("(i; f) lands in the pullback");
    let to_t = iota_t.cokernel();
    let t = to_t.target().clone();

    // T -> C induced by p ∘ q̃, which kills ι̃(A).
    let pq = p.compose(&q_tilde);
    let t_to_c = solve_precompose(&to_t, &pq).expect("p q̃ factors through T");

    let n = solve_postcompose(&t_to_c, &ModuleMap::identity(top.right()))
        .ok_or_else(|| Error::PreconditionFailed("K -> T -> C does not split".into()))?;

    // ñ: B -> Z with q̃ ñ = 1_B and π_T ñ = n p.
    let mut sys = MapSystem::new();
    let u = sys.unknown(b, z.source());
    sys.equation(Equation {
        p: b.clone(),
        q: b.clone(),
        terms: vec![Term { unknown: u, left: q_tilde.matrix().clone(), right: Matrix::identity(&ring, b.gens()) }],
        rhs: Matrix::identity(&ring, b.gens()),
    });
    let np = n.compose(p);
    sys.equation(Equation {
        p: b.clone(),
        q: t.clone(),
        terms: vec![Term { unknown: u, left: to_t.matrix().clone(), right: Matrix::identity(&ring, b.gens()) }],
        rhs: np.matrix().clone(),
    });
    let n_tilde = sys.solve().expect("pullback property yields ñ").remove(0);
    let h = g_tilde.compose(&n_tilde);
    assert!(h.compose(i).equals(f), "lift fails h i = f");
    assert!(q.compose(&h).equals(g), "lift fails q h = g");
    Ok(h)
}
