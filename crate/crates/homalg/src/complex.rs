//! Bounded chain complexes of finitely presented modules.
//!
//! `d_n: X_n -> X_{n-1}`. Supports are trimmed so that the lowest and highest
//! stored objects are nonzero; the zero complex has empty support.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::module::{
    factor_through_mono, homology_at, solve_postcompose, solve_precompose, DirectSum, Equation, FpModule, MapSystem,
    ModuleMap, Term,
};
use crate::ring::Ring;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChainComplex {
    ring: Ring,
    lo: i64,
    objects: Vec<FpModule>,
    /// `diffs[k]` is `d_{lo+k+1}`.
    diffs: Vec<ModuleMap>,
}

impl fmt::Display for ChainComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.objects.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.degrees().rev().map(|n| format!("[{}]{}", n, self.object(n))).collect();
        write!(f, "{}", parts.join(" -> "))
    }
}

impl ChainComplex {
    /// Validates shapes and `d ∘ d = 0`, then trims zero ends.
    pub fn new(ring: &Ring, lo: i64, objects: Vec<FpModule>, diffs: Vec<ModuleMap>) -> Result<ChainComplex> {
        let expected = objects.len().saturating_sub(1);
        if diffs.len() != expected {
            return Err(Error::Validation(format!(
                "{} differentials for {} objects",
                diffs.len(),
                objects.len()
            )));
        }
        for (k, d) in diffs.iter().enumerate() {
            let n = lo + k as i64 + 1;
            if d.source() != &objects[k + 1] || d.target() != &objects[k] {
                return Err(Error::Validation(format!("d_{n} has the wrong source or target")));
            }
        }
        for o in &objects {
            if o.ring() != ring {
                return Err(Error::RingMismatch(format!("object over {} in complex over {ring}", o.ring())));
            }
        }
        for k in 1..diffs.len() {
            let n = lo + k as i64 + 1;
            if !diffs[k - 1].compose(&diffs[k]).is_zero() {
                return Err(Error::Validation(format!("d^2 != 0: d_{} ∘ d_{} is nonzero at degree {n}", n - 1, n)));
            }
        }
        Ok(ChainComplex { ring: ring.clone(), lo, objects, diffs }.trimmed())
    }

    pub(crate) fn unchecked(ring: &Ring, lo: i64, objects: Vec<FpModule>, diffs: Vec<ModuleMap>) -> ChainComplex {
        ChainComplex { ring: ring.clone(), lo, objects, diffs }.trimmed()
    }

    fn trimmed(mut self) -> ChainComplex {
        while self.objects.last().is_some_and(|m| m.is_zero()) {
            self.objects.pop();
            self.diffs.pop();
        }
        while self.objects.first().is_some_and(|m| m.is_zero()) {
            self.objects.remove(0);
            if !self.diffs.is_empty() {
                self.diffs.remove(0);
            }
            self.lo += 1;
        }
        if self.objects.is_empty() {
            self.lo = 0;
            self.diffs.clear();
        }
        self
    }

    pub fn zero(ring: &Ring) -> ChainComplex {
        ChainComplex { ring: ring.clone(), lo: 0, objects: vec![], diffs: vec![] }
    }

    /// `M` concentrated in degree `n`.
    pub fn sphere(n: i64, m: &FpModule) -> ChainComplex {
        ChainComplex::unchecked(m.ring(), n, vec![m.clone()], vec![])
    }

    /// `M` in degrees `n` and `n - 1` with identity differential.
    pub fn disk(n: i64, m: &FpModule) -> ChainComplex {
        ChainComplex::unchecked(m.ring(), n - 1, vec![m.clone(), m.clone()], vec![ModuleMap::identity(m)])
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.objects.is_empty()
    }

    /// `(lo, hi)` of the trimmed support.
    pub fn support(&self) -> Option<(i64, i64)> {
        if self.objects.is_empty() {
            None
        } else {
            Some((self.lo, self.lo + self.objects.len() as i64 - 1))
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.objects.len() as i64 - 1
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<i64> {
        match self.support() {
            Some((a, b)) => a..=b,
            #[allow(clippy::reversed_empty_ranges)]
            None => 1..=0,
        }
    }

    pub fn object(&self, n: i64) -> FpModule {
        if n < self.lo || n > self.hi() {
            FpModule::zero(&self.ring)
        } else {
            self.objects[(n - self.lo) as usize].clone()
        }
    }

    /// `d_n: X_n -> X_{n-1}`.
    pub fn d(&self, n: i64) -> ModuleMap {
        if n > self.lo && n <= self.hi() {
            self.diffs[(n - self.lo - 1) as usize].clone()
        } else {
            ModuleMap::zero(&self.object(n), &self.object(n - 1))
        }
    }

    /// Inclusion `Z_n X -> X_n`.
    pub fn cycles(&self, n: i64) -> ModuleMap {
        self.d(n).kernel()
    }

    /// Inclusion `B_n X -> X_n`.
    pub fn boundaries(&self, n: i64) -> ModuleMap {
        self.d(n + 1).image().2
    }

    pub fn homology(&self, n: i64) -> FpModule {
        homology_at(&self.d(n + 1), &self.d(n))
    }

    pub fn is_exact(&self) -> bool {
        self.degrees().all(|n| self.homology(n).is_zero())
    }

    /// Degreewise `X ⊕ Y` with the structure chain maps.
    pub fn direct_sum(&self, other: &ChainComplex) -> ComplexSum {
        ComplexSum::new(&[self.clone(), other.clone()], &self.ring)
    }

    /// `X[k]_n = X_{n-k}`, differentials unchanged.
    pub fn shift(&self, k: i64) -> ChainComplex {
        let mut c = self.clone();
        if !c.objects.is_empty() {
            c.lo += k;
        }
        c
    }

    /// Largest generator count of any object.
    pub fn max_gens(&self) -> usize {
        self.objects.iter().map(|m| m.gens()).max().unwrap_or(0)
    }

    /// The same complex with every object replaced by its canonical presentation.
    pub fn simplified(&self) -> (ChainComplex, ChainMap, ChainMap) {
        let mut objs = Vec::new();
        let mut to = Vec::new();
        let mut from = Vec::new();
        for n in self.degrees() {
            let (c, t, f) = self.object(n).simplify();
            objs.push(c);
            to.push(t);
            from.push(f);
        }
        let mut diffs = Vec::new();
        for n in self.degrees().skip(1) {
            let k = (n - self.lo) as usize;
            diffs.push(to[k - 1].compose(&self.d(n)).compose(&from[k]));
        }
        let s = ChainComplex::unchecked(&self.ring, self.lo, objs, diffs);
        let tomap = ChainMap::unchecked(self.clone(), s.clone(), to);
        let frommap = ChainMap::unchecked(s.clone(), self.clone(), from);
        (s, tomap, frommap)
    }
}

/// `⊕ X_i` with injections and projections.
#[derive(Clone, Debug)]
pub struct ComplexSum {
    pub complex: ChainComplex,
    pub injections: Vec<ChainMap>,
    pub projections: Vec<ChainMap>,
}

impl ComplexSum {
    pub fn new(parts: &[ChainComplex], ring: &Ring) -> ComplexSum {
        let lo = parts.iter().filter_map(|c| c.support()).map(|s| s.0).min();
        let hi = parts.iter().filter_map(|c| c.support()).map(|s| s.1).max();
        let (lo, hi) = match (lo, hi) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                let z = ChainComplex::zero(ring);
                return ComplexSum {
                    injections: parts.iter().map(|p| ChainMap::zero(p, &z)).collect(),
                    projections: parts.iter().map(|p| ChainMap::zero(&z, p)).collect(),
                    complex: z,
                };
            }
        };
        let sums: Vec<DirectSum> = (lo..=hi)
            .map(|n| DirectSum::with_ring(ring, &parts.iter().map(|p| p.object(n)).collect::<Vec<_>>()))
            .collect();
        let objects: Vec<FpModule> = sums.iter().map(|s| s.module.clone()).collect();
        let mut diffs = Vec::new();
        for n in lo + 1..=hi {
            let mats: Vec<Matrix> = parts.iter().map(|p| p.d(n).matrix().clone()).collect();
            let refs: Vec<&Matrix> = mats.iter().collect();
            let m = Matrix::block_diag_all(ring, &refs);
            diffs.push(ModuleMap::unchecked(
                objects[(n - lo) as usize].clone(),
                objects[(n - lo - 1) as usize].clone(),
                m,
            ));
        }
        let complex = ChainComplex { ring: ring.clone(), lo, objects, diffs };
        // The sum of nonzero-ended parts keeps its ends nonzero, so no trimming is needed.
        let complex = complex.trimmed();
        let mut injections = Vec::new();
        let mut projections = Vec::new();
        for (k, p) in parts.iter().enumerate() {
            let inj: Vec<ModuleMap> = p
                .degrees()
                .map(|n| sums[(n - lo) as usize].injections[k].clone())
                .collect();
            injections.push(ChainMap::unchecked(p.clone(), complex.clone(), inj));
            let proj: Vec<ModuleMap> = complex
                .degrees()
                .map(|n| sums[(n - lo) as usize].projections[k].clone())
                .collect();
            projections.push(ChainMap::unchecked(complex.clone(), p.clone(), proj));
        }
        ComplexSum { complex, injections, projections }
    }
}

/// A chain map; `components` are indexed by the source support.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChainMap {
    source: ChainComplex,
    target: ChainComplex,
    components: Vec<ModuleMap>,
}

impl ChainMap {
    /// Validates each component and commutation with the differentials.
    pub fn new(source: ChainComplex, target: ChainComplex, components: Vec<ModuleMap>) -> Result<ChainMap> {
        if components.len() != source.objects.len() {
            return Err(Error::Validation(format!(
                "{} components for a source with {} degrees",
                components.len(),
                source.objects.len()
            )));
        }
        for (k, c) in components.iter().enumerate() {
            let n = source.lo + k as i64;
            if c.source() != &source.object(n) || c.target() != &target.object(n) {
                return Err(Error::Validation(format!("component in degree {n} has the wrong source or target")));
            }
        }
        let map = ChainMap { source, target, components };
        for n in map.source.degrees() {
            let lhs = map.target.d(n).compose(&map.component(n));
            let rhs = map.component(n - 1).compose(&map.source.d(n));
            if !lhs.equals(&rhs) {
                return Err(Error::Validation(format!("chain map does not commute with d_{n}")));
            }
        }
        Ok(map)
    }

    pub(crate) fn unchecked(source: ChainComplex, target: ChainComplex, components: Vec<ModuleMap>) -> ChainMap {
        let m = ChainMap { source, target, components };
        debug_assert!(ChainMap::new(m.source.clone(), m.target.clone(), m.components.clone()).is_ok());
        m
    }

    /// Builds a chain map from per-degree matrices over the source support.
    pub fn from_matrices(source: &ChainComplex, target: &ChainComplex, mats: Vec<Matrix>) -> Result<ChainMap> {
        let mut comps = Vec::new();
        for (k, m) in mats.into_iter().enumerate() {
            let n = source.lo + k as i64;
            comps.push(ModuleMap::new(source.object(n), target.object(n), m)?);
        }
        ChainMap::new(source.clone(), target.clone(), comps)
    }

    pub fn identity(x: &ChainComplex) -> ChainMap {
        ChainMap {
            source: x.clone(),
            target: x.clone(),
            components: x.objects.iter().map(ModuleMap::identity).collect(),
        }
    }

    pub fn zero(x: &ChainComplex, y: &ChainComplex) -> ChainMap {
        ChainMap {
            source: x.clone(),
            target: y.clone(),
            components: x.degrees().map(|n| ModuleMap::zero(&x.object(n), &y.object(n))).collect(),
        }
    }

    pub fn source(&self) -> &ChainComplex {
        &self.source
    }

    pub fn target(&self) -> &ChainComplex {
        &self.target
    }

    pub fn ring(&self) -> &Ring {
        &self.source.ring
    }

    pub fn component(&self, n: i64) -> ModuleMap {
        if n < self.source.lo || n > self.source.hi() || self.source.is_zero() {
            ModuleMap::zero(&self.source.object(n), &self.target.object(n))
        } else {
            self.components[(n - self.source.lo) as usize].clone()
        }
    }

    /// `self ∘ f`.
    pub fn compose(&self, f: &ChainMap) -> ChainMap {
        assert_eq!(f.target, self.source, "composition of non-composable chain maps");
        let comps = f.source.degrees().map(|n| self.component(n).compose(&f.component(n))).collect();
        ChainMap { source: f.source.clone(), target: self.target.clone(), components: comps }
    }

    pub fn add(&self, other: &ChainMap) -> ChainMap {
        assert!(self.source == other.source && self.target == other.target);
        let comps = self.components.iter().zip(&other.components).map(|(a, b)| a.add(b)).collect();
        ChainMap { source: self.source.clone(), target: self.target.clone(), components: comps }
    }

    pub fn neg(&self) -> ChainMap {
        let comps = self.components.iter().map(|a| a.neg()).collect();
        ChainMap { source: self.source.clone(), target: self.target.clone(), components: comps }
    }

    pub fn sub(&self, other: &ChainMap) -> ChainMap {
        self.add(&other.neg())
    }

    pub fn equals(&self, other: &ChainMap) -> bool {
        self.source == other.source
            && self.target == other.target
            && self.components.iter().zip(&other.components).all(|(a, b)| a.equals(b))
    }

    /// Bit-exact equality of the underlying matrices after normalizing each to canonical
    /// representatives.
    pub fn normalized(&self) -> ChainMap {
        ChainMap {
            source: self.source.clone(),
            target: self.target.clone(),
            components: self.components.iter().map(|c| c.normalized()).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    fn all_degrees(&self) -> Vec<i64> {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for c in [&self.source, &self.target] {
            if let Some((a, b)) = c.support() {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        if lo > hi {
            vec![]
        } else {
            (lo..=hi).collect()
        }
    }

    pub fn is_mono(&self) -> bool {
        self.source.degrees().all(|n| self.component(n).is_mono())
    }

    pub fn is_epi(&self) -> bool {
        self.target.degrees().all(|n| self.component(n).is_epi())
    }

    pub fn is_iso(&self) -> bool {
        self.all_degrees().iter().all(|&n| self.component(n).is_iso())
    }

    /// `H_n(f)`, as a map between the homology modules of [`ChainComplex::homology`]'s shape.
    pub fn homology_map(&self, n: i64) -> ModuleMap {
        let hx = homology_parts(&self.source, n);
        let hy = homology_parts(&self.target, n);
        // Z_n X -> X_n -> Y_n lands in Z_n Y.
        let through = self.component(n).compose(&hx.cycles);
        let on_cycles = factor_through_mono(&hy.cycles, &through).expect("cycles map to cycles");
        let to_h = hy.projection.compose(&on_cycles);
        solve_precompose(&hx.projection, &to_h).expect("boundaries map to boundaries")
    }

    /// Homology isomorphism in every degree.
    pub fn is_quasi_iso(&self) -> bool {
        self.all_degrees().iter().all(|&n| self.homology_map(n).is_iso())
    }

    /// Degreewise kernel with its inclusion.
    pub fn kernel(&self) -> ChainMap {
        let ring = self.ring().clone();
        let incs: Vec<ModuleMap> = self.source.degrees().map(|n| self.component(n).kernel()).collect();
        let lo = self.source.lo;
        let objects: Vec<FpModule> = incs.iter().map(|k| k.source().clone()).collect();
        let mut diffs = Vec::new();
        for k in 1..incs.len() {
            let n = lo + k as i64;
            let through = self.source.d(n).compose(&incs[k]);
            diffs.push(factor_through_mono(&incs[k - 1], &through).expect("kernel is a subcomplex"));
        }
        let kc = ChainComplex { ring: ring.clone(), lo, objects, diffs };
        chain_map_after_trim(kc, self.source.clone(), incs, lo)
    }

    /// Degreewise cokernel with its projection.
    pub fn cokernel(&self) -> ChainMap {
        let ring = self.ring().clone();
        let y = &self.target;
        let projs: Vec<ModuleMap> = y.degrees().map(|n| {
            let f = self.component(n);
            f.cokernel()
        }).collect();
        let lo = y.lo;
        let objects: Vec<FpModule> = projs.iter().map(|p| p.target().clone()).collect();
        let mut diffs = Vec::new();
        for k in 1..projs.len() {
            let n = lo + k as i64;
            let down = projs[k - 1].compose(&y.d(n));
            diffs.push(solve_precompose(&projs[k], &down).expect("image is a subcomplex"));
        }
        let cc = ChainComplex { ring: ring.clone(), lo, objects, diffs };
        let trimmed = cc.clone().trimmed();
        let comps = y
            .degrees()
            .map(|n| {
                let p = &projs[(n - lo) as usize];
                ModuleMap::unchecked(p.source().clone(), trimmed.object(n), if trimmed.object(n).gens() == p.target().gens() {
                    p.matrix().clone()
                } else {
                    Matrix::zero(&ring, 0, p.source().gens())
                })
            })
            .collect();
        ChainMap { source: y.clone(), target: trimmed, components: comps }
    }
}

fn chain_map_after_trim(kc: ChainComplex, target: ChainComplex, incs: Vec<ModuleMap>, lo: i64) -> ChainMap {
    let trimmed = kc.clone().trimmed();
    let comps = trimmed
        .degrees()
        .map(|n| incs[(n - lo) as usize].clone())
        .collect();
    ChainMap { source: trimmed, target, components: comps }
}

struct HomologyParts {
    cycles: ModuleMap,
    projection: ModuleMap,
}

fn homology_parts(x: &ChainComplex, n: i64) -> HomologyParts {
    let cycles = x.d(n).kernel();
    let l = factor_through_mono(&cycles, &x.d(n + 1)).expect("d^2 = 0");
    HomologyParts { cycles, projection: l.cokernel() }
}

/// A chain homotopy `s_n: X_n -> Y_{n+1}` with `f_n = d s_n + s_{n-1} d`.
#[derive(Clone, Debug)]
pub struct Homotopy {
    pub map: ChainMap,
    /// Indexed by the source support.
    pub s: Vec<ModuleMap>,
}

impl Homotopy {
    pub fn s_at(&self, n: i64) -> ModuleMap {
        let x = self.map.source();
        let y = self.map.target();
        if x.is_zero() || n < x.lo || n > x.hi() {
            ModuleMap::zero(&x.object(n), &y.object(n + 1))
        } else {
            self.s[(n - x.lo) as usize].clone()
        }
    }

    pub fn verify(&self) -> bool {
        let x = self.map.source();
        let y = self.map.target();
        x.degrees().all(|n| {
            let h = y.d(n + 1).compose(&self.s_at(n)).add(&self.s_at(n - 1).compose(&x.d(n)));
            h.equals(&self.map.component(n))
        })
    }
}

/// Unknowns `s_n: X_n -> Y_{n+1}` and one equation `d s_n + s_{n-1} d = rhs_n` per degree
/// of `X`, with zero right-hand sides.
fn homotopy_system(x: &ChainComplex, y: &ChainComplex) -> MapSystem {
    let mut sys = MapSystem::new();
    let ids: Vec<usize> = x.degrees().map(|n| sys.unknown(&x.object(n), &y.object(n + 1))).collect();
    let ring = x.ring();
    for n in x.degrees() {
        let k = (n - x.lo) as usize;
        let mut terms = vec![Term {
            unknown: ids[k],
            left: y.d(n + 1).matrix().clone(),
            right: Matrix::identity(ring, x.object(n).gens()),
        }];
        if k > 0 {
            terms.push(Term {
                unknown: ids[k - 1],
                left: Matrix::identity(ring, y.object(n).gens()),
                right: x.d(n).matrix().clone(),
            });
        }
        let rhs = Matrix::zero(ring, y.object(n).gens(), x.object(n).gens());
        sys.equation(Equation { p: x.object(n), q: y.object(n), terms, rhs });
    }
    sys
}

/// Solves `f_n = d s_n + s_{n-1} d` in all degrees at once.
pub fn is_null_homotopic(f: &ChainMap) -> Option<Homotopy> {
    let x = f.source();
    if x.is_zero() {
        return Some(Homotopy { map: f.clone(), s: vec![] });
    }
    let mut sys = homotopy_system(x, f.target());
    for (k, n) in x.degrees().enumerate() {
        sys.set_rhs(k, f.component(n).matrix().clone());
    }
    let s = sys.solve()?;
    let h = Homotopy { map: f.clone(), s };
    assert!(h.verify(), "solved homotopy fails its identity");
    Some(h)
}

/// Index of the first map in `maps` (all `X -> Y`) that is not null-homotopic.
pub fn first_non_null_homotopic(x: &ChainComplex, y: &ChainComplex, maps: &[ChainMap]) -> Option<usize> {
    if x.is_zero() || maps.is_empty() {
        return None;
    }
    let sys = homotopy_system(x, y);
    let rhs: Vec<Vec<Matrix>> = maps.iter().map(|f| x.degrees().map(|n| f.component(n).matrix().clone()).collect()).collect();
    sys.solvable_for(&rhs).iter().position(|ok| !ok)
}

/// Layout of `(X ⊗ Y)_k = ⊕_{i+j=k} X_i ⊗ Y_j`, ordered by increasing `i`.
fn tensor_blocks(x: &ChainComplex, y: &ChainComplex, k: i64) -> Vec<(i64, i64, usize, usize)> {
    let mut out = Vec::new();
    let mut off = 0;
    for i in x.degrees() {
        let j = k - i;
        if j < y.lo || j > y.hi() || y.is_zero() {
            continue;
        }
        let size = x.object(i).gens() * y.object(j).gens();
        out.push((i, j, off, size));
        off += size;
    }
    out
}

fn tensor_object(x: &ChainComplex, y: &ChainComplex, k: i64) -> FpModule {
    let parts: Vec<FpModule> = tensor_blocks(x, y, k)
        .iter()
        .map(|&(i, j, _, _)| x.object(i).tensor(&y.object(j)))
        .collect();
    DirectSum::with_ring(x.ring(), &parts).module
}

/// Total tensor complex with `d(x ⊗ y) = dx ⊗ y + (-1)^i x ⊗ dy`.
pub fn tensor_complexes(x: &ChainComplex, y: &ChainComplex) -> ChainComplex {
    let ring = x.ring().clone();
    if x.is_zero() || y.is_zero() {
        return ChainComplex::zero(&ring);
    }
    let lo = x.lo + y.lo;
    let hi = x.hi() + y.hi();
    let objects: Vec<FpModule> = (lo..=hi).map(|k| tensor_object(x, y, k)).collect();
    let mut diffs = Vec::new();
    for k in lo + 1..=hi {
        let src = tensor_blocks(x, y, k);
        let dst = tensor_blocks(x, y, k - 1);
        let rows = objects[(k - 1 - lo) as usize].gens();
        let cols = objects[(k - lo) as usize].gens();
        let mut m = Matrix::zero(&ring, rows, cols);
        for &(i, j, off, _) in &src {
            let ix = Matrix::identity(&ring, x.object(i).gens());
            let iy = Matrix::identity(&ring, y.object(j).gens());
            if let Some(&(_, _, doff, _)) = dst.iter().find(|b| b.0 == i - 1 && b.1 == j) {
                m.paste(doff, off, &x.d(i).matrix().kron(&iy));
            }
            if let Some(&(_, _, doff, _)) = dst.iter().find(|b| b.0 == i && b.1 == j - 1) {
                let mut blk = ix.kron(y.d(j).matrix());
                if i.rem_euclid(2) == 1 {
                    blk = blk.neg();
                }
                m.paste(doff, off, &blk);
            }
        }
        diffs.push(ModuleMap::unchecked(
            objects[(k - lo) as usize].clone(),
            objects[(k - 1 - lo) as usize].clone(),
            m,
        ));
    }
    ChainComplex::unchecked(&ring, lo, objects, diffs)
}

/// `f ⊗ g: X ⊗ Y -> X' ⊗ Y'`, blockwise `f_i ⊗ g_j`.
pub fn tensor_chainmaps(f: &ChainMap, g: &ChainMap) -> ChainMap {
    let src = tensor_complexes(f.source(), g.source());
    let dst = tensor_complexes(f.target(), g.target());
    let ring = f.ring().clone();
    let comps = src
        .degrees()
        .map(|k| {
            let sb = tensor_blocks(f.source(), g.source(), k);
            let db = tensor_blocks(f.target(), g.target(), k);
            let mut m = Matrix::zero(&ring, dst.object(k).gens(), src.object(k).gens());
            for &(i, j, off, _) in &sb {
                if let Some(&(_, _, doff, _)) = db.iter().find(|b| b.0 == i && b.1 == j) {
                    m.paste(doff, off, &f.component(i).matrix().kron(g.component(j).matrix()));
                }
            }
            ModuleMap::unchecked(src.object(k), dst.object(k), m)
        })
        .collect();
    ChainMap::unchecked(src, dst, comps)
}

/// `S^0(R) ⊗ Y -> Y`.
pub fn unit_iso(y: &ChainComplex) -> ChainMap {
    let ring = y.ring().clone();
    let unit = ChainComplex::sphere(0, &FpModule::free(&ring, 1));
    let t = tensor_complexes(&unit, y);
    let comps = t
        .degrees()
        .map(|n| ModuleMap::unchecked(t.object(n), y.object(n), Matrix::identity(&ring, y.object(n).gens())))
        .collect();
    ChainMap::unchecked(t, y.clone(), comps)
}

/// `X ⊗ Y -> Y ⊗ X`, `x ⊗ y ↦ (-1)^{ij} y ⊗ x`.
pub fn symmetry_iso(x: &ChainComplex, y: &ChainComplex) -> ChainMap {
    let ring = x.ring().clone();
    let src = tensor_complexes(x, y);
    let dst = tensor_complexes(y, x);
    let comps = src
        .degrees()
        .map(|k| {
            let sb = tensor_blocks(x, y, k);
            let db = tensor_blocks(y, x, k);
            let mut m = Matrix::zero(&ring, dst.object(k).gens(), src.object(k).gens());
            for &(i, j, off, _) in &sb {
                let &(_, _, doff, _) = db.iter().find(|b| b.0 == j && b.1 == i).expect("swapped block");
                let (gx, gy) = (x.object(i).gens(), y.object(j).gens());
                let sign = if (i * j).rem_euclid(2) == 1 { -1 } else { 1 };
                for a in 0..gx {
                    for b in 0..gy {
                        m.set(doff + b * gx + a, off + a * gy + b, num_bigint::BigInt::from(sign));
                    }
                }
            }
            ModuleMap::unchecked(src.object(k), dst.object(k), m)
        })
        .collect();
    ChainMap::unchecked(src, dst, comps)
}

/// `(X ⊗ Y) ⊗ Z -> X ⊗ (Y ⊗ Z)`, a signless reindexing.
pub fn associativity_iso(x: &ChainComplex, y: &ChainComplex, z: &ChainComplex) -> ChainMap {
    let ring = x.ring().clone();
    let xy = tensor_complexes(x, y);
    let yz = tensor_complexes(y, z);
    let src = tensor_complexes(&xy, z);
    let dst = tensor_complexes(x, &yz);
    let comps = src
        .degrees()
        .map(|k| {
            let mut m = Matrix::zero(&ring, dst.object(k).gens(), src.object(k).gens());
            for &(ij, l, off, _) in &tensor_blocks(&xy, z, k) {
                let gz = z.object(l).gens();
                for &(i, j, xoff, _) in &tensor_blocks(x, y, ij) {
                    let (gx, gy) = (x.object(i).gens(), y.object(j).gens());
                    let doff = tensor_blocks(x, &yz, k).iter().find(|b| b.0 == i).expect("block").2;
                    let yzoff = tensor_blocks(y, z, j + l).iter().find(|b| b.0 == j).expect("inner block").2;
                    let gyz = yz.object(j + l).gens();
                    for a in 0..gx {
                        for b in 0..gy {
                            for c in 0..gz {
                                let s = off + (xoff + a * gy + b) * gz + c;
                                let d = doff + a * gyz + yzoff + b * gz + c;
                                m.set(d, s, num_bigint::BigInt::from(1));
                            }
                        }
                    }
                }
            }
            ModuleMap::unchecked(src.object(k), dst.object(k), m)
        })
        .collect();
    ChainMap::unchecked(src, dst, comps)
}

/// Chain maps `A -> Y` as a module, embedded in the degreewise matrices
/// `⊕_n Y_n^{gens A_n}` (vectorized, degrees in the support of `A`).
#[derive(Clone, Debug)]
pub struct HomComplexModule {
    pub module: FpModule,
    pub embed: ModuleMap,
    pub source: ChainComplex,
    pub target: ChainComplex,
}

impl HomComplexModule {
    pub fn chain_map(&self, coords: &Matrix) -> ChainMap {
        let v = self.embed.matrix().mul(coords);
        let mut off = 0;
        let mut comps = Vec::new();
        for n in self.source.degrees() {
            let (gx, gy) = (self.source.object(n).gens(), self.target.object(n).gens());
            let block = v.block(off, 0, gx * gy, 1);
            off += gx * gy;
            comps.push(ModuleMap::unchecked(
                self.source.object(n),
                self.target.object(n),
                Matrix::unvectorize(&block, gy, gx),
            ));
        }
        ChainMap::unchecked(self.source.clone(), self.target.clone(), comps)
    }
}

fn degreewise_ambient(a: &ChainComplex, y: &ChainComplex) -> FpModule {
    let parts: Vec<FpModule> = a.degrees().map(|n| y.object(n).power(a.object(n).gens())).collect();
    DirectSum::with_ring(a.ring(), &parts).module
}

/// `Hom_Ch(A, Y)`: well-defined degreewise matrices commuting with the differentials.
pub fn hom_complex(a: &ChainComplex, y: &ChainComplex) -> HomComplexModule {
    let ring = a.ring().clone();
    let ambient = degreewise_ambient(a, y);
    let mut cond_parts: Vec<FpModule> = Vec::new();
    let mut rows: Vec<Matrix> = Vec::new();
    let total = ambient.gens();
    let offs: Vec<usize> = {
        let mut o = Vec::new();
        let mut acc = 0;
        for n in a.degrees() {
            o.push(acc);
            acc += a.object(n).gens() * y.object(n).gens();
        }
        o
    };
    for n in a.degrees() {
        let k = (n - a.lo) as usize;
        let (ga, gy) = (a.object(n).gens(), y.object(n).gens());
        // well-definedness: φ_n ∘ rel(A_n) = 0 in Y_n
        let an = a.object(n);
        let rel = an.relations();
        let mut blk = Matrix::zero(&ring, gy * rel.cols(), total);
        blk.paste(0, offs[k], &rel.transpose().kron(&Matrix::identity(&ring, gy)));
        cond_parts.push(y.object(n).power(rel.cols()));
        rows.push(blk);
        // commutation: d^Y_n φ_n - φ_{n-1} d^A_n = 0 in Y_{n-1}
        let gy1 = y.object(n - 1).gens();
        let mut blk = Matrix::zero(&ring, gy1 * ga, total);
        blk.paste(0, offs[k], &Matrix::identity(&ring, ga).kron(y.d(n).matrix()));
        if k > 0 {
            let dn = a.d(n);
            let ga1 = a.object(n - 1).gens();
            let prev = dn.matrix().transpose().kron(&Matrix::identity(&ring, gy1));
            let cur = blk.block(0, offs[k - 1], gy1 * ga, ga1 * gy1);
            blk.paste(0, offs[k - 1], &cur.sub(&prev));
        }
        cond_parts.push(y.object(n - 1).power(ga));
        rows.push(blk);
    }
    let cond_target = DirectSum::with_ring(&ring, &cond_parts).module;
    let refs: Vec<&Matrix> = rows.iter().collect();
    let cond = ModuleMap::unchecked(ambient.clone(), cond_target, Matrix::vstack_all(&ring, total, &refs));
    let k = cond.kernel();
    HomComplexModule { module: k.source().clone(), embed: k, source: a.clone(), target: y.clone() }
}

/// A surjection onto `X` from a sum of disks on free modules, `D^n(R^{gens X_n}) -> X`.
pub fn disk_cover(x: &ChainComplex) -> ChainMap {
    let ring = x.ring().clone();
    let disks: Vec<ChainComplex> = x
        .degrees()
        .filter(|&n| x.object(n).gens() > 0)
        .map(|n| ChainComplex::disk(n, &FpModule::free(&ring, x.object(n).gens())))
        .collect();
    let tops: Vec<i64> = x.degrees().filter(|&n| x.object(n).gens() > 0).collect();
    let sum = ComplexSum::new(&disks, &ring);
    let p = &sum.complex;
    let comps = p
        .degrees()
        .map(|m| {
            let mut mat = Matrix::zero(&ring, x.object(m).gens(), 0);
            for (k, &n) in tops.iter().enumerate() {
                let g = x.object(n).gens();
                let blk = if m == n {
                    Matrix::identity(&ring, g)
                } else if m == n - 1 {
                    x.d(n).matrix().clone()
                } else {
                    Matrix::zero(&ring, x.object(m).gens(), 0)
                };
                let width = disks[k].object(m).gens();
                let blk = if blk.cols() == width { blk } else { Matrix::zero(&ring, x.object(m).gens(), width) };
                mat = mat.hstack(&blk);
            }
            ModuleMap::unchecked(p.object(m), x.object(m), mat)
        })
        .collect();
    ChainMap::unchecked(p.clone(), x.clone(), comps)
}

/// `Ext^1` in the category of complexes, via `0 -> K -> P -> X -> 0` with `P` a sum of
/// disks on free modules: `Ext^1(X, Y) = coker(Hom(P, Y) -> Hom(K, Y))`.
pub fn ext1_complexes(x: &ChainComplex, y: &ChainComplex) -> FpModule {
    let eps = disk_cover(x);
    let k = eps.kernel();
    let hp = hom_complex(eps.source(), y);
    let hk = hom_complex(k.source(), y);
    let ring = x.ring().clone();
    // restriction φ ↦ φ ∘ k on the ambient degreewise matrices
    let kc = k.source();
    let mut blocks = Vec::new();
    for n in kc.degrees() {
        let gy = y.object(n).gens();
        let kn = k.component(n);
        let pn_deg = eps.source().degrees().position(|m| m == n).expect("K sits inside P");
        blocks.push((n, pn_deg, kn.matrix().transpose().kron(&Matrix::identity(&ring, gy))));
    }
    let amb_p = hp.embed.target().clone();
    let amb_k = hk.embed.target().clone();
    let mut r = Matrix::zero(&ring, amb_k.gens(), amb_p.gens());
    let offs = |c: &ChainComplex| -> Vec<usize> {
        let mut o = Vec::new();
        let mut acc = 0;
        for n in c.degrees() {
            o.push(acc);
            acc += c.object(n).gens() * y.object(n).gens();
        }
        o
    };
    let op = offs(eps.source());
    let ok = offs(kc);
    for (idx, (_, pk, blk)) in blocks.iter().enumerate() {
        r.paste(ok[idx], op[*pk], blk);
    }
    let restrict = ModuleMap::unchecked(amb_p, amb_k, r).compose(&hp.embed);
    let on_hk = factor_through_mono(&hk.embed, &restrict).expect("restrictions of chain maps are chain maps");
    on_hk.cokernel().target().clone()
}

/// Pushout of `f: A -> B` and `g: A -> C`, with the two maps into it.
pub fn pushout_chainmaps(f: &ChainMap, g: &ChainMap) -> Result<(ChainComplex, ChainMap, ChainMap)> {
    if f.source() != g.source() {
        return Err(Error::PreconditionFailed("pushout needs a common source".into()));
    }
    let sum = f.target().direct_sum(g.target());
    let phi = sum.injections[0].compose(f).sub(&sum.injections[1].compose(g));
    let c = phi.cokernel();
    let u = c.compose(&sum.injections[0]);
    let v = c.compose(&sum.injections[1]);
    if f.is_mono() {
        assert!(v.is_mono(), "pushout of a mono is a mono");
    }
    Ok((c.target().clone(), u, v))
}

/// Pullback of `f: B -> D` and `g: C -> D`, with its two projections.
pub fn pullback_chainmaps(f: &ChainMap, g: &ChainMap) -> Result<(ChainComplex, ChainMap, ChainMap)> {
    if f.target() != g.target() {
        return Err(Error::PreconditionFailed("pullback needs a common target".into()));
    }
    let sum = f.source().direct_sum(g.source());
    let phi = f.compose(&sum.projections[0]).sub(&g.compose(&sum.projections[1]));
    let k = phi.kernel();
    let p1 = sum.projections[0].compose(&k);
    let p2 = sum.projections[1].compose(&k);
    Ok((k.source().clone(), p1, p2))
}

/// The unique map out of a pushout `P` (legs `u: B -> P`, `v: C -> P`) to a cocone
/// `(s: B -> Q, t: C -> Q)`, or `None` if it does not exist.
///
/// The legs are jointly onto, so the generators of `P_n` lift to `B_n ⊕ C_n` and the map
/// is `(s_n, t_n)` applied to those lifts.
pub fn pushout_induced(u: &ChainMap, v: &ChainMap, s: &ChainMap, t: &ChainMap) -> Option<ChainMap> {
    let p = u.target();
    let q = s.target();
    let ring = p.ring().clone();
    let mut comps = Vec::new();
    for n in p.degrees() {
        let (pn, qn) = (p.object(n), q.object(n));
        let sum = u.source().object(n).direct_sum(&v.source().object(n));
        let joint = ModuleMap::new(sum.module.clone(), pn.clone(), u.component(n).matrix().hstack(v.component(n).matrix())).ok()?;
        let gens = ModuleMap::unchecked(FpModule::free(&ring, pn.gens()), pn.clone(), Matrix::identity(&ring, pn.gens()));
        let lift = solve_postcompose(&joint, &gens)?;
        let st = s.component(n).matrix().hstack(t.component(n).matrix());
        comps.push(ModuleMap::new(pn, qn, st.mul(lift.matrix())).ok()?);
    }
    let h = ChainMap::new(p.clone(), q.clone(), comps).ok()?;
    (h.compose(u).equals(s) && h.compose(v).equals(t)).then_some(h)
}

/// The canonical `S^{n-1}(M) ↪ D^n(M) ↠ S^n(M)`.
pub fn sphere_disk_sequence(n: i64, m: &FpModule) -> (ChainMap, ChainMap) {
    let s0 = ChainComplex::sphere(n - 1, m);
    let d = ChainComplex::disk(n, m);
    let s1 = ChainComplex::sphere(n, m);
    let inc = ChainMap::new(s0.clone(), d.clone(), vec![ModuleMap::identity(m)]).expect("inclusion is a chain map");
    let comps = d
        .degrees()
        .map(|k| if k == n { ModuleMap::identity(m) } else { ModuleMap::zero(m, &s1.object(k)) })
        .collect();
    let proj = ChainMap::new(d, s1, comps).expect("projection is a chain map");
    (inc, proj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn z() -> Ring {
        Ring::Integers
    }

    fn times(ring: &Ring, k: i64) -> ChainComplex {
        let f = FpModule::free(ring, 1);
        let d = ModuleMap::new(f.clone(), f.clone(), Matrix::from_rows(ring, &[vec![k]])).unwrap();
        ChainComplex::new(ring, 0, vec![f.clone(), f], vec![d]).unwrap()
    }

    #[test]
    fn homology_of_times_two() {
        let c = times(&z(), 2);
        assert!(c.homology(1).is_zero());
        assert_eq!(c.homology(0).invariant_factors(), vec![BigInt::from(2)]);
        assert!(!c.is_exact());
    }

    #[test]
    fn spheres_and_disks() {
        let zz = FpModule::free(&z(), 1);
        let d = ChainComplex::disk(1, &zz);
        assert!(d.is_exact());
        assert!((-1..=2).all(|n| d.homology(n).is_zero()));
        let s = ChainComplex::sphere(3, &FpModule::cyclic(&z(), 5));
        assert_eq!(s.homology(3).invariant_factors(), vec![BigInt::from(5)]);
        assert!(ChainComplex::sphere(0, &FpModule::zero(&z())).is_zero());
        let (i, p) = sphere_disk_sequence(1, &zz);
        assert!(i.is_mono() && p.is_epi());
        assert!(p.compose(&i).is_zero());
    }

    #[test]
    fn d_squared_rejected() {
        let r = z();
        let f = FpModule::free(&r, 1);
        let one = ModuleMap::identity(&f);
        let err = ChainComplex::new(&r, 0, vec![f.clone(), f.clone(), f], vec![one.clone(), one]).unwrap_err();
        assert!(err.to_string().contains("degree 2"));
    }

    #[test]
    fn tensor_spheres_and_unit() {
        let r = z();
        let a = ChainComplex::sphere(1, &FpModule::cyclic(&r, 4));
        let b = ChainComplex::sphere(2, &FpModule::cyclic(&r, 6));
        let t = tensor_complexes(&a, &b);
        assert_eq!(t.support(), Some((3, 3)));
        assert_eq!(t.homology(3).invariant_factors(), vec![BigInt::from(2)]);
        let x = times(&r, 3);
        let u = unit_iso(&x);
        assert!(u.is_iso());
    }

    #[test]
    fn tensor_d_squared_and_isos() {
        let r = Ring::zmod(4).unwrap();
        let x = times(&r, 2);
        let y = ChainComplex::disk(1, &FpModule::free(&r, 1));
        let t = tensor_complexes(&x, &y);
        let t2 = ChainComplex::new(&r, t.lo(), t.objects.clone(), t.diffs.clone());
        assert!(t2.is_ok());
        let s = symmetry_iso(&x, &y);
        assert!(ChainMap::new(s.source().clone(), s.target().clone(), s.components.clone()).is_ok());
        assert!(s.is_iso());
        let a = associativity_iso(&x, &y, &x);
        assert!(ChainMap::new(a.source().clone(), a.target().clone(), a.components.clone()).is_ok());
        assert!(a.is_iso());
    }

    #[test]
    fn null_homotopies() {
        let zz = FpModule::free(&z(), 1);
        let d = ChainComplex::disk(2, &zz);
        assert!(is_null_homotopic(&ChainMap::identity(&d)).is_some());
        let s = ChainComplex::sphere(0, &FpModule::cyclic(&z(), 2));
        assert!(is_null_homotopic(&ChainMap::identity(&s)).is_none());
        let h = is_null_homotopic(&ChainMap::zero(&s, &s)).unwrap();
        assert!(h.s.iter().all(|m| m.is_zero()));
    }

    #[test]
    fn ext1_of_complexes() {
        let r = z();
        let zz = FpModule::free(&r, 1);
        let y = ChainComplex::disk(1, &zz);
        let e = ext1_complexes(&ChainComplex::sphere(0, &FpModule::cyclic(&r, 2)), &y);
        assert_eq!(e.invariant_factors(), vec![BigInt::from(2)]);
        let e = ext1_complexes(&ChainComplex::disk(1, &FpModule::free(&r, 2)), &times(&r, 2));
        assert!(e.is_zero());
        let e = ext1_complexes(&ChainComplex::sphere(0, &FpModule::cyclic(&r, 2)), &ChainComplex::sphere(1, &zz));
        assert!(e.is_zero());
    }

    #[test]
    fn pushouts_and_pullbacks() {
        let r = z();
        let zero = ChainComplex::zero(&r);
        let b = times(&r, 2);
        let c = ChainComplex::disk(1, &FpModule::free(&r, 1));
        let (p, u, v) = pushout_chainmaps(&ChainMap::zero(&zero, &b), &ChainMap::zero(&zero, &c)).unwrap();
        assert_eq!(p.object(0).gens(), 2);
        assert!(u.is_mono() && v.is_mono());
        let g = ChainMap::identity(&b);
        let (p, _, v) = pushout_chainmaps(&ChainMap::identity(&b), &g).unwrap();
        assert_eq!(p.object(0).invariant_factors(), b.object(0).invariant_factors());
        assert!(v.is_iso());
        let (q, p1, _) = pullback_chainmaps(&ChainMap::identity(&b), &ChainMap::identity(&b)).unwrap();
        assert!(p1.is_iso());
        assert_eq!(q.support(), b.support());
    }
}
