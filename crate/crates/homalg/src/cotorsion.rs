//! Object classes, small cotorsion pairs and the induced classes of complexes.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::complex::{first_non_null_homotopic, hom_complex, ChainComplex, ChainMap};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::module::{ext_n, hom_basis, is_flat, is_injective, is_projective, FpModule, ModuleMap};
use crate::ring::Ring;

/// Largest cyclic order enumerated over `Z`.
pub const DEFAULT_ORDER_BOUND: u64 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassId {
    AllObjects,
    Projective,
    Flat,
    Injective,
    /// The right perpendicular `{X : Ext^1(F, X) = 0 for F in the family}`.
    PerpOfFamily(Vec<FpModule>),
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassId::AllObjects => write!(f, "all"),
            ClassId::Projective => write!(f, "projective"),
            ClassId::Flat => write!(f, "flat"),
            ClassId::Injective => write!(f, "injective"),
            ClassId::PerpOfFamily(fam) => {
                let names: Vec<String> = fam.iter().map(|m| m.to_string()).collect();
                write!(f, "perp{{{}}}", names.join(", "))
            }
        }
    }
}

/// A module class together with the generator bound used when enumerating members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSpec {
    pub id: ClassId,
    pub gamma: usize,
}

impl ClassSpec {
    pub fn new(id: ClassId, gamma: usize) -> ClassSpec {
        ClassSpec { id, gamma }
    }

    pub fn contains(&self, m: &FpModule) -> Result<bool> {
        match &self.id {
            ClassId::AllObjects => Ok(true),
            ClassId::Projective => Ok(is_projective(m)),
            ClassId::Flat => Ok(is_flat(m)),
            ClassId::Injective => is_injective(m),
            ClassId::PerpOfFamily(fam) => right_perp_member(m, fam),
        }
    }
}

/// `Ext^1(F, X) = 0` for every `F` in the family.
pub fn right_perp_member(x: &FpModule, family: &[FpModule]) -> Result<bool> {
    for f in family {
        if f.ring() != x.ring() {
            return Err(Error::RingMismatch(format!("{} vs {}", f.ring(), x.ring())));
        }
        if !ext_n(f, x, 1)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Cyclic generators `d` (with `R/(d)` nonzero) in enumeration order: torsion first, `R` last.
fn cyclic_parts(ring: &Ring, bound: u64) -> Vec<BigInt> {
    let mut v = ring.cyclic_quotient_generators(bound);
    v.sort_by_key(|d| d.is_zero());
    v
}

/// All modules `⊕ R/(d_i)` with at most `gamma` summands (over `Z`, cyclic orders up to
/// `bound`), one per isomorphism class, in canonical presentation. The zero module comes
/// first, then by number of summands, then lexicographically in the cyclic order.
pub fn small_modules(ring: &Ring, gamma: usize, bound: u64) -> Vec<FpModule> {
    let parts = cyclic_parts(ring, bound);
    let mut out: Vec<FpModule> = vec![FpModule::zero(ring)];
    let mut seen: Vec<Vec<BigInt>> = vec![vec![]];
    let mut idx: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..gamma {
        let mut next = Vec::new();
        for combo in &idx {
            let start = combo.last().copied().unwrap_or(0);
            for k in start..parts.len() {
                let mut c = combo.clone();
                c.push(k);
                next.push(c);
            }
        }
        for c in &next {
            let factors: Vec<BigInt> = c.iter().map(|&k| parts[k].clone()).collect();
            let m = FpModule::from_factors(ring, &factors);
            let inv = m.invariant_factors();
            if !seen.contains(&inv) {
                seen.push(inv);
                out.push(m.simplify().0);
            }
        }
        idx = next;
    }
    out
}

/// A small cotorsion pair: the left class, the cogenerating set `S` (so the right class is
/// `S^⊥`) and generating monomorphisms `I` whose cokernels are in `S ∪ {R}`.
#[derive(Clone, Debug)]
pub struct CotorsionPairSpec {
    pub ring: Ring,
    pub left: ClassSpec,
    pub cogenerators: Vec<FpModule>,
    pub generating_monos: Vec<ModuleMap>,
    pub order_bound: u64,
}

fn zero_to_r(ring: &Ring) -> ModuleMap {
    ModuleMap::zero(&FpModule::zero(ring), &FpModule::free(ring, 1))
}

impl CotorsionPairSpec {
    /// `(Projective, all)`, cogenerated by `R`.
    pub fn projective(ring: &Ring, gamma: usize) -> CotorsionPairSpec {
        CotorsionPairSpec {
            ring: ring.clone(),
            left: ClassSpec::new(ClassId::Projective, gamma),
            cogenerators: vec![FpModule::free(ring, 1)],
            generating_monos: vec![zero_to_r(ring)],
            order_bound: DEFAULT_ORDER_BOUND,
        }
    }

    /// `(Flat, cotorsion)`. Finitely generated flat modules are projective, so the
    /// cogenerating data matches the projective pair.
    pub fn flat(ring: &Ring, gamma: usize) -> CotorsionPairSpec {
        CotorsionPairSpec { left: ClassSpec::new(ClassId::Flat, gamma), ..CotorsionPairSpec::projective(ring, gamma) }
    }

    /// `(all, Injective)` over a quasi-Frobenius ring, cogenerated by the cyclic modules
    /// `R/I` with generating monos `I ↪ R`.
    pub fn injective(ring: &Ring, gamma: usize) -> Result<CotorsionPairSpec> {
        if !ring.is_quasi_frobenius() {
            return Err(Error::UnsupportedRing(format!("injective pair needs a quasi-Frobenius ring, got {ring}")));
        }
        let r = FpModule::free(ring, 1);
        let mut cogenerators = Vec::new();
        let mut monos = vec![zero_to_r(ring)];
        let n = ring.modulus().expect("finite").clone();
        for d in ring.cyclic_quotient_generators(0) {
            if d.is_zero() {
                continue;
            }
            cogenerators.push(FpModule::cyclic(ring, d.clone()));
            // (d) ≅ R/(n/d), generated by d.
            let ideal = FpModule::cyclic(ring, &n / &d);
            let inc = ModuleMap::new(ideal, r.clone(), Matrix::column_vector(ring, vec![d.clone()]))
                .expect("ideal inclusion is well defined");
            monos.push(inc);
        }
        cogenerators.push(r);
        Ok(CotorsionPairSpec {
            ring: ring.clone(),
            left: ClassSpec::new(ClassId::AllObjects, gamma),
            cogenerators,
            generating_monos: monos,
            order_bound: DEFAULT_ORDER_BOUND,
        })
    }

    /// Left class of all modules paired with the projective cogenerating data. Not a
    /// cotorsion pair over `Z`: `Ext^1(Z/2, Z/2) != 0`.
    pub fn mismatched(ring: &Ring, gamma: usize) -> CotorsionPairSpec {
        CotorsionPairSpec { left: ClassSpec::new(ClassId::AllObjects, gamma), ..CotorsionPairSpec::projective(ring, gamma) }
    }

    pub fn gamma(&self) -> usize {
        self.left.gamma
    }

    /// Structural checks: cogenerators in the left class, cokernels of generating monos
    /// among the cogenerators or `R`, and `0 -> R` present.
    pub fn validate(&self) -> Result<()> {
        for c in &self.cogenerators {
            if !self.left.contains(c)? {
                return Err(Error::Validation(format!("cogenerator {c} is not in the left class")));
            }
        }
        let r = FpModule::free(&self.ring, 1);
        let mut has_zero = false;
        for i in &self.generating_monos {
            if !i.is_mono() {
                return Err(Error::Validation("generating map is not mono".into()));
            }
            let c = i.cokernel();
            let ok = c.target().is_isomorphic(&r) || self.cogenerators.iter().any(|s| s.is_isomorphic(c.target()));
            if !ok {
                return Err(Error::Validation(format!("cokernel {} of a generating mono is not a cogenerator", c.target())));
            }
            has_zero |= i.source().is_zero() && i.target().is_isomorphic(&r);
        }
        if !has_zero {
            return Err(Error::Validation("0 -> R missing from the generating monos".into()));
        }
        Ok(())
    }

    pub fn left_contains(&self, m: &FpModule) -> Result<bool> {
        self.left.contains(m)
    }

    pub fn right_contains(&self, m: &FpModule) -> Result<bool> {
        right_perp_member(m, &self.cogenerators)
    }

    fn enumerate(&self) -> Vec<FpModule> {
        small_modules(&self.ring, self.gamma(), self.order_bound)
    }

    /// Nonzero left-class modules within the generator bound, at most `budget`.
    pub fn sample_left(&self, budget: usize) -> Result<Vec<FpModule>> {
        let mut out = Vec::new();
        for m in self.enumerate().into_iter().skip(1) {
            if out.len() >= budget {
                break;
            }
            if self.left_contains(&m)? {
                out.push(m);
            }
        }
        Ok(out)
    }

    pub fn sample_right(&self, budget: usize) -> Result<Vec<FpModule>> {
        let mut out = Vec::new();
        for m in self.enumerate().into_iter().skip(1) {
            if out.len() >= budget {
                break;
            }
            if self.right_contains(&m)? {
                out.push(m);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ComplexClass {
    /// Exact with cycles in the left class.
    FTilde,
    /// Entries in the left class, maps into `CTilde` null-homotopic.
    DgFLeft,
    /// Exact with cycles in the right class.
    CTilde,
    /// Entries in the right class, maps from `FTilde` null-homotopic.
    DgCRight,
}

impl fmt::Display for ComplexClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ComplexClass::FTilde => "F~",
            ComplexClass::DgFLeft => "dg-F~",
            ComplexClass::CTilde => "C~",
            ComplexClass::DgCRight => "dg-C~",
        };
        f.write_str(s)
    }
}

/// A complex class with the finite test family used on the dg side.
#[derive(Clone, Debug)]
pub struct ComplexClassId {
    pub kind: ComplexClass,
    pub family: Vec<ChainComplex>,
}

/// Outcome of a class-membership test, listing what was checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassCertificate {
    pub class: String,
    pub member: bool,
    pub tests: Vec<String>,
    /// Set on dg-side answers, which are only established against the test family.
    pub at_scale: Option<usize>,
    pub failure: Option<String>,
}

impl ClassCertificate {
    fn fail(mut self, why: String) -> ClassCertificate {
        self.member = false;
        self.failure = Some(why);
        self
    }
}

/// Exact complexes built from a module: disks and the short exact sequence
/// `K ↪ R^g ↠ M` of a free cover, in degrees `n + 1, n, n - 1`.
fn exact_pieces(m: &FpModule, n: i64) -> Vec<ChainComplex> {
    let ring = m.ring();
    let mut out = vec![ChainComplex::disk(n, m)];
    let (c, _, _) = m.simplify();
    let cover = ModuleMap::unchecked(FpModule::free(ring, c.gens()), c.clone(), Matrix::identity(ring, c.gens()));
    let k = cover.kernel();
    if !k.source().is_zero() && !c.is_zero() {
        let x = ChainComplex::new(ring, n - 1, vec![c.clone(), cover.source().clone(), k.source().clone()], vec![cover.clone(), k])
            .expect("short exact sequence is a complex");
        out.push(x);
    }
    out
}

impl ComplexClassId {
    pub fn new(kind: ComplexClass, family: Vec<ChainComplex>) -> ComplexClassId {
        ComplexClassId { kind, family }
    }

    /// Default test family: exact pieces on sampled modules of the opposite side, shifted
    /// across `window`, keeping only those that pass the matching tilde predicate.
    pub fn with_default_family(kind: ComplexClass, pair: &CotorsionPairSpec, window: (i64, i64)) -> Result<ComplexClassId> {
        let budget = 3;
        let (samples, filter) = match kind {
            ComplexClass::DgFLeft => {
                let mut s = pair.sample_right(budget)?;
                for c in &pair.cogenerators {
                    if pair.right_contains(c)? && !s.iter().any(|m| m.is_isomorphic(c)) {
                        s.push(c.clone());
                    }
                }
                (s, Some(ComplexClass::CTilde))
            }
            ComplexClass::DgCRight => (pair.sample_left(budget)?, Some(ComplexClass::FTilde)),
            _ => (vec![], None),
        };
        let mut family = Vec::new();
        if let Some(f) = filter {
            for m in &samples {
                for n in window.0..=window.1 + 1 {
                    for x in exact_pieces(m, n) {
                        if tilde_member(&x, f, pair)?.member {
                            family.push(x);
                        }
                    }
                }
            }
        }
        Ok(ComplexClassId { kind, family })
    }
}

fn tilde_member(x: &ChainComplex, kind: ComplexClass, pair: &CotorsionPairSpec) -> Result<ClassCertificate> {
    let left = kind == ComplexClass::FTilde;
    let mut cert = ClassCertificate { class: kind.to_string(), member: true, tests: vec!["exact".into()], at_scale: None, failure: None };
    for n in x.degrees() {
        if !x.homology(n).is_zero() {
            return Ok(cert.fail(format!("H_{n} = {}", x.homology(n))));
        }
    }
    for n in x.degrees() {
        let z = x.cycles(n).source().clone();
        let ok = if left { pair.left_contains(&z)? } else { pair.right_contains(&z)? };
        cert.tests.push(format!("Z_{n} in {}", if left { "left" } else { "right" }));
        if !ok {
            return Ok(cert.fail(format!("Z_{n} = {z} not in the {} class", if left { "left" } else { "right" })));
        }
    }
    Ok(cert)
}

/// Membership of a bounded complex in one of the four induced classes. Tilde classes are
/// decided exactly; dg classes are decided against the test family and flagged at scale.
pub fn complex_class_member(x: &ChainComplex, cls: &ComplexClassId, pair: &CotorsionPairSpec) -> Result<ClassCertificate> {
    if x.ring() != &pair.ring {
        return Err(Error::RingMismatch(format!("complex over {}, pair over {}", x.ring(), pair.ring)));
    }
    match cls.kind {
        ComplexClass::FTilde | ComplexClass::CTilde => tilde_member(x, cls.kind, pair),
        ComplexClass::DgFLeft | ComplexClass::DgCRight => {
            let left = cls.kind == ComplexClass::DgFLeft;
            let mut cert = ClassCertificate {
                class: cls.kind.to_string(),
                member: true,
                tests: vec![],
                at_scale: Some(pair.gamma()),
                failure: None,
            };
            for n in x.degrees() {
                let m = x.object(n);
                let ok = if left { pair.left_contains(&m)? } else { pair.right_contains(&m)? };
                cert.tests.push(format!("X_{n} in {}", if left { "left" } else { "right" }));
                if !ok {
                    return Ok(cert.fail(format!("X_{n} = {m} not in the {} class", if left { "left" } else { "right" })));
                }
            }
            for (k, t) in cls.family.iter().enumerate() {
                let (src, dst) = if left { (x, t) } else { (t, x) };
                if let Some(bad) = non_null_homotopic_map(src, dst) {
                    cert.tests.push(format!("maps vs family[{k}]"));
                    return Ok(cert.fail(format!("map {} not null-homotopic against family member {t}", bad)));
                }
                cert.tests.push(format!("maps vs family[{k}]"));
            }
            Ok(cert)
        }
    }
}

/// Some generator of `Hom_Ch(a, y)` that is not null-homotopic, described by its degrees.
fn non_null_homotopic_map(a: &ChainComplex, y: &ChainComplex) -> Option<String> {
    let overlap = a.degrees().any(|n| y.support().is_some_and(|(lo, hi)| n >= lo && n <= hi));
    if !overlap {
        return None;
    }
    let h = hom_complex(a, y);
    let (idx, maps): (Vec<usize>, Vec<ChainMap>) = (0..h.module.gens())
        .map(|j| (j, h.chain_map(&Matrix::unit_vector(a.ring(), h.module.gens(), j))))
        .filter(|(_, f)| !f.is_zero())
        .unzip();
    first_non_null_homotopic(a, y, &maps).map(|k| format!("#{}", idx[k]))
}

/// The induced generating monos for complexes with generator `G = R`:
/// `0 -> D^n(G)`, `S^{n-1}(G) -> D^n(G)` and `S^n(k)` for each generating mono `k`,
/// for `n` in the window, in that order.
pub fn induced_generating_monos(pair: &CotorsionPairSpec, window: Option<(i64, i64)>) -> Vec<ChainMap> {
    let (lo, hi) = match window {
        Some(w) if w.0 <= w.1 => w,
        _ => return vec![],
    };
    let ring = &pair.ring;
    let g = FpModule::free(ring, 1);
    let zero = ChainComplex::zero(ring);
    let mut out = Vec::new();
    for n in lo..=hi {
        out.push(ChainMap::zero(&zero, &ChainComplex::disk(n, &g)));
    }
    for n in lo..=hi {
        let s = ChainComplex::sphere(n - 1, &g);
        let d = ChainComplex::disk(n, &g);
        out.push(ChainMap::new(s, d, vec![ModuleMap::identity(&g)]).expect("sphere into disk"));
    }
    for n in lo..=hi {
        for k in &pair.generating_monos {
            out.push(sphere_map(n, k));
        }
    }
    out
}

/// `S^n(k)`.
pub fn sphere_map(n: i64, k: &ModuleMap) -> ChainMap {
    let s = ChainComplex::sphere(n, k.source());
    let t = ChainComplex::sphere(n, k.target());
    let comps = if s.is_zero() { vec![] } else { vec![k.clone()] };
    ChainMap::new(s, t, comps).expect("sphere map")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub checked: usize,
    pub counterexamples: Vec<String>,
}

impl Verdict {
    fn new(name: &str) -> Verdict {
        Verdict { name: name.into(), pass: true, checked: 0, counterexamples: vec![] }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.pass = false;
            self.counterexamples.push(witness());
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompatibilityReport {
    pub resolving: Verdict,
    pub ext_vanishing: Verdict,
    pub intersection: Verdict,
}

impl CompatibilityReport {
    pub fn all_pass(&self) -> bool {
        self.resolving.pass && self.ext_vanishing.pass && self.intersection.pass
    }

    pub fn verdicts(&self) -> [&Verdict; 3] {
        [&self.resolving, &self.ext_vanishing, &self.intersection]
    }
}

/// Nonzero maps `a -> b` worth testing: the Hom generators and their sum.
fn sample_maps(a: &FpModule, b: &FpModule) -> Vec<ModuleMap> {
    let basis = hom_basis(a, b);
    let mut out = Vec::new();
    let mut total = Matrix::zero(a.ring(), basis.rows(), 1);
    for j in 0..basis.cols() {
        let col = basis.column(j);
        total = total.add(&col);
        out.push(ModuleMap::unchecked(a.clone(), b.clone(), Matrix::unvectorize(&col, b.gens(), a.gens())));
    }
    if basis.cols() > 1 {
        out.push(ModuleMap::unchecked(a.clone(), b.clone(), Matrix::unvectorize(&total, b.gens(), a.gens())));
    }
    out.retain(|f| !f.is_zero());
    out
}

/// Resolving/coresolving closure, `Ext^{1,2,3}` vanishing between the classes, and
/// `F~ = dg-F~ ∩ exact`, each on samples drawn from the enumerated small modules.
pub fn check_compatibility(pair: &CotorsionPairSpec, sample_budget: usize) -> Result<CompatibilityReport> {
    if sample_budget == 0 {
        return Err(Error::PreconditionFailed("sample budget must be positive".into()));
    }
    let left = pair.sample_left(sample_budget)?;
    let right = pair.sample_right(sample_budget)?;

    let mut resolving = Verdict::new("resolving");
    for a in &left {
        for b in &left {
            for f in sample_maps(a, b) {
                if f.is_epi() {
                    let k = f.kernel().source().clone();
                    let ok = pair.left_contains(&k)?;
                    resolving.record(ok, || format!("ker({a} -> {b}) = {k}"));
                }
            }
        }
    }
    for a in &right {
        for b in &right {
            for f in sample_maps(a, b) {
                if f.is_mono() {
                    let c = f.cokernel().target().clone();
                    let ok = pair.right_contains(&c)?;
                    resolving.record(ok, || format!("coker({a} -> {b}) = {c}"));
                }
            }
        }
    }

    let mut ext_vanishing = Verdict::new("ext-vanishing");
    for a in &left {
        for b in &right {
            for n in 1..=3 {
                let e = ext_n(a, b, n)?;
                ext_vanishing.record(e.is_zero(), || format!("({a}, {b})"));
            }
        }
    }
    // One witness per pair.
    ext_vanishing.counterexamples.dedup();

    let mut intersection = Verdict::new("intersection");
    let mut samples = Vec::new();
    for a in &left {
        samples.extend(exact_pieces(a, 1));
        for b in &left {
            let s = a.direct_sum(b);
            let x = ChainComplex::new(
                &pair.ring,
                0,
                vec![b.clone(), s.module.clone(), a.clone()],
                vec![s.projections[1].clone(), s.injections[0].clone()],
            )?;
            samples.push(x);
        }
    }
    for x in &samples {
        if !x.is_exact() {
            continue;
        }
        let (lo, hi) = x.support().unwrap_or((0, 0));
        let dg = ComplexClassId::with_default_family(ComplexClass::DgFLeft, pair, (lo, hi))?;
        if complex_class_member(x, &dg, pair)?.member {
            let ft = ComplexClassId::new(ComplexClass::FTilde, vec![]);
            let ok = complex_class_member(x, &ft, pair)?.member;
            intersection.record(ok, || x.to_string());
        }
    }

    Ok(CompatibilityReport { resolving, ext_vanishing, intersection })
}
