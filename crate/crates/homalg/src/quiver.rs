//! Modules over ring-valued quiver representations.
//!
//! A representation assigns a ring to each vertex and a unital ring homomorphism to each
//! edge. Between the supported rings such a homomorphism is reduction `R(v) -> R(w)`,
//! which exists exactly when the characteristic of `R(w)` divides that of `R(v)`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::kaplansky::{lift_elements, span, sub_contains, FiniteModule, EXHAUSTIVE_LIMIT};
use crate::matrix::Matrix;
use crate::module::{factor_through_mono, is_flat, FpModule, ModuleMap};
use crate::ring::Ring;

fn characteristic(r: &Ring) -> BigInt {
    r.modulus().cloned().unwrap_or_else(BigInt::zero)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuiverEdge {
    pub name: String,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuiverRep {
    pub vertices: Vec<(String, Ring)>,
    pub edges: Vec<QuiverEdge>,
}

impl QuiverRep {
    /// `images[e]` is the image of `1` under the ring map of edge `e`; it must be `1`.
    pub fn new(vertices: Vec<(String, Ring)>, edges: Vec<(String, usize, usize, Vec<BigInt>)>) -> Result<QuiverRep> {
        let mut out = Vec::new();
        for (name, from, to, images) in edges {
            if from >= vertices.len() || to >= vertices.len() {
                return Err(Error::Validation(format!("edge {name} references a missing vertex")));
            }
            let (rv, rw) = (&vertices[from].1, &vertices[to].1);
            if images.len() != 1 {
                return Err(Error::Validation(format!("edge {name}: ring map needs exactly one generator image")));
            }
            if !rw.is_unit(&rw.normalize(&images[0])) || rw.normalize(&images[0]) != rw.normalize(&BigInt::one()) {
                return Err(Error::Validation(format!("edge {name}: ring map must send 1 to 1")));
            }
            let (cv, cw) = (characteristic(rv), characteristic(rw));
            // `char(R(v)) = 0` in `R(w)` is the only relation to respect.
            if !(cv.is_zero() && cw.is_zero() || !cw.is_zero() && cv.is_multiple_of(&cw)) {
                return Err(Error::Validation(format!("edge {name}: no ring map {rv} -> {rw}")));
            }
            out.push(QuiverEdge { name, from, to });
        }
        Ok(QuiverRep { vertices, edges: out })
    }

    pub fn ring(&self, v: usize) -> &Ring {
        &self.vertices[v].1
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|(n, _)| n == name)
    }

    /// Whether `R(w)` is flat over `R(v)` along every edge.
    pub fn is_flat_rep(&self) -> bool {
        self.edges.iter().all(|e| {
            let rv = self.ring(e.from);
            is_flat(&FpModule::cyclic(rv, characteristic(self.ring(e.to))))
        })
    }
}

/// `R(w) ⊗_{R(v)} M` for a module `M` over `R(v)`.
fn base_change(m: &FpModule, rw: &Ring) -> FpModule {
    FpModule::new(rw, m.gens(), m.relations().with_ring(rw)).expect("reduced relations")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuiverRepModule {
    pub rep: QuiverRep,
    pub at: Vec<FpModule>,
    /// `M(e)`, matrices of shape `gens M(w) × gens M(v)` over `R(w)`.
    pub edge_maps: Vec<Matrix>,
}

impl QuiverRepModule {
    pub fn new(rep: &QuiverRep, at: Vec<FpModule>, edge_maps: Vec<Matrix>) -> Result<QuiverRepModule> {
        if at.len() != rep.vertices.len() || edge_maps.len() != rep.edges.len() {
            return Err(Error::DimensionMismatch("one module per vertex and one map per edge".into()));
        }
        for (v, m) in at.iter().enumerate() {
            if m.ring() != rep.ring(v) {
                return Err(Error::RingMismatch(format!("module at {} is over {}, vertex ring {}", rep.vertices[v].0, m.ring(), rep.ring(v))));
            }
        }
        let out = QuiverRepModule { rep: rep.clone(), at, edge_maps: edge_maps.iter().enumerate().map(|(k, a)| a.with_ring(rep.ring(rep.edges[k].to))).collect() };
        for k in 0..rep.edges.len() {
            out.base_change_map(k).map_err(|e| Error::Validation(format!("edge {}: {e}", rep.edges[k].name)))?;
        }
        Ok(out)
    }

    pub fn zero(rep: &QuiverRep) -> QuiverRepModule {
        let at = (0..rep.vertices.len()).map(|v| FpModule::zero(rep.ring(v))).collect();
        let maps = rep.edges.iter().map(|e| Matrix::zero(rep.ring(e.to), 0, 0)).collect();
        QuiverRepModule { rep: rep.clone(), at, edge_maps: maps }
    }

    /// `R(w) ⊗ M(v) -> M(w)` for edge `k`; fails when `M(e)` is not well defined.
    pub fn base_change_map(&self, k: usize) -> Result<ModuleMap> {
        let e = &self.rep.edges[k];
        let rw = self.rep.ring(e.to);
        ModuleMap::new(base_change(&self.at[e.from], rw), self.at[e.to].clone(), self.edge_maps[k].clone())
    }

    pub fn direct_sum(&self, other: &QuiverRepModule) -> Result<QuiverRepModule> {
        if self.rep != other.rep {
            return Err(Error::Validation("direct sum over different representations".into()));
        }
        let at = self.at.iter().zip(&other.at).map(|(a, b)| a.direct_sum(b).module).collect();
        let maps = self.edge_maps.iter().zip(&other.edge_maps).map(|(a, b)| a.block_diag(b)).collect();
        QuiverRepModule::new(&self.rep, at, maps)
    }
}

impl fmt::Display for QuiverRepModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.rep.vertices.iter().zip(&self.at).map(|((n, _), m)| format!("{n}: {m}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// `None` when every base-change map `R(w) ⊗ M(v) -> M(w)` is an isomorphism, otherwise
/// the first failing edge.
pub fn is_quasi_coherent(m: &QuiverRepModule) -> Option<String> {
    (0..m.rep.edges.len())
        .find(|&k| !m.base_change_map(k).map(|f| f.is_iso()).unwrap_or(false))
        .map(|k| m.rep.edges[k].name.clone())
}

pub fn is_flat_rep_module(m: &QuiverRepModule) -> bool {
    m.at.iter().all(is_flat)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cardinal {
    Finite(BigInt),
    Infinite,
}

impl fmt::Display for Cardinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cardinal::Finite(n) => write!(f, "{n}"),
            Cardinal::Infinite => f.write_str("infinite"),
        }
    }
}

/// `|⊔_v M(v)|`, except that the zero module counts as `0`.
pub fn rep_cardinality(m: &QuiverRepModule) -> Cardinal {
    if m.at.iter().all(|x| x.is_zero()) {
        return Cardinal::Finite(BigInt::zero());
    }
    let mut n = BigInt::zero();
    for x in &m.at {
        match x.cardinality() {
            Some(c) => n += c,
            None => return Cardinal::Infinite,
        }
    }
    Cardinal::Finite(n)
}

/// `X ⊆ S ⊆ M` with `S` and `M/S` flat and quasi-coherent.
#[derive(Clone, Debug)]
pub struct QuiverWitness {
    /// Inclusions `S(v) -> M(v)`.
    pub inclusions: Vec<ModuleMap>,
    pub sub: QuiverRepModule,
    pub quotient: QuiverRepModule,
    pub ambient: QuiverRepModule,
    pub seed: Vec<Matrix>,
}

impl QuiverWitness {
    pub fn validate(&self) -> Result<()> {
        for (v, inc) in self.inclusions.iter().enumerate() {
            if !inc.is_mono() || inc.target() != &self.ambient.at[v] || !sub_contains(inc, &self.seed[v]) {
                return Err(Error::Validation(format!("S does not contain X at {}", self.ambient.rep.vertices[v].0)));
            }
        }
        for (name, m) in [("S", &self.sub), ("M/S", &self.quotient)] {
            if !is_flat_rep_module(m) {
                return Err(Error::Validation(format!("{name} is not flat")));
            }
            if let Some(e) = is_quasi_coherent(m) {
                return Err(Error::Validation(format!("{name} is not quasi-coherent at edge {e}")));
            }
        }
        if self.inclusions.iter().all(|i| i.source().is_zero()) && self.ambient.at.iter().any(|m| !m.is_zero()) {
            return Err(Error::Validation("S is zero".into()));
        }
        Ok(())
    }
}

/// Greedy closure of the seed `x` (columns per vertex): push forward along edges, lift
/// generators back along edges, and enlarge each vertex to the smallest submodule that is
/// flat with flat quotient, until nothing changes. Vertices are visited in input order.
pub fn quiver_kaplansky_witness(m: &QuiverRepModule, x: &[Matrix]) -> Result<QuiverWitness> {
    let rep = &m.rep;
    if let Some((n, r)) = rep.vertices.iter().find(|(_, r)| !r.is_finite()) {
        return Err(Error::UnsupportedRing(format!("vertex {n} has infinite ring {r}")));
    }
    if x.len() != rep.vertices.len() {
        return Err(Error::DimensionMismatch("one seed matrix per vertex".into()));
    }
    if !is_flat_rep_module(m) {
        return Err(Error::NotInClass("module is not flat".into()));
    }
    if let Some(e) = is_quasi_coherent(m) {
        return Err(Error::NotInClass(format!("module is not quasi-coherent at edge {e}")));
    }
    let finite: Vec<FiniteModule> = m
        .at
        .iter()
        .map(|a| FiniteModule::new(a, EXHAUSTIVE_LIMIT).ok_or_else(|| Error::budget(format!("vertex module {a} is too large"))))
        .collect::<Result<_>>()?;
    let mut gens: Vec<Matrix> = x.iter().enumerate().map(|(v, s)| s.with_ring(rep.ring(v))).collect();
    for (v, g) in gens.iter().enumerate() {
        if g.rows() != m.at[v].gens() {
            return Err(Error::DimensionMismatch(format!("seed at {} has {} rows", rep.vertices[v].0, g.rows())));
        }
    }
    let seed = gens.clone();
    let all_zero = gens.iter().enumerate().all(|(v, g)| (0..g.cols()).all(|j| m.at[v].element_is_zero(&g.column(j))));
    if all_zero {
        if let Some(v) = (0..m.at.len()).find(|&v| !m.at[v].is_zero()) {
            let j = (0..m.at[v].gens()).find(|&j| !m.at[v].element_is_zero(&Matrix::unit_vector(rep.ring(v), m.at[v].gens(), j))).expect("nonzero module");
            gens[v] = gens[v].hstack(&Matrix::unit_vector(rep.ring(v), m.at[v].gens(), j));
        }
    }
    let mut subs: Vec<ModuleMap> = (0..m.at.len()).map(|v| span(&m.at[v], &gens[v])).collect();
    loop {
        let mut changed = false;
        for (k, e) in rep.edges.iter().enumerate() {
            // Push forward: M(e)(S(v)) ⊆ S(w).
            let img = m.edge_maps[k].mul(&subs[e.from].matrix().with_ring(rep.ring(e.to)));
            if !sub_contains(&subs[e.to], &img) {
                subs[e.to] = span(&m.at[e.to], &subs[e.to].matrix().hstack(&img));
                changed = true;
            }
            // Pull back: S(w) is generated by the image of S(v).
            let f = m.base_change_map(k)?;
            let pre = lift_elements(&f, subs[e.to].matrix()).expect("quasi-coherent edge maps are onto");
            let pre = pre.with_ring(rep.ring(e.from));
            if !sub_contains(&subs[e.from], &pre) {
                subs[e.from] = span(&m.at[e.from], &subs[e.from].matrix().hstack(&pre));
                changed = true;
            }
        }
        for v in 0..m.at.len() {
            let fm = &finite[v];
            let seed_idx: Vec<usize> = (0..subs[v].matrix().cols()).map(|j| fm.index(&subs[v].matrix().column(j))).collect();
            let current = subs[v].source().cardinality();
            let best = fm
                .submodules_containing(&seed_idx)
                .into_iter()
                .map(|(_, g)| span(&m.at[v], &fm.gens_matrix(&g)))
                .find(|s| is_flat(s.source()) && is_flat(s.cokernel().target()))
                .expect("M(v) itself qualifies");
            if best.source().cardinality() != current {
                subs[v] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let sub = restrict(m, &subs)?;
    let quotient = quotient(m, &subs)?;
    let w = QuiverWitness { inclusions: subs, sub, quotient, ambient: m.clone(), seed };
    w.validate()?;
    Ok(w)
}

fn restrict(m: &QuiverRepModule, subs: &[ModuleMap]) -> Result<QuiverRepModule> {
    let rep = &m.rep;
    let at: Vec<FpModule> = subs.iter().map(|s| s.source().clone()).collect();
    let mut maps = Vec::new();
    for (k, e) in rep.edges.iter().enumerate() {
        let rw = rep.ring(e.to);
        let inc_w = &subs[e.to];
        let src = base_change(&at[e.from], rw);
        let f = ModuleMap::new(src, m.at[e.to].clone(), m.edge_maps[k].mul(&subs[e.from].matrix().with_ring(rw)))?;
        let t = factor_through_mono(inc_w, &f).ok_or_else(|| Error::Validation("S is not closed under edge maps".into()))?;
        maps.push(t.matrix().clone());
    }
    QuiverRepModule::new(rep, at, maps)
}

fn quotient(m: &QuiverRepModule, subs: &[ModuleMap]) -> Result<QuiverRepModule> {
    let at = m.at.iter().zip(subs).map(|(a, s)| a.with_extra_relations(s.matrix())).collect();
    QuiverRepModule::new(&m.rep, at, m.edge_maps.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn z6() -> Ring {
        Ring::zmod(6).unwrap()
    }

    fn edge_rep(rv: Ring, rw: Ring) -> QuiverRep {
        QuiverRep::new(vec![("v".into(), rv), ("w".into(), rw)], vec![("e".into(), 0, 1, vec![BigInt::one()])]).unwrap()
    }

    #[test]
    fn ring_maps_validate() {
        assert!(QuiverRep::new(vec![("v".into(), Ring::zmod(2).unwrap()), ("w".into(), z6())], vec![("e".into(), 0, 1, vec![BigInt::one()])]).is_err());
        assert!(QuiverRep::new(vec![("v".into(), z6()), ("w".into(), Ring::Integers)], vec![("e".into(), 0, 1, vec![BigInt::one()])]).is_err());
        assert!(QuiverRep::new(vec![("v".into(), z6()), ("w".into(), Ring::zmod(2).unwrap())], vec![("e".into(), 0, 1, vec![BigInt::from(2)])]).is_err());
        assert!(QuiverRep::new(vec![("v".into(), z6()), ("w".into(), Ring::zmod(2).unwrap())], vec![("e".into(), 0, 1, vec![BigInt::from(3)])]).is_ok());
        assert!(edge_rep(z6(), Ring::zmod(2).unwrap()).is_flat_rep());
        assert!(!edge_rep(Ring::zmod(4).unwrap(), Ring::zmod(2).unwrap()).is_flat_rep());
        assert!(!edge_rep(Ring::Integers, z6()).is_flat_rep());
    }

    #[test]
    fn quasi_coherence_examples() {
        let rep = edge_rep(Ring::Integers, z6());
        let m = QuiverRepModule::new(&rep, vec![FpModule::free(&Ring::Integers, 1), FpModule::free(&z6(), 1)], vec![Matrix::from_rows(&z6(), &[vec![1]])]).unwrap();
        assert_eq!(is_quasi_coherent(&m), None);
        assert!(is_flat_rep_module(&m));
        assert_eq!(rep_cardinality(&m), Cardinal::Infinite);
        let m = QuiverRepModule::new(&rep, vec![FpModule::free(&Ring::Integers, 1), FpModule::cyclic(&z6(), 3)], vec![Matrix::from_rows(&z6(), &[vec![1]])]).unwrap();
        assert_eq!(is_quasi_coherent(&m).as_deref(), Some("e"));
        let single = QuiverRep::new(vec![("v".into(), Ring::Integers)], vec![]).unwrap();
        let m = QuiverRepModule::new(&single, vec![FpModule::cyclic(&Ring::Integers, 2)], vec![]).unwrap();
        assert_eq!(is_quasi_coherent(&m), None);
        assert!(!is_flat_rep_module(&m));
        assert!(is_flat_rep_module(&QuiverRepModule::zero(&rep)));
        assert_eq!(rep_cardinality(&QuiverRepModule::zero(&rep)), Cardinal::Finite(BigInt::zero()));
        let two = QuiverRep::new(vec![("v".into(), Ring::Integers), ("w".into(), Ring::Integers)], vec![]).unwrap();
        let m = QuiverRepModule::new(&two, vec![FpModule::cyclic(&Ring::Integers, 2), FpModule::cyclic(&Ring::Integers, 3)], vec![]).unwrap();
        assert_eq!(rep_cardinality(&m), Cardinal::Finite(BigInt::from(5)));
    }

    #[test]
    fn ill_defined_edge_map_rejected() {
        let rep = edge_rep(Ring::Integers, z6());
        let r = QuiverRepModule::new(&rep, vec![FpModule::cyclic(&Ring::Integers, 2), FpModule::free(&z6(), 1)], vec![Matrix::from_rows(&z6(), &[vec![1]])]);
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    /// Submodules of a finite module, by brute-force closure of every subset of generators.
    fn all_subgroups(m: &FpModule) -> Vec<(HashSet<Vec<BigInt>>, Matrix)> {
        let els = m.elements(64).unwrap();
        let canon = |x: &Matrix| m.canonical_rep(x).entries().to_vec();
        let mut out: Vec<(HashSet<Vec<BigInt>>, Matrix)> = Vec::new();
        for a in &els {
            for b in &els {
                let g = a.hstack(b);
                let mut set: HashSet<Vec<BigInt>> = HashSet::new();
                for i in 0..6 {
                    for j in 0..6 {
                        let x = a.scale(&BigInt::from(i)).add(&b.scale(&BigInt::from(j)));
                        set.insert(canon(&x));
                    }
                }
                if !out.iter().any(|(s, _)| s == &set) {
                    out.push((set, g));
                }
            }
        }
        out
    }

    #[test]
    fn witness_for_a_free_vertex() {
        let r = z6();
        let single = QuiverRep::new(vec![("v".into(), r.clone())], vec![]).unwrap();
        let m = QuiverRepModule::new(&single, vec![FpModule::free(&r, 2)], vec![]).unwrap();
        let x = Matrix::from_rows(&r, &[vec![1], vec![0]]);
        let w = quiver_kaplansky_witness(&m, std::slice::from_ref(&x)).unwrap();
        assert_eq!(rep_cardinality(&w.sub), Cardinal::Finite(BigInt::from(6)));
        assert!(sub_contains(&w.inclusions[0], &Matrix::from_rows(&r, &[vec![1], vec![0]])));
        // Oracle: the smallest flat submodule with flat quotient containing x is unique.
        let subs = all_subgroups(&m.at[0]);
        let key = m.at[0].canonical_rep(&x).entries().to_vec();
        let good: Vec<usize> = subs
            .iter()
            .filter(|(s, g)| {
                let inc = span(&m.at[0], g);
                s.contains(&key) && is_flat(inc.source()) && is_flat(inc.cokernel().target())
            })
            .map(|(s, _)| s.len())
            .collect();
        let min = *good.iter().min().unwrap();
        assert_eq!(min, 6);
        assert_eq!(good.iter().filter(|&&n| n == min).count(), 1);

        let zero = Matrix::zero(&r, 2, 0);
        let w = quiver_kaplansky_witness(&m, &[zero]).unwrap();
        assert!(!w.sub.at[0].is_zero());
        let all = Matrix::identity(&r, 2);
        let w = quiver_kaplansky_witness(&m, &[all]).unwrap();
        assert!(w.quotient.at[0].is_zero());
        let zint = QuiverRep::new(vec![("v".into(), Ring::Integers)], vec![]).unwrap();
        let mi = QuiverRepModule::new(&zint, vec![FpModule::free(&Ring::Integers, 1)], vec![]).unwrap();
        assert!(matches!(quiver_kaplansky_witness(&mi, &[Matrix::zero(&Ring::Integers, 1, 0)]), Err(Error::UnsupportedRing(_))));
    }

    #[test]
    fn witness_along_an_edge() {
        let (rv, rw) = (z6(), Ring::zmod(2).unwrap());
        let rep = edge_rep(rv.clone(), rw.clone());
        let m = QuiverRepModule::new(&rep, vec![FpModule::free(&rv, 2), FpModule::free(&rw, 2)], vec![Matrix::identity(&rw, 2)]).unwrap();
        let x = vec![Matrix::zero(&rv, 2, 0), Matrix::from_rows(&rw, &[vec![0], vec![1]])];
        let w = quiver_kaplansky_witness(&m, &x).unwrap();
        w.validate().unwrap();
        assert!(!w.quotient.at[0].is_zero());
        let bad = QuiverRepModule::new(&rep, vec![FpModule::free(&rv, 1), FpModule::zero(&rw)], vec![Matrix::zero(&rw, 0, 1)]).unwrap();
        assert!(matches!(quiver_kaplansky_witness(&bad, &[Matrix::zero(&rv, 1, 0), Matrix::zero(&rw, 0, 0)]), Err(Error::NotInClass(_))));
    }
}
