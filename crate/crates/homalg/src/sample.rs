//! Seeded random modules, complexes and chain maps.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{hom_complex, ChainComplex, ChainMap};
use crate::matrix::Matrix;
use crate::module::{hom_module, FpModule, ModuleMap};
use crate::ring::Ring;

pub struct Sampler {
    rng: ChaCha8Rng,
    ring: Ring,
    /// Cyclic generators allowed as summands; `0` stands for `R`.
    parts: Vec<BigInt>,
    pub max_gens: usize,
    pub max_len: usize,
}

impl Sampler {
    /// Over `Z/n` with a repeated prime factor only free modules are drawn, since
    /// other modules have no bounded free resolution.
    pub fn new(ring: &Ring, seed: u64) -> Sampler {
        let all = ring.cyclic_quotient_generators(6);
        let parts = if free_only(ring) { vec![BigInt::zero()] } else { all };
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), ring: ring.clone(), parts, max_gens: 3, max_len: 4 }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn coefficient(&mut self) -> BigInt {
        BigInt::from(self.rng.gen_range(-2i64..=2))
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn module(&mut self) -> FpModule {
        let g = self.rng.gen_range(0..=self.max_gens);
        self.module_with(g)
    }

    pub fn module_with(&mut self, gens: usize) -> FpModule {
        let factors: Vec<BigInt> = (0..gens).map(|_| self.parts[self.rng.gen_range(0..self.parts.len())].clone()).collect();
        FpModule::from_factors(&self.ring, &factors)
    }

    fn vector(&mut self, n: usize) -> Matrix {
        let v = (0..n).map(|_| self.coefficient()).collect();
        Matrix::column_vector(&self.ring, v)
    }

    /// A random combination of the generators of `Hom(a, b)`.
    pub fn map(&mut self, a: &FpModule, b: &FpModule) -> ModuleMap {
        let h = hom_module(a, b);
        let c = self.vector(h.module.gens());
        let m = h.map_of(&c);
        ModuleMap::new(a.clone(), b.clone(), m.matrix().clone()).expect("hom generators are maps")
    }

    /// Support length at most `max_len`, lowest degree in `-1..=1`; `d_n` lands in the
    /// kernel of `d_{n-1}`.
    pub fn complex(&mut self) -> ChainComplex {
        let len = self.rng.gen_range(1..=self.max_len);
        let lo = self.rng.gen_range(-1i64..=1);
        let objects: Vec<FpModule> = (0..len).map(|_| self.module()).collect();
        let mut diffs: Vec<ModuleMap> = Vec::new();
        for k in 1..len {
            let kern = if k == 1 { ModuleMap::identity(&objects[0]) } else { diffs[k - 2].kernel() };
            let m = self.map(&objects[k], kern.source());
            diffs.push(kern.compose(&m));
        }
        ChainComplex::new(&self.ring, lo, objects, diffs).expect("differentials land in kernels")
    }

    pub fn chain_map(&mut self, x: &ChainComplex, y: &ChainComplex) -> ChainMap {
        let h = hom_complex(x, y);
        let c = self.vector(h.module.gens());
        let f = h.chain_map(&c);
        ChainMap::from_matrices(x, y, x.degrees().map(|n| f.component(n).matrix().clone()).collect())
            .expect("hom generators are chain maps")
    }

    /// A random map between two fresh random complexes.
    pub fn any_map(&mut self) -> ChainMap {
        let x = self.complex();
        let y = self.complex();
        self.chain_map(&x, &y)
    }
}

/// Whether the sampler restricts to free modules over this ring.
pub fn free_only(ring: &Ring) -> bool {
    match ring {
        Ring::IntegersModN(n) => {
            let mut m = n.clone();
            let mut p = BigInt::from(2);
            while &p * &p <= m {
                if (&m % &p).is_zero() {
                    m /= &p;
                    if (&m % &p).is_zero() {
                        return true;
                    }
                }
                p += 1;
            }
            false
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_samples_repeat() {
        let r = Ring::Integers;
        let mut a = Sampler::new(&r, 5);
        let mut b = Sampler::new(&r, 5);
        for _ in 0..5 {
            let (x, y) = (a.any_map(), b.any_map());
            assert!(x.equals(&y));
        }
        assert!(free_only(&Ring::zmod(4).unwrap()));
        assert!(!free_only(&Ring::zmod(6).unwrap()));
        let mut s = Sampler::new(&Ring::zmod(4).unwrap(), 1);
        for _ in 0..5 {
            let x = s.complex();
            assert!(x.degrees().all(|n| x.object(n).relations().is_zero()));
        }
    }
}
