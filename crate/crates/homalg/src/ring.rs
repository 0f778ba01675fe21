//! Base rings: the integers, residue rings Z/n and prime fields.
//!
//! Elements are plain `BigInt`s kept in normal form: any integer over `Z`,
//! a residue in `[0, n)` otherwise.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ring {
    Integers,
    IntegersModN(BigInt),
    PrimeField(BigInt),
}

impl Ring {
    /// `Z/n`; `n` must be positive.
    pub fn zmod(n: impl Into<BigInt>) -> Result<Ring> {
        let n = n.into();
        if !n.is_positive() {
            return Err(Error::Validation(format!("modulus must be positive, got {n}")));
        }
        Ok(Ring::IntegersModN(n))
    }

    /// `F_p`; `p` must be prime.
    pub fn fp(p: impl Into<BigInt>) -> Result<Ring> {
        let p = p.into();
        if !is_prime(&p) {
            return Err(Error::Validation(format!("{p} is not prime")));
        }
        Ok(Ring::PrimeField(p))
    }

    pub fn modulus(&self) -> Option<&BigInt> {
        match self {
            Ring::Integers => None,
            Ring::IntegersModN(n) | Ring::PrimeField(n) => Some(n),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.modulus().is_some()
    }

    /// Self-injective rings, where finitely generated projectives and injectives agree.
    pub fn is_quasi_frobenius(&self) -> bool {
        self.is_finite()
    }

    pub fn order(&self) -> Option<BigInt> {
        self.modulus().cloned()
    }

    pub fn normalize(&self, x: &BigInt) -> BigInt {
        match self.modulus() {
            None => x.clone(),
            Some(n) => x.mod_floor(n),
        }
    }

    pub fn from_i64(&self, x: i64) -> BigInt {
        self.normalize(&BigInt::from(x))
    }

    pub fn is_normalized(&self, x: &BigInt) -> bool {
        match self.modulus() {
            None => true,
            Some(n) => !x.is_negative() && x < n,
        }
    }

    pub fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        self.normalize(&(a + b))
    }

    pub fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        self.normalize(&(a - b))
    }

    pub fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        self.normalize(&(a * b))
    }

    pub fn neg(&self, a: &BigInt) -> BigInt {
        self.normalize(&-a)
    }

    pub fn is_zero(&self, a: &BigInt) -> bool {
        self.normalize(a).is_zero()
    }

    pub fn is_unit(&self, a: &BigInt) -> bool {
        match self.modulus() {
            None => a.abs().is_one(),
            Some(n) => a.gcd(n).is_one(),
        }
    }

    /// Inverse of a unit.
    pub fn inverse(&self, a: &BigInt) -> Option<BigInt> {
        match self.modulus() {
            None => {
                if a.abs().is_one() {
                    Some(a.clone())
                } else {
                    None
                }
            }
            Some(n) => {
                let e = a.mod_floor(n).extended_gcd(n);
                if e.gcd.is_one() {
                    Some(e.x.mod_floor(n))
                } else {
                    None
                }
            }
        }
    }

    /// Splits `a = u * g` with `u` a unit and `g` the canonical generator of the ideal `(a)`:
    /// `|a|` over `Z`, `gcd(a, n)` (with `0` for the zero ideal) over `Z/n`.
    pub fn associate(&self, a: &BigInt) -> (BigInt, BigInt) {
        match self.modulus() {
            None => {
                if a.is_negative() {
                    (-BigInt::one(), -a)
                } else {
                    (BigInt::one(), a.clone())
                }
            }
            Some(n) => {
                let a = a.mod_floor(n);
                if a.is_zero() {
                    return (BigInt::one().mod_floor(n), BigInt::zero());
                }
                let g = a.gcd(n);
                let base = &a / &g;
                let step = n / &g;
                let mut u = base.clone();
                while !u.gcd(n).is_one() {
                    u += &step;
                }
                (u.mod_floor(n), g.mod_floor(n))
            }
        }
    }

    /// Canonical generator of the ideal `(a)`.
    pub fn ideal_generator(&self, a: &BigInt) -> BigInt {
        self.associate(a).1
    }

    /// Cardinality of `R/(d)`, `None` when infinite.
    pub fn quotient_order(&self, d: &BigInt) -> Option<BigInt> {
        match self.modulus() {
            None => {
                if d.is_zero() {
                    None
                } else {
                    Some(d.abs())
                }
            }
            Some(n) => Some(d.gcd(n)),
        }
    }

    /// Whether `a` divides `b` in the ring.
    pub fn divides(&self, a: &BigInt, b: &BigInt) -> bool {
        let g = self.ideal_generator(a);
        let b = self.normalize(b);
        if g.is_zero() {
            return b.is_zero();
        }
        (&b % &g).is_zero()
    }

    /// All elements, in increasing normal-form order (finite rings only).
    pub fn elements(&self) -> Option<Vec<BigInt>> {
        let n = self.modulus()?.to_u64()?;
        Some((0..n).map(BigInt::from).collect())
    }

    /// Canonical generators of the proper nonzero-quotient ideals `(d)`, i.e. the `d`
    /// with `R/(d)` a nonzero cyclic module. Over `Z` the list is cut at `bound`
    /// and includes `0` for `R` itself.
    pub fn cyclic_quotient_generators(&self, bound: u64) -> Vec<BigInt> {
        match self.modulus() {
            None => {
                let mut v = vec![BigInt::zero()];
                v.extend((2..=bound.max(1)).map(BigInt::from));
                v
            }
            Some(n) => {
                let mut v = Vec::new();
                let nn = n.to_u64().unwrap_or(u64::MAX);
                for d in 2..nn {
                    if (n % BigInt::from(d)).is_zero() {
                        v.push(BigInt::from(d));
                    }
                }
                if !n.is_one() {
                    v.push(BigInt::zero());
                }
                v
            }
        }
    }

    /// Short name: `Z`, `Z/6`, `F3`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Integers => write!(f, "Z"),
            Ring::IntegersModN(n) => write!(f, "Z/{n}"),
            Ring::PrimeField(p) => write!(f, "F{p}"),
        }
    }
}

pub fn is_prime(p: &BigInt) -> bool {
    if p < &BigInt::from(2) {
        return false;
    }
    let mut d = BigInt::from(2);
    while &(&d * &d) <= p {
        if (p % &d).is_zero() {
            return false;
        }
        d += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_forms() {
        let r = Ring::zmod(6).unwrap();
        assert_eq!(r.from_i64(-1), BigInt::from(5));
        assert_eq!(r.normalize(&r.from_i64(13)), BigInt::from(1));
        assert!(r.is_quasi_frobenius());
        assert!(!Ring::Integers.is_quasi_frobenius());
        assert!(Ring::fp(4).is_err());
        assert!(Ring::zmod(0).is_err());
    }

    #[test]
    fn associates_mod_n() {
        let r = Ring::zmod(12).unwrap();
        for a in 0..12 {
            let a = BigInt::from(a);
            let (u, g) = r.associate(&a);
            assert!(r.is_unit(&u));
            assert_eq!(r.mul(&u, &g), a);
            assert!(g.is_zero() || (BigInt::from(12) % &g).is_zero());
        }
    }

    #[test]
    fn inverses() {
        let r = Ring::fp(7).unwrap();
        for a in 1..7 {
            let a = BigInt::from(a);
            let b = r.inverse(&a).unwrap();
            assert!(r.mul(&a, &b).is_one());
        }
        assert_eq!(Ring::zmod(4).unwrap().inverse(&BigInt::from(2)), None);
    }

    #[test]
    fn cyclic_quotients() {
        let r = Ring::zmod(12).unwrap();
        let v: Vec<i64> = r.cyclic_quotient_generators(0).iter().map(|d| d.to_i64().unwrap()).collect();
        assert_eq!(v, vec![2, 3, 4, 6, 0]);
    }
}
