//! Smith normal form and the linear solvers built on it.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::module::FpModule;
use crate::ring::Ring;

/// `U·A·V = D` with `U`, `V` invertible and `D` diagonal, each diagonal entry
/// dividing the next. Diagonal entries are canonical ideal generators
/// (nonnegative over `Z`, divisors of `n` or `0` over `Z/n`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub u: Matrix,
    pub d: Matrix,
    pub v: Matrix,
    pub u_inv: Matrix,
    pub v_inv: Matrix,
    pub rank: usize,
}

impl SmithForm {
    /// The `min(rows, cols)` diagonal entries of `D`.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.rows().min(self.d.cols())).map(|i| self.d.get(i, i).clone()).collect()
    }
}

struct Work {
    ring: Ring,
    m: usize,
    n: usize,
    a: Vec<BigInt>,
    u: Vec<BigInt>,
    ui: Vec<BigInt>,
    v: Vec<BigInt>,
    vi: Vec<BigInt>,
}

fn ident(ring: &Ring, n: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = ring.from_i64(1);
    }
    v
}

/// `row_i += c * row_t` in an `rows x cols` row-major buffer.
fn add_row(ring: &Ring, buf: &mut [BigInt], cols: usize, i: usize, t: usize, c: &BigInt) {
    for j in 0..cols {
        let x = &buf[t * cols + j];
        if !x.is_zero() {
            let y = &buf[i * cols + j] + c * x;
            buf[i * cols + j] = ring.normalize(&y);
        }
    }
}

/// `col_j += c * col_t`.
fn add_col(ring: &Ring, buf: &mut [BigInt], rows: usize, cols: usize, j: usize, t: usize, c: &BigInt) {
    for i in 0..rows {
        let x = &buf[i * cols + t];
        if !x.is_zero() {
            let y = &buf[i * cols + j] + c * x;
            buf[i * cols + j] = ring.normalize(&y);
        }
    }
}

fn swap_rows(buf: &mut [BigInt], cols: usize, i: usize, j: usize) {
    if i != j {
        for k in 0..cols {
            buf.swap(i * cols + k, j * cols + k);
        }
    }
}

fn swap_cols(buf: &mut [BigInt], rows: usize, cols: usize, i: usize, j: usize) {
    if i != j {
        for k in 0..rows {
            buf.swap(k * cols + i, k * cols + j);
        }
    }
}

fn scale_row(ring: &Ring, buf: &mut [BigInt], cols: usize, i: usize, c: &BigInt) {
    for k in 0..cols {
        buf[i * cols + k] = ring.mul(&buf[i * cols + k], c);
    }
}

fn scale_col(ring: &Ring, buf: &mut [BigInt], rows: usize, cols: usize, j: usize, c: &BigInt) {
    for k in 0..rows {
        buf[k * cols + j] = ring.mul(&buf[k * cols + j], c);
    }
}

impl Work {
    fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.a[i * self.n + j]
    }

    fn row_add(&mut self, i: usize, t: usize, c: &BigInt) {
        let (m, n) = (self.m, self.n);
        add_row(&self.ring, &mut self.a, n, i, t, c);
        add_row(&self.ring, &mut self.u, m, i, t, c);
        add_col(&self.ring, &mut self.ui, m, m, t, i, &-c);
    }

    fn col_add(&mut self, j: usize, t: usize, c: &BigInt) {
        let (m, n) = (self.m, self.n);
        add_col(&self.ring, &mut self.a, m, n, j, t, c);
        add_col(&self.ring, &mut self.v, n, n, j, t, c);
        add_row(&self.ring, &mut self.vi, n, t, j, &-c);
    }

    fn row_swap(&mut self, i: usize, j: usize) {
        let (m, n) = (self.m, self.n);
        swap_rows(&mut self.a, n, i, j);
        swap_rows(&mut self.u, m, i, j);
        swap_cols(&mut self.ui, m, m, i, j);
    }

    fn col_swap(&mut self, i: usize, j: usize) {
        let (m, n) = (self.m, self.n);
        swap_cols(&mut self.a, m, n, i, j);
        swap_cols(&mut self.v, n, n, i, j);
        swap_rows(&mut self.vi, n, i, j);
    }

    fn row_scale(&mut self, i: usize, unit: &BigInt) {
        let inv = self.ring.inverse(unit).expect("unit");
        let (m, n) = (self.m, self.n);
        scale_row(&self.ring, &mut self.a, n, i, unit);
        scale_row(&self.ring, &mut self.u, m, i, unit);
        scale_col(&self.ring, &mut self.ui, m, m, i, &inv);
    }

    /// Smallest nonzero entry by absolute value in the lower-right block from `t`,
    /// first in row-then-column order among ties.
    fn pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, BigInt)> = None;
        for i in t..self.m {
            for j in t..self.n {
                let x = self.at(i, j);
                if x.is_zero() {
                    continue;
                }
                let ax = x.abs();
                if best.as_ref().is_none_or(|b| ax < b.2) {
                    best = Some((i, j, ax));
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }
}

/// Smith normal form with the pivot rule: smallest nonzero absolute value,
/// ties broken by row then column. Over `Z/n` the integer algorithm runs on
/// representatives and every step is reduced mod `n`.
pub fn snf(a: &Matrix) -> SmithForm {
    let ring = a.ring().clone();
    let (m, n) = (a.rows(), a.cols());
    let mut w = Work {
        ring: ring.clone(),
        m,
        n,
        a: a.entries().to_vec(),
        u: ident(&ring, m),
        ui: ident(&ring, m),
        v: ident(&ring, n),
        vi: ident(&ring, n),
    };
    let mut rank = 0;
    for t in 0..m.min(n) {
        let mut found = false;
        while let Some((pi, pj)) = w.pivot(t) {
            found = true;
            w.row_swap(t, pi);
            w.col_swap(t, pj);
            let (unit, _) = ring.associate(w.at(t, t));
            if !unit_is_one(&ring, &unit) {
                let inv = ring.inverse(&unit).expect("unit");
                w.row_scale(t, &inv);
            }
            let p = w.at(t, t).clone();
            let mut clean = true;
            for i in t + 1..m {
                if w.at(i, t).is_zero() {
                    continue;
                }
                let q = w.at(i, t).div_floor(&p);
                w.row_add(i, t, &-q);
                if !w.at(i, t).is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..n {
                if w.at(t, j).is_zero() {
                    continue;
                }
                let q = w.at(t, j).div_floor(&p);
                w.col_add(j, t, &-q);
                if !w.at(t, j).is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..m).find(|&i| (t + 1..n).any(|j| !(w.at(i, j) % &p).is_zero()));
            match bad {
                Some(i) => w.row_add(t, i, &BigInt::from(1)),
                None => break,
            }
        }
        if !found {
            break;
        }
        rank += 1;
    }
    SmithForm {
        u: Matrix::new(&ring, m, m, w.u).expect("shape"),
        d: Matrix::new(&ring, m, n, w.a).expect("shape"),
        v: Matrix::new(&ring, n, n, w.v).expect("shape"),
        u_inv: Matrix::new(&ring, m, m, w.ui).expect("shape"),
        v_inv: Matrix::new(&ring, n, n, w.vi).expect("shape"),
        rank,
    }
}

fn unit_is_one(ring: &Ring, u: &BigInt) -> bool {
    ring.normalize(&(u - 1)).is_zero()
}

/// Solves `A·X = B`. Each column of the returned `X` is the minimal solution in the
/// Smith basis: `y_i = c_i / d_i` with free coordinates set to zero.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Option<Matrix>> {
    if a.ring() != b.ring() {
        return Err(Error::RingMismatch(format!("{} vs {}", a.ring(), b.ring())));
    }
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} rows but b has {}",
            a.rows(),
            b.rows()
        )));
    }
    let sf = snf(a);
    Ok(solve_with(&sf, b))
}

/// Solves `A·X = B` given a precomputed Smith form of `A`.
pub fn solve_with(sf: &SmithForm, b: &Matrix) -> Option<Matrix> {
    let ring = b.ring();
    let c = sf.u.mul(b);
    let diag = sf.diagonal();
    let n = sf.v.rows();
    let mut y = Matrix::zero(ring, n, b.cols());
    for col in 0..b.cols() {
        for i in 0..c.rows() {
            let ci = c.get(i, col);
            let d = diag.get(i).cloned().unwrap_or_default();
            if d.is_zero() {
                if !ci.is_zero() {
                    return None;
                }
                continue;
            }
            let (q, r) = ci.div_mod_floor(&d);
            if !r.is_zero() {
                return None;
            }
            y.set(i, col, q);
        }
    }
    Some(sf.v.mul(&y))
}

/// Columns generating `{x : A·x = 0}`; a lattice basis over `Z`.
pub fn kernel_basis(a: &Matrix) -> Matrix {
    let sf = snf(a);
    kernel_from(&sf, a.cols())
}

pub(crate) fn kernel_from(sf: &SmithForm, cols: usize) -> Matrix {
    let ring = sf.v.ring().clone();
    let diag = sf.diagonal();
    let mut gens: Vec<Matrix> = Vec::new();
    for j in 0..cols {
        let d = diag.get(j).cloned().unwrap_or_default();
        let col = sf.v.column(j);
        if d.is_zero() {
            gens.push(col);
        } else if let Some(n) = ring.modulus() {
            let k = ring.normalize(&(n / &d));
            if !k.is_zero() {
                gens.push(col.scale(&k));
            }
        }
    }
    let refs: Vec<&Matrix> = gens.iter().collect();
    Matrix::hstack_all(&ring, cols, &refs)
}

/// The module presented by generators `rows(A)` and relation columns `A`.
pub fn cokernel_presentation(a: &Matrix) -> FpModule {
    FpModule::new(a.ring(), a.rows(), a.clone()).expect("relation matrix has matching rows")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> Ring {
        Ring::Integers
    }

    #[test]
    fn snf_two_by_two() {
        let a = Matrix::from_rows(&z(), &[vec![2, 4], vec![6, 8]]);
        let sf = snf(&a);
        assert_eq!(sf.diagonal(), vec![BigInt::from(2), BigInt::from(4)]);
        assert_eq!(sf.u.mul(&a).mul(&sf.v), sf.d);
    }

    #[test]
    fn snf_identity_and_zero() {
        let i = Matrix::identity(&z(), 3);
        let sf = snf(&i);
        assert_eq!(sf.d, i);
        let zero = Matrix::zero(&z(), 2, 3);
        assert_eq!(snf(&zero).d, zero);
        assert_eq!(snf(&zero).rank, 0);
    }

    #[test]
    fn snf_inverses_track() {
        let r = Ring::zmod(12).unwrap();
        let a = Matrix::from_rows(&r, &[vec![4, 6, 3], vec![8, 2, 9]]);
        let sf = snf(&a);
        assert!(sf.u.mul(&sf.u_inv).is_identity());
        assert!(sf.v.mul(&sf.v_inv).is_identity());
        assert_eq!(sf.u.mul(&a).mul(&sf.v), sf.d);
    }

    #[test]
    fn solve_examples() {
        let a = Matrix::from_rows(&z(), &[vec![2]]);
        let x = solve_linear(&a, &Matrix::from_rows(&z(), &[vec![4]])).unwrap().unwrap();
        assert_eq!(x, Matrix::from_rows(&z(), &[vec![2]]));
        assert!(solve_linear(&a, &Matrix::from_rows(&z(), &[vec![3]])).unwrap().is_none());
        let r6 = Ring::zmod(6).unwrap();
        let a = Matrix::from_rows(&r6, &[vec![2]]);
        let x = solve_linear(&a, &Matrix::from_rows(&r6, &[vec![4]])).unwrap().unwrap();
        assert_eq!(x, Matrix::from_rows(&r6, &[vec![2]]));
    }

    #[test]
    fn solve_dimension_mismatch() {
        let a = Matrix::from_rows(&z(), &[vec![2, 1]]);
        let b = Matrix::from_rows(&z(), &[vec![1], vec![1]]);
        assert!(matches!(solve_linear(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn kernels() {
        let k = kernel_basis(&Matrix::from_rows(&z(), &[vec![1, 1]]));
        assert_eq!(k.cols(), 1);
        assert_eq!(k.get(0, 0), &-k.get(1, 0));
        assert!(!k.get(0, 0).is_zero());
        let f3 = Ring::fp(3).unwrap();
        let k = kernel_basis(&Matrix::from_rows(&f3, &[vec![1, 2], vec![2, 4]]));
        assert_eq!(k.cols(), 1);
        let inv = Matrix::from_rows(&z(), &[vec![2, 1], vec![1, 1]]);
        assert_eq!(kernel_basis(&inv).cols(), 0);
    }

    #[test]
    fn cokernels() {
        let m = cokernel_presentation(&Matrix::from_rows(&z(), &[vec![2]]));
        assert_eq!(m.invariant_factors(), vec![BigInt::from(2)]);
        let m = cokernel_presentation(&Matrix::from_rows_shaped(&z(), 2, 0, &[]));
        assert_eq!(m.invariant_factors(), vec![BigInt::zero(), BigInt::zero()]);
        let m = cokernel_presentation(&Matrix::from_rows(&z(), &[vec![1, 0], vec![0, 6]]));
        assert_eq!(m.invariant_factors(), vec![BigInt::from(6)]);
    }
}
