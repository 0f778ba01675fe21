//! Dense matrices over a [`Ring`], entries kept in normal form.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::ring::Ring;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    ring: Ring,
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl Matrix {
    /// Builds a matrix from row-major entries, normalizing each one.
    pub fn new(ring: &Ring, rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let data = data.iter().map(|x| ring.normalize(x)).collect();
        Ok(Matrix { ring: ring.clone(), rows, cols, data })
    }

    pub fn zero(ring: &Ring, rows: usize, cols: usize) -> Matrix {
        Matrix { ring: ring.clone(), rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(ring: &Ring, n: usize) -> Matrix {
        let mut m = Matrix::zero(ring, n, n);
        let one = ring.from_i64(1);
        for i in 0..n {
            m.data[i * n + i] = one.clone();
        }
        m
    }

    /// Convenience constructor from small integer rows; panics on ragged input.
    pub fn from_rows(ring: &Ring, rows: &[Vec<i64>]) -> Matrix {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let data = rows.iter().flatten().map(|&x| BigInt::from(x)).collect();
        Matrix::new(ring, rows.len(), cols, data).expect("consistent shape")
    }

    /// Like [`Matrix::from_rows`] but with an explicit shape, so empty matrices keep their width.
    pub fn from_rows_shaped(ring: &Ring, rows: usize, cols: usize, entries: &[i64]) -> Matrix {
        Matrix::new(ring, rows, cols, entries.iter().map(|&x| BigInt::from(x)).collect())
            .expect("consistent shape")
    }

    pub fn column_vector(ring: &Ring, entries: Vec<BigInt>) -> Matrix {
        let n = entries.len();
        Matrix::new(ring, n, 1, entries).expect("consistent shape")
    }

    pub fn diagonal(ring: &Ring, rows: usize, cols: usize, diag: &[BigInt]) -> Matrix {
        let mut m = Matrix::zero(ring, rows, cols);
        for (i, d) in diag.iter().enumerate().take(rows.min(cols)) {
            m.set(i, i, d.clone());
        }
        m
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: BigInt) {
        self.data[i * self.cols + j] = self.ring.normalize(&x);
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let x = self.get(i, j);
                    if i == j {
                        self.ring.normalize(&(x - 1)).is_zero()
                    } else {
                        x.is_zero()
                    }
                })
            })
    }

    fn check_ring(&self, other: &Matrix) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(format!("{} vs {}", self.ring, other.ring)));
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &Matrix) -> Result<Matrix> {
        self.check_ring(other)?;
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = vec![BigInt::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    if !b.is_zero() {
                        *d += a * b;
                    }
                }
            }
        }
        for x in out.iter_mut() {
            *x = self.ring.normalize(x);
        }
        Ok(Matrix { ring: self.ring.clone(), rows: self.rows, cols: other.cols, data: out })
    }

    /// Matrix product; panics on shape or ring mismatch.
    pub fn mul(&self, other: &Matrix) -> Matrix {
        self.try_mul(other).expect("matrix product shapes")
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix sum shapes");
        assert_eq!(self.ring, other.ring);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| self.ring.add(a, b)).collect();
        Matrix { ring: self.ring.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Matrix {
        self.scale(&BigInt::from(-1))
    }

    pub fn scale(&self, c: &BigInt) -> Matrix {
        let data = self.data.iter().map(|a| self.ring.mul(a, c)).collect();
        Matrix { ring: self.ring.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> Matrix {
        let mut m = Matrix::zero(&self.ring, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        m
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "hstack row counts");
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(&self.data[i * self.cols..(i + 1) * self.cols]);
            data.extend_from_slice(&other.data[i * other.cols..(i + 1) * other.cols]);
        }
        Matrix { ring: self.ring.clone(), rows: self.rows, cols, data }
    }

    pub fn hstack_all(ring: &Ring, rows: usize, parts: &[&Matrix]) -> Matrix {
        parts.iter().fold(Matrix::zero(ring, rows, 0), |acc, m| acc.hstack(m))
    }

    /// `[self; other]`.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "vstack column counts");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix { ring: self.ring.clone(), rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn vstack_all(ring: &Ring, cols: usize, parts: &[&Matrix]) -> Matrix {
        parts.iter().fold(Matrix::zero(ring, 0, cols), |acc, m| acc.vstack(m))
    }

    pub fn block_diag(&self, other: &Matrix) -> Matrix {
        let mut m = Matrix::zero(&self.ring, self.rows + other.rows, self.cols + other.cols);
        m.paste(0, 0, self);
        m.paste(self.rows, self.cols, other);
        m
    }

    pub fn block_diag_all(ring: &Ring, parts: &[&Matrix]) -> Matrix {
        parts.iter().fold(Matrix::zero(ring, 0, 0), |acc, m| acc.block_diag(m))
    }

    /// Writes `block` with its top-left corner at `(r, c)`.
    pub fn paste(&mut self, r: usize, c: usize, block: &Matrix) {
        assert!(r + block.rows <= self.rows && c + block.cols <= self.cols, "paste out of range");
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.data[(r + i) * self.cols + c + j] = block.get(i, j).clone();
            }
        }
    }

    pub fn block(&self, r: usize, c: usize, rows: usize, cols: usize) -> Matrix {
        let mut m = Matrix::zero(&self.ring, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = self.get(r + i, c + j).clone();
            }
        }
        m
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(&self.data[i * self.cols..(i + 1) * self.cols]);
        }
        Matrix { ring: self.ring.clone(), rows: idx.len(), cols: self.cols, data }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for i in 0..self.rows {
            for &j in idx {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix { ring: self.ring.clone(), rows: self.rows, cols: idx.len(), data }
    }

    pub fn column(&self, j: usize) -> Matrix {
        self.select_cols(&[j])
    }

    /// Drops columns that are entirely zero.
    pub fn nonzero_columns(&self) -> Matrix {
        let idx: Vec<usize> =
            (0..self.cols).filter(|&j| (0..self.rows).any(|i| !self.get(i, j).is_zero())).collect();
        self.select_cols(&idx)
    }

    /// Kronecker product `self ⊗ other`, with row index `i * other.rows + k`.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut m = Matrix::zero(&self.ring, rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        let b = other.get(k, l);
                        if !b.is_zero() {
                            m.data[(i * other.rows + k) * cols + j * other.cols + l] =
                                self.ring.mul(a, b);
                        }
                    }
                }
            }
        }
        m
    }

    /// Column-major vectorization: entry `(i, j)` lands at `j * rows + i`.
    pub fn vectorize(&self) -> Matrix {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self.get(i, j).clone());
            }
        }
        Matrix { ring: self.ring.clone(), rows: self.rows * self.cols, cols: 1, data: v }
    }

    /// Inverse of [`Matrix::vectorize`] for a single column.
    pub fn unvectorize(v: &Matrix, rows: usize, cols: usize) -> Matrix {
        assert_eq!(v.rows, rows * cols, "unvectorize length");
        assert_eq!(v.cols, 1);
        let mut m = Matrix::zero(&v.ring, rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[i * cols + j] = v.data[j * rows + i].clone();
            }
        }
        m
    }

    pub fn to_i64_rows(&self) -> Vec<Vec<i64>> {
        use num_traits::ToPrimitive;
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_i64().expect("small entry")).collect())
            .collect()
    }

    pub fn with_ring(&self, ring: &Ring) -> Matrix {
        Matrix::new(ring, self.rows, self.cols, self.data.clone()).expect("same shape")
    }

    pub fn unit_vector(ring: &Ring, n: usize, i: usize) -> Matrix {
        let mut m = Matrix::zero(ring, n, 1);
        m.data[i] = BigInt::one();
        m.data[i] = ring.normalize(&m.data[i]);
        m
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_and_stacks() {
        let z = Ring::Integers;
        let a = Matrix::from_rows(&z, &[vec![1, 2], vec![3, 4]]);
        let i = Matrix::identity(&z, 2);
        assert_eq!(a.mul(&i), a);
        assert_eq!(a.hstack(&i).cols(), 4);
        assert_eq!(a.vstack(&i).rows(), 4);
        assert_eq!(a.transpose().get(0, 1), &BigInt::from(3));
    }

    #[test]
    fn vectorize_roundtrip_and_kron_identity() {
        let r = Ring::zmod(5).unwrap();
        let a = Matrix::from_rows(&r, &[vec![1, 2, 3], vec![4, 6, 7]]);
        assert_eq!(Matrix::unvectorize(&a.vectorize(), 2, 3), a);
        // vec(L X R) = (R^T ⊗ L) vec(X)
        let l = Matrix::from_rows(&r, &[vec![1, 1], vec![0, 2]]);
        let rr = Matrix::from_rows(&r, &[vec![2, 0], vec![1, 1], vec![0, 3]]);
        let lhs = l.mul(&a).mul(&rr).vectorize();
        let rhs = rr.transpose().kron(&l).mul(&a.vectorize());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn entries_normalized_mod_n() {
        let r = Ring::zmod(4).unwrap();
        let a = Matrix::from_rows(&r, &[vec![-1, 9]]);
        assert_eq!(a.entries(), &[BigInt::from(3), BigInt::from(1)]);
    }
}
