//! Symmetric banded storage and an in-place banded Cholesky factorization.
//!
//! Row `i` stores columns `i - bw ..= i` contiguously (entries left of column
//! zero are padding), so the inner products of the factorization and the
//! multi-right-hand-side sweeps run over contiguous memory.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBand {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + j + self.bw - i
    }

    /// Adds `v` at `(i, j)` and, implicitly, at `(j, i)`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.offset(i, j)]
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let k0 = i.saturating_sub(self.bw);
            for k in k0..i {
                let a = self.data[self.offset(i, k)];
                y[i] += a * x[k];
                y[k] += a * x[i];
            }
            y[i] += self.data[self.offset(i, i)] * x[i];
        }
        y
    }

    pub fn factor(&self) -> Result<BandCholesky> {
        BandCholesky::new(self.clone())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// Lower triangular factor `L` with `A = L L^T`, in the band layout of
/// [`SymBand`].
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    fn new(a: SymBand) -> Result<Self> {
        let SymBand { n, bw, mut data } = a;
        let w = bw + 1;
        for i in 0..n {
            let ki = i.saturating_sub(bw);
            for j in ki..=i {
                let row_i = i * w + bw - i;
                let row_j = j * w + bw - j;
                let s = data[row_i + j] - dot(&data[row_i + ki..row_i + j], &data[row_j + ki..row_j + j]);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                    }
                    data[row_i + i] = s.sqrt();
                } else {
                    data[row_i + j] = s / data[row_j + j];
                }
            }
        }
        Ok(BandCholesky { n, bw, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A X = B` in place for `nrhs` right-hand sides stored row-major
    /// (`b[i * nrhs + j]` is entry `i` of column `j`).
    pub fn solve_in_place(&self, b: &mut [f64], nrhs: usize) {
        assert_eq!(b.len(), self.n * nrhs, "right-hand side shape");
        let w = self.bw + 1;
        let r = nrhs;
        for i in 0..self.n {
            let k0 = i.saturating_sub(self.bw);
            let row = i * w + self.bw - i;
            let (done, rest) = b.split_at_mut(i * r);
            let xi = &mut rest[..r];
            for k in k0..i {
                let l = self.data[row + k];
                let xk = &done[k * r..(k + 1) * r];
                for (a, c) in xi.iter_mut().zip(xk) {
                    *a -= l * c;
                }
            }
            let d = self.data[row + i];
            for a in xi.iter_mut() {
                *a /= d;
            }
        }
        for i in (0..self.n).rev() {
            let k0 = i.saturating_sub(self.bw);
            let row = i * w + self.bw - i;
            let (head, tail) = b.split_at_mut(i * r);
            let xi = &mut tail[..r];
            let d = self.data[row + i];
            for a in xi.iter_mut() {
                *a /= d;
            }
            for k in k0..i {
                let l = self.data[row + k];
                let xk = &mut head[k * r..(k + 1) * r];
                for (a, c) in xk.iter_mut().zip(xi.iter()) {
                    *a -= l * c;
                }
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x, 1);
        x
    }
}
