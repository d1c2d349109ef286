//! Symmetric banded matrices and their Cholesky factorisation.
//!
//! Only the lower band is stored: `band[i * (bw + 1) + d]` holds `A[i][i - d]`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBanded {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn identity(n: usize, bw: usize) -> Self {
        let mut m = Self::zeros(n, bw);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        if d > self.bw {
            0.0
        } else {
            self.band[i * (self.bw + 1) + d]
        }
    }

    /// Sets entry `(i, j)` and, by symmetry, `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        assert!(d <= self.bw, "entry ({i}, {j}) outside bandwidth {}", self.bw);
        self.band[i * (self.bw + 1) + d] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let v = self.get(i, j);
        self.set(i, j, v + value);
    }

    /// `a * self + b * other`, on the wider of the two bands.
    pub fn axpby(&self, a: f64, other: &SymBanded, b: f64) -> SymBanded {
        assert_eq!(self.n, other.n);
        let bw = self.bw.max(other.bw);
        let mut out = SymBanded::zeros(self.n, bw);
        for i in 0..self.n {
            for d in 0..=bw.min(i) {
                out.set(i, i - d, a * self.get(i, i - d) + b * other.get(i, i - d));
            }
        }
        out
    }

    /// Banded product, summing the inner index in ascending order.
    pub fn matmul(&self, other: &SymBanded) -> SymBanded {
        assert_eq!(self.n, other.n);
        let bw = self.bw + other.bw;
        let mut out = SymBanded::zeros(self.n, bw);
        for i in 0..self.n {
            for j in i.saturating_sub(bw)..=i {
                let lo = i.saturating_sub(self.bw).max(j.saturating_sub(other.bw));
                let hi = (i + self.bw).min(j + other.bw).min(self.n - 1);
                let mut acc = 0.0;
                for m in lo..=hi {
                    acc += self.get(i, m) * other.get(m, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        BandedCholesky::new(self)
    }
}

/// `A = L L^T` with `L` lower banded of the same bandwidth.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    fn new(a: &SymBanded) -> Result<Self> {
        let n = a.n;
        let bw = a.bw;
        let w = bw + 1;
        let mut l = a.band.clone();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // l[i][j] - sum_{m < j} l[i][m] l[j][m]
                let mut acc = l[i * w + (i - j)];
                let m0 = j0.max(j.saturating_sub(bw));
                for m in m0..j {
                    acc -= l[i * w + (i - m)] * l[j * w + (j - m)];
                }
                if i == j {
                    if !(acc > 0.0) || !acc.is_finite() {
                        return Err(Error::SingularUpdate("banded Cholesky pivot"));
                    }
                    l[i * w] = acc.sqrt();
                } else {
                    l[i * w + (i - j)] = acc / l[j * w];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut acc = b[i];
            for m in i.saturating_sub(self.bw)..i {
                acc -= self.l[i * w + (i - m)] * b[m];
            }
            b[i] = acc / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let mut acc = b[i];
            for m in (i + 1)..(i + w).min(self.n) {
                acc -= self.l[m * w + (m - i)] * b[m];
            }
            b[i] = acc / self.l[i * w];
        }
    }
}
