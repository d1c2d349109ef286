//! Transverse finite-difference operators and the longitudinal sine basis.
//!
//! Grid vectors for `u` and `v` hold the `N - 1` interior nodes; the two
//! fixed endpoints are implicit zeros. Vectors living on interval midpoints
//! (`D- u`, `psi`, `g`) have length `N`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::banded::SymBanded;
use crate::error::{Error, Result};
use crate::params::LambdaKind;

/// Difference matrices for simply supported / fixed ends.
#[derive(Debug, Clone)]
pub struct FdOperators {
    n: usize,
    h: f64,
    inv_h: f64,
    d2: SymBanded,
    d4: SymBanded,
}

impl FdOperators {
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::DimensionTooSmall(n));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InadmissibleParams(format!(
                "grid spacing must be positive, got {h}"
            )));
        }
        let inv_h = 1.0 / h;
        let a2 = inv_h * inv_h;
        let mut d2 = SymBanded::zeros(n - 1, 1);
        for i in 0..n - 1 {
            d2.set(i, i, -a2 - a2);
            if i > 0 {
                d2.set(i, i - 1, a2);
            }
        }
        let d4 = d2.matmul(&d2);
        Ok(FdOperators {
            n,
            h,
            inv_h,
            d2,
            d4,
        })
    }

    /// Number of subintervals `N`.
    pub fn intervals(&self) -> usize {
        self.n
    }

    /// Number of interior nodes `N - 1`.
    pub fn nodes(&self) -> usize {
        self.n - 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn d2(&self) -> &SymBanded {
        &self.d2
    }

    pub fn d4(&self) -> &SymBanded {
        &self.d4
    }

    /// `out = D- u`; `u` has length `N - 1`, `out` length `N`.
    pub fn dminus(&self, u: &[f64], out: &mut [f64]) {
        let m = self.n - 1;
        assert_eq!(u.len(), m);
        assert_eq!(out.len(), self.n);
        out[0] = self.inv_h * u[0];
        for j in 1..m {
            out[j] = self.inv_h * (u[j] - u[j - 1]);
        }
        out[m] = -self.inv_h * u[m - 1];
    }

    /// `out = D+ w = -(D-)^T w`; `w` has length `N`, `out` length `N - 1`.
    pub fn dplus(&self, w: &[f64], out: &mut [f64]) {
        assert_eq!(w.len(), self.n);
        assert_eq!(out.len(), self.n - 1);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.inv_h * (w[i + 1] - w[i]);
        }
    }

    pub fn dminus_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.dminus(u, &mut out);
        out
    }

    pub fn dplus_vec(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n - 1];
        self.dplus(w, &mut out);
        out
    }

    pub fn d2_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.d2.mul_vec(u, &mut out);
        out
    }

    pub fn d4_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.d4.mul_vec(u, &mut out);
        out
    }

    /// Dense `N x (N-1)` form of `D-`.
    pub fn dminus_dense(&self) -> DMatrix<f64> {
        let m = self.n - 1;
        DMatrix::from_fn(self.n, m, |j, i| {
            if i == j {
                self.inv_h
            } else if i + 1 == j {
                -self.inv_h
            } else {
                0.0
            }
        })
    }

    /// Dense `(N-1) x N` form of `D+`.
    pub fn dplus_dense(&self) -> DMatrix<f64> {
        let m = self.n - 1;
        DMatrix::from_fn(m, self.n, |i, j| {
            if j == i {
                -self.inv_h
            } else if j == i + 1 {
                self.inv_h
            } else {
                0.0
            }
        })
    }
}

/// Sine modes for the longitudinal displacement, `v = Z s`.
#[derive(Debug, Clone)]
pub struct ModalBasis {
    /// `(N-1) x N_s`, orthonormal columns.
    pub z: DMatrix<f64>,
    /// Diagonal of `Lambda` (1/m^2).
    pub lambda: Vec<f64>,
}

impl ModalBasis {
    pub fn new(n: usize, h: f64, length: f64, modes: usize, kind: LambdaKind) -> Result<Self> {
        if n < 3 {
            return Err(Error::DimensionTooSmall(n));
        }
        if modes == 0 || modes > n - 1 {
            return Err(Error::TooManyModes {
                requested: modes,
                max: n - 1,
            });
        }
        let norm = (2.0 * h / length).sqrt();
        let z = DMatrix::from_fn(n - 1, modes, |i, nu| {
            let m = (i + 1) as f64;
            let nu = (nu + 1) as f64;
            norm * (m * nu * h * PI / length).sin()
        });
        let lambda = (1..=modes)
            .map(|nu| modal_eigenvalue(nu, h, length, kind))
            .collect();
        Ok(ModalBasis { z, lambda })
    }

    pub fn modes(&self) -> usize {
        self.lambda.len()
    }
}

/// `Lambda_{nu,nu}`: `(4/h^2) sin^2(nu pi h / 2L)` or its limit `nu^2 pi^2 / L^2`.
pub fn modal_eigenvalue(nu: usize, h: f64, length: f64, kind: LambdaKind) -> f64 {
    let nu = nu as f64;
    match kind {
        LambdaKind::Discrete => {
            let s = (nu * PI * h / (2.0 * length)).sin();
            4.0 / (h * h) * s * s
        }
        LambdaKind::Continuous => (nu * PI / length).powi(2),
    }
}

/// Everything the stepper needs from space: FD operators, modal basis and `D- Z`.
#[derive(Debug, Clone)]
pub struct SpatialOperators {
    pub fd: FdOperators,
    pub basis: ModalBasis,
    pub length: f64,
    /// `D- Z`, `N x N_s`.
    pub dminus_z: DMatrix<f64>,
}

impl SpatialOperators {
    pub fn new(n: usize, length: f64, modes: usize, kind: LambdaKind) -> Result<Self> {
        let h = length / n as f64;
        let fd = FdOperators::new(n, h)?;
        let basis = ModalBasis::new(n, h, length, modes, kind)?;
        let ns = basis.modes();
        let mut dminus_z = DMatrix::zeros(n, ns);
        let mut col = vec![0.0; n];
        for nu in 0..ns {
            let zc: Vec<f64> = basis.z.column(nu).iter().copied().collect();
            fd.dminus(&zc, &mut col);
            dminus_z.column_mut(nu).copy_from_slice(&col);
        }
        Ok(SpatialOperators {
            fd,
            basis,
            length,
            dminus_z,
        })
    }

    pub fn intervals(&self) -> usize {
        self.fd.intervals()
    }

    pub fn nodes(&self) -> usize {
        self.fd.nodes()
    }

    pub fn modes(&self) -> usize {
        self.basis.modes()
    }

    pub fn h(&self) -> f64 {
        self.fd.h()
    }

    /// `v = Z s`.
    pub fn synthesize(&self, s: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.nodes()];
        for (nu, &amp) in s.iter().enumerate() {
            if amp != 0.0 {
                for (vi, zi) in v.iter_mut().zip(self.basis.z.column(nu).iter()) {
                    *vi += zi * amp;
                }
            }
        }
        v
    }

    /// `s = Z^T v`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        (0..self.modes())
            .map(|nu| {
                self.basis
                    .z
                    .column(nu)
                    .iter()
                    .zip(v)
                    .map(|(z, x)| z * x)
                    .sum()
            })
            .collect()
    }

    /// `D- Z s`, length `N`.
    pub fn dminus_modal(&self, s: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (nu, &amp) in s.iter().enumerate() {
            if amp != 0.0 {
                for (o, p) in out.iter_mut().zip(self.dminus_z.column(nu).iter()) {
                    *o += p * amp;
                }
            }
        }
    }

    /// Interior grid abscissae `x_m = m h`, `1 <= m <= N - 1`.
    pub fn grid(&self) -> Vec<f64> {
        let h = self.h();
        (1..self.intervals()).map(|m| m as f64 * h).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
            let mut acc = 0.0;
            for m in 0..a.ncols() {
                acc += a[(i, m)] * b[(m, j)];
            }
            acc
        })
    }

    #[test]
    fn too_small_grid_is_rejected() {
        assert!(matches!(
            FdOperators::new(2, 0.5),
            Err(Error::DimensionTooSmall(2))
        ));
    }

    #[test]
    fn dminus_of_constant_interior_field() {
        let n = 9;
        let h = 1.0 / n as f64;
        let ops = FdOperators::new(n, h).unwrap();
        let d = ops.dminus_vec(&vec![1.0; n - 1]);
        assert_eq!(d[0], 1.0 / h);
        assert_eq!(d[n - 1], -1.0 / h);
        assert!(d[1..n - 1].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn transpose_and_product_identities_are_exact() {
        for n in [3, 4, 7, 20, 143] {
            let ops = FdOperators::new(n, 1.0 / n as f64).unwrap();
            let dm = ops.dminus_dense();
            let dp = ops.dplus_dense();
            assert_eq!((&dp + dm.transpose()).amax(), 0.0);
            let d2 = naive_product(&dp, &dm);
            assert_eq!((&d2 - ops.d2().to_dense()).amax(), 0.0, "D2, N = {n}");
            let d4 = naive_product(&d2, &d2);
            assert_eq!((&d4 - ops.d4().to_dense()).amax(), 0.0, "D4, N = {n}");
        }
    }

    #[test]
    fn d2_structure() {
        let n = 10;
        let h = 0.1;
        let ops = FdOperators::new(n, h).unwrap();
        let d2 = ops.d2();
        assert_eq!(d2.bandwidth(), 1);
        assert!((d2.get(3, 3) + 2.0 / (h * h)).abs() < 1e-9);
        assert!((d2.get(3, 4) - 1.0 / (h * h)).abs() < 1e-9);
        assert_eq!(ops.d4().bandwidth(), 2);
    }

    #[test]
    fn sampled_sines_are_d2_eigenvectors() {
        let n = 50;
        let length = 1.3;
        let h = length / n as f64;
        let ops = FdOperators::new(n, h).unwrap();
        for m in [1usize, 2, 7, 25, 49] {
            let u: Vec<f64> = (1..n)
                .map(|j| (m as f64 * PI * j as f64 * h / length).sin())
                .collect();
            let expect = -4.0 / (h * h) * (m as f64 * PI * h / (2.0 * length)).sin().powi(2);
            let d2u = ops.d2_vec(&u);
            let scale = expect.abs() * u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            for (a, b) in d2u.iter().zip(&u) {
                assert!((a - expect * b).abs() <= 1e-12 * scale, "m = {m}");
            }
        }
    }

    #[test]
    fn single_mode_is_normalised() {
        let b = ModalBasis::new(40, 1.0 / 40.0, 1.0, 1, LambdaKind::Discrete).unwrap();
        assert!((b.z.norm_squared() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn too_many_modes_rejected() {
        assert!(matches!(
            ModalBasis::new(10, 0.1, 1.0, 10, LambdaKind::Discrete),
            Err(Error::TooManyModes { requested: 10, max: 9 })
        ));
        assert!(ModalBasis::new(10, 0.1, 1.0, 0, LambdaKind::Discrete).is_err());
    }

    #[test]
    fn basis_is_orthonormal_and_diagonalises_d2() {
        for (n, ns) in [(10, 9), (143, 6), (170, 137)] {
            let ops = SpatialOperators::new(n, 1.0, ns, LambdaKind::Discrete).unwrap();
            let z = &ops.basis.z;
            let ztz = z.transpose() * z;
            let eye = DMatrix::<f64>::identity(ns, ns);
            assert!((&ztz - &eye).amax() <= 1e-12, "Z^T Z, N = {n}");
            let mut lam = DMatrix::zeros(ns, ns);
            for (i, l) in ops.basis.lambda.iter().enumerate() {
                lam[(i, i)] = *l;
            }
            let zdz = z.transpose() * ops.fd.d2().to_dense() * z;
            let scale = ops.basis.lambda.iter().cloned().fold(0.0, f64::max);
            assert!((zdz + lam).amax() <= 1e-12 * scale, "N = {n}");
        }
    }

    #[test]
    fn discrete_eigenvalues_converge_at_second_order() {
        let length = 1.0;
        for nu in [1usize, 3] {
            let exact = (nu as f64 * PI / length).powi(2);
            let err = |n: usize| {
                (modal_eigenvalue(nu, length / n as f64, length, LambdaKind::Discrete) - exact)
                    .abs()
            };
            for n in [40usize, 80, 160] {
                let ratio = err(n) / err(2 * n);
                assert!((ratio - 4.0).abs() < 0.02, "nu = {nu}, N = {n}: {ratio}");
            }
        }
    }

    #[test]
    fn difference_operators_are_spectrally_sane() {
        let ops = FdOperators::new(30, 1.0 / 30.0).unwrap();
        let neg_d2 = -ops.d2().to_dense();
        let e2 = neg_d2.symmetric_eigen().eigenvalues;
        assert!(e2.iter().all(|&x| x > 0.0));
        let e4 = ops.d4().to_dense().symmetric_eigen().eigenvalues;
        let scale = e4.amax();
        assert!(e4.iter().all(|&x| x >= -1e-12 * scale));
    }

    #[test]
    fn synthesize_and_project_are_adjoint_inverses() {
        let ops = SpatialOperators::new(40, 1.0, 5, LambdaKind::Discrete).unwrap();
        let s = [0.3, -1.0, 0.0, 2.5, 1e-3];
        let back = ops.project(&ops.synthesize(&s));
        for (a, b) in back.iter().zip(&s) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn d2_quadratic_form_is_symmetric(
            f in prop::collection::vec(-1.0f64..1.0, 24),
            g in prop::collection::vec(-1.0f64..1.0, 24),
        ) {
            let n = 25;
            let h = 1.0 / n as f64;
            let ops = FdOperators::new(n, h).unwrap();
            let fdg: f64 = h * f.iter().zip(ops.d2_vec(&g)).map(|(a, b)| a * b).sum::<f64>();
            let gdf: f64 = h * g.iter().zip(ops.d2_vec(&f)).map(|(a, b)| a * b).sum::<f64>();
            let scale = fdg.abs().max(gdf.abs()).max(1e-300);
            prop_assert!((fdg - gdf).abs() <= 1e-12 * scale.max(1.0 / h));
        }
    }
}
