//! Linearly-implicit time stepping of the quadratised string.
//!
//! Each step evaluates `G_u`, `G_v` at the current time, eliminates the
//! averaged auxiliary variable, and solves one symmetric block system for
//! the next transverse grid vector and longitudinal modal vector. The
//! transverse block is tridiagonal and is eliminated first; the remaining
//! Schur complement is a small dense SPD matrix.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::banded::{BandedCholesky, SymBanded};
use crate::error::{Error, Result};
use crate::params::{SourceParams, StringParams};
use crate::spatial::SpatialOperators;

/// Below this stretch the geometrically exact potential is outside its range of validity.
pub const STRETCH_EPSILON: f64 = 1e-10;

/// Constant coefficients of the scheme, with switched-off terms already zeroed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub rho_a: f64,
    pub tension: f64,
    pub ei: f64,
    /// `sqrt(EA - T0)`, or zero for the linear string.
    pub coupling: f64,
    pub sigma0_u: f64,
    pub sigma0_v: f64,
    pub sigma1_u: f64,
}

impl Coefficients {
    pub fn new(params: &StringParams, stiffness_on: bool, losses_on: bool, nonlinear_on: bool) -> Self {
        let (s0u, s0v, s1u) = if losses_on {
            (params.sigma0_u, params.sigma0_v, params.sigma1_u)
        } else {
            (0.0, 0.0, 0.0)
        };
        Coefficients {
            rho_a: params.rho_a(),
            tension: params.tension,
            ei: if stiffness_on { params.ei() } else { 0.0 },
            coupling: if nonlinear_on {
                params.nonlinear_coeff().sqrt()
            } else {
                0.0
            },
            sigma0_u: s0u,
            sigma0_v: s0v,
            sigma1_u: s1u,
        }
    }
}

/// Spreading vector for a point force at `x_f` (1/m), linear interpolation onto two nodes.
pub fn build_j(x_f: f64, h: f64, n: usize) -> Result<Vec<f64>> {
    let pos = x_f / h;
    let m_f = pos.floor();
    let alpha = pos - m_f;
    let m_f = m_f as isize;
    if m_f < 1 || m_f + 1 > n as isize - 1 {
        return Err(Error::ContactAtBoundary { node: m_f, n });
    }
    let mut j = vec![0.0; n - 1];
    j[(m_f - 1) as usize] = (1.0 - alpha) / h;
    j[m_f as usize] = alpha / h;
    Ok(j)
}

/// Raised-cosine contact force at time `t` (N).
pub fn force_sample(t: f64, source: &SourceParams) -> f64 {
    if t < source.onset || t > source.end() {
        return 0.0;
    }
    let phase = source.kind.zeta() * PI * (t - source.onset) / source.duration;
    0.5 * source.peak_force * (1.0 - phase.cos())
}

/// Linear interpolation of a grid vector at `x`, with zeros at the fixed ends.
pub fn read_output(u: &[f64], x: f64, h: f64) -> f64 {
    let n = u.len() + 1;
    let at = |m: isize| -> f64 {
        if m <= 0 || m >= n as isize {
            0.0
        } else {
            u[(m - 1) as usize]
        }
    };
    let pos = x / h;
    let m = pos.floor();
    let alpha = pos - m;
    let m = m as isize;
    if alpha == 0.0 {
        return at(m);
    }
    (1.0 - alpha) * at(m) + alpha * at(m + 1)
}

/// Time-stepping state at step `n`: displacements at `n` and `n - 1`, `psi` at `n - 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: Vec<f64>,
    pub u_prev: Vec<f64>,
    pub s: Vec<f64>,
    pub s_prev: Vec<f64>,
    pub psi: Vec<f64>,
    pub n: u64,
    pub k: f64,
    /// Number of block solves performed since initialisation.
    pub solves: u64,
}

impl SimState {
    pub fn is_finite(&self) -> bool {
        [&self.u, &self.u_prev, &self.s, &self.s_prev, &self.psi]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Initial data on the interior grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    pub p0: Vec<f64>,
    pub q0: Vec<f64>,
}

impl InitialData {
    pub fn at_rest(nodes: usize) -> Self {
        InitialData {
            u0: vec![0.0; nodes],
            v0: vec![0.0; nodes],
            p0: vec![0.0; nodes],
            q0: vec![0.0; nodes],
        }
    }
}

/// `g_u`, `g_v` on interval midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct GVectors {
    pub gu: Vec<f64>,
    pub gv: Vec<f64>,
}

/// Blocks of the symmetric update matrix.
#[derive(Debug, Clone)]
pub struct UpdateSystem {
    pub a_uu: SymBanded,
    pub a_us: DMatrix<f64>,
    pub a_ss: DMatrix<f64>,
}

impl UpdateSystem {
    /// Dense assembly of the full block matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let m = self.a_uu.dim();
        let ns = self.a_ss.nrows();
        let mut full = DMatrix::zeros(m + ns, m + ns);
        full.view_mut((0, 0), (m, m)).copy_from(&self.a_uu.to_dense());
        full.view_mut((0, m), (m, ns)).copy_from(&self.a_us);
        full.view_mut((m, 0), (ns, m)).copy_from(&self.a_us.transpose());
        full.view_mut((m, m), (ns, ns)).copy_from(&self.a_ss);
        full
    }

    pub fn factor(&self) -> Result<FactoredUpdate> {
        let chol_uu = self.a_uu.cholesky()?;
        let m = self.a_uu.dim();
        let ns = self.a_ss.nrows();
        let mut x = self.a_us.clone();
        for mut col in x.column_iter_mut() {
            chol_uu.solve_in_place(col.as_mut_slice());
        }
        debug_assert_eq!(x.nrows(), m);
        let schur = &self.a_ss - self.a_us.transpose() * &x;
        let schur = Cholesky::new(schur).ok_or(Error::SingularUpdate("Schur complement"))?;
        debug_assert_eq!(schur.l_dirty().nrows(), ns);
        Ok(FactoredUpdate {
            chol_uu,
            a_us: self.a_us.clone(),
            uu_inv_us: x,
            schur,
        })
    }
}

/// Factorised update: banded Cholesky of `A_uu` plus the dense Schur complement.
#[derive(Debug, Clone)]
pub struct FactoredUpdate {
    chol_uu: BandedCholesky,
    a_us: DMatrix<f64>,
    uu_inv_us: DMatrix<f64>,
    schur: Cholesky<f64, Dyn>,
}

impl FactoredUpdate {
    /// Solves the block system for `(u^{n+1}, s^{n+1})`.
    pub fn solve(&self, b_u: &[f64], b_s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut y = b_u.to_vec();
        self.chol_uu.solve_in_place(&mut y);
        let y_vec = DVector::from_column_slice(&y);
        let rhs = DVector::from_column_slice(b_s) - self.a_us.tr_mul(&y_vec);
        let s_new = self.schur.solve(&rhs);
        let u_new = y_vec - &self.uu_inv_us * &s_new;
        let u_new: Vec<f64> = u_new.iter().copied().collect();
        let s_new: Vec<f64> = s_new.iter().copied().collect();
        if !u_new.iter().chain(&s_new).all(|x| x.is_finite()) {
            return Err(Error::SolveFailure("non-finite solution".into()));
        }
        Ok((u_new, s_new))
    }
}

/// The fully discrete scheme: operators, coefficients, free parameters and forcing.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub ops: SpatialOperators,
    pub coeffs: Coefficients,
    pub k: f64,
    pub theta_u: f64,
    pub theta_v: f64,
    /// Force spreading vector; all zeros when unforced.
    pub j: Vec<f64>,
}

impl Scheme {
    pub fn new(ops: SpatialOperators, coeffs: Coefficients, k: f64, theta_u: f64, theta_v: f64) -> Result<Self> {
        if !(theta_u > 0.5) {
            return Err(Error::ThetaOutOfRange(theta_u));
        }
        if !(2.0 * (1.0 - theta_v) * coeffs.rho_a + coeffs.tension > 0.0) {
            return Err(Error::ThetaVOutOfRange(theta_v));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InadmissibleParams(format!("time step must be positive, got {k}")));
        }
        let j = vec![0.0; ops.nodes()];
        Ok(Scheme {
            ops,
            coeffs,
            k,
            theta_u,
            theta_v,
            j,
        })
    }

    /// Attaches a point force at `x_f`.
    pub fn with_contact(mut self, x_f: f64) -> Result<Self> {
        self.j = build_j(x_f, self.ops.h(), self.ops.intervals())?;
        Ok(self)
    }

    /// Diagonal of `S(theta_v) = I - (1 - theta_v) k^2 / 2 Lambda`.
    pub fn s_diagonal(&self) -> Vec<f64> {
        let c = (1.0 - self.theta_v) * self.k * self.k / 2.0;
        self.ops.basis.lambda.iter().map(|l| 1.0 - c * l).collect()
    }

    /// `R(theta_u) x = x + (1 - theta_u) h^2 / 2 D2 x`.
    fn apply_r(&self, x: &[f64]) -> Vec<f64> {
        let h = self.ops.h();
        let c = (1.0 - self.theta_u) * h * h / 2.0;
        let d2x = self.ops.fd.d2_vec(x);
        x.iter().zip(&d2x).map(|(a, b)| a + c * b).collect()
    }

    fn check_dims(&self, what: &'static str, v: &[f64], expected: usize) -> Result<()> {
        if v.len() != expected {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Elementwise `g_u`, `g_v` from the transverse grid vector and modal coordinates.
    pub fn compute_g(&self, u: &[f64], s: &[f64]) -> Result<GVectors> {
        let n = self.ops.intervals();
        let du = self.ops.fd.dminus_vec(u);
        let mut dv = vec![0.0; n];
        self.ops.dminus_modal(s, &mut dv);
        let c = self.coeffs.coupling;
        let mut gu = vec![0.0; n];
        let mut gv = vec![0.0; n];
        for i in 0..n {
            let a = 1.0 + dv[i];
            let d = (a * a + du[i] * du[i]).sqrt();
            if !(d >= STRETCH_EPSILON) {
                return Err(Error::DegenerateStretch { index: i, value: d });
            }
            gu[i] = c * du[i] / d;
            gv[i] = c * a / d;
        }
        Ok(GVectors { gu, gv })
    }

    /// `psi` evaluated exactly from a displacement pair, `sqrt(EA - T0) (stretch - 1)`.
    /// `du` and `dv` are the already-differenced fields on midpoints.
    fn psi_exact(&self, du: &[f64], dv: &[f64]) -> Vec<f64> {
        let c = self.coeffs.coupling;
        du.iter()
            .zip(dv)
            .map(|(a, b)| c * (((1.0 + b) * (1.0 + b) + a * a).sqrt() - 1.0))
            .collect()
    }

    /// Builds the two-layer state and `psi` at `k/2` from continuous-style initial data.
    pub fn init_state(&self, data: &InitialData) -> Result<SimState> {
        let m = self.ops.nodes();
        self.check_dims("u0", &data.u0, m)?;
        self.check_dims("v0", &data.v0, m)?;
        self.check_dims("p0", &data.p0, m)?;
        self.check_dims("q0", &data.q0, m)?;
        let k = self.k;
        let cf = &self.coeffs;
        let ops = &self.ops;
        let n = ops.intervals();

        let s0 = ops.project(&data.v0);
        let q0 = ops.project(&data.q0);

        // Force density of the exact potential at t = 0, (g psi) = dphi/d(D-u), dphi/d(D-v).
        let du0 = ops.fd.dminus_vec(&data.u0);
        let mut dv0 = vec![0.0; n];
        ops.dminus_modal(&s0, &mut dv0);
        let g0 = self.compute_g(&data.u0, &s0)?;
        let psi0 = self.psi_exact(&du0, &dv0);
        let gu_psi: Vec<f64> = g0.gu.iter().zip(&psi0).map(|(g, p)| g * p).collect();
        let gv_psi: Vec<f64> = g0.gv.iter().zip(&psi0).map(|(g, p)| g * p).collect();

        let half = k * k / (2.0 * cf.rho_a);
        let d2u = ops.fd.d2_vec(&data.u0);
        let d4u = ops.fd.d4_vec(&data.u0);
        let nl_u = ops.fd.dplus_vec(&gu_psi);
        let u1: Vec<f64> = (0..m)
            .map(|i| {
                data.u0[i]
                    + k * data.p0[i]
                    + half * (cf.tension * d2u[i] - cf.ei * d4u[i])
                    + half * nl_u[i]
            })
            .collect();

        // Z^T D+ = -(D- Z)^T
        let nl_s = ops.dminus_z.tr_mul(&DVector::from_column_slice(&gv_psi));
        let s1: Vec<f64> = (0..ops.modes())
            .map(|nu| {
                s0[nu] + k * q0[nu]
                    + half * (-cf.tension * ops.basis.lambda[nu] * s0[nu] - nl_s[nu])
            })
            .collect();

        let mu_u: Vec<f64> = data.u0.iter().zip(&u1).map(|(a, b)| 0.5 * (a + b)).collect();
        let mu_s: Vec<f64> = s0.iter().zip(&s1).map(|(a, b)| 0.5 * (a + b)).collect();
        let du_half = ops.fd.dminus_vec(&mu_u);
        let mut dv_half = vec![0.0; n];
        ops.dminus_modal(&mu_s, &mut dv_half);
        let psi = self.psi_exact(&du_half, &dv_half);

        let state = SimState {
            u: u1,
            u_prev: data.u0.clone(),
            s: s1,
            s_prev: s0,
            psi,
            n: 1,
            k,
            solves: 0,
        };
        if !state.is_finite() {
            return Err(Error::NonFiniteState { step: 1 });
        }
        Ok(state)
    }

    /// The symmetric block update matrix for the given `G` diagonals.
    pub fn assemble_update(&self, g: &GVectors) -> UpdateSystem {
        let ops = &self.ops;
        let cf = &self.coeffs;
        let m = ops.nodes();
        let ns = ops.modes();
        let k = self.k;
        let h = ops.h();
        let inv_h = 1.0 / h;
        let inv_h2 = inv_h * inv_h;
        let mass = cf.rho_a / (k * k);
        let r = (1.0 - self.theta_u) * h * h / 2.0;
        let l0u = cf.rho_a * cf.sigma0_u / k;
        let l1u = cf.rho_a * cf.sigma1_u / k;
        let l0v = cf.rho_a * cf.sigma0_v / k;
        let d2 = ops.fd.d2();

        let mut a_uu = SymBanded::zeros(m, 1);
        for i in 0..m {
            let wl = g.gu[i] * g.gu[i];
            let wr = g.gu[i + 1] * g.gu[i + 1];
            let d = d2.get(i, i);
            a_uu.set(i, i, mass * (1.0 + r * d) + l0u - l1u * d + 0.25 * (wl + wr) * inv_h2);
            if i + 1 < m {
                let o = d2.get(i, i + 1);
                a_uu.set(i, i + 1, mass * r * o - l1u * o - 0.25 * wr * inv_h2);
            }
        }

        // A_us = 1/4 D-^T diag(g_u g_v) D- Z
        let p = &ops.dminus_z;
        let q: Vec<f64> = g.gu.iter().zip(&g.gv).map(|(a, b)| a * b).collect();
        let a_us = DMatrix::from_fn(m, ns, |i, nu| {
            0.25 * inv_h * (q[i] * p[(i, nu)] - q[i + 1] * p[(i + 1, nu)])
        });

        // A_ss = diag(mass S + loss) + 1/4 (D- Z)^T diag(g_v^2) (D- Z)
        let gv2 = DVector::from_iterator(g.gv.len(), g.gv.iter().map(|x| x * x));
        let mut weighted = p.clone();
        for (mut row, w) in weighted.row_iter_mut().zip(gv2.iter()) {
            row *= *w;
        }
        let mut a_ss = p.tr_mul(&weighted) * 0.25;
        for (nu, s) in self.s_diagonal().iter().enumerate() {
            a_ss[(nu, nu)] += mass * s + l0v;
        }
        let a_ss = (&a_ss + a_ss.transpose()) * 0.5;

        UpdateSystem { a_uu, a_us, a_ss }
    }

    /// Right-hand side of the update, with `mu_{t+} psi` eliminated.
    pub fn right_hand_side(&self, state: &SimState, g: &GVectors, force: f64) -> (Vec<f64>, Vec<f64>) {
        let ops = &self.ops;
        let cf = &self.coeffs;
        let m = ops.nodes();
        let n = ops.intervals();
        let k = self.k;
        let mass = cf.rho_a / (k * k);
        let l0u = cf.rho_a * cf.sigma0_u / k;
        let l1u = cf.rho_a * cf.sigma1_u / k;
        let l0v = cf.rho_a * cf.sigma0_v / k;

        let du_prev = ops.fd.dminus_vec(&state.u_prev);
        let mut dv_prev = vec![0.0; n];
        ops.dminus_modal(&state.s_prev, &mut dv_prev);
        let w: Vec<f64> = (0..n)
            .map(|i| state.psi[i] - 0.25 * (g.gu[i] * du_prev[i] + g.gv[i] * dv_prev[i]))
            .collect();
        let gu_w: Vec<f64> = g.gu.iter().zip(&w).map(|(a, b)| a * b).collect();
        let gv_w: Vec<f64> = g.gv.iter().zip(&w).map(|(a, b)| a * b).collect();

        let extrap: Vec<f64> = state.u.iter().zip(&state.u_prev).map(|(a, b)| 2.0 * a - b).collect();
        let r_extrap = self.apply_r(&extrap);
        let d2u = ops.fd.d2_vec(&state.u);
        let d4u = ops.fd.d2_vec(&d2u);
        let d2u_prev = ops.fd.d2_vec(&state.u_prev);
        let coupling_u = ops.fd.dplus_vec(&gu_w);
        let b_u: Vec<f64> = (0..m)
            .map(|i| {
                mass * r_extrap[i] + cf.tension * d2u[i] - cf.ei * d4u[i] + l0u * state.u_prev[i]
                    - l1u * d2u_prev[i]
                    + coupling_u[i]
                    + self.j[i] * force
            })
            .collect();

        let coupling_s = ops.dminus_z.tr_mul(&DVector::from_column_slice(&gv_w));
        let sdiag = self.s_diagonal();
        let b_s: Vec<f64> = (0..ops.modes())
            .map(|nu| {
                mass * sdiag[nu] * (2.0 * state.s[nu] - state.s_prev[nu])
                    - cf.tension * ops.basis.lambda[nu] * state.s[nu]
                    + l0v * state.s_prev[nu]
                    - coupling_s[nu]
            })
            .collect();
        (b_u, b_s)
    }

    /// Advances `state` by one step with an already factorised update.
    pub fn step_with(&self, state: &mut SimState, g: &GVectors, update: &FactoredUpdate, force: f64) -> Result<()> {
        let (b_u, b_s) = self.right_hand_side(state, g, force);
        let (u_new, s_new) = update.solve(&b_u, &b_s)?;
        state.solves += 1;

        let ops = &self.ops;
        let n = ops.intervals();
        let du: Vec<f64> = u_new.iter().zip(&state.u_prev).map(|(a, b)| a - b).collect();
        let ds: Vec<f64> = s_new.iter().zip(&state.s_prev).map(|(a, b)| a - b).collect();
        let ddu = ops.fd.dminus_vec(&du);
        let mut ddv = vec![0.0; n];
        ops.dminus_modal(&ds, &mut ddv);
        for i in 0..n {
            state.psi[i] += 0.5 * (g.gu[i] * ddu[i] + g.gv[i] * ddv[i]);
        }
        state.u_prev = std::mem::replace(&mut state.u, u_new);
        state.s_prev = std::mem::replace(&mut state.s, s_new);
        state.n += 1;
        if !state.is_finite() {
            return Err(Error::NonFiniteState { step: state.n });
        }
        Ok(())
    }

    /// One full step: refresh `G`, assemble, factor, solve.
    pub fn step(&self, state: &mut SimState, force: f64) -> Result<()> {
        let g = self.compute_g(&state.u, &state.s)?;
        let update = self.assemble_update(&g).factor()?;
        self.step_with(state, &g, &update, force)
    }
}

/// Drives a [`Scheme`] forward, optionally with the update matrix frozen at the start.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub scheme: Scheme,
    pub state: SimState,
    frozen: Option<(GVectors, FactoredUpdate)>,
}

impl Stepper {
    pub fn new(scheme: Scheme, state: SimState) -> Self {
        Stepper {
            scheme,
            state,
            frozen: None,
        }
    }

    /// Evaluates `G` once from the current state and reuses it for every later step.
    pub fn freeze_g(mut self) -> Result<Self> {
        let g = self.scheme.compute_g(&self.state.u, &self.state.s)?;
        let update = self.scheme.assemble_update(&g).factor()?;
        self.frozen = Some((g, update));
        Ok(self)
    }

    pub fn advance(&mut self, force: f64) -> Result<()> {
        match &self.frozen {
            Some((g, update)) => self.scheme.step_with(&mut self.state, g, update, force),
            None => self.scheme.step(&mut self.state, force),
        }
    }
}
