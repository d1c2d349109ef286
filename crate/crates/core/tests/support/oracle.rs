//! Monolithic dense solve of one step, with `psi` kept as an unknown.
//!
//! Built from plain `sin` eigenvectors and dense difference matrices, so it
//! shares no assembly code with the banded/Schur path of the stepper.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use nlstring::stepper::{Scheme, SimState};

pub struct OracleStep {
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    pub psi: Vec<f64>,
}

pub fn dense_step(scheme: &Scheme, state: &SimState, force: f64) -> OracleStep {
    let ops = &scheme.ops;
    let cf = &scheme.coeffs;
    let n = ops.intervals();
    let m = n - 1;
    let ns = ops.modes();
    let h = ops.h();
    let len = h * n as f64;
    let k = scheme.k;

    let dm = DMatrix::from_fn(n, m, |i, j| {
        if j == i {
            1.0 / h
        } else if j + 1 == i {
            -1.0 / h
        } else {
            0.0
        }
    });
    let dp = -dm.transpose();
    let d2 = &dp * &dm;
    let d4 = &d2 * &d2;
    let z = DMatrix::from_fn(m, ns, |l, nu| {
        (2.0 * h / len).sqrt() * (((nu + 1) * (l + 1)) as f64 * PI / n as f64).sin()
    });
    let lambda: Vec<f64> = (1..=ns)
        .map(|nu| 4.0 / (h * h) * (nu as f64 * PI * h / (2.0 * len)).sin().powi(2))
        .collect();
    let p = &dm * &z;

    let u = DVector::from_column_slice(&state.u);
    let up = DVector::from_column_slice(&state.u_prev);
    let s = DVector::from_column_slice(&state.s);
    let sp = DVector::from_column_slice(&state.s_prev);
    let psi = DVector::from_column_slice(&state.psi);

    let du = &dm * &u;
    let dv = &p * &s;
    let c = cf.coupling;
    let mut gu = DVector::zeros(n);
    let mut gv = DVector::zeros(n);
    for i in 0..n {
        let a = 1.0 + dv[i];
        let d = (a * a + du[i] * du[i]).sqrt();
        gu[i] = c * du[i] / d;
        gv[i] = c * a / d;
    }
    let g_u = DMatrix::from_diagonal(&gu);
    let g_v = DMatrix::from_diagonal(&gv);

    let r = DMatrix::identity(m, m) + &d2 * ((1.0 - scheme.theta_u) * h * h / 2.0);
    let sdiag = DMatrix::from_diagonal(&DVector::from_iterator(
        ns,
        lambda.iter().map(|l| 1.0 - (1.0 - scheme.theta_v) * k * k / 2.0 * l),
    ));
    let lam = DMatrix::from_diagonal(&DVector::from_column_slice(&lambda));
    let j = DVector::from_column_slice(&scheme.j);

    // unknowns [u+, s+, psi+]; each block row multiplied through by k^2
    let dim = m + ns + n;
    let mut a = DMatrix::zeros(dim, dim);
    let mut b = DVector::zeros(dim);
    let ra = cf.rho_a;

    let auu = &r * ra + DMatrix::identity(m, m) * (ra * cf.sigma0_u * k) - &d2 * (ra * cf.sigma1_u * k);
    let aup = -(&dp * &g_u) * (0.5 * k * k);
    a.view_mut((0, 0), (m, m)).copy_from(&auu);
    a.view_mut((0, m + ns), (m, n)).copy_from(&aup);
    let bu = &r * (&u * 2.0 - &up) * ra
        + (&d2 * &u * cf.tension - &d4 * &u * cf.ei + &dp * (&g_u * &psi) * 0.5) * (k * k)
        + &up * (ra * cf.sigma0_u * k)
        - &d2 * &up * (ra * cf.sigma1_u * k)
        + &j * (force * k * k);
    b.rows_mut(0, m).copy_from(&bu);

    let ass = &sdiag * ra + DMatrix::identity(ns, ns) * (ra * cf.sigma0_v * k);
    let asp = (p.transpose() * &g_v) * (0.5 * k * k);
    a.view_mut((m, m), (ns, ns)).copy_from(&ass);
    a.view_mut((m, m + ns), (ns, n)).copy_from(&asp);
    let bs = &sdiag * (&s * 2.0 - &sp) * ra
        - (&lam * &s * cf.tension + p.transpose() * (&g_v * &psi) * 0.5) * (k * k)
        + &sp * (ra * cf.sigma0_v * k);
    b.rows_mut(m, ns).copy_from(&bs);

    // psi+ - 1/2 G_u D- u+ - 1/2 G_v P s+ = psi- - 1/2 G_u D- u- - 1/2 G_v P s-
    a.view_mut((m + ns, 0), (n, m)).copy_from(&(-(&g_u * &dm) * 0.5));
    a.view_mut((m + ns, m), (n, ns)).copy_from(&(-(&g_v * &p) * 0.5));
    a.view_mut((m + ns, m + ns), (n, n)).copy_from(&DMatrix::identity(n, n));
    let bp = &psi - (&g_u * &dm * &up) * 0.5 - (&g_v * &p * &sp) * 0.5;
    b.rows_mut(m + ns, n).copy_from(&bp);

    let x = a.lu().solve(&b).expect("dense oracle system is singular");
    OracleStep {
        u: x.rows(0, m).iter().copied().collect(),
        s: x.rows(m, ns).iter().copied().collect(),
        psi: x.rows(m + ns, n).iter().copied().collect(),
    }
}
