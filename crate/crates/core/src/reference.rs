//! Analytic and oracle solutions used for validation.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rayon::prelude::*;

use crate::dispersion::{analytic_transverse_frequency, transverse_eigenfrequencies_symbol};
use crate::energy::compensated_sum;
use crate::error::{Error, Result};
use crate::params::{LambdaKind, StringParams};
use crate::spatial::SpatialOperators;
use crate::stepper::{Coefficients, InitialData, Scheme, Stepper};

/// AGM ladder for parameter `b`: returns `(a_n, c_n)` for every level.
fn agm_ladder(b: f64) -> Vec<(f64, f64)> {
    let mut a = 1.0;
    let mut g = (1.0 - b).sqrt();
    let mut c = b.sqrt();
    let mut out = vec![(a, c)];
    while c.abs() > f64::EPSILON * a && out.len() < 64 {
        let an = 0.5 * (a + g);
        c = 0.5 * (a - g);
        g = (a * g).sqrt();
        a = an;
        out.push((a, c));
    }
    out
}

/// Complete elliptic integral of the first kind `K(b)` for parameter `0 <= b < 1`.
pub fn elliptic_k(b: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&b) {
        return Err(Error::ParameterOutOfRange(b));
    }
    let ladder = agm_ladder(b);
    Ok(PI / (2.0 * ladder.last().unwrap().0))
}

/// Jacobi elliptic `cn(a; b)` by descending Landen transformation.
pub fn jacobi_cn(a: f64, b: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&b) {
        return Err(Error::ParameterOutOfRange(b));
    }
    let ladder = agm_ladder(b);
    let depth = ladder.len() - 1;
    let mut phi = 2f64.powi(depth as i32) * ladder[depth].0 * a;
    for level in (1..=depth).rev() {
        let (an, cn) = ladder[level];
        phi = 0.5 * (phi + (cn / an * phi.sin()).asin());
    }
    Ok(phi.cos())
}

/// `u0 cn(sqrt(1 + gamma u0^2) t; gamma u0^2 / (2 gamma u0^2 + 2))`.
pub fn duffing_analytic(t: f64, u0: f64, gamma: f64) -> f64 {
    let w = (1.0 + gamma * u0 * u0).sqrt();
    let b = gamma * u0 * u0 / (2.0 * gamma * u0 * u0 + 2.0);
    u0 * jacobi_cn(w * t, b).expect("parameter lies in [0, 1/2)")
}

/// Output of the quadratised Duffing scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct DuffingRun {
    /// `u^n` for `n = 0..=steps`.
    pub u: Vec<f64>,
    /// `psi^{n-1/2}` for `n = 1..=steps`.
    pub psi: Vec<f64>,
    /// Quadratic energy at `n - 1/2` for `n = 1..=steps`.
    pub energy: Vec<f64>,
}

fn duffing_energy(u: f64, du: f64, psi: f64, k: f64) -> f64 {
    let v = du / k;
    compensated_sum([0.5 * v * v, 0.5 * u * (u - du), 0.5 * psi * psi])
}

/// Runs `u'' = -u - gamma u^3` with the linearly-implicit quadratised scheme for `steps` steps.
///
/// The recursion is carried in increments `u^{n+1} - u^n` to limit cancellation at small `k`.
pub fn duffing_ieq_run(u0: f64, gamma: f64, k: f64, steps: usize) -> DuffingRun {
    let root = (2.0 * gamma).sqrt();
    let mut u = u0;
    let mut du = -k * k / 2.0 * (u0 + gamma * u0.powi(3));
    u += du;
    let mut psi = (gamma / 2.0).sqrt() * u0 * u0;
    let mut out = DuffingRun {
        u: vec![u0, u],
        psi: vec![psi],
        energy: vec![duffing_energy(u, du, psi, k)],
    };
    let k2 = k * k;
    for _ in 1..steps {
        let g = root * u;
        let q = k2 * g * g / 4.0;
        let next = (du * (1.0 - q) - k2 * (u + g * psi)) / (1.0 + q);
        psi += g * (next + du) / 2.0;
        du = next;
        u += du;
        out.u.push(u);
        out.psi.push(psi);
        out.energy.push(duffing_energy(u, du, psi, k));
    }
    out
}

/// Least-squares slope of `log|y|` against `log x` over the `last` finest points with `|y| >= 1e-12`.
///
/// Points are taken in the given order; the finest are the last ones.
pub fn fit_slope(xs: &[f64], ys: &[f64], last: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.abs() >= 1e-12)
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if pts.len() < last || last < 2 {
        return None;
    }
    let pts = &pts[pts.len() - last..];
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Errors of the Duffing scheme at `t_e = round(t / k) k` for each time step.
#[derive(Debug, Clone, PartialEq)]
pub struct DuffingConvergence {
    pub gamma: f64,
    pub k: Vec<f64>,
    pub error: Vec<f64>,
    pub slope: Option<f64>,
}

pub fn duffing_convergence(u0: f64, gamma: f64, t: f64, steps: &[f64]) -> DuffingConvergence {
    let error: Vec<f64> = steps
        .par_iter()
        .map(|&k| {
            let n = (t / k).round() as usize;
            let run = duffing_ieq_run(u0, gamma, k, n);
            run.u[n] - duffing_analytic(n as f64 * k, u0, gamma)
        })
        .collect();
    let slope = fit_slope(steps, &error, 4);
    DuffingConvergence {
        gamma,
        k: steps.to_vec(),
        error,
        slope,
    }
}

/// Initial shapes of the modal oracle, supported on `[L/4, 3L/4]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleShape {
    /// `1 - cos(4 pi (x - L/4) / L)`; continuously differentiable, curvature jumps at the ends.
    #[default]
    RaisedCosine,
    /// The square of the above; three continuous derivatives.
    RaisedCosineSquared,
}

impl OracleShape {
    pub fn eval(self, x: f64, length: f64) -> f64 {
        if !(0.25 * length..=0.75 * length).contains(&x) {
            return 0.0;
        }
        let b = 1.0 - (4.0 * PI * (x - 0.25 * length) / length).cos();
        match self {
            OracleShape::RaisedCosine => b,
            OracleShape::RaisedCosineSquared => b * b,
        }
    }

    /// `C_m = <u0, sin(m pi x / L)> / L` in closed form.
    pub fn coefficient(self, m: usize) -> f64 {
        let m = m as i64;
        // 1 - cos(4 pi (xi - 1/4)) = 1 + cos(4 pi xi)
        match self {
            OracleShape::RaisedCosine => sine_integral(m) + 0.5 * (sine_integral(m + 4) + sine_integral(m - 4)),
            OracleShape::RaisedCosineSquared => {
                1.5 * sine_integral(m)
                    + (sine_integral(m + 4) + sine_integral(m - 4))
                    + 0.25 * (sine_integral(m + 8) + sine_integral(m - 8))
            }
        }
    }
}

/// `cos(p pi / 4)` exactly, from `p mod 8`.
fn cos_quarter(p: i64) -> f64 {
    match p.rem_euclid(8) {
        0 => 1.0,
        1 | 7 => FRAC_1_SQRT_2,
        2 | 6 => 0.0,
        3 | 5 => -FRAC_1_SQRT_2,
        _ => -1.0,
    }
}

/// `int_{1/4}^{3/4} sin(p pi xi) d xi`.
fn sine_integral(p: i64) -> f64 {
    if p == 0 {
        return 0.0;
    }
    (cos_quarter(p) - cos_quarter(3 * p)) / (p as f64 * PI)
}

/// Truncated modal solution of the linear stiff string from the oracle shape at rest.
pub fn linear_modal_solution(p: &StringParams, shape: OracleShape, x: f64, t: f64, modes: usize) -> f64 {
    compensated_sum((1..=modes).map(|m| {
        let sx = (m as f64 * PI * x / p.length).sin();
        if sx == 0.0 {
            return 0.0;
        }
        2.0 * shape.coefficient(m) * (analytic_transverse_frequency(p, m) * t).cos() * sx
    }))
}

/// Same sum at `x = L/2`, where only odd modes contribute and `sin(m pi / 2) = +-1` exactly.
pub fn linear_modal_solution_midpoint(p: &StringParams, shape: OracleShape, t: f64, modes: usize) -> f64 {
    compensated_sum((1..=modes).step_by(2).map(|m| {
        let sign = if m % 4 == 1 { 1.0 } else { -1.0 };
        2.0 * sign * shape.coefficient(m) * (analytic_transverse_frequency(p, m) * t).cos()
    }))
}

/// Time step of the stability-limit path for grid spacing `h`.
pub fn path_time_step(p: &StringParams, h: f64, theta_u: f64) -> f64 {
    h * h * (p.rho_a() * (2.0 * theta_u - 1.0) / (p.tension * h * h + 4.0 * p.ei())).sqrt()
}

/// Leading-order arclength along the stability-limit path.
pub fn path_arclength(p: &StringParams, h: f64, theta_u: f64) -> f64 {
    h + p.rho_a() * (2.0 * theta_u - 1.0) * h.powi(3) / (6.0 * p.ei())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub n: usize,
    pub h: f64,
    pub k: f64,
    pub s: f64,
    pub q: f64,
    /// `|1 - omega_m / Omega_m|` for the first four modes.
    pub freq_error: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub theta_u: f64,
    pub points: Vec<ConvergencePoint>,
    pub slope_h: Option<f64>,
    pub slope_k: Option<f64>,
    pub slope_s: Option<f64>,
    /// Slope of each of the first four eigenfrequency errors against `s`.
    pub freq_slope_s: [Option<f64>; 4],
}

/// Number of modes in the reference modal sum.
pub const ORACLE_MODES: usize = 1_000_000;

/// One point of the space-time convergence study: run the linear scheme to ~1 ms on `N` intervals.
pub fn convergence_point(
    p: &StringParams,
    shape: OracleShape,
    theta_u: f64,
    n: usize,
    oracle_modes: usize,
) -> Result<ConvergencePoint> {
    if n % 2 != 0 {
        return Err(Error::OddN(n));
    }
    let h = p.length / n as f64;
    let k = path_time_step(p, h, theta_u);
    let steps = (1e-3 / k).round() as u64;
    let ops = SpatialOperators::new(n, p.length, 1, LambdaKind::Discrete)?;
    let coeffs = Coefficients::new(p, true, false, false);
    let scheme = Scheme::new(ops, coeffs, k, theta_u, 1.0)?;
    let grid = scheme.ops.grid();
    let mut data = InitialData::at_rest(grid.len());
    data.u0 = grid.iter().map(|&x| shape.eval(x, p.length)).collect();
    let state = scheme.init_state(&data)?;
    // G is identically zero here
    let mut stepper = Stepper::new(scheme, state).freeze_g()?;
    while stepper.state.n < steps {
        stepper.advance(0.0)?;
    }
    let numeric = if steps == 0 { data.u0[n / 2 - 1] } else { stepper.state.u[n / 2 - 1] };
    let exact = linear_modal_solution_midpoint(p, shape, steps as f64 * k, oracle_modes);

    let om = transverse_eigenfrequencies_symbol(n, p, theta_u, k)?;
    let mut freq_error = [0.0; 4];
    for (m, e) in freq_error.iter_mut().enumerate() {
        *e = (1.0 - om[m] / analytic_transverse_frequency(p, m + 1)).abs();
    }
    Ok(ConvergencePoint {
        n,
        h,
        k,
        s: path_arclength(p, h, theta_u),
        q: exact - numeric,
        freq_error,
    })
}

/// Space-time convergence of the linear scheme along the stability-limit path.
pub fn theta_scheme_convergence(
    p: &StringParams,
    shape: OracleShape,
    theta_u: f64,
    grids: &[usize],
) -> Result<ConvergenceResult> {
    if let Some(&n) = grids.iter().find(|&&n| n % 2 != 0) {
        return Err(Error::OddN(n));
    }
    if !(theta_u > 0.5) {
        return Err(Error::ThetaOutOfRange(theta_u));
    }
    let mut sorted = grids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let points = sorted
        .par_iter()
        .map(|&n| convergence_point(p, shape, theta_u, n, ORACLE_MODES))
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&ConvergencePoint) -> f64| points.iter().map(f).collect::<Vec<f64>>();
    let (hs, ks, ss, qs) = (col(|c| c.h), col(|c| c.k), col(|c| c.s), col(|c| c.q));
    let mut freq_slope_s = [None; 4];
    for (m, slot) in freq_slope_s.iter_mut().enumerate() {
        let e: Vec<f64> = points.iter().map(|c| c.freq_error[m]).collect();
        *slot = fit_slope(&ss, &e, 4);
    }
    Ok(ConvergenceResult {
        theta_u,
        slope_h: fit_slope(&hs, &qs, 4),
        slope_k: fit_slope(&ks, &qs, 4),
        slope_s: fit_slope(&ss, &qs, 4),
        freq_slope_s,
        points,
    })
}

/// `|1 - omega_m / Omega_m|` of the first four modes along the stability-limit path, with slopes against `s`.
pub fn eigenfrequency_convergence(p: &StringParams, theta_u: f64, grids: &[usize]) -> Result<(Vec<[f64; 4]>, [Option<f64>; 4])> {
    let mut sorted = grids.to_vec();
    sorted.sort_unstable();
    let mut errors = Vec::with_capacity(sorted.len());
    let mut ss = Vec::with_capacity(sorted.len());
    for &n in &sorted {
        let h = p.length / n as f64;
        let k = path_time_step(p, h, theta_u);
        let om = transverse_eigenfrequencies_symbol(n, p, theta_u, k)?;
        let mut e = [0.0; 4];
        for (m, slot) in e.iter_mut().enumerate() {
            *slot = (1.0 - om[m] / analytic_transverse_frequency(p, m + 1)).abs();
        }
        errors.push(e);
        ss.push(path_arclength(p, h, theta_u));
    }
    let mut slopes = [None; 4];
    for (m, slot) in slopes.iter_mut().enumerate() {
        let e: Vec<f64> = errors.iter().map(|row| row[m]).collect();
        *slot = fit_slope(&ss, &e, 4);
    }
    Ok((errors, slopes))
}
