//! Mode counting, free-parameter selection, stability limits and numerical eigenfrequencies.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::banded::SymBanded;
use crate::error::{Error, Result};
use crate::params::{LambdaKind, ModeRule, StringParams};
use crate::spatial::{modal_eigenvalue, FdOperators};

const ARCSIN_SLACK: f64 = 1e-12;

/// `(2/k) asin(k sqrt(lambda) / 2)` for each eigenvalue, sorted ascending.
fn to_frequencies(eigs: impl IntoIterator<Item = f64>, k: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for lam in eigs {
        let arg = 0.5 * k * lam.max(0.0).sqrt();
        if arg > 1.0 + ARCSIN_SLACK {
            return Err(Error::UnstableConfiguration(format!(
                "arcsin argument {arg} exceeds one"
            )));
        }
        out.push(2.0 / k * arg.min(1.0).asin());
    }
    out.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

/// Minimum grid spacing for the transverse scheme with free parameter `theta_u`.
pub fn stability_grid_spacing(p: &StringParams, k: f64, theta_u: f64) -> Result<f64> {
    if !(theta_u > 0.5) {
        return Err(Error::ThetaOutOfRange(theta_u));
    }
    let a = p.tension * k * k;
    let w = 2.0 * theta_u - 1.0;
    let disc = (a * a + 16.0 * w * p.rho_a() * p.ei() * k * k).sqrt();
    Ok(((a + disc) / (2.0 * p.rho_a() * w)).sqrt())
}

/// Number of continuous transverse modes below Nyquist (real valued).
pub fn count_transverse_modes(p: &StringParams, k: f64) -> f64 {
    let ei = p.ei();
    if ei == 0.0 {
        return p.length / (p.c_u() * k);
    }
    let t = p.tension;
    let inner = (t * t + 4.0 * PI * PI / (k * k) * p.rho_a() * ei).sqrt();
    p.length / PI * ((inner - t) / (2.0 * ei)).sqrt()
}

/// Number of continuous transverse modes below `f_max` (Hz), counted mode by mode.
pub fn modes_below(p: &StringParams, f_max: f64) -> usize {
    let mut m = 0usize;
    while analytic_transverse_frequency(p, m + 1) < 2.0 * PI * f_max {
        m += 1;
    }
    m
}

/// `theta_u` that places the stability limit at `L / (safety N_u)`.
pub fn theta_u_bar(p: &StringParams, k: f64, safety: f64) -> f64 {
    let hb = p.length / (safety * count_transverse_modes(p, k));
    0.5 + (p.tension * k * k * hb * hb + 4.0 * p.ei() * k * k) / (2.0 * p.rho_a() * hb.powi(4))
}

/// Upper bound on the number of longitudinal modes for the given rule (not capped by the grid).
pub fn max_longitudinal_modes(p: &StringParams, k: f64, theta_v: f64, rule: ModeRule) -> Result<usize> {
    let scale = 2.0 * p.length / (PI * k);
    let bound = match rule {
        ModeRule::LongitudinalCfl => scale * (p.rho / p.young).sqrt(),
        ModeRule::ThetaStability => {
            let d = 2.0 * (1.0 - theta_v) * p.rho_a() + p.tension;
            if !(d > 0.0) {
                return Err(Error::ThetaVOutOfRange(theta_v));
            }
            scale * (p.rho_a() / d).sqrt()
        }
        ModeRule::Transverse => scale * (p.rho_a() / p.tension).sqrt(),
        ModeRule::Fixed(n) => return Ok(n),
    };
    Ok(bound.floor() as usize)
}

/// `Omega_m` of the continuous simply supported stiff string (rad/s).
pub fn analytic_transverse_frequency(p: &StringParams, m: usize) -> f64 {
    let g = m as f64 * PI / p.length;
    ((p.tension * g * g + p.ei() * g.powi(4)) / p.rho_a()).sqrt()
}

pub fn analytic_transverse_eigenfrequencies(p: &StringParams, modes: usize) -> Vec<f64> {
    (1..=modes).map(|m| analytic_transverse_frequency(p, m)).collect()
}

/// `c_v m pi / L` (rad/s).
pub fn exact_longitudinal_eigenfrequencies(p: &StringParams, modes: usize) -> Vec<f64> {
    (1..=modes).map(|m| p.c_v() * m as f64 * PI / p.length).collect()
}

fn dense_stiffness(ops: &FdOperators, p: &StringParams) -> DMatrix<f64> {
    let k = ops.d2().axpby(-p.tension, ops.d4(), p.ei());
    k.to_dense()
}

fn dense_r(ops: &FdOperators, theta_u: f64) -> DMatrix<f64> {
    let h = ops.h();
    let eye = SymBanded::identity(ops.nodes(), 1);
    eye.axpby(1.0, ops.d2(), (1.0 - theta_u) * h * h / 2.0).to_dense()
}

/// Transverse eigenfrequencies from the matrix pencil `(rho A R, K)`.
pub fn numerical_eigenfrequencies_transverse(
    ops: &FdOperators,
    p: &StringParams,
    theta_u: f64,
    k: f64,
) -> Result<Vec<f64>> {
    let r = dense_r(ops, theta_u) * p.rho_a();
    let l = r
        .cholesky()
        .ok_or_else(|| Error::UnstableConfiguration("mass operator not positive definite".into()))?
        .unpack();
    let kk = dense_stiffness(ops, p);
    let li = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SolveFailure("triangular inverse".into()))?;
    let m = &li * kk * li.transpose();
    let m = (&m + m.transpose()) * 0.5;
    to_frequencies(m.symmetric_eigen().eigenvalues.iter().copied(), k)
}

/// Same eigenfrequencies from the closed-form sine-mode symbols.
pub fn transverse_eigenfrequencies_symbol(n: usize, p: &StringParams, theta_u: f64, k: f64) -> Result<Vec<f64>> {
    let h = p.length / n as f64;
    let eigs = (1..n).map(|m| {
        let d = modal_eigenvalue(m, h, p.length, LambdaKind::Discrete);
        let r = 1.0 - (1.0 - theta_u) * h * h / 2.0 * d;
        (p.tension * d + p.ei() * d * d) / (p.rho_a() * r)
    });
    to_frequencies(eigs, k)
}

/// Eigenfrequencies of the compact implicit comparison scheme, from its symbols.
pub fn implicit_eigenfrequencies_symbol(n: usize, p: &StringParams, k: f64) -> Result<Vec<f64>> {
    let h = p.length / n as f64;
    let eigs = (1..n).map(|m| {
        let d = modal_eigenvalue(m, h, p.length, LambdaKind::Discrete);
        (p.tension * d + p.ei() * d * d) / (p.rho_a() + k * k * p.ei() / 2.0 * d * d)
    });
    to_frequencies(eigs, k)
}

/// Effective modal mass of the linearised longitudinal update.
fn longitudinal_mass(p: &StringParams, theta_v: f64, k: f64, lambda: f64) -> f64 {
    let ra = p.rho_a();
    ra - ra * (1.0 - theta_v) * k * k / 2.0 * lambda + (p.ea() - p.tension) * k * k / 4.0 * lambda
}

/// Longitudinal eigenfrequencies of the scheme linearised about rest.
///
/// The auxiliary variable contributes `(EA - T0) Lambda` stiffness, averaged over
/// three time levels; the tension term is explicit.
pub fn numerical_eigenfrequencies_longitudinal(
    lambda: &[f64],
    p: &StringParams,
    theta_v: f64,
    k: f64,
) -> Result<Vec<f64>> {
    let mut eigs = Vec::with_capacity(lambda.len());
    for &l in lambda {
        let mass = longitudinal_mass(p, theta_v, k, l);
        if !(mass > 0.0) {
            return Err(Error::UnstableConfiguration(format!(
                "longitudinal modal mass {mass} not positive"
            )));
        }
        eigs.push(p.ea() * l / mass);
    }
    to_frequencies(eigs, k)
}

fn max_abs_error(numeric: &[f64], exact: &[f64]) -> f64 {
    numeric
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Worst longitudinal placement error `max |omega_m - c_v m pi / L|` (rad/s).
pub fn longitudinal_placement_error(lambda: &[f64], p: &StringParams, theta_v: f64, k: f64) -> Result<f64> {
    let numeric = numerical_eigenfrequencies_longitudinal(lambda, p, theta_v, k)?;
    Ok(max_abs_error(&numeric, &exact_longitudinal_eigenfrequencies(p, lambda.len())))
}

/// Golden-section minimisation of `f` on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let scale = a.abs().max(b.abs()).max(1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..400 {
        if (b - a).abs() <= rel_tol * scale {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Admissible search interval for `theta_v`.
///
/// `theta_v` multiplies a mass correction of size `rho A k^2 Lambda`, so its natural
/// scale is `(EA - T0) / (rho A)`; the upper end is `1`.
pub fn theta_v_bracket(p: &StringParams) -> (f64, f64) {
    (1.0 - (p.ea() - p.tension) / p.rho_a(), 1.0)
}

/// `theta_v` minimising the worst longitudinal placement error over the given modes.
pub fn search_theta_v(p: &StringParams, k: f64, lambda: &[f64]) -> Result<f64> {
    let (lo, hi) = theta_v_bracket(p);
    let objective = |t: f64| longitudinal_placement_error(lambda, p, t, k).unwrap_or(f64::INFINITY);
    let (t, ft) = golden_section(objective, lo, hi, 1e-15);
    if !ft.is_finite() {
        return Err(Error::BracketFailure(format!("no stable theta_v in [{lo}, {hi}]")));
    }
    let width = hi - lo;
    if (t - lo) < 1e-9 * width || (hi - t) < 1e-9 * width {
        return Err(Error::BracketFailure(format!("minimiser {t} at the end of [{lo}, {hi}]")));
    }
    Ok(t)
}

/// `theta_v` that makes a single longitudinal mode with eigenvalue `lambda1` exact.
pub fn theta_v_single_mode(p: &StringParams, k: f64, lambda1: f64) -> f64 {
    let omega = p.c_v() * PI / p.length;
    let sin2 = (omega * k / 2.0).sin().powi(2);
    let target = k * k * p.ea() * lambda1 / (4.0 * sin2);
    let ra = p.rho_a();
    let one_minus = (ra + (p.ea() - p.tension) * k * k / 4.0 * lambda1 - target) * 2.0 / (ra * k * k * lambda1);
    1.0 - one_minus
}

/// `1 + 2 (T0 - EA) / (7 rho A)`, the closed-form value quoted alongside the search.
pub fn theta_v_literal(p: &StringParams) -> f64 {
    1.0 + 2.0 * (p.tension - p.ea()) / (7.0 * p.rho_a())
}

/// Smallest eigenvalue of `rho A R - k^2/4 K`; the linear energy is nonnegative iff it is `>= 0`.
pub fn linear_energy_margin(ops: &FdOperators, p: &StringParams, theta_u: f64, k: f64) -> f64 {
    let m = dense_r(ops, theta_u) * p.rho_a() - dense_stiffness(ops, p) * (k * k / 4.0);
    let m = (&m + m.transpose()) * 0.5;
    m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// One row of a dispersion table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRow {
    pub m: usize,
    pub omega_numeric: f64,
    pub omega_exact: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionReport {
    pub rows: Vec<ModeRow>,
    pub theta_u: f64,
    pub theta_v: f64,
    pub h: f64,
    pub k: f64,
    pub n: usize,
    pub ns: usize,
    pub nyquist: f64,
}

impl DispersionReport {
    pub fn from_pairs(numeric: &[f64], exact: &[f64]) -> Vec<ModeRow> {
        numeric
            .iter()
            .zip(exact)
            .enumerate()
            .map(|(i, (&a, &b))| ModeRow {
                m: i + 1,
                omega_numeric: a,
                omega_exact: b,
                rel_error: (a - b).abs() / b,
            })
            .collect()
    }

    /// Worst relative error among modes whose exact frequency is below `f_max` (Hz).
    pub fn max_rel_error_below(&self, f_max: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.omega_exact < 2.0 * PI * f_max)
            .map(|r| r.rel_error)
            .fold(0.0, f64::max)
    }
}

/// Transverse dispersion table for `N` intervals.
pub fn transverse_report(p: &StringParams, n: usize, theta_u: f64, k: f64) -> Result<DispersionReport> {
    let numeric = transverse_eigenfrequencies_symbol(n, p, theta_u, k)?;
    let exact = analytic_transverse_eigenfrequencies(p, numeric.len());
    Ok(DispersionReport {
        rows: DispersionReport::from_pairs(&numeric, &exact),
        theta_u,
        theta_v: 1.0,
        h: p.length / n as f64,
        k,
        n,
        ns: 0,
        nyquist: 0.5 / k,
    })
}

/// Longitudinal dispersion table for `ns` modes on `N` intervals.
pub fn longitudinal_report(p: &StringParams, n: usize, ns: usize, theta_v: f64, k: f64) -> Result<DispersionReport> {
    let h = p.length / n as f64;
    let lambda: Vec<f64> = (1..=ns).map(|m| modal_eigenvalue(m, h, p.length, LambdaKind::Discrete)).collect();
    let numeric = numerical_eigenfrequencies_longitudinal(&lambda, p, theta_v, k)?;
    let exact = exact_longitudinal_eigenfrequencies(p, ns);
    Ok(DispersionReport {
        rows: DispersionReport::from_pairs(&numeric, &exact),
        theta_u: 1.0,
        theta_v,
        h,
        k,
        n,
        ns,
        nyquist: 0.5 / k,
    })
}

/// Time-domain trajectory of a linear comparison scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRun {
    pub trajectory: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
}

fn linear_energy(ops: &FdOperators, p: &StringParams, u: &[f64], up: &[f64], k: f64, implicit: bool) -> f64 {
    let h = ops.h();
    let dot = |a: &[f64], b: &[f64]| h * crate::energy::compensated_sum(a.iter().zip(b).map(|(x, y)| x * y));
    let vel: Vec<f64> = u.iter().zip(up).map(|(a, b)| (a - b) / k).collect();
    let mut terms = vec![0.5 * p.rho_a() * dot(&vel, &vel)];
    if implicit {
        let dvel = ops.d2_vec(&vel);
        terms.push(k * k * p.ei() / 4.0 * dot(&dvel, &dvel));
    }
    terms.push(0.5 * p.tension * dot(&ops.dminus_vec(u), &ops.dminus_vec(up)));
    terms.push(0.5 * p.ei() * dot(&ops.d2_vec(u), &ops.d2_vec(up)));
    crate::energy::compensated_sum(terms)
}

fn linear_start(ops: &FdOperators, p: &StringParams, u0: &[f64], k: f64) -> Vec<f64> {
    let d2 = ops.d2_vec(u0);
    let d4 = ops.d4_vec(u0);
    let c = k * k / (2.0 * p.rho_a());
    (0..u0.len())
        .map(|i| u0[i] + c * (p.tension * d2[i] - p.ei() * d4[i]))
        .collect()
}

/// Runs `(rho A + k^2 EI/2 D4) delta_tt u = T0 D2 u - EI D4 u` for `steps` steps from rest.
pub fn implicit_scheme_run(p: &StringParams, k: f64, n: usize, u0: &[f64], steps: usize) -> Result<LinearRun> {
    let h = p.length / n as f64;
    if h < p.c_u() * k * (1.0 - 1e-12) {
        return Err(Error::UnstableConfiguration(format!(
            "grid spacing {h} below the implicit limit {}",
            p.c_u() * k
        )));
    }
    let ops = FdOperators::new(n, h)?;
    let lhs = SymBanded::identity(ops.nodes(), 2).axpby(p.rho_a(), ops.d4(), k * k * p.ei() / 2.0);
    let chol = lhs.cholesky()?;
    let mut up = u0.to_vec();
    let mut u = linear_start(&ops, p, u0, k);
    let mut out = LinearRun {
        trajectory: vec![up.clone(), u.clone()],
        energies: vec![linear_energy(&ops, p, &u, &up, k, true)],
    };
    let m = ops.nodes();
    let mut tmp = vec![0.0; m];
    for _ in 1..steps {
        let extrap: Vec<f64> = u.iter().zip(&up).map(|(a, b)| 2.0 * a - b).collect();
        lhs.mul_vec(&extrap, &mut tmp);
        let d2 = ops.d2_vec(&u);
        let d4 = ops.d4_vec(&u);
        let mut next: Vec<f64> = (0..m)
            .map(|i| tmp[i] + k * k * (p.tension * d2[i] - p.ei() * d4[i]))
            .collect();
        chol.solve_in_place(&mut next);
        up = std::mem::replace(&mut u, next);
        out.energies.push(linear_energy(&ops, p, &u, &up, k, true));
        out.trajectory.push(u.clone());
    }
    Ok(out)
}

/// Runs the explicit leapfrog `rho A delta_tt u = T0 D2 u - EI D4 u` for `steps` steps from rest.
pub fn explicit_scheme_run(p: &StringParams, k: f64, n: usize, u0: &[f64], steps: usize) -> Result<LinearRun> {
    let h = p.length / n as f64;
    if h < stability_grid_spacing(p, k, 1.0)? * (1.0 - 1e-12) {
        return Err(Error::UnstableConfiguration(format!("grid spacing {h} below the explicit limit")));
    }
    let ops = FdOperators::new(n, h)?;
    let mut up = u0.to_vec();
    let mut u = linear_start(&ops, p, u0, k);
    let mut out = LinearRun {
        trajectory: vec![up.clone(), u.clone()],
        energies: vec![linear_energy(&ops, p, &u, &up, k, false)],
    };
    let c = k * k / p.rho_a();
    for _ in 1..steps {
        let d2 = ops.d2_vec(&u);
        let d4 = ops.d4_vec(&u);
        let next: Vec<f64> = (0..u.len())
            .map(|i| 2.0 * u[i] - up[i] + c * (p.tension * d2[i] - p.ei() * d4[i]))
            .collect();
        up = std::mem::replace(&mut u, next);
        out.energies.push(linear_energy(&ops, p, &u, &up, k, false));
        out.trajectory.push(u.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RawStringParams;

    fn fig3() -> StringParams {
        StringParams::new(RawStringParams::steel_r02_t50()).unwrap()
    }

    const K48: f64 = 1.0 / 48_000.0;

    #[test]
    fn ideal_string_limit_is_cfl() {
        let p = fig3().without_stiffness();
        let h0 = stability_grid_spacing(&p, K48, 1.0).unwrap();
        assert!((h0 - p.c_u() * K48).abs() <= 1e-15 * h0);
        assert!(1.5 * p.c_u() * K48 > h0);
        assert!(matches!(stability_grid_spacing(&p, K48, 0.5), Err(Error::ThetaOutOfRange(_))));
    }

    #[test]
    fn stability_limit_grows_as_theta_decreases() {
        let p = fig3();
        let mut last = 0.0;
        for t in [1.2, 1.0, 0.8, 0.6, 0.51, 0.5001] {
            let h0 = stability_grid_spacing(&p, K48, t).unwrap();
            assert!(h0 > last);
            last = h0;
        }
    }

    #[test]
    fn mode_count_limits() {
        let mut p = fig3();
        p.inertia *= 1e-12;
        let nu = count_transverse_modes(&p, K48);
        let ideal = p.length / (p.c_u() * K48);
        assert!((nu - ideal).abs() <= 1e-3 * ideal);
        let p = fig3();
        assert!(count_transverse_modes(&p, K48 / 2.0) > count_transverse_modes(&p, K48));
        // every mode below the count lies below Nyquist
        let nu = count_transverse_modes(&p, K48).floor() as usize;
        assert!(analytic_transverse_frequency(&p, nu) <= PI / K48);
        assert!(analytic_transverse_frequency(&p, nu + 1) > PI / K48);
    }

    #[test]
    fn theta_bar_matches_grid_to_mode_count() {
        let p = fig3();
        let nu = count_transverse_modes(&p, K48);
        let tb = theta_u_bar(&p, K48, 1.0);
        let h0 = stability_grid_spacing(&p, K48, tb).unwrap();
        assert!((p.length / h0 - nu).abs() < 1.0);

        let ideal = p.without_stiffness();
        let hb = ideal.c_u() * K48;
        let t = 0.5 + ideal.tension * K48 * K48 * hb * hb / (2.0 * ideal.rho_a() * hb.powi(4));
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn safety_factor_raises_theta_bar() {
        let p = fig3();
        assert!(theta_u_bar(&p, K48, 1.05) > theta_u_bar(&p, K48, 1.0));
    }

    #[test]
    fn longitudinal_bounds() {
        let p = StringParams::new(RawStringParams::steel_r029_t40()).unwrap();
        let cfl = max_longitudinal_modes(&p, K48, 1.0, ModeRule::LongitudinalCfl).unwrap();
        let exact = 2.0 * p.length / (PI * K48) * (p.rho / p.young).sqrt();
        assert_eq!(cfl, exact.floor() as usize);
        let tr = 2.0 * p.length / (PI * K48) * (p.rho_a() / p.tension).sqrt();
        assert!((tr / exact - p.c_v() / p.c_u()).abs() < 1e-9 * tr / exact);
        let half = max_longitudinal_modes(&p, K48 / 2.0, 1.0, ModeRule::LongitudinalCfl).unwrap();
        assert!(half == 2 * cfl || half == 2 * cfl + 1);
        let theta1 = max_longitudinal_modes(&p, K48, 1.0, ModeRule::ThetaStability).unwrap();
        assert_eq!(theta1, tr.floor() as usize);
        let bad = 1.0 + p.tension / (2.0 * p.rho_a()) + 1.0;
        assert!(matches!(
            max_longitudinal_modes(&p, K48, bad, ModeRule::ThetaStability),
            Err(Error::ThetaVOutOfRange(_))
        ));
    }

    #[test]
    fn leapfrog_is_exact_at_cfl() {
        let p = fig3().without_stiffness();
        let h = p.c_u() * K48;
        let n = (p.length / h).round() as usize;
        // choose k so that h = c_u k holds exactly on this grid
        let k = p.length / n as f64 / p.c_u();
        let om = transverse_eigenfrequencies_symbol(n, &p, 1.0, k).unwrap();
        for (m, w) in om.iter().enumerate() {
            let exact = p.c_u() * (m + 1) as f64 * PI / p.length;
            assert!((w - exact).abs() <= 1e-9 * exact, "mode {}", m + 1);
        }
    }

    #[test]
    fn dense_and_symbol_paths_agree() {
        let p = fig3();
        for theta in [1.0, 0.8, theta_u_bar(&p, K48, 1.0)] {
            let h0 = stability_grid_spacing(&p, K48, theta).unwrap();
            let n = (p.length / (1.05 * h0)).floor() as usize;
            let ops = FdOperators::new(n, p.length / n as f64).unwrap();
            let dense = numerical_eigenfrequencies_transverse(&ops, &p, theta, K48).unwrap();
            let sym = transverse_eigenfrequencies_symbol(n, &p, theta, K48).unwrap();
            assert_eq!(dense.len(), sym.len());
            for (a, b) in dense.iter().zip(&sym) {
                assert!((a - b).abs() <= 1e-10 * b.max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn small_step_recovers_square_roots() {
        let p = fig3();
        let n = 40;
        let k = 1e-9;
        let om = transverse_eigenfrequencies_symbol(n, &p, 1.0, k).unwrap();
        let h = p.length / n as f64;
        let d = modal_eigenvalue(1, h, p.length, LambdaKind::Discrete);
        let root = ((p.tension * d + p.ei() * d * d) / p.rho_a()).sqrt();
        assert!((om[0] - root).abs() <= 1e-9 * root);
    }

    #[test]
    fn unstable_grid_is_reported() {
        let p = fig3();
        let h0 = stability_grid_spacing(&p, K48, 1.0).unwrap();
        let n = (p.length / (0.8 * h0)).ceil() as usize;
        assert!(matches!(
            transverse_eigenfrequencies_symbol(n, &p, 1.0, K48),
            Err(Error::UnstableConfiguration(_))
        ));
    }

    #[test]
    fn energy_margin_tracks_stability_limit() {
        let p = fig3();
        let h0 = stability_grid_spacing(&p, K48, 1.0).unwrap();
        let ok = (p.length / (1.05 * h0)).floor() as usize;
        let ops = FdOperators::new(ok, p.length / ok as f64).unwrap();
        assert!(linear_energy_margin(&ops, &p, 1.0, K48) > 0.0);
        let bad = (p.length / (0.9 * h0)).ceil() as usize;
        let ops = FdOperators::new(bad, p.length / bad as f64).unwrap();
        assert!(linear_energy_margin(&ops, &p, 1.0, K48) < 0.0);
    }

    #[test]
    fn inharmonicity() {
        let p = fig3();
        let om = analytic_transverse_eigenfrequencies(&p, 30);
        for m in 1..om.len() {
            assert!(om[m] / (m + 1) as f64 > om[m - 1] / m as f64);
        }
        let ideal = analytic_transverse_eigenfrequencies(&p.without_stiffness(), 5);
        for (m, w) in ideal.iter().enumerate() {
            assert!((w - p.c_u() * (m + 1) as f64 * PI).abs() < 1e-9 * w);
        }
    }

    #[test]
    fn first_longitudinal_mode_at_theta_one() {
        let p = fig3();
        let n = 400;
        let h = p.length / n as f64;
        let lam = [modal_eigenvalue(1, h, p.length, LambdaKind::Discrete)];
        let w = numerical_eigenfrequencies_longitudinal(&lam, &p, 1.0, 1e-7).unwrap()[0];
        let exact = p.c_v() * PI / p.length;
        assert!((w - exact).abs() < 1e-4 * exact);
    }

    #[test]
    fn theta_v_single_mode_search_matches_closed_form() {
        let p = fig3();
        let n = 150;
        let h = p.length / n as f64;
        let lam = [modal_eigenvalue(1, h, p.length, LambdaKind::Discrete)];
        let closed = theta_v_single_mode(&p, K48, lam[0]);
        let err = longitudinal_placement_error(&lam, &p, closed, K48).unwrap();
        assert!(err < 1e-6 * p.c_v() * PI);
        let found = search_theta_v(&p, K48, &lam).unwrap();
        assert!((found - closed).abs() <= 1e-10 * closed.abs(), "{found} vs {closed}");
    }

    #[test]
    fn theta_v_search_improves_on_one() {
        let p = fig3();
        let n = 150;
        let h = p.length / n as f64;
        let ns = max_longitudinal_modes(&p, K48, 1.0, ModeRule::LongitudinalCfl).unwrap();
        let lam: Vec<f64> = (1..=ns).map(|m| modal_eigenvalue(m, h, p.length, LambdaKind::Discrete)).collect();
        let t = search_theta_v(&p, K48, &lam).unwrap();
        let (lo, hi) = theta_v_bracket(&p);
        assert!(lo < t && t < hi);
        let e_search = longitudinal_placement_error(&lam, &p, t, K48).unwrap();
        let e_one = longitudinal_placement_error(&lam, &p, 1.0, K48).unwrap();
        assert!(e_search < e_one);
        let literal = theta_v_literal(&p);
        assert!((t - literal).abs() <= 0.1 * literal.abs(), "{t} vs {literal}");
    }

    #[test]
    fn implicit_matches_explicit_without_stiffness() {
        let p = fig3().without_stiffness();
        let n = 100;
        let h = p.length / n as f64;
        let k = h / p.c_u() / 1.2;
        let u0: Vec<f64> = (1..n).map(|i| (PI * i as f64 * h).sin().powi(3) * 1e-3).collect();
        let a = implicit_scheme_run(&p, k, n, &u0, 200).unwrap();
        let b = explicit_scheme_run(&p, k, n, &u0, 200).unwrap();
        for (x, y) in a.trajectory.iter().zip(&b.trajectory) {
            for (s, t) in x.iter().zip(y) {
                assert!((s - t).abs() <= 1e-12 * 1e-3);
            }
        }
    }

    #[test]
    fn implicit_scheme_conserves_energy() {
        let p = StringParams::new(RawStringParams {
            radius: 0.3e-3,
            tension: 40.0,
            ..RawStringParams::steel_r029_t40()
        })
        .unwrap()
        .without_losses();
        let n = (p.length / (p.c_u() * K48)).floor() as usize;
        let h = p.length / n as f64;
        let u0: Vec<f64> = (1..n)
            .map(|i| {
                let x = i as f64 * h;
                (-(x - 0.4f64).powi(2) / (2.0 * 0.05f64.powi(2))).exp() * 1e-3
            })
            .collect();
        let run = implicit_scheme_run(&p, K48, n, &u0, 2000).unwrap();
        let e0 = run.energies[0];
        for e in &run.energies {
            assert!(((e - e0) / e0).abs() <= 1e-11);
        }
        assert!(implicit_scheme_run(&p, K48, n + 2, &u0[..1], 10).is_err());
    }
}
