//! Discrete energy at interleaved time steps and the power balance of the scheme.

use crate::error::{Error, Result};
use crate::stepper::{Scheme, SimState};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn dot_h(a: &[f64], b: &[f64], h: f64) -> f64 {
    h * compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Energy components at `n - 1/2` (J).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub linear: f64,
    pub nonlinear: f64,
    /// The two kinetic corrections from `theta_u` and `theta_v`; already included in `kinetic`.
    pub theta_corrections: [f64; 2],
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        compensated_sum([self.kinetic, self.linear, self.nonlinear])
    }
}

/// Energy of `state` under `scheme`.
///
/// Longitudinal terms are evaluated in modal coordinates with the scheme's own
/// eigenvalues; with discrete eigenvalues this equals the physical-space value.
pub fn discrete_energy(scheme: &Scheme, state: &SimState) -> EnergyBreakdown {
    let ops = &scheme.ops;
    let cf = &scheme.coeffs;
    let h = ops.h();
    let k = state.k;
    let lam = &ops.basis.lambda;

    let du: Vec<f64> = state.u.iter().zip(&state.u_prev).map(|(a, b)| (a - b) / k).collect();
    let ds: Vec<f64> = state.s.iter().zip(&state.s_prev).map(|(a, b)| (a - b) / k).collect();
    let ddu = ops.fd.dminus_vec(&du);

    let vel_u = dot_h(&du, &du, h);
    let vel_v = dot_h(&ds, &ds, h);
    let grad_du = dot_h(&ddu, &ddu, ops.h());
    let grad_dv = h * compensated_sum(ds.iter().zip(lam).map(|(x, l)| l * x * x));
    let corr_u = 0.5 * cf.rho_a * (scheme.theta_u - 1.0) * h * h / 2.0 * grad_du;
    let corr_v = 0.5 * cf.rho_a * (scheme.theta_v - 1.0) * k * k / 2.0 * grad_dv;
    let kinetic = compensated_sum([0.5 * cf.rho_a * vel_u, 0.5 * cf.rho_a * vel_v, corr_u, corr_v]);

    let dcur = ops.fd.dminus_vec(&state.u);
    let dprev = ops.fd.dminus_vec(&state.u_prev);
    let tens_u = dot_h(&dcur, &dprev, h);
    let tens_v = h * compensated_sum(
        state
            .s
            .iter()
            .zip(&state.s_prev)
            .zip(lam)
            .map(|((a, b), l)| l * a * b),
    );
    let bend = if cf.ei != 0.0 {
        let c2 = ops.fd.d2_vec(&state.u);
        let p2 = ops.fd.d2_vec(&state.u_prev);
        dot_h(&c2, &p2, h)
    } else {
        0.0
    };
    let linear = compensated_sum([0.5 * cf.tension * tens_u, 0.5 * cf.tension * tens_v, 0.5 * cf.ei * bend]);
    let nonlinear = 0.5 * dot_h(&state.psi, &state.psi, h);

    EnergyBreakdown {
        kinetic,
        linear,
        nonlinear,
        theta_corrections: [corr_u, corr_v],
    }
}

/// Relative energy error `1 - H^{n-1/2} / H^{1/2}` for a series of totals.
pub fn energy_error_series(energies: &[f64]) -> Result<Vec<f64>> {
    let first = *energies.first().ok_or(Error::ZeroInitialEnergy)?;
    if !(first > 0.0) {
        return Err(Error::ZeroInitialEnergy);
    }
    Ok(energies.iter().map(|e| 1.0 - e / first).collect())
}

/// The loss power density `p^n` (without the `2 rho A` factor) between `before` and `after`.
pub fn loss_power(scheme: &Scheme, before: &SimState, after: &SimState) -> f64 {
    let ops = &scheme.ops;
    let cf = &scheme.coeffs;
    let h = ops.h();
    let k = before.k;
    let dcu: Vec<f64> = after.u.iter().zip(&before.u_prev).map(|(a, b)| (a - b) / (2.0 * k)).collect();
    let dcs: Vec<f64> = after.s.iter().zip(&before.s_prev).map(|(a, b)| (a - b) / (2.0 * k)).collect();
    let ddu = ops.fd.dminus_vec(&dcu);
    compensated_sum([
        cf.sigma0_u * dot_h(&dcu, &dcu, h),
        cf.sigma0_v * dot_h(&dcs, &dcs, h),
        cf.sigma1_u * dot_h(&ddu, &ddu, h),
    ])
}

/// `delta_{t+} H + 2 rho A p - <J, delta_{t.} u> f` for one step from `before` to `after` (W).
pub fn power_balance_residual(scheme: &Scheme, before: &SimState, after: &SimState, force: f64) -> f64 {
    let e0 = discrete_energy(scheme, before).total();
    let e1 = discrete_energy(scheme, after).total();
    power_balance_residual_from(scheme, before, after, e0, e1, force)
}

/// As [`power_balance_residual`], with the two energies already evaluated.
pub fn power_balance_residual_from(
    scheme: &Scheme,
    before: &SimState,
    after: &SimState,
    e0: f64,
    e1: f64,
    force: f64,
) -> f64 {
    let k = before.k;
    let h = scheme.ops.h();
    let dcu: Vec<f64> = after.u.iter().zip(&before.u_prev).map(|(a, b)| (a - b) / (2.0 * k)).collect();
    let input = dot_h(&scheme.j, &dcu, h) * force;
    compensated_sum([(e1 - e0) / k, 2.0 * scheme.coeffs.rho_a * loss_power(scheme, before, after), -input])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{InitialShape, LambdaKind, RawStringParams, StringParams};
    use crate::spatial::SpatialOperators;
    use crate::stepper::{Coefficients, InitialData};
    use proptest::prelude::*;

    fn scheme(theta_u: f64) -> Scheme {
        let p = StringParams::new(RawStringParams::steel_r029_t40()).unwrap();
        let k = 1.0 / 48_000.0;
        let ops = SpatialOperators::new(60, p.length, 5, LambdaKind::Discrete).unwrap();
        Scheme::new(ops, Coefficients::new(&p, true, true, true), k, theta_u, 1.0).unwrap()
    }

    fn state_of(scheme: &Scheme, u: Vec<f64>, u_prev: Vec<f64>) -> SimState {
        let ns = scheme.ops.modes();
        SimState {
            psi: vec![0.0; scheme.ops.intervals()],
            u,
            u_prev,
            s: vec![0.0; ns],
            s_prev: vec![0.0; ns],
            n: 1,
            k: scheme.k,
            solves: 0,
        }
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        assert_eq!(compensated_sum([1.0, 1e100, 1.0, -1e100]), 2.0);
        assert_eq!(compensated_sum(std::iter::empty()), 0.0);
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let s = scheme(1.0);
        let m = s.ops.nodes();
        let e = discrete_energy(&s, &state_of(&s, vec![0.0; m], vec![0.0; m]));
        assert_eq!(e, EnergyBreakdown::default());
    }

    #[test]
    fn static_field_is_pure_potential() {
        let s = scheme(1.0);
        let x = s.ops.grid();
        let shape = InitialShape::Gaussian {
            amplitude: 1e-3,
            width: 0.05,
        };
        let u: Vec<f64> = x.iter().map(|&x| shape.eval(x, 1.0)).collect();
        let e = discrete_energy(&s, &state_of(&s, u.clone(), u.clone()));
        assert_eq!(e.kinetic, 0.0);
        assert_eq!(e.nonlinear, 0.0);
        let h = s.ops.h();
        let du = s.ops.fd.dminus_vec(&u);
        let d2 = s.ops.fd.d2_vec(&u);
        let expect = s.coeffs.tension / 2.0 * h * du.iter().map(|x| x * x).sum::<f64>()
            + s.coeffs.ei / 2.0 * h * d2.iter().map(|x| x * x).sum::<f64>();
        assert!((e.linear - expect).abs() <= 1e-13 * expect);
    }

    #[test]
    fn theta_corrections_vanish_at_one() {
        let s = scheme(1.0);
        let m = s.ops.nodes();
        let u: Vec<f64> = (0..m).map(|i| 1e-4 * (i as f64).sin()).collect();
        let e = discrete_energy(&s, &state_of(&s, u, vec![0.0; m]));
        assert_eq!(e.theta_corrections, [0.0, 0.0]);
        let s = scheme(0.9);
        let u: Vec<f64> = (0..m).map(|i| 1e-4 * (i as f64).sin()).collect();
        let e = discrete_energy(&s, &state_of(&s, u, vec![0.0; m]));
        assert!(e.theta_corrections[0] < 0.0);
    }

    #[test]
    fn modal_longitudinal_terms_match_physical_space() {
        let s = scheme(1.0);
        let m = s.ops.nodes();
        let mut st = state_of(&s, vec![0.0; m], vec![0.0; m]);
        st.s = vec![1e-6, -2e-7, 3e-8, 0.0, 5e-9];
        st.s_prev = vec![9e-7, -1e-7, 2e-8, 1e-9, 0.0];
        let e = discrete_energy(&s, &st);
        let h = s.ops.h();
        let v = s.ops.synthesize(&st.s);
        let vp = s.ops.synthesize(&st.s_prev);
        let dv = s.ops.fd.dminus_vec(&v);
        let dvp = s.ops.fd.dminus_vec(&vp);
        let vel: f64 = h * v.iter().zip(&vp).map(|(a, b)| ((a - b) / s.k).powi(2)).sum::<f64>();
        let lin = s.coeffs.tension / 2.0 * h * dv.iter().zip(&dvp).map(|(a, b)| a * b).sum::<f64>();
        assert!((e.kinetic - 0.5 * s.coeffs.rho_a * vel).abs() <= 1e-10 * e.kinetic);
        assert!((e.linear - lin).abs() <= 1e-10 * lin.abs());
    }

    #[test]
    fn error_series() {
        assert_eq!(energy_error_series(&[2.0, 2.0, 2.0]).unwrap(), vec![0.0; 3]);
        assert!(matches!(energy_error_series(&[0.0, 1.0]), Err(Error::ZeroInitialEnergy)));
        assert!(matches!(energy_error_series(&[]), Err(Error::ZeroInitialEnergy)));
        let e = energy_error_series(&[4.0, 3.0]).unwrap();
        assert_eq!(e, vec![0.0, 0.25]);
    }

    #[test]
    fn loss_power_is_nonnegative_along_a_run() {
        let s = scheme(1.0);
        let x = s.ops.grid();
        let shape = InitialShape::RaisedCosine {
            amplitude: 2e-3,
            width: 0.1,
        };
        let mut data = InitialData::at_rest(x.len());
        data.u0 = x.iter().map(|&x| shape.eval(x, 1.0)).collect();
        let mut st = s.init_state(&data).unwrap();
        for _ in 0..50 {
            let before = st.clone();
            s.step(&mut st, 0.0).unwrap();
            assert!(loss_power(&s, &before, &st) >= 0.0);
        }
    }

    #[test]
    fn lossless_run_conserves_energy() {
        let p = StringParams::new(RawStringParams::steel_r029_t40()).unwrap().without_losses();
        let k = 1.0 / 48_000.0;
        let ops = SpatialOperators::new(60, p.length, 5, LambdaKind::Discrete).unwrap();
        for theta in [1.0, 0.8] {
            let s = Scheme::new(ops.clone(), Coefficients::new(&p, true, false, true), k, theta, 1.0).unwrap();
            let x = s.ops.grid();
            let shape = InitialShape::RaisedCosine {
                amplitude: 5e-3,
                width: 0.1,
            };
            let mut data = InitialData::at_rest(x.len());
            data.u0 = x.iter().map(|&x| shape.eval(x, 1.0)).collect();
            let mut st = s.init_state(&data).unwrap();
            let mut series = vec![discrete_energy(&s, &st).total()];
            for _ in 0..300 {
                s.step(&mut st, 0.0).unwrap();
                series.push(discrete_energy(&s, &st).total());
            }
            let err = energy_error_series(&series).unwrap();
            let worst = err.iter().fold(0.0f64, |a, e| a.max(e.abs()));
            assert!(worst <= 1e-12, "theta {theta}: {worst}");
        }
    }

    proptest! {
        #[test]
        fn nonlinear_energy_is_nonnegative(psi in prop::collection::vec(-1e3f64..1e3, 60)) {
            let s = scheme(1.0);
            let m = s.ops.nodes();
            let mut st = state_of(&s, vec![0.0; m], vec![0.0; m]);
            st.psi = psi;
            prop_assert!(discrete_energy(&s, &st).nonlinear >= 0.0);
        }
    }
}
