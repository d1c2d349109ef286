use std::fs;
use std::path::Path;

use nlstring::config::{ExperimentKind, RunConfig};
use nlstring::energy::discrete_energy;
use nlstring::experiment::{build_stepper, resolve, run_experiment, simulate, snapshot_config};
use nlstring::output::{write_outputs, METADATA_FILE};
use nlstring::params::{
    Component, InitialCondition, InitialShape, RawStringParams, SimConfig, SourceKind, SourceParams, Theta,
};

fn struck(duration: f64, peak: f64) -> RunConfig {
    RunConfig {
        string: RawStringParams::steel_r029_t40(),
        sim: SimConfig {
            duration,
            theta_u: Theta::Auto,
            theta_v: Theta::Auto,
            ..SimConfig::default()
        },
        source: Some(SourceParams::new(peak, 1e-3, 8e-4, SourceKind::Strike, 0.72, 1.0).unwrap()),
        experiment: ExperimentKind::StruckDamped,
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn forced_lossy_run_balances_power_every_step() {
    let sim = simulate(&struck(0.02, 5.0), &[], "x").unwrap();
    let peak = sim.energy.iter().copied().fold(0.0, f64::max);
    assert!(peak > 0.0);
    let worst = sim.power_residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    assert!(worst <= 1e-10 * peak, "residual {worst:e} vs energy {peak:e}");
    let after = ((1.8e-3 / sim.resolved.k).ceil() as usize) + 2;
    for w in sim.energy[after..].windows(2) {
        assert!(w[1] <= w[0] + 1e-14 * peak);
    }
}

#[test]
fn equal_axial_and_applied_tension_reduces_to_the_linear_string() {
    let mut cfg = snapshot_config();
    cfg.sim.duration = 5e-3;
    let area = std::f64::consts::PI * cfg.string.radius.powi(2);
    cfg.string.young = cfg.string.tension / area;
    let nl = simulate(&cfg, &[], "nl").unwrap();
    cfg.sim.nonlinear_on = false;
    let lin = simulate(&cfg, &[], "lin").unwrap();
    assert_eq!(nl.transverse, lin.transverse);
    assert_eq!(nl.longitudinal, lin.longitudinal);
}

#[test]
fn auxiliary_variable_is_bounded_by_the_energy() {
    let mut cfg = snapshot_config();
    cfg.string = RawStringParams::steel_r029_t40();
    cfg.sim.stiffness_on = true;
    cfg.sim.losses_on = false;
    cfg.sim.grid = nlstring::params::GridRule::Stability { safety: 1.05 };
    cfg.sim.theta_u = Theta::Auto;
    cfg.sim.initial = InitialCondition {
        shape: InitialShape::RaisedCosine {
            amplitude: 5e-3,
            width: 0.1,
        },
        component: Component::Transverse,
    };
    let r = resolve(&cfg).unwrap();
    let mut st = build_stepper(&cfg, &r).unwrap();
    let h = r.h;
    for _ in 0..2000 {
        let e = discrete_energy(&st.scheme, &st.state);
        let total = e.total();
        let psi_sq: f64 = st.state.psi.iter().map(|p| h * p * p).sum();
        assert!(e.nonlinear >= 0.0);
        assert!(0.5 * psi_sq <= total * (1.0 + 1e-12));
        assert!(e.kinetic + e.linear + e.theta_corrections[0] + e.theta_corrections[1] >= -1e-12 * total);
        st.advance(0.0).unwrap();
    }
}

#[test]
fn silent_input_gives_silent_channels() {
    let out = run_experiment(&struck(0.01, 0.0)).unwrap();
    for ch in &out.channels {
        assert!(ch.values.iter().all(|&v| v == 0.0), "{}", ch.name);
    }
}

#[test]
fn repeated_runs_write_identical_bytes_and_metadata_reproduces_them() {
    let cfg = struck(0.01, 5.0);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_outputs(&run_experiment(&cfg).unwrap(), a.path()).unwrap();
    write_outputs(&run_experiment(&cfg).unwrap(), b.path()).unwrap();
    let first = dir_bytes(a.path());
    assert_eq!(first, dir_bytes(b.path()));

    let pinned = RunConfig::load(&a.path().join(METADATA_FILE)).unwrap();
    assert_eq!(pinned.sim.theta_u, Theta::Value(resolve(&cfg).unwrap().theta_u));
    let c = tempfile::tempdir().unwrap();
    write_outputs(&run_experiment(&pinned).unwrap(), c.path()).unwrap();
    let again = dir_bytes(c.path());
    let csvs = |v: &[(String, Vec<u8>)]| -> Vec<(String, Vec<u8>)> {
        v.iter().filter(|(n, _)| n.ends_with(".csv") || n.ends_with(".wav")).cloned().collect()
    };
    assert_eq!(csvs(&first), csvs(&again));
    let rows = fs::read_to_string(a.path().join("transverse.csv")).unwrap().lines().count();
    assert_eq!(rows, 481);
}

#[test]
fn larger_strikes_drive_larger_longitudinal_motion() {
    let peaks: Vec<f64> = [2.5, 5.0, 7.5]
        .iter()
        .map(|&f| {
            let sim = simulate(&struck(0.01, f), &[], "x").unwrap();
            sim.longitudinal.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .collect();
    assert!(peaks[0] < peaks[1] && peaks[1] < peaks[2], "{peaks:?}");
    assert!(peaks[2] / peaks[0] > 3.0 * 1.2, "{peaks:?}");
}
