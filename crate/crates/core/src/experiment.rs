//! Resolution of a run configuration and the named experiments.

use std::f64::consts::PI;

use crate::config::{ExperimentKind, RunConfig};
use crate::dispersion::{
    count_transverse_modes, implicit_eigenfrequencies_symbol, longitudinal_report, max_longitudinal_modes,
    modes_below, numerical_eigenfrequencies_longitudinal, search_theta_v, stability_grid_spacing, theta_u_bar,
    theta_v_literal, transverse_eigenfrequencies_symbol, transverse_report, analytic_transverse_eigenfrequencies,
    exact_longitudinal_eigenfrequencies, DispersionReport,
};
use crate::energy::{discrete_energy, power_balance_residual_from};
use crate::error::{Error, Result};
use crate::params::{
    Component, GridRule, InitialCondition, InitialShape, LambdaKind, ModeRule, RawStringParams, SimConfig,
    StringParams, Theta,
};
use crate::reference::{duffing_convergence, theta_scheme_convergence, OracleShape};
use crate::spatial::{modal_eigenvalue, SpatialOperators};
use crate::stepper::{force_sample, read_output, Coefficients, InitialData, Scheme, Stepper};

/// Safety factor used for `theta_u = auto` when the grid rule carries none.
pub const DEFAULT_SAFETY: f64 = 1.05;

/// Snapshot times used by the snapshot experiment when the config lists none (s).
pub const DEFAULT_SNAPSHOT_TIMES: [f64; 6] = [0.0, 0.5e-3, 1.0e-3, 1.5e-3, 2.0e-3, 2.5e-3];

/// Grid sizes of the space-time convergence study.
pub const CONVERGENCE_GRIDS: [usize; 4] = [640, 1280, 2560, 5120];

/// Discretisation quantities derived from a config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub params: StringParams,
    pub n: usize,
    pub h: f64,
    pub k: f64,
    pub ns: usize,
    pub theta_u: f64,
    pub theta_v: f64,
}

/// String parameters as seen by the scheme, with stiffness switched off if requested.
pub fn effective_params(cfg: &RunConfig) -> Result<StringParams> {
    let p = StringParams::new(cfg.string)?;
    Ok(if cfg.sim.stiffness_on { p } else { p.without_stiffness() })
}

/// Resolves `h`, `N`, `N_s` and both free parameters.
pub fn resolve(cfg: &RunConfig) -> Result<Resolved> {
    cfg.sim.validate()?;
    let p = effective_params(cfg)?;
    let k = cfg.sim.time_step();
    let safety = match cfg.sim.grid {
        GridRule::Stability { safety } => safety,
        _ => DEFAULT_SAFETY,
    };
    let theta_u = match cfg.sim.theta_u {
        Theta::Value(v) => v,
        Theta::Auto => theta_u_bar(&p, k, safety),
        Theta::Literal => {
            return Err(Error::InadmissibleParams("theta_u has no literal form".into()));
        }
    };
    if !(theta_u > 0.5) {
        return Err(Error::ThetaOutOfRange(theta_u));
    }
    let n = match cfg.sim.grid {
        GridRule::Stability { safety } => {
            let h0 = stability_grid_spacing(&p, k, theta_u)?;
            (p.length / (safety * h0)).floor() as usize
        }
        GridRule::Intervals(n) => n,
        GridRule::WaveSpeed { factor } => (p.length / (factor * p.c_u() * k)).floor() as usize,
    };
    if n < 3 {
        return Err(Error::DimensionTooSmall(n));
    }
    let h = p.length / n as f64;
    let cap = |m: usize| m.clamp(1, n - 1);
    let theta_v = match cfg.sim.theta_v {
        Theta::Value(v) => v,
        Theta::Literal => theta_v_literal(&p),
        Theta::Auto => {
            let ns = match cfg.sim.mode_rule {
                ModeRule::Fixed(m) => m,
                rule @ (ModeRule::LongitudinalCfl | ModeRule::Transverse) => {
                    cap(max_longitudinal_modes(&p, k, 1.0, rule)?)
                }
                ModeRule::ThetaStability => cap(max_longitudinal_modes(&p, k, 1.0, ModeRule::LongitudinalCfl)?),
            };
            let lambda: Vec<f64> = (1..=ns).map(|m| modal_eigenvalue(m, h, p.length, cfg.sim.lambda)).collect();
            search_theta_v(&p, k, &lambda)?
        }
    };
    let ns = match cfg.sim.mode_rule {
        ModeRule::Fixed(m) => m,
        rule => cap(max_longitudinal_modes(&p, k, theta_v, rule)?),
    };
    if ns > n - 1 {
        return Err(Error::TooManyModes {
            requested: ns,
            max: n - 1,
        });
    }
    Ok(Resolved {
        params: p,
        n,
        h,
        k,
        ns,
        theta_u,
        theta_v,
    })
}

/// The config with every derived choice pinned, so that re-running it bypasses `auto`.
pub fn pinned_config(cfg: &RunConfig, r: &Resolved) -> RunConfig {
    let mut out = cfg.clone();
    out.sim.grid = GridRule::Intervals(r.n);
    out.sim.mode_rule = ModeRule::Fixed(r.ns);
    out.sim.theta_u = Theta::Value(r.theta_u);
    out.sim.theta_v = Theta::Value(r.theta_v);
    out
}

/// Builds the stepper for a resolved config, starting from the configured initial condition.
pub fn build_stepper(cfg: &RunConfig, r: &Resolved) -> Result<Stepper> {
    let ops = SpatialOperators::new(r.n, r.params.length, r.ns, cfg.sim.lambda)?;
    let coeffs = Coefficients::new(&r.params, cfg.sim.stiffness_on, cfg.sim.losses_on, cfg.sim.nonlinear_on);
    let mut scheme = Scheme::new(ops, coeffs, r.k, r.theta_u, r.theta_v)?;
    if let Some(src) = &cfg.source {
        scheme = scheme.with_contact(src.position)?;
    }
    let grid = scheme.ops.grid();
    let mut data = InitialData::at_rest(grid.len());
    let profile: Vec<f64> = grid.iter().map(|&x| cfg.sim.initial.shape.eval(x, r.params.length)).collect();
    match cfg.sim.initial.component {
        Component::Transverse => data.u0 = profile,
        Component::Longitudinal => data.v0 = profile,
    }
    let state = scheme.init_state(&data)?;
    let stepper = Stepper::new(scheme, state);
    if cfg.sim.frozen_g {
        stepper.freeze_g()
    } else {
        Ok(stepper)
    }
}

/// One named time series, one value per output sample starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
    /// Displacement taps are also written as audio.
    pub audio: bool,
}

/// Full displacement profile at one time, boundary nodes included.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub label: String,
    pub time: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// A small numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub experiment: ExperimentKind,
    /// Output sample rate (Hz).
    pub sample_rate: f64,
    pub channels: Vec<Channel>,
    pub frames: Vec<Frame>,
    pub tables: Vec<Table>,
    /// Config that reproduces the run exactly.
    pub config: RunConfig,
    pub resolved: Option<Resolved>,
    /// Extra derived values, echoed in the metadata.
    pub notes: Vec<(String, String)>,
}

impl RunOutput {
    fn empty(cfg: &RunConfig) -> Self {
        RunOutput {
            experiment: cfg.experiment,
            sample_rate: cfg.sim.sample_rate(),
            channels: Vec::new(),
            frames: Vec::new(),
            tables: Vec::new(),
            config: cfg.clone(),
            resolved: None,
            notes: Vec::new(),
        }
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }
}

/// Time-domain result of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub resolved: Resolved,
    pub transverse: Vec<f64>,
    pub longitudinal: Vec<f64>,
    /// `H^{n-1/2}` in row `n >= 1`; row 0 repeats row 1.
    pub energy: Vec<f64>,
    /// Power-balance residual of the step that produced layer `n`; rows 0 and 1 are zero.
    pub power_residual: Vec<f64>,
    pub force: Vec<f64>,
    pub frames: Vec<Frame>,
    pub solves: u64,
}

impl Simulation {
    /// `1 - H^{n-1/2} / H^{1/2}`, or `None` when the initial energy is zero.
    pub fn energy_error(&self) -> Option<Vec<f64>> {
        let first = *self.energy.first()?;
        if !(first > 0.0) {
            return None;
        }
        Some(self.energy.iter().map(|e| 1.0 - e / first).collect())
    }
}

fn frame(label: &str, time: f64, ops: &SpatialOperators, u: &[f64], s: &[f64]) -> Frame {
    let n = ops.intervals();
    let h = ops.h();
    let x: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let pad = |inner: &[f64]| {
        let mut full = Vec::with_capacity(n + 1);
        full.push(0.0);
        full.extend_from_slice(inner);
        full.push(0.0);
        full
    };
    Frame {
        label: label.into(),
        time,
        x,
        u: pad(u),
        v: pad(&ops.synthesize(s)),
    }
}

/// Runs the time-stepping loop for `T_end`, recording every channel and the requested frames.
pub fn simulate(cfg: &RunConfig, snapshot_times: &[f64], label: &str) -> Result<Simulation> {
    let r = resolve(cfg)?;
    let mut stepper = build_stepper(cfg, &r)?;
    let k = r.k;
    let steps = (cfg.sim.duration / k).round() as u64;
    let rows = steps as usize + 1;
    let x_o = cfg.sim.output_position;
    if !(x_o > 0.0 && x_o < r.params.length) {
        return Err(Error::InadmissibleParams(format!(
            "output position {x_o} m must lie strictly inside (0, {})",
            r.params.length
        )));
    }
    let mut snaps: Vec<(u64, f64)> = snapshot_times.iter().map(|&t| ((t / k).round() as u64, t)).collect();
    snaps.sort_by_key(|s| s.0);

    let mut out = Simulation {
        resolved: r,
        transverse: Vec::with_capacity(rows),
        longitudinal: Vec::with_capacity(rows),
        energy: Vec::with_capacity(rows),
        power_residual: Vec::with_capacity(rows),
        force: Vec::with_capacity(rows),
        frames: Vec::new(),
        solves: 0,
    };
    let force_at = |n: u64| cfg.source.as_ref().map_or(0.0, |s| force_sample(n as f64 * k, s));
    let tap = |st: &Stepper, layer_prev: bool| {
        let ops = &st.scheme.ops;
        let (u, s) = if layer_prev {
            (&st.state.u_prev, &st.state.s_prev)
        } else {
            (&st.state.u, &st.state.s)
        };
        (read_output(u, x_o, r.h), read_output(&ops.synthesize(s), x_o, r.h))
    };
    let take_frames = |st: &Stepper, layer: u64, prev: bool, frames: &mut Vec<Frame>| {
        for &(_, t) in snaps.iter().filter(|s| s.0 == layer) {
            let (u, s) = if prev {
                (&st.state.u_prev, &st.state.s_prev)
            } else {
                (&st.state.u, &st.state.s)
            };
            frames.push(frame(label, t, &st.scheme.ops, u, s));
        }
    };

    // layer 0
    let (a, b) = tap(&stepper, true);
    out.transverse.push(a);
    out.longitudinal.push(b);
    out.force.push(force_at(0));
    take_frames(&stepper, 0, true, &mut out.frames);
    let mut energy = discrete_energy(&stepper.scheme, &stepper.state).total();
    out.energy.push(energy);
    out.power_residual.push(0.0);
    if steps >= 1 {
        let (a, b) = tap(&stepper, false);
        out.transverse.push(a);
        out.longitudinal.push(b);
        out.force.push(force_at(1));
        out.energy.push(energy);
        out.power_residual.push(0.0);
        take_frames(&stepper, 1, false, &mut out.frames);
    }
    for n in 1..steps {
        let f = force_at(n);
        let before = stepper.state.clone();
        stepper.advance(f)?;
        let e1 = discrete_energy(&stepper.scheme, &stepper.state).total();
        out.power_residual
            .push(power_balance_residual_from(&stepper.scheme, &before, &stepper.state, energy, e1, f));
        energy = e1;
        out.energy.push(e1);
        let (a, b) = tap(&stepper, false);
        out.transverse.push(a);
        out.longitudinal.push(b);
        out.force.push(force_at(n + 1));
        take_frames(&stepper, n + 1, false, &mut out.frames);
    }
    out.solves = stepper.state.solves;
    Ok(out)
}

fn push_simulation(out: &mut RunOutput, sim: &Simulation, suffix: &str) {
    let name = |base: &str| format!("{base}{suffix}");
    out.channels.push(Channel {
        name: name("transverse"),
        values: sim.transverse.clone(),
        audio: true,
    });
    out.channels.push(Channel {
        name: name("longitudinal"),
        values: sim.longitudinal.clone(),
        audio: true,
    });
    out.channels.push(Channel {
        name: name("energy"),
        values: sim.energy.clone(),
        audio: false,
    });
    if let Some(err) = sim.energy_error() {
        out.channels.push(Channel {
            name: name("energy_error"),
            values: err,
            audio: false,
        });
    }
    out.channels.push(Channel {
        name: name("power_residual"),
        values: sim.power_residual.clone(),
        audio: false,
    });
    out.channels.push(Channel {
        name: name("force"),
        values: sim.force.clone(),
        audio: false,
    });
}

fn dispersion_table(name: &str, report: &DispersionReport) -> Table {
    let mut t = Table::new(name, &["m", "f_numeric_hz", "f_exact_hz", "rel_error"]);
    for row in &report.rows {
        t.rows.push(vec![
            row.m as f64,
            row.omega_numeric / (2.0 * PI),
            row.omega_exact / (2.0 * PI),
            row.rel_error,
        ]);
    }
    t
}

/// Resolves and pins a config, for experiments that only need the discretisation.
fn pinned(cfg: &RunConfig) -> Result<(RunOutput, Resolved)> {
    let r = resolve(cfg)?;
    let mut out = RunOutput::empty(&pinned_config(cfg, &r));
    out.resolved = Some(r);
    Ok((out, r))
}

fn run_waveforms(cfg: &RunConfig) -> Result<RunOutput> {
    let sim = simulate(cfg, &cfg.sim.snapshot_times, "nonlinear")?;
    let r = sim.resolved;
    let mut out = RunOutput::empty(&pinned_config(cfg, &r));
    out.resolved = Some(r);
    push_simulation(&mut out, &sim, "");
    out.frames = sim.frames;
    out.note("solves", sim.solves);
    Ok(out)
}

fn run_snapshots(cfg: &RunConfig) -> Result<RunOutput> {
    let times = if cfg.sim.snapshot_times.is_empty() {
        DEFAULT_SNAPSHOT_TIMES.to_vec()
    } else {
        cfg.sim.snapshot_times.clone()
    };
    let mut with_times = cfg.clone();
    with_times.sim.snapshot_times = times.clone();
    let sim = simulate(&with_times, &times, "nonlinear")?;
    let mut linear = with_times.clone();
    linear.sim.nonlinear_on = false;
    let lin = simulate(&linear, &times, "linear")?;
    let r = sim.resolved;
    let mut out = RunOutput::empty(&pinned_config(&with_times, &r));
    out.resolved = Some(r);
    push_simulation(&mut out, &sim, "");
    out.frames = sim.frames;
    out.frames.extend(lin.frames);
    out.note("solves", sim.solves);
    Ok(out)
}

fn run_struck(cfg: &RunConfig) -> Result<RunOutput> {
    if cfg.source.is_none() {
        return Err(Error::MissingKey("[source]".into()));
    }
    run_waveforms(cfg)
}

fn run_dispersion(cfg: &RunConfig) -> Result<RunOutput> {
    let (mut out, r) = pinned(cfg)?;
    let p = r.params;
    let k = r.k;
    let chosen = transverse_report(&p, r.n, r.theta_u, k)?;
    out.tables.push(dispersion_table("transverse_dispersion", &chosen));
    let safety = match cfg.sim.grid {
        GridRule::Stability { safety } => safety,
        _ => 1.0,
    };
    let n1 = (p.length / (safety * stability_grid_spacing(&p, k, 1.0)?)).floor() as usize;
    let plain = transverse_report(&p, n1, 1.0, k)?;
    out.tables.push(dispersion_table("transverse_dispersion_theta1", &plain));
    let nv = (p.length / (p.c_v() * k)).floor().max(3.0) as usize;
    let coarse = transverse_report(&p, nv, 1.0, k)?;
    out.tables.push(dispersion_table("transverse_dispersion_hv", &coarse));
    let long = longitudinal_report(&p, r.n, r.ns, r.theta_v, k)?;
    out.tables.push(dispersion_table("longitudinal_dispersion", &long));
    let nyq = 0.5 / k;
    out.note("continuous_modes_below_nyquist", count_transverse_modes(&p, k));
    out.note("max_rel_error_theta", chosen.max_rel_error_below(nyq));
    out.note("max_rel_error_theta1", plain.max_rel_error_below(nyq));
    out.note("intervals_theta1", n1);
    out.note("intervals_hv", nv);
    let top = coarse.rows.last().map_or(0.0, |row| row.omega_numeric / (2.0 * PI));
    out.note("highest_frequency_hv_hz", top);
    Ok(out)
}

/// The three mode-placement configurations: (transverse bound, 1), (CFL bound, 1), (CFL bound, searched).
pub fn longitudinal_configurations(p: &StringParams, n: usize, k: f64) -> Result<[(String, usize, f64); 3]> {
    let h = p.length / n as f64;
    let cap = |m: usize| m.clamp(1, n - 1);
    let ns_t = cap(max_longitudinal_modes(p, k, 1.0, ModeRule::Transverse)?);
    let ns_c = cap(max_longitudinal_modes(p, k, 1.0, ModeRule::LongitudinalCfl)?);
    let lambda: Vec<f64> = (1..=ns_c).map(|m| modal_eigenvalue(m, h, p.length, LambdaKind::Discrete)).collect();
    let tv = search_theta_v(p, k, &lambda)?;
    Ok([
        ("a".into(), ns_t, 1.0),
        ("b".into(), ns_c, 1.0),
        ("c".into(), ns_c, tv),
    ])
}

fn run_longitudinal_spectra(cfg: &RunConfig) -> Result<RunOutput> {
    let (mut out, r) = pinned(cfg)?;
    let p = r.params;
    let configs = longitudinal_configurations(&p, r.n, r.k)?;
    let mut placement = Table::new("longitudinal_placement", &["config", "ns", "theta_v", "max_abs_error_rad_s"]);
    for (label, ns, tv) in &configs {
        let lambda: Vec<f64> = (1..=*ns).map(|m| modal_eigenvalue(m, r.h, p.length, LambdaKind::Discrete)).collect();
        let numeric = numerical_eigenfrequencies_longitudinal(&lambda, &p, *tv, r.k)?;
        let exact = exact_longitudinal_eigenfrequencies(&p, *ns);
        let worst = numeric.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let idx = (label.as_bytes()[0] - b'a') as f64;
        placement.rows.push(vec![idx, *ns as f64, *tv, worst]);
        let mut modes = Table::new(format!("longitudinal_modes_{label}"), &["m", "f_numeric_hz", "f_exact_hz"]);
        for (m, (a, b)) in numeric.iter().zip(&exact).enumerate() {
            modes.rows.push(vec![(m + 1) as f64, a / (2.0 * PI), b / (2.0 * PI)]);
        }
        out.tables.push(modes);

        // purely longitudinal: G is constant
        let mut run = cfg.clone();
        run.sim.grid = GridRule::Intervals(r.n);
        run.sim.mode_rule = ModeRule::Fixed(*ns);
        run.sim.theta_v = Theta::Value(*tv);
        run.sim.theta_u = Theta::Value(r.theta_u);
        run.sim.frozen_g = run.source.is_none() && run.sim.initial.component == Component::Longitudinal;
        let sim = simulate(&run, &[], label)?;
        out.channels.push(Channel {
            name: format!("longitudinal_{label}"),
            values: sim.longitudinal,
            audio: true,
        });
    }
    out.tables.insert(0, placement);
    Ok(out)
}

fn run_duffing(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::empty(cfg);
    let steps: Vec<f64> = (0..7).map(|i| 1e-2 / f64::from(1u32 << i)).collect();
    for gamma in [0.6, 0.8, 1.0] {
        let c = duffing_convergence(3.7, gamma, 0.4, &steps);
        let mut t = Table::new(format!("duffing_gamma_{gamma}"), &["k", "error"]);
        for (k, e) in c.k.iter().zip(&c.error) {
            t.rows.push(vec![*k, *e]);
        }
        out.tables.push(t);
        out.note(&format!("slope_gamma_{gamma}"), c.slope.unwrap_or(f64::NAN));
    }
    Ok(out)
}

/// The stiff string of the space-time convergence study.
pub fn convergence_params() -> Result<StringParams> {
    StringParams::new(RawStringParams::steel_r02_t50())
}

fn run_theta(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::empty(cfg);
    let p = StringParams::new(cfg.string)?.without_losses();
    for theta in [0.6, 0.8, 1.0] {
        for (shape, tag) in [(OracleShape::RaisedCosine, ""), (OracleShape::RaisedCosineSquared, "_smooth")] {
            let res = theta_scheme_convergence(&p, shape, theta, &CONVERGENCE_GRIDS)?;
            let mut t = Table::new(
                format!("theta_{theta}{tag}"),
                &["n", "h", "k", "s", "q", "err1", "err2", "err3", "err4"],
            );
            for c in &res.points {
                let mut row = vec![c.n as f64, c.h, c.k, c.s, c.q];
                row.extend_from_slice(&c.freq_error);
                t.rows.push(row);
            }
            out.tables.push(t);
            let fmt = |s: Option<f64>| s.unwrap_or(f64::NAN);
            out.note(&format!("slope_h_theta_{theta}{tag}"), fmt(res.slope_h));
            out.note(&format!("slope_k_theta_{theta}{tag}"), fmt(res.slope_k));
            out.note(&format!("slope_s_theta_{theta}{tag}"), fmt(res.slope_s));
            if tag.is_empty() {
                for (m, s) in res.freq_slope_s.iter().enumerate() {
                    out.note(&format!("freq_slope_s_theta_{theta}_mode_{}", m + 1), fmt(*s));
                }
            }
        }
    }
    Ok(out)
}

/// Grid counts and worst relative dispersion errors of the explicit and implicit comparison schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeComparison {
    pub explicit_intervals: usize,
    pub implicit_intervals: usize,
    pub modes_below_nyquist: f64,
    pub modes_below_20k: usize,
    pub explicit_error: f64,
    pub implicit_error: f64,
}

pub fn compare_schemes(p: &StringParams, k: f64) -> Result<(SchemeComparison, Vec<f64>, Vec<f64>)> {
    let n_exp = (p.length / stability_grid_spacing(p, k, 1.0)?).floor() as usize;
    let n_imp = (p.length / (p.c_u() * k)).floor() as usize;
    let band = 20_000.0;
    let within = |om: &[f64]| -> Vec<f64> {
        let exact = analytic_transverse_eigenfrequencies(p, om.len());
        om.iter()
            .zip(&exact)
            .take_while(|(_, e)| **e < 2.0 * PI * band)
            .map(|(a, e)| (a - e).abs() / e)
            .collect()
    };
    let e_exp = within(&transverse_eigenfrequencies_symbol(n_exp, p, 1.0, k)?);
    let e_imp = within(&implicit_eigenfrequencies_symbol(n_imp, p, k)?);
    let cmp = SchemeComparison {
        explicit_intervals: n_exp,
        implicit_intervals: n_imp,
        modes_below_nyquist: count_transverse_modes(p, k),
        modes_below_20k: modes_below(p, band),
        explicit_error: e_exp.iter().copied().fold(0.0, f64::max),
        implicit_error: e_imp.iter().copied().fold(0.0, f64::max),
    };
    Ok((cmp, e_exp, e_imp))
}

fn run_explicit_implicit(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::empty(cfg);
    let p = StringParams::new(cfg.string)?;
    let (cmp, e_exp, e_imp) = compare_schemes(&p, cfg.sim.time_step())?;
    let mut t = Table::new("dispersion_errors", &["m", "explicit_rel_error", "implicit_rel_error"]);
    for m in 0..e_exp.len().max(e_imp.len()) {
        let get = |v: &[f64]| v.get(m).copied().unwrap_or(f64::NAN);
        t.rows.push(vec![(m + 1) as f64, get(&e_exp), get(&e_imp)]);
    }
    out.tables.push(t);
    out.note("explicit_intervals", cmp.explicit_intervals);
    out.note("implicit_intervals", cmp.implicit_intervals);
    out.note("continuous_modes_below_nyquist", cmp.modes_below_nyquist);
    out.note("continuous_modes_below_20khz", cmp.modes_below_20k);
    out.note("explicit_max_rel_error", cmp.explicit_error);
    out.note("implicit_max_rel_error", cmp.implicit_error);
    Ok(out)
}

/// Runs the experiment named in the config.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.experiment {
        ExperimentKind::Snapshots => run_snapshots(cfg),
        ExperimentKind::Waveforms => run_waveforms(cfg),
        ExperimentKind::Dispersion => run_dispersion(cfg),
        ExperimentKind::LongitudinalSpectra => run_longitudinal_spectra(cfg),
        ExperimentKind::StruckDamped => run_struck(cfg),
        ExperimentKind::DuffingConvergence => run_duffing(cfg),
        ExperimentKind::ThetaConvergence => run_theta(cfg),
        ExperimentKind::ExplicitVsImplicit => run_explicit_implicit(cfg),
    }
}

/// The lossless, stiffness-free snapshot setup: 5 mm raised cosine, `h = 1.5 c_u k`.
pub fn snapshot_config() -> RunConfig {
    RunConfig {
        string: RawStringParams::steel_r02_t50(),
        sim: SimConfig {
            grid: GridRule::WaveSpeed { factor: 1.5 },
            stiffness_on: false,
            losses_on: false,
            output_position: 0.72,
            mode_rule: ModeRule::LongitudinalCfl,
            initial: InitialCondition {
                shape: InitialShape::RaisedCosine {
                    amplitude: 5e-3,
                    width: 0.1,
                },
                component: Component::Transverse,
            },
            ..SimConfig::default()
        },
        source: None,
        experiment: ExperimentKind::Snapshots,
    }
}
