use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use nlstring::config::{ExperimentKind, RunConfig};
use nlstring::experiment::{
    compare_schemes, convergence_params, run_experiment, simulate, snapshot_config, CONVERGENCE_GRIDS,
};
use nlstring::output::write_outputs;
use nlstring::params::{RawStringParams, StringParams};
use nlstring::reference::{duffing_convergence, theta_scheme_convergence, OracleShape};

#[derive(Parser)]
#[command(name = "nlstring", version, about = "Nonlinear stiff string simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in a config file and write its outputs.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the oversampling factor of the config.
        #[arg(long)]
        oversample: Option<u32>,
        /// `section.key=value`, may be repeated.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Analysis that needs no time stepping.
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
    /// Built-in validation studies.
    Validate { study: Study },
}

#[derive(Subcommand)]
enum Analysis {
    /// Numerical against continuous eigenfrequencies for the config's discretisation.
    Dispersion {
        config: PathBuf,
        /// Also write the tables as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    Duffing,
    Theta,
    Energy,
    Implicit,
}

fn load(config: &PathBuf, overrides: &[String]) -> Result<RunConfig> {
    RunConfig::load_with_overrides(config, overrides).with_context(|| format!("loading {}", config.display()))
}

fn simulate_cmd(config: PathBuf, out: PathBuf, oversample: Option<u32>, mut overrides: Vec<String>) -> Result<()> {
    if let Some(os) = oversample {
        overrides.push(format!("sim.oversampling={os}"));
    }
    let cfg = load(&config, &overrides)?;
    let result = run_experiment(&cfg)?;
    let written = write_outputs(&result, &out)?;
    for w in &written.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(r) = &result.resolved {
        println!(
            "{}: N = {}, N_s = {}, h = {:e} m, k = {:e} s, theta_u = {}, theta_v = {}",
            cfg.experiment.name(),
            r.n,
            r.ns,
            r.h,
            r.k,
            r.theta_u,
            r.theta_v
        );
    }
    for (k, v) in &result.notes {
        println!("{k} = {v}");
    }
    println!("wrote {} files to {}", written.files.len(), out.display());
    Ok(())
}

fn dispersion_cmd(config: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = load(&config, &[])?;
    cfg.experiment = ExperimentKind::Dispersion;
    let result = run_experiment(&cfg)?;
    if let Some(table) = result.table("transverse_dispersion") {
        println!("{}", table.header.join(","));
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            println!("{}", cells.join(","));
        }
    }
    for (k, v) in &result.notes {
        eprintln!("{k} = {v}");
    }
    if let Some(dir) = out {
        write_outputs(&result, &dir)?;
    }
    Ok(())
}

fn slope(s: Option<f64>) -> String {
    s.map_or("n/a".into(), |v| format!("{v:.4}"))
}

fn validate_cmd(study: Study) -> Result<()> {
    match study {
        Study::Duffing => {
            let steps: Vec<f64> = (0..7).map(|i| 1e-2 / f64::from(1u32 << i)).collect();
            for gamma in [0.6, 0.8, 1.0] {
                let c = duffing_convergence(3.7, gamma, 0.4, &steps);
                println!("gamma = {gamma}: slope {}", slope(c.slope));
                for (k, e) in c.k.iter().zip(&c.error) {
                    println!("  k = {k:.6e}  error = {e:.6e}");
                }
            }
        }
        Study::Theta => {
            let p = convergence_params()?;
            for theta in [0.6, 0.8, 1.0] {
                for (shape, name) in [
                    (OracleShape::RaisedCosine, "raised cosine"),
                    (OracleShape::RaisedCosineSquared, "squared raised cosine"),
                ] {
                    let r = theta_scheme_convergence(&p, shape, theta, &CONVERGENCE_GRIDS)?;
                    println!(
                        "theta_u = {theta}, {name}: slope vs h {}, vs k {}, vs s {}",
                        slope(r.slope_h),
                        slope(r.slope_k),
                        slope(r.slope_s)
                    );
                }
            }
        }
        Study::Energy => {
            let mut cfg = snapshot_config();
            cfg.experiment = ExperimentKind::Waveforms;
            let sim = simulate(&cfg, &[], "nonlinear")?;
            let err = sim.energy_error().context("initial energy is zero")?;
            let worst = err.iter().fold(0.0f64, |m, e| m.max(e.abs()));
            println!(
                "lossless nonlinear run, {} steps, N = {}: max |energy error| = {worst:.3e}",
                err.len() - 1,
                sim.resolved.n
            );
        }
        Study::Implicit => {
            let p = StringParams::new(RawStringParams {
                radius: 0.3e-3,
                tension: 40.0,
                ..RawStringParams::steel_r02_t50()
            })?;
            let (c, _, _) = compare_schemes(&p, 1.0 / 48_000.0)?;
            println!("explicit grid intervals: {}", c.explicit_intervals);
            println!("implicit grid intervals: {}", c.implicit_intervals);
            println!("continuous modes below Nyquist: {:.2}", c.modes_below_nyquist);
            println!("continuous modes below 20 kHz: {}", c.modes_below_20k);
            println!("explicit max relative error below 20 kHz: {:.3e}", c.explicit_error);
            println!("implicit max relative error below 20 kHz: {:.3e}", c.implicit_error);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            out,
            oversample,
            overrides,
        } => simulate_cmd(config, out, oversample, overrides),
        Command::Analyze {
            what: Analysis::Dispersion { config, out },
        } => dispersion_cmd(config, out),
        Command::Validate { study } => validate_cmd(study),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
