//! Flat `key = value` run configuration with `[section]` headers and unit suffixes.
//!
//! ```text
//! [string]
//! rho = 8000
//! E = 2e11
//! T0 = 40
//! L = 1 m
//! r = 0.29 mm
//!
//! [sim]
//! fs = 48 kHz
//! theta_u = auto
//! ```
//!
//! Lines starting with `#` are comments. The resolved metadata written next to
//! every run uses the same format, so it can be fed back in unchanged.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::{
    Component, GridRule, InitialCondition, InitialShape, LambdaKind, ModeRule, RawStringParams,
    SimConfig, SourceKind, SourceParams, Theta,
};

/// The named experiments a config can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Snapshots,
    Waveforms,
    Dispersion,
    LongitudinalSpectra,
    StruckDamped,
    DuffingConvergence,
    ThetaConvergence,
    ExplicitVsImplicit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Snapshots,
        ExperimentKind::Waveforms,
        ExperimentKind::Dispersion,
        ExperimentKind::LongitudinalSpectra,
        ExperimentKind::StruckDamped,
        ExperimentKind::DuffingConvergence,
        ExperimentKind::ThetaConvergence,
        ExperimentKind::ExplicitVsImplicit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Snapshots => "snapshots",
            ExperimentKind::Waveforms => "waveforms",
            ExperimentKind::Dispersion => "dispersion",
            ExperimentKind::LongitudinalSpectra => "longitudinal-spectra",
            ExperimentKind::StruckDamped => "struck-damped",
            ExperimentKind::DuffingConvergence => "duffing-convergence",
            ExperimentKind::ThetaConvergence => "theta-convergence",
            ExperimentKind::ExplicitVsImplicit => "explicit-vs-implicit",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub string: RawStringParams,
    pub sim: SimConfig,
    pub source: Option<SourceParams>,
    pub experiment: ExperimentKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Length,
    Time,
    Frequency,
    Density,
    Pressure,
    Force,
    Rate,
    Diffusivity,
    Plain,
}

impl Dim {
    fn scale(self, unit: &str) -> Option<f64> {
        let s = match (self, unit) {
            (Dim::Length, "m") => 1.0,
            (Dim::Length, "cm") => 1e-2,
            (Dim::Length, "mm") => 1e-3,
            (Dim::Time, "s") => 1.0,
            (Dim::Time, "ms") => 1e-3,
            (Dim::Time, "us") => 1e-6,
            (Dim::Frequency, "Hz") => 1.0,
            (Dim::Frequency, "kHz") => 1e3,
            (Dim::Density, "kg/m^3") => 1.0,
            (Dim::Pressure, "Pa") => 1.0,
            (Dim::Pressure, "GPa") => 1e9,
            (Dim::Force, "N") => 1.0,
            (Dim::Rate, "1/s") => 1.0,
            (Dim::Diffusivity, "m^2/s") => 1.0,
            _ => return None,
        };
        Some(s)
    }

    fn units(self) -> &'static str {
        match self {
            Dim::Length => "m, cm, mm",
            Dim::Time => "s, ms, us",
            Dim::Frequency => "Hz, kHz",
            Dim::Density => "kg/m^3",
            Dim::Pressure => "Pa, GPa",
            Dim::Force => "N",
            Dim::Rate => "1/s",
            Dim::Diffusivity => "m^2/s",
            Dim::Plain => "none",
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

struct Doc {
    path: String,
    entries: Vec<Entry>,
}

const KEYS: &[(&str, &[&str])] = &[
    ("string", &["rho", "E", "T0", "L", "r", "sigma0_u", "sigma0_v", "sigma1_u"]),
    (
        "sim",
        &[
            "fs", "oversampling", "h_safety", "intervals", "h_wave", "theta_u", "theta_v", "modes",
            "lambda", "stiffness", "losses", "nonlinear", "frozen_g", "T_end", "x_o", "snapshots",
        ],
    ),
    ("initial", &["shape", "component", "amplitude", "width"]),
    ("source", &["F_s", "t0", "t_s", "zeta", "x_f"]),
    ("experiment", &["name"]),
];

fn parse_doc(text: &str, path: &str) -> Result<Doc> {
    let mut entries: Vec<Entry> = Vec::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                path: path.into(),
                line,
                message: format!("unterminated section header `{content}`"),
            })?;
            let name = name.trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    message: format!("unknown section [{name}]"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            path: path.into(),
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let sec = section.clone().ok_or_else(|| Error::Parse {
            path: path.into(),
            line,
            message: "key outside of any section".into(),
        })?;
        let key = key.trim().to_string();
        check_key(path, line, &sec, &key)?;
        if entries.iter().any(|e| e.section == sec && e.key == key) {
            return Err(Error::Parse {
                path: path.into(),
                line,
                message: format!("duplicate key `{key}` in [{sec}]"),
            });
        }
        entries.push(Entry {
            section: sec,
            key,
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(Doc {
        path: path.into(),
        entries,
    })
}

fn check_key(path: &str, line: usize, section: &str, key: &str) -> Result<()> {
    let known = KEYS
        .iter()
        .find(|(s, _)| *s == section)
        .map(|(_, k)| k.contains(&key))
        .unwrap_or(false);
    if known {
        Ok(())
    } else {
        Err(Error::UnknownKey {
            path: path.into(),
            line,
            section: section.into(),
            key: key.into(),
        })
    }
}

impl Doc {
    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.section == section && e.key == key)
    }

    fn has_section(&self, section: &str) -> bool {
        self.entries.iter().any(|e| e.section == section)
    }

    fn parse_err(&self, e: &Entry, message: String) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: e.line,
            message,
        }
    }

    fn quantity(&self, e: &Entry, dim: Dim, unit_required: bool) -> Result<f64> {
        let mut parts = e.value.split_whitespace();
        let number = parts.next().unwrap_or("");
        let value: f64 = number
            .parse()
            .map_err(|_| self.parse_err(e, format!("`{}` is not a number", e.value)))?;
        let unit = parts.next();
        if parts.next().is_some() {
            return Err(self.parse_err(e, format!("trailing text in `{}`", e.value)));
        }
        let unit_err = |message: String| Error::UnitError {
            path: self.path.clone(),
            line: e.line,
            key: e.key.clone(),
            message,
        };
        match unit {
            None if unit_required => Err(unit_err(format!("a unit is required ({})", dim.units()))),
            None => Ok(value),
            Some(u) if dim == Dim::Plain => Err(unit_err(format!("`{u}` given for a dimensionless value"))),
            Some(u) => dim
                .scale(u)
                .map(|s| value * s)
                .ok_or_else(|| unit_err(format!("unknown unit `{u}`, expected one of {}", dim.units()))),
        }
    }

    fn required(&self, section: &str, key: &str, dim: Dim, unit_required: bool) -> Result<f64> {
        let e = self.get(section, key).ok_or_else(|| Error::MissingKey(key.into()))?;
        self.quantity(e, dim, unit_required)
    }

    fn optional(&self, section: &str, key: &str, dim: Dim, default: f64) -> Result<f64> {
        match self.get(section, key) {
            Some(e) => self.quantity(e, dim, false),
            None => Ok(default),
        }
    }

    fn integer(&self, e: &Entry) -> Result<u64> {
        e.value
            .parse()
            .map_err(|_| self.parse_err(e, format!("`{}` is not a non-negative integer", e.value)))
    }

    fn flag(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.get(section, key) {
            None => Ok(default),
            Some(e) => match e.value.as_str() {
                "on" | "true" | "yes" => Ok(true),
                "off" | "false" | "no" => Ok(false),
                other => Err(self.parse_err(e, format!("expected on/off, got `{other}`"))),
            },
        }
    }

    fn theta(&self, key: &str, allow_literal: bool) -> Result<Theta> {
        let Some(e) = self.get("sim", key) else {
            return Ok(Theta::Value(1.0));
        };
        match e.value.as_str() {
            "auto" => Ok(Theta::Auto),
            "literal" if allow_literal => Ok(Theta::Literal),
            _ => Ok(Theta::Value(self.quantity(e, Dim::Plain, false)?)),
        }
    }
}

fn build(doc: &Doc) -> Result<RunConfig> {
    let string = RawStringParams {
        rho: doc.required("string", "rho", Dim::Density, false)?,
        young: doc.required("string", "E", Dim::Pressure, false)?,
        tension: doc.required("string", "T0", Dim::Force, false)?,
        length: doc.required("string", "L", Dim::Length, false)?,
        radius: doc.required("string", "r", Dim::Length, true)?,
        sigma0_u: doc.optional("string", "sigma0_u", Dim::Rate, 0.0)?,
        sigma0_v: doc.optional("string", "sigma0_v", Dim::Rate, 0.0)?,
        sigma1_u: doc.optional("string", "sigma1_u", Dim::Diffusivity, 0.0)?,
    };

    let defaults = SimConfig::default();
    let grid_keys: Vec<&Entry> = ["h_safety", "intervals", "h_wave"]
        .iter()
        .filter_map(|k| doc.get("sim", k))
        .collect();
    if grid_keys.len() > 1 {
        return Err(doc.parse_err(
            grid_keys[1],
            "only one of h_safety, intervals, h_wave may be given".into(),
        ));
    }
    let grid = match grid_keys.first() {
        None => defaults.grid,
        Some(e) => match e.key.as_str() {
            "h_safety" => GridRule::Stability {
                safety: doc.quantity(e, Dim::Plain, false)?,
            },
            "intervals" => GridRule::Intervals(doc.integer(e)? as usize),
            _ => GridRule::WaveSpeed {
                factor: doc.quantity(e, Dim::Plain, false)?,
            },
        },
    };
    let oversampling = match doc.get("sim", "oversampling") {
        Some(e) => {
            let v = doc.integer(e)?;
            u32::try_from(v).map_err(|_| doc.parse_err(e, format!("oversampling {v} is too large")))?
        }
        None => defaults.oversampling,
    };
    let mode_rule = match doc.get("sim", "modes") {
        None => defaults.mode_rule,
        Some(e) => match e.value.as_str() {
            "cfl" => ModeRule::LongitudinalCfl,
            "theta" => ModeRule::ThetaStability,
            "transverse" => ModeRule::Transverse,
            _ => ModeRule::Fixed(doc.integer(e)? as usize),
        },
    };
    let lambda = match doc.get("sim", "lambda") {
        None => defaults.lambda,
        Some(e) => match e.value.as_str() {
            "discrete" => LambdaKind::Discrete,
            "continuous" => LambdaKind::Continuous,
            other => return Err(doc.parse_err(e, format!("lambda must be discrete or continuous, got `{other}`"))),
        },
    };
    let snapshot_times = match doc.get("sim", "snapshots") {
        None => Vec::new(),
        Some(e) => e
            .value
            .split(',')
            .map(|item| {
                let sub = Entry {
                    value: item.trim().to_string(),
                    ..e.clone()
                };
                doc.quantity(&sub, Dim::Time, false)
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let initial = if doc.has_section("initial") {
        let shape_entry = doc
            .get("initial", "shape")
            .ok_or_else(|| Error::MissingKey("shape".into()))?;
        let shape = match shape_entry.value.as_str() {
            "zero" => InitialShape::Zero,
            "raised_cosine" | "gaussian" => {
                let amplitude = doc.required("initial", "amplitude", Dim::Length, false)?;
                let width = doc.required("initial", "width", Dim::Plain, false)?;
                if shape_entry.value == "gaussian" {
                    InitialShape::Gaussian { amplitude, width }
                } else {
                    InitialShape::RaisedCosine { amplitude, width }
                }
            }
            other => {
                return Err(doc.parse_err(
                    shape_entry,
                    format!("shape must be zero, raised_cosine or gaussian, got `{other}`"),
                ))
            }
        };
        let component = match doc.get("initial", "component").map(|e| (e, e.value.as_str())) {
            None | Some((_, "transverse")) => Component::Transverse,
            Some((_, "longitudinal")) => Component::Longitudinal,
            Some((e, other)) => {
                return Err(doc.parse_err(e, format!("component must be transverse or longitudinal, got `{other}`")))
            }
        };
        InitialCondition { shape, component }
    } else {
        InitialCondition::default()
    };

    let sim = SimConfig {
        base_rate: doc.optional("sim", "fs", Dim::Frequency, defaults.base_rate)?,
        oversampling,
        grid,
        theta_u: doc.theta("theta_u", false)?,
        theta_v: doc.theta("theta_v", true)?,
        mode_rule,
        lambda,
        stiffness_on: doc.flag("sim", "stiffness", true)?,
        losses_on: doc.flag("sim", "losses", true)?,
        nonlinear_on: doc.flag("sim", "nonlinear", true)?,
        frozen_g: doc.flag("sim", "frozen_g", false)?,
        duration: doc.optional("sim", "T_end", Dim::Time, defaults.duration)?,
        output_position: doc.optional("sim", "x_o", Dim::Length, defaults.output_position)?,
        initial,
        snapshot_times,
    };
    sim.validate()?;

    let source = if doc.has_section("source") {
        let zeta_entry = doc.get("source", "zeta").ok_or_else(|| Error::MissingKey("zeta".into()))?;
        let zeta = doc.integer(zeta_entry)?;
        let kind = SourceKind::from_zeta(zeta as i64)
            .ok_or_else(|| doc.parse_err(zeta_entry, format!("zeta must be 1 or 2, got {zeta}")))?;
        Some(SourceParams::new(
            doc.required("source", "F_s", Dim::Force, false)?,
            doc.required("source", "t0", Dim::Time, false)?,
            doc.required("source", "t_s", Dim::Time, false)?,
            kind,
            doc.required("source", "x_f", Dim::Length, false)?,
            string.length,
        )?)
    } else {
        None
    };

    let experiment = match doc.get("experiment", "name") {
        None => ExperimentKind::Waveforms,
        Some(e) => ExperimentKind::from_name(&e.value)
            .ok_or_else(|| doc.parse_err(e, format!("unknown experiment `{}`", e.value)))?,
    };

    Ok(RunConfig {
        string,
        sim,
        source,
        experiment,
    })
}

impl RunConfig {
    /// Parses config text; `path` is only used in error messages.
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        Self::parse_with_overrides(text, path, &[])
    }

    /// Parses config text and then applies `section.key=value` overrides.
    pub fn parse_with_overrides(text: &str, path: &str, overrides: &[String]) -> Result<Self> {
        let mut doc = parse_doc(text, path)?;
        for o in overrides {
            let bad = |message: String| Error::Parse {
                path: "<override>".into(),
                line: 0,
                message,
            };
            let (lhs, value) = o
                .split_once('=')
                .ok_or_else(|| bad(format!("override `{o}` is not key=value")))?;
            let (section, key) = lhs
                .trim()
                .split_once('.')
                .ok_or_else(|| bad(format!("override key `{lhs}` must be section.key")))?;
            check_key("<override>", 0, section, key)?;
            doc.entries.retain(|e| !(e.section == section && e.key == key));
            doc.entries.push(Entry {
                section: section.into(),
                key: key.into(),
                value: value.trim().into(),
                line: 0,
            });
        }
        build(&doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with_overrides(path, &[])
    }

    pub fn load_with_overrides(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_with_overrides(&text, &path.display().to_string(), overrides)
    }

    /// Serialises back to the config format. Values use round-trip float formatting.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let s = &self.string;
        let _ = writeln!(out, "[string]");
        let _ = writeln!(out, "rho = {}", s.rho);
        let _ = writeln!(out, "E = {}", s.young);
        let _ = writeln!(out, "T0 = {}", s.tension);
        let _ = writeln!(out, "L = {} m", s.length);
        let _ = writeln!(out, "r = {} m", s.radius);
        let _ = writeln!(out, "sigma0_u = {}", s.sigma0_u);
        let _ = writeln!(out, "sigma0_v = {}", s.sigma0_v);
        let _ = writeln!(out, "sigma1_u = {}", s.sigma1_u);

        let c = &self.sim;
        let onoff = |b: bool| if b { "on" } else { "off" };
        let theta = |t: Theta| match t {
            Theta::Value(v) => v.to_string(),
            Theta::Auto => "auto".into(),
            Theta::Literal => "literal".into(),
        };
        let _ = writeln!(out, "\n[sim]");
        let _ = writeln!(out, "fs = {} Hz", c.base_rate);
        let _ = writeln!(out, "oversampling = {}", c.oversampling);
        let _ = match c.grid {
            GridRule::Stability { safety } => writeln!(out, "h_safety = {safety}"),
            GridRule::Intervals(n) => writeln!(out, "intervals = {n}"),
            GridRule::WaveSpeed { factor } => writeln!(out, "h_wave = {factor}"),
        };
        let _ = writeln!(out, "theta_u = {}", theta(c.theta_u));
        let _ = writeln!(out, "theta_v = {}", theta(c.theta_v));
        let _ = match c.mode_rule {
            ModeRule::LongitudinalCfl => writeln!(out, "modes = cfl"),
            ModeRule::ThetaStability => writeln!(out, "modes = theta"),
            ModeRule::Transverse => writeln!(out, "modes = transverse"),
            ModeRule::Fixed(n) => writeln!(out, "modes = {n}"),
        };
        let _ = writeln!(
            out,
            "lambda = {}",
            match c.lambda {
                LambdaKind::Discrete => "discrete",
                LambdaKind::Continuous => "continuous",
            }
        );
        let _ = writeln!(out, "stiffness = {}", onoff(c.stiffness_on));
        let _ = writeln!(out, "losses = {}", onoff(c.losses_on));
        let _ = writeln!(out, "nonlinear = {}", onoff(c.nonlinear_on));
        let _ = writeln!(out, "frozen_g = {}", onoff(c.frozen_g));
        let _ = writeln!(out, "T_end = {} s", c.duration);
        let _ = writeln!(out, "x_o = {} m", c.output_position);
        if !c.snapshot_times.is_empty() {
            let times: Vec<String> = c.snapshot_times.iter().map(|t| format!("{t} s")).collect();
            let _ = writeln!(out, "snapshots = {}", times.join(", "));
        }

        let _ = writeln!(out, "\n[initial]");
        let component = match c.initial.component {
            Component::Transverse => "transverse",
            Component::Longitudinal => "longitudinal",
        };
        match c.initial.shape {
            InitialShape::Zero => {
                let _ = writeln!(out, "shape = zero");
            }
            InitialShape::RaisedCosine { amplitude, width } | InitialShape::Gaussian { amplitude, width } => {
                let name = if matches!(c.initial.shape, InitialShape::Gaussian { .. }) {
                    "gaussian"
                } else {
                    "raised_cosine"
                };
                let _ = writeln!(out, "shape = {name}");
                let _ = writeln!(out, "amplitude = {amplitude} m");
                let _ = writeln!(out, "width = {width}");
            }
        }
        let _ = writeln!(out, "component = {component}");

        if let Some(src) = &self.source {
            let _ = writeln!(out, "\n[source]");
            let _ = writeln!(out, "F_s = {}", src.peak_force);
            let _ = writeln!(out, "t0 = {} s", src.onset);
            let _ = writeln!(out, "t_s = {} s", src.duration);
            let _ = writeln!(out, "zeta = {}", src.kind.zeta() as i64);
            let _ = writeln!(out, "x_f = {} m", src.position);
        }

        let _ = writeln!(out, "\n[experiment]");
        let _ = writeln!(out, "name = {}", self.experiment.name());
        out
    }
}
