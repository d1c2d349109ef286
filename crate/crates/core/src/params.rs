//! Physical parameters of the string, the excitation, and the run settings.
//!
//! Everything is stored in SI units. Constructors validate the admissible
//! regime and populate the derived constants once.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative slack allowed when checking `EA >= T0`, so that a string built
/// with `E = T0 / A` (no nonlinearity) is not rejected by rounding.
const EA_SLACK: f64 = 1e-12;

/// Raw physical description of a circular string, before validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawStringParams {
    /// Volume density (kg/m^3).
    pub rho: f64,
    /// Young's modulus (Pa).
    pub young: f64,
    /// Applied tension (N).
    pub tension: f64,
    /// Length (m).
    pub length: f64,
    /// Radius (m).
    pub radius: f64,
    /// Frequency-independent transverse loss (1/s).
    pub sigma0_u: f64,
    /// Frequency-independent longitudinal loss (1/s).
    pub sigma0_v: f64,
    /// Frequency-dependent transverse loss (m^2/s).
    pub sigma1_u: f64,
}

impl RawStringParams {
    /// The lossless string used throughout the snapshot and dispersion studies.
    pub fn steel_r02_t50() -> Self {
        RawStringParams {
            rho: 8000.0,
            young: 2e11,
            tension: 50.0,
            length: 1.0,
            radius: 0.2e-3,
            sigma0_u: 0.0,
            sigma0_v: 0.0,
            sigma1_u: 0.0,
        }
    }

    /// The lossy string of the struck/plucked experiments.
    pub fn steel_r029_t40() -> Self {
        RawStringParams {
            rho: 8000.0,
            young: 2e11,
            tension: 40.0,
            length: 1.0,
            radius: 0.29e-3,
            sigma0_u: 0.1,
            sigma0_v: 0.2,
            sigma1_u: 4e-4,
        }
    }
}

/// Validated string parameters with derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StringParams {
    pub rho: f64,
    pub young: f64,
    pub tension: f64,
    pub length: f64,
    pub radius: f64,
    pub sigma0_u: f64,
    pub sigma0_v: f64,
    pub sigma1_u: f64,
    /// Cross-section area `pi r^2` (m^2).
    pub area: f64,
    /// Area moment of inertia `pi r^4 / 4` (m^4). Zeroed by [`StringParams::without_stiffness`].
    pub inertia: f64,
}

impl StringParams {
    pub fn new(raw: RawStringParams) -> Result<Self> {
        let positive = [
            ("rho", raw.rho),
            ("E", raw.young),
            ("T0", raw.tension),
            ("L", raw.length),
            ("r", raw.radius),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InadmissibleParams(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        let losses = [
            ("sigma0_u", raw.sigma0_u),
            ("sigma0_v", raw.sigma0_v),
            ("sigma1_u", raw.sigma1_u),
        ];
        for (name, value) in losses {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InadmissibleParams(format!(
                    "{name} must be non-negative, got {value}"
                )));
            }
        }
        let area = PI * raw.radius * raw.radius;
        let inertia = PI * raw.radius.powi(4) / 4.0;
        let ea = raw.young * area;
        if ea < raw.tension * (1.0 - EA_SLACK) {
            return Err(Error::InadmissibleParams(format!(
                "EA = {ea} N is below T0 = {} N; the nonlinear potential would be negative",
                raw.tension
            )));
        }
        let params = StringParams {
            rho: raw.rho,
            young: raw.young,
            tension: raw.tension,
            length: raw.length,
            radius: raw.radius,
            sigma0_u: raw.sigma0_u,
            sigma0_v: raw.sigma0_v,
            sigma1_u: raw.sigma1_u,
            area,
            inertia,
        };
        if ea > raw.tension * (1.0 + 1e-9) {
            debug_assert!(params.c_v() > params.c_u());
        }
        Ok(params)
    }

    /// Linear mass density `rho A` (kg/m).
    pub fn rho_a(&self) -> f64 {
        self.rho * self.area
    }

    /// Axial stiffness `E A` (N).
    pub fn ea(&self) -> f64 {
        self.young * self.area
    }

    /// Bending stiffness `E I` (N m^2).
    pub fn ei(&self) -> f64 {
        self.young * self.inertia
    }

    /// `EA - T0`, clamped at zero (N).
    pub fn nonlinear_coeff(&self) -> f64 {
        (self.ea() - self.tension).max(0.0)
    }

    /// Transverse wave speed `sqrt(T0 / rho A)` (m/s).
    pub fn c_u(&self) -> f64 {
        (self.tension / self.rho_a()).sqrt()
    }

    /// Longitudinal wave speed `sqrt(E / rho)` (m/s).
    pub fn c_v(&self) -> f64 {
        (self.young / self.rho).sqrt()
    }

    /// Same string with the bending term removed (`I = 0`).
    pub fn without_stiffness(mut self) -> Self {
        self.inertia = 0.0;
        self
    }

    /// Same string with every loss coefficient set to zero.
    pub fn without_losses(mut self) -> Self {
        self.sigma0_u = 0.0;
        self.sigma0_v = 0.0;
        self.sigma1_u = 0.0;
        self
    }
}

/// Excitation shape: half raised cosine (pluck) or raised cosine (strike).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Pluck,
    Strike,
}

impl SourceKind {
    /// The integer exponent multiplying `pi` inside the cosine.
    pub fn zeta(self) -> f64 {
        match self {
            SourceKind::Pluck => 1.0,
            SourceKind::Strike => 2.0,
        }
    }

    pub fn from_zeta(zeta: i64) -> Option<Self> {
        match zeta {
            1 => Some(SourceKind::Pluck),
            2 => Some(SourceKind::Strike),
            _ => None,
        }
    }
}

/// Pointwise force applied at `x_f` over a finite contact window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    /// Peak force (N).
    pub peak_force: f64,
    /// Onset time (s).
    pub onset: f64,
    /// Contact duration (s).
    pub duration: f64,
    pub kind: SourceKind,
    /// Contact abscissa (m).
    pub position: f64,
}

impl SourceParams {
    pub fn new(
        peak_force: f64,
        onset: f64,
        duration: f64,
        kind: SourceKind,
        position: f64,
        length: f64,
    ) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InadmissibleParams(format!(
                "contact duration must be positive, got {duration}"
            )));
        }
        if !(peak_force >= 0.0 && peak_force.is_finite()) {
            return Err(Error::InadmissibleParams(format!(
                "peak force must be non-negative, got {peak_force}"
            )));
        }
        if !(onset >= 0.0 && onset.is_finite()) {
            return Err(Error::InadmissibleParams(format!(
                "onset must be non-negative, got {onset}"
            )));
        }
        if !(position > 0.0 && position < length) {
            return Err(Error::InadmissibleParams(format!(
                "contact point {position} m must lie strictly inside (0, {length})"
            )));
        }
        Ok(SourceParams {
            peak_force,
            onset,
            duration,
            kind,
            position,
        })
    }

    /// End of the contact window (s).
    pub fn end(&self) -> f64 {
        self.onset + self.duration
    }
}

/// A free dispersion parameter: either a fixed value or resolved from the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Theta {
    Value(f64),
    Auto,
    /// Longitudinal only: the literal closed form `1 + 2(T0 - EA) / (7 rho A)`.
    Literal,
}

/// Which bound selects the number of longitudinal modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeRule {
    /// Longitudinal-CFL count `(2L / pi k) sqrt(rho / E)`.
    LongitudinalCfl,
    /// Energy bound including theta_v, `(2L / pi k) sqrt(rho A / (2(1 - theta_v) rho A + T0))`.
    ThetaStability,
    /// Transverse bound `(2L / pi k) sqrt(rho A / T0)`.
    Transverse,
    Fixed(usize),
}

/// Modal eigenvalues: exact discrete ones or the continuous `nu^2 pi^2 / L^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaKind {
    Discrete,
    Continuous,
}

/// How the transverse grid spacing is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridRule {
    /// `h = safety * h0(theta_u)`, then snapped down to `L / N`.
    Stability { safety: f64 },
    /// Fixed number of subintervals.
    Intervals(usize),
    /// `h = factor * c_u * k`, snapped down to `L / N`.
    WaveSpeed { factor: f64 },
}

/// Initial displacement profile, applied either transversely or longitudinally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialShape {
    Zero,
    /// `amp/2 (1 + cos(pi (x - L/2) / (width L)))` on `|x - L/2| <= width L`.
    RaisedCosine { amplitude: f64, width: f64 },
    /// `amp exp(-(x/L - 1/2)^2 / (2 width^2))`.
    Gaussian { amplitude: f64, width: f64 },
}

impl InitialShape {
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match *self {
            InitialShape::Zero => 0.0,
            InitialShape::RaisedCosine { amplitude, width } => {
                let half = width * length;
                let d = x - 0.5 * length;
                if d.abs() <= half {
                    0.5 * amplitude * (1.0 + (PI * d / half).cos())
                } else {
                    0.0
                }
            }
            InitialShape::Gaussian { amplitude, width } => {
                let z = x / length - 0.5;
                amplitude * (-(z * z) / (2.0 * width * width)).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Transverse,
    Longitudinal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    pub shape: InitialShape,
    pub component: Component,
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition {
            shape: InitialShape::Zero,
            component: Component::Transverse,
        }
    }
}

/// Simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Base sample rate (Hz).
    pub base_rate: f64,
    pub oversampling: u32,
    pub grid: GridRule,
    pub theta_u: Theta,
    pub theta_v: Theta,
    pub mode_rule: ModeRule,
    pub lambda: LambdaKind,
    pub stiffness_on: bool,
    pub losses_on: bool,
    /// Keeps the coupling to the auxiliary variable; off gives the linear stiff string.
    pub nonlinear_on: bool,
    /// Evaluate the update matrix once from the initial state and reuse it.
    pub frozen_g: bool,
    /// Run length (s).
    pub duration: f64,
    /// Transverse and longitudinal output abscissa (m).
    pub output_position: f64,
    pub initial: InitialCondition,
    /// Times (s) at which full transverse frames are recorded.
    pub snapshot_times: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            base_rate: 48_000.0,
            oversampling: 1,
            grid: GridRule::Stability { safety: 1.05 },
            theta_u: Theta::Value(1.0),
            theta_v: Theta::Value(1.0),
            mode_rule: ModeRule::LongitudinalCfl,
            lambda: LambdaKind::Discrete,
            stiffness_on: true,
            losses_on: true,
            nonlinear_on: true,
            frozen_g: false,
            duration: 1.0,
            output_position: 0.32,
            initial: InitialCondition::default(),
            snapshot_times: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn sample_rate(&self) -> f64 {
        self.base_rate * f64::from(self.oversampling)
    }

    /// Time step `1 / (oversampling * f_s0)`.
    pub fn time_step(&self) -> f64 {
        1.0 / self.sample_rate()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_rate > 0.0 && self.base_rate.is_finite()) {
            return Err(Error::InadmissibleParams(format!(
                "sample rate must be positive, got {}",
                self.base_rate
            )));
        }
        if self.oversampling == 0 {
            return Err(Error::InadmissibleParams(
                "oversampling must be a positive integer".into(),
            ));
        }
        match self.grid {
            GridRule::Stability { safety } if !(safety >= 1.0 && safety.is_finite()) => {
                return Err(Error::InadmissibleParams(format!(
                    "grid safety factor must be >= 1, got {safety}"
                )));
            }
            GridRule::WaveSpeed { factor } if !(factor > 0.0 && factor.is_finite()) => {
                return Err(Error::InadmissibleParams(format!(
                    "grid wave-speed factor must be positive, got {factor}"
                )));
            }
            GridRule::Intervals(n) if n < 3 => return Err(Error::DimensionTooSmall(n)),
            _ => {}
        }
        if let Theta::Value(t) = self.theta_u {
            if !(t > 0.5) {
                return Err(Error::ThetaOutOfRange(t));
            }
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InadmissibleParams(format!(
                "duration must be non-negative, got {}",
                self.duration
            )));
        }
        Ok(())
    }
}
