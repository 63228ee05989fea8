//! Biomass/toxin plant: parameters, pulse-wave removal input, equilibria and
//! the dimensionless change of variables.
//!
//! Dimensional model with removal rate `u >= 0`:
//!
//! ```text
//! dB/dt = g B (1 - B/b_max) - d B - s B T
//! dT/dt = c (d B + s B T) - k T - u
//! ```
//!
//! Dimensionless variables: `B~ = B/b_max`, `T~ = k T / (c d b_max)`,
//! `t~ = g t`, with groups `alpha = d/g`, `beta = c s b_max / k`,
//! `kappa = k/g`.

use serde::{Deserialize, Serialize};

use crate::error::{PsnfError, Result};

/// Rate constants of the plant. Construct through [`PlantParams::new`] to
/// enforce positivity and `g > d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Growth rate without toxin, 1/month.
    pub g: f64,
    /// Carrying capacity, kg/cm^2.
    pub b_max: f64,
    /// Natural death rate, 1/month.
    pub d: f64,
    /// Toxin sensitivity, cm^2/(kg month).
    pub s: f64,
    /// Toxin production rate, dimensionless.
    pub c: f64,
    /// Toxin decay rate, 1/month.
    pub k: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self::nominal()
    }
}

impl PlantParams {
    /// Field-calibrated nominal values.
    pub const fn nominal() -> Self {
        Self {
            g: 0.5,
            b_max: 1.0,
            d: 0.015,
            s: 0.15,
            c: 0.5,
            k: 0.05,
        }
    }

    pub fn new(g: f64, b_max: f64, d: f64, s: f64, c: f64, k: f64) -> Result<Self> {
        let p = Self {
            g,
            b_max,
            d,
            s,
            c,
            k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named_fields() {
            if !(v.is_finite() && v > 0.0) {
                return Err(PsnfError::InvalidParameter(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        if self.g <= self.d {
            return Err(PsnfError::InvalidParameter(format!(
                "growth rate g = {} must exceed death rate d = {}",
                self.g, self.d
            )));
        }
        Ok(())
    }

    pub fn named_fields(&self) -> [(&'static str, f64); 6] {
        [
            ("g", self.g),
            ("b_max", self.b_max),
            ("d", self.d),
            ("s", self.s),
            ("c", self.c),
            ("k", self.k),
        ]
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.g, self.b_max, self.d, self.s, self.c, self.k]
    }

    /// Unchecked construction from `[g, b_max, d, s, c, k]`.
    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            g: a[0],
            b_max: a[1],
            d: a[2],
            s: a[3],
            c: a[4],
            k: a[5],
        }
    }

    pub fn alpha(&self) -> f64 {
        self.d / self.g
    }

    pub fn beta(&self) -> f64 {
        self.c * self.s * self.b_max / self.k
    }

    pub fn kappa(&self) -> f64 {
        self.k / self.g
    }

    /// Discriminant `sqrt((beta - 1)^2 + 4 alpha beta)` of the equilibrium.
    pub fn discriminant(&self) -> f64 {
        let (a, b) = (self.alpha(), self.beta());
        ((b - 1.0).powi(2) + 4.0 * a * b).sqrt()
    }

    /// Toxin scale `c d b_max / k` mapping `T~` back to kg/cm^2.
    pub fn toxin_scale(&self) -> f64 {
        self.c * self.d * self.b_max / self.k
    }

    /// Converts a removal amplitude expressed per unit of dimensionless time
    /// into a physical rate in 1/month.
    pub fn physical_gamma(&self, gamma_dimensionless: f64) -> f64 {
        gamma_dimensionless * self.g
    }
}

/// Plant state in kg/cm^2.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub b: f64,
    pub t: f64,
}

impl State {
    pub const ORIGIN: State = State { b: 0.0, t: 0.0 };

    pub fn new(b: f64, t: f64) -> Self {
        Self { b, t }
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.t.is_finite()
    }
}

/// State in dimensionless coordinates `(B~, T~)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DimensionlessState {
    pub b: f64,
    pub t: f64,
}

/// Periodic on/off removal input. The on-phase occupies `[mP, mP + D P)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseWave {
    /// Period in months.
    pub period: f64,
    /// Duty-cycle in `[0, 1]`.
    pub duty: f64,
    /// Removal-rate amplitude applied while on, 1/month.
    pub gamma: f64,
}

impl PulseWave {
    /// Builds a wave; `duty` is clamped to `[0, 1]`.
    pub fn new(period: f64, duty: f64, gamma: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(PsnfError::InvalidParameter(format!(
                "period must be positive, got {period}"
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(PsnfError::InvalidParameter(format!(
                "gamma must be non-negative, got {gamma}"
            )));
        }
        if duty.is_nan() {
            return Err(PsnfError::InvalidParameter("duty is NaN".into()));
        }
        Ok(Self {
            period,
            duty: duty.clamp(0.0, 1.0),
            gamma,
        })
    }

    pub fn with_duty(self, duty: f64) -> Self {
        Self {
            duty: duty.clamp(0.0, 1.0),
            ..self
        }
    }

    pub fn pulse_value(&self, time: f64) -> u8 {
        pulse_value(self, time)
    }

    /// Removal rate `gamma * s_q(t/P) * T`.
    pub fn removal(&self, time: f64, toxin: f64) -> f64 {
        self.gamma * f64::from(self.pulse_value(time)) * toxin
    }
}

/// Unit pulse: 1 iff `(time mod period) < duty * period`.
pub fn pulse_value(wave: &PulseWave, time: f64) -> u8 {
    if wave.duty <= 0.0 {
        return 0;
    }
    if wave.duty >= 1.0 {
        return 1;
    }
    let phase = time.rem_euclid(wave.period);
    u8::from(phase < wave.duty * wave.period)
}

/// Right-hand side of the controlled plant; `u` is the removal rate.
pub fn vector_field(p: &PlantParams, x: State, u: f64) -> (f64, f64) {
    let State { b, t } = x;
    let db = p.g * b * (1.0 - b / p.b_max) - p.d * b - p.s * b * t;
    let dt = p.c * (p.d * b + p.s * b * t) - p.k * t - u;
    (db, dt)
}

/// Jacobian of the uncontrolled vector field at `x`.
pub fn jacobian(p: &PlantParams, x: State) -> [[f64; 2]; 2] {
    let State { b, t } = x;
    [
        [p.g - 2.0 * p.g * b / p.b_max - p.d - p.s * t, -p.s * b],
        [p.c * (p.d + p.s * t), p.c * p.s * b - p.k],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibria {
    pub origin: State,
    pub coexistence: State,
    /// Coexistence point in dimensionless coordinates.
    pub coexistence_dimensionless: DimensionlessState,
}

pub fn equilibria(p: &PlantParams) -> Equilibria {
    let (alpha, beta) = (p.alpha(), p.beta());
    let gamma = p.discriminant();
    let dimless = DimensionlessState {
        b: (1.0 + beta - gamma) / (2.0 * beta),
        t: (beta - 1.0 - 2.0 * alpha * beta + gamma) / (2.0 * alpha * beta * beta),
    };
    Equilibria {
        origin: State::ORIGIN,
        coexistence: dimensionalize(p, dimless),
        coexistence_dimensionless: dimless,
    }
}

/// Biomass reached if the toxin were removed completely.
pub fn ideal_biomass(p: &PlantParams) -> f64 {
    p.b_max / p.g * (p.g - p.d)
}

pub fn nondimensionalize(p: &PlantParams, x: State) -> DimensionlessState {
    DimensionlessState {
        b: x.b / p.b_max,
        t: x.t / p.toxin_scale(),
    }
}

pub fn dimensionalize(p: &PlantParams, x: DimensionlessState) -> State {
    State {
        b: x.b * p.b_max,
        t: x.t * p.toxin_scale(),
    }
}

pub fn nondimensionalize_time(p: &PlantParams, t: f64) -> f64 {
    p.g * t
}

pub fn dimensionalize_time(p: &PlantParams, t: f64) -> f64 {
    t / p.g
}
