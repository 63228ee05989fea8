//! Period-averaged model and the feedforward duty-cycle design built on it.
//!
//! In dimensionless variables the averaged dynamics read
//!
//! ```text
//! db/dtau = eps [ b (1 - b) - alpha b - alpha beta b t ]
//! dt/dtau = eps [ kappa b + beta kappa b t - kappa t - gamma D t ]
//! ```
//!
//! with `eps = P` and `tau = t~ / P`. Here `gamma` is the removal amplitude
//! per unit of dimensionless time, so the plant sees a physical rate of
//! `gamma * g` (see [`PlantParams::physical_gamma`]). With
//! `eta = gamma D / kappa` the positive equilibrium is
//!
//! ```text
//! b* = [beta + 1 + eta - sqrt((beta - 1 - eta)^2 + 4 alpha beta (1 + eta))] / (2 beta)
//! ```

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{PsnfError, Result};
use crate::model::{equilibria, PlantParams};

/// Default dimensionless removal amplitude.
pub const DEFAULT_GAMMA: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedState {
    /// Period-averaged dimensionless biomass.
    pub b_av: f64,
    /// Period-averaged dimensionless toxin.
    pub t_av: f64,
    /// Small parameter, equal to the period.
    pub epsilon: f64,
}

/// Derivatives of the averaged model with respect to slow time.
pub fn averaged_vector_field(
    p: &PlantParams,
    gamma: f64,
    duty: f64,
    x: AveragedState,
) -> (f64, f64) {
    let (alpha, beta, kappa) = (p.alpha(), p.beta(), p.kappa());
    let AveragedState {
        b_av: b,
        t_av: t,
        epsilon,
    } = x;
    (
        epsilon * (b * (1.0 - b) - alpha * b - alpha * beta * b * t),
        epsilon * (kappa * b + beta * kappa * b * t - kappa * t - gamma * duty * t),
    )
}

fn equilibrium_from_eta(p: &PlantParams, eta: f64) -> f64 {
    let (alpha, beta) = (p.alpha(), p.beta());
    let root = ((beta - 1.0 - eta).powi(2) + 4.0 * alpha * beta * (1.0 + eta)).sqrt();
    (beta + 1.0 + eta - root) / (2.0 * beta)
}

/// Effective removal group `eta = gamma D / kappa`.
pub fn removal_group(p: &PlantParams, gamma: f64, duty: f64) -> f64 {
    gamma * duty / p.kappa()
}

/// Dimensionless biomass at the positive equilibrium of the averaged model.
pub fn averaged_equilibrium(p: &PlantParams, gamma: f64, duty: f64) -> f64 {
    equilibrium_from_eta(p, removal_group(p, gamma, duty))
}

/// Toxin coordinate matching [`averaged_equilibrium`], from `db/dtau = 0`.
pub fn averaged_equilibrium_toxin(p: &PlantParams, gamma: f64, duty: f64) -> f64 {
    let b = averaged_equilibrium(p, gamma, duty);
    (1.0 - b - p.alpha()) / (p.alpha() * p.beta())
}

/// Small-`alpha` approximation of the averaged equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxEquilibrium {
    pub value: f64,
    /// False on the branch where the `alpha -> 0` limit saturates at 1.
    pub valid: bool,
}

pub fn approx_equilibrium(p: &PlantParams, gamma: f64, duty: f64) -> ApproxEquilibrium {
    let beta = p.beta();
    let eta = removal_group(p, gamma, duty);
    ApproxEquilibrium {
        value: 1.0 / beta + gamma / (p.kappa() * beta) * duty,
        valid: eta < beta - 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedforwardDuty {
    /// Duty-cycle clamped to `[0, 1]`.
    pub duty: f64,
    /// Removal group that places the averaged equilibrium on the target.
    pub eta: f64,
    /// Set when the exact duty exceeds 1 for this amplitude.
    pub saturated: bool,
}

/// Duty-cycle whose averaged equilibrium equals `target` (dimensionless).
///
/// Solved in closed form: with `a = beta + 1 - 2 beta y` the equilibrium
/// condition squares to a linear equation in `eta`. The closed form is kept
/// only when the un-squared sign condition `a + eta >= 0` holds; otherwise
/// the equilibrium is bisected in `eta`.
pub fn invert_feedforward(p: &PlantParams, gamma: f64, target: f64) -> Result<FeedforwardDuty> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(PsnfError::InvalidParameter(format!(
            "feedforward inversion needs gamma > 0, got {gamma}"
        )));
    }
    if !target.is_finite() {
        return Err(PsnfError::InvalidParameter(format!(
            "target {target} is not finite"
        )));
    }
    let floor = equilibria(p).coexistence_dimensionless.b;
    let ceiling = 1.0 - p.alpha();
    if target < floor - 1e-12 {
        return Err(PsnfError::InfeasibleTarget { target, floor });
    }
    if target >= ceiling {
        return Err(PsnfError::UnreachableTarget { target, ceiling });
    }
    let eta = solve_eta(p, target).max(0.0);
    let exact = p.kappa() * eta / gamma;
    let saturated = exact > 1.0;
    Ok(FeedforwardDuty {
        duty: exact.clamp(0.0, 1.0),
        eta,
        saturated,
    })
}

fn solve_eta(p: &PlantParams, y: f64) -> f64 {
    let (alpha, beta) = (p.alpha(), p.beta());
    let a = beta + 1.0 - 2.0 * beta * y;
    let num = (beta - 1.0).powi(2) + 4.0 * alpha * beta - a * a;
    let den = 2.0 * a + 2.0 * (beta - 1.0) - 4.0 * alpha * beta;
    let eta = num / den;
    if eta.is_finite()
        && a + eta >= 0.0
        && (equilibrium_from_eta(p, eta.max(0.0)) - y).abs() <= 1e-9
    {
        return eta;
    }
    bisect_eta(p, y)
}

fn bisect_eta(p: &PlantParams, y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1e3_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if equilibrium_from_eta(p, mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Sampled averaged equilibrium over a uniform duty grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedforwardCurve {
    pub duties: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn tabulate_feedforward_curve(
    p: &PlantParams,
    gamma: f64,
    n_points: usize,
) -> Result<FeedforwardCurve> {
    if n_points < 2 {
        return Err(PsnfError::InvalidParameter(format!(
            "curve needs at least 2 points, got {n_points}"
        )));
    }
    let last = (n_points - 1) as f64;
    let duties: Vec<f64> = (0..n_points).map(|i| i as f64 / last).collect();
    let values = duties
        .iter()
        .map(|&d| averaged_equilibrium(p, gamma, d))
        .collect();
    Ok(FeedforwardCurve { duties, values })
}

impl FeedforwardCurve {
    /// Inverse piecewise-linear lookup; `None` outside the tabulated range.
    pub fn lookup(&self, target: f64) -> Option<f64> {
        let first = *self.values.first()?;
        let last = *self.values.last()?;
        if target < first || target > last {
            return None;
        }
        let i = self.values.partition_point(|&v| v < target);
        if i == 0 {
            return Some(self.duties[0]);
        }
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        let (d0, d1) = (self.duties[i - 1], self.duties[i]);
        if v1 == v0 {
            return Some(d0);
        }
        Some(d0 + (target - v0) / (v1 - v0) * (d1 - d0))
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "D,B_av_star")?;
        for (d, v) in self.duties.iter().zip(&self.values) {
            writeln!(w, "{d:?},{v:?}")?;
        }
        Ok(())
    }
}

/// Lower bound on the physical product `gamma D` (1/month) that keeps the
/// averaged biomass within `delta` of the toxin-free value.
pub fn open_loop_condition(p: &PlantParams, delta: f64) -> f64 {
    let csb = p.c * p.s * p.b_max;
    -delta * csb - p.k + csb * p.b_max * (p.g - p.d) / p.g
}
