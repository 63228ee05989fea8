//! Closed-loop performance metrics computed from a sampled trajectory.
//!
//! All integrals use the trapezoidal rule on the trajectory samples. The
//! moving average `B_MA(t)` (width one period) is evaluated at every sample
//! with `t >= P`, and the relative error is `e_MA = (B_MA - B_ref) / B_ref`.

use serde::{Deserialize, Serialize};

use crate::error::{PsnfError, Result};
use crate::integrator::Trajectory;
use crate::model::State;

/// Settling band used by the reported settling time.
pub const DEFAULT_BAND: f64 = 0.10;

/// Periods averaged for the steady-state error.
pub const TAIL_PERIODS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DutyRecord {
    pub period_index: usize,
    /// Duty applied over `[iP, (i+1)P]`.
    pub duty: f64,
    /// `B_ref - mean(B)` measured over that same period.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub e_r_percent: f64,
    /// `None` when the moving average never stays inside the band.
    pub settling_periods: Option<u32>,
    pub d_max: f64,
    pub ise: f64,
    pub itae: f64,
    pub duty_history: Vec<DutyRecord>,
    pub final_state: State,
    pub clamp_events: usize,
}

pub fn write_duty_csv<W: std::io::Write>(history: &[DutyRecord], mut w: W) -> Result<()> {
    writeln!(w, "period_index,duty,error")?;
    for r in history {
        writeln!(w, "{},{:?},{:?}", r.period_index, r.duty, r.error)?;
    }
    Ok(())
}

fn check_reference(b_ref: f64) -> Result<()> {
    if !(b_ref.is_finite() && b_ref > 0.0) {
        return Err(PsnfError::InvalidParameter(format!(
            "reference must be positive, got {b_ref}"
        )));
    }
    Ok(())
}

/// Relative deviation in percent of the mean biomass over the last five of
/// `n_periods` periods.
pub fn steady_state_error_percent(traj: &Trajectory, b_ref: f64, n_periods: usize) -> Result<f64> {
    check_reference(b_ref)?;
    if n_periods < TAIL_PERIODS {
        return Err(PsnfError::InvalidParameter(format!(
            "steady-state error needs at least {TAIL_PERIODS} periods, got {n_periods}"
        )));
    }
    let p = traj.period;
    let t0 = traj.start_time();
    let (a, b) = (
        t0 + (n_periods - TAIL_PERIODS) as f64 * p,
        t0 + n_periods as f64 * p,
    );
    let mean = traj.integrate_biomass(a, b)? / (b - a);
    Ok(((mean - b_ref) / b_ref).abs() * 100.0)
}

/// `(t, B_MA(t))` at every sample with `t >= start + P`.
pub fn moving_average_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    let p = traj.period;
    let cum = traj.cumulative_biomass();
    let first = traj.start_time() + p;
    let tol = 1e-9 * p;
    let mut out = Vec::new();
    // `lag` tracks the sample interval that contains t - P
    let mut lag = 0usize;
    for (i, &t) in traj.times.iter().enumerate() {
        if t < first - tol {
            continue;
        }
        let back = (t - p).max(traj.start_time());
        while lag + 1 < traj.len() && traj.times[lag + 1] <= back {
            lag += 1;
        }
        let cum_back = if lag + 1 < traj.len() && traj.times[lag] < back {
            let (ta, tb) = (traj.times[lag], traj.times[lag + 1]);
            let (ba, bb) = (traj.states[lag].b, traj.states[lag + 1].b);
            let bx = ba + (back - ta) / (tb - ta) * (bb - ba);
            cum[lag] + 0.5 * (back - ta) * (ba + bx)
        } else {
            cum[lag]
        };
        out.push((t, (cum[i] - cum_back) / p));
    }
    out
}

/// Settling in periods: `ceil(T_s / P)` where `T_s` is the earliest sample
/// time `>= P` after which the moving average never leaves the band
/// `|B_MA - B_ref| <= band * B_ref`.
pub fn settling_periods(traj: &Trajectory, b_ref: f64, band: f64) -> Option<u32> {
    let series = moving_average_series(traj);
    let inside = |v: f64| (v - b_ref).abs() <= band * b_ref;
    let settle_time = match series.iter().rposition(|&(_, v)| !inside(v)) {
        None => series.first()?.0,
        Some(k) if k + 1 == series.len() => return None,
        Some(k) => series[k + 1].0,
    };
    let periods = ((settle_time - traj.start_time()) / traj.period - 1e-9).ceil();
    Some((periods as u32).max(1))
}

pub fn max_duty(history: &[f64]) -> Result<f64> {
    history
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(PsnfError::EmptyHistory)
}

fn error_integral<F: Fn(f64, f64) -> f64>(
    traj: &Trajectory,
    b_ref: f64,
    t0: f64,
    tf: f64,
    weight: F,
) -> Result<f64> {
    check_reference(b_ref)?;
    let tol = 1e-9 * traj.period;
    if t0 < traj.start_time() + traj.period - tol || tf > traj.end_time() + tol || tf < t0 {
        return Err(PsnfError::OutOfRange {
            start: t0,
            end: tf,
            span_start: traj.start_time() + traj.period,
            span_end: traj.end_time(),
        });
    }
    let pts: Vec<(f64, f64)> = moving_average_series(traj)
        .into_iter()
        .filter(|&(t, _)| t >= t0 - tol && t <= tf + tol)
        .map(|(t, v)| (t, weight(t, (v - b_ref) / b_ref)))
        .collect();
    Ok(pts
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum())
}

/// Integral of the squared relative moving-average error over `[t0, tf]`.
pub fn ise(traj: &Trajectory, b_ref: f64, t0: f64, tf: f64) -> Result<f64> {
    error_integral(traj, b_ref, t0, tf, |_, e| e * e)
}

/// Integral of `t |e_MA(t)|` over `[t0, tf]`.
pub fn itae(traj: &Trajectory, b_ref: f64, t0: f64, tf: f64) -> Result<f64> {
    error_integral(traj, b_ref, t0, tf, |t, e| t * e.abs())
}

/// Computes every metric for a run of `n_periods` periods starting at the
/// trajectory's first sample.
pub fn build_report(
    traj: &Trajectory,
    b_ref: f64,
    n_periods: usize,
    duty_history: Vec<DutyRecord>,
) -> Result<RunReport> {
    let p = traj.period;
    let t0 = traj.start_time();
    let duties: Vec<f64> = duty_history.iter().map(|r| r.duty).collect();
    Ok(RunReport {
        e_r_percent: steady_state_error_percent(traj, b_ref, n_periods)?,
        settling_periods: settling_periods(traj, b_ref, DEFAULT_BAND),
        d_max: max_duty(&duties)?,
        ise: ise(traj, b_ref, t0 + p, t0 + n_periods as f64 * p)?,
        itae: itae(traj, b_ref, t0 + p, t0 + n_periods as f64 * p)?,
        duty_history,
        final_state: traj.final_state(),
        clamp_events: traj.clamp_events,
    })
}
