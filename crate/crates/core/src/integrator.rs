//! Fixed-step RK4 integration of the controlled plant.
//!
//! Steps never straddle a switching instant of the pulse wave, so the removal
//! coefficient is constant inside every step and the method keeps its
//! fourth-order accuracy across the discontinuities of the input.

use std::io::Write;

use crate::error::{PsnfError, Result};
use crate::model::{vector_field, PlantParams, PulseWave, State};

pub const DEFAULT_STEP: f64 = 0.005;

/// Negative excursions down to this magnitude are treated as roundoff and
/// clamped to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Sampled solution of the controlled plant.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Removal rate `u` applied at each sample (right-continuous at switches).
    pub inputs: Vec<f64>,
    pub period: f64,
    /// Number of roundoff clamps applied to negative state components.
    pub clamp_events: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn final_state(&self) -> State {
        *self.states.last().expect("trajectory is never empty")
    }

    pub fn biomass(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.b)
    }

    /// Appends a segment that starts where `self` ends. The shared boundary
    /// sample is taken from `next`, so the recorded input stays
    /// right-continuous.
    pub fn append(&mut self, next: Trajectory) {
        debug_assert_eq!(self.end_time(), next.start_time());
        self.times.pop();
        self.states.pop();
        self.inputs.pop();
        self.times.extend(next.times);
        self.states.extend(next.states);
        self.inputs.extend(next.inputs);
        self.clamp_events += next.clamp_events;
    }

    fn check_window(&self, start: f64, end: f64) -> Result<()> {
        let tol = 1e-9 * self.period.max(1.0);
        if !(start <= end) || start < self.start_time() - tol || end > self.end_time() + tol {
            return Err(PsnfError::OutOfRange {
                start,
                end,
                span_start: self.start_time(),
                span_end: self.end_time(),
            });
        }
        Ok(())
    }

    /// Linear interpolation of `B` at `t`, plus the index of the sample
    /// interval `[t_i, t_{i+1}]` that contains it.
    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.times.len();
        let i = match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            p => (p - 1).min(n.saturating_sub(2)),
        };
        if n == 1 {
            return (0, self.states[0].b);
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (b0, b1) = (self.states[i].b, self.states[i + 1].b);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        (i, b0 + w * (b1 - b0))
    }

    /// Trapezoidal integral of `B` over `[start, end]`, interpolating linearly
    /// at window edges that fall between samples.
    pub fn integrate_biomass(&self, start: f64, end: f64) -> Result<f64> {
        self.check_window(start, end)?;
        let start = start.max(self.start_time());
        let end = end.min(self.end_time());
        if end <= start {
            return Ok(0.0);
        }
        let (i0, b_start) = self.locate(start);
        let (i1, b_end) = self.locate(end);
        if i0 == i1 {
            return Ok(0.5 * (end - start) * (b_start + b_end));
        }
        let mut acc = 0.5 * (self.times[i0 + 1] - start) * (b_start + self.states[i0 + 1].b);
        for j in (i0 + 1)..i1 {
            acc += 0.5
                * (self.times[j + 1] - self.times[j])
                * (self.states[j].b + self.states[j + 1].b);
        }
        acc += 0.5 * (end - self.times[i1]) * (self.states[i1].b + b_end);
        Ok(acc)
    }

    /// Cumulative trapezoidal integral of `B` from the first sample.
    pub fn cumulative_biomass(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in 1..self.len() {
            acc += 0.5
                * (self.times[w] - self.times[w - 1])
                * (self.states[w].b + self.states[w - 1].b);
            out.push(acc);
        }
        out
    }

    /// Writes `time,B,T,u` rows at full precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,B,T,u")?;
        for ((t, x), u) in self.times.iter().zip(&self.states).zip(&self.inputs) {
            writeln!(w, "{t:?},{:?},{:?},{u:?}", x.b, x.t)?;
        }
        Ok(())
    }
}

/// Mean biomass over a window that must span exactly one period.
pub fn period_mean_biomass(traj: &Trajectory, window_start: f64, window_end: f64) -> Result<f64> {
    let width = window_end - window_start;
    if (width - traj.period).abs() > 1e-9 * traj.period {
        return Err(PsnfError::InvalidParameter(format!(
            "window width {width} differs from period {}",
            traj.period
        )));
    }
    Ok(traj.integrate_biomass(window_start, window_end)? / traj.period)
}

/// Moving average of `B` with width one period, ending at `t`.
pub fn moving_average(traj: &Trajectory, t: f64) -> Result<f64> {
    if t < traj.period + traj.start_time() - 1e-12 * traj.period {
        return Err(PsnfError::UndefinedRegion {
            time: t,
            period: traj.period,
        });
    }
    period_mean_biomass(traj, t - traj.period, t)
}

fn rk4_step(p: &PlantParams, x: State, removal: f64, h: f64) -> State {
    let f = |s: State| vector_field(p, s, removal * s.t);
    let k1 = f(x);
    let k2 = f(State::new(x.b + 0.5 * h * k1.0, x.t + 0.5 * h * k1.1));
    let k3 = f(State::new(x.b + 0.5 * h * k2.0, x.t + 0.5 * h * k2.1));
    let k4 = f(State::new(x.b + h * k3.0, x.t + h * k3.1));
    State::new(
        x.b + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        x.t + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

fn guard(x: State, time: f64, clamps: &mut usize) -> Result<State> {
    if !x.is_finite() {
        return Err(PsnfError::Diverged { time });
    }
    let mut fix = |v: f64| -> Result<f64> {
        if v >= 0.0 {
            Ok(v)
        } else if v >= -CLAMP_TOLERANCE {
            *clamps += 1;
            Ok(0.0)
        } else {
            Err(PsnfError::NegativeState { time, value: v })
        }
    };
    Ok(State::new(fix(x.b)?, fix(x.t)?))
}

/// Switching instants of `wave` strictly inside `(t0, t1)`, ascending.
pub fn switch_instants(wave: &PulseWave, t0: f64, t1: f64) -> Vec<f64> {
    let p = wave.period;
    let eps = 1e-12 * p.max(t1.abs());
    let mut out = Vec::new();
    let first = (t0 / p).floor() as i64;
    let last = (t1 / p).ceil() as i64;
    for m in first..=last {
        let base = m as f64 * p;
        let mut cands = vec![base];
        if wave.duty > 0.0 && wave.duty < 1.0 {
            cands.push(base + wave.duty * p);
        }
        for c in cands {
            if c > t0 + eps && c < t1 - eps {
                out.push(c);
            }
        }
    }
    out
}

fn check_segment(start: State, t0: f64, t1: f64, h: f64) -> Result<()> {
    if !(t0 < t1) {
        return Err(PsnfError::InvalidParameter(format!(
            "segment requires t0 < t1, got [{t0}, {t1}]"
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(PsnfError::InvalidParameter(format!(
            "step must be positive, got {h}"
        )));
    }
    if !(start.is_finite() && start.b >= 0.0 && start.t >= 0.0) {
        return Err(PsnfError::InvalidParameter(format!(
            "initial state must be finite and non-negative, got {start:?}"
        )));
    }
    Ok(())
}

/// Core stepping loop. Calls `sink(t, x)` after every accepted step and
/// returns the final state with the number of roundoff clamps.
fn step_through<F: FnMut(f64, State)>(
    params: &PlantParams,
    wave: &PulseWave,
    start: State,
    t0: f64,
    t1: f64,
    h: f64,
    mut sink: F,
) -> Result<(State, usize)> {
    let mut breakpoints = switch_instants(wave, t0, t1);
    breakpoints.push(t1);
    let merge = 1e-6 * h;
    let mut clamps = 0usize;
    let mut x = start;
    let mut piece_start = t0;
    for &target in &breakpoints {
        let mut n = 0u64;
        let mut t = piece_start;
        while t < target {
            n += 1;
            let mut next = piece_start + n as f64 * h;
            if next >= target - merge {
                next = target;
            }
            let on = f64::from(wave.pulse_value(0.5 * (t + next)));
            x = guard(
                rk4_step(params, x, wave.gamma * on, next - t),
                next,
                &mut clamps,
            )?;
            sink(next, x);
            t = next;
        }
        piece_start = target;
    }
    Ok((x, clamps))
}

/// Integrates the plant under `wave` with its duty replaced by
/// `duty_override` from `t0` to `t1` using RK4 with base step `h`.
pub fn integrate_segment(
    params: &PlantParams,
    wave: &PulseWave,
    duty_override: f64,
    start: State,
    t0: f64,
    t1: f64,
    h: f64,
) -> Result<Trajectory> {
    check_segment(start, t0, t1, h)?;
    let wave = wave.with_duty(duty_override);
    let approx =
        ((t1 - t0) / h).ceil() as usize + 3 * ((t1 - t0) / wave.period).ceil() as usize + 2;
    let mut times = Vec::with_capacity(approx);
    let mut states = Vec::with_capacity(approx);
    let mut inputs = Vec::with_capacity(approx);
    times.push(t0);
    states.push(start);
    inputs.push(wave.removal(t0, start.t));
    let (_, clamps) = step_through(params, &wave, start, t0, t1, h, |t, x| {
        times.push(t);
        states.push(x);
        inputs.push(wave.removal(t, x.t));
    })?;
    Ok(Trajectory {
        times,
        states,
        inputs,
        period: wave.period,
        clamp_events: clamps,
    })
}

/// Outcome of [`advance_period`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodOutcome {
    pub end: State,
    /// Trapezoidal mean of `B` over the period.
    pub mean_biomass: f64,
    pub clamp_events: usize,
}

/// Integrates one full period `[0, P]` with the given duty without storing
/// samples. Uses the same step sequence as [`integrate_segment`] over a
/// period-aligned window.
pub fn advance_period(
    params: &PlantParams,
    wave: &PulseWave,
    duty: f64,
    start: State,
    h: f64,
) -> Result<PeriodOutcome> {
    let period = wave.period;
    check_segment(start, 0.0, period, h)?;
    let wave = wave.with_duty(duty);
    let mut acc = 0.0;
    let (mut t_prev, mut b_prev) = (0.0, start.b);
    let (end, clamps) = step_through(params, &wave, start, 0.0, period, h, |t, x| {
        acc += 0.5 * (t - t_prev) * (b_prev + x.b);
        t_prev = t;
        b_prev = x.b;
    })?;
    Ok(PeriodOutcome {
        end,
        mean_biomass: acc / period,
        clamp_events: clamps,
    })
}
