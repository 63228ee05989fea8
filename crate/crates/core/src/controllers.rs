//! Duty-cycle policies evaluated once per period.
//!
//! At the boundary `t_i = iP` a policy receives the period-mean error over
//! `[(i-1)P, iP]` and the plant state, and returns the duty applied over
//! `[iP, (i+1)P]`.

use serde::{Deserialize, Serialize};

use crate::error::{PsnfError, Result};
use crate::ga::{evolve, GaConfig, GaOutcome};
use crate::integrator::advance_period;
use crate::model::{PlantParams, PulseWave, State};
use crate::rng::derive_seed;

/// What a controller sees at a period boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryObservation {
    /// Boundary index `i >= 1`.
    pub index: usize,
    /// `B_ref - mean(B)` over the period that just ended.
    pub error: f64,
    pub period_mean: f64,
    pub state: State,
    /// Duty applied over the period that just ended.
    pub applied_duty: f64,
}

pub trait DutyController {
    fn initial_duty(&self) -> f64;
    fn next_duty(&mut self, obs: &BoundaryObservation) -> Result<f64>;
}

/// Rounds to the nearest multiple of `step`; `step == 0` disables.
pub fn quantize(duty: f64, step: f64) -> f64 {
    if step > 0.0 {
        ((duty / step).round() * step).clamp(0.0, 1.0)
    } else {
        duty
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenLoop {
    pub duty: f64,
}

/// Constant duty for every period.
pub fn open_loop_policy(duty_const: f64) -> OpenLoop {
    OpenLoop {
        duty: duty_const.clamp(0.0, 1.0),
    }
}

impl DutyController for OpenLoop {
    fn initial_duty(&self) -> f64 {
        self.duty
    }

    fn next_duty(&mut self, _obs: &BoundaryObservation) -> Result<f64> {
        Ok(self.duty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiConfig {
    pub kp: f64,
    pub ki: f64,
    /// Feedforward duty.
    pub d_ref: f64,
    /// Duty quantum, 0 disables.
    pub quantization_step: f64,
    /// Conditional integration while the output is saturated.
    pub anti_windup: bool,
}

impl PiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kp >= 0.0 && self.ki >= 0.0 && self.kp.is_finite() && self.ki.is_finite()) {
            return Err(PsnfError::InvalidParameter(format!(
                "PI gains must be finite and non-negative, got kp={} ki={}",
                self.kp, self.ki
            )));
        }
        if !(0.0..=0.1).contains(&self.quantization_step) {
            return Err(PsnfError::InvalidParameter(format!(
                "quantization step must be in [0, 0.1], got {}",
                self.quantization_step
            )));
        }
        if !(0.0..=1.0).contains(&self.d_ref) {
            return Err(PsnfError::InvalidParameter(format!(
                "d_ref {} outside [0, 1]",
                self.d_ref
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiState {
    pub error_sum: f64,
    pub last_duty: f64,
}

impl PiState {
    pub fn initial(cfg: &PiConfig) -> Self {
        Self {
            error_sum: 0.0,
            last_duty: quantize(cfg.d_ref, cfg.quantization_step),
        }
    }
}

/// One PI update: `D = clamp(d_ref + kp e + ki sum(e))`, optionally
/// quantized.
pub fn pi_step(cfg: &PiConfig, st: PiState, error: f64) -> (f64, PiState) {
    let pushing_high = st.last_duty >= 1.0 && error > 0.0;
    let pushing_low = st.last_duty <= 0.0 && error < 0.0;
    let error_sum = if cfg.anti_windup && (pushing_high || pushing_low) {
        st.error_sum
    } else {
        st.error_sum + error
    };
    let raw = cfg.d_ref + cfg.kp * error + cfg.ki * error_sum;
    let duty = quantize(raw.clamp(0.0, 1.0), cfg.quantization_step);
    (
        duty,
        PiState {
            error_sum,
            last_duty: duty,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiController {
    pub cfg: PiConfig,
    pub state: PiState,
}

impl PiController {
    pub fn new(cfg: PiConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: PiState::initial(&cfg),
        })
    }
}

impl DutyController for PiController {
    fn initial_duty(&self) -> f64 {
        self.state.last_duty
    }

    fn next_duty(&mut self, obs: &BoundaryObservation) -> Result<f64> {
        if !obs.error.is_finite() {
            return Err(PsnfError::Internal(format!(
                "non-finite error sample {}",
                obs.error
            )));
        }
        let (duty, st) = pi_step(&self.cfg, self.state, obs.error);
        self.state = st;
        Ok(duty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    pub horizon_periods: usize,
    pub ga: GaConfig,
    /// Biomass target, kg/cm^2.
    pub b_ref: f64,
    /// Model used for prediction.
    pub prediction_params: PlantParams,
    /// Removal wave of the prediction model (period and physical amplitude).
    pub wave: PulseWave,
    /// Integration step of the prediction model.
    pub step: f64,
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon_periods == 0 {
            return Err(PsnfError::InvalidParameter(
                "MPC horizon must be >= 1".into(),
            ));
        }
        if !(self.b_ref > 0.0) {
            return Err(PsnfError::InvalidParameter(format!(
                "b_ref must be positive, got {}",
                self.b_ref
            )));
        }
        self.ga.validate()
    }
}

/// Predicted cost of a duty sequence: sum over the horizon of the relative
/// error of each predicted period mean.
pub fn mpc_cost(cfg: &MpcConfig, from: State, duties: &[f64]) -> Result<f64> {
    let mut x = from;
    let mut cost = 0.0;
    for &d in duties {
        let out = advance_period(&cfg.prediction_params, &cfg.wave, d, x, cfg.step)?;
        cost += ((out.mean_biomass - cfg.b_ref) / cfg.b_ref).abs();
        x = out.end;
    }
    Ok(cost)
}

/// Full optimization result for one receding-horizon step.
pub fn mpc_plan(
    cfg: &MpcConfig,
    measured: State,
    previous_duty: f64,
    seed: u64,
) -> Result<GaOutcome> {
    cfg.validate()?;
    evolve(
        &cfg.ga,
        cfg.horizon_periods,
        |genes| mpc_cost(cfg, measured, genes),
        previous_duty,
        seed,
    )
}

/// Duty for the next period: first element of the best predicted sequence.
pub fn mpc_step(cfg: &MpcConfig, measured: State, previous_duty: f64, seed: u64) -> Result<f64> {
    let plan = mpc_plan(cfg, measured, previous_duty, seed)?;
    plan.best
        .genes
        .first()
        .map(|d| d.clamp(0.0, 1.0))
        .ok_or_else(|| PsnfError::Internal("GA returned an empty individual".into()))
}

#[derive(Debug, Clone)]
pub struct MpcController {
    pub cfg: MpcConfig,
    /// First duty `D^0`, the feedforward value.
    pub d_ref: f64,
    /// Stream seed; step `i` uses `derive_seed(seed, [i])`.
    pub seed: u64,
}

impl MpcController {
    pub fn new(cfg: MpcConfig, d_ref: f64, seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, d_ref, seed })
    }
}

impl DutyController for MpcController {
    fn initial_duty(&self) -> f64 {
        self.d_ref
    }

    fn next_duty(&mut self, obs: &BoundaryObservation) -> Result<f64> {
        mpc_step(
            &self.cfg,
            obs.state,
            obs.applied_duty,
            derive_seed(self.seed, &[obs.index as u64]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::invert_feedforward;

    fn pi(kp: f64, ki: f64, q: f64) -> PiConfig {
        PiConfig {
            kp,
            ki,
            d_ref: 0.3095,
            quantization_step: q,
            anti_windup: true,
        }
    }

    #[test]
    fn zero_error_keeps_feedforward() {
        let cfg = pi(0.1, 26.0, 0.0);
        let mut st = PiState::initial(&cfg);
        assert_eq!(st.last_duty, 0.3095);
        for _ in 0..5 {
            let (d, next) = pi_step(&cfg, st, 0.0);
            assert_eq!(d, 0.3095);
            st = next;
        }
    }

    #[test]
    fn first_correction_arithmetic() {
        let cfg = pi(0.1, 26.0, 0.0);
        let (d, st) = pi_step(&cfg, PiState::initial(&cfg), 0.01);
        assert!((d - 0.5705).abs() < 1e-12, "{d}");
        assert!((st.error_sum - 0.01).abs() < 1e-15);
    }

    #[test]
    fn saturation_freezes_integral() {
        let cfg = pi(0.1, 26.0, 0.0);
        let (d, st) = pi_step(&cfg, PiState::initial(&cfg), 0.1);
        assert_eq!(d, 1.0);
        let frozen = st.error_sum;
        let (d2, st2) = pi_step(&cfg, st, 0.1);
        assert_eq!(d2, 1.0);
        assert_eq!(st2.error_sum, frozen);
        // an error of the opposite sign integrates again
        let (_, st3) = pi_step(&cfg, st2, -0.05);
        assert!((st3.error_sum - (frozen - 0.05)).abs() < 1e-15);

        let wind = PiConfig {
            anti_windup: false,
            ..cfg
        };
        let (_, w1) = pi_step(&wind, PiState::initial(&wind), 0.1);
        let (_, w2) = pi_step(&wind, w1, 0.1);
        assert!((w2.error_sum - 0.2).abs() < 1e-15);
    }

    #[test]
    fn quantized_output() {
        let cfg = pi(0.1, 0.0, 0.01);
        let (d, _) = pi_step(&cfg, PiState::initial(&cfg), 0.0123);
        assert!((d - 0.31).abs() < 1e-12, "{d}");
        assert_eq!(quantize(0.996, 0.01), 1.0);
        assert_eq!(quantize(0.4567, 0.0), 0.4567);
    }

    #[test]
    fn config_guards() {
        assert!(PiController::new(pi(-0.1, 1.0, 0.0)).is_err());
        assert!(PiController::new(pi(0.1, 1.0, 0.2)).is_err());
        assert!(PiController::new(pi(0.1, 1.0, 0.01)).is_ok());
    }

    #[test]
    fn open_loop_is_constant() {
        let mut c = open_loop_policy(0.3095);
        let obs = BoundaryObservation {
            index: 3,
            error: 0.2,
            period_mean: 0.7,
            state: State::new(0.7, 1.0),
            applied_duty: 0.3095,
        };
        assert_eq!(c.initial_duty(), 0.3095);
        assert_eq!(c.next_duty(&obs).unwrap(), 0.3095);
        assert_eq!(open_loop_policy(0.0).duty, 0.0);
        assert_eq!(open_loop_policy(1.0).duty, 1.0);
    }

    fn mpc_cfg(horizon: usize, ga: GaConfig) -> MpcConfig {
        let p = PlantParams::nominal();
        MpcConfig {
            horizon_periods: horizon,
            ga,
            b_ref: 0.9,
            prediction_params: p,
            wave: PulseWave::new(2.0, 0.0, p.physical_gamma(0.3)).unwrap(),
            step: 0.01,
        }
    }

    #[test]
    fn degenerate_mpc_returns_only_candidate() {
        let p = PlantParams::nominal();
        let exact = invert_feedforward(&p, 0.3, 0.9).unwrap().duty;
        let ga = GaConfig {
            first_gene_halfwidth: 0.0,
            init_sigma: 0.0,
            mutation_prob: 0.0,
            ..GaConfig::default()
        };
        let d = mpc_step(&mpc_cfg(1, ga), State::new(0.8, 0.5), exact, 4).unwrap();
        assert_eq!(d, exact);
    }

    #[test]
    fn mpc_is_deterministic() {
        let cfg = mpc_cfg(5, GaConfig::default());
        let x = State::new(0.88, 0.3);
        let a = mpc_step(&cfg, x, 0.31, 99).unwrap();
        let b = mpc_step(&cfg, x, 0.31, 99).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn mpc_cost_zero_horizon_is_zero() {
        let cfg = mpc_cfg(3, GaConfig::default());
        assert_eq!(mpc_cost(&cfg, State::new(0.9, 0.2), &[]).unwrap(), 0.0);
        assert!(MpcController::new(mpc_cfg(0, GaConfig::default()), 0.3, 0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pi_duty_always_in_unit_interval(
                kp in 0.0f64..2.0,
                ki in 0.0f64..30.0,
                q in prop::sample::select(vec![0.0, 0.01, 0.05]),
                aw in any::<bool>(),
                errors in prop::collection::vec(-1.0f64..1.0, 1..40),
            ) {
                let cfg = PiConfig { kp, ki, d_ref: 0.31, quantization_step: q, anti_windup: aw };
                let mut st = PiState::initial(&cfg);
                for e in errors {
                    let (d, next) = pi_step(&cfg, st, e);
                    prop_assert!((0.0..=1.0).contains(&d));
                    st = next;
                }
            }
        }
    }
}
