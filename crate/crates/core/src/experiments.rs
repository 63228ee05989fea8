//! Closed-loop runs, the PI gain grid and the parametric robustness sweep.
//!
//! Sweeps are split into independent work units that run on a dedicated
//! rayon pool; results are collected in unit order, so outputs do not depend
//! on the number of workers or on scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::{invert_feedforward, DEFAULT_GAMMA};
use crate::controllers::{
    open_loop_policy, BoundaryObservation, DutyController, MpcConfig, MpcController, PiConfig,
    PiController,
};
use crate::error::{PsnfError, Result};
use crate::ga::GaConfig;
use crate::integrator::{integrate_segment, Trajectory, DEFAULT_STEP};
use crate::metrics::{build_report, DutyRecord, RunReport};
use crate::model::{PlantParams, PulseWave, State};
use crate::rng::{derive_seed, PortableRng};

pub const DEFAULT_PERIOD: f64 = 2.0;
pub const DEFAULT_REFERENCE: f64 = 0.9;
pub const DEFAULT_PERIODS: usize = 20;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_KP: f64 = 0.1;
pub const DEFAULT_KI: f64 = 26.0;
pub const DEFAULT_QUANTIZATION: f64 = 0.01;
pub const DEFAULT_HORIZON: usize = 5;

/// Duties at or beyond these limits count as saturated in the gain grid.
pub const SATURATION_LOW: f64 = 0.005;
pub const SATURATION_HIGH: f64 = 0.995;
/// Gain pairs that need more periods than this to settle are excluded.
pub const MAX_SETTLING_PERIODS: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerSpec {
    /// Constant duty; `None` applies the feedforward duty.
    OpenLoop {
        duty: Option<f64>,
    },
    Pi {
        kp: f64,
        ki: f64,
        quantization_step: f64,
        anti_windup: bool,
    },
    Mpc {
        horizon: usize,
        ga: GaConfig,
    },
}

impl ControllerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerSpec::OpenLoop { .. } => "openloop",
            ControllerSpec::Pi { .. } => "pi",
            ControllerSpec::Mpc { .. } => "mpc",
        }
    }

    pub fn default_pi() -> Self {
        ControllerSpec::Pi {
            kp: DEFAULT_KP,
            ki: DEFAULT_KI,
            quantization_step: DEFAULT_QUANTIZATION,
            anti_windup: true,
        }
    }

    pub fn default_mpc() -> Self {
        ControllerSpec::Mpc {
            horizon: DEFAULT_HORIZON,
            ga: GaConfig::default(),
        }
    }

    fn id(&self) -> u64 {
        match self {
            ControllerSpec::OpenLoop { .. } => 0,
            ControllerSpec::Pi { .. } => 1,
            ControllerSpec::Mpc { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Parameters of the simulated plant.
    pub plant: PlantParams,
    /// Parameters the controller believes in (feedforward and prediction).
    pub model: PlantParams,
    /// Pulse period, months.
    pub period: f64,
    /// Removal amplitude per unit of dimensionless time of the model; the
    /// actuator applies `gamma * model.g` per month.
    pub gamma: f64,
    /// Biomass target, kg/cm^2.
    pub b_ref: f64,
    pub n_periods: usize,
    pub initial: State,
    pub step: f64,
    pub seed: u64,
    pub controller: ControllerSpec,
    /// Tolerance band carried into reports for plotting, kg/cm^2.
    pub delta: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let nominal = PlantParams::nominal();
        Self {
            plant: nominal,
            model: nominal,
            period: DEFAULT_PERIOD,
            gamma: DEFAULT_GAMMA,
            b_ref: DEFAULT_REFERENCE,
            n_periods: DEFAULT_PERIODS,
            initial: default_initial_state(&nominal, DEFAULT_REFERENCE),
            step: DEFAULT_STEP,
            seed: 42,
            controller: ControllerSpec::default_pi(),
            delta: DEFAULT_DELTA,
        }
    }
}

/// Default starting point: biomass at the target with the toxin level that
/// holds it stationary, `T = (g (1 - B/b_max) - d) / s`.
pub fn default_initial_state(p: &PlantParams, b_ref: f64) -> State {
    State::new(
        b_ref,
        ((p.g * (1.0 - b_ref / p.b_max) - p.d) / p.s).max(0.0),
    )
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.model.validate()?;
        if self.n_periods < 6 {
            return Err(PsnfError::InvalidParameter(format!(
                "n_periods must be >= 6, got {}",
                self.n_periods
            )));
        }
        if !(self.b_ref > 0.0 && self.b_ref <= self.model.b_max) {
            return Err(PsnfError::InvalidParameter(format!(
                "b_ref must lie in (0, b_max], got {}",
                self.b_ref
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(PsnfError::InvalidParameter(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.delta >= 0.0) {
            return Err(PsnfError::InvalidParameter(format!(
                "delta must be non-negative, got {}",
                self.delta
            )));
        }
        PulseWave::new(self.period, 0.0, self.gamma)?;
        Ok(())
    }

    /// Removal wave seen by the plant (duty is set per period).
    pub fn wave(&self) -> Result<PulseWave> {
        PulseWave::new(self.period, 0.0, self.model.physical_gamma(self.gamma))
    }

    /// Feedforward duty from the controller's model.
    pub fn feedforward_duty(&self) -> Result<f64> {
        Ok(invert_feedforward(&self.model, self.gamma, self.b_ref / self.model.b_max)?.duty)
    }

    fn build_controller(&self, d_ref: f64) -> Result<Box<dyn DutyController>> {
        Ok(match self.controller {
            ControllerSpec::OpenLoop { duty } => Box::new(open_loop_policy(duty.unwrap_or(d_ref))),
            ControllerSpec::Pi {
                kp,
                ki,
                quantization_step,
                anti_windup,
            } => Box::new(PiController::new(PiConfig {
                kp,
                ki,
                d_ref,
                quantization_step,
                anti_windup,
            })?),
            ControllerSpec::Mpc { horizon, ga } => Box::new(MpcController::new(
                MpcConfig {
                    horizon_periods: horizon,
                    ga,
                    b_ref: self.b_ref,
                    prediction_params: self.model,
                    wave: self.wave()?,
                    step: self.step,
                },
                d_ref,
                self.seed,
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRun {
    pub trajectory: Trajectory,
    pub report: RunReport,
    pub d_ref: f64,
}

/// Simulates `n_periods` periods, querying the controller at each boundary.
pub fn run_closed_loop(cfg: &RunConfig) -> Result<ClosedLoopRun> {
    cfg.validate()?;
    let d_ref = match cfg.controller {
        ControllerSpec::OpenLoop { duty: Some(d) } => d.clamp(0.0, 1.0),
        _ => cfg.feedforward_duty()?,
    };
    let mut controller = cfg.build_controller(d_ref)?;
    let wave = cfg.wave()?;
    let p = cfg.period;

    let mut duty = controller.initial_duty();
    let mut state = cfg.initial;
    let mut trajectory: Option<Trajectory> = None;
    let mut history = Vec::with_capacity(cfg.n_periods);

    for i in 0..cfg.n_periods {
        let (t0, t1) = (i as f64 * p, (i + 1) as f64 * p);
        let seg = integrate_segment(&cfg.plant, &wave, duty, state, t0, t1, cfg.step)?;
        let mean = seg.integrate_biomass(t0, t1)? / p;
        let error = cfg.b_ref - mean;
        history.push(DutyRecord {
            period_index: i,
            duty,
            error,
        });
        state = seg.final_state();
        match trajectory.as_mut() {
            Some(t) => t.append(seg),
            None => trajectory = Some(seg),
        }
        if i + 1 < cfg.n_periods {
            duty = controller.next_duty(&BoundaryObservation {
                index: i + 1,
                error,
                period_mean: mean,
                state,
                applied_duty: duty,
            })?;
        }
    }

    let trajectory =
        trajectory.ok_or_else(|| PsnfError::Internal("no periods simulated".into()))?;
    let report = build_report(&trajectory, cfg.b_ref, cfg.n_periods, history)?;
    Ok(ClosedLoopRun {
        trajectory,
        report,
        d_ref,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PsnfError::Internal(format!("thread pool: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningSweep {
    pub kp: Vec<f64>,
    pub ki: Vec<f64>,
}

impl TuningSweep {
    /// `K_P` in `0..=2` step 0.1 and `K_I` in `1..=30` step 1.
    pub fn paper_grid() -> Self {
        Self {
            kp: (0..=20).map(|i| i as f64 / 10.0).collect(),
            ki: (1..=30).map(f64::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub kp: f64,
    pub ki: f64,
    pub excluded: bool,
    /// Empty for surviving pairs.
    pub reason: String,
    pub report: Option<RunReport>,
}

/// One closed-loop run per `(kp, ki)`, in kp-major order.
pub fn tune_pi_grid(
    base: &RunConfig,
    sweep: &TuningSweep,
    workers: usize,
) -> Result<Vec<TuningRow>> {
    if sweep.kp.is_empty() || sweep.ki.is_empty() {
        return Err(PsnfError::Config("tuning grids must be non-empty".into()));
    }
    let (quantization_step, anti_windup) = match base.controller {
        ControllerSpec::Pi {
            quantization_step,
            anti_windup,
            ..
        } => (quantization_step, anti_windup),
        _ => (DEFAULT_QUANTIZATION, true),
    };
    let pairs: Vec<(f64, f64)> = sweep
        .kp
        .iter()
        .flat_map(|&kp| sweep.ki.iter().map(move |&ki| (kp, ki)))
        .collect();
    let rows = pool(workers)?.install(|| {
        pairs
            .par_iter()
            .map(|&(kp, ki)| {
                let cfg = RunConfig {
                    controller: ControllerSpec::Pi {
                        kp,
                        ki,
                        quantization_step,
                        anti_windup,
                    },
                    ..*base
                };
                evaluate_pair(&cfg, kp, ki)
            })
            .collect()
    });
    Ok(rows)
}

fn evaluate_pair(cfg: &RunConfig, kp: f64, ki: f64) -> TuningRow {
    let row = |excluded: bool, reason: String, report: Option<RunReport>| TuningRow {
        kp,
        ki,
        excluded,
        reason,
        report,
    };
    let run = match run_closed_loop(cfg) {
        Ok(r) => r,
        Err(e) => return row(true, format!("run failed: {e}"), None),
    };
    let report = run.report;
    let saturated = report
        .duty_history
        .iter()
        .any(|r| r.duty >= SATURATION_HIGH || r.duty <= SATURATION_LOW);
    if saturated {
        return row(true, "saturated duty".into(), Some(report));
    }
    match report.settling_periods {
        None => row(true, "not settled".into(), Some(report)),
        Some(ps) if ps > MAX_SETTLING_PERIODS => {
            row(true, format!("settled after {ps} periods"), Some(report))
        }
        Some(_) => row(false, String::new(), Some(report)),
    }
}

pub fn write_tuning_csv<W: std::io::Write>(rows: &[TuningRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "kp,ki,excluded,reason,e_r_percent,settling_periods,d_max,ise,itae"
    )?;
    for r in rows {
        match &r.report {
            Some(rep) => writeln!(
                w,
                "{:?},{:?},{},{},{:?},{},{:?},{:?},{:?}",
                r.kp,
                r.ki,
                r.excluded,
                r.reason,
                rep.e_r_percent,
                fmt_settling(rep.settling_periods),
                rep.d_max,
                rep.ise,
                rep.itae
            )?,
            None => writeln!(w, "{:?},{:?},{},{},,,,,", r.kp, r.ki, r.excluded, r.reason)?,
        }
    }
    Ok(())
}

fn fmt_settling(ps: Option<u32>) -> String {
    ps.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSweep {
    pub cvs: Vec<f64>,
    pub runs_per_cv: usize,
    pub controllers: Vec<ControllerSpec>,
}

impl RobustnessSweep {
    pub fn paper_protocol() -> Self {
        Self {
            cvs: vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            runs_per_cv: 50,
            controllers: vec![
                ControllerSpec::OpenLoop { duty: None },
                ControllerSpec::default_pi(),
                ControllerSpec::default_mpc(),
            ],
        }
    }
}

/// A perturbed parameter set with the number of rejected draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbedPlant {
    pub params: PlantParams,
    pub redraws: usize,
}

/// Draws every parameter from `Normal(nominal, cv * nominal)`, rejecting
/// non-positive values and draws with `g <= d`.
pub fn perturb_params(nominal: &PlantParams, cv: f64, rng: &mut PortableRng) -> PerturbedPlant {
    let base = nominal.to_array();
    let mut redraws = 0usize;
    loop {
        let mut drawn = [0.0; 6];
        for (slot, &mu) in drawn.iter_mut().zip(&base) {
            loop {
                let v = rng.normal_with(mu, cv * mu);
                if v > 0.0 {
                    *slot = v;
                    break;
                }
                redraws += 1;
            }
        }
        let params = PlantParams::from_array(drawn);
        if params.validate().is_ok() {
            return PerturbedPlant { params, redraws };
        }
        redraws += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub controller: String,
    pub cv_index: usize,
    pub cv: f64,
    pub run: usize,
    /// Seed of the parameter draw shared by all controllers for this run.
    pub seed: u64,
    pub redraws: usize,
    pub params: PlantParams,
    pub report: Option<RunReport>,
    pub diverged: bool,
    /// Non-empty when the run failed.
    pub failure: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population mean and standard deviation; NaN for an empty sample.
    /// Identical samples give exactly that value and zero spread.
    pub fn of(values: &[f64]) -> Self {
        if let Some(&first) = values.first() {
            if values.iter().all(|v| v.to_bits() == first.to_bits()) {
                return Self {
                    mean: first,
                    std: 0.0,
                };
            }
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCell {
    pub controller: String,
    pub cv: f64,
    pub runs: usize,
    pub failed: usize,
    /// Runs that never settled; counted as settling at the run length.
    pub unsettled: usize,
    pub e_r_percent: MeanStd,
    pub settling_periods: MeanStd,
    pub ise: MeanStd,
    pub itae: MeanStd,
    pub redraws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub rows: Vec<RobustnessRow>,
    pub cells: Vec<RobustnessCell>,
}

impl RobustnessResult {
    pub fn cell(&self, controller: &str, cv: f64) -> Option<&RobustnessCell> {
        self.cells
            .iter()
            .find(|c| c.controller == controller && c.cv == cv)
    }
}

/// Paired Monte Carlo comparison of controllers under parametric variation.
///
/// For cv index `c` and run `r` the plant is drawn from the stream
/// `derive_seed(base.seed, [c, r])`; every controller is run on that same
/// plant with its own stream `derive_seed(base.seed, [c, r, controller_id])`.
/// Feedforward and prediction keep using `base.model`.
pub fn robustness_sweep(
    base: &RunConfig,
    sweep: &RobustnessSweep,
    workers: usize,
) -> Result<RobustnessResult> {
    if sweep.cvs.is_empty() || sweep.controllers.is_empty() || sweep.runs_per_cv == 0 {
        return Err(PsnfError::Config(
            "robustness sweep needs cvs, controllers and runs".into(),
        ));
    }
    if let Some(cv) = sweep.cvs.iter().find(|cv| !(**cv >= 0.0 && cv.is_finite())) {
        return Err(PsnfError::Config(format!(
            "cv values must be non-negative, got {cv}"
        )));
    }
    base.validate()?;

    let mut units = Vec::new();
    for (ci, &cv) in sweep.cvs.iter().enumerate() {
        for run in 0..sweep.runs_per_cv {
            let seed = derive_seed(base.seed, &[ci as u64, run as u64]);
            let plant = perturb_params(&base.plant, cv, &mut PortableRng::seed_from_u64(seed));
            for spec in &sweep.controllers {
                units.push((ci, cv, run, seed, plant, *spec));
            }
        }
    }

    let rows: Vec<RobustnessRow> = pool(workers)?.install(|| {
        units
            .par_iter()
            .map(|&(ci, cv, run, seed, plant, spec)| {
                let cfg = RunConfig {
                    plant: plant.params,
                    controller: spec,
                    seed: derive_seed(base.seed, &[ci as u64, run as u64, spec.id()]),
                    ..*base
                };
                let (report, diverged, failure) = match run_closed_loop(&cfg) {
                    Ok(r) => (Some(r.report), false, String::new()),
                    Err(e) => (None, e.is_numerical(), e.to_string()),
                };
                RobustnessRow {
                    controller: spec.name().to_string(),
                    cv_index: ci,
                    cv,
                    run,
                    seed,
                    redraws: plant.redraws,
                    params: plant.params,
                    report,
                    diverged,
                    failure,
                }
            })
            .collect()
    });

    let cells = aggregate(&rows, sweep);
    Ok(RobustnessResult { rows, cells })
}

/// Mean and standard deviation per `(controller, cv)` over successful runs.
pub fn aggregate(rows: &[RobustnessRow], sweep: &RobustnessSweep) -> Vec<RobustnessCell> {
    let mut groups: BTreeMap<(usize, usize), Vec<&RobustnessRow>> = BTreeMap::new();
    let order: Vec<&str> = sweep.controllers.iter().map(|c| c.name()).collect();
    for r in rows {
        let k = order
            .iter()
            .position(|n| *n == r.controller)
            .unwrap_or(usize::MAX);
        groups.entry((r.cv_index, k)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|group| {
            let ok: Vec<&RunReport> = group.iter().filter_map(|r| r.report.as_ref()).collect();
            let pick = |f: fn(&RunReport) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
            let settled: Vec<f64> = ok
                .iter()
                .map(|r| {
                    r.settling_periods
                        .map_or(r.duty_history.len() as f64, f64::from)
                })
                .collect();
            RobustnessCell {
                controller: group[0].controller.clone(),
                cv: group[0].cv,
                runs: group.len(),
                failed: group.len() - ok.len(),
                unsettled: ok.iter().filter(|r| r.settling_periods.is_none()).count(),
                e_r_percent: MeanStd::of(&pick(|r| r.e_r_percent)),
                settling_periods: MeanStd::of(&settled),
                ise: MeanStd::of(&pick(|r| r.ise)),
                itae: MeanStd::of(&pick(|r| r.itae)),
                redraws: group.iter().map(|r| r.redraws).sum(),
            }
        })
        .collect()
}

pub fn write_robustness_csv<W: std::io::Write>(rows: &[RobustnessRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "controller,cv,run,seed,e_r_percent,settling_periods,ise,itae,diverged"
    )?;
    for r in rows {
        match &r.report {
            Some(rep) => writeln!(
                w,
                "{},{:?},{},{},{:?},{},{:?},{:?},{}",
                r.controller,
                r.cv,
                r.run,
                r.seed,
                rep.e_r_percent,
                fmt_settling(rep.settling_periods),
                rep.ise,
                rep.itae,
                r.diverged
            )?,
            None => writeln!(
                w,
                "{},{:?},{},{},,,,,{}",
                r.controller, r.cv, r.run, r.seed, r.diverged
            )?,
        }
    }
    Ok(())
}
