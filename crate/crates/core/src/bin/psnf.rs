//! `psnf`: equilibria, feedforward design, closed-loop simulation, PI gain
//! tuning, robustness sweeps and feedforward curves from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 1 any other failure (for example I/O).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use psnf_core::averaging::{
    invert_feedforward, open_loop_condition, tabulate_feedforward_curve, DEFAULT_GAMMA,
};
use psnf_core::config::{parse_list, ConfigFile};
use psnf_core::experiments::{
    default_initial_state, robustness_sweep, run_closed_loop, tune_pi_grid, write_robustness_csv,
    write_tuning_csv, ControllerSpec, RobustnessSweep, RunConfig, TuningSweep, DEFAULT_DELTA,
    DEFAULT_HORIZON, DEFAULT_KI, DEFAULT_KP, DEFAULT_PERIOD, DEFAULT_PERIODS, DEFAULT_QUANTIZATION,
    DEFAULT_REFERENCE,
};
use psnf_core::ga::GaConfig;
use psnf_core::integrator::DEFAULT_STEP;
use psnf_core::metrics::{write_duty_csv, RunReport};
use psnf_core::model::{equilibria, ideal_biomass, PlantParams, State};
use psnf_core::{PsnfError, Result};

/// Environment variable that sets the worker count when `--workers` is absent.
const WORKERS_ENV: &str = "PSNF_WORKERS";
const DEFAULT_SEED: u64 = 42;

const PLANT_KEYS: &[&str] = &["g", "b_max", "d", "s", "c", "k"];
const RUN_KEYS: &[&str] = &[
    "gamma",
    "b_ref",
    "periods",
    "period",
    "h",
    "seed",
    "init_b",
    "init_t",
    "controller",
    "kp",
    "ki",
    "quant",
    "anti_windup",
    "horizon",
    "duty",
];
const SWEEP_KEYS: &[&str] = &[
    "workers",
    "kp_grid",
    "ki_grid",
    "cv",
    "runs",
    "controllers",
    "points",
];

#[derive(Parser, Debug)]
#[command(
    name = "psnf",
    version,
    about = "Pulse-width-modulated toxin removal: simulation and control"
)]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the coexistence equilibrium and the dimensionless groups.
    Equilibria {
        #[command(flatten)]
        plant: PlantArgs,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Feedforward duty-cycle for a biomass target.
    Feedforward {
        #[command(flatten)]
        plant: PlantArgs,
        /// Removal amplitude per unit of dimensionless time [default: 0.3].
        #[arg(long)]
        gamma: Option<f64>,
        /// Biomass target, kg/cm^2 [default: 0.9].
        #[arg(long)]
        bref: Option<f64>,
        /// Tolerance used for the open-loop amplitude condition [default: 0.1].
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Run one closed-loop simulation.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Directory for trajectory.csv, duty.csv, report.json and manifest.json.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Sweep the PI gain grid.
    TunePi {
        #[command(flatten)]
        run: RunArgs,
        /// K_P values as `lo:hi:step` or a comma list [default: 0:2:0.1].
        #[arg(long)]
        kp_grid: Option<String>,
        /// K_I values as `lo:hi:step` or a comma list [default: 1:30:1].
        #[arg(long)]
        ki_grid: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
        /// Directory for tuning.csv and manifest.json.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Paired Monte Carlo comparison under parametric variation.
    Robustness {
        #[command(flatten)]
        run: RunArgs,
        /// Coefficients of variation, comma list [default: 0.05,0.1,0.15,0.2,0.25,0.3].
        #[arg(long)]
        cv: Option<String>,
        /// Runs per coefficient of variation [default: 50].
        #[arg(long)]
        runs: Option<usize>,
        /// Controllers, comma list of openloop, pi, mpc [default: all three].
        #[arg(long)]
        controllers: Option<String>,
        /// Worker threads [default: $PSNF_WORKERS or the number of CPUs].
        #[arg(long)]
        workers: Option<usize>,
        /// Directory for robustness.csv, aggregate.json and manifest.json.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Tabulate the averaged equilibrium against the duty-cycle.
    Curve {
        #[command(flatten)]
        plant: PlantArgs,
        #[arg(long)]
        gamma: Option<f64>,
        /// Number of duty samples on [0, 1] [default: 101].
        #[arg(long)]
        points: Option<usize>,
        /// Target whose duty is looked up on the curve [default: 0.9].
        #[arg(long)]
        bref: Option<f64>,
        /// Directory for curve.csv and manifest.json.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Re-run the job recorded in a manifest.json.
    Replay {
        manifest: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

/// Plant parameters; defaults are the nominal values.
#[derive(Args, Debug, Clone, Default)]
struct PlantArgs {
    /// Growth rate, 1/month [default: 0.5].
    #[arg(long)]
    g: Option<f64>,
    /// Carrying capacity, kg/cm^2 [default: 1].
    #[arg(long)]
    bmax: Option<f64>,
    /// Death rate, 1/month [default: 0.015].
    #[arg(long)]
    d: Option<f64>,
    /// Toxin sensitivity, cm^2/(kg month) [default: 0.15].
    #[arg(long)]
    s: Option<f64>,
    /// Toxin production yield [default: 0.5].
    #[arg(long)]
    c: Option<f64>,
    /// Toxin decay rate, 1/month [default: 0.05].
    #[arg(long)]
    k: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct RunArgs {
    #[command(flatten)]
    plant: PlantArgs,
    /// openloop, pi or mpc [default: pi].
    #[arg(long)]
    controller: Option<String>,
    /// Biomass target, kg/cm^2 [default: 0.9].
    #[arg(long)]
    bref: Option<f64>,
    /// Number of control periods [default: 20].
    #[arg(long)]
    periods: Option<usize>,
    /// Pulse period, months [default: 2].
    #[arg(long)]
    period: Option<f64>,
    /// Removal amplitude per unit of dimensionless time [default: 0.3].
    #[arg(long)]
    gamma: Option<f64>,
    /// RK4 step, months [default: 0.005].
    #[arg(long)]
    h: Option<f64>,
    /// Master seed [default: 42].
    #[arg(long)]
    seed: Option<u64>,
    /// PI proportional gain [default: 0.1].
    #[arg(long)]
    kp: Option<f64>,
    /// PI integral gain [default: 26].
    #[arg(long)]
    ki: Option<f64>,
    /// PI duty quantum, 0 disables [default: 0.01].
    #[arg(long)]
    quant: Option<f64>,
    /// PI conditional integration [default: true].
    #[arg(long)]
    anti_windup: Option<bool>,
    /// MPC horizon in periods [default: 5].
    #[arg(long)]
    horizon: Option<usize>,
    /// Open-loop duty [default: feedforward duty].
    #[arg(long)]
    duty: Option<f64>,
    /// Initial biomass, kg/cm^2 [default: the target].
    #[arg(long)]
    init_b: Option<f64>,
    /// Initial toxin, kg/cm^2 [default: the level holding the initial biomass stationary].
    #[arg(long)]
    init_t: Option<f64>,
}

/// A fully resolved unit of work, recorded in manifest.json for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Job {
    Simulate {
        config: RunConfig,
    },
    TunePi {
        base: RunConfig,
        sweep: TuningSweep,
    },
    Robustness {
        base: RunConfig,
        sweep: RobustnessSweep,
    },
    Curve {
        params: PlantParams,
        gamma: f64,
        points: usize,
        b_ref: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    workers: Option<usize>,
    job: Job,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &PsnfError) -> u8 {
    match e {
        e if e.is_numerical() => 3,
        PsnfError::Io(_) | PsnfError::Internal(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let allowed: Vec<&str> = PLANT_KEYS
        .iter()
        .chain(RUN_KEYS)
        .chain(SWEEP_KEYS)
        .copied()
        .collect();
    file.check_keys(&allowed)?;

    match cli.command {
        Command::Equilibria { plant, json } => cmd_equilibria(&resolve_plant(&plant, &file)?, json),
        Command::Feedforward {
            plant,
            gamma,
            bref,
            delta,
            json,
        } => {
            let params = resolve_plant(&plant, &file)?;
            let gamma = file.pick(gamma, "gamma")?.unwrap_or(DEFAULT_GAMMA);
            let b_ref = file.pick(bref, "b_ref")?.unwrap_or(DEFAULT_REFERENCE);
            cmd_feedforward(&params, gamma, b_ref, delta.unwrap_or(DEFAULT_DELTA), json)
        }
        Command::Simulate { run, out } => {
            let config = resolve_run(&run, &file)?;
            execute(&Job::Simulate { config }, out.as_deref(), None)
        }
        Command::TunePi {
            run,
            kp_grid,
            ki_grid,
            workers,
            out,
        } => {
            let mut base = resolve_run(&run, &file)?;
            if !matches!(base.controller, ControllerSpec::Pi { .. }) {
                base.controller = resolve_controller("pi", &run, &file)?;
            }
            let defaults = TuningSweep::paper_grid();
            let sweep = TuningSweep {
                kp: grid_or(file.pick(kp_grid, "kp_grid")?, defaults.kp)?,
                ki: grid_or(file.pick(ki_grid, "ki_grid")?, defaults.ki)?,
            };
            let workers = file.pick(workers, "workers")?;
            execute(&Job::TunePi { base, sweep }, out.as_deref(), workers)
        }
        Command::Robustness {
            run,
            cv,
            runs,
            controllers,
            workers,
            out,
        } => {
            let base = resolve_run(&run, &file)?;
            let defaults = RobustnessSweep::paper_protocol();
            let cvs = match file.pick(cv, "cv")? {
                Some(text) => parse_list::<f64>(&text)
                    .map_err(|_| PsnfError::Config(format!("invalid cv list `{text}`")))?,
                None => defaults.cvs,
            };
            let controllers = match file.pick(controllers, "controllers")? {
                Some(text) => text
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|name| resolve_controller(name, &run, &file))
                    .collect::<Result<Vec<_>>>()?,
                None => ["openloop", "pi", "mpc"]
                    .iter()
                    .map(|name| resolve_controller(name, &run, &file))
                    .collect::<Result<Vec<_>>>()?,
            };
            let sweep = RobustnessSweep {
                cvs,
                runs_per_cv: file.pick(runs, "runs")?.unwrap_or(defaults.runs_per_cv),
                controllers,
            };
            let workers = file.pick(workers, "workers")?;
            execute(&Job::Robustness { base, sweep }, out.as_deref(), workers)
        }
        Command::Curve {
            plant,
            gamma,
            points,
            bref,
            out,
        } => {
            let job = Job::Curve {
                params: resolve_plant(&plant, &file)?,
                gamma: file.pick(gamma, "gamma")?.unwrap_or(DEFAULT_GAMMA),
                points: file.pick(points, "points")?.unwrap_or(101),
                b_ref: file.pick(bref, "b_ref")?.unwrap_or(DEFAULT_REFERENCE),
            };
            execute(&job, out.as_deref(), None)
        }
        Command::Replay {
            manifest,
            out,
            workers,
        } => {
            let text = fs::read_to_string(&manifest).map_err(|e| {
                PsnfError::Config(format!("cannot read {}: {e}", manifest.display()))
            })?;
            let m: Manifest = serde_json::from_str(&text)
                .map_err(|e| PsnfError::Config(format!("invalid manifest: {e}")))?;
            execute(&m.job, Some(&out), workers.or(m.workers))
        }
    }
}

fn resolve_plant(args: &PlantArgs, file: &ConfigFile) -> Result<PlantParams> {
    let n = PlantParams::nominal();
    PlantParams::new(
        file.pick(args.g, "g")?.unwrap_or(n.g),
        file.pick(args.bmax, "b_max")?.unwrap_or(n.b_max),
        file.pick(args.d, "d")?.unwrap_or(n.d),
        file.pick(args.s, "s")?.unwrap_or(n.s),
        file.pick(args.c, "c")?.unwrap_or(n.c),
        file.pick(args.k, "k")?.unwrap_or(n.k),
    )
    .map_err(|e| PsnfError::Config(e.to_string()))
}

fn resolve_controller(name: &str, args: &RunArgs, file: &ConfigFile) -> Result<ControllerSpec> {
    Ok(match name {
        "openloop" | "open-loop" => ControllerSpec::OpenLoop {
            duty: file.pick(args.duty, "duty")?,
        },
        "pi" => ControllerSpec::Pi {
            kp: file.pick(args.kp, "kp")?.unwrap_or(DEFAULT_KP),
            ki: file.pick(args.ki, "ki")?.unwrap_or(DEFAULT_KI),
            quantization_step: file
                .pick(args.quant, "quant")?
                .unwrap_or(DEFAULT_QUANTIZATION),
            anti_windup: file.pick(args.anti_windup, "anti_windup")?.unwrap_or(true),
        },
        "mpc" => ControllerSpec::Mpc {
            horizon: file
                .pick(args.horizon, "horizon")?
                .unwrap_or(DEFAULT_HORIZON),
            ga: GaConfig::default(),
        },
        other => return Err(PsnfError::Config(format!("unknown controller `{other}`"))),
    })
}

fn resolve_run(args: &RunArgs, file: &ConfigFile) -> Result<RunConfig> {
    let params = resolve_plant(&args.plant, file)?;
    let b_ref = file.pick(args.bref, "b_ref")?.unwrap_or(DEFAULT_REFERENCE);
    let initial = match (
        file.pick(args.init_b, "init_b")?,
        file.pick(args.init_t, "init_t")?,
    ) {
        (None, None) => default_initial_state(&params, b_ref),
        (Some(b), None) => default_initial_state(&params, b),
        (b, Some(t)) => State::new(b.unwrap_or(b_ref), t),
    };
    if !(initial.b >= 0.0 && initial.t >= 0.0 && initial.is_finite()) {
        return Err(PsnfError::Config(format!(
            "initial state must be non-negative, got {initial:?}"
        )));
    }
    let controller_name = file
        .pick(args.controller.clone(), "controller")?
        .unwrap_or_else(|| "pi".into());
    let cfg = RunConfig {
        plant: params,
        model: params,
        period: file.pick(args.period, "period")?.unwrap_or(DEFAULT_PERIOD),
        gamma: file.pick(args.gamma, "gamma")?.unwrap_or(DEFAULT_GAMMA),
        b_ref,
        n_periods: file
            .pick(args.periods, "periods")?
            .unwrap_or(DEFAULT_PERIODS),
        initial,
        step: file.pick(args.h, "h")?.unwrap_or(DEFAULT_STEP),
        seed: file.pick(args.seed, "seed")?.unwrap_or(DEFAULT_SEED),
        controller: resolve_controller(&controller_name, args, file)?,
        delta: DEFAULT_DELTA,
    };
    cfg.validate()
        .map_err(|e| PsnfError::Config(e.to_string()))?;
    Ok(cfg)
}

/// Parses `lo:hi:step` or a comma list.
fn grid_or(text: Option<String>, default: Vec<f64>) -> Result<Vec<f64>> {
    let Some(text) = text else { return Ok(default) };
    let bad = || PsnfError::Config(format!("invalid grid `{text}`"));
    let values = if text.contains(':') {
        let parts = parse_list_sep(&text, ':').map_err(|_| bad())?;
        let [lo, hi, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
            return Err(bad());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        parse_list::<f64>(&text).map_err(|_| bad())?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(bad());
    }
    Ok(values)
}

fn parse_list_sep(
    text: &str,
    sep: char,
) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    text.split(sep).map(|s| s.trim().parse()).collect()
}

fn worker_count(requested: Option<usize>) -> Result<usize> {
    if let Some(n) = requested {
        return if n == 0 {
            Err(PsnfError::Config("workers must be >= 1".into()))
        } else {
            Ok(n)
        };
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(PsnfError::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got `{v}`"
            ))),
        };
    }
    Ok(std::thread::available_parallelism()
        .map(usize::from)
        .unwrap_or(1))
}

fn execute(job: &Job, out: Option<&Path>, workers: Option<usize>) -> Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    match job {
        Job::Simulate { config } => {
            let run = run_closed_loop(config)?;
            println!("{}", summary_line(&run.report));
            if let Some(dir) = out {
                run.trajectory.write_csv(create(dir, "trajectory.csv")?)?;
                write_duty_csv(&run.report.duty_history, create(dir, "duty.csv")?)?;
                let report = serde_json::json!({
                    "config": config,
                    "seed": config.seed,
                    "d_ref": run.d_ref,
                    "report": run.report,
                });
                write_json(dir, "report.json", &report)?;
            }
        }
        Job::TunePi { base, sweep } => {
            let rows = tune_pi_grid(base, sweep, worker_count(workers)?)?;
            let survivors: Vec<_> = rows.iter().filter(|r| !r.excluded).collect();
            println!("pairs={} survivors={}", rows.len(), survivors.len());
            let best = survivors
                .iter()
                .filter_map(|r| r.report.as_ref().map(|rep| (r, rep)))
                .min_by(|a, b| a.1.ise.total_cmp(&b.1.ise));
            if let Some((row, rep)) = best {
                println!("min ISE: kp={} ki={} {}", row.kp, row.ki, summary_line(rep));
            }
            if let Some(dir) = out {
                write_tuning_csv(&rows, create(dir, "tuning.csv")?)?;
            }
        }
        Job::Robustness { base, sweep } => {
            let result = robustness_sweep(base, sweep, worker_count(workers)?)?;
            for c in &result.cells {
                println!(
                    "{:<8} cv={:<5} e_r%={:.4}±{:.4} P_s={:.2}±{:.2} ISE={:.4e} ITAE={:.4e} failed={} unsettled={}",
                    c.controller,
                    c.cv,
                    c.e_r_percent.mean,
                    c.e_r_percent.std,
                    c.settling_periods.mean,
                    c.settling_periods.std,
                    c.ise.mean,
                    c.itae.mean,
                    c.failed,
                    c.unsettled
                );
            }
            if let Some(dir) = out {
                write_robustness_csv(&result.rows, create(dir, "robustness.csv")?)?;
                write_json(dir, "aggregate.json", &result.cells)?;
            }
        }
        Job::Curve {
            params,
            gamma,
            points,
            b_ref,
        } => {
            let curve = tabulate_feedforward_curve(params, *gamma, *points)?;
            match curve.lookup(*b_ref / params.b_max) {
                Some(d) => println!("lookup({b_ref}) = {d:.6}"),
                None => println!("lookup({b_ref}) outside the tabulated range"),
            }
            match out {
                Some(dir) => curve.write_csv(create(dir, "curve.csv")?)?,
                None => curve.write_csv(std::io::stdout().lock())?,
            }
        }
    }
    if let Some(dir) = out {
        let manifest = Manifest {
            tool: "psnf".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            workers,
            job: job.clone(),
        };
        write_json(dir, "manifest.json", &manifest)?;
    }
    Ok(())
}

fn summary_line(r: &RunReport) -> String {
    let ps = r
        .settling_periods
        .map_or_else(|| "none".to_string(), |v| v.to_string());
    format!(
        "e_r%={:.6} P_s={} ISE={:.6e} ITAE={:.6e} Dmax={:.4}",
        r.e_r_percent, ps, r.ise, r.itae, r.d_max
    )
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Formats with at least 13 significant digits.
fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (12 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn cmd_equilibria(p: &PlantParams, json: bool) -> Result<()> {
    let eq = equilibria(p);
    let fields = [
        ("alpha", p.alpha()),
        ("beta", p.beta()),
        ("kappa", p.kappa()),
        ("Gamma", p.discriminant()),
        ("B_hat", ideal_biomass(p)),
        ("B_star", eq.coexistence.b),
        ("T_star", eq.coexistence.t),
        ("B_star_dimensionless", eq.coexistence_dimensionless.b),
        ("T_star_dimensionless", eq.coexistence_dimensionless.t),
    ];
    if json {
        let map: serde_json::Map<String, serde_json::Value> = fields
            .iter()
            .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
            .collect();
        println!("{}", serde_json::to_string_pretty(&map)?);
    } else {
        for (k, v) in fields {
            println!("{k:<22}{}", sig(v));
        }
    }
    Ok(())
}

fn cmd_feedforward(p: &PlantParams, gamma: f64, b_ref: f64, delta: f64, json: bool) -> Result<()> {
    let ff = invert_feedforward(p, gamma, b_ref / p.b_max).map_err(|e| match e {
        PsnfError::InvalidParameter(m) => PsnfError::Config(m),
        other => other,
    })?;
    let bound = open_loop_condition(p, delta);
    if json {
        let v = serde_json::json!({
            "gamma": gamma,
            "b_ref": b_ref,
            "duty": ff.duty,
            "eta": ff.eta,
            "saturated": ff.saturated,
            "physical_gamma": p.physical_gamma(gamma),
            "open_loop_bound": bound,
        });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("{:<22}{}", "D_ref", sig(ff.duty));
        println!("{:<22}{}", "eta", sig(ff.eta));
        println!("{:<22}{}", "saturated", ff.saturated);
        println!("{:<22}{}", "physical_gamma", sig(p.physical_gamma(gamma)));
        println!("{:<22}{}", "open_loop_bound", sig(bound));
    }
    Ok(())
}
