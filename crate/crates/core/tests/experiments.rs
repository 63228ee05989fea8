use proptest::prelude::*;

use psnf_core::experiments::*;
use psnf_core::model::{equilibria, PlantParams};
use psnf_core::rng::PortableRng;

fn at_equilibrium() -> RunConfig {
    let p = PlantParams::nominal();
    RunConfig {
        initial: equilibria(&p).coexistence,
        controller: ControllerSpec::OpenLoop { duty: Some(0.0) },
        ..RunConfig::default()
    }
}

#[test]
fn open_loop_zero_duty_holds_equilibrium() {
    let cfg = at_equilibrium();
    let b_star = cfg.initial.b;
    let run = run_closed_loop(&cfg).unwrap();
    let worst = run
        .trajectory
        .states
        .iter()
        .map(|s| (s.b - b_star).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
    assert!(run.report.duty_history.iter().all(|r| r.duty == 0.0));
    assert_eq!(run.report.clamp_events, 0);
}

#[test]
fn report_is_consistent_with_history() {
    let run = run_closed_loop(&RunConfig::default()).unwrap();
    let h = &run.report.duty_history;
    assert_eq!(h.len(), DEFAULT_PERIODS);
    assert_eq!(
        h[0].duty, 0.31,
        "first duty is the quantized feedforward duty"
    );
    let max = h.iter().map(|r| r.duty).fold(f64::MIN, f64::max);
    assert_eq!(run.report.d_max, max);
    assert!(h.iter().all(|r| (0.0..=1.0).contains(&r.duty)));
    assert!((run.trajectory.end_time() - 40.0).abs() < 1e-9);
    assert_eq!(run.report.clamp_events, 0);
}

#[test]
fn feedforward_open_loop_tracks_target() {
    let cfg = RunConfig {
        controller: ControllerSpec::OpenLoop { duty: None },
        ..RunConfig::default()
    };
    let run = run_closed_loop(&cfg).unwrap();
    assert!((run.d_ref - 0.3095238095238).abs() < 1e-9);
    assert!(run.report.e_r_percent < 0.5, "{}", run.report.e_r_percent);
}

#[test]
fn mpc_is_reproducible_and_regulates() {
    let cfg = RunConfig {
        controller: ControllerSpec::default_mpc(),
        ..RunConfig::default()
    };
    let a = run_closed_loop(&cfg).unwrap();
    let b = run_closed_loop(&cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.report.e_r_percent < 0.5, "{}", a.report.e_r_percent);
    assert!(a.report.settling_periods.is_some_and(|p| p <= 3));
}

#[test]
fn mpc_seed_changes_the_search() {
    let base = RunConfig {
        controller: ControllerSpec::default_mpc(),
        n_periods: 6,
        ..RunConfig::default()
    };
    let a = run_closed_loop(&base).unwrap();
    let b = run_closed_loop(&RunConfig { seed: 7, ..base }).unwrap();
    assert_ne!(a.report.duty_history, b.report.duty_history);
}

#[test]
fn too_few_periods_rejected() {
    let cfg = RunConfig {
        n_periods: 5,
        ..RunConfig::default()
    };
    assert!(run_closed_loop(&cfg).is_err());
}

#[test]
fn extreme_gains_are_excluded() {
    let sweep = TuningSweep {
        kp: vec![2.0],
        ki: vec![30.0],
    };
    let rows = tune_pi_grid(&RunConfig::default(), &sweep, 1).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].excluded);
    assert_eq!(rows[0].reason, "saturated duty");
}

#[test]
fn weak_gains_survive() {
    let sweep = TuningSweep {
        kp: vec![0.0],
        ki: vec![1.0],
    };
    let rows = tune_pi_grid(&RunConfig::default(), &sweep, 1).unwrap();
    assert!(!rows[0].excluded, "{}", rows[0].reason);
    assert!(rows[0].report.is_some());
}

#[test]
fn tuning_rows_follow_grid_order() {
    let sweep = TuningSweep {
        kp: vec![0.0, 0.5],
        ki: vec![1.0, 2.0, 3.0],
    };
    let rows = tune_pi_grid(&RunConfig::default(), &sweep, 2).unwrap();
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.kp, r.ki)).collect();
    assert_eq!(
        pairs,
        vec![
            (0.0, 1.0),
            (0.0, 2.0),
            (0.0, 3.0),
            (0.5, 1.0),
            (0.5, 2.0),
            (0.5, 3.0)
        ]
    );
    assert!(tune_pi_grid(
        &RunConfig::default(),
        &TuningSweep {
            kp: vec![],
            ki: vec![1.0]
        },
        1
    )
    .is_err());
}

#[test]
fn paper_grid_has_630_pairs() {
    let g = TuningSweep::paper_grid();
    assert_eq!(g.kp.len() * g.ki.len(), 630);
    assert_eq!(g.kp[1], 0.1);
    assert_eq!(g.ki[25], 26.0);
}

fn small_sweep(cvs: Vec<f64>, runs: usize) -> RobustnessSweep {
    RobustnessSweep {
        cvs,
        runs_per_cv: runs,
        controllers: vec![
            ControllerSpec::OpenLoop { duty: None },
            ControllerSpec::default_pi(),
            ControllerSpec::default_mpc(),
        ],
    }
}

fn short_base() -> RunConfig {
    RunConfig {
        n_periods: 8,
        step: 0.01,
        ..RunConfig::default()
    }
}

#[test]
fn zero_cv_reproduces_nominal_runs() {
    let result = robustness_sweep(&short_base(), &small_sweep(vec![0.0], 3), 2).unwrap();
    assert_eq!(result.rows.len(), 9);
    for name in ["openloop", "pi", "mpc"] {
        let rows: Vec<_> = result
            .rows
            .iter()
            .filter(|r| r.controller == name)
            .collect();
        assert!(rows
            .iter()
            .all(|r| r.params == PlantParams::nominal() && r.redraws == 0));
        let first = rows[0].report.as_ref().unwrap();
        if name != "mpc" {
            assert!(rows.iter().all(|r| r.report.as_ref().unwrap() == first));
            let cell = result.cell(name, 0.0).unwrap();
            assert_eq!(cell.e_r_percent.std, 0.0);
            assert_eq!(cell.ise.std, 0.0);
            assert_eq!(cell.settling_periods.std, 0.0);
        }
    }
}

#[test]
fn controllers_share_each_perturbed_plant() {
    let result = robustness_sweep(&short_base(), &small_sweep(vec![0.2], 4), 2).unwrap();
    for run in 0..4 {
        let group: Vec<_> = result.rows.iter().filter(|r| r.run == run).collect();
        assert_eq!(group.len(), 3);
        assert!(group
            .iter()
            .all(|r| r.params == group[0].params && r.seed == group[0].seed));
    }
    let distinct = result
        .rows
        .iter()
        .filter(|r| r.controller == "pi")
        .map(|r| r.params.g.to_bits());
    assert_eq!(distinct.collect::<std::collections::BTreeSet<_>>().len(), 4);
}

#[test]
fn sweep_output_is_schedule_independent() {
    let sweep = small_sweep(vec![0.1, 0.3], 3);
    let csv = |workers| {
        let r = robustness_sweep(&short_base(), &sweep, workers).unwrap();
        let mut buf = Vec::new();
        write_robustness_csv(&r.rows, &mut buf).unwrap();
        (buf, serde_json::to_string(&r.cells).unwrap())
    };
    assert_eq!(csv(2), csv(8));

    let grid = TuningSweep {
        kp: vec![0.0, 0.1, 1.0],
        ki: vec![1.0, 10.0, 26.0],
    };
    let table = |workers| {
        let mut buf = Vec::new();
        write_tuning_csv(
            &tune_pi_grid(&short_base(), &grid, workers).unwrap(),
            &mut buf,
        )
        .unwrap();
        buf
    };
    assert_eq!(table(2), table(8));
}

#[test]
fn aggregates_match_recomputation() {
    let sweep = small_sweep(vec![0.15], 5);
    let result = robustness_sweep(&short_base(), &sweep, 2).unwrap();
    for cell in &result.cells {
        let reports: Vec<_> = result
            .rows
            .iter()
            .filter(|r| r.controller == cell.controller && r.cv == cell.cv)
            .filter_map(|r| r.report.as_ref())
            .collect();
        let n = reports.len() as f64;
        let mean = reports.iter().map(|r| r.e_r_percent).sum::<f64>() / n;
        let var = reports
            .iter()
            .map(|r| (r.e_r_percent - mean).powi(2))
            .sum::<f64>()
            / n;
        assert!((cell.e_r_percent.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!((cell.e_r_percent.std - var.sqrt()).abs() <= 1e-12 * mean.abs().max(1.0));
        let ps_mean = reports
            .iter()
            .map(|r| {
                r.settling_periods
                    .map_or(r.duty_history.len() as f64, f64::from)
            })
            .sum::<f64>()
            / n;
        assert!((cell.settling_periods.mean - ps_mean).abs() <= 1e-12);
    }
    assert_eq!(aggregate(&result.rows, &sweep), result.cells);
}

#[test]
fn robustness_csv_schema() {
    let result = robustness_sweep(&short_base(), &small_sweep(vec![0.05], 1), 1).unwrap();
    let mut buf = Vec::new();
    write_robustness_csv(&result.rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("controller,cv,run,seed,e_r_percent,settling_periods,ise,itae,diverged")
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn invalid_sweeps_rejected() {
    assert!(robustness_sweep(&short_base(), &small_sweep(vec![], 1), 1).is_err());
    assert!(robustness_sweep(&short_base(), &small_sweep(vec![-0.1], 1), 1).is_err());
    assert!(robustness_sweep(&short_base(), &small_sweep(vec![0.1], 0), 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perturbed_parameters_are_admissible(seed in any::<u64>(), cv in 0.0f64..0.6) {
        let drawn = perturb_params(&PlantParams::nominal(), cv, &mut PortableRng::seed_from_u64(seed));
        prop_assert!(drawn.params.validate().is_ok());
        prop_assert!(drawn.params.to_array().iter().all(|v| *v > 0.0));
        prop_assert!(drawn.params.g > drawn.params.d);
    }

    #[test]
    fn pi_duties_stay_in_range(kp in 0.0f64..2.0, ki in 1.0f64..30.0, quant in prop::sample::select(vec![0.0, 0.01, 0.05])) {
        let cfg = RunConfig {
            n_periods: 6,
            step: 0.02,
            controller: ControllerSpec::Pi { kp, ki, quantization_step: quant, anti_windup: true },
            ..RunConfig::default()
        };
        let run = run_closed_loop(&cfg).unwrap();
        for r in &run.report.duty_history {
            prop_assert!((0.0..=1.0).contains(&r.duty));
            if quant > 0.0 {
                let k = r.duty / quant;
                prop_assert!((k - k.round()).abs() < 1e-9);
            }
        }
    }
}
