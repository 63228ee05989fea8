use std::path::{Path, PathBuf};
use std::process::Command;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(crate_dir().join("include/psnf.h")).unwrap();
    for name in [
        "psnf_params_nominal",
        "psnf_params_new",
        "psnf_params_free",
        "psnf_equilibrium",
        "psnf_feedforward_duty",
        "psnf_run_options_default",
        "psnf_simulate",
        "psnf_run_metrics",
        "psnf_run_samples",
        "psnf_run_duties",
        "psnf_run_free",
        "psnf_last_error",
        "typedef struct PsnfParams PsnfParams;",
        "typedef struct PsnfRun PsnfRun;",
        "PSNF_STATUS_NUMERICAL = 3",
    ] {
        assert!(header.contains(name), "{name} missing from psnf.h");
    }
}

/// Compiles and runs a C program against the header and the static library
/// when a C compiler is available.
#[test]
fn c_program_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libpsnf_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile_dir();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <math.h>
#include "psnf.h"

int main(void) {
    PsnfParams *p = psnf_params_nominal();
    double b = 0.0, t = 0.0, d = 0.0;
    if (psnf_equilibrium(p, &b, &t) != PSNF_STATUS_OK) return 10;
    if (fabs(b - 0.6147520) > 1e-6) return 11;
    if (psnf_feedforward_duty(p, 0.3, 0.9, &d) != PSNF_STATUS_OK) return 12;
    PsnfRunOptions o = psnf_run_options_default();
    o.controller = PSNF_CONTROLLER_KIND_OPEN_LOOP;
    o.n_periods = 6;
    PsnfRun *run = NULL;
    if (psnf_simulate(p, &o, &run) != PSNF_STATUS_OK) return 13;
    PsnfMetrics m;
    if (psnf_run_metrics(run, &m) != PSNF_STATUS_OK) return 14;
    PsnfParams *bad = NULL;
    if (psnf_params_new(0.5, 1.0, 0.5, 0.15, 0.5, 0.05, &bad) != PSNF_STATUS_INVALID_PARAMETER) return 15;
    printf("%.6f %.6f %d\n", d, m.d_max, m.settling_periods);
    psnf_run_free(run);
    psnf_params_free(p);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("main");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("0.309524 0.309524"), "{text}");
    let _ = std::fs::remove_dir_all(&dir);
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("psnf-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
