use std::path::PathBuf;
use std::process::Command;

use ffdlab_cli::config::{DualCoefficient, SweepParameter};
use ffdlab_cli::{parse_config, CliError, ExperimentConfig, Suite};

fn key_of(e: CliError) -> (String, String) {
    match e {
        CliError::Config { key, reason } => (key, reason),
        other => panic!("expected a config error, got {other}"),
    }
}

fn rejects(text: &str) -> (String, String) {
    key_of(parse_config(text).expect_err("config should be rejected"))
}

#[test]
fn minimal_config_gets_defaults() {
    let cfg = parse_config("[grid]\ndim = 1\n[equation]\nsigma = 1.0\nm = 0.5\n[measure]\natoms = [[0.0, 0.0, 1.0]]\n")
        .unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    assert_eq!(cfg.suites, vec![Suite::Smoke]);
    assert_eq!(cfg.grid.points, 256);
    assert_eq!(cfg.dual.coefficient, DualCoefficient::Frozen);
    assert_eq!(cfg.sweep.parameter, SweepParameter::M);
}

#[test]
fn dotted_keys_work_like_sections() {
    let a = parse_config("grid.points = 512\nequation.m = 0.6\n").unwrap();
    let b = parse_config("[grid]\npoints = 512\n[equation]\nm = 0.6\n").unwrap();
    assert_eq!(a, b);
}

#[test]
fn effective_config_round_trips() {
    let cfg = parse_config("suites = [\"trace\", \"smoke\"]\n[solver]\nscheme = \"quadrature_euler\"\n").unwrap();
    assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn check_sections_inherit_the_equation() {
    let cfg = parse_config("[equation]\nsigma = 1.5\nm = 0.7\n[trace]\nm = 0.3\n").unwrap();
    assert_eq!(cfg.smoothing.sigma, 1.5);
    assert_eq!(cfg.comparison.m, 0.7);
    assert_eq!(cfg.trace.m, 0.3);
    assert_eq!(cfg.trace.sigma, 1.5);
    // these keep their own reference values
    assert_eq!(cfg.potential.sigma, 0.5);
    assert_eq!(cfg.pairing.dim, 2);
}

#[test]
fn sigma_two_is_rejected() {
    let (key, reason) = rejects("[equation]\nsigma = 2.0\n");
    assert_eq!(key, "equation.sigma");
    assert!(reason.contains("(0, 2)"), "{reason}");
}

#[test]
fn weight_exponent_outside_interval_is_rejected() {
    let (key, reason) = rejects("suites = [\"weighted-decay\"]\n[weighted]\na = 3.5\n");
    assert_eq!(key, "weighted.a");
    assert!(reason.contains("(1, 3)"), "{reason}");
}

#[test]
fn subcritical_m_is_rejected_only_where_needed() {
    let text = "[equation]\nsigma = 0.5\nm = 0.4\n";
    let (key, reason) = rejects(&format!("suites = [\"smoothing\"]\n{text}"));
    assert_eq!(key, "smoothing.m");
    assert_eq!(reason, "m=0.4 ≤ m_c=0.5 for N=1, σ=0.5: smoothing suite unavailable");
    // the initial trace holds for any m in (0, 1)
    parse_config(&format!("suites = [\"trace\"]\n{text}")).unwrap();
}

#[test]
fn unknown_keys_are_named() {
    assert_eq!(rejects("[grid]\npointz = 64\n").0, "grid.pointz");
    assert_eq!(rejects("[smoothing]\nalpha = 2\n").0, "smoothing.alpha");
    assert_eq!(rejects("gird.points = 64\n").0, "gird");
    assert_eq!(rejects("suites = [\"everything\"]\n").0, "suites");
}

#[test]
fn out_of_range_values_are_rejected() {
    assert_eq!(rejects("[equation]\nm = 1.0\n").0, "equation.m");
    assert_eq!(rejects("[solver]\nsafety = 1.5\n").0, "solver.safety");
    assert_eq!(rejects("[run]\nt_end = -1.0\n").0, "run.t_end");
    assert!(rejects("[grid]\npoints = 100\n").0.starts_with("grid"));
    assert_eq!(rejects("[measure]\natoms = [[15.0, 0.0, 1.0]]\n").0, "measure.atoms");
    assert_eq!(rejects("[solver]\nexterior = \"absorbing\"\n").0, "solver.exterior");
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ffdlab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn ffdlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ffdlab")).args(args).output().unwrap()
}

#[test]
fn smoke_suite_passes_and_writes_artifacts() {
    let out = scratch("smoke");
    let o = ffdlab(&["verify", "smoke", "--out", out.to_str().unwrap(), "--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.toml", "reports.json", "reports.csv", "summary.txt"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let written = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert_eq!(parse_config(&written).unwrap().suites, vec![Suite::Smoke]);
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("3/3 checks pass"), "{summary}");
}

#[test]
fn runs_are_reproducible() {
    let (a, b) = (scratch("rep-a"), scratch("rep-b"));
    for d in [&a, &b] {
        let o = ffdlab(&["simulate", "--out", d.to_str().unwrap()]);
        assert!(o.status.success());
    }
    for f in ["reports.json", "diagnostics.csv", "snapshots/u_0020.txt"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn config_errors_exit_with_status_two() {
    let dir = scratch("bad");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.toml");
    std::fs::write(&path, "[equation]\nsigma = 2.0\n").unwrap();
    let o = ffdlab(&[
        "simulate",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("equation.sigma"));
}

#[test]
fn dual_command_checks_identities() {
    let out = scratch("dual");
    let o = ffdlab(&["dual", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let names: Vec<String> = std::fs::read_dir(out.join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.starts_with("h_")), "{names:?}");
    assert!(names.iter().any(|n| n.starts_with("psi_")), "{names:?}");
}
