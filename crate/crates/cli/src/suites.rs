//! Orchestration of the four subcommands and their artifacts.

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Mutex;

use ffdlab::dual::{
    bump, check_dual_energy, compute_ab, dual_step_limit, freeze_jointly, solve_dual, CoefficientField,
};
use ffdlab::estimates::{reports_to_csv, reports_to_json, Report};
use ffdlab::solver::{init_from_measure, write_snapshot, MeasureSpec, Solver, SolverConfig, Trajectory};
use ffdlab::{FracParams, Grid};

use crate::config::{DualCoefficient, ExperimentConfig, Suite, SweepParameter};
use crate::error::{CliError, Result};

const SMOKE_TOL: f64 = 1e-12;

type Job<'a> = Box<dyn FnOnce() -> Result<Vec<Report>> + Send + 'a>;

/// Runs jobs on up to `threads` workers. Results come back sorted by report
/// name, so the output does not depend on scheduling.
fn run_jobs(jobs: Vec<Job<'_>>, threads: usize) -> Result<Vec<Report>> {
    let queue = Mutex::new(jobs.into_iter().enumerate().collect::<Vec<_>>());
    let results = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..threads.max(1) {
            s.spawn(|| loop {
                let next = queue.lock().expect("queue lock").pop();
                let Some((i, job)) = next else { break };
                let out = job();
                results.lock().expect("results lock").push((i, out));
            });
        }
    });
    let mut results = results.into_inner().expect("results lock");
    results.sort_by_key(|(i, _)| *i);
    let mut reports = Vec::new();
    for (_, r) in results {
        reports.extend(r?);
    }
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(reports)
}

fn smoke(cfg: &ExperimentConfig) -> Result<Vec<Report>> {
    let grid = cfg.build_grid()?;
    let p = cfg.params()?;
    let m = cfg.equation.m;
    let t_end = cfg.run.t_end;
    let mut out = Vec::new();

    let zero_cfg = SolverConfig {
        floor: 0.0,
        ..cfg.solver_config()
    };
    let traj = Solver::new(&grid, p, m, zero_cfg)?.run(&grid.zeros(), t_end)?;
    let mut r = Report::new("smoke_zero_data", SMOKE_TOL);
    let dev = traj.snapshots.iter().map(|f| f.sup_norm()).fold(0.0, f64::max);
    r.record("max_abs", dev);
    r.pass = dev <= SMOKE_TOL;
    out.push(r);

    let c = 0.5;
    let traj = Solver::new(&grid, p, m, cfg.solver_config())?.run(&grid.constant(c), t_end)?;
    let mut r = Report::new("smoke_constant_data", SMOKE_TOL);
    let dev = traj
        .snapshots
        .iter()
        .flat_map(|f| f.values().iter().map(|v| (v - c).abs()))
        .fold(0.0, f64::max)
        / c;
    r.record("max_relative_deviation", dev);
    r.pass = dev <= SMOKE_TOL;
    out.push(r);

    let l = grid.half_width();
    let f = grid.sample(|x| {
        let base = (-x.iter().map(|v| v * v).sum::<f64>() / (0.1 * l * l)).exp();
        base + (std::f64::consts::PI * x[0] / l).sin() * 0.25
    });
    let back = f.forward_transform().inverse_transform();
    let err = f.sub(&back)?.sup_norm() / f.sup_norm();
    let mut r = Report::new("smoke_fft_roundtrip", SMOKE_TOL);
    r.record("max_relative_error", err);
    r.pass = err <= SMOKE_TOL;
    out.push(r);
    Ok(out)
}

fn check_jobs(cfg: &ExperimentConfig) -> Vec<Job<'_>> {
    let mut checks: Vec<Suite> = cfg.suites.iter().flat_map(|s| s.expand()).collect();
    checks.sort();
    checks.dedup();
    checks
        .into_iter()
        .map(|s| -> Job<'_> {
            match s {
                Suite::Smoke => Box::new(move || smoke(cfg)),
                Suite::Smoothing => Box::new(move || Ok(cfg.smoothing.run()?.reports)),
                Suite::WeightedDecay => Box::new(move || Ok(vec![cfg.weighted.run()?])),
                Suite::Comparison => Box::new(move || Ok(cfg.comparison.run()?)),
                Suite::Trace => Box::new(move || Ok(vec![cfg.trace.run()?])),
                Suite::PotentialMonotone => Box::new(move || Ok(vec![cfg.potential.run()?])),
                Suite::MonotoneConstruction => Box::new(move || Ok(vec![cfg.cutoff.run()?])),
                Suite::Uniqueness => Box::new(move || Ok(vec![cfg.pairing.run()?])),
                Suite::PaperEstimates => unreachable!("expanded above"),
            }
        })
        .collect()
}

/// The requested check suites.
pub fn verify(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<Report>> {
    run_jobs(check_jobs(cfg), threads)
}

/// Long-format rows `t,diagnostic,value`.
fn diagnostics_rows(traj: &Trajectory) -> String {
    let mut out = String::from("t,diagnostic,value\n");
    for d in &traj.diagnostics {
        for (name, v) in [
            ("dt", d.dt),
            ("mass", d.mass),
            ("linf", d.linf),
            ("min", d.min),
            ("clamped_mass", d.clamped_mass),
            ("boundary_fraction", d.boundary_fraction),
        ] {
            out.push_str(&format!("{:e},{name},{v:e}\n", d.time));
        }
    }
    out
}

fn dump_trajectory(
    dir: &Path,
    stem: &str,
    traj: &Trajectory,
    p: FracParams,
    m: f64,
    cfg: &ExperimentConfig,
) -> Result<usize> {
    let k = cfg.output.dump_every;
    let last = traj.len() - 1;
    let picked: Vec<usize> = if k == 0 {
        vec![last]
    } else {
        (0..=last).filter(|i| i % k == 0 || *i == last).collect()
    };
    let sub = dir.join("snapshots");
    fs::create_dir_all(&sub).map_err(CliError::io(sub.display().to_string()))?;
    let ext = match cfg.output.format {
        ffdlab::solver::SnapshotFormat::Text => "txt",
        ffdlab::solver::SnapshotFormat::Binary => "bin",
    };
    for &i in &picked {
        let path = sub.join(format!("{stem}_{i:04}.{ext}"));
        let file = fs::File::create(&path).map_err(CliError::io(path.display().to_string()))?;
        write_snapshot(
            BufWriter::new(file),
            &traj.snapshots[i],
            p,
            m,
            traj.times[i],
            cfg.output.format,
        )?;
    }
    Ok(picked.len())
}

fn evenly_spaced(t_end: f64, samples: usize) -> Vec<f64> {
    (1..=samples).map(|k| t_end * k as f64 / samples as f64).collect()
}

/// One run from the `[measure]` data; writes diagnostics and snapshots.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Report>> {
    let grid = cfg.build_grid()?;
    let p = cfg.params()?;
    let m = cfg.equation.m;
    let u0 = init_from_measure(&cfg.measure_spec()?, &grid)?;
    let solver = Solver::new(&grid, p, m, cfg.solver_config())?;
    let traj = solver.run_sampled(&u0, &evenly_spaced(cfg.run.t_end, cfg.run.samples))?;
    write_file(&out.join("diagnostics.csv"), &diagnostics_rows(&traj))?;
    let dumped = dump_trajectory(out, "u", &traj, p, m, cfg)?;

    let mut r = Report::new("simulation", 0.0);
    r.record("relative_mass_drift", traj.relative_mass_drift())
        .record("initial_lift", traj.initial_lift)
        .record("clamped_mass", traj.total_clamped_mass())
        .record("final_linf", traj.last().sup_norm())
        .record("steps", traj.diagnostics.last().map_or(0, |d| d.step) as f64)
        .record("snapshots_written", dumped as f64);
    r.pass = traj.snapshots.iter().all(|f| f.values().iter().all(|v| v.is_finite()));
    Ok(vec![r])
}

/// The backward dual problem, with `α ≡ 1` or a frozen coefficient built
/// from two mollifications of one atom.
pub fn dual(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Report>> {
    let d = &cfg.dual;
    let bad = |e: ffdlab::Error| CliError::config("dual", e.to_string());
    let grid = Grid::new(d.dim, d.half_width, d.points).map_err(bad)?;
    let p = FracParams::new(d.dim, d.sigma).map_err(bad)?;
    p.require_riesz().map_err(bad)?;
    if !(d.t_start > 0.0 && d.t_end > d.t_start) {
        return Err(CliError::config("dual.t_start", "need 0 < t_start < t_end"));
    }
    if d.samples < 2 || d.n == 0 {
        return Err(CliError::config("dual", "need samples >= 2 and n >= 1"));
    }
    let interval = (d.t_start, d.t_end);
    let alpha = match d.coefficient {
        DualCoefficient::Unit => CoefficientField::constant(&grid, interval, 1.0)?,
        DualCoefficient::Frozen => {
            let solver = Solver::new(
                &grid,
                p,
                d.m,
                SolverConfig {
                    floor: d.floor,
                    ..SolverConfig::quadrature()
                },
            )?;
            let init = d
                .widths
                .iter()
                .map(|&w| {
                    let mu = MeasureSpec::atom([0.0, 0.0], 1.0)?.with_mollifier_width(w)?;
                    init_from_measure(&mu, &grid)
                })
                .collect::<ffdlab::Result<Vec<_>>>()?;
            let times: Vec<f64> = (0..=d.samples)
                .map(|k| d.t_start + (d.t_end - d.t_start) * k as f64 / d.samples as f64)
                .collect();
            let tr = solver.run_lockstep(&init, &times)?;
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for k in 1..tr[0].len() {
                let (x, y) = compute_ab(&tr[0].snapshots[k], &tr[1].snapshots[k], d.m)?;
                a.push(x);
                b.push(y);
            }
            let frozen = freeze_jointly(&times, &[&a, &b], d.n, grid.half_width(), interval)?;
            let n = d.n as f64;
            CoefficientField::ratio(&frozen[1].field, &frozen[0].field, (0.5 / n, 2.0 * n))?
        }
    };
    let eta = bump(&grid, d.eta_radius, 1.0);
    let dt = d.safety * dual_step_limit(&alpha, p)?;
    let pair = solve_dual(&alpha, &eta, p, dt)?;
    let mut r = check_dual_energy(&pair, &alpha, p)?;
    r.name = "dual_identities".into();
    r.record("segments", alpha.segments().len() as f64)
        .record("alpha_max", alpha.max_value());
    dump_trajectory(out, "h", &pair.h, p, d.m, cfg)?;
    dump_trajectory(out, "psi", &pair.psi, p, d.m, cfg)?;
    Ok(vec![r])
}

/// Smoothing fits over `sweep.values`; writes `sweep.csv`.
pub fn sweep(cfg: &ExperimentConfig, out: &Path, threads: usize) -> Result<Vec<Report>> {
    let s = &cfg.sweep;
    if s.values.is_empty() {
        return Err(CliError::config("sweep.values", "need at least one value"));
    }
    let (label, key) = match s.parameter {
        SweepParameter::M => ("m", "smoothing.m"),
        SweepParameter::Sigma => ("sigma", "smoothing.sigma"),
    };
    let mut runs = Vec::new();
    for &v in &s.values {
        let mut e = cfg.smoothing.clone();
        match s.parameter {
            SweepParameter::M => e.m = v,
            SweepParameter::Sigma => e.sigma = v,
        }
        e.validate()
            .map_err(|err| CliError::config(format!("sweep.values ({key} = {v})"), err.to_string()))?;
        runs.push((v, e));
    }
    let jobs: Vec<Job<'_>> = runs
        .iter()
        .map(|(v, e)| -> Job<'_> {
            Box::new(move || {
                let mut reports = e.run()?.reports;
                for r in &mut reports {
                    r.name = format!("{}[{label}={v}]", r.name);
                    r.record(label, *v);
                }
                Ok(reports)
            })
        })
        .collect();
    let reports = run_jobs(jobs, threads)?;
    let mut csv = format!("{label},alpha,fitted_slope,r_squared,relative_error,pass\n");
    for (v, _) in &runs {
        let name = format!("smoothing[{label}={v}]");
        if let Some(r) = reports.iter().find(|r| r.name == name) {
            let g = |k: &str| r.get(k).map_or(String::from("nan"), |x| format!("{x:e}"));
            csv.push_str(&format!(
                "{v},{},{},{},{},{}\n",
                g("alpha"),
                g("fitted_slope"),
                g("r_squared"),
                g("relative_error"),
                r.pass
            ));
        }
    }
    write_file(&out.join("sweep.csv"), &csv)?;
    Ok(reports)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(CliError::io(path.display().to_string()))
}

/// Writes `config.toml`, `reports.json`, `reports.csv` and `summary.txt`
/// and returns the summary text.
pub fn write_reports(out: &Path, command: &str, reports: &[Report]) -> Result<String> {
    let json = reports_to_json(reports).map_err(ffdlab::Error::from)?;
    write_file(&out.join("reports.json"), &json)?;
    write_file(&out.join("reports.csv"), &reports_to_csv(reports))?;
    let failed: Vec<&Report> = reports.iter().filter(|r| !r.pass).collect();
    let mut summary = format!("ffdlab {command}\n");
    for r in reports {
        summary.push_str(&r.summary_line());
        summary.push('\n');
    }
    summary.push_str(&format!(
        "{}/{} checks pass\n",
        reports.len() - failed.len(),
        reports.len()
    ));
    if !failed.is_empty() {
        summary.push_str("failed:\n");
        for r in &failed {
            summary.push_str(&format!("  {}\n", r.name));
        }
    }
    write_file(&out.join("summary.txt"), &summary)?;
    Ok(summary)
}

/// Creates the output directory and records the effective configuration.
pub fn prepare_output(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(CliError::io(out.display().to_string()))?;
    write_file(&out.join("config.toml"), &cfg.to_toml())
}
