use serde::{Deserialize, Serialize};

use super::{bump, compute_ab, freeze_jointly, solve_dual, CoefficientField};
use crate::error::{Error, Result};
use crate::estimates::Report;
use crate::fractional::{riesz_potential, Exterior, FracParams, QuadratureLaplacian};
use crate::grid::{Field, Grid};
use crate::solver::{init_from_measure, MeasureSpec, Solver, SolverConfig, Trajectory};

/// Fraction of the stability bound used for dual steps.
const DUAL_SAFETY: f64 = 0.9;
/// Largest defect accepted for a pair of identical trajectories.
pub const IDENTICAL_TOL: f64 = 1e-10;

fn sample_index(traj: &Trajectory, t: f64, name: &'static str) -> Result<usize> {
    let i = traj.nearest_index(t);
    if (traj.times[i] - t).abs() > 1e-9 * t.abs().max(1.0) {
        return Err(Error::param(name, format!("no snapshot at t = {t}")));
    }
    Ok(i)
}

/// Pairing defect `Δ = |∫(u−v)(T)θ − ∫(u−v)(τ)ψ(τ)|` with `ψ` the dual
/// solution for the frozen coefficient `α_n = B_n/A_n` on `(τ, T)`.
#[allow(clippy::too_many_arguments)]
pub fn uniqueness_pairing(
    u: &Trajectory,
    v: &Trajectory,
    eta: &Field,
    p: FracParams,
    m: f64,
    tau: f64,
    t_end: f64,
    n: usize,
) -> Result<Report> {
    p.require_riesz()?;
    let mc = p.critical_exponent();
    if !(m > mc && m < 1.0) {
        return Err(Error::param("m", format!("m={m} must lie in (m_c, 1) with m_c={mc}")));
    }
    if u.grid() != v.grid() || u.grid() != eta.grid() {
        return Err(Error::GridMismatch);
    }
    if u.times != v.times {
        return Err(Error::param("times", "both trajectories must share sample times"));
    }
    if !(tau > 0.0 && tau < t_end) {
        return Err(Error::param("tau", format!("need 0 < τ < T, got τ={tau}, T={t_end}")));
    }
    let i0 = sample_index(u, tau, "tau")?;
    let i1 = sample_index(u, t_end, "T")?;
    let times: Vec<f64> = u.times[i0..=i1].to_vec();
    let mut a_samples = Vec::with_capacity(times.len());
    let mut b_samples = Vec::with_capacity(times.len());
    for k in i0..=i1 {
        let (a, b) = compute_ab(&u.snapshots[k], &v.snapshots[k], m)?;
        a_samples.push(a);
        b_samples.push(b);
    }
    let grid = u.grid();
    let radius = grid.half_width();
    let frozen = freeze_jointly(&times, &[&a_samples, &b_samples], n, radius, (tau, t_end))?;
    let nf = n as f64;
    let alpha = CoefficientField::ratio(&frozen[1].field, &frozen[0].field, (0.5 / nf, 2.0 * nf))?;
    let dt = DUAL_SAFETY * dual_step_limit(&alpha, p)?;
    let dp = solve_dual(&alpha, eta, p, dt)?;

    let diff_end = u.snapshots[i1].sub(&v.snapshots[i1])?;
    let diff_start = u.snapshots[i0].sub(&v.snapshots[i0])?;
    let pairing_end = diff_end.dot(&dp.theta)?;
    let pairing_start = diff_start.dot(&dp.psi.snapshots[0])?;
    let delta = (pairing_end - pairing_start).abs();
    let potential_gap = riesz_potential(&diff_end, p)?.sup_norm();

    let mut report = Report::new(format!("uniqueness_pairing_n{n}"), IDENTICAL_TOL);
    report
        .record("delta", delta)
        .record("pairing_end", pairing_end)
        .record("pairing_start", pairing_start)
        .record("potential_gap", potential_gap)
        .record("subdivisions", frozen[0].subdivisions as f64)
        .record("alpha_max", alpha.max_value())
        .record("freeze_distance_a", frozen[0].distance)
        .record("freeze_distance_b", frozen[1].distance)
        .record("freeze_bound", frozen[0].bound)
        .record("dual_steps", (dp.h.times.len() - 1) as f64);
    report.pass = delta.is_finite() && frozen.iter().all(|f| f.satisfies_lemma());
    Ok(report)
}

/// Largest explicit step for which the dual scheme keeps `ζ ≥ 0`.
pub fn dual_step_limit(alpha: &CoefficientField, p: FracParams) -> Result<f64> {
    let op = QuadratureLaplacian::new(alpha.grid(), p, Exterior::Periodic)?;
    Ok(1.0 / (alpha.max_value() * op.max_row_sum()))
}

/// Paired runs of one atom realized with a sequence of mollifier widths,
/// all advanced in lockstep by the quadrature scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairingExperiment {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
    pub sigma: f64,
    pub m: f64,
    pub mass: f64,
    /// Mollifier widths in cells, each half the previous one.
    pub widths: Vec<f64>,
    pub tau: f64,
    pub t_end: f64,
    pub n: usize,
    /// Further values of `n` evaluated on the narrowest pair.
    pub n_sweep: Vec<usize>,
    /// Log-spaced samples on `[τ, T]`.
    pub samples: usize,
    pub eta_radius: f64,
    pub floor: f64,
}

impl Default for PairingExperiment {
    fn default() -> Self {
        Self {
            dim: 2,
            half_width: 8.0,
            points: 64,
            sigma: 1.5,
            m: 0.9,
            mass: 1.0,
            widths: vec![6.0, 3.0, 1.5],
            tau: 0.5,
            t_end: 2.0,
            n: 160,
            n_sweep: vec![80, 320],
            samples: 24,
            eta_radius: 2.0,
            floor: 1e-6,
        }
    }
}

impl PairingExperiment {
    fn sample_times(&self) -> Vec<f64> {
        let mut times = vec![0.25 * self.tau, 0.5 * self.tau];
        let k = self.samples.max(2);
        let ratio = self.t_end / self.tau;
        times.extend((0..k).map(|i| self.tau * ratio.powf(i as f64 / (k - 1) as f64)));
        *times.last_mut().expect("nonempty") = self.t_end;
        times
    }

    pub fn run(&self) -> Result<Report> {
        if self.widths.len() < 3 {
            return Err(Error::param("widths", "need at least three mollifier widths"));
        }
        let grid = Grid::new(self.dim, self.half_width, self.points)?;
        let p = FracParams::new(self.dim, self.sigma)?;
        let cfg = SolverConfig {
            floor: self.floor,
            ..SolverConfig::quadrature()
        };
        let solver = Solver::new(&grid, p, self.m, cfg)?;
        let initial = self
            .widths
            .iter()
            .map(|&w| {
                let mu = MeasureSpec::atom([0.0, 0.0], self.mass)?.with_mollifier_width(w)?;
                init_from_measure(&mu, &grid)
            })
            .collect::<Result<Vec<_>>>()?;
        let trajs = solver.run_lockstep(&initial, &self.sample_times())?;
        let eta = bump(&grid, self.eta_radius, 1.0);
        check_pairing_sweep(self, &trajs, &eta, p)
    }
}

/// Criteria on runs of decreasing mollifier width: the defect of each
/// consecutive pair drops by at least 2× per halving, identical runs give
/// `Δ ≤ 10⁻¹⁰`, and `Δ` varies by at most 2× as `τ` is halved twice.
pub fn check_pairing_sweep(
    exp: &PairingExperiment,
    trajs: &[Trajectory],
    eta: &Field,
    p: FracParams,
) -> Result<Report> {
    let pair = |i: usize, n: usize, tau: f64| -> Result<Report> {
        uniqueness_pairing(&trajs[i], &trajs[i + 1], eta, p, exp.m, tau, exp.t_end, n)
    };
    let mut report = Report::new("uniqueness_pairing", IDENTICAL_TOL);
    let mut deltas = Vec::new();
    let mut gaps = Vec::new();
    for i in 0..trajs.len() - 1 {
        let r = pair(i, exp.n, exp.tau)?;
        let d = r.get("delta").expect("recorded");
        let g = r.get("potential_gap").expect("recorded");
        report
            .record(format!("delta_{}_{}", exp.widths[i], exp.widths[i + 1]), d)
            .record(format!("potential_gap_{}_{}", exp.widths[i], exp.widths[i + 1]), g);
        if !r.pass {
            report.note(format!("freeze lemma failed for pair {i}"));
        }
        deltas.push(d);
        gaps.push(g);
    }
    let min_reduction = deltas.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
    let gap_reduction = gaps.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);

    let same = uniqueness_pairing(&trajs[1], &trajs[1], eta, p, exp.m, exp.tau, exp.t_end, exp.n)?;
    let identical = same.get("delta").expect("recorded");

    let last = trajs.len() - 2;
    let mut tau_deltas = vec![deltas[last]];
    for tau in [0.5 * exp.tau, 0.25 * exp.tau] {
        tau_deltas.push(pair(last, exp.n, tau)?.get("delta").expect("recorded"));
    }
    let tau_lo = tau_deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let tau_hi = tau_deltas.iter().copied().fold(0.0, f64::max);
    let tau_spread = tau_hi / tau_lo;
    for (k, d) in tau_deltas.iter().enumerate() {
        report.record(format!("delta_tau_div{}", 1 << k), *d);
    }
    for &n in &exp.n_sweep {
        report.record(
            format!("delta_n{n}"),
            pair(last, n, exp.tau)?.get("delta").expect("recorded"),
        );
    }

    report
        .record("min_reduction", min_reduction)
        .record("potential_gap_reduction", gap_reduction)
        .record("identical_delta", identical)
        .record("tau_spread", tau_spread);
    let freeze_ok = report.notes.is_empty();
    report.pass =
        freeze_ok && min_reduction >= 2.0 && identical <= IDENTICAL_TOL && tau_spread <= 2.0 && gap_reduction > 1.0;
    report.note(format!(
        "Δ reduction {min_reduction:.2}x per halving, identical {identical:.1e}, τ spread {tau_spread:.2}"
    ));
    Ok(report)
}
