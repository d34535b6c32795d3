//! Self-contained numerical experiments behind the estimate checks. Each one
//! builds its grid and initial data from a handful of parameters, runs the
//! solver and returns the resulting reports. Defaults reproduce the reference
//! configurations.

use serde::{Deserialize, Serialize};

use super::{
    check_comparison_plus, check_initial_trace, check_mass_scaling, check_monotone_construction,
    check_potential_monotone, check_smoothing, check_weighted_l1_decay, Report,
};
use crate::error::{Error, Result};
use crate::fractional::{Exterior, FracParams};
use crate::grid::{Field, Grid, Point};
use crate::solver::{init_from_measure, MeasureSpec, Solver, SolverConfig, Trajectory};
use crate::weights::Weight;

/// `count` times geometrically spaced on `[first, last]`.
pub fn log_times(first: f64, last: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![last];
    }
    let mut times: Vec<f64> = (0..count)
        .map(|k| first * (last / first).powf(k as f64 / (count - 1) as f64))
        .collect();
    times[count - 1] = last;
    times
}

fn atom_field(grid: &Grid, location: Point, mass: f64, width: f64) -> Result<Field> {
    init_from_measure(&MeasureSpec::atom(location, mass)?.with_mollifier_width(width)?, grid)
}

fn zero_like(traj: &Trajectory) -> Trajectory {
    Trajectory {
        times: traj.times.clone(),
        snapshots: traj.snapshots.iter().map(|f| f.scale(0.0)).collect(),
        diagnostics: Vec::new(),
        initial_lift: 0.0,
        high_mode_energy: 0.0,
    }
}

fn require_supercritical(key: &'static str, p: FracParams, m: f64, suite: &str) -> Result<()> {
    let mc = p.critical_exponent();
    if m > mc && m < 1.0 {
        return Ok(());
    }
    Err(Error::param(
        key,
        format!(
            "m={m} ≤ m_c={mc} for N={}, σ={}: {suite} suite unavailable",
            p.dim(),
            p.sigma()
        ),
    ))
}

/// L∞ decay of a unit atom on a large periodic box with unit spacing, plus a
/// second run with scaled mass for the exponent `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingExperiment {
    pub dim: usize,
    pub sigma: f64,
    pub m: f64,
    pub points: usize,
    pub spacing: f64,
    pub mass: f64,
    pub mollifier_width: f64,
    /// Floor as a fraction of the initial peak.
    pub relative_floor: f64,
    pub t_end: f64,
    /// Log-spaced samples on `[t_end/100, t_end]`.
    pub samples: usize,
    /// Mass of the comparison run relative to `mass`; 0 skips it.
    pub mass_ratio: f64,
}

impl Default for SmoothingExperiment {
    fn default() -> Self {
        Self {
            dim: 1,
            sigma: 1.0,
            m: 0.5,
            points: 32768,
            spacing: 1.0,
            mass: 1.0,
            mollifier_width: 3.0,
            relative_floor: 1e-6,
            t_end: 60.0,
            samples: 40,
            mass_ratio: 2.0,
        }
    }
}

/// Trajectories and reports of a [`SmoothingExperiment`].
#[derive(Debug, Clone)]
pub struct SmoothingOutcome {
    pub base: Trajectory,
    pub scaled: Option<Trajectory>,
    pub reports: Vec<Report>,
}

impl SmoothingExperiment {
    /// `σ = 1/2`, `m = 3/4`, where `α = 4`.
    pub fn slow_case() -> Self {
        Self {
            sigma: 0.5,
            m: 0.75,
            points: 65536,
            t_end: 30.0,
            samples: 60,
            ..Self::default()
        }
    }

    pub fn params(&self) -> Result<FracParams> {
        FracParams::new(self.dim, self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        require_supercritical("smoothing.m", self.params()?, self.m, "smoothing")?;
        if !(self.spacing > 0.0) {
            return Err(Error::param("smoothing.spacing", "must be positive"));
        }
        if !(self.mass > 0.0 && self.t_end > 0.0) {
            return Err(Error::param("smoothing.mass", "mass and t_end must be positive"));
        }
        if self.mass_ratio < 0.0 || self.mass_ratio == 1.0 {
            return Err(Error::param(
                "smoothing.mass_ratio",
                "must be 0 (off) or a positive value other than 1",
            ));
        }
        Ok(())
    }

    fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, 0.5 * self.points as f64 * self.spacing, self.points)
    }

    fn run_mass(&self, grid: &Grid, p: FracParams, mass: f64) -> Result<Trajectory> {
        let u0 = atom_field(grid, [0.0, 0.0], mass, self.mollifier_width)?;
        let cfg = SolverConfig {
            floor: self.relative_floor * u0.max(),
            safety: 1.0,
            ..SolverConfig::default()
        };
        let solver = Solver::new(grid, p, self.m, cfg)?;
        solver.run_sampled(&u0, &log_times(0.01 * self.t_end, self.t_end, self.samples))
    }

    pub fn run(&self) -> Result<SmoothingOutcome> {
        self.validate()?;
        let p = self.params()?;
        let grid = self.grid()?;
        let base = self.run_mass(&grid, p, self.mass)?;
        let mut reports = vec![check_smoothing(&base, p, self.m, self.mass)?];
        let mut drift = Report::new("mass_conservation", 1e-6);
        let d = base.relative_mass_drift();
        drift
            .record("relative_drift", d)
            .record("initial_lift", base.initial_lift)
            .record("clamped_mass", base.total_clamped_mass())
            .record("high_mode_energy", base.high_mode_energy);
        drift.pass = d <= 1e-6;
        reports.push(drift);
        let scaled = if self.mass_ratio > 0.0 {
            let s = self.run_mass(&grid, p, self.mass * self.mass_ratio)?;
            reports.push(check_mass_scaling(&base, &s, p, self.m, self.mass_ratio)?);
            Some(s)
        } else {
            None
        };
        Ok(SmoothingOutcome { base, scaled, reports })
    }
}

/// Weighted L¹ rates of a single atom solution (paired with `v = 0`) over a
/// range of weight radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightedDecayExperiment {
    pub dim: usize,
    pub sigma: f64,
    pub m: f64,
    /// Weight exponent, in `(N, N + σ/m)`.
    pub a: f64,
    pub half_width: f64,
    pub points: usize,
    pub mass: f64,
    pub mollifier_width: f64,
    pub relative_floor: f64,
    pub t_end: f64,
    /// Log-spaced samples on `[10⁻⁴ t_end, t_end]`.
    pub samples: usize,
    pub radii: Vec<f64>,
}

impl Default for WeightedDecayExperiment {
    fn default() -> Self {
        Self {
            dim: 1,
            sigma: 1.0,
            m: 0.5,
            a: 2.0,
            half_width: 256.0,
            points: 8192,
            mass: 1.0,
            mollifier_width: 3.0,
            relative_floor: 1e-6,
            t_end: 10.0,
            samples: 60,
            radii: vec![1.0, 2.0, 4.0, 8.0],
        }
    }
}

impl WeightedDecayExperiment {
    pub fn validate(&self) -> Result<()> {
        let p = FracParams::new(self.dim, self.sigma)?;
        require_supercritical("weighted.m", p, self.m, "weighted-decay")?;
        Weight::new(self.dim, self.sigma, self.m, self.a).map_err(|e| Error::param("weighted.a", e.to_string()))?;
        Ok(())
    }

    pub fn run(&self) -> Result<Report> {
        self.validate()?;
        let p = FracParams::new(self.dim, self.sigma)?;
        let grid = Grid::new(self.dim, self.half_width, self.points)?;
        let u0 = atom_field(&grid, [0.0, 0.0], self.mass, self.mollifier_width)?;
        let cfg = SolverConfig {
            floor: self.relative_floor * u0.max(),
            ..SolverConfig::default()
        };
        let solver = Solver::new(&grid, p, self.m, cfg)?;
        let u = solver.run_sampled(&u0, &log_times(1e-4 * self.t_end, self.t_end, self.samples))?;
        let w = Weight::new(self.dim, self.sigma, self.m, self.a)?;
        check_weighted_l1_decay(&u, &zero_like(&u), &w, &self.radii)
    }
}

/// Ordered and unordered pairs of Gaussian bumps under the monotone
/// quadrature scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonExperiment {
    pub dim: usize,
    pub sigma: f64,
    pub m: f64,
    pub a: f64,
    pub half_width: f64,
    pub points: usize,
    pub floor: f64,
    pub t_end: f64,
    pub samples: usize,
    /// Centers of the unordered bumps sit at `±separation` on the first axis.
    pub separation: f64,
    pub radii: Vec<f64>,
}

impl Default for ComparisonExperiment {
    fn default() -> Self {
        Self {
            dim: 1,
            sigma: 1.0,
            m: 0.5,
            a: 2.0,
            half_width: 32.0,
            points: 1024,
            floor: 1e-8,
            t_end: 5.0,
            samples: 40,
            separation: 6.0,
            radii: vec![1.0, 2.0, 4.0, 8.0],
        }
    }
}

impl ComparisonExperiment {
    pub fn validate(&self) -> Result<()> {
        let p = FracParams::new(self.dim, self.sigma)?;
        require_supercritical("comparison.m", p, self.m, "comparison")?;
        Weight::new(self.dim, self.sigma, self.m, self.a).map_err(|e| Error::param("comparison.a", e.to_string()))?;
        Ok(())
    }

    /// Reports `comparison_ordered` and `comparison_unordered`.
    pub fn run(&self) -> Result<Vec<Report>> {
        self.validate()?;
        let p = FracParams::new(self.dim, self.sigma)?;
        let grid = Grid::new(self.dim, self.half_width, self.points)?;
        let s = self.separation;
        let gauss = |c: f64, h: f64| {
            grid.sample(move |x| {
                let r2 = (x[0] - c).powi(2) + x[1..].iter().map(|v| v * v).sum::<f64>();
                h * (-0.5 * r2).exp()
            })
        };
        let initial = [gauss(0.0, 0.5), gauss(0.0, 1.0), gauss(s, 1.0), gauss(-s, 0.8)];
        let cfg = SolverConfig {
            floor: self.floor,
            ..SolverConfig::quadrature()
        };
        let solver = Solver::new(&grid, p, self.m, cfg)?;
        let tr = solver.run_lockstep(&initial, &log_times(2e-3 * self.t_end, self.t_end, self.samples))?;
        let w = Weight::new(self.dim, self.sigma, self.m, self.a)?;
        let mut ordered = check_comparison_plus(&tr[0], &tr[1], &w, &self.radii)?;
        ordered.name = "comparison_ordered".into();
        let mut unordered = check_comparison_plus(&tr[2], &tr[3], &w, &self.radii)?;
        unordered.name = "comparison_unordered".into();
        Ok(vec![ordered, unordered])
    }
}

/// Pairing of early-time solutions against a Gaussian test function for a
/// sweep of mollifier widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceExperiment {
    pub dim: usize,
    pub sigma: f64,
    pub m: f64,
    pub half_width: f64,
    pub points: usize,
    pub floor: f64,
    /// `[x, y, mass]` per atom; `y` is ignored in one dimension.
    pub atoms: Vec<[f64; 3]>,
    /// Mollifier widths in cells, decreasing.
    pub widths: Vec<f64>,
    /// Standard deviation of the test function.
    pub test_width: f64,
    pub times: Vec<f64>,
}

impl Default for TraceExperiment {
    fn default() -> Self {
        Self {
            dim: 1,
            sigma: 1.0,
            m: 0.5,
            half_width: 16.0,
            points: 1024,
            floor: 1e-8,
            atoms: vec![[-2.0, 0.0, 1.0], [3.0, 0.0, 0.5]],
            widths: vec![6.0, 3.0, 1.5],
            test_width: 2.0,
            times: vec![1e-3, 2e-3, 1e-2],
        }
    }
}

impl TraceExperiment {
    pub fn validate(&self) -> Result<()> {
        FracParams::new(self.dim, self.sigma)?;
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(Error::param("trace.m", format!("m={} must lie in (0, 1)", self.m)));
        }
        if self.atoms.is_empty() {
            return Err(Error::param("trace.atoms", "need at least one atom"));
        }
        Ok(())
    }

    pub fn measure(&self) -> Result<MeasureSpec> {
        self.atoms
            .iter()
            .try_fold(MeasureSpec::empty(), |mu, a| mu.with_atom([a[0], a[1]], a[2]))
    }

    pub fn run(&self) -> Result<Report> {
        self.validate()?;
        let p = FracParams::new(self.dim, self.sigma)?;
        let grid = Grid::new(self.dim, self.half_width, self.points)?;
        let cfg = SolverConfig {
            floor: self.floor,
            ..SolverConfig::quadrature()
        };
        let solver = Solver::new(&grid, p, self.m, cfg)?;
        let mu = self.measure()?;
        let runs = self
            .widths
            .iter()
            .map(|&eps| {
                let u0 = init_from_measure(&mu.clone().with_mollifier_width(eps)?, &grid)?;
                Ok((eps, solver.run_sampled(&u0, &self.times)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let s2 = 2.0 * self.test_width * self.test_width;
        let phi = grid.sample(|x| (-x.iter().map(|c| c * c).sum::<f64>() / s2).exp());
        check_initial_trace(&runs, &phi, &mu)
    }
}

/// Riesz potential of an atom solution, with the absorbing exterior so that
/// mass leaving the box only lowers the potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialExperiment {
    pub dim: usize,
    pub sigma: f64,
    pub m: f64,
    pub half_width: f64,
    pub points: usize,
    pub floor: f64,
    pub mollifier_width: f64,
    pub t_end: f64,
    /// Log-spaced samples on `[t_end/100, t_end]`.
    pub samples: usize,
    /// Snapshots compared.
    pub compared: usize,
}

impl Default for PotentialExperiment {
    fn default() -> Self {
        Self {
            dim: 1,
            sigma: 0.5,
            m: 0.75,
            half_width: 32.0,
            points: 1024,
            floor: 1e-8,
            mollifier_width: 3.0,
            t_end: 0.1,
            samples: 20,
            compared: 5,
        }
    }
}

impl PotentialExperiment {
    pub fn validate(&self) -> Result<()> {
        let p = FracParams::new(self.dim, self.sigma)?;
        p.require_riesz()
            .map_err(|e| Error::param("potential.sigma", e.to_string()))?;
        require_supercritical("potential.m", p, self.m, "potential-monotone")
    }

    pub fn run(&self) -> Result<Report> {
        self.validate()?;
        let p = FracParams::new(self.dim, self.sigma)?;
        let grid = Grid::new(self.dim, self.half_width, self.points)?;
        let cfg = SolverConfig {
            floor: self.floor,
            exterior: Exterior::Absorbing,
            ..SolverConfig::quadrature()
        };
        let solver = Solver::new(&grid, p, self.m, cfg)?;
        let u0 = atom_field(&grid, [0.0, 0.0], 1.0, self.mollifier_width)?;
        let traj = solver.run_sampled(&u0, &log_times(0.01 * self.t_end, self.t_end, self.samples))?;
        check_potential_monotone(&traj, p, self.compared)
    }
}

/// Solutions from the cutoff data `h_k μ` of a slowly decaying density plus
/// an atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffExperiment {
    pub dim: usize,
    pub sigma: f64,
    pub m: f64,
    pub a: f64,
    pub half_width: f64,
    pub points: usize,
    pub floor: f64,
    /// The density is `(1 + |x|²)^{−decay/2}`.
    pub decay: f64,
    pub ks: Vec<usize>,
    /// Cutoff radius unit: `h_k` is 1 on `|x| ≤ k·unit`.
    pub unit: f64,
    pub t_end: f64,
    pub samples: usize,
}

impl Default for CutoffExperiment {
    fn default() -> Self {
        Self {
            dim: 1,
            sigma: 1.0,
            m: 0.5,
            a: 2.0,
            half_width: 32.0,
            points: 1024,
            floor: 1e-8,
            decay: 0.5,
            ks: vec![1, 2, 4, 8],
            unit: 1.0,
            t_end: 2.0,
            samples: 20,
        }
    }
}

impl CutoffExperiment {
    pub fn validate(&self) -> Result<()> {
        FracParams::new(self.dim, self.sigma)?;
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(Error::param("cutoff.m", format!("m={} must lie in (0, 1)", self.m)));
        }
        if !(self.decay >= 0.0) {
            return Err(Error::param("cutoff.decay", "must be >= 0"));
        }
        Weight::new(self.dim, self.sigma, self.m, self.a).map_err(|e| Error::param("cutoff.a", e.to_string()))?;
        Ok(())
    }

    pub fn run(&self) -> Result<Report> {
        self.validate()?;
        let p = FracParams::new(self.dim, self.sigma)?;
        let grid = Grid::new(self.dim, self.half_width, self.points)?;
        let cfg = SolverConfig {
            floor: self.floor,
            ..SolverConfig::quadrature()
        };
        let solver = Solver::new(&grid, p, self.m, cfg)?;
        let decay = self.decay;
        let mu = MeasureSpec::empty()
            .with_density(move |x| (1.0 + x.iter().map(|c| c * c).sum::<f64>()).powf(-0.5 * decay))
            .with_atom([1.0, 0.0], 0.5)?;
        let w = Weight::new(self.dim, self.sigma, self.m, self.a)?;
        let times = log_times(5e-3 * self.t_end, self.t_end, self.samples);
        check_monotone_construction(&mu, &self.ks, self.unit, &solver, &w, &times)
    }
}
