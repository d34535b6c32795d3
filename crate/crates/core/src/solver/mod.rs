//! Explicit time integration of `∂ₜu = −(−Δ)^{σ/2}(u^m)`.

mod measure;
mod snapshot;

use serde::{Deserialize, Serialize};

pub use measure::{cutoff_profile, cutoff_sequence, init_from_measure, Atom, MeasureSpec, DEFAULT_MOLLIFIER_WIDTH};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotFormat};

use crate::error::{Error, Result};
use crate::fractional::{dealias_mask, Exterior, FracParams, QuadratureLaplacian, SpectralLaplacian};
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Classical four-stage Runge–Kutta with the Fourier multiplier.
    SpectralRk4,
    /// Forward Euler with the quadrature operator; monotone under the step bound.
    QuadratureEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Safety factor `c ∈ (0, 1]` in the step bound.
    pub safety: f64,
    pub max_dt: f64,
    /// Values below this are raised to it after every step.
    pub floor: f64,
    /// Remove the top third of modes of `u^m` (spectral scheme only).
    pub dealias: bool,
    /// Keep a snapshot every this many steps.
    pub record_every: usize,
    /// Exterior treatment of the quadrature operator.
    pub exterior: Exterior,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::SpectralRk4,
            safety: 0.5,
            max_dt: f64::INFINITY,
            floor: 0.0,
            dealias: true,
            record_every: 100,
            exterior: Exterior::Periodic,
        }
    }
}

impl SolverConfig {
    pub fn quadrature() -> Self {
        Self {
            scheme: Scheme::QuadratureEuler,
            dealias: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::param(
                "safety",
                format!("must lie in (0, 1], got {}", self.safety),
            ));
        }
        if !(self.max_dt > 0.0) {
            return Err(Error::param("max_dt", format!("must be positive, got {}", self.max_dt)));
        }
        if !(self.floor >= 0.0 && self.floor.is_finite()) {
            return Err(Error::param(
                "floor",
                format!("must be finite and >= 0, got {}", self.floor),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be >= 1"));
        }
        if self.scheme == Scheme::SpectralRk4 && self.exterior != Exterior::Periodic {
            return Err(Error::param(
                "exterior",
                "the spectral scheme is periodic; absorbing exterior needs the quadrature scheme",
            ));
        }
        Ok(())
    }
}

/// Per-step record of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub mass: f64,
    pub linf: f64,
    pub min: f64,
    /// Mass added by raising values to the floor during this step.
    pub clamped_mass: f64,
    /// Fraction of the mass outside the central half-box.
    pub boundary_fraction: f64,
}

impl StepDiagnostics {
    pub const CSV_HEADER: &'static str = "step,t,dt,mass,linf,min,clamped_mass,boundary_fraction";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.step, self.time, self.dt, self.mass, self.linf, self.min, self.clamped_mass, self.boundary_fraction
        )
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Mass added when lifting the initial field to the floor.
    pub initial_lift: f64,
    /// Share of `‖u‖₂²` in dealiased-away modes at the final time.
    pub high_mode_energy: f64,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        self.snapshots[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &Field {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("trajectories are never empty")
    }

    /// Index of the snapshot whose time is closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        (0..self.times.len())
            .min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs()))
            .unwrap_or(0)
    }

    /// `max_t |mass(t) − mass(0)| / mass(0)` over all steps.
    pub fn relative_mass_drift(&self) -> f64 {
        let m0 = self.diagnostics[0].mass;
        if m0 == 0.0 {
            return self.diagnostics.iter().map(|d| d.mass.abs()).fold(0.0, f64::max);
        }
        self.diagnostics
            .iter()
            .map(|d| ((d.mass - m0) / m0).abs())
            .fold(0.0, f64::max)
    }

    pub fn total_clamped_mass(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.clamped_mass).sum()
    }

    /// Largest step-to-step increase of the sup norm.
    pub fn max_linf_increase(&self) -> f64 {
        self.diagnostics
            .windows(2)
            .map(|w| w[1].linf - w[0].linf)
            .fold(0.0, f64::max)
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from(StepDiagnostics::CSV_HEADER);
        out.push('\n');
        for d in &self.diagnostics {
            out.push_str(&d.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Work buffers for one step.
#[derive(Default)]
struct Stages {
    k: Vec<f64>,
    stage: Vec<f64>,
    acc: Vec<f64>,
}

enum Operator {
    /// Multiplier in the half layout of the real transform.
    Spectral {
        multiplier: Vec<f64>,
    },
    Quadrature(QuadratureLaplacian),
}

/// Time stepper for one set of equation parameters on one grid.
pub struct Solver {
    grid: Grid,
    params: FracParams,
    m: f64,
    cfg: SolverConfig,
    operator: Operator,
    symbol_bound: f64,
    /// Retained-mode indicator in the half layout when dealiasing.
    retained: Option<Vec<f64>>,
    /// Samples outside the central half-box.
    outer: Vec<bool>,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("grid", &self.grid)
            .field("params", &self.params)
            .field("m", &self.m)
            .field("cfg", &self.cfg)
            .finish()
    }
}

/// `max(v, 0)^m` with `0^m = 0`.
#[inline]
fn flux(v: f64, m: f64) -> f64 {
    let v = v.max(0.0);
    if m == 0.5 {
        v.sqrt()
    } else if m == 0.75 {
        let s = v.sqrt();
        s * s.sqrt()
    } else {
        v.powf(m)
    }
}

impl Solver {
    pub fn new(grid: &Grid, params: FracParams, m: f64, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        params.check_grid(grid)?;
        if !(m > 0.0 && m <= 1.0) {
            return Err(Error::param("m", format!("m must lie in (0, 1], got {m}")));
        }
        let mut retained = None;
        let (operator, symbol_bound) = match cfg.scheme {
            Scheme::SpectralRk4 => {
                let op = SpectralLaplacian::new(grid, params)?;
                let multiplier: Vec<f64> = if cfg.dealias {
                    let mask = dealias_mask(grid);
                    retained = Some(grid.real_fft().half_spectrum(&mask));
                    op.symbol().iter().zip(mask).map(|(s, k)| s * k).collect()
                } else {
                    op.symbol().to_vec()
                };
                let bound = multiplier.iter().copied().fold(0.0, f64::max);
                let multiplier = grid.real_fft().half_spectrum(&multiplier);
                (Operator::Spectral { multiplier }, bound)
            }
            Scheme::QuadratureEuler => {
                let op = QuadratureLaplacian::new(grid, params, cfg.exterior)?;
                let bound = op.max_row_sum();
                (Operator::Quadrature(op), bound)
            }
        };
        let dim = grid.dim();
        let outer = (0..grid.len())
            .map(|i| !grid.in_central_half_box(&grid.point(i)[..dim]))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            params,
            m,
            cfg,
            operator,
            symbol_bound,
            retained,
            outer,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> FracParams {
        self.params
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Bound `S` on the discrete operator: `max |κ|^σ` or the largest row sum.
    pub fn symbol_bound(&self) -> f64 {
        self.symbol_bound
    }

    /// `c · u_eff^{1−m} / (m S)` with `u_eff = max(floor, min positive u)`, capped by `max_dt`.
    pub fn stable_dt(&self, u: &[f64]) -> f64 {
        let min_pos = u.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        let u_eff = if min_pos.is_finite() {
            min_pos.max(self.cfg.floor)
        } else {
            self.cfg.floor
        };
        if u_eff == 0.0 {
            // zero field: the operator acts trivially
            return self.cfg.max_dt;
        }
        let dt = self.cfg.safety * u_eff.powf(1.0 - self.m) / (self.m * self.symbol_bound);
        dt.min(self.cfg.max_dt)
    }

    /// `−L(u^m)`.
    pub fn rhs(&self, u: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(u.len());
        self.rhs_into(u, &mut out);
        out
    }

    fn rhs_into(&self, u: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(u.iter().map(|&v| flux(v, self.m)));
        match &self.operator {
            Operator::Spectral { multiplier } => {
                self.grid.real_fft().filter_in_place(out, multiplier);
                out.iter_mut().for_each(|v| *v = -*v);
            }
            Operator::Quadrature(op) => {
                op.apply_in_place(out);
                out.iter_mut().for_each(|v| *v = -*v);
            }
        }
    }

    /// One step of size `dt`; returns the new field and the mass added by flooring.
    pub fn step(&self, u: &Field, dt: f64) -> Result<(Field, f64)> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let limit = self.stable_dt(u.values());
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, limit });
        }
        let mut values = u.values().to_vec();
        let clamped = self.advance(&mut values, dt, &mut Stages::default());
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: 1, time: dt });
        }
        Ok((Field::from_vec_unchecked(self.grid.clone(), values), clamped))
    }

    fn advance(&self, u: &mut [f64], dt: f64, buf: &mut Stages) -> f64 {
        let Stages { k, stage, acc } = buf;
        match self.cfg.scheme {
            Scheme::QuadratureEuler => {
                self.rhs_into(u, k);
                for (v, k) in u.iter_mut().zip(k.iter()) {
                    *v += dt * k;
                }
            }
            Scheme::SpectralRk4 => {
                acc.clear();
                acc.extend_from_slice(u);
                self.rhs_into(u, k);
                for (w, h) in [(1.0 / 6.0, 0.5), (1.0 / 3.0, 0.5), (1.0 / 3.0, 1.0)] {
                    stage.clear();
                    stage.extend(u.iter().zip(k.iter()).map(|(v, k)| v + h * dt * k));
                    for (a, k) in acc.iter_mut().zip(k.iter()) {
                        *a += w * dt * k;
                    }
                    self.rhs_into(stage, k);
                }
                for ((v, a), k) in u.iter_mut().zip(acc.iter()).zip(k.iter()) {
                    *v = a + dt / 6.0 * k;
                }
            }
        }
        let mut clamped = 0.0;
        for v in u.iter_mut() {
            if *v < self.cfg.floor {
                clamped += self.cfg.floor - *v;
                *v = self.cfg.floor;
            }
        }
        clamped * self.grid.cell_volume()
    }

    fn diagnostics(&self, step: usize, time: f64, dt: f64, u: &[f64], clamped: f64) -> StepDiagnostics {
        let mut total = 0.0;
        let mut positive = 0.0;
        let mut outer = 0.0;
        let mut linf: f64 = 0.0;
        let mut min = f64::INFINITY;
        for (&v, &out) in u.iter().zip(&self.outer) {
            total += v;
            linf = linf.max(v.abs());
            min = min.min(v);
            let p = v.max(0.0);
            positive += p;
            if out {
                outer += p;
            }
        }
        StepDiagnostics {
            step,
            time,
            dt,
            mass: total * self.grid.cell_volume(),
            linf,
            min,
            clamped_mass: clamped,
            boundary_fraction: if positive > 0.0 { outer / positive } else { 0.0 },
        }
    }

    /// Fraction of `‖u‖₂²` carried by the modes removed by dealiasing
    /// (zero when dealiasing is off).
    pub fn high_mode_energy(&self, u: &[f64]) -> f64 {
        let Some(retained) = &self.retained else {
            return 0.0;
        };
        let low = self.grid.real_fft().filter(u, retained);
        let total: f64 = u.iter().map(|v| v * v).sum();
        if total == 0.0 {
            return 0.0;
        }
        u.iter().zip(&low).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / total
    }

    /// Run to time `t_end`, keeping a snapshot every `record_every` steps and at `t_end`.
    pub fn run(&self, u0: &Field, t_end: f64) -> Result<Trajectory> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::param("T", format!("final time must be positive, got {t_end}")));
        }
        let mut out = self.run_ensemble(std::slice::from_ref(u0), &[t_end], true)?;
        Ok(out.remove(0))
    }

    /// Run with snapshots exactly at the given increasing positive times.
    pub fn run_sampled(&self, u0: &Field, times: &[f64]) -> Result<Trajectory> {
        let mut out = self.run_ensemble(std::slice::from_ref(u0), times, false)?;
        Ok(out.remove(0))
    }

    /// Advance several initial fields in lockstep with a common step size
    /// (the smallest stable step among them) and common sample times.
    pub fn run_lockstep(&self, u0: &[Field], times: &[f64]) -> Result<Vec<Trajectory>> {
        self.run_ensemble(u0, times, false)
    }

    fn run_ensemble(&self, u0: &[Field], times: &[f64], cadence: bool) -> Result<Vec<Trajectory>> {
        if u0.is_empty() {
            return Err(Error::Precondition("no initial fields".into()));
        }
        if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::param("times", "sample times must be positive and finite"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("times", "sample times must be strictly increasing"));
        }
        let mut states = Vec::with_capacity(u0.len());
        let mut trajs = Vec::with_capacity(u0.len());
        for f in u0 {
            if f.grid() != &self.grid {
                return Err(Error::GridMismatch);
            }
            // masked modes are never updated, so start inside the retained band
            let start = match &self.retained {
                Some(retained) => self.grid.real_fft().filter(f.values(), retained),
                None => f.values().to_vec(),
            };
            let mut lift = 0.0;
            let values: Vec<f64> = start
                .iter()
                .map(|&v| {
                    if v < self.cfg.floor {
                        lift += self.cfg.floor - v;
                        self.cfg.floor
                    } else {
                        v
                    }
                })
                .collect();
            let start = Field::from_vec_unchecked(self.grid.clone(), values.clone());
            trajs.push(Trajectory {
                times: vec![0.0],
                snapshots: vec![start],
                diagnostics: vec![self.diagnostics(0, 0.0, 0.0, &values, 0.0)],
                initial_lift: lift * self.grid.cell_volume(),
                high_mode_energy: 0.0,
            });
            states.push(values);
        }
        let mut buf = Stages::default();
        let mut t = 0.0;
        let mut step = 0usize;
        for &target in times {
            while t < target {
                let mut dt = states.iter().map(|u| self.stable_dt(u)).fold(f64::INFINITY, f64::min);
                let remaining = target - t;
                // avoid a sliver step just before a sample time
                if dt >= remaining || remaining - dt < 1e-9 * target {
                    dt = remaining;
                } else if dt > 0.5 * remaining {
                    dt = 0.5 * remaining;
                }
                let reached = dt == remaining;
                step += 1;
                for (u, traj) in states.iter_mut().zip(trajs.iter_mut()) {
                    let clamped = self.advance(u, dt, &mut buf);
                    if u.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite { step, time: t + dt });
                    }
                    let time = if reached { target } else { t + dt };
                    traj.diagnostics.push(self.diagnostics(step, time, dt, u, clamped));
                }
                t = if reached { target } else { t + dt };
                if cadence && !reached && step.is_multiple_of(self.cfg.record_every) {
                    for (u, traj) in states.iter().zip(trajs.iter_mut()) {
                        traj.times.push(t);
                        traj.snapshots
                            .push(Field::from_vec_unchecked(self.grid.clone(), u.clone()));
                    }
                }
            }
            for (u, traj) in states.iter().zip(trajs.iter_mut()) {
                traj.times.push(target);
                traj.snapshots
                    .push(Field::from_vec_unchecked(self.grid.clone(), u.clone()));
            }
        }
        for (u, traj) in states.iter().zip(trajs.iter_mut()) {
            traj.high_mode_energy = self.high_mode_energy(u);
        }
        Ok(trajs)
    }
}
