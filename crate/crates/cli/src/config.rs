//! Experiment configuration: a TOML document of dotted sections.
//!
//! | key | default | notes |
//! |---|---|---|
//! | `suites` | `["smoke"]` | smoke, paper-estimates, uniqueness, smoothing, weighted-decay, comparison, trace, potential-monotone, monotone-construction |
//! | `grid.dim` | 1 | 1 or 2 |
//! | `grid.half_width` | 16 | box is `[-L, L)^N` |
//! | `grid.points` | 256 | power of two, at least 8 |
//! | `equation.sigma` | 1 | `σ ∈ (0, 2)` |
//! | `equation.m` | 0.5 | `m ∈ (0, 1)` |
//! | `measure.atoms` | `[[0, 0, 1]]` | `[x, y, mass]`, inside the central half-box |
//! | `measure.mollifier_width` | 3 | cells |
//! | `solver.scheme` | `spectral_rk4` | or `quadrature_euler` |
//! | `solver.safety` | 0.5 | `(0, 1]` |
//! | `solver.floor` | 1e-8 | absolute |
//! | `solver.max_dt` | inf | |
//! | `solver.dealias` | true | spectral scheme only |
//! | `solver.exterior` | `periodic` | `absorbing` needs the quadrature scheme |
//! | `run.t_end` | 1 | |
//! | `run.samples` | 20 | evenly spaced on `(0, t_end]` |
//! | `output.dir` | `out` | overridden by `--out` |
//! | `output.dump_every` | 0 | write every k-th snapshot; 0 writes the final one (simulate) or none (suites) |
//! | `output.format` | `text` | snapshot dumps: `text` or `binary` |
//!
//! The check sections `smoothing`, `weighted`, `comparison`, `trace` and
//! `cutoff` take `dim`, `sigma` and `m` from `grid`/`equation` unless set.
//! `potential` (needs `N > σ`), `pairing` and `dual` keep their own
//! defaults. Their remaining keys default to the reference configurations.

use ffdlab::dual::PairingExperiment;
use ffdlab::estimates::{
    ComparisonExperiment, CutoffExperiment, PotentialExperiment, SmoothingExperiment, TraceExperiment,
    WeightedDecayExperiment,
};
use ffdlab::fractional::Exterior;
use ffdlab::solver::{MeasureSpec, Scheme, SnapshotFormat, SolverConfig};
use ffdlab::{FracParams, Grid};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Smoke,
    PaperEstimates,
    Uniqueness,
    Smoothing,
    WeightedDecay,
    Comparison,
    Trace,
    PotentialMonotone,
    MonotoneConstruction,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Smoke,
        Suite::PaperEstimates,
        Suite::Uniqueness,
        Suite::Smoothing,
        Suite::WeightedDecay,
        Suite::Comparison,
        Suite::Trace,
        Suite::PotentialMonotone,
        Suite::MonotoneConstruction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Smoke => "smoke",
            Suite::PaperEstimates => "paper-estimates",
            Suite::Uniqueness => "uniqueness",
            Suite::Smoothing => "smoothing",
            Suite::WeightedDecay => "weighted-decay",
            Suite::Comparison => "comparison",
            Suite::Trace => "trace",
            Suite::PotentialMonotone => "potential-monotone",
            Suite::MonotoneConstruction => "monotone-construction",
        }
    }

    pub fn parse(name: &str) -> Result<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name).ok_or_else(|| {
            let known: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
            CliError::config("suites", format!("unknown suite `{name}`; known: {}", known.join(", ")))
        })
    }

    /// The single checks a suite stands for.
    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::PaperEstimates => vec![
                Suite::Smoothing,
                Suite::WeightedDecay,
                Suite::Comparison,
                Suite::Trace,
                Suite::PotentialMonotone,
            ],
            s => vec![s],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            dim: 1,
            half_width: 16.0,
            points: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquationSection {
    pub sigma: f64,
    pub m: f64,
}

impl Default for EquationSection {
    fn default() -> Self {
        Self { sigma: 1.0, m: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureSection {
    pub atoms: Vec<[f64; 3]>,
    pub mollifier_width: f64,
}

impl Default for MeasureSection {
    fn default() -> Self {
        Self {
            atoms: vec![[0.0, 0.0, 1.0]],
            mollifier_width: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub scheme: Scheme,
    pub safety: f64,
    pub floor: f64,
    pub max_dt: f64,
    pub dealias: bool,
    pub exterior: Exterior,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            scheme: Scheme::SpectralRk4,
            safety: 0.5,
            floor: 1e-8,
            max_dt: f64::INFINITY,
            dealias: true,
            exterior: Exterior::Periodic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    pub samples: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            samples: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub dump_every: usize,
    pub format: SnapshotFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            dump_every: 0,
            format: SnapshotFormat::Text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualCoefficient {
    /// `α ≡ 1`.
    Unit,
    /// `B_n/A_n` frozen from a pair of atom runs with different mollifiers.
    Frozen,
}

/// The backward dual problem on `(t_start, t_end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualSection {
    pub dim: usize,
    pub sigma: f64,
    pub m: f64,
    pub half_width: f64,
    pub points: usize,
    pub coefficient: DualCoefficient,
    pub n: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Mollifier widths (cells) of the pair behind the frozen coefficient.
    pub widths: [f64; 2],
    pub samples: usize,
    pub floor: f64,
    pub eta_radius: f64,
    /// Fraction of the stability bound used as the step.
    pub safety: f64,
}

impl Default for DualSection {
    fn default() -> Self {
        Self {
            dim: 1,
            sigma: 0.5,
            m: 0.75,
            half_width: 8.0,
            points: 128,
            coefficient: DualCoefficient::Frozen,
            n: 10,
            t_start: 0.5,
            t_end: 2.0,
            widths: [4.0, 2.0],
            samples: 12,
            floor: 1e-6,
            eta_radius: 2.0,
            safety: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    M,
    Sigma,
}

/// Smoothing fits over a list of values of one parameter; every other key
/// comes from the `smoothing` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::M,
            values: vec![0.5, 0.6, 0.7],
        }
    }
}

/// A fully validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub suites: Vec<Suite>,
    pub grid: GridSection,
    pub equation: EquationSection,
    pub measure: MeasureSection,
    pub solver: SolverSection,
    pub run: RunSection,
    pub output: OutputSection,
    pub smoothing: SmoothingExperiment,
    pub weighted: WeightedDecayExperiment,
    pub comparison: ComparisonExperiment,
    pub trace: TraceExperiment,
    pub potential: PotentialExperiment,
    pub cutoff: CutoffExperiment,
    pub pairing: PairingExperiment,
    pub dual: DualSection,
    pub sweep: SweepSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

const SECTIONS: [&str; 15] = [
    "grid",
    "equation",
    "measure",
    "solver",
    "run",
    "output",
    "smoothing",
    "weighted",
    "comparison",
    "trace",
    "potential",
    "cutoff",
    "pairing",
    "dual",
    "sweep",
];

/// Sections whose `dim`, `sigma` and `m` follow `grid` and `equation`.
const INHERITING: [&str; 5] = ["smoothing", "weighted", "comparison", "trace", "cutoff"];

fn section<T: DeserializeOwned + Serialize + Default>(doc: &Table, name: &str) -> Result<T> {
    let Some(value) = doc.get(name) else {
        return Ok(T::default());
    };
    let table = value
        .as_table()
        .ok_or_else(|| CliError::config(name, "expected a section of key-value pairs"))?;
    let known = match Value::try_from(T::default()).expect("sections serialize") {
        Value::Table(t) => t,
        _ => unreachable!("sections serialize to tables"),
    };
    if let Some(k) = table.keys().find(|k| !known.contains_key(*k)) {
        let mut names: Vec<&String> = known.keys().collect();
        names.sort();
        let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        return Err(CliError::config(
            format!("{name}.{k}"),
            format!("unknown key; `{name}` accepts {}", names.join(", ")),
        ));
    }
    value.clone().try_into().map_err(|e: toml::de::Error| {
        let msg = e.message().to_string();
        CliError::config(name, msg)
    })
}

fn core_err(key: impl Into<String>) -> impl FnOnce(ffdlab::Error) -> CliError {
    let key = key.into();
    move |e| CliError::config(key, e.to_string())
}

/// Parse, apply defaults and validate.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config("document", e.message().to_string()))?;
    for key in doc.keys() {
        if key != "suites" && !SECTIONS.contains(&key.as_str()) {
            return Err(CliError::config(
                key.clone(),
                format!("unknown key; top-level keys are suites, {}", SECTIONS.join(", ")),
            ));
        }
    }
    let suites = match doc.get("suites") {
        None => vec![Suite::Smoke],
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .ok_or_else(|| CliError::config("suites", "expected a list of suite names"))
                    .and_then(Suite::parse)
            })
            .collect::<Result<_>>()?,
        Some(Value::String(s)) => vec![Suite::parse(s)?],
        Some(_) => return Err(CliError::config("suites", "expected a list of suite names")),
    };

    let grid: GridSection = section(&doc, "grid")?;
    let equation: EquationSection = section(&doc, "equation")?;
    for name in INHERITING {
        let entry = doc.entry(name).or_insert_with(|| Value::Table(Table::new()));
        if let Value::Table(t) = entry {
            t.entry("dim").or_insert(Value::Integer(grid.dim as i64));
            t.entry("sigma").or_insert(Value::Float(equation.sigma));
            t.entry("m").or_insert(Value::Float(equation.m));
        }
    }
    let cfg = ExperimentConfig {
        suites,
        grid,
        equation,
        measure: section(&doc, "measure")?,
        solver: section(&doc, "solver")?,
        run: section(&doc, "run")?,
        output: section(&doc, "output")?,
        smoothing: section(&doc, "smoothing")?,
        weighted: section(&doc, "weighted")?,
        comparison: section(&doc, "comparison")?,
        trace: section(&doc, "trace")?,
        potential: section(&doc, "potential")?,
        cutoff: section(&doc, "cutoff")?,
        pairing: section(&doc, "pairing")?,
        dual: section(&doc, "dual")?,
        sweep: section(&doc, "sweep")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<FracParams> {
        FracParams::new(self.grid.dim, self.equation.sigma).map_err(|e| match e {
            ffdlab::Error::InvalidParameter { name: "sigma", reason } => CliError::config("equation.sigma", reason),
            e => CliError::config("grid.dim", e.to_string()),
        })
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.half_width, self.grid.points).map_err(core_err("grid"))
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            scheme: s.scheme,
            safety: s.safety,
            max_dt: s.max_dt,
            floor: s.floor,
            dealias: s.dealias,
            record_every: 100,
            exterior: s.exterior,
        }
    }

    pub fn measure_spec(&self) -> Result<MeasureSpec> {
        self.measure
            .atoms
            .iter()
            .try_fold(MeasureSpec::empty(), |mu, a| mu.with_atom([a[0], a[1]], a[2]))
            .and_then(|mu| mu.with_mollifier_width(self.measure.mollifier_width))
            .map_err(core_err("measure"))
    }

    /// The base problem plus every section a requested suite needs.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        let grid = self.build_grid()?;
        let m = self.equation.m;
        if !(m > 0.0 && m < 1.0) {
            return Err(CliError::config("equation.m", format!("m must lie in (0, 1), got {m}")));
        }
        self.solver_config().validate().map_err(|e| match e {
            ffdlab::Error::InvalidParameter { name, reason } => CliError::config(format!("solver.{name}"), reason),
            e => CliError::config("solver", e.to_string()),
        })?;
        let mu = self.measure_spec()?;
        ffdlab::solver::init_from_measure(&mu, &grid).map_err(core_err("measure.atoms"))?;
        if !(self.run.t_end > 0.0 && self.run.t_end.is_finite()) {
            return Err(CliError::config(
                "run.t_end",
                format!("must be positive, got {}", self.run.t_end),
            ));
        }
        if self.run.samples == 0 {
            return Err(CliError::config("run.samples", "must be >= 1"));
        }
        let mut checks: Vec<Suite> = self.suites.iter().flat_map(|s| s.expand()).collect();
        checks.sort();
        checks.dedup();
        for s in checks {
            match s {
                Suite::Smoothing => self.smoothing.validate(),
                Suite::WeightedDecay => self.weighted.validate(),
                Suite::Comparison => self.comparison.validate(),
                Suite::Trace => self.trace.validate(),
                Suite::PotentialMonotone => self.potential.validate(),
                Suite::MonotoneConstruction => self.cutoff.validate(),
                Suite::Uniqueness => self.validate_pairing(),
                _ => Ok(()),
            }
            .map_err(|e| match e {
                ffdlab::Error::InvalidParameter { name, reason } => CliError::config(name, reason),
                e => CliError::config(s.name(), e.to_string()),
            })?;
        }
        Ok(())
    }

    fn validate_pairing(&self) -> ffdlab::Result<()> {
        let p = &self.pairing;
        let params = FracParams::new(p.dim, p.sigma)?;
        params.require_riesz()?;
        let mc = params.critical_exponent();
        if !(p.m > mc && p.m < 1.0) {
            return Err(ffdlab::Error::InvalidParameter {
                name: "pairing.m",
                reason: format!(
                    "m={} ≤ m_c={mc} for N={}, σ={}: uniqueness suite unavailable",
                    p.m, p.dim, p.sigma
                ),
            });
        }
        Grid::new(p.dim, p.half_width, p.points)?;
        Ok(())
    }

    /// The configuration as a TOML document that parses back to itself.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configurations serialize")
    }
}
