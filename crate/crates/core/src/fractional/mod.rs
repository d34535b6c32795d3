//! Nonlocal operators: the fractional Laplacian `(−Δ)^{σ/2}` (spectral and
//! quadrature forms), the Riesz potential, fractional seminorms and the
//! Kato-inequality defect.

pub mod lattice;
mod quadrature;
mod riesz;

use serde::{Deserialize, Serialize};

pub use quadrature::{Exterior, QuadratureLaplacian};
pub use riesz::{laplacian_of_potential, RieszPotential};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Order `σ ∈ (0, 2)` of the operator together with the space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    sigma: f64,
    dim: usize,
}

impl FracParams {
    pub fn new(dim: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 2.0) {
            return Err(Error::param("sigma", format!("σ must lie in (0, 2), got {sigma}")));
        }
        if !(dim == 1 || dim == 2) {
            return Err(Error::param("dim", format!("dimension must be 1 or 2, got {dim}")));
        }
        Ok(Self { sigma, dim })
    }

    pub fn for_grid(grid: &Grid, sigma: f64) -> Result<Self> {
        Self::new(grid.dim(), sigma)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `m_c = (N − σ)/N`.
    pub fn critical_exponent(&self) -> f64 {
        (self.dim as f64 - self.sigma) / self.dim as f64
    }

    /// Smoothing exponent `α = N / (N(m − 1) + σ)`.
    pub fn smoothing_alpha(&self, m: f64) -> f64 {
        let n = self.dim as f64;
        n / (n * (m - 1.0) + self.sigma)
    }

    /// Mass exponent `γ = σα/N`.
    pub fn smoothing_gamma(&self, m: f64) -> f64 {
        self.sigma * self.smoothing_alpha(m) / self.dim as f64
    }

    pub fn require_riesz(&self) -> Result<()> {
        if (self.dim as f64) > self.sigma {
            Ok(())
        } else {
            Err(Error::RieszRequiresDimAboveSigma {
                dim: self.dim,
                sigma: self.sigma,
            })
        }
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.dim() == self.dim {
            Ok(())
        } else {
            Err(Error::param(
                "dim",
                format!(
                    "operator built for N = {} applied on an N = {} grid",
                    self.dim,
                    grid.dim()
                ),
            ))
        }
    }
}

/// `C_{N,s} = 2^{s−1} |s| Γ((N+s)/2) / (π^{N/2} Γ(1 − s/2))` for `s ∈ (−N, 2)`, `s ≠ 0`.
pub fn c_constant(dim: usize, s: f64) -> Result<f64> {
    let n = dim as f64;
    if dim == 0 || !(s > -n && s < 2.0) || s == 0.0 {
        return Err(Error::param(
            "s",
            format!("constant defined for s in (-N, 2) \\ {{0}}, got s = {s} with N = {dim}"),
        ));
    }
    let value = 2f64.powf(s - 1.0) * s.abs() * libm::tgamma(0.5 * (n + s))
        / (std::f64::consts::PI.powf(0.5 * n) * libm::tgamma(1.0 - 0.5 * s));
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::param("s", format!("Gamma pole reached at s = {s}")))
    }
}

/// Fourier multiplier `|κ|^σ`, optionally with the top third of modes removed
/// from the input before multiplication.
#[derive(Debug, Clone)]
pub struct SpectralLaplacian {
    grid: Grid,
    symbol: Vec<f64>,
}

impl SpectralLaplacian {
    pub fn new(grid: &Grid, params: FracParams) -> Result<Self> {
        params.check_grid(grid)?;
        let symbol = grid
            .wavenumber_magnitudes()
            .into_iter()
            .map(|k| k.powf(params.sigma()))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            symbol,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Largest symbol value, `max |κ|^σ`.
    pub fn max_symbol(&self) -> f64 {
        self.symbol.iter().copied().fold(0.0, f64::max)
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        Ok(Field::from_vec_unchecked(
            self.grid.clone(),
            self.apply_values(f.values()),
        ))
    }

    pub(crate) fn apply_values(&self, values: &[f64]) -> Vec<f64> {
        self.grid.apply_multiplier(values, &self.symbol)
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.grid() == &self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Mask keeping modes with every `|k| < n/3` (the 2/3 rule).
pub(crate) fn dealias_mask(grid: &Grid) -> Vec<f64> {
    let cutoff = grid.points_per_dim() as i64 / 3;
    (0..grid.len())
        .map(|idx| {
            let [i0, i1] = grid.multi_index(idx);
            let keep = grid.signed_mode(i0).abs() < cutoff && (grid.dim() == 1 || grid.signed_mode(i1).abs() < cutoff);
            if keep {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// `(−Δ)^{σ/2} f` via the multiplier `|κ|^σ`.
pub fn frac_laplacian_spectral(f: &Field, params: FracParams) -> Result<Field> {
    SpectralLaplacian::new(f.grid(), params)?.apply(f)
}

/// `(−Δ)^{σ/2} f` via periodic singular quadrature.
pub fn frac_laplacian_quadrature(f: &Field, params: FracParams) -> Result<Field> {
    QuadratureLaplacian::new(f.grid(), params, Exterior::Periodic)?.apply(f)
}

/// `𝓘_σ ∗ f` with the free-space kernel on the truncated box.
pub fn riesz_potential(f: &Field, params: FracParams) -> Result<Field> {
    RieszPotential::new(f.grid(), params)?.apply(f)
}

/// `‖(−Δ)^{σ/4} f‖₂`, computed spectrally.
pub fn sobolev_seminorm(f: &Field, params: FracParams) -> Result<f64> {
    params.check_grid(f.grid())?;
    let s = f.forward_transform();
    let energy: f64 = s
        .coeffs()
        .iter()
        .zip(f.grid().wavenumber_magnitudes())
        .map(|(c, k)| k.powf(params.sigma()) * c.norm_sqr())
        .sum();
    Ok((energy * f.grid().box_volume()).sqrt())
}

/// The same seminorm from the double-integral form
/// `(C_{N,σ}/2) ∬ (f(x) − f(y))² |x − y|^{−N−σ} dx dy`, summed pair by pair
/// with the periodic quadrature weights.
pub fn seminorm_double_integral(f: &Field, params: FracParams) -> Result<f64> {
    let op = QuadratureLaplacian::new(f.grid(), params, Exterior::Periodic)?;
    let v = f.values();
    let mut total = 0.0;
    for i in 0..v.len() {
        for j in 0..v.len() {
            if i != j {
                let d = v[i] - v[j];
                total += op.coupling(i, j) * d * d;
            }
        }
    }
    Ok((0.5 * total * f.grid().cell_volume()).sqrt())
}

/// `‖f‖_{2N/(N−σ)} / ‖(−Δ)^{σ/4} f‖₂`.
pub fn hls_ratio(f: &Field, params: FracParams) -> Result<f64> {
    params.require_riesz()?;
    if f.sup_norm() == 0.0 {
        return Err(Error::Precondition("HLS ratio undefined for the zero field".into()));
    }
    let n = params.dim() as f64;
    let p = 2.0 * n / (n - params.sigma());
    let semi = sobolev_seminorm(f, params)?;
    if semi == 0.0 {
        return Err(Error::Precondition(
            "HLS ratio undefined for a field with zero seminorm".into(),
        ));
    }
    Ok(f.norm(p)? / semi)
}

/// `χ_{f≥0} L f − L f₊` for the periodic quadrature operator.
pub fn kato_defect(f: &Field, params: FracParams) -> Result<Field> {
    QuadratureLaplacian::new(f.grid(), params, Exterior::Periodic)?.kato_defect(f)
}
