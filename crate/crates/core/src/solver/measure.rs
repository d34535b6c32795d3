use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Point};

/// Default mollifier width, in grid cells.
pub const DEFAULT_MOLLIFIER_WIDTH: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Point,
    pub mass: f64,
}

type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Initial measure `Σ mᵢ δ_{xᵢ} + ρ(x) dx`. Atoms are realized on a grid as
/// Gaussian bumps whose standard deviation is `mollifier_width` cells.
#[derive(Clone)]
pub struct MeasureSpec {
    atoms: Vec<Atom>,
    density: Option<DensityFn>,
    mollifier_width: f64,
}

impl fmt::Debug for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasureSpec")
            .field("atoms", &self.atoms)
            .field("density", &self.density.is_some())
            .field("mollifier_width", &self.mollifier_width)
            .finish()
    }
}

impl Default for MeasureSpec {
    fn default() -> Self {
        Self::empty()
    }
}

impl MeasureSpec {
    pub fn empty() -> Self {
        Self {
            atoms: Vec::new(),
            density: None,
            mollifier_width: DEFAULT_MOLLIFIER_WIDTH,
        }
    }

    pub fn atom(location: Point, mass: f64) -> Result<Self> {
        Self::empty().with_atom(location, mass)
    }

    pub fn with_atom(mut self, location: Point, mass: f64) -> Result<Self> {
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::param(
                "mass",
                format!("atom mass must be finite and >= 0, got {mass}"),
            ));
        }
        if location.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("location", "atom location must be finite"));
        }
        self.atoms.push(Atom { location, mass });
        Ok(self)
    }

    /// Adds a nonnegative density; values are clamped below at zero when sampled.
    pub fn with_density(mut self, density: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let density: DensityFn = match self.density.take() {
            Some(prev) => Arc::new(move |x| prev(x) + density(x)),
            None => Arc::new(density),
        };
        self.density = Some(density);
        self
    }

    /// Gaussian density `mass · exp(−|x−c|²/(2w²)) / (2πw²)^{N/2}` in `dim` dimensions.
    pub fn with_gaussian_density(self, dim: usize, center: Point, width: f64, mass: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::param(
                "width",
                format!("density width must be positive, got {width}"),
            ));
        }
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::param(
                "mass",
                format!("density mass must be finite and >= 0, got {mass}"),
            ));
        }
        let norm = mass / (2.0 * std::f64::consts::PI * width * width).powf(0.5 * dim as f64);
        Ok(self.with_density(move |x| {
            let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
            norm * (-0.5 * r2 / (width * width)).exp()
        }))
    }

    pub fn with_mollifier_width(mut self, cells: f64) -> Result<Self> {
        if !(cells > 0.0 && cells.is_finite()) {
            return Err(Error::param(
                "mollifier_width",
                format!("mollifier width must be positive, got {cells}"),
            ));
        }
        self.mollifier_width = cells;
        Ok(self)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn has_density(&self) -> bool {
        self.density.is_some()
    }

    pub fn mollifier_width(&self) -> f64 {
        self.mollifier_width
    }

    /// Density value at `x` (zero without a density).
    pub fn density_at(&self, x: &[f64]) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d(x).max(0.0))
    }

    /// `Σ mᵢ + ∫ρ`, with the density integrated on `grid`.
    pub fn total_mass(&self, grid: &Grid) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass).sum();
        let density = if self.density.is_some() {
            grid.sample(|x| self.density_at(x)).integrate()
        } else {
            0.0
        };
        atoms + density
    }

    /// `Σ mᵢ φ(xᵢ) + ∫ ρ φ`, with the density part integrated on `grid`.
    pub fn pairing(&self, grid: &Grid, phi: impl Fn(&[f64]) -> f64) -> f64 {
        let dim = grid.dim();
        let atoms: f64 = self.atoms.iter().map(|a| a.mass * phi(&a.location[..dim])).sum();
        let density = if self.density.is_some() {
            grid.sample(|x| self.density_at(x) * phi(x)).integrate()
        } else {
            0.0
        };
        atoms + density
    }
}

/// Realize `mu` on `grid`: each atom becomes a Gaussian bump of standard
/// deviation `ε·dx`, renormalized so its discrete integral equals its mass.
pub fn init_from_measure(mu: &MeasureSpec, grid: &Grid) -> Result<Field> {
    let dim = grid.dim();
    let mut values = vec![0.0; grid.len()];
    let width = mu.mollifier_width * grid.spacing();
    for atom in &mu.atoms {
        if !grid.in_central_half_box(&atom.location[..dim]) {
            return Err(Error::param(
                "atoms",
                format!(
                    "atom at {:?} lies outside the central half-box (-{}, {})^{}",
                    &atom.location[..dim],
                    grid.half_width() / 2.0,
                    grid.half_width() / 2.0,
                    dim
                ),
            ));
        }
        if atom.mass == 0.0 {
            continue;
        }
        let bump: Vec<f64> = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                let r2: f64 = (0..dim).map(|k| (p[k] - atom.location[k]).powi(2)).sum();
                (-0.5 * r2 / (width * width)).exp()
            })
            .collect();
        let total: f64 = bump.iter().sum::<f64>() * grid.cell_volume();
        let scale = atom.mass / total;
        for (v, b) in values.iter_mut().zip(bump) {
            *v += scale * b;
        }
    }
    if mu.density.is_some() {
        for (i, v) in values.iter_mut().enumerate() {
            let p = grid.point(i);
            *v += mu.density_at(&p[..dim]);
        }
    }
    Field::new(grid.clone(), values)
}

/// Smooth radial cutoff: 1 for `r ≤ k·unit`, 0 for `r ≥ 2k·unit`.
pub fn cutoff_profile(k: usize, unit: f64, r: f64) -> f64 {
    let s = r / (k as f64 * unit) - 1.0;
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        b / (a + b)
    }
}

/// `h_k μ`: atom masses and the density multiplied by the cutoff of radius
/// `k·unit` (pass the grid spacing as `unit` to measure `k` in cells).
pub fn cutoff_sequence(mu: &MeasureSpec, k: usize, unit: f64) -> Result<MeasureSpec> {
    if k == 0 {
        return Err(Error::param("k", "cutoff index must be >= 1"));
    }
    if !(unit > 0.0 && unit.is_finite()) {
        return Err(Error::param(
            "unit",
            format!("cutoff unit must be positive, got {unit}"),
        ));
    }
    let radius = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let atoms = mu
        .atoms
        .iter()
        .map(|a| Atom {
            location: a.location,
            mass: a.mass * cutoff_profile(k, unit, radius(&a.location)),
        })
        .collect();
    let density = mu
        .density
        .clone()
        .map(|d| -> DensityFn { Arc::new(move |x: &[f64]| d(x) * cutoff_profile(k, unit, radius(x))) });
    Ok(MeasureSpec {
        atoms,
        density,
        mollifier_width: mu.mollifier_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_carry_exact_mass() {
        let g = Grid::new(1, 8.0, 128).unwrap();
        let mu = MeasureSpec::atom([0.3, 0.0], 1.0)
            .unwrap()
            .with_atom([-1.0, 0.0], 2.0)
            .unwrap();
        let u = init_from_measure(&mu, &g).unwrap();
        assert!((u.integrate() - 3.0).abs() < 1e-13);
        assert_eq!(init_from_measure(&MeasureSpec::empty(), &g).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn rejects_atoms_outside_half_box() {
        let g = Grid::new(2, 4.0, 16).unwrap();
        let mu = MeasureSpec::atom([0.0, 2.5], 1.0).unwrap();
        assert!(init_from_measure(&mu, &g).is_err());
    }

    #[test]
    fn cutoff_is_monotone_in_k() {
        for r in [0.0, 0.5, 1.2, 1.9, 2.5, 3.7, 5.0] {
            let mut last = 0.0;
            for k in 1..6 {
                let h = cutoff_profile(k, 1.0, r);
                assert!((0.0..=1.0).contains(&h));
                assert!(h >= last);
                last = h;
            }
        }
        assert_eq!(cutoff_profile(2, 1.0, 2.0), 1.0);
        assert_eq!(cutoff_profile(2, 1.0, 4.0), 0.0);
    }

    #[test]
    fn large_cutoff_is_identity() {
        let mu = MeasureSpec::atom([1.0, 0.0], 1.5).unwrap();
        let cut = cutoff_sequence(&mu, 4, 0.5).unwrap();
        assert_eq!(cut.atoms()[0].mass, 1.5);
        let cut = cutoff_sequence(&mu, 1, 0.5).unwrap();
        assert_eq!(cut.atoms()[0].mass, 0.0);
    }
}
