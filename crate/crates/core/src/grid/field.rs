use num_complex::Complex64;

use super::Grid;
use crate::error::{Error, Result};

/// Real samples on a [`Grid`]. Values are finite after every public operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

/// Fourier coefficients of a [`Field`], normalized so that the zero mode is
/// the mean of the samples and the inverse is a plain sum over modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "field samples must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_vec_unchecked(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_grid(other)?;
        Ok(Field::from_vec_unchecked(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    pub fn positive_part(&self) -> Field {
        self.map(|v| v.max(0.0))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Discrete integral `Σ values · dx^N` over the box.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Discrete `∫ f g`.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_volume())
    }

    /// Discrete `L^p` norm with `dx^N` weighting; `p = f64::INFINITY` gives the max norm.
    pub fn norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::param("p", format!("norm exponent must be >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(self.sup_norm());
        }
        let scale = self.sup_norm();
        if scale == 0.0 {
            return Ok(0.0);
        }
        // scaled to avoid overflow for large p
        let sum: f64 = self.values.iter().map(|v| (v.abs() / scale).powf(p)).sum();
        Ok(scale * (sum * self.grid.cell_volume()).powf(1.0 / p))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn forward_transform(&self) -> SpectralField {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.fft().forward(&mut buf);
        let norm = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|c| *c *= norm);
        SpectralField {
            grid: self.grid.clone(),
            coeffs: buf,
        }
    }

    pub(crate) fn check_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Real part of the inverse transform.
    pub fn inverse_transform(&self) -> Field {
        let mut buf = self.coeffs.clone();
        self.grid.fft().inverse(&mut buf);
        Field::from_vec_unchecked(self.grid.clone(), buf.into_iter().map(|c| c.re).collect())
    }

    /// `Σ|c_k|² · |box|`, which equals `Σ|values|² dx^N` by Parseval.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.box_volume()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn constant_transform_is_zero_mode_only() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let s = g.constant(2.5).forward_transform();
        assert!((s.coeffs()[0].re - 2.5).abs() < 1e-14);
        assert!(s.coeffs()[1..].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn cosine_hits_two_modes() {
        let g = Grid::new(1, PI, 64).unwrap();
        let f = g.sample(|x| (3.0 * x[0]).cos());
        let s = f.forward_transform();
        for (j, c) in s.coeffs().iter().enumerate() {
            let k = g.signed_mode(j);
            if k.abs() == 3 {
                assert!((c.norm() - 0.5).abs() < 1e-13);
            } else {
                assert!(c.norm() < 1e-13, "mode {k} carries {c}");
            }
        }
    }

    #[test]
    fn integrate_box_measure() {
        let g = Grid::new(1, PI, 32).unwrap();
        assert!((g.constant(1.0).integrate() - 2.0 * PI).abs() < 1e-13);
        assert_eq!(g.zeros().integrate(), 0.0);
    }

    #[test]
    fn norms_of_unit_field() {
        let g = Grid::new(1, PI, 32).unwrap();
        let one = g.constant(1.0);
        assert_eq!(one.norm(f64::INFINITY).unwrap(), 1.0);
        assert!((one.norm(2.0).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!(one.norm(0.5).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(Field::new(g, v).is_err());
    }
}
