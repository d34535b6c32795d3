//! The weight family `ϑ(x) = (1 + (|x|² − 1)₊⁴)^{−a/8}` with
//! `a ∈ (N, N + σ/m)`, and its rescalings `ϑ_R(x) = ϑ(x/R)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::{Exterior, FracParams, QuadratureLaplacian};
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    dim: usize,
    a: f64,
    sigma: f64,
    m: f64,
    radius: f64,
}

impl Weight {
    pub fn new(dim: usize, sigma: f64, m: f64, a: f64) -> Result<Self> {
        FracParams::new(dim, sigma)?;
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::param("m", format!("m must lie in (0, 1), got {m}")));
        }
        let (lo, hi) = Self::admissible_range(dim, sigma, m);
        if !(a > lo && a < hi) {
            return Err(Error::param(
                "a",
                format!("weight exponent must lie in (N, N + σ/m) = ({lo}, {hi}), got {a}"),
            ));
        }
        Ok(Self {
            dim,
            a,
            sigma,
            m,
            radius: 1.0,
        })
    }

    /// The open interval `(N, N + σ/m)` of admissible exponents.
    pub fn admissible_range(dim: usize, sigma: f64, m: f64) -> (f64, f64) {
        let n = dim as f64;
        (n, n + sigma / m)
    }

    /// `ϑ_R` for `R ≥ 1`.
    pub fn with_radius(self, radius: f64) -> Result<Self> {
        if !(radius >= 1.0 && radius.is_finite()) {
            return Err(Error::param("R", format!("rescale radius must be >= 1, got {radius}")));
        }
        Ok(Self { radius, ..self })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exponent(&self) -> f64 {
        self.a
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().take(self.dim).map(|c| c * c).sum::<f64>() / (self.radius * self.radius);
        let excess = (r2 - 1.0).max(0.0);
        (1.0 + excess.powi(4)).powf(-self.a / 8.0)
    }

    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        self.check_grid(grid)?;
        Ok(grid.sample(|x| self.eval(x)))
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.dim() == self.dim {
            Ok(())
        } else {
            Err(Error::param(
                "dim",
                format!("weight built for N = {} used on an N = {} grid", self.dim, grid.dim()),
            ))
        }
    }
}

pub fn weight_eval(w: &Weight, x: &[f64]) -> f64 {
    w.eval(x)
}

/// `∫ f ϑ_R` over the box.
pub fn weighted_l1(f: &Field, w: &Weight) -> Result<f64> {
    f.dot(&w.sample(f.grid())?)
}

/// Truncated quotient integral and the pointwise decay constant of `(−Δ)^{σ/2}ϑ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientIntegral {
    pub half_width: f64,
    /// `∫_box (|(−Δ)^{σ/2}ϑ| / ϑ^m)^{1/(1−m)}`.
    pub integral: f64,
    /// `max_x |(−Δ)^{σ/2}ϑ(x)| (1 + |x|^{N+σ})`.
    pub pointwise_constant: f64,
}

/// Evaluates the quotient condition with the periodic quadrature Laplacian
/// applied to the sampled weight.
pub fn weight_quotient_integral(w: &Weight, grid: &Grid) -> Result<QuotientIntegral> {
    let params = FracParams::new(w.dim, w.sigma)?;
    let theta = w.sample(grid)?;
    let op = QuadratureLaplacian::new(grid, params, Exterior::Periodic)?;
    let lt = op.apply(&theta)?;
    let power = 1.0 / (1.0 - w.m);
    let mut integral = 0.0;
    let mut constant: f64 = 0.0;
    for (i, (&l, &t)) in lt.values().iter().zip(theta.values()).enumerate() {
        integral += (l.abs() / t.powf(w.m)).powf(power);
        let p = grid.point(i);
        let r = p[..w.dim].iter().map(|c| c * c).sum::<f64>().sqrt();
        constant = constant.max(l.abs() * (1.0 + r.powf(w.dim as f64 + w.sigma)));
    }
    Ok(QuotientIntegral {
        half_width: grid.half_width(),
        integral: integral * grid.cell_volume(),
        pointwise_constant: constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weight() -> Weight {
        Weight::new(1, 1.0, 0.5, 2.0).unwrap()
    }

    #[test]
    fn rejects_exponents_outside_interval() {
        assert!(Weight::new(1, 1.0, 0.5, 1.0).is_err());
        assert!(Weight::new(1, 1.0, 0.5, 3.0).is_err());
        assert!(Weight::new(1, 1.0, 0.5, 2.99).is_ok());
        assert!(weight().with_radius(0.5).is_err());
    }

    #[test]
    fn closed_form_values() {
        let w = weight();
        assert_eq!(w.eval(&[0.0]), 1.0);
        assert_eq!(w.eval(&[1.0]), 1.0);
        let far: f64 = 1e3;
        assert!((far.powf(w.exponent()) * w.eval(&[far]) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn rescaling_is_dilation() {
        let w = weight();
        let wr = w.with_radius(4.0).unwrap();
        for x in [0.3, 2.0, 7.5, 40.0] {
            assert_eq!(wr.eval(&[x]), w.eval(&[x / 4.0]));
        }
    }

    #[test]
    fn weighted_l1_monotone_in_radius() {
        let g = Grid::new(1, 16.0, 128).unwrap();
        let f = g.sample(|x| (-0.1 * x[0] * x[0]).exp());
        let mut last = 0.0;
        for r in [1.0, 2.0, 4.0, 8.0] {
            let v = weighted_l1(&f, &weight().with_radius(r).unwrap()).unwrap();
            assert!(v >= last);
            last = v;
        }
        assert_eq!(weighted_l1(&g.zeros(), &weight()).unwrap(), 0.0);
    }
}
