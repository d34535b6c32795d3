//! Periodic grid on `[-L, L)^N` and the real fields living on it.
//!
//! Points are `x_j = -L + j dx` with `dx = 2L/n`. For `N = 2` the layout is
//! row-major: index `i0 * n + i1` holds the point `(x_{i0}, x_{i1})`.

mod fft;
mod field;

use std::fmt;
use std::sync::Arc;

pub(crate) use fft::{CubeFft, RealCubeFft};
pub use field::{Field, SpectralField};

use crate::error::{Error, Result};

/// Coordinates of a grid point; only the first `dim` entries are meaningful.
pub type Point = [f64; 2];

#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    half_width: f64,
    n: usize,
    fft: CubeFft,
    real_fft: RealCubeFft,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("half_width", &self.half_width())
            .field("n", &self.points_per_dim())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.dim() == other.dim()
                && self.points_per_dim() == other.points_per_dim()
                && self.half_width() == other.half_width())
    }
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per dimension must be a power of two and at least 8, got {n}"
            )));
        }
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                half_width,
                n,
                fft: CubeFft::new(dim, n),
                real_fft: RealCubeFft::new(dim, n),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    pub fn points_per_dim(&self) -> usize {
        self.inner.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.inner.half_width / self.inner.n as f64
    }

    /// Total number of samples, `n^N`.
    pub fn len(&self) -> usize {
        self.inner.n.pow(self.inner.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one cell, `dx^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.inner.dim as i32)
    }

    pub fn box_volume(&self) -> f64 {
        (2.0 * self.inner.half_width).powi(self.inner.dim as i32)
    }

    /// Per-axis indices of a flat index.
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        let n = self.inner.n;
        match self.inner.dim {
            1 => [idx, 0],
            _ => [idx / n, idx % n],
        }
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.inner.half_width + j as f64 * self.spacing()
    }

    pub fn point(&self, idx: usize) -> Point {
        let [i0, i1] = self.multi_index(idx);
        match self.inner.dim {
            1 => [self.coord(i0), 0.0],
            _ => [self.coord(i0), self.coord(i1)],
        }
    }

    /// Signed frequency index of mode `j`: `k ∈ {-n/2, …, n/2 - 1}`.
    pub fn signed_mode(&self, j: usize) -> i64 {
        let n = self.inner.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Physical frequency `κ = π k / L` of mode `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        std::f64::consts::PI * self.signed_mode(j) as f64 / self.inner.half_width
    }

    /// `|κ|` for every flat mode index.
    pub fn wavenumber_magnitudes(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let [i0, i1] = self.multi_index(idx);
                match self.inner.dim {
                    1 => self.wavenumber(i0).abs(),
                    _ => self.wavenumber(i0).hypot(self.wavenumber(i1)),
                }
            })
            .collect()
    }

    /// True when every coordinate of `x` lies strictly inside `(-L/2, L/2)`.
    pub fn in_central_half_box(&self, x: &[f64]) -> bool {
        let h = 0.5 * self.inner.half_width;
        x.iter().take(self.inner.dim).all(|c| c.abs() < h)
    }

    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Field {
        let dim = self.inner.dim;
        let values = (0..self.len())
            .map(|idx| {
                let p = self.point(idx);
                f(&p[..dim])
            })
            .collect();
        Field::from_vec_unchecked(self.clone(), values)
    }

    pub fn zeros(&self) -> Field {
        Field::from_vec_unchecked(self.clone(), vec![0.0; self.len()])
    }

    pub fn constant(&self, c: f64) -> Field {
        Field::from_vec_unchecked(self.clone(), vec![c; self.len()])
    }

    pub(crate) fn fft(&self) -> &CubeFft {
        &self.inner.fft
    }

    /// Apply a real Fourier multiplier (one entry per mode) to real samples.
    pub(crate) fn real_fft(&self) -> &RealCubeFft {
        &self.inner.real_fft
    }

    /// Apply a real, even Fourier multiplier given on the full mode layout.
    pub(crate) fn apply_multiplier(&self, values: &[f64], multiplier: &[f64]) -> Vec<f64> {
        let half = self.real_fft().half_spectrum(multiplier);
        self.real_fft().filter(values, &half)
    }
}
