use super::lattice::{gauss_legendre, riesz_lattice_constant};
use super::{c_constant, Exterior, FracParams, QuadratureLaplacian};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, RealCubeFft};

/// Free-space Riesz potential `U(x_i) = C_{N,−σ} Σ_j f_j K_{ij} dx^N` with
/// `K_{ij} = |x_i − x_j|^{σ−N}` off the diagonal. The diagonal carries the
/// kernel integrated over the central cell together with the lattice defect
/// of the off-diagonal samples, so the sum is second-order accurate for
/// smooth densities. Evaluated as a zero-padded linear convolution: there
/// are no periodic images.
#[derive(Debug, Clone)]
pub struct RieszPotential {
    grid: Grid,
    kernel_hat: Vec<f64>,
    fft: RealCubeFft,
}

impl RieszPotential {
    pub fn new(grid: &Grid, params: FracParams) -> Result<Self> {
        params.check_grid(grid)?;
        params.require_riesz()?;
        let dim = grid.dim();
        let n = grid.points_per_dim();
        let sigma = params.sigma();
        let side = 2 * n;
        let scale = c_constant(dim, -sigma)? * grid.spacing().powf(sigma);
        let signed = |o: usize| if o < n { o as i64 } else { o as i64 - side as i64 };
        let mut kernel: Vec<f64> = (0..side.pow(dim as u32))
            .map(|o| {
                let (a, b) = if dim == 1 { (o, 0) } else { (o / side, o % side) };
                let d = [signed(a), if dim == 1 { 0 } else { signed(b) }];
                let value = if d == [0, 0] {
                    riesz_lattice_constant(dim, sigma)
                } else if d[0].abs() >= n as i64 || d[1].abs() >= n as i64 {
                    0.0
                } else {
                    ((d[0] * d[0] + d[1] * d[1]) as f64).powf(0.5 * (sigma - dim as f64))
                };
                scale * value
            })
            .collect();
        let fft = RealCubeFft::new(dim, side);
        // the kernel is even, so its transform is real
        let kernel_hat = fft.forward(&mut kernel).iter().map(|c| c.re).collect();
        Ok(Self {
            grid: grid.clone(),
            kernel_hat,
            fft,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Field::from_vec_unchecked(
            self.grid.clone(),
            self.apply_values(f.values()),
        ))
    }

    pub(crate) fn apply_values(&self, values: &[f64]) -> Vec<f64> {
        let dim = self.grid.dim();
        let side = 2 * self.grid.points_per_dim();
        let flat = |i0: usize, i1: usize| if dim == 1 { i0 } else { i0 * side + i1 };
        let mut buf = vec![0.0; side.pow(dim as u32)];
        for (idx, &v) in values.iter().enumerate() {
            let [i0, i1] = self.grid.multi_index(idx);
            buf[flat(i0, i1)] = v;
        }
        let out = self.fft.filter(&buf, &self.kernel_hat);
        (0..values.len())
            .map(|idx| {
                let [i0, i1] = self.grid.multi_index(idx);
                out[flat(i0, i1)]
            })
            .collect()
    }
}

/// Gauss nodes per side for the exterior tail in [`laplacian_of_potential`].
const TAIL_NODES: usize = 64;

/// `(−Δ)^{σ/2}(𝓘_σ ∗ f)` on the whole line, for `f` supported in the box.
///
/// The potential is not truncated: inside the box the operator is the
/// absorbing quadrature, and the part of the integral over `|y| > L` uses the
/// potential evaluated directly at Gauss nodes on the exterior (substituting
/// `y = edge/t`). Accurate away from the box edges. One dimension only.
pub fn laplacian_of_potential(f: &Field, params: FracParams) -> Result<Field> {
    let grid = f.grid();
    if grid.dim() != 1 {
        return Err(Error::param("dim", "the exterior tail is implemented for N = 1"));
    }
    let u = RieszPotential::new(grid, params)?.apply(f)?;
    let inside = QuadratureLaplacian::new(grid, params, Exterior::Absorbing)?.apply(&u)?;
    let sigma = params.sigma();
    let dx = grid.spacing();
    let c_riesz = c_constant(1, -sigma)? * dx;
    let c_lap = c_constant(1, sigma)?;
    let n = grid.points_per_dim();
    let xs: Vec<f64> = (0..n).map(|j| grid.coord(j)).collect();
    let potential = |y: f64| -> f64 {
        c_riesz
            * xs.iter()
                .zip(f.values())
                .map(|(x, v)| v * (y - x).abs().powf(sigma - 1.0))
                .sum::<f64>()
    };
    let (nodes, weights) = gauss_legendre(TAIL_NODES);
    // (signed edge, y, weight · U(y))
    let mut tail = Vec::with_capacity(2 * TAIL_NODES);
    for edge in [xs[n - 1] + 0.5 * dx, xs[0] - 0.5 * dx] {
        for (z, w) in nodes.iter().zip(&weights) {
            let t = 0.5 * (z + 1.0);
            let y = edge / t;
            tail.push((y, 0.5 * w * edge.abs() / (t * t) * potential(y)));
        }
    }
    let values = xs
        .iter()
        .zip(inside.values())
        .map(|(x, l)| {
            l - c_lap
                * tail
                    .iter()
                    .map(|(y, wu)| wu * (y - x).abs().powf(-1.0 - sigma))
                    .sum::<f64>()
        })
        .collect();
    Field::new(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_dimension_at_or_below_sigma() {
        let g = Grid::new(1, 1.0, 16).unwrap();
        let p = FracParams::new(1, 1.0).unwrap();
        let err = RieszPotential::new(&g, p).unwrap_err();
        assert!(err.to_string().contains("Riesz potential requires N > σ"));
    }

    #[test]
    fn matches_direct_sum() {
        for (dim, sigma) in [(1, 0.4), (2, 1.3)] {
            let g = Grid::new(dim, 2.0, 8).unwrap();
            let p = FracParams::new(dim, sigma).unwrap();
            let f = g.sample(|x| 1.0 + x[0] - 0.3 * x.iter().map(|c| c * c).sum::<f64>());
            let u = RieszPotential::new(&g, p).unwrap().apply(&f).unwrap();
            let c = c_constant(dim, -sigma).unwrap();
            let h = g.spacing();
            for i in 0..g.len() {
                let xi = g.point(i);
                let mut s = 0.0;
                for j in 0..g.len() {
                    let xj = g.point(j);
                    let r = ((xi[0] - xj[0]).powi(2) + (xi[1] - xj[1]).powi(2)).sqrt();
                    let k = if i == j {
                        riesz_lattice_constant(dim, sigma) * h.powf(sigma - dim as f64)
                    } else {
                        r.powf(sigma - dim as f64)
                    };
                    s += c * k * f.values()[j] * g.cell_volume();
                }
                assert!(
                    (s - u.values()[i]).abs() < 1e-12 * s.abs().max(1.0),
                    "N={dim} i={i}: {s} vs {}",
                    u.values()[i]
                );
            }
        }
    }

    fn interior_error(n: usize) -> f64 {
        let g = Grid::new(1, 8.0, n).unwrap();
        let p = FracParams::new(1, 0.5).unwrap();
        let f = g.sample(|x| (-x[0] * x[0]).exp());
        let back = laplacian_of_potential(&f, p).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..g.len() {
            if g.in_central_half_box(&g.point(i)) {
                num += (back.values()[i] - f.values()[i]).powi(2);
                den += f.values()[i].powi(2);
            }
        }
        (num / den).sqrt()
    }

    #[test]
    fn inverts_the_potential_in_the_interior() {
        let e: Vec<f64> = [128, 256, 512].iter().map(|&n| interior_error(n)).collect();
        assert!(e[2] < 1e-3, "{e:?}");
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
    }

    #[test]
    fn tail_is_one_dimensional_only() {
        let g = Grid::new(2, 4.0, 16).unwrap();
        let p = FracParams::new(2, 1.0).unwrap();
        assert!(laplacian_of_potential(&g.constant(1.0), p).is_err());
    }
}
