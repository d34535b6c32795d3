//! Regularized lattice constants and exterior integrals used to build the
//! singular quadrature weights.
//!
//! Both the hypersingular kernel `|y|^{-(N+σ)}` and the Riesz kernel
//! `|y|^{σ-N}` are sampled at cell centres away from the origin. The local
//! defect of that midpoint sampling is a pure power of the spacing, so it is
//! absorbed into a single constant per operator:
//!
//! ```text
//! Z = lim_{D→∞} [ ∫_{[-D-½, D+½]^N} g(z) dz − Σ_{0<|d|∞≤D} g(d) ]
//! ```
//!
//! with `g(z) = z₁² |z|^{-N-σ}` (second moment of the hypersingular kernel) or
//! `g(z) = |z|^{σ-N}` (Riesz kernel). In one dimension these are `-2ζ(σ-1)`
//! and `-2ζ(1-σ)`; in two dimensions the limit is taken numerically.

use std::f64::consts::PI;

/// Riemann zeta function for real `s ≠ 1`, via Euler–Maclaurin summation.
pub fn riemann_zeta(s: f64) -> f64 {
    assert!(s != 1.0, "zeta has a pole at s = 1");
    // B_{2j} / (2j)!
    const BERNOULLI_OVER_FACT: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
    ];
    let m = 24.0_f64;
    let mut sum: f64 = (1..24).map(|k| (k as f64).powf(-s)).sum();
    sum += m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2)
    let mut rising = s;
    for (j, coeff) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let order = 2 * j + 1;
        sum += coeff * rising * m.powf(-s - order as f64);
        rising *= (s + order as f64) * (s + order as f64 + 1.0);
    }
    sum
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// `∫_0^{π/4} cos^p θ dθ`.
fn cos_power_integral(p: f64) -> f64 {
    let rule = gauss_legendre(32);
    integrate(|t| t.cos().powf(p), 0.0, PI / 4.0, &rule)
}

/// `∫ |y|^{-q} dy` over the exterior of the square `|y - center|∞ ≤ half` in
/// two dimensions. The origin must lie inside the square and `q > 2`.
pub(crate) fn square_exterior_integral(center: [f64; 2], half: f64, q: f64) -> f64 {
    debug_assert!(center[0].abs() < half && center[1].abs() < half);
    let exit = |theta: f64| -> f64 {
        let (s, c) = theta.sin_cos();
        let tx = if c > 0.0 {
            (center[0] + half) / c
        } else if c < 0.0 {
            (center[0] - half) / c
        } else {
            f64::INFINITY
        };
        let ty = if s > 0.0 {
            (center[1] + half) / s
        } else if s < 0.0 {
            (center[1] - half) / s
        } else {
            f64::INFINITY
        };
        tx.min(ty)
    };
    let mut cuts: Vec<f64> = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|(sx, sy)| {
            let a = (center[1] + sy * half).atan2(center[0] + sx * half);
            if a < 0.0 {
                a + 2.0 * PI
            } else {
                a
            }
        })
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.push(cuts[0] + 2.0 * PI);
    let rule = gauss_legendre(24);
    let angular: f64 = cuts
        .windows(2)
        .map(|w| integrate(|t| exit(t).powf(2.0 - q), w[0], w[1], &rule))
        .sum();
    angular / (q - 2.0)
}

/// Fit `S(a) = Z + Σ_k c_k a^{lead - 2k}` through partial lattice sums and return `Z`.
fn lattice_limit(dim: usize, term: impl Fn(f64, f64) -> f64, box_integral: impl Fn(f64) -> f64, lead: f64) -> f64 {
    const CHECKPOINTS: [i64; 4] = [32, 64, 128, 256];
    let mut partial = 0.0;
    let mut samples = Vec::with_capacity(CHECKPOINTS.len());
    let mut next = 0;
    for r in 1..=CHECKPOINTS[CHECKPOINTS.len() - 1] {
        // shell |d|∞ = r
        if dim == 1 {
            partial += 2.0 * term(r as f64, 0.0);
        } else {
            let mut shell = 0.0;
            for t in -r..=r {
                let (a, b) = (r as f64, t as f64);
                shell += term(a, b) + term(-a, b);
                if t.abs() < r {
                    shell += term(b, a) + term(b, -a);
                }
            }
            partial += shell;
        }
        if r == CHECKPOINTS[next] {
            let a = r as f64 + 0.5;
            samples.push((a, box_integral(a) - partial));
            next += 1;
        }
    }
    // 4x4 linear solve for (Z, c1, c2, c3)
    let mut m = [[0.0f64; 5]; 4];
    for (row, (a, s)) in samples.iter().enumerate() {
        m[row] = [1.0, a.powf(lead), a.powf(lead - 2.0), a.powf(lead - 4.0), *s];
    }
    solve_dense(m)[0]
}

fn solve_dense<const N: usize, const M: usize>(mut m: [[f64; M]; N]) -> [f64; N] {
    for col in 0..N {
        let pivot = (col..N)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        for row in 0..N {
            if row != col {
                let factor = m[row][col] / m[col][col];
                for k in col..M {
                    m[row][k] -= factor * m[col][k];
                }
            }
        }
    }
    let mut x = [0.0; N];
    for i in 0..N {
        x[i] = m[i][M - 1] / m[i][i];
    }
    x
}

/// Second-moment constant of the hypersingular kernel, used for the
/// nearest-neighbour correction of the quadrature Laplacian.
pub fn laplacian_lattice_constant(dim: usize, sigma: f64) -> f64 {
    match dim {
        1 => -2.0 * riemann_zeta(sigma - 1.0),
        _ => numeric_laplacian_constant(dim, sigma),
    }
}

/// Self-cell constant of the Riesz kernel.
pub fn riesz_lattice_constant(dim: usize, sigma: f64) -> f64 {
    match dim {
        1 => -2.0 * riemann_zeta(1.0 - sigma),
        _ => numeric_riesz_constant(dim, sigma),
    }
}

pub(crate) fn numeric_laplacian_constant(dim: usize, sigma: f64) -> f64 {
    let p = 2.0 - sigma;
    let exponent = -(dim as f64) - sigma;
    let angular = if dim == 1 {
        2.0
    } else {
        4.0 * cos_power_integral(sigma - 2.0)
    };
    lattice_limit(
        dim,
        |a, b| a * a * (a * a + b * b).powf(0.5 * exponent),
        |a| angular * a.powf(p) / p,
        -sigma,
    )
}

pub(crate) fn numeric_riesz_constant(dim: usize, sigma: f64) -> f64 {
    let exponent = sigma - dim as f64;
    let angular = if dim == 1 {
        2.0
    } else {
        8.0 * cos_power_integral(-sigma)
    };
    lattice_limit(
        dim,
        |a, b| (a * a + b * b).powf(0.5 * exponent),
        |a| angular * a.powf(sigma) / sigma,
        sigma - 2.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_reference_values() {
        assert!((riemann_zeta(2.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((riemann_zeta(0.0) + 0.5).abs() < 1e-14);
        assert!((riemann_zeta(-1.0) + 1.0 / 12.0).abs() < 1e-14);
        // mpmath: zeta(0.5)
        assert!((riemann_zeta(0.5) + 1.4603545088095868).abs() < 1e-13);
        assert!((riemann_zeta(-0.5) + 0.20788622497735457).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(8);
        let v = integrate(|x| x.powi(14) + 3.0 * x * x, -1.0, 1.0, &rule);
        assert!((v - (2.0 / 15.0 + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn numeric_limit_matches_zeta_in_one_dimension() {
        for sigma in [0.3, 0.5, 1.0, 1.5, 1.9] {
            let exact = laplacian_lattice_constant(1, sigma);
            let numeric = numeric_laplacian_constant(1, sigma);
            assert!((exact - numeric).abs() < 1e-8, "σ={sigma}: {exact} vs {numeric}");
        }
        for sigma in [0.3, 0.5, 0.8] {
            let exact = riesz_lattice_constant(1, sigma);
            let numeric = numeric_riesz_constant(1, sigma);
            assert!((exact - numeric).abs() < 1e-8, "σ={sigma}: {exact} vs {numeric}");
        }
    }

    #[test]
    fn lattice_constants_are_positive() {
        for sigma in [0.2, 0.5, 1.0, 1.5, 1.9] {
            assert!(laplacian_lattice_constant(1, sigma) > 0.0);
            assert!(laplacian_lattice_constant(2, sigma) > 0.0);
            assert!(riesz_lattice_constant(2, sigma) > 0.0);
        }
    }

    #[test]
    fn square_exterior_matches_disc_bound() {
        // exterior of [-a, a]^2 lies between exteriors of discs of radii a and a√2
        let a = 10.0;
        let q = 2.5;
        let v = square_exterior_integral([0.0, 0.0], a, q);
        let disc = |r: f64| 2.0 * PI * r.powf(2.0 - q) / (q - 2.0);
        assert!(v < disc(a) && v > disc(a * 2f64.sqrt()));
        // shifted centre: compare with brute-force lattice sum over unit cells
        let c = [3.0, -2.0];
        let v = square_exterior_integral(c, a, q);
        let mut brute = 0.0;
        let big = 2000i64;
        for i in -big..=big {
            for j in -big..=big {
                let (x, y) = (i as f64 + 0.5, j as f64 + 0.5);
                if (x - c[0]).abs() > a || (y - c[1]).abs() > a {
                    brute += (x * x + y * y).powf(-0.5 * q);
                }
            }
        }
        let missing = 2.0 * PI * (big as f64).powf(2.0 - q) / (q - 2.0);
        assert!(((brute + missing) - v).abs() / v < 5e-3, "{v} vs {}", brute + missing);
    }
}
