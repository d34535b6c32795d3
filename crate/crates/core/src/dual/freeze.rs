use serde::{Deserialize, Serialize};

use super::{CoefficientField, Segment};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Finest time subdivision tried before giving up.
pub const MAX_SUBDIVISIONS: usize = 1 << 16;

/// Output of [`freeze_coefficient`]: `f_n = g_n(·, right endpoint) + 1/n` on
/// each of `subdivisions` equal time segments.
#[derive(Debug, Clone)]
pub struct FrozenCoefficient {
    pub field: CoefficientField,
    pub n: usize,
    pub subdivisions: usize,
    /// Standard deviation (in cells) of the spatial Gaussian; 0 means none.
    pub mollifier_cells: f64,
    /// `‖f − g_n‖` on `B_R × (a, b)`.
    pub mollifier_distance: f64,
    /// Largest `|g_n(t) − g_n(right endpoint)|` on `B_R`.
    pub modulus: f64,
    /// `‖f − f_n‖` on `B_R × (a, b)`.
    pub distance: f64,
    /// `(1 + 2√((b−a)|B_R|))/n`.
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreezeBounds {
    pub min: f64,
    pub max: f64,
    pub distance: f64,
    pub bound: f64,
}

impl FrozenCoefficient {
    pub fn bounds(&self) -> FreezeBounds {
        let (min, max) = self
            .field
            .segments()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.alpha.min()), hi.max(s.alpha.max()))
            });
        FreezeBounds {
            min,
            max,
            distance: self.distance,
            bound: self.bound,
        }
    }

    /// `1/n ≤ f_n ≤ 2` and the distance bound, checked literally.
    pub fn satisfies_lemma(&self) -> bool {
        let b = self.bounds();
        let inv = 1.0 / self.n as f64;
        b.min >= inv && b.max <= 2.0 && b.distance < b.bound
    }
}

/// Volume of the ball of radius `r` in dimension 1 or 2.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r,
        _ => std::f64::consts::PI * r * r,
    }
}

/// Freeze a space-time sampled function with values in `[0, 1]` into a
/// coefficient that is piecewise constant in time on `(a, b]`.
///
/// Between sample times the function is taken to be linear in `t`.
pub fn freeze_coefficient(
    times: &[f64],
    samples: &[Field],
    n: usize,
    radius: f64,
    interval: (f64, f64),
) -> Result<FrozenCoefficient> {
    let mut out = freeze_jointly(times, &[samples], n, radius, interval)?;
    Ok(out.remove(0))
}

/// [`freeze_coefficient`] for several functions sharing one time partition
/// (the finest any of them needs).
pub fn freeze_jointly(
    times: &[f64],
    series: &[&[Field]],
    n: usize,
    radius: f64,
    interval: (f64, f64),
) -> Result<Vec<FrozenCoefficient>> {
    let (a, b) = interval;
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(Error::param("interval", format!("need a < b, got ({a}, {b})")));
    }
    if !(radius > 0.0) {
        return Err(Error::param("R", format!("radius must be positive, got {radius}")));
    }
    if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(
            "times",
            "need at least two strictly increasing sample times",
        ));
    }
    if times[0] > a || *times.last().expect("nonempty") < b {
        return Err(Error::param(
            "times",
            format!(
                "samples span [{}, {}] but the interval is ({a}, {b}]",
                times[0],
                times[times.len() - 1]
            ),
        ));
    }
    let first = series
        .first()
        .and_then(|s| s.first())
        .ok_or_else(|| Error::Precondition("no samples".into()))?;
    let grid = first.grid().clone();
    for s in series {
        if s.len() != times.len() {
            return Err(Error::param("samples", "one field per sample time required"));
        }
        for f in s.iter() {
            if f.grid() != &grid {
                return Err(Error::GridMismatch);
            }
            if f.min() < 0.0 || f.max() > 1.0 {
                return Err(Error::param("samples", "values must lie in [0, 1]"));
            }
        }
    }
    let inv = 1.0 / n as f64;
    let ball: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let p = grid.point(i);
            p[..grid.dim()].iter().map(|c| c * c).sum::<f64>() < radius * radius
        })
        .collect();
    let bound = (1.0 + 2.0 * ((b - a) * ball_volume(grid.dim(), radius)).sqrt()) * inv;

    let mollified: Vec<Mollified> = series
        .iter()
        .map(|s| mollify_within(&grid, times, s, &ball, inv, interval))
        .collect();

    // shared subdivision: double until every series meets the modulus condition
    let mut m = 1;
    loop {
        let moduli: Vec<f64> = mollified
            .iter()
            .map(|g| freeze_modulus(times, &g.values, &ball, interval, m))
            .collect();
        let worst = moduli.iter().copied().fold(0.0, f64::max);
        if worst <= inv {
            break;
        }
        if m >= MAX_SUBDIVISIONS {
            return Err(Error::Precondition(format!(
                "freeze modulus {worst:.3e} still above 1/n = {inv:.3e} at {m} subdivisions"
            )));
        }
        m *= 2;
    }

    let edges: Vec<f64> = (0..=m).map(|k| a + (b - a) * k as f64 / m as f64).collect();
    series
        .iter()
        .zip(mollified)
        .map(|(raw, g)| {
            let segments: Vec<Segment> = edges
                .windows(2)
                .map(|e| {
                    let frozen = interpolate(times, &g.values, e[1]);
                    let alpha = frozen.iter().map(|v| v + inv).collect();
                    Segment {
                        start: e[0],
                        end: e[1],
                        alpha: Field::new(grid.clone(), alpha).expect("grid-sized"),
                    }
                })
                .collect();
            let distance = frozen_distance(times, raw, &segments, &ball, grid.cell_volume());
            let modulus = freeze_modulus(times, &g.values, &ball, interval, m);
            Ok(FrozenCoefficient {
                field: CoefficientField::new(segments, (inv, 2.0))?,
                n,
                subdivisions: m,
                mollifier_cells: g.cells,
                mollifier_distance: g.distance,
                modulus,
                distance,
                bound,
            })
        })
        .collect()
}

struct Mollified {
    values: Vec<Vec<f64>>,
    cells: f64,
    distance: f64,
}

/// Widest Gaussian (from 4 cells, halving) with `‖f − g‖ < 1/n` on the
/// space-time cylinder; falls back to `g = f`.
fn mollify_within(
    grid: &Grid,
    times: &[f64],
    raw: &[Field],
    ball: &[usize],
    inv: f64,
    interval: (f64, f64),
) -> Mollified {
    let raw_values: Vec<Vec<f64>> = raw.iter().map(|f| f.values().to_vec()).collect();
    let k = grid.wavenumber_magnitudes();
    let dx = grid.spacing();
    let mut cells = 4.0;
    while cells >= 0.25 {
        let w = cells * dx;
        let mult: Vec<f64> = k.iter().map(|k| (-0.5 * (k * w).powi(2)).exp()).collect();
        let values: Vec<Vec<f64>> = raw_values
            .iter()
            .map(|v| {
                grid.apply_multiplier(v, &mult)
                    .into_iter()
                    .map(|x| x.clamp(0.0, 1.0))
                    .collect()
            })
            .collect();
        let distance = linear_distance(times, &raw_values, &values, ball, interval, grid.cell_volume());
        if distance < inv {
            return Mollified {
                values,
                cells,
                distance,
            };
        }
        cells *= 0.5;
    }
    Mollified {
        values: raw_values,
        cells: 0.0,
        distance: 0.0,
    }
}

/// Bracket of `t` in the sample times and the weight of the right sample.
fn locate(times: &[f64], t: f64) -> (usize, f64) {
    let last = times.len() - 1;
    if t <= times[0] {
        return (0, 0.0);
    }
    if t >= times[last] {
        return (last - 1, 1.0);
    }
    let j = times.partition_point(|&s| s <= t) - 1;
    (j, (t - times[j]) / (times[j + 1] - times[j]))
}

fn interpolate(times: &[f64], values: &[Vec<f64>], t: f64) -> Vec<f64> {
    let (j, w) = locate(times, t);
    values[j]
        .iter()
        .zip(&values[j + 1])
        .map(|(l, r)| (1.0 - w) * l + w * r)
        .collect()
}

/// Breakpoints of the piecewise-quadratic integrands: sample times and the
/// given edges inside `(a, b)`, plus the endpoints.
fn breakpoints(times: &[f64], edges: &[f64], interval: (f64, f64)) -> Vec<f64> {
    let (a, b) = interval;
    let mut pts: Vec<f64> = times
        .iter()
        .chain(edges)
        .copied()
        .filter(|&t| t > a && t < b)
        .chain([a, b])
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Simpson's rule on each breakpoint interval; exact for the piecewise
/// quadratics integrated here.
/// The integrand receives the evaluation time and the interval midpoint, so
/// that jumps at breakpoints are resolved from the inside.
fn time_integral(pts: &[f64], mut sq: impl FnMut(f64, f64) -> f64) -> f64 {
    pts.windows(2)
        .map(|w| {
            let h = w[1] - w[0];
            let mid = 0.5 * (w[0] + w[1]);
            h / 6.0 * (sq(w[0], mid) + 4.0 * sq(mid, mid) + sq(w[1], mid))
        })
        .sum()
}

fn linear_distance(
    times: &[f64],
    f: &[Vec<f64>],
    g: &[Vec<f64>],
    ball: &[usize],
    interval: (f64, f64),
    cell: f64,
) -> f64 {
    let pts = breakpoints(times, &[], interval);
    time_integral(&pts, |t, _| {
        let (j, w) = locate(times, t);
        ball.iter()
            .map(|&i| {
                let d0 = f[j][i] - g[j][i];
                let d1 = f[j + 1][i] - g[j + 1][i];
                ((1.0 - w) * d0 + w * d1).powi(2)
            })
            .sum::<f64>()
            * cell
    })
    .sqrt()
}

fn frozen_distance(times: &[f64], raw: &[Field], segments: &[Segment], ball: &[usize], cell: f64) -> f64 {
    let a = segments[0].start;
    let b = segments[segments.len() - 1].end;
    let edges: Vec<f64> = segments.iter().map(|s| s.end).collect();
    let pts = breakpoints(times, &edges, (a, b));
    let values: Vec<&[f64]> = raw.iter().map(Field::values).collect();
    time_integral(&pts, |t, mid| {
        let (j, w) = locate(times, t);
        let k = segments.partition_point(|s| s.end < mid).min(segments.len() - 1);
        let frozen = segments[k].alpha.values();
        ball.iter()
            .map(|&i| ((1.0 - w) * values[j][i] + w * values[j + 1][i] - frozen[i]).powi(2))
            .sum::<f64>()
            * cell
    })
    .sqrt()
}

/// Largest change on `B_R` between `g` at any time in a segment and at the
/// segment's right endpoint. Piecewise linearity in `t` puts the maximum at a
/// sample time or the left endpoint.
fn freeze_modulus(times: &[f64], g: &[Vec<f64>], ball: &[usize], interval: (f64, f64), m: usize) -> f64 {
    let (a, b) = interval;
    let mut worst: f64 = 0.0;
    for k in 0..m {
        let lo = a + (b - a) * k as f64 / m as f64;
        let hi = a + (b - a) * (k + 1) as f64 / m as f64;
        let right = interpolate(times, g, hi);
        let probes = std::iter::once(lo).chain(times.iter().copied().filter(|&t| t > lo && t < hi));
        for t in probes {
            let v = interpolate(times, g, t);
            for &i in ball {
                worst = worst.max((v[i] - right[i]).abs());
            }
        }
    }
    worst
}
