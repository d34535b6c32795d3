//! Backward dual problems for the uniqueness argument: the `A`/`B`
//! decomposition of the difference quotient, freezing of coefficients in
//! time, the pair `(h, ψ)` and the pairing defect between two solutions.

mod freeze;
mod pairing;

pub use freeze::{ball_volume, freeze_coefficient, freeze_jointly, FreezeBounds, FrozenCoefficient, MAX_SUBDIVISIONS};
pub use pairing::{check_pairing_sweep, dual_step_limit, uniqueness_pairing, PairingExperiment, IDENTICAL_TOL};

use crate::error::{Error, Result};
use crate::estimates::Report;
use crate::fractional::{riesz_potential, Exterior, FracParams, QuadratureLaplacian};
use crate::grid::{Field, Grid};
use crate::solver::Trajectory;

/// Discretization slack allowed on the two energy inequalities.
pub const ENERGY_MARGIN: f64 = 0.05;
/// Tolerance on mass conservation and on the ordering of `ψ`.
pub const DUAL_TOL: f64 = 1e-8;

/// `A = (u−v)/(u−v+u^m−v^m)` and `B = (u^m−v^m)/(u−v+u^m−v^m)`, both zero
/// where `u = v`.
pub fn compute_ab(u: &Field, v: &Field, m: f64) -> Result<(Field, Field)> {
    u.check_grid(v)?;
    if u.min() < 0.0 || v.min() < 0.0 {
        return Err(Error::Precondition("compute_ab needs u, v >= 0".into()));
    }
    let mut a = Vec::with_capacity(u.len());
    let mut b = Vec::with_capacity(u.len());
    for (&x, &y) in u.values().iter().zip(v.values()) {
        if x == y {
            a.push(0.0);
            b.push(0.0);
            continue;
        }
        let d = x - y;
        let dm = x.powf(m) - y.powf(m);
        let den = d + dm;
        a.push(d / den);
        b.push(dm / den);
    }
    Ok((Field::new(u.grid().clone(), a)?, Field::new(u.grid().clone(), b)?))
}

/// One time segment `(start, end]` with its time-independent coefficient.
#[derive(Debug, Clone)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub alpha: Field,
}

/// Coefficient that is piecewise constant in time, with `λ₁ ≤ α ≤ λ₂`.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    segments: Vec<Segment>,
    bounds: (f64, f64),
}

impl CoefficientField {
    pub fn new(segments: Vec<Segment>, bounds: (f64, f64)) -> Result<Self> {
        let (lo, hi) = bounds;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::param(
                "bounds",
                format!("need 0 < λ₁ ≤ λ₂ < ∞, got ({lo}, {hi})"),
            ));
        }
        let first = segments
            .first()
            .ok_or_else(|| Error::param("segments", "at least one segment required"))?;
        let grid = first.alpha.grid().clone();
        for (k, s) in segments.iter().enumerate() {
            if !(s.start < s.end) {
                return Err(Error::param("segments", format!("segment {k} is empty")));
            }
            if k > 0 && segments[k - 1].end != s.start {
                return Err(Error::param("segments", format!("gap or overlap before segment {k}")));
            }
            if s.alpha.grid() != &grid {
                return Err(Error::GridMismatch);
            }
            if s.alpha.min() < lo || s.alpha.max() > hi {
                return Err(Error::param(
                    "segments",
                    format!(
                        "segment {k} has values in [{}, {}] outside [{lo}, {hi}]",
                        s.alpha.min(),
                        s.alpha.max()
                    ),
                ));
            }
        }
        Ok(Self { segments, bounds })
    }

    /// `α ≡ value` on `(a, b]`.
    pub fn constant(grid: &Grid, interval: (f64, f64), value: f64) -> Result<Self> {
        Self::new(
            vec![Segment {
                start: interval.0,
                end: interval.1,
                alpha: grid.constant(value),
            }],
            (value, value),
        )
    }

    /// `B_n / A_n` segment by segment, clamped into `bounds`.
    pub fn ratio(b: &CoefficientField, a: &CoefficientField, bounds: (f64, f64)) -> Result<Self> {
        if a.segments.len() != b.segments.len()
            || a.segments
                .iter()
                .zip(&b.segments)
                .any(|(x, y)| x.start != y.start || x.end != y.end)
        {
            return Err(Error::param(
                "segments",
                "numerator and denominator must share a partition",
            ));
        }
        let segments = a
            .segments
            .iter()
            .zip(&b.segments)
            .map(|(sa, sb)| {
                let alpha = sb.alpha.zip_map(&sa.alpha, |x, y| (x / y).clamp(bounds.0, bounds.1))?;
                Ok(Segment {
                    start: sa.start,
                    end: sa.end,
                    alpha,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(segments, bounds)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.segments[0].start, self.segments[self.segments.len() - 1].end)
    }

    pub fn grid(&self) -> &Grid {
        self.segments[0].alpha.grid()
    }

    /// Coefficient in force at time `t` (segments are closed on the right).
    pub fn at(&self, t: f64) -> &Field {
        let k = self.segments.partition_point(|s| s.end < t);
        &self.segments[k.min(self.segments.len() - 1)].alpha
    }

    /// Largest sampled value.
    pub fn max_value(&self) -> f64 {
        self.segments.iter().map(|s| s.alpha.max()).fold(0.0, f64::max)
    }
}

/// Solutions of the backward problems on `(a, b)`, stored with increasing
/// times so that the last snapshot is the final datum.
#[derive(Debug, Clone)]
pub struct DualPair {
    pub h: Trajectory,
    pub psi: Trajectory,
    pub eta: Field,
    pub theta: Field,
}

fn bare_trajectory(times: Vec<f64>, snapshots: Vec<Field>) -> Trajectory {
    Trajectory {
        times,
        snapshots,
        diagnostics: Vec::new(),
        initial_lift: 0.0,
        high_mode_energy: 0.0,
    }
}

/// Integrate `∂_s ζ = −α Lζ` in reversed time `s = b − t` from `ζ = αη`,
/// segment by segment, with `h = ζ/α` continuous across segment edges.
/// `ψ` starts from `θ = 𝓘_σ ∗ η` and follows `∂_t ψ = αh`.
///
/// Explicit Euler with the periodic quadrature operator: mass of `h` is
/// conserved exactly and `ζ ≥ 0` as long as `dt·λ₂·max_row_sum ≤ 1`.
pub fn solve_dual(alpha: &CoefficientField, eta: &Field, p: FracParams, dt: f64) -> Result<DualPair> {
    p.require_riesz()?;
    let grid = eta.grid().clone();
    if alpha.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    if eta.min() < 0.0 {
        return Err(Error::Precondition("η must be nonnegative".into()));
    }
    let dim = grid.dim();
    let outside = (0..grid.len()).any(|i| {
        let x = grid.point(i);
        !grid.in_central_half_box(&x[..dim]) && eta.values()[i] != 0.0
    });
    if outside {
        return Err(Error::Precondition("η must vanish outside the central half-box".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    let op = QuadratureLaplacian::new(&grid, p, Exterior::Periodic)?;
    let limit = 1.0 / (alpha.max_value() * op.max_row_sum());
    if dt > limit {
        return Err(Error::CflViolation { dt, limit });
    }
    let theta = riesz_potential(eta, p)?;

    let mut times = vec![alpha.interval().1];
    let mut hs = vec![eta.clone()];
    let mut psis = vec![theta.clone()];
    let mut h = eta.values().to_vec();
    let mut psi = theta.values().to_vec();
    let mut zeta = vec![0.0; h.len()];
    for seg in alpha.segments().iter().rev() {
        let a = seg.alpha.values();
        for ((z, hv), av) in zeta.iter_mut().zip(&h).zip(a) {
            *z = av * hv;
        }
        let steps = ((seg.end - seg.start) / dt).ceil().max(1.0) as usize;
        let step = (seg.end - seg.start) / steps as f64;
        for k in 0..steps {
            let lz = op.apply_values(&zeta);
            for i in 0..zeta.len() {
                psi[i] -= step * zeta[i];
                zeta[i] -= step * a[i] * lz[i];
                h[i] = zeta[i] / a[i];
            }
            // land exactly on the segment start
            let t = if k + 1 == steps {
                seg.start
            } else {
                seg.end - step * (k + 1) as f64
            };
            times.push(t);
            hs.push(Field::new(grid.clone(), h.clone())?);
            psis.push(Field::new(grid.clone(), psi.clone())?);
        }
    }
    times.reverse();
    hs.reverse();
    psis.reverse();
    Ok(DualPair {
        h: bare_trajectory(times.clone(), hs),
        psi: bare_trajectory(times, psis),
        eta: eta.clone(),
        theta,
    })
}

/// Mass conservation of `h`, monotonicity and domination of `ψ`, and the two
/// energy inequalities, with `(−Δ)^{σ/2}ψ = h` by construction.
pub fn check_dual_energy(dp: &DualPair, alpha: &CoefficientField, p: FracParams) -> Result<Report> {
    let grid = dp.eta.grid();
    if alpha.grid() != grid || dp.h.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let mut report = Report::new("dual_identities", ENERGY_MARGIN);
    let reference = dp.eta.dot(&dp.theta)?;
    let mass = dp.eta.integrate();
    let mut mass_drift: f64 = 0.0;
    for h in &dp.h.snapshots {
        let d = (h.integrate() - mass).abs();
        mass_drift = mass_drift.max(if mass != 0.0 { d / mass.abs() } else { d });
    }

    let mut decrease: f64 = 0.0;
    for w in dp.psi.snapshots.windows(2) {
        decrease = decrease.max(w[0].sub(&w[1])?.max());
    }
    let negative = dp.psi.snapshots.iter().map(|f| -f.min()).fold(0.0, f64::max);
    let above = dp
        .psi
        .snapshots
        .iter()
        .map(|f| f.sub(&dp.theta).map(|d| d.max()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    // ∬ α h² with the later endpoint of each step, the value the explicit
    // backward step uses; this makes the sum decrease under refinement
    let mut dissipation = 0.0;
    for k in 0..dp.h.times.len() - 1 {
        let (t0, t1) = (dp.h.times[k], dp.h.times[k + 1]);
        let a = alpha.at(0.5 * (t0 + t1));
        let h = &dp.h.snapshots[k + 1];
        dissipation += (t1 - t0) * h.mul(h)?.dot(a)?;
    }
    let mut sup_energy: f64 = 0.0;
    for (psi, h) in dp.psi.snapshots.iter().zip(&dp.h.snapshots) {
        sup_energy = sup_energy.max(psi.dot(h)?);
    }
    let ratio = |lhs: f64, rhs: f64| {
        if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let dissipation_ratio = ratio(dissipation, 0.5 * reference);
    let sup_ratio = ratio(sup_energy, reference);

    let consistency = {
        let h0 = &dp.h.snapshots[0];
        let psi0 = &dp.psi.snapshots[0];
        let direct = riesz_potential(h0, p)?;
        let scale = dp.theta.sup_norm();
        if scale > 0.0 {
            direct.sub(psi0)?.sup_norm() / scale
        } else {
            0.0
        }
    };

    report
        .record("mass_drift", mass_drift)
        .record("psi_decrease", decrease)
        .record("psi_negative", negative)
        .record("psi_above_theta", above)
        .record("dissipation", dissipation)
        .record("sup_energy", sup_energy)
        .record("eta_theta", reference)
        .record("dissipation_ratio", dissipation_ratio)
        .record("sup_ratio", sup_ratio)
        .record("potential_consistency", consistency)
        .record("segments", alpha.segments().len() as f64)
        .record("steps", (dp.h.times.len() - 1) as f64);
    report.pass = mass_drift <= DUAL_TOL
        && decrease <= DUAL_TOL
        && negative <= DUAL_TOL
        && above <= DUAL_TOL
        && dissipation_ratio <= 1.0 + ENERGY_MARGIN
        && sup_ratio <= 1.0 + ENERGY_MARGIN;
    if !report.pass {
        report.note(format!(
            "mass drift {mass_drift:.2e}, ψ decrease {decrease:.2e}, ratios {dissipation_ratio:.4}/{sup_ratio:.4}"
        ));
    }
    Ok(report)
}

/// Smooth bump `exp(1 − 1/(1 − r²/ρ²))` of radius `ρ`, scaled to `height`.
pub fn bump(grid: &Grid, radius: f64, height: f64) -> Field {
    grid.sample(|x| {
        let s = x.iter().map(|c| c * c).sum::<f64>() / (radius * radius);
        if s < 1.0 {
            height * (1.0 - 1.0 / (1.0 - s)).exp()
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn setup() -> (Grid, FracParams, Field) {
        let g = Grid::new(1, 8.0, 128).unwrap();
        let p = FracParams::new(1, 0.5).unwrap();
        let eta = bump(&g, 2.0, 1.0);
        (g, p, eta)
    }

    #[test]
    fn ab_of_equal_fields_is_zero() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let u = g.sample(|x| 1.0 + x[0] * x[0]);
        let (a, b) = compute_ab(&u, &u, 0.5).unwrap();
        assert_eq!(a.sup_norm(), 0.0);
        assert_eq!(b.sup_norm(), 0.0);
    }

    #[test]
    fn ab_of_one_and_zero() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let (a, b) = compute_ab(&g.constant(1.0), &g.zeros(), 0.5).unwrap();
        assert!(a.values().iter().all(|&v| v == 0.5));
        assert!(b.values().iter().all(|&v| v == 0.5));
        assert!(compute_ab(&g.constant(-1.0), &g.zeros(), 0.5).is_err());
    }

    proptest! {
        #[test]
        fn ab_partition_unity(
            pairs in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 8),
            m in 0.05f64..0.99,
        ) {
            let g = Grid::new(1, 1.0, 8).unwrap();
            let u = Field::new(g.clone(), pairs.iter().map(|p| p.0).collect()).unwrap();
            let v = Field::new(g, pairs.iter().map(|p| p.1).collect()).unwrap();
            let (a, b) = compute_ab(&u, &v, m).unwrap();
            for i in 0..8 {
                let (x, y) = (a.values()[i], b.values()[i]);
                prop_assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
                if pairs[i].0 != pairs[i].1 {
                    prop_assert!((x + y - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn coefficient_field_rejects_gaps_and_bounds() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let seg = |s: f64, e: f64, v: f64| Segment {
            start: s,
            end: e,
            alpha: g.constant(v),
        };
        assert!(CoefficientField::new(vec![seg(0.0, 0.5, 1.0), seg(0.6, 1.0, 1.0)], (0.5, 2.0)).is_err());
        assert!(CoefficientField::new(vec![seg(0.0, 1.0, 3.0)], (0.5, 2.0)).is_err());
        let c = CoefficientField::new(vec![seg(0.0, 0.5, 1.0), seg(0.5, 1.0, 2.0)], (0.5, 2.0)).unwrap();
        assert_eq!(c.at(0.5).max(), 1.0);
        assert_eq!(c.at(0.75).max(), 2.0);
        assert_eq!(c.interval(), (0.0, 1.0));
    }

    #[test]
    fn freezing_constant_samples_is_exact() {
        let g = Grid::new(1, 4.0, 64).unwrap();
        let times = [0.0, 0.5, 1.0];
        let samples = vec![g.constant(0.3); 3];
        let f = freeze_coefficient(&times, &samples, 10, 1.0, (0.0, 1.0)).unwrap();
        assert_eq!(f.subdivisions, 1);
        for s in f.field.segments() {
            assert!(s.alpha.values().iter().all(|v| (v - 0.4).abs() < 1e-12));
        }
        // 1/n times the root of the discrete cylinder volume
        let inside = (0..g.len()).filter(|&i| g.point(i)[0].abs() < 1.0).count() as f64;
        assert!((f.distance - 0.1 * (inside * g.spacing()).sqrt()).abs() < 1e-9);
        assert!(f.satisfies_lemma());
    }

    #[test]
    fn freeze_bound_closed_form() {
        let g = Grid::new(1, 4.0, 64).unwrap();
        let times = [0.0, 1.0];
        let samples = vec![g.zeros(), g.constant(1.0)];
        let f = freeze_coefficient(&times, &samples, 10, 1.0, (0.0, 1.0)).unwrap();
        let expected = (1.0 + 2.0 * 2f64.sqrt()) / 10.0;
        assert!((f.bound - expected).abs() < 1e-15);
        assert!((expected - 0.3828).abs() < 1e-4);
        assert!(f.satisfies_lemma());
    }

    #[test]
    fn freezing_moving_front_meets_lemma() {
        let g = Grid::new(1, 4.0, 128).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let samples: Vec<Field> = times
            .iter()
            .map(|&t| g.sample(|x| if x[0] < 4.0 * t - 2.0 { 1.0 } else { 0.0 }))
            .collect();
        for n in [5, 10, 20] {
            let f = freeze_coefficient(&times, &samples, n, 2.0, (0.0, 1.0)).unwrap();
            let b = f.bounds();
            assert!(b.min >= 1.0 / n as f64 && b.max <= 2.0, "n={n}: {b:?}");
            assert!(b.distance < b.bound, "n={n}: {b:?}");
            assert!(f.modulus <= 1.0 / n as f64);
        }
    }

    #[test]
    fn freeze_rejects_bad_input() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let ok = vec![g.zeros(), g.zeros()];
        assert!(freeze_coefficient(&[0.0, 1.0], &ok, 0, 1.0, (0.0, 1.0)).is_err());
        assert!(freeze_coefficient(&[0.2, 1.0], &ok, 2, 1.0, (0.0, 1.0)).is_err());
        let bad = vec![g.zeros(), g.constant(1.5)];
        assert!(freeze_coefficient(&[0.0, 1.0], &bad, 2, 1.0, (0.0, 1.0)).is_err());
    }

    #[test]
    fn zero_datum_gives_zero_pair() {
        let (g, p, _) = setup();
        let a = CoefficientField::constant(&g, (0.0, 1.0), 1.0).unwrap();
        let dt = dual_step_limit(&a, p).unwrap();
        let dp = solve_dual(&a, &g.zeros(), p, dt).unwrap();
        assert!(dp.h.snapshots.iter().all(|f| f.sup_norm() == 0.0));
        assert!(dp.psi.snapshots.iter().all(|f| f.sup_norm() == 0.0));
        let r = check_dual_energy(&dp, &a, p).unwrap();
        assert!(r.pass);
        assert_eq!(r.get("dissipation_ratio"), Some(0.0));
    }

    #[test]
    fn final_data_are_exact() {
        let (g, p, eta) = setup();
        let a = CoefficientField::constant(&g, (0.0, 1.0), 1.0).unwrap();
        let dp = solve_dual(&a, &eta, p, 0.5 * dual_step_limit(&a, p).unwrap()).unwrap();
        assert_eq!(dp.h.last(), &eta);
        assert_eq!(dp.psi.last(), &dp.theta);
        assert_eq!(*dp.h.times.last().unwrap(), 1.0);
        assert_eq!(dp.h.times[0], 0.0);
    }

    #[test]
    fn unit_coefficient_identities() {
        let (g, p, eta) = setup();
        let a = CoefficientField::constant(&g, (0.0, 1.0), 1.0).unwrap();
        let dt = 0.9 * dual_step_limit(&a, p).unwrap();
        let dp = solve_dual(&a, &eta, p, dt).unwrap();
        let r = check_dual_energy(&dp, &a, p).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.get("mass_drift").unwrap() <= 1e-8);
        assert!(r.get("psi_decrease").unwrap() <= 1e-8);
        assert!(r.get("dissipation_ratio").unwrap() <= 1.05);
        assert!(r.get("sup_ratio").unwrap() <= 1.05);
    }

    #[test]
    fn refinement_does_not_raise_ratios() {
        let (g, p, eta) = setup();
        let a = CoefficientField::constant(&g, (0.0, 1.0), 1.0).unwrap();
        let dt = 0.9 * dual_step_limit(&a, p).unwrap();
        let coarse = check_dual_energy(&solve_dual(&a, &eta, p, dt).unwrap(), &a, p).unwrap();
        let fine = check_dual_energy(&solve_dual(&a, &eta, p, 0.5 * dt).unwrap(), &a, p).unwrap();
        for key in ["dissipation_ratio", "sup_ratio"] {
            assert!(fine.get(key).unwrap() <= coarse.get(key).unwrap() + 1e-15, "{key}");
        }
    }

    #[test]
    fn frozen_coefficient_identities() {
        let (g, p, eta) = setup();
        let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let samples: Vec<Field> = times
            .iter()
            .map(|&t| g.sample(|x| 0.5 + 0.4 * (0.7 * x[0] + 3.0 * t).sin()))
            .collect();
        let f = freeze_coefficient(&times, &samples, 10, 4.0, (0.0, 1.0)).unwrap();
        assert!(f.field.segments().len() > 1);
        let dt = 0.9 * dual_step_limit(&f.field, p).unwrap();
        let dp = solve_dual(&f.field, &eta, p, dt).unwrap();
        let r = check_dual_energy(&dp, &f.field, p).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn step_above_limit_is_rejected() {
        let (g, p, eta) = setup();
        let a = CoefficientField::constant(&g, (0.0, 1.0), 2.0).unwrap();
        let dt = 1.01 * dual_step_limit(&a, p).unwrap();
        assert!(matches!(solve_dual(&a, &eta, p, dt), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn datum_must_sit_in_half_box() {
        let (g, p, _) = setup();
        let wide = bump(&g, 6.0, 1.0);
        let a = CoefficientField::constant(&g, (0.0, 1.0), 1.0).unwrap();
        assert!(solve_dual(&a, &wide, p, 1e-3).is_err());
        let g1 = Grid::new(1, 8.0, 64).unwrap();
        let p1 = FracParams::new(1, 1.0).unwrap();
        let a1 = CoefficientField::constant(&g1, (0.0, 1.0), 1.0).unwrap();
        assert!(matches!(
            solve_dual(&a1, &bump(&g1, 2.0, 1.0), p1, 1e-3),
            Err(Error::RieszRequiresDimAboveSigma { .. })
        ));
    }
}
