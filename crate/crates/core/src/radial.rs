//! Radial statistics of |X - x₀| and the distribution-of-mass checks:
//! log-concavity of the radial CDF, the exponential small-ball tail, the
//! moment-ratio flag, and the reverse Chebyshev curve.

use serde::Serialize;
use thiserror::Error;

use crate::constants::SMALL_BALL_RATE;
use crate::geometry::{self, ConvexBody, ShapeKind};
use crate::mcse;
use crate::report::Check;
use crate::sampler::SampleBatch;

#[derive(Debug, Error)]
pub enum RadialError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("radial grid must be strictly increasing")]
    BadGrid,
    #[error("no exact radial CDF oracle for this body/base point")]
    OracleUnavailable,
}

pub type Result<T> = std::result::Result<T, RadialError>;

/// The radial moment triple (E, S, E₂) about a base point, with batch-means
/// standard errors. E₂² = E² + S² holds exactly by construction (all three
/// come from the same sums).
#[derive(Clone, Debug, Serialize)]
pub struct RadialStats {
    pub x0: Vec<f64>,
    /// mean of |X - x₀|
    pub e: f64,
    /// standard deviation of |X - x₀| (population form)
    pub s: f64,
    /// root mean square of |X - x₀|
    pub e2: f64,
    pub count: usize,
    pub se_e: f64,
    pub se_s: f64,
    pub se_e2: f64,
}

impl RadialStats {
    /// Exact moments injected from quadrature, no Monte Carlo error.
    pub fn exact(x0: Vec<f64>, e: f64, e2: f64) -> Self {
        let s = (e2 * e2 - e * e).max(0.0).sqrt();
        RadialStats {
            x0,
            e,
            s,
            e2,
            count: 0,
            se_e: 0.0,
            se_s: 0.0,
            se_e2: 0.0,
        }
    }
}

/// Plug-in radial moments of a batch about `x0`.
pub fn radial_stats(batch: &SampleBatch, x0: &[f64]) -> Result<RadialStats> {
    if batch.count() == 0 {
        return Err(RadialError::EmptyBatch);
    }
    let r: Vec<f64> = batch
        .iter_points()
        .map(|p| geometry::norm(&geometry::sub(p, x0)))
        .collect();
    let r2: Vec<f64> = r.iter().map(|v| v * v).collect();
    let (m1, m2, cov) = mcse::mean_cov2(&r, &r2, batch.chains());
    let e = m1;
    let e2 = m2.max(0.0).sqrt();
    let s_sq = (m2 - m1 * m1).max(0.0);
    let s = s_sq.sqrt();
    let se_e = cov[0][0].max(0.0).sqrt();
    let se_e2 = if e2 > 0.0 {
        cov[1][1].max(0.0).sqrt() / (2.0 * e2)
    } else {
        0.0
    };
    // Delta method for S = sqrt(m2 - m1²): gradient (-m1/S, 1/(2S)).
    let se_s = if s > 1e-15 * e2.max(1.0) {
        let g1 = -m1 / s;
        let g2 = 0.5 / s;
        (g1 * g1 * cov[0][0] + 2.0 * g1 * g2 * cov[0][1] + g2 * g2 * cov[1][1])
            .max(0.0)
            .sqrt()
    } else {
        0.0
    };
    Ok(RadialStats {
        x0: x0.to_vec(),
        e,
        s,
        e2,
        count: batch.count(),
        se_e,
        se_s,
        se_e2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CdfMethod {
    Mc,
    BallOracle,
    BoxQuadrature,
}

/// The radial CDF F(r) = μ_K{ |x - x₀| ≤ r } on a grid of radii.
#[derive(Clone, Debug, Serialize)]
pub struct RadialCdf {
    pub x0: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    pub method: CdfMethod,
}

/// Data source for `radial_cdf`.
pub enum CdfSource<'a> {
    Batch(&'a SampleBatch),
    /// Exact path: balls about their center, and 1D bodies.
    Oracle,
}

pub fn radial_cdf(
    body: &ConvexBody,
    x0: &[f64],
    r_grid: &[f64],
    source: CdfSource<'_>,
) -> Result<RadialCdf> {
    if r_grid.windows(2).any(|w| w[1] <= w[0]) || r_grid.is_empty() {
        return Err(RadialError::BadGrid);
    }
    match source {
        CdfSource::Batch(batch) => {
            if batch.count() == 0 {
                return Err(RadialError::EmptyBatch);
            }
            let mut radii: Vec<f64> = batch
                .iter_points()
                .map(|p| geometry::norm(&geometry::sub(p, x0)))
                .collect();
            radii.sort_by(f64::total_cmp);
            let m = radii.len();
            let values: Vec<f64> = r_grid
                .iter()
                .map(|&r| radii.partition_point(|&x| x <= r) as f64 / m as f64)
                .collect();
            let se = values.iter().map(|&p| mcse::binomial_se(p, m)).collect();
            Ok(RadialCdf {
                x0: x0.to_vec(),
                radii: r_grid.to_vec(),
                values,
                se,
                method: CdfMethod::Mc,
            })
        }
        CdfSource::Oracle => oracle_cdf(body, x0, r_grid),
    }
}

fn oracle_cdf(body: &ConvexBody, x0: &[f64], r_grid: &[f64]) -> Result<RadialCdf> {
    if let ShapeKind::Translated { inner, shift } = body.kind() {
        let shifted = geometry::sub(x0, shift);
        let mut cdf = oracle_cdf(inner, &shifted, r_grid)?;
        cdf.x0 = x0.to_vec();
        return Ok(cdf);
    }
    if let ShapeKind::Ball { center, radius } = body.kind() {
        let centered = geometry::norm(&geometry::sub(x0, center)) <= 1e-12 * radius;
        if centered {
            let n = body.dimension() as i32;
            let values = r_grid
                .iter()
                .map(|&r| (r / radius).clamp(0.0, 1.0).powi(n))
                .collect();
            return Ok(RadialCdf {
                x0: x0.to_vec(),
                radii: r_grid.to_vec(),
                values,
                se: vec![0.0; r_grid.len()],
                method: CdfMethod::BallOracle,
            });
        }
    }
    if body.dimension() == 1 {
        // Interval [a, b] from the chord through the interior point.
        let (lo, hi) = body
            .chord_interval(body.interior_point(), &[1.0])
            .map_err(|_| RadialError::OracleUnavailable)?;
        let a = body.interior_point()[0] + lo;
        let b = body.interior_point()[0] + hi;
        let len = b - a;
        let values = r_grid
            .iter()
            .map(|&r| {
                let overlap = (b.min(x0[0] + r) - a.max(x0[0] - r)).max(0.0);
                (overlap / len).clamp(0.0, 1.0)
            })
            .collect();
        return Ok(RadialCdf {
            x0: x0.to_vec(),
            radii: r_grid.to_vec(),
            values,
            se: vec![0.0; r_grid.len()],
            method: CdfMethod::BoxQuadrature,
        });
    }
    Err(RadialError::OracleUnavailable)
}

/// Quantile-spaced radial grid from the sample (well conditioned in the
/// lower tail, where the log-concavity check is most sensitive), merged with
/// any caller-required radii.
pub fn default_r_grid(batch: &SampleBatch, x0: &[f64], points: usize, extra: &[f64]) -> Vec<f64> {
    let mut radii: Vec<f64> = batch
        .iter_points()
        .map(|p| geometry::norm(&geometry::sub(p, x0)))
        .collect();
    radii.sort_by(f64::total_cmp);
    let m = radii.len();
    let mut grid: Vec<f64> = (1..=points)
        .map(|i| radii[(i * m / (points + 1)).min(m - 1)])
        .collect();
    grid.extend(extra.iter().copied().filter(|r| *r > 0.0));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    grid
}

/// A check plus the grid rows that violated it.
#[derive(Clone, Debug, Serialize)]
pub struct GridCheckReport {
    pub check: Check,
    /// (radius, lhs, allowed) for every violating grid point.
    pub violations: Vec<(f64, f64, f64)>,
}

/// Discrete concavity of r ↦ log F(r) on the (uneven) grid, with the SEs of
/// the empirical CDF propagated through the second differences at 4σ.
/// Grid points with F̂ = 0 are excluded.
pub fn check_radial_logconcavity(cdf: &RadialCdf) -> GridCheckReport {
    let pts: Vec<(f64, f64, f64)> = cdf
        .radii
        .iter()
        .zip(cdf.values.iter().zip(&cdf.se))
        .filter(|(_, (f, _))| **f > 0.0)
        .map(|(&r, (&f, &se))| (r, f.ln(), se / f))
        .collect();
    if pts.len() < 3 {
        return GridCheckReport {
            check: Check::skip(
                "radial_log_concavity",
                "fewer than 3 grid points with positive mass",
            ),
            violations: Vec::new(),
        };
    }
    let mut violations = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    for w in pts.windows(3) {
        let (r0, l0, s0) = w[0];
        let (r1, l1, s1) = w[1];
        let (r2, l2, s2) = w[2];
        let d1 = r1 - r0;
        let d2 = r2 - r1;
        let second = (l2 - l1) / d2 - (l1 - l0) / d1;
        let se = ((s2 / d2).powi(2) + (s1 * (1.0 / d1 + 1.0 / d2)).powi(2) + (s0 / d1).powi(2))
            .sqrt();
        let tau = 4.0 * se + 1e-9;
        worst = worst.max(second - tau);
        if second > tau {
            violations.push((r1, second, tau));
        }
    }
    let check = Check::verdict(
        "radial_log_concavity",
        violations.is_empty(),
        format!("{} grid triples violate discrete concavity", violations.len()),
    )
    .with("worst_excess", worst)
    .with("triples", pts.len() as f64 - 2.0);
    GridCheckReport { check, violations }
}

/// Small-ball tail bound F(r) ≤ exp(-c₁ (E₂ - r)/S) on r ∈ [0, E₂ - 3S],
/// with c₁ = log(3)/4. Skipped when E₂ < 3S (the bound's regime is empty).
pub fn check_small_ball_tail(stats: &RadialStats, cdf: &RadialCdf) -> GridCheckReport {
    if stats.e2 < 3.0 * stats.s {
        return GridCheckReport {
            check: Check::skip("small_ball_tail", "guard: E2 < 3S"),
            violations: Vec::new(),
        };
    }
    let (e2, s) = (stats.e2, stats.s);
    let r_max = e2 - 3.0 * s;
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for ((&r, &f), &se) in cdf.radii.iter().zip(&cdf.values).zip(&cdf.se) {
        if r > r_max {
            continue;
        }
        checked += 1;
        let bound = (-SMALL_BALL_RATE * (e2 - r) / s).exp();
        // Propagate moment uncertainty through the bound at 4σ.
        let d_e2 = SMALL_BALL_RATE / s * bound;
        let d_s = SMALL_BALL_RATE * (e2 - r) / (s * s) * bound;
        let slack = 4.0 * (se + d_e2 * stats.se_e2 + d_s * stats.se_s);
        if f > bound + slack {
            violations.push((r, f, bound + slack));
        }
    }
    let check = Check::verdict(
        "small_ball_tail",
        violations.is_empty(),
        format!("{} radii violate the tail bound", violations.len()),
    )
    .with("range_max", r_max)
    .with("points_checked", checked as f64);
    GridCheckReport { check, violations }
}

/// The unconditional Chebyshev anchor F(E - 2S) ≤ 1/4, evaluated on the
/// same CDF data at a radius certified ≤ E - 2S at 4σ of the moment
/// estimates (F is monotone, so checking a smaller radius is valid).
pub fn check_chebyshev_anchor(stats: &RadialStats, cdf: &RadialCdf) -> Check {
    let name = "chebyshev_anchor";
    let anchor = stats.e - 2.0 * stats.s - 4.0 * (stats.se_e + 2.0 * stats.se_s);
    if anchor <= 0.0 {
        // E ≤ 2S: the anchor radius is nonpositive and F(0⁻) = 0 ≤ 1/4.
        return Check::pass(name).with("anchor_radius", anchor).with("F", 0.0);
    }
    match cdf.radii.iter().rposition(|&r| r <= anchor) {
        Some(i) => {
            let allowed = 0.25 + 4.0 * cdf.se[i];
            Check::verdict(
                name,
                cdf.values[i] <= allowed,
                format!("F({}) = {} exceeds 1/4", cdf.radii[i], cdf.values[i]),
            )
            .with("anchor_radius", anchor)
            .with("F", cdf.values[i])
            .with_tolerance(allowed)
        }
        // No grid radius below the anchor: all sampled mass sits above it.
        None => Check::pass(name).with("anchor_radius", anchor).with("F", 0.0),
    }
}

/// Pointwise agreement between an MC radial CDF (over `m` samples) and the
/// exact oracle on the same grid, at 4 binomial SEs.
///
/// The variance comes from the oracle value (score test): the plug-in SE
/// collapses exactly when a rare count fluctuates low. The 8/m floor covers
/// Poisson skew where the normal approximation has no business being used.
pub fn check_cdf_oracle_agreement(mc: &RadialCdf, oracle: &RadialCdf, m: usize) -> Check {
    let mut bad = 0usize;
    let mut worst: f64 = 0.0;
    for i in 0..mc.radii.len().min(oracle.radii.len()) {
        let tol = 4.0 * mcse::binomial_se(oracle.values[i], m) + 8.0 / m as f64;
        let gap = (mc.values[i] - oracle.values[i]).abs();
        worst = worst.max(gap - tol);
        if gap > tol {
            bad += 1;
        }
    }
    Check::verdict(
        "radial_cdf_oracle_agreement",
        bad == 0,
        format!("{bad} grid radii disagree with the oracle at 4σ"),
    )
    .with("points", mc.radii.len() as f64)
    .with("worst_excess", worst)
}

/// Moment ratio E₂/E; flagged when it exceeds `c_khin`.
pub fn check_khinchine(stats: &RadialStats, c_khin: f64) -> Check {
    if !(stats.e > 0.0) {
        return Check::fail("khinchine_ratio", "E = 0: degenerate radial distribution");
    }
    let ratio = stats.e2 / stats.e;
    Check::verdict(
        "khinchine_ratio",
        ratio <= c_khin,
        format!("E2/E = {ratio} exceeds threshold {c_khin}"),
    )
    .with("ratio", ratio)
    .with_tolerance(c_khin)
}

/// One point of the reverse-Chebyshev curve.
#[derive(Clone, Debug, Serialize)]
pub struct ReverseChebyshevPoint {
    pub c0: f64,
    pub p: f64,
    pub se: f64,
    /// p ≥ c₀ with 4σ slack
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReverseChebyshevReport {
    pub curve: Vec<ReverseChebyshevPoint>,
    /// Largest grid c₀ whose inequality held.
    pub largest_passing: Option<f64>,
}

/// Empirical p(c₀) = P(|X - x₀| ≤ E - c₀·S) across a grid of c₀ ∈ (0, 1);
/// reports the largest c₀ with p(c₀) ≥ c₀ at 4σ.
pub fn check_reverse_chebyshev(
    batch: &SampleBatch,
    stats: &RadialStats,
    c0_grid: &[f64],
) -> ReverseChebyshevReport {
    let mut radii: Vec<f64> = batch
        .iter_points()
        .map(|p| geometry::norm(&geometry::sub(p, &stats.x0)))
        .collect();
    radii.sort_by(f64::total_cmp);
    let m = radii.len();
    let mut curve = Vec::with_capacity(c0_grid.len());
    for &c0 in c0_grid {
        let threshold = stats.e - c0 * stats.s;
        let p = radii.partition_point(|&x| x <= threshold) as f64 / m as f64;
        let se = mcse::binomial_se(p, m);
        curve.push(ReverseChebyshevPoint {
            c0,
            p,
            se,
            holds: p >= c0 - 4.0 * se,
        });
    }
    let largest_passing = curve
        .iter()
        .filter(|pt| pt.holds)
        .map(|pt| pt.c0)
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))));
    ReverseChebyshevReport {
        curve,
        largest_passing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{sample_uniform, SamplerConfig};

    fn unit_interval() -> ConvexBody {
        ConvexBody::cuboid(vec![0.0], vec![1.0]).unwrap()
    }

    fn batch_for(body: &ConvexBody, seed: u64, m: usize) -> SampleBatch {
        let config = SamplerConfig::for_body(body, seed)
            .with_chains(8)
            .with_thinning(3);
        sample_uniform(body, &config, m).unwrap()
    }

    #[test]
    fn stats_match_1d_integrals() {
        // r = x on [0,1]: E = 1/2, E2 = 1/√3, S = 1/(2√3).
        let body = unit_interval();
        let batch = batch_for(&body, 1, 100_000);
        let st = radial_stats(&batch, &[0.0]).unwrap();
        assert!((st.e - 0.5).abs() < 4.0 * st.se_e, "E={} se={}", st.e, st.se_e);
        assert!((st.e2 - 0.57735).abs() < 4.0 * st.se_e2);
        assert!((st.s - 0.28868).abs() < 4.0 * st.se_s);
    }

    #[test]
    fn stats_match_disk_quadrature() {
        // Unit disk about the center: E = 2/3, E2 = 1/√2.
        let body = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        let batch = batch_for(&body, 2, 100_000);
        let st = radial_stats(&batch, &[0.0, 0.0]).unwrap();
        assert!((st.e - 2.0 / 3.0).abs() < 4.0 * st.se_e);
        assert!((st.e2 - std::f64::consts::FRAC_1_SQRT_2).abs() < 4.0 * st.se_e2);
    }

    #[test]
    fn identity_e2_e_s_is_exact() {
        let body = ConvexBody::ball(vec![0.5, 0.5, 0.5], 2.0).unwrap();
        let batch = batch_for(&body, 3, 20_000);
        let st = radial_stats(&batch, &[0.1, 0.0, -0.3]).unwrap();
        let lhs = st.e2 * st.e2;
        let rhs = st.e * st.e + st.s * st.s;
        assert!((lhs - rhs).abs() <= 1e-12 * lhs, "identity violated: {lhs} vs {rhs}");
    }

    #[test]
    fn degenerate_point_mass() {
        // All points at distance 1 from x0: E = E2 = 1, S = 0.
        let body = unit_interval();
        let config = SamplerConfig::for_body(&body, 4).with_chains(4);
        let points: Vec<f64> = std::iter::repeat([1.0, 0.0]).take(32).flatten().collect();
        let batch = SampleBatch::from_points(
            2,
            4,
            points,
            config,
            crate::sampler::TargetTag::Uniform,
        )
        .unwrap();
        let st = radial_stats(&batch, &[0.0, 0.0]).unwrap();
        assert_eq!(st.e, 1.0);
        assert_eq!(st.e2, 1.0);
        assert_eq!(st.s, 0.0);
        assert_eq!(st.se_s, 0.0);
    }

    #[test]
    fn translation_equivariance_is_exact() {
        let body = ConvexBody::ball(vec![1.0, -2.0], 1.5).unwrap();
        let batch = batch_for(&body, 5, 10_000);
        let x0 = vec![0.7, -1.9];
        let a = radial_stats(&batch, &x0).unwrap();
        let shifted = batch.translated(&x0);
        let b = radial_stats(&shifted, &[0.0, 0.0]).unwrap();
        assert_eq!(a.e, b.e);
        assert_eq!(a.s, b.s);
        assert_eq!(a.e2, b.e2);
    }

    #[test]
    fn cdf_oracle_values() {
        // Ball n=3 about center at r=1/2: (1/2)³ = 0.125.
        let ball = ConvexBody::ball(vec![0.0; 3], 1.0).unwrap();
        let cdf = radial_cdf(&ball, &[0.0; 3], &[0.5], CdfSource::Oracle).unwrap();
        assert!((cdf.values[0] - 0.125).abs() < 1e-15);
        assert_eq!(cdf.method, CdfMethod::BallOracle);

        // Interval [0,1] about 0 at r=1/4: 0.25.
        let seg = unit_interval();
        let cdf = radial_cdf(&seg, &[0.0], &[0.25], CdfSource::Oracle).unwrap();
        assert!((cdf.values[0] - 0.25).abs() < 1e-15);
        assert_eq!(cdf.method, CdfMethod::BoxQuadrature);
    }

    #[test]
    fn cdf_mc_matches_quarter_disk() {
        // Box [0,1]² about the origin at r=1: quarter-disk area π/4.
        let body = ConvexBody::cuboid(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let batch = batch_for(&body, 6, 100_000);
        let cdf = radial_cdf(&body, &[0.0, 0.0], &[1.0], CdfSource::Batch(&batch)).unwrap();
        let expect = std::f64::consts::FRAC_PI_4;
        assert!(
            (cdf.values[0] - expect).abs() < 4.0 * cdf.se[0],
            "got {} want {expect} se {}",
            cdf.values[0],
            cdf.se[0]
        );
    }

    #[test]
    fn cdf_mc_matches_ball_oracle_on_grid() {
        let body = ConvexBody::ball(vec![0.0; 3], 1.0).unwrap();
        let batch = batch_for(&body, 7, 100_000);
        let grid = default_r_grid(&batch, &[0.0; 3], 48, &[]);
        let mc = radial_cdf(&body, &[0.0; 3], &grid, CdfSource::Batch(&batch)).unwrap();
        let oracle = radial_cdf(&body, &[0.0; 3], &grid, CdfSource::Oracle).unwrap();
        for i in 0..grid.len() {
            let tol = 4.0 * mc.se[i] + 1e-9;
            assert!(
                (mc.values[i] - oracle.values[i]).abs() <= tol,
                "r={} mc={} oracle={}",
                grid[i],
                mc.values[i],
                oracle.values[i]
            );
        }
    }

    #[test]
    fn logconcavity_ball_oracle_passes() {
        let ball = ConvexBody::ball(vec![0.0; 4], 1.0).unwrap();
        let grid: Vec<f64> = (1..=40).map(|i| i as f64 / 40.0).collect();
        let cdf = radial_cdf(&ball, &[0.0; 4], &grid, CdfSource::Oracle).unwrap();
        let rep = check_radial_logconcavity(&cdf);
        assert!(rep.check.passed(), "{:?}", rep.violations);
    }

    #[test]
    fn logconcavity_mc_box_passes() {
        let body = ConvexBody::cuboid(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let batch = batch_for(&body, 8, 100_000);
        let center = [0.5, 0.5];
        let grid = default_r_grid(&batch, &center, 50, &[]);
        let cdf = radial_cdf(&body, &center, &grid, CdfSource::Batch(&batch)).unwrap();
        let rep = check_radial_logconcavity(&cdf);
        assert!(rep.check.passed(), "{:?}", rep.violations);
    }

    #[test]
    fn logconcavity_flags_constructed_violation() {
        let cdf = RadialCdf {
            x0: vec![0.0],
            radii: vec![1.0, 2.0, 3.0],
            values: vec![0.1, 0.11, 0.9],
            se: vec![1e-6, 1e-6, 1e-6],
            method: CdfMethod::Mc,
        };
        let rep = check_radial_logconcavity(&cdf);
        assert!(rep.check.failed());
        assert_eq!(rep.violations.len(), 1);
    }

    #[test]
    fn small_ball_tail_ball50_oracle() {
        // E2/S ≈ 51 for the 50-ball: the range is nonempty and the bound
        // holds on every grid point.
        let n = 50;
        let ball = ConvexBody::ball(vec![0.0; n], 1.0).unwrap();
        let nf = n as f64;
        let e = nf / (nf + 1.0);
        let e2 = (nf / (nf + 2.0)).sqrt();
        let stats = RadialStats::exact(vec![0.0; n], e, e2);
        assert!(stats.e2 >= 3.0 * stats.s);
        let grid: Vec<f64> = (1..=200).map(|i| i as f64 / 200.0).collect();
        let cdf = radial_cdf(&ball, &stats.x0, &grid, CdfSource::Oracle).unwrap();
        let rep = check_small_ball_tail(&stats, &cdf);
        assert!(rep.check.passed(), "{:?}", rep.violations);
        assert!(rep
            .check
            .witnesses
            .iter()
            .any(|(k, v)| k == "points_checked" && *v > 10.0));
    }

    #[test]
    fn small_ball_tail_skipped_for_interval() {
        // Box [0,1] about 0: E2 ≈ 0.577 < 3S ≈ 0.866.
        let stats = RadialStats::exact(vec![0.0], 0.5, 1.0 / 3.0f64.sqrt());
        let seg = unit_interval();
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
        let cdf = radial_cdf(&seg, &[0.0], &grid, CdfSource::Oracle).unwrap();
        let rep = check_small_ball_tail(&stats, &cdf);
        assert_eq!(rep.check.status, crate::report::CheckStatus::Skip);
    }

    #[test]
    fn chebyshev_anchor_checked_on_mc_data() {
        let body = ConvexBody::ball(vec![0.0; 10], 1.0).unwrap();
        let batch = batch_for(&body, 9, 100_000);
        let st = radial_stats(&batch, &[0.0; 10]).unwrap();
        assert!(st.e2 >= 3.0 * st.s);
        let anchor = st.e - 2.0 * st.s;
        let grid = default_r_grid(&batch, &[0.0; 10], 64, &[anchor]);
        let cdf = radial_cdf(&body, &[0.0; 10], &grid, CdfSource::Batch(&batch)).unwrap();
        let rep = check_small_ball_tail(&st, &cdf);
        assert!(rep.check.passed(), "{:?}", rep.violations);
        let anchor_check = check_chebyshev_anchor(&st, &cdf);
        assert!(anchor_check.passed(), "{anchor_check:?}");
        let f_anchor = anchor_check
            .witnesses
            .iter()
            .find(|(k, _)| k == "F")
            .unwrap()
            .1;
        assert!(f_anchor <= 0.25 + 1e-9, "anchor mass {f_anchor}");
    }

    #[test]
    fn chebyshev_anchor_runs_when_tail_is_guarded() {
        // Interval about 0: E2 < 3S so the tail check skips, but the anchor
        // theorem still holds and is checked.
        let body = unit_interval();
        let batch = batch_for(&body, 13, 50_000);
        let st = radial_stats(&batch, &[0.0]).unwrap();
        assert!(st.e2 < 3.0 * st.s);
        let grid = default_r_grid(&batch, &[0.0], 64, &[st.e - 2.0 * st.s]);
        let cdf = radial_cdf(&body, &[0.0], &grid, CdfSource::Batch(&batch)).unwrap();
        let anchor_check = check_chebyshev_anchor(&st, &cdf);
        // F(E - 2S) = E - 2S ≈ 0.5 - 0.577 < 0 → trivially ≤ 1/4; with MC
        // noise the anchor radius is near zero either way.
        assert!(anchor_check.passed(), "{anchor_check:?}");
    }

    #[test]
    fn khinchine_values() {
        let disk = RadialStats::exact(vec![0.0; 2], 2.0 / 3.0, std::f64::consts::FRAC_1_SQRT_2);
        let c = check_khinchine(&disk, 10.0);
        assert!(c.passed());
        let ratio = c.witnesses[0].1;
        assert!((ratio - 1.06066).abs() < 1e-5);

        let point = RadialStats::exact(vec![0.0], 1.0, 1.0);
        assert!((check_khinchine(&point, 10.0).witnesses[0].1 - 1.0).abs() < 1e-15);

        let seg = RadialStats::exact(vec![0.0], 0.5, 1.0 / 3.0f64.sqrt());
        let ratio = check_khinchine(&seg, 10.0).witnesses[0].1;
        assert!((ratio - 1.1547).abs() < 1e-4);

        // Flag path.
        assert!(check_khinchine(&disk, 1.0).failed());
    }

    #[test]
    fn reverse_chebyshev_interval() {
        // p(0.1) = P(X ≤ 0.5 - 0.1·0.28868) ≈ 0.4711 ≥ 0.1.
        let body = unit_interval();
        let batch = batch_for(&body, 10, 100_000);
        let st = radial_stats(&batch, &[0.0]).unwrap();
        let rep = check_reverse_chebyshev(&batch, &st, &[0.1, 0.3, 0.5, 0.9]);
        assert!(rep.curve[0].holds);
        assert!((rep.curve[0].p - 0.47113).abs() < 0.01);
        // p(c₀) = 0.5 - 0.28868·c₀ ≥ c₀ only up to c₀ ≈ 0.388.
        assert_eq!(rep.largest_passing, Some(0.3));
        assert!(!rep.curve[2].holds && !rep.curve[3].holds);
    }

    #[test]
    fn reverse_chebyshev_ball10_matches_oracle() {
        let body = ConvexBody::ball(vec![0.0; 10], 1.0).unwrap();
        let batch = batch_for(&body, 11, 100_000);
        let st = radial_stats(&batch, &[0.0; 10]).unwrap();
        let rep = check_reverse_chebyshev(&batch, &st, &[0.1]);
        // Oracle: ∫_0^{E-0.1S} 10 r⁹ dr = (E - 0.1S)^10 with exact moments.
        let nf = 10.0f64;
        let e = nf / (nf + 1.0);
        let e2 = (nf / (nf + 2.0)).sqrt();
        let s = (e2 * e2 - e * e).sqrt();
        let oracle = (e - 0.1 * s).powi(10);
        assert!(
            (rep.curve[0].p - oracle).abs() < 4.0 * rep.curve[0].se + 0.005,
            "p={} oracle={oracle}",
            rep.curve[0].p
        );
    }

    #[test]
    fn reverse_chebyshev_failure_still_emits_curve() {
        // Near-degenerate data: huge c₀ must fail while the curve is intact.
        let body = unit_interval();
        let batch = batch_for(&body, 12, 4_000);
        let st = radial_stats(&batch, &[0.0]).unwrap();
        let rep = check_reverse_chebyshev(&batch, &st, &[0.99]);
        assert_eq!(rep.curve.len(), 1);
        // P(X ≤ E - 0.99S) ≈ 0.214 < 0.99: inequality fails at this c₀.
        assert!(!rep.curve[0].holds);
        assert_eq!(rep.largest_passing, None);
    }
}
