//! The normalization exponent Z(w) = -log ∫ exp(-w|x|²/2) dμ_K and the
//! free energy Z(w)/w, estimated by three independent routes:
//!
//! * `free_energy_mc` — reweighting a uniform sample (log-sum-exp, delta
//!   method SE, effective-sample-size guard);
//! * `free_energy_thermo` — thermodynamic integration of
//!   dZ/ds = ½·E_{γ^s}|x|² with Gauss–Legendre nodes, each inner expectation
//!   from an exact-conditional Gibbs sample;
//! * quadrature oracles for boxes (coordinate factorization) and balls
//!   (radial reduction), exact to ~1e-12 relative.
//!
//! Plus every inequality the free energy is known to satisfy: the lower
//! bound ½E₂² - C·E₂S below the threshold c/(E₂S), its refined form
//! ½(E₂-3S)², the upper (sharpness) bound, the Gaussian-measure identity,
//! and the shape of the curve (Z concave nondecreasing, Z/w nonincreasing,
//! slope ½E₂² at the origin).

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::constants::{Constants, FREE_ENERGY_GAP, FREE_ENERGY_THRESHOLD};
use crate::geometry::{self, ConvexBody, ShapeKind};
use crate::mcse;
use crate::quadrature;
use crate::radial::RadialStats;
use crate::report::Check;
use crate::rng::StreamDomain;
use crate::sampler::{sample_gibbs_stream, SampleBatch, SamplerConfig};

#[derive(Debug, Error)]
pub enum FreeEnergyError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("inverse-temperature must be nonnegative, got {0}")]
    NegativeWeight(f64),
    #[error("sampler error: {0}")]
    Sampler(#[from] crate::sampler::SamplerError),
}

pub type Result<T> = std::result::Result<T, FreeEnergyError>;

/// Above w·E₂² = 20 the plain reweighting estimator's variance explodes
/// (the Gaussian mass sits far from typical uniform samples); the pipeline
/// switches to thermodynamic integration there.
pub const MC_SWITCH_WE2SQ: f64 = 20.0;

/// Effective sample size below which an MC point is flagged.
pub const MC_ESS_WARN: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mc,
    Thermo,
    BoxQuadrature,
    BallQuadrature,
}

/// One (w, Z) estimate with its provenance.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FreeEnergyPoint {
    pub w: f64,
    pub z: f64,
    pub se: f64,
    pub method: Method,
    /// Effective sample size of the reweighting estimator (MC only).
    pub ess: Option<f64>,
}

impl FreeEnergyPoint {
    pub fn low_ess(&self) -> bool {
        self.ess.is_some_and(|e| e < MC_ESS_WARN)
    }
}

/// Ordered (w, Z) estimates for one body about one base point.
#[derive(Clone, Debug, Serialize)]
pub struct FreeEnergyCurve {
    pub body_name: String,
    pub x0: Vec<f64>,
    pub points: Vec<FreeEnergyPoint>,
    pub stats: RadialStats,
}

impl FreeEnergyCurve {
    /// Z at `w`, linearly interpolated between bracketing grid points.
    /// Linear interpolation of a concave Z underestimates it, which makes
    /// the entropy Ĥ = ½E₂²w - Ẑ an upper bound: the ≤ 1/2 check stays
    /// one-sided under interpolation.
    pub fn interpolate_z(&self, w: f64) -> Option<(FreeEnergyPoint, bool)> {
        let pts = &self.points;
        if pts.is_empty() {
            return None;
        }
        if let Some(hit) = pts.iter().find(|p| (p.w - w).abs() <= 1e-12 * w.abs()) {
            return Some((*hit, false));
        }
        if w < pts[0].w || w > pts[pts.len() - 1].w {
            return None;
        }
        let i = pts.partition_point(|p| p.w < w);
        let (a, b) = (&pts[i - 1], &pts[i]);
        let t = (w - a.w) / (b.w - a.w);
        let z = a.z + t * (b.z - a.z);
        let se = ((1.0 - t) * a.se).hypot(t * b.se);
        Some((
            FreeEnergyPoint {
                w,
                z,
                se,
                method: a.method,
                ess: None,
            },
            true,
        ))
    }
}

/// All per-grid-point estimates computed for one body: the published curve
/// (per-point method chosen by the ESS switch), the full MC and
/// thermodynamic curves behind it, and the oracle where the shape admits one.
#[derive(Clone, Debug, Serialize)]
pub struct CurveBundle {
    pub curve: FreeEnergyCurve,
    pub mc: Vec<FreeEnergyPoint>,
    pub thermo: Vec<FreeEnergyPoint>,
    pub oracle: Option<Vec<FreeEnergyPoint>>,
}

/// Z(w) by reweighting a uniform batch: Z = -log mean exp(-w|x|²/2).
///
/// Radii are measured from the origin of the batch's frame; the SE comes
/// from batch means of the weights (delta method), computed in log space so
/// large w cannot underflow.
pub fn free_energy_mc(w: f64, batch: &SampleBatch) -> Result<FreeEnergyPoint> {
    if batch.count() == 0 {
        return Err(FreeEnergyError::EmptyBatch);
    }
    if !(w >= 0.0) {
        return Err(FreeEnergyError::NegativeWeight(w));
    }
    if w == 0.0 {
        return Ok(FreeEnergyPoint {
            w,
            z: 0.0,
            se: 0.0,
            method: Method::Mc,
            ess: Some(batch.count() as f64),
        });
    }
    let log_weights = batch.map_per_sample(|p| -0.5 * w * geometry::norm_sq(p));
    let m = log_weights.len() as f64;
    let lse1 = log_sum_exp(&log_weights);
    let lse2 = log_sum_exp_scaled(&log_weights, 2.0);
    let log_mean = lse1 - m.ln();
    let ess = (2.0 * lse1 - lse2).exp();
    // Per-batch log-means; SE of Z = -log(mean g) is sd(g_b/ḡ)/√B, floored
    // by the iid delta-method value √(1/ess - 1/m) which is stable and a
    // lower bound on the true error.
    let batch_log_means = mcse::batch_statistic(&log_weights, batch.chains(), |s| {
        log_sum_exp(s) - (s.len() as f64).ln()
    });
    let ratios: Vec<f64> = batch_log_means.iter().map(|lb| (lb - log_mean).exp()).collect();
    let iid_se = (1.0 / ess - 1.0 / m).max(0.0).sqrt();
    let se = mcse::from_batch_means(&ratios).se.max(iid_se);
    Ok(FreeEnergyPoint {
        w,
        z: -log_mean,
        se,
        method: Method::Mc,
        ess: Some(ess),
    })
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn log_sum_exp_scaled(xs: &[f64], factor: f64) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) * factor;
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (factor * x - max).exp()).sum::<f64>().ln()
}

/// Gauss–Legendre panels for ∫₀^w ½E_s|x|² ds. A single 16-node panel is
/// accurate while the integrand varies on the scale of the whole interval;
/// once w is far beyond the Gaussian-fit knee s* ~ n/E₂² the mass of
/// variation sits near 0 and the tail is covered by ratio-4 log panels.
fn thermo_panels(w: f64, e2_sq_hint: f64, dimension: usize) -> Vec<(f64, f64, usize)> {
    let knee = 3.0 * dimension as f64 / e2_sq_hint.max(1e-300);
    if w <= knee {
        return vec![(0.0, w, 16)];
    }
    let mut panels = vec![(0.0, knee, 16)];
    let mut a = knee;
    while a < w {
        let b = (a * 4.0).min(w);
        panels.push((a, b, 8));
        a = b;
    }
    panels
}

/// Z(w) by thermodynamic integration. The total sample budget `m` is split
/// across the quadrature nodes; node expectations come from independent
/// Gibbs runs on disjoint streams and are integrated with their SEs.
pub fn free_energy_thermo(
    body: &ConvexBody,
    w: f64,
    config: &SamplerConfig,
    m: usize,
) -> Result<FreeEnergyPoint> {
    if !(w > 0.0) {
        return Err(FreeEnergyError::NegativeWeight(w));
    }
    // Cheap uniform probe for the knee scale.
    let probe = sample_gibbs_stream(body, 0.0, config, 2048.min(m.max(64)), StreamDomain::Thermo, 0)?;
    let e2_sq = mcse::mean_se(&probe.map_per_sample(geometry::norm_sq), probe.chains()).mean;
    let panels = thermo_panels(w, e2_sq, body.dimension());
    let (z, se, _) = integrate_panels(body, &panels, config, m, 1)?;
    Ok(FreeEnergyPoint {
        w,
        z,
        se,
        method: Method::Thermo,
        ess: None,
    })
}

/// Thermodynamic curve on an increasing grid, integrated cumulatively:
/// Z(w_k) = Z(w_{k-1}) + ∫ over the segment, so one pass prices every grid
/// point. Node SEs accumulate in quadrature.
pub fn free_energy_thermo_curve(
    body: &ConvexBody,
    grid: &[f64],
    e2_sq_hint: f64,
    config: &SamplerConfig,
    m_per_node: usize,
) -> Result<Vec<FreeEnergyPoint>> {
    assert!(grid.windows(2).all(|w| w[1] > w[0]), "grid must increase");
    let mut segments: Vec<(f64, f64, usize)> = Vec::new();
    let mut prev = 0.0;
    for &w in grid {
        if prev == 0.0 {
            segments.extend(thermo_panels(w, e2_sq_hint, body.dimension()));
        } else if w / prev <= 4.0 {
            segments.push((prev, w, 8));
        } else {
            let pieces = (w / prev).log2().div_euclid(2.0) as usize + 1;
            let ratio = (w / prev).powf(1.0 / pieces as f64);
            let mut a = prev;
            for _ in 0..pieces {
                let b = (a * ratio).min(w);
                segments.push((a, b, 8));
                a = b;
            }
        }
        prev = w;
    }
    // One flat node list, evaluated in parallel, then folded per grid point.
    let nodes = plan_nodes(&segments);
    let results = evaluate_nodes(body, &nodes, config, m_per_node, 0)?;
    let mut out = Vec::with_capacity(grid.len());
    let mut z = 0.0;
    let mut var = 0.0;
    let mut idx = 0;
    for &w in grid {
        while idx < nodes.len() && nodes[idx].0 <= w * (1.0 + 1e-12) {
            let (_, weight) = nodes[idx];
            let ms = &results[idx];
            z += weight * 0.5 * ms.mean;
            var += (weight * 0.5 * ms.se).powi(2);
            idx += 1;
        }
        out.push(FreeEnergyPoint {
            w,
            z,
            se: var.sqrt(),
            method: Method::Thermo,
            ess: None,
        });
    }
    Ok(out)
}

fn plan_nodes(segments: &[(f64, f64, usize)]) -> Vec<(f64, f64)> {
    let mut nodes = Vec::new();
    for &(a, b, n) in segments {
        let (xs, ws) = quadrature::gauss_legendre_on(n, a, b);
        nodes.extend(xs.into_iter().zip(ws));
    }
    nodes
}

fn evaluate_nodes(
    body: &ConvexBody,
    nodes: &[(f64, f64)],
    config: &SamplerConfig,
    m_per_node: usize,
    unit_base: u32,
) -> Result<Vec<mcse::MeanSe>> {
    nodes
        .par_iter()
        .enumerate()
        .map(|(j, &(s, _))| {
            let batch = sample_gibbs_stream(
                body,
                s,
                config,
                m_per_node,
                StreamDomain::Thermo,
                unit_base + 1 + j as u32,
            )?;
            Ok(mcse::mean_se(
                &batch.map_per_sample(geometry::norm_sq),
                batch.chains(),
            ))
        })
        .collect()
}

fn integrate_panels(
    body: &ConvexBody,
    panels: &[(f64, f64, usize)],
    config: &SamplerConfig,
    m_total: usize,
    unit_base: u32,
) -> Result<(f64, f64, usize)> {
    let nodes = plan_nodes(panels);
    let m_per_node = (m_total / nodes.len()).max(128);
    let results = evaluate_nodes(body, &nodes, config, m_per_node, unit_base)?;
    let mut z = 0.0;
    let mut var = 0.0;
    for ((_, weight), ms) in nodes.iter().zip(&results) {
        z += weight * 0.5 * ms.mean;
        var += (weight * 0.5 * ms.se).powi(2);
    }
    Ok((z, var.sqrt(), nodes.len()))
}

/// Exact Z(w) for an axis-aligned box about base point `x0`: the integrand
/// factorizes over coordinates, each factor a 1D Gaussian mass computed in
/// log space to 1e-12 relative.
pub fn free_energy_oracle_box(lower: &[f64], upper: &[f64], x0: &[f64], w: f64) -> FreeEnergyPoint {
    let mut z = 0.0;
    if w > 0.0 {
        for i in 0..lower.len() {
            let (a, b) = (lower[i] - x0[i], upper[i] - x0[i]);
            let log_mass = quadrature::log_integrate(|t| -0.5 * w * t * t, a, b, 1e-13);
            z -= log_mass - (b - a).ln();
        }
    }
    FreeEnergyPoint {
        w,
        z,
        se: 0.0,
        method: Method::BoxQuadrature,
        ess: None,
    }
}

/// Exact Z(w) for a ball of radius `radius` in dimension `n` about its
/// center, via the radial density n r^{n-1} / R^n.
pub fn free_energy_oracle_ball(radius: f64, n: usize, w: f64) -> FreeEnergyPoint {
    let z = if w > 0.0 {
        let nf = n as f64;
        let log_f = |r: f64| {
            if r <= 0.0 {
                f64::NEG_INFINITY
            } else {
                -0.5 * w * r * r + (nf - 1.0) * r.ln() + nf.ln() - nf * radius.ln()
            }
        };
        -quadrature::log_integrate(log_f, 0.0, radius, 1e-13)
    } else {
        0.0
    };
    FreeEnergyPoint {
        w,
        z,
        se: 0.0,
        method: Method::BallQuadrature,
        ess: None,
    }
}

/// Exact Z(w) about `x0` when the shape admits one: boxes (any base point)
/// and balls about their center. `None` otherwise.
pub fn oracle_point(body: &ConvexBody, x0: &[f64], w: f64) -> Option<FreeEnergyPoint> {
    match body.kind() {
        ShapeKind::Box { lower, upper } => Some(free_energy_oracle_box(lower, upper, x0, w)),
        ShapeKind::Ball { center, radius } => {
            let centered = geometry::norm(&geometry::sub(x0, center)) <= 1e-9 * radius;
            centered.then(|| free_energy_oracle_ball(*radius, body.dimension(), w))
        }
        ShapeKind::Translated { inner, shift } => {
            oracle_point(inner, &geometry::sub(x0, shift), w)
        }
        _ => None,
    }
}

/// Default inverse-temperature grid: 24 log-spaced points spanning
/// [10⁻³, 10³]/(E₂S) — straddling both the lower-bound and the sharpness
/// regimes — plus the exact threshold marks used by the checks.
pub fn default_w_grid(stats: &RadialStats, constants: &Constants, points: usize) -> Vec<f64> {
    let scale = (stats.e2 * stats.s).max(1e-300);
    let lo = 1e-3 / scale;
    let hi = 1e3 / scale;
    let mut grid: Vec<f64> = (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect();
    grid.extend([
        FREE_ENERGY_THRESHOLD / scale,
        constants.c_refined / scale,
        constants.c_prime / scale,
        constants.cap_u / scale,
    ]);
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    grid
}

/// Builds the full curve bundle for a body already centered on its base
/// point: MC at every grid point from the uniform batch, the thermodynamic
/// curve in one cumulative pass, the oracle where available, and the
/// published curve via the ESS switch rule.
pub fn build_curve(
    body: &ConvexBody,
    body_name: &str,
    stats: &RadialStats,
    uniform_batch: &SampleBatch,
    config: &SamplerConfig,
    grid: &[f64],
    m_per_thermo_node: usize,
) -> Result<CurveBundle> {
    let mc: Vec<FreeEnergyPoint> = grid
        .iter()
        .map(|&w| free_energy_mc(w, uniform_batch))
        .collect::<Result<_>>()?;
    let positive_grid: Vec<f64> = grid.iter().copied().filter(|&w| w > 0.0).collect();
    let thermo = free_energy_thermo_curve(
        body,
        &positive_grid,
        stats.e2 * stats.e2,
        config,
        m_per_thermo_node,
    )?;
    let thermo_full: Vec<FreeEnergyPoint> = if positive_grid.len() == grid.len() {
        thermo
    } else {
        // Reattach an exact zero at w = 0.
        let mut v = vec![FreeEnergyPoint {
            w: 0.0,
            z: 0.0,
            se: 0.0,
            method: Method::Thermo,
            ess: None,
        }];
        v.extend(thermo);
        v
    };
    let e2_sq = stats.e2 * stats.e2;
    let points: Vec<FreeEnergyPoint> = grid
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            if w * e2_sq <= MC_SWITCH_WE2SQ {
                mc[i]
            } else {
                thermo_full[i]
            }
        })
        .collect();
    let oracle: Option<Vec<FreeEnergyPoint>> = {
        let origin = vec![0.0; body.dimension()];
        if oracle_point(body, &origin, 1.0).is_some() {
            Some(
                grid.iter()
                    .map(|&w| oracle_point(body, &origin, w).unwrap())
                    .collect(),
            )
        } else {
            None
        }
    };
    Ok(CurveBundle {
        curve: FreeEnergyCurve {
            body_name: body_name.to_string(),
            x0: stats.x0.clone(),
            points,
            stats: stats.clone(),
        },
        mc,
        thermo: thermo_full,
        oracle,
    })
}

/// The Gaussian-measure identity Z(w) = (n/2)log(w/2π) - log γ(√wK) + log Vol(K),
/// checked by estimating γ(√wK) with direct standard-Gaussian counting.
/// Skipped when the volume is unknown or the Gaussian mass is below 10⁻³
/// (counting infeasible).
pub fn gaussian_identity_check(
    body: &ConvexBody,
    x0: &[f64],
    w: f64,
    z: &FreeEnergyPoint,
    seed: u64,
    m: usize,
) -> Check {
    let name = "gaussian_identity";
    let Some(log_vol) = body.log_volume() else {
        return Check::skip(name, "volume unavailable for this shape");
    };
    if !(w > 0.0) {
        return Check::skip(name, "identity check needs w > 0");
    }
    let n = body.dimension();
    let mut rng = crate::rng::stream_rng(seed, StreamDomain::GaussianCount, 0, 0);
    let inv_sqrt_w = w.sqrt().recip();
    let mut hits = 0usize;
    let mut y = vec![0.0; n];
    for _ in 0..m {
        for (yi, xi) in y.iter_mut().zip(x0) {
            let g: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
            *yi = xi + g * inv_sqrt_w;
        }
        if body.membership(&y) {
            hits += 1;
        }
    }
    let gamma = hits as f64 / m as f64;
    if gamma < 1e-3 {
        return Check::skip(
            name,
            format!("Gaussian mass of √w·K ≈ {gamma:.2e} too small to count"),
        )
        .with("gamma_hat", gamma);
    }
    let se_gamma = mcse::binomial_se(gamma, m);
    let z_gamma = 0.5 * n as f64 * (w / (2.0 * std::f64::consts::PI)).ln() - gamma.ln() + log_vol;
    let se_z_gamma = se_gamma / gamma;
    let tol = 4.0 * se_z_gamma.hypot(z.se);
    let diff = (z_gamma - z.z).abs();
    Check::verdict(
        name,
        diff <= tol,
        format!("identity mismatch {diff:.4} exceeds {tol:.4}"),
    )
    .with("z", z.z)
    .with("z_from_gamma", z_gamma)
    .with("gamma_hat", gamma)
    .with_tolerance(tol)
}

/// Lower-bound slack record: (w, Z/w, required rhs).
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheckReport {
    pub check: Check,
    /// (w, lhs Z/w, rhs) per evaluated point.
    pub rows: Vec<(f64, f64, f64)>,
    /// Largest empirical constant consistent with the data (upper-bound
    /// check only).
    pub empirical_c_u: Option<f64>,
}

/// Z(w)/w ≥ ½E₂² - C·E₂S for all grid w below the threshold c/(E₂S), with
/// c = log(3)/8 and C ≈ 8.0474; 4σ slack from both the curve and the
/// moment estimates. The threshold itself is shrunk by the moments'
/// relative 4σ so noisy thresholds cannot pull in out-of-regime points.
pub fn check_free_energy_lower_bound(curve: &FreeEnergyCurve, stats: &RadialStats) -> BoundCheckReport {
    threshold_bound_check(
        curve,
        stats,
        "free_energy_lower_bound",
        FREE_ENERGY_THRESHOLD,
        |e2, s| 0.5 * e2 * e2 - FREE_ENERGY_GAP * e2 * s,
        |e2, s, se_e2, se_s| e2 * se_e2 + FREE_ENERGY_GAP * (s * se_e2 + e2 * se_s),
    )
}

/// Refined lower bound Z(w)/w ≥ ½(E₂-3S)² for w ≤ c_refined/(E₂S)
/// (threshold configurable and non-theorem; rhs clamps at 0).
pub fn check_free_energy_refined_bound(
    curve: &FreeEnergyCurve,
    stats: &RadialStats,
    c_refined: f64,
) -> BoundCheckReport {
    threshold_bound_check(
        curve,
        stats,
        "free_energy_refined_bound",
        c_refined,
        |e2, s| {
            let d = (e2 - 3.0 * s).max(0.0);
            0.5 * d * d
        },
        |e2, s, se_e2, se_s| (e2 - 3.0 * s).max(0.0) * (se_e2 + 3.0 * se_s),
    )
}

fn threshold_bound_check(
    curve: &FreeEnergyCurve,
    stats: &RadialStats,
    name: &str,
    threshold_factor: f64,
    rhs: impl Fn(f64, f64) -> f64,
    rhs_se: impl Fn(f64, f64, f64, f64) -> f64,
) -> BoundCheckReport {
    let (e2, s) = (stats.e2, stats.s);
    if !(e2 > 0.0 && s > 0.0) {
        return BoundCheckReport {
            check: Check::skip(name, "degenerate radial moments"),
            rows: Vec::new(),
            empirical_c_u: None,
        };
    }
    let rel = 4.0 * (stats.se_e2 / e2 + stats.se_s / s);
    let w_max = threshold_factor / (e2 * s) * (1.0 - rel).max(0.0);
    let rhs_value = rhs(e2, s);
    let rhs_uncertainty = rhs_se(e2, s, stats.se_e2, stats.se_s);
    let mut rows = Vec::new();
    let mut violations = 0usize;
    let mut min_slack = f64::INFINITY;
    for p in curve.points.iter().filter(|p| p.w > 0.0 && p.w <= w_max) {
        let lhs = p.z / p.w;
        let slack = lhs - rhs_value;
        min_slack = min_slack.min(slack);
        if slack < -4.0 * (p.se / p.w + rhs_uncertainty) {
            violations += 1;
        }
        rows.push((p.w, lhs, rhs_value));
    }
    let check = if rows.is_empty() {
        Check::skip(name, "no grid points below the threshold")
    } else {
        Check::verdict(
            name,
            violations == 0,
            format!("{violations} points violate the bound"),
        )
        .with("w_max", w_max)
        .with("rhs", rhs_value)
        .with("min_slack", min_slack)
        .with("points", rows.len() as f64)
    };
    BoundCheckReport {
        check,
        rows,
        empirical_c_u: None,
    }
}

/// Sharpness: Z(w)/w ≤ ½E₂² - c_u·E₂S for all grid w ≥ C_u/(E₂S)
/// (defaults c_u = 0.01, C_u = 50, both calibrated — the statement is
/// existence-only). Also reports the largest empirical c_u the data
/// supports: min over qualifying w of (½E₂² - Z/w)/(E₂S).
pub fn check_free_energy_upper_bound(
    curve: &FreeEnergyCurve,
    stats: &RadialStats,
    c_u: f64,
    cap_u: f64,
) -> BoundCheckReport {
    let name = "free_energy_upper_bound";
    let (e2, s) = (stats.e2, stats.s);
    if !(e2 > 0.0 && s > 0.0) {
        return BoundCheckReport {
            check: Check::skip(name, "degenerate radial moments"),
            rows: Vec::new(),
            empirical_c_u: None,
        };
    }
    let rel = 4.0 * (stats.se_e2 / e2 + stats.se_s / s);
    let w_min = cap_u / (e2 * s) * (1.0 + rel);
    let rhs = 0.5 * e2 * e2 - c_u * e2 * s;
    let rhs_uncertainty = e2 * stats.se_e2 + c_u * (s * stats.se_e2 + e2 * stats.se_s);
    let mut rows = Vec::new();
    let mut violations = 0usize;
    let mut empirical = f64::INFINITY;
    for p in curve.points.iter().filter(|p| p.w >= w_min) {
        let lhs = p.z / p.w;
        empirical = empirical.min((0.5 * e2 * e2 - lhs) / (e2 * s));
        if lhs > rhs + 4.0 * (p.se / p.w + rhs_uncertainty) {
            violations += 1;
        }
        rows.push((p.w, lhs, rhs));
    }
    let (check, empirical_c_u) = if rows.is_empty() {
        (Check::skip(name, "no grid points above the threshold"), None)
    } else {
        (
            Check::verdict(
                name,
                violations == 0,
                format!("{violations} points violate the bound"),
            )
            .with("w_min", w_min)
            .with("rhs", rhs)
            .with("empirical_c_u", empirical)
            .with("points", rows.len() as f64),
            Some(empirical),
        )
    };
    BoundCheckReport {
        check,
        rows,
        empirical_c_u,
    }
}

/// Discrete shape checks along the grid: Z nondecreasing, Z concave,
/// Z/w nonincreasing (2·SE slack each), and the slope at the origin,
/// Z(w₁)/w₁ = ½E₂² within max(4·SE, 1%).
pub fn check_curve_shape(curve: &FreeEnergyCurve, stats: &RadialStats) -> Vec<Check> {
    let pts = &curve.points;
    let mut out = Vec::with_capacity(4);

    let mut nondecr_bad = 0;
    for w in pts.windows(2) {
        if w[1].z < w[0].z - 2.0 * w[0].se.hypot(w[1].se) {
            nondecr_bad += 1;
        }
    }
    out.push(
        Check::verdict(
            "z_nondecreasing",
            nondecr_bad == 0,
            format!("{nondecr_bad} adjacent pairs decrease"),
        )
        .with("pairs", pts.len().saturating_sub(1) as f64),
    );

    let mut ratio_bad = 0;
    let positive: Vec<&FreeEnergyPoint> = pts.iter().filter(|p| p.w > 0.0).collect();
    for w in positive.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slack = 2.0 * (a.se / a.w).hypot(b.se / b.w);
        if b.z / b.w > a.z / a.w + slack {
            ratio_bad += 1;
        }
    }
    out.push(
        Check::verdict(
            "z_over_w_nonincreasing",
            ratio_bad == 0,
            format!("{ratio_bad} adjacent pairs increase"),
        )
        .with("pairs", positive.len().saturating_sub(1) as f64),
    );

    let mut concave_bad = 0;
    for w in pts.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let d1 = b.w - a.w;
        let d2 = c.w - b.w;
        let second = (c.z - b.z) / d2 - (b.z - a.z) / d1;
        let se = ((c.se / d2).powi(2)
            + (b.se * (1.0 / d1 + 1.0 / d2)).powi(2)
            + (a.se / d1).powi(2))
        .sqrt();
        if second > 2.0 * se + 1e-9 {
            concave_bad += 1;
        }
    }
    out.push(
        Check::verdict(
            "z_concave",
            concave_bad == 0,
            format!("{concave_bad} triples violate concavity"),
        )
        .with("triples", pts.len().saturating_sub(2) as f64),
    );

    if let Some(first) = positive.first() {
        let slope = first.z / first.w;
        let target = 0.5 * stats.e2 * stats.e2;
        let tol = (4.0 * (first.se / first.w).hypot(stats.e2 * stats.se_e2)).max(0.01 * target);
        out.push(
            Check::verdict(
                "slope_at_origin",
                (slope - target).abs() <= tol,
                format!("Z(w₁)/w₁ = {slope} vs ½E₂² = {target}"),
            )
            .with("slope", slope)
            .with("half_e2_sq", target)
            .with_tolerance(tol),
        );
    }
    out
}

/// Pairwise agreement of the MC, thermodynamic and oracle estimates at 4
/// combined SEs. Thermo/oracle pairs compare on the whole grid; pairs
/// involving MC only where its effective sample size clears the guard —
/// beyond it the reweighting estimate is degenerate and its SE meaningless.
pub fn check_cross_estimators(bundle: &CurveBundle) -> Check {
    let mut worst: f64 = 0.0;
    let mut bad = 0usize;
    let mut compared = 0usize;
    let mut compare = |a: &FreeEnergyPoint, b: &FreeEnergyPoint| {
        if a.w == 0.0 {
            return;
        }
        compared += 1;
        let tol = 4.0 * a.se.hypot(b.se).max(1e-12);
        let gap = (a.z - b.z).abs();
        worst = worst.max(gap / tol);
        if gap > tol {
            bad += 1;
        }
    };
    let mc_valid = |p: &FreeEnergyPoint| !p.low_ess();
    for (a, b) in bundle.mc.iter().zip(&bundle.thermo) {
        if mc_valid(a) {
            compare(a, b);
        }
    }
    if let Some(oracle) = &bundle.oracle {
        for (a, o) in bundle.mc.iter().zip(oracle) {
            if mc_valid(a) {
                compare(a, o);
            }
        }
        for (t, o) in bundle.thermo.iter().zip(oracle) {
            compare(t, o);
        }
    }
    Check::verdict(
        "cross_estimator_agreement",
        bad == 0,
        format!("{bad} of {compared} comparisons disagree at 4σ"),
    )
    .with("comparisons", compared as f64)
    .with("worst_gap_over_tol", worst)
}

/// Empirical lower-bound frontier: for each threshold factor c, the
/// smallest gap constant C(c) consistent with the measured curve,
/// C(c) = max over grid w ≤ c/(E₂S) of (½E₂² - Z(w)/w)/(E₂S).
/// Whether such a C(c) exists for every c is open; the frontier is
/// reported, never asserted.
pub fn lower_bound_frontier(
    curve: &FreeEnergyCurve,
    stats: &RadialStats,
    c_grid: &[f64],
) -> Vec<(f64, f64)> {
    let scale = stats.e2 * stats.s;
    if !(scale > 0.0) {
        return Vec::new();
    }
    let half_e2_sq = 0.5 * stats.e2 * stats.e2;
    c_grid
        .iter()
        .map(|&c| {
            let w_max = c / scale;
            let gap = curve
                .points
                .iter()
                .filter(|p| p.w > 0.0 && p.w <= w_max)
                .map(|p| (half_e2_sq - p.z / p.w) / scale)
                .fold(f64::NEG_INFINITY, f64::max);
            (c, gap)
        })
        .filter(|(_, gap)| gap.is_finite())
        .collect()
}

/// CSV export: w, Z, se, method, Z/w, and the two bound right-hand sides.
pub fn curve_to_csv(bundle: &CurveBundle, constants: &Constants) -> String {
    let stats = &bundle.curve.stats;
    let lower_rhs = 0.5 * stats.e2 * stats.e2 - FREE_ENERGY_GAP * stats.e2 * stats.s;
    let upper_rhs = 0.5 * stats.e2 * stats.e2 - constants.c_u * stats.e2 * stats.s;
    let mut out = String::from("w,Z,se,method,Z_over_w,lower_bound_rhs,upper_bound_rhs\n");
    for p in &bundle.curve.points {
        let method = match p.method {
            Method::Mc => "mc",
            Method::Thermo => "thermo",
            Method::BoxQuadrature => "box-quadrature",
            Method::BallQuadrature => "ball-quadrature",
        };
        let zw = if p.w > 0.0 { p.z / p.w } else { f64::NAN };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.w, p.z, p.se, method, zw, lower_rhs, upper_rhs
        ));
    }
    out
}
