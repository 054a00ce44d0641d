//! Overlap between the uniform measure and the conditioned Gaussian:
//! relative entropy H(μ_K | γ_K^w) = ½E₂²w - Z(w), its Pinsker consequence
//! d_TV ≤ √(H/2), a direct plug-in TV estimator, and the choice of w₀.

use serde::Serialize;
use thiserror::Error;

use crate::free_energy::{FreeEnergyCurve, FreeEnergyPoint};
use crate::geometry;
use crate::mcse;
use crate::radial::RadialStats;
use crate::report::Check;
use crate::sampler::SampleBatch;

#[derive(Debug, Error)]
pub enum OverlapError {
    #[error("degenerate body: S = 0, no overlap scale")]
    DegenerateBody,
    #[error("curve does not cover w = {0}")]
    OutOfRange(f64),
}

pub type Result<T> = std::result::Result<T, OverlapError>;

/// Relative entropy H = ½E₂²w - Z with its combined standard error.
/// Clipped at 0 when within noise of 0 (the plug-in formula can dip
/// slightly negative at tiny w).
pub fn relative_entropy(stats: &RadialStats, z: &FreeEnergyPoint) -> (f64, f64) {
    let h = 0.5 * stats.e2 * stats.e2 * z.w - z.z;
    // se of ½E₂²w is w·E₂·se_E2 (delta method on E₂²).
    let se = (z.w * stats.e2 * stats.se_e2).hypot(z.se);
    if h < 0.0 && h >= -4.0 * se {
        (0.0, se)
    } else {
        (h, se)
    }
}

/// Pinsker bound on total variation: √(H/2).
pub fn tv_pinsker(h: f64) -> f64 {
    (h.max(0.0) / 2.0).sqrt()
}

/// Direct total-variation estimate and its uncertainties.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TvEstimate {
    pub value: f64,
    pub se: f64,
    /// Systematic bound from the error of Ẑ: |∂d_TV/∂Z| ≤ ½, so ½·se_Z.
    pub bias_bound: f64,
}

/// Plug-in d_TV(μ_K, γ_K^w) = ½·E_{μ_K} |1 - exp(Z - w|x|²/2)| over a
/// uniform batch in the x₀-centered frame.
pub fn tv_direct(w: f64, z: &FreeEnergyPoint, batch: &SampleBatch) -> TvEstimate {
    if w == 0.0 {
        return TvEstimate {
            value: 0.0,
            se: 0.0,
            bias_bound: 0.0,
        };
    }
    let integrand =
        batch.map_per_sample(|p| 0.5 * (1.0 - (z.z - 0.5 * w * geometry::norm_sq(p)).exp()).abs());
    let ms = mcse::mean_se(&integrand, batch.chains());
    // Total variation lives in [0,1]; projecting the plug-in value onto the
    // range can only reduce its error.
    TvEstimate {
        value: ms.mean.min(1.0),
        se: ms.se,
        bias_bound: 0.5 * z.se,
    }
}

/// The overlap inverse-temperature w₀ = c'/(E₂S).
pub fn choose_w0(stats: &RadialStats, c_prime: f64) -> Result<f64> {
    if !(stats.s > 0.0 && stats.e2 > 0.0) {
        return Err(OverlapError::DegenerateBody);
    }
    Ok(c_prime / (stats.e2 * stats.s))
}

/// Everything measured at w₀, with the pass/fail flags of the ≤ 1/2 claims.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapReport {
    pub w0: f64,
    pub h: f64,
    pub se_h: f64,
    pub dtv_pinsker: f64,
    pub dtv_direct: TvEstimate,
    /// Z at w₀ came from linear interpolation between grid points.
    pub interpolated: bool,
    pub h_le_half: bool,
    pub dtv_le_half: bool,
    pub checks: Vec<Check>,
}

/// Evaluates H(μ_K|γ_K^{w₀}) and both TV figures at w₀ = c'/(E₂S) and
/// asserts H ≤ 1/2 and d_TV ≤ 1/2 at 4σ. Linear-in-w interpolation of Z is
/// conservative for H (Z is concave) and is flagged in the report.
pub fn corollary_check(
    stats: &RadialStats,
    curve: &FreeEnergyCurve,
    batch: &SampleBatch,
    c_prime: f64,
) -> Result<OverlapReport> {
    let w0 = choose_w0(stats, c_prime)?;
    let (z0, interpolated) = curve
        .interpolate_z(w0)
        .ok_or(OverlapError::OutOfRange(w0))?;
    let (h, se_h) = relative_entropy(stats, &z0);
    let pinsker = tv_pinsker(h);
    let direct = tv_direct(w0, &z0, batch);
    let h_le_half = h <= 0.5 + 4.0 * se_h;
    let direct_slack = 4.0 * (direct.se + direct.bias_bound);
    let dtv_le_half = pinsker <= 0.5 + 1e-12 && direct.value <= 0.5 + direct_slack;
    let checks = vec![
        Check::verdict(
            "overlap_entropy_le_half",
            h_le_half,
            format!("H(w0) = {h} exceeds 1/2"),
        )
        .with("w0", w0)
        .with("H", h)
        .with_tolerance(0.5 + 4.0 * se_h),
        Check::verdict(
            "overlap_tv_le_half",
            dtv_le_half,
            format!("d_TV at w0: pinsker {pinsker}, direct {}", direct.value),
        )
        .with("pinsker", pinsker)
        .with("direct", direct.value)
        .with_tolerance(0.5),
        Check::verdict(
            "pinsker_domination",
            direct.value <= pinsker + direct_slack,
            format!(
                "direct TV {} exceeds Pinsker bound {pinsker} beyond noise",
                direct.value
            ),
        )
        .with("direct", direct.value)
        .with("pinsker", pinsker)
        .with_tolerance(direct_slack),
    ];
    Ok(OverlapReport {
        w0,
        h,
        se_h,
        dtv_pinsker: pinsker,
        dtv_direct: direct,
        interpolated,
        h_le_half,
        dtv_le_half,
        checks,
    })
}

/// Discrete convexity and monotonicity of w ↦ H(w) along the curve at 2·SE
/// slack. The ½E₂²w term is linear in w, so its (shared) uncertainty drops
/// out of second differences; first differences keep it.
pub fn check_h_shape(curve: &FreeEnergyCurve, stats: &RadialStats) -> Vec<Check> {
    let h: Vec<(f64, f64, f64)> = curve
        .points
        .iter()
        .map(|p| {
            let (h, _) = relative_entropy(stats, p);
            (p.w, h, p.se)
        })
        .collect();
    let mut nondecr_bad = 0;
    for w in h.windows(2) {
        let (w0, h0, s0) = w[0];
        let (w1, h1, s1) = w[1];
        let slack = 2.0 * ((w1 - w0) * stats.e2 * stats.se_e2).hypot(s0.hypot(s1));
        if h1 < h0 - slack {
            nondecr_bad += 1;
        }
    }
    let mut convex_bad = 0;
    for w in h.windows(3) {
        let (w0, h0, s0) = w[0];
        let (w1, h1, s1) = w[1];
        let (w2, h2, s2) = w[2];
        let d1 = w1 - w0;
        let d2 = w2 - w1;
        let second = (h2 - h1) / d2 - (h1 - h0) / d1;
        let se =
            ((s2 / d2).powi(2) + (s1 * (1.0 / d1 + 1.0 / d2)).powi(2) + (s0 / d1).powi(2)).sqrt();
        if second < -2.0 * se - 1e-9 {
            convex_bad += 1;
        }
    }
    vec![
        Check::verdict(
            "entropy_nondecreasing",
            nondecr_bad == 0,
            format!("{nondecr_bad} adjacent pairs decrease"),
        ),
        Check::verdict(
            "entropy_convex",
            convex_bad == 0,
            format!("{convex_bad} triples violate convexity"),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Constants;
    use crate::free_energy::{default_w_grid, free_energy_oracle_box, Method};
    use crate::geometry::ConvexBody;
    use crate::sampler::{sample_uniform, SamplerConfig};

    const H_BOX1_W1: f64 = 0.010742873009268027;
    const TV_BOX1_W1: f64 = 0.06183618681899565;

    fn box1_stats() -> RadialStats {
        RadialStats::exact(vec![0.0], 0.5, 1.0 / 3.0f64.sqrt())
    }

    fn box1_oracle_curve(constants: &Constants) -> FreeEnergyCurve {
        let stats = box1_stats();
        let grid = default_w_grid(&stats, constants, 24);
        let points = grid
            .iter()
            .map(|&w| free_energy_oracle_box(&[0.0], &[1.0], &[0.0], w))
            .collect();
        FreeEnergyCurve {
            body_name: "box1".into(),
            x0: vec![0.0],
            points,
            stats,
        }
    }

    #[test]
    fn entropy_at_zero_weight_is_zero() {
        let stats = box1_stats();
        let z = FreeEnergyPoint {
            w: 0.0,
            z: 0.0,
            se: 0.0,
            method: Method::Mc,
            ess: None,
        };
        let (h, _) = relative_entropy(&stats, &z);
        assert_eq!(h, 0.0);
    }

    #[test]
    fn entropy_interval_matches_frozen_value() {
        let stats = box1_stats();
        let z = free_energy_oracle_box(&[0.0], &[1.0], &[0.0], 1.0);
        let (h, se) = relative_entropy(&stats, &z);
        assert!(se < 1e-12);
        assert!((h - H_BOX1_W1).abs() < 1e-12, "H = {h}");
    }

    #[test]
    fn entropy_clips_small_negative_noise() {
        let stats = RadialStats {
            se_e2: 1e-3,
            ..box1_stats()
        };
        // Z slightly above ½E₂²w so the raw H is a hair negative.
        let z = FreeEnergyPoint {
            w: 1e-4,
            z: 0.5 * stats.e2 * stats.e2 * 1e-4 + 1e-9,
            se: 1e-6,
            method: Method::Mc,
            ess: None,
        };
        let (h, _) = relative_entropy(&stats, &z);
        assert_eq!(h, 0.0);
    }

    #[test]
    fn pinsker_values() {
        assert_eq!(tv_pinsker(0.0), 0.0);
        assert!((tv_pinsker(0.5) - 0.5).abs() < 1e-15);
        assert!((tv_pinsker(H_BOX1_W1) - 0.07329008462700813).abs() < 1e-12);
    }

    #[test]
    fn tv_direct_zero_at_w0() {
        let body = ConvexBody::cuboid(vec![0.0], vec![1.0]).unwrap();
        let config = SamplerConfig::for_body(&body, 1).with_chains(8);
        let batch = sample_uniform(&body, &config, 1000).unwrap();
        let z = FreeEnergyPoint {
            w: 0.0,
            z: 0.0,
            se: 0.0,
            method: Method::Mc,
            ess: None,
        };
        let tv = tv_direct(0.0, &z, &batch);
        assert_eq!(tv.value, 0.0);
    }

    #[test]
    fn tv_direct_interval_matches_quadrature() {
        let body = ConvexBody::cuboid(vec![0.0], vec![1.0]).unwrap();
        let config = SamplerConfig::for_body(&body, 2).with_chains(8);
        let batch = sample_uniform(&body, &config, 100_000).unwrap();
        let z = free_energy_oracle_box(&[0.0], &[1.0], &[0.0], 1.0);
        let tv = tv_direct(1.0, &z, &batch);
        assert!(
            (tv.value - TV_BOX1_W1).abs() < 4.0 * (tv.se + tv.bias_bound),
            "tv = {} se = {}",
            tv.value,
            tv.se
        );
        // Pinsker domination on this point.
        assert!(tv.value <= tv_pinsker(H_BOX1_W1) + 4.0 * tv.se);
    }

    #[test]
    fn w0_values() {
        let generic = RadialStats::exact(vec![0.0], (1.0f64 - 0.01).sqrt(), 1.0);
        // E2 = 1, S = 0.1: w0 ≈ 0.6213.
        let stats = RadialStats::exact(vec![0.0], (1.0f64 - 0.01).sqrt(), 1.0);
        let w0 = choose_w0(&stats, crate::constants::W0_FACTOR_DEFAULT).unwrap();
        assert!((stats.s - 0.1).abs() < 1e-12);
        assert!((w0 - 0.6213157507082351).abs() < 1e-10, "w0 = {w0}");
        let _ = generic;

        let w0_box = choose_w0(&box1_stats(), crate::constants::W0_FACTOR_DEFAULT).unwrap();
        assert!((w0_box - 0.3727894504249410).abs() < 1e-10, "w0 = {w0_box}");

        // Linearity in c'.
        let doubled = choose_w0(&box1_stats(), 2.0 * crate::constants::W0_FACTOR_DEFAULT).unwrap();
        assert!((doubled - 2.0 * w0_box).abs() < 1e-12);

        // Degenerate body.
        let degenerate = RadialStats::exact(vec![0.0], 1.0, 1.0);
        assert!(matches!(
            choose_w0(&degenerate, 0.1),
            Err(OverlapError::DegenerateBody)
        ));
    }

    #[test]
    fn corollary_holds_for_interval() {
        let constants = Constants::default();
        let body = ConvexBody::cuboid(vec![0.0], vec![1.0]).unwrap();
        let config = SamplerConfig::for_body(&body, 3).with_chains(8);
        let batch = sample_uniform(&body, &config, 60_000).unwrap();
        let curve = box1_oracle_curve(&constants);
        let stats = box1_stats();
        let rep = corollary_check(&stats, &curve, &batch, constants.c_prime).unwrap();
        assert!(rep.h_le_half && rep.dtv_le_half);
        assert!(rep.checks.iter().all(|c| c.passed()), "{:?}", rep.checks);
        // Oracle H at w0 for comparison.
        let z0 = free_energy_oracle_box(&[0.0], &[1.0], &[0.0], rep.w0);
        let h_exact = 0.5 * (1.0 / 3.0) * rep.w0 - z0.z;
        // Interpolation makes the reported H an upper bound, still tiny.
        assert!(rep.h >= h_exact - 1e-12 && rep.h < 0.05, "H = {} vs {h_exact}", rep.h);
        assert!((rep.dtv_pinsker - tv_pinsker(rep.h)).abs() < 1e-15);
    }

    #[test]
    fn corollary_fail_path_at_huge_w() {
        // Forcing w to ~10³·w₀ pushes H far above 1/2.
        let constants = Constants::default();
        let body = ConvexBody::cuboid(vec![0.0], vec![1.0]).unwrap();
        let config = SamplerConfig::for_body(&body, 4).with_chains(8);
        let batch = sample_uniform(&body, &config, 20_000).unwrap();
        let curve = box1_oracle_curve(&constants);
        let stats = box1_stats();
        let rep = corollary_check(&stats, &curve, &batch, 1000.0 * constants.c_prime).unwrap();
        assert!(!rep.h_le_half);
        assert!(rep.h > 0.5);
        assert!(rep.checks.iter().any(|c| c.failed()));
    }

    #[test]
    fn h_shape_along_oracle_curve() {
        let constants = Constants::default();
        let curve = box1_oracle_curve(&constants);
        let stats = box1_stats();
        let checks = check_h_shape(&curve, &stats);
        assert_eq!(checks.len(), 2);
        for c in &checks {
            assert!(c.passed(), "{c:?}");
        }
        // Monotonicity probe H(2w) ≥ H(w) on oracle values.
        let z1 = free_energy_oracle_box(&[0.0], &[1.0], &[0.0], 1.0);
        let z2 = free_energy_oracle_box(&[0.0], &[1.0], &[0.0], 2.0);
        let (h1, _) = relative_entropy(&stats, &z1);
        let (h2, _) = relative_entropy(&stats, &z2);
        assert!(h2 >= h1);
    }
}
