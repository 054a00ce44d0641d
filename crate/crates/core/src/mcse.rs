//! Monte Carlo standard errors via batch means.
//!
//! All downstream uncertainty in this crate comes from these estimators.
//! Samples arrive grouped by chain (equal counts per chain, chain-major
//! order); batches never straddle a chain boundary, so residual within-chain
//! autocorrelation inflates the batch variance and keeps the SEs honest.

use std::ops::Range;

/// Minimum number of batches we aim for; fewer makes the SE itself too noisy.
const TARGET_BATCHES: usize = 32;

/// A mean with its batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Splits `n` chain-major samples from `chains` equal chains into batches.
///
/// Each chain is subdivided so the total batch count reaches
/// `TARGET_BATCHES` when the data allows it.
pub fn batch_ranges(n: usize, chains: usize) -> Vec<Range<usize>> {
    assert!(chains >= 1 && n >= chains && n % chains == 0);
    let per_chain = n / chains;
    let mut per_chain_batches = TARGET_BATCHES.div_ceil(chains);
    while per_chain_batches > 1 && per_chain / per_chain_batches < 4 {
        per_chain_batches -= 1;
    }
    let mut out = Vec::with_capacity(chains * per_chain_batches);
    for c in 0..chains {
        let base = c * per_chain;
        for b in 0..per_chain_batches {
            let lo = base + b * per_chain / per_chain_batches;
            let hi = base + (b + 1) * per_chain / per_chain_batches;
            if hi > lo {
                out.push(lo..hi);
            }
        }
    }
    out
}

/// Mean and SE of `values` (chain-major, equal chains).
///
/// The SE is the batch-means estimate floored by the iid delta-method SE
/// from all samples: batch means capture autocorrelation but their own
/// noise can fluctuate low; the iid figure is a stable lower bound on the
/// true Monte Carlo error.
pub fn mean_se(values: &[f64], chains: usize) -> MeanSe {
    let means = batch_statistic(values, chains, |s| {
        s.iter().sum::<f64>() / s.len() as f64
    });
    let mut ms = from_batch_means(&means);
    let n = values.len();
    if n >= 2 {
        let var =
            values.iter().map(|v| (v - ms.mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let iid_se = (var / n as f64).sqrt();
        if ms.se.is_nan() || ms.se < iid_se {
            ms.se = iid_se;
        }
    }
    ms
}

/// Mean/SE pair from per-batch means.
pub fn from_batch_means(batch_means: &[f64]) -> MeanSe {
    let b = batch_means.len();
    let mean = batch_means.iter().sum::<f64>() / b as f64;
    if b < 2 {
        return MeanSe { mean, se: f64::NAN };
    }
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    MeanSe {
        mean,
        se: (var / b as f64).sqrt(),
    }
}

/// Applies `stat` to every batch of `values` and returns the batch values.
pub fn batch_statistic<F: Fn(&[f64]) -> f64>(values: &[f64], chains: usize, stat: F) -> Vec<f64> {
    batch_ranges(values.len(), chains)
        .into_iter()
        .map(|r| stat(&values[r]))
        .collect()
}

/// Joint batch means of two per-sample quantities plus the covariance matrix
/// of the overall means: returns (mean a, mean b, cov 2x2 as [[aa,ab],[ab,bb]]).
///
/// Used for delta-method errors of functions of several moments.
pub fn mean_cov2(a: &[f64], b: &[f64], chains: usize) -> (f64, f64, [[f64; 2]; 2]) {
    assert_eq!(a.len(), b.len());
    let ranges = batch_ranges(a.len(), chains);
    let nb = ranges.len();
    let mut ma = Vec::with_capacity(nb);
    let mut mb = Vec::with_capacity(nb);
    for r in &ranges {
        let len = r.len() as f64;
        ma.push(a[r.clone()].iter().sum::<f64>() / len);
        mb.push(b[r.clone()].iter().sum::<f64>() / len);
    }
    let mean_a = ma.iter().sum::<f64>() / nb as f64;
    let mean_b = mb.iter().sum::<f64>() / nb as f64;
    let mut cov = [[0.0; 2]; 2];
    if nb >= 2 {
        for i in 0..nb {
            let da = ma[i] - mean_a;
            let db = mb[i] - mean_b;
            cov[0][0] += da * da;
            cov[0][1] += da * db;
            cov[1][1] += db * db;
        }
        let denom = ((nb - 1) * nb) as f64;
        cov[0][0] /= denom;
        cov[0][1] /= denom;
        cov[1][1] /= denom;
        cov[1][0] = cov[0][1];
    } else {
        cov = [[f64::NAN; 2]; 2];
    }
    (mean_a, mean_b, cov)
}

/// Binomial standard error of a proportion `p` over `n` trials.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / n as f64).sqrt()
}
