//! Hit-and-run sampling of the uniform measure and of the origin-centered
//! Gaussian conditioned on a convex body.
//!
//! Each step draws a uniform random direction, intersects the line with the
//! body, and samples the exact one-dimensional conditional on the chord:
//! uniform for the flat target, a truncated Gaussian for inverse-temperature
//! w > 0. Exact conditionals remove step-size tuning and acceptance bias
//! from every downstream estimate. Chains run in parallel on provably
//! disjoint RNG streams and merge deterministically by chain index.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use thiserror::Error;

use crate::geometry::{self, ConvexBody};
use crate::rng::{stream_rng, StreamDomain};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("start point is not interior to the body")]
    NotInterior,
    #[error("inverse-temperature must be nonnegative, got {0}")]
    NegativeWeight(f64),
    #[error("truncation interval [{0}, {1}] is empty")]
    EmptyInterval(f64, f64),
    #[error("sample count must be at least 1")]
    EmptyRequest,
    #[error("geometry error: {0}")]
    Geometry(#[from] geometry::GeometryError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SamplerError>;

/// Where a chain starts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Start {
    /// The body's stored interior point.
    InteriorPoint,
    /// A caller-supplied interior point.
    Point(Vec<f64>),
}

/// Chain layout and determinism knobs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub chains: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub start: Start,
}

impl SamplerConfig {
    /// Mixing defaults for a body of dimension n: burn-in 100·n steps,
    /// thinning max(1, n/2), one chain per available worker.
    pub fn for_body(body: &ConvexBody, seed: u64) -> Self {
        let n = body.dimension();
        SamplerConfig {
            seed,
            chains: rayon::current_num_threads().max(1),
            burn_in: 100 * n,
            thinning: (n / 2).max(1),
            start: Start::InteriorPoint,
        }
    }

    pub fn with_chains(mut self, chains: usize) -> Self {
        self.chains = chains.max(1);
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_thinning(mut self, thinning: usize) -> Self {
        self.thinning = thinning.max(1);
        self
    }

    pub fn with_start(mut self, start: Start) -> Self {
        self.start = start;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.thinning == 0 {
            return Err(SamplerError::EmptyRequest);
        }
        Ok(())
    }
}

/// Which measure a batch targets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TargetTag {
    Uniform,
    Gibbs { w: f64 },
}

/// An immutable batch of points in chain-major order.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    dimension: usize,
    chains: usize,
    kept_per_chain: usize,
    points: Vec<f64>,
    pub config: SamplerConfig,
    pub target: TargetTag,
}

impl SampleBatch {
    /// Assembles a batch from externally produced points (chain-major flat
    /// layout, equal points per chain).
    pub fn from_points(
        dimension: usize,
        chains: usize,
        points: Vec<f64>,
        config: SamplerConfig,
        target: TargetTag,
    ) -> Result<SampleBatch> {
        if dimension == 0 || chains == 0 || points.is_empty() {
            return Err(SamplerError::EmptyRequest);
        }
        if points.len() % (dimension * chains) != 0 {
            return Err(SamplerError::EmptyRequest);
        }
        let kept_per_chain = points.len() / dimension / chains;
        Ok(SampleBatch {
            dimension,
            chains,
            kept_per_chain,
            points,
            config,
            target,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Total number of points: chains × kept-per-chain.
    pub fn count(&self) -> usize {
        self.chains * self.kept_per_chain
    }

    pub fn chains(&self) -> usize {
        self.chains
    }

    pub fn kept_per_chain(&self) -> usize {
        self.kept_per_chain
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dimension)
    }

    pub fn raw(&self) -> &[f64] {
        &self.points
    }

    /// Per-sample scalar in chain-major order, ready for batch-means SEs.
    pub fn map_per_sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        self.iter_points().map(f).collect()
    }

    /// The same batch with every point shifted by `-x0` (exact).
    pub fn translated(&self, x0: &[f64]) -> SampleBatch {
        assert_eq!(x0.len(), self.dimension);
        let mut points = self.points.clone();
        for p in points.chunks_exact_mut(self.dimension) {
            for (v, s) in p.iter_mut().zip(x0) {
                *v -= s;
            }
        }
        SampleBatch {
            dimension: self.dimension,
            chains: self.chains,
            kept_per_chain: self.kept_per_chain,
            points,
            config: self.config.clone(),
            target: self.target,
        }
    }

    /// Binary dump: little-endian f64 rows plus a text sidecar header
    /// (`<path>.header`) recording dimension, count, seed and target tag.
    pub fn dump(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in &self.points {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
        let header = format!(
            "dimension: {}\ncount: {}\nseed: {}\ntarget: {}\n",
            self.dimension,
            self.count(),
            self.config.seed,
            match self.target {
                TargetTag::Uniform => "uniform".to_string(),
                TargetTag::Gibbs { w } => format!("gibbs({w})"),
            }
        );
        std::fs::write(path.with_extension("header"), header)?;
        Ok(())
    }
}

/// Draws `m` (rounded up to a multiple of `chains`) points from the uniform
/// measure on the body. Deterministic given (body, config, m).
pub fn sample_uniform(body: &ConvexBody, config: &SamplerConfig, m: usize) -> Result<SampleBatch> {
    run_hit_and_run(body, 0.0, config, m, StreamDomain::Uniform, 0)
}

/// Draws from the Gaussian of inverse-temperature `w`, centered at the
/// origin, conditioned on the body. `w = 0` reduces exactly to
/// `sample_uniform` (same stream, same code path, identical points).
pub fn sample_gibbs(
    body: &ConvexBody,
    w: f64,
    config: &SamplerConfig,
    m: usize,
) -> Result<SampleBatch> {
    if !(w >= 0.0) {
        return Err(SamplerError::NegativeWeight(w));
    }
    run_hit_and_run(body, w, config, m, StreamDomain::Uniform, 0)
}

/// Gibbs draw on a caller-chosen stream, for pipeline stages that need many
/// independent batches (thermodynamic nodes, grid points).
pub fn sample_gibbs_stream(
    body: &ConvexBody,
    w: f64,
    config: &SamplerConfig,
    m: usize,
    domain: StreamDomain,
    unit: u32,
) -> Result<SampleBatch> {
    if !(w >= 0.0) {
        return Err(SamplerError::NegativeWeight(w));
    }
    run_hit_and_run(body, w, config, m, domain, unit)
}

fn run_hit_and_run(
    body: &ConvexBody,
    w: f64,
    config: &SamplerConfig,
    m: usize,
    domain: StreamDomain,
    unit: u32,
) -> Result<SampleBatch> {
    config.validate()?;
    if m == 0 {
        return Err(SamplerError::EmptyRequest);
    }
    let start = match &config.start {
        Start::InteriorPoint => body.interior_point().to_vec(),
        Start::Point(p) => p.clone(),
    };
    if !body.membership(&start) {
        return Err(SamplerError::NotInterior);
    }
    let n = body.dimension();
    let kept_per_chain = m.div_ceil(config.chains);
    let chain_outputs: Vec<Result<Vec<f64>>> = (0..config.chains)
        .into_par_iter()
        .map(|chain| {
            let mut rng = stream_rng(config.seed, domain, unit, chain as u32);
            let mut p = start.clone();
            let mut out = Vec::with_capacity(kept_per_chain * n);
            let mut u = vec![0.0; n];
            for _ in 0..config.burn_in {
                step(body, w, &mut p, &mut u, &mut rng)?;
            }
            for _ in 0..kept_per_chain {
                for _ in 0..config.thinning {
                    step(body, w, &mut p, &mut u, &mut rng)?;
                }
                out.extend_from_slice(&p);
            }
            Ok(out)
        })
        .collect();
    let mut points = Vec::with_capacity(config.chains * kept_per_chain * n);
    for c in chain_outputs {
        points.extend(c?);
    }
    Ok(SampleBatch {
        dimension: n,
        chains: config.chains,
        kept_per_chain,
        points,
        config: config.clone(),
        target: if w == 0.0 {
            TargetTag::Uniform
        } else {
            TargetTag::Gibbs { w }
        },
    })
}

#[inline]
fn step(
    body: &ConvexBody,
    w: f64,
    p: &mut [f64],
    u: &mut [f64],
    rng: &mut impl Rng,
) -> Result<()> {
    random_unit_direction(u, rng);
    let (lo, hi) = body.chord_interval(p, u)?;
    let t = if w == 0.0 {
        rng.gen_range(lo..hi)
    } else {
        // exp(-w/2 |p+tu|²) ∝ exp(-w/2 (t + ⟨p,u⟩)²): Gaussian in t with
        // mode at -⟨p,u⟩ and stddev 1/√w, truncated to the chord.
        let mean = -geometry::dot(p, u);
        sample_truncated_gaussian_1d(lo, hi, mean, 1.0 / w.sqrt(), rng)?
    };
    for (pi, ui) in p.iter_mut().zip(u.iter()) {
        *pi += t * ui;
    }
    Ok(())
}

fn random_unit_direction(u: &mut [f64], rng: &mut impl Rng) {
    loop {
        let mut norm_sq = 0.0;
        for v in u.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *v = g;
            norm_sq += g * g;
        }
        if norm_sq > 1e-24 {
            let inv = norm_sq.sqrt().recip();
            u.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

/// Exact draw from N(mean, stddev²) conditioned to [lo, hi].
///
/// Rejection sampling with a branch per regime (normal, uniform with the
/// in-interval density maximum as envelope, or a truncated-exponential
/// proposal deep in a tail). No CDF differencing anywhere, so the draw stays
/// exact when the interval lies many standard deviations out.
pub fn sample_truncated_gaussian_1d(
    lo: f64,
    hi: f64,
    mean: f64,
    stddev: f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    if !(lo < hi) {
        return Err(SamplerError::EmptyInterval(lo, hi));
    }
    assert!(stddev > 0.0, "stddev must be positive");
    let a = (lo - mean) / stddev;
    let b = (hi - mean) / stddev;
    let z = standard_truncated(a, b, rng);
    // Clamp: the affine map back can land an ulp outside.
    Ok((mean + stddev * z).clamp(lo, hi))
}

fn standard_truncated(a: f64, b: f64, rng: &mut impl Rng) -> f64 {
    if b < 0.0 {
        return -standard_truncated(-b, -a, rng);
    }
    if a <= 0.0 {
        if b - a < 2.0 {
            // Narrow interval containing the mode: uniform proposal,
            // envelope is the peak density 1.
            loop {
                let z = rng.gen_range(a..b);
                if rng.gen::<f64>() <= (-0.5 * z * z).exp() {
                    return z;
                }
            }
        }
        // Wide interval: plain rejection from the normal.
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z >= a && z <= b {
                return z;
            }
        }
    }
    // Interval in the right tail (0 < a < b).
    if a < 0.5 {
        if b - a < 2.0 {
            // Uniform proposal with envelope at z = a.
            loop {
                let z = rng.gen_range(a..b);
                if rng.gen::<f64>() <= (0.5 * (a * a - z * z)).exp() {
                    return z;
                }
            }
        }
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z >= a && z <= b {
                return z;
            }
        }
    }
    // Deep tail: exponential proposal with rate a restricted to [a, b],
    // accepted with probability exp(-(z-a)²/2).
    let span_mass = 1.0 - (-a * (b - a)).exp();
    loop {
        let u: f64 = rng.gen();
        let z = a - (1.0 - u * span_mass).ln() / a;
        if rng.gen::<f64>() <= (-0.5 * (z - a) * (z - a)).exp() {
            return z.min(b);
        }
    }
}
