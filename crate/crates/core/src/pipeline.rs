//! The per-body verification pipeline: sample, pick a base point, translate
//! to the origin frame, then run every enabled check group and collect the
//! results into one report.

use serde::Serialize;
use thiserror::Error;

use crate::bounds::{self, BoundReport};
use crate::constants::Constants;
use crate::free_energy::{self, CurveBundle};
use crate::geometry::ConvexBody;
use crate::overlap::{self, OverlapReport};
use crate::radial::{self, CdfSource, RadialStats, ReverseChebyshevReport};
use crate::report::{all_ok, Check};
use crate::sampler::{sample_uniform, SamplerConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sampler: {0}")]
    Sampler(#[from] crate::sampler::SamplerError),
    #[error("radial: {0}")]
    Radial(#[from] crate::radial::RadialError),
    #[error("free energy: {0}")]
    FreeEnergy(#[from] crate::free_energy::FreeEnergyError),
    #[error("overlap: {0}")]
    Overlap(#[from] crate::overlap::OverlapError),
    #[error("bounds: {0}")]
    Bounds(#[from] crate::bounds::BoundsError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Which check groups to run.
#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct CheckSelection {
    pub radial: bool,
    pub free_energy: bool,
    pub overlap: bool,
    pub bounds: bool,
}

impl CheckSelection {
    pub fn all() -> Self {
        CheckSelection {
            radial: true,
            free_energy: true,
            overlap: true,
            bounds: true,
        }
    }

    pub fn none() -> Self {
        CheckSelection {
            radial: false,
            free_energy: false,
            overlap: false,
            bounds: false,
        }
    }

    pub fn parse(list: &str) -> std::result::Result<Self, String> {
        let mut sel = CheckSelection::none();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "radial" => sel.radial = true,
                "free-energy" | "free_energy" => sel.free_energy = true,
                "overlap" => sel.overlap = true,
                "bounds" => sel.bounds = true,
                "all" => sel = CheckSelection::all(),
                other => return Err(format!("unknown check group: {other}")),
            }
        }
        Ok(sel)
    }
}

/// Knobs of a pipeline run. Defaults match the shipped suite configuration;
/// chains are pinned (not derived from the machine) so runs reproduce
/// byte-for-byte across hosts.
#[derive(Clone, Debug, Serialize)]
pub struct RunOptions {
    pub seed: u64,
    pub samples: usize,
    pub chains: usize,
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
    pub w_points: usize,
    pub constants: Constants,
    pub checks: CheckSelection,
    pub base_point_evals: usize,
    /// Calibration floor for the reverse Chebyshev constant c₀.
    pub c0_floor: f64,
    /// Calibration floor for the feasible Bobkov constant (suite minimum).
    pub bobkov_floor: f64,
}

impl RunOptions {
    pub fn new(seed: u64) -> Self {
        RunOptions {
            seed,
            samples: 100_000,
            chains: 8,
            burn_in: None,
            thinning: None,
            w_points: 24,
            constants: Constants::default(),
            checks: CheckSelection::all(),
            base_point_evals: 100,
            c0_floor: 0.1,
            bobkov_floor: 0.1,
        }
    }

    pub fn sampler_config(&self, body: &ConvexBody) -> SamplerConfig {
        let mut config = SamplerConfig::for_body(body, self.seed).with_chains(self.chains);
        if let Some(b) = self.burn_in {
            config = config.with_burn_in(b);
        }
        // The binomial-SE checks (radial CDF vs oracle, tail bounds) assume
        // near-independent samples; floor the thinning so low-dimensional
        // chains decorrelate.
        let thinning = self
            .thinning
            .unwrap_or_else(|| (body.dimension() / 2).max(4));
        config.with_thinning(thinning)
    }
}

/// Everything measured and checked for one body.
#[derive(Clone, Debug, Serialize)]
pub struct BodyReport {
    pub name: String,
    pub dimension: usize,
    pub x0: Vec<f64>,
    pub stats: RadialStats,
    pub curve: Option<CurveBundle>,
    pub overlap: Option<OverlapReport>,
    pub bounds: Option<BoundReport>,
    pub reverse_chebyshev: Option<ReverseChebyshevReport>,
    /// Empirical sharpness constant at w = C_u/(E₂S), when measured.
    pub empirical_c_u: Option<f64>,
    /// Empirical (c, C) frontier of the lower bound (reported, not asserted).
    pub lower_frontier: Vec<(f64, f64)>,
    /// che_reference / (1/√(E₂S)): the per-body feasible Bobkov constant.
    pub feasible_bobkov_constant: Option<f64>,
    pub checks: Vec<Check>,
}

impl BodyReport {
    pub fn passed(&self) -> bool {
        all_ok(&self.checks)
    }

    pub fn passes(&self) -> usize {
        self.checks.iter().filter(|c| c.passed()).count()
    }
}

/// Runs the pipeline on one body.
pub fn run_body(name: &str, body: &ConvexBody, opts: &RunOptions) -> Result<BodyReport> {
    let config = opts.sampler_config(body);
    let raw_batch = sample_uniform(body, &config, opts.samples)?;
    let searched = bounds::optimize_base_point(body, &raw_batch, opts.base_point_evals);
    // For symmetric shapes the optimum is the center; snapping to it when
    // the search lands nearby removes pure search noise and unlocks the
    // exact oracle paths (radial CDF, ball free energy).
    let x0 = snap_to_center(body, searched);

    // Everything downstream works in the frame where x0 is the origin.
    let body0 = body.translate_to_origin(&x0);
    let batch = raw_batch.translated(&x0);
    let origin = vec![0.0; body.dimension()];
    let stats = radial::radial_stats(&batch, &origin)?;

    let mut checks: Vec<Check> = Vec::new();
    let mut reverse_chebyshev = None;
    if opts.checks.radial {
        // Grid with the anchor and tail-range radii included.
        let mut extra = vec![stats.e - 2.0 * stats.s];
        if stats.e2 > 3.0 * stats.s {
            let top = stats.e2 - 3.0 * stats.s;
            extra.extend((1..=16).map(|i| top * i as f64 / 16.0));
        }
        let grid = radial::default_r_grid(&batch, &origin, 64, &extra);
        let cdf = radial::radial_cdf(&body0, &origin, &grid, CdfSource::Batch(&batch))?;
        let logc = radial::check_radial_logconcavity(&cdf);
        checks.push(logc.check);
        let tail = radial::check_small_ball_tail(&stats, &cdf);
        checks.push(tail.check);
        checks.push(radial::check_chebyshev_anchor(&stats, &cdf));
        match radial::radial_cdf(&body0, &origin, &grid, CdfSource::Oracle) {
            Ok(oracle) => {
                checks.push(radial::check_cdf_oracle_agreement(&cdf, &oracle, batch.count()))
            }
            Err(_) => checks.push(Check::skip(
                "radial_cdf_oracle_agreement",
                "no exact radial CDF for this body/base point",
            )),
        }
        checks.push(radial::check_khinchine(&stats, opts.constants.c_khin));
        let mut c0_grid: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
        if !c0_grid.iter().any(|c| (c - opts.c0_floor).abs() < 1e-12) {
            c0_grid.push(opts.c0_floor);
            c0_grid.sort_by(f64::total_cmp);
        }
        let rc = radial::check_reverse_chebyshev(&batch, &stats, &c0_grid);
        let at_floor = rc
            .curve
            .iter()
            .find(|p| (p.c0 - opts.c0_floor).abs() < 1e-12)
            .expect("floor is in the grid");
        checks.push(
            Check::verdict(
                "reverse_chebyshev_floor",
                at_floor.holds,
                format!(
                    "P(|X| ≤ E - {}S) = {} below the floor {}",
                    opts.c0_floor, at_floor.p, opts.c0_floor
                ),
            )
            .with("p", at_floor.p)
            .with("se", at_floor.se)
            .with("largest_passing_c0", rc.largest_passing.unwrap_or(0.0))
            .with_tolerance(opts.c0_floor),
        );
        reverse_chebyshev = Some(rc);
    }

    let mut curve_bundle = None;
    let mut empirical_c_u = None;
    let mut lower_frontier = Vec::new();
    if opts.checks.free_energy || opts.checks.overlap || opts.checks.bounds {
        let mut grid = free_energy::default_w_grid(&stats, &opts.constants, opts.w_points);
        // Exact node for the Gaussian-identity weight n/E₂² (where the
        // conditioned Gaussian fits the body and direct counting works).
        let w_identity = body.dimension() as f64 / (stats.e2 * stats.e2);
        grid.push(w_identity);
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
        let m_node = (opts.samples / 64).max(512);
        let bundle =
            free_energy::build_curve(&body0, name, &stats, &batch, &config, &grid, m_node)?;
        if opts.checks.free_energy {
            let lower = free_energy::check_free_energy_lower_bound(&bundle.curve, &stats);
            checks.push(lower.check);
            let refined = free_energy::check_free_energy_refined_bound(
                &bundle.curve,
                &stats,
                opts.constants.c_refined,
            );
            checks.push(refined.check);
            let upper = free_energy::check_free_energy_upper_bound(
                &bundle.curve,
                &stats,
                opts.constants.c_u,
                opts.constants.cap_u,
            );
            empirical_c_u = upper.empirical_c_u;
            checks.push(upper.check);
            checks.extend(free_energy::check_curve_shape(&bundle.curve, &stats));
            checks.push(free_energy::check_cross_estimators(&bundle));
            let c_grid: Vec<f64> = (0..13).map(|i| 0.01 * 10f64.powf(i as f64 / 4.0)).collect();
            lower_frontier = free_energy::lower_bound_frontier(&bundle.curve, &stats, &c_grid);
            let z_identity = bundle
                .curve
                .interpolate_z(w_identity)
                .expect("identity weight is a grid node")
                .0;
            checks.push(free_energy::gaussian_identity_check(
                &body0,
                &origin,
                w_identity,
                &z_identity,
                opts.seed,
                opts.samples,
            ));
        }
        curve_bundle = Some(bundle);
    }

    let mut overlap_report = None;
    if opts.checks.overlap {
        let bundle = curve_bundle.as_ref().expect("curve built above");
        let rep = overlap::corollary_check(&stats, &bundle.curve, &batch, opts.constants.c_prime)?;
        checks.extend(rep.checks.clone());
        checks.extend(overlap::check_h_shape(&bundle.curve, &stats));
        overlap_report = Some(rep);
    }

    let mut bound_report = None;
    let mut feasible_bobkov_constant = None;
    if opts.checks.bounds {
        let bundle = curve_bundle.as_ref().expect("curve built above");
        let bobkov = bounds::bobkov_bound(&stats, opts.constants.c_bob)
            .map_err(PipelineError::Bounds)?;
        let kls = bounds::kls_bound(&stats).map_err(PipelineError::Bounds)?;
        let pw = bounds::payne_weinberger_bound(body);
        let w0 = overlap::choose_w0(&stats, opts.constants.c_prime)?;
        let (z0, _) = bundle
            .curve
            .interpolate_z(w0)
            .expect("w0 is a grid node");
        let (h0, _) = overlap::relative_entropy(&stats, &z0);
        let transfer = bounds::transfer_cheeger(w0, h0.max(0.0), opts.constants.c_transfer);
        let reference_che_upper = bounds::halfspace_cheeger_upper(
            &batch,
            &bounds::default_directions(body.dimension(), 8, opts.seed),
            500,
        )
        .ok();
        let (exact_lambda1, exact_che) = exact_1d_references(&body0)?;
        let report = BoundReport {
            x0_used: x0.clone(),
            bobkov,
            kls_che: kls,
            pw_lambda1: pw,
            transfer_che: transfer,
            transfer_w: w0,
            transfer_h: h0,
            reference_che_upper,
            exact_lambda1,
            exact_che,
        };
        checks.extend(bounds::consistency_relations(&report, opts.bobkov_floor));
        if let Some(lambda1) = report.exact_lambda1 {
            checks.push(
                // 1e-6 relative slack covers the eigensolver's own
                // discretization error (the interval attains PW exactly).
                Check::verdict(
                    "payne_weinberger_below_exact",
                    report.pw_lambda1 <= lambda1 * (1.0 + 1e-6),
                    format!("PW bound {} exceeds exact λ₁ {lambda1}", report.pw_lambda1),
                )
                .with("pw", report.pw_lambda1)
                .with("exact_lambda1", lambda1),
            );
        }
        feasible_bobkov_constant = report
            .che_reference()
            .map(|(reference, _)| reference / report.bobkov.via_e2_s * opts.constants.c_bob);
        bound_report = Some(report);
    }

    Ok(BodyReport {
        name: name.to_string(),
        dimension: body.dimension(),
        x0,
        stats,
        curve: curve_bundle,
        overlap: overlap_report,
        bounds: bound_report,
        reverse_chebyshev,
        empirical_c_u,
        lower_frontier,
        feasible_bobkov_constant,
        checks,
    })
}

fn snap_to_center(body: &ConvexBody, searched: Vec<f64>) -> Vec<f64> {
    use crate::geometry::{norm, sub, ShapeKind};
    fn center_of(body: &ConvexBody) -> Option<Vec<f64>> {
        match body.kind() {
            ShapeKind::Ball { center, .. } | ShapeKind::Ellipsoid { center, .. } => {
                Some(center.clone())
            }
            ShapeKind::Box { lower, upper } => Some(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| 0.5 * (l + u))
                    .collect(),
            ),
            ShapeKind::Translated { inner, shift } => center_of(inner)
                .map(|c| c.iter().zip(shift).map(|(a, s)| a + s).collect()),
            _ => None,
        }
    }
    match center_of(body) {
        Some(center) if norm(&sub(&center, &searched)) <= 0.05 * body.bounding_radius() => center,
        _ => searched,
    }
}

/// Exact λ₁ and D_Che where the body admits them: intervals (1D), and the
/// exact λ₁ = π²/L_max² for boxes by separation of variables.
fn exact_1d_references(body0: &ConvexBody) -> Result<(Option<f64>, Option<f64>)> {
    if body0.dimension() == 1 {
        let (lo, hi) = body0
            .chord_interval(body0.interior_point(), &[1.0])
            .map_err(crate::sampler::SamplerError::from)?;
        let a = body0.interior_point()[0] + lo;
        let b = body0.interior_point()[0] + hi;
        let lambda1 = bounds::lambda1_1d_solver(a, b, |_| 0.0, 4096)?;
        // Uniform density on an odd grid containing the midpoint: exact.
        let n = 4097;
        let grid: Vec<f64> = (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect();
        let density = vec![1.0 / (b - a); n];
        let d_che = bounds::cheeger_1d_exact(&grid, &density)?;
        return Ok((Some(lambda1), Some(d_che)));
    }
    if let crate::geometry::ShapeKind::Box { lower, upper } = body0.kind() {
        let l_max = lower
            .iter()
            .zip(upper)
            .map(|(l, u)| u - l)
            .fold(0.0f64, f64::max);
        return Ok((Some(std::f64::consts::PI.powi(2) / (l_max * l_max)), None));
    }
    if let crate::geometry::ShapeKind::Translated { inner, .. } = body0.kind() {
        if body0.dimension() > 1 {
            if let crate::geometry::ShapeKind::Box { lower, upper } = inner.kind() {
                let l_max = lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| u - l)
                    .fold(0.0f64, f64::max);
                return Ok((Some(std::f64::consts::PI.powi(2) / (l_max * l_max)), None));
            }
        }
    }
    Ok((None, None))
}
