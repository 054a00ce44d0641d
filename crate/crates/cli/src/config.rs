//! Run configuration: JSON file merged with command-line overrides.
//! Unknown keys are rejected; constants must be positive.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use specgap::constants::Constants;
use specgap::pipeline::{CheckSelection, RunOptions};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Body description files (single bodies or suites).
    pub bodies: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub chains: Option<usize>,
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
    pub w_points: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    /// Comma-separated check groups for `verify` (radial, free-energy,
    /// overlap, bounds, all).
    pub checks: Option<String>,
    pub constants: Option<Constants>,
    pub c0_floor: Option<f64>,
    pub bobkov_floor: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        if let Some(c) = &config.constants {
            c.validate().map_err(anyhow::Error::msg)?;
        }
        Ok(config)
    }

    /// Folds the config into pipeline options, then applies CLI overrides.
    pub fn build_options(
        &self,
        seed: Option<u64>,
        samples: Option<usize>,
        constant_overrides: &[(String, f64)],
        checks: Option<&str>,
        selection: CheckSelection,
    ) -> anyhow::Result<RunOptions> {
        let mut opts = RunOptions::new(seed.or(self.seed).unwrap_or(0));
        if let Some(m) = samples.or(self.samples) {
            if m == 0 {
                bail!("--samples must be at least 1");
            }
            opts.samples = m;
        }
        if let Some(c) = self.chains {
            if c == 0 {
                bail!("chains must be at least 1");
            }
            opts.chains = c;
        }
        opts.burn_in = self.burn_in;
        opts.thinning = self.thinning;
        if let Some(w) = self.w_points {
            if w < 2 {
                bail!("w_points must be at least 2");
            }
            opts.w_points = w;
        }
        if let Some(c) = self.constants {
            opts.constants = c;
        }
        for (key, value) in constant_overrides {
            opts.constants
                .set(key, *value)
                .map_err(anyhow::Error::msg)?;
        }
        if let Some(f) = self.c0_floor {
            opts.c0_floor = f;
        }
        if let Some(f) = self.bobkov_floor {
            opts.bobkov_floor = f;
        }
        opts.checks = match checks.or(self.checks.as_deref()) {
            Some(list) => {
                let requested = CheckSelection::parse(list).map_err(anyhow::Error::msg)?;
                intersect(selection, requested)
            }
            None => selection,
        };
        Ok(opts)
    }
}

fn intersect(a: CheckSelection, b: CheckSelection) -> CheckSelection {
    CheckSelection {
        radial: a.radial && b.radial,
        free_energy: a.free_energy && b.free_energy,
        overlap: a.overlap && b.overlap,
        bounds: a.bounds && b.bounds,
    }
}

/// Parses one `KEY=VALUE` constants override.
pub fn parse_constant(spec: &str) -> anyhow::Result<(String, f64)> {
    let (key, value) = spec
        .split_once('=')
        .with_context(|| format!("expected KEY=VALUE, got {spec}"))?;
    let value: f64 = value
        .parse()
        .with_context(|| format!("constant {key} has a non-numeric value"))?;
    Ok((key.trim().to_string(), value))
}
