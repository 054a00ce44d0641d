//! Report assembly: the machine-readable run report, human-readable tables,
//! and the plot-data CSV files.

use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

use specgap::constants::Constants;
use specgap::free_energy::curve_to_csv;
use specgap::overlap::relative_entropy;
use specgap::pipeline::BodyReport;
use specgap::report::CheckStatus;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub verdict: String,
    pub bodies: usize,
    pub checks_total: usize,
    pub checks_passed: usize,
    pub checks_skipped: usize,
    pub checks_failed: usize,
    /// Suite minimum of the per-body feasible Bobkov constants.
    pub feasible_bobkov_constant_min: Option<f64>,
}

/// Wall-clock figures live in their own object so reports stay
/// byte-comparable after stripping this one field.
#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: String,
    pub package_version: String,
    pub command: String,
    pub seed: u64,
    pub samples: usize,
    pub constants: Constants,
    pub bodies: Vec<BodyReport>,
    pub suite: SuiteSummary,
    pub timing: Timing,
}

impl RunReport {
    pub fn assemble(
        command: &str,
        seed: u64,
        samples: usize,
        constants: Constants,
        bodies: Vec<BodyReport>,
        wall_seconds: f64,
    ) -> Self {
        let checks_total: usize = bodies.iter().map(|b| b.checks.len()).sum();
        let checks_passed: usize = bodies.iter().map(|b| b.passes()).sum();
        let checks_failed: usize = bodies
            .iter()
            .flat_map(|b| &b.checks)
            .filter(|c| c.failed())
            .count();
        let feasible = bodies
            .iter()
            .filter_map(|b| b.feasible_bobkov_constant)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
        let verdict = if checks_failed == 0 { "pass" } else { "fail" };
        RunReport {
            schema_version: SCHEMA_VERSION.to_string(),
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            samples,
            constants,
            suite: SuiteSummary {
                verdict: verdict.to_string(),
                bodies: bodies.len(),
                checks_total,
                checks_passed,
                checks_skipped: checks_total - checks_passed - checks_failed,
                checks_failed,
                feasible_bobkov_constant_min: feasible,
            },
            bodies,
            timing: Timing { wall_seconds },
        }
    }

    pub fn passed(&self) -> bool {
        self.suite.checks_failed == 0
    }

    /// Writes report.json plus the per-body data files into `out`.
    pub fn write_files(&self, out: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("report.json"), serde_json::to_string_pretty(self)?)?;
        let mut bounds_csv =
            String::from("body,bobkov_e_s,bobkov_e2_s,kls,pw_lambda1,transfer,halfspace_upper,exact_che,exact_lambda1\n");
        let mut cu_csv = String::from("body,empirical_c_u\n");
        for body in &self.bodies {
            if let Some(bundle) = &body.curve {
                std::fs::write(
                    out.join(format!("curve_{}.csv", body.name)),
                    curve_to_csv(bundle, &self.constants),
                )?;
                // Entropy trace for the H-vs-w plot.
                let mut h_csv = String::from("w,H,se\n");
                for p in &bundle.curve.points {
                    let (h, se) = relative_entropy(&body.stats, p);
                    let _ = writeln!(h_csv, "{},{},{}", p.w, h, se);
                }
                std::fs::write(out.join(format!("entropy_{}.csv", body.name)), h_csv)?;
            }
            if !body.lower_frontier.is_empty() {
                let mut f_csv = String::from("c,C\n");
                for (c, cap) in &body.lower_frontier {
                    let _ = writeln!(f_csv, "{c},{cap}");
                }
                std::fs::write(out.join(format!("frontier_{}.csv", body.name)), f_csv)?;
            }
            if let Some(b) = &body.bounds {
                let _ = writeln!(
                    bounds_csv,
                    "{},{},{},{},{},{},{},{},{}",
                    body.name,
                    b.bobkov.via_e_s,
                    b.bobkov.via_e2_s,
                    b.kls_che,
                    b.pw_lambda1,
                    b.transfer_che,
                    b.reference_che_upper
                        .as_ref()
                        .map_or(String::new(), |h| h.ratio.to_string()),
                    b.exact_che.map_or(String::new(), |v| v.to_string()),
                    b.exact_lambda1.map_or(String::new(), |v| v.to_string()),
                )?;
            }
            if let Some(cu) = body.empirical_c_u {
                let _ = writeln!(cu_csv, "{},{}", body.name, cu);
            }
        }
        std::fs::write(out.join("bounds_table.csv"), bounds_csv)?;
        std::fs::write(out.join("empirical_cu.csv"), cu_csv)?;
        Ok(())
    }

    /// Human-readable rendering for stdout.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for body in &self.bodies {
            let _ = writeln!(
                s,
                "== {} (n={}, x0 distance {:.4})",
                body.name,
                body.dimension,
                body.x0.iter().map(|x| x * x).sum::<f64>().sqrt()
            );
            let st = &body.stats;
            let _ = writeln!(
                s,
                "   E = {:.6} ± {:.1e}   S = {:.6} ± {:.1e}   E2 = {:.6} ± {:.1e}",
                st.e, st.se_e, st.s, st.se_s, st.e2, st.se_e2
            );
            if let Some(b) = &body.bounds {
                let _ = writeln!(
                    s,
                    "   bounds: bobkov {:.4} | kls {:.4} | pw λ₁ {:.4} | transfer {:.4}{}",
                    b.bobkov.via_e2_s,
                    b.kls_che,
                    b.pw_lambda1,
                    b.transfer_che,
                    b.reference_che_upper
                        .as_ref()
                        .map_or(String::new(), |h| format!(" | upper {:.4}", h.ratio)),
                );
            }
            if let Some(o) = &body.overlap {
                let _ = writeln!(
                    s,
                    "   overlap: w0 {:.4} | H {:.5} | tv(pinsker) {:.5} | tv(direct) {:.5}",
                    o.w0, o.h, o.dtv_pinsker, o.dtv_direct.value
                );
            }
            if let Some(bundle) = &body.curve {
                let low = bundle
                    .curve
                    .points
                    .iter()
                    .filter(|p| p.method == specgap::free_energy::Method::Mc && p.low_ess())
                    .count();
                if low > 0 {
                    let _ = writeln!(
                        s,
                        "   warning: {low} published mc point(s) with effective sample size < 100"
                    );
                }
            }
            for c in &body.checks {
                let mark = match c.status {
                    CheckStatus::Pass => "PASS",
                    CheckStatus::Skip => "skip",
                    CheckStatus::Fail => "FAIL",
                };
                let detail = match c.status {
                    CheckStatus::Pass => String::new(),
                    _ => format!(" ({})", c.message),
                };
                let _ = writeln!(s, "   [{mark}] {}{detail}", c.name);
            }
        }
        let _ = writeln!(
            s,
            "suite: {} — {} bodies, {} checks ({} passed, {} skipped, {} failed){}",
            self.suite.verdict,
            self.suite.bodies,
            self.suite.checks_total,
            self.suite.checks_passed,
            self.suite.checks_skipped,
            self.suite.checks_failed,
            self.suite
                .feasible_bobkov_constant_min
                .map_or(String::new(), |v| format!(
                    ", feasible Bobkov constant ≥ {v:.4}"
                )),
        );
        s
    }
}
