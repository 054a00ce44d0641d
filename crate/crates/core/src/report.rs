//! Check reports: the uniform result record every verification emits.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Skip,
    Fail,
}

/// Outcome of a single named check, with the witness values that decided it.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    /// Labelled numbers backing the verdict (estimates, bounds, slacks).
    pub witnesses: Vec<(String, f64)>,
    /// The tolerance the comparison was made at, when one applies.
    pub tolerance: Option<f64>,
    pub message: String,
}

impl Check {
    pub fn pass(name: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: CheckStatus::Pass,
            witnesses: Vec::new(),
            tolerance: None,
            message: String::new(),
        }
    }

    pub fn fail(name: impl Into<String>, message: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: CheckStatus::Fail,
            witnesses: Vec::new(),
            tolerance: None,
            message: message.into(),
        }
    }

    pub fn skip(name: impl Into<String>, message: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: CheckStatus::Skip,
            witnesses: Vec::new(),
            tolerance: None,
            message: message.into(),
        }
    }

    /// Pass/fail from a predicate.
    pub fn verdict(name: impl Into<String>, ok: bool, message: impl Into<String>) -> Self {
        let name = name.into();
        if ok {
            Check::pass(name)
        } else {
            Check::fail(name, message)
        }
    }

    pub fn with(mut self, label: impl Into<String>, value: f64) -> Self {
        self.witnesses.push((label.into(), value));
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

/// True iff no check failed (skips allowed).
pub fn all_ok(checks: &[Check]) -> bool {
    checks.iter().all(|c| !c.failed())
}
