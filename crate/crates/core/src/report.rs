//! Structured results of the verification suites.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::torus::ResidualReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: String,
    /// The identity or property checked, as a formula.
    pub reference: String,
    pub status: Status,
    /// `0` for exact checks that hold; `1` for exact checks that fail.
    pub residual: f64,
    pub tolerance: f64,
    /// Seconds.
    pub runtime: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn new(suite: &str, seed: Option<u64>) -> Self {
        VerificationReport { suite: suite.to_string(), seed, checks: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn get(&self, id: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check_id == id)
    }

    /// Run `f` and record `residual < tolerance`; an error counts as a failure.
    pub fn measure(
        &mut self,
        id: &str,
        reference: &str,
        tolerance: f64,
        f: impl FnOnce() -> Result<f64, String>,
    ) -> bool {
        let start = Instant::now();
        let outcome = f();
        let runtime = start.elapsed().as_secs_f64();
        let (residual, detail) = match outcome {
            Ok(r) => (r, None),
            Err(e) => (f64::INFINITY, Some(e)),
        };
        let pass = residual.is_finite() && residual < tolerance;
        self.checks.push(CheckResult {
            check_id: id.to_string(),
            reference: reference.to_string(),
            status: if pass { Status::Pass } else { Status::Fail },
            residual,
            tolerance,
            runtime,
            detail,
        });
        pass
    }

    /// Run an exact check: residual 0 when it holds.
    pub fn exact(&mut self, id: &str, reference: &str, f: impl FnOnce() -> Result<bool, String>) -> bool {
        self.measure(id, reference, 0.5, || f().map(|ok| if ok { 0.0 } else { 1.0 }))
    }

    /// Import spectral residuals, prefixing their ids.
    pub fn absorb(&mut self, prefix: &str, report: &ResidualReport, runtime: f64) {
        let share = runtime / report.residuals.len().max(1) as f64;
        for r in &report.residuals {
            self.checks.push(CheckResult {
                check_id: format!("{prefix}.{}", r.id),
                reference: r.reference.clone(),
                status: if r.passed { Status::Pass } else { Status::Fail },
                residual: r.max,
                tolerance: r.tolerance,
                runtime: share,
                detail: Some(format!("mean {:e}", r.mean)),
            });
        }
    }

    /// Attach a note to the most recent check.
    pub fn annotate(&mut self, detail: String) {
        if let Some(c) = self.checks.last_mut() {
            c.detail = Some(detail);
        }
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                let tag = if c.status == Status::Pass { "PASS" } else { "FAIL" };
                format!("{tag} {:<40} residual {:.3e} (tol {:.0e}) {:.2}s", c.check_id, c.residual, c.tolerance, c.runtime)
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_and_nan_fail() {
        let mut r = VerificationReport::new("t", Some(7));
        assert!(r.measure("ok", "x = x", 1e-6, || Ok(1e-9)));
        assert!(!r.measure("nan", "x = x", 1e-6, || Ok(f64::NAN)));
        assert!(!r.measure("err", "x = x", 1e-6, || Err("boom".into())));
        assert!(!r.exact("ne", "1 = 2", || Ok(false)));
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 3);
        // Non-finite residuals serialize as null.
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["seed"], 7);
        assert!(json["checks"][1]["residual"].is_null());
    }
}
