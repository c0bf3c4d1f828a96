use serde::Serialize;
use serde_json::Value;

/// Outcome of one axiom check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub target: String,
    pub max_deviation: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl CheckReport {
    pub fn new(check: &str, target: &str, max_deviation: f64, tol: f64) -> Self {
        Self {
            check: check.to_string(),
            target: target.to_string(),
            max_deviation,
            tol,
            pass: max_deviation.is_finite() && max_deviation <= tol,
            details: Value::Null,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    /// Force a failure regardless of the deviation.
    pub fn fail(mut self, reason: &str) -> Self {
        self.pass = false;
        self.details = serde_json::json!({ "error": reason });
        self
    }

    pub fn sort_key(&self) -> (String, String) {
        (self.check.clone(), self.target.clone())
    }
}

/// Largest deviation over a list of reports; infinite if any report failed
/// without a finite deviation.
pub fn max_deviation(reports: &[CheckReport]) -> f64 {
    reports.iter().map(|r| r.max_deviation).fold(0.0, f64::max)
}

pub fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.pass)
}
