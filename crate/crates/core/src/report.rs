// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of a single identity or inequality check.
///
/// `passed` is derived from the stored error and tolerance and cannot be set
/// independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub parameters: BTreeMap<String, String>,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<PointError>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub label: String,
    pub observed: f64,
    pub expected: f64,
    pub error: f64,
}

impl VerificationReport {
    pub fn new(check_name: impl Into<String>, max_abs_error: f64, tolerance: f64) -> Self {
        VerificationReport {
            check_name: check_name.into(),
            parameters: BTreeMap::new(),
            max_abs_error,
            tolerance,
            passed: max_abs_error <= tolerance,
            details: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn with_details(mut self, details: Vec<PointError>) -> Self {
        self.details = details;
        self
    }

    /// One-line summary in the form used by the CLI and the acceptance suite.
    pub fn summary(&self) -> String {
        format!(
            "[{}] {}: error {:.3e} (tolerance {:.3e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.check_name,
            self.max_abs_error,
            self.tolerance
        )
    }
}

/// Collects per-point comparisons and tracks the worst error.
#[derive(Debug, Default)]
pub(crate) struct ErrorTable {
    rows: Vec<PointError>,
    worst: f64,
}

impl ErrorTable {
    pub fn push(&mut self, label: impl Into<String>, observed: f64, expected: f64, error: f64) {
        // NaN must never be swallowed by max()
        self.worst = if error.is_nan() { f64::INFINITY } else { self.worst.max(error) };
        self.rows.push(PointError {
            label: label.into(),
            observed,
            expected,
            error,
        });
    }

    pub fn into_report(self, name: &str, tolerance: f64) -> VerificationReport {
        let worst = self.worst;
        VerificationReport::new(name, worst, tolerance).with_details(self.rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passed_tracks_tolerance() {
        assert!(VerificationReport::new("a", 1e-9, 1e-8).passed);
        assert!(!VerificationReport::new("a", 1e-7, 1e-8).passed);
        assert!(!VerificationReport::new("a", f64::NAN, 1e-8).passed);
    }

    #[test]
    fn nan_errors_fail_the_table() {
        let mut t = ErrorTable::default();
        t.push("x", 0.0, 0.0, f64::NAN);
        assert!(!t.into_report("nan", 1.0).passed);
    }
}
