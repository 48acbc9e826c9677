//! Per-inequality comparison records shared by every bound system.

use serde::Serialize;

/// Slack must exceed this for a strict inequality to count as satisfied.
pub const TOL_STRICT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEntry {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub strict_ok: bool,
    pub weak_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub system: String,
    /// Bandwidth expansion (channel uses per source symbol).
    #[serde(rename = "R")]
    pub r: f64,
    pub entries: Vec<BoundEntry>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(system: &str, r: f64) -> Self {
        Self {
            system: system.to_string(),
            r,
            entries: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, label: &str, lhs: f64, rhs: f64) {
        let slack = rhs - lhs;
        self.entries.push(BoundEntry {
            label: label.to_string(),
            lhs,
            rhs,
            slack,
            strict_ok: slack > TOL_STRICT,
            weak_ok: slack >= -TOL_STRICT,
        });
    }

    pub fn entry(&self, label: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    pub fn rhs(&self, label: &str) -> f64 {
        self.entry(label).map(|e| e.rhs).unwrap_or(f64::NAN)
    }

    pub fn slack(&self, label: &str) -> f64 {
        self.entry(label).map(|e| e.slack).unwrap_or(f64::NAN)
    }

    pub fn min_slack(&self) -> f64 {
        self.entries.iter().map(|e| e.slack).fold(f64::INFINITY, f64::min)
    }

    pub fn all_strict(&self) -> bool {
        self.entries.iter().all(|e| e.strict_ok)
    }

    pub fn all_weak(&self) -> bool {
        self.entries.iter().all(|e| e.weak_ok)
    }

    /// Re-judges every entry against a different tolerance.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        for e in &mut self.entries {
            e.strict_ok = e.slack > tol;
            e.weak_ok = e.slack >= -tol;
        }
        self
    }
}
