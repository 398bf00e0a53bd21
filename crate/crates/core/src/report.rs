//! Pass/fail records shared by every check in the crate.
//!
//! A [`CheckReport`] always carries the six serialized core fields
//! `{name, samples, fraction, worst_margin, pass, seed}`; optional statistics
//! and nested sub-checks are appended after them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    /// Fraction of samples satisfying the check (1.0 when `samples == 0`).
    pub fraction: f64,
    /// Smallest (most negative) margin observed; positive means every sample had room.
    pub worst_margin: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub stats: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<CheckReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Pointwise-inequality reports use the same record.
pub type BoundReport = CheckReport;

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            samples: 0,
            fraction: 1.0,
            worst_margin: f64::INFINITY,
            pass: true,
            seed: None,
            stats: BTreeMap::new(),
            parts: Vec::new(),
            note: None,
        }
    }

    /// Builds a report from per-sample margins: a sample is satisfied when its
    /// margin is `>= 0`, and the report passes when the satisfied fraction
    /// reaches `threshold`.
    pub fn from_margins(name: impl Into<String>, margins: &[f64], threshold: f64) -> Self {
        let mut report = Self::new(name);
        let ok = margins.iter().filter(|m| **m >= 0.0).count();
        report.samples = margins.len();
        report.fraction = if margins.is_empty() {
            1.0
        } else {
            ok as f64 / margins.len() as f64
        };
        report.worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
        report.pass = report.fraction >= threshold;
        report.stat("threshold", threshold);
        report
    }

    /// A single boolean condition.
    pub fn condition(name: impl Into<String>, ok: bool, margin: f64) -> Self {
        let mut report = Self::new(name);
        report.samples = 1;
        report.fraction = if ok { 1.0 } else { 0.0 };
        report.worst_margin = margin;
        report.pass = ok;
        report
    }

    /// Aggregates sub-checks: passes iff every part passes.
    pub fn all_of(name: impl Into<String>, parts: Vec<CheckReport>) -> Self {
        let mut report = Self::new(name);
        report.samples = parts.iter().map(|p| p.samples).sum();
        report.fraction = parts.iter().map(|p| p.fraction).fold(1.0, f64::min);
        report.worst_margin = parts.iter().map(|p| p.worst_margin).fold(f64::INFINITY, f64::min);
        report.pass = parts.iter().all(|p| p.pass);
        report.parts = parts;
        report
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn stat(&mut self, key: &str, value: f64) -> &mut Self {
        self.stats.insert(key.to_string(), value);
        self
    }

    pub fn part(&self, name: &str) -> Option<&CheckReport> {
        self.parts.iter().find(|p| p.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Median of a slice (NaNs removed). Returns NaN for an empty input.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolated quantile `q` in `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] * (1.0 - frac) + v[hi] * frac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins_threshold() {
        let r = CheckReport::from_margins("m", &[1.0, 0.5, -0.1, 2.0], 0.75);
        assert_eq!(r.samples, 4);
        assert_eq!(r.fraction, 0.75);
        assert_eq!(r.worst_margin, -0.1);
        assert!(r.pass);
        let r = CheckReport::from_margins("m", &[1.0, -0.5, -0.1, 2.0], 0.75);
        assert!(!r.pass);
    }

    #[test]
    fn json_has_core_fields() {
        let r = CheckReport::from_margins("x", &[0.0], 0.99).with_seed(7);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["name", "samples", "fraction", "worst_margin", "pass", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
