use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One tolerance test. `target = None` means "measured must not exceed
/// tolerance"; otherwise `|measured - target| ≤ tolerance`. A check with no
/// measurement could not be evaluated and counts as failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn within(name: &str, measured: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured: Some(measured),
            target: Some(target),
            tolerance,
            passed: (measured - target).abs() <= tolerance,
        }
    }

    pub fn below(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured: Some(measured),
            target: None,
            tolerance: limit,
            passed: measured <= limit,
        }
    }

    pub fn missing(name: &str, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured: None,
            target: None,
            tolerance: limit,
            passed: false,
        }
    }

    /// A yes/no outcome, stored as measured 1 (yes) or 0 against target 1.
    pub fn expect(name: &str, outcome: bool) -> Self {
        Self::within(name, if outcome { 1.0 } else { 0.0 }, 1.0, 0.0)
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let measured = self.measured.map_or("not evaluated".to_string(), |m| format!("{m:.6e}"));
        match self.target {
            Some(t) => format!("{verdict} {}: {measured} (target {t} ± {:e})", self.name, self.tolerance),
            None => format!("{verdict} {}: {measured} (limit {:e})", self.name, self.tolerance),
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub figure: String,
    pub parameters: BTreeMap<String, f64>,
    pub measurements: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Numerical failure that stopped the scenario early, if any.
    pub failure: Option<String>,
    pub passed: bool,
}

impl Summary {
    pub fn new(scenario: &str, figure: &str, parameters: BTreeMap<String, f64>) -> Self {
        Self {
            scenario: scenario.into(),
            figure: figure.into(),
            parameters,
            measurements: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            failure: None,
            passed: false,
        }
    }

    pub fn finish(&mut self) {
        self.passed = self.failure.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.passed);
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")
    }
}
