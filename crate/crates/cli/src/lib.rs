//! Scenario runner for the ptkdv solvers. Each scenario writes plot-ready CSV
//! and JSON plus a `summary.json` into its own output directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

mod scenarios;
mod summary;

pub use summary::{Check, Summary};

/// Environment variable naming the root under which scenario directories go.
pub const OUTPUT_ROOT_VAR: &str = "PTKDV_OUT";
pub const DEFAULT_OUTPUT_ROOT: &str = "ptkdv-out";

/// Bad command-line input: unknown scenario, unknown key, malformed value.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScenarioName {
    KdvSolitonBirth,
    Eps0Linear,
    Eps3Solitary,
    Eps3Birth,
    Eps3PositivePulse,
    OddFamily,
    ConservationSuite,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 7] = [
        ScenarioName::KdvSolitonBirth,
        ScenarioName::Eps0Linear,
        ScenarioName::Eps3Solitary,
        ScenarioName::Eps3Birth,
        ScenarioName::Eps3PositivePulse,
        ScenarioName::OddFamily,
        ScenarioName::ConservationSuite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::KdvSolitonBirth => "kdv-soliton-birth",
            ScenarioName::Eps0Linear => "eps0-linear",
            ScenarioName::Eps3Solitary => "eps3-solitary",
            ScenarioName::Eps3Birth => "eps3-birth",
            ScenarioName::Eps3PositivePulse => "eps3-positive-pulse",
            ScenarioName::OddFamily => "odd-family",
            ScenarioName::ConservationSuite => "conservation-suite",
        }
    }

    /// The figure this scenario regenerates.
    pub fn figure(self) -> &'static str {
        match self {
            ScenarioName::KdvSolitonBirth => "Fig. 1",
            ScenarioName::Eps0Linear => "Fig. 2",
            ScenarioName::Eps3Solitary => "Fig. 3",
            ScenarioName::Eps3Birth => "Fig. 4",
            ScenarioName::Eps3PositivePulse => "Fig. 5",
            ScenarioName::OddFamily => "Fig. 6",
            ScenarioName::ConservationSuite => "acceptance checks",
        }
    }

    /// Default parameters. Only these keys may be overridden.
    pub fn defaults(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            ScenarioName::KdvSolitonBirth => &[("L", 200.0), ("N", 2048.0), ("dt", 1e-3), ("T", 14.0)],
            ScenarioName::Eps0Linear => &[("L", 4096.0), ("N", 16384.0), ("dt", 1e-2), ("T", 80.0)],
            ScenarioName::Eps3Solitary => &[("n", 1.0), ("c", 1.0), ("tol", 1e-10)],
            ScenarioName::Eps3Birth => &[("L", 100.0), ("N", 2048.0), ("dt", 2.5e-4), ("T", 2.0)],
            ScenarioName::Eps3PositivePulse => &[("L", 200.0), ("N", 4096.0), ("dt", 2.5e-4), ("T", 19.0)],
            ScenarioName::OddFamily => &[("n", 4.0), ("c", 1.0), ("tol", 1e-10)],
            ScenarioName::ConservationSuite => &[
                ("dt_kdv", 1e-3),
                ("T_kdv", 10.0),
                ("dt_eps3", 2.5e-4),
                ("T_eps3", 2.0),
            ],
        };
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| UsageError(format!("unknown scenario '{s}' (see `ptkdv list`)")))
    }
}

/// One line per scenario, in a fixed order.
pub fn list_scenarios() -> String {
    ScenarioName::ALL
        .iter()
        .map(|n| format!("{} → {}\n", n.as_str(), n.figure()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: ScenarioName,
    /// Defaults with overrides applied.
    pub parameters: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
    /// Run independent profile solves on separate threads.
    pub parallel: bool,
}

impl Scenario {
    /// `sets` holds `key=value` strings. Without `out`, the directory is
    /// `$PTKDV_OUT/<name>`, falling back to `./ptkdv-out/<name>`.
    pub fn new(name: &str, sets: &[String], out: Option<PathBuf>) -> Result<Self, UsageError> {
        let name: ScenarioName = name.parse()?;
        let mut parameters = name.defaults();
        for set in sets {
            let (key, value) = set
                .split_once('=')
                .ok_or_else(|| UsageError(format!("override '{set}' is not of the form key=value")))?;
            let key = key.trim();
            let slot = parameters.get_mut(key).ok_or_else(|| {
                let allowed: Vec<_> = name.defaults().into_keys().collect();
                UsageError(format!(
                    "'{key}' cannot be set for {name}; allowed keys: {}",
                    allowed.join(", ")
                ))
            })?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| UsageError(format!("value for '{key}' is not a number: '{value}'")))?;
            if !v.is_finite() {
                return Err(UsageError(format!("value for '{key}' must be finite")));
            }
            *slot = v;
        }
        for (key, &v) in &parameters {
            let integral = matches!(key.as_str(), "N" | "n");
            if integral && (v.fract() != 0.0 || v < 1.0) {
                return Err(UsageError(format!("'{key}' must be a positive integer, got {v}")));
            }
            if key.starts_with('T') && v < 0.0 {
                return Err(UsageError(format!("'{key}' must be non-negative, got {v}")));
            }
        }
        let output_dir = out.unwrap_or_else(|| {
            let root = std::env::var_os(OUTPUT_ROOT_VAR)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
            root.join(name.as_str())
        });
        Ok(Self {
            name,
            parameters,
            output_dir,
            parallel: false,
        })
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }
}

/// Execute a scenario and write its artifacts and `summary.json`.
///
/// Numerical failures are recorded in the summary rather than returned;
/// the error path is for I/O trouble with the output directory.
pub fn run(scenario: &Scenario) -> anyhow::Result<Summary> {
    scenarios::run(scenario)
}
