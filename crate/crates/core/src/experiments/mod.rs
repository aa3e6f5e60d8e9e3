//! Monte Carlo experiments tying the simulators back to the closed forms:
//! event-probability floors along the lower schedule, scaling bands for the
//! extremal particle, tail bounds, calibration of the colony-size floor, and
//! quantile domination between the spatial process and its lines minorant.

pub mod calibration;
pub mod diagnostics;
pub mod domination;
pub mod events;
pub mod scaling;
pub mod upper_tail;
pub mod validate;

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    /// The check could not be decided: infeasible parameters, degenerate
    /// schedule, or not enough usable replicates. Distinct from Fail.
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "PASS"),
            Verdict::Fail => write!(f, "FAIL"),
            Verdict::Indeterminate => write!(f, "INDETERMINATE"),
        }
    }
}

/// Uniform record of one experiment or check, serializable as a report row.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub parameters: serde_json::Value,
    pub replicates: u64,
    pub estimate: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub oracle_value: Option<f64>,
    pub verdict: Verdict,
    pub runtime_seconds: f64,
    pub detail: String,
}

impl ExperimentSummary {
    pub fn new(name: &str, parameters: serde_json::Value) -> Self {
        ExperimentSummary {
            name: name.to_string(),
            parameters,
            replicates: 0,
            estimate: None,
            ci_low: None,
            ci_high: None,
            oracle_value: None,
            verdict: Verdict::Indeterminate,
            runtime_seconds: 0.0,
            detail: String::new(),
        }
    }

    pub fn one_line(&self) -> String {
        let est = match self.estimate {
            Some(e) => format!("{e:.6}"),
            None => "-".to_string(),
        };
        format!("{}: {} (estimate {}, n {}) {}", self.name, self.verdict, est, self.replicates, self.detail)
    }
}
