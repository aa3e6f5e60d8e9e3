//! TOML run configuration. Every key is optional; command-line flags override
//! file values and built-in defaults fill the rest. Unknown keys are parse
//! errors.

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;

pub const MODELS: [&str; 3] = ["lines", "spatial", "dominator"];
pub const EXPERIMENTS: [&str; 7] =
    ["simulate", "validate", "events", "scaling", "upper-tail", "calibrate", "dominate"];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub run: Option<RunSection>,
    pub lines: Option<LinesSection>,
    pub measure: Option<MeasureSection>,
    pub events: Option<EventsSection>,
    pub scaling: Option<ScalingSection>,
    pub upper_tail: Option<UpperTailSection>,
    pub calibrate: Option<CalibrateSection>,
    pub dominate: Option<DominateSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub model: Option<String>,
    /// Documents the intended experiment; the subcommand always selects the
    /// action and wins on disagreement.
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub horizon: Option<f64>,
    pub cap: Option<u64>,
    pub sample_points: Option<usize>,
    pub threads: Option<usize>,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinesSection {
    pub gamma: Option<f64>,
    pub c: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub start_line: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    pub alpha: Option<f64>,
    pub x_min: Option<f64>,
    pub eta: Option<f64>,
    /// "const" or "log".
    pub slow: Option<String>,
    pub slow_scale: Option<f64>,
    pub gamma: Option<f64>,
    pub initial_position: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventsSection {
    pub lines: Option<Vec<u32>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    pub exponent: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpperTailSection {
    pub lines: Option<Vec<u32>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    pub lambda: Option<f64>,
    pub t: Option<f64>,
    pub c: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominateSection {
    pub d: Option<f64>,
    pub resamples: Option<usize>,
    pub levels: Option<Vec<f64>>,
}

/// Configuration or flag problem; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn load_file(path: &std::path::Path) -> Result<FileConfig, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: FileConfig = toml::from_str(&text)
        .map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
    if let Some(run) = &cfg.run {
        if let Some(model) = &run.model {
            if !MODELS.contains(&model.as_str()) {
                return Err(UsageError(format!(
                    "config {}: run.model must be one of {MODELS:?}, got {model:?}",
                    path.display()
                )));
            }
        }
        if let Some(exp) = &run.experiment {
            if !EXPERIMENTS.contains(&exp.as_str()) {
                return Err(UsageError(format!(
                    "config {}: run.experiment must be one of {EXPERIMENTS:?}, got {exp:?}",
                    path.display()
                )));
            }
        }
    }
    if let Some(measure) = &cfg.measure {
        if let Some(slow) = &measure.slow {
            if slow != "const" && slow != "log" {
                return Err(UsageError(format!(
                    "config {}: measure.slow must be \"const\" or \"log\", got {slow:?}",
                    path.display()
                )));
            }
        }
    }
    Ok(cfg)
}
