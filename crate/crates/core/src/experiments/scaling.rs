//! Scaling bands for the extremal particle.
//!
//! Over the late window [h/2, h] of a run the extremal statistic is divided
//! by t^(1/(1-gamma)). If the scaling exponent is right the ratio stays in a
//! bounded band with no drift: the band bounds and the log-log slope make
//! that checkable, and a deliberately wrong exponent shows up as slope.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{ExperimentSummary, Verdict};
use crate::analytic::LinesParams;
use crate::heavy_tail::JumpMeasure;
use crate::lines::{simulate_lines, LinesSimConfig};
use crate::rng::replicate_seed;
use crate::spatial::{simulate_spatial, SpatialSimConfig};
use crate::stats::ls_slope;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BandRow {
    pub t: f64,
    pub ratio: f64,
    pub replicate: u64,
}

#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub horizon: f64,
    pub cap: u64,
    pub replicates: u64,
    pub seed: u64,
    /// Grid points over the full run; roughly half land in the window.
    pub sample_points: usize,
    pub slope_tolerance: f64,
    pub ratio_spread_limit: f64,
    /// Exponent for the normalizer t^e; defaults to 1/(1-gamma). Setting a
    /// wrong exponent on purpose turns the band check into a control.
    pub exponent_override: Option<f64>,
}

impl ScalingConfig {
    pub fn new(horizon: f64, cap: u64, replicates: u64, seed: u64) -> Self {
        ScalingConfig {
            horizon,
            cap,
            replicates,
            seed,
            sample_points: 33,
            slope_tolerance: 0.15,
            ratio_spread_limit: 100.0,
            exponent_override: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingBand {
    pub statistic: String,
    pub gamma: f64,
    pub exponent: f64,
    pub window: (f64, f64),
    pub rows: Vec<BandRow>,
    pub band_low: f64,
    pub band_high: f64,
    pub median: f64,
    pub slope: f64,
    pub slope_tolerance: f64,
    pub ratio_spread_limit: f64,
    pub replicates_used: u64,
    pub replicates_capped: u64,
    pub replicates_underpowered: u64,
    pub verdict: Verdict,
    pub detail: String,
}

impl ScalingBand {
    pub fn summary(&self, name: &str) -> ExperimentSummary {
        let mut s = ExperimentSummary::new(
            name,
            json!({
                "statistic": self.statistic,
                "gamma": self.gamma,
                "exponent": self.exponent,
                "window": [self.window.0, self.window.1],
            }),
        );
        s.replicates = self.replicates_used;
        s.estimate = Some(self.median);
        s.ci_low = Some(self.band_low);
        s.ci_high = Some(self.band_high);
        s.verdict = self.verdict;
        s.detail = self.detail.clone();
        s
    }
}

fn finish_band(
    statistic: &str,
    gamma: f64,
    exponent: f64,
    window: (f64, f64),
    rows: Vec<BandRow>,
    used: u64,
    capped: u64,
    underpowered: u64,
    cfg: &ScalingConfig,
) -> ScalingBand {
    let mut band = ScalingBand {
        statistic: statistic.to_string(),
        gamma,
        exponent,
        window,
        band_low: f64::NAN,
        band_high: f64::NAN,
        median: f64::NAN,
        slope: f64::NAN,
        slope_tolerance: cfg.slope_tolerance,
        ratio_spread_limit: cfg.ratio_spread_limit,
        replicates_used: used,
        replicates_capped: capped,
        replicates_underpowered: underpowered,
        verdict: Verdict::Indeterminate,
        detail: String::new(),
        rows,
    };
    if band.rows.is_empty() || used == 0 {
        band.detail = format!("no usable replicates ({capped} capped, {underpowered} underpowered)");
        return band;
    }
    let mut ratios: Vec<f64> = band.rows.iter().map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    band.band_low = ratios[0];
    band.band_high = *ratios.last().unwrap();
    band.median = crate::stats::quantile_sorted(&ratios, 0.5);

    if band.band_low <= 0.0 {
        band.verdict = Verdict::Fail;
        band.detail = format!("band floor not positive: {}", band.band_low);
        return band;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        band.rows.iter().map(|r| (r.t.ln(), r.ratio.ln())).unzip();
    band.slope = ls_slope(&xs, &ys);
    let spread = band.band_high / band.band_low;
    let mut problems = Vec::new();
    if spread > cfg.ratio_spread_limit {
        problems.push(format!("spread {spread:.2} exceeds {}", cfg.ratio_spread_limit));
    }
    if band.slope.abs() > cfg.slope_tolerance {
        problems.push(format!("slope {:.4} outside +-{}", band.slope, cfg.slope_tolerance));
    }
    if problems.is_empty() {
        band.verdict = Verdict::Pass;
        band.detail = format!(
            "band [{:.4}, {:.4}] (spread {spread:.2}), slope {:.4}, {} ratios from {} replicates ({} capped, {} underpowered)",
            band.band_low,
            band.band_high,
            band.slope,
            band.rows.len(),
            used,
            capped,
            underpowered
        );
    } else {
        band.verdict = Verdict::Fail;
        band.detail = problems.join("; ");
    }
    band
}

/// Band of max_line(t) / t^(1/(1-gamma)) for the lines process over the late
/// window. Capped replicates are excluded; if every replicate capped the
/// whole check errors out.
pub fn scaling_band_lines(params: &LinesParams, cfg: &ScalingConfig) -> Result<ScalingBand> {
    if !(cfg.horizon > 0.0) {
        return Err(Error::bad_param("horizon", "band needs a positive horizon"));
    }
    let make_run = |r: u64| {
        let mut run = LinesSimConfig::new(*params, cfg.horizon, cfg.cap, replicate_seed(cfg.seed, r));
        run.sample_points = cfg.sample_points;
        run
    };
    make_run(0).validate()?;
    let exponent = cfg.exponent_override.unwrap_or(1.0 / (1.0 - params.gamma));
    let window = (cfg.horizon / 2.0, cfg.horizon);
    let per_rep: Vec<Option<Vec<(f64, f64)>>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let traj = simulate_lines(&make_run(r)).expect("validated config");
            if traj.cap_hit {
                return None;
            }
            Some(
                traj.sample_times
                    .iter()
                    .zip(&traj.max_line_at)
                    .filter(|(t, _)| **t >= window.0 && **t > 0.0)
                    .map(|(t, m)| (*t, f64::from(*m)))
                    .collect(),
            )
        })
        .collect();

    let mut rows = Vec::new();
    let mut used = 0u64;
    let mut capped = 0u64;
    for (r, rep) in per_rep.into_iter().enumerate() {
        match rep {
            None => capped += 1,
            Some(points) => {
                used += 1;
                for (t, m) in points {
                    rows.push(BandRow { t, ratio: m / t.powf(exponent), replicate: r as u64 });
                }
            }
        }
    }
    if used == 0 {
        return Err(Error::AllCapped { replicates: cfg.replicates });
    }
    Ok(finish_band("max_line", params.gamma, exponent, window, rows, used, capped, 0, cfg))
}

enum RepOutcome {
    Rows(Vec<(f64, f64)>),
    Capped,
    Underpowered,
}

/// Band of ln max_position(t) / t^(1/(1-gamma)) for the spatial process.
/// Replicates whose final population is below 10 are set aside as
/// underpowered; if nothing usable remains the band is indeterminate.
pub fn scaling_band_spatial(
    measure: &JumpMeasure,
    gamma: f64,
    initial_position: f64,
    cfg: &ScalingConfig,
) -> Result<ScalingBand> {
    if !(cfg.horizon > 0.0) {
        return Err(Error::bad_param("horizon", "band needs a positive horizon"));
    }
    let make_run = |r: u64| {
        let mut run = SpatialSimConfig::new(*measure, gamma, cfg.horizon, replicate_seed(cfg.seed, r));
        run.cap = cfg.cap;
        run.sample_points = cfg.sample_points;
        run.initial_position = initial_position;
        run
    };
    make_run(0).validate()?;
    let exponent = cfg.exponent_override.unwrap_or(1.0 / (1.0 - gamma));
    let window = (cfg.horizon / 2.0, cfg.horizon);
    let per_rep: Vec<RepOutcome> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let traj = simulate_spatial(&make_run(r)).expect("validated config");
            if traj.cap_hit {
                return RepOutcome::Capped;
            }
            if *traj.population_at.last().unwrap() < 10 {
                return RepOutcome::Underpowered;
            }
            RepOutcome::Rows(
                traj.sample_times
                    .iter()
                    .zip(&traj.max_position_at)
                    .filter(|(t, _)| **t >= window.0 && **t > 0.0)
                    .map(|(t, m)| (*t, m.ln()))
                    .collect(),
            )
        })
        .collect();

    let mut rows = Vec::new();
    let mut used = 0u64;
    let mut capped = 0u64;
    let mut underpowered = 0u64;
    for (r, rep) in per_rep.into_iter().enumerate() {
        match rep {
            RepOutcome::Capped => capped += 1,
            RepOutcome::Underpowered => underpowered += 1,
            RepOutcome::Rows(points) => {
                used += 1;
                for (t, m) in points {
                    rows.push(BandRow { t, ratio: m / t.powf(exponent), replicate: r as u64 });
                }
            }
        }
    }
    if capped == cfg.replicates {
        return Err(Error::AllCapped { replicates: cfg.replicates });
    }
    Ok(finish_band("ln_max_position", gamma, exponent, window, rows, used, capped, underpowered, cfg))
}
