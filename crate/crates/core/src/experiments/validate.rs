//! Self-validation battery: a dozen cheap checks tying each simulator to a
//! closed form it does not share code with.

use std::collections::BTreeMap;

use serde_json::json;

use super::{ExperimentSummary, Verdict};
use crate::analytic::{self, LinesParams};
use crate::colony::{sample_reduced_count, simulate_colony, ColonyOptions};
use crate::experiments::diagnostics::doubling_jump_report;
use crate::heavy_tail::{slow_variation_envelope, strip_tail_bound_holds, JumpMeasure, SlowVariation};
use crate::lines::{simulate_lines, LinesSimConfig};
use crate::output;
use crate::rng::replicate_seed;
use crate::stats::{self, wilson_interval, Z99};
use crate::Result;

fn timed<F: FnOnce(&mut ExperimentSummary)>(name: &str, parameters: serde_json::Value, f: F) -> ExperimentSummary {
    let started = std::time::Instant::now();
    let mut summary = ExperimentSummary::new(name, parameters);
    f(&mut summary);
    summary.runtime_seconds = started.elapsed().as_secs_f64();
    summary
}

fn lines_params() -> LinesParams {
    LinesParams::new(0.5, 0.5, 3.0, 0.5).unwrap()
}

/// Runs every check; all must pass on a healthy build.
pub fn run_validation(seed: u64) -> Result<Vec<ExperimentSummary>> {
    let mut out = Vec::new();

    out.push(timed("extinction_probability", json!({"lambda": 2.0, "mu": 1.0, "replicates": 2000}), |s| {
        let reps = 2000u64;
        let mut extinct = 0u64;
        for r in 0..reps {
            let mut opts = ColonyOptions::new(2.0, 1.0, 30.0, replicate_seed(seed, r));
            opts.cap = 1024;
            if !simulate_colony(&opts).unwrap().survived() {
                extinct += 1;
            }
        }
        let oracle = analytic::extinction_prob(2.0, 1.0).unwrap();
        let (lo, hi) = wilson_interval(extinct, reps, Z99);
        s.replicates = reps;
        s.estimate = Some(extinct as f64 / reps as f64);
        s.ci_low = Some(lo);
        s.ci_high = Some(hi);
        s.oracle_value = Some(oracle);
        s.verdict = if lo <= oracle && oracle <= hi { Verdict::Pass } else { Verdict::Fail };
        s.detail = format!("die-out frequency vs mu/lambda = {oracle}");
    }));

    out.push(timed("mean_growth", json!({"lambda": 1.5, "mu": 0.5, "t": 2.0, "replicates": 20000}), |s| {
        let reps = 20_000u64;
        let finals: Vec<f64> = (0..reps)
            .map(|r| {
                let opts = ColonyOptions::new(1.5, 0.5, 2.0, replicate_seed(seed ^ 0x11, r));
                simulate_colony(&opts).unwrap().final_population as f64
            })
            .collect();
        let (mean, lo, hi) = stats::mean_interval(&finals, Z99);
        let oracle = analytic::gw_mean(1.5, 0.5, 2.0).unwrap();
        s.replicates = reps;
        s.estimate = Some(mean);
        s.ci_low = Some(lo);
        s.ci_high = Some(hi);
        s.oracle_value = Some(oracle);
        s.verdict = if lo <= oracle && oracle <= hi { Verdict::Pass } else { Verdict::Fail };
        s.detail = "mean population vs e^((lambda - mu) t)".to_string();
    }));

    out.push(timed("pure_birth_law", json!({"lambda": 1.0, "t": std::f64::consts::LN_2, "replicates": 10000}), |s| {
        let reps = 10_000u64;
        let t = std::f64::consts::LN_2;
        let mut counts = BTreeMap::new();
        for r in 0..reps {
            let opts = ColonyOptions::new(1.0, 0.0, t, replicate_seed(seed ^ 0x22, r));
            *counts.entry(simulate_colony(&opts).unwrap().final_population).or_insert(0u64) += 1;
        }
        let tv = stats::total_variation(&counts, reps, 1, |n| analytic::yule_pmf(n, t, 1.0).unwrap());
        s.replicates = reps;
        s.estimate = Some(tv);
        s.oracle_value = Some(0.0);
        s.verdict = if tv <= 0.02 { Verdict::Pass } else { Verdict::Fail };
        s.detail = format!("total variation {tv:.5} against the geometric law (tolerance 0.02)");
    }));

    out.push(timed("reduced_genealogy", json!({"lambda": 2.0, "mu": 1.0, "t": 1.0, "survival_horizon": 5.0, "replicates": 6000}), |s| {
        let reps = 6000u64;
        let mut counts = BTreeMap::new();
        let mut kept = 0u64;
        for r in 0..reps {
            let n = sample_reduced_count(2.0, 1.0, 1.0, 5.0, 256, replicate_seed(seed ^ 0x33, r)).unwrap();
            if n > 0 {
                kept += 1;
                *counts.entry(n).or_insert(0u64) += 1;
            }
        }
        // Conditioned on survival the reduced count follows the pure birth
        // law at the net rate lambda - mu.
        let tv = stats::total_variation(&counts, kept, 1, |n| analytic::yule_pmf(n, 1.0, 1.0).unwrap());
        s.replicates = kept;
        s.estimate = Some(tv);
        s.oracle_value = Some(0.0);
        s.verdict = if tv <= 0.05 { Verdict::Pass } else { Verdict::Fail };
        s.detail = format!("total variation {tv:.5} over {kept} surviving runs (tolerance 0.05)");
    }));

    out.push(timed("jump_offset_law", json!({"c": 0.5, "min_jumps": 10000}), |s| {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        let mut jumps = 0u64;
        let mut r = 0u64;
        while jumps < 10_000 {
            let mut cfg = LinesSimConfig::new(lines_params(), 9.0, 1 << 18, replicate_seed(seed ^ 0x44, r));
            cfg.record_jumps = true;
            cfg.sample_points = 2;
            let traj = simulate_lines(&cfg).unwrap();
            for jump in &traj.jumps {
                *counts.entry(u64::from(jump.to - jump.from)).or_insert(0) += 1;
                jumps += 1;
            }
            r += 1;
        }
        let tv = stats::total_variation(&counts, jumps, 1, |k| {
            0.5f64.powi(k as i32)
        });
        s.replicates = jumps;
        s.estimate = Some(tv);
        s.oracle_value = Some(0.0);
        s.verdict = if tv <= 0.02 { Verdict::Pass } else { Verdict::Fail };
        s.detail = format!("offset total variation {tv:.5} over {jumps} jumps (tolerance 0.02)");
    }));

    match super::calibration::calibration_mc(1.0, 3.0, 1.0, 4000, 0.025, seed ^ 0x55) {
        Ok(summary) => out.push(summary),
        Err(e) => return Err(e),
    }

    out.push(timed("max_line_tail", json!({"j": 5, "replicates": 1000}), |s| {
        let p = lines_params();
        let j = 5u32;
        let t = analytic::upper_schedule(j, p.gamma, p.c2).unwrap();
        let bound = analytic::max_line_tail_bound(j, p.gamma, p.c, p.c2).unwrap();
        let reps = 1000u64;
        let mut hits = 0u64;
        for r in 0..reps {
            let mut cfg = LinesSimConfig::new(p, t, 1 << 18, replicate_seed(seed ^ 0x66, r));
            cfg.sample_points = 2;
            let traj = simulate_lines(&cfg).unwrap();
            if traj.cap_hit || *traj.max_line_at.last().unwrap() >= j {
                hits += 1;
            }
        }
        let est = hits as f64 / reps as f64;
        let sigma = (bound * (1.0 - bound) / reps as f64).sqrt();
        s.replicates = reps;
        s.estimate = Some(est);
        s.oracle_value = Some(bound);
        s.verdict = if est <= bound + 3.0 * sigma { Verdict::Pass } else { Verdict::Fail };
        s.detail = format!("P(max line >= {j} at {t:.3}) = {est:.4} vs bound {bound:.4}");
    }));

    out.push(timed("strip_bound_grid", json!({"d": 1.0, "alphas": [0.5, 1.0, 2.0]}), |s| {
        let mut checked = 0u64;
        let mut holds = true;
        for &alpha in &[0.5, 1.0, 2.0] {
            let measure = JumpMeasure::new(alpha, 1.0, 1.0, SlowVariation::Const { scale: 1.0 }).unwrap();
            for n in 1..=20 {
                for k in 1..=20 {
                    checked += 1;
                    if !strip_tail_bound_holds(&measure, n, k, 1.0).unwrap() {
                        holds = false;
                    }
                }
            }
        }
        s.replicates = checked;
        s.estimate = Some(if holds { 1.0 } else { 0.0 });
        s.verdict = if holds { Verdict::Pass } else { Verdict::Fail };
        s.detail = format!("strip-jump tail bound on the full {checked}-point grid");
    }));

    out.push(timed("doubling_structure", json!({"c": 0.5, "lines": [5, 20]}), |s| {
        let report = doubling_jump_report(0.5, 5, 20).unwrap();
        let in_band = report.rows.iter().all(|r| r.ratio > 0.9 && r.ratio <= 1.0);
        s.replicates = report.rows.len() as u64;
        s.estimate = report.rows.last().map(|r| r.ratio);
        s.verdict = if !report.bound_direction_holds && report.ratios_increasing && in_band {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        s.detail = "doubling-jump ratios below one, increasing, inside (0.9, 1]".to_string();
    }));

    out.push(timed("envelope_monotone", json!({"eta_exps": [0.5, 0.2]}), |s| {
        let log_factor = SlowVariation::Log { scale: 1.0 };
        let tight = slow_variation_envelope(log_factor, 0.5, 1.0, 1e9, 2000).unwrap();
        let loose = slow_variation_envelope(log_factor, 0.2, 1.0, 1e9, 2000).unwrap();
        let ok = match (tight.x0, loose.x0) {
            (Some(a), Some(b)) => a < b,
            _ => false,
        };
        s.replicates = 2;
        s.estimate = tight.x0;
        s.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        s.detail = "envelope threshold grows as the exponent margin shrinks".to_string();
    }));

    out.push(timed("determinism", json!({"seed": seed}), |s| {
        let mut cfg = LinesSimConfig::new(lines_params(), 8.0, 1 << 18, seed ^ 0x77);
        cfg.sample_points = 17;
        let a = simulate_lines(&cfg).unwrap();
        let b = simulate_lines(&cfg).unwrap();
        let csv_a = output::lines_trajectories_csv(std::slice::from_ref(&a));
        let csv_b = output::lines_trajectories_csv(std::slice::from_ref(&b));
        let ok = a.population_at == b.population_at && a.max_line_at == b.max_line_at && csv_a == csv_b;
        s.replicates = 2;
        s.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        s.detail = "identical seed gives identical trajectories and bytes".to_string();
    }));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes() {
        let summaries = run_validation(20_260_818).unwrap();
        assert!(summaries.len() >= 10, "expected a full battery, got {}", summaries.len());
        for s in &summaries {
            assert_eq!(s.verdict, Verdict::Pass, "{}: {}", s.name, s.detail);
        }
    }
}
