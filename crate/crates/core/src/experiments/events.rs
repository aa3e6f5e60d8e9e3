//! Conditional event probabilities along the lower schedule.
//!
//! For each line J the schedule gives a time t_J and a colony-size floor
//! q_J. The run watches the first arrival on line J (event Z), snapshots the
//! line-J count t_J later (event A: count >= q_J), and then watches one time
//! unit for a doubling jump J -> 2J out of the colony (event B). A is
//! estimated conditional on Z, B conditional on A.

use rayon::prelude::*;
use serde_json::json;

use super::{ExperimentSummary, Verdict};
use crate::analytic::{self, LinesParams, LowerSchedule};
use crate::lines::{simulate_lines, LineWatch, LinesSimConfig};
use crate::rng::replicate_seed;
use crate::stats::{wilson_interval, Z99};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct EventProbConfig {
    pub params: LinesParams,
    pub j_list: Vec<u32>,
    pub replicates: u64,
    pub cap: u64,
    /// Largest admissible q_J. Lines whose floor exceeds it are flagged and
    /// not run; the floor grows like e^(J^gamma t_J) and outruns any budget.
    pub feasibility_threshold: f64,
    /// The watch for the first arrival on line J gives up at
    /// wait_factor * t_J + wait_offset.
    pub wait_factor: f64,
    pub wait_offset: f64,
    pub seed: u64,
}

impl EventProbConfig {
    pub fn new(params: LinesParams, j_list: Vec<u32>, replicates: u64, seed: u64) -> Self {
        EventProbConfig {
            params,
            j_list,
            replicates,
            cap: 1 << 25,
            feasibility_threshold: 1e6,
            wait_factor: 4.0,
            wait_offset: 4.0,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EventProbOutcome {
    pub j: u32,
    pub schedule: Option<LowerSchedule>,
    pub a_summary: ExperimentSummary,
    pub b_summary: ExperimentSummary,
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialCounts {
    z_hits: u64,
    capped_before_mark: u64,
    a_trials: u64,
    a_successes: u64,
    b_trials: u64,
    b_successes: u64,
    b_incomplete: u64,
}

impl TrialCounts {
    fn merge(mut self, other: TrialCounts) -> TrialCounts {
        self.z_hits += other.z_hits;
        self.capped_before_mark += other.capped_before_mark;
        self.a_trials += other.a_trials;
        self.a_successes += other.a_successes;
        self.b_trials += other.b_trials;
        self.b_successes += other.b_successes;
        self.b_incomplete += other.b_incomplete;
        self
    }
}

fn params_json(config: &EventProbConfig, j: u32, schedule: Option<&LowerSchedule>) -> serde_json::Value {
    json!({
        "gamma": config.params.gamma,
        "c": config.params.c,
        "c1": config.params.c1,
        "j": j,
        "t": schedule.map(|s| s.t),
        "threshold": schedule.map(|s| s.threshold),
        "replicates": config.replicates,
    })
}

/// Estimates P(A_J | Z_J) and P(B_J | A_J) for every requested line.
///
/// Lines with a degenerate schedule or an infeasible floor produce
/// indeterminate summaries naming the guard instead of running.
pub fn estimate_event_probs(config: &EventProbConfig) -> Result<Vec<EventProbOutcome>> {
    config.params.check_lower_feasible()?;
    if config.replicates == 0 {
        return Err(Error::bad_param("replicates", "need at least one replicate"));
    }
    let mut outcomes = Vec::with_capacity(config.j_list.len());
    for &j in &config.j_list {
        outcomes.push(run_line(config, j)?);
    }
    Ok(outcomes)
}

fn run_line(config: &EventProbConfig, j: u32) -> Result<EventProbOutcome> {
    let started = std::time::Instant::now();
    let p = &config.params;
    let schedule = match analytic::lower_schedule(j, p.gamma, p.c1, p.c) {
        Ok(s) => s,
        Err(Error::DegenerateSchedule { .. }) => {
            let mut a = ExperimentSummary::new(&format!("event_a_line_{j}"), params_json(config, j, None));
            a.detail = format!("schedule degenerate: t_{j} <= 0, not run");
            let b = ExperimentSummary {
                name: format!("event_b_line_{j}"),
                detail: a.detail.clone(),
                ..a.clone()
            };
            return Ok(EventProbOutcome { j, schedule: None, a_summary: a, b_summary: b });
        }
        Err(e) => return Err(e),
    };

    let lambda = p.branch_rate(j);
    let mu = p.out_rate(j);
    let window = 1.0;
    // Mean line-J count at the mark, by the colony growth law; the window
    // multiplies it by at most another e^lambda.
    let predicted_mark = analytic::gw_mean(lambda, mu, schedule.t)?;
    let predicted_end = predicted_mark * ((lambda - mu) * window).exp();

    let infeasible = if schedule.threshold > config.feasibility_threshold {
        Some(format!(
            "floor q_{j} = {:.3e} exceeds feasibility_threshold {:.1e}, not run",
            schedule.threshold, config.feasibility_threshold
        ))
    } else if predicted_end * 8.0 > config.cap as f64 {
        Some(format!(
            "predicted colony {:.3e} too close to cap {}, not run",
            predicted_end, config.cap
        ))
    } else {
        None
    };
    if let Some(reason) = infeasible {
        let mut a = ExperimentSummary::new(&format!("event_a_line_{j}"), params_json(config, j, Some(&schedule)));
        a.detail = reason;
        a.runtime_seconds = started.elapsed().as_secs_f64();
        let b = ExperimentSummary {
            name: format!("event_b_line_{j}"),
            ..a.clone()
        };
        return Ok(EventProbOutcome { j, schedule: Some(schedule), a_summary: a, b_summary: b });
    }

    let deadline = config.wait_factor * schedule.t + config.wait_offset;
    let horizon = deadline + schedule.t + window + 1.0;
    let make_run = |r: u64| {
        let mut run = LinesSimConfig::new(*p, horizon, config.cap, replicate_seed(config.seed, (u64::from(j) << 40) | r));
        run.sample_points = 2;
        let mut watch = LineWatch::new(j, schedule.t, window, Some(2 * j));
        watch.hit_deadline = deadline;
        run.watch = Some(watch);
        run.halt_after_watch = true;
        run
    };
    make_run(0).validate()?;
    let counts = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let traj = simulate_lines(&make_run(r)).expect("validated config");
            let report = traj.watch.expect("watch configured");

            let mut c = TrialCounts::default();
            if report.hit_time.is_none() {
                return c;
            }
            c.z_hits = 1;
            let Some(count) = report.count_at_mark else {
                // Run capped (or hit the horizon) before the snapshot.
                c.capped_before_mark = 1;
                return c;
            };
            c.a_trials = 1;
            if (count as f64) < schedule.threshold {
                return c;
            }
            c.a_successes = 1;
            if report.target_jump_seen {
                c.b_trials = 1;
                c.b_successes = 1;
            } else if report.complete {
                c.b_trials = 1;
            } else {
                c.b_incomplete = 1;
            }
            c
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(TrialCounts::default(), TrialCounts::merge);

    let elapsed = started.elapsed().as_secs_f64();
    let mut a = ExperimentSummary::new(&format!("event_a_line_{j}"), params_json(config, j, Some(&schedule)));
    a.replicates = counts.a_trials;
    a.runtime_seconds = elapsed;
    if counts.a_trials == 0 {
        a.detail = format!(
            "no usable trials: {} of {} runs reached line {j} by the deadline, {} capped before the snapshot",
            counts.z_hits, config.replicates, counts.capped_before_mark
        );
    } else {
        let est = counts.a_successes as f64 / counts.a_trials as f64;
        let (lo, hi) = wilson_interval(counts.a_successes, counts.a_trials, Z99);
        a.estimate = Some(est);
        a.ci_low = Some(lo);
        a.ci_high = Some(hi);
        a.oracle_value = Some(0.5);
        a.verdict = if est >= 0.5 { Verdict::Pass } else { Verdict::Fail };
        a.detail = format!(
            "colony >= {:.4} at mark in {}/{} conditioned runs ({} arrivals, {} capped early)",
            schedule.threshold, counts.a_successes, counts.a_trials, counts.z_hits, counts.capped_before_mark
        );
    }

    let mut b = ExperimentSummary::new(&format!("event_b_line_{j}"), params_json(config, j, Some(&schedule)));
    b.replicates = counts.b_trials;
    b.runtime_seconds = elapsed;
    b.oracle_value = Some(1.0 - (2.0 / std::f64::consts::E).powi(j as i32));
    if counts.b_trials == 0 {
        b.detail = format!(
            "no usable trials: {} qualifying colonies, {} windows cut short",
            counts.a_successes, counts.b_incomplete
        );
    } else {
        let est = counts.b_successes as f64 / counts.b_trials as f64;
        let (lo, hi) = wilson_interval(counts.b_successes, counts.b_trials, Z99);
        let floor = b.oracle_value.unwrap() - (hi - lo);
        b.estimate = Some(est);
        b.ci_low = Some(lo);
        b.ci_high = Some(hi);
        b.verdict = if est >= floor { Verdict::Pass } else { Verdict::Fail };
        b.detail = format!(
            "doubling jump within the window in {}/{} qualifying runs (floor {:.4} after CI width)",
            counts.b_successes, counts.b_trials, floor
        );
    }
    Ok(EventProbOutcome { j, schedule: Some(schedule), a_summary: a, b_summary: b })
}

/// Aggregate verdict over a sweep: every feasible line must put A at or
/// above one half, the A estimates must be nondecreasing in J, and B must
/// clear its floor at the largest feasible line.
pub fn event_trend_summary(outcomes: &[EventProbOutcome]) -> ExperimentSummary {
    let mut summary = ExperimentSummary::new(
        "event_trend",
        json!({ "lines": outcomes.iter().map(|o| o.j).collect::<Vec<_>>() }),
    );
    let feasible: Vec<&EventProbOutcome> =
        outcomes.iter().filter(|o| o.a_summary.estimate.is_some()).collect();
    if feasible.is_empty() {
        summary.detail = "no feasible lines".to_string();
        return summary;
    }
    summary.replicates = feasible.iter().map(|o| o.a_summary.replicates).sum();

    let mut ok = true;
    let mut notes = Vec::new();
    let mut prev: Option<(u32, f64)> = None;
    for o in &feasible {
        let est = o.a_summary.estimate.unwrap();
        if est < 0.5 {
            ok = false;
            notes.push(format!("A at line {} below one half ({est:.4})", o.j));
        }
        if let Some((pj, pe)) = prev {
            if est < pe {
                ok = false;
                notes.push(format!("A dropped from {pe:.4} (line {pj}) to {est:.4} (line {})", o.j));
            }
        }
        prev = Some((o.j, est));
    }
    let last = feasible.last().unwrap();
    match last.b_summary.verdict {
        Verdict::Pass => {}
        Verdict::Fail => {
            ok = false;
            notes.push(format!("B floor missed at line {}", last.j));
        }
        Verdict::Indeterminate => {
            ok = false;
            notes.push(format!("B undecided at line {}", last.j));
        }
    }
    let skipped = outcomes.len() - feasible.len();
    summary.estimate = last.b_summary.estimate;
    summary.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    summary.detail = if notes.is_empty() {
        format!(
            "A nondecreasing and >= 0.5 over {} feasible lines ({} flagged infeasible), B cleared at line {}",
            feasible.len(),
            skipped,
            last.j
        )
    } else {
        notes.join("; ")
    };
    summary
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LinesParams {
        LinesParams::new(0.5, 0.5, 3.0, 0.5).unwrap()
    }

    #[test]
    fn degenerate_schedule_is_flagged_not_run() {
        // c1 = 0.95 keeps the feasibility inequality alive but pushes t_1
        // below zero.
        let p = LinesParams::new(0.5, 0.8, 0.95, 0.5).unwrap();
        let cfg = EventProbConfig::new(p, vec![1], 10, 9);
        let out = estimate_event_probs(&cfg).unwrap();
        assert_eq!(out[0].schedule, None);
        assert_eq!(out[0].a_summary.verdict, Verdict::Indeterminate);
        assert!(out[0].a_summary.detail.contains("degenerate"));
    }

    #[test]
    fn infeasible_floor_is_flagged_not_run() {
        let cfg = EventProbConfig::new(params(), vec![8], 10, 9);
        let out = estimate_event_probs(&cfg).unwrap();
        let a = &out[0].a_summary;
        assert_eq!(a.verdict, Verdict::Indeterminate);
        assert!(a.detail.contains("feasibility_threshold"), "{}", a.detail);
        assert!(a.estimate.is_none());
        // The floor at line 8 is enormous: t_8 = 3 sqrt(8) - 1 and
        // q_8 = e^(t_8 (8^0.5 - out rate)) / 64 is north of 1e7.
        assert!(out[0].schedule.unwrap().threshold > 1e7);
    }

    #[test]
    fn small_line_estimates_probabilities() {
        let cfg = EventProbConfig::new(params(), vec![2], 60, 1234);
        let out = estimate_event_probs(&cfg).unwrap();
        let a = &out[0].a_summary;
        assert!(a.replicates > 30, "most runs should reach line 2: {}", a.detail);
        let est = a.estimate.unwrap();
        assert!((0.0..=1.0).contains(&est));
        assert!(a.ci_low.unwrap() <= est && est <= a.ci_high.unwrap());
        let b = &out[0].b_summary;
        assert!((b.oracle_value.unwrap() - (1.0 - (2.0 / std::f64::consts::E).powi(2))).abs() < 1e-15);
    }

    #[test]
    fn trend_summary_flags_decrease() {
        let cfg = EventProbConfig::new(params(), vec![2], 40, 77);
        let mut out = estimate_event_probs(&cfg).unwrap();
        let mut fake = out[0].clone();
        fake.j = 4;
        fake.a_summary.estimate = Some(out[0].a_summary.estimate.unwrap() - 0.2);
        out.push(fake);
        let trend = event_trend_summary(&out);
        assert_eq!(trend.verdict, Verdict::Fail);
        assert!(trend.detail.contains("dropped") || trend.detail.contains("below"));
    }
}
