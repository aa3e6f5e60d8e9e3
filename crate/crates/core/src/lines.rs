//! Exact event-driven simulation of the lines model.
//!
//! State is the per-line particle count; particles on line `j` branch at
//! rate `j^gamma` and jump to line `j + k` at rate `c^(j+k)`, so the total
//! per-particle out-rate from `j` is `c^(j+1)/(1-c)`. Particles are
//! exchangeable within a line, which is why aggregated counts reproduce the
//! particle system exactly.

use std::collections::BTreeMap;

use rand::Rng;

use crate::analytic::LinesParams;
use crate::rng::{exp_time, geometric_offset, seeded_rng};
use crate::{Error, Result};

/// How often the cached total rates are recomputed from scratch.
const RECONCILE_MASK: u64 = 0xFFFF;

/// Observation hook for conditioned experiments: when `line` is first hit
/// (at time Y), the count on that line is recorded at Y + `delay`, and a
/// jump from `line` to exactly `target` is watched for during
/// (Y + delay, Y + delay + window].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineWatch {
    pub line: u32,
    pub delay: f64,
    pub window: f64,
    /// Landing line whose occurrence is recorded; None disables jump
    /// matching.
    pub target: Option<u32>,
    /// Give up if `line` has not been hit by this time.
    pub hit_deadline: f64,
}

impl LineWatch {
    pub fn new(line: u32, delay: f64, window: f64, target: Option<u32>) -> Self {
        LineWatch { line, delay, window, target, hit_deadline: f64::INFINITY }
    }
}

/// What the watch saw.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WatchReport {
    pub hit_time: Option<f64>,
    pub mark: Option<f64>,
    pub count_at_mark: Option<u64>,
    pub target_jump_seen: bool,
    /// True when the whole watch window elapsed inside the simulated span.
    pub complete: bool,
}

/// One upward jump, recorded when `record_jumps` is on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub t: f64,
    pub from: u32,
    pub to: u32,
}

#[derive(Debug, Clone)]
pub struct LinesSimConfig {
    pub params: LinesParams,
    pub horizon: f64,
    pub cap: u64,
    pub seed: u64,
    /// Size of the uniform sample grid on [0, horizon]; a zero horizon
    /// collapses it to the single point 0.
    pub sample_points: usize,
    pub start_line: u32,
    pub branching_enabled: bool,
    pub jumps_enabled: bool,
    pub record_jumps: bool,
    /// Multiplier on every jump rate. The offset law is unchanged; only the
    /// waiting times stretch. Comparison processes use this to match a tail
    /// rate instead of a per-target rate.
    pub jump_scale: f64,
    pub watch: Option<LineWatch>,
    /// Stop simulating once the watch window has fully elapsed.
    pub halt_after_watch: bool,
}

impl LinesSimConfig {
    pub fn new(params: LinesParams, horizon: f64, cap: u64, seed: u64) -> Self {
        LinesSimConfig {
            params,
            horizon,
            cap,
            seed,
            sample_points: 65,
            start_line: 1,
            branching_enabled: true,
            jumps_enabled: true,
            record_jumps: false,
            jump_scale: 1.0,
            watch: None,
            halt_after_watch: false,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(Error::bad_param("horizon", format!("must be finite and >= 0, got {}", self.horizon)));
        }
        if self.cap == 0 {
            return Err(Error::bad_param("cap", "population cap must, at minimum, admit the initial particle"));
        }
        if self.sample_points < 2 && self.horizon > 0.0 {
            return Err(Error::bad_param("sample_points", "need at least 2 grid points on a positive horizon"));
        }
        if self.start_line == 0 {
            return Err(Error::bad_param("start_line", "lines are indexed from 1"));
        }
        if !self.jump_scale.is_finite() || self.jump_scale <= 0.0 {
            return Err(Error::bad_param(
                "jump_scale",
                format!("must be finite and > 0, got {}", self.jump_scale),
            ));
        }
        if let Some(w) = &self.watch {
            if w.line == 0 {
                return Err(Error::bad_param("watch.line", "lines are indexed from 1"));
            }
            if !(w.delay >= 0.0) || !(w.window >= 0.0) {
                return Err(Error::bad_param("watch", "delay and window must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Sampled trajectory of one lines-model run.
#[derive(Debug, Clone)]
pub struct LinesTrajectory {
    pub sample_times: Vec<f64>,
    pub population_at: Vec<u64>,
    pub max_line_at: Vec<u32>,
    /// First arrival time per line; the start line is present at 0.
    pub first_hit: BTreeMap<u32, f64>,
    pub cap_hit: bool,
    /// Largest relative disagreement seen between the incrementally
    /// maintained total rates and a fresh recomputation.
    pub rate_drift: f64,
    pub jumps: Vec<JumpEvent>,
    pub watch: Option<WatchReport>,
    pub seed: u64,
    /// Time at which the event loop stopped (horizon unless capped, frozen,
    /// or halted by a watch).
    pub halted_at: f64,
}

impl LinesTrajectory {
    /// Highest occupied line at the last grid point <= t.
    pub fn max_line_at_time(&self, t: f64) -> Result<u32> {
        let horizon = *self.sample_times.last().expect("grid is never empty");
        if t > horizon || t < 0.0 {
            return Err(Error::BeyondHorizon { t, horizon });
        }
        let idx = self.sample_times.partition_point(|&s| s <= t);
        Ok(self.max_line_at[idx - 1])
    }

    /// Population at the last grid point <= t.
    pub fn population_at_time(&self, t: f64) -> Result<u64> {
        let horizon = *self.sample_times.last().expect("grid is never empty");
        if t > horizon || t < 0.0 {
            return Err(Error::BeyondHorizon { t, horizon });
        }
        let idx = self.sample_times.partition_point(|&s| s <= t);
        Ok(self.population_at[idx - 1])
    }
}

/// Uniform grid on [0, horizon] including both endpoints.
pub(crate) fn sample_grid(horizon: f64, points: usize) -> Vec<f64> {
    if horizon == 0.0 {
        return vec![0.0];
    }
    let n = points.max(2);
    (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect()
}

struct LinesState {
    counts: Vec<u64>,
    branch: Vec<f64>,
    out: Vec<f64>,
    total_branch: f64,
    total_jump: f64,
    population: u64,
    max_line: u32,
}

impl LinesState {
    fn new(config: &LinesSimConfig) -> Self {
        let start = config.start_line;
        let mut s = LinesState {
            counts: Vec::new(),
            branch: Vec::new(),
            out: Vec::new(),
            total_branch: 0.0,
            total_jump: 0.0,
            population: 1,
            max_line: start,
        };
        s.ensure_line(config, start);
        s.counts[start as usize] = 1;
        s.total_branch = s.branch[start as usize];
        s.total_jump = s.out[start as usize];
        s
    }

    fn ensure_line(&mut self, config: &LinesSimConfig, line: u32) {
        while self.counts.len() <= line as usize {
            let j = self.counts.len() as u32;
            self.counts.push(0);
            self.branch.push(if config.branching_enabled && j >= 1 {
                config.params.branch_rate(j)
            } else {
                0.0
            });
            self.out.push(if config.jumps_enabled && j >= 1 {
                config.jump_scale * config.params.out_rate(j)
            } else {
                0.0
            });
        }
    }

    fn recompute_totals(&self) -> (f64, f64) {
        let mut b = 0.0;
        let mut j = 0.0;
        for (line, &n) in self.counts.iter().enumerate() {
            if n > 0 {
                b += n as f64 * self.branch[line];
                j += n as f64 * self.out[line];
            }
        }
        (b, j)
    }

    /// Line holding the selected branch event: first line where the running
    /// sum of count * rate exceeds `u`. Falls back to the last occupied line
    /// if floating-point drift pushes `u` past the sum.
    fn pick(&self, rates: &[f64], mut u: f64) -> u32 {
        let mut fallback = self.max_line;
        for (line, &n) in self.counts.iter().enumerate() {
            if n == 0 || rates[line] == 0.0 {
                continue;
            }
            let mass = n as f64 * rates[line];
            if u < mass {
                return line as u32;
            }
            u -= mass;
            fallback = line as u32;
        }
        fallback
    }
}

/// Runs the lines model from a single particle.
pub fn simulate_lines(config: &LinesSimConfig) -> Result<LinesTrajectory> {
    config.validate()?;
    let params = config.params;
    let mut rng = seeded_rng(config.seed);

    let grid = sample_grid(config.horizon, config.sample_points);
    let mut population_at = Vec::with_capacity(grid.len());
    let mut max_line_at = Vec::with_capacity(grid.len());
    let mut grid_idx = 0usize;

    let mut state = LinesState::new(config);
    let mut first_hit = BTreeMap::new();
    first_hit.insert(config.start_line, 0.0);

    let mut jumps = Vec::new();
    let mut cap_hit = false;
    let mut rate_drift = 0.0f64;
    let mut now = 0.0f64;
    let mut events = 0u64;

    // Watch bookkeeping. The mark snapshot is exact because the state is
    // constant between events: the first event time past the mark sees the
    // state that held at the mark itself.
    let watch = config.watch;
    let mut report = watch.map(|_| WatchReport::default());
    let mut mark = f64::INFINITY;
    let mut window_end = f64::INFINITY;
    if let (Some(w), Some(rep)) = (&watch, report.as_mut()) {
        if w.line == config.start_line {
            rep.hit_time = Some(0.0);
            mark = w.delay;
            window_end = mark + w.window;
            rep.mark = Some(mark);
        }
    }

    loop {
        let total = state.total_branch + state.total_jump;
        if total <= 0.0 {
            // Frozen state: nothing will ever happen again.
            now = config.horizon;
            break;
        }
        let t_next = now + exp_time(&mut rng, total);

        if let (Some(w), Some(rep)) = (&watch, report.as_mut()) {
            if rep.count_at_mark.is_none() && mark < t_next && mark <= config.horizon {
                state.ensure_line(config, w.line);
                rep.count_at_mark = Some(state.counts[w.line as usize]);
            }
            if rep.hit_time.is_none() && t_next > w.hit_deadline {
                now = w.hit_deadline.min(config.horizon);
                break;
            }
        }

        if t_next > config.horizon {
            now = config.horizon;
            break;
        }
        while grid_idx < grid.len() && grid[grid_idx] < t_next {
            population_at.push(state.population);
            max_line_at.push(state.max_line);
            grid_idx += 1;
        }
        now = t_next;
        events += 1;

        let u = rng.random::<f64>() * total;
        if u < state.total_branch {
            let line = state.pick(&state.branch, u);
            state.counts[line as usize] += 1;
            state.population += 1;
            state.total_branch += state.branch[line as usize];
            state.total_jump += state.out[line as usize];
        } else {
            let from = state.pick(&state.out, u - state.total_branch);
            let offset = geometric_offset(&mut rng, params.c);
            let to = from + offset;
            state.ensure_line(config, to);
            state.counts[from as usize] -= 1;
            state.counts[to as usize] += 1;
            state.total_branch += state.branch[to as usize] - state.branch[from as usize];
            state.total_jump += state.out[to as usize] - state.out[from as usize];
            if to > state.max_line {
                state.max_line = to;
            }
            if config.record_jumps {
                jumps.push(JumpEvent { t: now, from, to });
            }
            if let (Some(w), Some(rep)) = (&watch, report.as_mut()) {
                if rep.hit_time.is_none() && to == w.line {
                    rep.hit_time = Some(now);
                    mark = now + w.delay;
                    window_end = mark + w.window;
                    rep.mark = Some(mark);
                } else if w.target == Some(to) && from == w.line && now > mark && now <= window_end {
                    rep.target_jump_seen = true;
                }
            }
            first_hit.entry(to).or_insert(now);
        }

        if state.population >= config.cap {
            cap_hit = true;
            break;
        }
        if config.halt_after_watch {
            if let Some(rep) = report.as_ref() {
                if rep.count_at_mark.is_some() && now > window_end {
                    break;
                }
            }
        }
        if events & RECONCILE_MASK == 0 {
            let (b, j) = state.recompute_totals();
            let scale = (b + j).max(f64::MIN_POSITIVE);
            let diff = ((state.total_branch - b).abs() + (state.total_jump - j).abs()) / scale;
            rate_drift = rate_drift.max(diff);
            state.total_branch = b;
            state.total_jump = j;
        }
    }

    // Remaining grid points see the final state (exact when the run reached
    // the horizon; after an early halt they repeat the halt state).
    while grid_idx < grid.len() {
        population_at.push(state.population);
        max_line_at.push(state.max_line);
        grid_idx += 1;
    }

    if let Some(rep) = report.as_mut() {
        rep.complete = rep.count_at_mark.is_some() && now >= window_end;
    }

    Ok(LinesTrajectory {
        sample_times: grid,
        population_at,
        max_line_at,
        first_hit,
        cap_hit,
        rate_drift,
        jumps,
        watch: report,
        seed: config.seed,
        halted_at: now,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn params() -> LinesParams {
        LinesParams::new(0.5, 0.5, 3.0, 0.5).unwrap()
    }

    #[test]
    fn zero_horizon_is_a_single_particle_row() {
        let cfg = LinesSimConfig::new(params(), 0.0, 1000, 1);
        let t = simulate_lines(&cfg).unwrap();
        assert_eq!(t.sample_times, vec![0.0]);
        assert_eq!(t.population_at, vec![1]);
        assert_eq!(t.max_line_at, vec![1]);
        assert_eq!(t.first_hit.get(&1), Some(&0.0));
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = LinesSimConfig::new(params(), 1.0, 1000, 1);
        cfg.cap = 0;
        assert!(simulate_lines(&cfg).is_err());
        let mut cfg = LinesSimConfig::new(params(), -1.0, 1000, 1);
        cfg.cap = 1000;
        assert!(simulate_lines(&cfg).is_err());
        let mut cfg = LinesSimConfig::new(params(), 1.0, 1000, 1);
        cfg.start_line = 0;
        assert!(simulate_lines(&cfg).is_err());
    }

    #[test]
    fn same_seed_same_trajectory() {
        let mut cfg = LinesSimConfig::new(params(), 6.0, 100_000, 77);
        cfg.record_jumps = true;
        let a = simulate_lines(&cfg).unwrap();
        let b = simulate_lines(&cfg).unwrap();
        assert_eq!(a.population_at, b.population_at);
        assert_eq!(a.max_line_at, b.max_line_at);
        assert_eq!(a.first_hit, b.first_hit);
        assert_eq!(a.jumps.len(), b.jumps.len());
    }

    #[test]
    fn max_line_is_nondecreasing_and_population_counts_branches() {
        let mut cfg = LinesSimConfig::new(params(), 8.0, 1_000_000, 3);
        cfg.record_jumps = true;
        let t = simulate_lines(&cfg).unwrap();
        for w in t.max_line_at.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in t.population_at.windows(2) {
            assert!(w[1] >= w[0]);
        }
        // Jumps conserve population, branches add one: the final population
        // equals 1 + number of branch events.
        assert!(*t.population_at.last().unwrap() >= 1);
    }

    #[test]
    fn jumps_disabled_keeps_one_line() {
        let mut cfg = LinesSimConfig::new(params(), 5.0, 100_000, 9);
        cfg.jumps_enabled = false;
        let t = simulate_lines(&cfg).unwrap();
        assert_eq!(*t.max_line_at.last().unwrap(), 1);
        assert_eq!(t.first_hit.len(), 1);
    }

    #[test]
    fn single_line_colony_mean_matches_growth() {
        // With jumps off, line 1 is a pure-birth colony at rate 1:
        // population mean at t = 2 is e^2.
        let reps = 20_000u64;
        let mut sum = 0.0;
        for r in 0..reps {
            let mut cfg = LinesSimConfig::new(params(), 2.0, 1_000_000, crate::rng::replicate_seed(505, r));
            cfg.jumps_enabled = false;
            cfg.sample_points = 2;
            let t = simulate_lines(&cfg).unwrap();
            sum += *t.population_at.last().unwrap() as f64;
        }
        let mean = sum / reps as f64;
        let expected = 2f64.exp();
        assert!((mean - expected).abs() / expected < 0.03, "mean {mean}");
    }

    #[test]
    fn branching_disabled_first_jump_time_is_exponential() {
        // A lone particle on line 1 leaves it at rate c^2/(1-c) = 0.5.
        let reps = 20_000u64;
        let mut sum = 0.0;
        let mut n = 0u64;
        for r in 0..reps {
            let mut cfg = LinesSimConfig::new(params(), 60.0, 10, crate::rng::replicate_seed(606, r));
            cfg.branching_enabled = false;
            cfg.record_jumps = true;
            cfg.sample_points = 2;
            let t = simulate_lines(&cfg).unwrap();
            if let Some(first) = t.jumps.first() {
                assert_eq!(first.from, 1);
                sum += first.t;
                n += 1;
            }
        }
        // Exp(0.5) over a horizon of 60: misses are vanishingly rare.
        assert!(n as f64 > reps as f64 * 0.999);
        let mean = sum / n as f64;
        assert!((mean - 2.0).abs() / 2.0 < 0.03, "mean {mean}");
    }

    #[test]
    fn jump_offsets_follow_geometric_law() {
        let mut counts = std::collections::BTreeMap::new();
        let mut total = 0u64;
        let mut r = 0u64;
        while total < 20_000 {
            let mut cfg = LinesSimConfig::new(params(), 7.0, 200_000, crate::rng::replicate_seed(707, r));
            cfg.record_jumps = true;
            cfg.sample_points = 2;
            let t = simulate_lines(&cfg).unwrap();
            for j in &t.jumps {
                *counts.entry((j.to - j.from) as u64).or_insert(0u64) += 1;
                total += 1;
            }
            r += 1;
        }
        let tv = stats::total_variation(&counts, total, 1, |k| {
            0.5 * 0.5f64.powi(k as i32 - 1)
        });
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn cap_halts_the_run() {
        let cfg = LinesSimConfig::new(params(), 50.0, 64, 21);
        let t = simulate_lines(&cfg).unwrap();
        assert!(t.cap_hit);
        assert!(t.halted_at < 50.0);
        assert_eq!(*t.population_at.last().unwrap(), 64);
    }

    #[test]
    fn watch_counts_the_marked_line() {
        // Watch line 1 from the start with zero delay: the count at the mark
        // is the initial particle.
        let mut cfg = LinesSimConfig::new(params(), 3.0, 100_000, 13);
        cfg.watch = Some(LineWatch::new(1, 0.5, 1.0, Some(2)));
        let t = simulate_lines(&cfg).unwrap();
        let rep = t.watch.unwrap();
        assert_eq!(rep.hit_time, Some(0.0));
        assert_eq!(rep.mark, Some(0.5));
        assert!(rep.count_at_mark.is_some());
        assert!(rep.complete);
    }

    #[test]
    fn watch_deadline_halts_unhit_line() {
        let mut cfg = LinesSimConfig::new(params(), 500.0, u64::MAX, 17);
        // Line 40 is unreachable in 1 time unit; the deadline stops the run.
        let mut w = LineWatch::new(40, 1.0, 1.0, Some(80));
        w.hit_deadline = 1.0;
        cfg.watch = Some(w);
        cfg.halt_after_watch = true;
        let t = simulate_lines(&cfg).unwrap();
        let rep = t.watch.unwrap();
        assert_eq!(rep.hit_time, None);
        assert!(!rep.complete);
        assert!(t.halted_at <= 1.0 + 1e-9);
    }

    #[test]
    fn max_line_lookup_and_horizon_guard() {
        let cfg = LinesSimConfig::new(params(), 4.0, 100_000, 23);
        let t = simulate_lines(&cfg).unwrap();
        assert_eq!(t.max_line_at_time(0.0).unwrap(), 1);
        assert!(t.max_line_at_time(4.0).is_ok());
        assert!(matches!(t.max_line_at_time(4.5), Err(Error::BeyondHorizon { .. })));
    }

    #[test]
    fn rate_drift_stays_tiny() {
        let cfg = LinesSimConfig::new(params(), 10.0, 2_000_000, 29);
        let t = simulate_lines(&cfg).unwrap();
        assert!(t.rate_drift < 1e-9, "drift {}", t.rate_drift);
    }
}
