//! Branching compound Poisson process on the half line.
//!
//! Every particle moves by positive heavy-tailed jumps at a constant rate
//! and splits in two at rate (ln(1 + x))^gamma at position x. Two comparison
//! processes used to sandwich the growth are provided as well: a lines model
//! whose jump kernel lower-bounds the strip jumps, and a constant-rate
//! dominator pinned to one strip.

use std::collections::BTreeMap;

use rand::Rng;

use crate::heavy_tail::JumpMeasure;
use crate::lines::{sample_grid, LinesSimConfig, LinesTrajectory};
use crate::rng::{exp_time, seeded_rng};
use crate::{analytic, lines, require_open_unit, Error, Result};

/// Index of the strip [e^n, e^(n+1)) containing x, or -1 below x = 1.
pub fn strip_index(x: f64) -> i64 {
    if x < 1.0 {
        -1
    } else {
        x.ln().floor() as i64
    }
}

/// Events between exact-total reconciliations of the cached rate tree.
const RECONCILE_MASK: u64 = 0xFFFF;

/// Fenwick tree over per-particle branch rates. Supports append, point
/// update, prefix sums and inverse-prefix selection in O(log n).
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn with_capacity(n: usize) -> Self {
        Fenwick { tree: Vec::with_capacity(n) }
    }

    fn len(&self) -> usize {
        self.tree.len()
    }

    fn push(&mut self, value: f64) {
        // New node i (1-based) covers (i - lowbit(i), i]; fold in the
        // sibling blocks already stored.
        let i = self.tree.len() + 1;
        let lowbit = i & i.wrapping_neg();
        let mut sum = value;
        let mut j = 1usize;
        while j < lowbit {
            sum += self.tree[i - 1 - j];
            j <<= 1;
        }
        self.tree.push(sum);
    }

    fn add(&mut self, index: usize, delta: f64) {
        let mut i = index + 1;
        while i <= self.tree.len() {
            self.tree[i - 1] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        self.prefix(self.tree.len())
    }

    /// Sum of the first `count` values.
    fn prefix(&self, count: usize) -> f64 {
        let mut i = count;
        let mut sum = 0.0;
        while i > 0 {
            sum += self.tree[i - 1];
            i -= i & i.wrapping_neg();
        }
        sum
    }

    /// Smallest index whose prefix sum exceeds `target`. Clamps to the last
    /// element when float drift pushes `target` past the stored total.
    fn select(&self, target: f64) -> usize {
        let n = self.tree.len();
        let mut pos = 0usize;
        let mut rem = target;
        let mut mask = n.next_power_of_two();
        while mask > 0 {
            let next = pos + mask;
            if next <= n && self.tree[next - 1] <= rem {
                pos = next;
                rem -= self.tree[next - 1];
            }
            mask >>= 1;
        }
        pos.min(n - 1)
    }

    fn rebuild(&mut self, values: &[f64]) {
        self.tree.clear();
        for &v in values {
            self.push(v);
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpatialSimConfig {
    pub measure: JumpMeasure,
    pub gamma: f64,
    pub horizon: f64,
    /// Halt once the population reaches this size.
    pub cap: u64,
    pub seed: u64,
    pub sample_points: usize,
    pub initial_position: f64,
    pub movement_enabled: bool,
}

impl SpatialSimConfig {
    pub fn new(measure: JumpMeasure, gamma: f64, horizon: f64, seed: u64) -> Self {
        SpatialSimConfig {
            measure,
            gamma,
            horizon,
            cap: 1 << 20,
            seed,
            sample_points: 65,
            initial_position: 0.0,
            movement_enabled: true,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        require_open_unit("gamma", self.gamma)?;
        if !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(Error::bad_param("horizon", format!("must be finite and >= 0, got {}", self.horizon)));
        }
        if self.cap == 0 {
            return Err(Error::bad_param("cap", "population cap must admit the initial particle"));
        }
        if self.horizon > 0.0 && self.sample_points < 2 {
            return Err(Error::bad_param("sample_points", "need at least 2 grid points over a positive horizon"));
        }
        if !self.initial_position.is_finite() || self.initial_position < 0.0 {
            return Err(Error::bad_param(
                "initial_position",
                format!("must be finite and >= 0, got {}", self.initial_position),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SpatialTrajectory {
    pub sample_times: Vec<f64>,
    pub population_at: Vec<u64>,
    pub max_position_at: Vec<f64>,
    /// First time some particle sits in strip n >= 0. The starting strip, if
    /// any, is recorded at time zero.
    pub strip_first_hit: BTreeMap<u32, f64>,
    pub cap_hit: bool,
    /// Largest relative gap seen between the cached rate total and an exact
    /// resummation.
    pub rate_drift: f64,
    pub root_final_position: f64,
    pub seed: u64,
    /// Time the event loop stopped: the horizon, or earlier on cap.
    pub halted_at: f64,
}

impl SpatialTrajectory {
    pub fn population_at_time(&self, t: f64) -> Result<u64> {
        Ok(self.population_at[self.grid_slot(t)?])
    }

    pub fn max_position_at_time(&self, t: f64) -> Result<f64> {
        Ok(self.max_position_at[self.grid_slot(t)?])
    }

    fn grid_slot(&self, t: f64) -> Result<usize> {
        let horizon = *self.sample_times.last().unwrap();
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::BeyondHorizon { t, horizon });
        }
        Ok(self.sample_times.partition_point(|&s| s <= t) - 1)
    }
}

/// Branch rate at position x.
fn branch_rate_at(x: f64, gamma: f64) -> f64 {
    x.ln_1p().powf(gamma)
}

/// Runs the branching compound Poisson process from one particle.
///
/// Movement and branching compete as exponential clocks off the current
/// rate totals; by memorylessness this is equivalent to per-particle clocks.
/// Branch selection is proportional to cached rates through a Fenwick tree,
/// rebuilt periodically to shed float drift.
pub fn simulate_spatial(config: &SpatialSimConfig) -> Result<SpatialTrajectory> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let grid = sample_grid(config.horizon, config.sample_points);
    let gamma = config.gamma;
    let eta = if config.movement_enabled { config.measure.eta() } else { 0.0 };

    let mut positions = vec![config.initial_position];
    let mut rates = vec![branch_rate_at(config.initial_position, gamma)];
    let mut fen = Fenwick::with_capacity(64);
    fen.push(rates[0]);
    let mut total_branch = rates[0];

    let mut population_at = Vec::with_capacity(grid.len());
    let mut max_position_at = Vec::with_capacity(grid.len());
    let mut grid_idx = 0usize;
    let mut strip_first_hit = BTreeMap::new();
    if let Ok(s) = u32::try_from(strip_index(config.initial_position)) {
        strip_first_hit.insert(s, 0.0);
    }

    let mut max_pos = config.initial_position;
    let mut now = 0.0f64;
    let mut cap_hit = false;
    let mut rate_drift = 0.0f64;
    let mut events = 0u64;

    loop {
        let n = positions.len();
        let total_move = eta * n as f64;
        let total = total_branch + total_move;
        if total <= 0.0 {
            now = config.horizon;
            break;
        }
        let t_next = now + exp_time(&mut rng, total);
        if t_next > config.horizon {
            now = config.horizon;
            break;
        }
        while grid_idx < grid.len() && grid[grid_idx] < t_next {
            population_at.push(n as u64);
            max_position_at.push(max_pos);
            grid_idx += 1;
        }
        now = t_next;
        let u = rng.random::<f64>() * total;
        if u < total_branch {
            let idx = fen.select(u);
            positions.push(positions[idx]);
            rates.push(rates[idx]);
            fen.push(rates[idx]);
            total_branch += rates[idx];
            if positions.len() as u64 >= config.cap {
                cap_hit = true;
                break;
            }
        } else {
            let idx = rng.random_range(0..n);
            let new_pos = positions[idx] + config.measure.sample_jump(&mut rng);
            let new_rate = branch_rate_at(new_pos, gamma);
            fen.add(idx, new_rate - rates[idx]);
            total_branch += new_rate - rates[idx];
            positions[idx] = new_pos;
            rates[idx] = new_rate;
            if new_pos > max_pos {
                max_pos = new_pos;
            }
            let strip = strip_index(new_pos);
            if let Ok(s) = u32::try_from(strip) {
                strip_first_hit.entry(s).or_insert(now);
                // In strip s the rate is pinched between the strip bounds.
                debug_assert!(rates[idx] >= (strip as f64).powf(gamma));
                debug_assert!(rates[idx] <= 2.0 * ((strip + 1) as f64).powf(gamma));
            }
        }

        events += 1;
        if events & RECONCILE_MASK == 0 {
            debug_assert_eq!(fen.len(), positions.len());
            let exact: f64 = rates.iter().sum();
            let drift = (total_branch - exact).abs().max((fen.total() - exact).abs()) / exact.max(1.0);
            if drift > rate_drift {
                rate_drift = drift;
            }
            fen.rebuild(&rates);
            total_branch = exact;
        }
    }

    while grid_idx < grid.len() {
        population_at.push(positions.len() as u64);
        max_position_at.push(max_pos);
        grid_idx += 1;
    }

    Ok(SpatialTrajectory {
        sample_times: grid,
        population_at,
        max_position_at,
        strip_first_hit,
        cap_hit,
        rate_drift,
        root_final_position: positions[0],
        seed: config.seed,
        halted_at: now,
    })
}

/// Runs the constant-rate dominator for strip `j`: every particle branches
/// at rate 2 j^gamma regardless of position, while movement stays the same
/// compound Poisson dynamics. Selection is uniform for both event kinds.
pub fn simulate_const_rate_dominator(config: &SpatialSimConfig, j: u32) -> Result<SpatialTrajectory> {
    config.validate()?;
    if j == 0 {
        return Err(Error::bad_param("j", "strip index must be >= 1"));
    }
    let mut rng = seeded_rng(config.seed);
    let grid = sample_grid(config.horizon, config.sample_points);
    let eta = if config.movement_enabled { config.measure.eta() } else { 0.0 };
    let branch = 2.0 * f64::from(j).powf(config.gamma);

    let mut positions = vec![config.initial_position];
    let mut population_at = Vec::with_capacity(grid.len());
    let mut max_position_at = Vec::with_capacity(grid.len());
    let mut grid_idx = 0usize;
    let mut strip_first_hit = BTreeMap::new();
    if let Ok(s) = u32::try_from(strip_index(config.initial_position)) {
        strip_first_hit.insert(s, 0.0);
    }

    let mut max_pos = config.initial_position;
    let mut now = 0.0f64;
    let mut cap_hit = false;

    loop {
        let n = positions.len() as f64;
        let total_branch = branch * n;
        let total = total_branch + eta * n;
        let t_next = now + exp_time(&mut rng, total);
        if t_next > config.horizon {
            now = config.horizon;
            break;
        }
        while grid_idx < grid.len() && grid[grid_idx] < t_next {
            population_at.push(positions.len() as u64);
            max_position_at.push(max_pos);
            grid_idx += 1;
        }
        now = t_next;
        if rng.random::<f64>() * total < total_branch {
            let idx = rng.random_range(0..positions.len());
            let pos = positions[idx];
            positions.push(pos);
            if positions.len() as u64 >= config.cap {
                cap_hit = true;
                break;
            }
        } else {
            let idx = rng.random_range(0..positions.len());
            let new_pos = positions[idx] + config.measure.sample_jump(&mut rng);
            positions[idx] = new_pos;
            if new_pos > max_pos {
                max_pos = new_pos;
            }
            if let Ok(s) = u32::try_from(strip_index(new_pos)) {
                strip_first_hit.entry(s).or_insert(now);
            }
        }
    }

    while grid_idx < grid.len() {
        population_at.push(positions.len() as u64);
        max_position_at.push(max_pos);
        grid_idx += 1;
    }

    Ok(SpatialTrajectory {
        sample_times: grid,
        population_at,
        max_position_at,
        strip_first_hit,
        cap_hit,
        rate_drift: 0.0,
        root_final_position: positions[0],
        seed: config.seed,
        halted_at: now,
    })
}

/// Lines configuration whose jump kernel lower-bounds the spatial strip
/// jumps: the rate of reaching line j' OR HIGHER is e^(-j' d alpha). The
/// per-target rates are the increments of that geometric tail, so the plain
/// lines kernel is scaled down by 1 - e^(-d alpha).
///
/// The schedule constants are placeholders; this configuration drives raw
/// simulation, not the schedule-based event estimates.
pub fn dominated_lines_config(
    d: f64,
    alpha: f64,
    gamma: f64,
    horizon: f64,
    cap: u64,
    seed: u64,
    sample_points: usize,
) -> Result<LinesSimConfig> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::bad_param("d", format!("strip coefficient must be positive, got {d}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::bad_param("alpha", format!("tail exponent must be positive, got {alpha}")));
    }
    let c = (-d * alpha).exp();
    let params = analytic::LinesParams::new(gamma, c, 3.0, 0.5)?;
    let mut config = LinesSimConfig::new(params, horizon, cap, seed);
    config.sample_points = sample_points;
    config.jump_scale = 1.0 - c;
    Ok(config)
}

/// Runs the dominated lines process: line j branches at rate j^gamma and
/// reaches line j' or higher at rate e^(-j' d alpha).
pub fn simulate_dominated_lines(
    d: f64,
    alpha: f64,
    gamma: f64,
    horizon: f64,
    cap: u64,
    seed: u64,
    sample_points: usize,
) -> Result<LinesTrajectory> {
    let config = dominated_lines_config(d, alpha, gamma, horizon, cap, seed, sample_points)?;
    lines::simulate_lines(&config)
}
