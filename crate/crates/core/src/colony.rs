//! Constant-rate colonies: the population of one line viewed on its own.
//!
//! A particle in such a colony splits in two at a fixed birth rate and is
//! removed at a fixed death rate (for a line of the lines model the removal
//! is the jump away from the line). Three views are provided: plain counts,
//! a coupled pair tracking removals against an immortal twin, and a full
//! genealogy for descent-line statistics.

use rand::Rng;

use crate::rng::{exp_time, replicate_seed, seeded_rng};
use crate::{require_nonnegative, require_positive, Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ColonyOptions {
    pub birth: f64,
    pub death: f64,
    pub horizon: f64,
    /// Halt once the population reaches this size. Doubles as an escape
    /// level: a supercritical colony that hits a high cap has, to double
    /// precision, survived forever (die-out chance (death/birth)^cap).
    pub cap: u64,
    pub seed: u64,
    pub sample_points: usize,
}

impl ColonyOptions {
    pub fn new(birth: f64, death: f64, horizon: f64, seed: u64) -> Self {
        ColonyOptions { birth, death, horizon, cap: 1 << 20, seed, sample_points: 2 }
    }

    fn validate(&self) -> Result<()> {
        require_nonnegative("birth", self.birth)?;
        require_nonnegative("death", self.death)?;
        if !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(Error::bad_param("horizon", format!("must be finite and >= 0, got {}", self.horizon)));
        }
        if self.cap == 0 {
            return Err(Error::bad_param("cap", "population cap must admit the initial particle"));
        }
        Ok(())
    }
}

/// Count path of one colony.
#[derive(Debug, Clone)]
pub struct ColonyPath {
    pub sample_times: Vec<f64>,
    pub population_at: Vec<u64>,
    /// Cumulative removals by each grid time.
    pub deaths_at: Vec<u64>,
    pub extinct_at: Option<f64>,
    pub cap_hit: bool,
    pub final_population: u64,
    pub seed: u64,
}

impl ColonyPath {
    pub fn survived(&self) -> bool {
        self.final_population > 0
    }
}

/// Simulates a colony from one particle: births at rate `birth * n`, deaths
/// at rate `death * n`, exact in distribution.
pub fn simulate_colony(opts: &ColonyOptions) -> Result<ColonyPath> {
    opts.validate()?;
    let mut rng = seeded_rng(opts.seed);
    let grid = crate::lines::sample_grid(opts.horizon, opts.sample_points);
    let mut population_at = Vec::with_capacity(grid.len());
    let mut deaths_at = Vec::with_capacity(grid.len());
    let mut grid_idx = 0usize;

    let per_head = opts.birth + opts.death;
    let p_birth = if per_head > 0.0 { opts.birth / per_head } else { 0.0 };
    let mut n = 1u64;
    let mut deaths = 0u64;
    let mut now = 0.0f64;
    let mut extinct_at = None;
    let mut cap_hit = false;

    loop {
        if n == 0 || per_head == 0.0 {
            break;
        }
        let t_next = now + exp_time(&mut rng, per_head * n as f64);
        if t_next > opts.horizon {
            break;
        }
        while grid_idx < grid.len() && grid[grid_idx] < t_next {
            population_at.push(n);
            deaths_at.push(deaths);
            grid_idx += 1;
        }
        now = t_next;
        if rng.random::<f64>() < p_birth {
            n += 1;
            if n >= opts.cap {
                cap_hit = true;
                break;
            }
        } else {
            n -= 1;
            deaths += 1;
            if n == 0 {
                extinct_at = Some(now);
            }
        }
    }

    while grid_idx < grid.len() {
        population_at.push(n);
        deaths_at.push(deaths);
        grid_idx += 1;
    }

    Ok(ColonyPath {
        sample_times: grid,
        population_at,
        deaths_at,
        extinct_at,
        cap_hit,
        final_population: n,
        seed: opts.seed,
    })
}

/// Colony for line `j` of the lines model: births at the branch rate,
/// removals at the total jump-away rate.
pub fn simulate_line_colony(
    j: u32,
    gamma: f64,
    c: f64,
    horizon: f64,
    cap: u64,
    seed: u64,
    sample_points: usize,
) -> Result<ColonyPath> {
    let (birth, death) = crate::analytic::line_colony_rates(j, gamma, c)?;
    let mut opts = ColonyOptions::new(birth, death, horizon, seed);
    opts.cap = cap;
    opts.sample_points = sample_points;
    simulate_colony(&opts)
}

/// A colony coupled with its immortal twin. Every particle, live or ghost,
/// births at the same rate; removals strike live particles only and turn
/// them into ghosts. The twin (live + ghosts) is the same colony with
/// removals ignored, and the gap `ghosts` dominates the removal indicator
/// pathwise: each removal mints one ghost and ghosts never disappear.
#[derive(Debug, Clone)]
pub struct CoupledColonyPath {
    pub sample_times: Vec<f64>,
    pub live_at: Vec<u64>,
    pub immortal_at: Vec<u64>,
    pub removals_at: Vec<u64>,
    pub cap_hit: bool,
    pub seed: u64,
}

/// Simulates the coupled pair from one live particle.
pub fn simulate_coupled_colony(opts: &ColonyOptions) -> Result<CoupledColonyPath> {
    opts.validate()?;
    require_positive("birth", opts.birth)?;
    let mut rng = seeded_rng(opts.seed);
    let grid = crate::lines::sample_grid(opts.horizon, opts.sample_points);
    let mut live_at = Vec::with_capacity(grid.len());
    let mut immortal_at = Vec::with_capacity(grid.len());
    let mut removals_at = Vec::with_capacity(grid.len());
    let mut grid_idx = 0usize;

    let mut live = 1u64;
    let mut ghosts = 0u64;
    let mut removals = 0u64;
    let mut now = 0.0f64;
    let mut cap_hit = false;

    loop {
        let total_pop = live + ghosts;
        let birth_rate = opts.birth * total_pop as f64;
        let death_rate = opts.death * live as f64;
        let total = birth_rate + death_rate;
        if total <= 0.0 {
            break;
        }
        let t_next = now + exp_time(&mut rng, total);
        if t_next > opts.horizon {
            break;
        }
        while grid_idx < grid.len() && grid[grid_idx] < t_next {
            live_at.push(live);
            immortal_at.push(live + ghosts);
            removals_at.push(removals);
            grid_idx += 1;
        }
        now = t_next;
        if rng.random::<f64>() * total < birth_rate {
            // The parent is uniform over the twin's population; its class is
            // inherited by the child.
            if rng.random::<f64>() * (total_pop as f64) < live as f64 {
                live += 1;
            } else {
                ghosts += 1;
            }
            if live + ghosts >= opts.cap {
                cap_hit = true;
                break;
            }
        } else {
            live -= 1;
            ghosts += 1;
            removals += 1;
        }
    }

    while grid_idx < grid.len() {
        live_at.push(live);
        immortal_at.push(live + ghosts);
        removals_at.push(removals);
        grid_idx += 1;
    }

    Ok(CoupledColonyPath {
        sample_times: grid,
        live_at,
        immortal_at,
        removals_at,
        cap_hit,
        seed: opts.seed,
    })
}

/// Full genealogy of a colony run to a horizon. Nodes are indexed in birth
/// order, so every child has a larger index than its parent.
#[derive(Debug, Clone)]
pub struct ColonyTree {
    pub parent: Vec<Option<usize>>,
    pub birth_time: Vec<f64>,
    pub end_time: Vec<f64>,
    pub fate: Vec<Fate>,
    pub horizon: f64,
    pub cap_hit: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    /// Split into two children at `end_time`.
    Split,
    /// Removed at `end_time`.
    Died,
    /// Still alive when the run ended.
    Survived,
}

impl ColonyTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Whether node `v` is alive at time `t`.
    pub fn alive_at(&self, v: usize, t: f64) -> bool {
        if t < self.birth_time[v] {
            return false;
        }
        match self.fate[v] {
            Fate::Survived => t <= self.end_time[v],
            _ => t < self.end_time[v],
        }
    }

    pub fn population_at(&self, t: f64) -> u64 {
        (0..self.len()).filter(|&v| self.alive_at(v, t)).count() as u64
    }

    /// Whether any particle is alive at `t`.
    pub fn survives_to(&self, t: f64) -> bool {
        (0..self.len()).any(|v| self.alive_at(v, t))
    }

    /// Number of particles alive at `t` whose descent is still alive at
    /// `survival_horizon`. The horizon proxies "infinite line of descent",
    /// so it must dominate `t` comfortably; 5x is enforced.
    pub fn reduced_count(&self, t: f64, survival_horizon: f64) -> Result<u64> {
        if survival_horizon > self.horizon {
            return Err(Error::BeyondHorizon { t: survival_horizon, horizon: self.horizon });
        }
        if t > 0.0 && survival_horizon < 5.0 * t {
            return Err(Error::bad_param(
                "survival_horizon",
                format!("must be at least 5 * t = {} to stand in for eventual survival, got {survival_horizon}", 5.0 * t),
            ));
        }
        let n = self.len();
        let mut line_alive = vec![false; n];
        for v in (0..n).rev() {
            if self.alive_at(v, survival_horizon) {
                line_alive[v] = true;
            }
            if line_alive[v] {
                if let Some(p) = self.parent[v] {
                    line_alive[p] = true;
                }
            }
        }
        Ok((0..n).filter(|&v| self.alive_at(v, t) && line_alive[v]).count() as u64)
    }
}

/// Samples the reduced count at time `t`: how many particles alive at `t`
/// still have descendants alive at `survival_horizon`. The genealogy is only
/// built up to `t`; each survivor's line is then continued as a count-only
/// colony with an escape cap, which decides eventual survival exactly to
/// double precision once the cap is a few hundred.
pub fn sample_reduced_count(
    birth: f64,
    death: f64,
    t: f64,
    survival_horizon: f64,
    escape: u64,
    seed: u64,
) -> Result<u64> {
    if t > 0.0 && survival_horizon < 5.0 * t {
        return Err(Error::bad_param(
            "survival_horizon",
            format!("must be at least 5 * t = {} to stand in for eventual survival, got {survival_horizon}", 5.0 * t),
        ));
    }
    if escape < 2 {
        return Err(Error::bad_param("escape", "escape cap must exceed the lone founder"));
    }
    let opts = ColonyOptions::new(birth, death, t, seed);
    let tree = simulate_colony_tree(&opts)?;
    let rest = survival_horizon - t;
    let mut reduced = 0u64;
    let mut line = 0u64;
    for v in 0..tree.len() {
        if !tree.alive_at(v, t) {
            continue;
        }
        line += 1;
        let mut cont = ColonyOptions::new(birth, death, rest, replicate_seed(seed, line));
        cont.cap = escape;
        let path = simulate_colony(&cont)?;
        if path.cap_hit || path.final_population > 0 {
            reduced += 1;
        }
    }
    Ok(reduced)
}

/// Simulates the genealogy of a colony from one particle.
pub fn simulate_colony_tree(opts: &ColonyOptions) -> Result<ColonyTree> {
    opts.validate()?;
    let mut rng = seeded_rng(opts.seed);
    let per_head = opts.birth + opts.death;
    let p_birth = if per_head > 0.0 { opts.birth / per_head } else { 0.0 };

    let mut parent: Vec<Option<usize>> = vec![None];
    let mut birth_time = vec![0.0f64];
    let mut end_time = vec![f64::NAN];
    let mut fate = vec![Fate::Survived];
    let mut active: Vec<usize> = vec![0];
    let mut now = 0.0f64;
    let mut cap_hit = false;

    loop {
        if active.is_empty() || per_head == 0.0 {
            break;
        }
        let t_next = now + exp_time(&mut rng, per_head * active.len() as f64);
        if t_next > opts.horizon {
            break;
        }
        now = t_next;
        let slot = rng.random_range(0..active.len());
        let v = active.swap_remove(slot);
        end_time[v] = now;
        if rng.random::<f64>() < p_birth {
            fate[v] = Fate::Split;
            for _ in 0..2 {
                parent.push(Some(v));
                birth_time.push(now);
                end_time.push(f64::NAN);
                fate.push(Fate::Survived);
                active.push(parent.len() - 1);
            }
            if active.len() as u64 >= opts.cap {
                cap_hit = true;
                break;
            }
        } else {
            fate[v] = Fate::Died;
        }
    }
    for &v in &active {
        end_time[v] = opts.horizon;
    }

    Ok(ColonyTree { parent, birth_time, end_time, fate, horizon: opts.horizon, cap_hit, seed: opts.seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::rng::replicate_seed;
    use crate::stats;

    #[test]
    fn zero_horizon_single_particle() {
        let opts = ColonyOptions::new(2.0, 1.0, 0.0, 1);
        let p = simulate_colony(&opts).unwrap();
        assert_eq!(p.population_at, vec![1]);
        assert_eq!(p.final_population, 1);
        assert!(p.extinct_at.is_none());
    }

    #[test]
    fn extinction_frequency_matches_ratio() {
        // Supercritical (2, 1): extinction probability 1/2. The escape cap
        // turns "survived to a long horizon" into a certainty check.
        let reps = 4000u64;
        let mut extinct = 0u64;
        for r in 0..reps {
            let mut opts = ColonyOptions::new(2.0, 1.0, 30.0, replicate_seed(99, r));
            opts.cap = 1024;
            let p = simulate_colony(&opts).unwrap();
            if !p.survived() {
                extinct += 1;
            }
        }
        let freq = extinct as f64 / reps as f64;
        assert!((freq - 0.5).abs() < 0.025, "freq {freq}");
    }

    #[test]
    fn mean_growth() {
        let reps = 30_000u64;
        let finals: Vec<f64> = (0..reps)
            .map(|r| {
                let opts = ColonyOptions::new(1.5, 0.5, 2.0, replicate_seed(123, r));
                simulate_colony(&opts).unwrap().final_population as f64
            })
            .collect();
        let (_, lo, hi) = stats::mean_interval(&finals, stats::Z99);
        let oracle = analytic::gw_mean(1.5, 0.5, 2.0).unwrap();
        assert!(lo <= oracle && oracle <= hi, "({lo}, {hi}) vs {oracle}");
    }

    #[test]
    fn pure_birth_counts_are_geometric() {
        let reps = 20_000u64;
        let t = std::f64::consts::LN_2;
        let mut counts = std::collections::BTreeMap::new();
        for r in 0..reps {
            let opts = ColonyOptions::new(1.0, 0.0, t, replicate_seed(321, r));
            let p = simulate_colony(&opts).unwrap();
            *counts.entry(p.final_population).or_insert(0u64) += 1;
        }
        let tv = stats::total_variation(&counts, reps, 1, |n| {
            analytic::yule_pmf(n, t, 1.0).unwrap()
        });
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn line_colony_uses_line_rates() {
        // Line 4 at gamma = 0.5, c = 0.5: birth 2, removal 1/16. Mean at
        // t = 1 is e^(2 - 1/16) within Monte Carlo error.
        let reps = 20_000u64;
        let finals: Vec<f64> = (0..reps)
            .map(|r| {
                simulate_line_colony(4, 0.5, 0.5, 1.0, 1 << 20, replicate_seed(55, r), 2)
                    .unwrap()
                    .final_population as f64
            })
            .collect();
        let (mean, _, _) = stats::mean_interval(&finals, stats::Z99);
        let oracle = (2.0f64 - 0.0625).exp();
        assert!((mean - oracle).abs() / oracle < 0.03, "mean {mean} vs {oracle}");
    }

    #[test]
    fn coupled_colony_dominates_removal_indicator() {
        for r in 0..200u64 {
            let mut opts = ColonyOptions::new(1.5, 1.0, 3.0, replicate_seed(777, r));
            opts.sample_points = 16;
            opts.cap = 1 << 16;
            let p = simulate_coupled_colony(&opts).unwrap();
            for i in 0..p.sample_times.len() {
                assert!(p.live_at[i] <= p.immortal_at[i]);
                let gap = p.immortal_at[i] - p.live_at[i];
                assert!(gap >= u64::from(p.removals_at[i] >= 1), "gap {gap} at i {i}");
                assert!(gap >= p.removals_at[i], "ghosts can only be minted");
            }
        }
    }

    #[test]
    fn coupled_immortal_marginal_is_pure_birth() {
        let reps = 20_000u64;
        let t = std::f64::consts::LN_2;
        let mut counts = std::collections::BTreeMap::new();
        for r in 0..reps {
            let mut opts = ColonyOptions::new(1.0, 0.7, t, replicate_seed(888, r));
            opts.sample_points = 2;
            let p = simulate_coupled_colony(&opts).unwrap();
            *counts.entry(*p.immortal_at.last().unwrap()).or_insert(0u64) += 1;
        }
        let tv = stats::total_variation(&counts, reps, 1, |n| {
            analytic::yule_pmf(n, t, 1.0).unwrap()
        });
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn tree_population_matches_interval_logic() {
        let opts = ColonyOptions::new(2.0, 1.0, 3.0, 4242);
        let tree = simulate_colony_tree(&opts).unwrap();
        assert_eq!(tree.population_at(0.0), 1);
        for v in 0..tree.len() {
            if let Some(p) = tree.parent[v] {
                assert!(p < v);
                assert_eq!(tree.birth_time[v], tree.end_time[p]);
                assert_eq!(tree.fate[p], Fate::Split);
            }
            assert!(tree.end_time[v] >= tree.birth_time[v]);
        }
        // Split events conserve +1: population equals 1 + splits - deaths
        // at the horizon.
        let splits = tree.fate.iter().filter(|f| **f == Fate::Split).count() as i64;
        let deaths = tree.fate.iter().filter(|f| **f == Fate::Died).count() as i64;
        assert_eq!(tree.population_at(3.0) as i64, 1 + splits - deaths);
    }

    #[test]
    fn reduced_count_requires_dominating_horizon() {
        let opts = ColonyOptions::new(2.0, 1.0, 3.0, 5);
        let tree = simulate_colony_tree(&opts).unwrap();
        assert!(tree.reduced_count(1.0, 3.0).is_err());
        assert!(tree.reduced_count(1.0, 6.0).is_err());
        let opts = ColonyOptions::new(2.0, 1.0, 6.0, 5);
        let tree = simulate_colony_tree(&opts).unwrap();
        assert!(tree.reduced_count(1.0, 5.0).is_ok());
    }

    #[test]
    fn reduced_count_of_pure_birth_is_full_population() {
        for r in 0..100u64 {
            let opts = ColonyOptions::new(1.0, 0.0, 5.0, replicate_seed(31, r));
            let tree = simulate_colony_tree(&opts).unwrap();
            let reduced = tree.reduced_count(1.0, 5.0).unwrap();
            assert_eq!(reduced, tree.population_at(1.0));
        }
    }

    #[test]
    fn sampled_reduced_count_needs_dominating_horizon() {
        assert!(sample_reduced_count(2.0, 1.0, 1.0, 4.0, 64, 3).is_err());
        assert!(sample_reduced_count(2.0, 1.0, 1.0, 5.0, 1, 3).is_err());
    }

    #[test]
    fn sampled_reduced_count_without_deaths_is_population() {
        for seed in [1u64, 9, 55, 1234] {
            let r = sample_reduced_count(1.0, 0.0, 1.0, 5.0, 64, seed).unwrap();
            let opts = ColonyOptions::new(1.0, 0.0, 1.0, seed);
            let tree = simulate_colony_tree(&opts).unwrap();
            assert_eq!(r, tree.population_at(1.0));
        }
    }

    #[test]
    fn reduced_count_of_extinct_tree_is_zero() {
        let mut seen_extinct = false;
        for r in 0..200u64 {
            let opts = ColonyOptions::new(0.4, 1.2, 10.0, replicate_seed(77, r));
            let tree = simulate_colony_tree(&opts).unwrap();
            if !tree.survives_to(10.0) {
                seen_extinct = true;
                assert_eq!(tree.reduced_count(2.0, 10.0).unwrap(), 0);
            }
        }
        assert!(seen_extinct);
    }
}
