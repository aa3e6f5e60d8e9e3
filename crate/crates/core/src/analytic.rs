//! Closed-form facts used as oracles: generating functions and laws of the
//! constant-rate branching process, the jump-offset law of the lines model,
//! growth schedules, and the tail bound on the highest occupied line.

use crate::{require_nonnegative, require_open_unit, require_positive, Error, Result};

/// Per-particle rates of a binary branching process: split in two at rate
/// `lambda`, die at rate `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwRates {
    pub lambda: f64,
    pub mu: f64,
}

impl GwRates {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        require_nonnegative("lambda", lambda)?;
        require_nonnegative("mu", mu)?;
        Ok(GwRates { lambda, mu })
    }
}

/// Parameters of the lines model. A particle on line `j` branches at rate
/// `j^gamma` and jumps to line `j + k` at rate `c^(j+k)`; `c1` and `c2` are
/// the constants of the lower and upper growth schedules.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LinesParams {
    pub gamma: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
}

impl LinesParams {
    pub fn new(gamma: f64, c: f64, c1: f64, c2: f64) -> Result<Self> {
        require_open_unit("gamma", gamma)?;
        require_open_unit("c", c)?;
        require_positive("c1", c1)?;
        require_positive("c2", c2)?;
        Ok(LinesParams { gamma, c, c1, c2 })
    }

    /// Branch rate of one particle on line `j`.
    pub fn branch_rate(&self, j: u32) -> f64 {
        (j as f64).powf(self.gamma)
    }

    /// Total upward-jump rate of one particle on line `j`:
    /// sum over k >= 1 of c^(j+k) = c^(j+1) / (1 - c).
    pub fn out_rate(&self, j: u32) -> f64 {
        self.c.powi(j as i32 + 1) / (1.0 - self.c)
    }

    /// Lower-schedule feasibility: c1/2 + 2 ln c must be positive.
    pub fn check_lower_feasible(&self) -> Result<()> {
        let margin = self.c1 / 2.0 + 2.0 * self.c.ln();
        if margin <= 0.0 {
            return Err(Error::bad_param(
                "c1",
                format!(
                    "schedule invariant c1/2 + 2 ln c > 0 violated: c1 = {}, c = {} gives {margin}",
                    self.c1, self.c
                ),
            ));
        }
        Ok(())
    }

    /// Upper-schedule summability: c * exp(c2) must stay below 1.
    pub fn check_upper_summable(&self) -> Result<()> {
        let product = self.c * self.c2.exp();
        if product >= 1.0 {
            return Err(Error::bad_param(
                "c2",
                format!(
                    "summability invariant c * exp(c2) < 1 violated: c = {}, c2 = {} gives {product}",
                    self.c, self.c2
                ),
            ));
        }
        Ok(())
    }
}

/// Mean population of a branching process with rates (lambda, mu) started
/// from one particle: exp(t (lambda - mu)).
pub fn gw_mean(lambda: f64, mu: f64, t: f64) -> Result<f64> {
    require_nonnegative("lambda", lambda)?;
    require_nonnegative("mu", mu)?;
    require_nonnegative("t", t)?;
    Ok((t * (lambda - mu)).exp())
}

/// Generating function of the pure-birth population at time t:
/// f(s, t) = s e^(-lambda t) / (1 - (1 - e^(-lambda t)) s).
pub fn yule_gf(s: f64, t: f64, lambda: f64) -> Result<f64> {
    check_gf_args(s, t)?;
    require_positive("lambda", lambda)?;
    let e = (-lambda * t).exp();
    Ok(s * e / (1.0 - (1.0 - e) * s))
}

/// Pure-birth population law: P(N_t = n) = e^(-lambda t) (1 - e^(-lambda t))^(n-1).
pub fn yule_pmf(n: u64, t: f64, lambda: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::bad_param("n", "population of a pure-birth process is at least 1"));
    }
    require_nonnegative("t", t)?;
    require_positive("lambda", lambda)?;
    let e = (-lambda * t).exp();
    Ok(e * (1.0 - e).powi(n as i32 - 1))
}

/// Pure-birth tail: P(N_t >= m) = (1 - e^(-lambda t))^(m-1).
pub fn yule_tail(m: u64, t: f64, lambda: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::bad_param("m", "threshold must be at least 1"));
    }
    require_nonnegative("t", t)?;
    require_positive("lambda", lambda)?;
    Ok((1.0 - (-lambda * t).exp()).powi(m as i32 - 1))
}

/// Generating function of the binary birth-death population at time t.
///
/// f(s, t) = (mu (s - 1) - e^((mu - lambda) t) (lambda s - mu))
///         / (lambda (s - 1) - e^((mu - lambda) t) (lambda s - mu)).
///
/// The case lambda = mu divides by zero here and is rejected; its limit
/// needs the separate critical formula, which this crate does not use.
pub fn bd_gf(s: f64, t: f64, lambda: f64, mu: f64) -> Result<f64> {
    check_gf_args(s, t)?;
    require_nonnegative("lambda", lambda)?;
    require_nonnegative("mu", mu)?;
    if lambda == mu {
        return Err(Error::CriticalCase { rate: lambda });
    }
    let e = ((mu - lambda) * t).exp();
    let cross = lambda * s - mu;
    Ok((mu * (s - 1.0) - e * cross) / (lambda * (s - 1.0) - e * cross))
}

/// Probability that the population ever dies out: mu/lambda when
/// lambda > mu, otherwise 1.
pub fn extinction_prob(lambda: f64, mu: f64) -> Result<f64> {
    require_nonnegative("lambda", lambda)?;
    require_nonnegative("mu", mu)?;
    if lambda == 0.0 && mu == 0.0 {
        // A lone particle with no events at all never dies.
        return Ok(0.0);
    }
    if lambda > mu {
        Ok(mu / lambda)
    } else {
        Ok(1.0)
    }
}

/// Generating function of the count of particles with an infinite line of
/// descent, conditioned on survival: a pure-birth process at rate
/// lambda - mu. Requires a strictly supercritical process with mu > 0.
pub fn reduced_gf(s: f64, t: f64, lambda: f64, mu: f64) -> Result<f64> {
    if mu <= 0.0 {
        return Err(Error::bad_param("mu", "the reduced process is defined for mu > 0"));
    }
    if lambda <= mu {
        return Err(Error::NotSupercritical { lambda, mu });
    }
    yule_gf(s, t, lambda - mu)
}

/// The calibration floor (1/10)^c for the pure-birth tail fact.
pub fn yule_tail_lower_bound(c: f64) -> Result<f64> {
    require_nonnegative("c", c)?;
    Ok(0.1f64.powf(c))
}

/// Law of the landing line of a jump from line `from`, conditioned on the
/// jump happening: P(to) = (1 - c) c^(to - from - 1).
pub fn jump_target_pmf(from: u32, to: u32, c: f64) -> Result<f64> {
    require_open_unit("c", c)?;
    if from < 1 || to <= from {
        return Err(Error::BadJumpTarget { from, to });
    }
    Ok((1.0 - c) * c.powi((to - from) as i32 - 1))
}

/// Probability that a particle on line `j` jumps within one unit of time and
/// lands exactly on line `2j`:
/// (1 - c) c^(j-1) (1 - exp(-c^(j+1)/(1-c))).
pub fn doubling_jump_prob(j: u32, c: f64) -> Result<f64> {
    require_open_unit("c", c)?;
    if j == 0 {
        return Err(Error::bad_param("j", "lines are indexed from 1"));
    }
    let out = c.powi(j as i32 + 1) / (1.0 - c);
    Ok((1.0 - c) * c.powi(j as i32 - 1) * (-(-out).exp_m1()))
}

/// One entry of the lower growth schedule: the holding time `t` spent on
/// line `j` and the population threshold `q` the line-`j` colony should
/// reach by then.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LowerSchedule {
    pub j: u32,
    pub t: f64,
    pub threshold: f64,
}

/// Lower schedule: t_j = c1 j^(1-gamma) - 1 and
/// q_j = exp(t_j (j^gamma - c^(j+1)/(1-c))) / j^2.
pub fn lower_schedule(j: u32, gamma: f64, c1: f64, c: f64) -> Result<LowerSchedule> {
    require_open_unit("gamma", gamma)?;
    require_open_unit("c", c)?;
    require_positive("c1", c1)?;
    if j == 0 {
        return Err(Error::bad_param("j", "lines are indexed from 1"));
    }
    let t = c1 * (j as f64).powf(1.0 - gamma) - 1.0;
    if t <= 0.0 {
        return Err(Error::DegenerateSchedule { j, t });
    }
    let drift = (j as f64).powf(gamma) - c.powi(j as i32 + 1) / (1.0 - c);
    let threshold = (t * drift).exp() / (j as f64 * j as f64);
    Ok(LowerSchedule { j, t, threshold })
}

/// Upper schedule: t_j = c2 j^(1-gamma).
pub fn upper_schedule(j: u32, gamma: f64, c2: f64) -> Result<f64> {
    require_open_unit("gamma", gamma)?;
    require_positive("c2", c2)?;
    if j == 0 {
        return Err(Error::bad_param("j", "lines are indexed from 1"));
    }
    Ok(c2 * (j as f64).powf(1.0 - gamma))
}

/// Reference constants for the growth of the highest line: the claim is
/// A t^(1/(1-gamma)) <= max line <= B t^(1/(1-gamma)) eventually, with
/// A = ((2^(1-gamma) - 1)/(2 c1))^(1/(1-gamma)) and B = (1/c2)^(1/(1-gamma)).
pub fn scaling_constants(gamma: f64, c1: f64, c2: f64) -> Result<(f64, f64)> {
    require_open_unit("gamma", gamma)?;
    require_positive("c1", c1)?;
    require_positive("c2", c2)?;
    let inv = 1.0 / (1.0 - gamma);
    let lower = ((2f64.powf(1.0 - gamma) - 1.0) / (2.0 * c1)).powf(inv);
    let upper = c2.recip().powf(inv);
    Ok((lower, upper))
}

/// Tail bound on the highest occupied line at the upper-schedule time:
/// P(max line at t_j >= j) <= c2 j^(1-gamma) (c e^c2)^j / (1 - c).
///
/// Summable over j exactly when c e^c2 < 1; values above 1 are vacuous but
/// returned as computed.
pub fn max_line_tail_bound(j: u32, gamma: f64, c: f64, c2: f64) -> Result<f64> {
    require_open_unit("gamma", gamma)?;
    require_open_unit("c", c)?;
    require_positive("c2", c2)?;
    if j == 0 {
        return Err(Error::bad_param("j", "lines are indexed from 1"));
    }
    let t = c2 * (j as f64).powf(1.0 - gamma);
    Ok(t * (c * c2.exp()).powi(j as i32) / (1.0 - c))
}

/// Birth and death rates of the colony confined to line `j`: births at the
/// branch rate, departures (deaths for the colony) at the total out-rate.
pub fn line_colony_rates(j: u32, gamma: f64, c: f64) -> Result<(f64, f64)> {
    require_open_unit("gamma", gamma)?;
    require_open_unit("c", c)?;
    if j == 0 {
        return Err(Error::bad_param("j", "lines are indexed from 1"));
    }
    Ok(((j as f64).powf(gamma), c.powi(j as i32 + 1) / (1.0 - c)))
}

fn check_gf_args(s: f64, t: f64) -> Result<()> {
    if !s.is_finite() || !(0.0..=1.0).contains(&s) {
        return Err(Error::bad_param("s", format!("generating functions are evaluated on [0, 1], got {s}")));
    }
    require_nonnegative("t", t)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn mean_growth_values() {
        assert!((gw_mean(2.0, 1.0, 3f64.ln()).unwrap() - 3.0).abs() < 1e-12);
        assert!((gw_mean(1.5, 0.5, 2.0).unwrap() - 2f64.exp()).abs() < 1e-12);
        assert_eq!(gw_mean(1.0, 1.0, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn yule_gf_frozen_value() {
        // lambda = 1, t = ln 2: e^-t = 1/2, f(1/2) = (1/4) / (3/4) = 1/3.
        let v = yule_gf(0.5, LN2, 1.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn yule_gf_boundary_identities() {
        for &t in &[0.0, 0.3, 1.7, 5.0] {
            assert!((yule_gf(1.0, t, 1.3).unwrap() - 1.0).abs() < 1e-12);
        }
        for &s in &[0.0, 0.25, 0.5, 1.0] {
            assert!((yule_gf(s, 0.0, 2.0).unwrap() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn yule_pmf_is_geometric_half_at_ln2() {
        for n in 1..=12u64 {
            let p = yule_pmf(n, LN2, 1.0).unwrap();
            assert!((p - 0.5f64.powi(n as i32)).abs() < 1e-14, "n = {n}");
        }
        assert!(yule_pmf(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn yule_pmf_sums_to_one_with_mean_growth() {
        let (lambda, t) = (1.0, 2.0);
        let mut total = 0.0;
        let mut mean = 0.0;
        let mut n = 1u64;
        while total < 1.0 - 1e-13 && n < 10_000_000 {
            let p = yule_pmf(n, t, lambda).unwrap();
            total += p;
            mean += n as f64 * p;
            n += 1;
        }
        assert!((total - 1.0).abs() < 1e-9);
        let expected = gw_mean(lambda, 0.0, t).unwrap();
        assert!((mean - expected).abs() / expected < 1e-6, "mean {mean} vs {expected}");
    }

    #[test]
    fn yule_tail_matches_pmf_sum() {
        let (lambda, t) = (0.8, 1.7);
        for m in 1..=30u64 {
            let tail = yule_tail(m, t, lambda).unwrap();
            let mut sum = 0.0;
            for n in m..m + 4000 {
                sum += yule_pmf(n, t, lambda).unwrap();
            }
            assert!((tail - sum).abs() < 1e-10, "m = {m}");
        }
    }

    #[test]
    fn bd_gf_extinction_by_time() {
        // Extinction probability by time t is f(0, t); frozen value for
        // (lambda, mu, t) = (2, 1, 2): (e^2 - 1)/(2 e^2 - 1).
        let e2 = 2f64.exp();
        let expected = (e2 - 1.0) / (2.0 * e2 - 1.0);
        assert!((bd_gf(0.0, 2.0, 2.0, 1.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn bd_gf_reduces_to_pure_birth_when_mu_is_zero() {
        for &s in &[0.0, 0.3, 0.7, 1.0] {
            for &t in &[0.0, 0.5, 2.0] {
                let a = bd_gf(s, t, 1.4, 0.0).unwrap();
                let b = yule_gf(s, t, 1.4).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bd_gf_critical_case_rejected() {
        assert!(matches!(bd_gf(0.5, 1.0, 1.0, 1.0), Err(Error::CriticalCase { .. })));
    }

    #[test]
    fn bd_gf_monotone_in_time_at_zero() {
        let mut prev = 0.0;
        for i in 0..200 {
            let t = i as f64 * 0.05;
            let q = bd_gf(0.0, t, 2.0, 1.0).unwrap();
            assert!(q >= prev - 1e-12);
            prev = q;
        }
        assert!((prev - extinction_prob(2.0, 1.0).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn extinction_values() {
        assert_eq!(extinction_prob(2.0, 1.0).unwrap(), 0.5);
        assert_eq!(extinction_prob(1.0, 2.0).unwrap(), 1.0);
        assert_eq!(extinction_prob(1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn reduced_gf_is_pure_birth_at_rate_difference() {
        for &s in &[0.0, 0.4, 0.9, 1.0] {
            for &t in &[0.1, 1.0, 3.0] {
                let a = reduced_gf(s, t, 2.0, 1.0).unwrap();
                let b = yule_gf(s, t, 1.0).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(reduced_gf(0.5, 1.0, 1.0, 2.0).is_err());
        assert!(reduced_gf(0.5, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn jump_target_law() {
        assert!((jump_target_pmf(1, 2, 0.5).unwrap() - 0.5).abs() < 1e-14);
        assert!((jump_target_pmf(1, 3, 0.5).unwrap() - 0.25).abs() < 1e-14);
        assert!(jump_target_pmf(3, 3, 0.5).is_err());
        assert!(jump_target_pmf(0, 2, 0.5).is_err());
        let total: f64 = (2..60).map(|to| jump_target_pmf(1, to, 0.4).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn doubling_jump_frozen_value() {
        // j = 1, c = 1/2: (1/2)(1 - e^(-1/2)).
        let v = doubling_jump_prob(1, 0.5).unwrap();
        assert!((v - 0.196_734_670_143_683_3).abs() < 1e-15);
    }

    #[test]
    fn doubling_jump_sits_just_under_c_to_2j() {
        // ratio to c^(2j) is (1 - e^-x)/x with x = c^(j+1)/(1-c): always
        // below 1, approaching 1 as j grows.
        let c: f64 = 0.5;
        let mut prev = 0.0;
        for j in 1..=30u32 {
            let ratio = doubling_jump_prob(j, c).unwrap() / c.powi(2 * j as i32);
            assert!(ratio < 1.0, "j = {j} ratio {ratio}");
            assert!(ratio > prev, "ratio should increase, j = {j}");
            prev = ratio;
        }
        assert!(prev > 0.999_999);
    }

    #[test]
    fn lower_schedule_frozen_values() {
        let s4 = lower_schedule(4, 0.5, 3.0, 0.5).unwrap();
        assert!((s4.t - 5.0).abs() < 1e-12);
        // q_4 = e^(5 (2 - 1/16)) / 16.
        assert!((s4.threshold - 1007.18).abs() < 1.1, "q4 = {}", s4.threshold);

        let s2 = lower_schedule(2, 0.5, 3.0, 0.5).unwrap();
        assert!((s2.t - (3.0 * 2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((s2.threshold - 10.90).abs() < 0.15, "q2 = {}", s2.threshold);
    }

    #[test]
    fn lower_schedule_degenerate_flagged() {
        // c1 = 0.9, j = 1: t = -0.1.
        assert!(matches!(
            lower_schedule(1, 0.5, 0.9, 0.5),
            Err(Error::DegenerateSchedule { j: 1, .. })
        ));
    }

    #[test]
    fn upper_schedule_value() {
        assert!((upper_schedule(4, 0.5, 0.5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_constant_values() {
        let (lo, hi) = scaling_constants(0.5, 3.0, 0.5).unwrap();
        assert!((lo - 0.004_765_912).abs() < 1e-8, "lo = {lo}");
        assert!((hi - 4.0).abs() < 1e-12);
        assert!(lo < hi);
    }

    #[test]
    fn max_line_bound_frozen_and_decreasing() {
        let b1 = max_line_tail_bound(1, 0.5, 0.5, 0.5).unwrap();
        assert!((b1 - 0.824_360_635_350_064).abs() < 1e-12, "b1 = {b1}");
        // Eventually decreasing; from j = 3 onward strictly so.
        let mut prev = max_line_tail_bound(3, 0.5, 0.5, 0.5).unwrap();
        for j in 4..200 {
            let b = max_line_tail_bound(j, 0.5, 0.5, 0.5).unwrap();
            assert!(b < prev, "j = {j}");
            prev = b;
        }
    }

    #[test]
    fn schedule_feasibility_checks() {
        let ok = LinesParams::new(0.5, 0.5, 3.0, 0.5).unwrap();
        ok.check_lower_feasible().unwrap();
        ok.check_upper_summable().unwrap();

        // c1/2 + 2 ln c = 0.5 - 2.77 < 0.
        let bad_lower = LinesParams::new(0.5, 0.25, 1.0, 0.5).unwrap();
        assert!(bad_lower.check_lower_feasible().is_err());

        // c e^c2 = 0.5 e : > 1.
        let bad_upper = LinesParams::new(0.5, 0.5, 3.0, 1.0).unwrap();
        assert!(bad_upper.check_upper_summable().is_err());
    }

    #[test]
    fn colony_rates() {
        let (birth, death) = line_colony_rates(1, 0.5, 0.5).unwrap();
        assert_eq!(birth, 1.0);
        assert_eq!(death, 0.5);
        let (b4, d4) = line_colony_rates(4, 0.5, 0.5).unwrap();
        assert_eq!(b4, 2.0);
        assert!((d4 - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn out_rate_matches_target_sum() {
        let p = LinesParams::new(0.5, 0.5, 3.0, 0.5).unwrap();
        for j in 1..=10u32 {
            let direct: f64 = (1..200).map(|k| p.c.powi((j + k) as i32)).sum();
            assert!((p.out_rate(j) - direct).abs() < 1e-12, "j = {j}");
        }
    }
}
