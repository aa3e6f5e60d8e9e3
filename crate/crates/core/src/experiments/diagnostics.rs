//! Structural diagnostics on the closed forms themselves.

use serde::Serialize;

use crate::analytic;
use crate::Result;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DoublingJumpRow {
    pub j: u32,
    /// Probability that the next event of a line-j particle is a doubling
    /// jump straight to line 2j.
    pub prob: f64,
    /// Reference value c^(2j) the probability is often compared against.
    pub reference: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingJumpReport {
    pub c: f64,
    pub rows: Vec<DoublingJumpRow>,
    /// Whether prob >= reference on every row. It never is: the ratio
    /// (1 - e^(-x))/x with x the total out-rate sits strictly below one.
    pub bound_direction_holds: bool,
    /// Supremum of the ratios; they increase toward one as j grows.
    pub ratio_limit: f64,
    pub ratios_increasing: bool,
}

/// Tabulates the doubling-jump probability against c^(2j) over a line range.
pub fn doubling_jump_report(c: f64, j_lo: u32, j_hi: u32) -> Result<DoublingJumpReport> {
    let mut rows = Vec::with_capacity((j_hi.saturating_sub(j_lo) + 1) as usize);
    for j in j_lo..=j_hi {
        let prob = analytic::doubling_jump_prob(j, c)?;
        let reference = c.powi(2 * j as i32);
        rows.push(DoublingJumpRow { j, prob, reference, ratio: prob / reference });
    }
    let bound_direction_holds = rows.iter().all(|r| r.prob >= r.reference);
    let ratios_increasing = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    Ok(DoublingJumpReport {
        c,
        rows,
        bound_direction_holds,
        ratio_limit: 1.0,
        ratios_increasing,
    })
}
