//! Simulators and analytic references for two related branching systems.
//!
//! The first system lives on integer lines: a particle on line `j` splits in
//! two at rate `j^gamma` and jumps to a strictly higher line `j + k` at rate
//! `c^(j+k)`. The second lives on the nonnegative half-line: particles move by
//! compound Poisson jumps with a regularly varying jump law and branch at rate
//! `(ln(1 + x))^gamma`. Both are simulated exactly, event by event, and the
//! closed-form facts about them (generating functions, extinction
//! probabilities, jump laws, growth schedules) are implemented in
//! [`analytic`] so Monte Carlo output can be checked against them.
//!
//! Everything downstream of a seed is deterministic: a master seed plus a
//! replicate index fixes the entire event stream.

pub mod analytic;
pub mod colony;
pub mod experiments;
pub mod heavy_tail;
pub mod lines;
pub mod output;
pub mod rng;
pub mod spatial;
pub mod stats;

pub use analytic::{GwRates, LinesParams, LowerSchedule};
pub use colony::{ColonyOptions, ColonyPath, ColonyTree, CoupledColonyPath};
pub use heavy_tail::{CompoundPoissonPath, JumpMeasure, SlowVariation, TailComponent};
pub use lines::{JumpEvent, LineWatch, LinesSimConfig, LinesTrajectory, WatchReport};
pub use spatial::{SpatialSimConfig, SpatialTrajectory};

/// Error type shared by every module in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Birth and death rates are equal; the closed forms used here divide by
    /// `lambda - mu` and the critical case needs a different formula.
    #[error("critical case lambda = mu = {rate} is not supported")]
    CriticalCase { rate: f64 },

    #[error("requires a supercritical process: lambda = {lambda} must exceed mu = {mu}")]
    NotSupercritical { lambda: f64, mu: f64 },

    #[error("jump target must satisfy to > from >= 1: from = {from}, to = {to}")]
    BadJumpTarget { from: u32, to: u32 },

    #[error("lower schedule degenerate at j = {j}: t_j = {t} is not positive")]
    DegenerateSchedule { j: u32, t: f64 },

    #[error("time {t} lies beyond the simulated horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("sample sizes differ: {left} vs {right}")]
    MismatchedSamples { left: usize, right: usize },

    /// Every replicate hit the population cap, leaving no usable data.
    #[error("all {replicates} replicates hit the population cap")]
    AllCapped { replicates: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn bad_param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Checks a finite, strictly positive float parameter.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::bad_param(name, format!("must be finite and > 0, got {value}")));
    }
    Ok(())
}

/// Checks a finite, nonnegative float parameter.
pub(crate) fn require_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::bad_param(name, format!("must be finite and >= 0, got {value}")));
    }
    Ok(())
}

/// Checks a probability-like parameter confined to the open unit interval.
pub(crate) fn require_open_unit(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 || value >= 1.0 {
        return Err(Error::bad_param(name, format!("must lie strictly inside (0, 1), got {value}")));
    }
    Ok(())
}
