//! Monte Carlo estimators built on the evolution kernels: hitting
//! probabilities and phase sweeps, exponent fits, overshoot densities, area
//! fractions, scaling checks, disconnection frequencies and the empirical
//! θ₀ bracket.
//!
//! Replica `k` of an estimate with seed `s` always uses the driver streams
//! `(s, k, component)`, and results are merged by replica index, so every
//! output depends only on the seed and never on the number of workers.

mod area;
mod exponents;
mod overshoot;
mod phase;
mod scaling;

pub use area::{
    area_fraction, disconnection_frequency, AreaFractions, AreaSettings, DisconnectionEstimate, RasterSettings,
};
pub use exponents::{slope_near_infinity, slope_near_zero, ExponentFit, ExponentPoint, FitSide};
pub use overshoot::{overshoot_histogram, BinReport, OvershootReport, OvershootSettings};
pub use phase::{
    corollary_driver_phase, estimate_hits, hitting_probability, phase_scan, theta0_bracket, CorollaryRow, HitCounts,
    HorizonFlag, McSettings, PhaseEstimate, PhaseGrid, PhaseParams, Theta0Bracket,
};
pub use scaling::{scaling_check, ScalingReport, ScalingSettings, ScalingStatistic};

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests;
