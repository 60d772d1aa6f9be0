//! Driving processes: Brownian motion, symmetric stable, truncated stable,
//! compound Poisson, and their independent sums.
//!
//! Two realizations exist. A [`DriverPath`] is a fixed, immutable sample on
//! a time grid; it is what rasters and trajectory dumps evolve against. A
//! [`DriverStream`] draws increments lazily for whatever step the evolution
//! asks for; Monte Carlo estimators use it so that the time step can follow
//! the point being evolved. Both produce the same marginal law because the
//! increments of a Lévy process over disjoint intervals are independent.

mod bridge;
mod path;
mod sample;
mod spec;
pub mod stable;
mod stream;

pub use bridge::{BridgeCursor, BridgeDriver, BridgeSettings};
pub use path::{compose_drivers, DriverPath, LedgerJump};
pub use sample::{
    sample_brownian, sample_compound_poisson, sample_stable, sample_truncated_stable, uniform_grid, SampleOptions,
};
pub use spec::{Component, DeclaredClass, DriverSpec, JumpLaw};
pub use stream::DriverStream;

use crate::rng::StreamRng;

/// One step of driver motion as seen by the evolution kernel.
///
/// `jump` collects everything that may move the driver discontinuously
/// (ledger jumps, stable increments, compound Poisson events); `diffusive`
/// is the Brownian part, whose sign changes across zero count as hits on
/// the real line.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Step {
    pub dt: f64,
    pub jump: f64,
    pub diffusive: f64,
}

/// Anything that can feed driver increments to the evolution kernel.
pub trait Drive {
    /// Advance from time `t` by at most `max_dt` (a fixed path may overrun
    /// it by at most one grid interval). `h_abs` lets lazy sources shrink the
    /// step so their noise stays small relative to the tracked point.
    fn next_step(&mut self, t: f64, max_dt: f64, h_abs: f64) -> Step;

    /// Current driver value U(t).
    fn value(&self) -> f64;

    /// Whether a Brownian component is present.
    fn diffusive(&self) -> bool;

    /// Gaussian variance rate and an independent generator, for drivers
    /// that let the real-line kernel draw the radial part of a step from
    /// its exact law. Fixed paths return `None`.
    fn radial(&mut self) -> Option<Radial<'_>> {
        None
    }
}

/// See [`Drive::radial`].
pub struct Radial<'a> {
    pub rate: f64,
    pub rng: &'a mut StreamRng,
}
