//! Loewner and β-SLE evolutions driven by Lévy processes: samplers for the
//! driving noise, the fractional calculus of power functions, hitting-time
//! simulation, and the Monte Carlo experiments built on them.

pub mod alpha;
pub mod calculus;
pub mod driver;
mod error;
pub mod experiments;
pub mod io;
pub mod loewner;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
