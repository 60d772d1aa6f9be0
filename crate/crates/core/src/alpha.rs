//! The β-Loewner flow `dh = 2 |h|^(2-β) / h dt - dU`, `1 < β <= 2`, which is
//! self-similar of index β; β = 2 is the chordal Loewner flow.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::driver::{DriverPath, DriverSpec, DriverStream};
use crate::error::{ensure, Result};
use crate::loewner::{evolve, evolve_real, EvolutionConfig, Flow, HitRule, HittingOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaEvolutionConfig {
    pub beta: f64,
    pub evolution: EvolutionConfig,
}

impl AlphaEvolutionConfig {
    pub fn new(beta: f64, evolution: EvolutionConfig) -> Result<Self> {
        let cfg = Self { beta, evolution };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.beta > 1.0 && self.beta <= 2.0, Domain, "beta must lie in (1,2], got {}", self.beta);
        self.evolution.validate()
    }

    fn flow(&self) -> Flow {
        if self.beta == 2.0 {
            Flow::Slit
        } else {
            Flow::Polar(self.beta)
        }
    }
}

/// Evolves `z0` under the β-flow against a sampled driver. Points on the
/// real line stay on it; the drift never carries them across 0.
pub fn evolve_point_beta(z0: Complex64, path: &DriverPath, cfg: &AlphaEvolutionConfig) -> Result<HittingOutcome> {
    cfg.validate()?;
    let ev = &cfg.evolution;
    ensure!(
        path.horizon() >= ev.horizon * (1.0 - 1e-12),
        Usage,
        "driver horizon {} is shorter than the evolution horizon {}",
        path.horizon(),
        ev.horizon
    );
    let mut cursor = path.cursor(ev.dt_safety);
    if z0.im == 0.0 {
        evolve_real(z0.re, &mut cursor, ev, cfg.flow(), |_| false)
    } else {
        evolve(z0, &mut cursor, ev, HitRule::Absolute(ev.hit_tolerance), cfg.flow(), |_| false)
    }
}

/// [`evolve_point_beta`] against a lazily sampled driver.
pub fn evolve_point_beta_stream(
    z0: Complex64,
    spec: &DriverSpec,
    master: u64,
    replica: u64,
    cfg: &AlphaEvolutionConfig,
) -> Result<HittingOutcome> {
    cfg.validate()?;
    let ev = &cfg.evolution;
    let mut driver = DriverStream::new(spec, master, replica, ev.dt_safety);
    if z0.im == 0.0 {
        evolve_real(z0.re, &mut driver, ev, cfg.flow(), |_| false)
    } else {
        evolve(z0, &mut driver, ev, HitRule::Absolute(ev.hit_tolerance), cfg.flow(), |_| false)
    }
}

/// `(x^β + 2 β t)^(1/β)`, the flow of a positive real point under `U = 0`.
pub fn closed_form_null_driver(x: f64, beta: f64, t: f64) -> Result<f64> {
    ensure!(x > 0.0, Domain, "x must be positive, got {x}");
    ensure!(t >= 0.0, Domain, "t must be nonnegative, got {t}");
    if t == 0.0 {
        return Ok(x);
    }
    Ok((x.powf(beta) + 2.0 * beta * t).powf(1.0 / beta))
}

/// `t -> a^(-1/alpha) U(a t)` on `[0, T/a]`, ledger included.
pub fn scaled_path(path: &DriverPath, a: f64, alpha: f64) -> Result<DriverPath> {
    ensure!(a > 0.0 && a.is_finite(), Domain, "a must be positive, got {a}");
    ensure!(alpha > 0.0 && alpha <= 2.0, Domain, "alpha must lie in (0,2], got {alpha}");
    path.rescaled(a, a.powf(-1.0 / alpha), path.horizon() / a)
}
