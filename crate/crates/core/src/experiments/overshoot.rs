use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{DriverSpec, DriverStream};
use crate::error::{ensure, Error, Result};
use crate::loewner::{evolve_real, EvolutionConfig, Flow, Phase, PointStatus};

/// First exit of a real point from the annulus `a < |h| < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OvershootSettings {
    pub kappa: f64,
    pub alpha: f64,
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    /// Start point, `a < |x0| < b`.
    pub x0: f64,
    pub n: usize,
    pub bins: usize,
    pub horizon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Inner,
    Outer,
}

/// One exit: its side, landing point, and whether a jump produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ExitRecord {
    side: Exit,
    x: f64,
    by_jump: bool,
}

/// Histogram bin compared against the analytic envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinReport {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Density of the conditional exit law (per unit length, both signs
    /// pooled for the outer bins and divided by 2).
    pub density: f64,
    pub se: f64,
    /// Largest value of the envelope on the bin.
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OvershootReport {
    pub settings: OvershootSettings,
    pub inner_exits: usize,
    pub inner_atoms: usize,
    pub outer_exits: usize,
    pub outer_atoms: usize,
    pub censored: usize,
    /// `3 2^(3 + 4 alpha) / a` on `|x| < a/3`.
    pub inner_bound: f64,
    pub inner_bins: Vec<BinReport>,
    /// `2^(3 + 4 alpha) (2b)^alpha alpha / |x|^(1 + alpha)` on `|x| > 2b`.
    pub outer_bins: Vec<BinReport>,
    /// Mass of atoms plus both continuous parts over all exits.
    pub total_probability: f64,
}

impl OvershootReport {
    pub fn all_bins_ok(&self) -> bool {
        self.inner_bins.iter().chain(&self.outer_bins).all(|b| b.ok)
    }
}

fn validate(s: &OvershootSettings) -> Result<()> {
    ensure!(s.b > s.a && s.a > 0.0, Domain, "need b > a > 0");
    ensure!(s.x0.abs() > s.a && s.x0.abs() < s.b, Domain, "start point must satisfy a < |x0| < b");
    ensure!(s.theta > 0.0, Domain, "theta must be > 0 so that jumps exist");
    ensure!(s.alpha > 0.0 && s.alpha < 2.0, Domain, "alpha must lie in (0,2), got {}", s.alpha);
    ensure!(s.bins >= 1, Domain, "need at least one bin");
    ensure!(s.n >= 1, Domain, "n must be >= 1");
    Ok(())
}

fn simulate(spec: &DriverSpec, s: &OvershootSettings, replica: u64) -> Result<Option<ExitRecord>> {
    let mut cfg = EvolutionConfig::new(s.horizon);
    cfg.hit_tolerance = 1e-6 * s.a;
    let mut driver = DriverStream::new(spec, s.seed, replica, cfg.dt_safety);
    let mut exit = None;
    let out = evolve_real(s.x0, &mut driver, &cfg, Flow::Slit, |ev| {
        let x = ev.after.re;
        let side = if x.abs() <= s.a {
            Exit::Inner
        } else if x.abs() >= s.b {
            Exit::Outer
        } else {
            return false;
        };
        exit = Some(ExitRecord { side, x, by_jump: ev.phase == Phase::Jump });
        true
    })?;
    Ok(match (exit, out.status) {
        (Some(e), _) => Some(e),
        // Crossed 0 inside a continuous phase, hence crept through +-a.
        (None, PointStatus::Hit { .. }) => {
            Some(ExitRecord { side: Exit::Inner, x: s.a.copysign(s.x0), by_jump: false })
        }
        (None, _) => None,
    })
}

fn bin_report(lo: f64, hi: f64, count: usize, mass: f64, bound: f64) -> BinReport {
    let width = hi - lo;
    let density = count as f64 / (mass * width);
    let se = (count.max(1) as f64).sqrt() / (mass * width);
    BinReport { lo, hi, count, density, se, bound, ok: density <= bound + 3.0 * se }
}

/// Simulates exits from the annulus and checks the continuous parts of the
/// conditional exit laws against their analytic envelopes with a slack of
/// three standard errors per bin.
pub fn overshoot_histogram(s: &OvershootSettings) -> Result<OvershootReport> {
    validate(s)?;
    let spec = DriverSpec::levy(s.kappa, s.alpha, s.theta)?;
    let records: Vec<Option<ExitRecord>> =
        (0..s.n as u64).into_par_iter().map(|k| simulate(&spec, s, k)).collect::<Result<_>>()?;
    let exits: Vec<ExitRecord> = records.iter().flatten().copied().collect();
    if exits.is_empty() {
        return Err(Error::Statistical(format!("no exits from the annulus within T = {}", s.horizon)));
    }
    let inner: Vec<&ExitRecord> = exits.iter().filter(|e| e.side == Exit::Inner).collect();
    let outer: Vec<&ExitRecord> = exits.iter().filter(|e| e.side == Exit::Outer).collect();
    let inner_atoms = inner.iter().filter(|e| !e.by_jump).count();
    let outer_atoms = outer.iter().filter(|e| !e.by_jump).count();
    let scale = 2f64.powf(3.0 + 4.0 * s.alpha);
    let inner_bound = 3.0 * scale / s.a;

    let mut inner_bins = Vec::new();
    if !inner.is_empty() {
        let width = 2.0 * s.a / 3.0 / s.bins as f64;
        for k in 0..s.bins {
            let lo = -s.a / 3.0 + k as f64 * width;
            let hi = lo + width;
            let count = inner.iter().filter(|e| e.by_jump && e.x >= lo && e.x < hi).count();
            inner_bins.push(bin_report(lo, hi, count, inner.len() as f64, inner_bound));
        }
    }
    let mut outer_bins = Vec::new();
    if !outer.is_empty() {
        // Octave bins in |x| from 2b; both signs pooled, so the density per
        // sign is half the pooled one.
        let envelope = |x: f64| scale * (2.0 * s.b).powf(s.alpha) * s.alpha / x.powf(1.0 + s.alpha);
        for k in 0..s.bins {
            let lo = 2.0 * s.b * 2f64.powi(k as i32);
            let hi = 2.0 * lo;
            let count = outer.iter().filter(|e| e.by_jump && e.x.abs() >= lo && e.x.abs() < hi).count();
            outer_bins.push(bin_report(lo, hi, count, 2.0 * outer.len() as f64, envelope(lo)));
        }
    }
    let continuous = exits.iter().filter(|e| e.by_jump).count();
    let total_probability = (inner_atoms + outer_atoms + continuous) as f64 / exits.len() as f64;
    Ok(OvershootReport {
        settings: s.clone(),
        inner_exits: inner.len(),
        inner_atoms,
        outer_exits: outer.len(),
        outer_atoms,
        censored: records.len() - exits.len(),
        inner_bound,
        inner_bins,
        outer_bins,
        total_probability,
    })
}
