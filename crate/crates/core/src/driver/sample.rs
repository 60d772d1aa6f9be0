use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::path::{compose_drivers, DriverPath, LedgerJump};
use super::spec::{Component, DriverSpec, JumpLaw};
use super::stable::{standard_symmetric_stable, TruncatedParts};
use crate::error::{ensure, Error, Result};
use crate::rng::StreamKey;

/// Knobs shared by the grid samplers.
#[derive(Debug, Clone, Default)]
pub struct SampleOptions {
    /// Increments larger than this in magnitude enter the jump ledger.
    /// Defaults to `10 (theta * max dt)^(1/alpha)`, ten typical increments.
    pub ledger_threshold: Option<f64>,
    pub seed_tag: String,
}

impl SampleOptions {
    pub fn tagged(tag: impl Into<String>) -> Self {
        Self { ledger_threshold: None, seed_tag: tag.into() }
    }
}

/// `n` equal steps on `[0, horizon]`.
pub fn uniform_grid(horizon: f64, n: usize) -> Result<Vec<f64>> {
    ensure!(horizon > 0.0 && horizon.is_finite(), Domain, "horizon must be positive");
    ensure!(n >= 1, Domain, "grid needs at least one step");
    let mut grid: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
    grid[n] = horizon;
    Ok(grid)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    ensure!(grid.len() >= 2 && grid[0] == 0.0, Usage, "grid must start at 0 and have a step");
    ensure!(grid.windows(2).all(|w| w[1] > w[0]), Usage, "grid must be strictly increasing");
    Ok(())
}

fn max_step(grid: &[f64]) -> f64 {
    grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

pub fn sample_brownian<R: Rng + ?Sized>(
    kappa: f64,
    grid: &[f64],
    rng: &mut R,
    opts: &SampleOptions,
) -> Result<DriverPath> {
    ensure!(kappa >= 0.0 && kappa.is_finite(), Domain, "kappa must be >= 0, got {kappa}");
    check_grid(grid)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut u = 0.0;
    values.push(u);
    for w in grid.windows(2) {
        let z: f64 = StandardNormal.sample(rng);
        u += (kappa * (w[1] - w[0])).sqrt() * z;
        values.push(u);
    }
    let noise = if kappa > 0.0 { vec![(2.0, 0.5 * kappa)] } else { Vec::new() };
    Ok(DriverPath::new(grid.to_vec(), values, Vec::new(), kappa > 0.0, opts.seed_tag.clone())?.with_noise(noise))
}

pub fn sample_stable<R: Rng + ?Sized>(
    alpha: f64,
    theta: f64,
    grid: &[f64],
    rng: &mut R,
    opts: &SampleOptions,
) -> Result<DriverPath> {
    ensure!(alpha > 0.0 && alpha <= 2.0, Domain, "alpha must lie in (0,2], got {alpha}");
    ensure!(theta > 0.0 && theta.is_finite(), Domain, "theta must be > 0, got {theta}");
    check_grid(grid)?;
    let threshold = if alpha == 2.0 {
        f64::INFINITY
    } else {
        opts.ledger_threshold.unwrap_or(10.0 * (theta * max_step(grid)).powf(1.0 / alpha))
    };
    let mut values = Vec::with_capacity(grid.len());
    let mut jumps = Vec::new();
    let mut u = 0.0;
    values.push(u);
    for (i, w) in grid.windows(2).enumerate() {
        let x = (theta * (w[1] - w[0])).powf(1.0 / alpha) * standard_symmetric_stable(alpha, rng);
        u += x;
        values.push(u);
        if x.abs() > threshold {
            jumps.push(LedgerJump { time: w[1], size: x, index: i + 1 });
        }
    }
    Ok(DriverPath::new(grid.to_vec(), values, jumps, alpha == 2.0, opts.seed_tag.clone())?
        .with_noise(vec![(alpha, theta)]))
}

/// Poisson event times on `(0, horizon]`, sorted.
fn poisson_times<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mean = rate * horizon;
    let n = if mean < 1e-300 {
        0
    } else {
        let d = Poisson::new(mean).map_err(|e| Error::Domain(format!("poisson mean {mean}: {e}")))?;
        d.sample(rng) as usize
    };
    let mut times: Vec<f64> = (0..n).map(|_| horizon * (1.0 - rng.random::<f64>())).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    Ok(times)
}

/// Inserts `events` into `grid`, returning the refined grid and each
/// event's index in it.
fn refine(grid: &[f64], events: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut out = Vec::with_capacity(grid.len() + events.len());
    let mut idx = Vec::with_capacity(events.len());
    let (mut i, mut k) = (0, 0);
    while i < grid.len() || k < events.len() {
        let take_event = k < events.len() && (i == grid.len() || events[k] <= grid[i]);
        if take_event {
            if out.last() != Some(&events[k]) {
                out.push(events[k]);
            }
            if i < grid.len() && grid[i] == events[k] {
                i += 1;
            }
            idx.push(out.len() - 1);
            k += 1;
        } else {
            if out.last() != Some(&grid[i]) {
                out.push(grid[i]);
            }
            i += 1;
        }
    }
    (out, idx)
}

#[allow(clippy::too_many_arguments)]
pub fn sample_truncated_stable<R: Rng + ?Sized>(
    alpha: f64,
    theta: f64,
    cutoff: f64,
    small_jump_cutoff: Option<f64>,
    grid: &[f64],
    rng: &mut R,
    opts: &SampleOptions,
) -> Result<DriverPath> {
    Component::TruncatedStable { alpha, theta, cutoff, small_jump_cutoff }.validate()?;
    check_grid(grid)?;
    let parts = TruncatedParts::new(alpha, cutoff, small_jump_cutoff);
    let scale = theta.powf(1.0 / alpha);
    let horizon = *grid.last().unwrap();
    let events = poisson_times(parts.rate, horizon, rng)?;
    let (times, event_idx) = refine(grid, &events);
    let threshold = opts.ledger_threshold.unwrap_or(10.0 * (theta * max_step(grid)).powf(1.0 / alpha));
    let mut increments = vec![0.0; times.len()];
    for (i, w) in times.windows(2).enumerate() {
        let z: f64 = StandardNormal.sample(rng);
        increments[i + 1] = scale * (parts.small_variance * (w[1] - w[0])).sqrt() * z;
    }
    let mut jumps = Vec::new();
    for &i in &event_idx {
        let x = scale * parts.sample_jump(rng);
        increments[i] += x;
        if x.abs() > threshold {
            jumps.push(LedgerJump { time: times[i], size: x, index: i });
        }
    }
    let mut u = 0.0;
    let values = increments
        .iter()
        .map(|d| {
            u += d;
            u
        })
        .collect();
    let gauss = 0.5 * scale * scale * parts.small_variance;
    Ok(DriverPath::new(times, values, jumps, false, opts.seed_tag.clone())?.with_noise(vec![(2.0, gauss)]))
}

/// Exact event-driven compound Poisson path; every jump is in the ledger.
pub fn sample_compound_poisson<R: Rng + ?Sized>(
    rate: f64,
    jump_law: &JumpLaw,
    horizon: f64,
    rng: &mut R,
    opts: &SampleOptions,
) -> Result<DriverPath> {
    ensure!(rate > 0.0 && rate.is_finite(), Domain, "rate must be > 0, got {rate}");
    ensure!(horizon > 0.0 && horizon.is_finite(), Domain, "horizon must be positive");
    jump_law.validate()?;
    let events = poisson_times(rate, horizon, rng)?;
    let jumps: Vec<(f64, f64)> = events.iter().map(|&t| (t, jump_law.sample(rng))).collect();
    let mut path = DriverPath::from_jumps(horizon, &jumps)?;
    path.set_seed_tag(opts.seed_tag.clone());
    Ok(path)
}

impl DriverSpec {
    /// Samples every component on `grid` from its own stream
    /// `(master, replica, component index)` and sums them.
    pub fn sample_path(
        &self,
        grid: &[f64],
        master: u64,
        replica: u64,
        ledger_threshold: Option<f64>,
    ) -> Result<DriverPath> {
        self.validate()?;
        check_grid(grid)?;
        let horizon = *grid.last().unwrap();
        let mut paths = Vec::with_capacity(self.components.len());
        for (j, c) in self.components.iter().enumerate() {
            let key = StreamKey::new(master, replica, j as u64);
            let mut rng = key.rng();
            let opts = SampleOptions { ledger_threshold, seed_tag: key.tag() };
            let p = match c {
                Component::Brownian { kappa } => sample_brownian(*kappa, grid, &mut rng, &opts)?,
                Component::Stable { alpha, theta } => sample_stable(*alpha, *theta, grid, &mut rng, &opts)?,
                Component::TruncatedStable { alpha, theta, cutoff, small_jump_cutoff } => {
                    sample_truncated_stable(*alpha, *theta, *cutoff, *small_jump_cutoff, grid, &mut rng, &opts)?
                }
                Component::CompoundPoisson { rate, jump_law, .. } => {
                    sample_compound_poisson(*rate, jump_law, horizon, &mut rng, &opts)?
                }
            };
            paths.push(p);
        }
        let mut out = compose_drivers(&paths)?;
        out.set_seed_tag(StreamKey::new(master, replica, 0).tag());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    fn rng(replica: u64) -> crate::rng::StreamRng {
        StreamKey::new(7, replica, 0).rng()
    }

    #[test]
    fn zero_kappa_gives_zero_path() {
        let grid = uniform_grid(1.0, 10).unwrap();
        let p = sample_brownian(0.0, &grid, &mut rng(0), &SampleOptions::default()).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
        assert!(p.jumps().is_empty());
        assert!(sample_brownian(-1.0, &grid, &mut rng(0), &SampleOptions::default()).is_err());
    }

    #[test]
    fn refine_inserts_events() {
        let (t, idx) = refine(&[0.0, 1.0, 2.0], &[0.5, 1.0, 1.5]);
        assert_eq!(t, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(idx, vec![1, 2, 3]);
    }

    #[test]
    fn truncated_ledger_respects_cutoff() {
        let grid = uniform_grid(5.0, 50).unwrap();
        let opts = SampleOptions { ledger_threshold: Some(0.0), seed_tag: String::new() };
        for r in 0..20 {
            let p = sample_truncated_stable(0.8, 1.0, 1.0, None, &grid, &mut rng(r), &opts).unwrap();
            assert!(p.jumps().iter().all(|j| j.size.abs() <= 1.0));
        }
    }

    #[test]
    fn compound_poisson_is_piecewise_constant() {
        let law = JumpLaw::Symmetric { size: 1.0 };
        let p = sample_compound_poisson(2.0, &law, 10.0, &mut rng(1), &SampleOptions::default()).unwrap();
        assert!(p.is_piecewise_constant());
        assert_eq!(p.horizon(), 10.0);
        let tiny = sample_compound_poisson(1e-9, &law, 1.0, &mut rng(1), &SampleOptions::default()).unwrap();
        assert_eq!(tiny.max_abs(), 0.0);
    }

    #[test]
    fn sample_path_is_deterministic() {
        let spec = DriverSpec::levy(2.0, 1.5, 1.0).unwrap();
        let grid = uniform_grid(1.0, 100).unwrap();
        let a = spec.sample_path(&grid, 11, 3, None).unwrap();
        let b = spec.sample_path(&grid, 11, 3, None).unwrap();
        let c = spec.sample_path(&grid, 11, 4, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.is_diffusive());
    }
}
