use std::io::Write;

use serde::Serialize;

use super::{Drive, Step};
use crate::error::{ensure, Error, Result};

/// A jump recorded in a path's ledger. `index` is the grid point at which
/// the post-jump value is stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerJump {
    pub time: f64,
    pub size: f64,
    pub index: usize,
}

/// A sampled driver realization on a strictly increasing grid starting at 0.
///
/// Values are càdlàg: `values[i]` is the post-jump value at `times[i]`, and
/// the driver is held constant between grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverPath {
    times: Vec<f64>,
    values: Vec<f64>,
    jumps: Vec<LedgerJump>,
    /// Running sum of ledger jump sizes up to and including each grid index.
    ledger_cum: Vec<f64>,
    diffusive: bool,
    /// `(alpha, theta)` of every scale-invariant noise source in the path;
    /// a Brownian part `sqrt(kappa) B` enters as `(2, kappa / 2)`. Used only
    /// to bound how many grid intervals a replay step may merge.
    noise: Vec<(f64, f64)>,
    seed_tag: String,
}

impl DriverPath {
    /// Validates the path invariants and builds the ledger index.
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        mut jumps: Vec<LedgerJump>,
        diffusive: bool,
        seed_tag: impl Into<String>,
    ) -> Result<Self> {
        ensure!(times.len() >= 2, Usage, "a path needs at least two grid points");
        ensure!(times.len() == values.len(), Usage, "times and values differ in length");
        ensure!(times[0] == 0.0, Usage, "grid must start at 0");
        ensure!(values[0] == 0.0, Usage, "U(0) must be 0");
        ensure!(times.windows(2).all(|w| w[1] > w[0]), Usage, "grid must be strictly increasing");
        jumps.sort_by_key(|j| j.index);
        let horizon = *times.last().unwrap();
        let mut ledger_cum = vec![0.0; times.len()];
        let mut k = 0;
        let mut acc = 0.0;
        for (i, cum) in ledger_cum.iter_mut().enumerate() {
            while k < jumps.len() && jumps[k].index == i {
                acc += jumps[k].size;
                k += 1;
            }
            *cum = acc;
        }
        for j in &jumps {
            ensure!(j.index < times.len(), Usage, "ledger index out of range");
            ensure!(
                j.time >= 0.0 && j.time <= horizon && j.time == times[j.index],
                Usage,
                "ledger jump at {} does not sit on the grid",
                j.time
            );
        }
        Ok(Self { times, values, jumps, ledger_cum, diffusive, noise: Vec::new(), seed_tag: seed_tag.into() })
    }

    /// The identically zero driver on `[0, horizon]`.
    pub fn zero(horizon: f64) -> Self {
        Self::new(vec![0.0, horizon], vec![0.0, 0.0], Vec::new(), false, "zero").expect("valid zero path")
    }

    /// Piecewise-constant driver from `(time, size)` jumps.
    pub fn from_jumps(horizon: f64, jumps: &[(f64, f64)]) -> Result<Self> {
        let mut events: Vec<(f64, f64)> = jumps.to_vec();
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut times = vec![0.0];
        let mut values = vec![0.0];
        let mut ledger = Vec::new();
        for &(t, size) in &events {
            ensure!(t > 0.0 && t <= horizon, Usage, "jump time {t} outside (0, {horizon}]");
            let last = *values.last().unwrap();
            if t == *times.last().unwrap() {
                *values.last_mut().unwrap() = last + size;
                ledger.push(LedgerJump { time: t, size, index: times.len() - 1 });
            } else {
                times.push(t);
                values.push(last + size);
                ledger.push(LedgerJump { time: t, size, index: times.len() - 1 });
            }
        }
        if *times.last().unwrap() < horizon {
            times.push(horizon);
            values.push(*values.last().unwrap());
        }
        Self::new(times, values, ledger, false, "jumps")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jumps(&self) -> &[LedgerJump] {
        &self.jumps
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn seed_tag(&self) -> &str {
        &self.seed_tag
    }

    /// Declares the noise sources, see [`DriverPath::noise`].
    pub fn with_noise(mut self, noise: Vec<(f64, f64)>) -> Self {
        self.noise = noise;
        self
    }

    pub fn noise(&self) -> &[(f64, f64)] {
        &self.noise
    }

    pub fn set_seed_tag(&mut self, tag: String) {
        self.seed_tag = tag;
    }

    pub fn is_diffusive(&self) -> bool {
        self.diffusive
    }

    /// Largest driver magnitude on the grid.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// U(t) with the càdlàg convention.
    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.index_at(t)]
    }

    /// Largest grid index whose time is `<= t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// True when every change of value is a ledger jump.
    pub fn is_piecewise_constant(&self) -> bool {
        !self.diffusive
            && self.values.windows(2).zip(self.ledger_cum.windows(2)).all(|(v, c)| {
                let dv = v[1] - v[0];
                let dl = c[1] - c[0];
                (dv - dl).abs() <= 1e-12 * (1.0 + v[0].abs() + v[1].abs())
            })
    }

    /// Piecewise-constant segments `(start, end, value)` covering `[0, T]`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.times.windows(2).zip(self.values.iter()).map(|(w, &u)| (w[0], w[1], u))
    }

    /// Path with every value negated (the mirror driver).
    pub fn negated(&self) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| -v).collect(),
            jumps: self.jumps.iter().map(|j| LedgerJump { size: -j.size, ..*j }).collect(),
            ledger_cum: self.ledger_cum.iter().map(|v| -v).collect(),
            diffusive: self.diffusive,
            noise: self.noise.clone(),
            seed_tag: format!("{}-neg", self.seed_tag),
        }
    }

    /// `t -> scale * U(time_factor * t)` restricted to `[0, horizon]`,
    /// ledger rescaled alongside.
    pub(crate) fn rescaled(&self, time_factor: f64, scale: f64, horizon: f64) -> Result<Self> {
        ensure!(
            time_factor * horizon <= self.horizon() * (1.0 + 1e-12),
            Usage,
            "path horizon {} is shorter than the requested {}",
            self.horizon(),
            time_factor * horizon
        );
        let last = self.index_at(time_factor * horizon * (1.0 + 1e-12));
        let mut times: Vec<f64> = self.times[..=last].iter().map(|t| t / time_factor).collect();
        let mut values: Vec<f64> = self.values[..=last].iter().map(|v| scale * v).collect();
        let jumps: Vec<LedgerJump> = self
            .jumps
            .iter()
            .filter(|j| j.index <= last)
            .map(|j| LedgerJump { time: times[j.index], size: scale * j.size, index: j.index })
            .collect();
        let end = *times.last().unwrap();
        if end < horizon {
            if horizon - end <= 1e-12 * horizon {
                *times.last_mut().unwrap() = horizon;
            } else {
                times.push(horizon);
                values.push(*values.last().unwrap());
            }
        }
        let jumps = jumps.into_iter().map(|j| LedgerJump { time: times[j.index], ..j }).collect();
        let noise = self.noise.iter().map(|&(a, th)| (a, th * time_factor * scale.powf(a))).collect();
        Ok(Self::new(times, values, jumps, self.diffusive, format!("{}-scaled", self.seed_tag))?.with_noise(noise))
    }

    /// Cursor that replays this path to the evolution kernel. A replay step
    /// merges grid intervals while the declared noise over the step stays
    /// below `sqrt(step_fraction) |h|` in scale.
    pub fn cursor(&self, step_fraction: f64) -> PathCursor<'_> {
        PathCursor { path: self, idx: 0, next_jump: 0, t: 0.0, step_fraction }
    }

    /// CSV dump with columns `t,U,is_jump,jump_size`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,U,is_jump,jump_size")?;
        let mut k = 0;
        for (i, (&t, &u)) in self.times.iter().zip(&self.values).enumerate() {
            let mut size = 0.0;
            let mut is_jump = false;
            while k < self.jumps.len() && self.jumps[k].index == i {
                size += self.jumps[k].size;
                is_jump = true;
                k += 1;
            }
            writeln!(
                out,
                "{},{},{},{}",
                crate::io::fmt_f64(t),
                crate::io::fmt_f64(u),
                u8::from(is_jump),
                crate::io::fmt_f64(size)
            )?;
        }
        Ok(())
    }
}

/// Replays a [`DriverPath`], merging grid intervals up to the requested step.
pub struct PathCursor<'a> {
    path: &'a DriverPath,
    idx: usize,
    /// First ledger entry not yet replayed; a step never merges past it.
    next_jump: usize,
    t: f64,
    step_fraction: f64,
}

impl Drive for PathCursor<'_> {
    fn next_step(&mut self, t: f64, max_dt: f64, h_abs: f64) -> Step {
        let times = &self.path.times;
        let n = times.len();
        if self.idx + 1 >= n {
            self.t = t + max_dt;
            return Step { dt: max_dt, jump: 0.0, diffusive: 0.0 };
        }
        let cap = noise_cap(&self.path.noise, self.step_fraction, h_abs);
        let target = t + max_dt.min(cap);
        let mut j = (self.idx + times[self.idx + 1..].partition_point(|&s| s <= target)).max(self.idx + 1);
        let jumps = &self.path.jumps;
        while self.next_jump < jumps.len() && jumps[self.next_jump].index <= self.idx {
            self.next_jump += 1;
        }
        if let Some(next) = jumps.get(self.next_jump) {
            j = j.min(next.index);
        }
        let dt = times[j] - t;
        let total = self.path.values[j] - self.path.values[self.idx];
        let ledger = self.path.ledger_cum[j] - self.path.ledger_cum[self.idx];
        let rest = total - ledger;
        self.idx = j;
        self.t = times[j];
        if self.path.diffusive {
            Step { dt, jump: ledger, diffusive: rest }
        } else {
            Step { dt, jump: total, diffusive: 0.0 }
        }
    }

    fn value(&self) -> f64 {
        self.path.values[self.idx.min(self.path.values.len() - 1)]
    }

    fn diffusive(&self) -> bool {
        self.path.diffusive
    }
}

/// Longest step over which every `(alpha, theta)` source has scale at most
/// `sqrt(step_fraction) h_abs`.
pub(crate) fn noise_cap(noise: &[(f64, f64)], step_fraction: f64, h_abs: f64) -> f64 {
    let r = step_fraction.sqrt() * h_abs;
    noise.iter().fold(f64::INFINITY, |cap, &(alpha, theta)| cap.min(r.powf(alpha) / theta))
}

/// Sums independent paths on a common horizon over the union of their grids.
pub fn compose_drivers(paths: &[DriverPath]) -> Result<DriverPath> {
    ensure!(!paths.is_empty(), Usage, "nothing to compose");
    let horizon = paths[0].horizon();
    for p in paths {
        if (p.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
            return Err(Error::Usage(format!("mismatched horizons {} and {}", horizon, p.horizon())));
        }
    }
    if paths.len() == 1 {
        return Ok(paths[0].clone());
    }
    let mut times: Vec<f64> = paths.iter().flat_map(|p| p.times[..p.times.len() - 1].iter().copied()).collect();
    times.push(horizon);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut values = vec![0.0; times.len()];
    let mut jumps = Vec::new();
    for p in paths {
        let mut k = 0;
        for (i, &t) in times.iter().enumerate() {
            while k + 1 < p.times.len() && p.times[k + 1] <= t {
                k += 1;
            }
            values[i] += p.values[k];
        }
        for j in &p.jumps {
            let index = times.partition_point(|&s| s < j.time).min(times.len() - 1);
            jumps.push(LedgerJump { time: times[index], size: j.size, index });
        }
    }
    let tag = paths.iter().map(|p| p.seed_tag.as_str()).collect::<Vec<_>>().join("+");
    let noise = paths.iter().flat_map(|p| p.noise.iter().copied()).collect();
    Ok(DriverPath::new(times, values, jumps, paths.iter().any(|p| p.diffusive), tag)?.with_noise(noise))
}
