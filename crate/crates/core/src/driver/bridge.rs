//! A shared driver realization that any number of evolutions can replay at
//! their own resolution.
//!
//! The Gaussian part (Brownian components and the compensating Gaussian of
//! small stable jumps) is fixed on a coarse grid and refined on demand by
//! Brownian bridge midpoints whose normals are a pure function of
//! `(seed, replica, interval, node)`. Jumps are sampled once and snapped to
//! the finest dyadic level of their interval. Two cursors asking for the
//! same time therefore always see the same value.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::spec::{Component, DriverSpec};
use super::stable::TruncatedParts;
use super::{Drive, Step};
use crate::calculus::frac_constant;
use crate::error::{ensure, Result};
use crate::rng::{mix, StreamKey};

/// Resolution of a [`BridgeDriver`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeSettings {
    /// Finest time step any cursor can take.
    pub fine_dt: f64,
    /// Coarse intervals have length `max(1024 fine_dt, coarsening t)`.
    pub coarsening: f64,
    /// Stable jumps above `max(jump_floor, jump_scale sqrt(t))` are kept
    /// as jumps; smaller ones become a Gaussian of equal variance.
    pub jump_floor: f64,
    pub jump_scale: f64,
}

impl BridgeSettings {
    /// Settings for resolving hits at distance `delta`: `fine_dt = delta^2/16`,
    /// jumps kept down to `delta/4`.
    pub fn for_tolerance(delta: f64) -> Self {
        Self { fine_dt: delta * delta / 16.0, coarsening: 1.0 / 64.0, jump_floor: 0.25 * delta, jump_scale: 1.0 / 32.0 }
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.fine_dt > 0.0, Domain, "fine_dt must be > 0");
        ensure!(self.coarsening > 0.0, Domain, "coarsening must be > 0");
        ensure!(self.jump_floor > 0.0, Domain, "jump_floor must be > 0");
        ensure!(self.jump_scale >= 0.0, Domain, "jump_scale must be >= 0");
        Ok(())
    }
}

struct Interval {
    start: f64,
    /// Fine spacing; the interval holds `2^level` fine steps.
    step: f64,
    level: u32,
    rate: f64,
    /// Gaussian part at `start`.
    gauss: f64,
    key: u64,
}

/// Jump snapped to fine position `pos` of interval `interval`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Snapped {
    interval: usize,
    pos: u64,
    size: f64,
}

/// Driver fixed once per replica and refined lazily.
pub struct BridgeDriver {
    intervals: Vec<Interval>,
    /// Gaussian part at the end of the last interval.
    end_gauss: f64,
    jumps: Vec<Snapped>,
    diffusive: bool,
    horizon: f64,
}

/// Standard normal drawn from a hash of `(key, node)`.
fn hashed_normal(key: u64, node: u64) -> f64 {
    let a = mix(key, node);
    let b = mix(a, node ^ 0xa5a5);
    let u1 = ((a >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
    let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Component index of the coarse Gaussian stream.
const GAUSS_COMPONENT: u64 = u64::MAX - 1;

impl BridgeDriver {
    pub fn new(spec: &DriverSpec, seed: u64, replica: u64, horizon: f64, settings: &BridgeSettings) -> Result<Self> {
        spec.validate()?;
        settings.validate()?;
        ensure!(horizon > 0.0 && horizon.is_finite(), Domain, "horizon must be > 0");
        let base = settings.fine_dt * 1024.0;
        let mut starts = vec![0.0];
        let mut t = 0.0;
        while t < horizon {
            t = (t + base.max(settings.coarsening * t)).min(horizon);
            if horizon - t < 1e-9 * horizon {
                t = horizon;
            }
            starts.push(t);
        }
        let eps_at = |t: f64| settings.jump_floor.max(settings.jump_scale * t.sqrt());
        let mut gauss_rng = StreamKey::new(seed, replica, GAUSS_COMPONENT).rng();
        let mut intervals = Vec::with_capacity(starts.len() - 1);
        let mut gauss = 0.0;
        let base_rate = spec.diffusive_rate()
            + spec
                .components
                .iter()
                .map(|c| match *c {
                    Component::TruncatedStable { alpha, theta, cutoff, small_jump_cutoff } => {
                        let p = TruncatedParts::new(alpha, cutoff, small_jump_cutoff);
                        theta.powf(2.0 / alpha) * p.small_variance
                    }
                    _ => 0.0,
                })
                .sum::<f64>();
        for (k, w) in starts.windows(2).enumerate() {
            let len = w[1] - w[0];
            let level = (len / settings.fine_dt).log2().ceil().max(0.0) as u32;
            let eps = eps_at(w[0]);
            let rate = base_rate
                + spec
                    .components
                    .iter()
                    .map(|c| match *c {
                        Component::Stable { alpha, theta } if alpha < 2.0 => {
                            let weight = theta * frac_constant(alpha).expect("alpha validated");
                            2.0 * weight * eps.powf(2.0 - alpha) / (2.0 - alpha)
                        }
                        _ => 0.0,
                    })
                    .sum::<f64>();
            intervals.push(Interval {
                start: w[0],
                step: len / (1u64 << level) as f64,
                level,
                rate,
                gauss,
                key: mix(mix(seed, replica), k as u64),
            });
            let z: f64 = StandardNormal.sample(&mut gauss_rng);
            gauss += (rate * len).sqrt() * z;
        }
        let mut jumps = Vec::new();
        let snap = |t: f64, size: f64, jumps: &mut Vec<Snapped>| {
            let k = starts.partition_point(|&s| s < t).saturating_sub(1).min(intervals.len() - 1);
            let iv = &intervals[k];
            let pos = (((t - iv.start) / iv.step).ceil() as u64).clamp(1, 1u64 << iv.level);
            jumps.push(Snapped { interval: k, pos, size });
        };
        for (j, c) in spec.components.iter().enumerate() {
            let mut rng = StreamKey::new(seed, replica, j as u64).rng();
            match *c {
                Component::Stable { alpha, theta } if alpha < 2.0 => {
                    let weight = theta * frac_constant(alpha).expect("alpha validated");
                    for iv in &intervals {
                        let eps = eps_at(iv.start);
                        let len = iv.step * (1u64 << iv.level) as f64;
                        let mean = 2.0 * weight * eps.powf(-alpha) / alpha * len;
                        let count = Poisson::new(mean).map(|p| p.sample(&mut rng) as u64).unwrap_or(0);
                        for _ in 0..count {
                            let at = iv.start + len * rng.random::<f64>();
                            let v: f64 = Open01.sample(&mut rng);
                            let size = eps * v.powf(-1.0 / alpha);
                            snap(at, if rng.random::<bool>() { size } else { -size }, &mut jumps);
                        }
                    }
                }
                Component::TruncatedStable { alpha, theta, cutoff, small_jump_cutoff } => {
                    let parts = TruncatedParts::new(alpha, cutoff, small_jump_cutoff);
                    let scale = theta.powf(1.0 / alpha);
                    let mut t = 0.0;
                    loop {
                        let e: f64 = Exp1.sample(&mut rng);
                        t += e / parts.rate;
                        if t > horizon {
                            break;
                        }
                        snap(t, scale * parts.sample_jump(&mut rng), &mut jumps);
                    }
                }
                Component::CompoundPoisson { rate, ref jump_law, .. } => {
                    let mut t = 0.0;
                    loop {
                        let e: f64 = Exp1.sample(&mut rng);
                        t += e / rate;
                        if t > horizon {
                            break;
                        }
                        snap(t, jump_law.sample(&mut rng), &mut jumps);
                    }
                }
                _ => {}
            }
        }
        jumps.sort_by_key(|j| (j.interval, j.pos));
        Ok(Self { intervals, end_gauss: gauss, jumps, diffusive: spec.diffusive_rate() > 0.0, horizon })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of explicit jumps.
    pub fn jump_count(&self) -> usize {
        self.jumps.len()
    }

    fn gauss_end(&self, k: usize) -> f64 {
        self.intervals.get(k + 1).map_or(self.end_gauss, |iv| iv.gauss)
    }

    /// Gaussian part at fine position `pos` of interval `k`.
    fn gauss_at(&self, k: usize, pos: u64) -> f64 {
        let iv = &self.intervals[k];
        let (mut lo, mut hi) = (0u64, 1u64 << iv.level);
        let (mut wl, mut wh) = (iv.gauss, self.gauss_end(k));
        loop {
            if pos == lo {
                return wl;
            }
            if pos == hi {
                return wh;
            }
            let mid = (lo + hi) / 2;
            let var = iv.rate * (hi - lo) as f64 * iv.step / 4.0;
            let wm = 0.5 * (wl + wh) + var.sqrt() * hashed_normal(iv.key, mid);
            if pos < mid {
                hi = mid;
                wh = wm;
            } else {
                lo = mid;
                wl = wm;
            }
        }
    }

    /// Cursor replaying this driver from time 0. A step keeps a typical
    /// Gaussian increment below `sqrt(2 step_fraction) |h|`.
    pub fn cursor(&self, step_fraction: f64) -> BridgeCursor<'_> {
        BridgeCursor { driver: self, k: 0, pos: 0, gauss: 0.0, jump_sum: 0.0, next_jump: 0, step_fraction }
    }
}

pub struct BridgeCursor<'a> {
    driver: &'a BridgeDriver,
    k: usize,
    pos: u64,
    gauss: f64,
    jump_sum: f64,
    next_jump: usize,
    step_fraction: f64,
}

impl BridgeCursor<'_> {
    /// Time reached so far, free of accumulated rounding.
    pub fn time(&self) -> f64 {
        match self.driver.intervals.get(self.k) {
            Some(iv) => iv.start + self.pos as f64 * iv.step,
            None => self.driver.horizon,
        }
    }
}

impl Drive for BridgeCursor<'_> {
    fn next_step(&mut self, _t: f64, max_dt: f64, h_abs: f64) -> Step {
        let d = self.driver;
        if self.k < d.intervals.len() && self.pos == 1u64 << d.intervals[self.k].level {
            self.k += 1;
            self.pos = 0;
        }
        let Some(iv) = d.intervals.get(self.k) else {
            return Step { dt: max_dt, jump: 0.0, diffusive: 0.0 };
        };
        let mut want = max_dt;
        if iv.rate > 0.0 {
            want = want.min(2.0 * self.step_fraction * h_abs * h_abs / iv.rate);
        }
        let room = (1u64 << iv.level) - self.pos;
        let mut limit = room;
        if let Some(j) = d.jumps.get(self.next_jump) {
            if j.interval == self.k {
                limit = limit.min(j.pos - self.pos);
            }
        }
        // Largest power of two that fits the request, the alignment of the
        // current position and the distance to the next jump.
        let fine = (want / iv.step).max(1.0).min(limit as f64) as u64;
        let mut m = 63 - fine.leading_zeros();
        if self.pos > 0 {
            m = m.min(self.pos.trailing_zeros());
        }
        let n = 1u64 << m;
        let next = self.pos + n;
        let g = d.gauss_at(self.k, next);
        let mut jump = 0.0;
        while let Some(j) = d.jumps.get(self.next_jump) {
            if j.interval == self.k && j.pos == next {
                jump += j.size;
                self.next_jump += 1;
            } else {
                break;
            }
        }
        let diff = g - self.gauss;
        self.gauss = g;
        self.pos = next;
        self.jump_sum += jump;
        let dt = n as f64 * iv.step;
        if d.diffusive {
            Step { dt, jump, diffusive: diff }
        } else {
            Step { dt, jump: jump + diff, diffusive: 0.0 }
        }
    }

    fn value(&self) -> f64 {
        self.gauss + self.jump_sum
    }

    fn diffusive(&self) -> bool {
        self.driver.diffusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::JumpLaw;

    fn replay(d: &BridgeDriver, h_abs: f64) -> Vec<(f64, f64)> {
        let mut c = d.cursor(0.1);
        let mut t = 0.0;
        let mut out = vec![(0.0, 0.0)];
        while t < d.horizon() * (1.0 - 1e-12) {
            c.next_step(t, d.horizon() - t, h_abs);
            t = c.time();
            out.push((t, c.value()));
        }
        out
    }

    #[test]
    fn coarse_and_fine_replays_agree_on_shared_times() {
        let spec = DriverSpec::levy(2.0, 1.5, 1.0).unwrap();
        let d = BridgeDriver::new(&spec, 3, 1, 2.0, &BridgeSettings::for_tolerance(0.01)).unwrap();
        let coarse = replay(&d, 10.0);
        let fine = replay(&d, 0.01);
        assert!(fine.len() > 4 * coarse.len());
        let mut k = 0;
        for &(t, u) in &coarse {
            while fine[k].0 < t - 1e-12 {
                k += 1;
            }
            assert!((fine[k].0 - t).abs() < 1e-12, "time {t} missing from the fine replay");
            assert!((fine[k].1 - u).abs() < 1e-9, "t {t}: {} vs {u}", fine[k].1);
        }
        assert!((coarse.last().unwrap().0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn brownian_increments_have_the_right_variance() {
        let spec = DriverSpec::levy(4.0, 1.5, 1e-12).unwrap();
        let settings = BridgeSettings::for_tolerance(0.05);
        // U(1) over many replicas, read at fine resolution.
        let mut sum2 = 0.0;
        let n = 2000;
        for r in 0..n {
            let d = BridgeDriver::new(&spec, 11, r, 1.0, &settings).unwrap();
            let u = replay(&d, 0.05).last().unwrap().1;
            sum2 += u * u;
        }
        let var = sum2 / n as f64;
        // Standard error of a variance estimate: sqrt(2/n) * 4.
        assert!((var - 4.0).abs() < 4.0 * 4.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn bridge_midpoints_have_the_right_variance() {
        let spec = DriverSpec::levy(1.0, 1.5, 1e-12).unwrap();
        let settings = BridgeSettings { fine_dt: 1e-3, coarsening: 1.0, jump_floor: 1.0, jump_scale: 0.0 };
        // Increments over the first fine step, far below the coarse scale.
        let n = 4000;
        let mut sum2 = 0.0;
        for r in 0..n {
            let d = BridgeDriver::new(&spec, 5, r, 1.0, &settings).unwrap();
            let mut c = d.cursor(0.1);
            let st = c.next_step(0.0, 1e-3, 1.0);
            assert!((st.dt - 1.0 / 1024.0).abs() < 1e-15);
            sum2 += st.diffusive * st.diffusive;
        }
        let var = sum2 / n as f64 * 1024.0;
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn compound_poisson_jumps_land_inside_steps() {
        let spec = DriverSpec::new(vec![Component::CompoundPoisson {
            rate: 3.0,
            jump_law: JumpLaw::Constant { size: 1.0 },
            declared_class: Default::default(),
        }])
        .unwrap();
        let d = BridgeDriver::new(&spec, 2, 0, 10.0, &BridgeSettings::for_tolerance(0.1)).unwrap();
        let path = replay(&d, 5.0);
        assert_eq!(path.last().unwrap().1, d.jump_count() as f64);
        assert!(d.jump_count() > 10);
        assert!(path.windows(2).all(|w| w[1].1 - w[0].1 >= 0.0));
    }
}
