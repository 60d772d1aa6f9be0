//! Step loop shared by every evolution: drift over the step with the driver
//! held, then the driver's diffusive part, then its jump part.

use num_complex::Complex64;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution};

use super::flow::{polar_advance, slit_advance, Advance};
use super::radial::bessel_bridge_hit;
use super::{EvolutionConfig, HitRule, HittingOutcome, PointStatus, TrajectorySample};
use crate::driver::Drive;
use crate::error::{ensure, Error, Result};

/// Constant-driver flow used between driver updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Flow {
    /// `dh/dt = 2/h`, exact slit map.
    Slit,
    /// `dh/dt = 2 |h|^(2-beta) / h` in polar coordinates.
    Polar(f64),
}

impl Flow {
    fn beta(self) -> f64 {
        match self {
            Flow::Slit => 2.0,
            Flow::Polar(b) => b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    Drift,
    Jump,
    Diffusive,
}

/// Passed to observers after every phase of a step, before the tolerance
/// hit check of that phase. Crossings of 0 found inside a continuous phase
/// end the run without an event.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepEvent {
    pub after: Complex64,
    pub phase: Phase,
}

struct Tracker {
    z0: Complex64,
    steps: usize,
    min_abs: f64,
    record: bool,
    trajectory: Vec<TrajectorySample>,
}

impl Tracker {
    fn new(z0: Complex64, record: bool) -> Self {
        let mut trajectory = Vec::new();
        if record {
            trajectory.push(TrajectorySample { t: 0.0, h: z0, u: 0.0 });
        }
        Self { z0, steps: 0, min_abs: z0.norm(), record, trajectory }
    }

    fn push(&mut self, t: f64, h: Complex64, u: f64) {
        self.min_abs = self.min_abs.min(h.norm());
        if self.record {
            self.trajectory.push(TrajectorySample { t, h, u });
        }
    }

    fn finish(mut self, status: PointStatus, h: Complex64, u: f64) -> HittingOutcome {
        let t = match status {
            PointStatus::Hit { zeta } => zeta,
            PointStatus::Censored { at } | PointStatus::Stopped { at } => at,
        };
        self.min_abs = self.min_abs.min(h.norm());
        if self.record && self.trajectory.last().map(|s| s.t) != Some(t) {
            self.trajectory.push(TrajectorySample { t, h, u });
        }
        HittingOutcome {
            z0: self.z0,
            status,
            h,
            steps: self.steps,
            min_abs_h: self.min_abs,
            trajectory: self.trajectory,
        }
    }
}

fn check_start(z0: Complex64) -> Result<()> {
    ensure!(z0.re.is_finite() && z0.im.is_finite(), Domain, "z0 must be finite");
    ensure!(z0 != Complex64::new(0.0, 0.0), Domain, "z0 must be nonzero");
    ensure!(z0.im >= 0.0, Domain, "z0 must lie in the closed upper half-plane, got {z0}");
    Ok(())
}

/// Step size allowed by the drift alone: `dt_safety |h|^beta / (2 beta)`.
fn drift_cap(cfg: &EvolutionConfig, h_abs: f64, beta: f64) -> f64 {
    cfg.dt_safety * h_abs.powf(beta) / (2.0 * beta)
}

fn underflow(t: f64, h: Complex64, dt: f64) -> Error {
    Error::Numerical(format!(
        "step underflow at t = {t}: dt = {dt:.3e} < 1e-14 T with |h| = {:.3e} and no hit",
        h.norm()
    ))
}

/// Evolves a point of the closed upper half-plane.
pub(crate) fn evolve<D, O>(
    z0: Complex64,
    driver: &mut D,
    cfg: &EvolutionConfig,
    rule: HitRule,
    flow: Flow,
    mut observer: O,
) -> Result<HittingOutcome>
where
    D: Drive,
    O: FnMut(&StepEvent) -> bool,
{
    check_start(z0)?;
    let horizon = cfg.horizon;
    let beta = flow.beta();
    let u_hit = rule.absolute().powf(beta);
    let mut tr = Tracker::new(z0, cfg.record_trajectory);
    let mut h = z0;
    // |h'|, tracked for the geometric rule (the slit flow only).
    let mut dh = 1.0;
    let mut t = 0.0;
    // At t = 0 the hull is the single point 0.
    if h.norm() <= rule.absolute() {
        return Ok(tr.finish(PointStatus::Hit { zeta: 0.0 }, h, 0.0));
    }
    while t < horizon {
        let h_abs = h.norm();
        let remaining = horizon - t;
        let cap = cfg.dt_max.min(drift_cap(cfg, h_abs, beta));
        let st = driver.next_step(t, cap.min(remaining), h_abs);
        if st.dt < 1e-14 * horizon && st.dt < remaining && st.jump == 0.0 {
            return Err(underflow(t, h, st.dt));
        }
        tr.steps += 1;

        let advance = match flow {
            Flow::Slit => slit_advance(h, st.dt, rule.tau(h_abs, dh)),
            Flow::Polar(b) => polar_advance(h, st.dt, b, u_hit),
        };
        match advance {
            Advance::Hit(s) => {
                let zeta = (t + s).min(horizon);
                return Ok(tr.finish(PointStatus::Hit { zeta }, h, driver.value()));
            }
            Advance::Moved(hn) => {
                let hn = Complex64::new(hn.re, hn.im.min(h.im).max(0.0));
                if matches!(flow, Flow::Slit) {
                    dh *= h_abs / hn.norm();
                }
                h = hn;
            }
        }
        t = if st.dt >= remaining { horizon } else { t + st.dt };
        if observer(&StepEvent { after: h, phase: Phase::Drift }) {
            return Ok(tr.finish(PointStatus::Stopped { at: t }, h, driver.value()));
        }

        if st.diffusive != 0.0 {
            let before = h;
            h -= st.diffusive;
            if h.im == 0.0 && before.re.signum() != h.re.signum() {
                let frac = before.re / st.diffusive;
                let zeta = t - st.dt * (1.0 - frac);
                return Ok(tr.finish(PointStatus::Hit { zeta }, h, driver.value()));
            }
            if observer(&StepEvent { after: h, phase: Phase::Diffusive }) {
                return Ok(tr.finish(PointStatus::Stopped { at: t }, h, driver.value()));
            }
            if rule.is_hit(h.norm(), dh) {
                return Ok(tr.finish(PointStatus::Hit { zeta: t }, h, driver.value()));
            }
        }
        if st.jump != 0.0 {
            h -= st.jump;
            if observer(&StepEvent { after: h, phase: Phase::Jump }) {
                return Ok(tr.finish(PointStatus::Stopped { at: t }, h, driver.value()));
            }
            if rule.is_hit(h.norm(), dh) {
                return Ok(tr.finish(PointStatus::Hit { zeta: t }, h, driver.value()));
            }
        }
        tr.push(t, h, driver.value());
    }
    Ok(tr.finish(PointStatus::Censored { at: horizon }, h, driver.value()))
}

/// Evolves a point of the real line; `h` stays real and the drift only
/// pushes it away from 0. Drivers that offer [`Drive::radial`] get the
/// drift and Gaussian part of each step from the exact Bessel law.
pub(crate) fn evolve_real<D, O>(
    x0: f64,
    driver: &mut D,
    cfg: &EvolutionConfig,
    flow: Flow,
    mut observer: O,
) -> Result<HittingOutcome>
where
    D: Drive,
    O: FnMut(&StepEvent) -> bool,
{
    let z0 = Complex64::new(x0, 0.0);
    check_start(z0)?;
    let horizon = cfg.horizon;
    let beta = flow.beta();
    let delta = cfg.hit_tolerance;
    let mut tr = Tracker::new(z0, cfg.record_trajectory);
    let c = |x: f64| Complex64::new(x, 0.0);
    let mut x = x0;
    let mut t = 0.0;
    if x.abs() <= delta {
        return Ok(tr.finish(PointStatus::Hit { zeta: 0.0 }, z0, 0.0));
    }
    let mut chi: Option<(f64, ChiSquared<f64>)> = None;
    while t < horizon {
        let a = x.abs();
        let remaining = horizon - t;
        let cap = cfg.dt_max.min(drift_cap(cfg, a, beta));
        let st = driver.next_step(t, cap.min(remaining), a);
        if st.dt < 1e-14 * horizon && st.dt < remaining && st.jump == 0.0 {
            return Err(underflow(t, c(x), st.dt));
        }
        tr.steps += 1;
        let t0 = t;
        t = if st.dt >= remaining { horizon } else { t + st.dt };
        let exact = if beta == 2.0 && st.diffusive != 0.0 { driver.radial() } else { None };
        if let Some(radial) = exact {
            // Drift and Gaussian part together from the Bessel transition.
            let k = radial.rate;
            let (_, law) =
                chi.get_or_insert_with(|| (k, ChiSquared::new(4.0 / k).expect("positive degrees of freedom")));
            let before = x;
            let y = ((x - st.diffusive).powi(2) + k * st.dt * law.sample(radial.rng)).sqrt();
            if k > 4.0 {
                let p = bessel_bridge_hit(0.5 - 2.0 / k, a * y / (k * st.dt));
                if radial.rng.random::<f64>() < p {
                    let zeta = t0 + st.dt * a / (a + y);
                    return Ok(tr.finish(PointStatus::Hit { zeta }, c(0.0), driver.value()));
                }
            }
            x = y.copysign(before);
            if observer(&StepEvent { after: c(x), phase: Phase::Diffusive }) {
                return Ok(tr.finish(PointStatus::Stopped { at: t }, c(x), driver.value()));
            }
            if x.abs() <= delta {
                return Ok(tr.finish(PointStatus::Hit { zeta: t }, c(x), driver.value()));
            }
        } else {
            x = if beta == 2.0 {
                (x * x + 4.0 * st.dt).sqrt().copysign(x)
            } else {
                (a.powf(beta) + 2.0 * beta * st.dt).powf(1.0 / beta).copysign(x)
            };
            if observer(&StepEvent { after: c(x), phase: Phase::Drift }) {
                return Ok(tr.finish(PointStatus::Stopped { at: t }, c(x), driver.value()));
            }
            if st.diffusive != 0.0 {
                let before = x;
                x -= st.diffusive;
                if before.signum() != x.signum() {
                    let zeta = t - st.dt * (1.0 - before / st.diffusive);
                    return Ok(tr.finish(PointStatus::Hit { zeta }, c(x), driver.value()));
                }
                if observer(&StepEvent { after: c(x), phase: Phase::Diffusive }) {
                    return Ok(tr.finish(PointStatus::Stopped { at: t }, c(x), driver.value()));
                }
                if x.abs() <= delta {
                    return Ok(tr.finish(PointStatus::Hit { zeta: t }, c(x), driver.value()));
                }
            }
        }
        if st.jump != 0.0 {
            x -= st.jump;
            if observer(&StepEvent { after: c(x), phase: Phase::Jump }) {
                return Ok(tr.finish(PointStatus::Stopped { at: t }, c(x), driver.value()));
            }
            if x.abs() <= delta {
                return Ok(tr.finish(PointStatus::Hit { zeta: t }, c(x), driver.value()));
            }
        }
        tr.push(t, c(x), driver.value());
    }
    Ok(tr.finish(PointStatus::Censored { at: horizon }, c(x), driver.value()))
}
