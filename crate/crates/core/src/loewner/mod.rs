//! Chordal Loewner flow `dh = 2/h dt - dU` for single points, exact
//! slit-map composition, capacity checks and cluster rasters.
//!
//! A point `z` is in the hull `K_t` once `h_s(z) = g_s(z) - U(s)` has
//! reached 0 for some `s <= t`. Numerically a hit is declared when `|h|`
//! comes within a tolerance of 0, either along the flow or right after a
//! driver jump.

mod flow;
mod kernel;
mod radial;
mod raster;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::driver::{DriverPath, DriverSpec, DriverStream};
use crate::error::{ensure, Result};
pub use flow::sqrt_upper;
#[allow(unused_imports)]
pub(crate) use kernel::{evolve, evolve_real, Flow, Phase, StepEvent};
pub use raster::{connected_components, raster_cluster, raster_cluster_bridge, ClusterRaster, Window};

/// Discretization settings for one evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Horizon `T`; points not hit by then are censored.
    pub horizon: f64,
    /// `|h| <= hit_tolerance` counts as a hit.
    pub hit_tolerance: f64,
    /// Upper bound on any single step.
    pub dt_max: f64,
    /// Fraction of the local time scale `|h|^2/4` (and of the driver's
    /// scale at `|h|`) that one step may use.
    pub dt_safety: f64,
    #[serde(default)]
    pub record_trajectory: bool,
}

impl EvolutionConfig {
    /// Defaults: `hit_tolerance = 1e-4`, `dt_max = T/100`, `dt_safety = 0.1`.
    pub fn new(horizon: f64) -> Self {
        Self { horizon, hit_tolerance: 1e-4, dt_max: horizon / 100.0, dt_safety: 0.1, record_trajectory: false }
    }

    pub fn with_hit_tolerance(mut self, delta: f64) -> Self {
        self.hit_tolerance = delta;
        self
    }

    pub fn with_trajectory(mut self) -> Self {
        self.record_trajectory = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.horizon > 0.0 && self.horizon.is_finite(), Domain, "horizon must be > 0");
        ensure!(self.hit_tolerance > 0.0, Domain, "hit_tolerance must be > 0");
        ensure!(self.dt_max > 0.0, Domain, "dt_max must be > 0");
        ensure!(
            self.dt_safety > 0.0 && self.dt_safety < 1.0,
            Domain,
            "dt_safety must lie in (0,1), got {}",
            self.dt_safety
        );
        Ok(())
    }
}

/// Hit tolerance scaled to the starting point, `1e-4 (1 + |z0|)`.
pub fn default_hit_tolerance(z0: Complex64) -> f64 {
    1e-4 * (1.0 + z0.norm())
}

/// When a point counts as swallowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HitRule {
    /// `|h| <= delta`.
    Absolute(f64),
    /// `|h| <= abs`, or `|h| / |h'| <= geom`. The ratio is about twice the
    /// distance from `z` to the growing hull near its tip, so this rule
    /// catches points the tip passes within a fraction of a raster cell.
    Geometric { abs: f64, geom: f64 },
}

impl HitRule {
    /// Threshold on `|h^2|` at a point with `|h| = h_abs` and `|h'| = dh_abs`.
    pub(crate) fn tau(&self, h_abs: f64, dh_abs: f64) -> f64 {
        match *self {
            HitRule::Absolute(d) => d * d,
            HitRule::Geometric { abs, geom } => (abs * abs).max(geom * dh_abs * h_abs),
        }
    }

    pub(crate) fn is_hit(&self, h_abs: f64, dh_abs: f64) -> bool {
        h_abs * h_abs <= self.tau(h_abs, dh_abs)
    }

    pub(crate) fn absolute(&self) -> f64 {
        match *self {
            HitRule::Absolute(d) => d,
            HitRule::Geometric { abs, .. } => abs,
        }
    }
}

/// Final state of a tracked point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PointStatus {
    /// Swallowed at time `zeta`.
    Hit { zeta: f64 },
    /// Still alive at the horizon.
    Censored { at: f64 },
    /// Stopped early by an observer.
    Stopped { at: f64 },
}

/// One recorded state `(t, h_t(z), U(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub h: Complex64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HittingOutcome {
    pub z0: Complex64,
    pub status: PointStatus,
    /// `h` at the end of the run (at the hit, horizon, or stop).
    pub h: Complex64,
    pub steps: usize,
    pub min_abs_h: f64,
    pub trajectory: Vec<TrajectorySample>,
}

impl HittingOutcome {
    pub fn zeta(&self) -> Option<f64> {
        match self.status {
            PointStatus::Hit { zeta } => Some(zeta),
            _ => None,
        }
    }

    pub fn is_hit(&self) -> bool {
        self.zeta().is_some()
    }

    /// Hit time, or `+inf` when not hit.
    pub fn zeta_or_inf(&self) -> f64 {
        self.zeta().unwrap_or(f64::INFINITY)
    }
}

fn check_path(path: &DriverPath, cfg: &EvolutionConfig) -> Result<()> {
    cfg.validate()?;
    ensure!(
        path.horizon() >= cfg.horizon * (1.0 - 1e-12),
        Usage,
        "driver horizon {} is shorter than the evolution horizon {}",
        path.horizon(),
        cfg.horizon
    );
    Ok(())
}

/// Evolves `z0` in the closed upper half-plane against a sampled driver.
pub fn evolve_point(z0: Complex64, path: &DriverPath, cfg: &EvolutionConfig) -> Result<HittingOutcome> {
    check_path(path, cfg)?;
    let rule = HitRule::Absolute(cfg.hit_tolerance);
    evolve(z0, &mut path.cursor(cfg.dt_safety), cfg, rule, Flow::Slit, |_| false)
}

/// [`evolve_point`] with a custom hit rule.
pub fn evolve_point_with_rule(
    z0: Complex64,
    path: &DriverPath,
    cfg: &EvolutionConfig,
    rule: HitRule,
) -> Result<HittingOutcome> {
    check_path(path, cfg)?;
    evolve(z0, &mut path.cursor(cfg.dt_safety), cfg, rule, Flow::Slit, |_| false)
}

/// Real-line specialization of [`evolve_point`].
pub fn evolve_real_point(x0: f64, path: &DriverPath, cfg: &EvolutionConfig) -> Result<HittingOutcome> {
    check_path(path, cfg)?;
    evolve_real(x0, &mut path.cursor(cfg.dt_safety), cfg, Flow::Slit, |_| false)
}

/// [`evolve_point`] against a lazily sampled driver `(spec, master, replica)`.
pub fn evolve_point_stream(
    z0: Complex64,
    spec: &DriverSpec,
    master: u64,
    replica: u64,
    cfg: &EvolutionConfig,
) -> Result<HittingOutcome> {
    cfg.validate()?;
    let mut driver = DriverStream::new(spec, master, replica, cfg.dt_safety);
    let rule = HitRule::Absolute(cfg.hit_tolerance);
    if z0.im == 0.0 {
        evolve_real(z0.re, &mut driver, cfg, Flow::Slit, |_| false)
    } else {
        evolve(z0, &mut driver, cfg, rule, Flow::Slit, |_| false)
    }
}

/// `u + sqrt((z-u)^2 + 4 dt)` in the upper half-plane: the constant-driver
/// Loewner map. `None` signals that `z` is swallowed exactly at `dt`.
pub fn slit_map(z: Complex64, u: f64, dt: f64) -> Result<Option<Complex64>> {
    ensure!(dt > 0.0, Domain, "slit_map needs dt > 0, got {dt}");
    let w = z - u;
    let arg = w * w + 4.0 * dt;
    if arg.re == 0.0 && arg.im == 0.0 {
        return Ok(None);
    }
    Ok(Some(u + sqrt_upper(arg, w.re)))
}

/// Outcome of [`compose_piecewise_constant`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Composed {
    /// `g_T(z)`.
    Point(Complex64),
    Swallowed(f64),
}

/// Applies `g_t` segment by segment for a driver held constant between grid
/// points, up to time `until`. Swallowing is `|g - U| <= delta`.
fn compose_segments(z: Complex64, path: &DriverPath, until: f64, delta: f64) -> Composed {
    let tau = delta * delta;
    let mut g = z;
    for (start, end, u) in path.segments() {
        if start >= until {
            break;
        }
        let h = g - u;
        if h.norm_sqr() <= tau {
            return Composed::Swallowed(start);
        }
        let dt = end.min(until) - start;
        match flow::slit_advance(h, dt, tau) {
            flow::Advance::Hit(s) => return Composed::Swallowed(start + s),
            flow::Advance::Moved(hn) => g = u + Complex64::new(hn.re, hn.im.min(h.im)),
        }
    }
    let h = g - path.value_at(until);
    if h.norm_sqr() <= tau {
        return Composed::Swallowed(until);
    }
    Composed::Point(g)
}

/// Exact composition of slit maps for a piecewise-constant driver.
pub fn compose_piecewise_constant(z: Complex64, path: &DriverPath, delta: f64) -> Result<Composed> {
    ensure!(z != Complex64::new(0.0, 0.0), Domain, "z0 must be nonzero");
    ensure!(z.im >= 0.0, Domain, "z0 must lie in the closed upper half-plane");
    ensure!(path.is_piecewise_constant(), Usage, "driver is not piecewise constant");
    Ok(compose_segments(z, path, path.horizon(), delta))
}

/// Half-plane capacity of `K_t`, estimated from `z (g_t(z) - z) -> hcap`
/// averaged over 8 points on the upper semicircle of radius `radius`
/// (default `100 (1 + sqrt t + max |U|)`).
pub fn estimate_hcap(path: &DriverPath, t: f64, radius: Option<f64>) -> Result<f64> {
    ensure!(t >= 0.0 && t <= path.horizon() * (1.0 + 1e-12), Usage, "t outside the driver horizon");
    if t == 0.0 {
        return Ok(0.0);
    }
    let r = radius.unwrap_or(100.0 * (1.0 + t.sqrt() + path.max_abs()));
    let m = 8;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..m {
        let z = Complex64::from_polar(r, std::f64::consts::PI * (k as f64 + 0.5) / m as f64);
        match compose_segments(z, path, t, 0.0) {
            Composed::Point(g) => acc += z * (g - z),
            Composed::Swallowed(_) => return Err(crate::Error::Usage(format!("probe radius {r} is inside the hull"))),
        }
    }
    Ok(acc.re / m as f64)
}
