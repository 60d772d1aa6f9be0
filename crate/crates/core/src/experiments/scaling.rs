use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{DriverSpec, DriverStream};
use crate::error::{ensure, Result};
use crate::loewner::{default_hit_tolerance, evolve, EvolutionConfig, Flow, HitRule, PointStatus};
use crate::rng::cell_seed;
use crate::stats::{ks_two_sample, KsTest};

/// Summary statistic compared between the two sides of a scaling check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingStatistic {
    /// 1 when `zeta(z) <= T`, else 0.
    HitIndicator,
    /// `Im h` at `min(zeta, T)`.
    ImHT,
    /// `min(first time |h| >= R, zeta, T)`.
    ExitTime,
}

impl ScalingStatistic {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::HitIndicator => "hit_indicator",
            Self::ImHT => "im_h_t",
            Self::ExitTime => "exit_time",
        }
    }
}

/// Self-similarity check for `U = sqrt(kappa) B + theta^(1/alpha) S`:
/// the hull at time `a t` driven with `theta_tilde = a^(alpha/2 - 1) theta`
/// has the law of `sqrt(a)` times the hull at time `t` driven with `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSettings {
    pub kappa: f64,
    pub alpha: f64,
    pub theta: f64,
    pub a: f64,
    pub z: Complex64,
    /// Exit radius for [`ScalingStatistic::ExitTime`].
    pub radius: f64,
    pub horizon: f64,
    pub n: usize,
    pub seed: u64,
    pub statistic: ScalingStatistic,
    /// Replaces the rescaled `theta_tilde` (negative controls).
    #[serde(default)]
    pub theta_tilde_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub settings: ScalingSettings,
    pub theta_tilde: f64,
    pub ks_distance: f64,
    pub p_value: f64,
    pub level: f64,
    pub pass: bool,
}

struct Side {
    spec: DriverSpec,
    z: Complex64,
    radius: f64,
    cfg: EvolutionConfig,
    seed: u64,
}

impl Side {
    /// Statistic in the units of the time-`a t` side.
    fn sample(&self, stat: ScalingStatistic, replica: u64, time_scale: f64, space_scale: f64) -> Result<f64> {
        let mut driver = DriverStream::new(&self.spec, self.seed, replica, self.cfg.dt_safety);
        let rule = HitRule::Absolute(self.cfg.hit_tolerance);
        let stop = stat == ScalingStatistic::ExitTime;
        let radius = self.radius;
        let out = evolve(self.z, &mut driver, &self.cfg, rule, Flow::Slit, |ev| stop && ev.after.norm() >= radius)?;
        let end = match out.status {
            PointStatus::Hit { zeta } => zeta,
            PointStatus::Censored { at } | PointStatus::Stopped { at } => at,
        };
        Ok(match stat {
            ScalingStatistic::HitIndicator => f64::from(u8::from(out.is_hit())),
            ScalingStatistic::ImHT => space_scale * out.h.im.max(0.0),
            ScalingStatistic::ExitTime => time_scale * end.min(self.cfg.horizon),
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn side(
    kappa: f64,
    alpha: f64,
    theta: f64,
    z: Complex64,
    radius: f64,
    horizon: f64,
    delta: f64,
    seed: u64,
) -> Result<Side> {
    let mut cfg = EvolutionConfig::new(horizon).with_hit_tolerance(delta);
    cfg.dt_max = horizon / 100.0;
    Ok(Side { spec: DriverSpec::levy(kappa, alpha, theta)?, z, radius, cfg, seed })
}

/// Two-sample KS test at level 0.01 between the statistic under
/// `(theta_tilde, z, R, T)` and the rescaled statistic under
/// `(theta, z/sqrt(a), R/sqrt(a), T/a)`. The discretization is rescaled
/// with the same factors so that both sides are exact images of each other
/// in law.
pub fn scaling_check(s: &ScalingSettings) -> Result<ScalingReport> {
    ensure!(s.n >= 500, Statistical, "scaling checks need n >= 500, got {}", s.n);
    ensure!(s.a > 0.0 && s.a.is_finite(), Domain, "scale factor a must be > 0");
    ensure!(s.z.im > 0.0, Domain, "scaling checks need Im z > 0");
    ensure!(s.radius > s.z.norm(), Domain, "exit radius must exceed |z|");
    let theta_tilde = s.theta_tilde_override.unwrap_or(s.a.powf(0.5 * s.alpha - 1.0) * s.theta);
    let root = s.a.sqrt();
    let delta = default_hit_tolerance(s.z);
    let big = side(s.kappa, s.alpha, theta_tilde, s.z, s.radius, s.horizon, delta, cell_seed(s.seed, 0))?;
    let small = side(
        s.kappa,
        s.alpha,
        s.theta,
        s.z / root,
        s.radius / root,
        s.horizon / s.a,
        delta / root,
        cell_seed(s.seed, 1),
    )?;
    let xs: Vec<f64> =
        (0..s.n as u64).into_par_iter().map(|k| big.sample(s.statistic, k, 1.0, 1.0)).collect::<Result<_>>()?;
    let ys: Vec<f64> =
        (0..s.n as u64).into_par_iter().map(|k| small.sample(s.statistic, k, s.a, root)).collect::<Result<_>>()?;
    let KsTest { statistic, p_value } = ks_two_sample(&xs, &ys)?;
    let level = 0.01;
    Ok(ScalingReport {
        settings: s.clone(),
        theta_tilde,
        ks_distance: statistic,
        p_value,
        level,
        pass: p_value > level,
    })
}
