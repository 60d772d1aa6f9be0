use num_complex::Complex64;
use serde::Serialize;

use super::phase::{estimate_hits, McSettings};
use crate::driver::DriverSpec;
use crate::error::{ensure, Result};
use crate::rng::cell_seed;
use crate::stats::{weighted_linear_fit, Z95};

/// Which tail a fit describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSide {
    /// `log P(zeta > T)` against `log x` for `x` in `(0,1]`.
    NearZero,
    /// `log P(zeta <= T)` against `log x` for `x >= 2`.
    NearInfinity,
}

/// One grid point of an exponent fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPoint {
    pub x: f64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// False when the interval touches 0 or 1 and the point was dropped.
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub side: FitSide,
    pub kappa: f64,
    pub alpha: f64,
    pub theta: f64,
    pub n: usize,
    pub horizon: f64,
    pub seed: u64,
    pub points: Vec<ExponentPoint>,
    pub slope: f64,
    pub se: f64,
    pub expected: f64,
}

impl ExponentFit {
    pub fn within(&self, tol: f64) -> bool {
        (self.slope - self.expected).abs() <= tol
    }

    /// `p_hat` increases with `x` near zero and decreases near infinity.
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| match self.side {
            FitSide::NearZero => w[1].p_hat >= w[0].p_hat,
            FitSide::NearInfinity => w[1].p_hat <= w[0].p_hat,
        })
    }
}

fn check(kappa: f64, alpha: f64, xs: &[f64]) -> Result<()> {
    ensure!(kappa > 4.0, Domain, "exponent fits need kappa > 4, got {kappa}");
    ensure!(alpha > 0.0 && alpha < 1.0, Domain, "exponent fits need 0 < alpha < 1, got {alpha}");
    ensure!(xs.windows(2).all(|w| w[0] < w[1]), Usage, "x grid must be strictly ascending");
    Ok(())
}

fn fit(
    side: FitSide,
    kappa: f64,
    alpha: f64,
    theta: f64,
    xs: &[f64],
    mc: &McSettings,
    expected: f64,
) -> Result<ExponentFit> {
    let spec = DriverSpec::levy(kappa, alpha, theta)?;
    let mut points = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let c = estimate_hits(&spec, 2.0, Complex64::new(x, 0.0), &mc.with_seed(cell_seed(mc.seed, i as u64)))?;
        let (lo, hi) = c.wilson();
        let (p_hat, ci_lo, ci_hi) = match side {
            FitSide::NearZero => (1.0 - c.fraction(), 1.0 - hi, 1.0 - lo),
            FitSide::NearInfinity => (c.fraction(), lo, hi),
        };
        let used = c.hits > 0 && c.hits < c.n;
        points.push(ExponentPoint { x, p_hat, ci_lo, ci_hi, used });
    }
    let used: Vec<&ExponentPoint> = points.iter().filter(|p| p.used).collect();
    ensure!(
        used.len() >= 5,
        Statistical,
        "only {} grid points have intervals inside (0,1); at least 5 are needed",
        used.len()
    );
    let lx: Vec<f64> = used.iter().map(|p| p.x.ln()).collect();
    let ly: Vec<f64> = used.iter().map(|p| p.p_hat.ln()).collect();
    let sigma: Vec<f64> = used.iter().map(|p| (p.ci_hi.ln() - p.ci_lo.ln()) / (2.0 * Z95)).collect();
    let line = weighted_linear_fit(&lx, &ly, &sigma)?;
    Ok(ExponentFit {
        side,
        kappa,
        alpha,
        theta,
        n: mc.n,
        horizon: mc.horizon,
        seed: mc.seed,
        points,
        slope: line.slope,
        se: line.slope_se,
        expected,
    })
}

/// Survival exponent near the origin; the expected slope is `1 - 4/kappa`.
pub fn slope_near_zero(kappa: f64, alpha: f64, theta: f64, xs: &[f64], mc: &McSettings) -> Result<ExponentFit> {
    check(kappa, alpha, xs)?;
    ensure!(xs.iter().all(|x| *x > 0.0 && *x <= 1.0), Domain, "near-zero grid must lie in (0,1]");
    fit(FitSide::NearZero, kappa, alpha, theta, xs, mc, 1.0 - 4.0 / kappa)
}

/// Hitting exponent far from the origin; the expected slope is `alpha - 1`.
pub fn slope_near_infinity(kappa: f64, alpha: f64, theta: f64, xs: &[f64], mc: &McSettings) -> Result<ExponentFit> {
    check(kappa, alpha, xs)?;
    ensure!(xs.iter().all(|x| *x >= 2.0 && x.is_finite()), Domain, "near-infinity grid must lie in [2, inf)");
    fit(FitSide::NearInfinity, kappa, alpha, theta, xs, mc, alpha - 1.0)
}
