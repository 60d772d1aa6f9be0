use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha::{evolve_point_beta_stream, AlphaEvolutionConfig};
use crate::calculus::theta0;
use crate::driver::{Component, DeclaredClass, DriverSpec};
use crate::error::{ensure, Error, Result};
use crate::loewner::{default_hit_tolerance, evolve_point_stream, EvolutionConfig};
use crate::rng::cell_seed;
use crate::stats::{binomial_se, wilson_interval, Z95};

/// Replica count, horizon and seed of one Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub n: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Defaults to `1e-4 (1 + |z|)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hit_tolerance: Option<f64>,
    #[serde(default = "default_dt_safety")]
    pub dt_safety: f64,
}

fn default_dt_safety() -> f64 {
    0.1
}

impl McSettings {
    pub fn new(n: usize, horizon: f64, seed: u64) -> Self {
        Self { n, horizon, seed, hit_tolerance: None, dt_safety: default_dt_safety() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n >= 1, Domain, "n must be >= 1");
        ensure!(self.horizon > 0.0 && self.horizon.is_finite(), Domain, "horizon must be > 0");
        if let Some(d) = self.hit_tolerance {
            ensure!(d > 0.0, Domain, "hit_tolerance must be > 0");
        }
        Ok(())
    }

    /// Evolution settings for a run to `2T`, so that one run answers both
    /// `zeta <= T` and `zeta <= 2T` on the same driver.
    pub(crate) fn evolution(&self, z: Complex64, horizon: f64) -> EvolutionConfig {
        let mut cfg = EvolutionConfig::new(horizon);
        cfg.dt_max = self.horizon / 100.0;
        cfg.dt_safety = self.dt_safety;
        cfg.hit_tolerance = self.hit_tolerance.unwrap_or_else(|| default_hit_tolerance(z));
        cfg
    }
}

/// `sqrt(kappa) B + theta^(1/alpha) S` evolved under the β-flow from `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseParams {
    pub kappa: f64,
    pub alpha: f64,
    pub theta: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub z: Complex64,
}

fn default_beta() -> f64 {
    2.0
}

impl PhaseParams {
    pub fn new(kappa: f64, alpha: f64, theta: f64, z: Complex64) -> Self {
        Self { kappa, alpha, theta, beta: 2.0, z }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn spec(&self) -> Result<DriverSpec> {
        DriverSpec::levy(self.kappa, self.alpha, self.theta)
    }
}

/// Whether the hit fraction still moves between horizons `T` and `2T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonFlag {
    Stable,
    Drifting,
}

impl HorizonFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            HorizonFlag::Stable => "stable",
            HorizonFlag::Drifting => "drifting",
        }
    }
}

/// Raw hit counts at `T` and `2T` on the same replicas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HitCounts {
    pub n: usize,
    pub hits: usize,
    pub hits_2t: usize,
}

impl HitCounts {
    pub fn fraction(&self) -> f64 {
        self.hits as f64 / self.n as f64
    }

    pub fn fraction_2t(&self) -> f64 {
        self.hits_2t as f64 / self.n as f64
    }

    pub fn wilson(&self) -> (f64, f64) {
        wilson_interval(self.hits, self.n, Z95)
    }

    /// Drifting when the `2T` fraction exceeds the `T` fraction by more than
    /// twice their combined standard error.
    pub fn horizon_flag(&self) -> HorizonFlag {
        let se = binomial_se(self.hits, self.n).hypot(binomial_se(self.hits_2t, self.n));
        if self.fraction_2t() - self.fraction() > 2.0 * se {
            HorizonFlag::Drifting
        } else {
            HorizonFlag::Stable
        }
    }
}

/// Counts `zeta <= T` and `zeta <= 2T` over `n` independent drivers.
pub fn estimate_hits(spec: &DriverSpec, beta: f64, z: Complex64, mc: &McSettings) -> Result<HitCounts> {
    mc.validate()?;
    spec.validate()?;
    ensure!(z != Complex64::new(0.0, 0.0), Domain, "z must be nonzero");
    ensure!(z.im >= 0.0 && z.re.is_finite() && z.im.is_finite(), Domain, "z must lie in the closed upper half-plane");
    let cfg = AlphaEvolutionConfig::new(beta, mc.evolution(z, 2.0 * mc.horizon))?;
    let zetas: Vec<Result<f64>> = (0..mc.n as u64)
        .into_par_iter()
        .map(|k| {
            let out = if beta == 2.0 {
                evolve_point_stream(z, spec, mc.seed, k, &cfg.evolution)?
            } else {
                evolve_point_beta_stream(z, spec, mc.seed, k, &cfg)?
            };
            Ok(out.zeta_or_inf())
        })
        .collect();
    let mut hits = 0;
    let mut hits_2t = 0;
    for zeta in zetas {
        let zeta = zeta?;
        hits += (zeta <= mc.horizon) as usize;
        hits_2t += (zeta <= 2.0 * mc.horizon) as usize;
    }
    Ok(HitCounts { n: mc.n, hits, hits_2t })
}

/// Estimate of `P(zeta(z) <= T)` with its Wilson interval and the `T` vs
/// `2T` horizon diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseEstimate {
    pub params: PhaseParams,
    pub n: usize,
    pub horizon: f64,
    pub seed: u64,
    pub hits: usize,
    pub hit_fraction: f64,
    pub wilson_ci: (f64, f64),
    pub hit_fraction_2t: f64,
    pub horizon_flag: HorizonFlag,
}

impl PhaseEstimate {
    fn from_counts(params: PhaseParams, mc: &McSettings, c: HitCounts) -> Self {
        Self {
            params,
            n: c.n,
            horizon: mc.horizon,
            seed: mc.seed,
            hits: c.hits,
            hit_fraction: c.fraction(),
            wilson_ci: c.wilson(),
            hit_fraction_2t: c.fraction_2t(),
            horizon_flag: c.horizon_flag(),
        }
    }
}

pub fn hitting_probability(params: &PhaseParams, mc: &McSettings) -> Result<PhaseEstimate> {
    let counts = estimate_hits(&params.spec()?, params.beta, params.z, mc)?;
    Ok(PhaseEstimate::from_counts(*params, mc, counts))
}

/// Cartesian sweep over `kappa x alpha x theta x beta`, in that nesting
/// order (`beta` fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGrid {
    pub kappa: Vec<f64>,
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
    #[serde(default = "default_beta_list")]
    pub beta: Vec<f64>,
}

fn default_beta_list() -> Vec<f64> {
    vec![2.0]
}

impl PhaseGrid {
    pub fn cells(&self, z: Complex64) -> Vec<PhaseParams> {
        let mut out = Vec::new();
        for &kappa in &self.kappa {
            for &alpha in &self.alpha {
                for &theta in &self.theta {
                    for &beta in &self.beta {
                        out.push(PhaseParams { kappa, alpha, theta, beta, z });
                    }
                }
            }
        }
        out
    }
}

/// One [`hitting_probability`] per grid cell; cell `i` runs on seed
/// `cell_seed(mc.seed, i)`.
pub fn phase_scan(grid: &PhaseGrid, z: Complex64, mc: &McSettings) -> Result<Vec<PhaseEstimate>> {
    let cells = grid.cells(z);
    ensure!(!cells.is_empty(), Usage, "phase grid is empty");
    cells.iter().enumerate().map(|(i, p)| hitting_probability(p, &mc.with_seed(cell_seed(mc.seed, i as u64)))).collect()
}

/// Empirical location of the hit-fraction crossing of 1/2 along a θ grid
/// for `beta = alpha`, next to the analytic threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theta0Bracket {
    pub alpha: f64,
    pub theta0: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    /// Hit fraction pooled over the z set, per grid θ.
    pub thetas: Vec<f64>,
    pub fractions: Vec<f64>,
    pub estimates: Vec<PhaseEstimate>,
    /// The fractions were not monotone across the crossing and the bracket
    /// was widened to cover every sign change.
    pub widened: bool,
}

impl Theta0Bracket {
    pub fn contains_theta0(&self) -> bool {
        self.theta_lo <= self.theta0 && self.theta0 <= self.theta_hi
    }
}

/// Sweeps θ with `beta = alpha` and brackets the crossing of 1/2.
///
/// `theta_lo` is the largest grid θ below which every pooled fraction is
/// under 1/2; `theta_hi` the smallest above which every fraction is at
/// least 1/2.
pub fn theta0_bracket(alpha: f64, thetas: &[f64], zs: &[Complex64], mc: &McSettings) -> Result<Theta0Bracket> {
    ensure!(alpha > 1.0 && alpha < 2.0, Domain, "theta0_bracket needs 1 < alpha < 2, got {alpha}");
    ensure!(!thetas.is_empty() && !zs.is_empty(), Usage, "theta grid and z set must be nonempty");
    ensure!(thetas.windows(2).all(|w| w[0] < w[1]), Usage, "theta grid must be strictly ascending");
    let mut estimates = Vec::new();
    let mut fractions = Vec::new();
    for (i, &theta) in thetas.iter().enumerate() {
        let mut hits = 0;
        let mut n = 0;
        for (j, &z) in zs.iter().enumerate() {
            let params = PhaseParams::new(0.0, alpha, theta, z).with_beta(alpha);
            let cell = (i * zs.len() + j) as u64;
            let est = hitting_probability(&params, &mc.with_seed(cell_seed(mc.seed, cell)))?;
            hits += est.hits;
            n += est.n;
            estimates.push(est);
        }
        fractions.push(hits as f64 / n as f64);
    }
    let below = fractions.iter().take_while(|f| **f < 0.5).count();
    let above = fractions.iter().rev().take_while(|f| **f >= 0.5).count();
    if below == 0 || above == 0 {
        return Err(Error::Statistical(format!("hit fraction does not cross 1/2 on the theta grid: {fractions:?}")));
    }
    let lo_idx = below - 1;
    let hi_idx = thetas.len() - above;
    Ok(Theta0Bracket {
        alpha,
        theta0: theta0(alpha)?,
        theta_lo: thetas[lo_idx],
        theta_hi: thetas[hi_idx],
        thetas: thetas.to_vec(),
        fractions,
        estimates,
        widened: hi_idx != lo_idx + 1,
    })
}

/// One row of [`corollary_driver_phase`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryRow {
    pub z: Complex64,
    pub declared_class: DeclaredClass,
    /// Expected phase from `kappa` and the declared class: `never`,
    /// `always` or `partial`; `n/a` when the class is unspecified.
    pub classification: &'static str,
    /// Part of the geometric approach to 0 reported for transient drivers.
    pub limit_sequence: bool,
    pub n: usize,
    pub horizon: f64,
    pub seed: u64,
    pub hits: usize,
    pub hit_fraction: f64,
    pub wilson_ci: (f64, f64),
    pub horizon_flag: HorizonFlag,
}

/// `sqrt(kappa) B + theta^(1/alpha) S^c + cpp` at each `z`; for a transient
/// compound Poisson part, three more rows at `min |z| / 10^k`, `k = 1..3`.
#[allow(clippy::too_many_arguments)]
pub fn corollary_driver_phase(
    alpha: f64,
    kappa: f64,
    theta: f64,
    cutoff: f64,
    cpp: &Component,
    zs: &[Complex64],
    mc: &McSettings,
) -> Result<Vec<CorollaryRow>> {
    let Component::CompoundPoisson { declared_class, .. } = cpp else {
        return Err(Error::Usage("the added component must be compound Poisson".into()));
    };
    ensure!(!zs.is_empty(), Usage, "z set must be nonempty");
    let mut components = Vec::new();
    if kappa > 0.0 {
        components.push(Component::Brownian { kappa });
    }
    components.push(Component::TruncatedStable { alpha, theta, cutoff, small_jump_cutoff: None });
    components.push(cpp.clone());
    let spec = DriverSpec::new(components)?;
    let classification = match declared_class {
        DeclaredClass::Unspecified => "n/a",
        _ if kappa <= 4.0 => "never",
        DeclaredClass::Recurrent => "always",
        DeclaredClass::Transient => "partial",
    };
    let mut points: Vec<(Complex64, bool)> = zs.iter().map(|z| (*z, false)).collect();
    if *declared_class == DeclaredClass::Transient {
        let z_min = zs.iter().copied().min_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        points.extend((1..=3).map(|k| (z_min / 10f64.powi(k), true)));
    }
    points
        .iter()
        .enumerate()
        .map(|(i, &(z, limit_sequence))| {
            let cell = mc.with_seed(cell_seed(mc.seed, i as u64));
            let c = estimate_hits(&spec, 2.0, z, &cell)?;
            Ok(CorollaryRow {
                z,
                declared_class: *declared_class,
                classification,
                limit_sequence,
                n: c.n,
                horizon: cell.horizon,
                seed: cell.seed,
                hits: c.hits,
                hit_fraction: c.fraction(),
                wilson_ci: c.wilson(),
                horizon_flag: c.horizon_flag(),
            })
        })
        .collect()
}
