use serde::{Deserialize, Serialize};

use crate::driver::{BridgeDriver, BridgeSettings, DriverSpec};
use crate::error::{ensure, Result};
use crate::loewner::{connected_components, raster_cluster_bridge, ClusterRaster, EvolutionConfig, Window};
use crate::stats::{wilson_interval, Z95};

/// Raster resolution shared by the area and disconnection estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterSettings {
    /// Number of cells along the horizontal side of the window.
    pub cells_across: usize,
    /// Resolves the driver as for a raster this many cells across, so
    /// that rasters of different resolution share one realization.
    /// Defaults to `cells_across`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub driver_cells_across: Option<usize>,
}

impl RasterSettings {
    pub fn new(cells_across: usize) -> Self {
        Self { cells_across, driver_cells_across: None }
    }

    pub fn with_driver_cells_across(mut self, cells: usize) -> Self {
        self.driver_cells_across = Some(cells);
        self
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.cells_across >= 2, Usage, "raster needs at least 2 cells across");
        ensure!(
            self.driver_cells_across.is_none_or(|d| d >= 2),
            Usage,
            "driver resolution needs at least 2 cells across"
        );
        Ok(())
    }

    /// Hit tolerance the driver resolves in a window `width` wide.
    fn driver_delta(&self, width: f64) -> f64 {
        0.5 * width / self.driver_cells_across.unwrap_or(self.cells_across) as f64
    }
}

/// One replica's hull on the raster. Cells are hit within half a cell, and
/// the shared driver resolves `driver_delta` (see [`BridgeSettings::for_tolerance`]).
#[allow(clippy::too_many_arguments)]
fn rasterize(
    spec: &DriverSpec,
    window: Window,
    nx: usize,
    ny: usize,
    driver_delta: f64,
    horizon: f64,
    seed: u64,
    replica: u64,
) -> Result<ClusterRaster> {
    let cell = ((window.x_max - window.x_min) / nx as f64).max((window.y_max - window.y_min) / ny as f64);
    let delta = 0.5 * cell;
    let driver = BridgeDriver::new(spec, seed, replica, horizon, &BridgeSettings::for_tolerance(driver_delta))?;
    let cfg = EvolutionConfig::new(horizon).with_hit_tolerance(delta);
    raster_cluster_bridge(window, nx, ny, &driver, &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSettings {
    pub kappa: f64,
    pub alpha: f64,
    pub theta: f64,
    /// Ascending radii of the half-disks `B(0, r)`.
    pub radii: Vec<f64>,
    pub raster: RasterSettings,
    pub horizon: f64,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaFractions {
    pub settings: AreaSettings,
    /// Side of one raster cell.
    pub cell: f64,
    /// `fractions[k][i]`: replica `k`, radius `i`.
    pub fractions: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub failed_cells: usize,
}

/// Fraction of raster cells of each half-disk `B(0, r)` in the upper
/// half-plane with `zeta <= T`, averaged over replicas. The window is
/// `[-r_max, r_max] x [0, r_max]`.
pub fn area_fraction(s: &AreaSettings) -> Result<AreaFractions> {
    ensure!(!s.radii.is_empty(), Usage, "radius list is empty");
    ensure!(s.radii[0] > 0.0, Domain, "radii must be positive");
    ensure!(s.radii.windows(2).all(|w| w[0] < w[1]), Usage, "radii must be strictly ascending");
    ensure!(s.n >= 1, Domain, "n must be >= 1");
    ensure!(s.horizon > 0.0, Domain, "horizon must be > 0");
    s.raster.validate()?;
    let r_max = *s.radii.last().unwrap();
    let nx = s.raster.cells_across;
    let cell = 2.0 * r_max / nx as f64;
    let across = 2.0 * s.radii[0] / cell;
    ensure!(
        across >= 32.0 - 1e-9,
        Usage,
        "resolution too coarse: {across:.1} cells across the smallest radius, need at least 32"
    );
    let window = Window::new(-r_max, r_max, 0.0, r_max)?;
    let ny = nx / 2;
    let spec = DriverSpec::levy(s.kappa, s.alpha, s.theta)?;
    let driver_delta = s.raster.driver_delta(2.0 * r_max);
    let mut fractions = Vec::with_capacity(s.n);
    let mut failed_cells = 0;
    for k in 0..s.n as u64 {
        let raster = rasterize(&spec, window, nx, ny, driver_delta, s.horizon, s.seed, k)?;
        failed_cells += raster.failed_cells();
        let mut row = Vec::with_capacity(s.radii.len());
        for &r in &s.radii {
            let (mut inside, mut hit) = (0usize, 0usize);
            for j in 0..ny {
                for i in 0..nx {
                    if raster.center(i, j).norm() < r {
                        inside += 1;
                        hit += usize::from(raster.get(i, j) <= s.horizon);
                    }
                }
            }
            row.push(hit as f64 / inside as f64);
        }
        fractions.push(row);
    }
    let m = s.n as f64;
    let mean: Vec<f64> = (0..s.radii.len()).map(|i| fractions.iter().map(|f| f[i]).sum::<f64>() / m).collect();
    let se = (0..s.radii.len())
        .map(|i| {
            if s.n < 2 {
                return 0.0;
            }
            let var = fractions.iter().map(|f| (f[i] - mean[i]).powi(2)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        })
        .collect();
    Ok(AreaFractions { settings: s.clone(), cell, fractions, mean, se, failed_cells })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisconnectionEstimate {
    pub t: f64,
    pub n: usize,
    pub seed: u64,
    /// Component count of each replica's hull at time `t`.
    pub components: Vec<usize>,
    pub disconnected: usize,
    pub fraction: f64,
    pub wilson_ci: (f64, f64),
}

/// Fraction of replicas whose rasterized hull `K_t` has at least two
/// 8-connected components in `window`.
pub fn disconnection_frequency(
    spec: &DriverSpec,
    t: f64,
    n: usize,
    window: Window,
    raster: &RasterSettings,
    seed: u64,
) -> Result<DisconnectionEstimate> {
    spec.validate()?;
    window.validate()?;
    ensure!(t > 0.0, Domain, "t must be > 0");
    ensure!(n >= 1, Domain, "n must be >= 1");
    raster.validate()?;
    let nx = raster.cells_across;
    let cell = (window.x_max - window.x_min) / nx as f64;
    let ny = (((window.y_max - window.y_min) / cell).round() as usize).max(1);
    let mut components = Vec::with_capacity(n);
    for k in 0..n as u64 {
        let r = rasterize(spec, window, nx, ny, raster.driver_delta(window.x_max - window.x_min), t, seed, k)?;
        components.push(connected_components(&r, t));
    }
    let disconnected = components.iter().filter(|&&c| c >= 2).count();
    Ok(DisconnectionEstimate {
        t,
        n,
        seed,
        components,
        disconnected,
        fraction: disconnected as f64 / n as f64,
        wilson_ci: wilson_interval(disconnected, n, Z95),
    })
}
