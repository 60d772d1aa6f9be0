use std::collections::VecDeque;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evolve, EvolutionConfig, Flow, HitRule};
use crate::driver::{BridgeDriver, Drive, DriverPath};
use crate::error::{ensure, Result};

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]` with `y_min >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let w = Self { x_min, x_max, y_min, y_max };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.x_max > self.x_min, Domain, "window needs x_max > x_min");
        ensure!(self.y_max > self.y_min, Domain, "window needs y_max > y_min");
        ensure!(self.y_min >= 0.0, Domain, "window must lie in the closed upper half-plane");
        Ok(())
    }
}

/// Hitting times on a grid of cell centers. Cells are stored row by row
/// from the bottom row up; `zeta` is `+inf` for cells not hit by the
/// horizon and NaN for cells whose evolution failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRaster {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub horizon: f64,
    pub zeta: Vec<f64>,
}

impl ClusterRaster {
    pub fn cell_size(&self) -> (f64, f64) {
        (
            (self.window.x_max - self.window.x_min) / self.nx as f64,
            (self.window.y_max - self.window.y_min) / self.ny as f64,
        )
    }

    pub fn center(&self, i: usize, j: usize) -> Complex64 {
        let (dx, dy) = self.cell_size();
        Complex64::new(self.window.x_min + (i as f64 + 0.5) * dx, self.window.y_min + (j as f64 + 0.5) * dy)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.zeta[j * self.nx + i]
    }

    /// Cells with `zeta <= t`.
    pub fn hit_mask(&self, t: f64) -> Vec<bool> {
        self.zeta.iter().map(|&z| z <= t).collect()
    }

    pub fn failed_cells(&self) -> usize {
        self.zeta.iter().filter(|z| z.is_nan()).count()
    }

    /// CSV with columns `x,y,zeta` (`inf` for cells never hit, `nan` for
    /// failed cells).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y,zeta")?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.center(i, j);
                let z = self.get(i, j);
                let zs = if z.is_nan() {
                    "nan".to_string()
                } else if z.is_infinite() {
                    "inf".to_string()
                } else {
                    crate::io::fmt_f64(z)
                };
                writeln!(out, "{},{},{}", crate::io::fmt_f64(c.re), crate::io::fmt_f64(c.im), zs)?;
            }
        }
        Ok(())
    }
}

/// Evolves every cell center of `window` against `path` in parallel.
///
/// A cell is hit when `|h|` falls below half a cell, or when the hull's tip
/// passes within about three quarters of a cell of its center (see
/// [`HitRule::Geometric`]).
pub fn raster_cluster(
    window: Window,
    nx: usize,
    ny: usize,
    path: &DriverPath,
    cfg: &EvolutionConfig,
) -> Result<ClusterRaster> {
    ensure!(
        path.horizon() >= cfg.horizon * (1.0 - 1e-12),
        Usage,
        "driver horizon {} is shorter than the evolution horizon {}",
        path.horizon(),
        cfg.horizon
    );
    raster_cluster_with(window, nx, ny, cfg, || path.cursor(cfg.dt_safety))
}

/// [`raster_cluster`] against a shared lazily refined driver.
pub fn raster_cluster_bridge(
    window: Window,
    nx: usize,
    ny: usize,
    driver: &BridgeDriver,
    cfg: &EvolutionConfig,
) -> Result<ClusterRaster> {
    ensure!(
        driver.horizon() >= cfg.horizon * (1.0 - 1e-12),
        Usage,
        "driver horizon {} is shorter than the evolution horizon {}",
        driver.horizon(),
        cfg.horizon
    );
    raster_cluster_with(window, nx, ny, cfg, || driver.cursor(cfg.dt_safety))
}

fn raster_cluster_with<D, F>(
    window: Window,
    nx: usize,
    ny: usize,
    cfg: &EvolutionConfig,
    make: F,
) -> Result<ClusterRaster>
where
    D: Drive,
    F: Fn() -> D + Sync,
{
    window.validate()?;
    cfg.validate()?;
    ensure!(nx > 0 && ny > 0, Domain, "raster needs at least one cell");
    let mut raster = ClusterRaster { window, nx, ny, horizon: cfg.horizon, zeta: Vec::new() };
    let (dx, dy) = raster.cell_size();
    let cell = dx.max(dy);
    let rule = HitRule::Geometric { abs: cfg.hit_tolerance.max(0.5 * cell), geom: 1.5 * cell };
    let zeta: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let z = raster.center(k % nx, k / nx);
            match evolve(z, &mut make(), cfg, rule, Flow::Slit, |_| false) {
                Ok(out) => out.zeta_or_inf(),
                Err(_) => f64::NAN,
            }
        })
        .collect();
    raster.zeta = zeta;
    Ok(raster)
}

/// Number of 8-connected components of `{zeta <= t}`. The real axis does
/// not join components that both touch it.
pub fn connected_components(raster: &ClusterRaster, t: f64) -> usize {
    let (nx, ny) = (raster.nx, raster.ny);
    let mask = raster.hit_mask(t);
    let mut seen = vec![false; nx * ny];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..nx * ny {
        if !mask[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = ((k % nx) as isize, (k / nx) as isize);
            for dj in -1..=1 {
                for di in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
                        continue;
                    }
                    let n = b as usize * nx + a as usize;
                    if mask[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
    }
    count
}
