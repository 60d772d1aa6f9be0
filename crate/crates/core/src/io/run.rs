//! Command dispatch: one [`RunConfig`] in, a set of output files out.

use std::fmt::Write;
use std::time::Instant;

use num_complex::Complex64;

use super::config::{Command, RunConfig};
use super::{fmt_f64 as f, svg, tables, Manifest, Outputs};
use crate::calculus::{classify_power_tol, frac_constant, gamma_coeff, theta0};
use crate::driver::uniform_grid;
use crate::error::Result;
use crate::experiments::{
    area_fraction, disconnection_frequency, hitting_probability, overshoot_histogram, phase_scan, scaling_check,
    slope_near_infinity, slope_near_zero, theta0_bracket, with_workers, AreaSettings, McSettings, OvershootSettings,
    PhaseParams, RasterSettings, ScalingSettings,
};
use crate::loewner::{connected_components, evolve_point, raster_cluster, EvolutionConfig, PointStatus};

/// Runs the command on `cfg.workers` threads and collects its outputs.
pub fn execute(cfg: &RunConfig) -> Result<Outputs> {
    cfg.validate()?;
    with_workers(cfg.workers, || dispatch(cfg))?
}

/// [`execute`], then writes the outputs and the manifest to `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<Manifest> {
    let start = Instant::now();
    let outputs = execute(cfg)?;
    outputs.write(&cfg.out, cfg.to_json(), cfg.seed, start.elapsed())
}

fn mc(n: usize, horizon: f64, seed: u64, hit_tolerance: Option<f64>, dt_safety: f64) -> McSettings {
    McSettings { n, horizon, seed, hit_tolerance, dt_safety }
}

fn dispatch(cfg: &RunConfig) -> Result<Outputs> {
    let seed = cfg.seed;
    let mut out = Outputs::new();
    match &cfg.command {
        Command::Gamma(c) => {
            let mut csv = String::from("alpha,p,gamma,A_const,class\n");
            for &alpha in &c.alpha {
                let a = frac_constant(alpha)?;
                for &p in &c.p {
                    let g = gamma_coeff(alpha, p, c.tol)?;
                    let class = classify_power_tol(alpha, p, c.tol)?;
                    let _ = writeln!(csv, "{},{},{},{},{}", f(alpha), f(p), f(g), f(a), class.as_str());
                }
            }
            out.add("gamma.csv", csv);
        }
        Command::Theta0(c) => {
            let mut csv = String::from("alpha,theta0\n");
            for &alpha in &c.alpha {
                let _ = writeln!(csv, "{},{}", f(alpha), f(theta0(alpha)?));
            }
            out.add("theta0.csv", csv);
        }
        Command::Trace(c) => {
            let grid = uniform_grid(c.horizon, c.steps)?;
            let path = c.driver.sample_path(&grid, seed, 0, None)?;
            let w = c.window;
            let nx = c.cells_across;
            let cell = (w.x_max - w.x_min) / nx as f64;
            let ny = (((w.y_max - w.y_min) / cell).round() as usize).max(1);
            let mut evo = EvolutionConfig::new(c.horizon).with_hit_tolerance(c.hit_tolerance.unwrap_or(0.5 * cell));
            evo.dt_safety = c.dt_safety;
            let raster = raster_cluster(w, nx, ny, &path, &evo)?;
            let point = evolve_point(c.z, &path, &evo.clone().with_trajectory())?;

            let mut driver_csv = Vec::new();
            path.write_csv(&mut driver_csv)?;
            out.add("driver.csv", driver_csv);
            let mut hull_csv = Vec::new();
            raster.write_csv(&mut hull_csv)?;
            out.add("hull.csv", hull_csv);
            out.add("hull.svg", svg::render_raster(&raster, c.horizon));
            let mut traj = String::from("t,re_h,im_h,u\n");
            for s in &point.trajectory {
                let _ = writeln!(traj, "{},{},{},{}", f(s.t), f(s.h.re), f(s.h.im), f(s.u));
            }
            out.add("trajectory.csv", traj);
            out.add("trajectory.svg", svg::render_trajectory(&point.trajectory));
            let zeta = match point.status {
                PointStatus::Hit { zeta } => Some(zeta),
                _ => None,
            };
            out.add_json(
                "trace.json",
                &serde_json::json!({
                    "z": point.z0,
                    "status": point.status,
                    "zeta": zeta,
                    "h_final": point.h,
                    "hull_cells": raster.zeta.iter().filter(|z| **z <= c.horizon).count(),
                    "components": connected_components(&raster, c.horizon),
                    "failed_cells": raster.failed_cells(),
                }),
            )?;
        }
        Command::Phase(c) => {
            let rows = phase_scan(&c.grid, c.z, &mc(c.n, c.horizon, seed, c.hit_tolerance, c.dt_safety))?;
            out.add("phase.csv", tables::phase_csv(&rows));
        }
        Command::Hitprob(c) => {
            let params = PhaseParams { kappa: c.kappa, alpha: c.alpha, theta: c.theta, beta: c.beta, z: c.z };
            let e = hitting_probability(&params, &mc(c.n, c.horizon, seed, c.hit_tolerance, c.dt_safety))?;
            out.add("hitprob.csv", tables::phase_csv(std::slice::from_ref(&e)));
            out.add_json("hitprob.json", &e)?;
        }
        Command::Slopes(c) => {
            if c.side.near_zero() {
                let fit = slope_near_zero(
                    c.kappa,
                    c.alpha,
                    c.theta,
                    &c.x_near_zero,
                    &mc(c.n, c.horizon_near_zero, seed, None, 0.1),
                )?;
                out.add("slope_near_zero.csv", tables::exponent_csv(&fit));
                out.add_json("slope_near_zero.json", &tables::fit_json(&fit, c.tolerance))?;
            }
            if c.side.near_infinity() {
                let fit = slope_near_infinity(
                    c.kappa,
                    c.alpha,
                    c.theta,
                    &c.x_near_infinity,
                    &mc(c.n, c.horizon_near_infinity, seed, None, 0.1),
                )?;
                out.add("slope_near_infinity.csv", tables::exponent_csv(&fit));
                out.add_json("slope_near_infinity.json", &tables::fit_json(&fit, c.tolerance))?;
            }
        }
        Command::Overshoot(c) => {
            let r = overshoot_histogram(&OvershootSettings {
                kappa: c.kappa,
                alpha: c.alpha,
                theta: c.theta,
                a: c.a,
                b: c.b,
                x0: c.x0.unwrap_or_else(|| (c.a * c.b).sqrt()),
                n: c.n,
                bins: c.bins,
                horizon: c.horizon,
                seed,
            })?;
            out.add("overshoot.csv", tables::overshoot_csv(&r));
            out.add_json("overshoot.json", &r)?;
        }
        Command::Area(c) => {
            let a = area_fraction(&AreaSettings {
                kappa: c.kappa,
                alpha: c.alpha,
                theta: c.theta,
                radii: c.radii.clone(),
                raster: RasterSettings { cells_across: c.cells_across, driver_cells_across: c.driver_cells_across },
                horizon: c.horizon,
                n: c.n,
                seed,
            })?;
            out.add("area.csv", tables::area_csv(&a));
            out.add_json("area.json", &a)?;
        }
        Command::Scalecheck(c) => {
            let r = scaling_check(&ScalingSettings {
                kappa: c.kappa,
                alpha: c.alpha,
                theta: c.theta,
                a: c.a,
                z: c.z,
                radius: c.radius,
                horizon: c.horizon,
                n: c.n,
                seed,
                statistic: c.statistic,
                theta_tilde_override: c.theta_tilde_override,
            })?;
            out.add_json("scalecheck.json", &r)?;
        }
        Command::Disconnect(c) => {
            let d = disconnection_frequency(&c.driver, c.t, c.n, c.window, &RasterSettings::new(c.cells_across), seed)?;
            out.add("disconnect.csv", tables::disconnection_csv(&d));
            out.add_json("disconnect.json", &d)?;
        }
        Command::Theta0Bracket(c) => {
            let t0 = theta0(c.alpha)?;
            let thetas: Vec<f64> = c.theta_over_theta0.iter().map(|m| m * t0).collect();
            let zs: Vec<Complex64> = c.z.clone();
            let b = theta0_bracket(c.alpha, &thetas, &zs, &mc(c.n, c.horizon, seed, c.hit_tolerance, c.dt_safety))?;
            out.add("theta0_bracket.csv", tables::theta0_bracket_csv(&b));
            out.add_json(
                "theta0_bracket.json",
                &serde_json::json!({
                    "alpha": b.alpha,
                    "theta0": b.theta0,
                    "theta_lo": b.theta_lo,
                    "theta_hi": b.theta_hi,
                    "contains_theta0": b.contains_theta0(),
                    "widened": b.widened,
                }),
            )?;
        }
    }
    Ok(out)
}
