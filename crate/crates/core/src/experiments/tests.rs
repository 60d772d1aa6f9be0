use num_complex::Complex64;
use statrs::function::gamma::gamma_ur;

use super::*;
use crate::driver::DriverSpec;
use crate::rng::cell_seed;
use crate::stats::binomial_se;

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn single_cell_scan_matches_hitting_probability() {
    let mc = McSettings::new(200, 10.0, 42);
    let grid = PhaseGrid { kappa: vec![6.0], alpha: vec![1.5], theta: vec![1.0], beta: vec![2.0] };
    let scan = phase_scan(&grid, real(1.0), &mc).unwrap();
    assert_eq!(scan.len(), 1);
    let direct =
        hitting_probability(&PhaseParams::new(6.0, 1.5, 1.0, real(1.0)), &mc.with_seed(cell_seed(42, 0))).unwrap();
    assert_eq!(scan[0], direct);
}

#[test]
fn empty_grid_is_a_usage_error() {
    let grid = PhaseGrid { kappa: vec![], alpha: vec![1.5], theta: vec![1.0], beta: vec![2.0] };
    let err = phase_scan(&grid, real(1.0), &McSettings::new(100, 1.0, 1)).unwrap_err();
    assert_eq!(err.kind(), "usage");
}

#[test]
fn degenerate_driver_never_hits() {
    let e = hitting_probability(&PhaseParams::new(0.0, 1.5, 0.0, real(1.0)), &McSettings::new(100, 50.0, 3)).unwrap();
    assert_eq!(e.hits, 0);
    assert_eq!(e.hit_fraction, 0.0);
}

#[test]
fn zero_start_is_a_domain_error() {
    let err =
        hitting_probability(&PhaseParams::new(8.0, 1.5, 1.0, real(0.0)), &McSettings::new(100, 1.0, 1)).unwrap_err();
    assert_eq!(err.kind(), "domain");
}

#[test]
fn estimates_are_symmetric_under_reflection() {
    let mc = McSettings::new(1000, 20.0, 8);
    let p = hitting_probability(&PhaseParams::new(8.0, 0.5, 1.0, real(2.0)), &mc).unwrap();
    let m = hitting_probability(&PhaseParams::new(8.0, 0.5, 1.0, real(-2.0)), &mc.with_seed(9)).unwrap();
    let se = (binomial_se(p.hits, p.n).powi(2) + binomial_se(m.hits, m.n).powi(2)).sqrt();
    assert!((p.hit_fraction - m.hit_fraction).abs() <= 3.0 * se, "{} vs {}", p.hit_fraction, m.hit_fraction);
}

#[test]
fn longer_horizon_never_lowers_the_hit_fraction() {
    for kappa in [2.0, 6.0, 10.0] {
        let e =
            hitting_probability(&PhaseParams::new(kappa, 1.5, 1.0, real(1.0)), &McSettings::new(300, 5.0, 4)).unwrap();
        assert!(e.hit_fraction_2t >= e.hit_fraction);
        assert!(e.wilson_ci.0 <= e.hit_fraction && e.hit_fraction <= e.wilson_ci.1);
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let params = PhaseParams::new(8.0, 1.5, 1.0, real(1.0));
    let mc = McSettings::new(300, 10.0, 5);
    let one = with_workers(1, || hitting_probability(&params, &mc)).unwrap().unwrap();
    let three = with_workers(3, || hitting_probability(&params, &mc)).unwrap().unwrap();
    assert_eq!(one, three);
}

#[test]
fn brownian_hitting_matches_the_bessel_law() {
    // h / sqrt(8) is a Bessel process of dimension 3/2 started at 1/sqrt(8),
    // whose hitting time of 0 is (1/8) / (2 G) with G ~ Gamma(1/4).
    let spec = DriverSpec::levy(8.0, 1.5, 0.0).unwrap();
    let horizon = 100.0;
    let mc = McSettings::new(4000, horizon, 17);
    let c = estimate_hits(&spec, 2.0, real(1.0), &mc).unwrap();
    let exact = gamma_ur(0.25, 1.0 / (16.0 * horizon));
    let se = (exact * (1.0 - exact) / c.n as f64).sqrt();
    assert!((c.fraction() - exact).abs() < 4.0 * se, "{} vs {exact}", c.fraction());
    let exact_2t = gamma_ur(0.25, 1.0 / (32.0 * horizon));
    assert!((c.fraction_2t() - exact_2t).abs() < 4.0 * se, "{} vs {exact_2t}", c.fraction_2t());
}

#[test]
fn exponent_fits_reject_bad_inputs() {
    let mc = McSettings::new(100, 1.0, 1);
    assert_eq!(slope_near_zero(3.0, 0.5, 1.0, &[0.1, 0.2], &mc).unwrap_err().kind(), "domain");
    assert_eq!(slope_near_zero(8.0, 1.5, 1.0, &[0.1, 0.2], &mc).unwrap_err().kind(), "domain");
    assert_eq!(slope_near_zero(8.0, 0.5, 1.0, &[0.1, 2.0], &mc).unwrap_err().kind(), "domain");
    assert_eq!(slope_near_infinity(8.0, 0.5, 1.0, &[1.0, 4.0], &mc).unwrap_err().kind(), "domain");
}

#[test]
fn saturated_exponent_grids_are_a_statistical_error() {
    // Far points at a tiny horizon are never hit, so every estimate is 0.
    let mc = McSettings::new(100, 1e-3, 1);
    let err = slope_near_infinity(8.0, 0.5, 1.0, &[100.0, 200.0, 400.0, 800.0, 1600.0], &mc).unwrap_err();
    assert_eq!(err.kind(), "statistical");
}

#[test]
fn scaling_check_requires_enough_replicas() {
    let s = ScalingSettings {
        kappa: 4.0,
        alpha: 1.5,
        theta: 1.0,
        a: 2.0,
        z: Complex64::new(0.0, 1.0),
        radius: 4.0,
        horizon: 10.0,
        n: 499,
        seed: 1,
        statistic: ScalingStatistic::ExitTime,
        theta_tilde_override: None,
    };
    assert_eq!(scaling_check(&s).unwrap_err().kind(), "statistical");
}

#[test]
fn brownian_scaling_is_exact() {
    let s = ScalingSettings {
        kappa: 4.0,
        alpha: 1.5,
        theta: 1e-9,
        a: 2.0,
        z: Complex64::new(0.5, 1.0),
        radius: 4.0,
        horizon: 20.0,
        n: 500,
        seed: 2,
        statistic: ScalingStatistic::ImHT,
        theta_tilde_override: None,
    };
    let r = scaling_check(&s).unwrap();
    assert!(r.pass, "p = {}", r.p_value);
}

#[test]
fn area_rejects_coarse_rasters() {
    let s = AreaSettings {
        kappa: 2.0,
        alpha: 1.5,
        theta: 1.0,
        radii: vec![0.5, 4.0],
        raster: RasterSettings::new(64),
        horizon: 1.0,
        n: 1,
        seed: 1,
    };
    assert_eq!(area_fraction(&s).unwrap_err().kind(), "usage");
}

#[test]
fn driver_resolution_defaults_to_the_raster() {
    let mut s = AreaSettings {
        kappa: 2.0,
        alpha: 1.5,
        theta: 1.0,
        radii: vec![0.5],
        raster: RasterSettings::new(64),
        horizon: 0.5,
        n: 1,
        seed: 3,
    };
    let default = area_fraction(&s).unwrap();
    s.raster = RasterSettings::new(64).with_driver_cells_across(64);
    assert_eq!(area_fraction(&s).unwrap().fractions, default.fractions);
    s.raster = RasterSettings::new(64).with_driver_cells_across(1);
    assert_eq!(area_fraction(&s).unwrap_err().kind(), "usage");
}

#[test]
fn brownian_hull_is_connected() {
    let spec = DriverSpec::levy(4.0, 1.5, 0.0).unwrap();
    let window = crate::loewner::Window::new(-3.0, 3.0, 0.0, 3.0).unwrap();
    let d = disconnection_frequency(&spec, 1.0, 3, window, &RasterSettings::new(64), 1).unwrap();
    assert_eq!(d.disconnected, 0, "{:?}", d.components);
    assert!(d.components.iter().all(|&c| c == 1));
}

#[test]
fn overshoot_rejects_bad_annuli() {
    let mut s = OvershootSettings {
        kappa: 2.0,
        alpha: 0.5,
        theta: 1.0,
        a: 1.0,
        b: 2.0,
        x0: 1.5,
        n: 10,
        bins: 4,
        horizon: 10.0,
        seed: 1,
    };
    s.x0 = 3.0;
    assert_eq!(overshoot_histogram(&s).unwrap_err().kind(), "domain");
    s.x0 = 1.5;
    s.theta = 0.0;
    assert_eq!(overshoot_histogram(&s).unwrap_err().kind(), "domain");
}
