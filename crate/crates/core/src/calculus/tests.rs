use proptest::prelude::*;
use rand_distr::Distribution;

use super::*;
use crate::driver::stable::standard_symmetric_stable;
use crate::rng::StreamKey;

/// Riesz closed form `A gamma(alpha,p) = -2^alpha Gamma(p/2) Gamma((1+alpha-p)/2)
/// / (Gamma((1-p)/2) Gamma((p-alpha)/2))`, and its `p -> 1` derivative for
/// the logarithm.
fn closed_form_gamma(alpha: f64, p: f64) -> f64 {
    let a = frac_constant(alpha).unwrap();
    if p == 1.0 {
        return 2f64.powf(alpha - 1.0) * PI.sqrt() * gamma(0.5 * alpha) / (gamma(0.5 * (1.0 - alpha)) * a);
    }
    -2f64.powf(alpha) * gamma(0.5 * p) * gamma(0.5 * (1.0 + alpha - p))
        / (gamma(0.5 * (1.0 - p)) * gamma(0.5 * (p - alpha)) * a)
}

#[test]
fn frac_constant_values() {
    assert!((frac_constant(1.0).unwrap() - 1.0 / PI).abs() < 1e-15);
    // 30-digit reference values.
    assert!((frac_constant(0.5).unwrap() / 0.199_471_140_200_716_35 - 1.0).abs() < 1e-12);
    assert!((frac_constant(1.5).unwrap() / 0.299_206_710_301_074_54 - 1.0).abs() < 1e-12);
    // A ~ alpha / 2 near zero.
    let small = frac_constant(1e-6).unwrap();
    assert!(small > 0.0 && (small / 5e-7 - 1.0).abs() < 1e-5);
    assert!(frac_constant(2.0).is_err());
    assert!(frac_constant(0.0).is_err());
}

#[test]
fn gamma_matches_closed_form() {
    for &(alpha, p) in &[
        (1.5, 1.2),
        (1.5, 2.0),
        (1.5, 1.0),
        (0.5, 0.7),
        (0.8, 0.9),
        (1.2, 0.5),
        (1.5, 0.3),
        (0.3, 1.2),
        (1.9, 2.8),
        (1.0, 0.5),
        (0.05, 0.5),
        (1.95, 0.05),
    ] {
        let want = closed_form_gamma(alpha, p);
        let got = gamma_coeff(alpha, p, DEFAULT_TOL).unwrap();
        let alt = gamma_coeff_alt(alpha, p, DEFAULT_TOL).unwrap();
        let scale = 1e-12 * want.abs().max(1.0);
        assert!((got - want).abs() < 1e-10 + scale, "({alpha},{p}): {got} vs {want}");
        assert!((alt - want).abs() < 1e-10 + scale, "alt ({alpha},{p}): {alt} vs {want}");
    }
}

#[test]
fn known_signs() {
    assert_eq!(gamma_coeff(1.3, 1.3, DEFAULT_TOL).unwrap(), 0.0);
    assert_eq!(gamma_coeff_alt(0.7, 0.7, DEFAULT_TOL).unwrap(), 0.0);
    assert!(gamma_coeff(1.5, 1.2, DEFAULT_TOL).unwrap() < 0.0);
    assert!(gamma_coeff(1.5, 2.0, DEFAULT_TOL).unwrap() > 0.0);
    assert!(gamma_coeff_alt(0.5, 0.7, DEFAULT_TOL).unwrap() < 0.0);
    let g1 = gamma_coeff(1.5, 1.0, DEFAULT_TOL).unwrap();
    let g1_alt = gamma_coeff_alt(1.5, 1.0, DEFAULT_TOL).unwrap();
    assert!((g1 - g1_alt).abs() < 1e-8);
}

#[test]
fn rejects_out_of_range() {
    assert!(gamma_coeff(1.5, 2.5, DEFAULT_TOL).is_err());
    assert!(gamma_coeff(1.5, 0.0, DEFAULT_TOL).is_err());
    assert!(gamma_coeff_alt(2.0, 1.0, DEFAULT_TOL).is_err());
    assert!(frac_laplacian_power(1.5, 1.0, 0.0).is_err());
    assert!(phi(1.5, 1.5).is_err());
    assert!(theta0(1.0).is_err());
    assert!(theta0(2.0).is_err());
}

#[test]
fn representations_agree_on_grid() {
    let n = 30;
    for i in 0..n {
        let alpha = 2.0 * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let p = (alpha + 1.0) * (j as f64 + 0.5) / n as f64;
            let a = gamma_coeff(alpha, p, DEFAULT_TOL).unwrap();
            let b = gamma_coeff_alt(alpha, p, DEFAULT_TOL).unwrap();
            assert!((a - b).abs() <= 1e-8, "({alpha},{p}): {a} vs {b}");
        }
    }
}

#[test]
fn laplacian_power_law() {
    assert_eq!(frac_laplacian_power(1.2, 1.2, 3.0).unwrap(), 0.0);
    let v1 = frac_laplacian_power(1.5, 2.0, 0.7).unwrap();
    let v2 = frac_laplacian_power(1.5, 2.0, 1.4).unwrap();
    assert!((v2 / v1 - 2f64.powf(2.0 - 1.5 - 1.0)).abs() < 1e-12);
    let at_one = frac_laplacian_power(1.5, 1.0, 1.0).unwrap();
    let want = frac_constant(1.5).unwrap() * gamma_coeff(1.5, 1.0, DEFAULT_TOL).unwrap();
    assert!((at_one - want).abs() < 1e-14);
}

#[test]
fn classification() {
    assert_eq!(classify_power(1.4, 1.4).unwrap(), HarmonicClass::Harmonic);
    assert_eq!(classify_power(1.2, 0.5).unwrap(), HarmonicClass::Subharmonic);
    assert_eq!(classify_power(0.8, 0.9).unwrap(), HarmonicClass::Superharmonic);
    assert_eq!(classify_power(1.5, 1.0).unwrap(), HarmonicClass::Superharmonic);
    assert_eq!(classify_power(0.5, 1.0).unwrap(), HarmonicClass::Subharmonic);
    assert_eq!(classify_power(1.0, 1.0).unwrap(), HarmonicClass::Harmonic);
}

#[test]
fn theta0_reference() {
    // Frozen after both representations agreed to 1e-12 at alpha = 1.5.
    const THETA0_1_5: f64 = 3.191_538_243_211_461;
    let t = theta0(1.5).unwrap();
    assert!((t / THETA0_1_5 - 1.0).abs() < 1e-10);
    let alt = 2.0 / (frac_constant(1.5).unwrap() * gamma_coeff_alt(1.5, 1.0, 1e-12).unwrap().abs());
    assert!((t / alt - 1.0).abs() < 1e-6);
    for alpha in [1.1, 1.5, 1.9] {
        let t = theta0(alpha).unwrap();
        assert!(t > 0.0);
        assert!((phi(alpha, 1.0).unwrap() - t).abs() < 1e-9 * t);
        let exact = 2.0 / (frac_constant(alpha).unwrap() * closed_form_gamma(alpha, 1.0).abs());
        assert!((t / exact - 1.0).abs() < 1e-9, "{alpha}: {t} vs {exact}");
    }
}

#[test]
fn phi_is_increasing_and_blows_up() {
    for alpha in [1.2, 1.5, 1.8] {
        let mut prev = 0.0;
        let mut p = 0.1;
        while p < alpha - 0.1 + 1e-9 {
            let v = phi(alpha, p).unwrap();
            assert!(v > prev, "alpha {alpha}, p {p}: {v} <= {prev}");
            prev = v;
            p += 0.1;
        }
        assert!(phi(alpha, 1e-6).unwrap() > 0.0);
        assert!(phi(alpha, alpha - 1e-6).unwrap() > 1e4 * phi(alpha, 1.0).unwrap());
    }
}

#[test]
fn generator_matches_sampling() {
    // [E w_p(x + S_t) - w_p(x)] / t -> Delta^(alpha/2) w_p(x), with the
    // symmetric pair x +- S_t averaged to cancel the first-order noise.
    let (alpha, p, x) = (1.5, 1.6, 1.0);
    let want = frac_laplacian_power(alpha, p, x).unwrap();
    let w = |y: f64| y.abs().powf(p - 1.0);
    let mut rng = StreamKey::new(3, 0, 0).rng();
    let mut errs = Vec::new();
    for t in [1e-2f64, 1e-3] {
        let n = 400_000;
        let scale = t.powf(1.0 / alpha);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let s = scale * standard_symmetric_stable(alpha, &mut rng);
            let d = (0.5 * (w(x + s) + w(x - s)) - w(x)) / t;
            s1 += d;
            s2 += d * d;
        }
        let mean = s1 / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        errs.push(((mean - want).abs(), se));
    }
    let (err, se) = errs[1];
    assert!(err <= 3.0 * se + 0.02 * want.abs(), "{err} vs se {se}");
    assert!(errs[1].0 <= errs[0].0 + 3.0 * (errs[0].1 + errs[1].1));
}

#[test]
fn generator_sign_matches_classification() {
    let mut rng = StreamKey::new(9, 0, 0).rng();
    let u = rand_distr::Uniform::new(0.05, 1.95).unwrap();
    for _ in 0..40 {
        let alpha: f64 = u.sample(&mut rng);
        let p = (alpha + 1.0) * (0.02 + 0.96 * rand::Rng::random::<f64>(&mut rng));
        let class = classify_power(alpha, p).unwrap();
        let v = frac_laplacian_power(alpha, p, 1.0).unwrap();
        let by_sign = if v.abs() < 1e-9 {
            HarmonicClass::Harmonic
        } else if v > 0.0 {
            HarmonicClass::Subharmonic
        } else {
            HarmonicClass::Superharmonic
        };
        assert_eq!(class, by_sign);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn representations_agree(alpha in 0.02f64..1.98, frac in 0.01f64..0.99) {
        let p = (alpha + 1.0) * frac;
        let a = gamma_coeff(alpha, p, DEFAULT_TOL).unwrap();
        let b = gamma_coeff_alt(alpha, p, DEFAULT_TOL).unwrap();
        prop_assert!((a - b).abs() <= 1e-8);
    }

    #[test]
    fn sign_follows_remark(alpha in 1.05f64..1.95, frac in 0.02f64..0.98) {
        let p = (alpha + 1.0) * frac;
        prop_assume!((p - alpha).abs() > 1e-3 && (p - 1.0).abs() > 1e-3);
        let g = gamma_coeff(alpha, p, DEFAULT_TOL).unwrap();
        if p < 1.0 || p > alpha {
            prop_assert!(g > 0.0);
        } else {
            prop_assert!(g < 0.0);
        }
    }
}
