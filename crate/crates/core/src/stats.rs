//! Statistical reductions used by the Monte Carlo experiments.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{ensure, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes in `n` trials at quantile `z`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Standard error of a binomial proportion.
pub fn binomial_se(k: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = k as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Kolmogorov distribution tail `P(K > x) = 2 sum (-1)^(j-1) exp(-2 j^2 x^2)`.
pub fn kolmogorov_tail(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * x * x).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Result of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsTest {
    /// The null hypothesis survives at `level`.
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    ensure!(xs.iter().all(|x| !x.is_nan()), Statistical, "sample contains NaN");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample KS test with the asymptotic Kolmogorov p-value (Stephens'
/// small-sample correction). Ties are handled by advancing both samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsTest> {
    ensure!(!a.is_empty() && !b.is_empty(), Statistical, "KS test needs two nonempty samples");
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let p_value = kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d);
    Ok(KsTest { statistic: d, p_value })
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsTest> {
    ensure!(!xs.is_empty(), Statistical, "KS test needs a nonempty sample");
    let v = sorted(xs)?;
    let n = v.len() as f64;
    let d = v.iter().enumerate().fold(0.0f64, |d, (k, &x)| {
        let f = cdf(x);
        d.max((k as f64 + 1.0) / n - f).max(f - k as f64 / n)
    });
    let ne = n.sqrt();
    let p_value = kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d);
    Ok(KsTest { statistic: d, p_value })
}

/// Weighted least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the weights, inflated by the
    /// residual scale when the fit is worse than the weights claim.
    pub slope_se: f64,
}

/// Weighted least squares with weights `1 / sigma_i^2`.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<LinearFit> {
    ensure!(x.len() == y.len() && x.len() == sigma.len(), Usage, "fit inputs differ in length");
    ensure!(x.len() >= 3, Statistical, "a line fit needs at least 3 points, got {}", x.len());
    ensure!(sigma.iter().all(|s| *s > 0.0 && s.is_finite()), Statistical, "fit weights must be positive");
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    ensure!(sxx > 0.0, Statistical, "fit abscissae are all equal");
    let sxy: f64 = (0..x.len()).map(|k| w[k] * (x[k] - mx) * (y[k] - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let chi2: f64 = (0..x.len()).map(|k| w[k] * (y[k] - intercept - slope * x[k]).powi(2)).sum();
    let scale = (chi2 / (x.len() - 2) as f64).max(1.0);
    Ok(LinearFit { slope, intercept, slope_se: (scale / sxx).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn wilson_matches_textbook_value() {
        // 8 of 10 at 95%: (0.4902, 0.9433).
        let (lo, hi) = wilson_interval(8, 10, Z95);
        assert!((lo - 0.490_16).abs() < 1e-4 && (hi - 0.943_32).abs() < 1e-4, "{lo} {hi}");
        assert_eq!(wilson_interval(0, 50, Z95).0, 0.0);
        assert_eq!(wilson_interval(50, 50, Z95).1, 1.0);
    }

    #[test]
    fn wilson_coverage_on_bernoulli_oracle() {
        let mut rng = StreamKey::new(11, 0, 0).rng();
        for &p in &[0.05, 0.3, 0.5, 0.9] {
            let trials = 1000;
            let n = 200;
            let covered = (0..trials)
                .filter(|_| {
                    let k = (0..n).filter(|_| rng.random::<f64>() < p).count();
                    let (lo, hi) = wilson_interval(k, n, Z95);
                    lo <= p && p <= hi
                })
                .count();
            assert!(covered as f64 / trials as f64 >= 0.93, "p {p}: coverage {covered}/{trials}");
        }
    }

    #[test]
    fn kolmogorov_tail_reference_points() {
        // Classical critical values: P(K > 1.3581) = 0.05, P(K > 1.6276) = 0.01.
        assert!((kolmogorov_tail(1.3581) - 0.05).abs() < 2e-4);
        assert!((kolmogorov_tail(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn ks_detects_shift_and_accepts_same_law() {
        let mut rng = StreamKey::new(12, 0, 0).rng();
        let mut draw = |shift: f64| -> Vec<f64> {
            (0..2000).map(|_| shift + Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect()
        };
        let a = draw(0.0);
        let b = draw(0.0);
        let c = draw(0.3);
        assert!(ks_two_sample(&a, &b).unwrap().passes(0.01));
        assert!(!ks_two_sample(&a, &c).unwrap().passes(0.01));
        assert!(ks_one_sample(&a, normal_cdf).unwrap().passes(0.01));
        assert!(!ks_one_sample(&c, normal_cdf).unwrap().passes(0.01));
    }

    #[test]
    fn ks_statistic_handles_ties() {
        let t = ks_two_sample(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!((t.statistic - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|x| 1.5 - 0.25 * x).collect();
        let fit = weighted_linear_fit(&x, &y, &[0.1, 0.2, 0.1, 0.3, 0.1]).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-14 && (fit.intercept - 1.5).abs() < 1e-14);
        assert!(weighted_linear_fit(&x[..2], &y[..2], &[1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn wilson_brackets_the_point_estimate(n in 1usize..5000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).round() as usize;
            let (lo, hi) = wilson_interval(k, n, Z95);
            let p = k as f64 / n as f64;
            prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
    }
}
