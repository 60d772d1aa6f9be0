//! Exact real-line steps for the Gaussian part of the driver.
//!
//! Between jumps a real point follows `dh = 2/h dt - sqrt(k) dB`, so
//! `h / sqrt(k)` is a Bessel process of dimension `d = 1 + 4/k`. Its square
//! after `dt` is a noncentral chi-square variate, and given both endpoints
//! the path touched 0 with probability `1 - I_nu(z) / I_(-nu)(z)`,
//! `nu = 1 - d/2`, `z = |h0 h1| / (k dt)`. For `k <= 4` the process never
//! reaches 0.

use statrs::function::gamma::gamma;

/// `I_mu(z) (z/2)^(-mu)` by its power series, `mu > -1`.
fn scaled_bessel_i(mu: f64, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0 / gamma(mu + 1.0);
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + mu));
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
    }
}

/// `K_nu(z) sqrt(2z/pi) e^z` by its asymptotic series, truncated at the
/// smallest term; accurate to about `e^(-2z)` relative.
fn scaled_bessel_k_asymptotic(nu: f64, z: f64) -> f64 {
    let m = 4.0 * nu * nu;
    let mut term = 1.0f64;
    let mut sum = 1.0;
    for k in 1..60 {
        let j = (2 * k - 1) as f64;
        let next = term * (m - j * j) / (k as f64 * 8.0 * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
    }
    sum
}

/// Probability that a Bessel bridge of index `nu` in `(0, 1/2]` (dimension
/// `2 - 2 nu`) hits 0, with `z = x y / t` for endpoints `x, y > 0` over
/// time `t`.
pub(crate) fn bessel_bridge_hit(nu: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    if z < 8.0 {
        let ratio = (0.5 * z).powf(2.0 * nu) * scaled_bessel_i(nu, z) / scaled_bessel_i(-nu, z);
        return (1.0 - ratio).clamp(0.0, 1.0);
    }
    // 1 - I_nu / I_(-nu) = (2/pi) sin(nu pi) K_nu / I_(-nu), without the
    // cancellation of the ratio form.
    let k = (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp() * scaled_bessel_k_asymptotic(nu, z);
    let i = if z < 700.0 { (0.5 * z).powf(-nu) * scaled_bessel_i(-nu, z) } else { f64::INFINITY };
    (std::f64::consts::FRAC_2_PI * (nu * std::f64::consts::PI).sin() * k / i).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflected_brownian_bridge_closed_form() {
        // nu = 1/2 is |B|: the bridge avoids 0 with probability tanh(z).
        for &z in &[1e-3f64, 0.1, 0.7, 2.0, 5.0, 7.9, 8.1, 12.0, 29.0, 40.0, 300.0] {
            let e = (-2.0 * z).exp();
            let exact = 2.0 * e / (1.0 + e);
            let got = bessel_bridge_hit(0.5, z);
            let tol = 1e-12 * exact + if z < 8.0 { 1e-14 } else { 0.0 };
            assert!((got - exact).abs() <= tol, "z {z}: {got} vs {exact}");
        }
    }

    #[test]
    fn hit_probability_is_monotone_in_z() {
        for &nu in &[0.05, 0.25, 0.45] {
            let mut prev = 1.0;
            for k in 1..200 {
                let p = bessel_bridge_hit(nu, 0.2 * k as f64);
                assert!(p <= prev + 1e-15 && p >= 0.0, "nu {nu} k {k}: {p} after {prev}");
                prev = p;
            }
        }
    }
}
