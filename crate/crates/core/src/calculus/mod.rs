//! Fractional Laplacian of power functions and the critical stable
//! intensity of the Bessel-type comparison.
//!
//! For `w_p(x) = |x|^(p-1)` (and `w_1 = ln|x|`) the fractional Laplacian is
//! `A(1,-alpha) gamma(alpha,p) |x|^(p-alpha-1)`. Two integral
//! representations of `gamma(alpha,p)` are evaluated independently.

mod quadrature;

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{ensure, Result};
pub use quadrature::{integrate, Quadrature};

/// Absolute quadrature tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Sign class of the fractional Laplacian of `w_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicClass {
    Subharmonic,
    Harmonic,
    Superharmonic,
}

impl HarmonicClass {
    pub fn as_str(self) -> &'static str {
        match self {
            HarmonicClass::Subharmonic => "subharmonic",
            HarmonicClass::Harmonic => "harmonic",
            HarmonicClass::Superharmonic => "superharmonic",
        }
    }
}

/// `A(1,-alpha) = alpha 2^(alpha-1) Gamma((1+alpha)/2) / (sqrt(pi) Gamma(1-alpha/2))`,
/// the normalization of the Lévy density of the symmetric stable process.
pub fn frac_constant(alpha: f64) -> Result<f64> {
    ensure!(alpha > 0.0 && alpha < 2.0, Domain, "alpha must lie in (0,2), got {alpha}");
    Ok(alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (1.0 + alpha)) / (PI.sqrt() * gamma(1.0 - 0.5 * alpha)))
}

fn check_query(alpha: f64, p: f64, tol: f64) -> Result<()> {
    ensure!(alpha > 0.0 && alpha < 2.0, Domain, "alpha must lie in (0,2), got {alpha}");
    ensure!(p > 0.0 && p < alpha + 1.0, Domain, "p must lie in (0, alpha+1) = (0, {}), got {p}", alpha + 1.0);
    ensure!(tol > 0.0 && tol.is_finite(), Domain, "tolerance must be positive, got {tol}");
    Ok(())
}

/// `I(p) = int_0^inf v^(p-2) (|v-1|^c - (v+1)^c) dv` with `c = alpha - p`.
fn main_integral(alpha: f64, p: f64, tol: f64) -> Result<f64> {
    let c = alpha - p;
    let tol = tol / 5.0;

    // [0, 1/2], v = w^(1/p): integrand B(v) / (p v), B(v) = (1-v)^c - (1+v)^c.
    let near_zero = integrate(
        |w: f64| {
            let v = w.powf(1.0 / p);
            if v < 1e-100 {
                return -2.0 * c / p;
            }
            let b = (c * v.ln_1p()).exp() * (c * ((-v).ln_1p() - v.ln_1p())).exp_m1();
            b / (p * v)
        },
        0.0,
        0.5f64.powf(p),
        tol,
    )?;

    // |v-1|^c on [1/2, 2], u = |v-1| = w^(1/(1+c)).
    let m = 1.0 + c;
    let left = integrate(|w: f64| (1.0 - w.powf(1.0 / m)).powf(p - 2.0) / m, 0.0, 0.5f64.powf(m), tol)?;
    let right = integrate(|w: f64| (1.0 + w.powf(1.0 / m)).powf(p - 2.0) / m, 0.0, 1.0, tol)?;
    let regular = integrate(|v: f64| v.powf(p - 2.0) * (v + 1.0).powf(c), 0.5, 2.0, tol)?;

    // [2, inf), v = y^(-q) with q = 1/(2-alpha); x = 1/v.
    let q = 1.0 / (2.0 - alpha);
    let tail = integrate(
        |y: f64| {
            let x = y.powf(q);
            if x < 1e-100 {
                return -2.0 * c * q;
            }
            q * (c * x.ln_1p()).exp() * (c * ((-x).ln_1p() - x.ln_1p())).exp_m1() / x
        },
        0.0,
        0.5f64.powf(2.0 - alpha),
        tol,
    )?;

    Ok(near_zero.value + left.value + right.value - regular.value + tail.value)
}

/// `gamma(alpha, p)` from the integral over `(0, inf)`; the logarithmic
/// variant is used at `p = 1`. Absolute error at most `tol`.
pub fn gamma_coeff(alpha: f64, p: f64, tol: f64) -> Result<f64> {
    check_query(alpha, p, tol)?;
    if p == alpha {
        return Ok(0.0);
    }
    let prefactor = if p == 1.0 { 1.0 / alpha } else { (p - 1.0) / alpha };
    // The prefactor is at most 1/alpha in size, so tightening by alpha keeps
    // the final error within tol.
    let inner_tol = tol * alpha.min(1.0);
    Ok(prefactor * main_integral(alpha, p, inner_tol)?)
}

/// `gamma(alpha, p)` from the integral over `(0, 1)`:
/// `int_0^1 (u^(p-1) - 1)(1 - u^(alpha-p)) [(1-u)^(-1-alpha) + (1+u)^(-1-alpha)] du`,
/// with `ln u` in place of `u^(p-1) - 1` at `p = 1`.
pub fn gamma_coeff_alt(alpha: f64, p: f64, tol: f64) -> Result<f64> {
    check_query(alpha, p, tol)?;
    if p == alpha {
        return Ok(0.0);
    }
    let tol = tol / 3.0;
    let log_form = p == 1.0;

    // P(u) from l = ln u.
    let pfun = |l: f64| -> f64 {
        if log_form {
            -l * ((alpha - 1.0) * l).exp_m1()
        } else {
            -((p - 1.0) * l).exp_m1() * ((alpha - p) * l).exp_m1()
        }
    };

    // [0, 1/2], u = w^(1/m): the leading power u^e of P is absorbed so the
    // integrand stays bounded.
    let (e1, e2) = if log_form { (0.0, (alpha - 1.0).min(0.0)) } else { ((p - 1.0).min(0.0), (alpha - p).min(0.0)) };
    let m = 1.0 + e1 + e2;
    let near_zero = integrate(
        |w: f64| {
            let l = w.ln() / m;
            let u = l.exp();
            let f1 = if log_form {
                l
            } else if p < 1.0 {
                -((1.0 - p) * l).exp_m1()
            } else {
                ((p - 1.0) * l).exp_m1()
            };
            let f2 = if log_form {
                if alpha < 1.0 {
                    ((1.0 - alpha) * l).exp_m1()
                } else {
                    -((alpha - 1.0) * l).exp_m1()
                }
            } else if alpha < p {
                ((p - alpha) * l).exp_m1()
            } else {
                -((alpha - p) * l).exp_m1()
            };
            let k = (1.0 - u).powf(-1.0 - alpha) + (1.0 + u).powf(-1.0 - alpha);
            f1 * f2 * k / m
        },
        0.0,
        0.5f64.powf(m),
        tol,
    )?;

    // (1-u)^(-1-alpha) on [1/2, 1], t = 1-u = w^(1/(2-alpha)).
    let s = 2.0 - alpha;
    let limit = if log_form { 1.0 - alpha } else { (1.0 - p) * (alpha - p) };
    let singular = integrate(
        |w: f64| {
            let t = w.powf(1.0 / s);
            if t < 1e-150 {
                return limit / s;
            }
            pfun((-t).ln_1p()) / (s * t * t)
        },
        0.0,
        0.5f64.powf(s),
        tol,
    )?;
    let regular = integrate(|u: f64| pfun(u.ln()) * (1.0 + u).powf(-1.0 - alpha), 0.5, 1.0, tol)?;

    Ok(near_zero.value + singular.value + regular.value)
}

/// `Delta^(alpha/2) w_p (x) = A(1,-alpha) gamma(alpha,p) |x|^(p-alpha-1)`.
pub fn frac_laplacian_power(alpha: f64, p: f64, x: f64) -> Result<f64> {
    ensure!(x != 0.0 && x.is_finite(), Domain, "x must be a nonzero real, got {x}");
    let g = gamma_coeff(alpha, p, DEFAULT_TOL)?;
    Ok(frac_constant(alpha)? * g * x.abs().powf(p - alpha - 1.0))
}

/// Sign of `gamma(alpha, p)`; values within `10 tol` of zero are harmonic.
pub fn classify_power_tol(alpha: f64, p: f64, tol: f64) -> Result<HarmonicClass> {
    let g = gamma_coeff(alpha, p, tol)?;
    Ok(if g.abs() < 10.0 * tol {
        HarmonicClass::Harmonic
    } else if g > 0.0 {
        HarmonicClass::Subharmonic
    } else {
        HarmonicClass::Superharmonic
    })
}

pub fn classify_power(alpha: f64, p: f64) -> Result<HarmonicClass> {
    classify_power_tol(alpha, p, DEFAULT_TOL)
}

/// `phi(p) = 2(1-p) / (A(1,-alpha) gamma(alpha,p))` for `1 < alpha < 2`,
/// `0 < p < alpha`, continued to `phi(1) = theta0(alpha)`.
pub fn phi(alpha: f64, p: f64) -> Result<f64> {
    ensure!(alpha > 1.0 && alpha < 2.0, Domain, "phi needs alpha in (1,2), got {alpha}");
    ensure!(p != alpha, Domain, "phi is singular at p = alpha");
    ensure!(p > 0.0 && p < alpha, Domain, "p must lie in (0, alpha), got {p}");
    let tol = 1e-12;
    // 2(1-p)/(A (p-1) I / alpha) = -2 alpha / (A I), which is also the
    // p = 1 value.
    let i = main_integral(alpha, p, tol)?;
    ensure!(i.abs() > 10.0 * tol, Numerical, "gamma({alpha}, {p}) vanishes within tolerance");
    Ok(-2.0 * alpha / (frac_constant(alpha)? * i))
}

/// `theta0(alpha) = 2 / (A(1,-alpha) |gamma(alpha,1)|)`, `1 < alpha < 2`.
pub fn theta0(alpha: f64) -> Result<f64> {
    ensure!(alpha > 1.0 && alpha < 2.0, Domain, "theta0 needs alpha in (1,2), got {alpha}");
    let g = gamma_coeff(alpha, 1.0, 1e-12)?;
    Ok(2.0 / (frac_constant(alpha)? * g.abs()))
}

#[cfg(test)]
mod tests;
