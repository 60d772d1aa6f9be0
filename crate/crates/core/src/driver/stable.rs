//! Symmetric α-stable variates and the pieces of the truncated-stable
//! construction.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};

use crate::calculus::frac_constant;

/// Standard symmetric α-stable variate, `E exp(i l S) = exp(-|l|^alpha)`,
/// by the Chambers–Mallows–Stuck transform. At `alpha = 2` this is
/// `N(0, 2)`, at `alpha = 1` standard Cauchy.
pub fn standard_symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 2.0 {
        let z: f64 = StandardNormal.sample(rng);
        return std::f64::consts::SQRT_2 * z;
    }
    let u: f64 = Open01.sample(rng);
    let v = PI * (u - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    let lead = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    lead * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Jump intensity and small-jump variance of `S^c` split at `eps`.
///
/// The Lévy density of `S` is `A(1,-alpha) |x|^(-1-alpha)`. Jumps with
/// `eps < |x| <= cutoff` arrive at `rate`; those below `eps` are replaced by
/// a Gaussian of variance `small_variance` per unit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedParts {
    pub alpha: f64,
    pub eps: f64,
    pub cutoff: f64,
    pub rate: f64,
    pub small_variance: f64,
}

impl TruncatedParts {
    pub fn new(alpha: f64, cutoff: f64, small_jump_cutoff: Option<f64>) -> Self {
        let eps = small_jump_cutoff.unwrap_or_else(|| default_small_jump_cutoff(cutoff));
        let a = frac_constant(alpha).expect("alpha validated in (0,2)");
        let rate = 2.0 * a * (eps.powf(-alpha) - cutoff.powf(-alpha)) / alpha;
        let small_variance = 2.0 * a * eps.powf(2.0 - alpha) / (2.0 - alpha);
        Self { alpha, eps, cutoff, rate, small_variance }
    }

    /// One jump of size in `(eps, cutoff]`, random sign.
    pub fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = Open01.sample(rng);
        let lo = self.cutoff.powf(-self.alpha);
        let hi = self.eps.powf(-self.alpha);
        let mag = (lo + u * (hi - lo)).powf(-1.0 / self.alpha);
        if rng.random::<bool>() {
            mag
        } else {
            -mag
        }
    }

    /// Variance of `S^c_1` (small-jump Gaussian plus compound Poisson part),
    /// i.e. `2 A(1,-alpha) cutoff^(2-alpha) / (2-alpha)`.
    pub fn unit_variance(&self) -> f64 {
        let a = frac_constant(self.alpha).expect("alpha validated");
        2.0 * a * self.cutoff.powf(2.0 - self.alpha) / (2.0 - self.alpha)
    }
}

pub fn default_small_jump_cutoff(cutoff: f64) -> f64 {
    (cutoff / 100.0).min(0.01)
}
