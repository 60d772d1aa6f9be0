//! Constant-driver flows over one step, with in-step hit detection.

use num_complex::Complex64;

/// Square root of `w` in the closed upper half-plane. On the positive real
/// axis the root takes the sign of `sign_hint`.
pub fn sqrt_upper(w: Complex64, sign_hint: f64) -> Complex64 {
    let (x, y) = (w.re, w.im);
    if y == 0.0 {
        return if x >= 0.0 {
            Complex64::new(x.sqrt().copysign(sign_hint), 0.0)
        } else {
            Complex64::new(0.0, (-x).sqrt())
        };
    }
    let t = (0.5 * (x.abs() + x.hypot(y))).sqrt();
    let (re, im) = if x >= 0.0 { (t, y / (2.0 * t)) } else { (y.abs() / (2.0 * t), t.copysign(y)) };
    if im < 0.0 {
        Complex64::new(-re, -im)
    } else {
        Complex64::new(re, im)
    }
}

/// Result of flowing a point for one step with the driver held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Advance {
    Moved(Complex64),
    /// Hit after this much time into the step.
    Hit(f64),
}

/// `h -> sqrt(h^2 + 4 dt)`. With `h(s)^2 = h^2 + 4s`, the step hits at the
/// first `s` where `|h^2 + 4s| <= tau`.
pub(crate) fn slit_advance(h: Complex64, dt: f64, tau: f64) -> Advance {
    if h.im == 0.0 {
        let x2 = h.re * h.re;
        if x2 <= tau {
            return Advance::Hit(0.0);
        }
        return Advance::Moved(Complex64::new((x2 + 4.0 * dt).sqrt().copysign(h.re), 0.0));
    }
    let w0 = h * h;
    let (a, b) = (w0.re, w0.im);
    if b.abs() <= tau {
        let r = (tau * tau - b * b).sqrt();
        if a <= r {
            let s = (0.25 * (-a - r)).max(0.0);
            if s <= dt {
                return Advance::Hit(s);
            }
        }
    }
    let w = Complex64::new(a + 4.0 * dt, b);
    if w.re == 0.0 && w.im == 0.0 {
        return Advance::Hit(dt);
    }
    Advance::Moved(sqrt_upper(w, h.re))
}

/// `dh/dt = 2 |h|^(2-beta) / h` for one step. In polar form with
/// `u = |h|^beta`: `du/dt = 2 beta cos(2 phi)`, `dphi/dt = -2 sin(2 phi) / u`.
/// Exact on the real and imaginary axes, RK4 with step doubling elsewhere.
/// A hit is `u <= u_hit`.
pub(crate) fn polar_advance(h: Complex64, dt: f64, beta: f64, u_hit: f64) -> Advance {
    let r = h.norm();
    let u0 = r.powf(beta);
    if u0 <= u_hit {
        return Advance::Hit(0.0);
    }
    if h.im == 0.0 {
        let u = u0 + 2.0 * beta * dt;
        return Advance::Moved(Complex64::new(u.powf(1.0 / beta).copysign(h.re), 0.0));
    }
    if h.re == 0.0 {
        let u = u0 - 2.0 * beta * dt;
        if u <= u_hit {
            return Advance::Hit((u0 - u_hit) / (2.0 * beta));
        }
        return Advance::Moved(Complex64::new(0.0, u.powf(1.0 / beta)));
    }
    let rhs = |u: f64, phi: f64| (2.0 * beta * (2.0 * phi).cos(), -2.0 * (2.0 * phi).sin() / u);
    let rk4 = |u: f64, phi: f64, k: f64| {
        let (a1, b1) = rhs(u, phi);
        let (a2, b2) = rhs(u + 0.5 * k * a1, phi + 0.5 * k * b1);
        let (a3, b3) = rhs(u + 0.5 * k * a2, phi + 0.5 * k * b2);
        let (a4, b4) = rhs(u + k * a3, phi + k * b3);
        (u + k / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4), phi + k / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4))
    };
    let (mut u, mut phi) = (u0, h.arg());
    let mut done = 0.0;
    let mut k = dt;
    while done < dt {
        k = k.min(dt - done);
        let (u1, p1) = rk4(u, phi, k);
        let (um, pm) = rk4(u, phi, 0.5 * k);
        let (u2, p2) = rk4(um, pm, 0.5 * k);
        let err = ((u2 - u1) / u).abs() + (p2 - p1).abs();
        let ok = u2.is_finite() && u2 > 0.0 && um > 0.0 && err <= 1e-12;
        if !ok && k > 1e-18 * dt.max(1e-300) {
            k *= 0.5;
            continue;
        }
        if u2 <= u_hit {
            let frac = ((u - u_hit) / (u - u2)).clamp(0.0, 1.0);
            return Advance::Hit(done + frac * k);
        }
        u = u2;
        phi = p2.clamp(0.0, std::f64::consts::PI);
        done += k;
        k *= 2.0;
    }
    Advance::Moved(Complex64::from_polar(u.powf(1.0 / beta), phi))
}
