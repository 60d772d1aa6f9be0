//! CSV tables for every experiment. Floats use [`fmt_f64`].

use std::fmt::Write;

use super::fmt_f64 as f;
use crate::experiments::{
    AreaFractions, CorollaryRow, DisconnectionEstimate, ExponentFit, OvershootReport, PhaseEstimate, Theta0Bracket,
};

fn line(out: &mut String, cells: &[String]) {
    let _ = writeln!(out, "{}", cells.join(","));
}

pub fn phase_csv(rows: &[PhaseEstimate]) -> String {
    let mut out = String::from("kappa,alpha,theta,beta,re_z,im_z,n,T,hit_frac,ci_lo,ci_hi,horizon_flag\n");
    for e in rows {
        let p = &e.params;
        line(
            &mut out,
            &[
                f(p.kappa),
                f(p.alpha),
                f(p.theta),
                f(p.beta),
                f(p.z.re),
                f(p.z.im),
                e.n.to_string(),
                f(e.horizon),
                f(e.hit_fraction),
                f(e.wilson_ci.0),
                f(e.wilson_ci.1),
                e.horizon_flag.as_str().to_string(),
            ],
        );
    }
    out
}

pub fn exponent_csv(fit: &ExponentFit) -> String {
    let mut out = String::from("x,p_hat,ci_lo,ci_hi\n");
    for p in &fit.points {
        line(&mut out, &[f(p.x), f(p.p_hat), f(p.ci_lo), f(p.ci_hi)]);
    }
    out
}

/// Fit summary: slope, standard error, expected slope and whether the
/// slope lies within `tol` of it.
pub fn fit_json(fit: &ExponentFit, tol: f64) -> serde_json::Value {
    serde_json::json!({
        "side": fit.side,
        "slope": fit.slope,
        "se": fit.se,
        "expected": fit.expected,
        "tolerance": tol,
        "pass": fit.within(tol),
        "points_used": fit.points.iter().filter(|p| p.used).count(),
    })
}

pub fn corollary_csv(rows: &[CorollaryRow]) -> String {
    let mut out =
        String::from("re_z,im_z,declared_class,classification,limit_sequence,n,T,hit_frac,ci_lo,ci_hi,horizon_flag\n");
    for r in rows {
        let class = serde_json::to_value(r.declared_class).ok().and_then(|v| v.as_str().map(String::from));
        line(
            &mut out,
            &[
                f(r.z.re),
                f(r.z.im),
                class.unwrap_or_default(),
                r.classification.to_string(),
                r.limit_sequence.to_string(),
                r.n.to_string(),
                f(r.horizon),
                f(r.hit_fraction),
                f(r.wilson_ci.0),
                f(r.wilson_ci.1),
                r.horizon_flag.as_str().to_string(),
            ],
        );
    }
    out
}

pub fn theta0_bracket_csv(b: &Theta0Bracket) -> String {
    let mut out = String::from("theta,theta_over_theta0,pooled_hit_frac\n");
    for (t, p) in b.thetas.iter().zip(&b.fractions) {
        line(&mut out, &[f(*t), f(t / b.theta0), f(*p)]);
    }
    out
}

pub fn overshoot_csv(r: &OvershootReport) -> String {
    let mut out = String::from("side,lo,hi,count,density,se,bound,ok\n");
    for (side, bins) in [("inner", &r.inner_bins), ("outer", &r.outer_bins)] {
        for b in bins {
            line(
                &mut out,
                &[
                    side.to_string(),
                    f(b.lo),
                    f(b.hi),
                    b.count.to_string(),
                    f(b.density),
                    f(b.se),
                    f(b.bound),
                    b.ok.to_string(),
                ],
            );
        }
    }
    out
}

pub fn area_csv(a: &AreaFractions) -> String {
    let mut out = String::from("r,mean_fraction,se,T,cell\n");
    for (i, r) in a.settings.radii.iter().enumerate() {
        line(&mut out, &[f(*r), f(a.mean[i]), f(a.se[i]), f(a.settings.horizon), f(a.cell)]);
    }
    out
}

pub fn disconnection_csv(d: &DisconnectionEstimate) -> String {
    let mut out = String::from("replica,components\n");
    for (k, c) in d.components.iter().enumerate() {
        line(&mut out, &[k.to_string(), c.to_string()]);
    }
    out
}
