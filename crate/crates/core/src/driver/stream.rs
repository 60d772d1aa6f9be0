use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};

use super::path::noise_cap;
use super::spec::{Component, DriverSpec, JumpLaw};
use super::stable::TruncatedParts;
use super::{Drive, Radial, Step};
use crate::calculus::frac_constant;
use crate::rng::{StreamKey, StreamRng};

enum Part {
    Gaussian {
        rate: f64,
        rng: StreamRng,
    },
    /// Levy measure `weight |x|^(-1-alpha)`.
    Stable {
        alpha: f64,
        weight: f64,
        rng: StreamRng,
    },
    Truncated {
        scale: f64,
        gauss_rate: f64,
        parts: TruncatedParts,
        next: f64,
        rng: StreamRng,
    },
    Compound {
        rate: f64,
        law: JumpLaw,
        next: f64,
        rng: StreamRng,
    },
}

fn next_event(t: f64, rate: f64, rng: &mut StreamRng) -> f64 {
    let e: f64 = Exp1.sample(rng);
    t + e / rate
}

/// Lazily sampled driver: increments are drawn for whatever step the
/// evolution requests, from one independent stream per component.
///
/// Gaussian parts cap the step so that a typical increment is at most
/// `sqrt(2 step_fraction) |h|`. Compound Poisson events, the large jumps of
/// a truncated stable component, and the jumps of a stable component above
/// `eps = sqrt(step_fraction) |h|` are event driven, so a step never
/// straddles one; stable jumps below `eps` enter as a Gaussian of the same
/// variance.
pub struct DriverStream {
    parts: Vec<Part>,
    t: f64,
    u: f64,
    step_fraction: f64,
    noise: Vec<(f64, f64)>,
    diffusive: bool,
    gauss_rate: f64,
    aux: StreamRng,
}

/// Component index of the auxiliary stream used for exact radial steps.
const AUX_COMPONENT: u64 = u64::MAX;

impl DriverStream {
    pub fn new(spec: &DriverSpec, master: u64, replica: u64, step_fraction: f64) -> Self {
        let parts = spec
            .components
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let mut rng = StreamKey::new(master, replica, j as u64).rng();
                match c {
                    Component::Brownian { kappa } => Part::Gaussian { rate: *kappa, rng },
                    Component::Stable { alpha, theta } if *alpha == 2.0 => Part::Gaussian { rate: 2.0 * theta, rng },
                    Component::Stable { alpha, theta } => {
                        let a = frac_constant(*alpha).expect("alpha validated in (0,2)");
                        Part::Stable { alpha: *alpha, weight: theta * a, rng }
                    }
                    Component::TruncatedStable { alpha, theta, cutoff, small_jump_cutoff } => {
                        let parts = TruncatedParts::new(*alpha, *cutoff, *small_jump_cutoff);
                        let scale = theta.powf(1.0 / alpha);
                        let next = next_event(0.0, parts.rate, &mut rng);
                        Part::Truncated { scale, gauss_rate: scale * scale * parts.small_variance, parts, next, rng }
                    }
                    Component::CompoundPoisson { rate, jump_law, .. } => {
                        let next = next_event(0.0, *rate, &mut rng);
                        Part::Compound { rate: *rate, law: jump_law.clone(), next, rng }
                    }
                }
            })
            .collect();
        let noise = spec.noise().into_iter().filter(|n| n.0 == 2.0).collect();
        let gauss_rate = spec.diffusive_rate();
        Self {
            parts,
            t: 0.0,
            u: 0.0,
            step_fraction,
            noise,
            diffusive: gauss_rate > 0.0,
            gauss_rate,
            aux: StreamKey::new(master, replica, AUX_COMPONENT).rng(),
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }
}

impl Drive for DriverStream {
    fn next_step(&mut self, _t: f64, max_dt: f64, h_abs: f64) -> Step {
        let mut dt = max_dt.min(noise_cap(&self.noise, self.step_fraction, h_abs));
        let eps = self.step_fraction.sqrt() * h_abs;
        // Per stable part: small-jump variance rate and the waiting time to
        // its next jump above eps, redrawn every step.
        let mut stable = Vec::new();
        let mut event_at = f64::INFINITY;
        for p in &mut self.parts {
            match p {
                Part::Stable { alpha, weight, rng } => {
                    let var = 2.0 * *weight * eps.powf(2.0 - *alpha) / (2.0 - *alpha);
                    let rate = 2.0 * *weight * eps.powf(-*alpha) / *alpha;
                    dt = dt.min(2.0 * self.step_fraction * h_abs * h_abs / var);
                    let wait: f64 = Exp1.sample(rng);
                    let at = self.t + wait / rate;
                    event_at = event_at.min(at);
                    stable.push((var, at));
                }
                Part::Truncated { next, .. } | Part::Compound { next, .. } => event_at = event_at.min(*next),
                _ => {}
            }
        }
        let fire = event_at - self.t <= dt;
        let end = if fire { event_at } else { self.t + dt };
        let dt = if fire { event_at - self.t } else { dt };
        let mut step = Step { dt, jump: 0.0, diffusive: 0.0 };
        let mut stable = stable.into_iter();
        for p in &mut self.parts {
            match p {
                Part::Gaussian { rate, rng } => {
                    if *rate > 0.0 {
                        let z: f64 = StandardNormal.sample(rng);
                        step.diffusive += (*rate * dt).sqrt() * z;
                    }
                }
                Part::Stable { alpha, rng, .. } => {
                    let (var, at) = stable.next().expect("one entry per stable part");
                    let z: f64 = StandardNormal.sample(rng);
                    step.jump += (var * dt).sqrt() * z;
                    if fire && at == event_at {
                        let v: f64 = Open01.sample(rng);
                        let size = eps * v.powf(-1.0 / *alpha);
                        step.jump += if rng.random::<bool>() { size } else { -size };
                    }
                }
                Part::Truncated { scale, gauss_rate, parts, next, rng } => {
                    let z: f64 = StandardNormal.sample(rng);
                    step.jump += (*gauss_rate * dt).sqrt() * z;
                    if fire && *next == event_at {
                        step.jump += *scale * parts.sample_jump(rng);
                        *next = next_event(event_at, parts.rate, rng);
                    }
                }
                Part::Compound { rate, law, next, rng } => {
                    if fire && *next == event_at {
                        step.jump += law.sample(rng);
                        *next = next_event(event_at, *rate, rng);
                    }
                }
            }
        }
        self.t = end;
        self.u += step.jump + step.diffusive;
        step
    }

    fn value(&self) -> f64 {
        self.u
    }

    fn diffusive(&self) -> bool {
        self.diffusive
    }

    fn radial(&mut self) -> Option<Radial<'_>> {
        self.diffusive.then_some(Radial { rate: self.gauss_rate, rng: &mut self.aux })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compound_poisson_steps_stop_at_events() {
        let spec = DriverSpec::new(vec![Component::CompoundPoisson {
            rate: 1.0,
            jump_law: JumpLaw::Constant { size: 1.0 },
            declared_class: Default::default(),
        }])
        .unwrap();
        let mut s = DriverStream::new(&spec, 1, 0, 0.01);
        let mut t = 0.0;
        let mut jumps = 0;
        while t < 50.0 {
            let st = s.next_step(t, (50.0 - t).min(10.0), 1.0);
            t += st.dt;
            if st.jump != 0.0 {
                assert_eq!(st.jump, 1.0);
                jumps += 1;
            }
        }
        assert_eq!(s.value(), jumps as f64);
        assert!(jumps > 20 && jumps < 90);
    }

    #[test]
    fn stable_steps_are_capped() {
        let spec = DriverSpec::levy(0.0, 1.0, 1.0).unwrap();
        let mut s = DriverStream::new(&spec, 1, 0, 0.04);
        for _ in 0..100 {
            let st = s.next_step(0.0, 1.0, 2.0);
            // Small-jump variance 2 eps / pi per unit time at eps = 0.4.
            assert!(st.dt <= 2.0 * 0.04 * 4.0 * std::f64::consts::PI / 0.8 + 1e-12);
        }
        assert!(!s.diffusive());
    }

    #[test]
    fn stable_stream_matches_stable_law() {
        use crate::driver::stable::standard_symmetric_stable;
        use crate::rng::StreamKey;
        use crate::stats::ks_two_sample;
        for &(alpha, theta) in &[(0.5, 1.0), (1.5, 2.0)] {
            let spec = DriverSpec::levy(0.0, alpha, theta).unwrap();
            let n = 4000;
            let streamed: Vec<f64> = (0..n)
                .map(|k| {
                    let mut s = DriverStream::new(&spec, 5, k, 0.1);
                    let mut t = 0.0;
                    while t < 1.0 {
                        t += s.next_step(t, 1.0 - t, 0.05).dt;
                    }
                    s.value()
                })
                .collect();
            let mut rng = StreamKey::new(6, 0, 0).rng();
            let direct: Vec<f64> =
                (0..n).map(|_| theta.powf(1.0 / alpha) * standard_symmetric_stable(alpha, &mut rng)).collect();
            let ks = ks_two_sample(&streamed, &direct).unwrap();
            assert!(ks.passes(0.01), "alpha {alpha}: {ks:?}");
        }
    }
}
