use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// User-declared recurrence class of a compound Poisson component.
///
/// Never inferred from the jump law; experiments report it verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclaredClass {
    Recurrent,
    Transient,
    #[default]
    Unspecified,
}

/// Law of a single compound Poisson jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    /// Always `+size`.
    Constant { size: f64 },
    /// `±size` with equal probability.
    Symmetric { size: f64 },
    /// Centered Gaussian.
    Normal { sd: f64 },
    /// Random sign times `scale * V^(-1/index)`, V uniform: a Pareto tail
    /// `P(|X| > x) = (x/scale)^(-index)` for `x >= scale`.
    SymmetricPareto { index: f64, scale: f64 },
}

impl JumpLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpLaw::Constant { size } | JumpLaw::Symmetric { size } => {
                ensure!(size.is_finite(), Domain, "jump size must be finite");
            }
            JumpLaw::Normal { sd } => {
                ensure!(sd > 0.0 && sd.is_finite(), Domain, "jump sd must be positive");
            }
            JumpLaw::SymmetricPareto { index, scale } => {
                ensure!(index > 0.0 && index.is_finite(), Domain, "pareto index must be positive");
                ensure!(scale > 0.0 && scale.is_finite(), Domain, "pareto scale must be positive");
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::Constant { size } => size,
            JumpLaw::Symmetric { size } => {
                if rng.random::<bool>() {
                    size
                } else {
                    -size
                }
            }
            JumpLaw::Normal { sd } => {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }
            JumpLaw::SymmetricPareto { index, scale } => {
                let v: f64 = Open01.sample(rng);
                let mag = scale * v.powf(-1.0 / index);
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, JumpLaw::Constant { size } if *size != 0.0)
    }
}

/// One independent summand of the driving process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Component {
    /// `sqrt(kappa) B`.
    Brownian { kappa: f64 },
    /// `theta^(1/alpha) S` with `E exp(i l S_1) = exp(-|l|^alpha)`.
    Stable { alpha: f64, theta: f64 },
    /// `theta^(1/alpha) S^c`: the stable process with every jump larger
    /// than `cutoff` in magnitude removed.
    TruncatedStable {
        alpha: f64,
        theta: f64,
        cutoff: f64,
        /// Jumps below this size are replaced by a Gaussian with the same
        /// variance. Defaults to `min(cutoff / 100, 0.01)`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        small_jump_cutoff: Option<f64>,
    },
    /// Compound Poisson process with the given jump rate and jump law.
    CompoundPoisson {
        rate: f64,
        jump_law: JumpLaw,
        #[serde(default)]
        declared_class: DeclaredClass,
    },
}

impl Component {
    pub fn validate(&self) -> Result<()> {
        match self {
            Component::Brownian { kappa } => {
                ensure!(*kappa >= 0.0 && kappa.is_finite(), Domain, "kappa must be >= 0, got {kappa}");
            }
            Component::Stable { alpha, theta } => {
                ensure!(*alpha > 0.0 && *alpha <= 2.0, Domain, "alpha must lie in (0,2], got {alpha}");
                ensure!(*theta > 0.0 && theta.is_finite(), Domain, "theta must be > 0, got {theta}");
            }
            Component::TruncatedStable { alpha, theta, cutoff, small_jump_cutoff } => {
                ensure!(
                    *alpha > 0.0 && *alpha < 2.0,
                    Domain,
                    "alpha must lie in (0,2) for a truncated stable component, got {alpha}"
                );
                ensure!(*theta > 0.0 && theta.is_finite(), Domain, "theta must be > 0, got {theta}");
                ensure!(*cutoff > 0.0 && cutoff.is_finite(), Domain, "cutoff must be > 0, got {cutoff}");
                if let Some(eps) = small_jump_cutoff {
                    ensure!(*eps > 0.0 && eps < cutoff, Domain, "small_jump_cutoff must lie in (0, cutoff)");
                }
            }
            Component::CompoundPoisson { rate, jump_law, .. } => {
                ensure!(*rate > 0.0 && rate.is_finite(), Domain, "rate must be > 0, got {rate}");
                jump_law.validate()?;
            }
        }
        Ok(())
    }

    /// Variance rate of the Gaussian part this component contributes.
    pub(crate) fn diffusive_rate(&self) -> f64 {
        match *self {
            Component::Brownian { kappa } => kappa,
            Component::Stable { alpha: 2.0, theta } => 2.0 * theta,
            _ => 0.0,
        }
    }
}

/// Description of a driving process `U` as a sum of independent components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverSpec {
    pub components: Vec<Component>,
}

impl DriverSpec {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let spec = Self { components };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.components.is_empty(), Domain, "a driver needs at least one component");
        self.components.iter().try_for_each(Component::validate)
    }

    /// `U = sqrt(kappa) B + theta^(1/alpha) S`. Zero parts are dropped; the
    /// fully degenerate case is the zero driver `brownian(0)`.
    pub fn levy(kappa: f64, alpha: f64, theta: f64) -> Result<Self> {
        let mut components = Vec::new();
        if kappa != 0.0 {
            components.push(Component::Brownian { kappa });
        }
        if theta != 0.0 {
            components.push(Component::Stable { alpha, theta });
        }
        if components.is_empty() {
            components.push(Component::Brownian { kappa: 0.0 });
        }
        Self::new(components)
    }

    pub fn zero() -> Self {
        Self { components: vec![Component::Brownian { kappa: 0.0 }] }
    }

    /// Total Gaussian variance rate.
    pub fn diffusive_rate(&self) -> f64 {
        self.components.iter().map(Component::diffusive_rate).sum()
    }

    /// `(alpha, theta)` scale of every continuous-in-law noise source; the
    /// Gaussian part of a truncated stable component enters as `alpha = 2`.
    pub(crate) fn noise(&self) -> Vec<(f64, f64)> {
        self.components
            .iter()
            .filter_map(|c| match *c {
                Component::Brownian { kappa } if kappa > 0.0 => Some((2.0, 0.5 * kappa)),
                Component::Stable { alpha, theta } => Some((alpha, theta)),
                Component::TruncatedStable { alpha, theta, cutoff, small_jump_cutoff } => {
                    let parts = super::stable::TruncatedParts::new(alpha, cutoff, small_jump_cutoff);
                    Some((2.0, 0.5 * theta.powf(2.0 / alpha) * parts.small_variance))
                }
                _ => None,
            })
            .collect()
    }

    pub fn has_jumps(&self) -> bool {
        self.components.iter().any(|c| match c {
            Component::Brownian { .. } => false,
            Component::Stable { alpha, .. } => *alpha < 2.0,
            _ => true,
        })
    }

    /// Classes of every compound Poisson component, in order.
    pub fn declared_classes(&self) -> Vec<DeclaredClass> {
        self.components
            .iter()
            .filter_map(|c| match c {
                Component::CompoundPoisson { declared_class, .. } => Some(*declared_class),
                _ => None,
            })
            .collect()
    }

    /// Law symmetric under `U -> -U`.
    pub fn is_symmetric(&self) -> bool {
        self.components.iter().all(|c| match c {
            Component::CompoundPoisson { jump_law, .. } => jump_law.is_symmetric(),
            _ => true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(DriverSpec::new(vec![]).is_err());
        assert!(DriverSpec::new(vec![Component::Brownian { kappa: -1.0 }]).is_err());
        let e = DriverSpec::new(vec![Component::Stable { alpha: 2.5, theta: 1.0 }]).unwrap_err();
        assert!(e.to_string().contains("alpha must lie in (0,2]"));
        assert!(DriverSpec::new(vec![Component::TruncatedStable {
            alpha: 1.0,
            theta: 1.0,
            cutoff: 0.0,
            small_jump_cutoff: None
        }])
        .is_err());
        assert!(DriverSpec::new(vec![Component::CompoundPoisson {
            rate: 0.0,
            jump_law: JumpLaw::Symmetric { size: 1.0 },
            declared_class: DeclaredClass::Recurrent
        }])
        .is_err());
    }

    #[test]
    fn json_shape() {
        let spec = DriverSpec::new(vec![
            Component::Brownian { kappa: 8.0 },
            Component::CompoundPoisson {
                rate: 1.0,
                jump_law: JumpLaw::SymmetricPareto { index: 0.5, scale: 1.0 },
                declared_class: DeclaredClass::Transient,
            },
        ])
        .unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains(r#""type":"compound_poisson""#));
        assert!(text.contains(r#""law":"symmetric_pareto""#));
        let back: DriverSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let unknown = r#"{"components":[{"type":"brownian","kappa":1,"bogus":2}]}"#;
        assert!(serde_json::from_str::<DriverSpec>(unknown).is_err());
    }

    #[test]
    fn levy_drops_zero_parts() {
        assert_eq!(DriverSpec::levy(0.0, 1.5, 0.0).unwrap(), DriverSpec::zero());
        assert_eq!(DriverSpec::levy(4.0, 1.5, 0.0).unwrap().components.len(), 1);
        assert_eq!(DriverSpec::levy(4.0, 1.5, 1.0).unwrap().components.len(), 2);
        assert!(!DriverSpec::levy(4.0, 1.5, 0.0).unwrap().has_jumps());
    }
}
