//! Run configuration. Values are resolved in three layers: built-in
//! defaults, then the JSON config file, then command-line flags.
//!
//! A config file mirrors [`RunConfig`]:
//!
//! ```json
//! {"seed": 7, "workers": 4, "out": "runs/phase",
//!  "command": {"name": "phase", "params": {"grid": {"kappa": [2, 8]}, "n": 500}}}
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::driver::{Component, DriverSpec, JumpLaw};
use crate::error::{Error, Result};
use crate::experiments::{PhaseGrid, ScalingStatistic};
use crate::loewner::Window;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. Default 1.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads. Default `LL_WORKERS`, else the available parallelism.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Output directory. Default `out`.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub command: Command,
}

fn default_seed() -> u64 {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

pub fn default_workers() -> usize {
    std::env::var("LL_WORKERS")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&w| w >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// One subcommand with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Gamma(GammaCmd),
    Theta0(Theta0Cmd),
    Trace(TraceCmd),
    Phase(PhaseCmd),
    Hitprob(HitprobCmd),
    Slopes(SlopesCmd),
    Overshoot(OvershootCmd),
    Area(AreaCmd),
    Scalecheck(ScalecheckCmd),
    Disconnect(DisconnectCmd),
    Theta0Bracket(Theta0BracketCmd),
}

pub const COMMANDS: [&str; 11] = [
    "gamma",
    "theta0",
    "trace",
    "phase",
    "hitprob",
    "slopes",
    "overshoot",
    "area",
    "scalecheck",
    "disconnect",
    "theta0-bracket",
];

impl Command {
    /// The command `name` with every parameter at its default.
    pub fn default_for(name: &str) -> Result<Self> {
        Ok(match name {
            "gamma" => Self::Gamma(Default::default()),
            "theta0" => Self::Theta0(Default::default()),
            "trace" => Self::Trace(Default::default()),
            "phase" => Self::Phase(Default::default()),
            "hitprob" => Self::Hitprob(Default::default()),
            "slopes" => Self::Slopes(Default::default()),
            "overshoot" => Self::Overshoot(Default::default()),
            "area" => Self::Area(Default::default()),
            "scalecheck" => Self::Scalecheck(Default::default()),
            "disconnect" => Self::Disconnect(Default::default()),
            "theta0-bracket" => Self::Theta0Bracket(Default::default()),
            _ => return Err(Error::Config(format!("command.name: unknown command `{name}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gamma(_) => "gamma",
            Self::Theta0(_) => "theta0",
            Self::Trace(_) => "trace",
            Self::Phase(_) => "phase",
            Self::Hitprob(_) => "hitprob",
            Self::Slopes(_) => "slopes",
            Self::Overshoot(_) => "overshoot",
            Self::Area(_) => "area",
            Self::Scalecheck(_) => "scalecheck",
            Self::Disconnect(_) => "disconnect",
            Self::Theta0Bracket(_) => "theta0-bracket",
        }
    }
}

/// Rows `(alpha, p, gamma, A_const, class)` for every pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaCmd {
    /// Default `[0.5, 1, 1.5]`.
    pub alpha: Vec<f64>,
    /// Default `[0.25, 0.5, 1, 1.25]`.
    pub p: Vec<f64>,
    /// Default `1e-10`.
    pub tol: f64,
}

impl Default for GammaCmd {
    fn default() -> Self {
        Self { alpha: vec![0.5, 1.0, 1.5], p: vec![0.25, 0.5, 1.0, 1.25], tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Theta0Cmd {
    /// Default `[1.1, 1.3, 1.5, 1.7, 1.9]`.
    pub alpha: Vec<f64>,
}

impl Default for Theta0Cmd {
    fn default() -> Self {
        Self { alpha: vec![1.1, 1.3, 1.5, 1.7, 1.9] }
    }
}

/// One driver sample, its hull raster and the trajectory of one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceCmd {
    /// Default Brownian with `kappa = 4`.
    pub driver: DriverSpec,
    /// Default 1.
    pub horizon: f64,
    /// Uniform driver grid steps. Default 10000.
    pub steps: usize,
    /// Default `[-2, 2] x [0, 2]`.
    pub window: Window,
    /// Default 101.
    pub cells_across: usize,
    /// Traced point. Default `0.5 + i`.
    pub z: Complex64,
    /// Default half a raster cell.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_tolerance: Option<f64>,
    /// Default 0.1.
    pub dt_safety: f64,
}

impl Default for TraceCmd {
    fn default() -> Self {
        Self {
            driver: DriverSpec { components: vec![Component::Brownian { kappa: 4.0 }] },
            horizon: 1.0,
            steps: 10_000,
            window: Window { x_min: -2.0, x_max: 2.0, y_min: 0.0, y_max: 2.0 },
            cells_across: 101,
            z: Complex64::new(0.5, 1.0),
            hit_tolerance: None,
            dt_safety: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseCmd {
    /// Default `kappa = [2, 8]`, `alpha = [1.5]`, `theta = [1]`, `beta = [2]`.
    pub grid: PhaseGrid,
    /// Default 1.
    pub z: Complex64,
    /// Default 1000.
    pub n: usize,
    /// Default 100.
    pub horizon: f64,
    /// Default `1e-4 (1 + |z|)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_tolerance: Option<f64>,
    /// Default 0.1.
    pub dt_safety: f64,
}

impl Default for PhaseCmd {
    fn default() -> Self {
        Self {
            grid: PhaseGrid { kappa: vec![2.0, 8.0], alpha: vec![1.5], theta: vec![1.0], beta: vec![2.0] },
            z: Complex64::new(1.0, 0.0),
            n: 1000,
            horizon: 100.0,
            hit_tolerance: None,
            dt_safety: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HitprobCmd {
    /// Default 8.
    pub kappa: f64,
    /// Default 1.5.
    pub alpha: f64,
    /// Default 1.
    pub theta: f64,
    /// Default 2.
    pub beta: f64,
    /// Default 1.
    pub z: Complex64,
    /// Default 1000.
    pub n: usize,
    /// Default 100.
    pub horizon: f64,
    /// Default `1e-4 (1 + |z|)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_tolerance: Option<f64>,
    /// Default 0.1.
    pub dt_safety: f64,
}

impl Default for HitprobCmd {
    fn default() -> Self {
        Self {
            kappa: 8.0,
            alpha: 1.5,
            theta: 1.0,
            beta: 2.0,
            z: Complex64::new(1.0, 0.0),
            n: 1000,
            horizon: 100.0,
            hit_tolerance: None,
            dt_safety: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeSide {
    NearZero,
    NearInfinity,
    Both,
}

impl SlopeSide {
    pub fn near_zero(self) -> bool {
        self != Self::NearInfinity
    }

    pub fn near_infinity(self) -> bool {
        self != Self::NearZero
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlopesCmd {
    /// Default `both`.
    pub side: SlopeSide,
    /// Default 8.
    pub kappa: f64,
    /// Default 0.5.
    pub alpha: f64,
    /// Default 1.
    pub theta: f64,
    /// Default `2^-k`, `k = 6..1`.
    pub x_near_zero: Vec<f64>,
    /// Default `2^k`, `k = 1..8`.
    pub x_near_infinity: Vec<f64>,
    /// Default 100.
    pub horizon_near_zero: f64,
    /// Default 1000.
    pub horizon_near_infinity: f64,
    /// Default 4000.
    pub n: usize,
    /// Allowed distance of the slope from its expected value. Default 0.15.
    pub tolerance: f64,
}

impl Default for SlopesCmd {
    fn default() -> Self {
        Self {
            side: SlopeSide::Both,
            kappa: 8.0,
            alpha: 0.5,
            theta: 1.0,
            x_near_zero: (1..=6).rev().map(|k| 0.5f64.powi(k)).collect(),
            x_near_infinity: (1..=8).map(|k| 2f64.powi(k)).collect(),
            horizon_near_zero: 100.0,
            horizon_near_infinity: 1000.0,
            n: 4000,
            tolerance: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OvershootCmd {
    /// Default 2.
    pub kappa: f64,
    /// Default 0.5.
    pub alpha: f64,
    /// Default 1.
    pub theta: f64,
    /// Default 1.
    pub a: f64,
    /// Default 2.
    pub b: f64,
    /// Default `sqrt(a b)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    /// Default 10000.
    pub n: usize,
    /// Default 8.
    pub bins: usize,
    /// Default 100.
    pub horizon: f64,
}

impl Default for OvershootCmd {
    fn default() -> Self {
        Self { kappa: 2.0, alpha: 0.5, theta: 1.0, a: 1.0, b: 2.0, x0: None, n: 10_000, bins: 8, horizon: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaCmd {
    /// Default 8.
    pub kappa: f64,
    /// Default 1.5.
    pub alpha: f64,
    /// Default 1.
    pub theta: f64,
    /// Default `[0.5, 1, 2]`.
    pub radii: Vec<f64>,
    /// Default 128.
    pub cells_across: usize,
    /// Driver resolution in raster cells across; defaults to `cells_across`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub driver_cells_across: Option<usize>,
    /// Default 1000.
    pub horizon: f64,
    /// Default 4.
    pub n: usize,
}

impl Default for AreaCmd {
    fn default() -> Self {
        Self {
            kappa: 8.0,
            alpha: 1.5,
            theta: 1.0,
            radii: vec![0.5, 1.0, 2.0],
            cells_across: 128,
            driver_cells_across: None,
            horizon: 1000.0,
            n: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalecheckCmd {
    /// Default 4.
    pub kappa: f64,
    /// Default 1.5.
    pub alpha: f64,
    /// Default 16.
    pub theta: f64,
    /// Default 2.
    pub a: f64,
    /// Default `i`.
    pub z: Complex64,
    /// Default 10.
    pub radius: f64,
    /// Default 1000.
    pub horizon: f64,
    /// Default 2000.
    pub n: usize,
    /// Default `exit_time`.
    pub statistic: ScalingStatistic,
    /// Default none: use the rescaled `theta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_tilde_override: Option<f64>,
}

impl Default for ScalecheckCmd {
    fn default() -> Self {
        Self {
            kappa: 4.0,
            alpha: 1.5,
            theta: 16.0,
            a: 2.0,
            z: Complex64::new(0.0, 1.0),
            radius: 10.0,
            horizon: 1000.0,
            n: 2000,
            statistic: ScalingStatistic::ExitTime,
            theta_tilde_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisconnectCmd {
    /// Default compound Poisson, rate 1, jumps `±4`.
    pub driver: DriverSpec,
    /// Default 1.
    pub t: f64,
    /// Default 100.
    pub n: usize,
    /// Default `[-6, 6] x [0, 3]`.
    pub window: Window,
    /// Default 96.
    pub cells_across: usize,
}

impl Default for DisconnectCmd {
    fn default() -> Self {
        Self {
            driver: DriverSpec {
                components: vec![Component::CompoundPoisson {
                    rate: 1.0,
                    jump_law: JumpLaw::Symmetric { size: 4.0 },
                    declared_class: Default::default(),
                }],
            },
            t: 1.0,
            n: 100,
            window: Window { x_min: -6.0, x_max: 6.0, y_min: 0.0, y_max: 3.0 },
            cells_across: 96,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Theta0BracketCmd {
    /// Default 1.5.
    pub alpha: f64,
    /// Grid of `theta / theta0(alpha)`. Default `0.125 + 0.25 k`, `k = 0..7`.
    pub theta_over_theta0: Vec<f64>,
    /// Default `[0.68]`.
    pub z: Vec<Complex64>,
    /// Default 2000.
    pub n: usize,
    /// Default 1e5.
    pub horizon: f64,
    /// Default `1e-4 (1 + |z|)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_tolerance: Option<f64>,
    /// Default 0.1.
    pub dt_safety: f64,
}

impl Default for Theta0BracketCmd {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            theta_over_theta0: (0..8).map(|k| 0.125 + 0.25 * k as f64).collect(),
            z: vec![Complex64::new(0.68, 0.0)],
            n: 2000,
            horizon: 1e5,
            hit_tolerance: None,
            dt_safety: 0.1,
        }
    }
}

fn require(cond: bool, key: &str, msg: impl std::fmt::Display) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(format!("{key}: {msg}")))
    }
}

fn check_alpha(key: &str, alpha: f64) -> Result<()> {
    require(alpha > 0.0 && alpha <= 2.0, key, format!("alpha must lie in (0,2], got {alpha}"))
}

fn check_positive(key: &str, x: f64) -> Result<()> {
    require(x > 0.0 && x.is_finite(), key, format!("must be > 0, got {x}"))
}

fn check_nonnegative(key: &str, x: f64) -> Result<()> {
    require(x >= 0.0 && x.is_finite(), key, format!("must be >= 0, got {x}"))
}

fn check_count(key: &str, n: usize) -> Result<()> {
    require(n >= 1, key, "must be >= 1")
}

fn check_upper(key: &str, z: Complex64) -> Result<()> {
    require(z.im >= 0.0 && z.re.is_finite() && z.im.is_finite(), key, "must lie in the closed upper half-plane")
}

fn check_driver(key: &str, d: &DriverSpec) -> Result<()> {
    d.validate().map_err(|e| Error::Config(format!("{key}: {}", strip_kind(&e))))
}

fn check_window(key: &str, w: &Window) -> Result<()> {
    w.validate().map_err(|e| Error::Config(format!("{key}: {}", strip_kind(&e))))
}

fn check_optional(key: &str, x: Option<f64>) -> Result<()> {
    x.map_or(Ok(()), |x| check_positive(key, x))
}

fn check_safety(key: &str, s: f64) -> Result<()> {
    require(s > 0.0 && s < 1.0, key, format!("must lie in (0,1), got {s}"))
}

fn strip_kind(e: &Error) -> String {
    let text = e.to_string();
    text.split_once(": ").map_or(text.clone(), |(_, m)| m.to_string())
}

impl RunConfig {
    /// Domain checks; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        check_count("workers", self.workers)?;
        let p = |k: &str| format!("command.params.{k}");
        match &self.command {
            Command::Gamma(c) => {
                c.alpha.iter().try_for_each(|&a| check_alpha(&p("alpha"), a))?;
                c.p.iter().try_for_each(|&x| check_positive(&p("p"), x))?;
                check_positive(&p("tol"), c.tol)?;
            }
            Command::Theta0(c) => c.alpha.iter().try_for_each(|&a| check_alpha(&p("alpha"), a))?,
            Command::Trace(c) => {
                check_driver(&p("driver"), &c.driver)?;
                check_positive(&p("horizon"), c.horizon)?;
                check_count(&p("steps"), c.steps)?;
                check_window(&p("window"), &c.window)?;
                check_count(&p("cells_across"), c.cells_across)?;
                check_upper(&p("z"), c.z)?;
                check_optional(&p("hit_tolerance"), c.hit_tolerance)?;
                check_safety(&p("dt_safety"), c.dt_safety)?;
            }
            Command::Phase(c) => {
                let g = &c.grid;
                g.kappa.iter().try_for_each(|&k| check_nonnegative(&p("grid.kappa"), k))?;
                g.alpha.iter().try_for_each(|&a| check_alpha(&p("grid.alpha"), a))?;
                g.theta.iter().try_for_each(|&t| check_nonnegative(&p("grid.theta"), t))?;
                g.beta.iter().try_for_each(|&b| check_positive(&p("grid.beta"), b))?;
                check_upper(&p("z"), c.z)?;
                check_count(&p("n"), c.n)?;
                check_positive(&p("horizon"), c.horizon)?;
                check_optional(&p("hit_tolerance"), c.hit_tolerance)?;
                check_safety(&p("dt_safety"), c.dt_safety)?;
            }
            Command::Hitprob(c) => {
                check_nonnegative(&p("kappa"), c.kappa)?;
                check_alpha(&p("alpha"), c.alpha)?;
                check_nonnegative(&p("theta"), c.theta)?;
                check_positive(&p("beta"), c.beta)?;
                check_upper(&p("z"), c.z)?;
                check_count(&p("n"), c.n)?;
                check_positive(&p("horizon"), c.horizon)?;
                check_optional(&p("hit_tolerance"), c.hit_tolerance)?;
                check_safety(&p("dt_safety"), c.dt_safety)?;
            }
            Command::Slopes(c) => {
                check_nonnegative(&p("kappa"), c.kappa)?;
                check_alpha(&p("alpha"), c.alpha)?;
                check_positive(&p("theta"), c.theta)?;
                check_positive(&p("horizon_near_zero"), c.horizon_near_zero)?;
                check_positive(&p("horizon_near_infinity"), c.horizon_near_infinity)?;
                check_count(&p("n"), c.n)?;
                check_positive(&p("tolerance"), c.tolerance)?;
            }
            Command::Overshoot(c) => {
                check_nonnegative(&p("kappa"), c.kappa)?;
                check_alpha(&p("alpha"), c.alpha)?;
                check_positive(&p("theta"), c.theta)?;
                check_positive(&p("a"), c.a)?;
                require(c.b > c.a, &p("b"), format!("must exceed a = {}, got {}", c.a, c.b))?;
                check_count(&p("n"), c.n)?;
                check_count(&p("bins"), c.bins)?;
                check_positive(&p("horizon"), c.horizon)?;
            }
            Command::Area(c) => {
                check_nonnegative(&p("kappa"), c.kappa)?;
                check_alpha(&p("alpha"), c.alpha)?;
                check_nonnegative(&p("theta"), c.theta)?;
                c.radii.iter().try_for_each(|&r| check_positive(&p("radii"), r))?;
                check_count(&p("cells_across"), c.cells_across)?;
                if let Some(d) = c.driver_cells_across {
                    check_count(&p("driver_cells_across"), d)?;
                }
                check_positive(&p("horizon"), c.horizon)?;
                check_count(&p("n"), c.n)?;
            }
            Command::Scalecheck(c) => {
                check_nonnegative(&p("kappa"), c.kappa)?;
                check_alpha(&p("alpha"), c.alpha)?;
                check_nonnegative(&p("theta"), c.theta)?;
                check_positive(&p("a"), c.a)?;
                check_upper(&p("z"), c.z)?;
                check_positive(&p("radius"), c.radius)?;
                check_positive(&p("horizon"), c.horizon)?;
                check_count(&p("n"), c.n)?;
                if let Some(t) = c.theta_tilde_override {
                    check_nonnegative(&p("theta_tilde_override"), t)?;
                }
            }
            Command::Disconnect(c) => {
                check_driver(&p("driver"), &c.driver)?;
                check_positive(&p("t"), c.t)?;
                check_count(&p("n"), c.n)?;
                check_window(&p("window"), &c.window)?;
                check_count(&p("cells_across"), c.cells_across)?;
            }
            Command::Theta0Bracket(c) => {
                check_alpha(&p("alpha"), c.alpha)?;
                c.theta_over_theta0.iter().try_for_each(|&t| check_positive(&p("theta_over_theta0"), t))?;
                c.z.iter().try_for_each(|&z| check_upper(&p("z"), z))?;
                check_count(&p("n"), c.n)?;
                check_positive(&p("horizon"), c.horizon)?;
                check_optional(&p("hit_tolerance"), c.hit_tolerance)?;
                check_safety(&p("dt_safety"), c.dt_safety)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("configs serialize")
    }
}

/// Recursive merge: objects merge key by key, anything else replaces.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Resolves the configuration of `command`.
///
/// `file` is the text of a JSON config file; `flags` holds command-line
/// overrides in the same layout as the file.
pub fn parse_config(file: Option<&str>, command: &str, flags: Value) -> Result<RunConfig> {
    let defaults = RunConfig {
        seed: default_seed(),
        workers: default_workers(),
        out: default_out(),
        command: Command::default_for(command)?,
    };
    let mut doc = defaults.to_json();
    if let Some(text) = file {
        let parsed: Value = if text.trim().is_empty() {
            Value::Object(Default::default())
        } else {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?
        };
        if !parsed.is_object() {
            return Err(Error::Config("config file: top level must be an object".into()));
        }
        if let Some(name) = parsed.pointer("/command/name") {
            if name.as_str() != Some(command) {
                return Err(Error::Config(format!(
                    "command.name: config file is for {name} but the subcommand is `{command}`"
                )));
            }
        }
        merge(&mut doc, parsed);
    }
    merge(&mut doc, flags);
    let cfg: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("{path}: {}", e.into_inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}
