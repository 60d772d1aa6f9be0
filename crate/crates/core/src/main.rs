use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Serialize, Serializer};
use serde_json::{json, Map, Value};

use levy_loewner::io::config::parse_config;
use levy_loewner::io::{error_json, run::run};
use levy_loewner::{Error, Result};

/// Lévy-driven Loewner and β-SLE evolutions.
///
/// Every parameter can also be set in a JSON config file (`--config`);
/// flags override the file, which overrides the defaults.
#[derive(Parser)]
#[command(name = "levy-loewner", version)]
struct Cli {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to LL_WORKERS, else all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fractional Laplacian coefficients gamma(alpha, p).
    Gamma(GammaArgs),
    /// Critical threshold theta0(alpha).
    Theta0(Theta0Args),
    /// One driver sample with its hull raster and a point trajectory.
    Trace(TraceArgs),
    /// Hit fractions over a kappa x alpha x theta x beta grid.
    Phase(PhaseArgs),
    /// One hitting probability.
    Hitprob(HitprobArgs),
    /// Exponent fits near zero and near infinity.
    Slopes(SlopesArgs),
    /// Overshoot densities against their envelopes.
    Overshoot(OvershootArgs),
    /// Hull area fractions of half-disks.
    Area(AreaArgs),
    /// Kolmogorov-Smirnov self-similarity check.
    Scalecheck(ScalecheckArgs),
    /// Frequency of disconnected hulls.
    Disconnect(DisconnectArgs),
    /// Empirical bracket of the theta0 transition.
    #[command(name = "theta0-bracket")]
    Theta0Bracket(Theta0BracketArgs),
}

fn complex(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        [re] => Ok([num(re)?, 0.0]),
        [re, im] => Ok([num(re)?, num(im)?]),
        _ => Err("expected `re` or `re,im`".into()),
    }
}

fn json_value(s: &str) -> std::result::Result<Value, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

fn window(s: &str) -> std::result::Result<Value, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [x_min, x_max, y_min, y_max] => Ok(json!({"x_min": x_min, "x_max": x_max, "y_min": y_min, "y_max": y_max})),
        _ => Err("expected `x_min,x_max,y_min,y_max`".into()),
    }
}

fn axis(s: &str) -> std::result::Result<(String, Vec<f64>), String> {
    let (key, values) = s.split_once('=').ok_or("expected `key=v1,v2,...`")?;
    let values = values
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    Ok((key.trim().to_string(), values))
}

fn axes<S: Serializer>(axes: &[(String, Vec<f64>)], s: S) -> std::result::Result<S::Ok, S::Error> {
    let map: Map<String, Value> = axes.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    map.serialize(s)
}

#[derive(Args, Serialize)]
struct GammaArgs {
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Serialize)]
struct Theta0Args {
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
}

#[derive(Args, Serialize)]
struct TraceArgs {
    /// Driver as JSON, e.g. '{"components":[{"type":"brownian","kappa":0}]}'.
    #[arg(long, value_parser = json_value)]
    driver: Option<Value>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// x_min,x_max,y_min,y_max
    #[arg(long, value_parser = window)]
    window: Option<Value>,
    #[arg(long)]
    cells_across: Option<usize>,
    /// re or re,im
    #[arg(long, value_parser = complex)]
    z: Option<[f64; 2]>,
    #[arg(long)]
    hit_tolerance: Option<f64>,
    #[arg(long)]
    dt_safety: Option<f64>,
}

#[derive(Args, Serialize)]
struct PhaseArgs {
    /// Grid axis, repeatable: --grid kappa=2,8 --grid theta=0.5,1
    #[arg(long, value_parser = axis)]
    #[serde(serialize_with = "axes")]
    grid: Vec<(String, Vec<f64>)>,
    /// re or re,im
    #[arg(long, value_parser = complex)]
    z: Option<[f64; 2]>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    hit_tolerance: Option<f64>,
    #[arg(long)]
    dt_safety: Option<f64>,
}

#[derive(Args, Serialize)]
struct HitprobArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// re or re,im
    #[arg(long, value_parser = complex)]
    z: Option<[f64; 2]>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    hit_tolerance: Option<f64>,
    #[arg(long)]
    dt_safety: Option<f64>,
}

#[derive(Args, Serialize)]
struct SlopesArgs {
    /// near_zero, near_infinity or both
    #[arg(long)]
    side: Option<String>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    x_near_zero: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    x_near_infinity: Option<Vec<f64>>,
    #[arg(long)]
    horizon_near_zero: Option<f64>,
    #[arg(long)]
    horizon_near_infinity: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args, Serialize)]
struct OvershootArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Args, Serialize)]
struct AreaArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long)]
    cells_across: Option<usize>,
    /// Driver resolution in cells across; defaults to --cells-across
    #[arg(long)]
    driver_cells_across: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Serialize)]
struct ScalecheckArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    /// re or re,im
    #[arg(long, value_parser = complex)]
    z: Option<[f64; 2]>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// hit_indicator, im_h_t or exit_time
    #[arg(long)]
    statistic: Option<String>,
    #[arg(long)]
    theta_tilde_override: Option<f64>,
}

#[derive(Args, Serialize)]
struct DisconnectArgs {
    /// Driver as JSON.
    #[arg(long, value_parser = json_value)]
    driver: Option<Value>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// x_min,x_max,y_min,y_max
    #[arg(long, value_parser = window)]
    window: Option<Value>,
    #[arg(long)]
    cells_across: Option<usize>,
}

#[derive(Args, Serialize)]
struct Theta0BracketArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    theta_over_theta0: Option<Vec<f64>>,
    /// Real start points.
    #[arg(long, value_delimiter = ',')]
    x: Option<Vec<f64>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    hit_tolerance: Option<f64>,
    #[arg(long)]
    dt_safety: Option<f64>,
}

/// Serialized flags without the unset ones.
fn params<T: Serialize>(args: &T) -> Value {
    let mut v = serde_json::to_value(args).expect("flags serialize");
    if let Value::Object(map) = &mut v {
        map.retain(|_, x| !x.is_null() && x != &json!({}));
    }
    v
}

impl Cmd {
    fn split(&self) -> (&'static str, Value) {
        match self {
            Cmd::Gamma(a) => ("gamma", params(a)),
            Cmd::Theta0(a) => ("theta0", params(a)),
            Cmd::Trace(a) => ("trace", params(a)),
            Cmd::Phase(a) => ("phase", params(a)),
            Cmd::Hitprob(a) => ("hitprob", params(a)),
            Cmd::Slopes(a) => ("slopes", params(a)),
            Cmd::Overshoot(a) => ("overshoot", params(a)),
            Cmd::Area(a) => ("area", params(a)),
            Cmd::Scalecheck(a) => ("scalecheck", params(a)),
            Cmd::Disconnect(a) => ("disconnect", params(a)),
            Cmd::Theta0Bracket(a) => {
                let mut v = params(a);
                if let Some(xs) = v.as_object_mut().and_then(|m| m.remove("x")) {
                    let zs: Vec<Value> = xs.as_array().into_iter().flatten().map(|x| json!([x, 0.0])).collect();
                    v["z"] = Value::Array(zs);
                }
                ("theta0-bracket", v)
            }
        }
    }
}

fn main_inner(cli: Cli) -> Result<()> {
    let (name, p) = cli.command.split();
    let mut flags = json!({"command": {"params": p}});
    if let Some(seed) = cli.seed {
        flags["seed"] = json!(seed);
    }
    if let Some(workers) = cli.workers {
        flags["workers"] = json!(workers);
    }
    if let Some(out) = &cli.out {
        flags["out"] = json!(out);
    }
    let text = match &cli.config {
        Some(path) => Some(
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("config file {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let cfg = parse_config(text.as_deref(), name, flags)?;
    let manifest = run(&cfg)?;
    for f in &manifest.files {
        println!("{}", cfg.out.join(&f.name).display());
    }
    println!("{}", cfg.out.join(levy_loewner::io::MANIFEST).display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
