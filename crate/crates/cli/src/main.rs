use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

mod commands;
mod config;

use commands::Output;
use config::{resolve, write_outputs, CliError};

/// Two-transverse-mode degenerate OPO: cavity anisotropy, squeezing spectra,
/// positive-P simulation and orientation locking.
#[derive(Debug, Parser)]
#[command(name = "opo", version)]
struct Cli {
    /// JSON config (flat key/value map, or a `.meta.json` sidecar to replay).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV; the sidecar goes next to it as `<out>.meta.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for ensemble runs (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detuning versus crystal tilt and mirror ellipticity.
    Geometry(GeometryFlags),
    /// Linearized TEM01 noise spectra (matrix route and closed form).
    Spectrum(SpectrumFlags),
    /// Positive-P estimate of the noise spectra.
    Simulate(SimulateFlags),
    /// Orientation variance of the bright mode versus time.
    Orientation(OrientationFlags),
    /// Classical steady state, thresholds and a relaxation trajectory.
    SteadyState(SteadyStateFlags),
    /// Largest tilt and ellipticity compatible with a target noise level.
    Tolerance(ToleranceFlags),
}

// Flag sets serialize to the keys of the matching resolved config; unset
// flags are skipped so that they do not override the config file.

#[derive(Debug, Args, Serialize)]
struct CavityFlags {
    /// Cavity length L.
    #[arg(long)]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    /// Mirror 1 radius R.
    #[arg(long)]
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    /// Mirror 2 x radius.
    #[arg(long = "r2x")]
    #[serde(rename = "R2x", skip_serializing_if = "Option::is_none")]
    r2x: Option<f64>,
    /// Mirror 2 y radius (instead of --epsilon).
    #[arg(long = "r2y")]
    #[serde(rename = "R2y", skip_serializing_if = "Option::is_none")]
    r2y: Option<f64>,
    /// Crystal length.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lc: Option<f64>,
    /// Crystal refractive index.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    nc: Option<f64>,
    /// Crystal tilt (radians, or e.g. `6deg`).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<String>,
    /// Mirror 2 ellipticity 1 - R2y/R2x.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    /// Output-coupler transmissivity.
    #[arg(long = "transmissivity")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    transmissivity: Option<f64>,
    /// Speed of light in the chosen units.
    #[arg(long = "speed-of-light")]
    #[serde(rename = "c", skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct GeometryFlags {
    #[command(flatten)]
    #[serde(flatten)]
    cavity: CavityFlags,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_min: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_max: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_steps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_steps: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct ToleranceFlags {
    #[command(flatten)]
    #[serde(flatten)]
    cavity: CavityFlags,
    /// Target optimum noise level V_opt in (0, 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    target_v: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct SpectrumFlags {
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_tilde: Option<f64>,
    /// Quadrature angle; repeat for several curves.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    phi: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_steps: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_tilde: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_p_tilde: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_tilde: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_burn: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_sample: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n_traj: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    phi: Vec<String>,
    /// `x` (bright TEM10) or `y` (TEM01).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_steps: Option<usize>,
    /// `euler-maruyama` or `midpoint`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_interval: Option<f64>,
    /// Welch segment length in units of 1/gamma_s.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    segment_time: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct OrientationFlags {
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_tilde: Option<f64>,
    /// Bright amplitude squared; sets chi_tilde from sigma.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rho2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_tilde: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_p_tilde: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n_traj: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_interval: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_stationary: Option<f64>,
    /// Simulate the two-variable linear system.
    #[arg(long, conflicts_with = "full")]
    #[serde(skip)]
    reduced: bool,
    /// Read the angle off the full positive-P engine.
    #[arg(long)]
    #[serde(skip)]
    full: bool,
}

#[derive(Debug, Args, Serialize)]
struct SteadyStateFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_tilde: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_p_tilde: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_tilde: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    /// Initial alpha_y relative to max(rho, 1).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kick: Option<f64>,
}

fn flag_layer(flags: &impl Serialize, seed: Option<u64>) -> Value {
    let mut value = serde_json::to_value(flags).expect("flags serialize");
    if let (Some(seed), Value::Object(map)) = (seed, &mut value) {
        map.insert("seed".into(), seed.into());
    }
    value
}

fn execute<T>(
    name: &str,
    cli: &Cli,
    flags: Value,
    work: impl FnOnce(&T) -> Result<Output, CliError>,
) -> Result<(), CliError>
where
    T: Serialize + DeserializeOwned + Default,
{
    let resolved: T = resolve(name, cli.config.as_deref(), flags)?;
    let output = work(&resolved)?;
    let default_out = PathBuf::from(format!("{name}.csv"));
    let out: &Path = cli.out.as_deref().unwrap_or(&default_out);
    write_outputs(name, &resolved, out, &output.csv, output.log)?;
    println!("{}", output.summary);
    println!("wrote {}", out.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    // only the stochastic commands take a seed
    match &cli.command {
        Command::Geometry(f) => execute("geometry", cli, flag_layer(f, None), commands::geometry),
        Command::Tolerance(f) => execute("tolerance", cli, flag_layer(f, None), commands::tolerance),
        Command::Spectrum(f) => execute("spectrum", cli, flag_layer(f, None), commands::spectrum),
        Command::SteadyState(f) => execute("steady-state", cli, flag_layer(f, None), commands::steady),
        Command::Simulate(f) => execute("simulate", cli, flag_layer(f, cli.seed), commands::simulate),
        Command::Orientation(f) => {
            let mut layer = flag_layer(f, cli.seed);
            if f.reduced || f.full {
                let fidelity = if f.full { "full" } else { "reduced" };
                layer["fidelity"] = fidelity.into();
            }
            execute("orientation", cli, layer, commands::orientation)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
