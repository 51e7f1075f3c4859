//! Resolved configurations and the work behind each subcommand.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use opo_core::classical::{fixed_point_residual, integrate_classical, steady_state, thresholds, Branch};
use opo_core::geometry::{
    anisotropy_tolerance, detuning_normalized, detuning_small_anisotropy, detuning_sweep, g_parameters,
    optical_length, CrystalSpec, MirrorSpec,
};
use opo_core::orientation::{orientation_ensemble, Fidelity, OrientationConfig, OrientationSystem};
use opo_core::report::{to_csv, trajectory_csv, OrientationRow};
use opo_core::spectra::{optimum_squeezing, spectrum_grid};
use opo_core::stochastic::{estimate_noise_spectrum, fitted_minimum, Mode, Scheme, SdeConfig, SpectrumRequest};
use opo_core::{CavityGeometry, OpoParams};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{angle, angles, CliError};

/// What a command produced: the CSV body, a log for the sidecar and a short
/// human-readable summary for stdout.
pub struct Output {
    pub csv: String,
    pub log: Value,
    pub summary: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryConfig {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "R2x")]
    pub r2x: f64,
    /// Alternative to `epsilon` for mirror 2's y radius.
    #[serde(rename = "R2y")]
    pub r2y: Option<f64>,
    pub lc: f64,
    pub nc: f64,
    #[serde(deserialize_with = "angle")]
    pub beta: f64,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub transmissivity: f64,
    pub c: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            radius: 2.0,
            r2x: 2.0,
            r2y: None,
            lc: 0.1,
            nc: 2.0,
            beta: 0.0,
            epsilon: 0.0,
            transmissivity: 0.01,
            c: 1.0,
        }
    }
}

impl GeometryConfig {
    pub fn build(&self) -> Result<CavityGeometry, CliError> {
        let mirror2 = match self.r2y {
            Some(_) if self.epsilon != 0.0 => {
                return Err(CliError::Config(
                    "set mirror-2 astigmatism with either `epsilon` or `R2y`, not both".into(),
                ))
            }
            Some(r2y) => MirrorSpec {
                radius_x: self.r2x,
                radius_y: r2y,
            },
            None => MirrorSpec::astigmatic(self.r2x, self.epsilon),
        };
        let geom = CavityGeometry {
            length: self.length,
            mirror1: MirrorSpec::spherical(self.radius),
            mirror2,
            crystal: CrystalSpec {
                length: self.lc,
                refractive_index: self.nc,
                tilt: self.beta,
            },
            transmissivity: self.transmissivity,
            speed_of_light: self.c,
        };
        geom.validate()?;
        Ok(geom)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryRun {
    #[serde(flatten)]
    pub geometry: GeometryConfig,
    #[serde(deserialize_with = "angle")]
    pub beta_min: f64,
    #[serde(deserialize_with = "angle")]
    pub beta_max: f64,
    pub beta_steps: usize,
    pub epsilon_min: f64,
    pub epsilon_max: f64,
    pub epsilon_steps: usize,
}

impl Default for GeometryRun {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            beta_min: 0.0,
            beta_max: 10f64.to_radians(),
            beta_steps: 101,
            epsilon_min: 0.0,
            epsilon_max: 3e-3,
            epsilon_steps: 101,
        }
    }
}

pub fn geometry(run: &GeometryRun) -> Result<Output, CliError> {
    let geom = run.geometry.build()?;
    let rows = detuning_sweep(
        &geom,
        (run.beta_min, run.beta_max, run.beta_steps),
        (run.epsilon_min, run.epsilon_max, run.epsilon_steps),
    )?;
    let g = g_parameters(&geom)?;
    let exact = detuning_normalized(&geom)?;
    let approx = detuning_small_anisotropy(&geom).ok();
    let mut summary = String::new();
    let _ = writeln!(summary, "L_opt            {}", optical_length(&geom));
    let _ = writeln!(summary, "g1x g2x, g1y g2y {}, {}", g.product_x(), g.product_y());
    let _ = writeln!(summary, "Delta/gamma_s    {exact}");
    if let Some(a) = approx {
        let flag = if a.outside_validity { " (outside small-anisotropy range)" } else { "" };
        let _ = writeln!(summary, "  approximate    {}{flag}", a.delta_tilde);
    }
    let _ = write!(summary, "{} sweep rows", rows.len());
    Ok(Output {
        csv: to_csv(&rows),
        log: json!({
            "rows": rows.len(),
            "point": {
                "delta_over_gammas_exact": exact,
                "delta_over_gammas_approx": approx.map(|a| a.delta_tilde),
                "g_product_x": g.product_x(),
                "g_product_y": g.product_y(),
                "optical_length": optical_length(&geom),
            },
        }),
        summary,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToleranceRun {
    #[serde(flatten)]
    pub geometry: GeometryConfig,
    pub target_v: f64,
}

impl Default for ToleranceRun {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            target_v: 1.0 / 11.0,
        }
    }
}

pub fn tolerance(run: &ToleranceRun) -> Result<Output, CliError> {
    let geom = run.geometry.build()?;
    let lim = anisotropy_tolerance(&geom, run.target_v)?;
    let csv = format!(
        "target_v,delta_tilde_max,beta_max_rad,epsilon_max\n{},{},{},{}\n",
        run.target_v, lim.delta_tilde_max, lim.beta_max, lim.epsilon_max
    );
    Ok(Output {
        csv,
        log: serde_json::to_value(lim).expect("limits serialize"),
        summary: format!(
            "V_opt <= {} needs |Delta|/gamma_s <= {:.6}: beta <= {:.4} deg (epsilon = 0), epsilon <= {:.4e} (beta = 0)",
            run.target_v,
            lim.delta_tilde_max,
            lim.beta_max.to_degrees(),
            lim.epsilon_max
        ),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumRun {
    pub delta_tilde: f64,
    #[serde(deserialize_with = "angles")]
    pub phi: Vec<f64>,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_steps: usize,
}

impl Default for SpectrumRun {
    fn default() -> Self {
        Self {
            delta_tilde: 0.5,
            phi: vec![0.0, FRAC_PI_2],
            omega_min: 0.0,
            omega_max: 10.0,
            omega_steps: 201,
        }
    }
}

pub fn spectrum(run: &SpectrumRun) -> Result<Output, CliError> {
    // the linearized spectrum only depends on gamma_s and Delta
    let params = OpoParams::dimensionless(1.5, run.delta_tilde, 1.0, 1e-3);
    let rows = spectrum_grid(&params, (run.omega_min, run.omega_max, run.omega_steps), &run.phi)?;
    let opt = optimum_squeezing(run.delta_tilde);
    Ok(Output {
        csv: to_csv(&rows),
        log: json!({ "rows": rows.len(), "omega_opt_tilde": opt.omega_opt_tilde, "v_opt": opt.v_opt }),
        summary: format!(
            "{} rows; optimum at phi = pi/2: w~ = {:.6}, V = {:.6}",
            rows.len(),
            opt.omega_opt_tilde,
            opt.v_opt
        ),
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    EulerMaruyama,
    Midpoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateRun {
    pub sigma: f64,
    pub chi_tilde: f64,
    pub gamma_p_tilde: f64,
    pub delta_tilde: f64,
    pub dt: f64,
    pub t_burn: f64,
    pub t_sample: f64,
    pub n_traj: usize,
    pub seed: u64,
    #[serde(deserialize_with = "angles")]
    pub phi: Vec<f64>,
    pub mode: ModeName,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_steps: usize,
    pub scheme: SchemeName,
    pub sample_interval: f64,
    pub segment_time: Option<f64>,
}

impl Default for SimulateRun {
    fn default() -> Self {
        Self {
            sigma: 1.5,
            chi_tilde: 1e-3,
            gamma_p_tilde: 1.0,
            delta_tilde: 0.2,
            dt: 1e-3,
            t_burn: 250.0,
            t_sample: 400.0,
            n_traj: 400,
            seed: 0,
            phi: vec![FRAC_PI_2],
            mode: ModeName::Y,
            omega_min: 0.4,
            omega_max: 5.0,
            omega_steps: 50,
            scheme: SchemeName::EulerMaruyama,
            sample_interval: 0.05,
            segment_time: None,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn simulate(run: &SimulateRun) -> Result<Output, CliError> {
    let params = OpoParams::dimensionless(run.sigma, run.delta_tilde, run.gamma_p_tilde, run.chi_tilde);
    params.validate()?;
    let cfg = SdeConfig {
        dt: run.dt,
        t_burn: run.t_burn,
        t_sample: run.t_sample,
        scheme: match run.scheme {
            SchemeName::EulerMaruyama => Scheme::EulerMaruyama,
            SchemeName::Midpoint => Scheme::SemiImplicitMidpoint,
        },
        sample_interval: run.sample_interval,
        ..SdeConfig::new(&params, run.n_traj, run.seed)
    };
    let request = SpectrumRequest {
        mode: match run.mode {
            ModeName::X => Mode::X,
            ModeName::Y => Mode::Y,
        },
        phis: run.phi.clone(),
        omegas: linspace(run.omega_min, run.omega_max, run.omega_steps),
        segment_time: run.segment_time,
    };
    let res = estimate_noise_spectrum(&params, &cfg, &request)?;
    let minima: Vec<Value> = run
        .phi
        .iter()
        .map(|&phi| {
            let rows: Vec<_> = res.spectra.iter().filter(|r| r.phi_rad == phi).cloned().collect();
            let m = fitted_minimum(&rows);
            json!({ "phi_rad": phi, "omega_tilde": m.map(|m| m.0), "v": m.map(|m| m.1) })
        })
        .collect();
    let mut summary = format!(
        "{} trajectories, {} diverged, {} branch-cut steps",
        res.n_traj, res.n_diverged, res.branch_cut_events
    );
    for w in &res.warnings {
        let _ = write!(summary, "\nwarning: {w}");
    }
    Ok(Output {
        csv: to_csv(&res.spectra),
        log: json!({
            "n_traj": res.n_traj,
            "n_diverged": res.n_diverged,
            "diverged": res.diverged,
            "branch_cut_events": res.branch_cut_events,
            "mean_ax": res.mean_ax,
            "mean_ay": res.mean_ay,
            "fitted_minima": minima,
            "warnings": res.warnings,
        }),
        summary,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FidelityName {
    Reduced,
    Full,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrientationRun {
    pub delta_tilde: f64,
    /// Overrides `chi_tilde` so that the bright amplitude squared is `rho2`.
    pub rho2: Option<f64>,
    pub sigma: f64,
    pub chi_tilde: f64,
    pub gamma_p_tilde: f64,
    pub n_traj: usize,
    pub t_end: f64,
    pub dt: f64,
    pub sample_interval: f64,
    pub seed: u64,
    pub fidelity: FidelityName,
    /// Start of the window for the stationary variance; defaults to five
    /// slow relaxation times.
    pub t_stationary: Option<f64>,
}

impl Default for OrientationRun {
    fn default() -> Self {
        Self {
            delta_tilde: 0.1,
            rho2: None,
            sigma: 1.5,
            chi_tilde: 0.01,
            gamma_p_tilde: 1.0,
            n_traj: 200,
            t_end: 2000.0,
            dt: 1e-3,
            sample_interval: 1.0,
            seed: 0,
            fidelity: FidelityName::Reduced,
            t_stationary: None,
        }
    }
}

pub fn orientation(run: &OrientationRun) -> Result<Output, CliError> {
    let chi_tilde = match run.rho2 {
        Some(rho2) if rho2 > 0.0 && run.sigma > 1.0 => (2.0 * (run.sigma - 1.0) * run.gamma_p_tilde / rho2).sqrt(),
        Some(_) => return Err(CliError::Config("`rho2` needs rho2 > 0 and sigma > 1".into())),
        None => run.chi_tilde,
    };
    let params = OpoParams::dimensionless(run.sigma, run.delta_tilde, run.gamma_p_tilde, chi_tilde);
    params.validate()?;
    let rho = params.rho();
    let cfg = OrientationConfig {
        dt: run.dt,
        t_end: run.t_end,
        n_traj: run.n_traj,
        seed: run.seed,
        sample_interval: run.sample_interval,
    };
    let fidelity = match run.fidelity {
        FidelityName::Reduced => Fidelity::Reduced,
        FidelityName::Full => Fidelity::Full,
    };
    let ens = orientation_ensemble(&params, rho, &cfg, fidelity)?;
    let reference = ens.v_theta_inf_ref.unwrap_or(f64::NAN);
    let rows: Vec<OrientationRow> = ens
        .variance_vs_time()
        .into_iter()
        .map(|row| OrientationRow {
            row,
            v_theta_inf_ref: reference,
        })
        .collect();

    let slow = OrientationSystem::new(rho, params.gamma_s, params.delta)?.slow_rate();
    let t_from = run.t_stationary.unwrap_or(if slow > 0.0 { 5.0 / slow } else { f64::INFINITY });
    let stationary = if t_from < run.t_end {
        ens.stationary_variance(t_from).ok()
    } else {
        None
    };
    let mut summary = format!("rho^2 = {}, V_theta_inf = {reference:e}", rho * rho);
    match stationary {
        Some((v, se)) => {
            let _ = write!(summary, "\nstationary Var(theta) over t >= {t_from}: {v:e} +/- {se:e}");
        }
        None => {
            let _ = write!(summary, "\nno stationary window inside t_end (slow rate {slow:e})");
        }
    }
    Ok(Output {
        csv: to_csv(&rows),
        log: json!({
            "rho2": rho * rho,
            "chi_tilde_used": chi_tilde,
            "slow_rate": slow,
            "t_stationary": if t_from.is_finite() { Some(t_from) } else { None },
            "stationary_variance": stationary.map(|s| s.0),
            "stationary_stderr": stationary.map(|s| s.1),
            "n_diverged": ens.n_diverged,
        }),
        summary,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyStateRun {
    pub sigma: f64,
    pub delta_tilde: f64,
    pub gamma_p_tilde: f64,
    pub chi_tilde: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Initial `alpha_y`, relative to `max(rho, 1)`, for the trajectory dump.
    pub kick: f64,
}

impl Default for SteadyStateRun {
    fn default() -> Self {
        Self {
            sigma: 1.5,
            delta_tilde: 0.2,
            gamma_p_tilde: 1.0,
            chi_tilde: 1e-3,
            t_end: 50.0,
            dt: 1e-2,
            kick: 1e-2,
        }
    }
}

pub fn steady(run: &SteadyStateRun) -> Result<Output, CliError> {
    let params = OpoParams::dimensionless(run.sigma, run.delta_tilde, run.gamma_p_tilde, run.chi_tilde);
    params.validate()?;
    let ss = steady_state(&params);
    let th = thresholds(&params);
    let mut init = ss.to_state();
    init.ay += run.kick * ss.rho.max(1.0);
    init.ayp = init.ay.conj();
    let traj = integrate_classical(&params, &init, run.t_end, run.dt)?;
    let end = traj.last();
    let branch = match ss.branch {
        Branch::BelowThreshold => "below threshold",
        Branch::AboveThreshold => "above threshold",
    };
    let summary = format!(
        "branch   {branch}\nalpha0   {}\nrho      {}\nE_th_x   {}\nE_th_y   {}\n|alpha_y(t_end)| {:e}",
        ss.alpha0,
        ss.rho,
        th.x,
        th.y,
        end.ay.norm()
    );
    Ok(Output {
        csv: trajectory_csv(&traj),
        log: json!({
            "steady_state": ss,
            "thresholds": th,
            "fixed_point_residual": fixed_point_residual(&params, &ss),
            "final_alpha_y_abs": end.ay.norm(),
        }),
        summary,
    })
}
