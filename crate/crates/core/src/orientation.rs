//! Orientation of the bright mode under anisotropy.
//!
//! To linear order the orientation angle `theta` and the dark-mode
//! fluctuation `c1` obey `dx/dt = -M x + sqrt(2 gamma_s) eta` with
//! `x = (2 rho theta, c1)` and `M = [[0, i D], [i D, 2 gamma_s]]`. For
//! `D != 0` the angle is locked and has a finite stationary variance; for
//! `D = 0` it diffuses freely.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::OpoParams;
use crate::error::{Error, Result};
use crate::spectra::eigenvalues_2x2;
use crate::stochastic::{mean_and_stderr, run_ensemble, NoiseStream, Scheme, SdeConfig, Trajectory};

type C = Complex64;

/// Variance above which the small-angle linearization is flagged.
pub const LINEAR_REGIME_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationSystem {
    pub matrix: Matrix2<C>,
    pub noise_strength: f64,
    pub rho: f64,
    pub gamma_s: f64,
    pub delta: f64,
}

impl OrientationSystem {
    pub fn new(rho: f64, gamma_s: f64, delta: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::BelowThreshold);
        }
        let id = C::new(0.0, delta);
        Ok(Self {
            matrix: Matrix2::new(C::new(0.0, 0.0), id, id, C::new(2.0 * gamma_s, 0.0)),
            noise_strength: (2.0 * gamma_s).sqrt(),
            rho,
            gamma_s,
            delta,
        })
    }

    pub fn eigenvalues(&self) -> [C; 2] {
        eigenvalues_2x2(&self.matrix)
    }

    /// Smallest decay rate (real part of the eigenvalues of `M`).
    pub fn slow_rate(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }
}

pub fn orientation_matrix(params: &OpoParams) -> Result<OrientationSystem> {
    params.validate()?;
    OrientationSystem::new(params.rho(), params.gamma_s, params.delta)
}

/// Solves `M P + P M^T = 2 gamma_s I` for the stationary second moments
/// `P = <x x^T>` (no conjugation) of the reduced system.
pub fn stationary_covariance_lyapunov(sys: &OrientationSystem) -> Result<Matrix2<C>> {
    if sys.delta == 0.0 {
        return Err(Error::NoStationaryState);
    }
    let m = &sys.matrix;
    let idx = |i: usize, j: usize| 2 * i + j;
    let mut a = Matrix4::<C>::zeros();
    let mut rhs = Vector4::<C>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let row = idx(i, j);
            for k in 0..2 {
                a[(row, idx(k, j))] += m[(i, k)];
                a[(row, idx(i, k))] += m[(j, k)];
            }
            if i == j {
                rhs[row] = C::new(sys.noise_strength * sys.noise_strength, 0.0);
            }
        }
    }
    let p = a.lu().solve(&rhs).ok_or(Error::NoStationaryState)?;
    Ok(Matrix2::new(p[0], p[1], p[2], p[3]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaVariance {
    pub value: f64,
    /// False when the value is too large for the small-angle expansion.
    pub linear_regime: bool,
}

/// Long-time orientation variance `1 / (2 rho^2 D~^2)`.
pub fn theta_variance_closed_form(rho: f64, delta_tilde: f64) -> Result<ThetaVariance> {
    if !(rho > 0.0) {
        return Err(Error::BelowThreshold);
    }
    if delta_tilde == 0.0 {
        return Err(Error::NoStationaryState);
    }
    let value = 1.0 / (2.0 * rho * rho * delta_tilde * delta_tilde);
    Ok(ThetaVariance {
        value,
        linear_regime: value < LINEAR_REGIME_LIMIT,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSeries {
    pub times: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub imag_residual: Vec<f64>,
}

/// Reads the orientation off a full trajectory through
/// `2 rho theta = a_y + a_y+`, keeping the imaginary part as a diagnostic.
pub fn estimate_theta(traj: &Trajectory, rho: f64) -> Result<ThetaSeries> {
    if !(rho > 0.0) {
        return Err(Error::BelowThreshold);
    }
    let n = traj.states.len() as f64;
    let rho_hat = (traj.states.iter().map(|s| s.ax).sum::<C>() / n).norm();
    if (rho_hat - rho).abs() > 0.1 * rho {
        return Err(Error::InvalidRegime(format!(
            "trajectory bright amplitude {rho_hat} is more than 10% away from rho = {rho}"
        )));
    }
    let scale = 1.0 / (2.0 * rho);
    let (theta_hat, imag_residual) = traj
        .states
        .iter()
        .map(|s| {
            let z = (s.ay + s.ayp) * scale;
            (z.re, z.im)
        })
        .unzip();
    Ok(ThetaSeries {
        times: (0..traj.states.len()).map(|k| traj.time(k)).collect(),
        theta_hat,
        imag_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientationConfig {
    pub dt: f64,
    pub t_end: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub sample_interval: f64,
}

impl OrientationConfig {
    fn as_sde(&self, params: &OpoParams) -> SdeConfig {
        SdeConfig {
            dt: self.dt,
            t_burn: 0.0,
            t_sample: self.t_end,
            n_traj: self.n_traj,
            seed: self.seed,
            divergence_threshold: 1e6 * params.rho().max(1.0),
            scheme: Scheme::EulerMaruyama,
            sample_interval: self.sample_interval,
            noise_substeps: 1,
        }
    }
}

/// Euler-Maruyama path of the reduced system from `x = 0`, reported as
/// `theta = Re(x1) / (2 rho)` with `Im(x1) / (2 rho)` as residual.
pub fn simulate_reduced(sys: &OrientationSystem, cfg: &OrientationConfig, traj_index: u64) -> Result<ThetaSeries> {
    let sde = SdeConfig {
        dt: cfg.dt,
        t_burn: 0.0,
        t_sample: cfg.t_end,
        n_traj: cfg.n_traj.max(1),
        seed: cfg.seed,
        divergence_threshold: f64::INFINITY,
        scheme: Scheme::EulerMaruyama,
        sample_interval: cfg.sample_interval,
        noise_substeps: 1,
    };
    sde.validate()?;
    let stride = sde.sample_stride()?;
    let steps = sde.total_steps();
    let mut noise = NoiseStream::new(cfg.seed, traj_index, cfg.dt, 1);
    let m = sys.matrix;
    let scale = 1.0 / (2.0 * sys.rho);
    let mut x = [C::new(0.0, 0.0); 2];

    let mut series = ThetaSeries {
        times: vec![0.0],
        theta_hat: vec![0.0],
        imag_residual: vec![0.0],
    };
    for step in 1..=steps {
        let dw: [f64; 2] = noise.increments();
        let d0 = m[(0, 0)] * x[0] + m[(0, 1)] * x[1];
        let d1 = m[(1, 0)] * x[0] + m[(1, 1)] * x[1];
        x[0] += -d0 * cfg.dt + sys.noise_strength * dw[0];
        x[1] += -d1 * cfg.dt + sys.noise_strength * dw[1];
        if step % stride == 0 {
            series.times.push(step as f64 * cfg.dt);
            series.theta_hat.push(x[0].re * scale);
            series.imag_residual.push(x[0].im * scale);
        }
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fidelity {
    /// The two-variable linear system.
    Reduced,
    /// Orientation read off the full nonlinear positive-P engine.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub t: f64,
    pub var_theta: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationRun {
    pub series: Vec<ThetaSeries>,
    pub rho: f64,
    /// `None` when `delta = 0`.
    pub v_theta_inf_ref: Option<f64>,
    pub n_diverged: usize,
}

/// Runs the orientation ensemble at the requested fidelity. The reduced
/// system needs only `rho`, `gamma_s` and `delta`; the full one uses all
/// of `params`.
pub fn orientation_ensemble(
    params: &OpoParams,
    rho: f64,
    cfg: &OrientationConfig,
    fidelity: Fidelity,
) -> Result<OrientationRun> {
    if cfg.n_traj == 0 {
        return Err(Error::invalid("n_traj", "ensemble needs at least one trajectory"));
    }
    let sys = OrientationSystem::new(rho, params.gamma_s, params.delta)?;
    let (series, n_diverged) = match fidelity {
        Fidelity::Reduced => {
            let series = (0..cfg.n_traj as u64)
                .into_par_iter()
                .map(|i| simulate_reduced(&sys, cfg, i))
                .collect::<Result<Vec<_>>>()?;
            (series, 0)
        }
        Fidelity::Full => {
            let run = run_ensemble(params, &cfg.as_sde(params), |traj| estimate_theta(traj, rho))?;
            (run.results, run.diverged.len())
        }
    };
    let v_theta_inf_ref = theta_variance_closed_form(rho, params.delta_tilde())
        .ok()
        .map(|v| v.value);
    Ok(OrientationRun {
        series,
        rho,
        v_theta_inf_ref,
        n_diverged,
    })
}

impl OrientationRun {
    /// Ensemble variance of the orientation at every recorded time, with the
    /// standard error of the variance estimate.
    pub fn variance_vs_time(&self) -> Vec<VarianceRow> {
        let Some(first) = self.series.first() else {
            return Vec::new();
        };
        (0..first.times.len())
            .map(|k| {
                let vals: Vec<f64> = self.series.iter().map(|s| s.theta_hat[k]).collect();
                let (mean, _) = mean_and_stderr(&vals);
                let dev2: Vec<f64> = vals.iter().map(|v| (v - mean).powi(2)).collect();
                let (var, stderr) = mean_and_stderr(&dev2);
                VarianceRow {
                    t: first.times[k],
                    var_theta: var,
                    stderr,
                }
            })
            .collect()
    }

    /// Stationary variance from time averages over `t >= t_from`, combined
    /// across trajectories.
    pub fn stationary_variance(&self, t_from: f64) -> Result<(f64, f64)> {
        let per_traj: Vec<(f64, f64)> = self
            .series
            .iter()
            .map(|s| {
                let window: Vec<f64> = s
                    .times
                    .iter()
                    .zip(&s.theta_hat)
                    .filter(|(t, _)| **t >= t_from)
                    .map(|(_, th)| *th)
                    .collect();
                let n = window.len() as f64;
                (
                    window.iter().sum::<f64>() / n,
                    window.iter().map(|v| v * v).sum::<f64>() / n,
                )
            })
            .collect();
        if per_traj.is_empty() || per_traj.iter().any(|(m, _)| !m.is_finite()) {
            return Err(Error::InsufficientData(format!(
                "no samples at t >= {t_from}"
            )));
        }
        let means: Vec<f64> = per_traj.iter().map(|p| p.0).collect();
        let squares: Vec<f64> = per_traj.iter().map(|p| p.1).collect();
        let (mean, _) = mean_and_stderr(&means);
        let (second, stderr) = mean_and_stderr(&squares);
        Ok((second - mean * mean, stderr))
    }

    /// Time-and-ensemble mean of the imaginary residual, i.e. of the gauge
    /// combination that should vanish, with its standard error.
    pub fn residual_mean(&self, t_from: f64) -> (f64, f64) {
        let per_traj: Vec<f64> = self
            .series
            .iter()
            .map(|s| {
                let w: Vec<f64> = s
                    .times
                    .iter()
                    .zip(&s.imag_residual)
                    .filter(|(t, _)| **t >= t_from)
                    .map(|(_, r)| *r)
                    .collect();
                w.iter().sum::<f64>() / w.len() as f64
            })
            .collect();
        mean_and_stderr(&per_traj)
    }
}
