//! Positive-P Langevin integration of the full nonlinear three-mode model and
//! ensemble spectral estimation.
//!
//! Every trajectory owns a ChaCha8 stream selected by its index, so results
//! depend only on `(params, cfg)` and never on how trajectories are spread
//! over worker threads.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{steady_state, OpoParams};
use crate::error::{Error, Result};
use crate::psd::{WelchConfig, WelchEstimator};
use crate::spectra::noise_spectrum_closed_form;
use crate::state::PhaseSpaceState;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    EulerMaruyama,
    SemiImplicitMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub dt: f64,
    pub t_burn: f64,
    pub t_sample: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Any amplitude magnitude above this marks the trajectory as diverged.
    pub divergence_threshold: f64,
    pub scheme: Scheme,
    /// Spacing of recorded states; must be a multiple of `dt`.
    pub sample_interval: f64,
    /// Each step's Wiener increment is built from this many unit normals, so
    /// that a run at `dt` and one at `dt / k` with `k` times fewer substeps
    /// see the same Brownian path.
    pub noise_substeps: u32,
}

impl SdeConfig {
    /// Defaults in signal-decay units with the divergence guard at
    /// `10^6 max(rho, 1)`.
    pub fn new(params: &OpoParams, n_traj: usize, seed: u64) -> Self {
        Self {
            dt: 1e-3,
            t_burn: 250.0,
            t_sample: 400.0,
            n_traj,
            seed,
            divergence_threshold: 1e6 * params.rho().max(1.0),
            scheme: Scheme::EulerMaruyama,
            sample_interval: 0.05,
            noise_substeps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be > 0"));
        }
        if !(self.t_burn >= 0.0 && self.t_sample > 0.0) {
            return Err(Error::invalid("t_sample", "need t_burn >= 0 and t_sample > 0"));
        }
        if self.n_traj == 0 {
            return Err(Error::invalid("n_traj", "ensemble needs at least one trajectory"));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::invalid("divergence_threshold", "must be > 0"));
        }
        if self.noise_substeps == 0 {
            return Err(Error::invalid("noise_substeps", "must be >= 1"));
        }
        self.sample_stride()?;
        Ok(())
    }

    pub(crate) fn sample_stride(&self) -> Result<usize> {
        let ratio = self.sample_interval / self.dt;
        let stride = ratio.round();
        if stride < 1.0 || (ratio - stride).abs() > 1e-9 * ratio {
            return Err(Error::invalid(
                "sample_interval",
                "must be a positive integer multiple of dt",
            ));
        }
        Ok(stride as usize)
    }

    pub fn total_steps(&self) -> usize {
        ((self.t_burn + self.t_sample) / self.dt).round() as usize
    }

    /// Index of the first recorded sample inside the sampling window.
    pub fn first_sample_index(&self) -> usize {
        (self.t_burn / self.sample_interval).round() as usize
    }

    /// Advisory messages about numerically questionable settings.
    pub fn warnings(&self, params: &OpoParams) -> Vec<String> {
        let mut out = Vec::new();
        if self.dt * params.gamma_s > 1e-3 {
            out.push(format!(
                "dt * gamma_s = {} exceeds the recommended 1e-3",
                self.dt * params.gamma_s
            ));
        }
        out
    }
}

/// Multiplicative noise coefficients of the four signal amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseAmplitudes {
    pub x: C,
    pub xp: C,
    pub y: C,
    pub yp: C,
}

/// Drift vector and noise coefficients of the positive-P equations. The pump
/// amplitudes carry no noise; the square roots use the principal branch.
pub fn drift_and_noise(state: &PhaseSpaceState, params: &OpoParams) -> (PhaseSpaceState, NoiseAmplitudes) {
    let PhaseSpaceState {
        a0,
        a0p,
        ax,
        axp,
        ay,
        ayp,
    } = *state;
    let chi = params.chi;
    let gs = params.gamma_s;
    let detuned = C::new(gs, params.delta);
    let drift = PhaseSpaceState {
        a0: params.pump - params.gamma_p * a0 - 0.5 * chi * (ax * ax + ay * ay),
        a0p: params.pump - params.gamma_p * a0p - 0.5 * chi * (axp * axp + ayp * ayp),
        ax: -gs * ax + chi * a0 * axp,
        axp: -gs * axp + chi * a0p * ax,
        ay: -detuned * ay + chi * a0 * ayp,
        ayp: -detuned.conj() * ayp + chi * a0p * ay,
    };
    let n = (chi * a0).sqrt();
    let np = (chi * a0p).sqrt();
    (
        drift,
        NoiseAmplitudes {
            x: n,
            xp: np,
            y: n,
            yp: np,
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub traj_index: u64,
    pub sample_interval: f64,
    /// `states[k]` is the state at `t = k * sample_interval`, starting at 0.
    pub states: Vec<PhaseSpaceState>,
    /// Steps on which a pump amplitude sat in the left half-plane, i.e. on
    /// the side of the square-root branch cut.
    pub branch_cut_events: u64,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.sample_interval
    }
}

/// Per-trajectory Wiener increments, four real channels (x, x+, y, y+).
pub(crate) struct NoiseStream {
    rng: ChaCha8Rng,
    substeps: u32,
    scale: f64,
}

impl NoiseStream {
    pub(crate) fn new(seed: u64, traj_index: u64, dt: f64, substeps: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(traj_index);
        Self {
            rng,
            substeps,
            scale: (dt / f64::from(substeps)).sqrt(),
        }
    }

    pub(crate) fn increments<const N: usize>(&mut self) -> [f64; N] {
        let mut dw = [0.0; N];
        for _ in 0..self.substeps {
            for slot in dw.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                *slot += z;
            }
        }
        dw.map(|v| v * self.scale)
    }
}

fn apply_noise(state: &mut PhaseSpaceState, n: &NoiseAmplitudes, dw: &[f64; 4]) {
    state.ax += n.x * dw[0];
    state.axp += n.xp * dw[1];
    state.ay += n.y * dw[2];
    state.ayp += n.yp * dw[3];
}

/// Integrates one trajectory (Ito) from the positive-branch classical steady
/// state, recording every `sample_interval`.
pub fn integrate_trajectory(params: &OpoParams, cfg: &SdeConfig, traj_index: u64) -> Result<Trajectory> {
    params.validate()?;
    cfg.validate()?;
    let stride = cfg.sample_stride()?;
    let steps = cfg.total_steps();
    let dt = cfg.dt;
    let bound2 = cfg.divergence_threshold * cfg.divergence_threshold;

    let mut noise = NoiseStream::new(cfg.seed, traj_index, dt, cfg.noise_substeps);
    let mut x = steady_state(params).to_state();
    let mut states = Vec::with_capacity(steps / stride + 1);
    states.push(x);
    let mut branch_cut_events = 0;

    for step in 1..=steps {
        let dw: [f64; 4] = noise.increments();
        match cfg.scheme {
            Scheme::EulerMaruyama => {
                let (drift, amp) = drift_and_noise(&x, params);
                x = x + drift * dt;
                apply_noise(&mut x, &amp, &dw);
            }
            Scheme::SemiImplicitMidpoint => {
                let start = x;
                let mut mid = x;
                for _ in 0..3 {
                    let (drift, amp) = drift_and_noise(&mid, params);
                    mid = start + drift * (0.5 * dt);
                    let half = dw.map(|w| 0.5 * w);
                    apply_noise(&mut mid, &amp, &half);
                }
                x = mid * 2.0 + start * -1.0;
            }
        }
        if x.a0.re < 0.0 || x.a0p.re < 0.0 {
            branch_cut_events += 1;
        }
        let size2 = x.components().iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        if !(size2 <= bound2) {
            return Err(Error::TrajectoryDiverged {
                traj_index,
                time: step as f64 * dt,
            });
        }
        if step % stride == 0 {
            states.push(x);
        }
    }
    Ok(Trajectory {
        traj_index,
        sample_interval: cfg.sample_interval,
        states,
        branch_cut_events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRecord {
    pub traj_index: u64,
    pub time: f64,
}

/// Per-trajectory reductions of an ensemble, in trajectory-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun<T> {
    pub results: Vec<T>,
    pub n_traj: usize,
    pub diverged: Vec<DivergenceRecord>,
    pub branch_cut_events: u64,
}

/// Runs `cfg.n_traj` trajectories on the current rayon pool and reduces each
/// with `reduce` as soon as it finishes. Diverged trajectories are dropped
/// and logged; more than 1% of them fails the run.
pub fn run_ensemble<T, F>(params: &OpoParams, cfg: &SdeConfig, reduce: F) -> Result<EnsembleRun<T>>
where
    T: Send,
    F: Fn(&Trajectory) -> Result<T> + Sync,
{
    params.validate()?;
    cfg.validate()?;
    let outcomes: Vec<Result<(T, u64)>> = (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let traj = integrate_trajectory(params, cfg, i)?;
            Ok((reduce(&traj)?, traj.branch_cut_events))
        })
        .collect();

    let mut results = Vec::with_capacity(cfg.n_traj);
    let mut diverged = Vec::new();
    let mut branch_cut_events = 0;
    for outcome in outcomes {
        match outcome {
            Ok((r, events)) => {
                results.push(r);
                branch_cut_events += events;
            }
            Err(Error::TrajectoryDiverged { traj_index, time }) => {
                diverged.push(DivergenceRecord { traj_index, time })
            }
            Err(e) => return Err(e),
        }
    }
    if diverged.len() * 100 > cfg.n_traj {
        return Err(Error::DivergenceBudget {
            diverged: diverged.len(),
            total: cfg.n_traj,
        });
    }
    Ok(EnsembleRun {
        results,
        n_traj: cfg.n_traj,
        diverged,
        branch_cut_events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    X,
    Y,
}

/// Stochastic quadrature `e^{-i phi} a + e^{i phi} a+` of one signal mode.
pub fn quadrature(state: &PhaseSpaceState, mode: Mode, phi: f64) -> C {
    let (a, ap) = match mode {
        Mode::X => (state.ax, state.axp),
        Mode::Y => (state.ay, state.ayp),
    };
    C::from_polar(1.0, -phi) * a + C::from_polar(1.0, phi) * ap
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRequest {
    pub mode: Mode,
    pub phis: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Segment length in time units; `None` selects `t_sample / 5`, the
    /// longest length that still gives 8 half-overlapping segments.
    pub segment_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedSpectrumRow {
    pub omega_tilde: f64,
    pub phi_rad: f64,
    pub v_hat: f64,
    pub v_stderr: f64,
    pub v_imag_abs: f64,
    /// Closed-form reference (TEM01 only); NaN where it does not apply.
    pub v_closed_ref: f64,
}

/// Ensemble mean of a complex amplitude with per-component standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: C,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub spectra: Vec<SimulatedSpectrumRow>,
    pub n_traj: usize,
    pub n_diverged: usize,
    pub diverged: Vec<DivergenceRecord>,
    pub branch_cut_events: u64,
    /// Time-and-ensemble means over the sampling window.
    pub mean_ax: MeanEstimate,
    pub mean_ay: MeanEstimate,
    pub warnings: Vec<String>,
}

struct TrajectorySpectra {
    /// `[phi][omega]` estimates of `V`.
    v: Vec<Vec<C>>,
    mean_ax: C,
    mean_ay: C,
}

/// Simulates the ensemble and estimates `V = 1 + 2 gamma_s S(omega)` for each
/// requested quadrature, with errors from the scatter across trajectories.
pub fn estimate_noise_spectrum(
    params: &OpoParams,
    cfg: &SdeConfig,
    request: &SpectrumRequest,
) -> Result<EnsembleResult> {
    cfg.validate()?;
    if request.phis.is_empty() || request.omegas.is_empty() {
        return Err(Error::invalid("grid", "need at least one phi and one omega"));
    }
    let segment_time = request.segment_time.unwrap_or(cfg.t_sample / 5.0);
    let segment_len = (segment_time / cfg.sample_interval).round() as usize;
    let welch = WelchConfig::hann_half_overlap(segment_len);
    let omegas: Vec<f64> = request.omegas.iter().map(|w| w * params.gamma_s).collect();
    let estimator = WelchEstimator::new(welch, cfg.sample_interval, &omegas)?;
    let first = cfg.first_sample_index();

    let run = run_ensemble(params, cfg, |traj| {
        let window = &traj.states[first.min(traj.states.len())..];
        let v = request
            .phis
            .iter()
            .map(|&phi| {
                let series: Vec<C> = window.iter().map(|s| quadrature(s, request.mode, phi)).collect();
                let s = estimator.estimate(&series)?;
                Ok(s.into_iter().map(|z| 1.0 + 2.0 * params.gamma_s * z).collect())
            })
            .collect::<Result<Vec<Vec<C>>>>()?;
        let n = window.len() as f64;
        Ok(TrajectorySpectra {
            v,
            mean_ax: window.iter().map(|s| s.ax).sum::<C>() / n,
            mean_ay: window.iter().map(|s| s.ay).sum::<C>() / n,
        })
    })?;

    let mut spectra = Vec::with_capacity(request.phis.len() * request.omegas.len());
    for (p, &phi) in request.phis.iter().enumerate() {
        for (k, &w) in request.omegas.iter().enumerate() {
            let samples: Vec<C> = run.results.iter().map(|r| r.v[p][k]).collect();
            let est = mean_estimate(&samples);
            let v_closed_ref = match request.mode {
                Mode::Y => noise_spectrum_closed_form(params.delta_tilde(), w, phi)
                    .map(|pt| pt.value)
                    .unwrap_or(f64::NAN),
                Mode::X => f64::NAN,
            };
            spectra.push(SimulatedSpectrumRow {
                omega_tilde: w,
                phi_rad: phi,
                v_hat: est.mean.re,
                v_stderr: est.stderr_re,
                v_imag_abs: est.mean.im.abs(),
                v_closed_ref,
            });
        }
    }
    let ax: Vec<C> = run.results.iter().map(|r| r.mean_ax).collect();
    let ay: Vec<C> = run.results.iter().map(|r| r.mean_ay).collect();
    Ok(EnsembleResult {
        spectra,
        n_traj: run.n_traj,
        n_diverged: run.diverged.len(),
        diverged: run.diverged,
        branch_cut_events: run.branch_cut_events,
        mean_ax: mean_estimate(&ax),
        mean_ay: mean_estimate(&ay),
        warnings: cfg.warnings(params),
    })
}

/// Neumaier-compensated sum.
/// Minimum of a simulated spectrum from an inverse-variance weighted
/// quadratic fit over the lowest grid point and up to three neighbours on
/// each side. Returns `(omega_tilde, v)`; falls back to the lowest point
/// when the fit is not convex.
pub fn fitted_minimum(rows: &[SimulatedSpectrumRow]) -> Option<(f64, f64)> {
    let (k, best) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.v_hat.total_cmp(&b.1.v_hat))?;
    let lo = k.saturating_sub(3);
    let hi = (k + 4).min(rows.len());
    let window = &rows[lo..hi];
    if window.len() < 3 {
        return Some((best.omega_tilde, best.v_hat));
    }
    // normal equations for v = a + b u + c u^2, u centred on the lowest point
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for r in window {
        let w = if r.v_stderr > 0.0 { r.v_stderr.powi(-2) } else { 1.0 };
        let u = r.omega_tilde - best.omega_tilde;
        let basis = Vector3::new(1.0, u, u * u);
        ata += basis * basis.transpose() * w;
        atb += basis * (w * r.v_hat);
    }
    match ata.lu().solve(&atb) {
        Some(c) if c[2] > 0.0 => {
            let u = -c[1] / (2.0 * c[2]);
            let (first, last) = (window[0].omega_tilde, window[window.len() - 1].omega_tilde);
            let w = best.omega_tilde + u;
            if w < first || w > last {
                return Some((best.omega_tilde, best.v_hat));
            }
            Some((w, c[0] + c[1] * u + c[2] * u * u))
        }
        _ => Some((best.omega_tilde, best.v_hat)),
    }
}

pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sample mean and standard error of real values; the error is 0 for fewer
/// than two samples.
pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub(crate) fn mean_estimate(values: &[C]) -> MeanEstimate {
    let re: Vec<f64> = values.iter().map(|z| z.re).collect();
    let im: Vec<f64> = values.iter().map(|z| z.im).collect();
    let (mr, sr) = mean_and_stderr(&re);
    let (mi, si) = mean_and_stderr(&im);
    MeanEstimate {
        mean: C::new(mr, mi),
        stderr_re: sr,
        stderr_im: si,
    }
}
