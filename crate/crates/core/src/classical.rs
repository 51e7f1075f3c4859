//! Mean-field (noise-free) dynamics: thresholds, the stationary solutions and
//! a fixed-step RK4 integrator used to check which solution the system picks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::PhaseSpaceState;

/// Dynamical parameters of the oscillator.
///
/// `gamma_p`/`gamma_s` are the pump and signal decay rates, `chi` the
/// nonlinear coupling, `pump` the (real) external driving and `delta` the
/// TEM01 detuning. Most of the toolkit works in units where `gamma_s = 1`;
/// see [`OpoParams::dimensionless`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpoParams {
    pub gamma_p: f64,
    pub gamma_s: f64,
    pub chi: f64,
    pub pump: f64,
    pub delta: f64,
}

impl OpoParams {
    /// Parameters in signal-decay units: `sigma` is the pump relative to the
    /// TEM10 threshold, `gamma_p_tilde = gamma_p / gamma_s`,
    /// `chi_tilde = chi / gamma_s`.
    pub fn dimensionless(sigma: f64, delta_tilde: f64, gamma_p_tilde: f64, chi_tilde: f64) -> Self {
        Self {
            gamma_p: gamma_p_tilde,
            gamma_s: 1.0,
            chi: chi_tilde,
            pump: sigma * gamma_p_tilde / chi_tilde,
            delta: delta_tilde,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &'static str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be finite and > 0"))
            }
        };
        positive(self.gamma_p, "gamma_p")?;
        positive(self.gamma_s, "gamma_s")?;
        positive(self.chi, "chi")?;
        if !(self.pump >= 0.0 && self.pump.is_finite()) {
            return Err(Error::invalid("pump", "must be finite and >= 0"));
        }
        if !self.delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        Ok(())
    }

    pub fn delta_tilde(&self) -> f64 {
        self.delta / self.gamma_s
    }

    /// Pump normalized to the TEM10 threshold.
    pub fn sigma(&self) -> f64 {
        self.pump / thresholds(self).x
    }

    /// Squared bright-mode amplitude, zero below threshold.
    pub fn rho_squared(&self) -> f64 {
        (2.0 * (self.pump - thresholds(self).x) / self.chi).max(0.0)
    }

    pub fn rho(&self) -> f64 {
        self.rho_squared().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Resonant TEM10 threshold `gamma_p gamma_s / chi`.
    pub x: f64,
    /// Detuned TEM01 threshold, larger by `sqrt(1 + (delta/gamma_s)^2)`.
    pub y: f64,
}

pub fn thresholds(params: &OpoParams) -> Thresholds {
    let x = params.gamma_p * params.gamma_s / params.chi;
    let dt = params.delta / params.gamma_s;
    Thresholds {
        x,
        y: (1.0 + dt * dt).sqrt() * x,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    BelowThreshold,
    AboveThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub alpha0: Complex64,
    pub alphax: Complex64,
    pub alphay: Complex64,
    pub branch: Branch,
    pub rho: f64,
}

impl SteadyState {
    pub fn to_state(&self) -> PhaseSpaceState {
        PhaseSpaceState::classical(self.alpha0, self.alphax, self.alphay)
    }
}

/// The stable stationary solution. Exactly at threshold the solution is
/// labelled below threshold; above it the bright amplitude is reported with
/// the positive sign.
pub fn steady_state(params: &OpoParams) -> SteadyState {
    let th = thresholds(params);
    if params.pump <= th.x {
        return SteadyState {
            alpha0: Complex64::new(params.pump / params.gamma_p, 0.0),
            alphax: Complex64::new(0.0, 0.0),
            alphay: Complex64::new(0.0, 0.0),
            branch: Branch::BelowThreshold,
            rho: 0.0,
        };
    }
    let rho = params.rho();
    SteadyState {
        alpha0: Complex64::new(params.gamma_s / params.chi, 0.0),
        alphax: Complex64::new(rho, 0.0),
        alphay: Complex64::new(0.0, 0.0),
        branch: Branch::AboveThreshold,
        rho,
    }
}

type Modes = [Complex64; 3];

/// Noise-free right-hand side with partners replaced by conjugates.
pub fn classical_rhs(params: &OpoParams, [a0, ax, ay]: Modes) -> Modes {
    let chi = params.chi;
    let detuned = Complex64::new(params.gamma_s, params.delta);
    [
        params.pump - params.gamma_p * a0 - 0.5 * chi * (ax * ax + ay * ay),
        -params.gamma_s * ax + chi * a0 * ax.conj(),
        -detuned * ay + chi * a0 * ay.conj(),
    ]
}

/// Largest right-hand-side magnitude at the steady state, relative to the
/// size of the individual terms that cancel in each equation.
pub fn fixed_point_residual(params: &OpoParams, ss: &SteadyState) -> f64 {
    let [a0, ax, ay] = [ss.alpha0, ss.alphax, ss.alphay];
    let rhs = classical_rhs(params, [a0, ax, ay]);
    let chi = params.chi;
    let scales = [
        params.pump + params.gamma_p * a0.norm() + 0.5 * chi * (ax.norm_sqr() + ay.norm_sqr()),
        params.gamma_s * ax.norm() + chi * a0.norm() * ax.norm(),
        params.gamma_s.hypot(params.delta) * ay.norm() + chi * a0.norm() * ay.norm(),
    ];
    rhs.iter()
        .zip(scales)
        .map(|(r, s)| if s > 0.0 { r.norm() / s } else { r.norm() })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseSpaceState>,
}

impl ClassicalTrajectory {
    pub fn last(&self) -> &PhaseSpaceState {
        self.states.last().expect("trajectory always holds the initial state")
    }
}

const DIVERGENCE_FACTOR: f64 = 1e6;

/// RK4 integration of the mean-field equations from `init` (its partner
/// amplitudes are ignored; the classical limit uses conjugates). Requires
/// `dt * gamma_s <= 1e-2`.
pub fn integrate_classical(
    params: &OpoParams,
    init: &PhaseSpaceState,
    t_end: f64,
    dt: f64,
) -> Result<ClassicalTrajectory> {
    params.validate()?;
    if !(dt > 0.0 && dt * params.gamma_s <= 1e-2) {
        return Err(Error::invalid("dt", "need 0 < dt * gamma_s <= 1e-2"));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) || !init.is_finite() {
        return Err(Error::invalid("init", "initial state and t_end must be finite"));
    }
    let ss = steady_state(params);
    let scale = ss.rho.max(ss.alpha0.norm()).max(1.0);
    let bound = DIVERGENCE_FACTOR * scale;

    let steps = (t_end / dt).round() as usize;
    let mut y: Modes = [init.a0, init.ax, init.ay];
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(PhaseSpaceState::classical(y[0], y[1], y[2]));

    let axpy = |y: &Modes, k: &Modes, h: f64| -> Modes { [y[0] + k[0] * h, y[1] + k[1] * h, y[2] + k[2] * h] };
    for step in 1..=steps {
        let k1 = classical_rhs(params, y);
        let k2 = classical_rhs(params, axpy(&y, &k1, 0.5 * dt));
        let k3 = classical_rhs(params, axpy(&y, &k2, 0.5 * dt));
        let k4 = classical_rhs(params, axpy(&y, &k3, dt));
        for i in 0..3 {
            y[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }
        let t = step as f64 * dt;
        let state = PhaseSpaceState::classical(y[0], y[1], y[2]);
        let magnitude = state.max_norm();
        if !state.is_finite() || magnitude > bound {
            return Err(Error::Divergence { time: t, magnitude });
        }
        times.push(t);
        states.push(state);
    }
    Ok(ClassicalTrajectory { times, states })
}
