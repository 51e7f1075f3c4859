//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a flat `Float64Array` of fixed-width rows so the page
//! can plot it without any JSON handling. The plain functions below the
//! bindings do the work and are what the native tests exercise.

use opo_core::geometry::{anisotropy_tolerance, detuning_sweep};
use opo_core::orientation::{orientation_ensemble, Fidelity, OrientationConfig};
use opo_core::spectra::{noise_spectrum_closed_form, noise_spectrum_matrix, optimum_squeezing};
use opo_core::{CavityGeometry, OpoParams};
use wasm_bindgen::prelude::*;

/// Rows of `(omega_tilde, V_matrix, V_closed)` on `(0, omega_max]`.
#[wasm_bindgen]
pub fn noise_spectrum(delta_tilde: f64, phi: f64, omega_max: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    spectrum_rows(delta_tilde, phi, omega_max, steps).map_err(|e| JsError::new(&e))
}

/// `[omega_opt_tilde, V_opt]` of the phi = pi/2 quadrature.
#[wasm_bindgen]
pub fn optimum(delta_tilde: f64) -> Vec<f64> {
    let o = optimum_squeezing(delta_tilde);
    vec![o.omega_opt_tilde, o.v_opt]
}

/// Rows of `(beta_rad, epsilon, exact, approx)`: a tilt sweep up to
/// `beta_max_deg` followed by an ellipticity sweep up to `epsilon_max`,
/// for the standard near-confocal cavity with transmissivity `t`.
#[wasm_bindgen]
pub fn detuning_curves(beta_max_deg: f64, epsilon_max: f64, t: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    detuning_rows(beta_max_deg, epsilon_max, t, steps).map_err(|e| JsError::new(&e))
}

/// `[delta_tilde_max, beta_max_rad, epsilon_max]` for a target optimum noise.
#[wasm_bindgen]
pub fn tolerance(target_v: f64, t: f64) -> Result<Vec<f64>, JsError> {
    tolerance_limits(target_v, t).map_err(|e| JsError::new(&e))
}

/// Rows of `(t, var_theta, stderr, v_theta_inf_ref)` from the reduced
/// orientation system.
#[wasm_bindgen]
pub fn orientation_variance(rho2: f64, delta_tilde: f64, n_traj: usize, t_end: f64, seed: u64) -> Result<Vec<f64>, JsError> {
    orientation_rows(rho2, delta_tilde, n_traj, t_end, seed).map_err(|e| JsError::new(&e))
}

pub fn spectrum_rows(delta_tilde: f64, phi: f64, omega_max: f64, steps: usize) -> Result<Vec<f64>, String> {
    if !(omega_max > 0.0) || steps == 0 {
        return Err("need omega_max > 0 and at least one step".into());
    }
    let params = OpoParams::dimensionless(1.5, delta_tilde, 1.0, 1e-3);
    let mut out = Vec::with_capacity(3 * steps);
    for k in 1..=steps {
        let w = omega_max * k as f64 / steps as f64;
        let vm = noise_spectrum_matrix(&params, w, phi).map_err(|e| e.to_string())?;
        let vc = noise_spectrum_closed_form(delta_tilde, w, phi).map_err(|e| e.to_string())?;
        out.extend([w, vm.value, vc.value]);
    }
    Ok(out)
}

fn cavity(t: f64) -> CavityGeometry {
    CavityGeometry {
        transmissivity: t,
        ..CavityGeometry::standard()
    }
}

pub fn detuning_rows(beta_max_deg: f64, epsilon_max: f64, t: f64, steps: usize) -> Result<Vec<f64>, String> {
    let rows = detuning_sweep(
        &cavity(t),
        (0.0, beta_max_deg.to_radians(), steps),
        (0.0, epsilon_max, steps),
    )
    .map_err(|e| e.to_string())?;
    Ok(rows
        .iter()
        .flat_map(|r| [r.beta_rad, r.epsilon, r.delta_over_gammas_exact, r.delta_over_gammas_approx])
        .collect())
}

pub fn tolerance_limits(target_v: f64, t: f64) -> Result<Vec<f64>, String> {
    let lim = anisotropy_tolerance(&cavity(t), target_v).map_err(|e| e.to_string())?;
    Ok(vec![lim.delta_tilde_max, lim.beta_max, lim.epsilon_max])
}

pub fn orientation_rows(rho2: f64, delta_tilde: f64, n_traj: usize, t_end: f64, seed: u64) -> Result<Vec<f64>, String> {
    if !(rho2 > 0.0) {
        return Err("rho2 must be > 0".into());
    }
    // sigma = 1.5, gamma_p = gamma_s; chi chosen so the bright amplitude is sqrt(rho2)
    let chi_tilde = (2.0 * 0.5 / rho2).sqrt();
    let params = OpoParams::dimensionless(1.5, delta_tilde, 1.0, chi_tilde);
    let cfg = OrientationConfig {
        dt: 5e-3,
        t_end,
        n_traj,
        seed,
        sample_interval: (t_end / 200.0 / 5e-3).round().max(1.0) * 5e-3,
    };
    let run = orientation_ensemble(&params, rho2.sqrt(), &cfg, Fidelity::Reduced).map_err(|e| e.to_string())?;
    let reference = run.v_theta_inf_ref.unwrap_or(f64::NAN);
    Ok(run
        .variance_vs_time()
        .iter()
        .flat_map(|r| [r.t, r.var_theta, r.stderr, reference])
        .collect())
}
