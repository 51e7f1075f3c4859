//! Linearized fluctuations of the dark (TEM01) mode above threshold.
//!
//! With the pump clamped at `gamma_s / chi` the pair `(alpha_y, alpha_y+)`
//! obeys a two-dimensional linear SDE with drift matrix `L` and diffusion
//! `gamma_s * I`. Quadrature noise spectra are computed in two independent
//! ways: from the spectral covariance matrix of that SDE ("matrix route") and
//! from the rational closed form in `(delta_tilde, omega_tilde, phi)`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::OpoParams;
use crate::error::{Error, Result};

type C = Complex64;

/// Overall factor between `Re{e^{-2i phi} S11 + S12}` (in units of
/// `gamma_s`) and the squeezing spectrum. Two of the four terms of the
/// quadrature bilinear form collapse into each real part, on top of the
/// `2 gamma_s` output-coupling factor. Checked against the `delta = 0`,
/// `omega -> 0` limit in the calibration test.
pub const SPECTRAL_NORMALIZATION: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityMatrix {
    pub entries: Matrix2<C>,
    pub gamma_s: f64,
    pub delta: f64,
}

impl StabilityMatrix {
    pub fn eigenvalues(&self) -> [C; 2] {
        eigenvalues_2x2(&self.entries)
    }
}

pub(crate) fn eigenvalues_2x2(m: &Matrix2<C>) -> [C; 2] {
    let half_trace = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (half_trace * half_trace - det).sqrt();
    [half_trace + disc, half_trace - disc]
}

/// Drift matrix of `(alpha_y, alpha_y+)` linearized around the
/// above-threshold state. Independent of pump level and coupling because
/// the pump is clamped.
pub fn stability_matrix(params: &OpoParams) -> StabilityMatrix {
    let g = params.gamma_s;
    let d = params.delta;
    StabilityMatrix {
        entries: Matrix2::new(
            C::new(-g, -d),
            C::new(g, 0.0),
            C::new(g, 0.0),
            C::new(-g, d),
        ),
        gamma_s: g,
        delta: d,
    }
}

/// `gamma_s (L + i omega)^-1 (L^T - i omega)^-1`.
pub fn spectral_covariance(mat: &StabilityMatrix, omega: f64) -> Result<Matrix2<C>> {
    let iw = Matrix2::from_diagonal_element(C::new(0.0, omega));
    let forward = mat.entries + iw;
    let backward = mat.entries.transpose() - iw;
    let scale = mat.gamma_s.max(mat.delta.abs()).max(omega.abs());
    let singular = || {
        Error::Singularity(format!(
            "L + i omega is not invertible at delta = {}, omega = {omega}",
            mat.delta
        ))
    };
    if forward.determinant().norm() <= 1e-14 * scale * scale {
        return Err(singular());
    }
    let inv_f = forward.try_inverse().ok_or_else(singular)?;
    let inv_b = backward.try_inverse().ok_or_else(singular)?;
    Ok(inv_f * inv_b * C::new(mat.gamma_s, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumMethod {
    MatrixRoute,
    ClosedForm,
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub omega_tilde: f64,
    pub phi: f64,
    pub value: f64,
    pub method: SpectrumMethod,
}

/// Output noise spectrum `V = 1 + S` of the TEM01 quadrature at angle `phi`
/// and noise frequency `omega_tilde * gamma_s`, via the spectral covariance.
pub fn noise_spectrum_matrix(params: &OpoParams, omega_tilde: f64, phi: f64) -> Result<SpectrumPoint> {
    let mat = stability_matrix(params);
    let s = spectral_covariance(&mat, omega_tilde * params.gamma_s)?;
    let rotated = C::from_polar(1.0, -2.0 * phi) * s[(0, 0)] + s[(0, 1)];
    Ok(SpectrumPoint {
        omega_tilde,
        phi,
        value: 1.0 + SPECTRAL_NORMALIZATION * params.gamma_s * rotated.re,
        method: SpectrumMethod::MatrixRoute,
    })
}

/// Rational closed form of the TEM01 noise spectrum.
///
/// At `delta_tilde = omega_tilde = 0` the value is finite only for the
/// `cos(phi) = 0` quadrature, where the limit along `delta_tilde = 0` is 0.
pub fn noise_spectrum_closed_form(delta_tilde: f64, omega_tilde: f64, phi: f64) -> Result<SpectrumPoint> {
    let d2 = delta_tilde * delta_tilde;
    let w2 = omega_tilde * omega_tilde;
    let cos2 = phi.cos().powi(2);
    let value = if d2 == 0.0 && w2 == 0.0 {
        if cos2 > 1e-24 {
            return Err(Error::Singularity(format!(
                "closed-form spectrum diverges at delta = omega = 0 for phi = {phi}"
            )));
        }
        0.0
    } else {
        let den = 4.0 * w2 + (d2 - w2).powi(2);
        1.0 + (4.0 * (d2 - w2) + 8.0 * (2.0 - d2 + w2) * cos2) / den
    };
    Ok(SpectrumPoint {
        omega_tilde,
        phi,
        value,
        method: SpectrumMethod::ClosedForm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumSqueezing {
    pub omega_opt_tilde: f64,
    pub v_opt: f64,
}

/// Best detection frequency of the `phi = pi/2` quadrature and the noise
/// level reached there.
pub fn optimum_squeezing(delta_tilde: f64) -> OptimumSqueezing {
    let d = delta_tilde.abs();
    OptimumSqueezing {
        omega_opt_tilde: (d * d + 2.0 * d).sqrt(),
        v_opt: d / (1.0 + d),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub omega_tilde: f64,
    pub phi_rad: f64,
    pub v_matrix: f64,
    pub v_closed: f64,
}

/// Evaluates both routes on the cartesian product of the frequency range and
/// the quadrature list. Exact singular points are rejected, not skipped.
pub fn spectrum_grid(
    params: &OpoParams,
    omega_range: (f64, f64, usize),
    phi_list: &[f64],
) -> Result<Vec<SpectrumRow>> {
    let omegas = crate::geometry::linspace(omega_range);
    if omegas.is_empty() || phi_list.is_empty() {
        return Err(Error::invalid("grid", "spectrum grid must be non-empty"));
    }
    let dt = params.delta_tilde();
    let mut rows = Vec::with_capacity(omegas.len() * phi_list.len());
    for &phi in phi_list {
        for &w in &omegas {
            rows.push(SpectrumRow {
                omega_tilde: w,
                phi_rad: phi,
                v_matrix: noise_spectrum_matrix(params, w, phi)?.value,
                v_closed: noise_spectrum_closed_form(dt, w, phi)?.value,
            });
        }
    }
    Ok(rows)
}
