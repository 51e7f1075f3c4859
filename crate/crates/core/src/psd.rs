//! Segment-averaged (Welch) estimate of the two-sided spectrum
//! `S(omega) = int dtau e^{-i omega tau} <dX(0) dX(tau)>` of a sampled,
//! possibly complex-valued series.
//!
//! The estimator pairs `Y(omega)` with `Y(-omega)` instead of `conj(Y(omega))`
//! so that for positive-P series (where `X` is complex only through the
//! phase-space doubling) the expectation is the normally-ordered correlation
//! spectrum rather than a power spectrum of `|X|`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|k| (PI * k as f64 / (n - 1) as f64).sin().powi(2))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    /// Segment length in samples.
    pub segment_len: usize,
    /// Offset between consecutive segment starts, in samples.
    pub hop: usize,
    pub window: Window,
    pub min_segments: usize,
}

impl WelchConfig {
    /// Hann segments with 50% overlap.
    pub fn hann_half_overlap(segment_len: usize) -> Self {
        Self {
            segment_len,
            hop: (segment_len / 2).max(1),
            window: Window::Hann,
            min_segments: 8,
        }
    }

    pub fn segment_count(&self, n_samples: usize) -> usize {
        if n_samples < self.segment_len || self.segment_len == 0 {
            0
        } else {
            (n_samples - self.segment_len) / self.hop + 1
        }
    }
}

/// Precomputed window and per-frequency rotation factors for a fixed
/// sampling interval.
#[derive(Debug, Clone)]
pub struct WelchEstimator {
    cfg: WelchConfig,
    dt: f64,
    weights: Vec<f64>,
    norm: f64,
    rotations: Vec<Complex64>,
}

impl WelchEstimator {
    pub fn new(cfg: WelchConfig, dt: f64, omegas: &[f64]) -> Result<Self> {
        if cfg.segment_len < 2 || cfg.hop == 0 {
            return Err(Error::invalid("segment", "segments need >= 2 samples and a hop >= 1"));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("sample_interval", "must be > 0"));
        }
        let weights = cfg.window.weights(cfg.segment_len);
        let norm = weights.iter().map(|w| w * w).sum::<f64>() * dt;
        let rotations = omegas.iter().map(|&w| Complex64::from_polar(1.0, -w * dt)).collect();
        Ok(Self {
            cfg,
            dt,
            weights,
            norm,
            rotations,
        })
    }

    /// Averaged two-sided spectrum of `series` (mean removed) at each
    /// configured frequency.
    pub fn estimate(&self, series: &[Complex64]) -> Result<Vec<Complex64>> {
        let n_seg = self.cfg.segment_count(series.len());
        if n_seg < self.cfg.min_segments {
            return Err(Error::InsufficientData(format!(
                "{n_seg} segments of {} samples available, need {}",
                self.cfg.segment_len, self.cfg.min_segments
            )));
        }
        let mean = series.iter().sum::<Complex64>() / series.len() as f64;
        let mut acc = vec![Complex64::new(0.0, 0.0); self.rotations.len()];
        let mut tapered = vec![Complex64::new(0.0, 0.0); self.cfg.segment_len];
        for s in 0..n_seg {
            let seg = &series[s * self.cfg.hop..s * self.cfg.hop + self.cfg.segment_len];
            for ((t, x), w) in tapered.iter_mut().zip(seg).zip(&self.weights) {
                *t = (x - mean) * w;
            }
            for (slot, rot) in acc.iter_mut().zip(&self.rotations) {
                let mut phase = Complex64::new(1.0, 0.0);
                let mut fwd = Complex64::new(0.0, 0.0);
                let mut bwd = Complex64::new(0.0, 0.0);
                for x in &tapered {
                    fwd += x * phase;
                    bwd += x * phase.conj();
                    phase *= rot;
                }
                *slot += fwd * bwd * (self.dt * self.dt / self.norm);
            }
        }
        Ok(acc.into_iter().map(|z| z / n_seg as f64).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Exact spectrum of the AR(1) sequence x[n+1] = a x[n] + e[n],
    /// Var(e) = 1, sampled at interval dt: dt / |1 - a e^{-i w dt}|^2.
    fn ar1_spectrum(a: f64, w: f64, dt: f64) -> f64 {
        dt / (1.0 - 2.0 * a * (w * dt).cos() + a * a)
    }

    #[test]
    fn recovers_ar1_spectrum() {
        let a = 0.9;
        let dt = 0.1;
        let omegas = [0.5, 2.0, 5.0, 12.0];
        let est = WelchEstimator::new(WelchConfig::hann_half_overlap(256), dt, &omegas).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut x = 0.0;
        let series: Vec<Complex64> = (0..400_000)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = a * x + e;
                Complex64::new(x, 0.0)
            })
            .collect();
        let s = est.estimate(&series).unwrap();
        for (w, v) in omegas.iter().zip(&s) {
            let exact = ar1_spectrum(a, *w, dt);
            assert!(((v.re - exact) / exact).abs() < 0.05, "w={w}: {} vs {exact}", v.re);
            assert!(v.im.abs() < 1e-9 * exact);
        }
    }

    #[test]
    fn positive_p_pairing_cancels_imaginary_noise() {
        // X = u + i v with independent u, v of equal spectra: the paired
        // estimator targets S_u - S_v = 0, a conjugated one would give 2 S_u.
        let dt = 0.1;
        let est = WelchEstimator::new(WelchConfig::hann_half_overlap(128), dt, &[1.0, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut u, mut v) = (0.0, 0.0);
        let series: Vec<Complex64> = (0..200_000)
            .map(|_| {
                let (e1, e2): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                u = 0.8 * u + e1;
                v = 0.8 * v + e2;
                Complex64::new(u, v)
            })
            .collect();
        for (z, w) in est.estimate(&series).unwrap().iter().zip([1.0, 3.0]) {
            assert!(z.norm() < 0.1 * ar1_spectrum(0.8, w, dt));
        }
    }

    #[test]
    fn too_short_series_is_rejected() {
        let est = WelchEstimator::new(WelchConfig::hann_half_overlap(100), 0.1, &[1.0]).unwrap();
        let series = vec![Complex64::new(0.0, 0.0); 400];
        assert!(matches!(est.estimate(&series), Err(Error::InsufficientData(_))));
        assert_eq!(WelchConfig::hann_half_overlap(100).segment_count(450), 8);
    }
}
