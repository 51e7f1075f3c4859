use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// The six positive-P amplitudes: pump (`a0`), TEM10 (`ax`) and TEM01 (`ay`),
/// each with its independent partner (`*p`). In the classical limit every
/// partner is the complex conjugate of its amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseSpaceState {
    pub a0: Complex64,
    pub a0p: Complex64,
    pub ax: Complex64,
    pub axp: Complex64,
    pub ay: Complex64,
    pub ayp: Complex64,
}

impl PhaseSpaceState {
    /// State with `partner = conj(amplitude)` for every mode.
    pub fn classical(a0: Complex64, ax: Complex64, ay: Complex64) -> Self {
        Self {
            a0,
            a0p: a0.conj(),
            ax,
            axp: ax.conj(),
            ay,
            ayp: ay.conj(),
        }
    }

    pub fn components(&self) -> [Complex64; 6] {
        [self.a0, self.a0p, self.ax, self.axp, self.ay, self.ayp]
    }

    pub fn max_norm(&self) -> f64 {
        self.components().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for PhaseSpaceState {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            a0: self.a0 + o.a0,
            a0p: self.a0p + o.a0p,
            ax: self.ax + o.ax,
            axp: self.axp + o.axp,
            ay: self.ay + o.ay,
            ayp: self.ayp + o.ayp,
        }
    }
}

impl Mul<f64> for PhaseSpaceState {
    type Output = Self;

    fn mul(self, k: f64) -> Self {
        Self {
            a0: self.a0 * k,
            a0p: self.a0p * k,
            ax: self.ax * k,
            axp: self.axp * k,
            ay: self.ay * k,
            ayp: self.ayp * k,
        }
    }
}
