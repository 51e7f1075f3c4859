//! Two-transverse-mode degenerate OPO: cavity anisotropy, classical and
//! linearized dynamics, positive-P simulation and orientation locking.
//!
//! Frequencies are in units of the signal decay rate wherever a `_tilde`
//! suffix appears; `OpoParams::dimensionless` builds parameters in that
//! convention.

pub mod classical;
pub mod error;
pub mod geometry;
pub mod orientation;
pub mod psd;
pub mod report;
pub mod spectra;
pub mod state;
pub mod stochastic;

pub use classical::{OpoParams, SteadyState, Thresholds};
pub use error::{Error, Result};
pub use geometry::{CavityGeometry, CrystalSpec, MirrorSpec, ModeIndex};
pub use state::PhaseSpaceState;
