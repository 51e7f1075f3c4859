//! Paraxial description of the anisotropic cavity.
//!
//! Two sources of transverse anisotropy are modelled: a crystal tilted by an
//! angle `beta` in the zx plane and an astigmatic second mirror with distinct
//! curvature radii along x and y. Both turn the cavity into two independent
//! one-dimensional cavities (one per transverse axis) with their own
//! g-parameters, which splits the otherwise degenerate TEM10/TEM01 pair.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrystalSpec {
    /// Crystal length, in the same unit as the cavity length.
    pub length: f64,
    pub refractive_index: f64,
    /// Tilt in the zx plane, radians.
    pub tilt: f64,
}

impl CrystalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length >= 0.0 && self.length.is_finite()) {
            return Err(Error::invalid("lc", "crystal length must be finite and >= 0"));
        }
        if !(self.refractive_index > 1.0 && self.refractive_index.is_finite()) {
            return Err(Error::invalid("nc", "refractive index must be > 1"));
        }
        if !(self.tilt.abs() < FRAC_PI_2) {
            return Err(Error::invalid("beta", "tilt must satisfy |beta| < pi/2"));
        }
        Ok(())
    }
}

/// Curvature radii of a (possibly astigmatic) concave mirror.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorSpec {
    pub radius_x: f64,
    pub radius_y: f64,
}

impl MirrorSpec {
    pub fn spherical(radius: f64) -> Self {
        Self {
            radius_x: radius,
            radius_y: radius,
        }
    }

    /// Mirror with `radius_y = radius_x (1 - epsilon)`.
    pub fn astigmatic(radius_x: f64, epsilon: f64) -> Self {
        Self {
            radius_x,
            radius_y: radius_x * (1.0 - epsilon),
        }
    }

    /// `1 - radius_y / radius_x`.
    pub fn ellipticity(&self) -> f64 {
        1.0 - self.radius_y / self.radius_x
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if !(self.radius_x > 0.0 && self.radius_y > 0.0)
            || !self.radius_x.is_finite()
            || !self.radius_y.is_finite()
        {
            return Err(Error::invalid(name, "mirror radii must be finite and > 0"));
        }
        Ok(())
    }
}

/// Physical description of the two-mirror cavity. Mirror 2 is the one that
/// may be astigmatic; mirror 1 is taken spherical with radius `mirror1.radius_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityGeometry {
    pub length: f64,
    pub mirror1: MirrorSpec,
    pub mirror2: MirrorSpec,
    pub crystal: CrystalSpec,
    /// Output-coupler transmissivity.
    pub transmissivity: f64,
    pub speed_of_light: f64,
}

impl CavityGeometry {
    /// Near-confocal cavity used throughout the examples and defaults:
    /// `L = 1`, `R = R_x = 2L`, `l_c = 0.1 L`, `n_c = 2`, `T = 0.01`, `c = 1`.
    pub fn standard() -> Self {
        Self {
            length: 1.0,
            mirror1: MirrorSpec::spherical(2.0),
            mirror2: MirrorSpec::spherical(2.0),
            crystal: CrystalSpec {
                length: 0.1,
                refractive_index: 2.0,
                tilt: 0.0,
            },
            transmissivity: 0.01,
            speed_of_light: 1.0,
        }
    }

    pub fn with_tilt(mut self, beta: f64) -> Self {
        self.crystal.tilt = beta;
        self
    }

    /// Replaces mirror 2's y radius so that its ellipticity equals `epsilon`.
    pub fn with_ellipticity(mut self, epsilon: f64) -> Self {
        self.mirror2 = MirrorSpec::astigmatic(self.mirror2.radius_x, epsilon);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::invalid("L", "cavity length must be > 0"));
        }
        self.mirror1.validate("R")?;
        self.mirror2.validate("R2x/R2y")?;
        self.crystal.validate()?;
        if self.crystal.length >= self.length {
            return Err(Error::invalid("lc", "crystal must be shorter than the cavity"));
        }
        if !(self.transmissivity > 0.0 && self.transmissivity < 1.0) {
            return Err(Error::invalid("T", "transmissivity must lie in (0, 1)"));
        }
        if !(self.speed_of_light > 0.0 && self.speed_of_light.is_finite()) {
            return Err(Error::invalid("c", "speed of light must be > 0"));
        }
        Ok(())
    }
}

/// Longitudinal (`q`) and transverse (`m`, `n`) indices of a TEM_mn mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub q: u32,
    pub m: u32,
    pub n: u32,
}

impl ModeIndex {
    pub fn new(q: u32, m: u32, n: u32) -> Self {
        Self { q, m, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GParameters {
    pub g1x: f64,
    pub g2x: f64,
    pub g1y: f64,
    pub g2y: f64,
}

impl GParameters {
    pub fn product_x(&self) -> f64 {
        self.g1x * self.g2x
    }

    pub fn product_y(&self) -> f64 {
        self.g1y * self.g2y
    }

    /// One-way Gouy phases `arccos sqrt(g1 g2)` along x and y.
    pub fn gouy_phases(&self) -> (f64, f64) {
        (
            self.product_x().sqrt().acos(),
            self.product_y().sqrt().acos(),
        )
    }
}

/// Effective lengths `(L_eff_x, L_eff_y)` seen by the two transverse axes
/// when the crystal is tilted in the zx plane.
pub fn effective_lengths(geom: &CavityGeometry) -> (f64, f64) {
    let CrystalSpec {
        length: lc,
        refractive_index: nc,
        tilt: beta,
    } = geom.crystal;
    let n2 = nc * nc;
    let (sin, cos) = beta.sin_cos();
    let s2 = sin * sin;
    let root = (n2 - s2).sqrt();

    let lx = geom.length - lc * (cos.abs() + (s2 * (2.0 * n2 - s2) - n2) / (root * root * root));
    let ly = geom.length - lc * (cos.abs() - cos * cos / root);
    (lx, ly)
}

/// Optical path length `L + [sqrt(n_c^2 - sin^2 beta) - |cos beta|] l_c`.
pub fn optical_length(geom: &CavityGeometry) -> f64 {
    let CrystalSpec {
        length: lc,
        refractive_index: nc,
        tilt: beta,
    } = geom.crystal;
    let s = beta.sin();
    geom.length + ((nc * nc - s * s).sqrt() - beta.cos().abs()) * lc
}

pub fn g_parameters(geom: &CavityGeometry) -> Result<GParameters> {
    geom.validate()?;
    let (lx, ly) = effective_lengths(geom);
    let r1 = geom.mirror1.radius_x;
    let g = GParameters {
        g1x: 1.0 - lx / r1,
        g2x: 1.0 - lx / geom.mirror2.radius_x,
        g1y: 1.0 - ly / r1,
        g2y: 1.0 - ly / geom.mirror2.radius_y,
    };
    for (axis, product) in [('x', g.product_x()), ('y', g.product_y())] {
        if !(product > 0.0 && product < 1.0) {
            return Err(Error::Stability { axis, product });
        }
    }
    Ok(g)
}

/// Angular resonance frequency of the TEM_mn mode with longitudinal index q.
pub fn resonance_frequency(geom: &CavityGeometry, mode: ModeIndex) -> Result<f64> {
    let (phase_x, phase_y) = g_parameters(geom)?.gouy_phases();
    let l_opt = optical_length(geom);
    let q = f64::from(mode.q);
    let m = f64::from(mode.m) + 0.5;
    let n = f64::from(mode.n) + 0.5;
    Ok(PI * geom.speed_of_light / l_opt * (q + (m * phase_x + n * phase_y) / PI))
}

/// Signal-mode amplitude decay rate `c T / (4 L_opt)`.
pub fn signal_decay_rate(geom: &CavityGeometry) -> f64 {
    geom.speed_of_light * geom.transmissivity / (4.0 * optical_length(geom))
}

/// Signed TEM01 - TEM10 splitting. Positive when the y resonance lies above
/// the x resonance.
pub fn detuning(geom: &CavityGeometry) -> Result<f64> {
    let (phase_x, phase_y) = g_parameters(geom)?.gouy_phases();
    Ok(geom.speed_of_light * (phase_y - phase_x) / optical_length(geom))
}

/// Detuning in units of the signal decay rate.
pub fn detuning_normalized(geom: &CavityGeometry) -> Result<f64> {
    Ok(detuning(geom)? / signal_decay_rate(geom))
}

/// Leading-order detuning estimate together with a flag telling whether the
/// inputs sit outside the range where the expansion is trustworthy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallAnisotropyEstimate {
    pub delta_tilde: f64,
    pub outside_validity: bool,
}

pub const SMALL_TILT_LIMIT: f64 = 0.2;
pub const SMALL_ELLIPTICITY_LIMIT: f64 = 0.01;

/// Quadratic-in-tilt, linear-in-ellipticity approximation of `|Delta| / gamma_s`.
/// Requires mirror 2's x radius to equal mirror 1's radius.
pub fn detuning_small_anisotropy(geom: &CavityGeometry) -> Result<SmallAnisotropyEstimate> {
    geom.validate()?;
    let r = geom.mirror1.radius_x;
    if (geom.mirror2.radius_x - r).abs() > 1e-12 * r {
        return Err(Error::invalid(
            "R2x",
            "small-anisotropy expansion assumes R2x equal to R",
        ));
    }
    let CrystalSpec {
        length: lc,
        refractive_index: nc,
        tilt: beta,
    } = geom.crystal;
    let eps = geom.mirror2.ellipticity();
    let g = 1.0 - (geom.length - lc * (1.0 - 1.0 / nc)) / r;

    let tilt_term = 2.0 * lc * (nc * nc - 1.0) * beta * beta / (r * nc.powi(3) * (1.0 - g * g).sqrt());
    let astig_term = ((1.0 - g) / (1.0 + g)).sqrt() * eps.abs();
    Ok(SmallAnisotropyEstimate {
        delta_tilde: 2.0 / geom.transmissivity * (tilt_term + astig_term),
        outside_validity: beta.abs() > SMALL_TILT_LIMIT || eps.abs() > SMALL_ELLIPTICITY_LIMIT,
    })
}

/// Largest tilt (at zero ellipticity) and largest ellipticity (at zero tilt)
/// compatible with a target optimum noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceLimits {
    pub delta_tilde_max: f64,
    pub beta_max: f64,
    pub epsilon_max: f64,
}

const BISECTION_REL_TOL: f64 = 1e-6;

/// Inverts `V_opt = |D| / (1 + |D|)` for the admissible normalized detuning,
/// then bisects the exact detuning along each anisotropy axis.
pub fn anisotropy_tolerance(template: &CavityGeometry, target_v_opt: f64) -> Result<ToleranceLimits> {
    if !(target_v_opt > 0.0 && target_v_opt < 1.0) {
        return Err(Error::invalid("target_v", "target V_opt must lie in (0, 1)"));
    }
    let limit = target_v_opt / (1.0 - target_v_opt);
    let base = template.with_tilt(0.0).with_ellipticity(0.0);

    let excess_tilt = |beta: f64| -> Result<f64> {
        Ok(detuning_normalized(&base.with_tilt(beta))?.abs() - limit)
    };
    let excess_ellipticity = |eps: f64| -> Result<f64> {
        Ok(detuning_normalized(&base.with_ellipticity(eps))?.abs() - limit)
    };

    let beta_max = bisect_upper(excess_tilt, 1e-3, FRAC_PI_2, "beta")?;
    let epsilon_max = bisect_upper(excess_ellipticity, 1e-6, 1.0, "epsilon")?;
    Ok(ToleranceLimits {
        delta_tilde_max: limit,
        beta_max,
        epsilon_max,
    })
}

/// Finds the first crossing of `excess` from <= 0 to > 0 on `[0, ceiling)`,
/// growing the bracket geometrically from `first_step`.
fn bisect_upper<F>(excess: F, first_step: f64, ceiling: f64, name: &str) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if excess(0.0)? > 0.0 {
        return Err(Error::NoBracket(format!(
            "target already violated at {name} = 0"
        )));
    }
    let mut lo = 0.0;
    let mut hi = first_step;
    loop {
        if hi >= ceiling {
            return Err(Error::NoBracket(format!(
                "no crossing below the validity limit {name} < {ceiling}"
            )));
        }
        match excess(hi) {
            Ok(v) if v > 0.0 => break,
            Ok(_) => {
                lo = hi;
                hi *= 2.0;
            }
            Err(Error::Stability { .. }) => {
                return Err(Error::NoBracket(format!(
                    "cavity turns unstable at {name} = {hi} before the target is reached"
                )))
            }
            Err(e) => return Err(e),
        }
    }
    while hi - lo > BISECTION_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningSweepRow {
    pub beta_rad: f64,
    pub epsilon: f64,
    pub delta_over_gammas_exact: f64,
    pub delta_over_gammas_approx: f64,
}

/// Tilt sweep at zero ellipticity followed by an ellipticity sweep at zero
/// tilt. A zero-width range contributes a single row.
pub fn detuning_sweep(
    template: &CavityGeometry,
    beta_range: (f64, f64, usize),
    epsilon_range: (f64, f64, usize),
) -> Result<Vec<DetuningSweepRow>> {
    let base = template.with_tilt(0.0).with_ellipticity(0.0);
    let mut rows = Vec::new();
    for beta in linspace(beta_range) {
        rows.push(sweep_row(&base.with_tilt(beta), beta, 0.0)?);
    }
    for eps in linspace(epsilon_range) {
        rows.push(sweep_row(&base.with_ellipticity(eps), 0.0, eps)?);
    }
    Ok(rows)
}

fn sweep_row(geom: &CavityGeometry, beta: f64, eps: f64) -> Result<DetuningSweepRow> {
    Ok(DetuningSweepRow {
        beta_rad: beta,
        epsilon: eps,
        delta_over_gammas_exact: detuning_normalized(geom)?,
        delta_over_gammas_approx: detuning_small_anisotropy(geom)?.delta_tilde,
    })
}

pub(crate) fn linspace((start, end, steps): (f64, f64, usize)) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ if start == end => vec![start],
        _ => (0..steps)
            .map(|i| start + (end - start) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    // Reference values from a 30-digit mpmath evaluation of the same formulas.
    const LX_6DEG: f64 = 0.949_657_764_736_624_99;
    const LY_6DEG: f64 = 0.950_069_181_780_474_35;
    const LOPT_6DEG: f64 = 1.100_274_468_683_023_3;
    const DT_EXACT_6DEG: f64 = 0.096_683_427_856_024_434;
    const DT_APPROX_6DEG: f64 = 0.096_635_516_602_960_856;
    const DT_EXACT_EPS1E3: f64 = 0.111_747_378_109_220_50;
    const DT_APPROX_EPS1E3: f64 = 0.111_619_964_134_748_87;
    const BETA_CROSS_DEG: f64 = 6.101_991_866_889_148;
    const EPS_CROSS: f64 = 8.949_828_627_139_286e-4;

    fn six_degrees() -> f64 {
        6f64.to_radians()
    }

    #[test]
    fn effective_lengths_untilted() {
        let (lx, ly) = effective_lengths(&CavityGeometry::standard());
        assert!((lx - 0.95).abs() < 1e-15 && (ly - 0.95).abs() < 1e-15);

        let mut g = CavityGeometry::standard().with_tilt(0.3);
        g.crystal.length = 0.0;
        assert_eq!(effective_lengths(&g), (1.0, 1.0));
        assert_eq!(optical_length(&g), 1.0);
    }

    #[test]
    fn effective_lengths_tilted_match_reference() {
        let g = CavityGeometry::standard().with_tilt(six_degrees());
        let (lx, ly) = effective_lengths(&g);
        assert!(rel(lx, LX_6DEG) < 1e-14);
        assert!(rel(ly, LY_6DEG) < 1e-14);
        assert!(rel(optical_length(&g), LOPT_6DEG) < 1e-14);
        assert!((optical_length(&CavityGeometry::standard()) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn g_parameters_isotropic_and_boundary() {
        let g = g_parameters(&CavityGeometry::standard()).unwrap();
        for v in [g.g1x, g.g2x, g.g1y, g.g2y] {
            assert!((v - 0.525).abs() < 1e-15);
        }

        // R = L_eff puts g1 = 0 on the boundary of the stability region.
        let mut geom = CavityGeometry::standard();
        geom.mirror1 = MirrorSpec::spherical(0.95);
        assert!(matches!(
            g_parameters(&geom),
            Err(Error::Stability { axis: 'x', .. })
        ));
    }

    #[test]
    fn astigmatism_shifts_only_g2y() {
        let eps = 1e-3;
        let g = g_parameters(&CavityGeometry::standard().with_ellipticity(eps)).unwrap();
        assert_eq!(g.g1x, g.g1y);
        let first_order = 0.95 * eps / 2.0;
        let diff = g.g2x - g.g2y;
        assert!(rel(diff, first_order) < 2.0 * eps);
    }

    #[test]
    fn resonance_comb_consistency() {
        let iso = CavityGeometry::standard();
        for q in [0, 1, 1000] {
            let w10 = resonance_frequency(&iso, ModeIndex::new(q, 1, 0)).unwrap();
            let w01 = resonance_frequency(&iso, ModeIndex::new(q, 0, 1)).unwrap();
            assert!((w10 - w01).abs() <= 4.0 * f64::EPSILON * w10);
        }
        let geom = CavityGeometry::standard().with_tilt(0.05).with_ellipticity(2e-4);
        let delta = detuning(&geom).unwrap();
        for q in [0, 7, 1000] {
            let w10 = resonance_frequency(&geom, ModeIndex::new(q, 1, 0)).unwrap();
            let w01 = resonance_frequency(&geom, ModeIndex::new(q, 0, 1)).unwrap();
            assert!(((w01 - w10) - delta).abs() <= 1e-12 * w10.max(1.0));
        }
    }

    #[test]
    fn resonance_strictly_increasing_in_each_index() {
        let geom = CavityGeometry::standard().with_tilt(0.1);
        let w = |q, m, n| resonance_frequency(&geom, ModeIndex::new(q, m, n)).unwrap();
        assert!(w(3, 0, 0) < w(4, 0, 0));
        assert!(w(3, 0, 0) < w(3, 1, 0));
        assert!(w(3, 0, 0) < w(3, 0, 1));
    }

    #[test]
    fn six_degree_tilt_detunes_by_a_tenth_of_gamma() {
        let geom = CavityGeometry::standard().with_tilt(six_degrees());
        let dt = detuning_normalized(&geom).unwrap();
        assert!(rel(dt, DT_EXACT_6DEG) < 1e-12);
        let w10 = resonance_frequency(&geom, ModeIndex::new(0, 1, 0)).unwrap();
        let w01 = resonance_frequency(&geom, ModeIndex::new(0, 0, 1)).unwrap();
        assert!(((w01 - w10) / signal_decay_rate(&geom) - 0.1).abs() < 0.01);
    }

    #[test]
    fn decay_rate_is_linear_in_transmissivity() {
        let mut geom = CavityGeometry::standard();
        let g1 = signal_decay_rate(&geom);
        assert!((g1 - 0.01 / 4.4).abs() < 1e-17);
        geom.transmissivity = 0.02;
        assert!((signal_decay_rate(&geom) - 2.0 * g1).abs() < 1e-17);
    }

    #[test]
    fn detuning_examples() {
        assert_eq!(detuning(&CavityGeometry::standard()).unwrap(), 0.0);
        let astig = CavityGeometry::standard().with_ellipticity(1e-3);
        assert!(rel(detuning_normalized(&astig).unwrap(), DT_EXACT_EPS1E3) < 1e-12);
    }

    #[test]
    fn small_anisotropy_examples() {
        let est = detuning_small_anisotropy(&CavityGeometry::standard()).unwrap();
        assert_eq!(est.delta_tilde, 0.0);

        let astig = detuning_small_anisotropy(&CavityGeometry::standard().with_ellipticity(1e-3)).unwrap();
        assert!(rel(astig.delta_tilde, DT_APPROX_EPS1E3) < 1e-12);
        assert!(!astig.outside_validity);

        let tilt = detuning_small_anisotropy(&CavityGeometry::standard().with_tilt(six_degrees())).unwrap();
        assert!(rel(tilt.delta_tilde, DT_APPROX_6DEG) < 1e-12);
        // Coefficient of beta^2 worked out by hand with g = 0.525.
        assert!(rel(tilt.delta_tilde / six_degrees().powi(2), 8.81) < 1e-3);

        let wide = detuning_small_anisotropy(&CavityGeometry::standard().with_tilt(0.3)).unwrap();
        assert!(wide.outside_validity);

        let mut mismatched = CavityGeometry::standard();
        mismatched.mirror2 = MirrorSpec::spherical(2.5);
        assert!(detuning_small_anisotropy(&mismatched).is_err());
    }

    #[test]
    fn tolerance_inverts_optimum_law() {
        let limits = anisotropy_tolerance(&CavityGeometry::standard(), 0.1).unwrap();
        assert!(rel(limits.delta_tilde_max, 1.0 / 9.0) < 1e-15);

        let limits = anisotropy_tolerance(&CavityGeometry::standard(), 1.0 / 11.0).unwrap();
        assert!(rel(limits.beta_max.to_degrees(), BETA_CROSS_DEG) < 2e-6);
        assert!(rel(limits.epsilon_max, EPS_CROSS) < 2e-6);
    }

    #[test]
    fn tolerance_rejects_bad_targets() {
        let geom = CavityGeometry::standard();
        assert!(anisotropy_tolerance(&geom, 0.0).is_err());
        assert!(anisotropy_tolerance(&geom, 1.0).is_err());
        // The cavity goes unstable long before the tilt can push D/gamma to 10^4.
        assert!(matches!(
            anisotropy_tolerance(&geom, 0.9999),
            Err(Error::NoBracket(_))
        ));
    }

    #[test]
    fn sweep_shapes() {
        let geom = CavityGeometry::standard();
        let rows = detuning_sweep(&geom, (0.0, 0.0, 5), (0.0, 0.0, 0)).unwrap();
        assert_eq!(rows.len(), 1);
        let rows = detuning_sweep(&geom, (0.0, 0.1, 11), (0.0, 1e-3, 4)).unwrap();
        assert_eq!(rows.len(), 15);
        assert!(rows[..11].iter().all(|r| r.epsilon == 0.0));
    }

    #[test]
    fn rejects_invalid_geometry() {
        let mut g = CavityGeometry::standard();
        g.crystal.refractive_index = 1.0;
        assert!(g_parameters(&g).is_err());
        let mut g = CavityGeometry::standard();
        g.transmissivity = 1.0;
        assert!(g.validate().is_err());
        let g = CavityGeometry::standard().with_tilt(FRAC_PI_2);
        assert!(g.validate().is_err());
    }
}
