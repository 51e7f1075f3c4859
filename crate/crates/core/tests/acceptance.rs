//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! status 1 if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use opo_core::classical::{fixed_point_residual, integrate_classical, steady_state, thresholds};
use opo_core::geometry::{anisotropy_tolerance, detuning_sweep};
use opo_core::orientation::{
    orientation_ensemble, stationary_covariance_lyapunov, theta_variance_closed_form, Fidelity,
    OrientationConfig, OrientationSystem,
};
use opo_core::report::{to_csv, OrientationRow};
use opo_core::spectra::{noise_spectrum_closed_form, noise_spectrum_matrix, optimum_squeezing};
use opo_core::stochastic::{
    estimate_noise_spectrum, fitted_minimum, Mode, SdeConfig, SpectrumRequest,
};
use opo_core::{CavityGeometry, OpoParams, PhaseSpaceState};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

const DELTAS: [f64; 6] = [0.01, 0.1, 0.5, 1.0, 2.0, 4.0];

fn params(delta_tilde: f64) -> OpoParams {
    OpoParams::dimensionless(1.5, delta_tilde, 1.0, 1e-3)
}

fn omega_grid() -> Vec<f64> {
    (0..200).map(|i| -10.0 + 20.0 * i as f64 / 199.0).collect()
}

fn closed(d: f64, w: f64, phi: f64) -> f64 {
    noise_spectrum_closed_form(d, w, phi).unwrap().value
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Dense scan followed by golden-section refinement around the best cell.
fn global_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let n = 4000;
    let h = (hi - lo) / n as f64;
    let best = (0..=n)
        .map(|i| lo + h * i as f64)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    golden_min(&f, (best - h).max(lo), (best + h).min(hi), 1e-12)
}

fn cross_route_equality() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_at = (0.0, 0.0, 0.0);
    let mut worst_principal = 0.0f64;
    let mut worst_odd_residual = 0.0f64;
    for &d in &DELTAS {
        let p = params(d);
        for k in 0..8 {
            let phi = k as f64 * PI / 8.0;
            for &w in &omega_grid() {
                let vm = noise_spectrum_matrix(&p, w, phi).unwrap().value;
                let vc = closed(d, w, phi);
                let gap = (vm - vc).abs();
                if gap > worst {
                    worst = gap;
                    worst_at = (d, w, phi);
                }
                if k % 4 == 0 {
                    worst_principal = worst_principal.max(gap);
                }
                // the gap is the term odd in D that the closed form drops
                let big_d = 4.0 * w * w + (d * d - w * w).powi(2);
                let odd = -8.0 * d * (2.0 * phi).sin() / big_d;
                worst_odd_residual = worst_odd_residual.max((vm - vc - odd).abs() / odd.abs().max(1.0));
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-10 && elapsed < Duration::from_secs(1),
        format!(
            "max gap {worst:.3e} at (D~={}, w~={:.3}, phi={:.4}); phi in {{0, pi/2}}: {worst_principal:.1e}; \
             gap minus -8 D~ sin(2 phi)/D: {worst_odd_residual:.1e}; {elapsed:?}",
            worst_at.0, worst_at.1, worst_at.2
        ),
    )
}

fn optimum_law() -> Outcome {
    let mut worst_w2 = 0.0f64;
    let mut worst_v = 0.0f64;
    for d in [0.01, 0.05, 0.1, 0.5, 1.0, 3.0] {
        let (w, v) = global_min(|w| closed(d, w, FRAC_PI_2), 0.0, 10.0);
        let opt = optimum_squeezing(d);
        worst_w2 = worst_w2.max((w * w - (d * d + 2.0 * d)).abs());
        worst_v = worst_v.max((v - d / (1.0 + d)).abs());
        worst_v = worst_v.max((opt.v_opt - v).abs());
    }
    let tenth = optimum_squeezing(0.1).v_opt;
    let pass = worst_w2 <= 1e-6 && worst_v <= 1e-6 && (tenth - 1.0 / 11.0).abs() < 1e-15;
    Outcome::new(
        pass,
        format!("max |dw~^2| {worst_w2:.1e}, max |dV| {worst_v:.1e}, V_opt(0.1) = {tenth:.6}"),
    )
}

fn fig1_regimes() -> Outcome {
    let boundary = 2.0 * (3.0 + 5f64.sqrt());
    let mut notes = Vec::new();
    let mut pass = true;
    for d2 in [1.9, 2.1, 3.9, 4.1, 10.3, 10.6] {
        let d = f64::sqrt(d2);
        let a = closed(d, 0.0, FRAC_PI_2) > closed(d, 0.0, 0.0);
        let (w0, v0) = global_min(|w| closed(d, w, 0.0), 0.0, 10.0);
        let b = v0 < 1.0;
        let ok_a = a == (d2 > 2.0);
        let ok_b = b == (d2 > 4.0);
        let ok_c = if d2 > boundary {
            let w2 = d2 - 2.0 * d - 4.0;
            (w0 * w0 - w2).abs() < 1e-6 && (v0 - d / (1.0 + d)).abs() < 1e-8
        } else if d2 > 4.0 {
            w0 < 1e-4
        } else {
            true
        };
        pass &= ok_a && ok_b && ok_c;
        notes.push(format!("{d2}:{}{}{}", ok_a as u8, ok_b as u8, ok_c as u8));
    }
    Outcome::new(pass, format!("D~^2:(a)(b)(c) {}", notes.join(" ")))
}

fn uncertainty_product() -> Outcome {
    let mut worst = 0.0f64;
    for &d in &DELTAS {
        let p = params(d);
        for &w in &omega_grid() {
            let big_d = 4.0 * w * w + (d * d - w * w).powi(2);
            let rhs = 1.0 + 64.0 * d * d / (big_d * big_d);
            for lhs in [
                closed(d, w, 0.0) * closed(d, w, FRAC_PI_2),
                noise_spectrum_matrix(&p, w, 0.0).unwrap().value
                    * noise_spectrum_matrix(&p, w, FRAC_PI_2).unwrap().value,
            ] {
                worst = worst.max((lhs - rhs).abs() / rhs);
            }
        }
    }
    Outcome::new(worst <= 1e-10, format!("max relative residual {worst:.1e}"))
}

fn fig2_reproduction() -> Outcome {
    let start = Instant::now();
    let geom = CavityGeometry::standard();
    let lim = anisotropy_tolerance(&geom, 1.0 / 11.0).unwrap();
    let beta_deg = lim.beta_max.to_degrees();
    let ok_cross = (beta_deg - 6.0).abs() <= 1.2 && (lim.epsilon_max - 1e-3).abs() <= 2e-4;
    let rows = detuning_sweep(&geom, (0.01f64.to_radians(), 3f64.to_radians(), 300), (1e-6, 5e-4, 300)).unwrap();
    let worst = rows
        .iter()
        .map(|r| (r.delta_over_gammas_approx / r.delta_over_gammas_exact - 1.0).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    Outcome::new(
        ok_cross && worst <= 0.05 && elapsed < Duration::from_secs(1),
        format!(
            "beta crossing {beta_deg:.4} deg, epsilon crossing {:.4e}, max approx/exact gap {:.2}%, {elapsed:?}",
            lim.epsilon_max,
            100.0 * worst
        ),
    )
}

fn stochastic_oracle() -> Outcome {
    let start = Instant::now();
    let p = OpoParams::dimensionless(1.5, 0.2, 1.0, 1e-3);
    let cfg = SdeConfig {
        dt: 1e-3,
        t_sample: 400.0,
        ..SdeConfig::new(&p, 400, 2024)
    };
    let req = SpectrumRequest {
        mode: Mode::Y,
        phis: vec![FRAC_PI_2],
        omegas: (0..50).map(|k| 0.4 + 4.6 * k as f64 / 49.0).collect(),
        segment_time: None,
    };
    let res = match estimate_noise_spectrum(&p, &cfg, &req) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("ensemble failed: {e}")),
    };
    let inside = res
        .spectra
        .iter()
        .filter(|r| (r.v_hat - r.v_closed_ref).abs() <= 3.0 * r.v_stderr)
        .count();
    let frac_inside = inside as f64 / res.spectra.len() as f64;
    let (w_min, v_min) = fitted_minimum(&res.spectra).unwrap();
    let v_opt = 1.0 / 6.0;
    let div = res.n_diverged as f64 / res.n_traj as f64;
    let elapsed = start.elapsed();
    Outcome::new(
        frac_inside >= 0.95 && (v_min / v_opt - 1.0).abs() <= 0.15 && div < 0.01 && elapsed < Duration::from_secs(600),
        format!(
            "{inside}/{} points within 3 stderr; minimum {v_min:.4} at w~={w_min:.3} (V_opt 0.1667, w~_opt 0.663); \
             diverged {}/{}; {elapsed:.1?}",
            res.spectra.len(),
            res.n_diverged,
            res.n_traj
        ),
    )
}

fn orientation_variance() -> Outcome {
    let rho = 100.0;
    let mut lyap_worst = 0.0f64;
    for d in [0.05, 0.1, 0.5, 2.0] {
        let sys = OrientationSystem::new(rho, 1.0, d).unwrap();
        let p = stationary_covariance_lyapunov(&sys).unwrap();
        let v = p[(0, 0)].re / (4.0 * rho * rho);
        let exact = theta_variance_closed_form(rho, d).unwrap().value;
        lyap_worst = lyap_worst.max((v - exact).abs() / exact);
    }

    let v_inf = theta_variance_closed_form(rho, 0.1).unwrap().value;
    let locked = OpoParams::dimensionless(1.5, 0.1, 1.0, 0.01);
    let reduced_cfg = OrientationConfig {
        dt: 5e-3,
        t_end: 5000.0,
        n_traj: 200,
        seed: 11,
        sample_interval: 1.0,
    };
    let reduced = orientation_ensemble(&locked, rho, &reduced_cfg, Fidelity::Reduced)
        .and_then(|run| run.stationary_variance(1000.0));
    let full_cfg = OrientationConfig {
        dt: 1e-3,
        t_end: 3000.0,
        n_traj: 96,
        seed: 12,
        sample_interval: 0.5,
    };
    let full = orientation_ensemble(&locked, locked.rho(), &full_cfg, Fidelity::Full)
        .and_then(|run| run.stationary_variance(1000.0));

    let free = OpoParams::dimensionless(1.5, 0.0, 1.0, 0.01);
    let free_cfg = OrientationConfig {
        dt: 5e-3,
        t_end: 50.0,
        n_traj: 500,
        seed: 13,
        sample_interval: 1.0,
    };
    let growth = orientation_ensemble(&free, rho, &free_cfg, Fidelity::Reduced).map(|run| {
        let pts: Vec<(f64, f64)> = run
            .variance_vs_time()
            .iter()
            .filter(|r| r.t >= 10.0 && r.t <= 50.0)
            .map(|r| (r.t, r.var_theta))
            .collect();
        linear_fit(&pts)
    });

    let (ok_red, red_txt) = match reduced {
        Ok((v, se)) => ((v / v_inf - 1.0).abs() <= 0.10, format!("reduced {v:.4e} ± {se:.1e}")),
        Err(e) => (false, format!("reduced failed: {e}")),
    };
    let (ok_full, full_txt) = match full {
        Ok((v, se)) => ((v / v_inf - 1.0).abs() <= 0.15, format!("full {v:.4e} ± {se:.1e}")),
        Err(e) => (false, format!("full failed: {e}")),
    };
    let (ok_lin, lin_txt) = match growth {
        Ok((slope, r2)) => (
            r2 > 0.9,
            format!("D~=0 slope {slope:.3e} (1/2rho^2 = {:.1e}), R^2 {r2:.4}", 0.5 / (rho * rho)),
        ),
        Err(e) => (false, format!("free run failed: {e}")),
    };
    Outcome::new(
        lyap_worst <= 1e-12 && ok_red && ok_full && ok_lin,
        format!(
            "Lyapunov rel err {lyap_worst:.1e}; target {v_inf:.1e}: {red_txt}, {full_txt}; {lin_txt}"
        ),
    )
}

/// Least-squares slope and coefficient of determination.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

/// Relative size of the random kicks applied to the steady state in the
/// basin check.
const BASIN_KICK: f64 = 1e-2;

fn classical_layer() -> Outcome {
    let mut ratio_worst = 0.0f64;
    let mut resid_worst = 0.0f64;
    for &sigma in &[0.5, 1.0, 1.2, 1.5, 2.0, 3.0] {
        for &d in &[0.0, 0.1, 0.5, 1.0, 3.0] {
            let p = params(d);
            let p = OpoParams { pump: sigma * p.gamma_p / p.chi, ..p };
            let th = thresholds(&p);
            ratio_worst = ratio_worst.max((th.y / th.x - (1.0 + d * d).sqrt()).abs());
            resid_worst = resid_worst.max(fixed_point_residual(&p, &steady_state(&p)));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut kick = |scale: f64| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im) * scale
    };
    let mut failed_cells = Vec::new();
    let mut off_branch = 0;
    let mut worst_by_delta = Vec::new();
    for &d in &[0.0, 0.1, 0.5, 1.0] {
        let mut worst_cell = 0.0f64;
        for &sigma in &[1.2, 1.5, 2.0, 3.0] {
            let p = OpoParams::dimensionless(sigma, d, 1.0, 1e-3);
            let ss = steady_state(&p);
            let rho = ss.rho;
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let init = PhaseSpaceState::classical(
                    ss.alpha0 + kick(BASIN_KICK * ss.alpha0.norm()),
                    ss.alphax + kick(BASIN_KICK * rho),
                    kick(BASIN_KICK * rho),
                );
                match integrate_classical(&p, &init, 50.0, 1e-2) {
                    Ok(t) => {
                        let end = t.last();
                        worst = worst.max(end.ay.norm() / rho);
                        if (end.ax - ss.alphax).norm() > 1e-3 * rho {
                            off_branch += 1;
                        }
                    }
                    Err(_) => worst = f64::INFINITY,
                }
            }
            if !(worst < 1e-6) {
                failed_cells.push(format!("({sigma},{d})"));
            }
            worst_cell = worst_cell.max(worst);
        }
        worst_by_delta.push(format!("D~={d}: {worst_cell:.1e}"));
    }
    let pass = ratio_worst < 1e-14 && resid_worst < 1e-12 && failed_cells.is_empty() && off_branch == 0;
    Outcome::new(
        pass,
        format!(
            "threshold ratio err {ratio_worst:.1e}, residual {resid_worst:.1e}; \
             basin (kick {BASIN_KICK}) max |a_y|/rho at t=50 by D~: [{}]; failing (sigma,D~) cells: [{}]; runs off the bright branch: {off_branch}",
            worst_by_delta.join(", "),
            failed_cells.join(" ")
        ),
    )
}

fn determinism() -> Outcome {
    let p = OpoParams::dimensionless(1.5, 0.2, 1.0, 1e-3);
    let cfg = SdeConfig {
        t_burn: 10.0,
        t_sample: 60.0,
        ..SdeConfig::new(&p, 12, 99)
    };
    let req = SpectrumRequest {
        mode: Mode::Y,
        phis: vec![0.0, FRAC_PI_2],
        omegas: vec![0.5, 1.0, 2.0, 4.0],
        segment_time: None,
    };
    let orient_cfg = OrientationConfig {
        dt: 1e-3,
        t_end: 20.0,
        n_traj: 8,
        seed: 7,
        sample_interval: 0.5,
    };
    let produce = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let spectra = to_csv(&estimate_noise_spectrum(&p, &cfg, &req).unwrap().spectra);
            let run = orientation_ensemble(&p, p.rho(), &orient_cfg, Fidelity::Full).unwrap();
            let rows: Vec<OrientationRow> = run
                .variance_vs_time()
                .into_iter()
                .map(|row| OrientationRow {
                    row,
                    v_theta_inf_ref: run.v_theta_inf_ref.unwrap_or(f64::NAN),
                })
                .collect();
            (spectra, to_csv(&rows))
        })
    };
    let runs: Vec<_> = [1, 2, 4, 1].iter().map(|&t| produce(t)).collect();
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    Outcome::new(
        same,
        format!(
            "spectrum and orientation CSVs ({} + {} bytes) identical across 1/2/4/1 threads: {same}",
            runs[0].0.len(),
            runs[0].1.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("cross-route spectra equality", cross_route_equality),
        ("optimum squeezing law", optimum_law),
        ("noise-spectrum regimes", fig1_regimes),
        ("uncertainty product identity", uncertainty_product),
        ("anisotropy tolerance and small-anisotropy form", fig2_reproduction),
        ("stochastic spectrum oracle", stochastic_oracle),
        ("orientation variance", orientation_variance),
        ("classical layer", classical_layer),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let out = check();
        println!("{} {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        failures += usize::from(!out.pass);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
