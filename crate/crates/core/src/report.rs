//! Plain CSV tables consumed by the plotting scripts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! table reproduces the in-memory values exactly.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::classical::ClassicalTrajectory;
use crate::geometry::DetuningSweepRow;
use crate::orientation::VarianceRow;
use crate::spectra::SpectrumRow;
use crate::stochastic::SimulatedSpectrumRow;

/// A row type with a fixed CSV header.
pub trait CsvRow {
    const HEADER: &'static str;
    fn fields(&self) -> Vec<f64>;
}

impl CsvRow for DetuningSweepRow {
    const HEADER: &'static str = "beta_rad,epsilon,delta_over_gammas_exact,delta_over_gammas_approx";
    fn fields(&self) -> Vec<f64> {
        vec![
            self.beta_rad,
            self.epsilon,
            self.delta_over_gammas_exact,
            self.delta_over_gammas_approx,
        ]
    }
}

impl CsvRow for SpectrumRow {
    const HEADER: &'static str = "omega_tilde,phi_rad,V_matrix,V_closed";
    fn fields(&self) -> Vec<f64> {
        vec![self.omega_tilde, self.phi_rad, self.v_matrix, self.v_closed]
    }
}

impl CsvRow for SimulatedSpectrumRow {
    const HEADER: &'static str = "omega_tilde,phi_rad,V_hat,V_stderr,V_imag_abs,V_closed_ref";
    fn fields(&self) -> Vec<f64> {
        vec![
            self.omega_tilde,
            self.phi_rad,
            self.v_hat,
            self.v_stderr,
            self.v_imag_abs,
            self.v_closed_ref,
        ]
    }
}

/// Orientation variance row paired with the closed-form reference
/// (NaN when there is none).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationRow {
    pub row: VarianceRow,
    pub v_theta_inf_ref: f64,
}

impl CsvRow for OrientationRow {
    const HEADER: &'static str = "t,var_theta,stderr,v_theta_inf_ref";
    fn fields(&self) -> Vec<f64> {
        vec![self.row.t, self.row.var_theta, self.row.stderr, self.v_theta_inf_ref]
    }
}

pub const TRAJECTORY_HEADER: &str = "t,re_a0,im_a0,re_ax,im_ax,re_ay,im_ay";

/// Renders rows to a CSV string, header first.
pub fn to_csv<R: CsvRow>(rows: &[R]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(R::HEADER);
    out.push('\n');
    for r in rows {
        push_fields(&mut out, &r.fields());
    }
    out
}

pub fn write_csv<R: CsvRow, W: Write>(rows: &[R], mut w: W) -> io::Result<()> {
    w.write_all(to_csv(rows).as_bytes())?;
    w.flush()
}

pub fn trajectory_csv(traj: &ClassicalTrajectory) -> String {
    let mut out = String::new();
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (t, s) in traj.times.iter().zip(&traj.states) {
        push_fields(
            &mut out,
            &[*t, s.a0.re, s.a0.im, s.ax.re, s.ax.im, s.ay.re, s.ay.im],
        );
    }
    out
}

fn push_fields(out: &mut String, fields: &[f64]) {
    for (i, v) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Parses a CSV produced by [`to_csv`] back into its header and rows.
pub fn parse_csv(text: &str) -> Result<(String, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty table")?.to_string();
    let width = header.split(',').count();
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            let vals = line
                .split(',')
                .map(|f| f.parse::<f64>().map_err(|e| format!("line {}: {e}", i + 2)))
                .collect::<Result<Vec<_>, _>>()?;
            if vals.len() != width {
                return Err(format!("line {}: expected {width} fields", i + 2));
            }
            Ok(vals)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_exactly() {
        let rows = vec![
            SpectrumRow {
                omega_tilde: 0.1 + 0.2,
                phi_rad: std::f64::consts::FRAC_PI_2,
                v_matrix: 1.0 / 3.0,
                v_closed: f64::NAN,
            },
            SpectrumRow {
                omega_tilde: 1e-300,
                phi_rad: 0.0,
                v_matrix: -0.0,
                v_closed: 12345.678,
            },
        ];
        let text = to_csv(&rows);
        let (header, parsed) = parse_csv(&text).unwrap();
        assert_eq!(header, SpectrumRow::HEADER);
        assert_eq!(parsed[0][0], 0.1 + 0.2);
        assert_eq!(parsed[0][2], 1.0 / 3.0);
        assert!(parsed[0][3].is_nan());
        assert_eq!(parsed[1][0], 1e-300);
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(parse_csv("a,b\n1,2\n3\n").is_err());
        assert!(parse_csv("").is_err());
    }
}
