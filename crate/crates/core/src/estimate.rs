//! Gate-error estimate and bounds from the two decay parameters.
//!
//! With `p` from standard benchmarking and `p_C̄` from the interleaved run,
//!
//! ```text
//! r_est = (d − 1)(1 − p_C̄/p) / d
//! E     = min{ (d − 1)[|p − p_C̄/p| + (1 − p)] / d,
//!             2(d² − 1)(1 − p)/(p d²) + 4 sqrt(1 − p) sqrt(d² − 1) / p }
//! ```
//!
//! For Pauli noise the second branch drops its square-root term; for
//! depolarizing noise `E = 0`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::Estimate;
use crate::noise::GammaDiagnostic;

/// Smallest `p` accepted as a divisor.
pub const P_FLOOR: f64 = 1e-6;

/// What the caller asserts about the average random-gate error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseClass {
    #[default]
    General,
    Pauli,
    Depolarizing,
}

impl std::str::FromStr for NoiseClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(NoiseClass::General),
            "pauli" => Ok(NoiseClass::Pauli),
            "depolarizing" => Ok(NoiseClass::Depolarizing),
            _ => Err(Error::Parse(format!("unknown noise class '{s}'"))),
        }
    }
}

fn check_dimension(d: usize) -> Result<()> {
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            range: "a power of two >= 2".into(),
        });
    }
    Ok(())
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange {
            name,
            value,
            range: "[0, 1]".into(),
        });
    }
    Ok(())
}

fn check_divisor(p: f64) -> Result<()> {
    if p.is_nan() || p <= P_FLOOR {
        return Err(Error::DivisionByZero { p, floor: P_FLOOR });
    }
    Ok(())
}

/// `r = (d − 1)(1 − p)/d`.
pub fn average_clifford_error(p: f64, d: usize) -> Result<f64> {
    check_dimension(d)?;
    check_unit("p", p)?;
    let d = d as f64;
    Ok((d - 1.0) * (1.0 - p) / d)
}

/// Raw interleaved estimate; may be negative when `p_C̄ > p`.
pub fn interleaved_gate_error(p: f64, p_interleaved: f64, d: usize) -> Result<f64> {
    check_dimension(d)?;
    check_divisor(p)?;
    let d = d as f64;
    Ok((d - 1.0) * (1.0 - p_interleaved / p) / d)
}

/// Half-width `E` of the interval around the estimate.
pub fn error_bound(p: f64, p_interleaved: f64, d: usize, class: NoiseClass) -> Result<f64> {
    check_dimension(d)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            range: "(0, 1]".into(),
        });
    }
    check_unit("p_interleaved", p_interleaved)?;
    check_divisor(p)?;
    if class == NoiseClass::Depolarizing {
        return Ok(0.0);
    }
    let d = d as f64;
    let d2 = d * d;
    let first = (d - 1.0) * ((p - p_interleaved / p).abs() + (1.0 - p)) / d;
    let pauli_term = 2.0 * (d2 - 1.0) * (1.0 - p) / (p * d2);
    let second = match class {
        NoiseClass::Pauli => pauli_term,
        _ => pauli_term + 4.0 * (1.0 - p).sqrt() * (d2 - 1.0).sqrt() / p,
    };
    Ok(first.min(second))
}

/// `2(1 − cos²(ε/2))/3`, the error of a single-qubit over-rotation by `ε`.
pub fn theoretical_overrotation_error(epsilon: f64) -> f64 {
    2.0 * (1.0 - (epsilon / 2.0).cos().powi(2)) / 3.0
}

/// Delta-method uncertainty of the interleaved estimate, inputs independent.
pub fn propagate_uncertainty(p: Estimate, p_interleaved: Estimate, d: usize) -> Result<f64> {
    check_dimension(d)?;
    check_divisor(p.value)?;
    let scale = (d as f64 - 1.0) / d as f64;
    let d_pi = -scale / p.value;
    let d_p = scale * p_interleaved.value / (p.value * p.value);
    Ok(((d_p * p.stderr).powi(2) + (d_pi * p_interleaved.stderr).powi(2)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateErrorReport {
    pub d: usize,
    pub p: Estimate,
    pub p_interleaved: Estimate,
    /// Average error over the random gates.
    pub r: Estimate,
    /// Raw interleaved gate-error estimate with delta-method uncertainty.
    pub r_est: Estimate,
    pub bound: f64,
    pub noise_class: NoiseClass,
    /// `[r_est − E, r_est + E]` clamped to `[0, (d − 1)/d]`.
    pub interval: [f64; 2],
    pub raw_interval: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaDiagnostic>,
}

impl GateErrorReport {
    pub fn new(p: Estimate, p_interleaved: Estimate, d: usize, class: NoiseClass) -> Result<Self> {
        let r_value = average_clifford_error(p.value, d)?;
        let r_stderr = (d as f64 - 1.0) / d as f64 * p.stderr;
        let r_est = interleaved_gate_error(p.value, p_interleaved.value, d)?;
        let sigma = propagate_uncertainty(p, p_interleaved, d)?;
        let bound = error_bound(p.value, p_interleaved.value, d, class)?;
        let ceiling = (d as f64 - 1.0) / d as f64;
        let raw_interval = [r_est - bound, r_est + bound];
        let interval = [
            raw_interval[0].clamp(0.0, ceiling),
            raw_interval[1].clamp(0.0, ceiling),
        ];
        Ok(Self {
            d,
            p,
            p_interleaved,
            r: Estimate::new(r_value, r_stderr),
            r_est: Estimate::new(r_est, sigma),
            bound,
            noise_class: class,
            interval,
            raw_interval,
            gamma: None,
        })
    }

    pub fn with_gamma(mut self, gamma: GammaDiagnostic) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn contains(&self, r: f64) -> bool {
        self.interval[0] <= r && r <= self.interval[1]
    }
}

/// One row of the human-readable summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub epsilon: Option<f64>,
    pub r_th: Option<f64>,
    pub report: GateErrorReport,
}

/// Fixed-width table with columns `ε | r_th | r_est ± σ | bound`.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>8} {:>8} {:>17} {:>16}",
        "gate", "eps", "r_th", "r_est", "bound"
    );
    for row in rows {
        let eps = row.epsilon.map_or("-".to_string(), |e| format!("{e:.4}"));
        let r_th = row.r_th.map_or("-".to_string(), |r| format!("{r:.3}"));
        let est = format!("{:.3} ± {:.3}", row.report.r_est.value, row.report.r_est.stderr);
        let bound = format!("[{:.3},{:.3}]", row.report.interval[0], row.report.interval[1]);
        let _ = writeln!(
            out,
            "{:<14} {:>8} {:>8} {:>17} {:>16}",
            row.label, eps, r_th, est, bound
        );
    }
    out
}
