//! Error channels, their assignment to gates, and the gate-dependence diagnostic.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::clifford::CliffordElement;
use crate::error::{Error, Result};
use crate::gates::{self, Axis};
use crate::pauli::{qubits_for_dimension, PauliVector, SuperOperator, MAX_DENSE_QUBITS, STRUCTURAL_TOL};

fn dense_qubits(d: usize) -> Result<usize> {
    let n = qubits_for_dimension(d).ok_or(Error::OutOfRange {
        name: "d",
        value: d as f64,
        range: "a power of two >= 2".into(),
    })?;
    if n > MAX_DENSE_QUBITS {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "dense channels are limited to 3 qubits",
        });
    }
    Ok(n)
}

/// `ρ ↦ p ρ + (1 − p) I/d`, i.e. `diag(1, p, …, p)`.
pub fn depolarizing(p: f64, d: usize) -> Result<SuperOperator> {
    let n = dense_qubits(d)?;
    let dd = d * d;
    let lower = -1.0 / (dd as f64 - 1.0);
    if !(lower..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            range: format!("[{lower}, 1]"),
        });
    }
    let mut diag = DVector::from_element(dd, p);
    diag[0] = 1.0;
    SuperOperator::from_matrix(n, DMatrix::from_diagonal(&diag))
}

/// Pauli channel `ρ ↦ Σ_k q_k P_k ρ P_k`; diagonal transfer matrix with
/// entries `Σ_k q_k (±1)` according to whether `P_j` and `P_k` commute.
pub fn pauli_channel(probabilities: &[f64]) -> Result<SuperOperator> {
    let d = (probabilities.len() as f64).sqrt().round() as usize;
    if d * d != probabilities.len() {
        return Err(Error::InvalidDistribution(format!(
            "length {} is not a square",
            probabilities.len()
        )));
    }
    let n = dense_qubits(d)
        .map_err(|_| Error::InvalidDistribution(format!("length {} is not 4^n", probabilities.len())))?;
    if probabilities.iter().any(|&q| q < 0.0 || q.is_nan()) {
        return Err(Error::InvalidDistribution("negative probability".into()));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    use crate::clifford::PauliRow;
    let rows: Vec<_> = (0..d * d).map(|i| PauliRow::from_basis_index(i, n)).collect();
    let diag = DVector::from_iterator(
        d * d,
        rows.iter().map(|pj| {
            rows.iter()
                .zip(probabilities)
                .map(|(pk, &q)| if pj.anticommutes(pk) { -q } else { q })
                .sum::<f64>()
        }),
    );
    SuperOperator::from_matrix(n, DMatrix::from_diagonal(&diag))
}

/// Coherent single-qubit over-rotation `exp(−i ε σ/2)`.
pub fn overrotation(axis: Axis, epsilon: f64) -> SuperOperator {
    SuperOperator::from_unitary(&gates::rotation(axis, epsilon)).expect("rotations are unitary")
}

/// Amplitude plus phase damping over a gate of duration `t_gate`.
///
/// Transverse components decay as `exp(−t/T2)`, the longitudinal one as
/// `exp(−t/T1)`, with relaxation feeding population toward `|0⟩`.
pub fn damping(t1: f64, t2: f64, t_gate: f64) -> Result<SuperOperator> {
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::UnphysicalParameters(format!(
            "T1 = {t1} and T2 = {t2} must be positive"
        )));
    }
    if t2 > 2.0 * t1 {
        return Err(Error::UnphysicalParameters(format!(
            "T2 = {t2} exceeds 2·T1 = {}",
            2.0 * t1
        )));
    }
    if t_gate.is_nan() || t_gate < 0.0 {
        return Err(Error::UnphysicalParameters(format!("gate time {t_gate} is negative")));
    }
    let transverse = (-t_gate / t2).exp();
    let longitudinal = (-t_gate / t1).exp();
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = 1.0;
    m[(1, 1)] = transverse;
    m[(2, 2)] = transverse;
    m[(3, 3)] = longitudinal;
    m[(3, 0)] = 1.0 - longitudinal;
    SuperOperator::from_matrix(1, m)
}

/// Noisy preparation `ρψ = Λ_prep(ρ)` and effect `Eψ = Λ_meas†(E)`.
pub fn spam_pair(
    prep_error: &SuperOperator,
    meas_error: &SuperOperator,
    ideal_state: &PauliVector,
    ideal_effect: &PauliVector,
) -> Result<(PauliVector, PauliVector)> {
    prep_error.check_trace_preserving()?;
    meas_error.check_trace_preserving()?;
    ideal_state.check_state_trace()?;
    let prep = prep_error.apply(ideal_state)?;
    let meas = meas_error.apply_adjoint(ideal_effect)?;
    prep.check_state_trace()?;
    Ok((prep, meas))
}

/// Per-gate errors, the interleaved gate's error, and the SPAM pair.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    n: usize,
    default_error: SuperOperator,
    per_gate: HashMap<CliffordElement, SuperOperator>,
    interleaved_error: SuperOperator,
    prep: PauliVector,
    meas: PauliVector,
}

impl NoiseModel {
    /// Noiseless gates with ideal `|0…0⟩` preparation and measurement.
    pub fn ideal(n: usize) -> Self {
        Self {
            n,
            default_error: SuperOperator::identity(n),
            per_gate: HashMap::new(),
            interleaved_error: SuperOperator::identity(n),
            prep: PauliVector::ground_state(n),
            meas: PauliVector::ground_state(n),
        }
    }

    /// Same error after every gate.
    pub fn uniform(error: SuperOperator) -> Result<Self> {
        error.check_trace_preserving()?;
        let n = error.qubits();
        Ok(Self {
            default_error: error,
            ..Self::ideal(n)
        })
    }

    fn check(&self, channel: &SuperOperator) -> Result<()> {
        if channel.qubits() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: channel.qubits(),
            });
        }
        channel.check_trace_preserving()
    }

    pub fn with_gate_error(mut self, gate: CliffordElement, error: SuperOperator) -> Result<Self> {
        self.check(&error)?;
        if gate.qubits() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: gate.qubits(),
            });
        }
        self.per_gate.insert(gate, error);
        Ok(self)
    }

    pub fn with_interleaved_error(mut self, error: SuperOperator) -> Result<Self> {
        self.check(&error)?;
        self.interleaved_error = error;
        Ok(self)
    }

    pub fn with_spam(mut self, prep: PauliVector, meas: PauliVector) -> Result<Self> {
        for q in [prep.qubits(), meas.qubits()] {
            if q != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: q,
                });
            }
        }
        prep.check_state_trace()?;
        self.prep = prep;
        self.meas = meas;
        Ok(self)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn default_error(&self) -> &SuperOperator {
        &self.default_error
    }

    /// Λ_i for gate `c`.
    pub fn gate_error(&self, c: &CliffordElement) -> &SuperOperator {
        self.per_gate.get(c).unwrap_or(&self.default_error)
    }

    pub fn is_gate_independent(&self) -> bool {
        self.per_gate.values().all(|e| *e == self.default_error)
    }

    pub fn interleaved_error(&self) -> &SuperOperator {
        &self.interleaved_error
    }

    pub fn prep(&self) -> &PauliVector {
        &self.prep
    }

    pub fn meas(&self) -> &PauliVector {
        &self.meas
    }
}

/// Average variation of the gate errors about their mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaDiagnostic {
    pub gamma: f64,
    /// Largest `m` with `γ² < 2/[m(m+1)]`; `None` when every `m` qualifies.
    pub max_valid_m: Option<u64>,
}

impl GammaDiagnostic {
    pub fn from_gamma(gamma: f64) -> Self {
        let g2 = gamma * gamma;
        if g2 == 0.0 {
            return Self {
                gamma,
                max_valid_m: None,
            };
        }
        let valid = |m: u64| g2 < 2.0 / (m as f64 * (m as f64 + 1.0));
        let mut m = ((-1.0 + (1.0 + 8.0 / g2).sqrt()) / 2.0).floor().max(0.0) as u64;
        while m > 0 && !valid(m) {
            m -= 1;
        }
        while valid(m + 1) {
            m += 1;
        }
        Self {
            gamma,
            max_valid_m: Some(m),
        }
    }

    /// Whether the first-order fit model is expected to hold at length `m`.
    pub fn is_valid_at(&self, m: u64) -> bool {
        self.max_valid_m.is_none_or(|max| m <= max)
    }
}

/// `γ = (1/|G|) Σ_i ‖Λ_i − Λ̄‖_F` with Λ̄ the mean error over `group`.
///
/// The Frobenius norm of the transfer-matrix difference is a computable
/// stand-in for the unspecified norm of the validity condition, so treat the
/// resulting `max_valid_m` as advisory.
pub fn gamma_variation(model: &NoiseModel, group: &[CliffordElement]) -> GammaDiagnostic {
    if group.is_empty() {
        return GammaDiagnostic::from_gamma(0.0);
    }
    let errors: Vec<&SuperOperator> = group.iter().map(|c| model.gate_error(c)).collect();
    // Offset from the first error so identical errors give an exact zero.
    let base = errors[0].matrix();
    let dd = base.nrows();
    let mut offset = DMatrix::zeros(dd, dd);
    for e in &errors {
        offset += e.matrix() - base;
    }
    let mean = base + offset / errors.len() as f64;
    let total: f64 = errors.iter().map(|e| (e.matrix() - &mean).norm()).sum();
    GammaDiagnostic::from_gamma(total / errors.len() as f64)
}

/// Declarative channel description used by experiment configuration files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    Identity,
    Depolarizing {
        p: f64,
    },
    Pauli {
        probabilities: Vec<f64>,
    },
    Overrotation {
        axis: Axis,
        epsilon: f64,
    },
    Damping {
        t1: f64,
        t2: f64,
        t_gate: f64,
    },
    /// Channels applied in list order (first entry acts first).
    Sequence {
        channels: Vec<NoiseSpec>,
    },
}


impl NoiseSpec {
    pub fn build(&self, n: usize) -> Result<SuperOperator> {
        let single = |what: &'static str| -> Result<()> {
            if n != 1 {
                return Err(Error::UnsupportedDimension { n, reason: what });
            }
            Ok(())
        };
        let channel = match self {
            NoiseSpec::Identity => {
                dense_qubits(1 << n)?;
                SuperOperator::identity(n)
            }
            NoiseSpec::Depolarizing { p } => depolarizing(*p, 1 << n)?,
            NoiseSpec::Pauli { probabilities } => pauli_channel(probabilities)?,
            NoiseSpec::Overrotation { axis, epsilon } => {
                single("over-rotation is a single-qubit channel")?;
                overrotation(*axis, *epsilon)
            }
            NoiseSpec::Damping { t1, t2, t_gate } => {
                single("damping is a single-qubit channel")?;
                damping(*t1, *t2, *t_gate)?
            }
            NoiseSpec::Sequence { channels } => {
                let mut acc = SuperOperator::identity(n);
                for c in channels {
                    acc = c.build(n)?.compose(&acc)?;
                }
                acc
            }
        };
        if channel.qubits() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: channel.qubits(),
            });
        }
        if channel.trace_preservation_deviation() > STRUCTURAL_TOL {
            return Err(Error::NotTracePreserving {
                deviation: channel.trace_preservation_deviation(),
            });
        }
        Ok(channel)
    }
}
