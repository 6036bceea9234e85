//! Channels and states in the normalized Pauli basis.
//!
//! Operators on `n` qubits are expanded in the orthonormal basis
//! `{P_i / sqrt(d)}` where `P_i` runs over `(I, X, Y, Z)^{⊗n}` in lexicographic
//! order, qubit 0 being the leftmost tensor factor. A state `ρ` becomes the
//! real vector `c_i = Tr(P_i ρ) / sqrt(d)` and a channel becomes its Pauli
//! transfer matrix `R_ij = Tr(P_i Λ(P_j)) / d`. With this normalization the
//! Hilbert-Schmidt inner product is a plain dot product, so the survival
//! probability `Tr[E Λ(ρ)]` is `e · (R c)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford::CliffordElement;
use crate::error::{Error, Result};

/// Tolerance for structural checks (trace preservation, unitarity).
pub const STRUCTURAL_TOL: f64 = 1e-10;

/// Largest qubit count for which dense transfer matrices are built.
pub const MAX_DENSE_QUBITS: usize = 3;

/// Number of qubits `n` such that `2^n == d`, if `d` is a power of two.
pub fn qubits_for_dimension(d: usize) -> Option<usize> {
    (d.is_power_of_two() && d >= 2).then(|| d.trailing_zeros() as usize)
}

/// Single-qubit Pauli matrix for digit 0..4 (I, X, Y, Z).
fn single_pauli(digit: usize) -> DMatrix<Complex64> {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let entries = match digit {
        0 => [l, o, o, l],
        1 => [o, l, l, o],
        2 => [o, -i, i, o],
        3 => [l, o, o, -l],
        _ => unreachable!("pauli digit out of range"),
    };
    DMatrix::from_row_slice(2, 2, &entries)
}

/// Base-4 digits of a Pauli index, qubit 0 first.
pub fn pauli_digits(index: usize, n: usize) -> Vec<usize> {
    (0..n).map(|q| (index >> (2 * (n - 1 - q))) & 3).collect()
}

/// Unnormalized `n`-qubit Pauli matrix with the given basis index.
pub fn pauli_matrix(index: usize, n: usize) -> DMatrix<Complex64> {
    pauli_digits(index, n)
        .into_iter()
        .fold(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)), |acc, digit| {
            acc.kronecker(&single_pauli(digit))
        })
}

/// Real coefficient vector of a Hermitian operator in the normalized Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliVector {
    n: usize,
    coefficients: DVector<f64>,
}

impl PauliVector {
    pub fn new(n: usize, coefficients: DVector<f64>) -> Result<Self> {
        let expected = 1usize << (2 * n);
        if coefficients.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coefficients.len(),
            });
        }
        Ok(Self { n, coefficients })
    }

    /// Expands a Hermitian `d × d` matrix. The anti-Hermitian part is discarded.
    pub fn from_matrix(op: &DMatrix<Complex64>) -> Result<Self> {
        let d = op.nrows();
        let n = qubits_for_dimension(d).ok_or(Error::DimensionMismatch {
            expected: d.next_power_of_two().max(2),
            found: d,
        })?;
        if op.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: op.ncols(),
            });
        }
        let norm = (d as f64).sqrt();
        let coefficients = DVector::from_iterator(
            d * d,
            (0..d * d).map(|i| (pauli_matrix(i, n) * op).trace().re / norm),
        );
        Ok(Self { n, coefficients })
    }

    /// Computational basis projector `|b⟩⟨b|`; bit `q` of `bits` is qubit `q`.
    pub fn basis_projector(n: usize, bits: usize) -> Self {
        let d = 1usize << n;
        let norm = (d as f64).sqrt();
        let coefficients = DVector::from_iterator(
            d * d,
            (0..d * d).map(|i| {
                let digits = pauli_digits(i, n);
                if digits.iter().any(|&g| g == 1 || g == 2) {
                    return 0.0;
                }
                // Product of the ±1 eigenvalues of the Z factors on |b⟩.
                let sign = digits
                    .iter()
                    .enumerate()
                    .filter(|(q, &g)| g == 3 && (bits >> q) & 1 == 1)
                    .count();
                if sign % 2 == 0 {
                    1.0 / norm
                } else {
                    -1.0 / norm
                }
            }),
        );
        Self { n, coefficients }
    }

    /// `|0…0⟩⟨0…0|`.
    pub fn ground_state(n: usize) -> Self {
        Self::basis_projector(n, 0)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        let mut coefficients = DVector::zeros(d * d);
        coefficients[0] = 1.0 / (d as f64).sqrt();
        Self { n, coefficients }
    }

    /// The identity operator, i.e. the trivial effect.
    pub fn identity_effect(n: usize) -> Self {
        let d = 1usize << n;
        let mut coefficients = DVector::zeros(d * d);
        coefficients[0] = (d as f64).sqrt();
        Self { n, coefficients }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        1 << self.n
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn trace(&self) -> f64 {
        self.coefficients[0] * (self.dimension() as f64).sqrt()
    }

    /// Hilbert-Schmidt inner product `Tr(A B)`.
    pub fn inner(&self, other: &PauliVector) -> Result<f64> {
        check_qubits(self.n, other.n)?;
        Ok(self.coefficients.dot(&other.coefficients))
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let d = self.dimension();
        let norm = (d as f64).sqrt();
        let mut out = DMatrix::zeros(d, d);
        for (i, &c) in self.coefficients.iter().enumerate() {
            if c != 0.0 {
                out += pauli_matrix(i, self.n) * Complex64::new(c / norm, 0.0);
            }
        }
        out
    }

    fn eigenvalue_range(&self) -> (f64, f64) {
        let eig = self.to_matrix().symmetric_eigenvalues();
        eig.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Unit trace check only; cheap enough for every call.
    pub fn check_state_trace(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        Ok(())
    }

    /// Full density-matrix validation: unit trace and positive semidefinite.
    pub fn validate_state(&self) -> Result<()> {
        self.check_state_trace()?;
        let (lo, _) = self.eigenvalue_range();
        if lo < -STRUCTURAL_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo}")));
        }
        Ok(())
    }

    /// Full effect validation: `0 <= E <= I`.
    pub fn validate_effect(&self) -> Result<()> {
        let (lo, hi) = self.eigenvalue_range();
        if lo < -STRUCTURAL_TOL || hi > 1.0 + STRUCTURAL_TOL {
            return Err(Error::InvalidEffect(format!(
                "eigenvalues span [{lo}, {hi}], outside [0, 1]"
            )));
        }
        Ok(())
    }
}

fn check_qubits(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A quantum channel as a `d² × d²` real Pauli transfer matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    n: usize,
    matrix: DMatrix<f64>,
}

impl SuperOperator {
    pub fn identity(n: usize) -> Self {
        let dd = 1usize << (2 * n);
        Self {
            n,
            matrix: DMatrix::identity(dd, dd),
        }
    }

    pub fn from_matrix(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let dd = 1usize << (2 * n);
        for found in [matrix.nrows(), matrix.ncols()] {
            if found != dd {
                return Err(Error::DimensionMismatch { expected: dd, found });
            }
        }
        Ok(Self { n, matrix })
    }

    /// Transfer matrix of the unitary channel `ρ ↦ U ρ U†`.
    pub fn from_unitary(u: &DMatrix<Complex64>) -> Result<Self> {
        let d = u.nrows();
        let n = qubits_for_dimension(d).ok_or(Error::DimensionMismatch {
            expected: d.next_power_of_two().max(2),
            found: d,
        })?;
        if u.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: u.ncols(),
            });
        }
        let deviation = (u.adjoint() * u - DMatrix::<Complex64>::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if deviation > STRUCTURAL_TOL {
            return Err(Error::NonUnitaryInput { deviation });
        }
        Ok(Self::from_operators(n, std::slice::from_ref(u)))
    }

    /// Transfer matrix of `ρ ↦ Σ K ρ K†`. Requires `Σ K†K = 𝟙`.
    pub fn from_kraus(kraus: &[DMatrix<Complex64>]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidConfig("no Kraus operators".into()))?;
        let d = first.nrows();
        let n = qubits_for_dimension(d).ok_or(Error::DimensionMismatch {
            expected: d.next_power_of_two().max(2),
            found: d,
        })?;
        if n > MAX_DENSE_QUBITS {
            return Err(Error::UnsupportedDimension {
                n,
                reason: "dense channels are limited to 3 qubits",
            });
        }
        let mut completeness = DMatrix::<Complex64>::zeros(d, d);
        for k in kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: if k.nrows() != d { k.nrows() } else { k.ncols() },
                });
            }
            completeness += k.adjoint() * k;
        }
        let deviation = (completeness - DMatrix::<Complex64>::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if deviation > STRUCTURAL_TOL {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self::from_operators(n, kraus))
    }

    fn from_operators(n: usize, kraus: &[DMatrix<Complex64>]) -> Self {
        let d = 1usize << n;
        let dd = d * d;
        let paulis: Vec<_> = (0..dd).map(|i| pauli_matrix(i, n)).collect();
        let mut matrix = DMatrix::zeros(dd, dd);
        for k in kraus {
            let k_dag = k.adjoint();
            for (j, pj) in paulis.iter().enumerate() {
                let image = k * pj * &k_dag;
                for (i, pi) in paulis.iter().enumerate() {
                    matrix[(i, j)] += (pi * &image).trace().re / d as f64;
                }
            }
        }
        Self { n, matrix }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        1 << self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &SuperOperator) -> Result<SuperOperator> {
        check_qubits(self.n, other.n)?;
        Ok(Self {
            n: self.n,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn apply(&self, v: &PauliVector) -> Result<PauliVector> {
        check_qubits(self.n, v.n)?;
        Ok(PauliVector {
            n: self.n,
            coefficients: &self.matrix * &v.coefficients,
        })
    }

    /// Heisenberg-picture action on an effect, `E ↦ Λ†(E)`.
    pub fn apply_adjoint(&self, v: &PauliVector) -> Result<PauliVector> {
        check_qubits(self.n, v.n)?;
        Ok(PauliVector {
            n: self.n,
            coefficients: self.matrix.tr_mul(&v.coefficients),
        })
    }

    /// In-place `v ← R v` using a caller-provided scratch buffer.
    pub(crate) fn apply_in_place(&self, v: &mut DVector<f64>, scratch: &mut DVector<f64>) {
        self.matrix.mul_to(v, scratch);
        std::mem::swap(v, scratch);
    }

    /// Largest deviation of the identity row from `(1, 0, …, 0)`.
    pub fn trace_preservation_deviation(&self) -> f64 {
        self.matrix
            .row(0)
            .iter()
            .enumerate()
            .map(|(j, &x)| if j == 0 { (x - 1.0).abs() } else { x.abs() })
            .fold(0.0, f64::max)
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preservation_deviation() <= STRUCTURAL_TOL
    }

    pub fn check_trace_preserving(&self) -> Result<()> {
        let deviation = self.trace_preservation_deviation();
        if deviation > STRUCTURAL_TOL {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(())
    }

    /// Average gate fidelity against the identity, averaged over pure states.
    pub fn average_fidelity(&self) -> Result<FidelitySummary> {
        self.check_trace_preserving()?;
        let d = self.dimension();
        let dd = (d * d) as f64;
        let p = (self.matrix.trace() - 1.0) / (dd - 1.0);
        Ok(FidelitySummary::from_depolarizing_parameter(p, d))
    }

    /// Group average `(1/|G|) Σ C ∘ Λ ∘ C†` over the given Clifford elements.
    pub fn twirl(&self, group: &[CliffordElement]) -> Result<SuperOperator> {
        let ptms = group
            .iter()
            .map(|c| c.to_superoperator())
            .collect::<Result<Vec<_>>>()?;
        self.twirl_with(&ptms)
    }

    /// Twirl over precomputed (orthogonal) transfer matrices of the group.
    pub fn twirl_with(&self, group: &[SuperOperator]) -> Result<SuperOperator> {
        let dd = self.matrix.nrows();
        let mut acc = DMatrix::zeros(dd, dd);
        for c in group {
            check_qubits(self.n, c.n)?;
            acc += &c.matrix * &self.matrix * c.matrix.transpose();
        }
        acc /= group.len().max(1) as f64;
        Ok(Self {
            n: self.n,
            matrix: acc,
        })
    }

    /// Largest entry of `RᵀR − I`.
    pub fn orthogonality_deviation(&self) -> f64 {
        let dd = self.matrix.nrows();
        (self.matrix.transpose() * &self.matrix - DMatrix::<f64>::identity(dd, dd)).amax()
    }

    /// Largest absolute difference between two transfer matrices.
    pub fn max_abs_diff(&self, other: &SuperOperator) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        (&self.matrix - &other.matrix).amax()
    }

    pub fn frobenius_distance(&self, other: &SuperOperator) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }
}

/// Tr[E Λ(ρ)] for a prepared state and measured effect.
pub fn survival_probability(
    channel: &SuperOperator,
    prep: &PauliVector,
    meas: &PauliVector,
) -> Result<f64> {
    check_qubits(channel.n, prep.n)?;
    check_qubits(channel.n, meas.n)?;
    prep.check_state_trace()?;
    let tr_e = meas.trace();
    let d = channel.dimension() as f64;
    if !(-STRUCTURAL_TOL..=d + STRUCTURAL_TOL).contains(&tr_e) {
        return Err(Error::InvalidEffect(format!(
            "trace {tr_e} outside [0, {d}]"
        )));
    }
    Ok(meas.coefficients.dot(&(&channel.matrix * &prep.coefficients)))
}

/// Consistent `(F̄, p, r)` triple of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelitySummary {
    pub average_fidelity: f64,
    pub depolarizing_parameter: f64,
    pub gate_error: f64,
}

impl FidelitySummary {
    pub fn from_depolarizing_parameter(p: f64, d: usize) -> Self {
        let d = d as f64;
        let average_fidelity = p + (1.0 - p) / d;
        Self {
            average_fidelity,
            depolarizing_parameter: p,
            gate_error: (d - 1.0) * (1.0 - p) / d,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SuperOperatorRepr {
    dimension: usize,
    matrix: Vec<Vec<f64>>,
}

impl Serialize for SuperOperator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let matrix = self
            .matrix
            .row_iter()
            .map(|row| row.iter().copied().collect())
            .collect();
        SuperOperatorRepr {
            dimension: self.dimension(),
            matrix,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SuperOperator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SuperOperatorRepr::deserialize(deserializer)?;
        let n = qubits_for_dimension(repr.dimension)
            .ok_or_else(|| D::Error::custom("dimension must be a power of two >= 2"))?;
        let dd = repr.dimension * repr.dimension;
        if repr.matrix.len() != dd || repr.matrix.iter().any(|r| r.len() != dd) {
            return Err(D::Error::custom(format!("matrix must be {dd}x{dd}")));
        }
        let flat: Vec<f64> = repr.matrix.into_iter().flatten().collect();
        Ok(Self {
            n,
            matrix: DMatrix::from_row_slice(dd, dd, &flat),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::noise;

    #[test]
    fn kraus_amplitude_damping_matches_closed_form() {
        let (t1, t): (f64, f64) = (5e-6, 1e-6);
        let gamma = 1.0 - (-t / t1).exp();
        let c = |re: f64| Complex64::new(re, 0.0);
        let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt())]);
        let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(gamma.sqrt()), c(0.0), c(0.0)]);
        let from_kraus = SuperOperator::from_kraus(&[k0.clone(), k1]).unwrap();
        let closed = crate::noise::damping(t1, 2.0 * t1, t).unwrap();
        assert!(from_kraus.max_abs_diff(&closed) < 1e-12);
        assert!(matches!(
            SuperOperator::from_kraus(&[k0]),
            Err(Error::NotTracePreserving { .. })
        ));
        assert!(SuperOperator::from_kraus(&[]).is_err());
    }

    #[test]
    fn identity_unitary_gives_identity_ptm() {
        let u = DMatrix::<Complex64>::identity(2, 2);
        let r = SuperOperator::from_unitary(&u).unwrap();
        assert!(r.max_abs_diff(&SuperOperator::identity(1)) < 1e-12);
    }

    #[test]
    fn pauli_x_flips_y_and_z() {
        let r = SuperOperator::from_unitary(&gates::rotation(gates::Axis::X, std::f64::consts::PI))
            .unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        assert!((r.matrix() - expected).amax() < 1e-12);
    }

    #[test]
    fn non_unitary_rejected() {
        let mut u = DMatrix::<Complex64>::identity(2, 2);
        u[(0, 0)] = Complex64::new(1.1, 0.0);
        assert!(matches!(
            SuperOperator::from_unitary(&u),
            Err(Error::NonUnitaryInput { .. })
        ));
    }

    #[test]
    fn compose_rejects_mismatched_qubits() {
        let a = SuperOperator::identity(1);
        let b = SuperOperator::identity(2);
        assert!(matches!(
            a.compose(&b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(a.apply(&PauliVector::ground_state(2)).is_err());
    }

    #[test]
    fn half_rotations_cancel() {
        let plus = SuperOperator::from_unitary(&gates::rotation(gates::Axis::X, std::f64::consts::FRAC_PI_2)).unwrap();
        let minus = SuperOperator::from_unitary(&gates::rotation(gates::Axis::X, -std::f64::consts::FRAC_PI_2)).unwrap();
        assert!(plus.compose(&minus).unwrap().max_abs_diff(&SuperOperator::identity(1)) < 1e-12);
    }

    #[test]
    fn ground_state_has_unit_trace_and_matches_matrix() {
        for n in 1..=3 {
            let g = PauliVector::ground_state(n);
            assert!((g.trace() - 1.0).abs() < 1e-12);
            let m = g.to_matrix();
            assert!((m[(0, 0)].re - 1.0).abs() < 1e-12);
            assert!((m.iter().map(|z| z.norm()).sum::<f64>() - 1.0).abs() < 1e-12);
            g.validate_state().unwrap();
            g.validate_effect().unwrap();
        }
    }

    #[test]
    fn basis_projector_round_trips_through_matrix() {
        let v = PauliVector::basis_projector(2, 0b10);
        let back = PauliVector::from_matrix(&v.to_matrix()).unwrap();
        assert!((v.coefficients() - back.coefficients()).amax() < 1e-12);
        // qubit 1 set: |01⟩ in qubit-0-leftmost ordering is row 1.
        assert!((v.to_matrix()[(1, 1)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bit_flip_and_full_depolarization() {
        let x = SuperOperator::from_unitary(&gates::rotation(gates::Axis::X, std::f64::consts::PI)).unwrap();
        let zero = PauliVector::ground_state(1);
        let one = PauliVector::basis_projector(1, 1);
        let out = x.apply(&zero).unwrap();
        assert!((out.coefficients() - one.coefficients()).amax() < 1e-12);

        let dep = noise::depolarizing(0.0, 2).unwrap();
        let mixed = dep.apply(&zero).unwrap();
        assert!((mixed.coefficients() - PauliVector::maximally_mixed(1).coefficients()).amax() < 1e-15);
    }

    #[test]
    fn survival_examples() {
        let zero = PauliVector::ground_state(1);
        let id = SuperOperator::identity(1);
        assert!((survival_probability(&id, &zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        let x = SuperOperator::from_unitary(&gates::rotation(gates::Axis::X, std::f64::consts::PI)).unwrap();
        assert!(survival_probability(&x, &zero, &zero).unwrap().abs() < 1e-12);
    }

    #[test]
    fn survival_depolarizing_matches_dense_oracle() {
        // Dense oracle: ρ' = pρ + (1-p)I/2, then Tr(E ρ') with explicit matrices.
        let zero = PauliVector::ground_state(1);
        for &p in &[0.0, 0.3, 0.9, 0.984, 1.0] {
            let dep = noise::depolarizing(p, 2).unwrap();
            let rho = zero.to_matrix();
            let out = rho.clone() * Complex64::new(p, 0.0)
                + DMatrix::<Complex64>::identity(2, 2) * Complex64::new((1.0 - p) / 2.0, 0.0);
            let dense = (rho * out).trace().re;
            let got = survival_probability(&dep, &zero, &zero).unwrap();
            assert!((got - dense).abs() < 1e-12);
            assert!((got - (1.0 + p) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn survival_rejects_bad_inputs() {
        let id = SuperOperator::identity(1);
        let zero = PauliVector::ground_state(1);
        let bad_state = PauliVector::identity_effect(1);
        assert!(matches!(
            survival_probability(&id, &bad_state, &zero),
            Err(Error::InvalidState(_))
        ));
        let huge = PauliVector::new(1, DVector::from_vec(vec![5.0, 0.0, 0.0, 0.0])).unwrap();
        assert!(matches!(
            survival_probability(&id, &zero, &huge),
            Err(Error::InvalidEffect(_))
        ));
        assert!(huge.validate_effect().is_err());
    }

    #[test]
    fn fidelity_of_identity_and_depolarizing() {
        let f = SuperOperator::identity(1).average_fidelity().unwrap();
        assert_eq!(f.average_fidelity, 1.0);
        assert_eq!(f.depolarizing_parameter, 1.0);
        assert_eq!(f.gate_error, 0.0);
        let f = noise::depolarizing(0.984, 2).unwrap().average_fidelity().unwrap();
        assert!((f.gate_error - 0.008).abs() < 1e-12);
    }

    #[test]
    fn fidelity_requires_trace_preservation() {
        let mut m = DMatrix::identity(4, 4);
        m[(0, 3)] = 0.1;
        let r = SuperOperator::from_matrix(1, m).unwrap();
        assert!(matches!(
            r.average_fidelity(),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn json_shape_is_dimension_plus_rows() {
        let r = noise::depolarizing(0.5, 2).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["dimension"], 2);
        assert_eq!(v["matrix"].as_array().unwrap().len(), 4);
        assert_eq!(v["matrix"][1][1], 0.5);
        let back: SuperOperator = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<SuperOperator>(r#"{"dimension":3,"matrix":[]}"#).is_err());
    }
}
