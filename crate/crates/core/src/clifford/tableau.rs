use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{SuperOperator, MAX_DENSE_QUBITS};

/// Largest register the bit-packed tableau supports.
pub const MAX_TABLEAU_QUBITS: usize = 64;

/// A Hermitian Pauli operator `(-1)^sign ⊗_q σ(x_q, z_q)`.
///
/// Bit `q` of `x`/`z` belongs to qubit `q`. `σ(1,1)` is `Y`, not `XZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliRow {
    pub x: u64,
    pub z: u64,
    pub sign: bool,
}

impl PauliRow {
    pub const IDENTITY: PauliRow = PauliRow {
        x: 0,
        z: 0,
        sign: false,
    };

    pub fn x_on(q: usize) -> Self {
        Self {
            x: 1 << q,
            z: 0,
            sign: false,
        }
    }

    pub fn z_on(q: usize) -> Self {
        Self {
            x: 0,
            z: 1 << q,
            sign: false,
        }
    }

    /// Index in the lexicographic `(I,X,Y,Z)^{⊗n}` basis, qubit 0 most significant.
    pub fn basis_index(&self, n: usize) -> usize {
        (0..n).fold(0, |acc, q| {
            let digit = match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 0,
                (1, 0) => 1,
                (1, 1) => 2,
                _ => 3,
            };
            acc | digit << (2 * (n - 1 - q))
        })
    }

    pub fn from_basis_index(index: usize, n: usize) -> Self {
        let mut row = Self::IDENTITY;
        for q in 0..n {
            let (x, z) = match (index >> (2 * (n - 1 - q))) & 3 {
                0 => (0, 0),
                1 => (1, 0),
                2 => (1, 1),
                _ => (0, 1),
            };
            row.x |= x << q;
            row.z |= z << q;
        }
        row
    }

    /// Symplectic product: 1 when the two Paulis anticommute.
    pub fn anticommutes(&self, other: &PauliRow) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 1
    }
}

/// Exponent `k` (mod 4) in `σ_a σ_b = i^k σ_{a⊕b}` summed over qubits.
fn product_phase(ax: u64, az: u64, bx: u64, bz: u64) -> i32 {
    let (a_x, a_y, a_z) = (ax & !az, ax & az, !ax & az);
    let (b_x, b_y, b_z) = (bx & !bz, bx & bz, !bx & bz);
    let plus = (a_x & b_y) | (a_y & b_z) | (a_z & b_x);
    let minus = (a_x & b_z) | (a_y & b_x) | (a_z & b_y);
    plus.count_ones() as i32 - minus.count_ones() as i32
}

/// An `n`-qubit Clifford, modulo global phase, stored as its stabilizer tableau.
///
/// Row `j < n` is the image of `X_j` under conjugation, row `n + j` the image
/// of `Z_j`. The sign bits of the rows are the tableau phases.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CliffordElement {
    n: usize,
    rows: Vec<PauliRow>,
}

pub(crate) fn check_tableau_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_TABLEAU_QUBITS {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "tableau supports 1..=64 qubits",
        });
    }
    Ok(())
}

impl CliffordElement {
    pub fn identity(n: usize) -> Self {
        assert!(
            (1..=MAX_TABLEAU_QUBITS).contains(&n),
            "qubit count {n} out of range"
        );
        let rows = (0..n)
            .map(PauliRow::x_on)
            .chain((0..n).map(PauliRow::z_on))
            .collect();
        Self { n, rows }
    }

    /// Builds an element from its `2n` generator images; checks symplecticity.
    pub fn from_rows(n: usize, rows: Vec<PauliRow>) -> Result<Self> {
        check_tableau_qubits(n)?;
        if rows.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: rows.len(),
            });
        }
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        if rows.iter().any(|r| r.x & !mask != 0 || r.z & !mask != 0) {
            return Err(Error::Parse("tableau row has bits beyond qubit count".into()));
        }
        let element = Self { n, rows };
        if !element.is_symplectic() {
            return Err(Error::Parse("tableau is not symplectic".into()));
        }
        Ok(element)
    }

    pub(crate) fn from_rows_unchecked(n: usize, rows: Vec<PauliRow>) -> Self {
        Self { n, rows }
    }

    /// Reads the conjugation action of a Clifford unitary (`n <= 3`).
    pub fn from_unitary(u: &DMatrix<Complex64>) -> Result<Self> {
        let ptm = SuperOperator::from_unitary(u)?;
        let n = ptm.qubits();
        let m = ptm.matrix();
        let mut rows = Vec::with_capacity(2 * n);
        for generator in (0..n).map(PauliRow::x_on).chain((0..n).map(PauliRow::z_on)) {
            let column = m.column(generator.basis_index(n));
            let (k, &value) = column
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .expect("non-empty column");
            if (value.abs() - 1.0).abs() > 1e-9 {
                return Err(Error::Parse("unitary is not a Clifford".into()));
            }
            let mut row = PauliRow::from_basis_index(k, n);
            row.sign = value < 0.0;
            rows.push(row);
        }
        Self::from_rows(n, rows)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[PauliRow] {
        &self.rows
    }

    pub fn image_of_x(&self, q: usize) -> PauliRow {
        self.rows[q]
    }

    pub fn image_of_z(&self, q: usize) -> PauliRow {
        self.rows[self.n + q]
    }

    pub fn phases(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.sign).collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    /// Checks that the rows obey the canonical commutation relations,
    /// i.e. the binary tableau satisfies `M Ω Mᵀ = Ω`.
    pub fn is_symplectic(&self) -> bool {
        let n = self.n;
        (0..2 * n).all(|i| {
            (i..2 * n).all(|j| {
                let expected = j == i + n && i < n;
                self.rows[i].anticommutes(&self.rows[j]) == expected
            })
        })
    }

    /// `U P U†` for a Hermitian Pauli `P`.
    pub fn conjugate(&self, pauli: &PauliRow) -> PauliRow {
        // Y = i X Z, so σ(x,z) = i^{x·z} X^x Z^z.
        let mut phase = (pauli.x & pauli.z).count_ones() as i32 + if pauli.sign { 2 } else { 0 };
        let (mut x, mut z) = (0u64, 0u64);
        let mut multiply = |row: &PauliRow| {
            phase += product_phase(x, z, row.x, row.z) + if row.sign { 2 } else { 0 };
            x ^= row.x;
            z ^= row.z;
        };
        for q in 0..self.n {
            if (pauli.x >> q) & 1 == 1 {
                multiply(&self.rows[q]);
            }
            if (pauli.z >> q) & 1 == 1 {
                multiply(&self.rows[self.n + q]);
            }
        }
        let phase = phase.rem_euclid(4);
        debug_assert!(phase % 2 == 0, "conjugated Pauli must stay Hermitian");
        PauliRow {
            x,
            z,
            sign: phase == 2,
        }
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &CliffordElement) -> Result<CliffordElement> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let rows = other.rows.iter().map(|r| self.conjugate(r)).collect();
        let out = Self { n: self.n, rows };
        debug_assert!(out.is_symplectic());
        Ok(out)
    }

    /// Inverse via the symplectic identity `M⁻¹ = Ω Mᵀ Ω`, then sign repair.
    pub fn inverse(&self) -> CliffordElement {
        let n = self.n;
        let bit = |v: u64, q: usize| (v >> q) & 1;
        let mut rows = Vec::with_capacity(2 * n);
        for j in 0..n {
            // Preimage of X_j.
            let mut row = PauliRow::IDENTITY;
            for k in 0..n {
                row.x |= bit(self.rows[n + k].z, j) << k;
                row.z |= bit(self.rows[k].z, j) << k;
            }
            rows.push(row);
        }
        for j in 0..n {
            // Preimage of Z_j.
            let mut row = PauliRow::IDENTITY;
            for k in 0..n {
                row.x |= bit(self.rows[n + k].x, j) << k;
                row.z |= bit(self.rows[k].x, j) << k;
            }
            rows.push(row);
        }
        for row in rows.iter_mut() {
            row.sign = self.conjugate(row).sign;
        }
        let out = Self { n, rows };
        debug_assert!(out.is_symplectic());
        out
    }

    /// Signed-permutation transfer matrix of the element (`n <= 3`).
    pub fn to_superoperator(&self) -> Result<SuperOperator> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::UnsupportedDimension {
                n: self.n,
                reason: "dense transfer matrices are limited to 3 qubits",
            });
        }
        let dd = 1usize << (2 * self.n);
        let mut m = DMatrix::zeros(dd, dd);
        for j in 0..dd {
            let image = self.conjugate(&PauliRow::from_basis_index(j, self.n));
            m[(image.basis_index(self.n), j)] = if image.sign { -1.0 } else { 1.0 };
        }
        SuperOperator::from_matrix(self.n, m)
    }

    /// Single-qubit Clifford `local` acting on qubit `q` of an `n`-qubit register.
    pub fn embed(local: &CliffordElement, q: usize, n: usize) -> Result<CliffordElement> {
        if local.n != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: local.n,
            });
        }
        check_tableau_qubits(n)?;
        if q >= n {
            return Err(Error::InvalidConfig(format!("qubit {q} outside register of {n}")));
        }
        let lift = |r: PauliRow| PauliRow {
            x: r.x << q,
            z: r.z << q,
            sign: r.sign,
        };
        let mut out = Self::identity(n);
        out.rows[q] = lift(local.rows[0]);
        out.rows[n + q] = lift(local.rows[1]);
        Ok(out)
    }

    pub fn hadamard(q: usize, n: usize) -> Result<Self> {
        Self::embed(&named::single("H").expect("known gate"), q, n)
    }

    pub fn phase(q: usize, n: usize) -> Result<Self> {
        Self::embed(&named::single("S").expect("known gate"), q, n)
    }

    pub fn cnot(control: usize, target: usize, n: usize) -> Result<Self> {
        check_tableau_qubits(n)?;
        if control >= n || target >= n || control == target {
            return Err(Error::InvalidConfig(format!(
                "invalid CNOT({control}, {target}) on {n} qubits"
            )));
        }
        let mut out = Self::identity(n);
        out.rows[control].x |= 1 << target;
        out.rows[n + target].z |= 1 << control;
        Ok(out)
    }

    /// Looks up a gate by name (`X90`, `H`, `CNOT`, …) or parses the hex form.
    pub fn parse_gate(spec: &str, n: usize) -> Result<Self> {
        if spec.contains(':') {
            let element: Self = spec.parse()?;
            if element.n != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: element.n,
                });
            }
            return Ok(element);
        }
        named::lookup(spec, n)
    }
}

/// Gates addressable by name.
pub mod named {
    use super::*;
    use crate::gates::{self, Axis};
    use std::f64::consts::{FRAC_PI_2, PI};

    pub const SINGLE_QUBIT_NAMES: &[&str] = &[
        "I", "X", "Y", "Z", "H", "S", "Sdg", "X90", "Xm90", "X180", "Y90", "Ym90", "Y180",
        "Z90", "Zm90", "Z180",
    ];

    pub fn single_unitary(name: &str) -> Option<DMatrix<Complex64>> {
        let rot = |axis, angle| Some(gates::rotation(axis, angle));
        match name {
            "I" => Some(DMatrix::identity(2, 2)),
            "X" | "X180" => rot(Axis::X, PI),
            "Y" | "Y180" => rot(Axis::Y, PI),
            "Z" | "Z180" => rot(Axis::Z, PI),
            "X90" => rot(Axis::X, FRAC_PI_2),
            "Xm90" => rot(Axis::X, -FRAC_PI_2),
            "Y90" => rot(Axis::Y, FRAC_PI_2),
            "Ym90" => rot(Axis::Y, -FRAC_PI_2),
            "Z90" => rot(Axis::Z, FRAC_PI_2),
            "Zm90" => rot(Axis::Z, -FRAC_PI_2),
            "H" => Some(gates::hadamard()),
            "S" => Some(gates::phase()),
            "Sdg" => Some(gates::phase().adjoint()),
            _ => None,
        }
    }

    pub fn single(name: &str) -> Option<CliffordElement> {
        single_unitary(name).map(|u| CliffordElement::from_unitary(&u).expect("named gates are Clifford"))
    }

    pub fn lookup(name: &str, n: usize) -> Result<CliffordElement> {
        let unknown = || Error::Parse(format!("unknown gate '{name}' for {n} qubit(s)"));
        if n == 1 {
            return single(name).ok_or_else(unknown);
        }
        match (name, n) {
            ("CNOT" | "CX", 2) => CliffordElement::cnot(0, 1, 2),
            ("CZ", 2) => {
                let h = CliffordElement::hadamard(1, 2)?;
                h.compose(&CliffordElement::cnot(0, 1, 2)?)?.compose(&h)
            }
            ("I", _) => Ok(CliffordElement::identity(n)),
            _ => Err(unknown()),
        }
    }
}

fn hex_width(bits: usize) -> usize {
    bits.div_ceil(4)
}

/// Reverses the low `n` bits so qubit 0 becomes the most significant.
fn msb_first(v: u64, n: usize) -> u128 {
    (0..n).fold(0u128, |acc, q| acc << 1 | ((v >> q) & 1) as u128)
}

fn lsb_first(v: u128, n: usize) -> u64 {
    (0..n).fold(0u64, |acc, q| acc | (((v >> (n - 1 - q)) & 1) as u64) << q)
}

/// Text form `n:row.row.…/phases`.
///
/// Each row is the `2n`-bit string `x_0…x_{n-1} z_0…z_{n-1}` in hex, and
/// `phases` is the `2n`-bit string of row signs, row 0 first.
impl fmt::Display for CliffordElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n;
        let width = hex_width(2 * n);
        write!(f, "{n}:")?;
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            let value = msb_first(row.x, n) << n | msb_first(row.z, n);
            write!(f, "{value:0width$x}")?;
        }
        let phases = self
            .rows
            .iter()
            .fold(0u128, |acc, r| acc << 1 | r.sign as u128);
        write!(f, "/{phases:0width$x}")
    }
}

impl FromStr for CliffordElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("clifford '{s}': {why}"));
        let (n, rest) = s.trim().split_once(':').ok_or_else(|| bad("missing 'n:' prefix"))?;
        let n: usize = n.parse().map_err(|_| bad("qubit count"))?;
        check_tableau_qubits(n)?;
        let (rows, phases) = rest.split_once('/').ok_or_else(|| bad("missing '/phases'"))?;
        let phases = u128::from_str_radix(phases, 16).map_err(|_| bad("phase hex"))?;
        let full = if n == 64 { u128::MAX } else { (1u128 << (2 * n)) - 1 };
        if phases & !full != 0 {
            return Err(bad("phase bits exceed 2n"));
        }
        let rows = rows
            .split('.')
            .enumerate()
            .map(|(i, h)| {
                let v = u128::from_str_radix(h, 16).map_err(|_| bad("row hex"))?;
                if v & !full != 0 {
                    return Err(bad("row bits exceed 2n"));
                }
                let mask = (1u128 << n) - 1;
                Ok(PauliRow {
                    x: lsb_first(v >> n, n),
                    z: lsb_first(v & mask, n),
                    sign: (phases >> (2 * n - 1 - i)) & 1 == 1,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        CliffordElement::from_rows(n, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_hex_form() {
        assert_eq!(CliffordElement::identity(1).to_string(), "1:2.1/0");
        let back: CliffordElement = "1:2.1/0".parse().unwrap();
        assert!(back.is_identity());
    }

    #[test]
    fn x90_inverse_is_xm90() {
        let x90 = named::single("X90").unwrap();
        let xm90 = named::single("Xm90").unwrap();
        assert_eq!(x90.inverse(), xm90);
        assert!(x90.compose(&xm90).unwrap().is_identity());
        assert_eq!(CliffordElement::identity(3).inverse(), CliffordElement::identity(3));
    }

    #[test]
    fn x90_conjugation_rules() {
        let x90 = named::single("X90").unwrap();
        assert_eq!(x90.image_of_x(0), PauliRow::x_on(0));
        // Z -> -Y
        assert_eq!(
            x90.image_of_z(0),
            PauliRow {
                x: 1,
                z: 1,
                sign: true
            }
        );
    }

    #[test]
    fn hadamard_superoperator_swaps_x_and_z() {
        let h = CliffordElement::hadamard(0, 1).unwrap().to_superoperator().unwrap();
        let m = h.matrix();
        assert_eq!(m[(3, 1)], 1.0);
        assert_eq!(m[(1, 3)], 1.0);
        assert_eq!(m[(2, 2)], -1.0);
        assert_eq!(m[(0, 0)], 1.0);
    }

    #[test]
    fn superoperator_matches_unitary_ptm() {
        for name in named::SINGLE_QUBIT_NAMES {
            let u = named::single_unitary(name).unwrap();
            let from_tableau = named::single(name).unwrap().to_superoperator().unwrap();
            let direct = SuperOperator::from_unitary(&u).unwrap();
            assert!(from_tableau.max_abs_diff(&direct) < 1e-12, "{name}");
        }
        let cnot = CliffordElement::cnot(0, 1, 2).unwrap();
        let direct = SuperOperator::from_unitary(&gates::cnot()).unwrap();
        assert!(cnot.to_superoperator().unwrap().max_abs_diff(&direct) < 1e-12);
        assert_eq!(CliffordElement::from_unitary(&gates::cnot()).unwrap(), cnot);
    }

    #[test]
    fn embedded_gates_match_dense_embedding() {
        let n = 3;
        for q in 0..n {
            let h = CliffordElement::hadamard(q, n).unwrap();
            let dense = CliffordElement::from_unitary(&gates::embed(&gates::hadamard(), q, n)).unwrap();
            assert_eq!(h, dense);
        }
    }

    #[test]
    fn rejects_non_symplectic_rows() {
        let rows = vec![PauliRow::x_on(0), PauliRow::x_on(0)];
        assert!(CliffordElement::from_rows(1, rows).is_err());
        assert!(CliffordElement::from_rows(0, vec![]).is_err());
    }

    #[test]
    fn dense_limit_enforced() {
        assert!(matches!(
            CliffordElement::identity(4).to_superoperator(),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn compose_dimension_mismatch() {
        assert!(CliffordElement::identity(1)
            .compose(&CliffordElement::identity(2))
            .is_err());
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "1:2.1", "x:2.1/0", "1:2.2/0", "1:2.1/f", "1:zz.1/0"] {
            assert!(bad.parse::<CliffordElement>().is_err(), "{bad}");
        }
        assert!(CliffordElement::parse_gate("CNOT", 1).is_err());
        assert!(CliffordElement::parse_gate("1:2.1/0", 2).is_err());
    }

    fn random_word(n: usize, len: usize, rng: &mut ChaCha8Rng) -> CliffordElement {
        let mut c = CliffordElement::identity(n);
        for _ in 0..len {
            let g = match rng.random_range(0..3) {
                0 => CliffordElement::hadamard(rng.random_range(0..n), n).unwrap(),
                1 => CliffordElement::phase(rng.random_range(0..n), n).unwrap(),
                _ if n > 1 => {
                    let a = rng.random_range(0..n);
                    let b = (a + rng.random_range(1..n)) % n;
                    CliffordElement::cnot(a, b, n).unwrap()
                }
                _ => CliffordElement::hadamard(0, n).unwrap(),
            };
            c = g.compose(&c).unwrap();
        }
        c
    }

    #[test]
    fn tableau_matches_dense_unitary_products() {
        // Independent route: multiply dense unitaries and read the tableau back.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..=3);
            let mut tableau = CliffordElement::identity(n);
            let d = 1 << n;
            let mut u = DMatrix::<Complex64>::identity(d, d);
            for _ in 0..12 {
                let q = rng.random_range(0..n);
                let (g, dense) = match rng.random_range(0..3) {
                    0 => (CliffordElement::hadamard(q, n).unwrap(), gates::embed(&gates::hadamard(), q, n)),
                    1 => (CliffordElement::phase(q, n).unwrap(), gates::embed(&gates::phase(), q, n)),
                    _ => {
                        let g = named::single("Y90").unwrap();
                        (
                            CliffordElement::embed(&g, q, n).unwrap(),
                            gates::embed(&named::single_unitary("Y90").unwrap(), q, n),
                        )
                    }
                };
                tableau = g.compose(&tableau).unwrap();
                u = dense * u;
            }
            assert_eq!(tableau, CliffordElement::from_unitary(&u).unwrap());
        }
    }

    #[test]
    fn display_round_trip_and_inverse_on_large_registers() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 8, 16, 33, 64] {
            let c = random_word(n, 6 * n, &mut rng);
            assert!(c.is_symplectic());
            let back: CliffordElement = c.to_string().parse().unwrap();
            assert_eq!(back, c);
            assert!(c.compose(&c.inverse()).unwrap().is_identity());
            assert!(c.inverse().compose(&c).unwrap().is_identity());
        }
    }
}
