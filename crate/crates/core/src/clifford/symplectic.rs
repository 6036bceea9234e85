//! Uniform random symplectic matrices over GF(2).
//!
//! Follows the Hadamard-free decomposition of Bravyi and Maslov: a quantum
//! Mallows permutation with a Hadamard layer sandwiched between two random
//! Hadamard-free layers. The result is uniform over `Sp(2n, 2)`; adding
//! independent uniform sign bits gives a uniform Clifford modulo global phase.
// Index loops mirror the GF(2) matrix formulas.
#![allow(clippy::needless_range_loop)]

use rand::Rng;

use super::tableau::{CliffordElement, PauliRow};

type BitMatrix = Vec<Vec<bool>>;

fn zeros(rows: usize, cols: usize) -> BitMatrix {
    vec![vec![false; cols]; rows]
}

fn matmul(a: &BitMatrix, b: &BitMatrix) -> BitMatrix {
    let (rows, inner, cols) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(rows, cols);
    for i in 0..rows {
        for k in 0..inner {
            if a[i][k] {
                for j in 0..cols {
                    out[i][j] ^= b[k][j];
                }
            }
        }
    }
    out
}

fn transpose(a: &BitMatrix) -> BitMatrix {
    let mut out = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[j][i] = v;
        }
    }
    out
}

/// Inverse of a unit lower-triangular matrix by forward substitution.
fn inverse_unit_lower(l: &BitMatrix) -> BitMatrix {
    let n = l.len();
    let mut inv = zeros(n, n);
    for col in 0..n {
        for row in 0..n {
            let mut v = row == col;
            for k in 0..row {
                v ^= l[row][k] & inv[k][col];
            }
            inv[row][col] = v;
        }
    }
    inv
}

/// Quantum Mallows sample: Hadamard flags and a permutation.
fn sample_qmallows<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (Vec<bool>, Vec<usize>) {
    let mut had = vec![false; n];
    let mut perm = vec![0; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let m = n - i;
        let eps = 4f64.powi(-(m as i32));
        let r: f64 = rng.random();
        let index = (-(r + (1.0 - r) * eps).log2().ceil()) as usize;
        had[i] = index < m;
        let k = if index < m { index } else { 2 * m - index - 1 };
        perm[i] = remaining.remove(k);
    }
    (had, perm)
}

fn random_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitMatrix {
    let mut m = zeros(n, n);
    for i in 0..n {
        m[i][i] = rng.random();
        for j in 0..i {
            m[i][j] = rng.random();
            m[j][i] = m[i][j];
        }
    }
    m
}

fn random_unit_lower<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitMatrix {
    let mut m = zeros(n, n);
    for i in 0..n {
        m[i][i] = true;
        for j in 0..i {
            m[i][j] = rng.random();
        }
    }
    m
}

/// `[[delta, 0], [gamma·delta, delta⁻ᵀ]]`.
fn hadamard_free_layer<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitMatrix {
    let gamma = random_symmetric(n, rng);
    let delta = random_unit_lower(n, rng);
    let prod = matmul(&gamma, &delta);
    let inv_t = transpose(&inverse_unit_lower(&delta));
    let mut out = zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            out[i][j] = delta[i][j];
            out[n + i][j] = prod[i][j];
            out[n + i][n + j] = inv_t[i][j];
        }
    }
    out
}

/// Uniform `2n × 2n` symplectic matrix; row `i` is `[x | z]` of generator image `i`.
pub(crate) fn random_symplectic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitMatrix {
    let (had, perm) = sample_qmallows(n, rng);
    let outer = hadamard_free_layer(n, rng);
    let inner = hadamard_free_layer(n, rng);

    let mut table = zeros(2 * n, 2 * n);
    for i in 0..n {
        table[i] = inner[perm[i]].clone();
        table[n + i] = inner[n + perm[i]].clone();
    }
    for (i, &h) in had.iter().enumerate() {
        if h {
            table.swap(i, n + i);
        }
    }
    matmul(&outer, &table)
}

/// Uniform random Clifford from the symplectic construction plus random signs.
pub(crate) fn random_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CliffordElement {
    let m = random_symplectic(n, rng);
    let rows = m
        .iter()
        .map(|bits| {
            let mut row = PauliRow::IDENTITY;
            for q in 0..n {
                row.x |= (bits[q] as u64) << q;
                row.z |= (bits[n + q] as u64) << q;
            }
            row.sign = rng.random();
            row
        })
        .collect();
    let element = CliffordElement::from_rows_unchecked(n, rows);
    debug_assert!(element.is_symplectic());
    element
}
