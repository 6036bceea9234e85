//! Dense unitaries for the gates used across the crate.
//!
//! Multi-qubit matrices use qubit 0 as the leftmost tensor factor.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(alias = "x")]
    X,
    #[serde(alias = "y")]
    Y,
    #[serde(alias = "z")]
    Z,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(-i θ σ/2)` about the given axis.
pub fn rotation(axis: Axis, theta: f64) -> DMatrix<Complex64> {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let entries = match axis {
        Axis::X => [c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)],
        Axis::Y => [c(co, 0.0), c(-si, 0.0), c(si, 0.0), c(co, 0.0)],
        Axis::Z => [c(co, -si), c(0.0, 0.0), c(0.0, 0.0), c(co, si)],
    };
    DMatrix::from_row_slice(2, 2, &entries)
}

pub fn hadamard() -> DMatrix<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
}

pub fn phase() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
}

/// Controlled-NOT on two qubits, control = qubit 0.
pub fn cnot() -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(2, 3)] = c(1.0, 0.0);
    m[(3, 2)] = c(1.0, 0.0);
    m
}

/// Places a single-qubit unitary on qubit `q` of an `n`-qubit register.
pub fn embed(single: &DMatrix<Complex64>, q: usize, n: usize) -> DMatrix<Complex64> {
    let id = DMatrix::<Complex64>::identity(2, 2);
    (0..n).fold(DMatrix::from_element(1, 1, c(1.0, 0.0)), |acc, k| {
        acc.kronecker(if k == q { single } else { &id })
    })
}

/// Largest entry of `|U V†|` off a global phase, zero iff `U ∝ V`.
pub fn phase_distance(u: &DMatrix<Complex64>, v: &DMatrix<Complex64>) -> f64 {
    let d = u.nrows() as f64;
    let overlap = (v.adjoint() * u).trace() / d;
    if overlap.norm() < 1e-12 {
        return f64::INFINITY;
    }
    let phase = overlap / overlap.norm();
    (u - v * phase).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
