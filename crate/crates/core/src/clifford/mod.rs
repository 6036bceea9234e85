//! Exact Clifford-group arithmetic on stabilizer tableaus.
//!
//! Composition and inversion are polynomial in the qubit count, which is
//! what makes the recovery gate of a benchmarking sequence cheap to find.
//! One- and two-qubit groups are also enumerated in full.

mod decompose;
mod group;
mod symplectic;
mod tableau;

pub use decompose::{
    average_minimal_length, decompose_minimal, minimal_length_histogram, minimal_words, Pulse,
    PulseSequence,
};
pub use group::{enumerate, group, sample_uniform, CliffordGroup};
pub use tableau::{named, CliffordElement, PauliRow, MAX_TABLEAU_QUBITS};
