//! Randomized and interleaved randomized benchmarking.
//!
//! Cliffords are exact stabilizer tableaus; channels are Pauli transfer
//! matrices on up to three qubits. [`protocol`] generates and simulates
//! benchmarking sequences, [`fit`] extracts decay parameters, and
//! [`estimate`] turns them into a gate error with a guaranteed interval.
//! [`study`] ties the pieces to JSON configuration files.
//!
//! ```
//! use irb::estimate::{interleaved_gate_error, theoretical_overrotation_error};
//!
//! # fn main() -> irb::Result<()> {
//! let r = interleaved_gate_error(0.984, 0.978, 2)?;
//! assert_eq!(format!("{r:.3}"), "0.003");
//! assert_eq!(format!("{:.3}", theoretical_overrotation_error(std::f64::consts::PI / 10.0)), "0.016");
//! # Ok(())
//! # }
//! ```

pub mod clifford;
pub mod error;
pub mod estimate;
pub mod fit;
pub mod gates;
pub mod noise;
pub mod pauli;
pub mod protocol;
pub mod study;

pub use error::{Error, Result};

/// Book chapters, compiled so their snippets run as doc-tests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../README.md")]
    pub mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/transfer-matrices.md")]
    pub mod transfer_matrices {}
    #[doc = include_str!("../../../book/src/cliffords.md")]
    pub mod cliffords {}
    #[doc = include_str!("../../../book/src/noise.md")]
    pub mod noise {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    pub mod protocol {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    pub mod fitting {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    pub mod bounds {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    pub mod configuration {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
