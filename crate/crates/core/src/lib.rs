//! Sparse generalized inverses by 1-norm minimization.
//!
//! Given `A`, find `H` with small `‖H‖₁` satisfying chosen Moore-Penrose
//! properties: `AHA = A` (P1), `HAH = H` (P2), `AH` symmetric (P3), `HA`
//! symmetric (P4). P1, P3 and P4 are linear in `H` and solved exactly by
//! the simplex method in [`lp`]; P2 is relaxed by lifting to positive
//! semidefinite blocks in [`sdp`]. [`pseudo`] names the variants and
//! [`bench`] generates random low-rank test matrices and scores results.

pub mod bench;
pub mod densela;
pub mod error;
pub mod io;
pub mod lp;
pub mod pseudo;
pub mod sdp;

pub use densela::DenseMatrix;
pub use error::{Error, Result};
pub use pseudo::{compute, verify, ComputeOptions, PinvResult, PinvStatus, Variant};
