//! Hénon–Heiles spectra in a truncated two-dimensional oscillator basis:
//! diagonalization, chaoticity measures, approximate integrals of motion,
//! projector algebra and level-spacing statistics.

pub mod basis;
pub mod config;
pub mod eigen;
pub mod error;
pub mod format;
pub mod integrals;
pub mod metrics;
pub mod operators;
pub mod pipeline;
pub mod projectors;
pub mod spacing;

pub use basis::{build_basis, FockBasis, FockState, Mode};
pub use config::RunConfig;
pub use eigen::{diagonalize, subspace_solve, Spectrum};
pub use error::{Error, Result};
pub use operators::{hamiltonian, MatrixKind, ModelParameters, OperatorMatrix};
