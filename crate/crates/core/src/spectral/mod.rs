//! Truncated Fourier representation of real periodic fields on `[0, 2π)²`.

mod field;
mod lattice;
mod transform;

#[cfg(test)]
mod tests;

pub use field::{SpectralScalar, SpectralVector2};
pub use lattice::WaveLattice;
pub use transform::{dealiased_product, forward_transform, inverse_transform, FourierGrid};

pub(crate) use field::homogeneous_weight;
pub(crate) use lattice::k_sq;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("modes per dimension must be an even integer >= 4, got {0}")]
    InvalidModes(usize),
    #[error("dimension mismatch: expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("grid of side {grid} cannot resolve {modes} modes per dimension")]
    GridTooSmall { grid: usize, modes: usize },
    #[error("lattice mismatch: {left} vs {right} modes per dimension")]
    LatticeMismatch { left: usize, right: usize },
}
