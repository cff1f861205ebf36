//! Pseudo-spectral simulation and energy-method diagnostics for the 2D
//! incompressible MHD system with magnetic diffusion only, perturbed around a
//! constant Diophantine background field on the periodic square.

// `!(x <= tol)` is deliberate throughout: NaN must fail a tolerance check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diophantine;
pub mod energy;
pub mod experiment;
pub mod integrator;
pub mod mhd;
pub mod random;
pub mod spectral;
pub mod sum;

pub use energy::{EnergySample, ProofParams};
pub use integrator::{advance_to, choose_dt, step_if_rk4, Integrator, IntegratorError, StepControl};
pub use mhd::{leray_project, BackgroundField, FlowState, MhdError, MhdSystem};
pub use spectral::{SpectralError, SpectralScalar, SpectralVector2, WaveLattice};
pub use diophantine::{DiophantineCertificate, DiophantineError};
pub use experiment::{RunConfig, RunError, RunSummary};
