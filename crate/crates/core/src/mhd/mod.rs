//! The perturbed MHD vector field around a constant background `n`:
//!
//! ```text
//! ∂t u + u·∇u + ∇p = n·∇b + b·∇b
//! ∂t b − Δb + u·∇b = n·∇u + b·∇u
//! div u = div b = 0
//! ```
//!
//! Pressure is eliminated by the Leray projection and never reconstructed.

mod cancellations;
mod system;


pub use cancellations::{cancellation_suite, Cancellation};
pub use system::{advect, advect_scalar, rhs, AdvectionTerms, MhdSystem, Rates};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{SpectralError, SpectralVector2, WaveLattice};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MhdError {
    #[error("Diophantine exponent r must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("background vector must be finite, got {0:?}")]
    NonFiniteBackground([f64; 2]),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("state invariant violated: {0}")]
    Invariant(String),
}

/// Constant background magnetic field `n`, its Diophantine exponent `r`, and
/// the empirically certified constant `c_K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundField {
    pub n: [f64; 2],
    pub r: f64,
    pub c_k: f64,
}

impl BackgroundField {
    pub fn new(n: [f64; 2], r: f64, c_k: f64) -> Result<Self, MhdError> {
        if !(r > 1.0) {
            return Err(MhdError::InvalidExponent(r));
        }
        if !n.iter().all(|x| x.is_finite()) {
            return Err(MhdError::NonFiniteBackground(n));
        }
        Ok(Self { n, r, c_k })
    }

    /// Background with no certificate attached (`c_K = 0`).
    pub fn uncertified(n: [f64; 2]) -> Self {
        Self { n, r: 2.0, c_k: 0.0 }
    }

    pub fn norm(&self) -> f64 {
        self.n[0].hypot(self.n[1])
    }

    pub fn negated(&self) -> Self {
        Self {
            n: [-self.n[0], -self.n[1]],
            ..*self
        }
    }
}

/// Time plus the velocity and magnetic perturbations.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub u: SpectralVector2,
    pub b: SpectralVector2,
}

impl FlowState {
    pub fn new(t: f64, u: SpectralVector2, b: SpectralVector2) -> Result<Self, MhdError> {
        if u.lattice() != b.lattice() {
            return Err(SpectralError::LatticeMismatch {
                left: u.lattice().modes(),
                right: b.lattice().modes(),
            }
            .into());
        }
        Ok(Self { t, u, b })
    }

    pub fn zeros(lattice: WaveLattice) -> Self {
        Self {
            t: 0.0,
            u: SpectralVector2::zeros(lattice),
            b: SpectralVector2::zeros(lattice),
        }
    }

    #[inline]
    pub fn lattice(&self) -> WaveLattice {
        self.u.lattice()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.u.is_finite() && self.b.is_finite()
    }

    /// Checks divergence-free, mean-zero, and reality, with the divergence
    /// measured relative to the field's `H¹` size.
    pub fn check_invariants(&self, rel_tol: f64) -> Result<(), MhdError> {
        for (name, v) in [("u", &self.u), ("b", &self.b)] {
            let scale = v.sobolev_norm(1.0);
            let div = v.max_divergence();
            if div > rel_tol * scale.max(f64::MIN_POSITIVE) && div > 0.0 {
                return Err(MhdError::Invariant(format!(
                    "{name} has divergence {div:e} (scale {scale:e})"
                )));
            }
            let mean = v.mean();
            if mean[0] != 0.0 || mean[1] != 0.0 {
                return Err(MhdError::Invariant(format!("{name} has nonzero mean {mean:?}")));
            }
            let re = v.reality_defect();
            if re > rel_tol * v.l2_norm().max(f64::MIN_POSITIVE) && re > 0.0 {
                return Err(MhdError::Invariant(format!("{name} violates reality by {re:e}")));
            }
        }
        Ok(())
    }
}

/// Leray projection `v̂ ↦ v̂ − k(k·v̂)/|k|²`; the mean is left untouched.
pub fn leray_project(v: &SpectralVector2) -> SpectralVector2 {
    let lat = v.lattice();
    let mut out = v.clone();
    let (c1, c2) = (v.x1.coeffs(), v.x2.coeffs());
    let mut o1 = vec![Complex64::new(0.0, 0.0); lat.len()];
    let mut o2 = o1.clone();
    for (i, k) in lat.iter() {
        let (k1, k2) = (k[0] as f64, k[1] as f64);
        let w = k1 * k1 + k2 * k2;
        if w == 0.0 {
            o1[i] = c1[i];
            o2[i] = c2[i];
            continue;
        }
        let dot = (c1[i] * k1 + c2[i] * k2) / w;
        o1[i] = c1[i] - dot * k1;
        o2[i] = c2[i] - dot * k2;
    }
    out.x1.coeffs_mut().copy_from_slice(&o1);
    out.x2.coeffs_mut().copy_from_slice(&o2);
    out
}

/// Leray projection followed by removal of the mean.
pub(crate) fn project_mean_free(v: &SpectralVector2) -> SpectralVector2 {
    let mut out = leray_project(v);
    out.set_mean_zero();
    out
}
