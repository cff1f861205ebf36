//! Seeded random fields for property checks and benchmarks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mhd::{leray_project, FlowState};
use crate::spectral::{k_sq, SpectralScalar, SpectralVector2, WaveLattice};

/// Real field with uniform random coefficients of modulus up to
/// `(1+|k|²)^{-decay/2}`, restricted to `|k_i| <= band`.
pub fn random_scalar<R: Rng>(lattice: WaveLattice, rng: &mut R, band: i64, decay: f64) -> SpectralScalar {
    let mut f = SpectralScalar::from_fn(lattice, |k| {
        let re: f64 = rng.random_range(-1.0..1.0);
        let im: f64 = rng.random_range(-1.0..1.0);
        if k[0].abs() <= band && k[1].abs() <= band {
            Complex64::new(re, im) * (1.0 + k_sq(k)).powf(-0.5 * decay)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    f.symmetrize();
    f
}

/// Divergence-free, mean-zero random vector field.
pub fn random_solenoidal<R: Rng>(lattice: WaveLattice, rng: &mut R, band: i64, decay: f64) -> SpectralVector2 {
    let v = SpectralVector2 {
        x1: random_scalar(lattice, rng, band, decay),
        x2: random_scalar(lattice, rng, band, decay),
    };
    let mut p = leray_project(&v);
    p.set_mean_zero();
    p
}

/// Random admissible state with both fields scaled to `L²` norm `amplitude`.
pub fn random_state(lattice: WaveLattice, seed: u64, amplitude: f64, decay: f64) -> FlowState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = lattice.nyquist() - 1;
    let mut u = random_solenoidal(lattice, &mut rng, band, decay);
    let mut b = random_solenoidal(lattice, &mut rng, band, decay);
    let (nu, nb) = (u.l2_norm(), b.l2_norm());
    if nu > 0.0 {
        u = u.scale(amplitude / nu);
    }
    if nb > 0.0 {
        b = b.scale(amplitude / nb);
    }
    FlowState { t: 0.0, u, b }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
