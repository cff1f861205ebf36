//! Diophantine certificates `|n·k|·|k|^r ≥ c_K` on a finite lattice disc,
//! badly approximable background vectors, and the anisotropic Poincaré
//! inequality with the explicit constant `1/c_K`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mhd::{BackgroundField, MhdError};
use crate::random::seeded;
use crate::spectral::{SpectralScalar, WaveLattice};

pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Relative slack of the inequality checks.
pub const POINCARE_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiophantineError {
    #[error("search radius must be at least 1, got {0}")]
    InvalidRadius(u64),
    #[error("exponent r must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("background vector must be finite, got {0:?}")]
    InvalidVector([f64; 2]),
    #[error("certificate is not valid (c_K = {c_k} at k = {argmin:?})")]
    InvalidCertificate { c_k: f64, argmin: [i64; 2] },
    #[error("field has nonzero mean {0}")]
    NonzeroMean(f64),
    #[error("order s must be positive, got {0}")]
    NonPositiveOrder(f64),
    #[error("field reaches |k| = {radius}, beyond the certified radius {k_radius}")]
    OutOfBand { radius: f64, k_radius: u64 },
}

/// Result of a brute-force scan over `0 < |k| ≤ K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineCertificate {
    pub n: [f64; 2],
    pub r: f64,
    pub k_radius: u64,
    pub c_k: f64,
    pub argmin_k: [i64; 2],
}

impl DiophantineCertificate {
    pub fn is_valid(&self) -> bool {
        self.c_k > 0.0
    }

    /// Whether every retained mode of `lattice` lies in the searched disc.
    pub fn covers(&self, lattice: WaveLattice) -> bool {
        self.k_radius as f64 >= lattice.radius()
    }

    pub fn background(&self) -> Result<BackgroundField, MhdError> {
        BackgroundField::new(self.n, self.r, self.c_k)
    }
}

/// `|n·k|`, with products that cancel to within rounding reported as exact zeros.
fn resonance(n: [f64; 2], k: [i64; 2]) -> f64 {
    let (a, b) = (n[0] * k[0] as f64, n[1] * k[1] as f64);
    let v = (a + b).abs();
    if v <= 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
        0.0
    } else {
        v
    }
}

fn better(a: (f64, [i64; 2]), b: (f64, [i64; 2])) -> (f64, [i64; 2]) {
    let key = |k: [i64; 2]| (k[0] * k[0] + k[1] * k[1], k[0], k[1]);
    if a.0 < b.0 || (a.0 == b.0 && key(a.1) < key(b.1)) {
        a
    } else {
        b
    }
}

/// Exact minimum of `|n·k|·|k|^r` over `0 < |k| ≤ K`. Since `k` and `−k` give
/// the same value, only the half plane `k₁ > 0` or `k₁ = 0, k₂ > 0` is scanned;
/// ties go to the smallest `(|k|², k₁, k₂)`.
pub fn diophantine_constant(n: [f64; 2], r: f64, k_radius: u64) -> Result<DiophantineCertificate, DiophantineError> {
    if k_radius < 1 {
        return Err(DiophantineError::InvalidRadius(k_radius));
    }
    if !(r > 1.0) {
        return Err(DiophantineError::InvalidExponent(r));
    }
    if !n.iter().all(|x| x.is_finite()) {
        return Err(DiophantineError::InvalidVector(n));
    }
    let kk = k_radius as i64;
    let k2max = kk * kk;
    let (c_k, argmin_k) = (0..=kk)
        .into_par_iter()
        .map(|k1| {
            let mut span = ((k2max - k1 * k1) as f64).sqrt() as i64;
            while k1 * k1 + (span + 1) * (span + 1) <= k2max {
                span += 1;
            }
            while k1 * k1 + span * span > k2max {
                span -= 1;
            }
            let lo = if k1 == 0 { 1 } else { -span };
            let mut best = (f64::INFINITY, [0, 0]);
            for k2 in lo..=span {
                let k = [k1, k2];
                let norm_sq = (k1 * k1 + k2 * k2) as f64;
                let v = resonance(n, k) * norm_sq.powf(0.5 * r);
                best = better((v, k), best);
            }
            best
        })
        .reduce(|| (f64::INFINITY, [0, 0]), better);
    Ok(DiophantineCertificate {
        n,
        r,
        k_radius,
        c_k,
        argmin_k,
    })
}

/// Certificate whose radius covers every retained mode of `lattice`.
pub fn certify_lattice(n: [f64; 2], r: f64, lattice: WaveLattice) -> Result<DiophantineCertificate, DiophantineError> {
    diophantine_constant(n, r, lattice.radius().ceil() as u64)
}

/// `(1, φ)`.
pub fn golden_vector() -> [f64; 2] {
    [1.0, GOLDEN_RATIO]
}

/// `(1, x)` where `x` has a seeded random continued-fraction head with
/// partial quotients in `{1, 2}` followed by the all-ones tail of `φ`.
pub fn noble_vector(seed: u64) -> [f64; 2] {
    let mut rng = seeded(seed);
    let head: Vec<u32> = (0..24).map(|_| rng.random_range(1..=2)).collect();
    [1.0, evaluate_continued_fraction(&head, GOLDEN_RATIO)]
}

/// `[a₀; a₁, …, a_m, tail]`.
pub fn evaluate_continued_fraction(quotients: &[u32], tail: f64) -> f64 {
    quotients.iter().rev().fold(tail, |v, &a| a as f64 + 1.0 / v)
}

/// First `terms` partial quotients of `x > 0`.
pub fn continued_fraction(x: f64, terms: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(terms);
    let mut v = x;
    for _ in 0..terms {
        if !v.is_finite() || v <= 0.0 {
            break;
        }
        let a = v.floor();
        out.push(a as u64);
        let frac = v - a;
        if frac <= 1e-12 {
            break;
        }
        v = 1.0 / frac;
    }
    out
}

/// Both sides of a Poincaré-type inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoincareCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl PoincareCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + POINCARE_SLACK),
        }
    }

    /// `lhs/rhs`, 0 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

fn check_band(f: &SpectralScalar, cert: &DiophantineCertificate) -> Result<(), DiophantineError> {
    if !cert.is_valid() {
        return Err(DiophantineError::InvalidCertificate {
            c_k: cert.c_k,
            argmin: cert.argmin_k,
        });
    }
    let radius = f.spectral_radius();
    if radius > cert.k_radius as f64 {
        return Err(DiophantineError::OutOfBand {
            radius,
            k_radius: cert.k_radius,
        });
    }
    Ok(())
}

/// `‖f‖_{H^s} ≤ (1/c_K)‖n·∇f‖_{H^{s+r}}` for mean-zero `f`.
pub fn verify_poincare(f: &SpectralScalar, cert: &DiophantineCertificate, s: f64) -> Result<PoincareCheck, DiophantineError> {
    let mean = f.mean();
    if mean != 0.0 {
        return Err(DiophantineError::NonzeroMean(mean));
    }
    check_band(f, cert)?;
    let lhs = f.sobolev_norm(s);
    let rhs = f.directional_derivative(cert.n).sobolev_norm(s + cert.r) / cert.c_k;
    Ok(PoincareCheck::new(lhs, rhs))
}

/// `‖f‖_{Ḣ^s} ≤ (1/c_K)‖n·∇f‖_{H^{s+r}}` for `s > 0`; the mean is invisible.
pub fn verify_homogeneous_poincare(
    f: &SpectralScalar,
    cert: &DiophantineCertificate,
    s: f64,
) -> Result<PoincareCheck, DiophantineError> {
    if !(s > 0.0) {
        return Err(DiophantineError::NonPositiveOrder(s));
    }
    check_band(f, cert)?;
    let lhs = f.homogeneous_norm(s);
    let rhs = f.directional_derivative(cert.n).sobolev_norm(s + cert.r) / cert.c_k;
    Ok(PoincareCheck::new(lhs, rhs))
}

/// Best possible `lhs/rhs` for a single mode `k`: `(|k|²/(1+|k|²))^{r/2}`.
pub fn single_mode_ratio(k: [i64; 2], r: f64) -> f64 {
    let q = (k[0] * k[0] + k[1] * k[1]) as f64;
    (q / (1.0 + q)).powf(0.5 * r)
}
