use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use super::lattice::{k_sq, WaveLattice};
use super::SpectralError;
use crate::sum::CompensatedSum;

/// Fourier coefficients of a real `2π`-periodic scalar field,
/// `f(x) = Σ_k coeff(k) e^{ik·x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScalar {
    lattice: WaveLattice,
    coeffs: Vec<Complex64>,
}

impl SpectralScalar {
    pub fn zeros(lattice: WaveLattice) -> Self {
        Self {
            lattice,
            coeffs: vec![Complex64::new(0.0, 0.0); lattice.len()],
        }
    }

    /// Builds a field from a coefficient function. Nyquist entries are forced
    /// to zero; reality is the caller's responsibility (see
    /// [`SpectralScalar::symmetrize`]).
    pub fn from_fn(lattice: WaveLattice, mut f: impl FnMut([i64; 2]) -> Complex64) -> Self {
        let coeffs = lattice
            .iter()
            .map(|(_, k)| {
                if lattice.is_nyquist(k) {
                    Complex64::new(0.0, 0.0)
                } else {
                    f(k)
                }
            })
            .collect();
        Self { lattice, coeffs }
    }

    /// Wraps a raw coefficient array in FFT order.
    pub fn from_coeffs(lattice: WaveLattice, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != lattice.len() {
            return Err(SpectralError::DimensionMismatch {
                expected: lattice.len(),
                found: coeffs.len(),
            });
        }
        let mut out = Self { lattice, coeffs };
        out.zero_nyquist();
        Ok(out)
    }

    /// Field with a single real cosine/sine pair: `amp·e^{ik·x} + conj`.
    pub fn mode_pair(lattice: WaveLattice, k: [i64; 2], amp: Complex64) -> Self {
        let mut f = Self::zeros(lattice);
        if let Some(idx) = lattice.flat_index(k) {
            if !lattice.is_nyquist(k) {
                let c = lattice.conjugate_index(idx);
                if c == idx {
                    f.coeffs[idx] = Complex64::new(2.0 * amp.re, 0.0);
                } else {
                    f.coeffs[idx] += amp;
                    f.coeffs[c] += amp.conj();
                }
            }
        }
        f
    }

    /// Constant field.
    pub fn constant(lattice: WaveLattice, value: f64) -> Self {
        let mut f = Self::zeros(lattice);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    #[inline]
    pub fn lattice(&self) -> WaveLattice {
        self.lattice
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Mutable access to the raw coefficients. Callers must keep reality and
    /// the zero Nyquist row/column intact.
    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at wavevector `k`; zero off the lattice.
    pub fn coeff(&self, k: [i64; 2]) -> Complex64 {
        self.lattice
            .flat_index(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    /// Spatial mean, i.e. the `k = 0` coefficient.
    #[inline]
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn set_mean(&mut self, value: f64) {
        self.coeffs[0] = Complex64::new(value, 0.0);
    }

    pub(crate) fn zero_nyquist(&mut self) {
        let m = self.lattice.modes();
        let h = m / 2;
        for j in 0..m {
            self.coeffs[h * m + j] = Complex64::new(0.0, 0.0);
            self.coeffs[j * m + h] = Complex64::new(0.0, 0.0);
        }
    }

    /// Largest violation of `coeff(-k) = conj(coeff(k))`.
    pub fn reality_defect(&self) -> f64 {
        self.lattice
            .iter()
            .map(|(i, _)| (self.coeffs[i] - self.coeffs[self.lattice.conjugate_index(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Projects onto reality-symmetric coefficients and clears Nyquist.
    pub fn symmetrize(&mut self) {
        let lat = self.lattice;
        let old = self.coeffs.clone();
        for i in 0..lat.len() {
            let c = lat.conjugate_index(i);
            self.coeffs[i] = 0.5 * (old[i] + old[c].conj());
        }
        self.zero_nyquist();
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Applies `coeff(k) <- m(k)·coeff(k)`.
    pub fn apply_multiplier(&self, mut m: impl FnMut([i64; 2]) -> Complex64) -> Self {
        let lat = self.lattice;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * m(lat.k_at(i)))
            .collect();
        Self { lattice: lat, coeffs }
    }

    pub fn apply_real_multiplier(&self, mut m: impl FnMut([i64; 2]) -> f64) -> Self {
        self.apply_multiplier(|k| Complex64::new(m(k), 0.0))
    }

    /// `∂f/∂x_axis`, `axis ∈ {1, 2}`.
    pub fn partial_derivative(&self, axis: usize) -> Self {
        assert!(axis == 1 || axis == 2, "axis must be 1 or 2, got {axis}");
        let a = axis - 1;
        self.apply_multiplier(|k| Complex64::new(0.0, k[a] as f64))
    }

    /// `n·∇f`.
    pub fn directional_derivative(&self, n: [f64; 2]) -> Self {
        self.apply_multiplier(|k| Complex64::new(0.0, n[0] * k[0] as f64 + n[1] * k[1] as f64))
    }

    pub fn laplacian(&self) -> Self {
        self.apply_real_multiplier(|k| -k_sq(k))
    }

    /// `D^s f` with `D = √(-Δ)`, the multiplier `|k|^s` (identity at `s = 0`).
    pub fn fractional_derivative(&self, s: f64) -> Self {
        if s == 0.0 {
            return self.clone();
        }
        self.apply_real_multiplier(|k| homogeneous_weight(k, s))
    }

    /// Weighted sum `Σ_k w(k)|coeff(k)|²`, accumulated from the largest `|k|`
    /// inward with compensation.
    fn weighted_energy(&self, weight: impl Fn([i64; 2]) -> f64) -> f64 {
        let lat = self.lattice;
        let mut acc = CompensatedSum::new();
        for &i in lat.descending_order().iter() {
            let c = self.coeffs[i];
            let a = c.norm_sqr();
            if a != 0.0 {
                acc.add(weight(lat.k_at(i)) * a);
            }
        }
        acc.value()
    }

    /// `‖f‖_{H^s} = (Σ_k (1+|k|²)^s |coeff(k)|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_norm_sq(s).max(0.0).sqrt()
    }

    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        self.weighted_energy(|k| sobolev_weight(k, s))
    }

    /// `‖f‖_{Ḣ^s} = (Σ_{k≠0} |k|^{2s} |coeff(k)|²)^{1/2}`.
    pub fn homogeneous_norm(&self, s: f64) -> f64 {
        self.homogeneous_norm_sq(s).max(0.0).sqrt()
    }

    pub fn homogeneous_norm_sq(&self, s: f64) -> f64 {
        self.weighted_energy(|k| {
            if k == [0, 0] {
                0.0
            } else {
                homogeneous_weight(k, 2.0 * s)
            }
        })
    }

    /// `L²` norm, normalized so that `‖f‖² = (2π)^{-2}∫|f|²`.
    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// `Σ_k |coeff(k)|`, an upper bound for `sup |f|`.
    pub fn wiener_norm(&self) -> f64 {
        let lat = self.lattice;
        let mut acc = CompensatedSum::new();
        for &i in lat.descending_order().iter() {
            acc.add(self.coeffs[i].norm());
        }
        acc.value()
    }

    /// `Σ_{k≠0} |k|^{2s} Re(f̂(k) conj ĝ(k))`.
    pub fn weighted_inner_product(&self, other: &Self, s: f64) -> Result<f64, SpectralError> {
        check_same(self.lattice, other.lattice)?;
        Ok(self.pairing(other, |k| {
            if k == [0, 0] {
                0.0
            } else {
                homogeneous_weight(k, 2.0 * s)
            }
        }))
    }

    /// `L²` pairing `Σ_k Re(f̂(k) conj ĝ(k)) = (2π)^{-2}∫ f g`, mean included.
    pub fn inner_product(&self, other: &Self) -> Result<f64, SpectralError> {
        check_same(self.lattice, other.lattice)?;
        Ok(self.pairing(other, |_| 1.0))
    }

    pub(crate) fn pairing(&self, other: &Self, weight: impl Fn([i64; 2]) -> f64) -> f64 {
        debug_assert_eq!(self.lattice, other.lattice);
        let lat = self.lattice;
        let mut acc = CompensatedSum::new();
        for &i in lat.descending_order().iter() {
            let a = self.coeffs[i];
            let b = other.coeffs[i];
            let re = a.re * b.re + a.im * b.im;
            if re != 0.0 {
                acc.add(weight(lat.k_at(i)) * re);
            }
        }
        acc.value()
    }

    /// Largest `|k|` carrying a nonzero coefficient (0 for constants).
    pub fn spectral_radius(&self) -> f64 {
        self.lattice
            .iter()
            .filter(|&(i, _)| self.coeffs[i] != Complex64::new(0.0, 0.0))
            .map(|(_, k)| k_sq(k).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            lattice: self.lattice,
            coeffs: self.coeffs.iter().map(|&c| c * a).collect(),
        }
    }

    /// `self += a·x`.
    pub fn axpy(&mut self, a: f64, x: &Self) {
        assert_eq!(self.lattice, x.lattice, "lattice mismatch");
        for (y, &xi) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *y += xi * a;
        }
    }

    /// Largest coefficient modulus.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[inline]
pub(crate) fn sobolev_weight(k: [i64; 2], s: f64) -> f64 {
    let w = 1.0 + k_sq(k);
    if s == 0.0 {
        1.0
    } else {
        w.powf(s)
    }
}

/// `|k|^p` with `0^0 = 1`.
#[inline]
pub(crate) fn homogeneous_weight(k: [i64; 2], p: f64) -> f64 {
    if p == 0.0 {
        return 1.0;
    }
    let w = k_sq(k);
    if w == 0.0 {
        0.0
    } else {
        w.powf(0.5 * p)
    }
}

pub(crate) fn check_same(a: WaveLattice, b: WaveLattice) -> Result<(), SpectralError> {
    if a != b {
        return Err(SpectralError::LatticeMismatch {
            left: a.modes(),
            right: b.modes(),
        });
    }
    Ok(())
}

impl Add<&SpectralScalar> for &SpectralScalar {
    type Output = SpectralScalar;
    fn add(self, rhs: &SpectralScalar) -> SpectralScalar {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&SpectralScalar> for &SpectralScalar {
    type Output = SpectralScalar;
    fn sub(self, rhs: &SpectralScalar) -> SpectralScalar {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&SpectralScalar> for SpectralScalar {
    fn add_assign(&mut self, rhs: &SpectralScalar) {
        assert_eq!(self.lattice, rhs.lattice, "lattice mismatch");
        for (a, &b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&SpectralScalar> for SpectralScalar {
    fn sub_assign(&mut self, rhs: &SpectralScalar) {
        assert_eq!(self.lattice, rhs.lattice, "lattice mismatch");
        for (a, &b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &SpectralScalar {
    type Output = SpectralScalar;
    fn neg(self) -> SpectralScalar {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &SpectralScalar {
    type Output = SpectralScalar;
    fn mul(self, a: f64) -> SpectralScalar {
        self.scale(a)
    }
}

/// Two-component field on a shared lattice (velocity or magnetic
/// perturbation).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVector2 {
    pub x1: SpectralScalar,
    pub x2: SpectralScalar,
}

impl SpectralVector2 {
    pub fn new(x1: SpectralScalar, x2: SpectralScalar) -> Result<Self, SpectralError> {
        check_same(x1.lattice, x2.lattice)?;
        Ok(Self { x1, x2 })
    }

    pub fn zeros(lattice: WaveLattice) -> Self {
        Self {
            x1: SpectralScalar::zeros(lattice),
            x2: SpectralScalar::zeros(lattice),
        }
    }

    /// Divergence-free single Fourier mode `amp·(k⊥/|k|)e^{ik·x} + conj`,
    /// `k⊥ = (-k2, k1)`.
    pub fn solenoidal_mode(lattice: WaveLattice, k: [i64; 2], amp: Complex64) -> Self {
        let norm = k_sq(k).sqrt();
        if norm == 0.0 {
            return Self::zeros(lattice);
        }
        let e = [-(k[1] as f64) / norm, k[0] as f64 / norm];
        Self {
            x1: SpectralScalar::mode_pair(lattice, k, amp * e[0]),
            x2: SpectralScalar::mode_pair(lattice, k, amp * e[1]),
        }
    }

    /// Gradient of a scalar field.
    pub fn gradient(f: &SpectralScalar) -> Self {
        Self {
            x1: f.partial_derivative(1),
            x2: f.partial_derivative(2),
        }
    }

    #[inline]
    pub fn lattice(&self) -> WaveLattice {
        self.x1.lattice()
    }

    #[inline]
    pub fn component(&self, i: usize) -> &SpectralScalar {
        match i {
            1 => &self.x1,
            2 => &self.x2,
            _ => panic!("component index must be 1 or 2, got {i}"),
        }
    }

    pub fn map(&self, f: impl Fn(&SpectralScalar) -> SpectralScalar) -> Self {
        Self {
            x1: f(&self.x1),
            x2: f(&self.x2),
        }
    }

    pub fn divergence(&self) -> SpectralScalar {
        let mut d = self.x1.partial_derivative(1);
        d += &self.x2.partial_derivative(2);
        d
    }

    /// `max_k |k·v̂(k)|`.
    pub fn max_divergence(&self) -> f64 {
        let lat = self.lattice();
        lat.iter()
            .map(|(i, k)| (self.x1.coeffs()[i] * k[0] as f64 + self.x2.coeffs()[i] * k[1] as f64).norm())
            .fold(0.0, f64::max)
    }

    pub fn mean(&self) -> [f64; 2] {
        [self.x1.mean(), self.x2.mean()]
    }

    pub fn is_mean_zero(&self) -> bool {
        self.x1.coeffs()[0] == Complex64::new(0.0, 0.0) && self.x2.coeffs()[0] == Complex64::new(0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn directional_derivative(&self, n: [f64; 2]) -> Self {
        self.map(|f| f.directional_derivative(n))
    }

    pub fn laplacian(&self) -> Self {
        self.map(SpectralScalar::laplacian)
    }

    pub fn fractional_derivative(&self, s: f64) -> Self {
        self.map(|f| f.fractional_derivative(s))
    }

    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        self.x1.sobolev_norm_sq(s) + self.x2.sobolev_norm_sq(s)
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_norm_sq(s).max(0.0).sqrt()
    }

    pub fn homogeneous_norm_sq(&self, s: f64) -> f64 {
        self.x1.homogeneous_norm_sq(s) + self.x2.homogeneous_norm_sq(s)
    }

    pub fn homogeneous_norm(&self, s: f64) -> f64 {
        self.homogeneous_norm_sq(s).max(0.0).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// `‖∇v‖²_{H^s} = Σ_k |k|²(1+|k|²)^s |v̂(k)|²`.
    pub fn grad_sobolev_norm_sq(&self, s: f64) -> f64 {
        let w = |k: [i64; 2]| k_sq(k) * sobolev_weight(k, s);
        self.x1.weighted_energy(w) + self.x2.weighted_energy(w)
    }

    pub fn grad_sobolev_norm(&self, s: f64) -> f64 {
        self.grad_sobolev_norm_sq(s).max(0.0).sqrt()
    }

    /// Bound on `sup |v|` by the coefficient `ℓ¹` norms.
    pub fn wiener_norm(&self) -> f64 {
        self.x1.wiener_norm().hypot(self.x2.wiener_norm())
    }

    /// Componentwise `L²` pairing, mean included.
    pub fn inner_product(&self, other: &Self) -> Result<f64, SpectralError> {
        Ok(self.x1.inner_product(&other.x1)? + self.x2.inner_product(&other.x2)?)
    }

    pub fn weighted_inner_product(&self, other: &Self, s: f64) -> Result<f64, SpectralError> {
        Ok(self.x1.weighted_inner_product(&other.x1, s)? + self.x2.weighted_inner_product(&other.x2, s)?)
    }

    pub(crate) fn pairing(&self, other: &Self, weight: impl Fn([i64; 2]) -> f64 + Copy) -> f64 {
        self.x1.pairing(&other.x1, weight) + self.x2.pairing(&other.x2, weight)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|f| f.scale(a))
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        self.x1.axpy(a, &x.x1);
        self.x2.axpy(a, &x.x2);
    }

    pub fn symmetrize(&mut self) {
        self.x1.symmetrize();
        self.x2.symmetrize();
    }

    pub fn set_mean_zero(&mut self) {
        self.x1.set_mean(0.0);
        self.x2.set_mean(0.0);
    }

    pub fn reality_defect(&self) -> f64 {
        self.x1.reality_defect().max(self.x2.reality_defect())
    }
}

impl Add<&SpectralVector2> for &SpectralVector2 {
    type Output = SpectralVector2;
    fn add(self, rhs: &SpectralVector2) -> SpectralVector2 {
        SpectralVector2 {
            x1: &self.x1 + &rhs.x1,
            x2: &self.x2 + &rhs.x2,
        }
    }
}

impl Sub<&SpectralVector2> for &SpectralVector2 {
    type Output = SpectralVector2;
    fn sub(self, rhs: &SpectralVector2) -> SpectralVector2 {
        SpectralVector2 {
            x1: &self.x1 - &rhs.x1,
            x2: &self.x2 - &rhs.x2,
        }
    }
}

impl AddAssign<&SpectralVector2> for SpectralVector2 {
    fn add_assign(&mut self, rhs: &SpectralVector2) {
        self.x1 += &rhs.x1;
        self.x2 += &rhs.x2;
    }
}

impl SubAssign<&SpectralVector2> for SpectralVector2 {
    fn sub_assign(&mut self, rhs: &SpectralVector2) {
        self.x1 -= &rhs.x1;
        self.x2 -= &rhs.x2;
    }
}

impl Neg for &SpectralVector2 {
    type Output = SpectralVector2;
    fn neg(self) -> SpectralVector2 {
        self.scale(-1.0)
    }
}

impl SpectralVector2 {
    /// Largest coefficient modulus over both components.
    pub fn max_abs(&self) -> f64 {
        self.x1.max_abs_coeff().max(self.x2.max_abs_coeff())
    }
}
