//! Physical-grid transforms on a `Q × Q` sampling of `[0, 2π)²`.
//!
//! Samples are row-major with `samples[i·Q + j] = f(2πi/Q, 2πj/Q)`; the first
//! index runs along `x1`. Two real fields are packed into one complex FFT
//! (`f + i g`) wherever possible.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{check_same, SpectralScalar};
use super::lattice::WaveLattice;
use super::SpectralError;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// FFT plan plus scratch for one lattice and one grid size.
///
/// Holds mutable scratch, so a grid is confined to one thread; clone it to
/// get an independent copy.
#[derive(Clone)]
pub struct FourierGrid {
    lattice: WaveLattice,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for FourierGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierGrid")
            .field("modes", &self.lattice.modes())
            .field("size", &self.size)
            .finish()
    }
}

impl FourierGrid {
    /// Plan for a `size × size` grid; `size` must be at least `M`.
    pub fn new(lattice: WaveLattice, size: usize) -> Result<Self, SpectralError> {
        if size < lattice.modes() {
            return Err(SpectralError::GridTooSmall {
                grid: size,
                modes: lattice.modes(),
            });
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            lattice,
            size,
            forward,
            inverse,
            buf: vec![ZERO; size * size],
            scratch: vec![ZERO; scratch_len],
        })
    }

    /// The `3M/2` grid on which quadratic products are alias-free.
    pub fn padded(lattice: WaveLattice) -> Self {
        Self::new(lattice, lattice.padded_dim()).expect("padded grid is never smaller than M")
    }

    #[inline]
    pub fn lattice(&self) -> WaveLattice {
        self.lattice
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn points(&self) -> usize {
        self.size * self.size
    }

    #[inline]
    fn grid_index(&self, k: [i64; 2]) -> usize {
        let q = self.size as i64;
        (k[0].rem_euclid(q) * q + k[1].rem_euclid(q)) as usize
    }

    fn transpose(&mut self) {
        let q = self.size;
        for i in 0..q {
            for j in (i + 1)..q {
                self.buf.swap(i * q + j, j * q + i);
            }
        }
    }

    fn fft2(&mut self, inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        plan.process_with_scratch(&mut self.buf, &mut self.scratch);
        self.transpose();
        let plan = if inverse { &self.inverse } else { &self.forward };
        plan.process_with_scratch(&mut self.buf, &mut self.scratch);
        self.transpose();
    }

    /// Loads `f + i g` into the grid spectrum and transforms to physical
    /// space; afterwards `buf = f(x) + i g(x)`.
    fn load_and_invert(&mut self, f: &SpectralScalar, g: Option<&SpectralScalar>) {
        self.buf.iter_mut().for_each(|c| *c = ZERO);
        let lat = self.lattice;
        let fc = f.coeffs();
        match g {
            Some(g) => {
                let gc = g.coeffs();
                for (i, k) in lat.iter() {
                    let v = fc[i] + Complex64::new(-gc[i].im, gc[i].re);
                    if v != ZERO {
                        let gi = self.grid_index(k);
                        self.buf[gi] = v;
                    }
                }
            }
            None => {
                for (i, k) in lat.iter() {
                    if fc[i] != ZERO {
                        let gi = self.grid_index(k);
                        self.buf[gi] = fc[i];
                    }
                }
            }
        }
        self.fft2(true);
    }

    /// Physical samples of a field.
    pub fn inverse(&mut self, f: &SpectralScalar) -> Result<Vec<f64>, SpectralError> {
        check_same(self.lattice, f.lattice())?;
        self.load_and_invert(f, None);
        Ok(self.buf.iter().map(|c| c.re).collect())
    }

    /// Physical samples of two real fields with one complex transform.
    pub fn inverse_pair(
        &mut self,
        f: &SpectralScalar,
        g: &SpectralScalar,
    ) -> Result<(Vec<f64>, Vec<f64>), SpectralError> {
        let mut a = vec![0.0; self.points()];
        let mut b = vec![0.0; self.points()];
        self.inverse_pair_into(f, g, &mut a, &mut b)?;
        Ok((a, b))
    }

    pub fn inverse_pair_into(
        &mut self,
        f: &SpectralScalar,
        g: &SpectralScalar,
        out_f: &mut [f64],
        out_g: &mut [f64],
    ) -> Result<(), SpectralError> {
        check_same(self.lattice, f.lattice())?;
        check_same(self.lattice, g.lattice())?;
        self.check_len(out_f.len())?;
        self.check_len(out_g.len())?;
        self.load_and_invert(f, Some(g));
        for ((c, a), b) in self.buf.iter().zip(out_f.iter_mut()).zip(out_g.iter_mut()) {
            *a = c.re;
            *b = c.im;
        }
        Ok(())
    }

    fn check_len(&self, n: usize) -> Result<(), SpectralError> {
        if n != self.points() {
            return Err(SpectralError::DimensionMismatch {
                expected: self.points(),
                found: n,
            });
        }
        Ok(())
    }

    /// Fourier coefficients of real samples, truncated to the lattice.
    pub fn forward(&mut self, samples: &[f64]) -> Result<SpectralScalar, SpectralError> {
        self.check_len(samples.len())?;
        for (c, &x) in self.buf.iter_mut().zip(samples) {
            *c = Complex64::new(x, 0.0);
        }
        self.fft2(false);
        let norm = 1.0 / self.points() as f64;
        let lat = self.lattice;
        let coeffs = lat
            .iter()
            .map(|(_, k)| {
                if lat.is_nyquist(k) {
                    ZERO
                } else {
                    self.buf[self.grid_index(k)] * norm
                }
            })
            .collect();
        SpectralScalar::from_coeffs(lat, coeffs)
    }

    /// Forward transform of two real sample sets with one complex FFT.
    pub fn forward_pair(
        &mut self,
        a: &[f64],
        b: &[f64],
    ) -> Result<(SpectralScalar, SpectralScalar), SpectralError> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        for ((c, &x), &y) in self.buf.iter_mut().zip(a).zip(b) {
            *c = Complex64::new(x, y);
        }
        self.fft2(false);
        let norm = 1.0 / self.points() as f64;
        let lat = self.lattice;
        let mut fa = Vec::with_capacity(lat.len());
        let mut fb = Vec::with_capacity(lat.len());
        for (_, k) in lat.iter() {
            if lat.is_nyquist(k) {
                fa.push(ZERO);
                fb.push(ZERO);
                continue;
            }
            let z = self.buf[self.grid_index(k)];
            let zc = self.buf[self.grid_index([-k[0], -k[1]])].conj();
            fa.push((z + zc) * (0.5 * norm));
            // (z - zc) / 2i
            let d = (z - zc) * (0.5 * norm);
            fb.push(Complex64::new(d.im, -d.re));
        }
        Ok((
            SpectralScalar::from_coeffs(lat, fa)?,
            SpectralScalar::from_coeffs(lat, fb)?,
        ))
    }

    /// Alias-free product `P_M(f g)` when this grid has side at least `3M/2`.
    pub fn product(&mut self, f: &SpectralScalar, g: &SpectralScalar) -> Result<SpectralScalar, SpectralError> {
        check_same(f.lattice(), g.lattice())?;
        let (pf, pg) = self.inverse_pair(f, g)?;
        let prod: Vec<f64> = pf.iter().zip(&pg).map(|(a, b)| a * b).collect();
        self.forward(&prod)
    }
}

/// Forward transform of real samples on a `Q × Q` grid (`Q² = samples.len()`).
pub fn forward_transform(lattice: WaveLattice, samples: &[f64]) -> Result<SpectralScalar, SpectralError> {
    let q = (samples.len() as f64).sqrt().round() as usize;
    if q * q != samples.len() {
        return Err(SpectralError::DimensionMismatch {
            expected: q * q,
            found: samples.len(),
        });
    }
    FourierGrid::new(lattice, q)?.forward(samples)
}

/// Samples of `f` on a `grid × grid` mesh.
pub fn inverse_transform(f: &SpectralScalar, grid: usize) -> Result<Vec<f64>, SpectralError> {
    FourierGrid::new(f.lattice(), grid)?.inverse(f)
}

/// Pointwise product evaluated on the `3M/2` grid and truncated back to the
/// lattice.
pub fn dealiased_product(f: &SpectralScalar, g: &SpectralScalar) -> Result<SpectralScalar, SpectralError> {
    check_same(f.lattice(), g.lattice())?;
    FourierGrid::padded(f.lattice()).product(f, g)
}
