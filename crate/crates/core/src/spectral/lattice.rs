use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Truncated set of integer wavenumbers `k = (k1, k2)` with
/// `-M/2 < k_i <= M/2` on the `2π`-periodic square.
///
/// Coefficients live in an `M × M` row-major array in FFT order: row index
/// encodes `k1`, column index `k2`, and index `i` maps to `k = i` for
/// `i <= M/2` and `k = i - M` otherwise. The row/column with `k_i = M/2`
/// (Nyquist) has no partner under `k -> -k` and is kept identically zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WaveLattice {
    modes: usize,
}

impl WaveLattice {
    pub fn new(modes_per_dim: usize) -> Result<Self, SpectralError> {
        if modes_per_dim < 4 || !modes_per_dim.is_multiple_of(2) {
            return Err(SpectralError::InvalidModes(modes_per_dim));
        }
        Ok(Self {
            modes: modes_per_dim,
        })
    }

    /// Number of modes per dimension, `M`.
    #[inline]
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Side of the zero-padded product grid, `3M/2`.
    #[inline]
    pub fn padded_dim(&self) -> usize {
        3 * self.modes / 2
    }

    /// Number of stored coefficients, `M²`.
    #[inline]
    pub fn len(&self) -> usize {
        self.modes * self.modes
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn nyquist(&self) -> i64 {
        (self.modes / 2) as i64
    }

    /// Signed wavenumber stored at array position `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let m = self.modes;
        if i <= m / 2 {
            i as i64
        } else {
            i as i64 - m as i64
        }
    }

    /// Array position holding wavenumber `k`, if it is on the lattice.
    #[inline]
    pub fn position(&self, k: i64) -> Option<usize> {
        let half = self.nyquist();
        if k <= -half || k > half {
            return None;
        }
        Some(k.rem_euclid(self.modes as i64) as usize)
    }

    /// Wavevector stored at flat index `idx`.
    #[inline]
    pub fn k_at(&self, idx: usize) -> [i64; 2] {
        [
            self.wavenumber(idx / self.modes),
            self.wavenumber(idx % self.modes),
        ]
    }

    /// Flat index of wavevector `k`, if it is on the lattice.
    #[inline]
    pub fn flat_index(&self, k: [i64; 2]) -> Option<usize> {
        Some(self.position(k[0])? * self.modes + self.position(k[1])?)
    }

    /// Flat index of `-k` for the stored index `idx`. Nyquist entries map to
    /// themselves.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let m = self.modes;
        let (i, j) = (idx / m, idx % m);
        ((m - i) % m) * m + (m - j) % m
    }

    #[inline]
    pub fn is_nyquist(&self, k: [i64; 2]) -> bool {
        let h = self.nyquist();
        k[0] == h || k[1] == h
    }

    /// Largest `|k|` among the retained (non-Nyquist) modes.
    pub fn radius(&self) -> f64 {
        let kmax = (self.nyquist() - 1) as f64;
        kmax * std::f64::consts::SQRT_2
    }

    /// Iterator over `(flat index, k)` for every stored position.
    pub fn iter(&self) -> impl Iterator<Item = (usize, [i64; 2])> + '_ {
        (0..self.len()).map(move |idx| (idx, self.k_at(idx)))
    }

    /// Flat indices sorted by descending `|k|²`, ties broken by index.
    ///
    /// Cached per lattice size.
    pub fn descending_order(&self) -> Arc<[usize]> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<[usize]>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
        map.entry(self.modes)
            .or_insert_with(|| {
                let mut order: Vec<usize> = (0..self.len()).collect();
                order.sort_by_key(|&idx| {
                    let k = self.k_at(idx);
                    (std::cmp::Reverse(k[0] * k[0] + k[1] * k[1]), idx)
                });
                order.into()
            })
            .clone()
    }
}

#[inline]
pub(crate) fn k_sq(k: [i64; 2]) -> f64 {
    (k[0] * k[0] + k[1] * k[1]) as f64
}
