//! Seeded small initial data with a prescribed Sobolev profile.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use super::config::RunConfig;
use crate::mhd::{leray_project, FlowState};
use crate::random::seeded;
use crate::spectral::{k_sq, SpectralScalar, SpectralVector2, WaveLattice};

/// Real field with `|coeff(k)| = (1+|k|²)^{-p/2}` and uniform random phases.
/// Phases are drawn on the half plane and mirrored, so the field is real.
pub fn profiled_scalar<R: Rng>(lattice: WaveLattice, rng: &mut R, p: f64) -> SpectralScalar {
    let mut c = vec![Complex64::new(0.0, 0.0); lattice.len()];
    for (idx, k) in lattice.iter() {
        let upper = k[0] > 0 || (k[0] == 0 && k[1] > 0);
        if !upper || lattice.is_nyquist(k) {
            continue;
        }
        let theta: f64 = rng.random_range(0.0..TAU);
        let z = Complex64::from_polar((1.0 + k_sq(k)).powf(-0.5 * p), theta);
        c[idx] = z;
        c[lattice.conjugate_index(idx)] = z.conj();
    }
    SpectralScalar::from_coeffs(lattice, c).expect("length matches lattice")
}

fn profiled_solenoidal<R: Rng>(lattice: WaveLattice, rng: &mut R, p: f64) -> SpectralVector2 {
    let v = SpectralVector2 {
        x1: profiled_scalar(lattice, rng, p),
        x2: profiled_scalar(lattice, rng, p),
    };
    let mut v = leray_project(&v);
    v.set_mean_zero();
    v
}

/// Initial state for `cfg`: divergence-free, mean-zero, coefficient profile
/// `(1+|k|²)^{-(N+2)/2}`, scaled so `‖u₀‖_{H^N} + ‖b₀‖_{H^N} = ε`.
///
/// Panics if the configured lattice is invalid; call [`RunConfig::validate`] first.
pub fn synthesize_initial_data(cfg: &RunConfig) -> FlowState {
    let lattice = cfg.lattice().expect("validated config");
    let mut state = FlowState::zeros(lattice);
    if cfg.epsilon == 0.0 {
        return state;
    }
    let p = cfg.n_sob + 2.0;
    let mut rng = seeded(cfg.seed);
    let u = profiled_solenoidal(lattice, &mut rng, p);
    let b = if cfg.zero_b0 {
        SpectralVector2::zeros(lattice)
    } else {
        profiled_solenoidal(lattice, &mut rng, p)
    };
    let total = u.sobolev_norm(cfg.n_sob) + b.sobolev_norm(cfg.n_sob);
    let scale = cfg.epsilon / total;
    state.u = u.scale(scale);
    state.b = b.scale(scale);
    state
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(modes: usize, seed: u64) -> RunConfig {
        RunConfig {
            modes,
            seed,
            ..RunConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synthesize_initial_data(&cfg(32, 7));
        let b = synthesize_initial_data(&cfg(32, 7));
        assert_eq!(a, b);
        let c = synthesize_initial_data(&cfg(32, 8));
        assert_ne!(a, c);
    }

    #[test]
    fn admissible_and_normalized() {
        for seed in 0..10 {
            let c = cfg(32, seed);
            let s = synthesize_initial_data(&c);
            s.check_invariants(1e-12).unwrap();
            assert_eq!(s.u.reality_defect(), 0.0);
            let total = s.u.sobolev_norm(c.n_sob) + s.b.sobolev_norm(c.n_sob);
            assert!((total - c.epsilon).abs() <= 1e-12 * c.epsilon, "{total}");
        }
    }

    #[test]
    fn zero_epsilon_and_zero_b0() {
        let mut c = cfg(16, 1);
        c.epsilon = 0.0;
        assert_eq!(synthesize_initial_data(&c), FlowState::zeros(c.lattice().unwrap()));
        c.epsilon = 1e-3;
        c.zero_b0 = true;
        let s = synthesize_initial_data(&c);
        assert_eq!(s.b.max_abs(), 0.0);
        assert!((s.u.sobolev_norm(c.n_sob) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn scalar_profile_is_exact() {
        let l = WaveLattice::new(16).unwrap();
        let f = profiled_scalar(l, &mut seeded(3), 4.0);
        for (_, k) in l.iter() {
            let want = if k == [0, 0] || l.is_nyquist(k) {
                0.0
            } else {
                (1.0 + k_sq(k)).powf(-2.0)
            };
            assert!((f.coeff(k).norm() - want).abs() <= 1e-15 * want.max(1e-300));
        }
    }

    #[test]
    fn shell_profile_matches_on_average() {
        // Monte-Carlo shell means of |û| at |k| = 8 against |k| = 4
        let shell = |s: &FlowState, q: i64| {
            let l = s.lattice();
            let (mut sum, mut count) = (0.0, 0);
            for (_, k) in l.iter() {
                if k[0] * k[0] + k[1] * k[1] == q {
                    sum += (s.u.x1.coeff(k).norm_sqr() + s.u.x2.coeff(k).norm_sqr()).sqrt();
                    count += 1;
                }
            }
            sum / count as f64
        };
        let c = cfg(32, 0);
        let (mut hi, mut lo) = (0.0, 0.0);
        for seed in 0..20 {
            let s = synthesize_initial_data(&cfg(32, seed));
            hi += shell(&s, 64);
            lo += shell(&s, 16);
        }
        let want = (65.0f64 / 17.0).powf(-(c.n_sob + 2.0) / 2.0);
        let got = hi / lo;
        assert!((got / want - 1.0).abs() < 0.3, "{got} vs {want}");
    }
}
