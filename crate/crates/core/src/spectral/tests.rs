use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn lat(m: usize) -> WaveLattice {
    WaveLattice::new(m).unwrap()
}

/// Real random field with modes restricted to `|k_i| <= band`.
fn random_field(lattice: WaveLattice, seed: u64, band: i64) -> SpectralScalar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralScalar::from_fn(lattice, |k| {
        if k[0].abs() <= band && k[1].abs() <= band {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        } else {
            c(0.0, 0.0)
        }
    });
    f.symmetrize();
    f
}

/// Direct evaluation of `Σ_k m(k) coeff(k) e^{ik·x}` at grid point `(i, j)`.
fn direct_eval(f: &SpectralScalar, q: usize, i: usize, j: usize, m: impl Fn([i64; 2]) -> f64) -> Complex64 {
    let x = [2.0 * PI * i as f64 / q as f64, 2.0 * PI * j as f64 / q as f64];
    f.lattice()
        .iter()
        .map(|(idx, k)| {
            let ph = k[0] as f64 * x[0] + k[1] as f64 * x[1];
            f.coeffs()[idx] * m(k) * Complex64::from_polar(1.0, ph)
        })
        .sum()
}

fn samples_of(q: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(q * q);
    for i in 0..q {
        for j in 0..q {
            out.push(f(2.0 * PI * i as f64 / q as f64, 2.0 * PI * j as f64 / q as f64));
        }
    }
    out
}

#[test]
fn zero_samples_give_zero_coefficients() {
    let l = lat(8);
    let f = forward_transform(l, &vec![0.0; 144]).unwrap();
    assert!(f.coeffs().iter().all(|&z| z == c(0.0, 0.0)));
}

#[test]
fn cosine_has_half_coefficients() {
    let l = lat(8);
    let q = l.padded_dim();
    let s = samples_of(q, |x1, _| x1.cos());
    let f = forward_transform(l, &s).unwrap();
    for (idx, k) in l.iter() {
        let expect = if k == [1, 0] || k == [-1, 0] { 0.5 } else { 0.0 };
        assert!((f.coeffs()[idx] - c(expect, 0.0)).norm() < 1e-15, "k={k:?}");
        // direct DFT sum as the independent route
        let mut direct = c(0.0, 0.0);
        for i in 0..q {
            for j in 0..q {
                let x = [2.0 * PI * i as f64 / q as f64, 2.0 * PI * j as f64 / q as f64];
                let ph = -(k[0] as f64 * x[0] + k[1] as f64 * x[1]);
                direct += Complex64::from_polar(s[i * q + j], ph);
            }
        }
        direct /= (q * q) as f64;
        if !l.is_nyquist(k) {
            assert!((direct - f.coeffs()[idx]).norm() < 1e-14);
        }
    }
}

#[test]
fn roundtrip_is_identity_on_band_limited_data() {
    for m in [8, 16, 32] {
        let l = lat(m);
        let f = random_field(l, m as u64, (m / 2 - 1) as i64);
        for q in [m, l.padded_dim(), 2 * m] {
            let phys = inverse_transform(&f, q).unwrap();
            let g = forward_transform(l, &phys).unwrap();
            let err = (&g - &f).l2_norm() / f.l2_norm();
            assert!(err <= 1e-13, "m={m} q={q} err={err}");
        }
    }
}

#[test]
fn inverse_matches_direct_summation() {
    let l = lat(8);
    let f = random_field(l, 3, 3);
    let q = 12;
    let phys = inverse_transform(&f, q).unwrap();
    for i in 0..q {
        for j in 0..q {
            let d = direct_eval(&f, q, i, j, |_| 1.0);
            assert!(d.im.abs() < 1e-13);
            assert!((d.re - phys[i * q + j]).abs() < 1e-13);
        }
    }
}

#[test]
fn paired_transforms_agree_with_single() {
    let l = lat(16);
    let f = random_field(l, 1, 7);
    let g = random_field(l, 2, 7);
    let mut grid = FourierGrid::padded(l);
    let (pf, pg) = grid.inverse_pair(&f, &g).unwrap();
    assert_eq!(pf.len(), grid.points());
    let sf = grid.inverse(&f).unwrap();
    let sg = grid.inverse(&g).unwrap();
    for i in 0..pf.len() {
        assert!((pf[i] - sf[i]).abs() < 1e-13);
        assert!((pg[i] - sg[i]).abs() < 1e-13);
    }
    let (ff, gg) = grid.forward_pair(&pf, &pg).unwrap();
    assert!((&ff - &f).l2_norm() < 1e-13 * f.l2_norm());
    assert!((&gg - &g).l2_norm() < 1e-13 * g.l2_norm());
}

#[test]
fn dimension_and_lattice_errors() {
    let l = lat(8);
    assert!(matches!(
        forward_transform(l, &[0.0; 10]),
        Err(SpectralError::DimensionMismatch { .. })
    ));
    assert!(matches!(FourierGrid::new(l, 6), Err(SpectralError::GridTooSmall { .. })));
    let mut grid = FourierGrid::new(l, 12).unwrap();
    assert!(grid.forward(&[0.0; 100]).is_err());
    let other = SpectralScalar::zeros(lat(16));
    assert!(matches!(grid.inverse(&other), Err(SpectralError::LatticeMismatch { .. })));
    let f = SpectralScalar::zeros(l);
    assert!(f.weighted_inner_product(&other, 0.0).is_err());
    assert!(dealiased_product(&f, &other).is_err());
}

#[test]
fn derivative_of_cosine_is_minus_sine() {
    let l = lat(8);
    let f = SpectralScalar::mode_pair(l, [1, 0], c(0.5, 0.0));
    let d = f.partial_derivative(1);
    // -sin(x1) = (i/2) e^{ix1} - (i/2) e^{-ix1}
    assert!((d.coeff([1, 0]) - c(0.0, 0.5)).norm() < 1e-16);
    assert!((d.coeff([-1, 0]) - c(0.0, -0.5)).norm() < 1e-16);
    let phys = inverse_transform(&d, 12).unwrap();
    let expect = samples_of(12, |x1, _| -x1.sin());
    for (a, b) in phys.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-14);
    }
    assert_eq!(f.partial_derivative(2).max_abs_coeff(), 0.0);
}

#[test]
fn constant_has_zero_derivatives() {
    let l = lat(8);
    let f = SpectralScalar::constant(l, 3.5);
    assert_eq!(f.partial_derivative(1).max_abs_coeff(), 0.0);
    assert_eq!(f.partial_derivative(2).max_abs_coeff(), 0.0);
    assert_eq!(f.directional_derivative([1.0, 2.0]).max_abs_coeff(), 0.0);
}

#[test]
fn mixed_partials_commute() {
    let l = lat(16);
    let f = random_field(l, 9, 7);
    let a = f.partial_derivative(1).partial_derivative(2);
    let b = f.partial_derivative(2).partial_derivative(1);
    assert!((&a - &b).max_abs_coeff() <= 1e-14 * a.max_abs_coeff());
}

#[test]
fn directional_derivative_examples() {
    let l = lat(8);
    let f = SpectralScalar::mode_pair(l, [1, 0], c(0.5, 0.0));
    assert_eq!(f.directional_derivative([1.0, 0.0]), f.partial_derivative(1));
    assert_eq!(f.directional_derivative([0.0, 0.0]).max_abs_coeff(), 0.0);

    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let g = SpectralScalar::mode_pair(l, [1, -1], c(1.0, 0.0));
    let dg = g.directional_derivative([1.0, phi]);
    let ratio = dg.coeff([1, -1]).norm() / g.coeff([1, -1]).norm();
    assert!((ratio - (phi - 1.0)).abs() < 1e-15);
    // kills the mean
    let h = &g + &SpectralScalar::constant(l, 4.0);
    assert_eq!(h.directional_derivative([1.0, phi]).mean(), 0.0);
}

#[test]
fn sobolev_norm_hand_values() {
    let l = lat(8);
    assert_eq!(SpectralScalar::zeros(l).sobolev_norm(3.0), 0.0);
    let f = SpectralScalar::mode_pair(l, [1, 0], c(1.0, 0.0)); // 2cos(x1)
    assert!((f.sobolev_norm(1.0) - 2.0).abs() < 1e-15);
    assert!((f.homogeneous_norm(2.0) - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(SpectralScalar::constant(l, 5.0).homogeneous_norm(1.0), 0.0);
    assert!((f.homogeneous_norm(0.0) - f.sobolev_norm(0.0)).abs() < 1e-15);
}

#[test]
fn sobolev_norm_matches_quadrature_of_multiplier() {
    let l = lat(8);
    let q = l.padded_dim();
    for (seed, s) in [(1u64, 0.0), (2, 1.0), (3, 2.5), (4, -1.5)] {
        let f = random_field(l, seed, 3);
        let mut quad = 0.0;
        for i in 0..q {
            for j in 0..q {
                let g = direct_eval(&f, q, i, j, |k| (1.0 + (k[0] * k[0] + k[1] * k[1]) as f64).powf(s / 2.0));
                quad += g.norm_sqr();
            }
        }
        quad /= (q * q) as f64;
        let lattice_sum = f.sobolev_norm_sq(s);
        assert!((lattice_sum - quad).abs() <= 1e-10 * quad, "s={s}: {lattice_sum} vs {quad}");
    }
}

#[test]
fn plancherel_against_grid_quadrature() {
    for seed in 0..5 {
        let l = lat(16);
        let f = random_field(l, seed, 7);
        let phys = inverse_transform(&f, l.padded_dim()).unwrap();
        let quad = phys.iter().map(|x| x * x).sum::<f64>() / phys.len() as f64;
        assert!((f.sobolev_norm_sq(0.0) - quad).abs() <= 1e-10 * quad);
    }
}

#[test]
fn inner_product_examples() {
    let l = lat(8);
    let cos1 = SpectralScalar::mode_pair(l, [1, 0], c(0.5, 0.0));
    let sin1 = SpectralScalar::mode_pair(l, [1, 0], c(0.0, -0.5));
    let cos2 = SpectralScalar::mode_pair(l, [0, 1], c(0.5, 0.0));
    for s in [0.0, 1.0, 2.7] {
        assert_eq!(cos1.weighted_inner_product(&sin1, s).unwrap(), 0.0);
        assert_eq!(cos1.weighted_inner_product(&cos2, s).unwrap(), 0.0);
    }
    let f = random_field(l, 5, 3);
    let ff = f.weighted_inner_product(&f, 1.5).unwrap();
    assert!((ff - f.homogeneous_norm_sq(1.5)).abs() <= 1e-14 * ff);
}

#[test]
fn product_identity_and_trig_identity() {
    let l = lat(16);
    let g = random_field(l, 11, 7);
    let one = SpectralScalar::constant(l, 1.0);
    let p = dealiased_product(&one, &g).unwrap();
    let d = (&p - &g).max_abs_coeff();
    assert!(d <= 1e-13 * g.max_abs_coeff(), "{d} {}", g.max_abs_coeff());

    let cos1 = SpectralScalar::mode_pair(l, [1, 0], c(0.5, 0.0));
    let sq = dealiased_product(&cos1, &cos1).unwrap();
    for (idx, k) in l.iter() {
        let expect = match k {
            [0, 0] => 0.5,
            [2, 0] | [-2, 0] => 0.25,
            _ => 0.0,
        };
        assert!((sq.coeffs()[idx] - c(expect, 0.0)).norm() < 1e-15, "k={k:?}");
    }
}

#[test]
fn product_is_exact_for_full_band_inputs() {
    // Convolution computed directly over the lattice is the oracle.
    let l = lat(8);
    let f = random_field(l, 21, 3);
    let g = random_field(l, 22, 3);
    let p = dealiased_product(&f, &g).unwrap();
    for (idx, k) in l.iter() {
        if l.is_nyquist(k) {
            continue;
        }
        let mut conv = c(0.0, 0.0);
        for (i, p1) in l.iter() {
            let p2 = [k[0] - p1[0], k[1] - p1[1]];
            conv += f.coeffs()[i] * g.coeff(p2);
        }
        assert!((conv - p.coeffs()[idx]).norm() < 1e-14, "k={k:?}");
    }
}

#[test]
fn product_adjoint_identity_by_quadrature() {
    // Degrees 3 + 3 + 3 < cutoff, so <fg, h> = <f, gh> = (2π)^{-2}∫ fgh exactly.
    let l = lat(16);
    let f = random_field(l, 31, 3);
    let g = random_field(l, 32, 3);
    let h = random_field(l, 33, 3);
    let fg = dealiased_product(&f, &g).unwrap();
    let gh = dealiased_product(&g, &h).unwrap();
    let lhs = fg.inner_product(&h).unwrap();
    let rhs = f.inner_product(&gh).unwrap();
    let q = 20;
    let mut quad = 0.0;
    for i in 0..q {
        for j in 0..q {
            quad += direct_eval(&f, q, i, j, |_| 1.0).re
                * direct_eval(&g, q, i, j, |_| 1.0).re
                * direct_eval(&h, q, i, j, |_| 1.0).re;
        }
    }
    quad /= (q * q) as f64;
    assert!((lhs - quad).abs() < 1e-12 * quad.abs().max(1.0));
    assert!((rhs - quad).abs() < 1e-12 * quad.abs().max(1.0));
}

#[test]
fn operations_preserve_reality_and_nyquist() {
    let l = lat(16);
    let f = random_field(l, 41, 7);
    let g = random_field(l, 42, 7);
    let h = l.nyquist();
    let outs = [
        f.partial_derivative(1),
        f.partial_derivative(2),
        f.directional_derivative([0.3, 1.7]),
        f.laplacian(),
        f.fractional_derivative(1.5),
        dealiased_product(&f, &g).unwrap(),
        forward_transform(l, &inverse_transform(&f, 24).unwrap()).unwrap(),
    ];
    for o in &outs {
        assert!(o.reality_defect() < 1e-14);
        for m in -h + 1..=h {
            assert_eq!(o.coeff([h, m]), c(0.0, 0.0));
            assert_eq!(o.coeff([m, h]), c(0.0, 0.0));
        }
    }
}

#[test]
fn directional_derivative_is_skew_adjoint() {
    let l = lat(16);
    let n = [1.0, (1.0 + 5f64.sqrt()) / 2.0];
    for seed in 0..5 {
        let f = random_field(l, 100 + seed, 7);
        let g = random_field(l, 200 + seed, 7);
        for s in [0.0, 1.0, 3.5] {
            let a = f.directional_derivative(n).weighted_inner_product(&g, s).unwrap();
            let b = f.weighted_inner_product(&g.directional_derivative(n), s).unwrap();
            assert!((a + b).abs() <= 1e-12 * a.abs().max(1e-300), "a={a} b={b}");
        }
    }
}

#[test]
fn sobolev_norm_monotone_in_s_for_mean_zero() {
    let l = lat(16);
    let mut f = random_field(l, 7, 7);
    f.set_mean(0.0);
    let mut prev = 0.0;
    for s in [-2.0, -0.5, 0.0, 0.5, 1.0, 4.0, 15.0] {
        let v = f.sobolev_norm(s);
        assert!(v >= prev);
        prev = v;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sobolev_interpolation_holds(seed in 0u64..10_000, s1 in -3.0f64..10.0, gap in 0.1f64..8.0, theta in 0.01f64..0.99) {
        let l = lat(8);
        let f = random_field(l, seed, 3);
        let s2 = s1 + gap;
        let mid = f.sobolev_norm(theta * s1 + (1.0 - theta) * s2);
        let bound = f.sobolev_norm(s1).powf(theta) * f.sobolev_norm(s2).powf(1.0 - theta);
        prop_assert!(mid <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn weighted_inner_product_is_symmetric_bilinear(seed in 0u64..10_000, s in 0.0f64..6.0, a in -3.0f64..3.0) {
        let l = lat(8);
        let f = random_field(l, seed, 3);
        let g = random_field(l, seed + 1, 3);
        let h = random_field(l, seed + 2, 3);
        let fg = f.weighted_inner_product(&g, s).unwrap();
        let gf = g.weighted_inner_product(&f, s).unwrap();
        prop_assert!((fg - gf).abs() <= 1e-12 * fg.abs().max(1.0));
        let mut comb = f.scale(a);
        comb += &h;
        let lhs = comb.weighted_inner_product(&g, s).unwrap();
        let rhs = a * fg + h.weighted_inner_product(&g, s).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (lhs.abs() + rhs.abs()).max(1.0));
    }
}
