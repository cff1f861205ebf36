//! Oracles shared by the integration tests.

use num_complex::Complex64;

pub type Mat2 = [[Complex64; 2]; 2];

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn norm1(a: &Mat2) -> f64 {
    (0..2).map(|j| a[0][j].norm() + a[1][j].norm()).fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring with a 24-term Taylor series.
pub fn expm(a: &Mat2) -> Mat2 {
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm1(a) * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a.map(|row| row.map(|z| z * scale));
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut sum = [[one, zero], [zero, one]];
    let mut term = sum;
    for n in 1..=24 {
        term = mul(&term, &x).map(|row| row.map(|z| z / n as f64));
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    sum
}

/// Propagator of the linearized per-mode system
/// `â_u' = i(n·k)â_b`, `â_b' = -|k|²â_b + i(n·k)â_u` over time `t`.
pub fn linear_mode_propagator(n: [f64; 2], k: [i64; 2], t: f64) -> Mat2 {
    let w = n[0] * k[0] as f64 + n[1] * k[1] as f64;
    let q = (k[0] * k[0] + k[1] * k[1]) as f64;
    let iw = Complex64::new(0.0, w * t);
    expm(&[[Complex64::new(0.0, 0.0), iw], [iw, Complex64::new(-q * t, 0.0)]])
}
