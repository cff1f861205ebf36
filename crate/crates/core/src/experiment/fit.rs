//! Power-law decay fits `q(t) ~ (1+t)^p` by least squares in log-log space.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergySample;
use crate::sum::compensated;

/// Values below this are treated as numerically extinct.
pub const DECAY_FLOOR: f64 = 1e-14;

pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} samples with t >= t_min, found {found}")]
    TooFewSamples { found: usize, needed: usize },
    #[error("nonpositive value {value} at t = {t}")]
    NonPositive { t: f64, value: f64 },
    #[error("time and value series differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub stderr: f64,
    pub samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    /// The slope steepens markedly over the window, as for exponential decay.
    pub super_polynomial: bool,
    /// First time the quantity fell below [`DECAY_FLOOR`]; the fit stops there.
    pub floor_hit: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FitOutcome {
    Fitted(DecayFit),
    /// Decay faster than measurable: the quantity reached [`DECAY_FLOOR`] at
    /// `t`, leaving too few samples above it.
    BelowFloor { t: f64 },
}

impl FitOutcome {
    pub fn exponent(&self) -> Option<f64> {
        match self {
            FitOutcome::Fitted(f) => Some(f.exponent),
            FitOutcome::BelowFloor { .. } => None,
        }
    }

    /// One-sided check: decay at least as fast as `(1+t)^bound`, up to `slack`.
    pub fn decays_at_least(&self, bound: f64, slack: f64) -> bool {
        match self {
            FitOutcome::Fitted(f) => f.exponent <= bound + slack,
            FitOutcome::BelowFloor { .. } => true,
        }
    }
}

/// Ordinary least squares slope and its standard error.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = compensated(x.iter().copied()) / n;
    let my = compensated(y.iter().copied()) / n;
    let sxx = compensated(x.iter().map(|v| (v - mx) * (v - mx)));
    let sxy = compensated(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    if sxx == 0.0 {
        return (0.0, f64::INFINITY);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = compensated(x.iter().zip(y).map(|(a, b)| {
        let e = b - intercept - slope * a;
        e * e
    }));
    let stderr = if x.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, stderr)
}

/// Fits `log q` against `log(1+t)` over `t >= t_min`.
pub fn fit_decay(t: &[f64], q: &[f64], t_min: f64) -> Result<FitOutcome, FitError> {
    if t.len() != q.len() {
        return Err(FitError::LengthMismatch(t.len(), q.len()));
    }
    let mut window: Vec<(f64, f64)> = t.iter().zip(q).filter(|(ti, _)| **ti >= t_min).map(|(a, b)| (*a, *b)).collect();
    if window.len() < MIN_FIT_SAMPLES {
        return Err(FitError::TooFewSamples {
            found: window.len(),
            needed: MIN_FIT_SAMPLES,
        });
    }
    if let Some(&(ti, v)) = window.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(FitError::NonPositive { t: ti, value: v });
    }
    let floor_hit = window.iter().position(|(_, v)| *v < DECAY_FLOOR);
    if let Some(i) = floor_hit {
        if i < MIN_FIT_SAMPLES {
            return Ok(FitOutcome::BelowFloor { t: window[i].0 });
        }
    }
    let floor_hit = floor_hit.map(|i| {
        let t = window[i].0;
        window.truncate(i);
        t
    });
    let x: Vec<f64> = window.iter().map(|(ti, _)| ti.ln_1p()).collect();
    let y: Vec<f64> = window.iter().map(|(_, v)| v.ln()).collect();
    let (exponent, stderr) = ols(&x, &y);
    let half = x.len() / 2;
    let (early, _) = ols(&x[..half], &y[..half]);
    let (late, _) = ols(&x[half..], &y[half..]);
    Ok(FitOutcome::Fitted(DecayFit {
        exponent,
        stderr,
        samples: x.len(),
        t_min: window[0].0,
        t_max: window[window.len() - 1].0,
        super_polynomial: late < 1.25 * early - 0.5,
        floor_hit,
    }))
}

/// Quantities of a sample series that can be fitted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    /// `‖u‖_{H^{γ_i}} + ‖b‖_{H^{γ_i}}` for the `i`-th configured `γ`.
    HGammaSum(usize),
    Energy,
    Dissipation,
    L2U,
    L2B,
}

impl Quantity {
    pub fn extract(&self, s: &EnergySample) -> f64 {
        match *self {
            Quantity::HGammaSum(i) => s.h_gamma_sum(i),
            Quantity::Energy => s.e,
            Quantity::Dissipation => s.d,
            Quantity::L2U => s.l2_u,
            Quantity::L2B => s.l2_b,
        }
    }
}

pub fn fit_samples(samples: &[EnergySample], quantity: Quantity, t_min: f64) -> Result<FitOutcome, FitError> {
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let q: Vec<f64> = samples.iter().map(|s| quantity.extract(s)).collect();
    fit_decay(&t, &q, t_min)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn fitted(o: FitOutcome) -> DecayFit {
        match o {
            FitOutcome::Fitted(f) => f,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exact_power_law() {
        let t = grid(0.0, 50.0, 100);
        let q: Vec<f64> = t.iter().map(|x| (1.0 + x).powi(-3)).collect();
        let f = fitted(fit_decay(&t, &q, 0.0).unwrap());
        assert!((f.exponent + 3.0).abs() < 1e-10, "{}", f.exponent);
        assert!(f.stderr < 1e-10);
        assert!(!f.super_polynomial);
        assert_eq!(f.samples, 100);
    }

    #[test]
    fn constant_series() {
        let t = grid(0.0, 10.0, 20);
        let f = fitted(fit_decay(&t, &[4.2; 20], 0.0).unwrap());
        assert!(f.exponent.abs() < 1e-12);
        assert!(!f.super_polynomial);
    }

    #[test]
    fn exponential_is_flagged() {
        let t = grid(10.0, 50.0, 100);
        let q: Vec<f64> = t.iter().map(|x| (-x).exp()).collect();
        let f = fitted(fit_decay(&t, &q, 0.0).unwrap());
        // secant slope of -t against ln(1+t) over the part above the floor
        let secant = -(f.t_max - 10.0) / ((1.0 + f.t_max) / 11.0).ln();
        assert!(f.exponent < -3.0);
        assert!((f.exponent / secant - 1.0).abs() < 0.1, "{} vs {secant}", f.exponent);
        assert!(f.super_polynomial);
        assert!((f.floor_hit.unwrap() - 14.0 * 10f64.ln()).abs() < 0.5);
        assert!(f.t_max < f.floor_hit.unwrap());
    }

    #[test]
    fn window_and_errors() {
        let t = grid(0.0, 10.0, 30);
        let q: Vec<f64> = t.iter().map(|x| (1.0 + x).powf(-1.5)).collect();
        let f = fitted(fit_decay(&t, &q, 5.0).unwrap());
        assert!(f.t_min >= 5.0 && f.t_max == 10.0);
        assert!(f.samples < 30);
        assert_eq!(
            fit_decay(&t, &q, 9.0),
            Err(FitError::TooFewSamples { found: 3, needed: 10 })
        );
        let mut bad = q.clone();
        bad[20] = 0.0;
        assert!(matches!(fit_decay(&t, &bad, 0.0), Err(FitError::NonPositive { .. })));
        bad[20] = f64::NAN;
        assert!(matches!(fit_decay(&t, &bad, 0.0), Err(FitError::NonPositive { .. })));
        bad[20] = 1e-15;
        let f = fitted(fit_decay(&t, &bad, 0.0).unwrap());
        assert_eq!((f.samples, f.floor_hit), (20, Some(t[20])));
        bad[5] = 1e-15;
        assert_eq!(fit_decay(&t, &bad, 0.0), Ok(FitOutcome::BelowFloor { t: t[5] }));
        assert!(fit_decay(&t, &q[1..], 0.0).is_err());
    }

    #[test]
    fn one_sided_check() {
        let f = FitOutcome::Fitted(DecayFit {
            exponent: -1.2,
            stderr: 0.0,
            samples: 10,
            t_min: 5.0,
            t_max: 50.0,
            super_polynomial: false,
            floor_hit: None,
        });
        assert!(f.decays_at_least(-1.5, 0.5));
        assert!(!f.decays_at_least(-1.5, 0.2));
        assert!(FitOutcome::BelowFloor { t: 3.0 }.decays_at_least(-100.0, 0.0));
    }

    proptest! {
        #[test]
        fn recovers_power_laws(p in -6.0f64..2.0, c in 1e-6f64..1e3, t0 in 0.0f64..5.0) {
            let t = grid(t0, t0 + 40.0, 60);
            let q: Vec<f64> = t.iter().map(|x| c * (1.0 + x).powf(p)).collect();
            prop_assume!(q.iter().all(|v| *v >= DECAY_FLOOR));
            let f = fitted(fit_decay(&t, &q, 0.0).unwrap());
            prop_assert!((f.exponent - p).abs() < 1e-9);
            prop_assert!(!f.super_polynomial);
        }
    }
}
