use std::f64::consts::PI;

use num_complex::Complex64;

use super::*;
use crate::random::random_state;
use crate::spectral::SpectralVector2;

fn golden() -> BackgroundField {
    BackgroundField::uncertified([1.0, (1.0 + 5f64.sqrt()) / 2.0])
}

fn lat(m: usize) -> WaveLattice {
    WaveLattice::new(m).unwrap()
}

fn ctl(t_end: f64, sample: f64) -> StepControl {
    StepControl {
        cfl: 0.5,
        dt_max: 0.05,
        dt_min: 1e-9,
        t_end,
        sample_interval: sample,
    }
}

fn distance(a: &FlowState, b: &FlowState) -> f64 {
    let du = &a.u - &b.u;
    let db = &a.b - &b.b;
    (du.l2_norm().powi(2) + db.l2_norm().powi(2)).sqrt()
}

#[test]
fn control_validation() {
    assert!(ctl(1.0, 0.1).validate().is_ok());
    for bad in [
        StepControl { cfl: 0.0, ..ctl(1.0, 0.1) },
        StepControl { cfl: 1.5, ..ctl(1.0, 0.1) },
        StepControl { dt_min: 0.0, ..ctl(1.0, 0.1) },
        StepControl { dt_min: 1.0, dt_max: 0.5, ..ctl(1.0, 0.1) },
        StepControl { sample_interval: 0.0, ..ctl(1.0, 0.1) },
        StepControl { t_end: f64::NAN, ..ctl(1.0, 0.1) },
    ] {
        assert!(matches!(bad.validate(), Err(IntegratorError::InvalidControl(_))), "{bad:?}");
    }
}

#[test]
fn dt_for_quiescent_state_is_background_limited() {
    let l = lat(16);
    let bg = golden();
    let c = StepControl { dt_max: 10.0, ..ctl(1.0, 0.1) };
    let dt = choose_dt(&FlowState::zeros(l), &bg, &c).unwrap();
    let expect = c.cfl * (2.0 * PI / 16.0) / (bg.norm() + SPEED_FLOOR);
    assert!((dt - expect).abs() <= 1e-15 * expect);
    let capped = choose_dt(&FlowState::zeros(l), &bg, &ctl(1.0, 0.1)).unwrap();
    assert_eq!(capped, 0.05);
}

#[test]
fn dt_shrinks_with_velocity() {
    let l = lat(16);
    let bg = BackgroundField::uncertified([0.0, 0.0]);
    let c = StepControl { dt_max: 10.0, ..ctl(1.0, 0.1) };
    // u = (0, 2A cos x1) has max |u| = 2A.
    let mk = |amp: f64| FlowState {
        t: 0.0,
        u: SpectralVector2::solenoidal_mode(l, [1, 0], Complex64::new(amp, 0.0)),
        b: SpectralVector2::zeros(l),
    };
    let dt1 = choose_dt(&mk(0.5e3), &bg, &c).unwrap();
    let dt2 = choose_dt(&mk(1.0e3), &bg, &c).unwrap();
    assert!((dt1 / dt2 - 2.0).abs() < 1e-9);
    let expect = c.cfl * (2.0 * PI / 16.0) / 1e3;
    assert!((dt1 - expect).abs() < 1e-9 * expect);
}

#[test]
fn dt_errors() {
    let l = lat(8);
    let mut s = FlowState::zeros(l);
    s.u.x1.coeffs_mut()[l.flat_index([1, 1]).unwrap()] = Complex64::new(f64::NAN, 0.0);
    let err = choose_dt(&s, &golden(), &ctl(1.0, 0.1)).unwrap_err();
    assert!(matches!(err, IntegratorError::NonFinite { field: "u", k: [1, 1], .. }), "{err}");

    let fast = FlowState {
        t: 0.0,
        u: SpectralVector2::solenoidal_mode(l, [1, 0], Complex64::new(1e12, 0.0)),
        b: SpectralVector2::zeros(l),
    };
    let err = choose_dt(&fast, &golden(), &ctl(1.0, 0.1)).unwrap_err();
    assert!(matches!(err, IntegratorError::BlowUp { .. }), "{err}");
}

#[test]
fn pure_diffusion_is_exact() {
    let l = lat(16);
    let bg = BackgroundField::uncertified([0.0, 0.0]);
    for (k, dt) in [([1, 0], 0.1), ([2, -3], 0.37), ([0, 5], 1e-3)] {
        let b = SpectralVector2::solenoidal_mode(l, k, Complex64::new(0.3, -0.2));
        let s = FlowState {
            t: 0.0,
            u: SpectralVector2::zeros(l),
            b: b.clone(),
        };
        let next = step_if_rk4(&s, &bg, dt).unwrap();
        let decay = (-((k[0] * k[0] + k[1] * k[1]) as f64) * dt).exp();
        let expect = b.scale(decay);
        // b·∇b vanishes for a single mode; only transform roundoff remains
        assert!((&next.b - &expect).max_abs() <= 1e-15 * b.max_abs(), "k = {k:?}");
        assert!(next.u.max_abs() <= 1e-15 * b.max_abs());
        assert_eq!(next.t, dt);
    }
}

#[test]
fn zero_step_is_identity() {
    let s = random_state(lat(16), 3, 0.1, 2.0);
    let next = step_if_rk4(&s, &golden(), 0.0).unwrap();
    assert_eq!(next, s);
}

#[test]
fn steps_preserve_invariants() {
    let l = lat(16);
    let mut it = Integrator::new(l, golden());
    let mut s = random_state(l, 4, 0.3, 2.0);
    for _ in 0..20 {
        s = it.step_if_rk4(&s, 0.02).unwrap();
        s.check_invariants(1e-12).unwrap();
    }
    assert_eq!(it.stats().steps, 20);
}

#[test]
fn zero_data_stays_zero() {
    let l = lat(16);
    let mut seen = 0;
    let out = advance_to(&FlowState::zeros(l), &golden(), &ctl(2.0, 0.5), |s| {
        assert_eq!(s.u.max_abs(), 0.0);
        assert_eq!(s.b.max_abs(), 0.0);
        seen += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, 5);
    assert_eq!(out.t, 2.0);
    assert_eq!(out.u.max_abs() + out.b.max_abs(), 0.0);
}

#[test]
fn t_end_equal_to_start_calls_observer_once() {
    let s = random_state(lat(8), 1, 0.1, 2.0);
    let mut calls = 0;
    let c = StepControl { t_end: 0.0, ..ctl(0.0, 0.1) };
    let out = advance_to(&s, &golden(), &c, |_| {
        calls += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(calls, 1);
    assert_eq!(out, s);
}

#[test]
fn samples_land_on_exact_times() {
    let l = lat(16);
    let s = random_state(l, 2, 0.05, 2.0);
    let mut times = Vec::new();
    let c = StepControl { dt_max: 0.07, ..ctl(1.05, 0.25) };
    let out = advance_to(&s, &golden(), &c, |s| {
        times.push(s.t);
        Ok(())
    })
    .unwrap();
    assert_eq!(times, vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.05]);
    assert_eq!(out.t, 1.05);
}

#[test]
fn end_before_start_is_rejected() {
    let mut s = FlowState::zeros(lat(8));
    s.t = 2.0;
    let err = advance_to(&s, &golden(), &ctl(1.0, 0.1), |_| Ok(())).unwrap_err();
    assert!(matches!(err, IntegratorError::EndBeforeStart { .. }));
}

#[test]
fn observer_failure_propagates() {
    let s = FlowState::zeros(lat(8));
    let mut calls = 0;
    let err = advance_to(&s, &golden(), &ctl(1.0, 0.25), |st| {
        calls += 1;
        if st.t >= 0.5 {
            Err("stop".into())
        } else {
            Ok(())
        }
    })
    .unwrap_err();
    assert!(matches!(err, IntegratorError::Observer { t, .. } if t == 0.5));
    assert_eq!(calls, 3);
}

#[test]
fn nan_state_aborts_step_with_mode_report() {
    let l = lat(8);
    let mut s = random_state(l, 5, 0.1, 2.0);
    s.b.x2.coeffs_mut()[l.flat_index([-2, 1]).unwrap()] = Complex64::new(0.0, f64::INFINITY);
    let err = step_if_rk4(&s, &golden(), 0.01).unwrap_err();
    assert!(matches!(err, IntegratorError::NonFinite { field: "b", k: [-2, 1], .. }), "{err}");
}

#[test]
fn richardson_order_is_four() {
    let l = lat(16);
    let bg = golden();
    let s = random_state(l, 6, 0.5, 6.0);
    let mut it = Integrator::new(l, bg);
    let t = 0.2;
    let runs: Vec<FlowState> = [80usize, 160, 320]
        .iter()
        .map(|&n| it.advance_fixed(&s, t / n as f64, n).unwrap())
        .collect();
    let e1 = distance(&runs[0], &runs[1]);
    let e2 = distance(&runs[1], &runs[2]);
    let order = (e1 / e2).log2();
    assert!(order >= 3.9, "observed order {order} ({e1:e}, {e2:e})");
}

#[test]
fn discrete_energy_balance_uses_stage_quadrature() {
    let l = lat(16);
    let s = random_state(l, 7, 0.2, 6.0);
    let energy = |s: &FlowState| 0.5 * (s.u.l2_norm().powi(2) + s.b.l2_norm().powi(2));
    let mut drift = Vec::new();
    for n in [100usize, 200] {
        let mut it = Integrator::new(l, golden());
        let out = it.advance_fixed(&s, 0.5 / n as f64, n).unwrap();
        drift.push((energy(&out) - energy(&s) + it.stats().dissipation).abs());
    }
    assert!(drift[1] < 1e-8 * energy(&s), "{drift:?}");
    assert!(drift[0] / drift[1] > 12.0, "{drift:?}");
}
