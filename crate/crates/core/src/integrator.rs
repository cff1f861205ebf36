//! Integrating-factor RK4 in time with a single advective CFL restriction.
//!
//! The magnetic diffusion is diagonal in Fourier space and is integrated
//! exactly through the factor `e^{-|k|²t}`; every other term is explicit.

use std::error::Error as StdError;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mhd::{BackgroundField, FlowState, MhdSystem};
use crate::spectral::{k_sq, SpectralError, SpectralVector2, WaveLattice};

/// Floor added to the speed so a quiescent state with `n = 0` yields a finite dt.
pub const SPEED_FLOOR: f64 = 1e-12;

pub type ObserverError = Box<dyn StdError + Send + Sync>;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("invalid step control: {0}")]
    InvalidControl(String),
    #[error("t_end = {t_end} lies before the current time {t}")]
    EndBeforeStart { t: f64, t_end: f64 },
    #[error("blow-up at t = {t}: CFL step {dt:e} below dt_min {dt_min:e} (max|u| = {max_u:e}, max|b| = {max_b:e})")]
    BlowUp {
        t: f64,
        dt: f64,
        dt_min: f64,
        max_u: f64,
        max_b: f64,
    },
    #[error("non-finite value in {field} at t = {t}, mode k = {k:?}")]
    NonFinite { t: f64, field: &'static str, k: [i64; 2] },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("observer failed at t = {t}: {source}")]
    Observer {
        t: f64,
        #[source]
        source: ObserverError,
    },
}

/// Time-stepping controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub cfl: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub t_end: f64,
    pub sample_interval: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            dt_max: 0.05,
            dt_min: 1e-8,
            t_end: 1.0,
            sample_interval: 0.5,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        let bad = |msg: String| Err(IntegratorError::InvalidControl(msg));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max) || !self.dt_max.is_finite() {
            return bad(format!(
                "need 0 < dt_min <= dt_max, got dt_min = {}, dt_max = {}",
                self.dt_min, self.dt_max
            ));
        }
        if !(self.sample_interval > 0.0) || !self.sample_interval.is_finite() {
            return bad(format!("sample_interval must be positive, got {}", self.sample_interval));
        }
        if !self.t_end.is_finite() {
            return bad(format!("t_end must be finite, got {}", self.t_end));
        }
        Ok(())
    }
}

/// Counters accumulated across steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: u64,
    /// `∫‖∇b‖²dt` accumulated with the RK stage quadrature.
    pub dissipation: f64,
    pub smallest_dt: f64,
    pub largest_dt: f64,
}

impl StepStats {
    fn record(&mut self, dt: f64, dissipation: f64) {
        if self.steps == 0 {
            self.smallest_dt = dt;
            self.largest_dt = dt;
        } else {
            self.smallest_dt = self.smallest_dt.min(dt);
            self.largest_dt = self.largest_dt.max(dt);
        }
        self.steps += 1;
        self.dissipation += dissipation;
    }
}

/// Reusable stepper: owns the transform plans and the `|k|²` table.
#[derive(Debug)]
pub struct Integrator {
    sys: MhdSystem,
    ksq: Vec<f64>,
    stats: StepStats,
}

impl Integrator {
    pub fn new(lattice: WaveLattice, bg: BackgroundField) -> Self {
        let ksq = lattice.iter().map(|(_, k)| k_sq(k)).collect();
        Self {
            sys: MhdSystem::new(lattice, bg),
            ksq,
            stats: StepStats::default(),
        }
    }

    pub fn system(&mut self) -> &mut MhdSystem {
        &mut self.sys
    }

    pub fn background(&self) -> &BackgroundField {
        self.sys.background()
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = StepStats::default();
    }

    /// CFL step `cfl·h/(|n| + max|u| + max|b| + floor)` clamped to `[dt_min, dt_max]`.
    pub fn choose_dt(&mut self, state: &FlowState, ctl: &StepControl) -> Result<f64, IntegratorError> {
        check_finite(state)?;
        let (max_u, max_b) = self.sys.max_speeds(state)?;
        if !(max_u.is_finite() && max_b.is_finite()) {
            return Err(first_non_finite(state).unwrap_or(IntegratorError::NonFinite {
                t: state.t,
                field: "physical samples",
                k: [0, 0],
            }));
        }
        let h = 2.0 * PI / state.lattice().modes() as f64;
        let speed = self.sys.background().norm() + max_u + max_b + SPEED_FLOOR;
        let dt = ctl.cfl * h / speed;
        if dt < ctl.dt_min {
            return Err(IntegratorError::BlowUp {
                t: state.t,
                dt,
                dt_min: ctl.dt_min,
                max_u,
                max_b,
            });
        }
        Ok(dt.min(ctl.dt_max))
    }

    /// One integrating-factor RK4 step of size `dt`, also returning the stage
    /// quadrature of `∫‖∇b‖²` over the step.
    pub fn step_with_dissipation(&mut self, state: &FlowState, dt: f64) -> Result<(FlowState, f64), IntegratorError> {
        check_finite(state)?;
        if dt == 0.0 {
            return Ok((state.clone(), 0.0));
        }
        let half = self.factors(0.5 * dt);
        let full = self.factors(dt);
        let h = 0.5 * dt;
        let (u0, b0) = (&state.u, &state.b);

        let a = self.sys.nonstiff(u0, b0)?;
        let g1 = b0.homogeneous_norm_sq(1.0);

        let mut u2 = u0.clone();
        u2.axpy(h, &a.du);
        let mut b2 = b0.clone();
        b2.axpy(h, &a.db);
        let b2 = damp(&b2, &half);
        let g2 = b2.homogeneous_norm_sq(1.0);
        let r2 = self.sys.nonstiff(&u2, &b2)?;

        let eb0 = damp(b0, &half);
        let mut u3 = u0.clone();
        u3.axpy(h, &r2.du);
        let mut b3 = eb0;
        b3.axpy(h, &r2.db);
        let g3 = b3.homogeneous_norm_sq(1.0);
        let r3 = self.sys.nonstiff(&u3, &b3)?;

        let mut u4 = u0.clone();
        u4.axpy(dt, &r3.du);
        let mut b4 = damp(b0, &full);
        b4.axpy(dt, &damp(&r3.db, &half));
        let g4 = b4.homogeneous_norm_sq(1.0);
        let r4 = self.sys.nonstiff(&u4, &b4)?;

        let w = dt / 6.0;
        let mut u = u0.clone();
        u.axpy(w, &a.du);
        u.axpy(2.0 * w, &r2.du);
        u.axpy(2.0 * w, &r3.du);
        u.axpy(w, &r4.du);

        let mut mid = r2.db;
        mid += &r3.db;
        let mut b = damp(b0, &full);
        b.axpy(w, &damp(&a.db, &full));
        b.axpy(2.0 * w, &damp(&mid, &half));
        b.axpy(w, &r4.db);

        let next = FlowState { t: state.t + dt, u, b };
        check_finite(&next)?;
        let diss = w * (g1 + 2.0 * g2 + 2.0 * g3 + g4);
        self.stats.record(dt, diss);
        Ok((next, diss))
    }

    pub fn step_if_rk4(&mut self, state: &FlowState, dt: f64) -> Result<FlowState, IntegratorError> {
        self.step_with_dissipation(state, dt).map(|(s, _)| s)
    }

    /// `steps` steps of fixed size `dt`.
    pub fn advance_fixed(&mut self, state: &FlowState, dt: f64, steps: usize) -> Result<FlowState, IntegratorError> {
        let t0 = state.t;
        let mut s = state.clone();
        for j in 0..steps {
            s = self.step_if_rk4(&s, dt)?;
            s.t = t0 + (j + 1) as f64 * dt;
        }
        Ok(s)
    }

    /// Steps to `ctl.t_end`, calling `observer` at `t0 + j·sample_interval`
    /// and at `t_end`. Steps are truncated so these times are hit exactly.
    pub fn advance_to<F>(&mut self, state: &FlowState, ctl: &StepControl, mut observer: F) -> Result<FlowState, IntegratorError>
    where
        F: FnMut(&FlowState) -> Result<(), ObserverError>,
    {
        ctl.validate()?;
        if ctl.t_end < state.t {
            return Err(IntegratorError::EndBeforeStart {
                t: state.t,
                t_end: ctl.t_end,
            });
        }
        let t0 = state.t;
        let notify = |obs: &mut F, s: &FlowState| obs(s).map_err(|source| IntegratorError::Observer { t: s.t, source });

        let mut s = state.clone();
        notify(&mut observer, &s)?;
        let mut j: u64 = 1;
        loop {
            let target = (t0 + j as f64 * ctl.sample_interval).min(ctl.t_end);
            if target <= s.t {
                break;
            }
            let snap = 1e-12 * target.abs().max(1.0);
            while s.t < target {
                let dt = self.choose_dt(&s, ctl)?;
                let remaining = target - s.t;
                let (dt, lands) = if dt >= remaining - snap { (remaining, true) } else { (dt, false) };
                s = self.step_if_rk4(&s, dt)?;
                if lands {
                    s.t = target;
                }
            }
            notify(&mut observer, &s)?;
            if target >= ctl.t_end {
                break;
            }
            j += 1;
        }
        Ok(s)
    }

    fn factors(&self, tau: f64) -> Vec<f64> {
        self.ksq.iter().map(|q| (-q * tau).exp()).collect()
    }
}

fn damp(v: &SpectralVector2, f: &[f64]) -> SpectralVector2 {
    let mut out = v.clone();
    for c in [&mut out.x1, &mut out.x2] {
        for (z, m) in c.coeffs_mut().iter_mut().zip(f) {
            *z *= *m;
        }
    }
    out
}

fn first_non_finite(state: &FlowState) -> Option<IntegratorError> {
    let lat = state.lattice();
    for (field, v) in [("u", &state.u), ("b", &state.b)] {
        for comp in [&v.x1, &v.x2] {
            if let Some(idx) = comp.coeffs().iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Some(IntegratorError::NonFinite {
                    t: state.t,
                    field,
                    k: lat.k_at(idx),
                });
            }
        }
    }
    None
}

fn check_finite(state: &FlowState) -> Result<(), IntegratorError> {
    match first_non_finite(state) {
        Some(e) => Err(e),
        None if !state.t.is_finite() => Err(IntegratorError::NonFinite {
            t: state.t,
            field: "t",
            k: [0, 0],
        }),
        None => Ok(()),
    }
}

/// CFL step with a throwaway plan.
pub fn choose_dt(state: &FlowState, bg: &BackgroundField, ctl: &StepControl) -> Result<f64, IntegratorError> {
    Integrator::new(state.lattice(), *bg).choose_dt(state, ctl)
}

/// Single step with a throwaway plan.
pub fn step_if_rk4(state: &FlowState, bg: &BackgroundField, dt: f64) -> Result<FlowState, IntegratorError> {
    Integrator::new(state.lattice(), *bg).step_if_rk4(state, dt)
}

/// Adaptive integration to `ctl.t_end` with a throwaway plan.
pub fn advance_to<F>(state: &FlowState, bg: &BackgroundField, ctl: &StepControl, observer: F) -> Result<FlowState, IntegratorError>
where
    F: FnMut(&FlowState) -> Result<(), ObserverError>,
{
    Integrator::new(state.lattice(), *bg).advance_to(state, ctl, observer)
}

#[cfg(test)]
mod tests;
