//! Energy-method functionals: balance residuals, the cross term, the
//! Lyapunov pair `(E, D)`, and a finite-difference monitor of
//! `dE/dt + D/2 ≤ 0` along a sampled trajectory.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mhd::{BackgroundField, FlowState, MhdSystem};
use crate::spectral::{homogeneous_weight, SpectralError, SpectralVector2};
use crate::sum::CompensatedSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("parameter constraint violated: {0}")]
    Constraint(String),
    #[error("the monitor needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Exponents of the stability theorem plus the Lyapunov weight and the
/// cross-term exponent set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofParams {
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_sob: f64,
    /// Reporting regularities.
    pub gammas: Vec<f64>,
    pub a: f64,
    pub s_set: Vec<f64>,
}

impl ProofParams {
    /// `r = 2, α = β = 1/2, N = 15, γ ∈ {5.5, 8, 10}`, integer `S` and `A`
    /// from [`choose_a`].
    pub fn defaults(bg: &BackgroundField) -> Self {
        Self::with_exponents(2.0, 0.5, 0.5, 15.0, vec![5.5, 8.0, 10.0], bg)
    }

    /// Integer cross-term exponents `0..=⌊r+α+2⌋` and `A` from [`choose_a`].
    pub fn with_exponents(r: f64, alpha: f64, beta: f64, n_sob: f64, gammas: Vec<f64>, bg: &BackgroundField) -> Self {
        let top = (r + alpha + 2.0).floor().max(0.0) as usize;
        let s_set: Vec<f64> = (0..=top).map(|s| s as f64).collect();
        let a = choose_a_for(bg, &s_set);
        Self {
            r,
            alpha,
            beta,
            n_sob,
            gammas,
            a,
            s_set,
        }
    }

    /// `r + α + 3`, the regularity carried by `E`.
    pub fn top(&self) -> f64 {
        self.r + self.alpha + 3.0
    }

    /// Smallest admissible `N`: `(2β+3)r + α + 2β + 5`.
    pub fn min_n_sob(&self) -> f64 {
        (2.0 * self.beta + 3.0) * self.r + self.alpha + 2.0 * self.beta + 5.0
    }

    /// Predicted decay exponent `-(N-γ)(β+1)/(N-r-α-3)` of `‖(u,b)‖_{H^γ}`.
    pub fn predicted_exponent(&self, gamma: f64) -> f64 {
        -(self.n_sob - gamma) * (self.beta + 1.0) / (self.n_sob - self.top())
    }

    pub fn validate(&self) -> Result<(), DiagnosticsError> {
        let fail = |m: String| Err(DiagnosticsError::Constraint(m));
        if !(self.r > 1.0) {
            return fail(format!("r > 1 (got r = {})", self.r));
        }
        if !(self.alpha > 0.0) {
            return fail(format!("alpha > 0 (got alpha = {})", self.alpha));
        }
        if !(self.beta > 0.0) {
            return fail(format!("beta > 0 (got beta = {})", self.beta));
        }
        let min_n = self.min_n_sob();
        if !(self.n_sob >= min_n) {
            return fail(format!(
                "N_sob >= (2*beta+3)*r + alpha + 2*beta + 5 = {min_n} (got N_sob = {})",
                self.n_sob
            ));
        }
        if self.gammas.is_empty() {
            return fail("at least one reporting gamma".into());
        }
        for &g in &self.gammas {
            if !(g >= self.top() && g <= self.n_sob) {
                return fail(format!(
                    "r+alpha+3 = {} <= gamma <= N_sob = {} (got gamma = {g})",
                    self.top(),
                    self.n_sob
                ));
            }
        }
        if !(self.a >= 1.0) {
            return fail(format!("A >= 1 (got A = {})", self.a));
        }
        let hi = self.r + self.alpha + 2.0;
        for &s in &self.s_set {
            if !(s >= 0.0 && s <= hi) {
                return fail(format!("S within [0, r+alpha+2 = {hi}] (got s = {s})"));
            }
        }
        Ok(())
    }
}

fn choose_a_for(bg: &BackgroundField, s_set: &[f64]) -> f64 {
    match s_set.iter().copied().reduce(f64::max) {
        Some(top) => 1.0 + (top + 1.0) * bg.norm(),
        None => 1.0,
    }
}

/// `A = 1 + (max S + 1)·|n|`, which makes `E` dominate
/// `‖u‖²_{H^{r+α+3}} + ‖b‖²_{H^{r+α+3}}`.
pub fn choose_a(bg: &BackgroundField, pp: &ProofParams) -> f64 {
    choose_a_for(bg, &pp.s_set)
}

/// Instantaneous `L²` balance `⟨rhs_u,u⟩ + ⟨rhs_b,b⟩ + ‖∇b‖²`, normalized by
/// `1 + ‖u‖² + ‖b‖²_{H¹}`.
pub fn l2_balance_residual(sys: &mut MhdSystem, state: &FlowState) -> Result<f64, SpectralError> {
    let rates = sys.rhs(state)?;
    l2_residual_from_rates(state, &rates.du, &rates.db)
}

/// Same as [`l2_balance_residual`] with caller-supplied rates.
pub fn l2_residual_from_rates(state: &FlowState, du: &SpectralVector2, db: &SpectralVector2) -> Result<f64, SpectralError> {
    let mut acc = CompensatedSum::new();
    acc.add(du.inner_product(&state.u)?);
    acc.add(db.inner_product(&state.b)?);
    acc.add(state.b.homogeneous_norm_sq(1.0));
    let scale = 1.0 + state.u.l2_norm().powi(2) + state.b.sobolev_norm_sq(1.0);
    Ok(acc.value() / scale)
}

/// Both sides of the `H^m` energy identity, where `H^m` means
/// `Σ_{s=0..m} ‖D^s·‖²` with `D = |k|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HmBalance {
    /// `Σ_s ⟨D^s rhs_u, D^s u⟩ + ⟨D^s rhs_b, D^s b⟩ + ‖D^s∇b‖²`.
    pub rate: f64,
    /// The four commutator pairings summed over `s = 1..m`.
    pub commutators: f64,
    /// Sum of the magnitudes of every term on both sides.
    pub scale: f64,
}

impl HmBalance {
    pub fn residual(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            (self.rate - self.commutators).abs() / self.scale
        }
    }
}

pub fn hm_balance(sys: &mut MhdSystem, state: &FlowState, m: u32) -> Result<HmBalance, SpectralError> {
    let (u, b) = (&state.u, &state.b);
    let rates = sys.rhs(state)?;
    let mut rate = CompensatedSum::new();
    let mut comm = CompensatedSum::new();
    let mut scale = CompensatedSum::new();

    for s in 0..=m {
        let p = 2.0 * s as f64;
        let w = move |k: [i64; 2]| homogeneous_weight(k, p);
        let terms = [
            rates.du.pairing(u, w),
            rates.db.pairing(b, w),
            b.map(|f| f.fractional_derivative(s as f64)).homogeneous_norm_sq(1.0),
        ];
        for t in terms {
            rate.add(t);
            scale.add(t.abs());
        }
    }

    let fwd = |sys: &mut MhdSystem, a: &SpectralVector2, c: &SpectralVector2| sys.advect(a, c);
    let uu = fwd(sys, u, u)?;
    let bb = fwd(sys, b, b)?;
    let ub = fwd(sys, u, b)?;
    let bu = fwd(sys, b, u)?;
    for s in 1..=m {
        let s = s as f64;
        let du = u.fractional_derivative(s);
        let dbf = b.fractional_derivative(s);
        // [D^s, a·∇]c = D^s P_M(a·∇c) − P_M(a·∇D^s c)
        let commutator = |sys: &mut MhdSystem, whole: &SpectralVector2, a: &SpectralVector2, dc: &SpectralVector2| {
            fwd(sys, a, dc).map(|inner| &whole.fractional_derivative(s) - &inner)
        };
        let c_uu = commutator(sys, &uu, u, &du)?;
        let c_bb = commutator(sys, &bb, b, &dbf)?;
        let c_ub = commutator(sys, &ub, u, &dbf)?;
        let c_bu = commutator(sys, &bu, b, &du)?;
        let terms = [
            -c_uu.inner_product(&du)?,
            c_bb.inner_product(&du)?,
            -c_ub.inner_product(&dbf)?,
            c_bu.inner_product(&dbf)?,
        ];
        for t in terms {
            comm.add(t);
            scale.add(t.abs());
        }
    }
    Ok(HmBalance {
        rate: rate.value(),
        commutators: comm.value(),
        scale: scale.value(),
    })
}

/// Normalized `|rate − commutators|` of the `H^m` identity.
pub fn hm_balance_residual(sys: &mut MhdSystem, state: &FlowState, m: u32) -> Result<f64, SpectralError> {
    hm_balance(sys, state, m).map(|h| h.residual())
}

/// `Σ_{s∈S} ⟨D^s b, D^s(n·∇u)⟩`.
pub fn cross_term(state: &FlowState, bg: &BackgroundField, s_set: &[f64]) -> Result<f64, SpectralError> {
    let nu = state.u.directional_derivative(bg.n);
    let mut acc = CompensatedSum::new();
    for &s in s_set {
        acc.add(state.b.weighted_inner_product(&nu, s)?);
    }
    Ok(acc.value())
}

/// `E = A(‖u‖² + ‖b‖²)_{H^{r+α+3}} − cross`.
pub fn lyapunov_e(state: &FlowState, bg: &BackgroundField, pp: &ProofParams) -> Result<f64, SpectralError> {
    let top = pp.top();
    let norms = state.u.sobolev_norm_sq(top) + state.b.sobolev_norm_sq(top);
    Ok(pp.a * norms - cross_term(state, bg, &pp.s_set)?)
}

/// `D = A‖∇b‖²_{H^{r+α+3}} + ‖n·∇u‖²_{H^{r+α+2}}`.
pub fn dissipation_d(state: &FlowState, bg: &BackgroundField, pp: &ProofParams) -> f64 {
    let top = pp.top();
    pp.a * state.b.grad_sobolev_norm_sq(top) + state.u.directional_derivative(bg.n).sobolev_norm_sq(top - 1.0)
}

/// One time slice of the monitored functionals. Norms are unsquared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub l2_u: f64,
    pub l2_b: f64,
    pub grad_b_l2: f64,
    pub h_gamma_u: Vec<f64>,
    pub h_gamma_b: Vec<f64>,
    pub h_n_u: f64,
    pub h_n_b: f64,
    pub cross: f64,
    pub e: f64,
    pub d: f64,
    pub residual_l2: f64,
    pub residual_hm: Option<f64>,
    pub de_dt_fd: Option<f64>,
}

impl EnergySample {
    /// Evaluates every functional at `state`; `hm` selects the order of the
    /// optional `H^m` residual.
    pub fn measure(sys: &mut MhdSystem, state: &FlowState, pp: &ProofParams, hm: Option<u32>) -> Result<Self, SpectralError> {
        let bg = *sys.background();
        let (u, b) = (&state.u, &state.b);
        let cross = cross_term(state, &bg, &pp.s_set)?;
        let top = pp.top();
        let e = pp.a * (u.sobolev_norm_sq(top) + b.sobolev_norm_sq(top)) - cross;
        Ok(Self {
            t: state.t,
            l2_u: u.l2_norm(),
            l2_b: b.l2_norm(),
            grad_b_l2: b.homogeneous_norm(1.0),
            h_gamma_u: pp.gammas.iter().map(|&g| u.sobolev_norm(g)).collect(),
            h_gamma_b: pp.gammas.iter().map(|&g| b.sobolev_norm(g)).collect(),
            h_n_u: u.sobolev_norm(pp.n_sob),
            h_n_b: b.sobolev_norm(pp.n_sob),
            cross,
            e,
            d: dissipation_d(state, &bg, pp),
            residual_l2: l2_balance_residual(sys, state)?,
            residual_hm: hm.map(|m| hm_balance_residual(sys, state, m)).transpose()?,
            de_dt_fd: None,
        })
    }

    /// `‖u‖_{H^{γ_i}} + ‖b‖_{H^{γ_i}}`.
    pub fn h_gamma_sum(&self, i: usize) -> f64 {
        self.h_gamma_u[i] + self.h_gamma_b[i]
    }
}

/// Tolerances of the Lyapunov monitor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorTolerance {
    pub rel: f64,
    pub abs: f64,
    /// Allowed sample-to-sample growth of `E`, relative to `E(0)`.
    pub monotone_rel: f64,
}

impl Default for MonitorTolerance {
    fn default() -> Self {
        Self {
            rel: 0.1,
            abs: 0.0,
            monotone_rel: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    pub de_dt: f64,
    pub d: f64,
    /// `dE/dt + D/2 − (rel·D + abs)`.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub violations: Vec<Violation>,
    /// Centered `dE/dt`, absent at the end points.
    pub de_dt: Vec<Option<f64>>,
    /// Centered `d log E / d log(1+t)`, absent at the end points or where `E ≤ 0`.
    pub local_exponent: Vec<Option<f64>>,
    /// Number of consecutive pairs with `E_{i+1} > E_i + monotone_rel·E_0`.
    pub monotonicity_breaks: usize,
    /// Largest `(dE/dt + D/2)/D` over interior samples with `D > 0`.
    pub worst_margin: Option<f64>,
}

impl MonitorReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.monotonicity_breaks == 0
    }
}

pub fn lyapunov_monitor(samples: &[EnergySample], tol: &MonitorTolerance) -> Result<MonitorReport, DiagnosticsError> {
    let n = samples.len();
    if n < 3 {
        return Err(DiagnosticsError::TooFewSamples(n));
    }
    let mut de_dt = vec![None; n];
    let mut local_exponent = vec![None; n];
    let mut violations = Vec::new();
    let mut worst_margin: Option<f64> = None;
    for i in 1..n - 1 {
        let (a, m, c) = (&samples[i - 1], &samples[i], &samples[i + 1]);
        let dt = c.t - a.t;
        if !(dt > 0.0) {
            continue;
        }
        let rate = (c.e - a.e) / dt;
        de_dt[i] = Some(rate);
        if a.e > 0.0 && c.e > 0.0 {
            local_exponent[i] = Some((c.e.ln() - a.e.ln()) / ((1.0 + c.t).ln() - (1.0 + a.t).ln()));
        }
        let lhs = rate + 0.5 * m.d;
        let excess = lhs - (tol.rel * m.d + tol.abs);
        if excess > 0.0 {
            violations.push(Violation {
                index: i,
                t: m.t,
                de_dt: rate,
                d: m.d,
                excess,
            });
        }
        if m.d > 0.0 {
            let r = lhs / m.d;
            worst_margin = Some(worst_margin.map_or(r, |w| w.max(r)));
        }
    }
    let e0 = samples[0].e.abs();
    let monotonicity_breaks = samples
        .windows(2)
        .filter(|w| w[1].e > w[0].e + tol.monotone_rel * e0)
        .count();
    Ok(MonitorReport {
        violations,
        de_dt,
        local_exponent,
        monotonicity_breaks,
        worst_margin,
    })
}

/// Writes the centered `dE/dt` into `de_dt_fd` (one-sided at the ends).
pub fn fill_finite_differences(samples: &mut [EnergySample]) {
    let n = samples.len();
    for i in 0..n {
        let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n.saturating_sub(1)));
        let dt = samples[hi].t - samples[lo].t;
        samples[i].de_dt_fd = if hi > lo && dt > 0.0 {
            Some((samples[hi].e - samples[lo].e) / dt)
        } else {
            None
        };
    }
}
