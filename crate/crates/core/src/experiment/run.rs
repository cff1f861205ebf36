//! One simulation from configuration to series, summary and checkpoint.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::checkpoint::{checkpoint_write, CheckpointError};
use super::config::{ConfigError, RunConfig};
use super::fit::{fit_samples, FitOutcome, Quantity};
use super::initial::synthesize_initial_data;
use super::series::{write_series, SeriesError};
use super::atomic_write;
use crate::diophantine::{diophantine_constant, DiophantineCertificate};
use crate::energy::{fill_finite_differences, lyapunov_monitor, EnergySample, MonitorTolerance, Violation};
use crate::integrator::{Integrator, IntegratorError, ObserverError};
use crate::mhd::{BackgroundField, FlowState, MhdSystem};

pub const SUMMARY_VERSION: u32 = 1;

/// At most this many individual violations are echoed in the summary.
const VIOLATIONS_SHOWN: usize = 20;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    BlowUp(IntegratorError),
    #[error("background n = {n:?} fails the Diophantine certificate (c_K = {c_k} at k = {argmin:?}); set allow_resonant = true to run anyway")]
    Certificate { n: [f64; 2], c_k: f64, argmin: [i64; 2] },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("numerical failure: {0}")]
    Numerics(String),
}

impl RunError {
    /// Process exit code: 2 config, 3 blow-up, 4 I/O, 5 certificate, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::BlowUp(_) => 3,
            RunError::Io { .. } | RunError::Series(_) | RunError::Checkpoint(_) => 4,
            RunError::Certificate { .. } => 5,
            RunError::Numerics(_) => 1,
        }
    }
}

impl From<IntegratorError> for RunError {
    fn from(e: IntegratorError) -> Self {
        match e {
            IntegratorError::BlowUp { .. } | IntegratorError::NonFinite { .. } => RunError::BlowUp(e),
            IntegratorError::InvalidControl(m) => RunError::Config(ConfigError::Constraint(m)),
            other => RunError::Numerics(other.to_string()),
        }
    }
}

/// A decay fit together with the bound it is checked against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub quantity: String,
    pub gamma: Option<f64>,
    /// Decay must be at least this fast, up to `slack`.
    pub bound: f64,
    pub slack: f64,
    pub outcome: Option<FitOutcome>,
    /// `exponent ± 1.96·stderr`.
    pub confidence_95: Option<[f64; 2]>,
    pub skipped: Option<String>,
    pub one_sided_pass: Option<bool>,
}

impl FitReport {
    fn new(samples: &[EnergySample], cfg: &RunConfig, quantity: Quantity, name: String, gamma: Option<f64>, bound: f64) -> Self {
        let slack = 0.5;
        let mut rep = Self {
            quantity: name,
            gamma,
            bound,
            slack,
            outcome: None,
            confidence_95: None,
            skipped: None,
            one_sided_pass: None,
        };
        if cfg.epsilon == 0.0 {
            rep.skipped = Some("epsilon = 0: equilibrium, nothing to fit".into());
            return rep;
        }
        match fit_samples(samples, quantity, cfg.fit_t_min) {
            Ok(o) => {
                if let FitOutcome::Fitted(f) = o {
                    let w = 1.96 * f.stderr;
                    rep.confidence_95 = Some([f.exponent - w, f.exponent + w]);
                }
                rep.one_sided_pass = Some(o.decays_at_least(bound, slack));
                rep.outcome = Some(o);
            }
            Err(e) => rep.skipped = Some(e.to_string()),
        }
        rep
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub violation_count: usize,
    pub violations: Vec<Violation>,
    pub monotonicity_breaks: usize,
    pub worst_margin: Option<f64>,
    pub clean: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub format_version: u32,
    pub config: RunConfig,
    pub certificate: DiophantineCertificate,
    /// False when the certificate failed and the run went ahead anyway.
    pub decay_guarantee: bool,
    pub notes: Vec<String>,
    pub a: f64,
    pub samples: usize,
    pub steps: u64,
    pub smallest_dt: f64,
    pub largest_dt: f64,
    pub initial: EnergySample,
    #[serde(rename = "final")]
    pub final_sample: EnergySample,
    /// `sup_t ‖u‖_{H^N} + ‖b‖_{H^N}` over the samples.
    pub sup_h_n_sum: f64,
    /// `sup_h_n_sum / ε`, the observed growth margin.
    pub sup_h_n_ratio: Option<f64>,
    /// `‖u(T)‖_{L²} / ‖u(0)‖_{L²}`.
    pub l2_u_ratio: Option<f64>,
    /// Relative mismatch of `½‖(u,b)‖²` against the integrated dissipation.
    pub l2_balance_drift: f64,
    pub monitor: Option<MonitorSummary>,
    pub fits: Vec<FitReport>,
    pub energy_fit: FitReport,
    pub wall_clock_seconds: f64,
    pub timestamp_unix: u64,
}

/// In-memory result of [`execute`].
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub samples: Vec<EnergySample>,
    pub initial_state: FlowState,
    pub final_state: FlowState,
    pub summary: RunSummary,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutputs {
    pub series: PathBuf,
    pub summary: PathBuf,
    pub checkpoint: Option<PathBuf>,
}

impl RunOutputs {
    pub fn for_config(cfg: &RunConfig) -> Self {
        let dir = &cfg.output_dir;
        Self {
            series: dir.join(format!("{}.csv", cfg.run_name)),
            summary: dir.join(format!("{}.summary.json", cfg.run_name)),
            checkpoint: cfg.checkpoint.then(|| dir.join(format!("{}.ckpt", cfg.run_name))),
        }
    }
}

/// Certificate over a disc covering the lattice (or `cert_radius` if larger).
pub fn certify(cfg: &RunConfig) -> Result<DiophantineCertificate, RunError> {
    let lattice = cfg.lattice()?;
    let radius = (lattice.radius().ceil() as u64).max(cfg.cert_radius);
    diophantine_constant(cfg.background_vector(), cfg.r, radius)
        .map_err(|e| RunError::Config(ConfigError::Constraint(e.to_string())))
}

/// Runs the configured simulation without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<RunRecord, RunError> {
    let clock = Instant::now();
    cfg.validate()?;
    let lattice = cfg.lattice()?;
    let cert = certify(cfg)?;
    let mut notes = Vec::new();
    if !cert.is_valid() {
        if !cfg.allow_resonant {
            return Err(RunError::Certificate {
                n: cert.n,
                c_k: cert.c_k,
                argmin: cert.argmin_k,
            });
        }
        notes.push(format!(
            "resonant background: n·k vanishes at k = {:?}; no decay guarantee applies",
            cert.argmin_k
        ));
    }
    let bg = BackgroundField {
        n: cert.n,
        r: cert.r,
        c_k: cert.c_k,
    };
    let pp = cfg.proof_params();
    let state0 = synthesize_initial_data(cfg);

    let mut probe = MhdSystem::new(lattice, bg);
    let mut samples = Vec::new();
    let mut integ = Integrator::new(lattice, bg);
    let last = integ.advance_to(&state0, &cfg.step_control(), |s| -> Result<(), ObserverError> {
        samples.push(EnergySample::measure(&mut probe, s, &pp, None)?);
        Ok(())
    })?;
    fill_finite_differences(&mut samples);
    let stats = integ.stats();

    let tol = MonitorTolerance {
        rel: cfg.tol_rel,
        abs: cfg.tol_abs,
        monotone_rel: cfg.monotone_tol,
    };
    let monitor = lyapunov_monitor(&samples, &tol).ok().map(|m| MonitorSummary {
        violation_count: m.violations.len(),
        violations: m.violations.iter().take(VIOLATIONS_SHOWN).cloned().collect(),
        monotonicity_breaks: m.monotonicity_breaks,
        worst_margin: m.worst_margin,
        clean: m.is_clean(),
    });
    if monitor.is_none() {
        notes.push(format!("only {} samples: Lyapunov monitor skipped", samples.len()));
    }

    let fits = pp
        .gammas
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            FitReport::new(
                &samples,
                cfg,
                Quantity::HGammaSum(i),
                format!("h_gamma_sum_{g}"),
                Some(g),
                pp.predicted_exponent(g),
            )
        })
        .collect();
    let energy_fit = FitReport::new(&samples, cfg, Quantity::Energy, "E".into(), None, -2.0 * (pp.beta + 1.0));

    let first = samples.first().cloned().expect("observer sees the initial state");
    let final_sample = samples.last().cloned().expect("observer sees the final state");
    let sup_h_n_sum = samples.iter().map(|s| s.h_n_u + s.h_n_b).fold(0.0, f64::max);
    let half_energy = |s: &EnergySample| 0.5 * (s.l2_u * s.l2_u + s.l2_b * s.l2_b);
    let e0 = half_energy(&first);
    let balance = half_energy(&final_sample) - e0 + stats.dissipation;
    let summary = RunSummary {
        format_version: SUMMARY_VERSION,
        config: cfg.clone(),
        certificate: cert,
        decay_guarantee: cert.is_valid(),
        notes,
        a: pp.a,
        samples: samples.len(),
        steps: stats.steps,
        smallest_dt: stats.smallest_dt,
        largest_dt: stats.largest_dt,
        initial: first.clone(),
        final_sample: final_sample.clone(),
        sup_h_n_sum,
        sup_h_n_ratio: (cfg.epsilon > 0.0).then(|| sup_h_n_sum / cfg.epsilon),
        l2_u_ratio: (first.l2_u > 0.0).then(|| final_sample.l2_u / first.l2_u),
        l2_balance_drift: if e0 > 0.0 { balance.abs() / e0 } else { balance.abs() },
        monitor,
        fits,
        energy_fit,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    Ok(RunRecord {
        samples,
        initial_state: state0,
        final_state: last,
        summary,
    })
}

/// Runs, then writes the series, the JSON summary and optionally the final
/// checkpoint, each atomically.
pub fn run_simulation(cfg: &RunConfig) -> Result<(RunOutputs, RunRecord), RunError> {
    let record = execute(cfg)?;
    let out = RunOutputs::for_config(cfg);
    write_series(&out.series, &cfg.gamma, &record.samples)?;
    if let Some(p) = &out.checkpoint {
        checkpoint_write(&record.final_state, p)?;
    }
    let json = serde_json::to_vec_pretty(&record.summary).map_err(|e| RunError::Numerics(e.to_string()))?;
    atomic_write(&out.summary, &json).map_err(|source| RunError::Io {
        path: out.summary.clone(),
        source,
    })?;
    Ok((out, record))
}
