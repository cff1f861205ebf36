//! The non-simulating modes: property verification, cancellation residuals,
//! certificate scans and refits of stored series.

use std::collections::BTreeMap;

use serde::Serialize;

use super::config::{ConfigError, RunConfig};
use super::fit::{fit_samples, FitError, FitOutcome, Quantity};
use super::series::{read_series, SeriesError};
use crate::diophantine::{certify_lattice, diophantine_constant, verify_homogeneous_poincare, verify_poincare, DiophantineCertificate};
use crate::energy::{hm_balance_residual, l2_balance_residual};
use crate::integrator::{Integrator, StepControl};
use crate::mhd::{cancellation_suite, BackgroundField, MhdSystem};
use crate::random::{random_scalar, random_state, seeded};
use crate::spectral::FourierGrid;

/// Pass/fail counts of one property family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub first_failures: Vec<String>,
}

impl SuiteResult {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: 0,
            failed: 0,
            worst: 0.0,
            tolerance,
            first_failures: Vec::new(),
        }
    }

    fn record(&mut self, what: impl FnOnce() -> String, value: f64) {
        self.worst = self.worst.max(value);
        if value <= self.tolerance {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.first_failures.len() < 5 {
                self.first_failures.push(format!("{}: {value:e}", what()));
            }
        }
    }

    fn error(&mut self, what: String) {
        self.failed += 1;
        self.worst = f64::INFINITY;
        if self.first_failures.len() < 5 {
            self.first_failures.push(what);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub modes: usize,
    pub trials: usize,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

fn background(cfg: &RunConfig) -> BackgroundField {
    BackgroundField {
        n: cfg.background_vector(),
        r: cfg.r,
        c_k: 0.0,
    }
}

/// Runs the property families of every module on `cfg.trials` seeded random
/// states derived from `cfg.seed`.
pub fn verify_suite(cfg: &RunConfig) -> Result<VerifyReport, ConfigError> {
    cfg.validate()?;
    let lattice = cfg.lattice()?;
    let bg = background(cfg);
    let mut sys = MhdSystem::new(lattice, bg);
    let mut grid = FourierGrid::padded(lattice);
    let mut integ = Integrator::new(lattice, bg);
    let ctl = StepControl::default();
    let cert = certify_lattice(bg.n, cfg.r, lattice).ok().filter(DiophantineCertificate::is_valid);

    let mut spectral = SuiteResult::new("spectral_core", 1e-12);
    let mut mhd = SuiteResult::new("mhd_system", 1e-11);
    let mut energy = SuiteResult::new("energy_diagnostics", 1e-9);
    let mut integrator = SuiteResult::new("time_integrator", 1e-12);
    let mut dioph = SuiteResult::new("diophantine", 0.0);

    for trial in 0..cfg.trials {
        let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(trial as u64);
        let state = random_state(lattice, seed, 1.0, 1.0);
        let f = &state.u.x1;

        match grid.inverse(f).and_then(|v| grid.forward(&v)) {
            Ok(back) => {
                let diff = (&back - f).max_abs_coeff() / f.max_abs_coeff().max(f64::MIN_POSITIVE);
                spectral.record(|| format!("seed {seed} transform roundtrip"), diff);
            }
            Err(e) => spectral.error(e.to_string()),
        }
        match (grid.product(f, &state.b.x2), grid.product(&state.b.x2, f)) {
            (Ok(a), Ok(b)) => {
                let diff = (&a - &b).max_abs_coeff() / a.max_abs_coeff().max(f64::MIN_POSITIVE);
                spectral.record(|| format!("seed {seed} product symmetry"), diff);
            }
            (Err(e), _) | (_, Err(e)) => spectral.error(e.to_string()),
        }

        match cancellation_suite(&mut sys, &state.u, &state.b, 3) {
            Ok(list) => {
                for c in list {
                    mhd.record(|| format!("seed {seed} {}", c.name), c.normalized());
                }
            }
            Err(e) => mhd.error(e.to_string()),
        }

        match l2_balance_residual(&mut sys, &state) {
            Ok(r) => energy.record(|| format!("seed {seed} L2 balance"), r),
            Err(e) => energy.error(e.to_string()),
        }
        for m in 1..=3 {
            match hm_balance_residual(&mut sys, &state, m) {
                Ok(r) => energy.record(|| format!("seed {seed} H^{m} balance"), r),
                Err(e) => energy.error(e.to_string()),
            }
        }

        let small = random_state(lattice, seed, 1e-2, 3.0);
        let half_energy = |s: &crate::mhd::FlowState| 0.5 * (s.u.l2_norm().powi(2) + s.b.l2_norm().powi(2));
        match integ.choose_dt(&small, &ctl).and_then(|dt| integ.step_with_dissipation(&small, dt)) {
            Ok((next, _)) => {
                match next.check_invariants(integrator.tolerance) {
                    Ok(()) => integrator.record(String::new, 0.0),
                    Err(e) => integrator.error(format!("seed {seed}: {e}")),
                }
                let growth = (half_energy(&next) - half_energy(&small)) / half_energy(&small);
                integrator.record(|| format!("seed {seed} energy growth"), growth.max(0.0));
            }
            Err(e) => integrator.error(format!("seed {seed}: {e}")),
        }

        if let Some(cert) = &cert {
            let band = lattice.nyquist() - 1;
            let mut g = random_scalar(lattice, &mut seeded(seed), band, 1.0);
            g.set_mean(0.0);
            for s in [0.0, 1.0, 5.5] {
                match verify_poincare(&g, cert, s) {
                    Ok(chk) => dioph.record(|| format!("seed {seed} Poincare s={s}"), if chk.holds { 0.0 } else { chk.ratio() }),
                    Err(e) => dioph.error(e.to_string()),
                }
                if s > 0.0 {
                    match verify_homogeneous_poincare(&g, cert, s) {
                        Ok(chk) => dioph.record(
                            || format!("seed {seed} homogeneous Poincare s={s}"),
                            if chk.holds { 0.0 } else { chk.ratio() },
                        ),
                        Err(e) => dioph.error(e.to_string()),
                    }
                }
            }
        }
    }
    if cert.is_none() {
        dioph.first_failures.push("background not certified on this lattice: Poincare checks skipped".into());
    }

    let suites = vec![spectral, mhd, energy, integrator, dioph];
    let passed = suites.iter().all(|s| s.failed == 0);
    Ok(VerifyReport {
        modes: lattice.modes(),
        trials: cfg.trials,
        suites,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CancellationReport {
    pub modes: usize,
    pub trials: usize,
    /// Largest normalized residual per identity.
    pub worst: BTreeMap<String, f64>,
    pub max_residual: f64,
}

/// Worst normalized cancellation residuals over `cfg.trials` random states.
pub fn cancellation_report(cfg: &RunConfig) -> Result<CancellationReport, ConfigError> {
    cfg.validate()?;
    let lattice = cfg.lattice()?;
    let mut sys = MhdSystem::new(lattice, background(cfg));
    let mut worst = BTreeMap::new();
    for trial in 0..cfg.trials {
        let s = random_state(lattice, cfg.seed.wrapping_add(trial as u64), 1.0, 1.0);
        let list = cancellation_suite(&mut sys, &s.u, &s.b, 3).map_err(|e| ConfigError::Constraint(e.to_string()))?;
        for c in list {
            let w = worst.entry(c.name.clone()).or_insert(0.0f64);
            *w = w.max(c.normalized());
        }
    }
    let max_residual = worst.values().copied().fold(0.0, f64::max);
    Ok(CancellationReport {
        modes: lattice.modes(),
        trials: cfg.trials,
        worst,
        max_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiophantineReport {
    pub certificates: Vec<DiophantineCertificate>,
    pub monotone: bool,
    pub all_positive: bool,
}

/// Scans `K ∈ {50, 100, 500, 1000}` plus the lattice radius and `cert_radius`.
pub fn diophantine_report(cfg: &RunConfig) -> Result<DiophantineReport, ConfigError> {
    cfg.validate()?;
    let mut radii = vec![50u64, 100, 500, 1000, cfg.lattice()?.radius().ceil() as u64];
    if cfg.cert_radius > 0 {
        radii.push(cfg.cert_radius);
    }
    radii.sort_unstable();
    radii.dedup();
    let certificates = radii
        .iter()
        .map(|&k| diophantine_constant(cfg.background_vector(), cfg.r, k))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ConfigError::Constraint(e.to_string()))?;
    Ok(DiophantineReport {
        monotone: certificates.windows(2).all(|w| w[1].c_k <= w[0].c_k),
        all_positive: certificates.iter().all(DiophantineCertificate::is_valid),
        certificates,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefitEntry {
    pub quantity: String,
    pub outcome: Option<FitOutcome>,
    pub error: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RefitError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Refits every `γ` column and `E` of the series named by `cfg.series`.
pub fn refit(cfg: &RunConfig) -> Result<Vec<RefitEntry>, RefitError> {
    let path = cfg
        .series
        .as_ref()
        .ok_or_else(|| ConfigError::Constraint("fit mode needs `series`".into()))?;
    let (gammas, samples) = read_series(path)?;
    let mut quantities: Vec<(String, Quantity)> = gammas
        .iter()
        .enumerate()
        .map(|(i, g)| (format!("h_gamma_sum_{g}"), Quantity::HGammaSum(i)))
        .collect();
    quantities.push(("E".into(), Quantity::Energy));
    quantities.push(("l2_u".into(), Quantity::L2U));
    Ok(quantities
        .into_iter()
        .map(|(name, q)| {
            let res: Result<FitOutcome, FitError> = fit_samples(&samples, q, cfg.fit_t_min);
            RefitEntry {
                quantity: name,
                outcome: res.as_ref().ok().copied(),
                error: res.err().map(|e| e.to_string()),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::BackgroundSpec;
    use crate::experiment::run_simulation;

    fn small() -> RunConfig {
        RunConfig {
            modes: 16,
            trials: 4,
            ..RunConfig::default()
        }
    }

    #[test]
    fn verify_passes_on_small_lattice() {
        let rep = verify_suite(&small()).unwrap();
        assert!(rep.passed, "{rep:#?}");
        assert_eq!(rep.suites.len(), 5);
        assert!(rep.suites.iter().all(|s| s.passed > 0));
    }

    #[test]
    fn cancellations_are_tiny() {
        let rep = cancellation_report(&small()).unwrap();
        assert!(rep.max_residual < 1e-11, "{rep:?}");
        assert!(rep.worst.len() >= 4);
    }

    #[test]
    fn diophantine_report_for_golden_and_rational() {
        let rep = diophantine_report(&small()).unwrap();
        assert!(rep.monotone && rep.all_positive);
        assert_eq!(rep.certificates.last().unwrap().k_radius, 1000);
        let cfg = RunConfig {
            n: BackgroundSpec::Vector([1.0, 1.0]),
            ..small()
        };
        assert!(!diophantine_report(&cfg).unwrap().all_positive);
    }

    #[test]
    fn refit_reads_written_series() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            t_end: 3.0,
            fit_t_min: 0.5,
            output_dir: dir.path().to_path_buf(),
            ..small()
        };
        let (out, rec) = run_simulation(&cfg).unwrap();
        let fits = refit(&RunConfig {
            series: Some(out.series),
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(fits.len(), cfg.gamma.len() + 2);
        assert_eq!(fits[0].outcome, rec.summary.fits[0].outcome);
        assert!(refit(&small()).is_err());
    }
}
