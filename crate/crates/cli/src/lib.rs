//! Argument handling for the `magstab` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use magstab_core::experiment::modes::{cancellation_report, diophantine_report, refit, verify_suite, RefitError};
use magstab_core::experiment::{run_simulation, ConfigError, FitOutcome, Mode, RunConfig};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "magstab", version, about = "Pseudo-spectral 2D MHD stability experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation and write the time series and summary.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Run even when the background fails its Diophantine certificate.
        #[arg(long)]
        allow_resonant: bool,
        /// Also write the final state as a checkpoint.
        #[arg(long)]
        checkpoint: bool,
    },
    /// Run the property suites of every module on random states.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Scan Diophantine constants of the configured background.
    Diophantine {
        #[command(flatten)]
        common: Common,
    },
    /// Report worst cancellation-identity residuals.
    Cancellations {
        #[command(flatten)]
        common: Common,
    },
    /// Refit decay exponents of a stored time series.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Series CSV written by `simulate`.
        series: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat `key = value` configuration file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set t_end=10`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory, overriding the configuration.
    #[arg(short, long, env = "MAGSTAB_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    /// Print the machine-readable report as JSON.
    #[arg(long)]
    pub json: bool,
}

impl Common {
    /// Defaults, then the file, then `--set`, then `--output-dir`.
    pub fn load(&self, mode: Mode) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(p) = &self.config {
            cfg.apply_file(p)?;
        }
        for pair in &self.overrides {
            cfg.set_pair(pair)?;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        cfg.mode = mode;
        Ok(cfg)
    }
}

fn emit<T: Serialize>(json: bool, report: &T, text: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> i32 {
    let mut out = std::io::stdout().lock();
    let res = if json {
        serde_json::to_writer_pretty(&mut out, report)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(out))
    } else {
        text(&mut out)
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: writing output: {e}");
            EXIT_IO
        }
    }
}

fn config_error(e: ConfigError) -> i32 {
    eprintln!("error: invalid configuration: {e}");
    EXIT_CONFIG
}

fn fit_text(o: &Option<FitOutcome>) -> String {
    match o {
        Some(FitOutcome::Fitted(f)) => format!(
            "exponent {:.4} ± {:.4} over t in [{}, {}]{}{}",
            f.exponent,
            f.stderr,
            f.t_min,
            f.t_max,
            if f.super_polynomial { ", super-polynomial" } else { "" },
            f.floor_hit.map(|t| format!(", floor reached at t = {t}")).unwrap_or_default()
        ),
        Some(FitOutcome::BelowFloor { t }) => format!("below floor at t = {t}: decay faster than measurable"),
        None => "not fitted".into(),
    }
}

fn simulate(common: &Common, allow_resonant: bool, checkpoint: bool) -> i32 {
    let mut cfg = match common.load(Mode::Simulate) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    cfg.allow_resonant |= allow_resonant;
    cfg.checkpoint |= checkpoint;
    let (paths, rec) = match run_simulation(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let s = &rec.summary;
    emit(common.json, s, |w| {
        writeln!(
            w,
            "certificate: c_K = {:e} at k = {:?} (K = {}){}",
            s.certificate.c_k,
            s.certificate.argmin_k,
            s.certificate.k_radius,
            if s.decay_guarantee { "" } else { ", NO decay guarantee" }
        )?;
        for n in &s.notes {
            writeln!(w, "note: {n}")?;
        }
        writeln!(w, "A = {:.6}, {} samples, {} steps, {:.1}s", s.a, s.samples, s.steps, s.wall_clock_seconds)?;
        if let Some(m) = &s.monitor {
            writeln!(
                w,
                "lyapunov monitor: {} violations, {} monotonicity breaks",
                m.violation_count, m.monotonicity_breaks
            )?;
        }
        match s.sup_h_n_ratio {
            Some(r) => writeln!(w, "sup H^N sum / epsilon: {r:.4}")?,
            None => writeln!(w, "sup H^N sum: {:e}", s.sup_h_n_sum)?,
        }
        for f in s.fits.iter().chain(std::iter::once(&s.energy_fit)) {
            let verdict = match (f.one_sided_pass, &f.skipped) {
                (Some(true), _) => "ok".to_string(),
                (Some(false), _) => "SLOWER than bound".to_string(),
                (None, Some(why)) => format!("skipped: {why}"),
                (None, None) => "skipped".to_string(),
            };
            writeln!(w, "fit {}: {} (bound {:.4}, {verdict})", f.quantity, fit_text(&f.outcome), f.bound)?;
        }
        writeln!(w, "series: {}", paths.series.display())?;
        writeln!(w, "summary: {}", paths.summary.display())?;
        if let Some(p) = &paths.checkpoint {
            writeln!(w, "checkpoint: {}", p.display())?;
        }
        Ok(())
    })
}

fn verify(common: &Common) -> i32 {
    let cfg = match common.load(Mode::Verify) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let rep = match verify_suite(&cfg) {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    let code = emit(common.json, &rep, |w| {
        for s in &rep.suites {
            writeln!(
                w,
                "{:<20} {:>6} passed {:>4} failed  worst {:.2e} (tol {:.0e})",
                s.name, s.passed, s.failed, s.worst, s.tolerance
            )?;
            for f in &s.first_failures {
                writeln!(w, "    {f}")?;
            }
        }
        writeln!(w, "{}", if rep.passed { "PASS" } else { "FAIL" })
    });
    if code == EXIT_OK && !rep.passed {
        EXIT_FAILED
    } else {
        code
    }
}

fn diophantine(common: &Common) -> i32 {
    let cfg = match common.load(Mode::Diophantine) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let rep = match diophantine_report(&cfg) {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    emit(common.json, &rep, |w| {
        for c in &rep.certificates {
            writeln!(w, "K = {:>5}  c_K = {:.17e}  argmin k = {:?}", c.k_radius, c.c_k, c.argmin_k)?;
        }
        writeln!(w, "monotone: {}, all positive: {}", rep.monotone, rep.all_positive)
    })
}

fn cancellations(common: &Common) -> i32 {
    let cfg = match common.load(Mode::Cancellations) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let rep = match cancellation_report(&cfg) {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    emit(common.json, &rep, |w| {
        for (name, v) in &rep.worst {
            writeln!(w, "{name:<40} {v:.3e}")?;
        }
        writeln!(w, "max normalized residual over {} states: {:.3e}", rep.trials, rep.max_residual)
    })
}

fn fit(common: &Common, series: &Path) -> i32 {
    let mut cfg = match common.load(Mode::Fit) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    cfg.series = Some(series.to_path_buf());
    let entries = match refit(&cfg) {
        Ok(e) => e,
        Err(RefitError::Config(e)) => return config_error(e),
        Err(e @ RefitError::Series(_)) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };
    emit(common.json, &entries, |w| {
        for e in &entries {
            match &e.error {
                Some(err) => writeln!(w, "{}: {err}", e.quantity)?,
                None => writeln!(w, "{}: {}", e.quantity, fit_text(&e.outcome))?,
            }
        }
        Ok(())
    })
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match &cli.command {
        Command::Simulate {
            common,
            allow_resonant,
            checkpoint,
        } => simulate(common, *allow_resonant, *checkpoint),
        Command::Verify { common } => verify(common),
        Command::Diophantine { common } => diophantine(common),
        Command::Cancellations { common } => cancellations(common),
        Command::Fit { common, series } => fit(common, series),
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn layering_of_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        std::fs::write(&file, "t_end = 3\nseed = 4\noutput_dir = from-file\n").unwrap();
        let cli = Cli::try_parse_from([
            "magstab",
            "simulate",
            "--config",
            file.to_str().unwrap(),
            "--set",
            "seed=9",
            "-o",
            "flag-dir",
        ])
        .unwrap();
        let Command::Simulate { common, .. } = cli.command else {
            panic!("parsed the wrong subcommand")
        };
        let cfg = common.load(Mode::Simulate).unwrap();
        assert_eq!((cfg.t_end, cfg.seed), (3.0, 9));
        assert_eq!(cfg.output_dir, PathBuf::from("flag-dir"));
    }
}
