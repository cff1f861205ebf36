//! Flat `key = value` run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diophantine::{golden_vector, noble_vector};
use crate::energy::ProofParams;
use crate::integrator::StepControl;
use crate::mhd::BackgroundField;
use crate::spectral::WaveLattice;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {msg}")]
    InvalidValue { key: String, value: String, msg: String },
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Verify,
    Fit,
    Cancellations,
    Diophantine,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "verify" => Ok(Mode::Verify),
            "fit" => Ok(Mode::Fit),
            "cancellations" => Ok(Mode::Cancellations),
            "diophantine" => Ok(Mode::Diophantine),
            _ => Err("expected simulate | verify | fit | cancellations | diophantine".into()),
        }
    }
}

/// Background direction: named or explicit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundSpec {
    Golden,
    Noble(u64),
    Vector([f64; 2]),
}

impl BackgroundSpec {
    pub fn vector(&self) -> [f64; 2] {
        match *self {
            BackgroundSpec::Golden => golden_vector(),
            BackgroundSpec::Noble(seed) => noble_vector(seed),
            BackgroundSpec::Vector(n) => n,
        }
    }
}

impl fmt::Display for BackgroundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackgroundSpec::Golden => write!(f, "golden"),
            BackgroundSpec::Noble(s) => write!(f, "noble:{s}"),
            BackgroundSpec::Vector([a, b]) => write!(f, "{a},{b}"),
        }
    }
}

impl FromStr for BackgroundSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "golden" {
            return Ok(BackgroundSpec::Golden);
        }
        if let Some(seed) = s.strip_prefix("noble:") {
            return seed.trim().parse().map(BackgroundSpec::Noble).map_err(|e| format!("{e}"));
        }
        let inner = s.trim_start_matches('(').trim_end_matches(')');
        let parts = parse_list(inner)?;
        match parts.as_slice() {
            [a, b] => Ok(BackgroundSpec::Vector([*a, *b])),
            _ => Err("expected golden, noble:<seed>, or two comma-separated numbers".into()),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{e}")))
        .collect()
}

/// Everything a run needs. Field names double as config keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub modes: usize,
    pub n: BackgroundSpec,
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_sob: f64,
    pub gamma: Vec<f64>,
    pub epsilon: f64,
    /// Start with `b₀ = 0` and put all of `ε` into `u₀`.
    pub zero_b0: bool,
    pub t_end: f64,
    pub sample_interval: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub run_name: String,
    pub allow_resonant: bool,
    /// Search radius of the certificate; 0 means the lattice radius.
    pub cert_radius: u64,
    pub fit_t_min: f64,
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub monotone_tol: f64,
    /// Number of random states for the cancellation and verify modes.
    pub trials: usize,
    /// Series file read by the fit mode.
    pub series: Option<PathBuf>,
    /// Write the final state as a checkpoint next to the series.
    pub checkpoint: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Simulate,
            modes: 64,
            n: BackgroundSpec::Golden,
            r: 2.0,
            alpha: 0.5,
            beta: 0.5,
            n_sob: 15.0,
            gamma: vec![5.5, 8.0, 10.0],
            epsilon: 1e-3,
            zero_b0: false,
            t_end: 50.0,
            sample_interval: 0.25,
            cfl: 0.5,
            dt_max: 0.01,
            dt_min: 1e-8,
            seed: 1,
            output_dir: PathBuf::from("magstab-out"),
            run_name: "run".into(),
            allow_resonant: false,
            cert_radius: 0,
            fit_t_min: 5.0,
            tol_rel: 0.1,
            tol_abs: 0.0,
            monotone_tol: 1e-9,
            trials: 50,
            series: None,
            checkpoint: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "mode",
    "modes",
    "n",
    "r",
    "alpha",
    "beta",
    "n_sob",
    "gamma",
    "epsilon",
    "zero_b0",
    "t_end",
    "sample_interval",
    "cfl",
    "dt_max",
    "dt_min",
    "seed",
    "output_dir",
    "run_name",
    "allow_resonant",
    "cert_radius",
    "fit_t_min",
    "tol_rel",
    "tol_abs",
    "monotone_tol",
    "trials",
    "series",
    "checkpoint",
];

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        let bad = |msg: String| ConfigError::InvalidValue {
            key: key.to_string(),
            value: v.to_string(),
            msg,
        };
        fn num<T: FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| e.to_string())
        }
        match key {
            "mode" => self.mode = v.parse().map_err(bad)?,
            "modes" => self.modes = num(v).map_err(bad)?,
            "n" => self.n = v.parse().map_err(bad)?,
            "r" => self.r = num(v).map_err(bad)?,
            "alpha" => self.alpha = num(v).map_err(bad)?,
            "beta" => self.beta = num(v).map_err(bad)?,
            "n_sob" => self.n_sob = num(v).map_err(bad)?,
            "gamma" => self.gamma = parse_list(v).map_err(bad)?,
            "epsilon" => self.epsilon = num(v).map_err(bad)?,
            "zero_b0" => self.zero_b0 = num(v).map_err(bad)?,
            "t_end" => self.t_end = num(v).map_err(bad)?,
            "sample_interval" => self.sample_interval = num(v).map_err(bad)?,
            "cfl" => self.cfl = num(v).map_err(bad)?,
            "dt_max" => self.dt_max = num(v).map_err(bad)?,
            "dt_min" => self.dt_min = num(v).map_err(bad)?,
            "seed" => self.seed = num(v).map_err(bad)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "run_name" => {
                if v.is_empty() || v.contains(['/', '\\']) {
                    return Err(bad("must be a plain file stem".into()));
                }
                self.run_name = v.to_string()
            }
            "allow_resonant" => self.allow_resonant = num(v).map_err(bad)?,
            "cert_radius" => self.cert_radius = num(v).map_err(bad)?,
            "fit_t_min" => self.fit_t_min = num(v).map_err(bad)?,
            "tol_rel" => self.tol_rel = num(v).map_err(bad)?,
            "tol_abs" => self.tol_abs = num(v).map_err(bad)?,
            "monotone_tol" => self.monotone_tol = num(v).map_err(bad)?,
            "trials" => self.trials = num(v).map_err(bad)?,
            "series" => self.series = Some(PathBuf::from(v)),
            "checkpoint" => self.checkpoint = num(v).map_err(bad)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            msg: format!("expected key=value, got `{pair}`"),
        })?;
        self.set(k.trim(), v)
    }

    /// Applies every `key = value` line of `text`; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected key = value, got `{line}`"),
            })?;
            self.set(k.trim(), v).map_err(|e| match e {
                ConfigError::UnknownKey(_) | ConfigError::InvalidValue { .. } => ConfigError::Syntax {
                    line: i + 1,
                    msg: e.to_string(),
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        Ok(cfg)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_str(&text)
    }

    /// Renders the configuration back to `key = value` lines.
    pub fn to_kv(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        let mode = serde_json::to_value(self.mode).ok().and_then(|v| v.as_str().map(str::to_string));
        push("mode", mode.unwrap_or_default());
        push("modes", self.modes.to_string());
        push("n", self.n.to_string());
        push("r", self.r.to_string());
        push("alpha", self.alpha.to_string());
        push("beta", self.beta.to_string());
        push("n_sob", self.n_sob.to_string());
        push("gamma", list(&self.gamma));
        push("epsilon", self.epsilon.to_string());
        push("zero_b0", self.zero_b0.to_string());
        push("t_end", self.t_end.to_string());
        push("sample_interval", self.sample_interval.to_string());
        push("cfl", self.cfl.to_string());
        push("dt_max", self.dt_max.to_string());
        push("dt_min", self.dt_min.to_string());
        push("seed", self.seed.to_string());
        push("output_dir", self.output_dir.display().to_string());
        push("run_name", self.run_name.clone());
        push("allow_resonant", self.allow_resonant.to_string());
        push("cert_radius", self.cert_radius.to_string());
        push("fit_t_min", self.fit_t_min.to_string());
        push("tol_rel", self.tol_rel.to_string());
        push("tol_abs", self.tol_abs.to_string());
        push("monotone_tol", self.monotone_tol.to_string());
        push("trials", self.trials.to_string());
        if let Some(p) = &self.series {
            push("series", p.display().to_string());
        }
        push("checkpoint", self.checkpoint.to_string());
        out
    }

    pub fn lattice(&self) -> Result<WaveLattice, ConfigError> {
        WaveLattice::new(self.modes).map_err(|e| ConfigError::Constraint(format!("modes: {e}")))
    }

    pub fn background_vector(&self) -> [f64; 2] {
        self.n.vector()
    }

    /// Background without certificate attached.
    pub fn background(&self) -> BackgroundField {
        BackgroundField {
            n: self.background_vector(),
            r: self.r,
            c_k: 0.0,
        }
    }

    pub fn proof_params(&self) -> ProofParams {
        ProofParams::with_exponents(self.r, self.alpha, self.beta, self.n_sob, self.gamma.clone(), &self.background())
    }

    pub fn step_control(&self) -> StepControl {
        StepControl {
            cfl: self.cfl,
            dt_max: self.dt_max,
            dt_min: self.dt_min,
            t_end: self.t_end,
            sample_interval: self.sample_interval,
        }
    }

    /// Rejects the configuration before any compute, naming the violated constraint.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Constraint(m));
        self.lattice()?;
        if !self.background_vector().iter().all(|x| x.is_finite()) {
            return fail(format!("n must be finite (got {})", self.n));
        }
        self.proof_params().validate().map_err(|e| ConfigError::Constraint(e.to_string()))?;
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return fail(format!("epsilon >= 0 (got {})", self.epsilon));
        }
        if !(self.t_end >= 0.0) {
            return fail(format!("t_end >= 0 (got {})", self.t_end));
        }
        self.step_control()
            .validate()
            .map_err(|e| ConfigError::Constraint(e.to_string()))?;
        if !(self.fit_t_min >= 0.0) {
            return fail(format!("fit_t_min >= 0 (got {})", self.fit_t_min));
        }
        if !(self.tol_rel >= 0.0 && self.tol_abs >= 0.0 && self.monotone_tol >= 0.0) {
            return fail("monitor tolerances must be nonnegative".into());
        }
        let lattice_radius = self.lattice()?.radius();
        if self.cert_radius != 0 && (self.cert_radius as f64) < lattice_radius {
            return fail(format!(
                "cert_radius >= lattice radius {lattice_radius:.3} (got {})",
                self.cert_radius
            ));
        }
        if self.mode == Mode::Fit && self.series.is_none() {
            return fail("fit mode needs `series` pointing at a CSV time series".into());
        }
        Ok(())
    }
}
