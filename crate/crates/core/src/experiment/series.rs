//! Versioned CSV time series of [`EnergySample`]s.

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::atomic_write;
use crate::energy::EnergySample;

pub const SERIES_VERSION_LINE: &str = "# magstab-series v1";

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("not a v1 series file: first line is `{0}`")]
    Version(String),
    #[error("unexpected columns: {0}")]
    Columns(String),
    #[error("row {row}: bad value `{value}` in column `{column}`")]
    Value { row: usize, column: String, value: String },
}

/// Column names for the given `γ` list.
pub fn series_columns(gammas: &[f64]) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "l2_u", "l2_b", "grad_b_l2"].iter().map(|s| s.to_string()).collect();
    cols.extend(gammas.iter().map(|g| format!("h_gamma_u_{g}")));
    cols.extend(gammas.iter().map(|g| format!("h_gamma_b_{g}")));
    cols.extend(
        ["h_N_u", "h_N_b", "cross", "E", "D", "residual_l2", "dE_dt_fd"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn encode_series(gammas: &[f64], samples: &[EnergySample]) -> Result<Vec<u8>, SeriesError> {
    let mut out = format!("{SERIES_VERSION_LINE}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(series_columns(gammas))?;
        for s in samples {
            let mut row = vec![num(s.t), num(s.l2_u), num(s.l2_b), num(s.grad_b_l2)];
            row.extend(s.h_gamma_u.iter().map(|&v| num(v)));
            row.extend(s.h_gamma_b.iter().map(|&v| num(v)));
            row.extend([s.h_n_u, s.h_n_b, s.cross, s.e, s.d, s.residual_l2].map(num));
            row.push(s.de_dt_fd.map(num).unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
    }
    Ok(out)
}

pub fn write_series(path: &Path, gammas: &[f64], samples: &[EnergySample]) -> Result<(), SeriesError> {
    let bytes = encode_series(gammas, samples)?;
    atomic_write(path, &bytes).map_err(|source| SeriesError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a series back into its `γ` list and samples.
pub fn decode_series(bytes: &[u8]) -> Result<(Vec<f64>, Vec<EnergySample>), SeriesError> {
    let first = bytes.split(|&c| c == b'\n').next().unwrap_or_default();
    let first = String::from_utf8_lossy(first).trim_end().to_string();
    if first != SERIES_VERSION_LINE {
        return Err(SeriesError::Version(first));
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let gammas: Vec<f64> = header
        .iter()
        .filter_map(|c| c.strip_prefix("h_gamma_u_"))
        .map(|g| g.parse::<f64>().map_err(|_| SeriesError::Columns(header.join(","))))
        .collect::<Result<_, _>>()?;
    if header != series_columns(&gammas) {
        return Err(SeriesError::Columns(header.join(",")));
    }
    let ng = gammas.len();
    let mut samples = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64, SeriesError> {
            rec[i].parse::<f64>().map_err(|_| SeriesError::Value {
                row: row + 1,
                column: header[i].clone(),
                value: rec[i].to_string(),
            })
        };
        let base = 4 + 2 * ng;
        let last = base + 6;
        samples.push(EnergySample {
            t: get(0)?,
            l2_u: get(1)?,
            l2_b: get(2)?,
            grad_b_l2: get(3)?,
            h_gamma_u: (4..4 + ng).map(get).collect::<Result<_, _>>()?,
            h_gamma_b: (4 + ng..base).map(get).collect::<Result<_, _>>()?,
            h_n_u: get(base)?,
            h_n_b: get(base + 1)?,
            cross: get(base + 2)?,
            e: get(base + 3)?,
            d: get(base + 4)?,
            residual_l2: get(base + 5)?,
            residual_hm: None,
            de_dt_fd: if rec[last].is_empty() { None } else { Some(get(last)?) },
        });
    }
    Ok((gammas, samples))
}

pub fn read_series(path: &Path) -> Result<(Vec<f64>, Vec<EnergySample>), SeriesError> {
    let bytes = std::fs::read(path).map_err(|source| SeriesError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_series(&bytes)
}
