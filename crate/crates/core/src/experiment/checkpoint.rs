//! Binary state checkpoints with a self-describing text header.
//!
//! ```text
//! magstab-checkpoint
//! version = 1
//! endianness = little
//! modes = 32
//! t = 0x3ff0000000000000
//! fields = u1,u2,b1,b2
//! count = 1024
//! end-header
//! <4 * count pairs of little-endian f64 (re, im)>
//! ```
//!
//! Coefficients are written row-major with `k₁` then `k₂` ascending over
//! `(-M/2, M/2]`.

use std::io::{BufRead, Read};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;

use super::atomic_write;
use crate::mhd::{FlowState, MhdError};
use crate::spectral::{SpectralScalar, SpectralVector2, WaveLattice};

pub const CHECKPOINT_MAGIC: &str = "magstab-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;
const FIELDS: &str = "u1,u2,b1,b2";

/// Relative divergence and mean tolerance applied after reading.
pub const CHECKPOINT_INVARIANT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported checkpoint version: {0}")]
    Version(String),
    #[error("malformed checkpoint header: {0}")]
    Header(String),
    #[error("truncated checkpoint: expected {expected} bytes of coefficients, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("checkpoint holds M = {found}, expected M = {expected}")]
    LatticeMismatch { found: usize, expected: usize },
    #[error("checkpoint state fails invariants: {0}")]
    Invariant(#[from] MhdError),
}

fn row_major(lattice: WaveLattice) -> Vec<usize> {
    let m = lattice.modes() as i64;
    let ks: Vec<i64> = (-m / 2 + 1..=m / 2).collect();
    let mut order = Vec::with_capacity(lattice.len());
    for &k1 in &ks {
        for &k2 in &ks {
            order.push(lattice.flat_index([k1, k2]).expect("k on lattice"));
        }
    }
    order
}

/// Serializes `state` to bytes.
pub fn encode_checkpoint(state: &FlowState) -> Vec<u8> {
    let lattice = state.lattice();
    let mut out = format!(
        "{CHECKPOINT_MAGIC}\nversion = {CHECKPOINT_VERSION}\nendianness = little\nmodes = {}\nt = {:#018x}\nfields = {FIELDS}\ncount = {}\nend-header\n",
        lattice.modes(),
        state.t.to_bits(),
        lattice.len()
    )
    .into_bytes();
    let order = row_major(lattice);
    for f in [&state.u.x1, &state.u.x2, &state.b.x1, &state.b.x2] {
        let c = f.coeffs();
        for &i in &order {
            out.extend_from_slice(&c[i].re.to_le_bytes());
            out.extend_from_slice(&c[i].im.to_le_bytes());
        }
    }
    out
}

pub fn checkpoint_write(state: &FlowState, path: &Path) -> Result<(), CheckpointError> {
    atomic_write(path, &encode_checkpoint(state)).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Header {
    modes: usize,
    t: f64,
    count: usize,
}

fn read_line(r: &mut impl BufRead) -> Result<String, CheckpointError> {
    let mut line = String::new();
    let mut raw = Vec::new();
    r.read_until(b'\n', &mut raw)
        .map_err(|e| CheckpointError::Header(e.to_string()))?;
    if raw.last() != Some(&b'\n') {
        return Err(CheckpointError::Header("unterminated header".into()));
    }
    raw.pop();
    line.push_str(std::str::from_utf8(&raw).map_err(|_| CheckpointError::Header("header is not UTF-8".into()))?);
    Ok(line)
}

fn field<'a>(line: &'a str, key: &str) -> Result<&'a str, CheckpointError> {
    match line.split_once('=') {
        Some((k, v)) if k.trim() == key => Ok(v.trim()),
        _ => Err(CheckpointError::Header(format!("expected `{key} = …`, got `{line}`"))),
    }
}

fn parse_header(r: &mut impl BufRead) -> Result<Header, CheckpointError> {
    // anything unrecognizable before the version is settled counts as a version failure
    let magic = read_line(r).map_err(|e| CheckpointError::Version(e.to_string()))?;
    if magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::Version(format!("bad magic `{}`", magic.escape_debug())));
    }
    let v = read_line(r).map_err(|e| CheckpointError::Version(e.to_string()))?;
    let version = field(&v, "version")
        .ok()
        .and_then(|s| s.parse::<u32>().ok())
        .ok_or_else(|| CheckpointError::Version(format!("unreadable version line `{}`", v.escape_debug())))?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version(format!("{version} (this build reads {CHECKPOINT_VERSION})")));
    }
    let endian = read_line(r)?;
    if field(&endian, "endianness")? != "little" {
        return Err(CheckpointError::Header(format!("unsupported `{endian}`")));
    }
    let bad = |what: &str, line: &str| CheckpointError::Header(format!("bad {what} in `{line}`"));
    let l = read_line(r)?;
    let modes: usize = field(&l, "modes")?.parse().map_err(|_| bad("modes", &l))?;
    let l = read_line(r)?;
    let t = field(&l, "t")?
        .strip_prefix("0x")
        .and_then(|h| u64::from_str_radix(h, 16).ok())
        .map(f64::from_bits)
        .ok_or_else(|| bad("time", &l))?;
    let l = read_line(r)?;
    if field(&l, "fields")? != FIELDS {
        return Err(bad("field list", &l));
    }
    let l = read_line(r)?;
    let count: usize = field(&l, "count")?.parse().map_err(|_| bad("count", &l))?;
    if read_line(r)? != "end-header" {
        return Err(CheckpointError::Header("missing end-header".into()));
    }
    if count != modes * modes {
        return Err(CheckpointError::Header(format!("count {count} does not match modes {modes}")));
    }
    Ok(Header { modes, t, count })
}

/// Parses a checkpoint. When `expected` is given the file must match it.
pub fn decode_checkpoint(bytes: &[u8], expected: Option<WaveLattice>) -> Result<FlowState, CheckpointError> {
    let mut r = bytes;
    let h = parse_header(&mut r)?;
    if let Some(l) = expected {
        if l.modes() != h.modes {
            return Err(CheckpointError::LatticeMismatch {
                found: h.modes,
                expected: l.modes(),
            });
        }
    }
    let lattice = WaveLattice::new(h.modes).map_err(|e| CheckpointError::Header(e.to_string()))?;
    let want = 4 * h.count * 16;
    let mut body = Vec::with_capacity(want);
    r.read_to_end(&mut body).expect("reading from a slice");
    if body.len() < want {
        return Err(CheckpointError::Truncated {
            expected: want,
            found: body.len(),
        });
    }
    if body.len() > want {
        return Err(CheckpointError::Header(format!("{} trailing bytes", body.len() - want)));
    }
    let order = row_major(lattice);
    let mut words = body.chunks_exact(8).map(|w| f64::from_le_bytes(w.try_into().expect("8 bytes")));
    let mut next_field = || {
        let mut c = vec![Complex64::new(0.0, 0.0); lattice.len()];
        for &i in &order {
            let re = words.next().expect("length checked");
            let im = words.next().expect("length checked");
            c[i] = Complex64::new(re, im);
        }
        SpectralScalar::from_coeffs(lattice, c).expect("length matches lattice")
    };
    let u = SpectralVector2 {
        x1: next_field(),
        x2: next_field(),
    };
    let b = SpectralVector2 {
        x1: next_field(),
        x2: next_field(),
    };
    let state = FlowState { t: h.t, u, b };
    state.check_invariants(CHECKPOINT_INVARIANT_TOL)?;
    Ok(state)
}

pub fn checkpoint_read(path: &Path, expected: Option<WaveLattice>) -> Result<FlowState, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_checkpoint(&bytes, expected)
}
