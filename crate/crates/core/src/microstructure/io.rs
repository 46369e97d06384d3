//! Grid files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `VDMA` |
//! | 2     | format version (u16, currently 1) |
//! | 2     | resolution R (u16) |
//! | R*R   | labels row-major, `0` = matrix, `1` = fiber |
//!
//! The `±0.5` model encoding is applied by consumers at load time and is never
//! stored.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Phase, PhaseGrid};

pub const GRID_MAGIC: &[u8; 4] = b"VDMA";
pub const GRID_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum GridIoError {
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a grid file (bad magic)")]
    BadMagic { path: String },
    #[error("{path}: unsupported grid format version {version}")]
    UnsupportedVersion { path: String, version: u16 },
    #[error("{path}: expected {expected} label bytes, found {found}")]
    Truncated {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}: invalid label byte {byte} at offset {offset}")]
    InvalidLabel {
        path: String,
        byte: u8,
        offset: usize,
    },
    #[error("resolution {0} does not fit the u16 header field")]
    ResolutionTooLarge(usize),
}

pub fn encode_grid(grid: &PhaseGrid) -> Result<Vec<u8>, GridIoError> {
    let r = u16::try_from(grid.resolution())
        .map_err(|_| GridIoError::ResolutionTooLarge(grid.resolution()))?;
    let mut out = Vec::with_capacity(8 + grid.labels().len());
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&GRID_VERSION.to_le_bytes());
    out.extend_from_slice(&r.to_le_bytes());
    out.extend(grid.labels().iter().map(|&p| p as u8));
    Ok(out)
}

pub fn decode_grid(bytes: &[u8], path: &str) -> Result<PhaseGrid, GridIoError> {
    if bytes.len() < 8 || &bytes[..4] != GRID_MAGIC {
        return Err(GridIoError::BadMagic { path: path.into() });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != GRID_VERSION {
        return Err(GridIoError::UnsupportedVersion {
            path: path.into(),
            version,
        });
    }
    let r = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let body = &bytes[8..];
    if body.len() != r * r {
        return Err(GridIoError::Truncated {
            path: path.into(),
            expected: r * r,
            found: body.len(),
        });
    }
    let labels = body
        .iter()
        .enumerate()
        .map(|(offset, &byte)| match byte {
            0 => Ok(Phase::Matrix),
            1 => Ok(Phase::Fiber),
            _ => Err(GridIoError::InvalidLabel {
                path: path.into(),
                byte,
                offset: offset + 8,
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PhaseGrid::from_labels(r, labels))
}

pub fn write_grid(grid: &PhaseGrid, path: impl AsRef<Path>) -> Result<(), GridIoError> {
    let path = path.as_ref();
    let bytes = encode_grid(grid)?;
    let io_err = |source| GridIoError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    f.write_all(&bytes).map_err(io_err)
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<PhaseGrid, GridIoError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut f = std::fs::File::open(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            GridIoError::NotFound(shown.clone())
        } else {
            GridIoError::Io {
                path: shown.clone(),
                source,
            }
        }
    })?;
    let mut bytes = Vec::new();
    f.read_to_end(&mut bytes).map_err(|source| GridIoError::Io {
        path: shown.clone(),
        source,
    })?;
    decode_grid(&bytes, &shown)
}
