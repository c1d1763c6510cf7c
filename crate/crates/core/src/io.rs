//! Snapshot CSV files and binary field dumps.
//!
//! Snapshot CSV: a header `t,<coordinate columns>,<value column>` with one
//! to three coordinate columns, then one row per sample. Consecutive rows
//! with the same `t` form a frame; frame times strictly increase.
//!
//! Field dump: the bytes `IHFD`, a little-endian `u32` header length, a
//! JSON header `{dims, lower, spacing, t}` and the values as little-endian
//! `f64` in row-major order (last axis fastest).

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Field, Grid, GridError, MAX_DIM};
use crate::radial::{OuterBoundary, RadialError, RadialProfile};

pub const DUMP_MAGIC: &[u8; 4] = b"IHFD";
/// Upper bound on the JSON header of a dump.
pub const MAX_HEADER_LEN: usize = 1 << 16;
/// Upper bound on the node count of a dump.
pub const MAX_DUMP_VALUES: usize = 1 << 28;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("frame at t = {t} does not follow t = {previous}")]
    FrameOrder { t: f64, previous: f64 },
    #[error("field dump: {0}")]
    Dump(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Radial(#[from] RadialError),
}

/// All samples of one snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFrame {
    pub t: f64,
    pub dim: usize,
    /// `dim` coordinates per sample.
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

impl SnapshotFrame {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Rebuilds a radial profile from a `t,r,v` frame of equally spaced
    /// cell centres starting at `dr/2`.
    pub fn to_radial(&self, outer: OuterBoundary) -> Result<RadialProfile, IoError> {
        if self.dim != 1 || self.values.len() < 2 {
            return Err(IoError::Header("radial frames need one coordinate column and two rows".into()));
        }
        let n = self.values.len();
        let dr = self.coords[1] - self.coords[0];
        for (i, r) in self.coords.iter().enumerate() {
            let expected = (i as f64 + 0.5) * dr;
            if !((r - expected).abs() <= 1e-9 * (1.0 + expected)) {
                return Err(IoError::Row {
                    line: i as u64 + 2,
                    message: format!("radius {r} is not the cell centre {expected}"),
                });
            }
        }
        Ok(RadialProfile::new(n as f64 * dr, self.values.clone(), self.t, outer)?)
    }
}

pub fn radial_header() -> [&'static str; 3] {
    ["t", "r", "v"]
}

pub fn field_header(dim: usize) -> Vec<&'static str> {
    let mut h = vec!["t"];
    h.extend(&["x", "y", "z"][..dim]);
    h.push("u");
    h
}

/// Appends the non-exterior nodes of `field` as `t, x.., u` rows.
pub fn write_field_rows<W: Write>(field: &Field, out: &mut csv::Writer<W>) -> csv::Result<()> {
    let g = field.grid();
    for (i, v) in field.active() {
        let x = g.coords(i);
        let mut row = Vec::with_capacity(g.dim() + 2);
        row.push(field.time());
        row.extend_from_slice(&x[..g.dim()]);
        row.push(v);
        out.serialize(row)?;
    }
    Ok(())
}

/// Parses a snapshot CSV into frames.
pub fn parse_snapshot_csv<R: Read>(input: R) -> Result<Vec<SnapshotFrame>, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let cols = headers.len();
    if !(3..=MAX_DIM + 2).contains(&cols) {
        return Err(IoError::Header(format!("expected 3 to {} columns, found {cols}", MAX_DIM + 2)));
    }
    if &headers[0] != "t" {
        return Err(IoError::Header(format!("first column must be t, found {:?}", &headers[0])));
    }
    let dim = cols - 2;
    let mut frames: Vec<SnapshotFrame> = Vec::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != cols {
            return Err(IoError::Row {
                line,
                message: format!("expected {cols} fields, found {}", record.len()),
            });
        }
        let mut row = [0.0; MAX_DIM + 2];
        for (k, field) in record.iter().enumerate() {
            row[k] = field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| IoError::Row {
                line,
                message: format!("column {k} is not a finite number: {field:?}"),
            })?;
        }
        let t = row[0];
        match frames.last_mut() {
            Some(f) if f.t == t => {
                f.coords.extend_from_slice(&row[1..=dim]);
                f.values.push(row[dim + 1]);
            }
            last => {
                if let Some(f) = last {
                    if !(t > f.t) {
                        return Err(IoError::FrameOrder { t, previous: f.t });
                    }
                }
                frames.push(SnapshotFrame {
                    t,
                    dim,
                    coords: row[1..=dim].to_vec(),
                    values: vec![row[dim + 1]],
                });
            }
        }
    }
    Ok(frames)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpHeader {
    pub dims: Vec<usize>,
    pub lower: Vec<f64>,
    pub spacing: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub header: DumpHeader,
    pub values: Vec<f64>,
}

impl FieldDump {
    pub fn of(field: &Field) -> Self {
        let g = field.grid();
        let d = g.dim();
        Self {
            header: DumpHeader {
                dims: g.nodes().to_vec(),
                lower: g.lower()[..d].to_vec(),
                spacing: g.spacing()[..d].to_vec(),
                t: field.time(),
            },
            values: field.values().to_vec(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let mut out = Vec::with_capacity(8 + header.len() + 8 * self.values.len());
        out.extend_from_slice(DUMP_MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(&self.encode())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, IoError> {
        let bad = |m: &str| IoError::Dump(m.to_string());
        if bytes.len() < 8 || &bytes[..4] != DUMP_MAGIC {
            return Err(bad("missing magic"));
        }
        let len = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        if len > MAX_HEADER_LEN || bytes.len() < 8 + len {
            return Err(bad("header length out of range"));
        }
        let header: DumpHeader =
            serde_json::from_slice(&bytes[8..8 + len]).map_err(|e| IoError::Dump(format!("header: {e}")))?;
        let d = header.dims.len();
        if d == 0 || d > MAX_DIM || header.lower.len() != d || header.spacing.len() != d {
            return Err(bad("dims, lower and spacing must have one entry per axis (1 to 3)"));
        }
        if !header.t.is_finite()
            || header.lower.iter().any(|v| !v.is_finite())
            || header.spacing.iter().any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(bad("non-finite geometry or non-positive spacing"));
        }
        let count = header
            .dims
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .filter(|&c| c > 0 && c <= MAX_DUMP_VALUES)
            .ok_or_else(|| bad("node count out of range"))?;
        let body = &bytes[8 + len..];
        if body.len() != 8 * count {
            return Err(IoError::Dump(format!("expected {} value bytes, found {}", 8 * count, body.len())));
        }
        let values: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite value"));
        }
        Ok(Self { header, values })
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, IoError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::decode(&bytes)
    }

    /// Attaches the values to `grid`, which must have the same layout.
    pub fn into_field(self, grid: Arc<Grid>) -> Result<Field, IoError> {
        let d = grid.dim();
        let same = grid.nodes() == self.header.dims.as_slice()
            && (0..d).all(|k| {
                let tol = 1e-12 * (1.0 + grid.lower()[k].abs());
                (grid.lower()[k] - self.header.lower[k]).abs() <= tol
                    && (grid.spacing()[k] - self.header.spacing[k]).abs() <= 1e-12 * grid.spacing()[k]
            });
        if !same {
            return Err(bad_layout());
        }
        Ok(Field::new(grid, self.values, self.header.t)?)
    }
}

fn bad_layout() -> IoError {
    IoError::Dump("layout differs from the grid".into())
}
