//! Persistence: factor CSVs, the DREP binary representation format, metric
//! report JSON, and the CSV exports (heatmap, co-occurrence, sweep curves).
//!
//! Readers reject malformed input instead of repairing it, and errors carry
//! line numbers (CSV) or byte counts (DREP). DREP round-trips are bit-exact
//! for every finite f64 including signed zeros and subnormals.
//!
//! DREP layout, all little-endian:
//!
//! | bytes | content                         |
//! |-------|---------------------------------|
//! | 0-3   | magic `DREP`                    |
//! | 4-7   | format version (u32) = 1        |
//! | 8-15  | row count N (u64)               |
//! | 16-23 | dimension count D (u64)         |
//! | 24-   | N·D f64 values, row-major       |

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, FactorTable, Mat, MetricReport, RepresentationMatrix};
use crate::scenarios::SweepRow;

const DREP_MAGIC: [u8; 4] = *b"DREP";
const DREP_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("factor value out of range at line {line}, column {column}: {value} >= cardinality {cardinality}")]
    FactorOutOfRange {
        line: usize,
        column: usize,
        value: u32,
        cardinality: u32,
    },
    #[error("bad magic: expected \"DREP\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("truncated file: need {expected} bytes, have {actual}")]
    TruncatedFile { expected: u64, actual: u64 },
    #[error("unsupported DREP version {found} (this reader handles {DREP_VERSION})")]
    VersionUnsupported { found: u32 },
    #[error("{extra} trailing bytes after the declared payload")]
    TrailingBytes { extra: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// A named dataset layout: factor names and cardinalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSpec {
    name: String,
    factor_names: Vec<String>,
    cardinalities: Vec<u32>,
}

impl DatasetSpec {
    pub fn new(
        name: impl Into<String>,
        factor_names: Vec<String>,
        cardinalities: Vec<u32>,
    ) -> Result<Self, DataError> {
        if factor_names.is_empty() || factor_names.len() != cardinalities.len() {
            return Err(DataError::ShapeMismatch(format!(
                "{} factor names vs {} cardinalities",
                factor_names.len(),
                cardinalities.len()
            )));
        }
        if cardinalities.iter().any(|&c| c == 0) {
            return Err(DataError::ShapeMismatch("cardinalities must be positive".into()));
        }
        for n in &factor_names {
            if n.is_empty() || n.contains(',') || n.contains(':') {
                return Err(DataError::ShapeMismatch(format!(
                    "factor name '{n}' must be non-empty and contain no ',' or ':'"
                )));
            }
        }
        Ok(DatasetSpec {
            name: name.into(),
            factor_names,
            cardinalities,
        })
    }

    /// The benchmark dataset layouts, by lowercase name.
    pub fn builtin(name: &str) -> Option<DatasetSpec> {
        let spec = |name: &str, pairs: &[(&str, u32)]| DatasetSpec {
            name: name.to_string(),
            factor_names: pairs.iter().map(|(n, _)| n.to_string()).collect(),
            cardinalities: pairs.iter().map(|&(_, c)| c).collect(),
        };
        match name.to_ascii_lowercase().as_str() {
            "dsprites" => Some(spec(
                "dsprites",
                &[
                    ("shape", 3),
                    ("scale", 6),
                    ("orientation", 40),
                    ("position_x", 32),
                    ("position_y", 32),
                ],
            )),
            "shapes3d" => Some(spec(
                "shapes3d",
                &[
                    ("floor_hue", 10),
                    ("wall_hue", 10),
                    ("object_hue", 10),
                    ("scale", 8),
                    ("orientation", 15),
                    ("shape", 4),
                ],
            )),
            "cars3d" => Some(spec(
                "cars3d",
                &[("elevation", 4), ("azimuth", 24), ("object_id", 183)],
            )),
            "smallnorb" => Some(spec(
                "smallnorb",
                &[
                    ("category", 10),
                    ("elevation", 9),
                    ("azimuth", 18),
                    ("lighting", 6),
                ],
            )),
            "celeba" => {
                let names: Vec<String> = (0..40).map(|i| format!("attr_{i:02}")).collect();
                Some(DatasetSpec {
                    name: "celeba".to_string(),
                    factor_names: names,
                    cardinalities: vec![2; 40],
                })
            }
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["dsprites", "shapes3d", "cars3d", "smallnorb", "celeba"]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    pub fn cardinalities(&self) -> &[u32] {
        &self.cardinalities
    }

    pub fn n_factors(&self) -> usize {
        self.factor_names.len()
    }
}

/// Parses a factor CSV: a `name:cardinality` header followed by integer
/// rows. Line numbers in errors are 1-based.
pub fn parse_factors(text: &str) -> Result<FactorTable, IoError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IoError::ParseError {
        line: 1,
        message: "empty file".into(),
    })?;
    let mut names = Vec::new();
    let mut cardinalities = Vec::new();
    for cell in header.split(',') {
        let (name, card) = cell.split_once(':').ok_or_else(|| IoError::ParseError {
            line: 1,
            message: format!("header cell '{cell}' is not name:cardinality"),
        })?;
        let card: u32 = card.trim().parse().map_err(|_| IoError::ParseError {
            line: 1,
            message: format!("bad cardinality in header cell '{cell}'"),
        })?;
        names.push(name.trim().to_string());
        cardinalities.push(card);
    }
    let k = names.len();

    let mut values: Vec<u32> = Vec::new();
    let mut n_rows = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != k {
            return Err(IoError::ParseError {
                line: line_no,
                message: format!("expected {k} cells, found {}", cells.len()),
            });
        }
        for (col, cell) in cells.iter().enumerate() {
            let v: u32 = cell.trim().parse().map_err(|_| IoError::ParseError {
                line: line_no,
                message: format!("'{cell}' is not a nonnegative integer"),
            })?;
            if v >= cardinalities[col] {
                return Err(IoError::FactorOutOfRange {
                    line: line_no,
                    column: col,
                    value: v,
                    cardinality: cardinalities[col],
                });
            }
            values.push(v);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(IoError::ParseError {
            line: 1,
            message: "no data rows (N >= 1 required)".into(),
        });
    }
    Ok(FactorTable::new(names, cardinalities, values)?)
}

pub fn read_factors(path: impl AsRef<Path>) -> Result<FactorTable, IoError> {
    parse_factors(&fs::read_to_string(path)?)
}

pub fn format_factors(table: &FactorTable) -> String {
    let mut out = String::new();
    let header: Vec<String> = table
        .names()
        .iter()
        .zip(table.cardinalities())
        .map(|(n, c)| format!("{n}:{c}"))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in 0..table.n_rows() {
        let cells: Vec<String> = table.row(row).iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_factors(path: impl AsRef<Path>, table: &FactorTable) -> Result<(), IoError> {
    Ok(fs::write(path, format_factors(table))?)
}

/// Encodes a representation matrix into DREP bytes.
pub fn encode_reps(reps: &RepresentationMatrix) -> Vec<u8> {
    let (n, d) = (reps.n_rows() as u64, reps.n_dims() as u64);
    let mut bytes = Vec::with_capacity(24 + reps.as_mat().data().len() * 8);
    bytes.extend_from_slice(&DREP_MAGIC);
    bytes.extend_from_slice(&DREP_VERSION.to_le_bytes());
    bytes.extend_from_slice(&n.to_le_bytes());
    bytes.extend_from_slice(&d.to_le_bytes());
    for &v in reps.as_mat().data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Decodes DREP bytes into a representation matrix.
pub fn decode_reps(bytes: &[u8]) -> Result<RepresentationMatrix, IoError> {
    let actual = bytes.len() as u64;
    if bytes.len() < 4 {
        return Err(IoError::TruncatedFile { expected: 24, actual });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().expect("length checked");
    if magic != DREP_MAGIC {
        return Err(IoError::BadMagic { found: magic });
    }
    if bytes.len() < 24 {
        return Err(IoError::TruncatedFile { expected: 24, actual });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("length checked"));
    if version != DREP_VERSION {
        return Err(IoError::VersionUnsupported { found: version });
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("length checked"));
    let d = u64::from_le_bytes(bytes[16..24].try_into().expect("length checked"));
    let count = n.checked_mul(d).and_then(|c| c.checked_mul(8));
    let expected = count.and_then(|c| c.checked_add(24));
    let Some(expected) = expected else {
        return Err(IoError::TruncatedFile { expected: u64::MAX, actual });
    };
    if actual < expected {
        return Err(IoError::TruncatedFile { expected, actual });
    }
    if actual > expected {
        return Err(IoError::TrailingBytes { extra: actual - expected });
    }
    let mut values = Vec::with_capacity((n * d) as usize);
    for chunk in bytes[24..].chunks_exact(8) {
        values.push(f64::from_le_bytes(chunk.try_into().expect("chunk is 8 bytes")));
    }
    Ok(RepresentationMatrix::new(d as usize, values)?)
}

pub fn read_reps(path: impl AsRef<Path>) -> Result<RepresentationMatrix, IoError> {
    decode_reps(&fs::read(path)?)
}

pub fn write_reps(path: impl AsRef<Path>, reps: &RepresentationMatrix) -> Result<(), IoError> {
    Ok(fs::write(path, encode_reps(reps))?)
}

/// JSON wire form of a `MetricReport`. `display` is the 0-100 "mean (std)"
/// convenience string; `scores` keeps the raw [0,1] values.
#[derive(Debug, Serialize, Deserialize)]
struct ReportRecord {
    metric: String,
    scores: Vec<f64>,
    mean: f64,
    std: f64,
    display: String,
    parameters: BTreeMap<String, String>,
}

pub fn format_reports(reports: &[MetricReport]) -> Result<String, IoError> {
    let records: Vec<ReportRecord> = reports
        .iter()
        .map(|r| ReportRecord {
            metric: r.name().to_string(),
            scores: r.scores().to_vec(),
            mean: r.mean(),
            std: r.std(),
            display: r.display(),
            parameters: r.parameters().clone(),
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&records)?;
    text.push('\n');
    Ok(text)
}

pub fn write_report(path: impl AsRef<Path>, reports: &[MetricReport]) -> Result<(), IoError> {
    Ok(fs::write(path, format_reports(reports)?)?)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<MetricReport>, IoError> {
    let records: Vec<ReportRecord> = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(records
        .into_iter()
        .map(|r| MetricReport::new(r.metric, r.scores, r.parameters))
        .collect())
}

/// Writes the importance matrix transposed (K rows × D columns, i.e. the
/// row-normalized heatmap orientation) with factor-name row labels.
pub fn format_heatmap(factor_names: &[String], r: &Mat) -> String {
    let (d, k) = (r.rows(), r.cols());
    assert_eq!(k, factor_names.len(), "one row label per factor");
    let mut out = String::from("factor");
    for dim in 0..d {
        out.push_str(&format!(",dim_{dim}"));
    }
    out.push('\n');
    for j in 0..k {
        out.push_str(&factor_names[j]);
        for i in 0..d {
            out.push_str(&format!(",{}", fmt_f64(r.at(i, j))));
        }
        out.push('\n');
    }
    out
}

pub fn write_heatmap(path: impl AsRef<Path>, factor_names: &[String], r: &Mat) -> Result<(), IoError> {
    Ok(fs::write(path, format_heatmap(factor_names, r))?)
}

/// K×K co-occurrence matrix with factor names on both axes.
pub fn format_cooccurrence(factor_names: &[String], c: &Mat) -> String {
    let k = factor_names.len();
    assert_eq!((c.rows(), c.cols()), (k, k));
    let mut out = String::from("factor");
    for name in factor_names {
        out.push_str(&format!(",{name}"));
    }
    out.push('\n');
    for j1 in 0..k {
        out.push_str(&factor_names[j1]);
        for j2 in 0..k {
            out.push_str(&format!(",{}", fmt_f64(c.at(j1, j2))));
        }
        out.push('\n');
    }
    out
}

pub fn write_cooccurrence(
    path: impl AsRef<Path>,
    factor_names: &[String],
    c: &Mat,
) -> Result<(), IoError> {
    Ok(fs::write(path, format_cooccurrence(factor_names, c))?)
}

/// Sweep curve CSV: kind, D, metric, value.
pub fn format_sweep(rows: &[SweepRow]) -> String {
    let mut out = String::from("kind,D,metric,value\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.kind.label(),
            row.dims,
            row.metric,
            fmt_f64(row.value)
        ));
    }
    out
}

pub fn write_sweep(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<(), IoError> {
    Ok(fs::write(path, format_sweep(rows))?)
}

/// Per-dimension variance profile CSV.
pub fn format_profile(profile: &[f64]) -> String {
    let mut out = String::from("dim,variance\n");
    for (i, v) in profile.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", fmt_f64(*v)));
    }
    out
}

pub fn write_profile(path: impl AsRef<Path>, profile: &[f64]) -> Result<(), IoError> {
    Ok(fs::write(path, format_profile(profile))?)
}

/// Shortest round-trippable decimal form, the same encoding serde_json
/// uses, so CSV and JSON outputs agree byte-for-byte on the same value.
fn fmt_f64(v: f64) -> String {
    let mut buf = Vec::new();
    // serde_json's f64 formatting is ryu shortest-round-trip.
    serde_json::to_writer(&mut buf, &v).expect("f64 serializes");
    String::from_utf8(buf).expect("ascii")
}

/// Convenience for CLI code paths that assemble small text files.
pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<(), IoError> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
