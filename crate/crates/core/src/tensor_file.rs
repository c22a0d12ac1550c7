//! Text file format for curvature tensors.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "n": 2,
//!   "layout": "row-major i,j,k,l ascending, 1-based indices mapped to 0-based storage",
//!   "entries": [ ... (2n)^4 numbers ... ],
//!   "symmetry_tolerance": 1e-9
//! }
//! ```
//!
//! Entries are written with 17 significant digits, so a write/read cycle
//! reproduces every entry bit for bit.

use crate::curvature::CurvatureTensor;
use crate::error::{Error, Result};
use crate::space::HermitianSpace;
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;
pub const LAYOUT: &str = "row-major i,j,k,l ascending, 1-based indices mapped to 0-based storage";

#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    pub tensor: CurvatureTensor,
    pub symmetry_tolerance: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTensorFile {
    format_version: u32,
    n: usize,
    layout: String,
    entries: Vec<f64>,
    symmetry_tolerance: f64,
}

/// 17 significant digits; exact zero prints as `0`.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn to_text(tensor: &CurvatureTensor, symmetry_tolerance: f64) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"format_version\": {FORMAT_VERSION},");
    let _ = writeln!(out, "  \"n\": {},", tensor.n());
    let _ = writeln!(out, "  \"layout\": \"{LAYOUT}\",");
    out.push_str("  \"entries\": [");
    let d = tensor.dim();
    for (i, x) in tensor.entries().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if i % d == 0 {
            out.push_str("\n    ");
        } else {
            out.push(' ');
        }
        out.push_str(&format_f64(*x));
    }
    out.push_str("\n  ],\n");
    let _ = writeln!(out, "  \"symmetry_tolerance\": {}", format_f64(symmetry_tolerance));
    out.push_str("}\n");
    out
}

pub fn from_text(text: &str) -> Result<TensorFile> {
    let raw: RawTensorFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if raw.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format_version {}",
            raw.format_version
        )));
    }
    if raw.layout != LAYOUT {
        return Err(Error::Format(format!("unsupported layout {:?}", raw.layout)));
    }
    if !(raw.symmetry_tolerance >= 0.0) {
        return Err(Error::Format("symmetry_tolerance must be nonnegative".into()));
    }
    let space = HermitianSpace::new(raw.n).map_err(|e| Error::Format(e.to_string()))?;
    let tensor = CurvatureTensor::from_entries(&space, raw.entries)?;
    Ok(TensorFile {
        tensor,
        symmetry_tolerance: raw.symmetry_tolerance,
    })
}

pub fn write(path: &Path, tensor: &CurvatureTensor, symmetry_tolerance: f64) -> Result<()> {
    std::fs::write(path, to_text(tensor, symmetry_tolerance))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read(path: &Path) -> Result<TensorFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    from_text(&text)
}
