//! Binary portable graymap (P5) export for error maps.

use std::fs;
use std::path::Path;

use crate::error::{AceError, Result};
use crate::field::Grid;

/// Encodes `grid` as an 8-bit P5 image, mapping `lo -> 0` and `hi -> 255`
/// (rounding half up, clamping outside the range).
pub fn encode_graymap(grid: &Grid, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if !(hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(AceError::InvalidRange { lo, hi });
    }
    let header = format!("P5\n{} {}\n255\n", grid.width(), grid.height());
    let mut out = Vec::with_capacity(header.len() + grid.len());
    out.extend_from_slice(header.as_bytes());
    let span = hi - lo;
    out.extend(grid.values().iter().map(|&v| {
        let level = ((v - lo) / span * 255.0 + 0.5).floor();
        level.clamp(0.0, 255.0) as u8
    }));
    Ok(out)
}

pub fn write_graymap(grid: &Grid, path: impl AsRef<Path>, lo: f64, hi: f64) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_graymap(grid, lo, hi).map_err(|e| e.in_file(path))?;
    fs::write(path, bytes).map_err(|e| AceError::from(e).in_file(path))
}
