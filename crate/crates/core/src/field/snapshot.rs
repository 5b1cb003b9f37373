//! Field snapshots: one raw little-endian `f64` file per component
//! (axis-0-fastest) plus a JSON sidecar with the grid and time stamp.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GridSpec, ScalarField, VectorField};
use crate::error::{Error, Result};

pub const SNAPSHOT_VERSION: u32 = 1;
pub const DFT_CONVENTION: &str = "forward-unnormalized/inverse-1/N^n";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotMeta {
    pub n: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "L")]
    pub half_extent: f64,
    pub t: f64,
    pub component: usize,
    pub dft_convention: String,
    pub version: u32,
}

/// Writes `<stem>_c<i>.bin` and `<stem>_c<i>.json` for every component and
/// returns the sidecar paths.
pub fn write_vector(dir: &Path, stem: &str, field: &VectorField) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut written = Vec::new();
    for (i, c) in field.components().iter().enumerate() {
        written.push(write_scalar(dir, &format!("{stem}_c{i}"), c, i)?);
    }
    Ok(written)
}

pub fn write_scalar(dir: &Path, stem: &str, field: &ScalarField, component: usize) -> Result<PathBuf> {
    let bin = dir.join(format!("{stem}.bin"));
    let json = dir.join(format!("{stem}.json"));
    let mut bytes = Vec::with_capacity(field.samples().len() * 8);
    for v in field.samples() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes).map_err(|e| Error::io(format!("writing {}", bin.display()), e))?;
    let g = field.grid();
    let meta = SnapshotMeta {
        n: g.dim(),
        points: g.points(),
        half_extent: g.half_extent(),
        t: field.t(),
        component,
        dft_convention: DFT_CONVENTION.to_string(),
        version: SNAPSHOT_VERSION,
    };
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&json, text).map_err(|e| Error::io(format!("writing {}", json.display()), e))?;
    Ok(json)
}

/// Reads a snapshot given its JSON sidecar; the data file is the sibling
/// with extension `.bin`.
pub fn read_scalar(sidecar: &Path) -> Result<(SnapshotMeta, ScalarField)> {
    let text = fs::read_to_string(sidecar)
        .map_err(|e| Error::io(format!("reading {}", sidecar.display()), e))?;
    let meta: SnapshotMeta = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: sidecar.to_path_buf(),
        message: e.to_string(),
    })?;
    if meta.version != SNAPSHOT_VERSION {
        return Err(Error::Format {
            path: sidecar.to_path_buf(),
            message: format!("unsupported snapshot version {}", meta.version),
        });
    }
    let grid = GridSpec::new(meta.n, meta.points, meta.half_extent)?;
    let bin = sidecar.with_extension("bin");
    let bytes = fs::read(&bin).map_err(|e| Error::io(format!("reading {}", bin.display()), e))?;
    if bytes.len() != grid.len() * 8 {
        return Err(Error::Format {
            path: bin,
            message: format!("expected {} bytes, found {}", grid.len() * 8, bytes.len()),
        });
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    let field = ScalarField::new(grid, samples, meta.t)?;
    Ok((meta, field))
}
