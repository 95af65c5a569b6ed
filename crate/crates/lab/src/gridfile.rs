//! The `LQGGRID1` binary grid format.
//!
//! Layout: the 8 ASCII bytes `LQGGRID1`, the side `n` as a little-endian
//! `u32`, then `n²` little-endian IEEE-754 `f64` values in row-major order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use lqg_heat::{ScalarGrid, TorusSize};

use crate::error::LabError;

pub const MAGIC: &[u8; 8] = b"LQGGRID1";
const HEADER_LEN: usize = 12;

pub fn encode(grid: &ScalarGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * grid.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.side() as u32).to_le_bytes());
    for v in grid.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<ScalarGrid, LabError> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(LabError::Format("missing LQGGRID1 magic".into()));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let size = TorusSize::new(n).map_err(|e| LabError::Format(format!("grid header: {e}")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * size.sites() {
        return Err(LabError::Format(format!(
            "grid of side {n} needs {} value bytes, found {}",
            8 * size.sites(),
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ScalarGrid::from_vec(size, values).map_err(|e| LabError::Format(format!("grid body: {e}")))
}

pub fn write_grid(path: &Path, grid: &ScalarGrid) -> Result<(), LabError> {
    let mut f = fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    f.write_all(&encode(grid)).map_err(|e| LabError::io(path, e))
}

pub fn read_grid(path: &Path) -> Result<ScalarGrid, LabError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| LabError::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        LabError::Format(msg) => LabError::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}
