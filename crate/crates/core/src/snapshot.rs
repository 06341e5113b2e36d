//! Raw field snapshots: a fixed little-endian header followed by the grid
//! values in row-major order.
//!
//! ```text
//! offset  size  field
//!      0     8  magic "FKPPSNAP"
//!      8     4  version (u32)
//!     12     4  dim (u32)
//!     16     4  n per axis (u32)
//!     20     8  length (f64)
//!     28     8  alpha (f64)
//!     36     8  kappa (f64)
//!     44     8  time (f64)
//!     52  8·Nᵈ  values (f64)
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

pub const MAGIC: &[u8; 8] = b"FKPPSNAP";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 52;
pub const EXTENSION: &str = "bin";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub dim: u32,
    pub n_per_axis: u32,
    pub length: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub time: f64,
}

impl SnapshotHeader {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim as usize, self.n_per_axis as usize, self.length)
    }

    fn encode(&self) -> [u8; HEADER_BYTES] {
        let mut b = [0u8; HEADER_BYTES];
        b[0..8].copy_from_slice(MAGIC);
        b[8..12].copy_from_slice(&self.version.to_le_bytes());
        b[12..16].copy_from_slice(&self.dim.to_le_bytes());
        b[16..20].copy_from_slice(&self.n_per_axis.to_le_bytes());
        b[20..28].copy_from_slice(&self.length.to_le_bytes());
        b[28..36].copy_from_slice(&self.alpha.to_le_bytes());
        b[36..44].copy_from_slice(&self.kappa.to_le_bytes());
        b[44..52].copy_from_slice(&self.time.to_le_bytes());
        b
    }

    fn decode(b: &[u8; HEADER_BYTES]) -> std::result::Result<Self, String> {
        if &b[0..8] != MAGIC {
            return Err("bad magic".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let h = Self {
            version: u32_at(8),
            dim: u32_at(12),
            n_per_axis: u32_at(16),
            length: f64_at(20),
            alpha: f64_at(28),
            kappa: f64_at(36),
            time: f64_at(44),
        };
        if h.version != VERSION {
            return Err(format!("unsupported version {}", h.version));
        }
        Ok(h)
    }
}

pub fn encode_snapshot(field: &Field, alpha: f64, kappa: f64) -> Vec<u8> {
    let grid = field.grid();
    let header = SnapshotHeader {
        version: VERSION,
        dim: grid.dim() as u32,
        n_per_axis: grid.n() as u32,
        length: grid.length(),
        alpha,
        kappa,
        time: field.time(),
    };
    let mut out = Vec::with_capacity(HEADER_BYTES + 8 * grid.len());
    out.extend_from_slice(&header.encode());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_snapshot(path: &Path, field: &Field, alpha: f64, kappa: f64) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_snapshot(field, alpha, kappa))?;
    f.sync_all()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, Field)> {
    let bad = |detail: String| Error::Snapshot {
        path: path.to_path_buf(),
        detail,
    };
    let mut file = fs::File::open(path)?;
    let mut head = [0u8; HEADER_BYTES];
    file.read_exact(&mut head).map_err(|e| bad(format!("short header: {e}")))?;
    let header = SnapshotHeader::decode(&head).map_err(bad)?;
    let grid = header.grid().map_err(|e| bad(e.to_string()))?;
    let mut payload = Vec::new();
    file.read_to_end(&mut payload)?;
    if payload.len() != 8 * grid.len() {
        return Err(bad(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            8 * grid.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = Field::new(grid, values, header.time).map_err(|e| bad(e.to_string()))?;
    Ok((header, field))
}

/// `snap_00042.bin`
pub fn snapshot_name(index: usize) -> String {
    format!("snap_{index:05}.{EXTENSION}")
}

/// Snapshot files in `dir`, sorted by name.
pub fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::NoSnapshots(dir.to_path_buf()));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == EXTENSION))
        .collect();
    if paths.is_empty() {
        return Err(Error::NoSnapshots(dir.to_path_buf()));
    }
    paths.sort();
    Ok(paths)
}
