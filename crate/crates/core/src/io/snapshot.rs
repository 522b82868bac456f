//! Binary flow-state snapshots.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic    8 bytes  "FLOODSN1"
//! nx, ny   u64 x 2
//! dx, dy   f64 x 2
//! origin   f64 x 2  (x, y of the lower-left corner)
//! t        f64
//! h        f64 x nx*ny   row-major, j = 0 southmost
//! hu       f64 x nx*ny
//! hv       f64 x nx*ny
//! ```
//!
//! Values are stored as raw bits, so a round trip is exact.

use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{FlowState, SimGrid};

pub const MAGIC: &[u8; 8] = b"FLOODSN1";
const HEADER_LEN: usize = 8 + 2 * 8 + 5 * 8;

/// Grid geometry recorded in a snapshot header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: (f64, f64),
    pub t: f64,
}

impl SnapshotHeader {
    pub fn of(grid: &SimGrid, t: f64) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            dx: grid.dx,
            dy: grid.dy,
            origin: (grid.origin_x, grid.origin_y),
            t,
        }
    }

    /// Whether the snapshot was taken on a grid of this shape and placement.
    pub fn matches(&self, grid: &SimGrid) -> bool {
        self.nx == grid.nx
            && self.ny == grid.ny
            && self.dx == grid.dx
            && self.dy == grid.dy
            && self.origin == (grid.origin_x, grid.origin_y)
    }
}

pub fn encode_snapshot(grid: &SimGrid, state: &FlowState) -> Result<Vec<u8>> {
    let n = grid.len();
    if state.h.len() != n || state.hu.len() != n || state.hv.len() != n {
        return Err(Error::Domain(format!(
            "state arrays do not match the {}x{} grid",
            grid.nx, grid.ny
        )));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 24 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.nx as u64).to_le_bytes());
    out.extend_from_slice(&(grid.ny as u64).to_le_bytes());
    for v in [grid.dx, grid.dy, grid.origin_x, grid.origin_y, state.t] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for field in [&state.h, &state.hu, &state.hv] {
        for v in field {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_snapshot(bytes: &[u8], path: &Path) -> Result<(SnapshotHeader, FlowState)> {
    let bad = |msg: String| Error::format(path, 0, msg);
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(bad("not a flow-state snapshot (bad magic or truncated header)".into()));
    }
    let u64_at = |k: usize| u64::from_le_bytes(bytes[k..k + 8].try_into().unwrap());
    let f64_at = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().unwrap());
    let (nx, ny) = (u64_at(8) as usize, u64_at(16) as usize);
    let header = SnapshotHeader {
        nx,
        ny,
        dx: f64_at(24),
        dy: f64_at(32),
        origin: (f64_at(40), f64_at(48)),
        t: f64_at(56),
    };
    let n = nx
        .checked_mul(ny)
        .filter(|n| n.checked_mul(24).is_some())
        .ok_or_else(|| bad(format!("implausible grid size {nx}x{ny}")))?;
    if bytes.len() != HEADER_LEN + 24 * n {
        return Err(bad(format!(
            "expected {} bytes for a {nx}x{ny} grid, found {}",
            HEADER_LEN + 24 * n,
            bytes.len()
        )));
    }
    let field = |f: usize| -> Vec<f64> {
        let start = HEADER_LEN + f * 8 * n;
        (0..n).map(|k| f64_at(start + 8 * k)).collect()
    };
    let state = FlowState {
        h: field(0),
        hu: field(1),
        hv: field(2),
        t: header.t,
    };
    Ok((header, state))
}

pub fn write_snapshot(path: &Path, grid: &SimGrid, state: &FlowState) -> Result<()> {
    let bytes = encode_snapshot(grid, state)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, FlowState)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes, path)
}

/// Reads a snapshot and checks it belongs to `grid`.
pub fn read_snapshot_for(path: &Path, grid: &SimGrid) -> Result<FlowState> {
    let (header, state) = read_snapshot(path)?;
    if !header.matches(grid) {
        return Err(Error::Domain(format!(
            "{}: snapshot grid {}x{} (cells {} x {}, origin {:?}) does not match the {}x{} grid (cells {} x {}, origin {:?})",
            path.display(),
            header.nx,
            header.ny,
            header.dx,
            header.dy,
            header.origin,
            grid.nx,
            grid.ny,
            grid.dx,
            grid.dy,
            (grid.origin_x, grid.origin_y)
        )));
    }
    Ok(state)
}
