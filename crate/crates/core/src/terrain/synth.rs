//! Synthetic river terrain: a straight main channel with a shallower side
//! branch leaving its north bank.
//!
//! ```text
//!   north (waterfall)
//!  +------------------|####|------------------+
//!  |  floodplain      |####| branch           |
//!  |                  |####| (sill, then      |
//!  |                  |####|  sloping north)  |
//!  |==================+====+==================| <- main channel, flowing east
//!  |  source ->                        -> out |
//!  |==========================================|
//!  |  floodplain                              |
//!  +------------------------------------------+
//!   west: wall                      east: waterfall
//! ```
//!
//! Water leaves the channel into the branch only once the stage exceeds the
//! sill, so a dam downstream of the branch mouth, which backs water up over
//! the sill, raises the branch inflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{rasterize_gauge, GaugeLine, Side};
use crate::geometry::{Point, Polygon};
use crate::solver::{BoundaryKind, Boundaries};
use crate::types::SimGrid;

use super::dam::Centerline;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchParams {
    /// Domain size, meters.
    pub length: f64,
    pub width: f64,
    pub cell_size: f64,
    /// Main channel axis (y of its centerline), width, and bank height above
    /// the thalweg.
    pub channel_y: f64,
    pub channel_width: f64,
    pub bank_height: f64,
    /// Thalweg elevation at the west edge and its downstream slope.
    pub thalweg_upstream: f64,
    pub slope: f64,
    /// Branch axis (x), width, sill height above the main thalweg at the
    /// mouth, and the northward slope of the branch bed.
    pub branch_x: f64,
    pub branch_width: f64,
    pub sill_height: f64,
    pub branch_slope: f64,
    pub manning: f64,
}

impl Default for BranchParams {
    fn default() -> Self {
        Self {
            length: 2000.0,
            width: 1200.0,
            cell_size: 50.0,
            channel_y: 450.0,
            channel_width: 500.0,
            bank_height: 8.0,
            thalweg_upstream: 20.0,
            slope: 2e-4,
            branch_x: 1000.0,
            branch_width: 200.0,
            sill_height: 1.5,
            branch_slope: 2e-3,
            manning: 0.03,
        }
    }
}

impl BranchParams {
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("length", self.length),
            ("width", self.width),
            ("cell_size", self.cell_size),
            ("channel_width", self.channel_width),
            ("bank_height", self.bank_height),
            ("branch_width", self.branch_width),
            ("sill_height", self.sill_height),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("terrain.params.{name} = {v} (must be > 0)"));
            }
        }
        for (name, v) in [("slope", self.slope), ("branch_slope", self.branch_slope)] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("terrain.params.{name} = {v} (must be >= 0)"));
            }
        }
        if !(self.manning > 0.0 && self.manning <= 1.0) {
            out.push(format!("terrain.params.manning = {} (must be in (0, 1])", self.manning));
        }
        if self.branch_width > self.channel_width {
            out.push(format!(
                "terrain.params.branch_width = {} exceeds channel_width = {}",
                self.branch_width, self.channel_width
            ));
        }
        if self.sill_height >= self.bank_height {
            out.push(format!(
                "terrain.params.sill_height = {} must be below bank_height = {}",
                self.sill_height, self.bank_height
            ));
        }
        let cs = self.cell_size;
        let north_bank = self.channel_y + 0.5 * self.channel_width;
        if self.channel_y - 0.5 * self.channel_width < 2.0 * cs || north_bank > self.width - 6.0 * cs {
            out.push("terrain.params.channel_y leaves too little floodplain around the channel".into());
        }
        if self.branch_x - 0.5 * self.branch_width < 6.0 * cs || self.branch_x + 0.5 * self.branch_width > self.length - 6.0 * cs {
            out.push("terrain.params.branch_x puts the branch too close to the domain ends".into());
        }
        out
    }

    pub fn thalweg(&self, x: f64) -> f64 {
        self.thalweg_upstream - self.slope * x
    }

    fn bed(&self, x: f64, y: f64) -> f64 {
        let t = self.thalweg(x);
        let north_bank = self.channel_y + 0.5 * self.channel_width;
        if (y - self.channel_y).abs() <= 0.5 * self.channel_width {
            return t;
        }
        if y > north_bank && (x - self.branch_x).abs() <= 0.5 * self.branch_width {
            let mouth = self.thalweg(self.branch_x) + self.sill_height;
            return mouth - self.branch_slope * (y - north_bank);
        }
        t + self.bank_height
    }
}

/// Everything a scenario on the synthetic terrain needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTerrain {
    pub params: BranchParams,
    pub grid: SimGrid,
    pub centerline: Centerline,
    /// Section across the branch, positive into the branch (north).
    pub gauge: GaugeLine,
    /// Admissible dam centers along the main channel.
    pub search_region: Polygon,
    /// Inflow cells at the upstream end of the channel.
    pub source_region: Polygon,
    pub boundaries: Boundaries,
}

pub fn synth_channel_with_branch(params: &BranchParams) -> Result<SynthTerrain> {
    let v = params.validate();
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let p = *params;
    let cs = p.cell_size;
    let nx = (p.length / cs).round() as usize;
    let ny = (p.width / cs).round() as usize;
    let grid = SimGrid::from_fn(nx, ny, cs, cs, (0.0, 0.0), p.manning, |x, y| p.bed(x, y))?;
    let (lo, hi) = grid.extent();

    let centerline = Centerline::new(vec![Point::new(lo.x, p.channel_y), Point::new(hi.x, p.channel_y)])?;

    // across the branch, one cell into the banks on each side, on a cell
    // edge about a third of the way up the branch
    let north_bank = p.channel_y + 0.5 * p.channel_width;
    let gy = cs * ((north_bank + (hi.y - north_bank) / 3.0) / cs).round();
    let half = 0.5 * p.branch_width + cs;
    let gauge = rasterize_gauge(
        &grid,
        Point::new(p.branch_x - half, gy),
        Point::new(p.branch_x + half, gy),
        Side::Left,
    )?;

    let search_region = Polygon::rectangle(
        p.branch_x - 5.0 * cs,
        p.channel_y - 2.0 * cs,
        hi.x - 5.0 * cs,
        p.channel_y + 2.0 * cs,
    );
    let source_region = Polygon::rectangle(
        lo.x,
        p.channel_y - 0.5 * p.channel_width,
        lo.x + 2.0 * cs,
        p.channel_y + 0.5 * p.channel_width,
    );
    let boundaries = Boundaries {
        west: BoundaryKind::Wall,
        east: BoundaryKind::Waterfall,
        south: BoundaryKind::Waterfall,
        north: BoundaryKind::Waterfall,
    };
    Ok(SynthTerrain {
        params: p,
        grid,
        centerline,
        gauge,
        search_region,
        source_region,
        boundaries,
    })
}
