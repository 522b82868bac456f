//! Grid construction: DEM rasters, synthetic river terrain, dams.

mod dam;
mod dem;
mod synth;

pub use dam::{dam_footprint, is_eight_connected, rasterize_dam, Centerline, DamSpec};
pub use dem::{format_dem, parse_dem, read_dem, write_dem, Dem, DemOptions};
pub use synth::{synth_channel_with_branch, BranchParams, SynthTerrain};
