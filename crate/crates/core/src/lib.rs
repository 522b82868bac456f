//! Shallow-water flood simulation over digital elevation models, and
//! gradient-based placement of a water-retaining dam that maximizes the
//! flood volume delivered into a side branch of a river.
//!
//! The crate is organized bottom-up:
//!
//! - [`types`]: grids, flow state, hydrographs, physical parameters.
//! - [`solver`]: well-balanced, positivity-preserving finite-volume stepper.
//! - [`terrain`]: DEM input, synthetic river terrain, dam rasterization.
//! - [`gauge`]: discharge and cumulative volume through a cross-section.
//! - [`optimizer`]: objective evaluation, finite-difference gradients,
//!   line-searched ascent and lattice mapping.
//! - [`io`]: run configuration, snapshots, CSV output and the CLI workflows.

pub mod error;
pub mod gauge;
pub mod geometry;
pub mod io;
mod num;
pub mod optimizer;
pub mod solver;
pub mod terrain;
pub mod types;

pub use error::{Error, Result};
pub use geometry::{Point, Polygon};
pub use types::{FlowState, Hydrograph, PhysicsParams, SimGrid, SourceField};
