//! Run configuration, file formats and the CLI workflows.

mod config;
mod hydrograph;
mod snapshot;
mod workflow;

pub use config::{
    load_config, parse_config, GaugeConfig, HydrographConfig, InitialCondition, OptimizerSection, RunConfig, Scenario,
    SimulationSection, SolverSection, SourceConfig, SyntheticKind, TerrainConfig, TrapezoidSpec,
};
pub use hydrograph::{format_hydrograph_csv, parse_hydrograph_csv, read_hydrograph_csv};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, read_snapshot_for, write_snapshot, SnapshotHeader};
pub use workflow::{build_objective, map, optimize, simulate, MassBalance, OptimizeOutcome, SimulateOutcome};
