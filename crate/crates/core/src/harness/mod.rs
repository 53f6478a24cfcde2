//! Instance generation, sweeps, and file formats.

pub mod generate;
pub mod io;
pub mod sweep;

pub use generate::{
    gen_instance, rotated_event, EventInstance, Instance, InstanceKind, InstanceRecipe, RotationFamily,
};
pub use sweep::{
    calibrate_domega_constant, calibration_recipes, grid_recipes, parse_eps_grid, run_sweep, SweepResult,
    SweepRow, SweepSummary, CSV_HEADER,
};
