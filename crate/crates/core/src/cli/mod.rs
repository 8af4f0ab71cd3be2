//! Configuration parsing, scenario orchestration, and file output.

pub mod config;
pub mod scenario;
pub mod vtk;

pub use config::{parse_config, Scenario, SimulationConfig};
pub use scenario::{run_mms, run_scenario, run_sweep, RunResult, Sweep, SweepResult};
pub use vtk::write_vtk;
