//! Declarative scenarios, sweeps and file outputs.

mod config;
mod output;
mod run;
mod selfcheck;
mod sweep;

pub use config::{OutputSpec, PlotFormat, ScenarioConfig, SweepSpec};
pub use output::{emit_inertia_table, emit_outputs, emit_steering, emit_sweep, inertia_table, write_csv, CSV_HEADER};
pub use run::{run_scenario, simulate, AxisProgram, RunResult, RunSummary, Trajectory};
pub use selfcheck::{seed_check, CheckOutcome};
pub use sweep::{run_sweep, SweepReport, SweepRow};
