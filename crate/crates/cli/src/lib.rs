//! Scenario runner for the `simo-noma` link simulator.

pub mod config;
pub mod figure;
pub mod run;

pub use config::{parse_config, ConfigError, ScenarioConfig};
pub use figure::{emit_figure_data, Figure, FigureData};
pub use run::{run_scenario, RunError, RunOptions, RunReport};
