//! Parameter sweeps, CSV output, slope fits and layered configuration.

pub mod analysis;
pub mod config;
pub mod sweep;

pub use analysis::{fit_loglog, fit_loglog_slope, AnalysisError, LogLogFit, Metric};
pub use config::{load_config, load_sweep_spec, ConfigError, Origin, Settings};
pub use sweep::{
    read_csv, read_csv_file, run_sweep, run_sweep_cells, write_csv, CellRuns, HarnessError,
    SweepRow, SweepSpec, CSV_HEADER,
};
