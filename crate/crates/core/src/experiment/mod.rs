//! Config-driven experiments, figure presets and verification suites.

pub mod config;
pub mod csv_io;
pub mod presets;
pub mod runner;
pub mod verify;

pub use config::{Algorithm, ConfigError, ExperimentConfig, InitSpec, ReferenceSpec};
pub use csv_io::{parse_csv, to_csv, write_csv};
pub use presets::{preset_configs, run_preset, Overrides, PresetOutcome, PresetRun, PRESET_NAMES};
pub use runner::{run_experiment, RunStatus, Sample, Trajectory};
pub use verify::{verify_equivalence, verify_gradient, verify_nash, verify_stationary, Report};

use std::path::Path;

impl Trajectory {
    pub fn to_csv_string(&self) -> String {
        to_csv(&self.header(), &self.rows()).expect("in-memory CSV")
    }

    /// Writes the CSV and its `<path>.log` sidecar.
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        write_csv(path, &self.header(), &self.rows())?;
        let mut log = path.as_os_str().to_owned();
        log.push(".log");
        std::fs::write(Path::new(&log), self.log_text())
    }
}
