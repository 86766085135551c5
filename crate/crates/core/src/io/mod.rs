//! File formats: measurement and flag CSVs, result tables, scenario configs.

mod config;
mod flags;
mod measurements;
mod tables;

pub use config::{load_scenario, parse_scenario, scenario_to_toml};
pub use flags::{flag_rows, write_flags, FlagCsvRow, FLAG_COLUMNS};
pub use measurements::{
    load_epochs, read_epochs, write_measurements, write_measurements_file, ClockBiasSource, LoadOptions,
    MeasurementCsvRow, MEASUREMENT_COLUMNS,
};
pub use tables::{
    write_rows, write_timing_groups, write_timing_records, ComplexityCsvRow, RocCsvRow, ThresholdErrorRow,
};
