//! Measurement CSV: one row per pseudorange.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FdeError, Result};
use crate::measurement::{EpochSet, Measurement};
use crate::residual::wls_solve;

pub const MEASUREMENT_COLUMNS: [&str; 18] = [
    "time_s",
    "trace_id",
    "sv_id",
    "constellation",
    "pr_raw_m",
    "iono_m",
    "tropo_m",
    "sat_clock_m",
    "constel_bias_m",
    "sat_x_m",
    "sat_y_m",
    "sat_z_m",
    "weight",
    "multipath_flag",
    "truth_fault",
    "truth_rx_x_m",
    "truth_rx_y_m",
    "truth_rx_z_m",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementCsvRow {
    pub time_s: f64,
    pub trace_id: String,
    pub sv_id: String,
    pub constellation: String,
    pub pr_raw_m: f64,
    pub iono_m: f64,
    pub tropo_m: f64,
    pub sat_clock_m: f64,
    pub constel_bias_m: f64,
    pub sat_x_m: f64,
    pub sat_y_m: f64,
    pub sat_z_m: f64,
    pub weight: f64,
    #[serde(default)]
    pub multipath_flag: Option<u8>,
    #[serde(default)]
    pub truth_fault: Option<u8>,
    #[serde(default)]
    pub truth_rx_x_m: Option<f64>,
    #[serde(default)]
    pub truth_rx_y_m: Option<f64>,
    #[serde(default)]
    pub truth_rx_z_m: Option<f64>,
    /// Receiver clock bias, read only; never written.
    #[serde(default, skip_serializing)]
    pub rx_clock_bias_m: Option<f64>,
}

/// Where the receiver clock bias used in conditioning comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockBiasSource {
    /// Optional `rx_clock_bias_m` column; zero when absent.
    #[default]
    Column,
    /// All-in-view WLS on the raw ranges of each epoch.
    WlsEstimate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadOptions {
    pub clock_bias_source: ClockBiasSource,
}

fn flag(v: Option<u8>, row: usize, column: &str) -> Result<Option<bool>> {
    match v {
        None => Ok(None),
        Some(0) => Ok(Some(false)),
        Some(1) => Ok(Some(true)),
        Some(x) => Err(FdeError::Parse {
            row,
            message: format!("{column} must be 0 or 1, got {x}"),
        }),
    }
}

impl MeasurementCsvRow {
    pub fn from_measurement(epoch: &EpochSet, m: &Measurement) -> Self {
        let truth = epoch.truth_rx_pos;
        Self {
            time_s: epoch.timestamp,
            trace_id: epoch.trace_id.clone(),
            sv_id: m.sv_id.clone(),
            constellation: m.constellation.clone(),
            pr_raw_m: m.pseudorange_raw,
            iono_m: m.iono_delay,
            tropo_m: m.tropo_delay,
            sat_clock_m: m.sat_clock_bias,
            constel_bias_m: m.constellation_bias,
            sat_x_m: m.sat_pos[0],
            sat_y_m: m.sat_pos[1],
            sat_z_m: m.sat_pos[2],
            weight: m.weight,
            multipath_flag: m.multipath.map(u8::from),
            truth_fault: m.truth_fault.map(u8::from),
            truth_rx_x_m: truth.map(|t| t[0]),
            truth_rx_y_m: truth.map(|t| t[1]),
            truth_rx_z_m: truth.map(|t| t[2]),
            rx_clock_bias_m: None,
        }
    }

    fn numeric_fields(&self) -> [(&'static str, Option<f64>); 14] {
        [
            ("time_s", Some(self.time_s)),
            ("pr_raw_m", Some(self.pr_raw_m)),
            ("iono_m", Some(self.iono_m)),
            ("tropo_m", Some(self.tropo_m)),
            ("sat_clock_m", Some(self.sat_clock_m)),
            ("constel_bias_m", Some(self.constel_bias_m)),
            ("sat_x_m", Some(self.sat_x_m)),
            ("sat_y_m", Some(self.sat_y_m)),
            ("sat_z_m", Some(self.sat_z_m)),
            ("weight", Some(self.weight)),
            ("truth_rx_x_m", self.truth_rx_x_m),
            ("truth_rx_y_m", self.truth_rx_y_m),
            ("truth_rx_z_m", self.truth_rx_z_m),
            ("rx_clock_bias_m", self.rx_clock_bias_m),
        ]
    }

    fn to_measurement(&self, row: usize) -> Result<Measurement> {
        for (name, v) in self.numeric_fields() {
            if v.is_some_and(|x| !x.is_finite()) {
                return Err(FdeError::Parse {
                    row,
                    message: format!("{name} is not finite"),
                });
            }
        }
        Ok(Measurement {
            sv_id: self.sv_id.clone(),
            constellation: self.constellation.clone(),
            sat_pos: [self.sat_x_m, self.sat_y_m, self.sat_z_m],
            sat_clock_bias: self.sat_clock_m,
            pseudorange_raw: self.pr_raw_m,
            iono_delay: self.iono_m,
            tropo_delay: self.tropo_m,
            constellation_bias: self.constel_bias_m,
            weight: self.weight,
            multipath: flag(self.multipath_flag, row, "multipath_flag")?,
            truth_fault: flag(self.truth_fault, row, "truth_fault")?,
        })
    }

    fn truth(&self) -> Option<[f64; 3]> {
        Some([self.truth_rx_x_m?, self.truth_rx_y_m?, self.truth_rx_z_m?])
    }
}

pub fn write_measurements<W: Write>(out: W, epochs: &[EpochSet]) -> Result<()> {
    // Header written explicitly so an empty file still carries it.
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(MEASUREMENT_COLUMNS).map_err(csv_err)?;
    for e in epochs {
        for m in &e.measurements {
            w.serialize(MeasurementCsvRow::from_measurement(e, m)).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_measurements_file(path: &Path, epochs: &[EpochSet]) -> Result<()> {
    write_measurements(std::io::BufWriter::new(std::fs::File::create(path)?), epochs)
}

fn csv_err(e: csv::Error) -> FdeError {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FdeError::Io(io),
        kind => FdeError::Parse {
            row,
            message: format!("{kind:?}"),
        },
    }
}

/// Reads measurement rows and groups them into epochs keyed by
/// `(trace_id, time_s)` in order of first appearance. Epochs with fewer than
/// four rows are dropped with a warning. Parse errors carry the file line.
pub fn read_epochs<R: Read>(input: R, opts: &LoadOptions) -> Result<Vec<EpochSet>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(csv_err)?.clone();
    for required in &MEASUREMENT_COLUMNS[..13] {
        if !headers.iter().any(|h| h == *required) {
            return Err(FdeError::Parse {
                row: 1,
                message: format!("missing column {required}"),
            });
        }
    }

    let mut epochs: Vec<EpochSet> = Vec::new();
    let mut clock: Vec<Option<f64>> = Vec::new();
    let mut index: HashMap<(String, u64), usize> = HashMap::new();
    let mut seen: HashSet<(String, u64, String)> = HashSet::new();
    let mut line = 1;
    for record in reader.deserialize::<MeasurementCsvRow>() {
        let row: MeasurementCsvRow = record.map_err(|e| {
            FdeError::Parse {
                row: e.position().map_or(line + 1, |p| p.line() as usize),
                message: e.to_string(),
            }
        })?;
        line += 1;
        let meas = row.to_measurement(line)?;
        let key = (row.trace_id.clone(), row.time_s.to_bits());
        if !seen.insert((row.trace_id.clone(), row.time_s.to_bits(), row.sv_id.clone())) {
            return Err(FdeError::Parse {
                row: line,
                message: format!("duplicate sv_id {} at t={} in {}", row.sv_id, row.time_s, row.trace_id),
            });
        }
        let slot = *index.entry(key).or_insert_with(|| {
            let mut e = EpochSet::new(row.trace_id.clone(), row.time_s, Vec::new());
            e.truth_rx_pos = row.truth();
            epochs.push(e);
            clock.push(row.rx_clock_bias_m);
            epochs.len() - 1
        });
        epochs[slot].measurements.push(meas);
    }

    let mut out = Vec::with_capacity(epochs.len());
    for (mut e, column_clock) in epochs.into_iter().zip(clock) {
        if e.len() < 4 {
            log::warn!("{} t={}: only {} measurements, epoch skipped", e.trace_id, e.timestamp, e.len());
            continue;
        }
        e.rx_clock_bias_est = Some(match opts.clock_bias_source {
            ClockBiasSource::Column => column_clock.unwrap_or(0.0),
            // Conditioning adds b_rx, so the estimated delay enters negated.
            ClockBiasSource::WlsEstimate => match wls_solve(&e, None) {
                Ok(sol) => -sol.rx_clock_bias,
                Err(err) => {
                    log::warn!("{} t={}: clock estimate failed ({err}), epoch skipped", e.trace_id, e.timestamp);
                    continue;
                }
            },
        });
        out.push(e);
    }
    Ok(out)
}

pub fn load_epochs(path: &Path, opts: &LoadOptions) -> Result<Vec<EpochSet>> {
    read_epochs(std::io::BufReader::new(std::fs::File::open(path)?), opts)
}
