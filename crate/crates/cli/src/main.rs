//! `gfde`: simulate scenarios, run FDE over measurement files and produce the
//! ROC, timing and complexity tables.
//!
//! Exit status is 0 on success, 1 for usage or input problems and 2 for
//! internal failures.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use greedy_fde::eval::{
    auc, baseline_error, complexity_curves, group_timing, log_grid, published_grid, roc_curve, simulation_grid,
    threshold_error_curve, threshold_sweep, timing_profile, GroupBy,
};
use greedy_fde::io::{
    load_epochs, load_scenario, write_flags, write_measurements, write_rows, write_timing_groups, write_timing_records,
    ClockBiasSource, ComplexityCsvRow, LoadOptions, RocCsvRow, ThresholdErrorRow,
};
use greedy_fde::sim::{simulate, ScenarioConfig};
use greedy_fde::{run_fde, EpochSet, FdeError, FdeMethod, FdeOptions};

#[derive(Parser)]
#[command(name = "gfde", version, about = "Greedy GNSS fault detection and exclusion toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a measurement CSV from a scenario file.
    Simulate {
        /// Scenario TOML; the built-in nine-location sweep when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one FDE method over a measurement CSV and write per-measurement flags.
    Fde {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_parser = parse_method)]
        method: FdeMethod,
        #[arg(long)]
        threshold: f64,
        /// Stop after this many exclusions (greedy methods) or hypothesis size (ss).
        #[arg(long)]
        max_faults: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep a threshold grid and write the pooled ROC curve with its AUC.
    Roc {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_parser = parse_method)]
        method: FdeMethod,
        /// `simulation`, `published`, a comma list, or `log:LO:HI:N`.
        #[arg(long, default_value = "simulation")]
        grid: String,
        /// Label written to the scenario column.
        #[arg(long, default_value = "all")]
        scenario: String,
        /// Injected bias written to the bias_m column.
        #[arg(long, default_value_t = 0.0)]
        bias_m: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write grand-mean horizontal error per threshold.
        #[arg(long)]
        errors_out: Option<PathBuf>,
    },
    /// Time methods epoch by epoch; output is grouped by measurement and fault count.
    Bench {
        #[command(flatten)]
        input: InputArgs,
        /// Repeat once per method; pairs with --threshold in order.
        #[arg(long = "method", value_parser = parse_method, required = true)]
        methods: Vec<FdeMethod>,
        #[arg(long = "threshold", required = true)]
        thresholds: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one row per timed call.
        #[arg(long)]
        records_out: Option<PathBuf>,
    },
    /// Theoretical operation counts for EDM, residual and solution separation.
    Complexity {
        #[arg(long)]
        f: u32,
        #[arg(long, default_value_t = 10)]
        k: u32,
        #[arg(long, default_value_t = 10)]
        m_min: u32,
        #[arg(long, default_value_t = 100)]
        m_max: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Measurement CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ClockArg::Column)]
    clock_bias: ClockArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    /// Use the optional rx_clock_bias_m column (zero when absent).
    Column,
    /// Estimate it per epoch with all-in-view least squares.
    Wls,
}

impl InputArgs {
    fn load(&self) -> Result<Vec<EpochSet>, CliError> {
        let clock_bias_source = match self.clock_bias {
            ClockArg::Column => ClockBiasSource::Column,
            ClockArg::Wls => ClockBiasSource::WlsEstimate,
        };
        let epochs = load_epochs(&self.input, &LoadOptions { clock_bias_source }).map_err(|e| match e {
            FdeError::Io(err) => CliError::Input(format!("{}: {err}", self.input.display())),
            other => other.into(),
        })?;
        if epochs.is_empty() {
            return Err(CliError::Input(format!("{}: no usable epochs", self.input.display())));
        }
        Ok(epochs)
    }
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Internal(String),
}

impl From<FdeError> for CliError {
    fn from(e: FdeError) -> Self {
        match e {
            FdeError::InvalidMatrix { .. } | FdeError::SingularGeometry { .. } | FdeError::InsufficientDimension(_) => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn parse_method(s: &str) -> Result<FdeMethod, String> {
    s.parse().map_err(|e: FdeError| e.to_string())
}

fn parse_grid(spec: &str, method: FdeMethod) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Input(format!("--grid {spec}: {why}"));
    match spec {
        "simulation" => return Ok(simulation_grid(method)),
        "published" => return Ok(published_grid(method)),
        _ => {}
    }
    if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(bad("expected log:LO:HI:N"));
        };
        let lo: f64 = lo.parse().map_err(|_| bad("LO is not a number"))?;
        let hi: f64 = hi.parse().map_err(|_| bad("HI is not a number"))?;
        let n: usize = n.parse().map_err(|_| bad("N is not an integer"))?;
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(bad("need 0 < LO < HI and N >= 2"));
        }
        return Ok(log_grid(lo, hi, n));
    }
    let grid = spec
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad("not a number list")))
        .collect::<Result<Vec<_>, _>>()?;
    if grid.len() < 2 {
        return Err(bad("need at least two thresholds"));
    }
    Ok(grid)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Input(format!("{}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn options(method: FdeMethod, max_faults: Option<usize>) -> FdeOptions {
    let mut opts = FdeOptions::default();
    if let Some(f) = max_faults {
        match method {
            FdeMethod::Ss => opts.ss_max_faults = f,
            _ => opts.max_faults = Some(f),
        }
    }
    opts
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let mut cfg = match &config {
                Some(p) => load_scenario(p)?,
                None => ScenarioConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let sim = simulate(&cfg)?;
            let traces = sim.epochs.iter().map(|e| e.trace_id.as_str()).collect::<std::collections::BTreeSet<_>>();
            log::info!(
                "{} epochs across {} traces, {} skipped",
                sim.epochs.len(),
                traces.len(),
                sim.skipped.len()
            );
            let mut w = output(out.as_deref())?;
            write_measurements(&mut w, &sim.epochs)?;
            w.flush()?;
        }
        Command::Fde {
            input,
            method,
            threshold,
            max_faults,
            out,
        } => {
            let epochs = input.load()?;
            let opts = options(method, max_faults);
            let results = epochs
                .iter()
                .map(|e| run_fde(e, method, threshold, &opts))
                .collect::<Result<Vec<_>, _>>()?;
            let mut w = output(out.as_deref())?;
            write_flags(&mut w, &epochs, &results)?;
            w.flush()?;
        }
        Command::Roc {
            input,
            method,
            grid,
            scenario,
            bias_m,
            out,
            errors_out,
        } => {
            let epochs = input.load()?;
            let grid = parse_grid(&grid, method)?;
            let runs = threshold_sweep(&epochs, method, &grid, &FdeOptions::default())?;
            let curve = roc_curve(&epochs, &runs)?;
            let fault_count = epochs
                .iter()
                .filter_map(|e| e.truth_labels())
                .map(|t| t.iter().filter(|&&f| f).count())
                .max()
                .unwrap_or(0);
            let rows = RocCsvRow::from_curve(method, &scenario, bias_m, fault_count, &curve, auc(&curve));
            let mut w = output(out.as_deref())?;
            write_rows(&mut w, &rows)?;
            w.flush()?;

            if let Some(path) = errors_out {
                let baseline_m = baseline_error(&epochs);
                let rows: Vec<ThresholdErrorRow> = threshold_error_curve(&epochs, &runs)?
                    .into_iter()
                    .map(|(threshold, grand_mean_m)| ThresholdErrorRow {
                        method,
                        threshold,
                        grand_mean_m,
                        baseline_m,
                    })
                    .collect();
                let mut w = output(Some(&path))?;
                write_rows(&mut w, &rows)?;
                w.flush()?;
            }
        }
        Command::Bench {
            input,
            methods,
            thresholds,
            repeat,
            out,
            records_out,
        } => {
            if methods.len() != thresholds.len() {
                return Err(CliError::Input(format!(
                    "{} --method values but {} --threshold values",
                    methods.len(),
                    thresholds.len()
                )));
            }
            let epochs = input.load()?;
            let mut records = Vec::new();
            for _ in 0..repeat.max(1) {
                for (&method, &t) in methods.iter().zip(&thresholds) {
                    records.extend(timing_profile(method, &epochs, t, &FdeOptions::default())?);
                }
            }
            let mut groups = group_timing(&records, GroupBy::MeasurementCount);
            groups.extend(group_timing(&records, GroupBy::FaultCount));
            let mut w = output(out.as_deref())?;
            write_timing_groups(&mut w, &groups)?;
            w.flush()?;
            if let Some(path) = records_out {
                let mut w = output(Some(&path))?;
                write_timing_records(&mut w, &records)?;
                w.flush()?;
            }
        }
        Command::Complexity { f, k, m_min, m_max, out } => {
            let lo = m_min.max(f + 1);
            if lo > m_max {
                return Err(CliError::Input(format!("empty m range: need m_max >= {lo}")));
            }
            let rows: Vec<ComplexityCsvRow> = complexity_curves(lo..=m_max, f, k)
                .map_err(CliError::Input)?
                .iter()
                .map(ComplexityCsvRow::from)
                .collect();
            let mut w = output(out.as_deref())?;
            write_rows(&mut w, &rows)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
