//! Sweeps over the polariton library, written as CSV or JSON tables with a
//! metadata sidecar.
//!
//! Settings are resolved in this order, later winning: built-in defaults,
//! the `--config` JSON document, then command-line flags.

pub mod commands;
pub mod config;
pub mod output;

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use config::{Command, Format, OracleMode, RunConfig};
use output::{Table, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CELL_FAILURES: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "polariton",
    version,
    about = "Polariton scattering sweeps and oracle checks"
)]
pub struct Cli {
    /// Subcommand; overrides `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<OracleMode>,
    /// Resonance momentum in units of π.
    #[arg(long)]
    pub k0d: Option<f64>,
    #[arg(long)]
    pub gamma_r: Option<f64>,
    #[arg(long)]
    pub gamma_l: Option<f64>,
    #[arg(long)]
    pub gamma_s: Option<f64>,
    /// Chain sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub xi: Option<Vec<usize>>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Print the validation report and exit without writing files.
    #[arg(long)]
    pub check: bool,
}

impl Cli {
    /// Fold the config file and the flags into one `RunConfig`.
    pub fn resolve(&self) -> Result<RunConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text =
                    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if self.command.is_some() {
            cfg.command = self.command;
        }
        if self.output.is_some() {
            cfg.output.path = self.output.clone();
        }
        if self.format.is_some() {
            cfg.output.format = self.format;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.mode.is_some() {
            cfg.mode = self.mode;
        }
        if let Some(x) = self.k0d {
            cfg.params.k0d = x;
        }
        if let Some(x) = self.gamma_r {
            cfg.params.gamma_r = x;
        }
        if let Some(x) = self.gamma_l {
            cfg.params.gamma_l = x;
        }
        if let Some(x) = self.gamma_s {
            cfg.params.gamma_s = x;
        }
        if self.n.is_some() {
            cfg.n = self.n.clone();
        }
        if self.xi.is_some() {
            cfg.xi = self.xi.clone();
        }
        if self.samples.is_some() {
            cfg.samples = self.samples;
        }
        if cfg.command.is_none() {
            return Err("no command given on the command line or in the config".into());
        }
        Ok(cfg)
    }
}

/// What a finished run produced.
#[derive(Debug)]
pub struct RunReport {
    pub table: Table,
    pub data_path: PathBuf,
    pub meta_path: PathBuf,
    pub exit_code: i32,
}

/// Failure share above which the run exits with [`EXIT_CELL_FAILURES`].
pub const MAX_FAILED_FRACTION: f64 = 0.01;

pub fn meta_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Evaluate the table on a pool of the requested size.
pub fn compute(cfg: &RunConfig) -> Result<Table, String> {
    let params = cfg.params.to_params().map_err(|e| e.to_string())?;
    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cfg.threads {
            builder = builder.num_threads(t);
        }
        let pool = builder.build().map_err(|e| e.to_string())?;
        Ok(pool.install(|| commands::run_command(cfg, &params)))
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(commands::run_command(cfg, &params))
    }
}

/// Validate, compute and write both artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunReport, Vec<String>> {
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(problems);
    }
    let start = Instant::now();
    let table = compute(cfg).map_err(|e| vec![e])?;
    let wall = start.elapsed().as_secs_f64();

    let data_path = PathBuf::from(cfg.output_path());
    let meta = meta_path(&data_path);
    let write =
        |p: &Path, s: &str| fs::write(p, s).map_err(|e| vec![format!("{}: {e}", p.display())]);
    write(&data_path, &table.render(cfg.format()))?;
    write(&meta, &metadata(cfg, &table, wall))?;

    let failed = table.failed() as f64 / table.rows.len().max(1) as f64;
    let exit_code = if failed > MAX_FAILED_FRACTION {
        EXIT_CELL_FAILURES
    } else {
        EXIT_OK
    };
    Ok(RunReport {
        table,
        data_path,
        meta_path: meta,
        exit_code,
    })
}

fn metadata(cfg: &RunConfig, table: &Table, wall: f64) -> String {
    let p = &cfg.params;
    let meta = json!({
        "schema_version": SCHEMA_VERSION,
        "library_version": polariton::VERSION,
        "cli_version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command().name(),
        "columns": table.written_columns(),
        "rows": table.rows.len(),
        "failed_rows": table.failed(),
        "parallel": cfg!(feature = "parallel"),
        "threads": cfg.threads,
        "wall_time_s": wall,
        "config": cfg,
        "params_rad": {
            "gamma_r": p.gamma_r,
            "gamma_l": p.gamma_l,
            "gamma_s": p.gamma_s,
            "k0d": p.k0d * PI,
        },
        "conventions": {
            "angles_in_config": "units of pi",
            "angles_in_table": "radians",
            "axis_inset_rad": config::AXIS_INSET,
            "qprime": "canonical partner with Re in [0, pi] and Im >= 0",
            "kappa": "signed outgoing partner with Im <= 0",
            "velocity_ratio": "absolute group-velocity ratio; signed value in signed_velocity_ratio",
        },
    });
    let mut s = serde_json::to_string_pretty(&meta).expect("serialisable");
    s.push('\n');
    s
}

/// Full command-line entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let cfg = match cli.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    if cli.check {
        let problems = cfg.validate();
        for p in &problems {
            println!("{p}");
        }
        return if problems.is_empty() {
            EXIT_OK
        } else {
            EXIT_INVALID
        };
    }
    match run(&cfg) {
        Ok(report) => {
            eprintln!(
                "{}: {}",
                report.data_path.display(),
                output::summary_line(&report.table)
            );
            report.exit_code
        }
        Err(problems) => {
            for p in problems {
                eprintln!("error: {p}");
            }
            EXIT_INVALID
        }
    }
}
