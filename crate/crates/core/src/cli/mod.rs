//! The `lowertail` command: load a JSON config, apply flag overrides, run
//! one command and write its table.
//!
//! Every output file starts with `# ` lines carrying the resolved config
//! and seed, followed by a CSV table with a header row (or a JSON document
//! with the same content).  A one-line JSON summary goes to stdout.

mod config;
mod suite;

pub use config::{Command, ExperimentConfig, Format, Regime, Suite};
pub use suite::{run_suite, run_suites, SuiteBudget};

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimation::{
    estimate_lower_tail, fmt, sample_values, scaling_curve, BOUND_CHECK_COLUMNS, ESTIMATION_COLUMNS,
};
use crate::functionals::clique_count_score;
use crate::geometry::write_points;
use crate::process::{sample_poisson, StreamKey};
use crate::rates::{dense_rate, mu_clique, sparse_clique_rate};
use crate::sprinkling::{dense_sequential_resample, knn_sprinkle, sparse_resample, SprinkleReport};

#[derive(Debug, Parser)]
#[command(name = "lowertail", version, about = "Lower-tail Monte Carlo experiments for Poisson functionals")]
pub struct Args {
    /// Command to run; overrides the config's `command`.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Process exit status.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const HARD_FAILURE: i32 = 3;
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => exit::IO,
        _ => exit::VALIDATION,
    }
}

/// A command's tabular result.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Structured form of the rows, used for JSON output.
    pub results: Value,
    pub hard_failures: usize,
    pub warnings: usize,
    /// Raw text written after the metadata instead of `rows` (point files).
    pub raw: Option<String>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }
}

/// Config with flags applied.
pub fn resolve(args: &Args) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_json(&fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    if args.command.is_some() {
        cfg.command = args.command;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.replicates.is_some() {
        cfg.replicates = args.replicates;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if args.out.is_some() {
        cfg.out_path = args.out.clone();
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_row(r: usize, rep: &SprinkleReport) -> Vec<String> {
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    vec![
        r.to_string(),
        rep.bad_count.to_string(),
        rep.inserted.to_string(),
        rep.target_event_holds.to_string(),
        opt(rep.max_post_radius),
        fmt(rep.excess),
        opt(rep.excess_bound),
        rep.all_boxes_bounded.map(|b| b.to_string()).unwrap_or_default(),
    ]
}

const SPRINKLE_COLUMNS: [&str; 8] =
    ["replicate", "bad_count", "inserted", "target_event_holds", "max_post_radius", "excess", "excess_bound", "all_boxes_bounded"];

/// Runs the command of a validated config.
pub fn execute(cfg: &ExperimentConfig) -> Result<Table> {
    let command = cfg.command()?;
    let params = &cfg.params;
    let root = StreamKey::new(cfg.seed, command.name());
    let table = match command {
        Command::Sample => {
            let phi = sample_poisson(params.n()?, params.d()?, &root)?;
            let mut buf = Vec::new();
            write_points(&phi, &mut buf)?;
            let mut t = Table::new(&[]);
            t.results = json!({ "points": phi.iter().map(|p| p.to_vec()).collect::<Vec<_>>() });
            t.raw = Some(String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))?);
            t
        }
        Command::Functional => {
            let f = cfg.functional()?;
            let values = sample_values(&f, params, cfg.replicates.unwrap_or(1), &root)?;
            let mut t = Table::new(&["replicate", "value"]);
            t.rows = values.iter().enumerate().map(|(r, v)| vec![r.to_string(), fmt(*v)]).collect();
            t.results = json!({ "functional": f.name(), "values": values });
            t
        }
        Command::Sprinkle => {
            let regime = cfg.regime()?;
            let reps = cfg.replicates.unwrap_or(1);
            let samples = cfg.samples.unwrap_or(16);
            let (n, d) = (params.n()?, params.d()?);
            let reports: Vec<SprinkleReport> = (0..reps as u64)
                .into_par_iter()
                .map(|r| {
                    let key = root.with_replicate(r);
                    let p = sample_poisson(n, d, &key.child("p"))?;
                    Ok(match regime {
                        Regime::Sparse => {
                            let q = sample_poisson(n, d, &key.child("copy"))?;
                            sparse_resample(&p, &q, params, &clique_count_score(params.k0()?))?.report
                        }
                        Regime::Critical => knn_sprinkle(&p, params, &key.child("sprinkle"))?.report,
                        Regime::Dense => {
                            let q = sample_poisson(n, d, &key.child("copy"))?;
                            dense_sequential_resample(&p, &q, params, samples, &key.child("seq"))?.report
                        }
                    })
                })
                .collect::<Result<_>>()?;
            let mut t = Table::new(&SPRINKLE_COLUMNS);
            t.rows = reports.iter().enumerate().map(|(r, rep)| report_row(r, rep)).collect();
            t.results = serde_json::to_value(&reports)?;
            t
        }
        Command::Estimate => {
            let f = cfg.functional()?;
            let e = estimate_lower_tail(&f, params, cfg.threshold()?, cfg.replicates.unwrap_or(1000), &root)?;
            let mut t = Table::new(&ESTIMATION_COLUMNS);
            t.rows = vec![e.csv_row().to_vec()];
            t.results = json!({ "functional": f.name(), "estimate": e });
            t
        }
        Command::Curve => {
            let f = cfg.functional()?;
            let list: Vec<_> = cfg.params_list.iter().map(|p| params.overlay(p)).collect();
            let c = scaling_curve(&f, &list, cfg.threshold()?, cfg.replicates.unwrap_or(1000), &root)?;
            let mut cols = ESTIMATION_COLUMNS.to_vec();
            cols.push("flagged");
            let mut t = Table::new(&cols);
            t.rows = c
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut row = r.csv_row().to_vec();
                    row.push(c.flagged.contains(&i).to_string());
                    row
                })
                .collect();
            t.results = serde_json::to_value(&c)?;
            t
        }
        Command::Rate => {
            let grid = if cfg.rate_grid.is_empty() { vec![cfg.threshold()?] } else { cfg.rate_grid.clone() };
            match cfg.regime()? {
                Regime::Sparse => {
                    let (d, k0) = (params.d()?, params.k0()?);
                    let (mu, se) = mu_clique(d, k0, cfg.samples.unwrap_or(100_000), &root)?;
                    let mut t = Table::new(&["a", "mu", "mu_SE", "rate"]);
                    let rates: Vec<f64> = grid.iter().map(|&a| sparse_clique_rate(a, mu)).collect();
                    t.rows = grid.iter().zip(&rates).map(|(&a, &r)| vec![fmt(a), fmt(mu), fmt(se), fmt(r)]).collect();
                    t.results = json!({ "mu": mu, "mu_se": se, "a": grid, "rate": rates });
                    t
                }
                Regime::Dense => {
                    let (k, s0) = (params.k()?, params.s0()?);
                    let sols = grid.iter().map(|&a| dense_rate(a, k, s0)).collect::<Result<Vec<_>>>()?;
                    let mut t = Table::new(&["a", "theta", "constraint_value", "rate"]);
                    t.rows = grid
                        .iter()
                        .zip(&sols)
                        .map(|(&a, s)| vec![fmt(a), fmt(s.theta), fmt(s.constraint_value), fmt(s.rate)])
                        .collect();
                    t.results = json!({ "a": grid, "solutions": sols });
                    t
                }
                Regime::Critical => unreachable!("rejected by validation"),
            }
        }
        Command::Verify => {
            let budget = SuiteBudget::with_replicates(cfg.replicates, cfg.samples);
            let checks = run_suites(&cfg.suites, &budget, cfg.seed)?;
            let mut t = Table::new(&BOUND_CHECK_COLUMNS);
            t.rows = checks.iter().map(|c| c.csv_row().to_vec()).collect();
            t.hard_failures = checks.iter().filter(|c| c.is_hard_failure()).count();
            t.warnings = checks.iter().filter(|c| !c.pass && !c.is_hard_failure()).count();
            t.results = serde_json::to_value(&checks)?;
            t
        }
    };
    Ok(table)
}

/// The bytes of the output file.
pub fn render(cfg: &ExperimentConfig, table: &Table) -> Result<Vec<u8>> {
    let resolved = serde_json::to_value(cfg)?;
    match cfg.format {
        Format::Json => {
            let doc = json!({ "seed": cfg.seed, "config": resolved, "columns": table.columns, "results": table.results });
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let mut out = format!(
                "# lowertail {}\n# seed: {}\n# config: {}\n",
                env!("CARGO_PKG_VERSION"),
                cfg.seed,
                serde_json::to_string(&resolved)?
            )
            .into_bytes();
            if let Some(raw) = &table.raw {
                out.extend_from_slice(raw.as_bytes());
                return Ok(out);
            }
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&table.columns)?;
            for r in &table.rows {
                w.write_record(r)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
    }
}

fn default_out(cfg: &ExperimentConfig) -> PathBuf {
    let ext = match cfg.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let name = cfg.command.map(|c| c.name()).unwrap_or("out");
    PathBuf::from(format!("lowertail_{name}.{ext}"))
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes)?;
    Ok(())
}

/// Resolves, runs and writes; returns the exit status.
pub fn run(args: &Args) -> i32 {
    let cfg = match resolve(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("lowertail: {e}");
            return exit_code(&e);
        }
    };
    let result = match cfg.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(&cfg)),
            Err(e) => Err(Error::Config(e.to_string())),
        },
        None => execute(&cfg),
    };
    let table = match result {
        Ok(t) => t,
        Err(e) => {
            eprintln!("lowertail: {e}");
            return exit_code(&e);
        }
    };
    let path = cfg.out_path.clone().unwrap_or_else(|| default_out(&cfg));
    if let Err(e) = render(&cfg, &table).and_then(|b| write_out(&path, &b)) {
        eprintln!("lowertail: cannot write {}: {e}", path.display());
        return exit::IO;
    }
    let status = if table.hard_failures > 0 { "hard_failure" } else { "ok" };
    let summary = json!({
        "command": cfg.command.map(|c| c.name()),
        "status": status,
        "seed": cfg.seed,
        "rows": table.rows.len(),
        "hard_failures": table.hard_failures,
        "warnings": table.warnings,
        "out": path.display().to_string(),
    });
    println!("{summary}");
    if table.hard_failures > 0 {
        exit::HARD_FAILURE
    } else {
        exit::OK
    }
}

/// Entry point for the binary.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Args::try_parse_from(argv) {
        Ok(args) => run(&args),
        Err(e) => {
            let code = if e.use_stderr() { exit::VALIDATION } else { exit::OK };
            let _ = e.print();
            code
        }
    }
}
