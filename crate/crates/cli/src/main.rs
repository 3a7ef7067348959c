//! `semisup` — run learning-curve grids, render the curves, validate and
//! regenerate the bundled data. Exit codes: 0 success, 1 usage error,
//! 2 runtime error.

mod svg;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use semisup_core::data::{
    find_spec, load_dataset, write_standin_files, Dataset, DEFAULT_STANDIN_SEED, REGISTRY,
};
use semisup_core::experiment::{
    parse_config, run_grid, write_audit_csv, write_cells_csv, write_cells_json,
};

/// Overrides the default `data` directory when no config value is set.
const DATA_DIR_ENV: &str = "SEMISUP_DATA_DIR";

#[derive(Parser)]
#[command(name = "semisup", version, about = "Semi-supervised learning-curve experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured grid and write cells.csv / cells.json.
    Run {
        /// Experiment config file (`key = value` lines).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the result tables.
        #[arg(long)]
        out: PathBuf,
        /// Also write audit.csv with one row per repetition.
        #[arg(long)]
        audit: bool,
        /// Worker threads for repetitions; default is one per core.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Render learning-curve SVGs from a cells table.
    Plot {
        /// cells.csv produced by `run`.
        #[arg(long)]
        cells: PathBuf,
        /// One of: error, joint_ll, marginal_ll.
        #[arg(long)]
        metric: String,
        /// Output directory for the SVG files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check every bundled dataset against its expected properties.
    Validate {
        /// Directory holding the canonical CSV files.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Write the stand-in datasets in canonical CSV form.
    PrepareData {
        /// Target directory; defaults to the resolved data directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STANDIN_SEED)]
        seed: u64,
    },
}

/// Explicit flag or config value wins, then the environment, then `data`.
fn data_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_owned();
    }
    match std::env::var(DATA_DIR_ENV) {
        Ok(p) if !p.is_empty() => PathBuf::from(p),
        _ => PathBuf::from("data"),
    }
}

fn load_datasets(names: &[String], dir: &Path) -> Result<Vec<Dataset>> {
    names
        .iter()
        .map(|name| {
            let spec = find_spec(name).with_context(|| format!("unknown dataset `{name}`"))?;
            let path = dir.join(format!("{name}.csv"));
            load_dataset(&path, spec)
                .with_context(|| format!("dataset `{name}` ({})", path.display()))
        })
        .collect()
}

fn cmd_run(config_path: &Path, out: &Path, audit: bool, threads: Option<usize>) -> Result<()> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let config = parse_config(&text)?;
    let dir = data_dir(config.data_dir.as_deref());
    let datasets = load_datasets(&config.datasets, &dir)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building worker pool")?
            .install(|| run_grid(&config, &datasets, audit)),
        None => run_grid(&config, &datasets, audit),
    }?;

    let cells: Vec<_> = results.iter().map(|r| r.cell.clone()).collect();
    write_cells_csv(&cells, &out.join("cells.csv"))?;
    write_cells_json(&cells, &out.join("cells.json"))?;
    if audit {
        write_audit_csv(&results, &out.join("audit.csv"))?;
    }
    println!("wrote {} cells to {}", cells.len(), out.display());
    Ok(())
}

fn cmd_validate(dir: &Path) -> Result<()> {
    let mut failures = 0usize;
    for spec in REGISTRY.iter() {
        let path = dir.join(format!("{}.csv", spec.name));
        match load_dataset(&path, spec) {
            Ok(ds) => println!(
                "{}: PASS ({} objects x {} features, smallest prior {:.4})",
                spec.name,
                ds.n(),
                ds.dim(),
                ds.smallest_prior()
            ),
            Err(e) => {
                failures += 1;
                println!("{}: FAIL - {e}", spec.name);
            }
        }
    }
    if failures > 0 {
        bail!("{failures} of {} datasets failed validation", REGISTRY.len());
    }
    Ok(())
}

fn cmd_prepare_data(out: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let written = write_standin_files(out, seed)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests exit clean; anything else is a
            // usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Run { config, out, audit, threads } => {
            cmd_run(&config, &out, audit, threads)
        }
        Command::Plot { cells, metric, out } => svg::cmd_plot(&cells, &metric, &out),
        Command::Validate { data } => cmd_validate(&data_dir(data.as_deref())),
        Command::PrepareData { out, seed } => {
            let dir = data_dir(out.as_deref());
            cmd_prepare_data(&dir, seed)
        }
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
