//! The learning-curve experiment: for every (dataset, method, labeled
//! size, unlabeled size) cell, repeat draw-fit-evaluate many times and
//! aggregate error rate and both log-likelihood measures. Evaluation uses
//! the full dataset, whose empirical distribution plays the role of the
//! truth. Repetitions are seeded statelessly, so results do not depend on
//! how the work is scheduled.

pub mod config;
mod draw;
mod report;
mod seeding;

pub use config::{parse_config, ExperimentConfig, Method, Strategy};
pub use draw::{draw_training_sets, DrawSeeds, TrainingDraw};
pub use report::{
    audit_mean, read_audit_csv, read_cells_csv, write_audit_csv, write_cells_csv, write_cells_json,
    AuditRow, SCHEMA_VERSION,
};
pub use seeding::{rep_seed, SeedCtx, Substream};

use std::path::PathBuf;

use thiserror::Error;

use crate::constrained::{fit_lda_constrained, fit_nmc_constrained};
use crate::data::{DataError, Dataset};
use crate::em::fit_em_soft;
use crate::math::KahanSum;
use crate::model::{fit_lda_supervised, fit_nmc_supervised, ModelError, ModelKind};
use crate::self_learn::fit_self_learned;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Errors raised while configuring or running the experiment.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{dataset}: no accepted labeled draw of size {n_labeled} with {min_per_class} per class after {attempts} attempts")]
    RedrawLimitExceeded { dataset: String, n_labeled: usize, min_per_class: usize, attempts: usize },
    #[error("{dataset}/{method} (l={n_labeled}, u={n_unlabeled}): {source}")]
    Fit {
        dataset: String,
        method: String,
        n_labeled: usize,
        n_unlabeled: usize,
        #[source]
        source: ModelError,
    },
    #[error("{path}:{line}: malformed cells file: {message}")]
    MalformedCsv { path: PathBuf, line: usize, message: String },
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Aggregated statistics of one grid cell.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CurveCell {
    pub dataset: String,
    pub method: Strategy,
    pub classifier: ModelKind,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_reps: usize,
    pub mean_error: f64,
    pub sd_error: f64,
    pub se_error: f64,
    pub mean_joint_ll: f64,
    pub sd_joint_ll: f64,
    pub se_joint_ll: f64,
    pub mean_marginal_ll: f64,
    pub sd_marginal_ll: f64,
    pub se_marginal_ll: f64,
    /// Repetition draws abandoned at the redraw limit and replaced.
    pub degenerate_draws: usize,
}

/// Repair and resampling events of a single repetition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RepFlags {
    pub variance_clamped: bool,
    pub ridge_applied: bool,
    pub psd_repaired: bool,
    pub fallback: bool,
    /// Wholesale labeled redraws within the accepted attempt.
    pub labeled_redraws: usize,
    /// Replacement attempts consumed before this repetition succeeded.
    pub replacement_salt: u64,
}

/// One repetition's evaluated metrics, for the audit stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub rep: usize,
    pub error: f64,
    pub joint_ll: f64,
    pub marginal_ll: f64,
    pub flags: RepFlags,
}

/// A cell plus its per-repetition records.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: CurveCell,
    pub reps: Vec<RepRecord>,
}

fn run_rep(
    dataset: &Dataset,
    method: Method,
    n_labeled: usize,
    n_unlabeled: usize,
    config: &ExperimentConfig,
    rep: usize,
) -> Result<(RepRecord, usize), ExperimentError> {
    let method_id = method.id();
    let ctx = SeedCtx {
        master_seed: config.master_seed,
        dataset: dataset.name(),
        method: &method_id,
        n_labeled,
    };
    let min_per_class = config.min_per_class(method.kind);
    let mut degenerate = 0usize;
    // Degenerate repetitions are replaced by salted re-seeds rather than
    // dropped, so every cell aggregates exactly `repetitions` outcomes.
    for salt in 0..=config.max_redraws as u64 {
        let seeds = DrawSeeds {
            labeled: rep_seed(&ctx, Substream::Labeled, rep, salt),
            unlabeled: rep_seed(&ctx, Substream::Unlabeled { n_unlabeled }, rep, salt),
        };
        let draw = match draw_training_sets(
            dataset,
            n_labeled,
            n_unlabeled,
            seeds,
            min_per_class,
            config.max_redraws,
            config.stratified_draws,
        ) {
            Ok(draw) => draw,
            Err(ExperimentError::RedrawLimitExceeded { .. }) => {
                degenerate += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let fit_context = |source: ModelError| ExperimentError::Fit {
            dataset: dataset.name().to_string(),
            method: method_id.clone(),
            n_labeled,
            n_unlabeled,
            source,
        };
        let mut flags = RepFlags {
            labeled_redraws: draw.labeled_redraws,
            replacement_salt: salt,
            ..RepFlags::default()
        };
        let model = match (method.strategy, method.kind) {
            (Strategy::Supervised, ModelKind::Nmc) => {
                fit_nmc_supervised(&draw.labeled).map_err(fit_context)?
            }
            (Strategy::Supervised, ModelKind::Lda) => {
                fit_lda_supervised(&draw.labeled).map_err(fit_context)?
            }
            (Strategy::SelfLearned, kind) => {
                let (model, trace) =
                    fit_self_learned(kind, &draw.labeled, &draw.unlabeled, config.self_learn_max_iter)
                        .map_err(fit_context)?;
                flags.fallback |= !trace.fallback_classes.is_empty();
                model
            }
            (Strategy::EmSoft, kind) => {
                fit_em_soft(kind, &draw.labeled, &draw.unlabeled, config.em_max_iter, config.em_tol)
                    .map_err(fit_context)?
            }
            (Strategy::Constrained, ModelKind::Nmc) => {
                fit_nmc_constrained(&draw.labeled, &draw.unlabeled).map_err(fit_context)?
            }
            (Strategy::Constrained, ModelKind::Lda) => {
                fit_lda_constrained(&draw.labeled, &draw.unlabeled).map_err(fit_context)?
            }
        };
        let report = model.report();
        flags.variance_clamped = report.variance_clamped;
        flags.ridge_applied = report.ridge_applied;
        flags.psd_repaired = report.psd_repaired;
        flags.fallback |= !report.fallback_classes.is_empty();
        let eval = model.evaluate(dataset.set()).map_err(fit_context)?;
        return Ok((
            RepRecord {
                rep,
                error: eval.error_rate,
                joint_ll: eval.avg_joint_loglik,
                marginal_ll: eval.avg_marginal_loglik,
                flags,
            },
            degenerate,
        ));
    }
    Err(ExperimentError::RedrawLimitExceeded {
        dataset: dataset.name().to_string(),
        n_labeled,
        min_per_class,
        attempts: (config.max_redraws + 1) * (config.max_redraws + 1),
    })
}

fn mean_sd_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64, f64) {
    let mut sum = KahanSum::new();
    for v in values.clone() {
        sum.add(v);
    }
    let mean = sum.value() / n as f64;
    let mut sq = KahanSum::new();
    for v in values {
        let d = v - mean;
        sq.add(d * d);
    }
    let sd = (sq.value() / n as f64).sqrt();
    (mean, sd, sd / (n as f64).sqrt())
}

fn aggregate(
    dataset: &Dataset,
    method: Method,
    n_labeled: usize,
    n_unlabeled: usize,
    outcomes: Vec<(RepRecord, usize)>,
) -> CellResult {
    let n = outcomes.len();
    let degenerate_draws = outcomes.iter().map(|(_, d)| d).sum();
    let reps: Vec<RepRecord> = outcomes.into_iter().map(|(r, _)| r).collect();
    let (mean_error, sd_error, se_error) = mean_sd_se(reps.iter().map(|r| r.error), n);
    let (mean_joint_ll, sd_joint_ll, se_joint_ll) = mean_sd_se(reps.iter().map(|r| r.joint_ll), n);
    let (mean_marginal_ll, sd_marginal_ll, se_marginal_ll) =
        mean_sd_se(reps.iter().map(|r| r.marginal_ll), n);
    CellResult {
        cell: CurveCell {
            dataset: dataset.name().to_string(),
            method: method.strategy,
            classifier: method.kind,
            n_labeled,
            n_unlabeled,
            n_reps: n,
            mean_error,
            sd_error,
            se_error,
            mean_joint_ll,
            sd_joint_ll,
            se_joint_ll,
            mean_marginal_ll,
            sd_marginal_ll,
            se_marginal_ll,
            degenerate_draws,
        },
        reps,
    }
}

/// Runs one grid cell without any parallelism. Identical output to
/// [`run_cell`]; kept unconditionally for benchmarking the two paths
/// against each other.
pub fn run_cell_sequential(
    dataset: &Dataset,
    method: Method,
    n_labeled: usize,
    n_unlabeled: usize,
    config: &ExperimentConfig,
) -> Result<CellResult, ExperimentError> {
    let outcomes = (0..config.repetitions)
        .map(|rep| run_rep(dataset, method, n_labeled, n_unlabeled, config, rep))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(dataset, method, n_labeled, n_unlabeled, outcomes))
}

/// Runs one grid cell, spreading repetitions across the ambient worker
/// pool when the `parallel` feature is enabled. Aggregation happens in
/// repetition order after all repetitions finish, so the statistics are
/// identical for every schedule.
pub fn run_cell(
    dataset: &Dataset,
    method: Method,
    n_labeled: usize,
    n_unlabeled: usize,
    config: &ExperimentConfig,
) -> Result<CellResult, ExperimentError> {
    #[cfg(feature = "parallel")]
    {
        let outcomes = (0..config.repetitions)
            .into_par_iter()
            .map(|rep| run_rep(dataset, method, n_labeled, n_unlabeled, config, rep))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(aggregate(dataset, method, n_labeled, n_unlabeled, outcomes))
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_cell_sequential(dataset, method, n_labeled, n_unlabeled, config)
    }
}

fn grid_over(
    config: &ExperimentConfig,
    datasets: &[Dataset],
    keep_reps: bool,
    cell_runner: impl Fn(&Dataset, Method, usize, usize, &ExperimentConfig) -> Result<CellResult, ExperimentError>,
) -> Result<Vec<CellResult>, ExperimentError> {
    config.validate()?;
    let mut results = Vec::with_capacity(config.cell_count());
    for name in &config.datasets {
        let dataset = datasets.iter().find(|d| d.name() == name).ok_or_else(|| {
            ExperimentError::InvalidConfig(format!("dataset `{name}` was not loaded"))
        })?;
        for &method in &config.methods {
            for &n_labeled in config.labeled_sizes(method.kind) {
                for &n_unlabeled in &config.unlabeled_sizes {
                    let mut result = cell_runner(dataset, method, n_labeled, n_unlabeled, config)?;
                    if !keep_reps {
                        result.reps = Vec::new();
                    }
                    results.push(result);
                }
            }
        }
    }
    Ok(results)
}

/// Runs every cell of the configured grid in deterministic order
/// (datasets, then methods, then labeled sizes, then unlabeled sizes).
/// Per-repetition records are retained only when `keep_reps` is set.
pub fn run_grid(
    config: &ExperimentConfig,
    datasets: &[Dataset],
    keep_reps: bool,
) -> Result<Vec<CellResult>, ExperimentError> {
    grid_over(config, datasets, keep_reps, run_cell)
}

/// Sequential counterpart of [`run_grid`], bit-identical by construction.
pub fn run_grid_sequential(
    config: &ExperimentConfig,
    datasets: &[Dataset],
    keep_reps: bool,
) -> Result<Vec<CellResult>, ExperimentError> {
    grid_over(config, datasets, keep_reps, run_cell_sequential)
}
