//! Semi-supervised Gaussian classifiers and the learning-curve study
//! around them.
//!
//! Two generative classifiers (nearest means with a shared spherical
//! covariance, linear discriminant with a shared full covariance) can be
//! trained four ways: supervised on labeled data alone, self-learned on
//! pseudo-labels, soft expectation-maximization, and a constrained
//! variant that re-estimates parameters from the moments of the combined
//! labeled-plus-unlabeled sample. The [`experiment`] module measures all
//! of them: for each grid cell it repeatedly draws training sets, fits,
//! evaluates error rate and log-likelihoods against the full dataset, and
//! aggregates — deterministically for a fixed master seed, regardless of
//! thread count.
//!
//! ```
//! use semisup_core::data::{find_spec, generate_standin};
//! use semisup_core::experiment::{run_cell, ExperimentConfig, Method, Strategy};
//! use semisup_core::model::ModelKind;
//!
//! let dataset = generate_standin(find_spec("haberman").unwrap(), 1729).unwrap();
//! let config = ExperimentConfig { repetitions: 10, ..ExperimentConfig::default() };
//! let method = Method::new(Strategy::Constrained, ModelKind::Nmc);
//! let cell = run_cell(&dataset, method, 4, 32, &config).unwrap().cell;
//! assert!(cell.mean_error > 0.0 && cell.mean_error < 1.0);
//! ```

// Validation guards are written `!(x > 0.0)` so that NaN fails them too;
// the `partial_cmp` form clippy suggests would hide that intent.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constrained;
pub mod data;
pub mod em;
pub mod experiment;
pub mod math;
pub mod model;
pub mod moments;
pub mod self_learn;

pub use constrained::{fit_lda_constrained, fit_nmc_constrained};
pub use data::{load_dataset, DataError, Dataset};
pub use em::{fit_em_soft, fit_em_soft_traced, semi_supervised_objective, EmTrace};
pub use experiment::{
    run_cell, run_cell_sequential, run_grid, run_grid_sequential, CurveCell, ExperimentConfig,
    ExperimentError, Method, Strategy,
};
pub use model::{
    fit_lda_supervised, fit_nmc_supervised, EvalResult, GaussianClassifier, LabeledSet, ModelError,
    ModelKind,
};
pub use moments::{compute_moments, decompose_scatter, MomentStats, ScatterDecomposition};
pub use self_learn::{fit_self_learned, SelfLearnTrace};
