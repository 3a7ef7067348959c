//! Soft expectation-maximization for the semi-supervised likelihood.
//! Labeled objects contribute their joint density with the known label;
//! unlabeled objects contribute the marginal mixture density. The E-step
//! turns the current model's posteriors into fractional weights, the
//! M-step refits under the same parameter restrictions as the supervised
//! estimator, and the objective never goes down.

use nalgebra::DVector;

use crate::math::KahanSum;
use crate::model::{
    fit_lda_supervised, fit_nmc_supervised, fit_weighted, GaussianClassifier, LabeledSet,
    ModelError, ModelKind, WeightedFit,
};

/// Per-iteration record of one EM run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmTrace {
    pub iterations: usize,
    /// True when the objective improvement fell below the tolerance before
    /// the iteration cap.
    pub converged: bool,
    /// Semi-supervised objective (summed, not averaged) after each M-step.
    pub objective_per_iter: Vec<f64>,
}

/// `sum_labeled log p(x, y) + sum_unlabeled log p(x)` for the given model.
pub fn semi_supervised_objective(
    model: &GaussianClassifier,
    labeled: &LabeledSet,
    unlabeled: &[DVector<f64>],
) -> f64 {
    let mut sum = KahanSum::new();
    for (x, &y) in labeled.points.iter().zip(&labeled.labels) {
        sum.add(model.log_joint(x, y));
    }
    for x in unlabeled {
        sum.add(model.log_marginal(x));
    }
    sum.value()
}

/// Soft-EM fit starting from the supervised solution. See
/// [`fit_em_soft_traced`] for the variant that also returns the trace.
pub fn fit_em_soft(
    base: ModelKind,
    labeled: &LabeledSet,
    unlabeled: &[DVector<f64>],
    max_iter: usize,
    tol: f64,
) -> Result<GaussianClassifier, ModelError> {
    fit_em_soft_traced(base, labeled, unlabeled, max_iter, tol).map(|(model, _)| model)
}

/// Soft-EM fit with the objective trace.
pub fn fit_em_soft_traced(
    base: ModelKind,
    labeled: &LabeledSet,
    unlabeled: &[DVector<f64>],
    max_iter: usize,
    tol: f64,
) -> Result<(GaussianClassifier, EmTrace), ModelError> {
    if max_iter == 0 {
        return Err(ModelError::InvalidParameter("max_iter must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(ModelError::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let supervised = match base {
        ModelKind::Nmc => fit_nmc_supervised(labeled)?,
        ModelKind::Lda => fit_lda_supervised(labeled)?,
    };
    let mut trace = EmTrace { iterations: 0, converged: false, objective_per_iter: Vec::new() };
    let mut model = supervised;
    let mut prev = semi_supervised_objective(&model, labeled, unlabeled);
    for iter in 1..=max_iter {
        let resp: Vec<DVector<f64>> = unlabeled.iter().map(|x| model.posterior(x)).collect();
        model = fit_weighted(WeightedFit {
            kind: base,
            n_classes: labeled.n_classes,
            labeled_points: &labeled.points,
            labeled_labels: &labeled.labels,
            unlabeled_points: unlabeled,
            unlabeled_resp: &resp,
            fallback: Some(labeled),
        })?;
        let obj = semi_supervised_objective(&model, labeled, unlabeled);
        trace.objective_per_iter.push(obj);
        trace.iterations = iter;
        if obj - prev < tol {
            trace.converged = true;
            break;
        }
        prev = obj;
    }
    Ok((model, trace))
}
