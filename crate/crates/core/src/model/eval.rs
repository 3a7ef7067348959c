//! Whole-dataset evaluation: error rate plus the two average
//! log-likelihoods (joint, using the true labels, and marginal, ignoring
//! them). Sums run in index order with compensated accumulation so the
//! result is independent of evaluation scheduling.

use super::{GaussianClassifier, LabeledSet, ModelError};
use crate::math::KahanSum;

/// Performance of one model on one evaluation set. Log-likelihoods are
/// per-object averages in nats.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EvalResult {
    pub error_rate: f64,
    pub avg_joint_loglik: f64,
    pub avg_marginal_loglik: f64,
    pub n_eval: usize,
}

impl GaussianClassifier {
    /// Evaluates error rate and both average log-likelihoods over `eval`.
    pub fn evaluate(&self, eval: &LabeledSet) -> Result<EvalResult, ModelError> {
        if eval.dim() != self.dim() {
            return Err(ModelError::DimensionMismatch { expected: self.dim(), found: eval.dim() });
        }
        if eval.n_classes != self.n_classes() {
            return Err(ModelError::InvalidParameter(format!(
                "evaluation set has {} classes, model has {}",
                eval.n_classes,
                self.n_classes()
            )));
        }
        let mut errors = 0usize;
        let mut joint = KahanSum::new();
        let mut marginal = KahanSum::new();
        for (x, &y) in eval.points.iter().zip(&eval.labels) {
            if self.predict(x) != y {
                errors += 1;
            }
            joint.add(self.log_joint(x, y));
            marginal.add(self.log_marginal(x));
        }
        let n = eval.len() as f64;
        Ok(EvalResult {
            error_rate: errors as f64 / n,
            avg_joint_loglik: joint.value() / n,
            avg_marginal_loglik: marginal.value() / n,
            n_eval: eval.len(),
        })
    }
}
