//! Self-learning: pseudo-label the unlabeled sample with the current
//! classifier, refit on everything as if those labels were real, repeat
//! until the pseudo-labels stop moving. Each round cannot decrease the
//! complete-data log-likelihood - relabeling picks the best class per
//! point, refitting the best parameters per labeling - so the procedure
//! terminates at a fixed point or at the iteration cap.

use nalgebra::DVector;

use crate::math::KahanSum;
use crate::model::{
    fit_lda_supervised, fit_nmc_supervised, fit_weighted, GaussianClassifier, LabeledSet,
    ModelError, ModelKind, WeightedFit,
};

/// Per-iteration record of one self-learning run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfLearnTrace {
    /// Number of relabeling passes performed; an empty unlabeled sample
    /// converges on the first pass.
    pub iterations: usize,
    /// Whether a pass left every pseudo-label unchanged.
    pub converged: bool,
    /// Complete-data average log-likelihood after each pass.
    pub objective_per_iter: Vec<f64>,
    /// Pseudo-labels that changed in each pass; the first pass counts every
    /// assignment as a change.
    pub label_changes_per_iter: Vec<usize>,
    /// Classes that ever needed the labeled-only fallback during refits.
    pub fallback_classes: Vec<usize>,
}

fn complete_data_avg_ll(
    model: &GaussianClassifier,
    labeled: &LabeledSet,
    unlabeled: &[DVector<f64>],
    pseudo: &[usize],
) -> f64 {
    let mut sum = KahanSum::new();
    for (x, &y) in labeled.points.iter().zip(&labeled.labels) {
        sum.add(model.log_joint(x, y));
    }
    for (x, &y) in unlabeled.iter().zip(pseudo) {
        sum.add(model.log_joint(x, y));
    }
    sum.value() / (labeled.len() + unlabeled.len()) as f64
}

/// Runs self-learning from the supervised fit. Returns the final model and
/// the iteration trace.
pub fn fit_self_learned(
    kind: ModelKind,
    labeled: &LabeledSet,
    unlabeled: &[DVector<f64>],
    max_iter: usize,
) -> Result<(GaussianClassifier, SelfLearnTrace), ModelError> {
    if max_iter == 0 {
        return Err(ModelError::InvalidParameter("max_iter must be at least 1".into()));
    }
    let supervised = match kind {
        ModelKind::Nmc => fit_nmc_supervised(labeled)?,
        ModelKind::Lda => fit_lda_supervised(labeled)?,
    };
    let mut trace = SelfLearnTrace {
        iterations: 0,
        converged: false,
        objective_per_iter: Vec::new(),
        label_changes_per_iter: Vec::new(),
        fallback_classes: Vec::new(),
    };
    let k = labeled.n_classes;
    let onehots: Vec<DVector<f64>> = (0..k)
        .map(|c| DVector::from_fn(k, |i, _| if i == c { 1.0 } else { 0.0 }))
        .collect();
    let mut model = supervised;
    let mut pseudo: Vec<usize> = Vec::new();
    for iter in 1..=max_iter {
        let new_pseudo: Vec<usize> = unlabeled.iter().map(|x| model.predict(x)).collect();
        let changes = if iter == 1 {
            new_pseudo.len()
        } else {
            new_pseudo.iter().zip(&pseudo).filter(|(a, b)| a != b).count()
        };
        trace.label_changes_per_iter.push(changes);
        trace.iterations = iter;
        if changes == 0 {
            trace.converged = true;
            trace
                .objective_per_iter
                .push(complete_data_avg_ll(&model, labeled, unlabeled, &pseudo));
            break;
        }
        pseudo = new_pseudo;
        let resp: Vec<DVector<f64>> = pseudo.iter().map(|&y| onehots[y].clone()).collect();
        model = fit_weighted(WeightedFit {
            kind,
            n_classes: k,
            labeled_points: &labeled.points,
            labeled_labels: &labeled.labels,
            unlabeled_points: unlabeled,
            unlabeled_resp: &resp,
            fallback: Some(labeled),
        })?;
        for &c in &model.report().fallback_classes {
            if !trace.fallback_classes.contains(&c) {
                trace.fallback_classes.push(c);
            }
        }
        trace
            .objective_per_iter
            .push(complete_data_avg_ll(&model, labeled, unlabeled, &pseudo));
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Covariance;
    use approx::assert_relative_eq;

    fn vec1(values: &[f64]) -> Vec<DVector<f64>> {
        values.iter().map(|&v| DVector::from_vec(vec![v])).collect()
    }

    #[test]
    fn worked_example_converges_in_two_passes() {
        let labeled = LabeledSet::new(vec1(&[-1.0, 1.0]), vec![0, 1], 2).unwrap();
        let unlabeled = vec1(&[-2.0, -1.5, 1.5, 2.0]);
        let (model, trace) =
            fit_self_learned(ModelKind::Nmc, &labeled, &unlabeled, 100).unwrap();
        assert_relative_eq!(model.means()[0][0], -1.5, epsilon = 1e-14);
        assert_relative_eq!(model.means()[1][0], 1.5, epsilon = 1e-14);
        match model.covariance() {
            // Residuals 0.25 + 0 + 0.25 around -1.5 and mirrored: 1.0 over 6.
            Covariance::Spherical(s) => assert_relative_eq!(*s, 1.0 / 6.0, epsilon = 1e-14),
            _ => unreachable!(),
        }
        assert_eq!(trace.iterations, 2);
        assert!(trace.converged);
        assert_eq!(trace.label_changes_per_iter, vec![4, 0]);
        assert_eq!(trace.objective_per_iter.len(), 2);
        assert!(trace.objective_per_iter[1] >= trace.objective_per_iter[0] - 1e-12);
        assert!(trace.fallback_classes.is_empty());
    }

    #[test]
    fn no_unlabeled_returns_supervised_fit_unchanged() {
        let labeled = LabeledSet::new(vec1(&[-2.0, 0.0, 1.0, 3.0]), vec![0, 0, 1, 1], 2).unwrap();
        let (model, trace) = fit_self_learned(ModelKind::Nmc, &labeled, &[], 100).unwrap();
        let supervised = crate::model::fit_nmc_supervised(&labeled).unwrap();
        assert_eq!(model.means()[0], supervised.means()[0]);
        assert_eq!(model.means()[1], supervised.means()[1]);
        // The single pass observes zero changed labels and stops.
        assert_eq!(trace.iterations, 1);
        assert!(trace.converged);
        assert_eq!(trace.label_changes_per_iter, vec![0]);
        assert_eq!(trace.objective_per_iter.len(), 1);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let labeled = LabeledSet::new(vec1(&[-1.0, 1.0]), vec![0, 1], 2).unwrap();
        let unlabeled = vec1(&[-2.0, -1.5, 1.5, 2.0]);
        let (model, trace) = fit_self_learned(ModelKind::Nmc, &labeled, &unlabeled, 1).unwrap();
        assert_eq!(trace.iterations, 1);
        assert!(!trace.converged);
        assert_eq!(trace.label_changes_per_iter, vec![4]);
        // The single pass already produced the fixed-point parameters.
        assert_relative_eq!(model.means()[0][0], -1.5, epsilon = 1e-14);
    }

    #[test]
    fn converged_run_is_a_fixed_point_of_another_pass() {
        let labeled = LabeledSet::new(
            vec1(&[-1.3, -0.2, 0.4, 1.8, -2.0, 2.2]),
            vec![0, 0, 1, 1, 0, 1],
            2,
        )
        .unwrap();
        let unlabeled = vec1(&[-1.7, -0.9, -0.3, 0.1, 0.8, 1.1, 1.9, 2.5]);
        let (model, trace) =
            fit_self_learned(ModelKind::Nmc, &labeled, &unlabeled, 100).unwrap();
        assert!(trace.converged);
        let pseudo: Vec<usize> = unlabeled.iter().map(|x| model.predict(x)).collect();
        let mut pts = labeled.points.clone();
        pts.extend(unlabeled.iter().cloned());
        let mut labels = labeled.labels.clone();
        labels.extend(&pseudo);
        let merged = LabeledSet::new(pts, labels, 2).unwrap();
        let refit = crate::model::fit_nmc_supervised(&merged).unwrap();
        for (x, &y) in unlabeled.iter().zip(&pseudo) {
            assert_eq!(refit.predict(x), y);
        }
    }

    #[test]
    fn objective_never_decreases_with_lda() {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            let v = i as f64 * 0.37 - 1.8;
            points.push(DVector::from_vec(vec![v, 0.31 * v * v - 0.5]));
            labels.push(usize::from(i >= 5));
        }
        let labeled = LabeledSet::new(points, labels, 2).unwrap();
        let unlabeled: Vec<DVector<f64>> = (0..20)
            .map(|i| {
                let v = (i as f64 * 0.61).sin() * 2.0;
                DVector::from_vec(vec![v, 0.2 * v])
            })
            .collect();
        let (_, trace) = fit_self_learned(ModelKind::Lda, &labeled, &unlabeled, 100).unwrap();
        assert!(trace.converged);
        for w in trace.objective_per_iter.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "objective fell: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn zero_max_iter_is_rejected() {
        let labeled = LabeledSet::new(vec1(&[-1.0, 1.0]), vec![0, 1], 2).unwrap();
        assert!(fit_self_learned(ModelKind::Nmc, &labeled, &[], 0).is_err());
    }
}
