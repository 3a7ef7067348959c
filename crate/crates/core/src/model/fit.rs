//! Maximum-likelihood fitting. One weighted routine serves the supervised
//! fits, the hard refits inside self-learning, and the soft expectation-
//! maximization M-step: labeled objects carry unit weight on their own
//! class, unlabeled objects carry responsibility weights.

use nalgebra::{DMatrix, DVector};

use super::{Covariance, FitReport, GaussianClassifier, LabeledSet, ModelError, ModelKind};
use crate::math::{add_scaled_outer, mirror_upper, KahanSum};

/// Relative scale of the variance floor: `1e-8 * (1 + mean squared entry)`.
const SIGMA_FLOOR_REL: f64 = 1e-8;
/// Ridge strength relative to the average eigenvalue, `1e-6 * trace(W)/d`.
const RIDGE_REL: f64 = 1e-6;
/// The pooled covariance counts as near-singular below `1e-9 * trace(W)/d`.
const RIDGE_TRIGGER_REL: f64 = 1e-9;

/// Scale-aware lower bound for the spherical variance, computed from the
/// mean squared feature entry over all points that entered the fit.
pub(crate) fn sigma_floor<'a, I>(points: I) -> f64
where
    I: Iterator<Item = &'a DVector<f64>>,
{
    let mut sum = KahanSum::new();
    let mut n_entries = 0usize;
    for p in points {
        for &v in p.iter() {
            sum.add(v * v);
        }
        n_entries += p.len();
    }
    let mean_sq = if n_entries == 0 { 0.0 } else { sum.value() / n_entries as f64 };
    SIGMA_FLOOR_REL * (1.0 + mean_sq)
}

/// Ridge strength for a pooled covariance with the given trace. Falls back
/// to the absolute variance floor when the trace itself vanishes, so the
/// repaired matrix is always positive definite.
pub(crate) fn ridge_floor(trace: f64, dim: usize, abs_floor: f64) -> f64 {
    let lambda = RIDGE_REL * trace / dim as f64;
    if lambda > 0.0 {
        lambda
    } else {
        abs_floor
    }
}

/// Inputs to the shared weighted fit.
///
/// `unlabeled_resp` holds one responsibility row per unlabeled point
/// (length `n_classes`, summing to one); hard pseudo-labels are the special
/// case of a one-hot row. `fallback` supplies labeled-only estimates for
/// classes whose total weight vanishes.
pub(crate) struct WeightedFit<'a> {
    pub kind: ModelKind,
    pub n_classes: usize,
    pub labeled_points: &'a [DVector<f64>],
    pub labeled_labels: &'a [usize],
    pub unlabeled_points: &'a [DVector<f64>],
    pub unlabeled_resp: &'a [DVector<f64>],
    pub fallback: Option<&'a LabeledSet>,
}

/// Weight below which a class is treated as empty and sent to the fallback
/// path. Responsibilities are probabilities, so anything materially above
/// zero keeps the class alive.
const EMPTY_WEIGHT: f64 = 1e-300;

pub(crate) fn fit_weighted(input: WeightedFit<'_>) -> Result<GaussianClassifier, ModelError> {
    let k = input.n_classes;
    if k == 0 {
        return Err(ModelError::EmptyInput("zero classes"));
    }
    let n_lab = input.labeled_points.len();
    let n_unl = input.unlabeled_points.len();
    if n_lab + n_unl == 0 {
        return Err(ModelError::EmptyInput("no points to fit"));
    }
    if input.labeled_labels.len() != n_lab {
        return Err(ModelError::InvalidParameter(format!(
            "{} labeled points but {} labels",
            n_lab,
            input.labeled_labels.len()
        )));
    }
    if input.unlabeled_resp.len() != n_unl {
        return Err(ModelError::InvalidParameter(format!(
            "{} unlabeled points but {} responsibility rows",
            n_unl,
            input.unlabeled_resp.len()
        )));
    }
    let d = input
        .labeled_points
        .first()
        .or(input.unlabeled_points.first())
        .map(|p| p.len())
        .unwrap();
    for p in input.labeled_points.iter().chain(input.unlabeled_points) {
        if p.len() != d {
            return Err(ModelError::DimensionMismatch { expected: d, found: p.len() });
        }
    }
    for (r, _) in input.unlabeled_resp.iter().zip(input.unlabeled_points) {
        if r.len() != k {
            return Err(ModelError::DimensionMismatch { expected: k, found: r.len() });
        }
    }
    if let Some(&bad) = input.labeled_labels.iter().find(|&&y| y >= k) {
        return Err(ModelError::InvalidParameter(format!("label {bad} out of range for {k} classes")));
    }

    // First pass: per-class weight totals and weighted mean sums.
    let mut weights = vec![0.0f64; k];
    let mut mean_sums = vec![DVector::<f64>::zeros(d); k];
    for (x, &y) in input.labeled_points.iter().zip(input.labeled_labels) {
        weights[y] += 1.0;
        mean_sums[y] += x;
    }
    for (x, r) in input.unlabeled_points.iter().zip(input.unlabeled_resp) {
        for c in 0..k {
            let w = r[c];
            if w != 0.0 {
                weights[c] += w;
                mean_sums[c].axpy(w, x, 1.0);
            }
        }
    }
    let total_weight: f64 = weights.iter().sum();

    let mut report = FitReport::default();
    let mut means: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut effective = weights.clone();
    for c in 0..k {
        if weights[c] > EMPTY_WEIGHT {
            means.push(&mean_sums[c] / weights[c]);
        } else {
            // The class lost all its weight; recover its mean from the
            // labeled sample alone.
            let fb = input.fallback.ok_or(ModelError::MissingClass { class: c })?;
            let mut sum = DVector::zeros(d);
            let mut count = 0usize;
            for (x, &y) in fb.points.iter().zip(&fb.labels) {
                if y == c {
                    sum += x;
                    count += 1;
                }
            }
            if count == 0 {
                return Err(ModelError::MissingClass { class: c });
            }
            means.push(sum / count as f64);
            report.fallback_classes.push(c);
            // Prior floor: one pseudo-count against everything seen.
            effective[c] = 1.0;
        }
    }

    let abs_floor = sigma_floor(input.labeled_points.iter().chain(input.unlabeled_points));

    // Second pass: weighted residual scatter around the class means.
    let covariance = match input.kind {
        ModelKind::Nmc => {
            let mut ss = KahanSum::new();
            for (x, &y) in input.labeled_points.iter().zip(input.labeled_labels) {
                ss.add((x - &means[y]).norm_squared());
            }
            for (x, r) in input.unlabeled_points.iter().zip(input.unlabeled_resp) {
                for c in 0..k {
                    if r[c] != 0.0 {
                        ss.add(r[c] * (x - &means[c]).norm_squared());
                    }
                }
            }
            let mut sigma2 = ss.value() / (total_weight * d as f64);
            if !(sigma2 > abs_floor) {
                sigma2 = abs_floor;
                report.variance_clamped = true;
            }
            Covariance::Spherical(sigma2)
        }
        ModelKind::Lda => {
            let mut scatter = DMatrix::<f64>::zeros(d, d);
            let mut diff = DVector::<f64>::zeros(d);
            for (x, &y) in input.labeled_points.iter().zip(input.labeled_labels) {
                diff.copy_from(x);
                diff -= &means[y];
                add_scaled_outer(&mut scatter, 1.0, &diff);
            }
            for (x, r) in input.unlabeled_points.iter().zip(input.unlabeled_resp) {
                for c in 0..k {
                    if r[c] != 0.0 {
                        diff.copy_from(x);
                        diff -= &means[c];
                        add_scaled_outer(&mut scatter, r[c], &diff);
                    }
                }
            }
            mirror_upper(&mut scatter);
            let mut w = scatter / total_weight;
            let trace = w.trace();
            let min_eig = crate::math::min_symmetric_eigenvalue(&w);
            if min_eig < RIDGE_TRIGGER_REL * trace / d as f64 || !(trace > 0.0) {
                let lambda = ridge_floor(trace, d, abs_floor);
                for i in 0..d {
                    w[(i, i)] += lambda;
                }
                report.ridge_applied = true;
            }
            Covariance::Full(w)
        }
    };

    let priors = match input.kind {
        ModelKind::Nmc => DVector::from_element(k, 1.0 / k as f64),
        ModelKind::Lda => {
            let eff_total: f64 = effective.iter().sum();
            DVector::from_iterator(k, effective.iter().map(|&w| w / eff_total))
        }
    };

    GaussianClassifier::new(input.kind, priors, means, covariance, report)
}

fn check_counts(labeled: &LabeledSet, kind: ModelKind) -> Result<(), ModelError> {
    let required = kind.min_per_class();
    for (class, &count) in labeled.class_counts().iter().enumerate() {
        if count == 0 {
            return Err(ModelError::MissingClass { class });
        }
        if count < required {
            return Err(ModelError::TooFewPerClass { class, count, required });
        }
    }
    Ok(())
}

/// Supervised nearest means fit: class mean vectors plus one pooled
/// spherical variance, `sigma2 = sum_i ||x_i - m_{y_i}||^2 / (N d)`.
pub fn fit_nmc_supervised(labeled: &LabeledSet) -> Result<GaussianClassifier, ModelError> {
    check_counts(labeled, ModelKind::Nmc)?;
    fit_weighted(WeightedFit {
        kind: ModelKind::Nmc,
        n_classes: labeled.n_classes,
        labeled_points: &labeled.points,
        labeled_labels: &labeled.labels,
        unlabeled_points: &[],
        unlabeled_resp: &[],
        fallback: None,
    })
}

/// Supervised linear discriminant fit: empirical priors `N_k / N`, class
/// means, and the pooled within-class covariance with divide-by-N scaling.
pub fn fit_lda_supervised(labeled: &LabeledSet) -> Result<GaussianClassifier, ModelError> {
    check_counts(labeled, ModelKind::Lda)?;
    fit_weighted(WeightedFit {
        kind: ModelKind::Lda,
        n_classes: labeled.n_classes,
        labeled_points: &labeled.points,
        labeled_labels: &labeled.labels,
        unlabeled_points: &[],
        unlabeled_resp: &[],
        fallback: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn set_1d(values: &[f64], labels: &[usize]) -> LabeledSet {
        LabeledSet::new(
            values.iter().map(|&v| DVector::from_vec(vec![v])).collect(),
            labels.to_vec(),
            2,
        )
        .unwrap()
    }

    #[test]
    fn nmc_fit_worked_example() {
        // class 0: {-2, 0}; class 1: {1, 3} -> means (-1, 2),
        // sigma2 = (1+1+1+1)/(4*1) = 1, priors fixed at 1/2.
        let set = set_1d(&[-2.0, 0.0, 1.0, 3.0], &[0, 0, 1, 1]);
        let model = fit_nmc_supervised(&set).unwrap();
        assert_relative_eq!(model.means()[0][0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(model.means()[1][0], 2.0, epsilon = 1e-15);
        match model.covariance() {
            Covariance::Spherical(s) => assert_relative_eq!(*s, 1.0, epsilon = 1e-15),
            _ => panic!("nmc must be spherical"),
        }
        assert_eq!(model.priors().as_slice(), &[0.5, 0.5]);
        assert!(!model.report().any_repair());
    }

    #[test]
    fn nmc_priors_stay_equal_under_imbalance() {
        let set = set_1d(&[0.0, 0.1, -0.1, 5.0], &[0, 0, 0, 1]);
        let model = fit_nmc_supervised(&set).unwrap();
        assert_eq!(model.priors().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn nmc_zero_residual_hits_variance_floor() {
        let set = set_1d(&[-1.0, 1.0], &[0, 1]);
        let model = fit_nmc_supervised(&set).unwrap();
        assert!(model.report().variance_clamped);
        let expected_floor = 1e-8 * (1.0 + 1.0); // mean squared entry is 1
        match model.covariance() {
            Covariance::Spherical(s) => assert_relative_eq!(*s, expected_floor, epsilon = 1e-20),
            _ => unreachable!(),
        }
        assert_relative_eq!(model.means()[0][0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(model.means()[1][0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn lda_fit_worked_example() {
        // class 0: {0, 2}; class 1: {5, 5, 5} -> priors (0.4, 0.6),
        // means (1, 5), W = (1 + 1 + 0 + 0 + 0)/5 = 0.4.
        let set = LabeledSet::new(
            [0.0, 2.0, 5.0, 5.0, 5.0]
                .iter()
                .map(|&v| DVector::from_vec(vec![v]))
                .collect(),
            vec![0, 0, 1, 1, 1],
            2,
        )
        .unwrap();
        let model = fit_lda_supervised(&set).unwrap();
        assert_relative_eq!(model.priors()[0], 0.4, epsilon = 1e-15);
        assert_relative_eq!(model.priors()[1], 0.6, epsilon = 1e-15);
        assert_relative_eq!(model.means()[0][0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(model.means()[1][0], 5.0, epsilon = 1e-15);
        match model.covariance() {
            Covariance::Full(w) => assert_relative_eq!(w[(0, 0)], 0.4, epsilon = 1e-15),
            _ => panic!("lda must carry a full covariance"),
        }
        assert!(!model.report().ridge_applied);
    }

    #[test]
    fn lda_singular_scatter_gets_ridged() {
        // Two collinear 2-d classes: within-class scatter is rank one.
        let set = LabeledSet::new(
            vec![
                DVector::from_vec(vec![0.0, 0.0]),
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![0.0, 3.0]),
                DVector::from_vec(vec![1.0, 3.0]),
            ],
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        let model = fit_lda_supervised(&set).unwrap();
        assert!(model.report().ridge_applied);
        match model.covariance() {
            Covariance::Full(w) => {
                assert!(crate::math::min_symmetric_eigenvalue(w) > 0.0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn missing_class_is_an_error() {
        let set = set_1d(&[0.0, 1.0], &[0, 0]);
        assert!(matches!(
            fit_nmc_supervised(&set).unwrap_err(),
            ModelError::MissingClass { class: 1 }
        ));
    }

    #[test]
    fn lda_needs_two_per_class() {
        let set = set_1d(&[0.0, 1.0, 2.0], &[0, 0, 1]);
        assert!(matches!(
            fit_lda_supervised(&set).unwrap_err(),
            ModelError::TooFewPerClass { class: 1, count: 1, required: 2 }
        ));
        // The same counts are fine for the nearest means classifier.
        assert!(fit_nmc_supervised(&set).is_ok());
    }

    #[test]
    fn weighted_fit_reduces_to_supervised_on_hard_onehots() {
        let labeled = set_1d(&[-2.0, 0.0], &[0, 1]);
        let unl = [1.0, 3.0].map(|v| DVector::from_vec(vec![v]));
        let resp =
            vec![DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0])];
        let via_weights = fit_weighted(WeightedFit {
            kind: ModelKind::Nmc,
            n_classes: 2,
            labeled_points: &labeled.points,
            labeled_labels: &labeled.labels,
            unlabeled_points: &unl,
            unlabeled_resp: &resp,
            fallback: Some(&labeled),
        })
        .unwrap();
        let merged = set_1d(&[-2.0, 0.0, 1.0, 3.0], &[0, 1, 0, 1]);
        let direct = fit_nmc_supervised(&merged).unwrap();
        for c in 0..2 {
            assert_relative_eq!(via_weights.means()[c][0], direct.means()[c][0], epsilon = 1e-15);
        }
        match (via_weights.covariance(), direct.covariance()) {
            (Covariance::Spherical(a), Covariance::Spherical(b)) => {
                assert_relative_eq!(*a, *b, epsilon = 1e-15)
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn empty_class_falls_back_to_labeled_mean_with_prior_floor() {
        let labeled = set_1d(&[-1.0, 1.0, 1.5], &[0, 1, 1]);
        let unl = [2.0, 3.0].map(|v| DVector::from_vec(vec![v]));
        // All unlabeled weight on class 1; class 0 keeps only one labeled point
        // and, under LDA with everything else pseudo-labeled 1, would vanish if
        // its labeled point were also reassigned. Force that by zero weights.
        let resp = vec![DVector::from_vec(vec![0.0, 1.0]), DVector::from_vec(vec![0.0, 1.0])];
        let labeled_empty = LabeledSet::new(
            vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![1.5])],
            vec![1, 1],
            2,
        )
        .unwrap();
        let model = fit_weighted(WeightedFit {
            kind: ModelKind::Lda,
            n_classes: 2,
            labeled_points: &labeled_empty.points,
            labeled_labels: &labeled_empty.labels,
            unlabeled_points: &unl,
            unlabeled_resp: &resp,
            fallback: Some(&labeled),
        })
        .unwrap();
        assert_eq!(model.report().fallback_classes, vec![0]);
        // Mean restored from the full labeled sample's class 0.
        assert_relative_eq!(model.means()[0][0], -1.0, epsilon = 1e-15);
        // Prior floor: one pseudo-count out of (4 real + 1) observations.
        assert_relative_eq!(model.priors()[0], 1.0 / 5.0, epsilon = 1e-15);
        assert_relative_eq!(model.priors()[1], 4.0 / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn fit_is_a_local_likelihood_maximum() {
        // Perturbing any single parameter away from the ML estimate must not
        // increase the labeled log-likelihood.
        let set = LabeledSet::new(
            vec![
                DVector::from_vec(vec![0.3, -1.2]),
                DVector::from_vec(vec![-0.7, 0.4]),
                DVector::from_vec(vec![1.1, 0.2]),
                DVector::from_vec(vec![2.8, 1.9]),
                DVector::from_vec(vec![3.4, 2.2]),
                DVector::from_vec(vec![2.1, 3.0]),
            ],
            vec![0, 0, 0, 1, 1, 1],
            2,
        )
        .unwrap();
        let model = fit_nmc_supervised(&set).unwrap();
        let ll = |m: &GaussianClassifier| -> f64 {
            set.points
                .iter()
                .zip(&set.labels)
                .map(|(x, &y)| m.log_joint(x, y))
                .sum()
        };
        let base = ll(&model);
        let sigma2 = match model.covariance() {
            Covariance::Spherical(s) => *s,
            _ => unreachable!(),
        };
        for delta in [-1e-3, 1e-3] {
            for c in 0..2 {
                for i in 0..2 {
                    let mut means = model.means().to_vec();
                    means[c][i] += delta;
                    let perturbed = GaussianClassifier::new(
                        ModelKind::Nmc,
                        model.priors().clone(),
                        means,
                        Covariance::Spherical(sigma2),
                        FitReport::default(),
                    )
                    .unwrap();
                    assert!(ll(&perturbed) <= base + 1e-12);
                }
            }
            let perturbed = GaussianClassifier::new(
                ModelKind::Nmc,
                model.priors().clone(),
                model.means().to_vec(),
                Covariance::Spherical(sigma2 + delta),
                FitReport::default(),
            )
            .unwrap();
            assert!(ll(&perturbed) <= base + 1e-12);
        }
    }
}
