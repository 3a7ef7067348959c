//! Moment-constrained semi-supervised estimators. The unlabeled sample
//! pins down two things the labeled estimates must agree with: the overall
//! mean (the prior-weighted class means must reproduce it) and, for linear
//! discriminant analysis, the total covariance (between-class plus
//! within-class scatter must reproduce it). Both fits start from the
//! supervised solution and restore those constraints in closed form.

use nalgebra::{DMatrix, DVector};

use crate::math::{add_scaled_outer, clamp_eigenvalues, mirror_upper};
use crate::model::{
    fit_lda_supervised, fit_nmc_supervised, ridge_floor, sigma_floor, Covariance, FitReport,
    GaussianClassifier, LabeledSet, ModelError, ModelKind,
};
use crate::moments::compute_moments;

pub const REALIZATION_MEAN_SHIFT: &str = "mean_shift";
pub const REALIZATION_TOTAL_MINUS_BETWEEN: &str = "total_minus_between";

/// Shift that moves the count-weighted class means onto the pooled mean:
/// `delta = m_all - sum_k (N_k / N_lab) m_k`.
fn mean_shift(
    labeled: &LabeledSet,
    means: &[DVector<f64>],
    pooled_mean: &DVector<f64>,
) -> DVector<f64> {
    let counts = labeled.class_counts();
    let n = labeled.len() as f64;
    let mut weighted = DVector::zeros(labeled.dim());
    for (m, &c) in means.iter().zip(&counts) {
        weighted.axpy(c as f64 / n, m, 1.0);
    }
    pooled_mean - weighted
}

/// Constrained nearest means fit: translate every supervised class mean by
/// the common shift `delta`, keep the supervised variance. With no
/// unlabeled data the result is the supervised fit itself.
pub fn fit_nmc_constrained(
    labeled: &LabeledSet,
    unlabeled: &[DVector<f64>],
) -> Result<GaussianClassifier, ModelError> {
    let supervised = fit_nmc_supervised(labeled)?;
    if unlabeled.is_empty() {
        let mut report = supervised.report().clone();
        report.realization = Some(REALIZATION_MEAN_SHIFT);
        return Ok(supervised.with_report(report));
    }
    let moments = compute_moments(&labeled.points, unlabeled)?;
    let delta = mean_shift(labeled, supervised.means(), &moments.m_all);
    let means: Vec<DVector<f64>> = supervised.means().iter().map(|m| m + &delta).collect();
    let mut report = supervised.report().clone();
    report.realization = Some(REALIZATION_MEAN_SHIFT);
    GaussianClassifier::new(
        ModelKind::Nmc,
        supervised.priors().clone(),
        means,
        supervised.covariance().clone(),
        report,
    )
}

/// Constrained linear discriminant fit. The class means get the same common
/// shift; the within-class covariance is then re-derived from the pooled
/// total covariance as `W' = T_all - B'`, where `B'` is the between-class
/// scatter of the shifted means. When that difference is not positive
/// definite its spectrum is clamped from below.
pub fn fit_lda_constrained(
    labeled: &LabeledSet,
    unlabeled: &[DVector<f64>],
) -> Result<GaussianClassifier, ModelError> {
    let supervised = fit_lda_supervised(labeled)?;
    if unlabeled.is_empty() {
        let mut report = supervised.report().clone();
        report.realization = Some(REALIZATION_TOTAL_MINUS_BETWEEN);
        return Ok(supervised.with_report(report));
    }
    let d = labeled.dim();
    let moments = compute_moments(&labeled.points, unlabeled)?;
    let delta = mean_shift(labeled, supervised.means(), &moments.m_all);
    let means: Vec<DVector<f64>> = supervised.means().iter().map(|m| m + &delta).collect();

    let mut between = DMatrix::<f64>::zeros(d, d);
    let mut diff = DVector::<f64>::zeros(d);
    for (m, &p) in means.iter().zip(supervised.priors().iter()) {
        diff.copy_from(m);
        diff -= &moments.m_all;
        add_scaled_outer(&mut between, p, &diff);
    }
    mirror_upper(&mut between);

    let within = &moments.t_all - &between;
    let abs_floor = sigma_floor(labeled.points.iter().chain(unlabeled.iter()));
    let eps = ridge_floor(moments.t_all.trace(), d, abs_floor);
    let (mut repaired, clamped) = clamp_eigenvalues(&within, eps);

    let mut report = FitReport {
        psd_repaired: clamped,
        realization: Some(REALIZATION_TOTAL_MINUS_BETWEEN),
        ..FitReport::default()
    };
    // The eigenvalue clamp makes the matrix positive definite up to
    // round-off; if factorization still refuses, stiffen the diagonal.
    let mut boost = eps;
    for _ in 0..4 {
        match GaussianClassifier::new(
            ModelKind::Lda,
            supervised.priors().clone(),
            means.clone(),
            Covariance::Full(repaired.clone()),
            report.clone(),
        ) {
            Ok(model) => return Ok(model),
            Err(_) => {
                for i in 0..d {
                    repaired[(i, i)] += boost;
                }
                boost *= 10.0;
                report.psd_repaired = true;
            }
        }
    }
    Err(ModelError::InvalidParameter(
        "constrained within-class covariance could not be made positive definite".into(),
    ))
}
