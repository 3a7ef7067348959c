//! First and second moments of a pooled sample, and the decomposition of
//! total scatter into between-class and within-class parts. Both are the
//! quantities the constrained estimators pin down: the class-weighted mean
//! must reproduce the overall mean, and between plus within must reproduce
//! the total covariance.

use nalgebra::{DMatrix, DVector};

use crate::math::{add_scaled_outer, mirror_upper};
use crate::model::{LabeledSet, ModelError};

/// Overall mean and total covariance (divide-by-N) of a pooled sample.
#[derive(Debug, Clone)]
pub struct MomentStats {
    pub m_all: DVector<f64>,
    pub t_all: DMatrix<f64>,
    pub n_total: usize,
}

/// Between-class, within-class, and total scatter of a labeled sample,
/// all with divide-by-N scaling so that `between + within = total`.
#[derive(Debug, Clone)]
pub struct ScatterDecomposition {
    pub between: DMatrix<f64>,
    pub within: DMatrix<f64>,
    pub total: DMatrix<f64>,
}

/// Pools labeled and unlabeled points and computes their joint mean and
/// total covariance. Label information is deliberately ignored: these are
/// exactly the statistics an unlabeled sample can improve.
pub fn compute_moments(
    labeled: &[DVector<f64>],
    unlabeled: &[DVector<f64>],
) -> Result<MomentStats, ModelError> {
    let n = labeled.len() + unlabeled.len();
    if n == 0 {
        return Err(ModelError::EmptyInput("no points for moment estimation"));
    }
    let d = labeled.first().or(unlabeled.first()).map(|p| p.len()).unwrap();
    let mut mean = DVector::<f64>::zeros(d);
    for p in labeled.iter().chain(unlabeled) {
        if p.len() != d {
            return Err(ModelError::DimensionMismatch { expected: d, found: p.len() });
        }
        mean += p;
    }
    mean /= n as f64;
    let mut total = DMatrix::<f64>::zeros(d, d);
    let mut diff = DVector::<f64>::zeros(d);
    for p in labeled.iter().chain(unlabeled) {
        diff.copy_from(p);
        diff -= &mean;
        add_scaled_outer(&mut total, 1.0, &diff);
    }
    mirror_upper(&mut total);
    total /= n as f64;
    Ok(MomentStats { m_all: mean, t_all: total, n_total: n })
}

/// Splits the total scatter of a labeled sample into between-class and
/// within-class parts, each weighted by empirical priors `N_k / N`.
pub fn decompose_scatter(labeled: &LabeledSet) -> Result<ScatterDecomposition, ModelError> {
    let counts = labeled.class_counts();
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(ModelError::MissingClass { class });
    }
    let d = labeled.dim();
    let n = labeled.len() as f64;
    let overall = compute_moments(&labeled.points, &[])?;

    let mut means = vec![DVector::<f64>::zeros(d); labeled.n_classes];
    for (x, &y) in labeled.points.iter().zip(&labeled.labels) {
        means[y] += x;
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        *m /= c as f64;
    }

    let mut within = DMatrix::<f64>::zeros(d, d);
    let mut diff = DVector::<f64>::zeros(d);
    for (x, &y) in labeled.points.iter().zip(&labeled.labels) {
        diff.copy_from(x);
        diff -= &means[y];
        add_scaled_outer(&mut within, 1.0, &diff);
    }
    mirror_upper(&mut within);
    within /= n;

    let mut between = DMatrix::<f64>::zeros(d, d);
    for (m, &c) in means.iter().zip(&counts) {
        diff.copy_from(m);
        diff -= &overall.m_all;
        add_scaled_outer(&mut between, c as f64 / n, &diff);
    }
    mirror_upper(&mut between);

    Ok(ScatterDecomposition { between, within, total: overall.t_all })
}
