//! Gaussian classifier models: the nearest means classifier (shared
//! spherical covariance, equal priors) and linear discriminant analysis
//! (shared full covariance, free priors), with maximum-likelihood fitting
//! and the two performance measures used throughout the crate (error rate
//! and average log-likelihood per object).

mod eval;
mod fit;

pub use eval::EvalResult;
pub use fit::{fit_lda_supervised, fit_nmc_supervised};
pub(crate) use fit::{fit_weighted, ridge_floor, sigma_floor, WeightedFit};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

/// Which parameter restriction the classifier uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Equal priors, one shared covariance restricted to a multiple of the
    /// identity. Decisions reduce to picking the nearest class mean.
    Nmc,
    /// Free priors and means, one shared full covariance.
    Lda,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Nmc => "nmc",
            ModelKind::Lda => "lda",
        }
    }

    /// Smallest per-class labeled count the supervised fit accepts.
    pub fn min_per_class(&self) -> usize {
        match self {
            ModelKind::Nmc => 1,
            ModelKind::Lda => 2,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nmc" => Ok(ModelKind::Nmc),
            "lda" => Ok(ModelKind::Lda),
            other => Err(format!("unknown classifier kind `{other}` (expected nmc or lda)")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shared class covariance in either of its restricted forms.
#[derive(Debug, Clone)]
pub enum Covariance {
    /// `sigma2 * I`.
    Spherical(f64),
    /// A full symmetric positive-definite matrix.
    Full(DMatrix<f64>),
}

/// Errors raised by fitting and evaluation.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("class {class} has no samples")]
    MissingClass { class: usize },
    #[error("class {class} has {count} samples, at least {required} required")]
    TooFewPerClass { class: usize, count: usize, required: usize },
    #[error("dimension mismatch: model expects {expected}, input has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Events recorded while producing a fit. None of these are errors; they
/// mark the repair paths that keep every draw fittable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitReport {
    /// NMC variance hit the scale-aware floor (zero-residual draw).
    pub variance_clamped: bool,
    /// Ridge term added to a near-singular pooled covariance.
    pub ridge_applied: bool,
    /// Eigenvalue clamp applied to a constrained within-class covariance.
    pub psd_repaired: bool,
    /// Classes whose parameters fell back to labeled-only estimates.
    pub fallback_classes: Vec<usize>,
    /// How the semi-supervised estimator restored its constraints, when one
    /// produced this model.
    pub realization: Option<&'static str>,
}

impl FitReport {
    pub fn any_repair(&self) -> bool {
        self.variance_clamped || self.ridge_applied || self.psd_repaired || !self.fallback_classes.is_empty()
    }
}

/// A labeled sample: feature vectors with class indices in `0..n_classes`.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    pub points: Vec<DVector<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl LabeledSet {
    pub fn new(points: Vec<DVector<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::EmptyInput("labeled set has no points"));
        }
        if points.len() != labels.len() {
            return Err(ModelError::InvalidParameter(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(ModelError::EmptyInput("zero-dimensional points"));
        }
        for p in &points {
            if p.len() != dim {
                return Err(ModelError::DimensionMismatch { expected: dim, found: p.len() });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(ModelError::InvalidParameter(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(Self { points, labels, n_classes })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

/// Precomputed density terms so that per-point evaluation never refactors
/// the covariance.
#[derive(Debug, Clone)]
enum CovCache {
    Spherical { inv_two_sigma2: f64, log_norm: f64 },
    Full { chol: Cholesky<f64, Dyn>, log_norm: f64 },
}

/// A fitted Gaussian classifier. Immutable after construction and safe to
/// share read-only across workers.
#[derive(Debug, Clone)]
pub struct GaussianClassifier {
    kind: ModelKind,
    priors: DVector<f64>,
    means: Vec<DVector<f64>>,
    covariance: Covariance,
    report: FitReport,
    log_priors: Vec<f64>,
    cache: CovCache,
}

const PRIOR_SUM_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;

impl GaussianClassifier {
    /// Validates the parameter set and builds the evaluation cache.
    pub fn new(
        kind: ModelKind,
        priors: DVector<f64>,
        means: Vec<DVector<f64>>,
        covariance: Covariance,
        report: FitReport,
    ) -> Result<Self, ModelError> {
        let k = means.len();
        if k == 0 {
            return Err(ModelError::EmptyInput("no class means"));
        }
        if priors.len() != k {
            return Err(ModelError::InvalidParameter(format!(
                "{} priors for {} classes",
                priors.len(),
                k
            )));
        }
        let d = means[0].len();
        if d == 0 {
            return Err(ModelError::EmptyInput("zero-dimensional means"));
        }
        for m in &means {
            if m.len() != d {
                return Err(ModelError::DimensionMismatch { expected: d, found: m.len() });
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::InvalidParameter("non-finite class mean".into()));
            }
        }
        let sum: f64 = priors.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(ModelError::InvalidParameter(format!("priors sum to {sum}, not 1")));
        }
        if priors.iter().any(|&p| !(p > 0.0)) {
            return Err(ModelError::InvalidParameter("all priors must be positive".into()));
        }
        if kind == ModelKind::Nmc {
            let uniform = 1.0 / k as f64;
            if priors.iter().any(|&p| p != uniform) {
                return Err(ModelError::InvalidParameter(
                    "nearest means classifier requires equal priors".into(),
                ));
            }
        }
        let cache = match (&kind, &covariance) {
            (ModelKind::Nmc, Covariance::Spherical(sigma2)) => {
                if !(sigma2.is_finite() && *sigma2 > 0.0) {
                    return Err(ModelError::InvalidParameter(format!("invalid variance {sigma2}")));
                }
                CovCache::Spherical {
                    inv_two_sigma2: 0.5 / sigma2,
                    log_norm: -0.5 * d as f64 * (2.0 * std::f64::consts::PI * sigma2).ln(),
                }
            }
            (ModelKind::Lda, Covariance::Full(w)) => {
                if w.nrows() != d || w.ncols() != d {
                    return Err(ModelError::DimensionMismatch { expected: d, found: w.nrows() });
                }
                if crate::math::symmetry_residual(w) > SYMMETRY_TOL {
                    return Err(ModelError::InvalidParameter("covariance is not symmetric".into()));
                }
                let chol = Cholesky::new(w.clone())
                    .ok_or_else(|| ModelError::InvalidParameter("covariance is not positive definite".into()))?;
                let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
                CovCache::Full {
                    chol,
                    log_norm: -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det),
                }
            }
            (ModelKind::Nmc, Covariance::Full(_)) => {
                return Err(ModelError::InvalidParameter(
                    "nearest means classifier takes a spherical covariance".into(),
                ))
            }
            (ModelKind::Lda, Covariance::Spherical(_)) => {
                return Err(ModelError::InvalidParameter(
                    "linear discriminant analysis takes a full covariance".into(),
                ))
            }
        };
        let log_priors = priors.iter().map(|p| p.ln()).collect();
        Ok(Self { kind, priors, means, covariance, report, log_priors, cache })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n_classes(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn priors(&self) -> &DVector<f64> {
        &self.priors
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    pub fn report(&self) -> &FitReport {
        &self.report
    }

    pub(crate) fn with_report(mut self, report: FitReport) -> Self {
        self.report = report;
        self
    }

    /// Squared Mahalanobis distance of `x` to the mean of class `y` under
    /// the shared covariance.
    fn mahalanobis_sq(&self, x: &DVector<f64>, y: usize) -> f64 {
        let diff = x - &self.means[y];
        match &self.cache {
            CovCache::Spherical { inv_two_sigma2, .. } => 2.0 * inv_two_sigma2 * diff.norm_squared(),
            CovCache::Full { chol, .. } => {
                let z = chol.solve(&diff);
                diff.dot(&z)
            }
        }
    }

    /// `log p(x, y) = log pi_y + log N(x; m_y, Sigma)` in nats.
    pub fn log_joint(&self, x: &DVector<f64>, y: usize) -> f64 {
        assert!(y < self.n_classes(), "class index out of range");
        let log_norm = match &self.cache {
            CovCache::Spherical { log_norm, .. } => *log_norm,
            CovCache::Full { log_norm, .. } => *log_norm,
        };
        self.log_priors[y] + log_norm - 0.5 * self.mahalanobis_sq(x, y)
    }

    /// `log p(x) = log sum_k pi_k N(x; m_k, Sigma)` via a max-shifted sum.
    pub fn log_marginal(&self, x: &DVector<f64>) -> f64 {
        let joints: Vec<f64> = (0..self.n_classes()).map(|k| self.log_joint(x, k)).collect();
        crate::math::logsumexp(&joints)
    }

    /// Class posterior `p(y | x)`: the softmax of the joint log-densities.
    pub fn posterior(&self, x: &DVector<f64>) -> DVector<f64> {
        let joints: Vec<f64> = (0..self.n_classes()).map(|k| self.log_joint(x, k)).collect();
        let m = joints.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p = DVector::from_iterator(joints.len(), joints.iter().map(|&l| (l - m).exp()));
        let total: f64 = p.iter().sum();
        p /= total;
        p
    }

    /// Most probable class; ties resolve toward the lowest class index.
    pub fn predict(&self, x: &DVector<f64>) -> usize {
        let mut best = 0usize;
        let mut best_score = self.log_joint(x, 0);
        for k in 1..self.n_classes() {
            let score = self.log_joint(x, k);
            if score > best_score {
                best = k;
                best_score = score;
            }
        }
        best
    }
}
