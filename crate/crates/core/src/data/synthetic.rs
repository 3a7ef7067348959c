//! Model-correct synthetic data: a two-component spherical Gaussian
//! mixture with known parameters, used wherever a test needs the true
//! distribution in hand.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{DataError, Dataset};
use crate::model::{Covariance, FitReport, GaussianClassifier, LabeledSet, ModelKind};

/// Parameters of the generating mixture. Component means sit at
/// `-mean_separation / 2` (class 0) and `+mean_separation / 2` (class 1).
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub d: usize,
    pub mean_separation: DVector<f64>,
    pub sigma: f64,
    pub priors: [f64; 2],
    pub n: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), DataError> {
        if self.d == 0 {
            return Err(DataError::InvalidSpec("dimension must be positive".into()));
        }
        if self.mean_separation.len() != self.d {
            return Err(DataError::InvalidSpec(format!(
                "mean_separation has length {}, expected {}",
                self.mean_separation.len(),
                self.d
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(DataError::InvalidSpec(format!("sigma must be positive, got {}", self.sigma)));
        }
        let sum: f64 = self.priors.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || self.priors.iter().any(|&p| !(p > 0.0)) {
            return Err(DataError::InvalidSpec(format!("priors {:?} are not a valid simplex", self.priors)));
        }
        if self.n == 0 {
            return Err(DataError::InvalidSpec("n must be positive".into()));
        }
        Ok(())
    }
}

/// Samples a dataset from the mixture and packages the generating
/// parameters as a classifier: NMC-kind when the priors are exactly equal,
/// LDA-kind (with covariance `sigma^2 I`) otherwise.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, GaussianClassifier), DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let half = &spec.mean_separation * 0.5;
    let means = [-&half, half.clone()];
    let mut points = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let class = usize::from(rng.random::<f64>() >= spec.priors[0]);
        let mut x = means[class].clone();
        for i in 0..spec.d {
            let z: f64 = rng.sample(StandardNormal);
            x[i] += spec.sigma * z;
        }
        points.push(x);
        labels.push(class);
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(DataError::InvalidSpec(
            "draw produced a single class; increase n".into(),
        ));
    }
    let set = LabeledSet::new(points, labels, 2)?;
    let dataset = Dataset::new(format!("synthetic-{}", spec.seed), set)?;

    let truth = if spec.priors[0] == spec.priors[1] {
        GaussianClassifier::new(
            ModelKind::Nmc,
            DVector::from_vec(vec![0.5, 0.5]),
            means.to_vec(),
            Covariance::Spherical(spec.sigma * spec.sigma),
            FitReport::default(),
        )?
    } else {
        GaussianClassifier::new(
            ModelKind::Lda,
            DVector::from_vec(spec.priors.to_vec()),
            means.to_vec(),
            Covariance::Full(DMatrix::identity(spec.d, spec.d) * (spec.sigma * spec.sigma)),
            FitReport::default(),
        )?
    };
    Ok((dataset, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_spec() -> SyntheticSpec {
        SyntheticSpec {
            d: 2,
            mean_separation: DVector::from_vec(vec![2.0, 0.0]),
            sigma: 1.0,
            priors: [0.5, 0.5],
            n: 1_000_000,
            seed: 7,
        }
    }

    #[test]
    fn class_fractions_match_priors() {
        let (ds, truth) = generate_synthetic(&base_spec()).unwrap();
        let frac0 = ds.class_counts()[0] as f64 / ds.n() as f64;
        // Binomial standard error is about 0.0005 at this size.
        assert!((frac0 - 0.5).abs() < 0.002, "class-0 fraction {frac0}");
        assert_eq!(truth.kind(), ModelKind::Nmc);
        assert_eq!(truth.means()[0][0], -1.0);
        assert_eq!(truth.means()[1][0], 1.0);
    }

    #[test]
    fn identical_seed_reproduces_bits() {
        let spec = SyntheticSpec { n: 500, ..base_spec() };
        let (a, _) = generate_synthetic(&spec).unwrap();
        let (b, _) = generate_synthetic(&spec).unwrap();
        assert_eq!(a.set().labels, b.set().labels);
        for (p, q) in a.set().points.iter().zip(&b.set().points) {
            assert_eq!(p, q);
        }
        let (c, _) = generate_synthetic(&SyntheticSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.set().points[0], c.set().points[0]);
    }

    #[test]
    fn unequal_priors_package_as_lda() {
        let spec = SyntheticSpec { priors: [0.7, 0.3], n: 1000, ..base_spec() };
        let (_, truth) = generate_synthetic(&spec).unwrap();
        assert_eq!(truth.kind(), ModelKind::Lda);
        assert_eq!(truth.priors()[0], 0.7);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(generate_synthetic(&SyntheticSpec { n: 0, ..base_spec() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { sigma: 0.0, ..base_spec() }).is_err());
        assert!(
            generate_synthetic(&SyntheticSpec { priors: [0.9, 0.2], ..base_spec() }).is_err()
        );
        assert!(generate_synthetic(&SyntheticSpec {
            mean_separation: DVector::from_vec(vec![1.0]),
            ..base_spec()
        })
        .is_err());
    }
}
