//! Dataset ingestion and generation: the canonical CSV loader with
//! registry validation, plus deterministic synthetic data for tests and
//! bundled stand-in files.

mod io;
mod registry;
mod standin;
mod synthetic;

pub use io::{load_dataset, write_canonical_csv};
pub use registry::{find_spec, DatasetSpec, PRIOR_TOLERANCE, REGISTRY};
pub use standin::{generate_standin, write_standin_files, DEFAULT_STANDIN_SEED};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use std::path::PathBuf;

use thiserror::Error;

use crate::model::{LabeledSet, ModelError};

/// Errors raised by loading, validation, and generation.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{name}: expected {expected_objects} objects x {expected_dims} features, found {found_objects} x {found_dims}")]
    ShapeMismatch {
        name: String,
        expected_objects: usize,
        expected_dims: usize,
        found_objects: usize,
        found_dims: usize,
    },
    #[error("{name}: smallest class prior {found:.4} outside {expected} +/- {tolerance}")]
    PriorMismatch { name: String, expected: f64, found: f64, tolerance: f64 },
    #[error("{name}: expected exactly 2 classes, found {found}")]
    NotTwoClass { name: String, found: usize },
    #[error("unknown dataset `{0}`; known names: haberman, ionosphere, pima, sonar, spect, spectf, transfusion, wdbc")]
    UnknownDataset(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A named dataset: the empirical distribution the experiment treats as
/// ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    name: String,
    set: LabeledSet,
}

impl Dataset {
    /// Validates invariants: consistent dimensions, finite features, every
    /// class present.
    pub fn new(name: impl Into<String>, set: LabeledSet) -> Result<Self, DataError> {
        let name = name.into();
        for p in &set.points {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(DataError::InvalidSpec(format!("{name}: non-finite feature value")));
            }
        }
        if let Some(class) = set.class_counts().iter().position(|&c| c == 0) {
            return Err(DataError::Model(ModelError::MissingClass { class }));
        }
        Ok(Self { name, set })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The full sample with labels; doubles as the evaluation population.
    pub fn set(&self) -> &LabeledSet {
        &self.set
    }

    pub fn n(&self) -> usize {
        self.set.len()
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn n_classes(&self) -> usize {
        self.set.n_classes
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.set.class_counts()
    }

    pub fn smallest_prior(&self) -> f64 {
        let counts = self.class_counts();
        let min = counts.iter().copied().min().unwrap_or(0);
        min as f64 / self.n() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn dataset_rejects_missing_class_and_non_finite() {
        let ok = LabeledSet::new(
            vec![DVector::from_vec(vec![0.0]), DVector::from_vec(vec![1.0])],
            vec![0, 1],
            2,
        )
        .unwrap();
        assert!(Dataset::new("toy", ok).is_ok());

        let one_class = LabeledSet::new(
            vec![DVector::from_vec(vec![0.0]), DVector::from_vec(vec![1.0])],
            vec![0, 0],
            2,
        )
        .unwrap();
        assert!(Dataset::new("toy", one_class).is_err());

        let bad = LabeledSet::new(
            vec![DVector::from_vec(vec![f64::NAN]), DVector::from_vec(vec![1.0])],
            vec![0, 1],
            2,
        )
        .unwrap();
        assert!(Dataset::new("toy", bad).is_err());
    }

    #[test]
    fn smallest_prior_counts_the_minority() {
        let set = LabeledSet::new(
            (0..10).map(|i| DVector::from_vec(vec![i as f64])).collect(),
            vec![0, 0, 0, 0, 0, 0, 0, 1, 1, 1],
            2,
        )
        .unwrap();
        let ds = Dataset::new("toy", set).unwrap();
        assert_eq!(ds.smallest_prior(), 0.3);
    }
}
