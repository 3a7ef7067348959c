//! With-replacement training draws from the empirical distribution. The
//! labeled draw is redrawn wholesale until every class is represented; the
//! unlabeled draw takes features only.

use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::ExperimentError;
use crate::data::Dataset;
use crate::model::LabeledSet;

/// Seeds for the two independent substreams of one repetition.
#[derive(Debug, Clone, Copy)]
pub struct DrawSeeds {
    pub labeled: u64,
    pub unlabeled: u64,
}

/// One repetition's training material.
#[derive(Debug, Clone)]
pub struct TrainingDraw {
    pub labeled: LabeledSet,
    pub unlabeled: Vec<DVector<f64>>,
    /// Wholesale redraws needed before every class was represented.
    pub labeled_redraws: usize,
}

/// Draws `n_labeled` labeled points and `n_unlabeled` label-stripped
/// points, both with replacement. The labeled draw is rejected and redrawn
/// whole until each class has at least `min_per_class` members, up to
/// `max_redraws` redraws. With `stratified` set, `min_per_class` draws per
/// class are forced first and only the remainder is drawn freely, so no
/// rejection can occur.
pub fn draw_training_sets(
    dataset: &Dataset,
    n_labeled: usize,
    n_unlabeled: usize,
    seeds: DrawSeeds,
    min_per_class: usize,
    max_redraws: usize,
    stratified: bool,
) -> Result<TrainingDraw, ExperimentError> {
    let set = dataset.set();
    let n = set.len();
    let k = set.n_classes;
    if n_labeled < k * min_per_class {
        return Err(ExperimentError::InvalidConfig(format!(
            "n_labeled = {n_labeled} cannot hold {min_per_class} samples for each of {k} classes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds.labeled);
    let (indices, labeled_redraws) = if stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &y) in set.labels.iter().enumerate() {
            by_class[y].push(i);
        }
        let mut indices = Vec::with_capacity(n_labeled);
        for class_indices in &by_class {
            for _ in 0..min_per_class {
                indices.push(class_indices[rng.random_range(0..class_indices.len())]);
            }
        }
        while indices.len() < n_labeled {
            indices.push(rng.random_range(0..n));
        }
        (indices, 0)
    } else {
        let mut redraws = 0usize;
        loop {
            let indices: Vec<usize> = (0..n_labeled).map(|_| rng.random_range(0..n)).collect();
            let mut counts = vec![0usize; k];
            for &i in &indices {
                counts[set.labels[i]] += 1;
            }
            if counts.iter().all(|&c| c >= min_per_class) {
                break (indices, redraws);
            }
            redraws += 1;
            if redraws > max_redraws {
                return Err(ExperimentError::RedrawLimitExceeded {
                    dataset: dataset.name().to_string(),
                    n_labeled,
                    min_per_class,
                    attempts: redraws,
                });
            }
        }
    };
    let labeled = LabeledSet::new(
        indices.iter().map(|&i| set.points[i].clone()).collect(),
        indices.iter().map(|&i| set.labels[i]).collect(),
        k,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(seeds.unlabeled);
    let unlabeled: Vec<DVector<f64>> =
        (0..n_unlabeled).map(|_| set.points[rng.random_range(0..n)].clone()).collect();

    Ok(TrainingDraw { labeled, unlabeled, labeled_redraws })
}
