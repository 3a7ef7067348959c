//! Canonical CSV reading and writing. The format is deliberately rigid:
//! comma-separated, no header, `d` numeric feature columns followed by one
//! label column, UTF-8 with LF or CRLF endings. Features are written with
//! 17 significant digits so a write/reload round trip is bit-exact.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;

use super::{DataError, Dataset, DatasetSpec, PRIOR_TOLERANCE};
use crate::model::LabeledSet;

/// Loads and validates one canonical CSV file against its registry spec.
/// Label tokens are mapped so that 0 is the majority class; a tie goes to
/// the token seen first.
pub fn load_dataset(path: &Path, spec: &DatasetSpec) -> Result<Dataset, DataError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|source| DataError::Io { path: path.to_owned(), source })?;
    let mut points: Vec<DVector<f64>> = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut found_dims: Option<usize> = None;
    for (idx, line) in raw.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() < 2 {
            return Err(DataError::Parse {
                path: path.to_owned(),
                line: idx + 1,
                message: "expected at least one feature column and a label column".into(),
            });
        }
        let d = cells.len() - 1;
        match found_dims {
            None => found_dims = Some(d),
            Some(prev) if prev != d => {
                return Err(DataError::Parse {
                    path: path.to_owned(),
                    line: idx + 1,
                    message: format!("row has {d} feature columns, previous rows had {prev}"),
                })
            }
            Some(_) => {}
        }
        let mut features = Vec::with_capacity(d);
        for (col, cell) in cells[..d].iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| DataError::Parse {
                path: path.to_owned(),
                line: idx + 1,
                message: format!("column {}: `{}` is not a number", col + 1, cell),
            })?;
            if !value.is_finite() {
                return Err(DataError::Parse {
                    path: path.to_owned(),
                    line: idx + 1,
                    message: format!("column {}: non-finite value", col + 1),
                });
            }
            features.push(value);
        }
        points.push(DVector::from_vec(features));
        tokens.push(cells[d].trim().to_string());
    }

    let found_objects = points.len();
    let found_dims = found_dims.unwrap_or(0);
    if found_objects != spec.expected_objects || found_dims != spec.expected_dims {
        return Err(DataError::ShapeMismatch {
            name: spec.name.to_string(),
            expected_objects: spec.expected_objects,
            expected_dims: spec.expected_dims,
            found_objects,
            found_dims,
        });
    }

    // Count label tokens in first-occurrence order.
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for t in &tokens {
        if !counts.contains_key(t) {
            order.push(t.clone());
        }
        *counts.entry(t.clone()).or_insert(0) += 1;
    }
    if order.len() != 2 {
        return Err(DataError::NotTwoClass { name: spec.name.to_string(), found: order.len() });
    }
    // Majority token becomes class 0; on a tie, the first-seen token does.
    let (first, second) = (&order[0], &order[1]);
    let majority = if counts[second] > counts[first] { second } else { first };
    let labels: Vec<usize> = tokens.iter().map(|t| usize::from(t != majority)).collect();

    let minority_count = labels.iter().filter(|&&y| y == 1).count();
    let smallest_prior = minority_count.min(found_objects - minority_count) as f64 / found_objects as f64;
    if (smallest_prior - spec.expected_smallest_prior).abs() > PRIOR_TOLERANCE + 1e-12 {
        return Err(DataError::PriorMismatch {
            name: spec.name.to_string(),
            expected: spec.expected_smallest_prior,
            found: smallest_prior,
            tolerance: PRIOR_TOLERANCE,
        });
    }

    let set = LabeledSet::new(points, labels, 2)?;
    Dataset::new(spec.name, set)
}

use crate::math::fmt_g17;

/// Writes a dataset back to canonical CSV with 17-significant-digit
/// features and the 0/1 class indices as label tokens.
pub fn write_canonical_csv(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let file = std::fs::File::create(path)
        .map_err(|source| DataError::Io { path: path.to_owned(), source })?;
    let mut out = std::io::BufWriter::new(file);
    let set = dataset.set();
    let mut line = String::new();
    for (p, &y) in set.points.iter().zip(&set.labels) {
        line.clear();
        for v in p.iter() {
            line.push_str(&fmt_g17(*v));
            line.push(',');
        }
        line.push_str(&y.to_string());
        line.push('\n');
        out.write_all(line.as_bytes())
            .map_err(|source| DataError::Io { path: path.to_owned(), source })?;
    }
    out.flush().map_err(|source| DataError::Io { path: path.to_owned(), source })?;
    Ok(())
}
