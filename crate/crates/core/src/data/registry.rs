//! The eight bundled two-class datasets and their expected shapes. Loading
//! validates against these; any deviation is a hard error.

/// Expected properties of one bundled dataset. The canonical CSV layout
/// puts the label token in the last column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub name: &'static str,
    pub expected_objects: usize,
    pub expected_dims: usize,
    /// Smallest class prior, rounded to two decimals.
    pub expected_smallest_prior: f64,
    /// Token the converters write for the minority (positive) class.
    pub positive_label_token: &'static str,
}

/// Allowed deviation of the empirical smallest prior from the registry
/// value, which is rounded to two decimals.
pub const PRIOR_TOLERANCE: f64 = 0.005;

pub const REGISTRY: [DatasetSpec; 8] = [
    DatasetSpec {
        name: "haberman",
        expected_objects: 306,
        expected_dims: 3,
        expected_smallest_prior: 0.26,
        positive_label_token: "1",
    },
    DatasetSpec {
        name: "ionosphere",
        expected_objects: 351,
        expected_dims: 33,
        expected_smallest_prior: 0.36,
        positive_label_token: "1",
    },
    DatasetSpec {
        name: "pima",
        expected_objects: 768,
        expected_dims: 8,
        expected_smallest_prior: 0.35,
        positive_label_token: "1",
    },
    DatasetSpec {
        name: "sonar",
        expected_objects: 208,
        expected_dims: 60,
        expected_smallest_prior: 0.47,
        positive_label_token: "1",
    },
    DatasetSpec {
        name: "spect",
        expected_objects: 267,
        expected_dims: 22,
        expected_smallest_prior: 0.21,
        positive_label_token: "1",
    },
    DatasetSpec {
        name: "spectf",
        expected_objects: 267,
        expected_dims: 44,
        expected_smallest_prior: 0.21,
        positive_label_token: "1",
    },
    DatasetSpec {
        name: "transfusion",
        expected_objects: 748,
        expected_dims: 3,
        expected_smallest_prior: 0.24,
        positive_label_token: "1",
    },
    DatasetSpec {
        name: "wdbc",
        expected_objects: 569,
        expected_dims: 30,
        expected_smallest_prior: 0.37,
        positive_label_token: "1",
    },
];

/// Looks a dataset up by name.
pub fn find_spec(name: &str) -> Option<&'static DatasetSpec> {
    REGISTRY.iter().find(|s| s.name == name)
}
