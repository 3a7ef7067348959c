//! Experiment configuration: the typed grid description plus a parser for
//! the flat `key = value` config file format.

use std::path::PathBuf;

use super::ExperimentError;
use crate::data::find_spec;
use crate::model::ModelKind;

/// Training strategy axis of the method grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Supervised,
    SelfLearned,
    EmSoft,
    Constrained,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Supervised => "supervised",
            Strategy::SelfLearned => "self_learned",
            Strategy::EmSoft => "em_soft",
            Strategy::Constrained => "constrained",
        }
    }

    pub const ALL: [Strategy; 4] =
        [Strategy::Supervised, Strategy::SelfLearned, Strategy::EmSoft, Strategy::Constrained];
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "supervised" => Ok(Strategy::Supervised),
            "self_learned" => Ok(Strategy::SelfLearned),
            "em_soft" => Ok(Strategy::EmSoft),
            "constrained" => Ok(Strategy::Constrained),
            other => Err(format!(
                "unknown strategy `{other}` (expected supervised, self_learned, em_soft, or constrained)"
            )),
        }
    }
}

/// One point on the method grid: a strategy applied to a classifier kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Method {
    pub strategy: Strategy,
    pub kind: ModelKind,
}

impl Method {
    pub fn new(strategy: Strategy, kind: ModelKind) -> Self {
        Self { strategy, kind }
    }

    /// Token form, e.g. `self_learned_nmc`; used in configs and seed keys.
    pub fn id(&self) -> String {
        format!("{}_{}", self.strategy.as_str(), self.kind.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (strategy, kind) = s
            .rsplit_once('_')
            .ok_or_else(|| format!("method token `{s}` is not of the form <strategy>_<classifier>"))?;
        Ok(Method { strategy: strategy.parse()?, kind: kind.parse()? })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}_{}", self.strategy.as_str(), self.kind.as_str())
    }
}

/// Full description of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub datasets: Vec<String>,
    pub methods: Vec<Method>,
    pub labeled_sizes_nmc: Vec<usize>,
    pub labeled_sizes_lda: Vec<usize>,
    pub unlabeled_sizes: Vec<usize>,
    pub repetitions: usize,
    pub master_seed: u64,
    pub max_redraws: usize,
    pub min_per_class_nmc: usize,
    pub min_per_class_lda: usize,
    pub self_learn_max_iter: usize,
    pub em_max_iter: usize,
    pub em_tol: f64,
    pub stratified_draws: bool,
    /// Overrides the data directory resolution in the command layer.
    pub data_dir: Option<PathBuf>,
}

fn all_dataset_names() -> Vec<String> {
    crate::data::REGISTRY.iter().map(|s| s.name.to_string()).collect()
}

impl Default for ExperimentConfig {
    /// The headline grid: all eight datasets, the three paper methods on
    /// the nearest means classifier, labeled sizes 4 and 10, unlabeled
    /// sizes 2..2048, a thousand repetitions.
    fn default() -> Self {
        Self {
            datasets: all_dataset_names(),
            methods: [Strategy::Supervised, Strategy::SelfLearned, Strategy::Constrained]
                .into_iter()
                .map(|s| Method::new(s, ModelKind::Nmc))
                .collect(),
            labeled_sizes_nmc: vec![4, 10],
            labeled_sizes_lda: vec![100],
            unlabeled_sizes: vec![2, 8, 32, 128, 512, 2048],
            repetitions: 1000,
            master_seed: 0,
            max_redraws: 1000,
            min_per_class_nmc: 1,
            min_per_class_lda: 2,
            self_learn_max_iter: 100,
            em_max_iter: 100,
            em_tol: 1e-8,
            stratified_draws: false,
            data_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// The linear discriminant companion grid: 100 labeled samples.
    pub fn default_lda() -> Self {
        Self {
            methods: [Strategy::Supervised, Strategy::SelfLearned, Strategy::Constrained]
                .into_iter()
                .map(|s| Method::new(s, ModelKind::Lda))
                .collect(),
            ..Self::default()
        }
    }

    pub fn labeled_sizes(&self, kind: ModelKind) -> &[usize] {
        match kind {
            ModelKind::Nmc => &self.labeled_sizes_nmc,
            ModelKind::Lda => &self.labeled_sizes_lda,
        }
    }

    pub fn min_per_class(&self, kind: ModelKind) -> usize {
        match kind {
            ModelKind::Nmc => self.min_per_class_nmc,
            ModelKind::Lda => self.min_per_class_lda,
        }
    }

    /// Number of curve cells the grid will produce.
    pub fn cell_count(&self) -> usize {
        self.datasets.len()
            * self
                .methods
                .iter()
                .map(|m| self.labeled_sizes(m.kind).len() * self.unlabeled_sizes.len())
                .sum::<usize>()
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.datasets.is_empty() {
            return Err(ExperimentError::InvalidConfig("no datasets selected".into()));
        }
        for name in &self.datasets {
            if find_spec(name).is_none() {
                return Err(ExperimentError::InvalidConfig(format!("unknown dataset `{name}`")));
            }
        }
        if self.methods.is_empty() {
            return Err(ExperimentError::InvalidConfig("no methods selected".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.methods {
            if !seen.insert(*m) {
                return Err(ExperimentError::InvalidConfig(format!("method `{m}` listed twice")));
            }
        }
        for m in &self.methods {
            if self.labeled_sizes(m.kind).is_empty() {
                return Err(ExperimentError::InvalidConfig(format!(
                    "method `{m}` selected but no labeled sizes configured for {}",
                    m.kind
                )));
            }
        }
        for &s in self
            .labeled_sizes_nmc
            .iter()
            .chain(&self.labeled_sizes_lda)
            .chain(&self.unlabeled_sizes)
        {
            if s == 0 {
                return Err(ExperimentError::InvalidConfig("sizes must be positive".into()));
            }
        }
        if !self.unlabeled_sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(ExperimentError::InvalidConfig(
                "unlabeled_sizes must be strictly increasing".into(),
            ));
        }
        if self.repetitions == 0 {
            return Err(ExperimentError::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.min_per_class_nmc == 0 || self.min_per_class_lda == 0 {
            return Err(ExperimentError::InvalidConfig("min_per_class must be at least 1".into()));
        }
        if self.self_learn_max_iter == 0 || self.em_max_iter == 0 {
            return Err(ExperimentError::InvalidConfig("iteration caps must be at least 1".into()));
        }
        if !(self.em_tol > 0.0) {
            return Err(ExperimentError::InvalidConfig(format!(
                "em_tol must be positive, got {}",
                self.em_tol
            )));
        }
        for m in &self.methods {
            for &n_labeled in self.labeled_sizes(m.kind) {
                if n_labeled < 2 * self.min_per_class(m.kind) {
                    return Err(ExperimentError::InvalidConfig(format!(
                        "labeled size {n_labeled} cannot hold {} samples per class for `{m}`",
                        self.min_per_class(m.kind)
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>, ExperimentError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>().map_err(|e| {
                ExperimentError::InvalidConfig(format!("{key}: cannot parse `{t}`: {e}"))
            })
        })
        .collect()
}

fn parse_scalar<T: std::str::FromStr>(value: &str, key: &str) -> Result<T, ExperimentError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| ExperimentError::InvalidConfig(format!("{key}: cannot parse `{value}`: {e}")))
}

/// Parses the flat `key = value` config format. Lines are independent;
/// `#` starts a comment; list values are comma-separated. Unknown and
/// duplicated keys are hard errors. The special values `datasets = all`
/// and `methods = all_nmc` / `all_lda` expand to the full registry and
/// the four strategies on one classifier.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ExperimentError> {
    let mut config = ExperimentConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ExperimentError::InvalidConfig(format!("line {}: expected `key = value`", idx + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(ExperimentError::InvalidConfig(format!(
                "line {}: key `{key}` given twice",
                idx + 1
            )));
        }
        match key {
            "datasets" => {
                config.datasets = if value == "all" {
                    all_dataset_names()
                } else {
                    parse_list::<String>(value, key)?
                };
            }
            "methods" => {
                config.methods = match value {
                    "all_nmc" => {
                        Strategy::ALL.into_iter().map(|s| Method::new(s, ModelKind::Nmc)).collect()
                    }
                    "all_lda" => {
                        Strategy::ALL.into_iter().map(|s| Method::new(s, ModelKind::Lda)).collect()
                    }
                    _ => value
                        .split(',')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(|t| {
                            t.parse::<Method>().map_err(|e| {
                                ExperimentError::InvalidConfig(format!("methods: {e}"))
                            })
                        })
                        .collect::<Result<_, _>>()?,
                };
            }
            "labeled_sizes" => {
                let sizes: Vec<usize> = parse_list(value, key)?;
                config.labeled_sizes_nmc = sizes.clone();
                config.labeled_sizes_lda = sizes;
            }
            "labeled_sizes_nmc" => config.labeled_sizes_nmc = parse_list(value, key)?,
            "labeled_sizes_lda" => config.labeled_sizes_lda = parse_list(value, key)?,
            "unlabeled_sizes" => config.unlabeled_sizes = parse_list(value, key)?,
            "repetitions" => config.repetitions = parse_scalar(value, key)?,
            "master_seed" => config.master_seed = parse_scalar(value, key)?,
            "max_redraws" => config.max_redraws = parse_scalar(value, key)?,
            "min_per_class_nmc" => config.min_per_class_nmc = parse_scalar(value, key)?,
            "min_per_class_lda" => config.min_per_class_lda = parse_scalar(value, key)?,
            "self_learn_max_iter" => config.self_learn_max_iter = parse_scalar(value, key)?,
            "em_max_iter" => config.em_max_iter = parse_scalar(value, key)?,
            "em_tol" => config.em_tol = parse_scalar(value, key)?,
            "stratified_draws" => config.stratified_draws = parse_scalar(value, key)?,
            "data_dir" => config.data_dir = Some(PathBuf::from(value)),
            other => {
                return Err(ExperimentError::InvalidConfig(format!(
                    "line {}: unknown key `{other}`",
                    idx + 1
                )))
            }
        }
    }
    config.validate()?;
    Ok(config)
}
