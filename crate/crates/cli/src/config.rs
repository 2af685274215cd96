//! Experiment configuration: a sectioned TOML file, overridable by
//! command-line flags (flags win).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hotgrid_core::features::FeatureSet;
use hotgrid_core::frame::TimeResolution;
use hotgrid_core::learners::{
    AdaBoostParams, Algo, ForestParams, LearnerSpec, LogisticParams, Penalty,
};
use hotgrid_core::metrics::HitRateAveraging;

use crate::error::{CliError, CliResult};

/// Imbalance strategy of an experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Constant no-event scores; the degenerate baseline.
    Majority,
    /// Fit on the raw imbalanced training set.
    Naive,
    /// Cost-sensitive weighting of the minority class.
    Cost,
    /// Single random under-sample.
    Under,
    /// Random over-sampling.
    Over,
    /// SMOTE synthetic over-sampling.
    Smote,
    /// NearMiss heuristic under-sampling.
    NearMiss,
    /// Hyper-ensemble of repeated under-samples.
    Hyper,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Majority => "majority",
            Strategy::Naive => "naive",
            Strategy::Cost => "cost",
            Strategy::Under => "under",
            Strategy::Over => "over",
            Strategy::Smote => "smote",
            Strategy::NearMiss => "nearmiss",
            Strategy::Hyper => "hyper",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Ok(match s {
            "majority" => Strategy::Majority,
            "naive" => Strategy::Naive,
            "cost" => Strategy::Cost,
            "under" => Strategy::Under,
            "over" => Strategy::Over,
            "smote" => Strategy::Smote,
            "nearmiss" => Strategy::NearMiss,
            "hyper" => Strategy::Hyper,
            other => {
                return Err(CliError::config(
                    "config",
                    format!("unknown strategy {other:?}"),
                ))
            }
        })
    }
}

/// Scalar-or-list TOML value, for hyperparameter grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub events: PathBuf,
    pub static_attrs: PathBuf,
    pub weather: PathBuf,
    #[serde(default)]
    pub eligibility: Option<PathBuf>,
    /// Optional long-form public events file: date,cell_id,event_count.
    #[serde(default)]
    pub public_events: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub cell_size: f64,
    /// Explicit bounds; inferred from events when absent.
    #[serde(default)]
    pub min_x: Option<f64>,
    #[serde(default)]
    pub min_y: Option<f64>,
    #[serde(default)]
    pub max_x: Option<f64>,
    #[serde(default)]
    pub max_y: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodSection {
    /// First study day, ISO-8601.
    pub start: String,
    /// Last study day, inclusive.
    pub end: String,
    #[serde(default = "default_resolution")]
    pub resolution: String,
}

fn default_resolution() -> String {
    "daily".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_strategy")]
    pub strategy: String,
    /// Ensemble size; only the hyper strategy reads it.
    #[serde(default = "default_phi")]
    pub phi: usize,
    #[serde(default = "default_feature_set")]
    pub feature_set: String,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_coverage_levels")]
    pub coverage_levels: Vec<f64>,
    /// Surveillance curve resolution.
    #[serde(default = "default_curve_step")]
    pub curve_step: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_averaging")]
    pub averaging: String,
    #[serde(default = "default_prior_windows")]
    pub prior_windows: Vec<usize>,
    /// Neighbor count for SMOTE and NearMiss.
    #[serde(default = "default_k_neighbors")]
    pub k_neighbors: usize,
    /// Abort on events outside the grid/period instead of skipping them.
    #[serde(default)]
    pub strict_events: bool,
    pub out_dir: PathBuf,
}

fn default_strategy() -> String {
    "hyper".into()
}
fn default_phi() -> usize {
    10
}
fn default_feature_set() -> String {
    "all".into()
}
fn default_train_fraction() -> f64 {
    2.0 / 3.0
}
fn default_coverage_levels() -> Vec<f64> {
    vec![0.05, 0.10, 0.20]
}
fn default_curve_step() -> f64 {
    0.01
}
fn default_averaging() -> String {
    "mean-of-ratios".into()
}
fn default_prior_windows() -> Vec<usize> {
    vec![1, 3, 7, 14]
}
fn default_k_neighbors() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    #[serde(default = "default_kind")]
    pub kind: String,
    /// Forest tree count, or boosting rounds for AdaBoost.
    #[serde(default = "default_trees")]
    pub trees: OneOrMany<usize>,
    /// Tree depth; 0 means unlimited.
    #[serde(default = "default_depth")]
    pub depth: OneOrMany<usize>,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: OneOrMany<f64>,
    /// Regularization strength for the logistic learners.
    #[serde(default = "default_strength")]
    pub strength: OneOrMany<f64>,
    /// Weak-tree depth for AdaBoost.
    #[serde(default = "default_weak_depth")]
    pub weak_depth: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
}

fn default_kind() -> String {
    "random-forest".into()
}
fn default_trees() -> OneOrMany<usize> {
    OneOrMany::Many(vec![100, 300])
}
fn default_depth() -> OneOrMany<usize> {
    OneOrMany::Many(vec![8, 16, 0])
}
fn default_min_leaf() -> usize {
    1
}
fn default_learning_rate() -> OneOrMany<f64> {
    OneOrMany::Many(vec![0.5, 1.0])
}
fn default_strength() -> OneOrMany<f64> {
    OneOrMany::Many(vec![0.01, 0.1, 1.0])
}
fn default_weak_depth() -> usize {
    1
}
fn default_folds() -> usize {
    5
}

impl Default for LearnerSection {
    fn default() -> Self {
        LearnerSection {
            kind: default_kind(),
            trees: default_trees(),
            depth: default_depth(),
            min_leaf: default_min_leaf(),
            learning_rate: default_learning_rate(),
            strength: default_strength(),
            weak_depth: default_weak_depth(),
            folds: default_folds(),
        }
    }
}

/// Feature schema: which static columns form the spatial group (all
/// columns, in CSV order, when absent). Crime and temporal columns are
/// generated and named by the pipeline itself.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturesSection {
    #[serde(default)]
    pub spatial: Option<Vec<String>>,
}

/// Row filter on a static feature, mirroring a percentile split of the
/// study area into three strata.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratifySection {
    pub feature: String,
    /// Cells with feature < low form the low stratum.
    pub low: f64,
    /// Cells with feature > high form the high stratum.
    pub high: f64,
    pub stratum: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSection,
    pub grid: GridSection,
    pub period: PeriodSection,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub learner: LearnerSection,
    #[serde(default)]
    pub features: FeaturesSection,
    #[serde(default)]
    pub stratify: Option<StratifySection>,
}

/// Command-line overrides; every set field beats the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub strategy: Option<String>,
    pub seed: Option<u64>,
    pub phi: Option<usize>,
    pub feature_set: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub learner_kind: Option<String>,
    pub resolution: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;

        // paths in the file are relative to the file's directory
        if let Some(base) = path.parent() {
            cfg.data.events = absolutize(base, &cfg.data.events);
            cfg.data.static_attrs = absolutize(base, &cfg.data.static_attrs);
            cfg.data.weather = absolutize(base, &cfg.data.weather);
            cfg.data.eligibility = cfg.data.eligibility.map(|p| absolutize(base, &p));
            cfg.data.public_events = cfg.data.public_events.map(|p| absolutize(base, &p));
            cfg.experiment.out_dir = absolutize(base, &cfg.experiment.out_dir);
        }

        if let Some(s) = &overrides.strategy {
            cfg.experiment.strategy = s.clone();
        }
        if let Some(s) = overrides.seed {
            cfg.experiment.seed = s;
        }
        if let Some(p) = overrides.phi {
            cfg.experiment.phi = p;
        }
        if let Some(f) = &overrides.feature_set {
            cfg.experiment.feature_set = f.clone();
        }
        if let Some(o) = &overrides.out_dir {
            cfg.experiment.out_dir = o.clone();
        }
        if let Some(k) = &overrides.learner_kind {
            cfg.learner.kind = k.clone();
        }
        if let Some(r) = &overrides.resolution {
            cfg.period.resolution = r.clone();
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.strategy()?;
        self.feature_set()?;
        self.resolution()?;
        self.averaging()?;
        if !(self.experiment.train_fraction > 0.0 && self.experiment.train_fraction < 1.0) {
            return Err(CliError::config("config", "train_fraction must lie in (0, 1)"));
        }
        if self.experiment.coverage_levels.is_empty()
            || self
                .experiment
                .coverage_levels
                .iter()
                .any(|&c| !(c > 0.0 && c <= 1.0))
        {
            return Err(CliError::config(
                "config",
                "coverage_levels must be nonempty fractions in (0, 1]",
            ));
        }
        if !(self.experiment.curve_step > 0.0 && self.experiment.curve_step <= 1.0) {
            return Err(CliError::config("config", "curve_step must lie in (0, 1]"));
        }
        if self.experiment.prior_windows.iter().any(|&w| w == 0) {
            return Err(CliError::config("config", "prior_windows must be positive"));
        }
        if self.experiment.k_neighbors == 0 {
            return Err(CliError::config("config", "k_neighbors must be at least 1"));
        }
        if self.strategy()? == Strategy::Hyper && self.experiment.phi == 0 {
            return Err(CliError::config("config", "phi must be at least 1"));
        }
        if self.learner.folds < 2 {
            return Err(CliError::config("config", "folds must be at least 2"));
        }
        if let Some(s) = &self.stratify {
            if !(s.low <= s.high) {
                return Err(CliError::config("config", "stratify.low must not exceed high"));
            }
            match s.stratum.as_str() {
                "low" | "mid" | "high" => {}
                other => {
                    return Err(CliError::config(
                        "config",
                        format!("unknown stratum {other:?} (use low|mid|high)"),
                    ))
                }
            }
        }
        self.learner_grid()?;
        Ok(())
    }

    pub fn strategy(&self) -> CliResult<Strategy> {
        Strategy::parse(&self.experiment.strategy)
    }

    pub fn feature_set(&self) -> CliResult<FeatureSet> {
        Ok(match self.experiment.feature_set.as_str() {
            "crime" => FeatureSet::Crime,
            "spatial" => FeatureSet::Spatial,
            "temporal" => FeatureSet::Temporal,
            "all" => FeatureSet::All,
            other => {
                return Err(CliError::config(
                    "config",
                    format!("unknown feature set {other:?}"),
                ))
            }
        })
    }

    pub fn resolution(&self) -> CliResult<TimeResolution> {
        Ok(match self.period.resolution.as_str() {
            "daily" => TimeResolution::Daily,
            "weekly" => TimeResolution::Weekly,
            other => {
                return Err(CliError::config(
                    "config",
                    format!("unknown resolution {other:?}"),
                ))
            }
        })
    }

    pub fn averaging(&self) -> CliResult<HitRateAveraging> {
        Ok(match self.experiment.averaging.as_str() {
            "mean-of-ratios" => HitRateAveraging::MeanOfRatios,
            "ratio-of-sums" => HitRateAveraging::RatioOfSums,
            other => {
                return Err(CliError::config(
                    "config",
                    format!("unknown averaging {other:?}"),
                ))
            }
        })
    }

    pub fn curve_grid(&self) -> Vec<f64> {
        let step = self.experiment.curve_step;
        let n = (1.0 / step).round() as usize;
        (1..=n).map(|i| (i as f64 * step).min(1.0)).collect()
    }

    /// Expands the learner section into the hyperparameter grid.
    pub fn learner_grid(&self) -> CliResult<Vec<LearnerSpec>> {
        let seed = self.experiment.seed;
        let mut specs = Vec::new();
        match self.learner.kind.as_str() {
            "random-forest" => {
                for &trees in &self.learner.trees.values() {
                    for &depth in &self.learner.depth.values() {
                        specs.push(LearnerSpec::new(
                            Algo::Forest(ForestParams {
                                n_trees: trees,
                                max_depth: if depth == 0 { None } else { Some(depth) },
                                min_samples_leaf: self.learner.min_leaf,
                                bootstrap: true,
                                feature_subsample: true,
                            }),
                            seed,
                        ));
                    }
                }
            }
            "adaboost" => {
                for &rounds in &self.learner.trees.values() {
                    for &lr in &self.learner.learning_rate.values() {
                        specs.push(LearnerSpec::new(
                            Algo::AdaBoost(AdaBoostParams {
                                n_rounds: rounds,
                                learning_rate: lr,
                                weak_depth: self.learner.weak_depth,
                            }),
                            seed,
                        ));
                    }
                }
            }
            "logistic-l1" | "logistic-l2" => {
                let penalty = if self.learner.kind == "logistic-l1" {
                    Penalty::L1
                } else {
                    Penalty::L2
                };
                for &strength in &self.learner.strength.values() {
                    specs.push(LearnerSpec::new(
                        Algo::Logistic(LogisticParams::new(penalty, strength)),
                        seed,
                    ));
                }
            }
            other => {
                return Err(CliError::config(
                    "config",
                    format!("unknown learner kind {other:?}"),
                ))
            }
        }
        if specs.is_empty() {
            return Err(CliError::config("config", "empty hyperparameter grid"));
        }
        for spec in &specs {
            spec.validate()
                .map_err(|e| CliError::config("config", e))?;
        }
        Ok(specs)
    }
}

fn absolutize(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
