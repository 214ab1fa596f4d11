//! Hyperparameter tuning: model configurations are encoded as points in the
//! unit box, scored by stratified k-fold cross-validation, and searched with
//! FOX.
//!
//! The untuned default configuration is always scored and also seeded into
//! the initial population. If the search finds nothing strictly better the
//! default is returned, so a tuned score is never below the baseline.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::foxopt::{fox_optimize_seeded, Bounds, FoxConfig, Objective};
use crate::json::Versioned;
use crate::model::{ModelConfig, ModelKind};
use crate::report::metrics_named;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Integer,
    Real,
    LogReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub lo: f64,
    pub hi: f64,
}

impl ParamSpec {
    pub fn new(name: &str, kind: ParamKind, lo: f64, hi: f64) -> Self {
        Self { name: name.to_string(), kind, lo, hi }
    }

    /// Maps a unit-interval coordinate to a parameter value.
    pub fn decode(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        if x == 0.0 {
            return self.lo;
        }
        if x == 1.0 {
            return self.hi;
        }
        let v = match self.kind {
            ParamKind::Real => self.lo + x * (self.hi - self.lo),
            ParamKind::Integer => (self.lo + x * (self.hi - self.lo)).round(),
            ParamKind::LogReal => (self.lo.ln() + x * (self.hi.ln() - self.lo.ln())).exp(),
        };
        v.clamp(self.lo, self.hi)
    }

    /// Inverse of [`decode`](Self::decode), clamped to the unit interval.
    pub fn encode(&self, v: f64) -> f64 {
        let x = match self.kind {
            ParamKind::Real | ParamKind::Integer => (v - self.lo) / (self.hi - self.lo),
            ParamKind::LogReal => (v.ln() - self.lo.ln()) / (self.hi.ln() - self.lo.ln()),
        };
        if x.is_nan() {
            0.0
        } else {
            x.clamp(0.0, 1.0)
        }
    }
}

const FOREST_PARAMS: [&str; 4] = ["n_trees", "max_depth", "min_samples_leaf", "max_features_fraction"];
const GBT_PARAMS: [&str; 8] = [
    "n_rounds",
    "learning_rate",
    "max_depth",
    "min_child_weight",
    "reg_lambda",
    "gamma",
    "subsample",
    "colsample",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub model_kind: ModelKind,
    pub params: Vec<ParamSpec>,
}

impl Versioned for SearchSpace {
    const FORMAT: &'static str = "foxforest.search_space";
    const VERSION: u32 = 1;
}

impl SearchSpace {
    pub fn default_for(kind: ModelKind) -> Self {
        use ParamKind::*;
        let params = match kind {
            ModelKind::Forest => vec![
                ParamSpec::new("n_trees", Integer, 10.0, 300.0),
                ParamSpec::new("max_depth", Integer, 2.0, 20.0),
                ParamSpec::new("min_samples_leaf", Integer, 1.0, 10.0),
                ParamSpec::new("max_features_fraction", Real, 0.1, 1.0),
            ],
            ModelKind::Gbt => vec![
                ParamSpec::new("n_rounds", Integer, 20.0, 300.0),
                ParamSpec::new("learning_rate", LogReal, 1e-3, 0.5),
                ParamSpec::new("max_depth", Integer, 2.0, 10.0),
                ParamSpec::new("min_child_weight", Real, 0.0, 10.0),
                ParamSpec::new("reg_lambda", LogReal, 1e-3, 10.0),
                ParamSpec::new("gamma", Real, 0.0, 5.0),
                ParamSpec::new("subsample", Real, 0.5, 1.0),
                ParamSpec::new("colsample", Real, 0.5, 1.0),
            ],
        };
        Self { model_kind: kind, params }
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(Error::param("search space has no parameters"));
        }
        let known: &[&str] = match self.model_kind {
            ModelKind::Forest => &FOREST_PARAMS,
            ModelKind::Gbt => &GBT_PARAMS,
        };
        for (i, p) in self.params.iter().enumerate() {
            if !known.contains(&p.name.as_str()) {
                return Err(Error::param(format!("`{}` is not a {} parameter", p.name, self.model_kind)));
            }
            if self.params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::param(format!("parameter `{}` listed twice", p.name)));
            }
            if !(p.lo.is_finite() && p.hi.is_finite() && p.lo < p.hi) {
                return Err(Error::param(format!("`{}` needs lo < hi", p.name)));
            }
            if p.kind == ParamKind::LogReal && p.lo <= 0.0 {
                return Err(Error::param(format!("log-scaled `{}` needs lo > 0", p.name)));
            }
        }
        // Both ends of every range must give a usable model.
        for x in [0.0, 1.0] {
            self.decode(&vec![x; self.dim()], 0)?.validate()?;
        }
        Ok(())
    }

    /// Applies the decoded values to the kind's default configuration.
    pub fn decode(&self, x: &[f64], seed: u64) -> Result<ModelConfig> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: x.len() });
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(j));
        }
        let mut cfg = self.model_kind.default_config(seed);
        for (p, &xi) in self.params.iter().zip(x) {
            set_param(&mut cfg, &p.name, p.decode(xi))?;
        }
        Ok(cfg)
    }

    /// Unit-box coordinates of `cfg`; values outside a range land on its edge.
    /// `n_features` resolves the forest's default feature fraction.
    pub fn encode(&self, cfg: &ModelConfig, n_features: usize) -> Result<Vec<f64>> {
        if cfg.kind() != self.model_kind {
            return Err(Error::param(format!(
                "cannot encode a {} config in a {} search space",
                cfg.kind(),
                self.model_kind
            )));
        }
        self.params
            .iter()
            .map(|p| Ok(p.encode(get_param(cfg, &p.name, n_features)?)))
            .collect()
    }
}

fn as_count(v: f64) -> usize {
    v.round().max(0.0) as usize
}

fn set_param(cfg: &mut ModelConfig, name: &str, v: f64) -> Result<()> {
    match cfg {
        ModelConfig::Forest(c) => match name {
            "n_trees" => c.n_trees = as_count(v),
            "max_depth" => c.max_depth = Some(as_count(v)),
            "min_samples_leaf" => c.min_samples_leaf = as_count(v),
            "max_features_fraction" => c.max_features_fraction = Some(v),
            _ => return Err(Error::param(format!("`{name}` is not a forest parameter"))),
        },
        ModelConfig::Gbt(c) => match name {
            "n_rounds" => c.n_rounds = as_count(v),
            "learning_rate" => c.learning_rate = v,
            "max_depth" => c.max_depth = as_count(v),
            "min_child_weight" => c.min_child_weight = v,
            "reg_lambda" => c.reg_lambda = v,
            "gamma" => c.gamma = v,
            "subsample" => c.subsample = v,
            "colsample" => c.colsample = v,
            _ => return Err(Error::param(format!("`{name}` is not a gbt parameter"))),
        },
    }
    Ok(())
}

fn get_param(cfg: &ModelConfig, name: &str, n_features: usize) -> Result<f64> {
    Ok(match cfg {
        ModelConfig::Forest(c) => match name {
            "n_trees" => c.n_trees as f64,
            "max_depth" => c.max_depth.map_or(f64::INFINITY, |d| d as f64),
            "min_samples_leaf" => c.min_samples_leaf as f64,
            "max_features_fraction" => c.features_per_node(n_features) as f64 / n_features.max(1) as f64,
            _ => return Err(Error::param(format!("`{name}` is not a forest parameter"))),
        },
        ModelConfig::Gbt(c) => match name {
            "n_rounds" => c.n_rounds as f64,
            "learning_rate" => c.learning_rate,
            "max_depth" => c.max_depth as f64,
            "min_child_weight" => c.min_child_weight,
            "reg_lambda" => c.reg_lambda,
            "gamma" => c.gamma,
            "subsample" => c.subsample,
            "colsample" => c.colsample,
            _ => return Err(Error::param(format!("`{name}` is not a gbt parameter"))),
        },
    })
}

/// Test-row indices for each of `k` folds, stratified by class. Rows of
/// classes with a single member are never held out.
pub fn stratified_folds(labels: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::param("at least two folds are required"));
    }
    if k > labels.len() {
        return Err(Error::param(format!("{k} folds requested for {} rows", labels.len())));
    }
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.len() < 2 {
            continue;
        }
        members.shuffle(&mut rng::stream(seed, &[rng::tag::FOLDS, c as u64]));
        for (p, &i) in members.iter().enumerate() {
            folds[(offset + p) % k].push(i);
        }
        offset += members.len();
    }
    if offset < k {
        return Err(Error::param(format!(
            "only {offset} rows belong to classes with two or more members; {k} folds need at least {k}"
        )));
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvMetric {
    #[default]
    Accuracy,
    WeightedF1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSettings {
    pub folds: usize,
    pub seed: u64,
    pub metric: CvMetric,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self { folds: 5, seed: 0, metric: CvMetric::Accuracy }
    }
}

impl CvSettings {
    /// Seed given to every model trained during tuning.
    pub fn model_seed(&self) -> u64 {
        rng::derive_seed(self.seed, &[rng::tag::MODEL])
    }
}

/// Cross-validated score of decoded configurations, minimized as
/// `1 - score`. Scores are cached per configuration.
pub struct CvObjective<'a> {
    space: &'a SearchSpace,
    folds: Vec<(Dataset, Dataset)>,
    class_names: Vec<String>,
    model_seed: u64,
    metric: CvMetric,
    cache: Mutex<HashMap<String, f64>>,
    failure: Mutex<Option<Error>>,
}

impl<'a> CvObjective<'a> {
    pub fn new(train: &Dataset, space: &'a SearchSpace, settings: &CvSettings) -> Result<Self> {
        space.validate()?;
        if train.n_present_classes() < 2 {
            return Err(Error::SingleClass);
        }
        let test_folds = stratified_folds(train.labels(), train.n_classes(), settings.folds, settings.seed)?;
        let folds = test_folds
            .iter()
            .map(|test| {
                let mut held = vec![false; train.n_rows()];
                test.iter().for_each(|&i| held[i] = true);
                let fit: Vec<usize> = (0..train.n_rows()).filter(|&i| !held[i]).collect();
                (train.subset(&fit), train.subset(test))
            })
            .collect();
        Ok(Self {
            space,
            folds,
            class_names: train.class_names().to_vec(),
            model_seed: settings.model_seed(),
            metric: settings.metric,
            cache: Mutex::new(HashMap::new()),
            failure: Mutex::new(None),
        })
    }

    pub fn model_seed(&self) -> u64 {
        self.model_seed
    }

    pub fn decode(&self, x: &[f64]) -> Result<ModelConfig> {
        self.space.decode(x, self.model_seed)
    }

    /// Mean held-out score of `cfg` over the folds, in [0, 1].
    pub fn score_config(&self, cfg: &ModelConfig) -> Result<f64> {
        let key = serde_json::to_string(cfg)?;
        if let Some(&s) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(s);
        }
        let per_fold = self
            .folds
            .par_iter()
            .map(|(fit, test)| {
                let model = cfg.fit(fit)?;
                let pred = model.predict(test.rows())?;
                let report = metrics_named(test.labels(), &pred, &self.class_names)?;
                Ok(match self.metric {
                    CvMetric::Accuracy => report.accuracy,
                    CvMetric::WeightedF1 => report.weighted_f1,
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let score = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
        self.cache.lock().expect("cache lock").insert(key, score);
        Ok(score)
    }

    pub fn score_at(&self, x: &[f64]) -> Result<f64> {
        self.score_config(&self.decode(x)?)
    }

    fn take_failure(&self) -> Option<Error> {
        self.failure.lock().expect("failure lock").take()
    }
}

impl Objective for CvObjective<'_> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        match self.score_at(x) {
            Ok(s) => 1.0 - s,
            Err(e) => {
                self.failure.lock().expect("failure lock").get_or_insert(e);
                f64::NAN
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub model_kind: ModelKind,
    pub best_config: ModelConfig,
    pub best_cv_score: f64,
    pub baseline_config: ModelConfig,
    pub baseline_cv_score: f64,
    /// Whether the search beat the baseline; when false `best_config` is
    /// the baseline.
    pub improved: bool,
    /// Best objective (`1 - score`) after initialization and each iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub space: SearchSpace,
    pub fox: FoxConfig,
    pub cv: CvSettings,
}

impl Versioned for TuneResult {
    const FORMAT: &'static str = "foxforest.tune_result";
    const VERSION: u32 = 1;
}

pub fn tune(train: &Dataset, space: &SearchSpace, fox: &FoxConfig, cv: &CvSettings) -> Result<TuneResult> {
    let objective = CvObjective::new(train, space, cv)?;
    let baseline_config = space.model_kind.default_config(objective.model_seed());
    let baseline_cv_score = objective.score_config(&baseline_config)?;
    let start = space.encode(&baseline_config, train.n_features())?;

    let bounds = Bounds::uniform(space.dim(), 0.0, 1.0)?;
    let run = match fox_optimize_seeded(&objective, &bounds, fox, &[start]) {
        Ok(run) => run,
        Err(Error::NonFiniteObjective { .. }) if objective.failure.lock().expect("failure lock").is_some() => {
            return Err(objective.take_failure().expect("failure recorded"));
        }
        Err(e) => return Err(e),
    };

    let found = objective.decode(&run.best_x)?;
    let found_score = objective.score_config(&found)?;
    let improved = found_score > baseline_cv_score;
    let (best_config, best_cv_score) = if improved {
        (found, found_score)
    } else {
        (baseline_config.clone(), baseline_cv_score)
    };
    Ok(TuneResult {
        model_kind: space.model_kind,
        best_config,
        best_cv_score,
        baseline_config,
        baseline_cv_score,
        improved,
        trace: run.history,
        evaluations: run.evaluations,
        space: space.clone(),
        fox: fox.clone(),
        cv: cv.clone(),
    })
}
