//! End-to-end workflow: load, select features, normalize, split, fit
//! baseline and tuned models, evaluate on the held-out split, explain the
//! best model, and write everything under one output directory.
//!
//! Every random decision draws from a seed derived from `PipelineConfig::seed`
//! and recorded in the manifest, and nothing written depends on the clock,
//! the output location or the thread count. Re-running a config (or the
//! manifest it produced) reproduces the bundle byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{class_distribution, load_csv, split_indices, write_csv, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::explain::{explain_rows, summary_ranking, ExplanationSet, ShapConfig};
use crate::foxopt::FoxConfig;
use crate::json::{self, Versioned};
use crate::model::{Model, ModelConfig, ModelKind};
use crate::preprocess::{
    apply_normalizer, default_importance_forest, fit_normalizer, rank_features_gini, select_top_k, GiniRanking,
    NormalizerKind, NormalizerParams,
};
use crate::report::{comparison_table, metrics_named, MetricsReport};
use crate::rng;
use crate::synth::{generate, SynthSpec};
use crate::tune::{tune, CvMetric, CvSettings, SearchSpace, TuneResult};

/// When feature ranking and normalization are fitted relative to the split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakageMode {
    /// Fit both on the training split only.
    #[default]
    Safe,
    /// Fit both on the full dataset, then split.
    PaperOrder,
}

impl FromStr for LeakageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "safe" => Ok(LeakageMode::Safe),
            "paper-order" | "paper_order" => Ok(LeakageMode::PaperOrder),
            other => Err(Error::param(format!("unknown leakage mode `{other}` (expected safe or paper-order)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapSettings {
    pub max_features_exact: usize,
    pub permutations: usize,
    /// Features shown in the text summary.
    pub top_features: usize,
}

impl Default for ShapSettings {
    fn default() -> Self {
        let base = ShapConfig::default();
        Self {
            max_features_exact: base.max_features_exact,
            permutations: base.permutations,
            top_features: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// CSV or dataset JSON; the synthetic cohort is used when absent.
    pub input: Option<PathBuf>,
    pub label_column: String,
    pub synthetic: SynthSpec,
    pub top_k: usize,
    pub normalizer: NormalizerKind,
    pub test_fraction: f64,
    pub stratified: bool,
    pub leakage: LeakageMode,
    pub seed: u64,
    pub importance_trees: usize,
    pub models: Vec<ModelKind>,
    pub tune: bool,
    pub fox_pop_size: usize,
    pub fox_max_iters: usize,
    pub cv_folds: usize,
    pub cv_metric: CvMetric,
    /// Overrides for the default search spaces.
    pub forest_space: Option<SearchSpace>,
    pub gbt_space: Option<SearchSpace>,
    pub shap: ShapSettings,
    /// Not recorded in the manifest, so bundles written to different
    /// places stay identical.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: None,
            label_column: "primary_site".to_string(),
            synthetic: SynthSpec::default(),
            top_k: 50,
            normalizer: NormalizerKind::Zscore,
            test_fraction: 0.2,
            stratified: true,
            leakage: LeakageMode::Safe,
            seed: 42,
            importance_trees: default_importance_forest(0).n_trees,
            models: ModelKind::ALL.to_vec(),
            tune: true,
            fox_pop_size: 20,
            fox_max_iters: 50,
            cv_folds: 5,
            cv_metric: CvMetric::Accuracy,
            forest_space: None,
            gbt_space: None,
            shap: ShapSettings::default(),
            output_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::param("top_k must be at least 1"));
        }
        SplitSpec::new(self.test_fraction, self.seed, self.stratified)?;
        if self.importance_trees == 0 {
            return Err(Error::param("importance_trees must be at least 1"));
        }
        if self.models.is_empty() {
            return Err(Error::param("at least one model kind is required"));
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return Err(Error::param(format!("model kind `{m}` listed twice")));
            }
        }
        if self.tune {
            self.fox_config(0).validate()?;
            if self.cv_folds < 2 {
                return Err(Error::param("cv_folds must be at least 2"));
            }
            for kind in &self.models {
                let space = self.search_space(*kind);
                if space.model_kind != *kind {
                    return Err(Error::param(format!("the {kind} search space is for {}", space.model_kind)));
                }
                space.validate()?;
            }
        }
        if self.shap.permutations == 0 {
            return Err(Error::param("shap.permutations must be at least 1"));
        }
        Ok(())
    }

    pub fn search_space(&self, kind: ModelKind) -> SearchSpace {
        let custom = match kind {
            ModelKind::Forest => &self.forest_space,
            ModelKind::Gbt => &self.gbt_space,
        };
        custom.clone().unwrap_or_else(|| SearchSpace::default_for(kind))
    }

    fn fox_config(&self, seed: u64) -> FoxConfig {
        FoxConfig {
            pop_size: self.fox_pop_size,
            max_iters: self.fox_max_iters,
            seed,
            ..Default::default()
        }
    }

    /// Every seed the run uses, by stage.
    pub fn seeds(&self) -> BTreeMap<String, u64> {
        let mut seeds = BTreeMap::new();
        seeds.insert("split".to_string(), self.seed);
        seeds.insert("importance".to_string(), derived(self.seed, stage::IMPORTANCE));
        seeds.insert("shap".to_string(), derived(self.seed, stage::SHAP));
        for kind in &self.models {
            let t = tuning_seed(self.seed, *kind);
            seeds.insert(format!("tune_{kind}"), t);
            seeds.insert(format!("model_{kind}"), cv_settings(t, self).model_seed());
        }
        if self.input.is_none() {
            seeds.insert("synthetic".to_string(), self.synthetic.seed);
        }
        seeds
    }

    /// Reads a pipeline config or a manifest written by a previous run.
    pub fn from_json_text(text: &str) -> Result<Self> {
        if let Ok((format, _)) = json::peek_format(text) {
            if format == Manifest::FORMAT {
                return Ok(json::from_json::<Manifest>(text)?.config);
            }
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json_text(&json::read_text(path)?)
    }
}

mod stage {
    pub const IMPORTANCE: u64 = 1;
    pub const TUNE: u64 = 2;
    pub const SHAP: u64 = 3;
}

fn derived(seed: u64, stage: u64) -> u64 {
    rng::derive_seed(seed, &[stage])
}

fn tuning_seed(seed: u64, kind: ModelKind) -> u64 {
    rng::derive_seed(seed, &[stage::TUNE, kind as u64])
}

fn cv_settings(seed: u64, cfg: &PipelineConfig) -> CvSettings {
    CvSettings {
        folds: cfg.cv_folds,
        seed,
        metric: cfg.cv_metric,
    }
}

/// Loads a dataset from CSV, or from dataset JSON when the path ends in `.json`.
pub fn load_dataset(path: &Path, label_column: &str) -> Result<Dataset> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        Dataset::from_json(&json::read_text(path)?)
    } else {
        load_csv(path, label_column)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_rows: usize,
    pub n_features: usize,
    pub class_names: Vec<String>,
    pub class_counts: Vec<usize>,
    pub train_class_counts: Vec<usize>,
    pub test_class_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub name: String,
    pub kind: ModelKind,
    pub tuned: bool,
    pub config: ModelConfig,
    pub cv_score: Option<f64>,
    pub test_accuracy: f64,
    pub test_weighted_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config: PipelineConfig,
    pub seeds: BTreeMap<String, u64>,
    pub dataset: DatasetSummary,
    pub selected_features: Vec<String>,
    pub models: Vec<ModelRecord>,
    pub best_model: String,
    /// Bundle files relative to the output directory, sorted.
    pub files: Vec<String>,
}

impl Versioned for Manifest {
    const FORMAT: &'static str = "foxforest.manifest";
    const VERSION: u32 = 1;
}

struct Bundle<'a> {
    root: &'a Path,
    files: Vec<String>,
}

impl Bundle<'_> {
    fn text(&mut self, rel: &str, text: &str) -> Result<()> {
        json::write_text(&self.root.join(rel), text)?;
        self.files.push(rel.to_string());
        Ok(())
    }

    fn json<T: Versioned>(&mut self, rel: &str, value: &T) -> Result<()> {
        json::write_file(&self.root.join(rel), value)?;
        self.files.push(rel.to_string());
        Ok(())
    }

    fn csv(&mut self, rel: &str, ds: &Dataset, label: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        write_csv(ds, &path, label)?;
        self.files.push(rel.to_string());
        Ok(())
    }
}

struct Prepared {
    train: Dataset,
    test: Dataset,
    ranking: GiniRanking,
    normalizer: NormalizerParams,
}

fn prepare(ds: &Dataset, cfg: &PipelineConfig) -> Result<Prepared> {
    let spec = SplitSpec::new(cfg.test_fraction, cfg.seed, cfg.stratified)?;
    let (train_idx, test_idx) = split_indices(ds, &spec).map_err(|e| e.at("split"))?;
    let importance = crate::forest::ForestConfig {
        n_trees: cfg.importance_trees,
        ..default_importance_forest(derived(cfg.seed, stage::IMPORTANCE))
    };
    let fit_on = match cfg.leakage {
        LeakageMode::Safe => ds.subset(&train_idx),
        LeakageMode::PaperOrder => ds.clone(),
    };
    let ranking = rank_features_gini(&fit_on, &importance).map_err(|e| e.at("rank features"))?;
    let selected = select_top_k(&fit_on, &ranking, cfg.top_k).map_err(|e| e.at("select features"))?;
    let normalizer = fit_normalizer(&selected, cfg.normalizer).map_err(|e| e.at("normalize"))?;
    let prepare = |idx: &[usize]| -> Result<Dataset> {
        let part = select_top_k(&ds.subset(idx), &ranking, cfg.top_k)?;
        apply_normalizer(&part, &normalizer)
    };
    Ok(Prepared {
        train: prepare(&train_idx).map_err(|e| e.at("normalize"))?,
        test: prepare(&test_idx).map_err(|e| e.at("normalize"))?,
        ranking,
        normalizer,
    })
}

struct Fitted {
    record: ModelRecord,
    model: Model,
    report: MetricsReport,
}

fn evaluate(name: String, config: ModelConfig, cv_score: Option<f64>, tuned: bool, p: &Prepared) -> Result<Fitted> {
    let model = config.fit(&p.train).map_err(|e| e.at("train"))?;
    let pred = model.predict(p.test.rows()).map_err(|e| e.at("evaluate"))?;
    let report = metrics_named(p.test.labels(), &pred, p.test.class_names()).map_err(|e| e.at("evaluate"))?;
    Ok(Fitted {
        record: ModelRecord {
            name,
            kind: config.kind(),
            tuned,
            config,
            cv_score,
            test_accuracy: report.accuracy,
            test_weighted_f1: report.weighted_f1,
        },
        model,
        report,
    })
}

/// Runs the whole workflow and writes the bundle under `out`.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<Manifest> {
    cfg.validate().map_err(|e| e.at("config"))?;
    let ds = match &cfg.input {
        Some(path) => load_dataset(path, &cfg.label_column),
        None => generate(&cfg.synthetic),
    }
    .map_err(|e| e.at("load"))?;

    let p = prepare(&ds, cfg)?;
    let mut fitted = Vec::new();
    let mut tunings = Vec::new();
    for &kind in &cfg.models {
        let t = tuning_seed(cfg.seed, kind);
        let cv = cv_settings(t, cfg);
        let baseline = kind.default_config(cv.model_seed());
        if cfg.tune {
            let result = tune(&p.train, &cfg.search_space(kind), &cfg.fox_config(t), &cv).map_err(|e| e.at("tune"))?;
            fitted.push(evaluate(
                format!("{kind}_baseline"),
                baseline,
                Some(result.baseline_cv_score),
                false,
                &p,
            )?);
            fitted.push(evaluate(
                format!("{kind}_fox"),
                result.best_config.clone(),
                Some(result.best_cv_score),
                true,
                &p,
            )?);
            tunings.push(result);
        } else {
            fitted.push(evaluate(format!("{kind}_baseline"), baseline, None, false, &p)?);
        }
    }

    // Highest test accuracy; the earliest model wins ties.
    let best = fitted
        .iter()
        .enumerate()
        .fold(0, |b, (i, f)| if f.report.accuracy > fitted[b].report.accuracy { i } else { b });
    let shap = ShapConfig {
        max_features_exact: cfg.shap.max_features_exact,
        permutations: cfg.shap.permutations,
        allow_sampling: true,
        seed: derived(cfg.seed, stage::SHAP),
    };
    let explanations = explain_rows(fitted[best].model.ensemble(), p.test.rows(), &shap).map_err(|e| e.at("explain"))?;
    let summary = summary_ranking(&explanations, p.test.feature_names()).map_err(|e| e.at("explain"))?;
    let shap_set = ExplanationSet {
        feature_names: p.test.feature_names().to_vec(),
        class_names: p.test.class_names().to_vec(),
        explanations,
    };

    write_bundle(out, cfg, &ds, &p, &fitted, &tunings, best, &shap_set, &summary).map_err(|e| e.at("write"))
}

#[allow(clippy::too_many_arguments)]
fn write_bundle(
    out: &Path,
    cfg: &PipelineConfig,
    ds: &Dataset,
    p: &Prepared,
    fitted: &[Fitted],
    tunings: &[TuneResult],
    best: usize,
    shap_set: &ExplanationSet,
    summary: &crate::explain::SummaryRanking,
) -> Result<Manifest> {
    let mut b = Bundle { root: out, files: Vec::new() };
    let label = &cfg.label_column;
    b.csv("data/train.csv", &p.train, label)?;
    b.csv("data/test.csv", &p.test, label)?;
    b.text("data/train.json", &(p.train.to_json()? + "\n"))?;
    b.text("data/test.json", &(p.test.to_json()? + "\n"))?;
    b.text("ranking.csv", &p.ranking.to_csv())?;
    b.json("ranking.json", &p.ranking)?;
    b.json("normalizer.json", &p.normalizer)?;

    for f in fitted {
        let name = &f.record.name;
        b.text(&format!("models/{name}.json"), &(f.model.to_json()? + "\n"))?;
        b.text(
            &format!("models/{name}.config.json"),
            &(serde_json::to_string_pretty(&f.record.config)? + "\n"),
        )?;
        b.json(&format!("metrics/{name}.json"), &f.report)?;
        b.text(&format!("metrics/{name}.txt"), &f.report.to_text())?;
        b.text(
            &format!("metrics/{name}_confusion.csv"),
            &f.report.confusion.to_csv(p.test.class_names()),
        )?;
    }
    let table = comparison_table(&fitted.iter().map(|f| (f.record.name.clone(), &f.report)).collect::<Vec<_>>());
    b.text("comparison.csv", &table.to_csv())?;
    b.json("comparison.json", &table)?;
    b.text("comparison.txt", &table.to_text())?;
    for t in tunings {
        b.json(&format!("tuning/{}.json", t.model_kind), t)?;
    }
    b.text("shap/values.csv", &shap_set.to_csv())?;
    b.json("shap/values.json", shap_set)?;
    b.text("shap/summary.csv", &summary.to_csv())?;
    b.json("shap/summary.json", summary)?;
    b.text(
        "shap/summary.txt",
        &format!(
            "mean |contribution| for {} on {} test rows\n\n{}",
            fitted[best].record.name,
            p.test.n_rows(),
            summary.to_text(cfg.shap.top_features)
        ),
    )?;

    let mut files = b.files;
    files.push("manifest.json".to_string());
    files.sort();
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        seeds: cfg.seeds(),
        dataset: DatasetSummary {
            n_rows: ds.n_rows(),
            n_features: ds.n_features(),
            class_names: ds.class_names().to_vec(),
            class_counts: class_distribution(ds),
            train_class_counts: class_distribution(&p.train),
            test_class_counts: class_distribution(&p.test),
        },
        selected_features: p.train.feature_names().to_vec(),
        models: fitted.iter().map(|f| f.record.clone()).collect(),
        best_model: fitted[best].record.name.clone(),
        files,
    };
    json::write_file(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
