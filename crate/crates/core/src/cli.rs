//! Command-line interface. Exit codes: 0 on success, 1 when a stage fails,
//! 2 on usage errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::write_csv;
use crate::error::{Error, Result};
use crate::explain::{explain_rows, summary_ranking, ExplanationSet, ShapConfig};
use crate::foxopt::{compare_optimizers, Fox, FoxConfig, Optimizer, RandomSearch, BENCHMARK_NAMES};
use crate::json;
use crate::model::{Model, ModelConfig, ModelKind};
use crate::pipeline::{load_dataset, run_pipeline, LeakageMode, PipelineConfig};
use crate::preprocess::{default_importance_forest, rank_features_gini, NormalizerKind};
use crate::report::metrics_named;
use crate::synth::{generate, SynthSpec};
use crate::tune::{tune, CvMetric, CvSettings, SearchSpace};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "FOXFOREST_THREADS";

#[derive(Debug, Parser)]
#[command(name = "foxforest", version, about = "Tree-ensemble classification with FOX tuning and Shapley explanations")]
pub struct Cli {
    /// Worker threads (default: $FOXFOREST_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic demo cohort as CSV.
    GenerateData(GenerateArgs),
    /// Rank features by forest Gini importance.
    RankFeatures(RankArgs),
    /// Fit one model and save it as JSON.
    Train(TrainArgs),
    /// Tune one model kind with FOX over cross-validated accuracy.
    Tune(TuneArgs),
    /// Score a saved model on a labelled dataset.
    Evaluate(EvaluateArgs),
    /// Shapley attributions of a saved model's predictions.
    Explain(ExplainArgs),
    /// Compare FOX with random search on classical test functions.
    BenchmarkFox(BenchmarkArgs),
    /// Run the full pipeline and write an artifact bundle.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset as CSV, or dataset JSON when the name ends in .json.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the CSV label column.
    #[arg(long, default_value = "primary_site")]
    pub label: String,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "primary_site")]
    pub label: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub features: Option<usize>,
    #[arg(long)]
    pub informative: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of top features to print.
    #[arg(long, default_value_t = 50)]
    pub top_k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trees in the importance forest.
    #[arg(long, default_value_t = 200)]
    pub trees: usize,
    #[arg(long, default_value = "ranking.csv")]
    pub out: PathBuf,
    /// Also write the ranking as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model kind; defaults to the kind in --config, else forest.
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Model configuration JSON (`{"kind": "forest", ...}`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Accuracy,
    WeightedF1,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "forest")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 20)]
    pub pop: usize,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "accuracy")]
    pub metric: MetricArg,
    /// Search space JSON overriding the default ranges.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also fit the best configuration on the input and save it.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Metrics report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Confusion matrix CSV.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Largest feature count solved exactly.
    #[arg(long, default_value_t = 15)]
    pub max_exact: usize,
    /// Permutations per row beyond the exact cap.
    #[arg(long, default_value_t = 200)]
    pub permutations: usize,
    /// Fail instead of sampling beyond the exact cap.
    #[arg(long)]
    pub exact_only: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Features shown in the text summary.
    #[arg(long, default_value_t = 20)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Comma-separated test functions (default: all).
    #[arg(long, value_delimiter = ',')]
    pub functions: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    #[arg(long, default_value_t = 30)]
    pub pop: usize,
    #[arg(long, default_value_t = 499)]
    pub iters: usize,
    /// Number of seeds, run as 0, 1, ..
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value = "fox_benchmark.csv")]
    pub out: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Pipeline config JSON, or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: the config's, else ./foxforest-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Input CSV; the synthetic cohort is used when neither this nor the
    /// config names one.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub normalizer: Option<NormalizerKind>,
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<ModelKind>>,
    /// Fit baselines only.
    #[arg(long)]
    pub no_tune: bool,
    /// Fit feature ranking and normalization before splitting.
    #[arg(long)]
    pub paper_order: bool,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let threads = cli
        .threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::GenerateData(a) => generate_data(a),
        Command::RankFeatures(a) => rank_features(a),
        Command::Train(a) => train(a),
        Command::Tune(a) => tune_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Explain(a) => explain(a),
        Command::BenchmarkFox(a) => benchmark(a),
        Command::Run(a) => run_cmd(a),
    }
}

fn load(data: &DataArgs) -> Result<crate::data::Dataset> {
    load_dataset(&data.input, &data.label).map_err(|e| e.at("load"))
}

fn generate_data(a: GenerateArgs) -> Result<()> {
    let base = SynthSpec::default();
    let spec = SynthSpec {
        seed: a.seed.unwrap_or(base.seed),
        n_features: a.features.unwrap_or(base.n_features),
        n_informative: a.informative.unwrap_or(base.n_informative),
        separation: a.separation.unwrap_or(base.separation),
        ..base
    };
    let ds = generate(&spec).map_err(|e| e.at("generate"))?;
    write_csv(&ds, &a.out, &a.label).map_err(|e| e.at("write"))?;
    println!("wrote {} rows x {} features to {}", ds.n_rows(), ds.n_features(), a.out.display());
    Ok(())
}

fn rank_features(a: RankArgs) -> Result<()> {
    let ds = load(&a.data)?;
    let cfg = crate::forest::ForestConfig {
        n_trees: a.trees,
        ..default_importance_forest(a.seed)
    };
    let ranking = rank_features_gini(&ds, &cfg).map_err(|e| e.at("rank features"))?;
    json::write_text(&a.out, &ranking.to_csv()).map_err(|e| e.at("write"))?;
    if let Some(path) = &a.json {
        json::write_file(path, &ranking).map_err(|e| e.at("write"))?;
    }
    for (rank, &j) in ranking.top_k(a.top_k).iter().enumerate() {
        println!("{:>4}  {:<50} {:.6}", rank + 1, ranking.feature_names[j], ranking.scores[j]);
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let ds = load(&a.data)?;
    let mut cfg = match &a.config {
        Some(path) => serde_json::from_str::<ModelConfig>(&json::read_text(path)?).map_err(|e| Error::from(e).at("config"))?,
        None => a.model.unwrap_or(ModelKind::Forest).default_config(0),
    };
    if let Some(kind) = a.model {
        if kind != cfg.kind() {
            return Err(Error::param(format!("--model {kind} conflicts with a {} config", cfg.kind())).at("config"));
        }
    }
    if let Some(seed) = a.seed {
        cfg = cfg.with_seed(seed);
    }
    let model = cfg.fit(&ds).map_err(|e| e.at("train"))?;
    model.write(&a.out).map_err(|e| e.at("write"))?;
    println!("trained {} on {} rows; saved to {}", cfg.kind(), ds.n_rows(), a.out.display());
    Ok(())
}

fn tune_cmd(a: TuneArgs) -> Result<()> {
    let ds = load(&a.data)?;
    let space = match &a.space {
        Some(path) => json::read_file::<SearchSpace>(path)
            .or_else(|_| Ok::<_, Error>(serde_json::from_str(&json::read_text(path)?)?))
            .map_err(|e| e.at("config"))?,
        None => SearchSpace::default_for(a.model),
    };
    let fox = FoxConfig {
        pop_size: a.pop,
        max_iters: a.iters,
        seed: a.seed,
        ..Default::default()
    };
    let cv = CvSettings {
        folds: a.folds,
        seed: a.seed,
        metric: match a.metric {
            MetricArg::Accuracy => CvMetric::Accuracy,
            MetricArg::WeightedF1 => CvMetric::WeightedF1,
        },
    };
    let result = tune(&ds, &space, &fox, &cv).map_err(|e| e.at("tune"))?;
    json::write_file(&a.out, &result).map_err(|e| e.at("write"))?;
    println!(
        "{}: baseline cv {:.4}, tuned cv {:.4} ({} evaluations){}",
        result.model_kind,
        result.baseline_cv_score,
        result.best_cv_score,
        result.evaluations,
        if result.improved { "" } else { "; baseline kept" }
    );
    println!("best config: {}", serde_json::to_string(&result.best_config)?);
    if let Some(path) = &a.model_out {
        let model = result.best_config.fit(&ds).map_err(|e| e.at("train"))?;
        model.write(path).map_err(|e| e.at("write"))?;
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let ds = load(&a.data)?;
    let model = Model::read(&a.model).map_err(|e| e.at("load model"))?;
    let pred = model.predict(ds.rows()).map_err(|e| e.at("evaluate"))?;
    let report = metrics_named(ds.labels(), &pred, ds.class_names()).map_err(|e| e.at("evaluate"))?;
    if let Some(path) = &a.out {
        json::write_file(path, &report).map_err(|e| e.at("write"))?;
    }
    if let Some(path) = &a.confusion {
        json::write_text(path, &report.confusion.to_csv(ds.class_names())).map_err(|e| e.at("write"))?;
    }
    print!("{}", report.to_text());
    Ok(())
}

fn explain(a: ExplainArgs) -> Result<()> {
    let ds = load(&a.data)?;
    let model = Model::read(&a.model).map_err(|e| e.at("load model"))?;
    let cfg = ShapConfig {
        max_features_exact: a.max_exact,
        permutations: a.permutations,
        allow_sampling: !a.exact_only,
        seed: a.seed,
    };
    let explanations = explain_rows(model.ensemble(), ds.rows(), &cfg).map_err(|e| e.at("explain"))?;
    let summary = summary_ranking(&explanations, ds.feature_names()).map_err(|e| e.at("explain"))?;
    let set = ExplanationSet {
        feature_names: ds.feature_names().to_vec(),
        class_names: ds.class_names().to_vec(),
        explanations,
    };
    let out = |name: &str| a.out_dir.join(name);
    let write = || -> Result<()> {
        json::write_text(&out("values.csv"), &set.to_csv())?;
        json::write_file(&out("values.json"), &set)?;
        json::write_text(&out("summary.csv"), &summary.to_csv())?;
        json::write_file(&out("summary.json"), &summary)?;
        json::write_text(&out("summary.txt"), &summary.to_text(a.top))
    };
    write().map_err(|e| e.at("write"))?;
    print!("{}", summary.to_text(a.top));
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let names: Vec<&str> = if a.functions.is_empty() {
        BENCHMARK_NAMES.to_vec()
    } else {
        a.functions.iter().map(String::as_str).collect()
    };
    let fox = Fox {
        pop_size: a.pop,
        ..Default::default()
    };
    let budget = a.pop * (a.iters + 1);
    let optimizers: [&dyn Optimizer; 2] = [&fox, &RandomSearch];
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let table = compare_optimizers(&names, &optimizers, &seeds, a.dim, budget).map_err(|e| e.at("benchmark"))?;
    json::write_text(&a.out, &table.to_csv()).map_err(|e| e.at("write"))?;
    if let Some(path) = &a.json {
        json::write_file(path, &table).map_err(|e| e.at("write"))?;
    }
    print!("{}", table.to_text());
    let wins = table.wins("fox", "random_search");
    println!("fox has the lower median on {}/{} functions", wins.len(), names.len());
    Ok(())
}

fn run_cmd(a: RunArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => PipelineConfig::read(path).map_err(|e| e.at("config"))?,
        None => PipelineConfig::default(),
    };
    if a.input.is_some() {
        cfg.input = a.input;
    }
    if let Some(v) = a.label {
        cfg.label_column = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.top_k {
        cfg.top_k = v;
    }
    if let Some(v) = a.normalizer {
        cfg.normalizer = v;
    }
    if let Some(v) = a.models {
        cfg.models = v;
    }
    if a.no_tune {
        cfg.tune = false;
    }
    if a.paper_order {
        cfg.leakage = LeakageMode::PaperOrder;
    }
    if let Some(v) = a.pop {
        cfg.fox_pop_size = v;
    }
    if let Some(v) = a.iters {
        cfg.fox_max_iters = v;
    }
    if let Some(v) = a.folds {
        cfg.cv_folds = v;
    }
    let out = a
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("foxforest-out"));
    let manifest = run_pipeline(&cfg, &out)?;
    print_summary(&manifest, &out);
    Ok(())
}

fn print_summary(m: &crate::pipeline::Manifest, out: &Path) {
    println!(
        "{} rows, {} features -> {} selected; {} train / {} test",
        m.dataset.n_rows,
        m.dataset.n_features,
        m.selected_features.len(),
        m.dataset.train_class_counts.iter().sum::<usize>(),
        m.dataset.test_class_counts.iter().sum::<usize>()
    );
    println!("{:<16} {:>8} {:>9} {:>8}", "model", "cv", "accuracy", "f1");
    for r in &m.models {
        let cv = r.cv_score.map_or("-".to_string(), |s| format!("{s:.3}"));
        println!("{:<16} {:>8} {:>9.3} {:>8.3}", r.name, cv, r.test_accuracy, r.test_weighted_f1);
    }
    println!("best: {}; bundle written to {}", m.best_model, out.display());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run(["foxforest", "--bogus"]), 2);
        assert_eq!(run(["foxforest", "train", "--input"]), 2);
        assert_eq!(run(["foxforest", "benchmark-fox", "--dim", "ten"]), 2);
    }

    #[test]
    fn component_errors_exit_with_one() {
        assert_eq!(run(["foxforest", "evaluate", "--input", "/nonexistent.csv", "--model", "/nope.json"]), 1);
        assert_eq!(run(["foxforest", "benchmark-fox", "--functions", "nope", "--seeds", "3", "--pop", "4", "--iters", "1"]), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
