//! Tree-ensemble classification for small, wide tabular datasets.
//!
//! The crate covers the whole workflow from a CSV of pre-extracted features
//! to explained predictions:
//!
//! * [`data`]: CSV loading, class bookkeeping and stratified splits.
//! * [`preprocess`]: forest Gini importance ranking, top-k selection and
//!   z-score or min-max normalization.
//! * [`forest`] and [`boost`]: a random forest and a second-order gradient
//!   boosted classifier, both built on the shared [`tree`] grower.
//! * [`foxopt`]: the FOX metaheuristic, a random-search baseline and a set
//!   of classical test functions.
//! * [`tune`]: cross-validated hyperparameter search driven by FOX.
//! * [`explain`]: exact and sampled Shapley attributions for both ensembles.
//! * [`report`]: confusion matrices, weighted metrics and comparison tables.
//! * [`pipeline`] and [`cli`]: the end-to-end run and its command line.
//!
//! Every randomized step takes an explicit seed and draws from its own
//! derived stream, so results do not depend on the number of threads.
//! Models and reports serialize to versioned JSON that round-trips exactly.
//!
//! ```no_run
//! use foxforest::data::{load_csv, split, SplitSpec};
//! use foxforest::forest::{fit_forest, ForestConfig};
//! use foxforest::report::metrics_named;
//!
//! # fn main() -> foxforest::Result<()> {
//! let ds = load_csv("cohort.csv", "primary_site")?;
//! let (train, test) = split(&ds, &SplitSpec::default())?;
//! let model = fit_forest(&train, &ForestConfig::default())?;
//! let pred = model.predict(test.rows())?;
//! let report = metrics_named(test.labels(), &pred, test.class_names())?;
//! println!("{}", report.to_text());
//! # Ok(())
//! # }
//! ```

pub mod boost;
pub mod cli;
pub mod data;
pub mod error;
pub mod explain;
pub mod forest;
pub mod foxopt;
pub mod json;
pub mod math;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod synth;
pub mod tree;
pub mod tune;

pub use error::{Error, Result};
