//! Tune both model kinds with FOX on the synthetic cohort and compare the
//! cross-validated scores against the untuned defaults.
//!
//!     cargo run --release --example tune_hyperparameters -- [pop] [iters]

use std::time::Instant;

use foxforest::data::{split, SplitSpec};
use foxforest::foxopt::FoxConfig;
use foxforest::model::ModelKind;
use foxforest::preprocess::{
    apply_normalizer, default_importance_forest, fit_normalizer, rank_features_gini, select_top_k, NormalizerKind,
};
use foxforest::synth::{generate, SynthSpec};
use foxforest::tune::{tune, CvSettings, SearchSpace};

fn main() -> foxforest::Result<()> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let pop_size = args.first().copied().unwrap_or(10);
    let max_iters = args.get(1).copied().unwrap_or(15);

    let cohort = generate(&SynthSpec::default())?;
    let (train, _test) = split(&cohort, &SplitSpec::default())?;
    let ranking = rank_features_gini(&train, &default_importance_forest(7))?;
    let train = select_top_k(&train, &ranking, 50)?;
    let train = apply_normalizer(&train, &fit_normalizer(&train, NormalizerKind::Zscore)?)?;

    for kind in ModelKind::ALL {
        let start = Instant::now();
        let fox = FoxConfig { pop_size, max_iters, seed: 11, ..Default::default() };
        let result = tune(&train, &SearchSpace::default_for(kind), &fox, &CvSettings::default())?;
        println!(
            "{kind:<6} baseline cv {:.3}  tuned cv {:.3}  evaluations {}  ({:.1}s)",
            result.baseline_cv_score,
            result.best_cv_score,
            result.evaluations,
            start.elapsed().as_secs_f64()
        );
        println!("       best config: {}", serde_json::to_string(&result.best_config)?);
    }
    Ok(())
}
