//! Rank features by forest Gini importance on the training split, keep the
//! top 50 and standardize them with statistics from the training rows only.

use foxforest::data::{split, SplitSpec};
use foxforest::preprocess::{
    apply_normalizer, default_importance_forest, fit_normalizer, rank_features_gini, select_top_k, NormalizerKind,
};
use foxforest::synth::{generate, SynthSpec};

fn main() -> foxforest::Result<()> {
    let cohort = generate(&SynthSpec::default())?;
    let (train, test) = split(&cohort, &SplitSpec::default())?;

    let ranking = rank_features_gini(&train, &default_importance_forest(0))?;
    println!("top 10 of {} features:", ranking.len());
    for (rank, &j) in ranking.top_k(10).iter().enumerate() {
        println!("{:>3}. {:<45} {:.5}", rank + 1, ranking.feature_names[j], ranking.scores[j]);
    }

    let train = select_top_k(&train, &ranking, 50)?;
    let test = select_top_k(&test, &ranking, 50)?;
    let params = fit_normalizer(&train, NormalizerKind::Zscore)?;
    let train = apply_normalizer(&train, &params)?;
    let test = apply_normalizer(&test, &params)?;

    let col = train.columns();
    let mean = col[0].iter().sum::<f64>() / col[0].len() as f64;
    println!("\nafter selection: train {:?}, test {:?}", (train.n_rows(), train.n_features()), (test.n_rows(), test.n_features()));
    println!("first selected column has training mean {mean:.2e}");
    Ok(())
}
