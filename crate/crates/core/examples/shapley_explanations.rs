//! Exact Shapley attributions on a small feature set, then sampled ones on
//! the full top-50 selection.

use foxforest::data::{split, SplitSpec};
use foxforest::explain::{explain_rows, shapley_values, summary_ranking, ShapConfig};
use foxforest::forest::{fit_forest, ForestConfig};
use foxforest::preprocess::{default_importance_forest, rank_features_gini, select_top_k};
use foxforest::synth::{generate, SynthSpec};

fn main() -> foxforest::Result<()> {
    let cohort = generate(&SynthSpec::default())?;
    let (train, test) = split(&cohort, &SplitSpec::default())?;
    let ranking = rank_features_gini(&train, &default_importance_forest(0))?;

    // Eight features: every coalition is enumerated.
    let small = select_top_k(&train, &ranking, 8)?;
    let model = fit_forest(&small, &ForestConfig { seed: 3, ..Default::default() })?;
    let row = select_top_k(&test, &ranking, 8)?.row(0).to_vec();
    let e = shapley_values(&model, &row, &ShapConfig::default())?;
    let k = test.labels()[0];
    println!("row 0, class {} ({:?} mode)", test.class_names()[k], e.method);
    println!("  base {:.4}", e.base_value[k]);
    for (name, c) in small.feature_names().iter().zip(&e.contributions) {
        println!("  {name:<45} {:+.4}", c[k]);
    }
    println!("  output {:.4}, efficiency gap {:.1e}", e.predicted_output[k], e.efficiency_gap());

    // Fifty features: permutation sampling.
    let train50 = select_top_k(&train, &ranking, 50)?;
    let test50 = select_top_k(&test, &ranking, 50)?;
    let model = fit_forest(&train50, &ForestConfig { seed: 3, ..Default::default() })?;
    let cfg = ShapConfig { permutations: 100, seed: 9, ..Default::default() };
    let all = explain_rows(&model, test50.rows(), &cfg)?;
    let summary = summary_ranking(&all, test50.feature_names())?;
    println!("\nmean |contribution| over {} test rows\n{}", test50.n_rows(), summary.to_text(10));
    Ok(())
}
