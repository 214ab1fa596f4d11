//! Fit a random forest on a noisy XOR pattern, inspect its probabilities and
//! save it as versioned JSON.

use foxforest::data::Dataset;
use foxforest::forest::{fit_forest, ForestConfig, ForestModel};
use foxforest::json;

fn xor(n: usize) -> foxforest::Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let (a, b) = ((i % 2) as f64, ((i / 2) % 2) as f64);
        let jitter = (i as f64 * 0.618).fract() * 0.2 - 0.1;
        rows.push(vec![a + jitter, b - jitter]);
        labels.push((a != b) as usize);
    }
    Dataset::new(vec!["a".into(), "b".into()], vec!["same".into(), "different".into()], rows, labels)
}

fn main() -> foxforest::Result<()> {
    let ds = xor(40)?;
    let cfg = ForestConfig { n_trees: 50, seed: 1, ..Default::default() };
    let model = fit_forest(&ds, &cfg)?;

    let pred = model.predict(ds.rows())?;
    let correct = pred.iter().zip(ds.labels()).filter(|(p, y)| p == y).count();
    println!("training accuracy {}/{}", correct, ds.n_rows());
    for probe in [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] {
        println!("{probe:?} -> {:?}", model.predict_proba(&probe)?);
    }

    let text = json::to_json(&model)?;
    let back: ForestModel = json::from_json(&text)?;
    println!("\n{} trees, {} bytes of JSON, round trip exact: {}", model.trees.len(), text.len(), back == model);
    Ok(())
}
