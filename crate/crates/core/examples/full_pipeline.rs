//! The whole workflow on the synthetic cohort at a small tuning budget:
//! selection, normalization, baseline and FOX-tuned models, evaluation and
//! Shapley summary, written to a bundle directory.
//!
//!     cargo run --release --example full_pipeline -- [output_dir]

use std::path::PathBuf;

use foxforest::pipeline::{run_pipeline, PipelineConfig};

fn main() -> foxforest::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("foxforest-pipeline"));
    let cfg = PipelineConfig {
        fox_pop_size: 8,
        fox_max_iters: 8,
        ..Default::default()
    };
    let manifest = run_pipeline(&cfg, &out)?;

    println!("{:<16} {:>8} {:>9}", "model", "cv", "accuracy");
    for m in &manifest.models {
        println!("{:<16} {:>8.3} {:>9.3}", m.name, m.cv_score.unwrap_or(f64::NAN), m.test_accuracy);
    }
    println!("\nbest model: {}", manifest.best_model);
    println!("{} files written under {}", manifest.files.len(), out.display());
    print!("\n{}", std::fs::read_to_string(out.join("shap/summary.txt")).expect("summary written"));
    Ok(())
}
