//! Fit the gradient-boosted classifier on the synthetic cohort and follow
//! the training loss round by round.

use foxforest::boost::{fit_gbt_traced, GbtConfig};
use foxforest::data::{split, SplitSpec};
use foxforest::report::metrics_named;
use foxforest::synth::{generate, SynthSpec};

fn main() -> foxforest::Result<()> {
    let cohort = generate(&SynthSpec::default())?;
    let (train, test) = split(&cohort, &SplitSpec::default())?;
    let cfg = GbtConfig { n_rounds: 60, learning_rate: 0.2, max_depth: 3, seed: 5, ..Default::default() };
    let fit = fit_gbt_traced(&train, &cfg)?;

    for (round, loss) in fit.train_loss.iter().enumerate().step_by(10) {
        println!("round {round:>3}: mean cross-entropy {loss:.4}");
    }
    let pred = fit.model.predict(test.rows())?;
    let report = metrics_named(test.labels(), &pred, test.class_names())?;
    println!("\nheld-out metrics\n{}", report.to_text());
    Ok(())
}
