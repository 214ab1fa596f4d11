//! Write the synthetic cohort to CSV, load it back and make a stratified
//! 80/20 split.
//!
//!     cargo run --example load_and_split -- [path/to/data.csv label_column]

use foxforest::data::{class_distribution, load_csv, split, write_csv, SplitSpec};
use foxforest::synth::{generate, SynthSpec};

fn main() -> foxforest::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let ds = match args.as_slice() {
        [path, label] => load_csv(path, label)?,
        _ => {
            let dir = std::env::temp_dir().join("foxforest-example");
            std::fs::create_dir_all(&dir).expect("temp dir");
            let path = dir.join("cohort.csv");
            write_csv(&generate(&SynthSpec::default())?, &path, "primary_site")?;
            println!("wrote synthetic cohort to {}", path.display());
            load_csv(&path, "primary_site")?
        }
    };
    println!("{} rows, {} features, {} classes", ds.n_rows(), ds.n_features(), ds.n_classes());

    let (train, test) = split(&ds, &SplitSpec::default())?;
    let (all, tr, te) = (class_distribution(&ds), class_distribution(&train), class_distribution(&test));
    println!("\n{:<12} {:>5} {:>6} {:>5}", "class", "all", "train", "test");
    for (k, name) in ds.class_names().iter().enumerate() {
        println!("{name:<12} {:>5} {:>6} {:>5}", all[k], tr[k], te[k]);
    }
    Ok(())
}
