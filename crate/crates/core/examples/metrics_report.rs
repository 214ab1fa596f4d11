//! Confusion matrix, per-class and weighted metrics, and a side-by-side
//! comparison of two sets of predictions.

use foxforest::report::{comparison_table, metrics_named};

fn main() -> foxforest::Result<()> {
    let classes: Vec<String> = ["NSCLC", "Breast", "Melanoma"].map(String::from).to_vec();
    let truth = [0, 0, 0, 0, 1, 1, 1, 2, 2, 0];
    let first = [0, 0, 1, 0, 1, 1, 0, 2, 1, 0];
    let second = [0, 0, 0, 0, 1, 1, 1, 2, 0, 0];

    let a = metrics_named(&truth, &first, &classes)?;
    let b = metrics_named(&truth, &second, &classes)?;
    println!("{}", a.to_text());
    print!("{}", a.confusion.to_csv(&classes));

    let table = comparison_table(&[("first".to_string(), &a), ("second".to_string(), &b)]);
    println!("\n{}", table.to_text());
    print!("{}", table.to_csv());
    Ok(())
}
