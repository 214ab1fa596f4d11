//! Compare FOX against random search on the classical test functions at an
//! equal evaluation budget.
//!
//!     cargo run --release --example fox_benchmarks -- [dim] [budget] [seeds]

use foxforest::foxopt::{compare_optimizers, Fox, Optimizer, RandomSearch, BENCHMARK_NAMES};

fn main() -> foxforest::Result<()> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let dim = args.first().copied().unwrap_or(10);
    let budget = args.get(1).copied().unwrap_or(15_000);
    let n_seeds = args.get(2).copied().unwrap_or(10) as u64;

    let fox = Fox::default();
    let optimizers: [&dyn Optimizer; 2] = [&fox, &RandomSearch];
    let seeds: Vec<u64> = (0..n_seeds).collect();
    let table = compare_optimizers(&BENCHMARK_NAMES, &optimizers, &seeds, dim, budget)?;

    print!("{}", table.to_text());
    let wins = table.wins("fox", "random_search");
    println!("\nfox wins on {}/{}: {}", wins.len(), BENCHMARK_NAMES.len(), wins.join(", "));
    Ok(())
}
