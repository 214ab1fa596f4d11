use serde::{Deserialize, Serialize};

use super::{benchmark, Optimizer};
use crate::error::{Error, Result};
use crate::json::Versioned;
use crate::math::{median, quantile};

/// Summary of one optimizer's best fitness on one benchmark across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub benchmark: String,
    pub optimizer: String,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    /// Best fitness per seed, in seed order.
    pub runs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub dim: usize,
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<ComparisonRow>,
}

impl Versioned for ComparisonTable {
    const FORMAT: &'static str = "foxforest.optimizer_comparison";
    const VERSION: u32 = 1;
}

/// Runs every optimizer on every benchmark once per seed at the same budget.
pub fn compare_optimizers(
    names: &[&str],
    optimizers: &[&dyn Optimizer],
    seeds: &[u64],
    dim: usize,
    budget: usize,
) -> Result<ComparisonTable> {
    if names.is_empty() {
        return Err(Error::param("at least one benchmark is required"));
    }
    if optimizers.len() < 2 {
        return Err(Error::param("at least two optimizers are required"));
    }
    if seeds.len() < 3 {
        return Err(Error::param("at least three seeds are required"));
    }
    let mut rows = Vec::with_capacity(names.len() * optimizers.len());
    for name in names {
        let bench = benchmark(name, dim)?;
        for opt in optimizers {
            let runs = seeds
                .iter()
                .map(|&seed| {
                    opt.minimize(&bench, &bench.bounds, budget, seed)
                        .map(|r| r.best_fitness)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (q1, q3) = (quantile(&runs, 0.25), quantile(&runs, 0.75));
            rows.push(ComparisonRow {
                benchmark: bench.name.to_string(),
                optimizer: opt.name(),
                median: median(&runs),
                q1,
                q3,
                iqr: q3 - q1,
                runs,
            });
        }
    }
    Ok(ComparisonTable {
        dim,
        budget,
        seeds: seeds.to_vec(),
        rows,
    })
}

impl ComparisonTable {
    pub fn row(&self, benchmark: &str, optimizer: &str) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.benchmark == benchmark && r.optimizer == optimizer)
    }

    /// Benchmarks on which `a` has a strictly lower median than `b`.
    pub fn wins(&self, a: &str, b: &str) -> Vec<String> {
        let mut out = Vec::new();
        for row in self.rows.iter().filter(|r| r.optimizer == a) {
            if let Some(other) = self.row(&row.benchmark, b) {
                if row.median < other.median {
                    out.push(row.benchmark.clone());
                }
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("benchmark,optimizer,median,q1,q3,iqr\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e}\n",
                r.benchmark, r.optimizer, r.median, r.q1, r.q3, r.iqr
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "dim {}  budget {}  seeds {}\n{:<15} {:<15} {:>12} {:>12}\n",
            self.dim,
            self.budget,
            self.seeds.len(),
            "benchmark",
            "optimizer",
            "median",
            "iqr"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<15} {:<15} {:>12.4e} {:>12.4e}\n",
                r.benchmark, r.optimizer, r.median, r.iqr
            ));
        }
        out
    }
}
