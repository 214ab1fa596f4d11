//! Classical continuous test functions with their canonical domains.

use std::f64::consts::{E, PI};

use super::{Bounds, Objective};
use crate::error::{Error, Result};

pub const BENCHMARK_NAMES: [&str; 8] = [
    "sphere",
    "rosenbrock",
    "rastrigin",
    "ackley",
    "griewank",
    "schwefel_2_22",
    "zakharov",
    "levy",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Sphere,
    Rosenbrock,
    Rastrigin,
    Ackley,
    Griewank,
    Schwefel222,
    Zakharov,
    Levy,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: &'static str,
    kind: Kind,
    pub bounds: Bounds,
    /// Global minimum value.
    pub optimum: f64,
    /// Where the global minimum is attained.
    pub minimizer: Vec<f64>,
}

/// Looks up a test function by name in `dim` dimensions.
pub fn benchmark(name: &str, dim: usize) -> Result<Benchmark> {
    let (name, kind, lo, hi, at) = match name {
        "sphere" => ("sphere", Kind::Sphere, -100.0, 100.0, 0.0),
        "rosenbrock" => ("rosenbrock", Kind::Rosenbrock, -30.0, 30.0, 1.0),
        "rastrigin" => ("rastrigin", Kind::Rastrigin, -5.12, 5.12, 0.0),
        "ackley" => ("ackley", Kind::Ackley, -32.768, 32.768, 0.0),
        "griewank" => ("griewank", Kind::Griewank, -600.0, 600.0, 0.0),
        "schwefel_2_22" => ("schwefel_2_22", Kind::Schwefel222, -10.0, 10.0, 0.0),
        "zakharov" => ("zakharov", Kind::Zakharov, -5.0, 10.0, 0.0),
        "levy" => ("levy", Kind::Levy, -10.0, 10.0, 1.0),
        other => return Err(Error::UnknownBenchmark(other.to_string())),
    };
    if dim == 0 || (kind == Kind::Rosenbrock && dim < 2) {
        return Err(Error::param(format!("{name} needs a larger dimension than {dim}")));
    }
    Ok(Benchmark {
        name,
        kind,
        bounds: Bounds::uniform(dim, lo, hi)?,
        optimum: 0.0,
        minimizer: vec![at; dim],
    })
}

impl Benchmark {
    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self.kind {
            Kind::Sphere => x.iter().map(|v| v * v).sum(),
            Kind::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            Kind::Rastrigin => {
                10.0 * x.len() as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                        .sum::<f64>()
            }
            Kind::Ackley => {
                let n = x.len() as f64;
                let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
                let cos = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cos.exp() + 20.0 + E
            }
            Kind::Griewank => {
                let sum = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let prod: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                1.0 + sum - prod
            }
            Kind::Schwefel222 => {
                x.iter().map(|v| v.abs()).sum::<f64>() + x.iter().map(|v| v.abs()).product::<f64>()
            }
            Kind::Zakharov => {
                let sq: f64 = x.iter().map(|v| v * v).sum();
                let lin: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| 0.5 * (i + 1) as f64 * v)
                    .sum();
                sq + lin.powi(2) + lin.powi(4)
            }
            Kind::Levy => {
                let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
                let d = w.len();
                let head = (PI * w[0]).sin().powi(2);
                let body: f64 = w[..d - 1]
                    .iter()
                    .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
                    .sum();
                let last = w[d - 1];
                let tail = (last - 1.0).powi(2) * (1.0 + (2.0 * PI * last).sin().powi(2));
                head + body + tail
            }
        }
    }
}

impl Objective for Benchmark {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.value(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minima_are_attained() {
        for name in BENCHMARK_NAMES {
            for dim in [2, 10] {
                let b = benchmark(name, dim).unwrap();
                let v = b.value(&b.minimizer);
                assert!((v - b.optimum).abs() < 1e-12, "{name} d={dim}: {v}");
                assert!(b.bounds.contains(&b.minimizer));
            }
        }
    }

    #[test]
    fn rastrigin_unit_step() {
        let b = benchmark("rastrigin", 4).unwrap();
        assert!((b.value(&[1.0, 0.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_values_off_optimum() {
        let sphere = benchmark("sphere", 3).unwrap();
        assert_eq!(sphere.value(&[1.0, 2.0, 3.0]), 14.0);
        let rosen = benchmark("rosenbrock", 2).unwrap();
        assert_eq!(rosen.value(&[0.0, 0.0]), 1.0);
        let s222 = benchmark("schwefel_2_22", 2).unwrap();
        assert_eq!(s222.value(&[-2.0, 3.0]), 11.0);
        let zak = benchmark("zakharov", 2).unwrap();
        // sq = 2, lin = 0.5 + 1 = 1.5
        assert_eq!(zak.value(&[1.0, 1.0]), 2.0 + 2.25 + 5.0625);
    }

    #[test]
    fn sampled_values_are_non_negative() {
        for name in BENCHMARK_NAMES {
            let b = benchmark(name, 5).unwrap();
            for i in 0..50 {
                let t = i as f64 / 49.0;
                let x: Vec<f64> = b
                    .bounds
                    .lower()
                    .iter()
                    .zip(b.bounds.upper())
                    .enumerate()
                    .map(|(d, (lo, hi))| lo + (hi - lo) * ((t + 0.37 * d as f64) % 1.0))
                    .collect();
                assert!(b.value(&x) >= -1e-12, "{name}");
            }
        }
    }

    #[test]
    fn unknown_name_and_bad_dimension() {
        assert!(matches!(benchmark("nope", 3), Err(Error::UnknownBenchmark(_))));
        assert!(benchmark("rosenbrock", 1).is_err());
        assert!(benchmark("sphere", 0).is_err());
    }
}
