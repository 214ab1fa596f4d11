//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's own split scanning, gradient or Shapley code.

#![allow(dead_code)]

use foxforest::data::Dataset;
use foxforest::tree::Node;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// 40 points in four tight clusters at the unit-square corners, labelled by
/// whether the coordinates differ.
pub fn xor40() -> Dataset {
    let mut r = rng(40);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40 {
        let (a, b) = ((i % 2) as f64, ((i / 2) % 2) as f64);
        rows.push(vec![a + r.random_range(-0.1..0.1), b + r.random_range(-0.1..0.1)]);
        labels.push((a != b) as usize);
    }
    Dataset::new(names("x", 2), names("c", 2), rows, labels).unwrap()
}

/// Small dataset whose values come from a coarse grid half the time, so
/// ties are common. At least two classes are always present.
pub fn random_dataset(r: &mut ChaCha8Rng, max_rows: usize, max_features: usize, max_classes: usize) -> Dataset {
    let n = r.random_range(4..=max_rows);
    let m = r.random_range(1..=max_features);
    let k = r.random_range(2..=max_classes);
    let grid = r.random_bool(0.5);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| if grid { r.random_range(0..5) as f64 } else { r.random_range(-1.0..1.0) })
                .collect()
        })
        .collect();
    let mut labels: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
    labels[0] = 0;
    labels[1] = 1;
    Dataset::new(names("f", m), names("c", k), rows, labels).unwrap()
}

/// Every (feature, midpoint) split of `rows`, as (feature, threshold).
pub fn all_midpoints(ds: &Dataset, rows: &[usize]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for j in 0..ds.n_features() {
        let mut v: Vec<f64> = rows.iter().map(|&i| ds.row(i)[j]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        for w in v.windows(2) {
            out.push((j, (w[0] + w[1]) / 2.0));
        }
    }
    out
}

fn partition(ds: &Dataset, rows: &[usize], feature: usize, threshold: f64) -> (Vec<usize>, Vec<usize>) {
    rows.iter().partition(|&&i| ds.row(i)[feature] <= threshold)
}

fn gini(ds: &Dataset, rows: &[usize]) -> f64 {
    let mut counts = vec![0.0; ds.n_classes()];
    for &i in rows {
        counts[ds.labels()[i]] += 1.0;
    }
    let n = rows.len() as f64;
    1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
}

/// Sample-weighted Gini decrease of splitting `rows` at (feature, threshold).
pub fn gini_decrease(ds: &Dataset, rows: &[usize], feature: usize, threshold: f64) -> f64 {
    let (l, r) = partition(ds, rows, feature, threshold);
    let n = rows.len() as f64;
    n * gini(ds, rows) - l.len() as f64 * gini(ds, &l) - r.len() as f64 * gini(ds, &r)
}

/// Walks `tree` with the rows that reach each node and reports the first
/// split whose impurity decrease falls short of the exhaustive maximum.
pub fn check_gini_splits(ds: &Dataset, tree: &Node<Vec<f64>>, rows: &[usize]) -> Result<usize, String> {
    match tree {
        Node::Leaf { .. } => Ok(0),
        Node::Split { feature, threshold, left, right, .. } => {
            let chosen = gini_decrease(ds, rows, *feature, *threshold);
            let best = all_midpoints(ds, rows)
                .into_iter()
                .map(|(j, t)| gini_decrease(ds, rows, j, t))
                .fold(f64::NEG_INFINITY, f64::max);
            if chosen < best - 1e-9 {
                return Err(format!("split on f{feature} at {threshold}: decrease {chosen} < best {best}"));
            }
            let (l, r) = partition(ds, rows, *feature, *threshold);
            Ok(1 + check_gini_splits(ds, left, &l)? + check_gini_splits(ds, right, &r)?)
        }
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Per-row (g, h) for class `k` at the given logits, from the softmax
/// derivative worked out by hand.
pub fn class_gradients(logits: &[Vec<f64>], labels: &[usize], k: usize) -> (Vec<f64>, Vec<f64>) {
    logits
        .iter()
        .zip(labels)
        .map(|(z, &y)| {
            let p = softmax(z)[k];
            (p - if y == k { 1.0 } else { 0.0 }, p * (1.0 - p))
        })
        .unzip()
}

pub fn newton_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let (g, h) = (gl + gr, hl + hr);
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)) - gamma
}

fn gain_at(ds: &Dataset, rows: &[usize], grad: &[f64], hess: &[f64], feature: usize, threshold: f64, lambda: f64) -> f64 {
    let (l, r) = partition(ds, rows, feature, threshold);
    let sum = |s: &[usize], v: &[f64]| s.iter().map(|&i| v[i]).sum::<f64>();
    newton_gain(sum(&l, grad), sum(&l, hess), sum(&r, grad), sum(&r, hess), lambda, 0.0)
}

/// Same walk as [`check_gini_splits`] for a boosting tree, scoring splits
/// by Newton gain under the given per-row gradients.
pub fn check_gain_splits(
    ds: &Dataset,
    tree: &Node<f64>,
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    lambda: f64,
) -> Result<usize, String> {
    match tree {
        Node::Leaf { .. } => Ok(0),
        Node::Split { feature, threshold, left, right, .. } => {
            let chosen = gain_at(ds, rows, grad, hess, *feature, *threshold, lambda);
            let best = all_midpoints(ds, rows)
                .into_iter()
                .map(|(j, t)| gain_at(ds, rows, grad, hess, j, t, lambda))
                .fold(f64::NEG_INFINITY, f64::max);
            if chosen < best - 1e-9 * (1.0 + best.abs()) {
                return Err(format!("split on f{feature} at {threshold}: gain {chosen} < best {best}"));
            }
            let (l, r) = partition(ds, rows, *feature, *threshold);
            Ok(1 + check_gain_splits(ds, left, &l, grad, hess, lambda)?
                + check_gain_splits(ds, right, &r, grad, hess, lambda)?)
        }
    }
}

/// Mean over cover-weighted descents: features in `known` follow the row,
/// others average both children by their training cover.
fn tree_expectation<V: Clone>(node: &Node<V>, row: &[f64], known: u32, out: &mut dyn FnMut(&V, f64), weight: f64) {
    match node {
        Node::Leaf { value, .. } => out(value, weight),
        Node::Split { feature, threshold, left, right, .. } => {
            if known >> feature & 1 == 1 {
                let next = if row[*feature] <= *threshold { left } else { right };
                tree_expectation(next, row, known, out, weight);
            } else {
                let (cl, cr) = (left.cover() as f64, right.cover() as f64);
                tree_expectation(left, row, known, out, weight * cl / (cl + cr));
                tree_expectation(right, row, known, out, weight * cr / (cl + cr));
            }
        }
    }
}

/// Brute-force characteristic function of a fitted ensemble, in the
/// ensemble's additive space.
pub enum Game<'a> {
    Forest(&'a foxforest::forest::ForestModel),
    Gbt(&'a foxforest::boost::GbtModel),
}

impl Game<'_> {
    pub fn value(&self, row: &[f64], known: u32) -> Vec<f64> {
        match self {
            Game::Forest(m) => {
                let mut acc = vec![0.0; m.n_classes];
                for t in &m.trees {
                    tree_expectation(t, row, known, &mut |v: &Vec<f64>, w| {
                        for (a, x) in acc.iter_mut().zip(v) {
                            *a += w * x;
                        }
                    }, 1.0);
                }
                acc.iter().map(|a| a / m.trees.len() as f64).collect()
            }
            Game::Gbt(m) => {
                let mut acc = m.base_score.clone();
                for round in &m.trees {
                    for (k, t) in round.iter().enumerate() {
                        tree_expectation(t, row, known, &mut |v: &f64, w| acc[k] += w * v, 1.0);
                    }
                }
                acc
            }
        }
    }

    /// Shapley values by the subset formula: `phi[j][k]`.
    pub fn shapley(&self, row: &[f64], n: usize) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = (0..1u32 << n).map(|s| self.value(row, s)).collect();
        let fact = |i: usize| (1..=i).map(|v| v as f64).product::<f64>();
        let n_classes = values[0].len();
        (0..n)
            .map(|j| {
                let mut phi = vec![0.0; n_classes];
                for s in 0..1u32 << n {
                    if s >> j & 1 == 1 {
                        continue;
                    }
                    let size = s.count_ones() as usize;
                    let w = fact(size) * fact(n - size - 1) / fact(n);
                    for k in 0..n_classes {
                        phi[k] += w * (values[(s | 1 << j) as usize][k] - values[s as usize][k]);
                    }
                }
                phi
            })
            .collect()
    }
}

/// Multi-class cross-entropy of one example, computed stably.
pub fn cross_entropy(z: &[f64], y: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln() - z[y]
}

/// Central-difference first and second derivatives of the loss along
/// coordinate `k`, sharpened with one Richardson step.
pub fn finite_difference(z: &[f64], y: usize, k: usize) -> (f64, f64) {
    let at = |d: f64| {
        let mut w = z.to_vec();
        w[k] += d;
        cross_entropy(&w, y)
    };
    let diffs = |e: f64| {
        let (p, m, c) = (at(e), at(-e), at(0.0));
        ((p - m) / (2.0 * e), (p - 2.0 * c + m) / (e * e))
    };
    let (g1, h1) = diffs(1e-2);
    let (g2, h2) = diffs(5e-3);
    ((4.0 * g2 - g1) / 3.0, (4.0 * h2 - h1) / 3.0)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}
