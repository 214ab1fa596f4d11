//! Shapley-value attributions for tree ensembles.
//!
//! The value of a feature coalition `S` is the ensemble's expected output
//! when only the features in `S` are observed. Each tree is walked from the
//! root: splits on observed features follow the row, splits on unobserved
//! features average both children weighted by their training cover.
//!
//! Attributions live in the ensemble's additive space: class probabilities
//! for forests and raw logits for boosted models, where per-tree outputs
//! sum before the softmax. In that space the contributions of one row add up
//! to `predicted_output - base_value`.
//!
//! Small feature sets are solved exactly by enumerating every coalition;
//! larger ones fall back to averaging marginal contributions over random
//! feature permutations.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::GbtModel;
use crate::error::{Error, Result};
use crate::forest::{check_row, ForestModel};
use crate::json::Versioned;
use crate::math::softmax;
use crate::preprocess::csv_field;
use crate::rng;
use crate::tree::Node;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSpace {
    Probability,
    Logit,
}

/// A fitted ensemble whose per-class output is a sum or mean of tree outputs.
pub trait TreeEnsemble: Sync {
    fn n_features(&self) -> usize;

    fn n_classes(&self) -> usize;

    fn output_space(&self) -> OutputSpace;

    /// Expected additive output when only features with `known[j]` set are
    /// observed. The row is assumed valid.
    fn expected_raw(&self, row: &[f64], known: &[bool]) -> Vec<f64>;

    /// Maps an additive output to class probabilities.
    fn to_probability(&self, raw: &[f64]) -> Vec<f64>;
}

fn expect_node<V>(node: &Node<V>, row: &[f64], known: &[bool], weight: f64, visit: &mut impl FnMut(&V, f64)) {
    match node {
        Node::Leaf { value, .. } => visit(value, weight),
        Node::Split {
            feature,
            threshold,
            cover,
            left,
            right,
        } => {
            if known[*feature] {
                let next = if row[*feature] <= *threshold { left } else { right };
                expect_node(next, row, known, weight, visit);
            } else {
                let cover = *cover as f64;
                expect_node(left, row, known, weight * left.cover() as f64 / cover, visit);
                expect_node(right, row, known, weight * right.cover() as f64 / cover, visit);
            }
        }
    }
}

impl TreeEnsemble for ForestModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn output_space(&self) -> OutputSpace {
        OutputSpace::Probability
    }

    fn expected_raw(&self, row: &[f64], known: &[bool]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_classes];
        for tree in &self.trees {
            expect_node(tree, row, known, 1.0, &mut |leaf: &Vec<f64>, w| {
                for (o, q) in out.iter_mut().zip(leaf) {
                    *o += w * q;
                }
            });
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    fn to_probability(&self, raw: &[f64]) -> Vec<f64> {
        raw.to_vec()
    }
}

impl TreeEnsemble for GbtModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn output_space(&self) -> OutputSpace {
        OutputSpace::Logit
    }

    fn expected_raw(&self, row: &[f64], known: &[bool]) -> Vec<f64> {
        let mut out = self.base_score.clone();
        for round in &self.trees {
            for (o, tree) in out.iter_mut().zip(round) {
                expect_node(tree, row, known, 1.0, &mut |leaf: &f64, w| *o += w * leaf);
            }
        }
        out
    }

    fn to_probability(&self, raw: &[f64]) -> Vec<f64> {
        softmax(raw)
    }
}

/// Expected class probabilities given only the features in `known`.
pub fn expected_value_subset<M: TreeEnsemble + ?Sized>(model: &M, row: &[f64], known: &[bool]) -> Result<Vec<f64>> {
    check_row(row, model.n_features())?;
    if known.len() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            actual: known.len(),
        });
    }
    Ok(model.to_probability(&model.expected_raw(row, known)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapConfig {
    /// Largest feature count solved by full coalition enumeration.
    pub max_features_exact: usize,
    /// Permutations per row when the feature count exceeds the cap.
    pub permutations: usize,
    /// When false, exceeding the cap is an error instead.
    pub allow_sampling: bool,
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            max_features_exact: 15,
            permutations: 200,
            allow_sampling: true,
            seed: 0,
        }
    }
}

/// Hard ceiling on enumeration; 2^25 memoized coalitions is already large.
const MAX_EXACT_CAP: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapMethod {
    Exact,
    Sampling { permutations: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    /// Output with no feature observed.
    pub base_value: Vec<f64>,
    /// `contributions[feature][class]`.
    pub contributions: Vec<Vec<f64>>,
    pub predicted_output: Vec<f64>,
    pub output_space: OutputSpace,
    pub method: ShapMethod,
}

impl Explanation {
    /// Largest per-class gap between `base + sum(contributions)` and the
    /// predicted output.
    pub fn efficiency_gap(&self) -> f64 {
        (0..self.base_value.len())
            .map(|k| {
                let total: f64 = self.contributions.iter().map(|c| c[k]).sum();
                (self.base_value[k] + total - self.predicted_output[k]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `s! (n - s - 1)! / n!` for every coalition size `s < n`.
fn shapley_weights(n: usize) -> Vec<f64> {
    // 1 / (n * C(n - 1, s)), with the binomial built up multiplicatively.
    let mut out = Vec::with_capacity(n);
    let mut binom = 1.0f64;
    for s in 0..n {
        out.push(1.0 / (n as f64 * binom));
        binom = binom * (n - 1 - s) as f64 / (s + 1) as f64;
    }
    out
}

fn mask_to_known(mask: usize, n: usize, known: &mut [bool]) {
    for (j, k) in known.iter_mut().enumerate().take(n) {
        *k = mask >> j & 1 == 1;
    }
}

fn exact<M: TreeEnsemble + ?Sized>(model: &M, row: &[f64]) -> Vec<Vec<f64>> {
    let n = model.n_features();
    let mut known = vec![false; n];
    let values: Vec<Vec<f64>> = (0..1usize << n)
        .map(|mask| {
            mask_to_known(mask, n, &mut known);
            model.expected_raw(row, &known)
        })
        .collect();
    let weights = shapley_weights(n);
    let n_classes = model.n_classes();
    (0..n)
        .map(|j| {
            let bit = 1usize << j;
            let mut phi = vec![0.0; n_classes];
            for mask in (0..1usize << n).filter(|m| m & bit == 0) {
                let w = weights[mask.count_ones() as usize];
                for (p, (with, without)) in phi.iter_mut().zip(values[mask | bit].iter().zip(&values[mask])) {
                    *p += w * (with - without);
                }
            }
            phi
        })
        .collect()
}

fn sampled<M: TreeEnsemble + ?Sized>(model: &M, row: &[f64], permutations: usize, rng: &mut rng::Rng) -> Vec<Vec<f64>> {
    let n = model.n_features();
    let n_classes = model.n_classes();
    let mut phi = vec![vec![0.0; n_classes]; n];
    let mut order: Vec<usize> = (0..n).collect();
    let empty = model.expected_raw(row, &vec![false; n]);
    for _ in 0..permutations {
        order.shuffle(rng);
        let mut known = vec![false; n];
        let mut prev = empty.clone();
        for &j in &order {
            known[j] = true;
            let next = model.expected_raw(row, &known);
            for (p, (a, b)) in phi[j].iter_mut().zip(next.iter().zip(&prev)) {
                *p += a - b;
            }
            prev = next;
        }
    }
    let m = permutations as f64;
    phi.iter_mut().flatten().for_each(|p| *p /= m);
    phi
}

fn explain_with<M: TreeEnsemble + ?Sized>(model: &M, row: &[f64], cfg: &ShapConfig, row_tag: u64) -> Result<Explanation> {
    check_row(row, model.n_features())?;
    let n = model.n_features();
    let cap = cfg.max_features_exact.min(MAX_EXACT_CAP);
    let (contributions, method) = if n <= cap {
        (exact(model, row), ShapMethod::Exact)
    } else if cfg.allow_sampling {
        if cfg.permutations == 0 {
            return Err(Error::param("permutations must be at least 1"));
        }
        let mut rng = rng::stream(cfg.seed, &[rng::tag::SHAP, row_tag]);
        (
            sampled(model, row, cfg.permutations, &mut rng),
            ShapMethod::Sampling {
                permutations: cfg.permutations,
                seed: cfg.seed,
            },
        )
    } else {
        return Err(Error::ShapleyCapExceeded { features: n, cap });
    };
    Ok(Explanation {
        base_value: model.expected_raw(row, &vec![false; n]),
        contributions,
        predicted_output: model.expected_raw(row, &vec![true; n]),
        output_space: model.output_space(),
        method,
    })
}

pub fn shapley_values<M: TreeEnsemble + ?Sized>(model: &M, row: &[f64], cfg: &ShapConfig) -> Result<Explanation> {
    explain_with(model, row, cfg, 0)
}

/// Explains each row in parallel; in sampling mode row `i` draws its
/// permutations from its own stream, so results do not depend on batching.
pub fn explain_rows<M: TreeEnsemble + ?Sized>(model: &M, rows: &[Vec<f64>], cfg: &ShapConfig) -> Result<Vec<Explanation>> {
    rows.par_iter()
        .enumerate()
        .map(|(i, row)| explain_with(model, row, cfg, i as u64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRanking {
    pub feature_names: Vec<String>,
    /// Mean absolute contribution over rows and classes, by feature index.
    pub mean_abs: Vec<f64>,
    /// Feature indices, most influential first.
    pub order: Vec<usize>,
}

impl Versioned for SummaryRanking {
    const FORMAT: &'static str = "foxforest.shap_summary";
    const VERSION: u32 = 1;
}

pub fn summary_ranking(explanations: &[Explanation], feature_names: &[String]) -> Result<SummaryRanking> {
    let first = explanations.first().ok_or(Error::EmptyDataset)?;
    let n_features = feature_names.len();
    let n_classes = first.base_value.len();
    let mut mean_abs = vec![0.0; n_features];
    for e in explanations {
        if e.contributions.len() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                actual: e.contributions.len(),
            });
        }
        for (m, c) in mean_abs.iter_mut().zip(&e.contributions) {
            if c.len() != n_classes {
                return Err(Error::DimensionMismatch {
                    expected: n_classes,
                    actual: c.len(),
                });
            }
            *m += c.iter().map(|v| v.abs()).sum::<f64>();
        }
    }
    let denom = (explanations.len() * n_classes) as f64;
    mean_abs.iter_mut().for_each(|m| *m /= denom);
    let mut order: Vec<usize> = (0..n_features).collect();
    order.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]).then(a.cmp(&b)));
    Ok(SummaryRanking {
        feature_names: feature_names.to_vec(),
        mean_abs,
        order,
    })
}

impl SummaryRanking {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,mean_abs_contribution,rank\n");
        for (rank, &j) in self.order.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", csv_field(&self.feature_names[j]), self.mean_abs[j], rank + 1));
        }
        out
    }

    /// Horizontal bar chart of the `top` most influential features.
    pub fn to_text(&self, top: usize) -> String {
        const BAR: usize = 40;
        let shown = &self.order[..top.min(self.order.len())];
        let width = shown.iter().map(|&j| self.feature_names[j].len()).max().unwrap_or(0);
        let max = shown.first().map_or(0.0, |&j| self.mean_abs[j]);
        let mut out = String::new();
        for &j in shown {
            let len = if max > 0.0 {
                (self.mean_abs[j] / max * BAR as f64).round() as usize
            } else {
                0
            };
            out.push_str(&format!(
                "{:<width$} |{:<BAR$}| {:.4}\n",
                self.feature_names[j],
                "#".repeat(len),
                self.mean_abs[j]
            ));
        }
        out
    }
}

/// Explanations for a batch of rows together with their labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSet {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub explanations: Vec<Explanation>,
}

impl Versioned for ExplanationSet {
    const FORMAT: &'static str = "foxforest.shap_values";
    const VERSION: u32 = 1;
}

impl ExplanationSet {
    /// Long format: one line per (row, feature, class).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,feature,class,value\n");
        for (i, e) in self.explanations.iter().enumerate() {
            for (f, per_class) in self.feature_names.iter().zip(&e.contributions) {
                for (c, v) in self.class_names.iter().zip(per_class) {
                    out.push_str(&format!("{i},{},{},{v}\n", csv_field(f), csv_field(c)));
                }
            }
        }
        out
    }
}
