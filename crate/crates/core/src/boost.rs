//! Second-order gradient-boosted trees with a softmax multi-class objective.
//!
//! Each round fits one regression tree per class on the gradient and
//! hessian of the cross-entropy loss, using exact greedy split search.

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{class_distribution, Dataset};
use crate::error::{Error, Result};
use crate::forest::check_row;
use crate::json::Versioned;
use crate::math::{argmax, softmax};
use crate::rng;
use crate::tree::{midpoint, presort, Candidate, Criterion, Grower, Node};

/// Regression tree; leaves hold learning-rate-scaled weights.
pub type RegTree = Node<f64>;

const PRIOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub reg_lambda: f64,
    pub gamma: f64,
    pub subsample: f64,
    pub colsample: f64,
    pub seed: u64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.3,
            max_depth: 6,
            min_child_weight: 1.0,
            reg_lambda: 1.0,
            gamma: 0.0,
            subsample: 1.0,
            colsample: 1.0,
            seed: 0,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be >= 0, got {v}")))
            }
        };
        if self.n_rounds == 0 {
            return Err(Error::param("n_rounds must be positive"));
        }
        if self.max_depth == 0 {
            return Err(Error::param("max_depth must be positive"));
        }
        unit("learning_rate", self.learning_rate)?;
        unit("subsample", self.subsample)?;
        unit("colsample", self.colsample)?;
        non_negative("min_child_weight", self.min_child_weight)?;
        non_negative("reg_lambda", self.reg_lambda)?;
        non_negative("gamma", self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub config: GbtConfig,
    pub n_classes: usize,
    pub n_features: usize,
    /// Initial logit per class (log class prior).
    pub base_score: Vec<f64>,
    pub learning_rate: f64,
    /// `trees[round][class]`.
    pub trees: Vec<Vec<RegTree>>,
}

impl Versioned for GbtModel {
    const FORMAT: &'static str = "foxforest.gbt";
    const VERSION: u32 = 1;
}

impl GbtModel {
    pub(crate) fn logits_unchecked(&self, row: &[f64]) -> Vec<f64> {
        let mut logits = self.base_score.clone();
        for round in &self.trees {
            for (z, tree) in logits.iter_mut().zip(round) {
                *z += tree.leaf(row);
            }
        }
        logits
    }

    /// Base score plus the summed tree outputs, per class.
    pub fn predict_logits(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_row(row, self.n_features)?;
        Ok(self.logits_unchecked(row))
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.predict_logits(row)?))
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_logits(row)?))
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn n_rounds(&self) -> usize {
        self.trees.len()
    }
}

/// First and second derivatives of softmax cross-entropy w.r.t. each logit:
/// `g_k = p_k - [k == y]`, `h_k = p_k (1 - p_k)`.
pub fn softmax_gradients(logits: &[f64], true_class: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some(j) = logits.iter().position(|z| !z.is_finite()) {
        return Err(Error::NonFiniteInput(j));
    }
    if true_class >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label: true_class,
            n_classes: logits.len(),
        });
    }
    Ok(gradients_unchecked(logits, true_class))
}

fn gradients_unchecked(logits: &[f64], true_class: usize) -> (Vec<f64>, Vec<f64>) {
    let p = softmax(logits);
    let g = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| if k == true_class { pk - 1.0 } else { pk })
        .collect();
    let h = p.iter().map(|&pk| pk * (1.0 - pk)).collect();
    (g, h)
}

/// Mean multi-class cross-entropy of `logits` against `labels`.
pub fn cross_entropy(logits: &[Vec<f64>], labels: &[usize]) -> f64 {
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(z, &y)| {
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - z[y]
        })
        .sum();
    total / labels.len() as f64
}

fn score_term(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        g * g / denom
    } else {
        0.0
    }
}

/// Loss reduction from splitting a node into (left, right):
/// `0.5 * [G_L²/(H_L+λ) + G_R²/(H_R+λ) - (G_L+G_R)²/(H_L+H_R+λ)] - γ`.
pub fn split_gain(g_left: f64, h_left: f64, g_right: f64, h_right: f64, lambda: f64, gamma: f64) -> f64 {
    0.5 * (score_term(g_left, h_left, lambda) + score_term(g_right, h_right, lambda)
        - score_term(g_left + g_right, h_left + h_right, lambda))
        - gamma
}

struct Newton<'a> {
    grad: &'a [f64],
    hess: &'a [f64],
    features: &'a [usize],
    cfg: &'a GbtConfig,
}

impl Newton<'_> {
    fn sums(&self, slots: &[u32]) -> (f64, f64) {
        slots.iter().fold((0.0, 0.0), |(g, h), &s| {
            (g + self.grad[s as usize], h + self.hess[s as usize])
        })
    }
}

impl Criterion for Newton<'_> {
    type Leaf = f64;

    fn splittable(&self, slots: &[u32], _depth: usize) -> bool {
        slots.len() >= 2 && self.sums(slots).1 >= self.cfg.min_child_weight
    }

    fn scan(&self, feature: usize, sorted: &[u32], values: &[f64]) -> Option<Candidate> {
        let (g_total, h_total) = self.sums(sorted);
        let (mut g_left, mut h_left) = (0.0, 0.0);
        let mut best: Option<Candidate> = None;
        for i in 0..sorted.len() - 1 {
            let s = sorted[i] as usize;
            g_left += self.grad[s];
            h_left += self.hess[s];
            if values[i] == values[i + 1] {
                continue;
            }
            let score = split_gain(
                g_left,
                h_left,
                g_total - g_left,
                h_total - h_left,
                self.cfg.reg_lambda,
                self.cfg.gamma,
            );
            if best.is_none_or(|b| score > b.score) {
                best = Some(Candidate {
                    feature,
                    threshold: midpoint(values[i], values[i + 1]),
                    n_left: i + 1,
                    score,
                });
            }
        }
        best
    }

    fn accept(&self, candidate: &Candidate) -> bool {
        candidate.score > 0.0
    }

    fn leaf(&self, slots: &[u32]) -> f64 {
        let (g, h) = self.sums(slots);
        let denom = h + self.cfg.reg_lambda;
        if denom > 0.0 {
            -g / denom * self.cfg.learning_rate
        } else {
            0.0
        }
    }

    fn node_features(&mut self) -> (Vec<usize>, usize) {
        (self.features.to_vec(), self.features.len())
    }
}

/// A fitted model and the training cross-entropy after each round.
#[derive(Debug, Clone)]
pub struct GbtFit {
    pub model: GbtModel,
    pub train_loss: Vec<f64>,
}

pub fn fit_gbt(train: &Dataset, cfg: &GbtConfig) -> Result<GbtModel> {
    fit_gbt_traced(train, cfg).map(|fit| fit.model)
}

/// Like [`fit_gbt`], also recording the training loss trace.
pub fn fit_gbt_traced(train: &Dataset, cfg: &GbtConfig) -> Result<GbtFit> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train.n_present_classes() < 2 {
        return Err(Error::SingleClass);
    }
    let n = train.n_rows();
    let n_classes = train.n_classes();
    let n_features = train.n_features();
    let labels = train.labels();
    let base_score: Vec<f64> = class_distribution(train)
        .iter()
        .map(|&c| (c as f64 / n as f64).max(PRIOR_FLOOR).ln())
        .collect();

    let cols = train.columns();
    let presorted = presort(&cols);
    let n_sub = ((cfg.subsample * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let n_col = ((cfg.colsample * n_features as f64 - 1e-9).ceil() as usize).clamp(1, n_features.max(1));

    let mut logits: Vec<Vec<f64>> = vec![base_score.clone(); n];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    let mut train_loss = Vec::with_capacity(cfg.n_rounds);
    for round in 0..cfg.n_rounds {
        let slot_row: Vec<usize> = if n_sub < n {
            let mut rng = rng::stream(cfg.seed, &[rng::tag::ROUND, round as u64]);
            let mut rows = index::sample(&mut rng, n, n_sub).into_vec();
            rows.sort_unstable();
            rows
        } else {
            (0..n).collect()
        };
        // grad[k][slot], hess[k][slot]
        let mut grad = vec![vec![0.0; slot_row.len()]; n_classes];
        let mut hess = vec![vec![0.0; slot_row.len()]; n_classes];
        for (s, &r) in slot_row.iter().enumerate() {
            let (g, h) = gradients_unchecked(&logits[r], labels[r]);
            for k in 0..n_classes {
                grad[k][s] = g[k];
                hess[k][s] = h[k];
            }
        }

        let round_trees: Vec<RegTree> = (0..n_classes)
            .into_par_iter()
            .map(|k| {
                let features: Vec<usize> = if n_col < n_features {
                    let mut rng = rng::stream(cfg.seed, &[rng::tag::TREE, round as u64, k as u64]);
                    let mut all: Vec<usize> = (0..n_features).collect();
                    all.shuffle(&mut rng);
                    let mut chosen = all[..n_col].to_vec();
                    chosen.sort_unstable();
                    chosen
                } else {
                    (0..n_features).collect()
                };
                let criterion = Newton {
                    grad: &grad[k],
                    hess: &hess[k],
                    features: &features,
                    cfg,
                };
                let grower = Grower::new(
                    &cols,
                    &presorted,
                    &slot_row,
                    &features,
                    Some(cfg.max_depth),
                    criterion,
                );
                grower.grow().0
            })
            .collect();

        for (r, z) in logits.iter_mut().enumerate() {
            let row = train.row(r);
            for (zk, tree) in z.iter_mut().zip(&round_trees) {
                *zk += tree.leaf(row);
            }
        }
        train_loss.push(cross_entropy(&logits, labels));
        trees.push(round_trees);
    }

    Ok(GbtFit {
        model: GbtModel {
            config: cfg.clone(),
            n_classes,
            n_features,
            base_score,
            learning_rate: cfg.learning_rate,
            trees,
        },
        train_loss,
    })
}
