//! Random-forest classifier built from CART trees grown on Gini impurity.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::json::Versioned;
use crate::math::argmax;
use crate::rng::{self, Rng};
use crate::tree::{midpoint, presort, Candidate, Criterion, Grower, Node};

/// Classification tree; leaves hold class-probability vectors.
pub type ClassTree = Node<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Fraction of features drawn at each node; `None` means `sqrt(M) / M`.
    pub max_features_fraction: Option<f64>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features_fraction: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::param("n_trees must be positive"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::param("max_depth must be positive"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::param("min_samples_leaf must be positive"));
        }
        if let Some(f) = self.max_features_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::param(format!(
                    "max_features_fraction must lie in (0, 1], got {f}"
                )));
            }
        }
        Ok(())
    }

    /// Number of features drawn per node for `n_features` columns.
    pub fn features_per_node(&self, n_features: usize) -> usize {
        let m = n_features as f64;
        let count = match self.max_features_fraction {
            Some(fraction) => fraction * m,
            None => m.sqrt(),
        };
        // Tolerance keeps products like 0.1 * 50 from rounding up a whole feature.
        ((count - 1e-9).ceil() as usize).clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub n_classes: usize,
    pub n_features: usize,
    pub trees: Vec<ClassTree>,
}

impl Versioned for ForestModel {
    const FORMAT: &'static str = "foxforest.forest";
    const VERSION: u32 = 1;
}

pub(crate) fn check_row(row: &[f64], n_features: usize) -> Result<()> {
    if row.len() != n_features {
        return Err(Error::DimensionMismatch {
            expected: n_features,
            actual: row.len(),
        });
    }
    if let Some(j) = row.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(j));
    }
    Ok(())
}

impl ForestModel {
    /// Mean of the trees' leaf distributions.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_row(row, self.n_features)?;
        let mut proba = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (p, q) in proba.iter_mut().zip(tree.leaf(row)) {
                *p += q;
            }
        }
        let n = self.trees.len() as f64;
        proba.iter_mut().for_each(|p| *p /= n);
        Ok(proba)
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(row)?))
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }
}

struct Gini<'a> {
    slot_label: &'a [usize],
    n_classes: usize,
    n_features: usize,
    per_node: usize,
    min_samples_leaf: usize,
    rng: Rng,
    root_cover: f64,
    importance: Vec<f64>,
}

impl Gini<'_> {
    fn counts(&self, slots: &[u32]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes];
        for &s in slots {
            counts[self.slot_label[s as usize]] += 1;
        }
        counts
    }
}

impl Criterion for Gini<'_> {
    type Leaf = Vec<f64>;

    fn splittable(&self, slots: &[u32], _depth: usize) -> bool {
        if slots.len() < 2 * self.min_samples_leaf {
            return false;
        }
        let first = self.slot_label[slots[0] as usize];
        slots.iter().any(|&s| self.slot_label[s as usize] != first)
    }

    fn scan(&self, feature: usize, sorted: &[u32], values: &[f64]) -> Option<Candidate> {
        let n = sorted.len();
        let total = self.counts(sorted);
        let mut left = vec![0u64; self.n_classes];
        let mut sumsq_left = 0u64;
        let mut sumsq_right: u64 = total.iter().map(|c| c * c).sum();
        let mut best: Option<Candidate> = None;
        for i in 0..n - 1 {
            let k = self.slot_label[sorted[i] as usize];
            sumsq_left += 2 * left[k] + 1;
            left[k] += 1;
            let right_k = total[k] - left[k];
            sumsq_right -= 2 * right_k + 1;
            let n_left = i + 1;
            let n_right = n - n_left;
            if values[i] == values[i + 1]
                || n_left < self.min_samples_leaf
                || n_right < self.min_samples_leaf
            {
                continue;
            }
            let score = sumsq_left as f64 / n_left as f64 + sumsq_right as f64 / n_right as f64;
            if best.is_none_or(|b| score > b.score) {
                best = Some(Candidate {
                    feature,
                    threshold: midpoint(values[i], values[i + 1]),
                    n_left,
                    score,
                });
            }
        }
        best
    }

    fn accept(&self, _candidate: &Candidate) -> bool {
        true
    }

    fn leaf(&self, slots: &[u32]) -> Vec<f64> {
        let n = slots.len() as f64;
        self.counts(slots)
            .into_iter()
            .map(|c| c as f64 / n)
            .collect()
    }

    fn on_split(&mut self, slots: &[u32], candidate: &Candidate) {
        let n = slots.len() as f64;
        let sumsq: u64 = self.counts(slots).iter().map(|c| c * c).sum();
        // Sample-weighted Gini decrease: (n / N) * (G - nL/n G_L - nR/n G_R).
        let decrease = (candidate.score - sumsq as f64 / n) / self.root_cover;
        self.importance[candidate.feature] += decrease.max(0.0);
    }

    fn node_features(&mut self) -> (Vec<usize>, usize) {
        let mut features: Vec<usize> = (0..self.n_features).collect();
        features.shuffle(&mut self.rng);
        (features, self.per_node)
    }
}

/// A fitted forest plus each tree's per-feature impurity decrease.
pub(crate) struct FitWithImportance {
    pub model: ForestModel,
    pub importances: Vec<Vec<f64>>,
}

pub(crate) fn fit_with_importance(train: &Dataset, cfg: &ForestConfig) -> Result<FitWithImportance> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cols = train.columns();
    let presorted = presort(&cols);
    let n = train.n_rows();
    let n_features = train.n_features();
    let per_node = cfg.features_per_node(n_features);
    let all_features: Vec<usize> = (0..n_features).collect();

    let grown: Vec<(ClassTree, Vec<f64>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(cfg.seed, &[rng::tag::TREE, t as u64]);
            let slot_row: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let slot_label: Vec<usize> = slot_row.iter().map(|&r| train.labels()[r]).collect();
            let criterion = Gini {
                slot_label: &slot_label,
                n_classes: train.n_classes(),
                n_features,
                per_node,
                min_samples_leaf: cfg.min_samples_leaf,
                rng,
                root_cover: n as f64,
                importance: vec![0.0; n_features],
            };
            let grower = Grower::new(
                &cols,
                &presorted,
                &slot_row,
                &all_features,
                cfg.max_depth,
                criterion,
            );
            let (tree, criterion) = grower.grow();
            (tree, criterion.importance)
        })
        .collect();

    let (trees, importances) = grown.into_iter().unzip();
    Ok(FitWithImportance {
        model: ForestModel {
            config: cfg.clone(),
            n_classes: train.n_classes(),
            n_features,
            trees,
        },
        importances,
    })
}

/// Fits `cfg.n_trees` trees, each on its own bootstrap sample and RNG stream.
pub fn fit_forest(train: &Dataset, cfg: &ForestConfig) -> Result<ForestModel> {
    fit_with_importance(train, cfg).map(|fit| fit.model)
}
