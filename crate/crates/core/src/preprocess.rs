//! Gini-importance feature ranking, top-k selection, and normalization.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{self, ForestConfig};
use crate::json::Versioned;

/// `1 - sum_k p_k^2` over the class proportions in `class_counts`.
pub fn gini_impurity(class_counts: &[u64]) -> Result<f64> {
    let total: u64 = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::param("gini impurity needs at least one non-zero count"));
    }
    let n = total as f64;
    Ok(1.0 - class_counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

/// Per-feature importance scores and the features sorted by them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniRanking {
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
    /// Feature indices by descending score, ties by ascending index.
    pub order: Vec<usize>,
}

impl Versioned for GiniRanking {
    const FORMAT: &'static str = "foxforest.gini_ranking";
    const VERSION: u32 = 1;
}

impl GiniRanking {
    pub fn from_scores(feature_names: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        if feature_names.len() != scores.len() {
            return Err(Error::DimensionMismatch {
                expected: feature_names.len(),
                actual: scores.len(),
            });
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Ok(Self {
            feature_names,
            scores,
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// The `min(k, n)` best feature indices, best first.
    pub fn top_k(&self, k: usize) -> Vec<usize> {
        self.order[..k.min(self.order.len())].to_vec()
    }

    /// Ranking of the dataset produced by `select_top_k(_, self, k)`.
    pub fn restrict(&self, k: usize) -> GiniRanking {
        let top = self.top_k(k);
        GiniRanking {
            feature_names: top.iter().map(|&j| self.feature_names[j].clone()).collect(),
            scores: top.iter().map(|&j| self.scores[j]).collect(),
            order: (0..top.len()).collect(),
        }
    }

    /// `feature,score,rank` with rank starting at 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,score,rank\n");
        for (rank, &j) in self.order.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                csv_field(&self.feature_names[j]),
                self.scores[j],
                rank + 1
            ));
        }
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Auxiliary forest settings used for ranking: 200 fully grown trees
/// drawing `sqrt(M)` features per node.
pub fn default_importance_forest(seed: u64) -> ForestConfig {
    ForestConfig {
        n_trees: 200,
        seed,
        ..ForestConfig::default()
    }
}

/// Mean-decrease-in-impurity importance from an auxiliary random forest.
///
/// A feature's score is the per-tree sum, over nodes splitting on it, of
/// the node's sample fraction times its Gini decrease, averaged over trees.
pub fn rank_features_gini(train: &Dataset, cfg: &ForestConfig) -> Result<GiniRanking> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train.n_present_classes() < 2 {
        return Err(Error::SingleClass);
    }
    let fit = forest::fit_with_importance(train, cfg)?;
    let n_trees = fit.importances.len() as f64;
    let mut scores = vec![0.0; train.n_features()];
    for tree in &fit.importances {
        for (s, v) in scores.iter_mut().zip(tree) {
            *s += v;
        }
    }
    scores.iter_mut().for_each(|s| *s /= n_trees);
    GiniRanking::from_scores(train.feature_names().to_vec(), scores)
}

/// Keeps the `min(k, n_features)` highest-ranked features, in rank order.
pub fn select_top_k(ds: &Dataset, ranking: &GiniRanking, k: usize) -> Result<Dataset> {
    if k == 0 {
        return Err(Error::param("k must be positive"));
    }
    if ranking.len() != ds.n_features() {
        return Err(Error::DimensionMismatch {
            expected: ds.n_features(),
            actual: ranking.len(),
        });
    }
    ds.select_features(&ranking.top_k(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormalizerKind {
    #[default]
    Zscore,
    Minmax,
}

impl std::str::FromStr for NormalizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zscore" => Ok(NormalizerKind::Zscore),
            "minmax" => Ok(NormalizerKind::Minmax),
            other => Err(Error::param(format!("unknown normalizer `{other}`"))),
        }
    }
}

/// Per-feature statistics fitted on a reference dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormalizerParams {
    /// Mean and population standard deviation.
    Zscore { mean: Vec<f64>, std: Vec<f64> },
    Minmax { min: Vec<f64>, max: Vec<f64> },
}

impl Versioned for NormalizerParams {
    const FORMAT: &'static str = "foxforest.normalizer";
    const VERSION: u32 = 1;
}

impl NormalizerParams {
    pub fn kind(&self) -> NormalizerKind {
        match self {
            NormalizerParams::Zscore { .. } => NormalizerKind::Zscore,
            NormalizerParams::Minmax { .. } => NormalizerKind::Minmax,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            NormalizerParams::Zscore { mean, .. } => mean.len(),
            NormalizerParams::Minmax { min, .. } => min.len(),
        }
    }

    /// Normalizes one row. Degenerate columns map to 0; no clipping.
    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: row.len(),
            });
        }
        let (offset, scale) = match self {
            NormalizerParams::Zscore { mean, std } => (mean, std.clone()),
            NormalizerParams::Minmax { min, max } => {
                (min, max.iter().zip(min).map(|(hi, lo)| hi - lo).collect())
            }
        };
        Ok(row
            .iter()
            .zip(offset.iter().zip(&scale))
            .map(|(&x, (&o, &s))| if s > 0.0 { (x - o) / s } else { 0.0 })
            .collect())
    }
}

pub fn fit_normalizer(train: &Dataset, kind: NormalizerKind) -> Result<NormalizerParams> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = train.n_rows() as f64;
    let cols = train.columns();
    Ok(match kind {
        NormalizerKind::Zscore => {
            let mean: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n).collect();
            let std = cols
                .iter()
                .zip(&mean)
                .map(|(c, m)| (c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
                .collect();
            NormalizerParams::Zscore { mean, std }
        }
        NormalizerKind::Minmax => NormalizerParams::Minmax {
            min: cols
                .iter()
                .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
                .collect(),
            max: cols
                .iter()
                .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect(),
        },
    })
}

pub fn apply_normalizer(ds: &Dataset, params: &NormalizerParams) -> Result<Dataset> {
    if ds.n_features() != params.n_features() {
        return Err(Error::DimensionMismatch {
            expected: params.n_features(),
            actual: ds.n_features(),
        });
    }
    let rows = ds
        .rows()
        .iter()
        .map(|r| params.transform_row(r))
        .collect::<Result<Vec<_>>>()?;
    ds.with_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json;

    fn column(values: &[f64]) -> Dataset {
        Dataset::new(
            vec!["x".into()],
            vec!["c".into()],
            values.iter().map(|&v| vec![v]).collect(),
            vec![0; values.len()],
        )
        .unwrap()
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini_impurity(&[10, 0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[5, 5]).unwrap(), 0.5);
        assert!((gini_impurity(&[2, 1, 1]).unwrap() - 0.625).abs() < 1e-15);
        assert!(gini_impurity(&[0, 0]).is_err());
    }

    #[test]
    fn ranking_ties_go_to_lower_index() {
        let r = GiniRanking::from_scores(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.1, 0.3, 0.3],
        )
        .unwrap();
        assert_eq!(r.order, [1, 2, 0]);
        assert_eq!(r.top_k(10), [1, 2, 0]);
        assert_eq!(r.to_csv(), "feature,score,rank\nb,0.3,1\nc,0.3,2\na,0.1,3\n");
    }

    #[test]
    fn constant_feature_scores_zero() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 - 9.5, 3.0]).collect();
        let labels = (0..20).map(|i| usize::from(i >= 10)).collect();
        let ds = Dataset::new(
            vec!["f1".into(), "f2".into()],
            vec!["neg".into(), "pos".into()],
            rows,
            labels,
        )
        .unwrap();
        let ranking = rank_features_gini(&ds, &default_importance_forest(1)).unwrap();
        assert!(ranking.scores[0] > 0.0);
        assert_eq!(ranking.scores[1], 0.0);
        assert_eq!(ranking.order, [0, 1]);
    }

    #[test]
    fn ranking_requires_two_classes() {
        let ds = column(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            rank_features_gini(&ds, &default_importance_forest(0)),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn select_caps_and_reorders() {
        let ds = Dataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["x".into()],
            vec![vec![1.0, 2.0, 3.0]],
            vec![0],
        )
        .unwrap();
        let r = GiniRanking::from_scores(ds.feature_names().to_vec(), vec![0.2, 0.1, 0.5]).unwrap();
        let all = select_top_k(&ds, &r, 10).unwrap();
        assert_eq!(all.feature_names(), ["c", "a", "b"]);
        assert_eq!(all.row(0), [3.0, 1.0, 2.0]);
        let one = select_top_k(&ds, &r, 1).unwrap();
        assert_eq!(one.feature_names(), ["c"]);
        assert!(select_top_k(&ds, &r, 0).is_err());
        let short = GiniRanking::from_scores(vec!["a".into()], vec![1.0]).unwrap();
        assert!(select_top_k(&ds, &short, 1).is_err());
        let two = select_top_k(&ds, &r, 2).unwrap();
        assert_eq!(select_top_k(&two, &r.restrict(2), 2).unwrap(), two);
    }

    #[test]
    fn zscore_fit_and_apply() {
        let ds = column(&[1.0, 2.0, 3.0]);
        let params = fit_normalizer(&ds, NormalizerKind::Zscore).unwrap();
        let NormalizerParams::Zscore { mean, std } = &params else { panic!() };
        assert_eq!(mean, &[2.0]);
        assert!((std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let out = apply_normalizer(&ds, &params).unwrap();
        let got: Vec<f64> = out.rows().iter().map(|r| r[0]).collect();
        for (g, e) in got.iter().zip([-1.2247, 0.0, 1.2247]) {
            assert!((g - e).abs() < 1e-4);
        }
    }

    #[test]
    fn minmax_fit_and_apply_without_clipping() {
        let ds = column(&[2.0, 4.0, 6.0]);
        let params = fit_normalizer(&ds, NormalizerKind::Minmax).unwrap();
        assert_eq!(
            params,
            NormalizerParams::Minmax { min: vec![2.0], max: vec![6.0] }
        );
        let out = apply_normalizer(&ds, &params).unwrap();
        assert_eq!(out.rows(), [vec![0.0], vec![0.5], vec![1.0]]);
        assert_eq!(params.transform_row(&[8.0]).unwrap(), [1.5]);
    }

    #[test]
    fn constant_column_is_recorded_and_maps_to_zero() {
        let ds = column(&[5.0, 5.0, 5.0]);
        for kind in [NormalizerKind::Zscore, NormalizerKind::Minmax] {
            let params = fit_normalizer(&ds, kind).unwrap();
            if let NormalizerParams::Zscore { mean, std } = &params {
                assert_eq!((mean[0], std[0]), (5.0, 0.0));
            }
            let out = apply_normalizer(&ds, &params).unwrap();
            assert!(out.rows().iter().all(|r| r[0] == 0.0));
        }
    }

    #[test]
    fn normalizer_dimension_mismatch() {
        let params = NormalizerParams::Zscore { mean: vec![0.0; 2], std: vec![1.0; 2] };
        assert!(apply_normalizer(&column(&[1.0]), &params).is_err());
    }

    #[test]
    fn normalizer_json_round_trip() {
        let params = NormalizerParams::Zscore { mean: vec![0.1, -3.5], std: vec![2.0 / 3.0, 0.0] };
        let text = json::to_json(&params).unwrap();
        assert!(text.contains("\"kind\": \"zscore\""));
        assert_eq!(json::from_json::<NormalizerParams>(&text).unwrap(), params);
    }
}
