//! Classification metrics, confusion matrices and model comparison tables.
//!
//! Undefined ratios (a class that is never predicted, or never present) are
//! reported as 0 and the class is flagged `degenerate`. Weighted averages are
//! support-weighted, so a class with zero support never moves them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::Versioned;
use crate::preprocess::csv_field;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[true][predicted]`.
    pub counts: Vec<Vec<u64>>,
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for label in [t, p] {
            if label >= n_classes {
                return Err(Error::LabelOutOfRange { label, n_classes });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|k| self.counts[k][k]).sum()
    }

    /// Row sums: how often each class is the true label.
    pub fn support(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Column sums: how often each class is predicted.
    pub fn predicted(&self) -> Vec<u64> {
        (0..self.n_classes())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn to_csv(&self, class_names: &[String]) -> String {
        let mut out = String::from("true\\predicted");
        for name in class_names {
            out.push(',');
            out.push_str(&csv_field(name));
        }
        out.push('\n');
        for (name, row) in class_names.iter().zip(&self.counts) {
            out.push_str(&csv_field(name));
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when precision or recall had a zero denominator.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

impl Versioned for MetricsReport {
    const FORMAT: &'static str = "foxforest.metrics";
    const VERSION: u32 = 1;
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Metrics with classes named by their index.
pub fn metrics(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<MetricsReport> {
    let names: Vec<String> = (0..n_classes).map(|k| k.to_string()).collect();
    metrics_named(y_true, y_pred, &names)
}

pub fn metrics_named(y_true: &[usize], y_pred: &[usize], class_names: &[String]) -> Result<MetricsReport> {
    let confusion = confusion_matrix(y_true, y_pred, class_names.len())?;
    let total = confusion.total();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    let support = confusion.support();
    let predicted = confusion.predicted();
    let per_class: Vec<ClassMetrics> = class_names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let tp = confusion.counts[k][k];
            let precision = ratio(tp, predicted[k]);
            let recall = ratio(tp, support[k]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                name: name.clone(),
                precision,
                recall,
                f1,
                support: support[k],
                degenerate: predicted[k] == 0 || support[k] == 0,
            }
        })
        .collect();

    let n = total as f64;
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|c| c.support as f64 * f(c)).sum::<f64>() / n
    };
    let accuracy = confusion.trace() as f64 / n;
    Ok(MetricsReport {
        weighted_precision: weighted(|c| c.precision),
        // support_k * TP_k / support_k summed over k is the trace; computing
        // it that way keeps the identity with accuracy exact.
        weighted_recall: accuracy,
        weighted_f1: weighted(|c| c.f1),
        accuracy,
        per_class,
        confusion,
    })
}

impl MetricsReport {
    pub fn class_names(&self) -> Vec<String> {
        self.per_class.iter().map(|c| c.name.clone()).collect()
    }

    pub fn to_text(&self) -> String {
        let width = self
            .per_class
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(0)
            .max("weighted avg".len());
        let mut out = format!(
            "{:<width$} {:>9} {:>9} {:>9} {:>9}\n",
            "", "precision", "recall", "f1-score", "support"
        );
        for c in &self.per_class {
            out.push_str(&format!(
                "{:<width$} {:>9.2} {:>9.2} {:>9.2} {:>9}{}\n",
                c.name,
                c.precision,
                c.recall,
                c.f1,
                c.support,
                if c.degenerate { "  *" } else { "" }
            ));
        }
        out.push_str(&format!(
            "\n{:<width$} {:>9} {:>9} {:>9.2} {:>9}\n",
            "accuracy",
            "",
            "",
            self.accuracy,
            self.confusion.total()
        ));
        out.push_str(&format!(
            "{:<width$} {:>9.2} {:>9.2} {:>9.2} {:>9}\n",
            "weighted avg",
            self.weighted_precision,
            self.weighted_recall,
            self.weighted_f1,
            self.confusion.total()
        ));
        if self.per_class.iter().any(|c| c.degenerate) {
            out.push_str("\n* undefined precision or recall reported as 0\n");
        }
        out
    }
}

/// Weighted metrics for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub model: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub rows: Vec<ComparisonEntry>,
}

impl Versioned for ModelComparison {
    const FORMAT: &'static str = "foxforest.model_comparison";
    const VERSION: u32 = 1;
}

pub fn comparison_table(reports: &[(String, &MetricsReport)]) -> ModelComparison {
    ModelComparison {
        rows: reports
            .iter()
            .map(|(name, r)| ComparisonEntry {
                model: name.clone(),
                precision: r.weighted_precision,
                recall: r.weighted_recall,
                f1: r.weighted_f1,
                accuracy: r.accuracy,
            })
            .collect(),
    }
}

const COLUMNS: [&str; 4] = ["precision", "recall", "f1_score", "accuracy"];

impl ComparisonEntry {
    fn values(&self) -> [f64; 4] {
        [self.precision, self.recall, self.f1, self.accuracy]
    }
}

impl ModelComparison {
    pub fn to_csv(&self) -> String {
        let mut out = format!("model,{}\n", COLUMNS.join(","));
        for r in &self.rows {
            out.push_str(&csv_field(&r.model));
            for v in r.values() {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let num = |i: usize| -> Result<f64> {
                let cell = record.get(i).unwrap_or("");
                cell.parse().map_err(|_| Error::InvalidCell {
                    row: rows.len() + 1,
                    column: COLUMNS.get(i.wrapping_sub(1)).unwrap_or(&"model").to_string(),
                    value: cell.to_string(),
                })
            };
            rows.push(ComparisonEntry {
                model: record.get(0).unwrap_or("").to_string(),
                precision: num(1)?,
                recall: num(2)?,
                f1: num(3)?,
                accuracy: num(4)?,
            });
        }
        Ok(Self { rows })
    }

    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.model.len())
            .max()
            .unwrap_or(0)
            .max("model".len());
        let mut out = format!(
            "{:<width$} {:>9} {:>9} {:>9} {:>9}\n",
            "model", "precision", "recall", "f1-score", "accuracy"
        );
        for r in &self.rows {
            let [p, rc, f, a] = r.values();
            out.push_str(&format!("{:<width$} {p:>9.2} {rc:>9.2} {f:>9.2} {a:>9.2}\n", r.model));
        }
        out
    }
}
