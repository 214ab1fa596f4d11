//! Tabular datasets: CSV/JSON I/O, class bookkeeping, and train/test splits.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Dense feature matrix with integer class labels.
///
/// Rows are samples. Every value is finite, every label indexes
/// `class_names`, and feature names are unique and non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct Dataset {
    feature_names: Vec<String>,
    class_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

#[derive(Deserialize)]
struct RawDataset {
    feature_names: Vec<String>,
    class_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = Error;

    fn try_from(raw: RawDataset) -> Result<Self> {
        Dataset::new(raw.feature_names, raw.class_names, raw.rows, raw.labels)
    }
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        class_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for name in &feature_names {
            if name.is_empty() {
                return Err(Error::InvalidDataset("empty feature name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        let mut seen = HashSet::new();
        for name in &class_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateClass(name.clone()));
            }
        }
        if rows.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} values, expected {}",
                    row.len(),
                    feature_names.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidCell {
                    row: i,
                    column: feature_names[j].clone(),
                    value: row[j].to_string(),
                });
            }
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::LabelOutOfRange {
                label,
                n_classes: class_names.len(),
            });
        }
        Ok(Self {
            feature_names,
            class_names,
            rows,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Column-major copy of the feature matrix.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_features())
            .map(|j| self.rows.iter().map(|r| r[j]).collect())
            .collect()
    }

    /// Number of distinct labels that actually occur.
    pub fn n_present_classes(&self) -> usize {
        class_distribution(self).iter().filter(|&&c| c > 0).count()
    }

    /// Dataset restricted to the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Dataset restricted to the given feature columns, in the given order.
    pub fn select_features(&self, features: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = features.iter().find(|&&j| j >= self.n_features()) {
            return Err(Error::param(format!(
                "feature index {bad} out of range for {} features",
                self.n_features()
            )));
        }
        Dataset::new(
            features
                .iter()
                .map(|&j| self.feature_names[j].clone())
                .collect(),
            self.class_names.clone(),
            self.rows
                .iter()
                .map(|r| features.iter().map(|&j| r[j]).collect())
                .collect(),
            self.labels.clone(),
        )
    }

    /// Same labels and names, new feature values.
    pub(crate) fn with_rows(&self, rows: Vec<Vec<f64>>) -> Result<Dataset> {
        Dataset::new(
            self.feature_names.clone(),
            self.class_names.clone(),
            rows,
            self.labels.clone(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Parameters for [`split`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64, stratified: bool) -> Result<Self> {
        let spec = Self {
            test_fraction,
            seed,
            stratified,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::param(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 42,
            stratified: true,
        }
    }
}

/// Loads a headered CSV; `label_column` holds class labels, all other
/// columns must be finite reals. Classes are numbered by first appearance.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column)
}

pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::MissingColumn(label_column.to_string()));
    }
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&i| i != label_idx).collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&i| header[i].clone()).collect();

    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row number as a spreadsheet would show it, header excluded.
        let row_no = r + 1;
        let mut row = Vec::with_capacity(feature_cols.len());
        for (&c, name) in feature_cols.iter().zip(&feature_names) {
            let cell = record.get(c).unwrap_or("").trim();
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(Error::InvalidCell {
                        row: row_no,
                        column: name.clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        let label = record.get(label_idx).unwrap_or("").to_string();
        let next = class_names.len();
        let idx = *class_index.entry(label.clone()).or_insert_with(|| {
            class_names.push(label);
            next
        });
        rows.push(row);
        labels.push(idx);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(feature_names, class_names, rows, labels)
}

/// Writes the dataset as CSV with the label column last.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(ds, file, label_column)
}

pub fn write_csv_to<W: Write>(ds: &Dataset, writer: W, label_column: &str) -> Result<()> {
    if ds.feature_names.iter().any(|n| n == label_column) {
        return Err(Error::DuplicateFeature(label_column.to_string()));
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push(label_column);
    wtr.write_record(&header)?;
    for (row, &label) in ds.rows.iter().zip(&ds.labels) {
        // `{}` on f64 prints the shortest string that parses back to the same bits.
        let mut record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        record.push(ds.class_names[label].clone());
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Per-class row counts, indexed by class.
pub fn class_distribution(ds: &Dataset) -> Vec<usize> {
    let mut counts = vec![0; ds.n_classes()];
    for &l in &ds.labels {
        counts[l] += 1;
    }
    counts
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Row indices of the (train, test) partition, each sorted ascending.
///
/// Unstratified: `round(test_fraction * n)` rows go to test, clamped so
/// neither side is empty. Stratified: classes with a single member go to
/// train; every other class gets at least one test row and keeps at least one
/// train row, and the remaining test quota is handed out one row at a time to
/// the class furthest below its proportional share (lowest index on ties).
pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let n = ds.n_rows();
    if n < 2 {
        return Err(Error::InvalidDataset(format!(
            "need at least 2 rows to split, got {n}"
        )));
    }
    let mut rng = rng::stream(spec.seed, &[rng::tag::SPLIT]);
    let mut test = Vec::new();
    if spec.stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
        for (i, &l) in ds.labels.iter().enumerate() {
            by_class[l].push(i);
        }
        let eligible: Vec<usize> = (0..by_class.len())
            .filter(|&k| by_class[k].len() >= 2)
            .collect();
        let eligible_rows: usize = eligible.iter().map(|&k| by_class[k].len()).sum();
        let capacity: usize = eligible.iter().map(|&k| by_class[k].len() - 1).sum();
        let target = round_half_up(spec.test_fraction * eligible_rows as f64)
            .clamp(eligible.len(), capacity.max(eligible.len()));
        let mut alloc = vec![0usize; by_class.len()];
        for &k in &eligible {
            alloc[k] = 1;
        }
        let mut assigned = eligible.len();
        while assigned < target {
            let mut best: Option<(usize, f64)> = None;
            for &k in &eligible {
                if alloc[k] + 1 >= by_class[k].len() {
                    continue;
                }
                let deficit = spec.test_fraction * by_class[k].len() as f64 - alloc[k] as f64;
                if best.is_none_or(|(_, d)| deficit > d) {
                    best = Some((k, deficit));
                }
            }
            match best {
                Some((k, _)) => {
                    alloc[k] += 1;
                    assigned += 1;
                }
                None => break,
            }
        }
        for (k, members) in by_class.iter_mut().enumerate() {
            members.shuffle(&mut rng);
            test.extend_from_slice(&members[..alloc[k]]);
        }
    } else {
        let n_test = round_half_up(spec.test_fraction * n as f64).clamp(1, n - 1);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        test.extend_from_slice(&idx[..n_test]);
    }
    test.sort_unstable();
    let in_test: HashSet<usize> = test.iter().copied().collect();
    let train = (0..n).filter(|i| !in_test.contains(i)).collect();
    Ok((train, test))
}

/// Partitions `ds` into (train, test) datasets.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds, spec)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn toy(labels: Vec<usize>, n_classes: usize) -> Dataset {
        let rows = (0..labels.len()).map(|i| vec![i as f64]).collect();
        Dataset::new(names("f", 1), names("c", n_classes), rows, labels).unwrap()
    }

    #[test]
    fn loads_simple_csv() {
        let csv = "f1,f2,label\n1,2,A\n3,4,B\n5,6,A\n";
        let ds = read_csv(csv.as_bytes(), "label").unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.class_names(), ["A", "B"]);
        assert_eq!(ds.labels(), [0, 1, 0]);
        assert_eq!(ds.row(2), [5.0, 6.0]);
    }

    #[test]
    fn label_column_may_sit_anywhere_and_fields_may_be_quoted() {
        let csv = "\"label\",a,\"b\"\n\"x, y\",1.5,\"-2\"\nz,0,1e3\n";
        let ds = read_csv(csv.as_bytes(), "label").unwrap();
        assert_eq!(ds.feature_names(), ["a", "b"]);
        assert_eq!(ds.class_names(), ["x, y", "z"]);
        assert_eq!(ds.rows(), [vec![1.5, -2.0], vec![0.0, 1000.0]]);
    }

    #[test]
    fn nan_cell_is_reported_with_position() {
        let csv = "f1,f2,label\n1,2,A\n3,NaN,B\n";
        match read_csv(csv.as_bytes(), "label") {
            Err(Error::InvalidCell { row, column, value }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "f2");
                assert_eq!(value, "NaN");
            }
            other => panic!("expected InvalidCell, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            read_csv("f1,label\n1,A\n".as_bytes(), "target"),
            Err(Error::MissingColumn(_))
        ));
        assert!(matches!(
            read_csv("f1,label\n".as_bytes(), "label"),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            read_csv("f1,f1,label\n1,2,A\n".as_bytes(), "label"),
            Err(Error::DuplicateFeature(_))
        ));
        assert!(matches!(
            read_csv("f1,label\n,A\n".as_bytes(), "label"),
            Err(Error::InvalidCell { .. })
        ));
        assert!(matches!(
            read_csv("f1,label\ninf,A\n".as_bytes(), "label"),
            Err(Error::InvalidCell { .. })
        ));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "label"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn seven_distinct_labels_give_seven_classes() {
        let counts = [38, 5, 22, 6, 2, 1, 1];
        let mut csv = String::from("f,label\n");
        for (k, &c) in counts.iter().enumerate() {
            for i in 0..c {
                csv.push_str(&format!("{i},T{k}\n"));
            }
        }
        let ds = read_csv(csv.as_bytes(), "label").unwrap();
        assert_eq!(ds.n_rows(), 75);
        assert_eq!(ds.n_classes(), 7);
        assert_eq!(class_distribution(&ds), counts);
    }

    #[test]
    fn class_distribution_counts() {
        let ds = toy(vec![0, 1, 0], 3);
        assert_eq!(class_distribution(&ds), [2, 1, 0]);
    }

    #[test]
    fn unstratified_80_20() {
        let ds = toy((0..100).map(|i| i % 3).collect(), 3);
        let spec = SplitSpec::new(0.2, 42, false).unwrap();
        let (train, test) = split_indices(&ds, &spec).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        assert!(train.iter().all(|i| !test.contains(i)));
        assert_eq!(split_indices(&ds, &spec).unwrap(), (train, test));
    }

    #[test]
    fn stratified_small_minority() {
        let mut labels = vec![0; 8];
        labels.extend([1, 1]);
        let ds = toy(labels, 2);
        let spec = SplitSpec::new(0.2, 3, true).unwrap();
        let (train, test) = split(&ds, &spec).unwrap();
        assert_eq!(test.n_rows(), 2);
        assert!(test.labels().contains(&0));
        assert_eq!(class_distribution(&test), [1, 1]);
        assert_eq!(class_distribution(&train), [7, 1]);
    }

    #[test]
    fn stratified_cohort_sized_split() {
        let counts = [38, 5, 22, 6, 2, 1, 1];
        let labels = counts
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| std::iter::repeat_n(k, c))
            .collect();
        let ds = toy(labels, 7);
        let (train, test) = split(&ds, &SplitSpec::default()).unwrap();
        assert_eq!(test.n_rows(), 15);
        let dist = class_distribution(&test);
        assert_eq!(&dist[5..], [0, 0], "singletons stay in train");
        assert!(dist[..5].iter().all(|&c| c >= 1));
        let train_dist = class_distribution(&train);
        assert!(train_dist.iter().all(|&c| c >= 1));
    }

    #[test]
    fn split_rejects_tiny_dataset_and_bad_fraction() {
        let ds = toy(vec![0], 1);
        assert!(split(&ds, &SplitSpec::default()).is_err());
        assert!(SplitSpec::new(1.0, 0, false).is_err());
        assert!(SplitSpec::new(0.0, 0, false).is_err());
    }

    #[test]
    fn json_schema_fields() {
        let ds = toy(vec![0, 1], 2);
        let v: serde_json::Value = serde_json::from_str(&ds.to_json().unwrap()).unwrap();
        for key in ["feature_names", "class_names", "rows", "labels"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let bad = r#"{"feature_names":["a"],"class_names":["x"],"rows":[[1.0]],"labels":[3]}"#;
        assert!(Dataset::from_json(bad).is_err());
    }
}
