//! Seeded synthetic cohort shaped like a small radiomics table: Gaussian
//! class clusters in a few informative columns, pure noise elsewhere, and
//! wildly different column scales.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng;

const IMAGE_TYPES: [&str; 5] = ["original", "wavelet-LLH", "wavelet-HLL", "wavelet-HHH", "log-sigma-2-0-mm-3D"];

const FEATURES: [(&str, &[&str]); 5] = [
    (
        "firstorder",
        &["Mean", "Median", "Energy", "Entropy", "Kurtosis", "Skewness", "Variance", "Range", "RootMeanSquared"],
    ),
    ("glcm", &["Contrast", "Correlation", "JointEnergy", "JointEntropy", "Idm", "ClusterShade", "Autocorrelation"]),
    ("glrlm", &["RunEntropy", "RunLengthNonUniformity", "ShortRunEmphasis", "LongRunEmphasis"]),
    ("glszm", &["ZoneEntropy", "SizeZoneNonUniformity", "SmallAreaEmphasis", "ZonePercentage"]),
    ("gldm", &["DependenceEntropy", "DependenceNonUniformity", "LargeDependenceEmphasis"]),
];

const SHAPE: [&str; 6] = ["Elongation", "Flatness", "MeshVolume", "Sphericity", "SurfaceArea", "Maximum3DDiameter"];

/// `original_shape_*` columns first, then every image type crossed with
/// every texture family.
pub fn radiomic_feature_names() -> Vec<String> {
    let mut names: Vec<String> = SHAPE.iter().map(|f| format!("original_shape_{f}")).collect();
    for image in IMAGE_TYPES {
        for (family, features) in FEATURES {
            for f in features.iter() {
                names.push(format!("{image}_{family}_{f}"));
            }
        }
    }
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub class_names: Vec<String>,
    pub class_counts: Vec<usize>,
    pub n_features: usize,
    pub n_informative: usize,
    /// Spread of class centres relative to the within-class noise.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    /// 75 patients over seven primary sites with a skewed distribution.
    fn default() -> Self {
        Self {
            class_names: ["NSCLC", "SCLC", "Breast", "Melanoma", "Ovarian", "Kidney", "Uterine"]
                .map(String::from)
                .to_vec(),
            class_counts: vec![38, 5, 22, 6, 2, 1, 1],
            n_features: 120,
            n_informative: 12,
            separation: 0.8,
            seed: 2024,
        }
    }
}

pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    let names = radiomic_feature_names();
    if spec.n_features == 0 || spec.n_features > names.len() {
        return Err(Error::param(format!("n_features must lie in 1..={}", names.len())));
    }
    if spec.n_informative > spec.n_features {
        return Err(Error::param("n_informative exceeds n_features"));
    }
    if spec.class_names.len() != spec.class_counts.len() {
        return Err(Error::DimensionMismatch { expected: spec.class_names.len(), actual: spec.class_counts.len() });
    }
    if !(spec.separation.is_finite() && spec.separation >= 0.0) {
        return Err(Error::param("separation must be finite and non-negative"));
    }

    let mut layout = rng::stream(spec.seed, &[rng::tag::SYNTH, 0]);
    let mut columns: Vec<usize> = (0..spec.n_features).collect();
    columns.shuffle(&mut layout);
    let informative = &columns[..spec.n_informative];
    let scales: Vec<(f64, f64)> = (0..spec.n_features)
        .map(|_| {
            let scale = 10f64.powf(layout.random_range(-2.0..4.0));
            let offset = layout.random_range(-1.0..1.0) * scale * 5.0;
            (scale, offset)
        })
        .collect();
    let centres: Vec<Vec<f64>> = spec
        .class_counts
        .iter()
        .map(|_| {
            let mut c = vec![0.0; spec.n_features];
            for &j in informative {
                c[j] = spec.separation * layout.sample::<f64, _>(StandardNormal);
            }
            c
        })
        .collect();

    let mut labelled: Vec<(usize, Vec<f64>)> = Vec::new();
    for (k, &count) in spec.class_counts.iter().enumerate() {
        for i in 0..count {
            let mut noise = rng::stream(spec.seed, &[rng::tag::SYNTH, 1, k as u64, i as u64]);
            let row = (0..spec.n_features)
                .map(|j| {
                    let z: f64 = noise.sample(StandardNormal);
                    let (scale, offset) = scales[j];
                    offset + scale * (centres[k][j] + z)
                })
                .collect();
            labelled.push((k, row));
        }
    }
    labelled.shuffle(&mut rng::stream(spec.seed, &[rng::tag::SYNTH, 2]));
    let (labels, rows) = labelled.into_iter().unzip();
    Dataset::new(names[..spec.n_features].to_vec(), spec.class_names.clone(), rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::class_distribution;

    #[test]
    fn default_cohort_shape() {
        let ds = generate(&SynthSpec::default()).unwrap();
        assert_eq!(ds.n_rows(), 75);
        assert_eq!(ds.n_features(), 120);
        assert_eq!(class_distribution(&ds), vec![38, 5, 22, 6, 2, 1, 1]);
        assert_eq!(generate(&SynthSpec::default()).unwrap(), ds);
    }

    #[test]
    fn names_are_unique() {
        let mut names = radiomic_feature_names();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = SynthSpec { n_features: 10_000, ..Default::default() };
        assert!(generate(&bad).is_err());
        let bad = SynthSpec { n_informative: 200, ..Default::default() };
        assert!(generate(&bad).is_err());
        let bad = SynthSpec { class_counts: vec![1], ..Default::default() };
        assert!(generate(&bad).is_err());
    }
}
