//! Class-correlation analysis over pooled embeddings.
//!
//! For each pair of classes, a per-dimension Welch two-sample t statistic
//! is computed between the two classes' embeddings. The score is the
//! fraction of dimensions with `|t| < 1.96` (normal-approximation 5%
//! threshold): 1 means indistinguishable, 0 means separated in every
//! dimension. The diagonal compares the two halves of one class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{forward, ModelParams};
use crate::parallel::map_indexed;
use crate::pointcloud::Dataset;

pub const T_THRESHOLD: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub class_names: Vec<String>,
    /// Row-major `N×N` scores.
    pub scores: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn n(&self) -> usize {
        self.class_names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.n() + j]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["class".to_string()];
        header.extend(self.class_names.iter().cloned());
        w.write_record(&header)?;
        for (i, name) in self.class_names.iter().enumerate() {
            let mut rec = vec![name.clone()];
            rec.extend((0..self.n()).map(|j| self.get(i, j).to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

/// Welch's t statistic for two samples. Zero-variance samples give 0 when
/// the means agree and ±∞ otherwise.
pub fn welch_t(a: &[f64], b: &[f64]) -> f64 {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = if x.len() > 1 {
            x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, var, n)
    };
    let (ma, va, na) = stats(a);
    let (mb, vb, nb) = stats(b);
    let diff = ma - mb;
    let se = (va / na + vb / nb).sqrt();
    if se == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    } else {
        diff / se
    }
}

/// Fraction of dimensions whose Welch |t| stays below the threshold.
pub fn insignificance_score(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let dims = a[0].len();
    let quiet = (0..dims)
        .filter(|&d| {
            let xa: Vec<f64> = a.iter().map(|v| v[d]).collect();
            let xb: Vec<f64> = b.iter().map(|v| v[d]).collect();
            welch_t(&xa, &xb).abs() < T_THRESHOLD
        })
        .count();
    quiet as f64 / dims as f64
}

/// Score matrix from per-class feature sets; each pair is computed once and mirrored.
pub fn correlation_from_features(class_names: Vec<String>, features: &[Vec<Vec<f64>>]) -> Result<CorrelationMatrix> {
    let n = features.len();
    if class_names.len() != n {
        return Err(Error::InvalidArgument("one feature set per class required".into()));
    }
    if let Some((c, _)) = features.iter().enumerate().find(|(_, f)| f.len() < 4) {
        return Err(Error::InvalidArgument(format!(
            "class {c} needs at least 4 samples for the split-half diagonal"
        )));
    }
    let mut scores = vec![0.0; n * n];
    for i in 0..n {
        let half = features[i].len() / 2;
        scores[i * n + i] = insignificance_score(&features[i][..half], &features[i][half..]);
        for j in i + 1..n {
            let s = insignificance_score(&features[i], &features[j]);
            scores[i * n + j] = s;
            scores[j * n + i] = s;
        }
    }
    Ok(CorrelationMatrix { class_names, scores })
}

/// Uses the first `samples_per_class` samples of every class, in dataset order.
pub fn class_correlation(params: &ModelParams, dataset: &Dataset, samples_per_class: usize) -> Result<CorrelationMatrix> {
    let n = dataset.n_classes();
    let mut chosen: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in dataset.samples.iter().enumerate() {
        if chosen[s.label].len() < samples_per_class {
            chosen[s.label].push(i);
        }
    }
    if let Some((c, got)) = chosen.iter().enumerate().find(|(_, v)| v.len() < samples_per_class) {
        return Err(Error::InvalidArgument(format!(
            "class `{}` has {} samples, need {samples_per_class}",
            dataset.class_names[c],
            got.len()
        )));
    }
    let flat: Vec<usize> = chosen.iter().flatten().copied().collect();
    let embeddings = map_indexed(flat.len(), |k| {
        forward(params, &dataset.samples[flat[k]].cloud).map(|o| o.embedding)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let features: Vec<Vec<Vec<f64>>> = embeddings
        .chunks(samples_per_class)
        .map(|c| c.to_vec())
        .collect();
    correlation_from_features(dataset.class_names.clone(), &features)
}
