use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{forward, ModelParams};
use crate::parallel::map_indexed;
use crate::pointcloud::Dataset;

/// Accuracy summary plus, for training runs, the per-epoch loss history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Overall accuracy.
    pub oa: f64,
    /// Unweighted mean of per-class recall over classes that have samples.
    pub macc: f64,
    pub class_names: Vec<String>,
    /// Recall per class; `None` where the class has no samples.
    pub per_class: Vec<Option<f64>>,
    pub class_counts: Vec<usize>,
    pub loss_history: Vec<f64>,
}

impl MetricsReport {
    /// Builds a report from `(label, prediction)` pairs.
    pub fn from_predictions(class_names: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("cannot evaluate an empty dataset".into()));
        }
        let n = class_names.len();
        let mut counts = vec![0usize; n];
        let mut hits = vec![0usize; n];
        for &(label, pred) in pairs {
            counts[label] += 1;
            hits[label] += (label == pred) as usize;
        }
        let per_class: Vec<Option<f64>> = counts
            .iter()
            .zip(&hits)
            .map(|(&c, &h)| (c > 0).then(|| h as f64 / c as f64))
            .collect();
        let present: Vec<f64> = per_class.iter().flatten().copied().collect();
        Ok(Self {
            oa: hits.iter().sum::<usize>() as f64 / pairs.len() as f64,
            macc: present.iter().sum::<f64>() / present.len() as f64,
            class_names,
            per_class,
            class_counts: counts,
            loss_history: Vec::new(),
        })
    }

    /// `|OA - mAcc|`.
    pub fn gap(&self) -> f64 {
        (self.oa - self.macc).abs()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Long-format CSV: `section,key,value`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "key", "value"])?;
        w.write_record(["summary", "oa", &self.oa.to_string()])?;
        w.write_record(["summary", "macc", &self.macc.to_string()])?;
        for (name, acc) in self.class_names.iter().zip(&self.per_class) {
            let v = acc.map(|a| a.to_string()).unwrap_or_default();
            w.write_record(["class", name, &v])?;
        }
        for (epoch, loss) in self.loss_history.iter().enumerate() {
            w.write_record(["loss", &epoch.to_string(), &loss.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

/// Argmax predictions for every sample, in dataset order.
pub fn predict(params: &ModelParams, dataset: &Dataset) -> Result<Vec<usize>> {
    map_indexed(dataset.len(), |i| {
        forward(params, &dataset.samples[i].cloud).map(|o| o.predicted())
    })
    .into_iter()
    .collect()
}

pub fn evaluate(params: &ModelParams, dataset: &Dataset) -> Result<MetricsReport> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate an empty dataset".into()));
    }
    if dataset.n_classes() != params.n_classes {
        return Err(Error::InvalidArgument(format!(
            "model has {} classes, dataset has {}",
            params.n_classes,
            dataset.n_classes()
        )));
    }
    let preds = predict(params, dataset)?;
    let pairs: Vec<(usize, usize)> = dataset.samples.iter().map(|s| s.label).zip(preds).collect();
    MetricsReport::from_predictions(dataset.class_names.clone(), &pairs)
}
