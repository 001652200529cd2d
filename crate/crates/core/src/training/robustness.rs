use serde::{Deserialize, Serialize};

use super::metrics::evaluate;
use crate::corruptions::{corrupt_eval_set, CorruptionKind, Family, Severity};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::pointcloud::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub kind: String,
    /// Accuracy of the evaluated model at severities 1..=5.
    pub oa: [f64; 5],
    /// Accuracy of the reference model on the same corrupted data.
    pub ref_oa: [f64; 5],
    /// Corruption error relative to the reference.
    pub ce: f64,
}

impl RobustnessRow {
    pub fn corruption(&self) -> CorruptionKind {
        self.kind.parse().expect("rows are built from known kinds")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessTable {
    pub rows: Vec<RobustnessRow>,
    /// Mean CE over all rows.
    pub mce: f64,
    pub include_background: bool,
    pub seed: u64,
}

/// `Σ_s (1 - oa_s) / Σ_s (1 - ref_s)`.
///
/// A reference with zero error gives 1.0 when the model also has zero
/// error and +∞ otherwise.
pub fn corruption_error(oa: &[f64; 5], ref_oa: &[f64; 5]) -> f64 {
    let num: f64 = oa.iter().map(|a| 1.0 - a).sum();
    let den: f64 = ref_oa.iter().map(|a| 1.0 - a).sum();
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

impl RobustnessTable {
    pub fn from_rows(rows: Vec<RobustnessRow>, include_background: bool, seed: u64) -> Self {
        let mce = rows.iter().map(|r| r.ce).sum::<f64>() / rows.len() as f64;
        Self {
            rows,
            mce,
            include_background,
            seed,
        }
    }

    /// Mean CE over the rows of one corruption family.
    pub fn family_mce(&self, family: Family) -> Option<f64> {
        let ces: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.corruption().family() == family)
            .map(|r| r.ce)
            .collect();
        (!ces.is_empty()).then(|| ces.iter().sum::<f64>() / ces.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per kind with the five OA cells and CE, then an `mCE` line.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["kind", "s1", "s2", "s3", "s4", "s5", "ce"])?;
        for r in &self.rows {
            let mut rec = vec![r.kind.clone()];
            rec.extend(r.oa.iter().map(|v| v.to_string()));
            rec.push(r.ce.to_string());
            w.write_record(&rec)?;
        }
        w.write_record(["mCE", "", "", "", "", "", &self.mce.to_string()])?;
        let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

/// Kinds evaluated by [`robustness_eval`].
pub fn robustness_kinds(include_background: bool) -> Vec<CorruptionKind> {
    CorruptionKind::EVAL
        .into_iter()
        .filter(|&k| include_background || k != CorruptionKind::Background)
        .collect()
}

/// Evaluates `params` and `reference` on identical corrupted copies of
/// `test` for every kind × severity, and reports per-kind CE and mCE.
pub fn robustness_eval(
    params: &ModelParams,
    reference: &ModelParams,
    test: &Dataset,
    seed: u64,
    include_background: bool,
) -> Result<RobustnessTable> {
    let mut rows = Vec::new();
    for kind in robustness_kinds(include_background) {
        let mut oa = [0.0; 5];
        let mut ref_oa = [0.0; 5];
        for (s, severity) in Severity::ALL.into_iter().enumerate() {
            let corrupted = corrupt_eval_set(test, kind, severity, seed)?;
            oa[s] = evaluate(params, &corrupted)?.oa;
            ref_oa[s] = if std::ptr::eq(params, reference) {
                oa[s]
            } else {
                evaluate(reference, &corrupted)?.oa
            };
        }
        rows.push(RobustnessRow {
            kind: kind.name().to_string(),
            ce: corruption_error(&oa, &ref_oa),
            oa,
            ref_oa,
        });
    }
    Ok(RobustnessTable::from_rows(rows, include_background, seed))
}
