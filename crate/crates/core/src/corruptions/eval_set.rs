use std::path::{Path, PathBuf};

use super::{apply_corruption, CorruptionKind, Severity};
use crate::error::{Error, Result};
use crate::numerics::{split_seed, Pcg32};
use crate::parallel::map_indexed;
use crate::pointcloud::{Dataset, LabeledCloud};

/// Directory / manifest tag of a single-corruption set, e.g. `rotation_s3`.
pub fn eval_tag(kind: CorruptionKind, severity: Severity) -> String {
    format!("{}_s{}", kind.name(), severity.level())
}

/// Seed stream (the `epoch` argument of [`split_seed`]) reserved for one evaluation cell.
pub fn eval_seed_stream(kind: CorruptionKind, severity: Severity) -> u64 {
    (1 << 32) | (kind.code() << 8) | severity.level() as u64
}

/// Normalizes every sample, then applies exactly one `(kind, severity)` with
/// a per-sample split seed.
pub fn corrupt_eval_set(
    dataset: &Dataset,
    kind: CorruptionKind,
    severity: Severity,
    global_seed: u64,
) -> Result<Dataset> {
    if kind == CorruptionKind::Identity {
        return Err(Error::InvalidArgument(
            "evaluation sets need a real corruption, not identity".into(),
        ));
    }
    let stream = eval_seed_stream(kind, severity);
    let samples = map_indexed(dataset.len(), |i| {
        let sample = &dataset.samples[i];
        let mut rng = Pcg32::seed_from(split_seed(global_seed, stream, i as u64));
        Ok(LabeledCloud {
            cloud: apply_corruption(&sample.cloud.normalize_unit_sphere(), kind, severity, &mut rng)?,
            label: sample.label,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Dataset::new(dataset.class_names.clone(), samples)
}

/// Builds the set and writes it to `<out>/<kind>_s<severity>/` with a `manifest.txt`.
pub fn write_eval_set(
    dataset: &Dataset,
    out: &Path,
    kind: CorruptionKind,
    severity: Severity,
    global_seed: u64,
) -> Result<PathBuf> {
    let corrupted = corrupt_eval_set(dataset, kind, severity, global_seed)?;
    let dir = out.join(eval_tag(kind, severity));
    corrupted.write(&dir.join("manifest.txt"), "")?;
    Ok(dir)
}
