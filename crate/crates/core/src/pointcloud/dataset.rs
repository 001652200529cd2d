//! In-memory datasets and the text manifest format.
//!
//! A manifest is UTF-8 text with one `relpath<TAB>label_index` line per
//! sample; paths are relative to the manifest's directory. Class names
//! live in a sibling `classes.txt`, one per line.

use std::fs;
use std::path::{Path, PathBuf};

use super::io::{load_cloud, save_cloud};
use super::shapes::{generate_shape, ShapeClass, MIN_POINTS};
use super::LabeledCloud;
use crate::error::{Error, Result};
use crate::numerics::split_seed;

pub const CLASSES_FILE: &str = "classes.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub class_names: Vec<String>,
    pub samples: Vec<LabeledCloud>,
}

impl Dataset {
    pub fn new(class_names: Vec<String>, samples: Vec<LabeledCloud>) -> Result<Self> {
        if let Some(s) = samples.iter().find(|s| s.label >= class_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "label {} outside {} classes",
                s.label,
                class_names.len()
            )));
        }
        Ok(Self {
            class_names,
            samples,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Copy with every cloud centred and scaled into the unit sphere.
    pub fn normalized(&self) -> Dataset {
        Dataset {
            class_names: self.class_names.clone(),
            samples: self
                .samples
                .iter()
                .map(|s| LabeledCloud {
                    cloud: s.cloud.normalize_unit_sphere(),
                    label: s.label,
                })
                .collect(),
        }
    }

    /// Writes every sample as a PCB1 file under `data_dir` (relative to the
    /// manifest's directory), then the manifest and `classes.txt`.
    pub fn write(&self, manifest_path: &Path, data_dir: &str) -> Result<DatasetManifest> {
        let root = manifest_dir(manifest_path);
        let target = root.join(data_dir);
        fs::create_dir_all(&target).map_err(|e| Error::io(&target, e))?;
        let mut entries = Vec::with_capacity(self.samples.len());
        for (i, sample) in self.samples.iter().enumerate() {
            let name = format!("{i:05}_{}.pcb", self.class_names[sample.label]);
            let rel = if data_dir.is_empty() {
                PathBuf::from(&name)
            } else {
                Path::new(data_dir).join(&name)
            };
            save_cloud(&root.join(&rel), &sample.cloud)?;
            entries.push((rel, sample.label));
        }
        let manifest = DatasetManifest {
            tag: manifest_tag(manifest_path),
            class_names: self.class_names.clone(),
            entries,
        };
        manifest.write(manifest_path)?;
        Ok(manifest)
    }

    /// Loads a dataset from a manifest file, or from a directory holding `manifest.txt`.
    pub fn load(path: &Path) -> Result<Self> {
        let manifest_path = if path.is_dir() {
            path.join("manifest.txt")
        } else {
            path.to_path_buf()
        };
        let manifest = DatasetManifest::read(&manifest_path)?;
        let root = manifest_dir(&manifest_path);
        let samples = manifest
            .entries
            .iter()
            .map(|(rel, label)| {
                Ok(LabeledCloud {
                    cloud: load_cloud(&root.join(rel))?,
                    label: *label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(manifest.class_names, samples)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    /// `train`, `test`, or a corruption tag such as `rotation_s3`.
    pub tag: String,
    pub class_names: Vec<String>,
    pub entries: Vec<(PathBuf, usize)>,
}

impl DatasetManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let root = manifest_dir(path);
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let mut text = String::new();
        for (rel, label) in &self.entries {
            let rel = rel.to_string_lossy().replace('\\', "/");
            text.push_str(&format!("{rel}\t{label}\n"));
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
        let classes = root.join(CLASSES_FILE);
        let mut names = self.class_names.join("\n");
        names.push('\n');
        fs::write(&classes, names).map_err(|e| Error::io(&classes, e))
    }

    /// Parses and validates a manifest: every label must be in range and every path must exist.
    pub fn read(path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Manifest {
            path: path.to_path_buf(),
            reason,
        };
        let root = manifest_dir(path);
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let classes_path = root.join(CLASSES_FILE);
        let class_names: Vec<String> = fs::read_to_string(&classes_path)
            .map_err(|e| Error::io(&classes_path, e))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().to_string())
            .collect();
        if class_names.is_empty() {
            return Err(bad("classes.txt lists no classes".into()));
        }
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (rel, label) = line
                .split_once('\t')
                .ok_or_else(|| bad(format!("line {}: expected `path<TAB>label`", lineno + 1)))?;
            let label: usize = label
                .trim()
                .parse()
                .map_err(|_| bad(format!("line {}: invalid label `{label}`", lineno + 1)))?;
            if label >= class_names.len() {
                return Err(bad(format!(
                    "line {}: label {label} outside {} classes",
                    lineno + 1,
                    class_names.len()
                )));
            }
            let rel = PathBuf::from(rel);
            if !root.join(&rel).is_file() {
                return Err(bad(format!("line {}: missing file {}", lineno + 1, rel.display())));
            }
            entries.push((rel, label));
        }
        Ok(Self {
            tag: manifest_tag(path),
            class_names,
            entries,
        })
    }
}

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn manifest_tag(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    if stem == "manifest" {
        if let Some(dir) = path.parent().and_then(Path::file_name).and_then(|s| s.to_str()) {
            return dir.to_string();
        }
    }
    stem.to_string()
}

/// Size and seeding of a MiniShapes draw.
#[derive(Debug, Clone, PartialEq)]
pub struct MiniShapesConfig {
    /// Training samples per class, in class order.
    pub train_per_class: Vec<usize>,
    pub test_per_class: Vec<usize>,
    pub points: usize,
    pub seed: u64,
}

impl MiniShapesConfig {
    pub fn uniform(train: usize, test: usize, points: usize, seed: u64) -> Self {
        let n = ShapeClass::ALL.len();
        Self {
            train_per_class: vec![train; n],
            test_per_class: vec![test; n],
            points,
            seed,
        }
    }

    /// Training sizes cycling through `pattern` across classes; test split stays balanced.
    pub fn imbalanced(pattern: &[usize], test: usize, points: usize, seed: u64) -> Self {
        let n = ShapeClass::ALL.len();
        Self {
            train_per_class: (0..n).map(|c| pattern[c % pattern.len()]).collect(),
            test_per_class: vec![test; n],
            points,
            seed,
        }
    }
}

impl Default for MiniShapesConfig {
    fn default() -> Self {
        Self::uniform(100, 30, 64, 0)
    }
}

/// Generates the (train, test) MiniShapes splits, class-major ordered.
pub fn generate_minishapes(config: &MiniShapesConfig) -> Result<(Dataset, Dataset)> {
    let n = ShapeClass::ALL.len();
    if config.points < MIN_POINTS {
        return Err(Error::InvalidArgument(format!(
            "points must be at least {MIN_POINTS}, got {}",
            config.points
        )));
    }
    if config.train_per_class.len() != n || config.test_per_class.len() != n {
        return Err(Error::InvalidArgument(format!("per-class sizes must list {n} classes")));
    }
    let names: Vec<String> = ShapeClass::ALL.iter().map(|c| c.name().to_string()).collect();
    let split = |split_id: u64, counts: &[usize]| -> Result<Dataset> {
        let mut samples = Vec::new();
        for (class, &count) in counts.iter().enumerate() {
            for _ in 0..count {
                let index = samples.len() as u64;
                let seed = split_seed(config.seed, split_id, index);
                samples.push(generate_shape(class, config.points, seed)?);
            }
        }
        Dataset::new(names.clone(), samples)
    };
    Ok((split(0, &config.train_per_class)?, split(1, &config.test_per_class)?))
}
