use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::metrics::{evaluate, MetricsReport};
use super::objective::{build_objective, ObjectiveConfig, Strategy};
use crate::corruptions::{compose_random_with, ComposeConfig};
use crate::error::{Error, Result};
use crate::losses::{LossWeights, ProbVector, DEFAULT_SMOOTHING};
use crate::model::{forward, ModelParams, ParamNodes};
use crate::numerics::{split_seed, Graph, Pcg32};
use crate::parallel::map_indexed;
use crate::pointcloud::Dataset;

/// Sample index reserved for the per-epoch shuffle stream.
const SHUFFLE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub strategy: Strategy,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Label-smoothing ratio ε.
    pub smoothing: f64,
    pub seed: u64,
    pub detach_target: bool,
    pub augmentation: bool,
    pub noise_probability: f64,
    pub density_probability: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::St,
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 16,
            alpha: 1.0,
            beta: 1.0,
            smoothing: DEFAULT_SMOOTHING,
            seed: 0,
            detach_target: false,
            augmentation: true,
            noise_probability: 0.5,
            density_probability: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        LossWeights::new(self.alpha, self.beta)?;
        if !(0.0..1.0).contains(&self.smoothing) {
            return Err(Error::InvalidArgument(format!(
                "smoothing {} outside [0, 1)",
                self.smoothing
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for p in [self.noise_probability, self.density_probability] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("slot probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn objective(&self) -> Result<ObjectiveConfig> {
        Ok(ObjectiveConfig {
            strategy: self.strategy,
            weights: LossWeights::new(self.alpha, self.beta)?,
            smoothing: self.smoothing,
            detach_target: self.detach_target,
        })
    }

    pub fn compose(&self) -> ComposeConfig {
        ComposeConfig {
            noise_probability: self.noise_probability,
            density_probability: self.density_probability,
        }
    }
}

/// Loss and parameter gradient of one sample at one epoch.
pub fn sample_gradient(
    params: &ModelParams,
    dataset: &Dataset,
    index: usize,
    epoch: usize,
    config: &TrainConfig,
    teacher_probs: Option<&ProbVector>,
) -> Result<(f64, ModelParams)> {
    let sample = &dataset.samples[index];
    let clean = sample.cloud.normalize_unit_sphere();
    let corrupted = if config.augmentation {
        let mut rng = Pcg32::seed_from(split_seed(config.seed, epoch as u64, index as u64));
        Some(compose_random_with(&clean, &mut rng, &config.compose())?.0)
    } else {
        None
    };
    let mut graph = Graph::new();
    let nodes = ParamNodes::insert(&mut graph, params);
    let root = build_objective(
        &mut graph,
        &nodes,
        &clean,
        corrupted.as_ref(),
        sample.label,
        teacher_probs,
        &config.objective()?,
    )?;
    let loss = graph.value(root).item().expect("scalar objective");
    if !loss.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite loss {loss} at epoch {epoch}, sample {index} (label {})",
            sample.label
        )));
    }
    let grads = graph.backward(root)?;
    Ok((loss, nodes.gradients(&grads, params)))
}

/// Trains from a seed-derived initialization.
///
/// Each epoch shuffles the sample order with its own split seed; each
/// sample's corruption stream depends only on `(seed, epoch, sample index)`.
/// Gradients are averaged over mini-batches and reduced in batch order, so
/// the result is bit-identical regardless of `JGE_THREADS`.
pub fn train(
    config: &TrainConfig,
    train_set: &Dataset,
    test_set: &Dataset,
    teacher: Option<&ModelParams>,
) -> Result<(ModelParams, MetricsReport)> {
    config.validate()?;
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::InvalidArgument("train and test splits must be non-empty".into()));
    }
    let params = ModelParams::init(config.seed, train_set.n_classes())?;
    let (params, history) = train_from(config, params, train_set, teacher)?;
    let mut report = evaluate(&params, test_set)?;
    report.loss_history = history;
    Ok((params, report))
}

/// Runs the optimisation loop from given parameters; returns the per-epoch mean loss.
pub fn train_from(
    config: &TrainConfig,
    mut params: ModelParams,
    train_set: &Dataset,
    teacher: Option<&ModelParams>,
) -> Result<(ModelParams, Vec<f64>)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    if train_set.n_classes() != params.n_classes {
        return Err(Error::InvalidArgument(format!(
            "model has {} classes, dataset has {}",
            params.n_classes,
            train_set.n_classes()
        )));
    }
    let teacher_probs = match (config.strategy, teacher) {
        (Strategy::Tkd, None) => {
            return Err(Error::InvalidArgument("tKD requires a teacher checkpoint".into()))
        }
        (Strategy::Tkd, Some(t)) => {
            if t.n_classes != params.n_classes {
                return Err(Error::InvalidArgument("teacher class count differs".into()));
            }
            // The teacher is frozen and sees only clean clouds, so its outputs are fixed.
            let probs = map_indexed(train_set.len(), |i| {
                let clean = train_set.samples[i].cloud.normalize_unit_sphere();
                forward(t, &clean).and_then(|o| ProbVector::new(o.probs))
            });
            Some(probs.into_iter().collect::<Result<Vec<_>>>()?)
        }
        _ => None,
    };

    let mut adam = AdamState::new(&params, config.learning_rate);
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..config.epochs {
        let mut shuffle = Pcg32::seed_from(split_seed(config.seed, epoch as u64, SHUFFLE_STREAM));
        order.sort_unstable();
        shuffle.shuffle(&mut order);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results = map_indexed(batch.len(), |k| {
                let i = batch[k];
                let tp = teacher_probs.as_ref().map(|v| &v[i]);
                sample_gradient(&params, train_set, i, epoch, config, tp)
            });
            let mut total = params.zeros_like();
            for result in results {
                let (loss, grads) = result?;
                epoch_loss += loss;
                for (dst, src) in total.blocks_mut().into_iter().zip(grads.blocks()) {
                    dst.add_assign(src);
                }
            }
            let scale = 1.0 / batch.len() as f64;
            total.blocks_mut().into_iter().for_each(|b| b.scale_in_place(scale));
            adam.update(&mut params, &total);
            if !params.is_finite() {
                return Err(Error::Numerical(format!(
                    "parameters became non-finite at epoch {epoch} (step {})",
                    adam.step
                )));
            }
        }
        history.push(epoch_loss / train_set.len() as f64);
    }
    Ok((params, history))
}
