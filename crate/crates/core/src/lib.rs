//! Joint graph entropy knowledge distillation for point-cloud classifiers.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: tensors, a small reverse-mode engine, PCG32 streams.
//! * [`pointcloud`]: clouds, the synthetic MiniShapes generator, file I/O.
//! * [`corruptions`]: the corruption taxonomy and random composition.
//! * [`model`]: a shared-MLP, max-pooled point classifier.
//! * [`losses`]: joint graphs, joint graph entropy and the distillation losses.
//! * [`training`]: ST / sKD / tKD training, metrics, robustness tables.

pub mod corruptions;
pub mod error;
pub mod losses;
pub mod model;
pub mod numerics;
pub mod parallel;
pub mod pointcloud;
pub mod training;

pub use corruptions::{CorruptionKind, CorruptionSpec, Family, Severity};
pub use error::{Error, Result};
pub use losses::{JointGraph, LossWeights, ProbVector};
pub use model::{ForwardOutput, ModelParams};
pub use numerics::{Graph, NodeId, Pcg32, Tensor};
pub use pointcloud::{Dataset, DatasetManifest, LabeledCloud, PointCloud};
pub use training::{CorrelationMatrix, MetricsReport, RobustnessTable, Strategy, TrainConfig};
