//! Dense tensors, reverse-mode differentiation, and reproducible randomness.

mod gradcheck;
mod graph;
mod rng;
mod tensor;

pub use gradcheck::grad_check;
pub use graph::{Gradients, Graph, Node, NodeId, Op, LOG_FLOOR};
pub use rng::{split_seed, splitmix64_mix, Pcg32, DEFAULT_STREAM};
pub use tensor::Tensor;
