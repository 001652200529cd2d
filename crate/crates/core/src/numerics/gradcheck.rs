use super::graph::{Graph, NodeId};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Compares reverse-mode gradients against central differences.
///
/// `build` receives a fresh graph and the leaf holding `x`, and returns the
/// scalar root. Perturbations are applied to that leaf and the graph is
/// re-evaluated in place, so anything the builder detached stays constant
/// on both sides of the comparison.
///
/// Returns `max_k |analytic_k - numeric_k| / max(1e-8, |numeric_k|)`.
pub fn grad_check<F>(build: F, x: &Tensor, h: f64) -> Result<f64>
where
    F: FnOnce(&mut Graph, NodeId) -> Result<NodeId>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let mut graph = Graph::new();
    let leaf = graph.leaf(x.clone());
    let root = build(&mut graph, leaf)?;
    let analytic = graph.backward(root)?.take(leaf);

    let mut worst = 0.0f64;
    let mut probe = x.clone();
    for k in 0..x.len() {
        let base = x.data()[k];
        probe.data_mut()[k] = base + h;
        graph.set_leaf(leaf, probe.clone())?;
        let plus = scalar(&graph.eval(root)?)?;
        probe.data_mut()[k] = base - h;
        graph.set_leaf(leaf, probe.clone())?;
        let minus = scalar(&graph.eval(root)?)?;
        probe.data_mut()[k] = base;

        let numeric = (plus - minus) / (2.0 * h);
        let err = (analytic.data()[k] - numeric).abs() / numeric.abs().max(1e-8);
        worst = worst.max(err);
    }
    graph.set_leaf(leaf, x.clone())?;
    graph.eval(root)?;
    Ok(worst)
}

fn scalar(t: &Tensor) -> Result<f64> {
    t.item().ok_or_else(|| Error::NonScalarRoot(t.shape().to_vec()))
}
