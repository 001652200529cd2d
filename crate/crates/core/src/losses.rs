//! Joint graphs, joint graph entropy and the distillation objectives.
//!
//! A joint graph of a probability vector `p` is the rank-one matrix
//! `A_ij = p_i p_j`: entry `(i, j)` is the joint probability that classes
//! `i` and `j` are both active. Two graphs are compared entrywise with
//! `-A_pred ⊙ log(A_target)`, averaged over the `N²` positions.
//!
//! Each loss comes in two forms: a `*_node` builder that appends
//! differentiable nodes to a [`Graph`], and a value-level function over
//! [`ProbVector`] / [`JointGraph`] that runs the same builder.
//!
//! Note the direction: the predicted graph multiplies the log of the
//! target graph. This is the reverse of the textbook cross-entropy
//! convention and is kept as-is, including for the self-distillation loss
//! where the transformed branch sits inside the log.

use crate::error::{Error, Result};
use crate::numerics::{Graph, NodeId, Tensor};

/// Default label-smoothing ratio for the teacher graph and the CE term.
pub const DEFAULT_SMOOTHING: f64 = 0.1;

const PROB_TOLERANCE: f64 = 1e-9;

/// A length-N probability vector: non-negative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty probability vector".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "probabilities must be finite and non-negative: {values:?}"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidArgument(format!("probabilities sum to {sum}")));
        }
        Ok(Self(values))
    }

    pub fn one_hot(class: usize, n: usize) -> Result<Self> {
        if class >= n {
            return Err(Error::InvalidArgument(format!("class {class} outside 0..{n}")));
        }
        let mut v = vec![0.0; n];
        v[class] = 1.0;
        Ok(Self(v))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Softmax of arbitrary finite logits.
    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        let mut g = Graph::new();
        let z = g.leaf(Tensor::vector(logits.to_vec()));
        let p = g.softmax(z)?;
        Ok(Self(g.value(p).data().to_vec()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn tensor(&self) -> Tensor {
        Tensor::vector(self.0.clone())
    }
}

/// Dense N×N joint-probability matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGraph {
    n: usize,
    matrix: Vec<f64>,
}

impl JointGraph {
    pub fn from_matrix(n: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{n}x{n} graph needs {} entries, got {}",
                n * n,
                matrix.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("graph entries must be finite and >= 0".into()));
        }
        Ok(Self { n, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn sum(&self) -> f64 {
        self.matrix.iter().sum()
    }

    pub fn transpose(&self) -> JointGraph {
        let n = self.n;
        let matrix = (0..n * n).map(|k| self.matrix[(k % n) * n + k / n]).collect();
        JointGraph { n, matrix }
    }

    fn tensor(&self) -> Tensor {
        Tensor::matrix(self.n, self.n, self.matrix.clone()).expect("square")
    }

    fn from_node(g: &Graph, id: NodeId) -> Self {
        let t = g.value(id);
        JointGraph {
            n: t.shape()[0],
            matrix: t.data().to_vec(),
        }
    }
}

fn check_same(op: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::shape(op, format!("lengths {a} and {b}")));
    }
    Ok(())
}

fn check_smoothing(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("smoothing ratio {eps} outside [0, 1)")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Label smoothing

/// `q' = q(1-ε) + (1-q) ε/(N-1)` for a one-hot `q`.
pub fn smooth_labels(q: &[f64], eps: f64) -> Result<ProbVector> {
    let hot: Vec<usize> = q.iter().enumerate().filter(|(_, &v)| v == 1.0).map(|(i, _)| i).collect();
    if hot.len() != 1 || q.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument(format!("label is not one-hot: {q:?}")));
    }
    smooth_label(hot[0], q.len(), eps)
}

/// Smoothed label for class index `class` out of `n`.
pub fn smooth_label(class: usize, n: usize, eps: f64) -> Result<ProbVector> {
    check_smoothing(eps)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 classes, got {n}")));
    }
    if class >= n {
        return Err(Error::InvalidArgument(format!("class {class} outside 0..{n}")));
    }
    let off = eps / (n - 1) as f64;
    let mut v = vec![off; n];
    v[class] = 1.0 - eps;
    Ok(ProbVector(v))
}

// ---------------------------------------------------------------------------
// Graph builders

/// `A = pᵀp`.
pub fn joint_graph_node(g: &mut Graph, p: NodeId) -> Result<NodeId> {
    g.outer(p, p)
}

/// `Ā = pᵀp'`, the cross-view graph.
pub fn cross_joint_graph_node(g: &mut Graph, p: NodeId, p_prime: NodeId) -> Result<NodeId> {
    g.outer(p, p_prime)
}

/// `Aᵀ = q'ᵀ p_T`, with both factors held constant.
pub fn teacher_joint_graph_node(g: &mut Graph, smoothed: &ProbVector, teacher: &ProbVector) -> Result<NodeId> {
    check_same("teacher_joint_graph", smoothed.len(), teacher.len())?;
    let q = g.leaf(smoothed.tensor());
    let t = g.leaf(teacher.tensor());
    g.outer(q, t)
}

/// `-A_pred ⊙ log(clamp(A_target))`.
pub fn joint_graph_entropy_node(g: &mut Graph, pred: NodeId, target: NodeId) -> Result<NodeId> {
    let log_target = g.log_clamped(target)?;
    let prod = g.mul(pred, log_target)?;
    g.scale(prod, -1.0)
}

/// `(1/N²) Σ_ij -A_pred ⊙ log(A_target)`.
pub fn jgekd_loss_node(g: &mut Graph, pred: NodeId, target: NodeId) -> Result<NodeId> {
    let n = g.value(pred).shape().first().copied().unwrap_or(1);
    let entropy = joint_graph_entropy_node(g, pred, target)?;
    let total = g.reduce_sum(entropy)?;
    g.scale(total, 1.0 / (n * n) as f64)
}

/// Self-distillation between the clean branch `p` and transformed branch `p'`.
/// With `detach_target`, no gradient flows into `p'`.
pub fn jgeskd_loss_node(g: &mut Graph, p: NodeId, p_prime: NodeId, detach_target: bool) -> Result<NodeId> {
    let target = if detach_target { g.detach(p_prime) } else { p_prime };
    let pred_graph = joint_graph_node(g, p)?;
    let target_graph = joint_graph_node(g, target)?;
    jgekd_loss_node(g, pred_graph, target_graph)
}

/// Teacher distillation: the cross-view student graph against the
/// smoothed-label teacher graph. Only `p` and `p'` receive gradient.
pub fn jgetkd_loss_node(
    g: &mut Graph,
    p: NodeId,
    p_prime: NodeId,
    label: usize,
    teacher: &ProbVector,
    eps: f64,
) -> Result<NodeId> {
    let n = g.value(p).len();
    check_same("jgetkd_loss", n, g.value(p_prime).len())?;
    check_same("jgetkd_loss", n, teacher.len())?;
    let smoothed = smooth_label(label, n, eps)?;
    let student = cross_joint_graph_node(g, p, p_prime)?;
    let target = teacher_joint_graph_node(g, &smoothed, teacher)?;
    jgekd_loss_node(g, student, target)
}

/// `-Σ q'_i log(clamp(p_i))` against the smoothed label.
pub fn cross_entropy_node(g: &mut Graph, p: NodeId, label: usize, eps: f64) -> Result<NodeId> {
    let smoothed = smooth_label(label, g.value(p).len(), eps)?;
    soft_cross_entropy_node(g, p, &smoothed)
}

/// Standard distillation term with temperature 1: `-Σ p_T,i log(clamp(p_S,i))`.
pub fn vanilla_kd_node(g: &mut Graph, p_student: NodeId, teacher: &ProbVector) -> Result<NodeId> {
    soft_cross_entropy_node(g, p_student, teacher)
}

fn soft_cross_entropy_node(g: &mut Graph, p: NodeId, target: &ProbVector) -> Result<NodeId> {
    check_same("cross_entropy", g.value(p).len(), target.len())?;
    let q = g.leaf(target.tensor());
    let log_p = g.log_clamped(p)?;
    let prod = g.mul(q, log_p)?;
    let total = g.reduce_sum(prod)?;
    g.scale(total, -1.0)
}

/// Non-negative weights of the label term and the distillation term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "loss weights must be finite and non-negative (alpha={alpha}, beta={beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }
}

/// `α·ce + β·kd`.
pub fn total_loss_node(g: &mut Graph, ce: NodeId, kd: NodeId, weights: LossWeights) -> Result<NodeId> {
    let a = g.scale(ce, weights.alpha)?;
    let b = g.scale(kd, weights.beta)?;
    g.add(a, b)
}

// ---------------------------------------------------------------------------
// Value-level API

fn scalar_of(g: &Graph, id: NodeId) -> f64 {
    g.value(id).item().expect("scalar loss")
}

pub fn joint_graph(p: &ProbVector) -> JointGraph {
    let mut g = Graph::new();
    let pn = g.leaf(p.tensor());
    let a = joint_graph_node(&mut g, pn).expect("vector operand");
    JointGraph::from_node(&g, a)
}

pub fn cross_joint_graph(p: &ProbVector, p_prime: &ProbVector) -> Result<JointGraph> {
    check_same("cross_joint_graph", p.len(), p_prime.len())?;
    let mut g = Graph::new();
    let a = g.leaf(p.tensor());
    let b = g.leaf(p_prime.tensor());
    let out = cross_joint_graph_node(&mut g, a, b)?;
    Ok(JointGraph::from_node(&g, out))
}

pub fn teacher_joint_graph(smoothed: &ProbVector, teacher: &ProbVector) -> Result<JointGraph> {
    let mut g = Graph::new();
    let out = teacher_joint_graph_node(&mut g, smoothed, teacher)?;
    Ok(JointGraph::from_node(&g, out))
}

/// Entrywise joint graph entropy matrix, row-major.
pub fn joint_graph_entropy(pred: &JointGraph, target: &JointGraph) -> Result<Vec<f64>> {
    check_same("joint_graph_entropy", pred.n, target.n)?;
    let mut g = Graph::new();
    let a = g.leaf(pred.tensor());
    let b = g.leaf(target.tensor());
    let h = joint_graph_entropy_node(&mut g, a, b)?;
    Ok(g.value(h).data().to_vec())
}

pub fn jgekd_loss(pred: &JointGraph, target: &JointGraph) -> Result<f64> {
    check_same("jgekd_loss", pred.n, target.n)?;
    let mut g = Graph::new();
    let a = g.leaf(pred.tensor());
    let b = g.leaf(target.tensor());
    let l = jgekd_loss_node(&mut g, a, b)?;
    Ok(scalar_of(&g, l))
}

pub fn jgeskd_loss(p: &ProbVector, p_prime: &ProbVector, detach_target: bool) -> Result<f64> {
    check_same("jgeskd_loss", p.len(), p_prime.len())?;
    let mut g = Graph::new();
    let a = g.leaf(p.tensor());
    let b = g.leaf(p_prime.tensor());
    let l = jgeskd_loss_node(&mut g, a, b, detach_target)?;
    Ok(scalar_of(&g, l))
}

/// Teacher-distillation loss for one sample; `label` is a one-hot vector.
pub fn jgetkd_loss(
    p_student: &ProbVector,
    p_student_prime: &ProbVector,
    label: &[f64],
    p_teacher: &ProbVector,
    eps: f64,
) -> Result<f64> {
    check_smoothing(eps)?;
    check_same("jgetkd_loss", p_student.len(), label.len())?;
    let class = one_hot_index(label)?;
    let mut g = Graph::new();
    let a = g.leaf(p_student.tensor());
    let b = g.leaf(p_student_prime.tensor());
    let l = jgetkd_loss_node(&mut g, a, b, class, p_teacher, eps)?;
    Ok(scalar_of(&g, l))
}

pub fn cross_entropy_smoothed(p: &ProbVector, label: &[f64], eps: f64) -> Result<f64> {
    check_same("cross_entropy_smoothed", p.len(), label.len())?;
    let smoothed = smooth_labels(label, eps)?;
    let mut g = Graph::new();
    let a = g.leaf(p.tensor());
    let l = soft_cross_entropy_node(&mut g, a, &smoothed)?;
    Ok(scalar_of(&g, l))
}

pub fn vanilla_kd_loss(p_student: &ProbVector, p_teacher: &ProbVector) -> Result<f64> {
    let mut g = Graph::new();
    let a = g.leaf(p_student.tensor());
    let l = vanilla_kd_node(&mut g, a, p_teacher)?;
    Ok(scalar_of(&g, l))
}

pub fn total_loss(ce: f64, kd: f64, alpha: f64, beta: f64) -> Result<f64> {
    let weights = LossWeights::new(alpha, beta)?;
    let mut g = Graph::new();
    let c = g.leaf(Tensor::scalar(ce));
    let k = g.leaf(Tensor::scalar(kd));
    let t = total_loss_node(&mut g, c, k, weights)?;
    Ok(scalar_of(&g, t))
}

fn one_hot_index(q: &[f64]) -> Result<usize> {
    smooth_labels(q, 0.0)?;
    Ok(q.iter().position(|&v| v == 1.0).expect("validated one-hot"))
}
