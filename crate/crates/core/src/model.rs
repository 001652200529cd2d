//! Shared-MLP point classifier: 3 → 32 → 64 per point, column max-pool,
//! then 64 → 32 → N. The siamese branches and the frozen teacher are all
//! instances of this one architecture.

use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{Gradients, Graph, NodeId, Pcg32, Tensor};
use crate::pointcloud::PointCloud;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"JGP1";

const HIDDEN1: usize = 32;
const HIDDEN2: usize = 64;
const HIDDEN3: usize = 32;

/// Width of the pooled embedding.
pub const EMBEDDING_DIM: usize = HIDDEN2;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n_classes: usize,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub w3: Tensor,
    pub b3: Tensor,
    pub w4: Tensor,
    pub b4: Tensor,
}

/// Block shapes in checkpoint order.
fn block_shapes(n_classes: usize) -> [Vec<usize>; 8] {
    [
        vec![3, HIDDEN1],
        vec![HIDDEN1],
        vec![HIDDEN1, HIDDEN2],
        vec![HIDDEN2],
        vec![HIDDEN2, HIDDEN3],
        vec![HIDDEN3],
        vec![HIDDEN3, n_classes],
        vec![n_classes],
    ]
}

impl ModelParams {
    /// He-normal weights, zero biases.
    pub fn init(seed: u64, n_classes: usize) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 classes, got {n_classes}"
            )));
        }
        let mut rng = Pcg32::seed_from(seed);
        let blocks = block_shapes(n_classes).map(|shape| {
            if shape.len() == 2 {
                let std = (2.0 / shape[0] as f64).sqrt();
                let data = (0..shape[0] * shape[1]).map(|_| std * rng.normal()).collect();
                Tensor::new(shape, data).expect("shape matches")
            } else {
                Tensor::zeros(&shape)
            }
        });
        Ok(Self::from_blocks(n_classes, blocks))
    }

    /// Zero-valued parameters, used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self::from_blocks(
            self.n_classes,
            block_shapes(self.n_classes).map(|s| Tensor::zeros(&s)),
        )
    }

    fn from_blocks(n_classes: usize, blocks: [Tensor; 8]) -> Self {
        let [w1, b1, w2, b2, w3, b3, w4, b4] = blocks;
        Self {
            n_classes,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            w4,
            b4,
        }
    }

    pub fn blocks(&self) -> [&Tensor; 8] {
        [
            &self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3, &self.w4, &self.b4,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut Tensor; 8] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
            &mut self.w4,
            &mut self.b4,
        ]
    }

    pub fn n_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.is_finite())
    }

    /// All parameters concatenated in checkpoint order.
    pub fn flatten(&self) -> Vec<f64> {
        self.blocks().iter().flat_map(|b| b.data().iter().copied()).collect()
    }

    pub fn from_flat(n_classes: usize, flat: &[f64]) -> Result<Self> {
        let shapes = block_shapes(n_classes);
        let total: usize = shapes.iter().map(|s| s.iter().product::<usize>()).sum();
        if flat.len() != total {
            return Err(Error::InvalidArgument(format!(
                "expected {total} parameters for {n_classes} classes, got {}",
                flat.len()
            )));
        }
        let mut offset = 0;
        let blocks = shapes.map(|s| {
            let n: usize = s.iter().product();
            let t = Tensor::new(s, flat[offset..offset + n].to_vec()).expect("sized");
            offset += n;
            t
        });
        Ok(Self::from_blocks(n_classes, blocks))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(8 + 8 * self.n_params());
        buf.extend_from_slice(&CHECKPOINT_MAGIC);
        buf.extend_from_slice(&(self.n_classes as u32).to_le_bytes());
        for v in self.flatten() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() >= 4 && bytes[..4] != CHECKPOINT_MAGIC {
            let mut found = [0u8; 4];
            found.copy_from_slice(&bytes[..4]);
            return Err(Error::BadMagic {
                expected: CHECKPOINT_MAGIC,
                found,
            });
        }
        if bytes.len() < 8 {
            return Err(Error::Truncated {
                expected: 8,
                found: bytes.len(),
            });
        }
        let n_classes = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        if n_classes < 2 {
            return Err(Error::InvalidArgument(format!("checkpoint has {n_classes} classes")));
        }
        let count: usize = block_shapes(n_classes)
            .iter()
            .map(|s| s.iter().product::<usize>())
            .sum();
        let expected = 8 + 8 * count;
        if bytes.len() != expected {
            return Err(Error::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        let flat: Vec<f64> = bytes[8..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let params = Self::from_flat(n_classes, &flat)?;
        if !params.is_finite() {
            return Err(Error::NonFinite("checkpoint parameters".into()));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub fn init_params(seed: u64, n_classes: usize) -> Result<ModelParams> {
    ModelParams::init(seed, n_classes)
}

/// Graph leaves holding one copy of the parameters.
#[derive(Debug, Clone, Copy)]
pub struct ParamNodes([NodeId; 8]);

impl ParamNodes {
    pub fn insert(graph: &mut Graph, params: &ModelParams) -> Self {
        Self(params.blocks().map(|b| graph.leaf(b.clone())))
    }

    /// Like [`ParamNodes::insert`], but block `index` (checkpoint order) is
    /// taken from an existing node instead of a fresh leaf.
    pub fn insert_with(graph: &mut Graph, params: &ModelParams, index: usize, node: NodeId) -> Self {
        let mut k = 0;
        Self(params.blocks().map(|b| {
            let id = if k == index { node } else { graph.leaf(b.clone()) };
            k += 1;
            id
        }))
    }

    /// Copies the adjoints of the parameter leaves into a [`ModelParams`].
    pub fn gradients(&self, grads: &Gradients, like: &ModelParams) -> ModelParams {
        let mut out = like.zeros_like();
        for (dst, id) in out.blocks_mut().into_iter().zip(self.0) {
            dst.data_mut().copy_from_slice(grads.get(id).data());
        }
        out
    }

    pub fn ids(&self) -> [NodeId; 8] {
        self.0
    }
}

/// Node handles for one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardNodes {
    pub logits: NodeId,
    pub probs: NodeId,
    pub embedding: NodeId,
}

/// Builds one forward pass into `graph`.
pub fn forward_graph(graph: &mut Graph, params: &ParamNodes, cloud: &PointCloud) -> Result<ForwardNodes> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let [w1, b1, w2, b2, w3, b3, w4, b4] = params.0;
    let x = graph.leaf(Tensor::matrix(cloud.len(), 3, cloud.flat())?);
    let h1 = graph.affine(x, w1, b1)?;
    let h1 = graph.relu(h1)?;
    let h2 = graph.affine(h1, w2, b2)?;
    let h2 = graph.relu(h2)?;
    let embedding = graph.reduce_max(h2)?;
    let h3 = graph.affine(embedding, w3, b3)?;
    let h3 = graph.relu(h3)?;
    let logits = graph.affine(h3, w4, b4)?;
    let probs = graph.softmax(logits)?;
    Ok(ForwardNodes {
        logits,
        probs,
        embedding,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub embedding: Vec<f64>,
}

impl ForwardOutput {
    /// Predicted class; ties go to the lowest index.
    pub fn predicted(&self) -> usize {
        argmax(&self.probs)
    }
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn forward(params: &ModelParams, cloud: &PointCloud) -> Result<ForwardOutput> {
    let mut graph = Graph::new();
    let nodes = ParamNodes::insert(&mut graph, params);
    let out = forward_graph(&mut graph, &nodes, cloud)?;
    Ok(ForwardOutput {
        logits: graph.value(out.logits).data().to_vec(),
        probs: graph.value(out.probs).data().to_vec(),
        embedding: graph.value(out.embedding).data().to_vec(),
    })
}
