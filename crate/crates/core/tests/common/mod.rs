#![allow(dead_code)]

use jgekd_core::corruptions::{compose_random, CorruptionKind, Severity};
use jgekd_core::losses::ProbVector;
use jgekd_core::model::ParamNodes;
use jgekd_core::numerics::{grad_check, Pcg32};
use jgekd_core::pointcloud::{generate_shape, PointCloud};
use jgekd_core::training::{build_objective, ObjectiveConfig};
use jgekd_core::numerics::Tensor;
use jgekd_core::{ModelParams, Result};

/// Dirichlet(1,…,1) draw via normalized exponentials.
pub fn random_probs(rng: &mut Pcg32, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.next_f64()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn random_prob_vector(rng: &mut Pcg32, n: usize) -> ProbVector {
    ProbVector::new(random_probs(rng, n)).unwrap()
}

pub fn small_cloud(rng: &mut Pcg32, points: usize) -> (PointCloud, usize) {
    let class = rng.index(8);
    let sample = generate_shape(class, points, rng.next_u64()).unwrap();
    (sample.cloud, sample.label)
}

/// Worst relative error over every parameter block of the model.
pub fn objective_grad_error(
    params: &ModelParams,
    clean: &PointCloud,
    corrupted: Option<&PointCloud>,
    label: usize,
    teacher: Option<&ProbVector>,
    config: &ObjectiveConfig,
    h: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for (index, block) in params.blocks().into_iter().enumerate() {
        let err = grad_check(
            |g, leaf| {
                let nodes = ParamNodes::insert_with(g, params, index, leaf);
                build_objective(g, &nodes, clean, corrupted, label, teacher, config)
            },
            block,
            h,
        )?;
        worst = worst.max(err);
    }
    Ok(worst)
}

pub fn corrupted_view(cloud: &PointCloud, rng: &mut Pcg32) -> PointCloud {
    compose_random(cloud, rng).unwrap().0
}

pub fn rotated(cloud: &PointCloud, rng: &mut Pcg32) -> PointCloud {
    jgekd_core::corruptions::apply_corruption(cloud, CorruptionKind::Rotation, Severity::new(3).unwrap(), rng)
        .unwrap()
}

/// Distance of the instance from the nearest ReLU or max-pool switch, from an
/// independent forward pass.
pub fn kink_margin(params: &ModelParams, cloud: &PointCloud) -> f64 {
    fn layer(x: &[f64], rows: usize, w: &Tensor, b: &Tensor) -> Vec<f64> {
        let (inputs, outputs) = (w.shape()[0], w.shape()[1]);
        let mut y = vec![0.0; rows * outputs];
        for r in 0..rows {
            for o in 0..outputs {
                let mut acc = b.data()[o];
                for i in 0..inputs {
                    acc += x[r * inputs + i] * w.data()[i * outputs + o];
                }
                y[r * outputs + o] = acc;
            }
        }
        y
    }
    let [w1, b1, w2, b2, w3, b3, _, _] = params.blocks();
    let rows = cloud.len();
    let pre1 = layer(&cloud.flat(), rows, w1, b1);
    let h1: Vec<f64> = pre1.iter().map(|v| v.max(0.0)).collect();
    let pre2 = layer(&h1, rows, w2, b2);
    let width = w2.shape()[1];
    let mut margin = pre1.iter().chain(&pre2).map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let mut embedding = vec![0.0; width];
    for c in 0..width {
        let mut col: Vec<f64> = (0..rows).map(|r| pre2[r * width + c]).collect();
        col.sort_by(|a, b| b.total_cmp(a));
        embedding[c] = col[0].max(0.0);
        if col[0] > 0.0 && rows > 1 {
            margin = margin.min(col[0] - col[1]);
        }
    }
    let pre3 = layer(&embedding, 1, w3, b3);
    pre3.iter().map(|v| v.abs()).fold(margin, f64::min)
}

