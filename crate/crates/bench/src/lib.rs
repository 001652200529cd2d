//! Fixtures shared by the benchmarks.

use jgekd_core::pointcloud::generate_shape;
use jgekd_core::{ModelParams, PointCloud};

/// A normalized MiniShapes cloud and an initialized 8-class model.
pub fn fixture(points: usize) -> (PointCloud, usize, ModelParams) {
    let sample = generate_shape(4, points, 17).expect("valid shape");
    let params = ModelParams::init(3, 8).expect("valid model");
    (sample.cloud, sample.label, params)
}
