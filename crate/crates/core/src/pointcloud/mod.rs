//! Point clouds, the MiniShapes generator, and on-disk formats.

mod dataset;
mod io;
mod shapes;

pub use dataset::{generate_minishapes, Dataset, DatasetManifest, MiniShapesConfig};
pub use io::{decode_cloud, encode_cloud, load_cloud, save_cloud, CLOUD_MAGIC};
pub use shapes::{generate_shape, sample_surface, ShapeClass, MIN_POINTS};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Ordered list of 3-D points. Never empty, always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if let Some(p) = points.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(format!("point {p:?}")));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point {
        let n = self.points.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.points {
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        c.map(|v| v / n)
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(|p| norm(*p)).fold(0.0, f64::max)
    }

    /// Row-major `[points, 3]` buffer for the model input.
    pub fn flat(&self) -> Vec<f64> {
        self.points.iter().flatten().copied().collect()
    }

    /// Translates to a zero centroid and scales the farthest point onto the
    /// unit sphere. A cloud whose points all coincide maps to the origin.
    pub fn normalize_unit_sphere(&self) -> PointCloud {
        let c = self.centroid();
        let mut points: Vec<Point> = self
            .points
            .iter()
            .map(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]])
            .collect();
        let max = points.iter().map(|p| norm(*p)).fold(0.0, f64::max);
        if max >= 1e-12 {
            for p in &mut points {
                for v in p.iter_mut() {
                    *v /= max;
                }
            }
        } else {
            points.iter_mut().for_each(|p| *p = [0.0; 3]);
        }
        PointCloud { points }
    }
}

/// A cloud paired with its class index.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub cloud: PointCloud,
    pub label: usize,
}

pub fn norm(p: Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

pub fn distance(a: Point, b: Point) -> f64 {
    norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}
