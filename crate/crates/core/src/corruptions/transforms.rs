use std::f64::consts::PI;

use super::{CorruptionKind, Severity};
use crate::error::{Error, Result};
use crate::numerics::Pcg32;
use crate::pointcloud::{distance, Point, PointCloud};

/// Subtractive corruptions never leave fewer points than this.
pub const MIN_SURVIVORS: usize = 8;

type Mat3 = [[f64; 3]; 3];

/// Applies one corruption at the given severity. All randomness comes from `rng`.
pub fn apply_corruption(
    cloud: &PointCloud,
    kind: CorruptionKind,
    severity: Severity,
    rng: &mut Pcg32,
) -> Result<PointCloud> {
    let s = severity.factor();
    let level = severity.level() as usize;
    let pts = cloud.points();
    let out = match kind {
        CorruptionKind::Identity => pts.to_vec(),
        CorruptionKind::Rotation => {
            let axis = rng.unit_vector();
            let angle = rng.next_f64() * s * PI / 12.0;
            transform_points(pts, &rotation_matrix(axis, angle))
        }
        CorruptionKind::Shear => {
            let mut m = identity();
            for (r, c) in [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)] {
                m[r][c] = rng.uniform(-1.0, 1.0) * 0.05 * s;
            }
            transform_points(pts, &m)
        }
        CorruptionKind::Ffd => ffd(pts, s, rng),
        CorruptionKind::Rbf => rbf(pts, s, rng, |d2| (-d2 / 0.25).exp()),
        CorruptionKind::InvRbf => rbf(pts, s, rng, |d2| (1.0 + d2 / 0.25).powf(-0.5)),
        CorruptionKind::Gaussian => pts
            .iter()
            .map(|p| p.map(|c| c + 0.01 * s * rng.normal()))
            .collect(),
        CorruptionKind::Uniform => pts
            .iter()
            .map(|p| p.map(|c| c + 0.015 * s * rng.uniform(-1.0, 1.0)))
            .collect(),
        CorruptionKind::Impulse => {
            // ceil(0.02 * s * P)
            let count = (level * pts.len()).div_ceil(50);
            let mut out = pts.to_vec();
            for i in rng.sample_indices(pts.len(), count) {
                let d = rng.unit_vector();
                for k in 0..3 {
                    out[i][k] += 0.1 * d[k];
                }
            }
            out
        }
        CorruptionKind::Upsampling => {
            let extra = (level * pts.len()).div_ceil(10);
            let mut out = pts.to_vec();
            for _ in 0..extra {
                let src = pts[rng.index(pts.len())];
                out.push(src.map(|c| c + 0.01 * rng.normal()));
            }
            out
        }
        CorruptionKind::Background => {
            let extra = (level * pts.len()).div_ceil(20);
            let mut out = pts.to_vec();
            for _ in 0..extra {
                out.push([
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                ]);
            }
            out
        }
        CorruptionKind::DensityInc => {
            let anchors = pick_anchors(pts, level, rng);
            let mut out = pts.to_vec();
            for p in pts {
                if near_any(*p, &anchors, 0.25) {
                    for _ in 0..2 {
                        out.push(p.map(|c| c + 0.005 * rng.normal()));
                    }
                }
            }
            out
        }
        CorruptionKind::DensityDec => {
            let anchors = pick_anchors(pts, level, rng);
            let mut candidates: Vec<usize> = (0..pts.len())
                .filter(|&i| near_any(pts[i], &anchors, 0.25))
                .collect();
            rng.shuffle(&mut candidates);
            let drop = (candidates.len() * 3 / 4).min(pts.len().saturating_sub(MIN_SURVIVORS));
            remove_indices(pts, &candidates[..drop])
        }
        CorruptionKind::Cutout => {
            let anchors = pick_anchors(pts, level, rng);
            let mut candidates: Vec<(f64, usize)> = (0..pts.len())
                .filter_map(|i| {
                    let d = anchors
                        .iter()
                        .map(|a| distance(pts[i], *a))
                        .fold(f64::INFINITY, f64::min);
                    (d <= 0.15).then_some((d, i))
                })
                .collect();
            // Closest to an anchor goes first when the survivor floor caps deletions.
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let drop = candidates.len().min(pts.len().saturating_sub(MIN_SURVIVORS));
            let doomed: Vec<usize> = candidates[..drop].iter().map(|&(_, i)| i).collect();
            remove_indices(pts, &doomed)
        }
    };
    PointCloud::new(out).map_err(|e| match e {
        Error::NonFinite(msg) => Error::Numerical(format!("{kind} produced {msg}")),
        other => other,
    })
}

/// Rodrigues rotation about a unit axis.
pub fn rotation_matrix(axis: Point, angle: f64) -> Mat3 {
    let [x, y, z] = axis;
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

/// Maps every point through `m` (column-vector convention: p' = m p).
pub fn apply_linear(cloud: &PointCloud, m: &Mat3) -> PointCloud {
    PointCloud::new(transform_points(cloud.points(), m)).expect("linear map keeps points finite")
}

fn transform_points(pts: &[Point], m: &Mat3) -> Vec<Point> {
    pts.iter()
        .map(|p| {
            [0, 1, 2].map(|r| m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2])
        })
        .collect()
}

fn identity() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

fn bernstein2(t: f64) -> [f64; 3] {
    let u = 1.0 - t;
    [u * u, 2.0 * t * u, t * t]
}

/// Free-form deformation with a 3x3x3 quadratic Bernstein lattice spanning
/// the cloud's bounding cube. The undisplaced lattice reproduces the
/// identity, so only the control-point offsets move points.
fn ffd(pts: &[Point], s: f64, rng: &mut Pcg32) -> Vec<Point> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let center = [0, 1, 2].map(|k| 0.5 * (lo[k] + hi[k]));
    let half = (0..3)
        .map(|k| 0.5 * (hi[k] - lo[k]))
        .fold(1e-9, f64::max);
    let offsets: Vec<[f64; 3]> = (0..27)
        .map(|_| [rng.normal(), rng.normal(), rng.normal()].map(|z| 0.04 * s * z))
        .collect();
    pts.iter()
        .map(|p| {
            let b = [0, 1, 2].map(|k| bernstein2((p[k] - center[k] + half) / (2.0 * half)));
            let mut out = *p;
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        let w = b[0][i] * b[1][j] * b[2][l];
                        let d = offsets[(i * 3 + j) * 3 + l];
                        for k in 0..3 {
                            out[k] += w * d[k];
                        }
                    }
                }
            }
            out
        })
        .collect()
}

fn rbf(pts: &[Point], s: f64, rng: &mut Pcg32, kernel: impl Fn(f64) -> f64) -> Vec<Point> {
    const ANCHORS: usize = 5;
    let centers: Vec<Point> = (0..ANCHORS)
        .map(|_| loop {
            let c = [
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            ];
            if c.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                break c;
            }
        })
        .collect();
    let amplitudes: Vec<Point> = (0..ANCHORS)
        .map(|_| [rng.normal(), rng.normal(), rng.normal()].map(|z| 0.05 * s * z))
        .collect();
    pts.iter()
        .map(|p| {
            let mut out = *p;
            for (c, d) in centers.iter().zip(&amplitudes) {
                let dist = distance(*p, *c);
                let w = kernel(dist * dist);
                for k in 0..3 {
                    out[k] += w * d[k];
                }
            }
            out
        })
        .collect()
}

/// `count` distinct existing points used as region centres.
fn pick_anchors(pts: &[Point], count: usize, rng: &mut Pcg32) -> Vec<Point> {
    rng.sample_indices(pts.len(), count)
        .into_iter()
        .map(|i| pts[i])
        .collect()
}

fn near_any(p: Point, anchors: &[Point], radius: f64) -> bool {
    anchors.iter().any(|a| distance(p, *a) <= radius)
}

fn remove_indices(pts: &[Point], doomed: &[usize]) -> Vec<Point> {
    let mut keep = vec![true; pts.len()];
    for &i in doomed {
        keep[i] = false;
    }
    pts.iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}
