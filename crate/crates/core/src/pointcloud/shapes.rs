use std::f64::consts::{PI, TAU};

use super::{LabeledCloud, Point, PointCloud};
use crate::error::{Error, Result};
use crate::numerics::Pcg32;

/// Smallest cloud the generator will produce.
pub const MIN_POINTS: usize = 8;

const JITTER_STD: f64 = 0.005;

/// The eight MiniShapes classes, in label order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeClass {
    Sphere,
    Cube,
    Cylinder,
    Cone,
    Torus,
    Plane,
    Helix,
    Dumbbell,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 8] = [
        ShapeClass::Sphere,
        ShapeClass::Cube,
        ShapeClass::Cylinder,
        ShapeClass::Cone,
        ShapeClass::Torus,
        ShapeClass::Plane,
        ShapeClass::Helix,
        ShapeClass::Dumbbell,
    ];

    pub fn from_index(id: usize) -> Result<Self> {
        Self::ALL.get(id).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("class id {id} outside 0..{}", Self::ALL.len()))
        })
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Sphere => "sphere",
            ShapeClass::Cube => "cube",
            ShapeClass::Cylinder => "cylinder",
            ShapeClass::Cone => "cone",
            ShapeClass::Torus => "torus",
            ShapeClass::Plane => "plane",
            ShapeClass::Helix => "helix",
            ShapeClass::Dumbbell => "dumbbell",
        }
    }
}

/// Draws `n` jittered surface samples in canonical orientation, before normalization.
pub fn sample_surface(class: ShapeClass, n: usize, rng: &mut Pcg32) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let p = sample_one(class, rng);
            [
                p[0] + rng.gaussian(0.0, JITTER_STD),
                p[1] + rng.gaussian(0.0, JITTER_STD),
                p[2] + rng.gaussian(0.0, JITTER_STD),
            ]
        })
        .collect()
}

/// One normalized MiniShapes sample; deterministic in `seed`.
pub fn generate_shape(class_id: usize, n_points: usize, seed: u64) -> Result<LabeledCloud> {
    let class = ShapeClass::from_index(class_id)?;
    if n_points < MIN_POINTS {
        return Err(Error::InvalidArgument(format!(
            "n_points must be at least {MIN_POINTS}, got {n_points}"
        )));
    }
    let mut rng = Pcg32::seed_from(seed);
    let cloud = PointCloud::new(sample_surface(class, n_points, &mut rng))?;
    Ok(LabeledCloud {
        cloud: cloud.normalize_unit_sphere(),
        label: class_id,
    })
}

fn sample_one(class: ShapeClass, rng: &mut Pcg32) -> Point {
    match class {
        ShapeClass::Sphere => rng.unit_vector(),
        ShapeClass::Cube => {
            let face = rng.below(6);
            let (a, b) = (rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
            match face / 2 {
                0 => [sign, a, b],
                1 => [a, sign, b],
                _ => [a, b, sign],
            }
        }
        ShapeClass::Cylinder => {
            // Radius 1, height 2: lateral area 4π, caps 2π.
            let theta = rng.uniform(0.0, TAU);
            if rng.coin(2.0 / 3.0) {
                [theta.cos(), theta.sin(), rng.uniform(-1.0, 1.0)]
            } else {
                let r = rng.next_f64().sqrt();
                let z = if rng.coin(0.5) { 1.0 } else { -1.0 };
                [r * theta.cos(), r * theta.sin(), z]
            }
        }
        ShapeClass::Cone => {
            // Apex at z = 1, unit base disk at z = -1.
            let lateral = PI * 5f64.sqrt();
            let base = PI;
            let theta = rng.uniform(0.0, TAU);
            if rng.coin(lateral / (lateral + base)) {
                let t = rng.next_f64().sqrt();
                [t * theta.cos(), t * theta.sin(), 1.0 - 2.0 * t]
            } else {
                let r = rng.next_f64().sqrt();
                [r * theta.cos(), r * theta.sin(), -1.0]
            }
        }
        ShapeClass::Torus => {
            const MAJOR: f64 = 1.0;
            const MINOR: f64 = 0.4;
            loop {
                let u = rng.uniform(0.0, TAU);
                let v = rng.uniform(0.0, TAU);
                // Area element is proportional to (R + r cos v).
                if rng.next_f64() * (MAJOR + MINOR) <= MAJOR + MINOR * v.cos() {
                    let ring = MAJOR + MINOR * v.cos();
                    return [ring * u.cos(), ring * u.sin(), MINOR * v.sin()];
                }
            }
        }
        ShapeClass::Plane => [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0],
        ShapeClass::Helix => {
            const TURNS: f64 = 3.0;
            let t = rng.next_f64();
            let angle = TAU * TURNS * t;
            [angle.cos(), angle.sin(), 2.0 * t - 1.0]
        }
        ShapeClass::Dumbbell => {
            let d = rng.unit_vector();
            let cx = if rng.coin(0.5) { 0.8 } else { -0.8 };
            [cx + 0.5 * d[0], 0.5 * d[1], 0.5 * d[2]]
        }
    }
}
