use std::fmt;

use super::{apply_corruption, CorruptionKind, Severity};
use crate::error::Result;
use crate::numerics::Pcg32;
use crate::pointcloud::PointCloud;

/// Probabilities of the optional noise and density slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposeConfig {
    pub noise_probability: f64,
    pub density_probability: f64,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        Self {
            noise_probability: 0.5,
            density_probability: 0.5,
        }
    }
}

/// Realized choice of the three slots. `None` means the identity was selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorruptionSpec {
    pub transform: (CorruptionKind, Severity),
    pub noise: Option<(CorruptionKind, Severity)>,
    pub density: Option<(CorruptionKind, Severity)>,
}

impl fmt::Display for CorruptionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let slot = |s: Option<(CorruptionKind, Severity)>| match s {
            Some((k, sev)) => format!("{k}@{sev}"),
            None => "identity".to_string(),
        };
        write!(
            f,
            "{}@{} -> {} -> {}",
            self.transform.0,
            self.transform.1,
            slot(self.noise),
            slot(self.density)
        )
    }
}

fn severity(rng: &mut Pcg32) -> Severity {
    Severity::new(1 + rng.below(5) as u8).expect("1..=5")
}

/// Draws the slot choices: a transformation always, noise and density by coin flip.
pub fn sample_spec(rng: &mut Pcg32, config: &ComposeConfig) -> CorruptionSpec {
    let t = CorruptionKind::TRANSFORMS[rng.index(CorruptionKind::TRANSFORMS.len())];
    let transform = (t, severity(rng));
    let noise = rng.coin(config.noise_probability).then(|| {
        let k = CorruptionKind::TRAIN_NOISE[rng.index(CorruptionKind::TRAIN_NOISE.len())];
        (k, severity(rng))
    });
    let density = rng.coin(config.density_probability).then(|| {
        let k = CorruptionKind::DENSITY[rng.index(CorruptionKind::DENSITY.len())];
        (k, severity(rng))
    });
    CorruptionSpec {
        transform,
        noise,
        density,
    }
}

/// Applies transformation, then noise, then density.
pub fn apply_spec(cloud: &PointCloud, spec: &CorruptionSpec, rng: &mut Pcg32) -> Result<PointCloud> {
    let mut out = apply_corruption(cloud, spec.transform.0, spec.transform.1, rng)?;
    for (kind, sev) in [spec.noise, spec.density].into_iter().flatten() {
        out = apply_corruption(&out, kind, sev, rng)?;
    }
    Ok(out)
}

pub fn compose_random_with(
    cloud: &PointCloud,
    rng: &mut Pcg32,
    config: &ComposeConfig,
) -> Result<(PointCloud, CorruptionSpec)> {
    let spec = sample_spec(rng, config);
    Ok((apply_spec(cloud, &spec, rng)?, spec))
}

pub fn compose_random(cloud: &PointCloud, rng: &mut Pcg32) -> Result<(PointCloud, CorruptionSpec)> {
    compose_random_with(cloud, rng, &ComposeConfig::default())
}
