//! Corruption taxonomy: transformation, noise and density families at
//! severities 1..=5, plus the random three-slot composition used for
//! augmentation and the fixed single-corruption evaluation sets.

mod compose;
mod eval_set;
mod transforms;

use std::fmt;
use std::str::FromStr;

pub use compose::{apply_spec, compose_random, compose_random_with, sample_spec, ComposeConfig, CorruptionSpec};
pub use eval_set::{corrupt_eval_set, eval_seed_stream, eval_tag, write_eval_set};
pub use transforms::{apply_corruption, apply_linear, rotation_matrix, MIN_SURVIVORS};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Transformation,
    Noise,
    Density,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CorruptionKind {
    Rotation,
    Shear,
    Ffd,
    Rbf,
    InvRbf,
    Gaussian,
    Impulse,
    Uniform,
    Upsampling,
    Background,
    DensityInc,
    DensityDec,
    Cutout,
    Identity,
}

impl CorruptionKind {
    /// Every implemented corruption, in table order (Identity excluded).
    pub const EVAL: [CorruptionKind; 13] = [
        CorruptionKind::Rotation,
        CorruptionKind::Shear,
        CorruptionKind::Ffd,
        CorruptionKind::Rbf,
        CorruptionKind::InvRbf,
        CorruptionKind::Gaussian,
        CorruptionKind::Impulse,
        CorruptionKind::Uniform,
        CorruptionKind::Upsampling,
        CorruptionKind::Background,
        CorruptionKind::DensityInc,
        CorruptionKind::DensityDec,
        CorruptionKind::Cutout,
    ];

    /// Transformation slot, indexed by i in 0..5.
    pub const TRANSFORMS: [CorruptionKind; 5] = [
        CorruptionKind::Rotation,
        CorruptionKind::Shear,
        CorruptionKind::Ffd,
        CorruptionKind::Rbf,
        CorruptionKind::InvRbf,
    ];

    /// Noise slot, indexed by j in 0..4. Background is evaluation-only.
    pub const TRAIN_NOISE: [CorruptionKind; 4] = [
        CorruptionKind::Gaussian,
        CorruptionKind::Impulse,
        CorruptionKind::Uniform,
        CorruptionKind::Upsampling,
    ];

    /// Density slot, indexed by k in 0..3.
    pub const DENSITY: [CorruptionKind; 3] = [
        CorruptionKind::DensityInc,
        CorruptionKind::DensityDec,
        CorruptionKind::Cutout,
    ];

    pub fn family(self) -> Family {
        use CorruptionKind::*;
        match self {
            Rotation | Shear | Ffd | Rbf | InvRbf => Family::Transformation,
            Gaussian | Impulse | Uniform | Upsampling | Background => Family::Noise,
            DensityInc | DensityDec | Cutout => Family::Density,
            Identity => Family::Identity,
        }
    }

    pub fn name(self) -> &'static str {
        use CorruptionKind::*;
        match self {
            Rotation => "rotation",
            Shear => "shear",
            Ffd => "ffd",
            Rbf => "rbf",
            InvRbf => "inv_rbf",
            Gaussian => "gaussian",
            Impulse => "impulse",
            Uniform => "uniform",
            Upsampling => "upsampling",
            Background => "background",
            DensityInc => "density_inc",
            DensityDec => "density_dec",
            Cutout => "cutout",
            Identity => "identity",
        }
    }

    /// Stable small integer used to derive evaluation seeds.
    pub fn code(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '.'], "_");
        match key.as_str() {
            "occlusion" | "lidar" => return Err(Error::UnsupportedKind(key)),
            _ => {}
        }
        CorruptionKind::EVAL
            .iter()
            .chain(std::iter::once(&CorruptionKind::Identity))
            .find(|k| k.name() == key)
            .copied()
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Severity(u8);

impl Severity {
    pub const ALL: [Severity; 5] = [Severity(1), Severity(2), Severity(3), Severity(4), Severity(5)];

    pub fn new(level: u8) -> Result<Self> {
        if (1..=5).contains(&level) {
            Ok(Self(level))
        } else {
            Err(Error::InvalidSeverity(level))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub(crate) fn factor(self) -> f64 {
        self.0 as f64
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
