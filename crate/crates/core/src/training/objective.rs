use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::losses::{cross_entropy_node, jgeskd_loss_node, jgetkd_loss_node, total_loss_node, LossWeights, ProbVector};
use crate::model::{forward_graph, ParamNodes};
use crate::numerics::{Graph, NodeId};
use crate::pointcloud::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Supervised training with the (smoothed) label loss only.
    St,
    /// Siamese self-distillation between the clean and corrupted branch.
    Skd,
    /// Teacher distillation against a frozen model's smoothed-label graph.
    Tkd,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::St => "st",
            Strategy::Skd => "skd",
            Strategy::Tkd => "tkd",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "st" => Ok(Strategy::St),
            "skd" => Ok(Strategy::Skd),
            "tkd" => Ok(Strategy::Tkd),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy `{other}` (expected st, skd or tkd)"
            ))),
        }
    }
}

/// Everything the per-sample objective depends on besides the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveConfig {
    pub strategy: Strategy,
    pub weights: LossWeights,
    pub smoothing: f64,
    pub detach_target: bool,
}

/// Builds the per-sample training loss into `graph` and returns its root.
///
/// With `corrupted = None` the second branch sees the clean cloud and the
/// label term is the clean-branch loss alone; otherwise it is the average
/// over both branches. `teacher` must be present for [`Strategy::Tkd`].
pub fn build_objective(
    graph: &mut Graph,
    params: &ParamNodes,
    clean: &PointCloud,
    corrupted: Option<&PointCloud>,
    label: usize,
    teacher: Option<&ProbVector>,
    config: &ObjectiveConfig,
) -> Result<NodeId> {
    let clean_out = forward_graph(graph, params, clean)?;
    let ce_clean = cross_entropy_node(graph, clean_out.probs, label, config.smoothing)?;

    let second = match (config.strategy, corrupted) {
        (Strategy::St, None) => None,
        (_, view) => Some(forward_graph(graph, params, view.unwrap_or(clean))?),
    };
    let ce = match (corrupted, second) {
        (Some(_), Some(out)) => {
            let ce_corrupt = cross_entropy_node(graph, out.probs, label, config.smoothing)?;
            let a = graph.scale(ce_clean, 0.5)?;
            let b = graph.scale(ce_corrupt, 0.5)?;
            graph.add(a, b)?
        }
        _ => ce_clean,
    };

    match config.strategy {
        Strategy::St => graph.scale(ce, config.weights.alpha),
        Strategy::Skd => {
            let p_prime = second.expect("second branch").probs;
            let kd = jgeskd_loss_node(graph, clean_out.probs, p_prime, config.detach_target)?;
            total_loss_node(graph, ce, kd, config.weights)
        }
        Strategy::Tkd => {
            let teacher = teacher.ok_or_else(|| {
                Error::InvalidArgument("teacher distillation needs teacher probabilities".into())
            })?;
            let p_prime = second.expect("second branch").probs;
            let kd = jgetkd_loss_node(graph, clean_out.probs, p_prime, label, teacher, config.smoothing)?;
            total_loss_node(graph, ce, kd, config.weights)
        }
    }
}
