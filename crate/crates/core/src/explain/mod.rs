//! Edge attribution methods.
//!
//! Every score-based method returns one finite [`EdgeScores`] entry per
//! canonical edge (higher is more important). SubgraphX instead searches a
//! connected subgraph per requested edge budget, see [`subgraphx`].

pub mod cache;
mod gnnexplainer;
mod gradcam;
mod pgexplainer;
mod random;
mod run;
pub mod shapley;
pub mod subgraphx;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use gnnexplainer::{gnnexplainer_scores, gnnexplainer_trace, GnnExplainerConfig, GnnExplainerRun};
pub use gradcam::{gradcam_node_weights, gradcam_scores, node_to_edge_scores};
pub use pgexplainer::{pgexplainer_fit, pgexplainer_scores, PgExplainer, PgExplainerConfig};
pub use random::random_scores;
pub use run::{attribute_dataset, graph_seed, rank_edges, Attribution, AttributionConfig, AttributionSet, LEVELS};

use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    GradCam,
    GnnExplainer,
    PgExplainer,
    SubgraphX,
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::GradCam,
        Method::GnnExplainer,
        Method::PgExplainer,
        Method::SubgraphX,
        Method::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::GradCam => "gradcam",
            Method::GnnExplainer => "gnnexplainer",
            Method::PgExplainer => "pgexplainer",
            Method::SubgraphX => "subgraphx",
            Method::Random => "random",
        }
    }

    /// Whether the method ranks edges by real-valued scores (as opposed to
    /// emitting one mask per sparsity level).
    pub fn is_score_based(self) -> bool {
        self != Method::SubgraphX
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_'], "");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::Parameter(format!("unknown attributor {s:?}")))
    }
}

/// Bookkeeping attached to a set of scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreMeta {
    pub iterations: usize,
    pub final_loss: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScores {
    pub scores: Vec<f64>,
    pub method: Method,
    pub meta: ScoreMeta,
}

impl EdgeScores {
    pub fn new(scores: Vec<f64>, method: Method, meta: ScoreMeta) -> Result<Self> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::Domain(format!("{method} produced a non-finite score for edge {i}")));
        }
        Ok(Self { scores, method, meta })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Class the model predicts for `g`; attributions explain this class.
pub fn predicted_class(params: &ModelParams, g: &GraphSample) -> Result<usize> {
    params.predict(g)
}

pub(crate) fn check_target(params: &ModelParams, target: usize) -> Result<()> {
    if target >= params.arch.class_count {
        return Err(Error::Index {
            what: "target class",
            index: target,
            len: params.arch.class_count,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("GNN-Explainer".parse::<Method>().unwrap(), Method::GnnExplainer);
        assert!("saliency".parse::<Method>().is_err());
    }

    #[test]
    fn scores_must_be_finite() {
        assert!(EdgeScores::new(vec![0.1, f64::NAN], Method::Random, ScoreMeta::default()).is_err());
    }
}
