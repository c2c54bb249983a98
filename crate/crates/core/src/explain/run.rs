use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::subgraphx::{subgraphx_masks, SubgraphXConfig, SubgraphXOutcome};
use super::{
    gnnexplainer_scores, gradcam_scores, pgexplainer_fit, pgexplainer_scores, random_scores, EdgeScores,
    GnnExplainerConfig, Method, PgExplainerConfig,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{kept_edge_count, EdgeSubset, GraphSample};
use crate::model::ModelParams;

/// Sparsity levels (percent of edges kept) used throughout a sweep.
pub const LEVELS: [u32; 7] = [0, 10, 30, 50, 70, 90, 100];

/// What an attributor produced for one graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Attribution {
    Scores(EdgeScores),
    /// Kept edges per sparsity level (SubgraphX).
    Masks(BTreeMap<u32, EdgeSubset>),
}

/// Attributions of one method for a set of graphs, keyed by graph index.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionSet {
    pub method: Method,
    pub seed: Option<u64>,
    pub graphs: BTreeMap<usize, Attribution>,
}

impl AttributionSet {
    pub fn get(&self, graph: usize) -> Result<&Attribution> {
        self.graphs
            .get(&graph)
            .ok_or_else(|| Error::Contract(format!("no {} attribution for graph {graph}", self.method)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttributionConfig {
    pub gnnexplainer: GnnExplainerConfig,
    pub pgexplainer: PgExplainerConfig,
    pub subgraphx: SubgraphXConfig,
    /// Levels for which SubgraphX searches a mask.
    pub levels: Vec<u32>,
    /// Seed of the random attributor.
    pub random_seed: u64,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self {
            gnnexplainer: GnnExplainerConfig::default(),
            pgexplainer: PgExplainerConfig::default(),
            subgraphx: SubgraphXConfig::default(),
            levels: LEVELS.to_vec(),
            random_seed: 0,
        }
    }
}

impl AttributionConfig {
    /// Hex digest of the settings that influence `method`.
    pub fn hash_for(&self, method: Method) -> String {
        let relevant = match method {
            Method::GradCam => String::new(),
            Method::GnnExplainer => toml::to_string(&self.gnnexplainer).expect("serialisable"),
            Method::PgExplainer => toml::to_string(&self.pgexplainer).expect("serialisable"),
            Method::SubgraphX => format!(
                "{}levels = {:?}\n",
                toml::to_string(&self.subgraphx).expect("serialisable"),
                self.levels
            ),
            Method::Random => format!("seed = {}\n", self.random_seed),
        };
        let mut h = Sha256::new();
        h.update(method.name());
        h.update(b"\n");
        h.update(relevant);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Per-graph seed for the random attributor.
pub fn graph_seed(seed: u64, graph: usize) -> u64 {
    seed ^ (graph as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Attributes every graph in `ids` against the class `params` predicts for it.
///
/// PGExplainer is first fitted on the dataset's train split. Graphs are
/// processed in parallel.
pub fn attribute_dataset(
    params: &ModelParams,
    ds: &Dataset,
    method: Method,
    ids: &[usize],
    cfg: &AttributionConfig,
) -> Result<AttributionSet> {
    if let Some(&bad) = ids.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::Index {
            what: "graph",
            index: bad,
            len: ds.len(),
        });
    }
    let pg = if method == Method::PgExplainer {
        let train = ds.subset(&ds.split()?.train);
        Some(pgexplainer_fit(params, &train, &cfg.pgexplainer)?)
    } else {
        None
    };
    let one = |id: usize| -> Result<(usize, Attribution)> {
        let g = &ds.graphs[id];
        let scores = match method {
            Method::Random => random_scores(g, graph_seed(cfg.random_seed, id)),
            Method::GradCam => gradcam_scores(params, g, params.predict(g)?)?,
            Method::GnnExplainer => gnnexplainer_scores(params, g, params.predict(g)?, &cfg.gnnexplainer)?,
            Method::PgExplainer => pgexplainer_scores(pg.as_ref().expect("fitted"), params, g)?,
            Method::SubgraphX => return Ok((id, Attribution::Masks(subgraphx_levels(params, g, id, cfg)?))),
        };
        Ok((id, Attribution::Scores(scores)))
    };
    let graphs = ids.par_iter().map(|&id| one(id)).collect::<Result<BTreeMap<_, _>>>()?;
    let seed = match method {
        Method::Random => Some(cfg.random_seed),
        Method::PgExplainer => Some(cfg.pgexplainer.seed),
        Method::SubgraphX => Some(cfg.subgraphx.seed),
        _ => None,
    };
    Ok(AttributionSet { method, seed, graphs })
}

/// SubgraphX masks for every configured level. 0% and 100% need no search.
/// Graphs too large to search fall back to a random ranking.
fn subgraphx_levels(params: &ModelParams, g: &GraphSample, id: usize, cfg: &AttributionConfig) -> Result<BTreeMap<u32, EdgeSubset>> {
    let m = g.edge_count();
    let mut out = BTreeMap::new();
    let mut searched = Vec::new();
    for &level in &cfg.levels {
        let k = kept_edge_count(level, m)?;
        if k == 0 {
            out.insert(level, EdgeSubset::none(m));
        } else if k == m {
            out.insert(level, EdgeSubset::all(m));
        } else {
            searched.push((level, k));
        }
    }
    if searched.is_empty() {
        return Ok(out);
    }
    let target = params.predict(g)?;
    let budgets: Vec<usize> = searched.iter().map(|&(_, k)| k).collect();
    let outcomes = subgraphx_masks(params, g, target, &budgets, &cfg.subgraphx)?;
    for ((level, k), outcome) in searched.into_iter().zip(outcomes) {
        let mask = match outcome {
            SubgraphXOutcome::Found(r) => r.kept,
            SubgraphXOutcome::Skipped { .. } => {
                let s = random_scores(g, graph_seed(cfg.subgraphx.seed, id));
                top_k(&s.scores, k)
            }
        };
        out.insert(level, mask);
    }
    Ok(out)
}

/// Edge ids ranked by descending score, ties by ascending id.
pub fn rank_edges(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn top_k(scores: &[f64], k: usize) -> EdgeSubset {
    EdgeSubset::new(scores.len(), rank_edges(scores).into_iter().take(k)).expect("ranked ids are in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::split_dataset;
    use crate::model::{ArchConfig, ArchKind};
    use crate::synthetic::generate_ba2motifs;

    #[test]
    fn ranking_breaks_ties_by_index() {
        assert_eq!(rank_edges(&[0.5, 0.9, 0.5, 0.1, 0.9]), vec![1, 4, 0, 2, 3]);
    }

    #[test]
    fn hash_ignores_unrelated_settings() {
        let a = AttributionConfig::default();
        let mut b = a.clone();
        b.gnnexplainer.epochs = 7;
        assert_eq!(a.hash_for(Method::GradCam), b.hash_for(Method::GradCam));
        assert_ne!(a.hash_for(Method::GnnExplainer), b.hash_for(Method::GnnExplainer));
        assert_ne!(a.hash_for(Method::GradCam), a.hash_for(Method::Random));
    }

    #[test]
    fn every_requested_graph_is_attributed() {
        let ds = split_dataset(generate_ba2motifs(0).unwrap(), [0.8, 0.1, 0.1], 0).unwrap();
        let p = ModelParams::init(&ArchConfig::new(ArchKind::Gcn, 10, 8, 2), 0).unwrap();
        let ids = [0, 3, 999];
        let cfg = AttributionConfig {
            subgraphx: SubgraphXConfig {
                shapley_samples: 2,
                mcts_iterations: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        for method in [Method::Random, Method::GradCam, Method::SubgraphX] {
            let set = attribute_dataset(&p, &ds, method, &ids, &cfg).unwrap();
            assert_eq!(set.graphs.keys().copied().collect::<Vec<_>>(), ids);
            if let Attribution::Masks(m) = set.get(3).unwrap() {
                assert_eq!(m.keys().copied().collect::<Vec<_>>(), LEVELS);
                assert!(m[&0].is_empty());
                assert_eq!(m[&100].len(), ds.graphs[3].edge_count());
                assert!(m[&30].len() <= kept_edge_count(30, ds.graphs[3].edge_count()).unwrap());
            }
        }
        assert!(attribute_dataset(&p, &ds, Method::Random, &[1000], &cfg).is_err());
    }
}
