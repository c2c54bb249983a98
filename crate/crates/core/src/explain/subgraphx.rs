//! SubgraphX: Monte-Carlo tree search over connected subgraphs scored by
//! Shapley values.
//!
//! The root is the whole graph; a child removes one node and keeps the
//! largest connected component of what remains. A rollout descends by UCT
//! until the subgraph's induced edge count fits the budget, then credits the
//! leaf's Shapley score to every node on the path.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::shapley::subgraph_shapley;
use crate::error::{Error, Result};
use crate::graph::{EdgeSubset, GraphSample};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubgraphXConfig {
    pub mcts_iterations: usize,
    /// Children generated per expansion (the lowest-degree prunable nodes).
    pub expansions_per_node: usize,
    pub shapley_samples: usize,
    pub l_hop: usize,
    pub exploration: f64,
    /// Graphs with more nodes are skipped.
    pub max_graph_nodes: usize,
    pub seed: u64,
}

impl Default for SubgraphXConfig {
    fn default() -> Self {
        Self {
            mcts_iterations: 10,
            expansions_per_node: 14,
            shapley_samples: 20,
            l_hop: 3,
            exploration: 5.0,
            max_graph_nodes: 200,
            seed: 0,
        }
    }
}

impl SubgraphXConfig {
    fn validate(&self) -> Result<()> {
        if self.mcts_iterations == 0 || self.expansions_per_node == 0 || self.shapley_samples == 0 {
            return Err(Error::Parameter("SubgraphX counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphXResult {
    pub kept: EdgeSubset,
    /// Sorted node ids of the chosen subgraph.
    pub nodes: Vec<usize>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubgraphXOutcome {
    Found(SubgraphXResult),
    /// The graph exceeded `max_graph_nodes`.
    Skipped { node_count: usize },
}

struct TreeNode {
    nodes: Vec<usize>,
    children: Option<Vec<usize>>,
    visits: f64,
    total: f64,
    prior: f64,
}

/// Search state for one graph; Shapley scores are cached per node set and
/// shared by every budget searched through it.
pub struct SubgraphX<'a> {
    params: &'a ModelParams,
    graph: &'a GraphSample,
    target: usize,
    cfg: SubgraphXConfig,
    adj: Vec<Vec<usize>>,
    scores: HashMap<Vec<usize>, f64>,
}

impl<'a> SubgraphX<'a> {
    pub fn new(params: &'a ModelParams, graph: &'a GraphSample, target: usize, cfg: &SubgraphXConfig) -> Result<Self> {
        cfg.validate()?;
        super::check_target(params, target)?;
        Ok(Self {
            params,
            graph,
            target,
            cfg: cfg.clone(),
            adj: graph.adjacency(),
            scores: HashMap::new(),
        })
    }

    /// Number of distinct subgraphs scored so far.
    pub fn scored(&self) -> usize {
        self.scores.len()
    }

    pub fn score(&mut self, nodes: &[usize]) -> Result<f64> {
        if let Some(&s) = self.scores.get(nodes) {
            return Ok(s);
        }
        let seed = self.cfg.seed ^ fnv1a(nodes);
        let s = if nodes.is_empty() {
            0.0
        } else {
            subgraph_shapley(
                self.params,
                self.graph,
                nodes,
                self.target,
                self.cfg.shapley_samples,
                self.cfg.l_hop,
                seed,
            )?
            .value
        };
        self.scores.insert(nodes.to_vec(), s);
        Ok(s)
    }

    fn induced_edges(&self, nodes: &[usize]) -> Vec<usize> {
        let mut inside = vec![false; self.graph.node_count()];
        for &v in nodes {
            inside[v] = true;
        }
        self.graph
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, &(u, v))| inside[u] && inside[v])
            .map(|(i, _)| i)
            .collect()
    }

    fn children_of(&self, nodes: &[usize]) -> Vec<Vec<usize>> {
        let mut inside = vec![false; self.graph.node_count()];
        for &v in nodes {
            inside[v] = true;
        }
        let degree = |v: usize| self.adj[v].iter().filter(|&&u| inside[u]).count();
        let mut order: Vec<usize> = nodes.to_vec();
        order.sort_by_key(|&v| (degree(v), v));
        let mut out: Vec<Vec<usize>> = Vec::new();
        for &drop in order.iter().take(self.cfg.expansions_per_node) {
            inside[drop] = false;
            let child = largest_component(&self.adj, &inside, nodes);
            inside[drop] = true;
            if !out.contains(&child) {
                out.push(child);
            }
        }
        out
    }

    /// Best connected subgraph with at most `max_edges` induced edges.
    pub fn search(&mut self, max_edges: usize) -> Result<SubgraphXResult> {
        let e = self.graph.edge_count();
        if max_edges > e {
            return Err(Error::Parameter(format!("edge budget {max_edges} exceeds the graph's {e} edges")));
        }
        let root_nodes: Vec<usize> = (0..self.graph.node_count()).collect();
        let root_prior = self.score(&root_nodes)?;
        let mut tree = vec![TreeNode {
            nodes: root_nodes.clone(),
            children: None,
            visits: 0.0,
            total: 0.0,
            prior: root_prior,
        }];
        let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(root_nodes, 0)]);

        for _ in 0..self.cfg.mcts_iterations {
            let mut path = vec![0usize];
            let mut cur = 0usize;
            while self.induced_edges(&tree[cur].nodes).len() > max_edges && tree[cur].nodes.len() > 1 {
                if tree[cur].children.is_none() {
                    let mut kids = Vec::new();
                    for child in self.children_of(&tree[cur].nodes) {
                        let id = match index.get(&child) {
                            Some(&id) => id,
                            None => {
                                let prior = self.score(&child)?;
                                tree.push(TreeNode {
                                    nodes: child.clone(),
                                    children: None,
                                    visits: 0.0,
                                    total: 0.0,
                                    prior,
                                });
                                index.insert(child, tree.len() - 1);
                                tree.len() - 1
                            }
                        };
                        kids.push(id);
                    }
                    tree[cur].children = Some(kids);
                }
                let kids = tree[cur].children.as_ref().expect("expanded");
                if kids.is_empty() {
                    break;
                }
                let parent_visits: f64 = kids.iter().map(|&k| tree[k].visits).sum();
                let uct = |k: usize| {
                    let n = &tree[k];
                    let q = if n.visits > 0.0 { n.total / n.visits } else { 0.0 };
                    q + self.cfg.exploration * n.prior * parent_visits.sqrt() / (1.0 + n.visits)
                };
                let mut best = kids[0];
                for &k in &kids[1..] {
                    if uct(k) > uct(best) {
                        best = k;
                    }
                }
                cur = best;
                path.push(cur);
            }
            let reward = tree[cur].prior;
            for &p in &path {
                tree[p].visits += 1.0;
                tree[p].total += reward;
            }
        }

        let mut best: Option<(f64, usize, &Vec<usize>)> = None;
        for n in &tree {
            let edges = self.induced_edges(&n.nodes).len();
            if edges > max_edges {
                continue;
            }
            let better = match best {
                None => true,
                Some((s, k, nodes)) => {
                    n.prior > s || (n.prior == s && (edges > k || (edges == k && n.nodes < *nodes)))
                }
            };
            if better {
                best = Some((n.prior, edges, &n.nodes));
            }
        }
        let (score, nodes) = match best {
            Some((s, _, nodes)) => (s, nodes.clone()),
            // only reachable when the search cannot shrink below the budget
            None => (0.0, Vec::new()),
        };
        let kept = EdgeSubset::new(e, self.induced_edges(&nodes))?;
        Ok(SubgraphXResult { kept, nodes, score })
    }
}

fn largest_component(adj: &[Vec<usize>], inside: &[bool], nodes: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; inside.len()];
    let mut best: Vec<usize> = Vec::new();
    for &start in nodes {
        if !inside[start] || seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut i = 0;
        while i < comp.len() {
            for &u in &adj[comp[i]] {
                if inside[u] && !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        // nodes are visited in ascending order, so ties keep the earlier component
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best
}

fn fnv1a(nodes: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &v in nodes {
        for b in (v as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// One SubgraphX search per edge budget, sharing the Shapley cache.
pub fn subgraphx_masks(
    params: &ModelParams,
    g: &GraphSample,
    target: usize,
    budgets: &[usize],
    cfg: &SubgraphXConfig,
) -> Result<Vec<SubgraphXOutcome>> {
    if g.node_count() > cfg.max_graph_nodes {
        return Ok(vec![
            SubgraphXOutcome::Skipped {
                node_count: g.node_count()
            };
            budgets.len()
        ]);
    }
    let mut sx = SubgraphX::new(params, g, target, cfg)?;
    budgets
        .iter()
        .map(|&b| sx.search(b).map(SubgraphXOutcome::Found))
        .collect()
}

pub fn subgraphx_search(
    params: &ModelParams,
    g: &GraphSample,
    target: usize,
    max_edges: usize,
    cfg: &SubgraphXConfig,
) -> Result<SubgraphXResult> {
    SubgraphX::new(params, g, target, cfg)?.search(max_edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArchConfig, ArchKind};
    use crate::tensor::Tensor;

    fn setup() -> (ModelParams, GraphSample) {
        let p = ModelParams::init(&ArchConfig::new(ArchKind::Gcn, 1, 8, 2), 2).unwrap();
        let g = GraphSample::new(
            6,
            [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 2), (3, 5)],
            Tensor::full(6, 1, 1.0),
            0,
        )
        .unwrap();
        (p, g)
    }

    #[test]
    fn full_budget_returns_root() {
        let (p, g) = setup();
        let r = subgraphx_search(&p, &g, 0, g.edge_count(), &SubgraphXConfig::default()).unwrap();
        assert_eq!(r.kept, EdgeSubset::all(g.edge_count()));
        assert_eq!(r.nodes, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn result_is_connected_and_within_budget() {
        let (p, g) = setup();
        for budget in 0..g.edge_count() {
            let r = subgraphx_search(&p, &g, 1, budget, &SubgraphXConfig::default()).unwrap();
            assert!(r.kept.len() <= budget);
            let sub = GraphSample::new(
                r.nodes.len(),
                r.kept.kept().iter().map(|&e| {
                    let (u, v) = g.edges()[e];
                    (r.nodes.binary_search(&u).unwrap(), r.nodes.binary_search(&v).unwrap())
                }),
                Tensor::full(r.nodes.len(), 1, 1.0),
                0,
            )
            .unwrap();
            assert!(sub.node_count() <= 1 || sub.is_connected(), "budget {budget}: {:?}", r.nodes);
        }
    }

    #[test]
    fn deterministic() {
        let (p, g) = setup();
        let cfg = SubgraphXConfig::default();
        assert_eq!(
            subgraphx_search(&p, &g, 0, 3, &cfg).unwrap(),
            subgraphx_search(&p, &g, 0, 3, &cfg).unwrap()
        );
    }

    #[test]
    fn over_budget_is_parameter_error() {
        let (p, g) = setup();
        assert!(matches!(
            subgraphx_search(&p, &g, 0, 8, &SubgraphXConfig::default()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn largest_component_prefers_bigger() {
        let adj = vec![vec![1], vec![0], vec![3], vec![2, 4], vec![3]];
        let inside = vec![true; 5];
        assert_eq!(largest_component(&adj, &inside, &[0, 1, 2, 3, 4]), vec![2, 3, 4]);
    }
}
