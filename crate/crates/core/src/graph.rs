//! Undirected graph samples and edge subsets.

use std::collections::VecDeque;

use sha2::{Digest, Sha256};

use crate::error::{dim_err, Error, Result};
use crate::tensor::Tensor;

/// One graph-classification instance.
///
/// Edges are canonical `(u, v)` pairs with `u < v`, sorted and unique; the
/// position of an edge in that list is its global index.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    features: Tensor,
    label: usize,
}

impl GraphSample {
    /// Canonicalises `edges` (orders endpoints, sorts, drops duplicates).
    /// Self-loops and out-of-range endpoints are rejected.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: Tensor,
        label: usize,
    ) -> Result<Self> {
        let mut canon = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Contract(format!("self-loop on node {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if v >= node_count {
                return Err(Error::Index {
                    what: "edge endpoint",
                    index: v,
                    len: node_count,
                });
            }
            canon.push((u, v));
        }
        canon.sort_unstable();
        canon.dedup();
        if features.rows() != node_count && !(node_count == 0 && features.is_empty()) {
            return Err(dim_err(
                "GraphSample::new",
                format!("{} feature rows for {node_count} nodes", features.rows()),
            ));
        }
        Ok(Self {
            node_count,
            edges: canon,
            features,
            label,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges.binary_search(&key).ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.node_count
    }

    /// Same topology and features with every row of `mask == false` zeroed.
    pub fn with_masked_features(&self, keep: &[bool]) -> Self {
        let mut features = self.features.clone();
        let c = features.cols();
        for (i, &k) in keep.iter().enumerate() {
            if !k {
                features.data_mut()[i * c..(i + 1) * c].fill(0.0);
            }
        }
        Self {
            features,
            ..self.clone()
        }
    }

    /// Stable digest of topology, features and label.
    pub fn checksum(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.node_count as u64).to_le_bytes());
        h.update((self.label as u64).to_le_bytes());
        for &(u, v) in &self.edges {
            h.update((u as u64).to_le_bytes());
            h.update((v as u64).to_le_bytes());
        }
        for s in self.features.shape() {
            h.update((*s as u64).to_le_bytes());
        }
        for x in self.features.data() {
            h.update(x.to_bits().to_le_bytes());
        }
        h.finalize().into()
    }
}

/// A set of kept canonical edge indices of some parent graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSubset {
    edge_count: usize,
    kept: Vec<usize>,
}

impl EdgeSubset {
    pub fn new(edge_count: usize, kept: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut kept: Vec<usize> = kept.into_iter().collect();
        kept.sort_unstable();
        kept.dedup();
        if let Some(&bad) = kept.last().filter(|&&i| i >= edge_count) {
            return Err(Error::Index {
                what: "kept edge",
                index: bad,
                len: edge_count,
            });
        }
        Ok(Self { edge_count, kept })
    }

    pub fn all(edge_count: usize) -> Self {
        Self {
            edge_count,
            kept: (0..edge_count).collect(),
        }
    }

    pub fn none(edge_count: usize) -> Self {
        Self {
            edge_count,
            kept: Vec::new(),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.kept.binary_search(&edge).is_ok()
    }

    pub fn complement(&self) -> Self {
        let mut mask = vec![true; self.edge_count];
        for &e in &self.kept {
            mask[e] = false;
        }
        Self {
            edge_count: self.edge_count,
            kept: (0..self.edge_count).filter(|&e| mask[e]).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.kept.iter().all(|&e| other.contains(e))
    }

    pub fn as_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.edge_count];
        for &e in &self.kept {
            mask[e] = true;
        }
        mask
    }
}

/// Result of masking a graph, with the surviving original node ids.
#[derive(Debug, Clone)]
pub struct MaskedGraph {
    pub graph: GraphSample,
    pub node_map: Vec<usize>,
}

/// Keeps only the edges in `kept`. With `eliminate_isolated`, nodes that
/// lost all of their edges are dropped and the rest renumbered in their
/// original order. Nodes that were already isolated in `g` stay, so keeping
/// every edge is always the identity.
pub fn apply_edge_subset(g: &GraphSample, kept: &EdgeSubset, eliminate_isolated: bool) -> Result<MaskedGraph> {
    if kept.edge_count() != g.edge_count() {
        return Err(Error::Contract(format!(
            "edge subset built for {} edges applied to a graph with {}",
            kept.edge_count(),
            g.edge_count()
        )));
    }
    let edges: Vec<(usize, usize)> = kept.kept().iter().map(|&e| g.edges[e]).collect();
    if !eliminate_isolated {
        let graph = GraphSample {
            node_count: g.node_count,
            edges,
            features: g.features.clone(),
            label: g.label,
        };
        return Ok(MaskedGraph {
            graph,
            node_map: (0..g.node_count).collect(),
        });
    }
    let before = g.degrees();
    let mut after = vec![0usize; g.node_count];
    for &(u, v) in &edges {
        after[u] += 1;
        after[v] += 1;
    }
    let node_map: Vec<usize> = (0..g.node_count)
        .filter(|&n| after[n] > 0 || before[n] == 0)
        .collect();
    let mut new_id = vec![usize::MAX; g.node_count];
    for (i, &n) in node_map.iter().enumerate() {
        new_id[n] = i;
    }
    let c = g.features.cols();
    let mut data = Vec::with_capacity(node_map.len() * c);
    for &n in &node_map {
        data.extend_from_slice(g.features.row(n));
    }
    let features = Tensor::matrix(node_map.len(), c, data)?;
    let edges = edges
        .into_iter()
        .map(|(u, v)| (new_id[u], new_id[v]))
        .collect();
    Ok(MaskedGraph {
        graph: GraphSample {
            node_count: node_map.len(),
            edges,
            features,
            label: g.label,
        },
        node_map,
    })
}

/// Number of edges kept at `percent` of `edge_count`, rounding halves up.
pub fn kept_edge_count(percent: u32, edge_count: usize) -> Result<usize> {
    if percent > 100 {
        return Err(Error::Parameter(format!("sparsity {percent}% is outside [0, 100]")));
    }
    Ok((percent as usize * edge_count + 50) / 100)
}

/// Percentage of edges kept: `100 * |E(g_s)| / |E(g_o)|`.
pub fn sparsity(kept_edges: usize, original_edges: usize) -> Result<f64> {
    if original_edges == 0 {
        return Err(Error::Domain("sparsity of a graph without edges".into()));
    }
    if kept_edges > original_edges {
        return Err(Error::Domain(format!(
            "{kept_edges} kept edges exceed the {original_edges} original ones"
        )));
    }
    Ok(100.0 * kept_edges as f64 / original_edges as f64)
}
