use std::rc::Rc;

use crate::graph::GraphSample;
use crate::tensor::Tensor;

/// Several graphs packed block-diagonally for one forward pass.
///
/// Edges are stored in both directions. Each directed edge points back at the
/// canonical (undirected) edge it came from, so one weight per canonical edge
/// feeds both directions and the weights stay symmetric by construction.
#[derive(Debug, Clone)]
pub struct EdgeWeightedBatch {
    pub features: Tensor,
    pub src: Rc<[usize]>,
    pub dst: Rc<[usize]>,
    /// Canonical edge id (into the concatenated per-graph edge lists) of
    /// every directed edge.
    pub canon: Rc<[usize]>,
    pub canon_count: usize,
    /// Offset of each graph's first canonical edge.
    pub edge_offsets: Vec<usize>,
    /// Node row range of each graph.
    pub ranges: Rc<[(usize, usize)]>,
    pub labels: Vec<usize>,
    /// `[graphs x 1]`, 0 for graphs without nodes so their logits are zeroed.
    pub nonempty: Tensor,
}

impl EdgeWeightedBatch {
    pub fn new(graphs: &[&GraphSample]) -> Self {
        let total_nodes: usize = graphs.iter().map(|g| g.node_count()).sum();
        let dim = graphs.iter().map(|g| g.feature_dim()).find(|&d| d > 0).unwrap_or(0);
        let total_edges: usize = graphs.iter().map(|g| g.edge_count()).sum();
        let mut feat = Vec::with_capacity(total_nodes * dim);
        let mut src = Vec::with_capacity(2 * total_edges);
        let mut dst = Vec::with_capacity(2 * total_edges);
        let mut canon = Vec::with_capacity(2 * total_edges);
        let mut ranges = Vec::with_capacity(graphs.len());
        let mut edge_offsets = Vec::with_capacity(graphs.len());
        let mut labels = Vec::with_capacity(graphs.len());
        let mut nonempty = Vec::with_capacity(graphs.len());
        let (mut node_off, mut edge_off) = (0, 0);
        for g in graphs {
            feat.extend_from_slice(g.features().data());
            for (e, &(u, v)) in g.edges().iter().enumerate() {
                src.push(node_off + u);
                dst.push(node_off + v);
                canon.push(edge_off + e);
                src.push(node_off + v);
                dst.push(node_off + u);
                canon.push(edge_off + e);
            }
            ranges.push((node_off, node_off + g.node_count()));
            edge_offsets.push(edge_off);
            labels.push(g.label());
            nonempty.push(if g.node_count() > 0 { 1.0 } else { 0.0 });
            node_off += g.node_count();
            edge_off += g.edge_count();
        }
        Self {
            features: Tensor::matrix(total_nodes, dim, feat).expect("feature rows match node count"),
            src: src.into(),
            dst: dst.into(),
            canon: canon.into(),
            canon_count: edge_off,
            edge_offsets,
            ranges: ranges.into(),
            labels,
            nonempty: Tensor::column(nonempty),
        }
    }

    pub fn single(g: &GraphSample) -> Self {
        Self::new(&[g])
    }

    pub fn graph_count(&self) -> usize {
        self.labels.len()
    }

    pub fn node_count(&self) -> usize {
        self.features.rows()
    }

    /// Replaces the node features (same shape), e.g. for masked coalitions.
    pub fn with_features(&self, features: Tensor) -> Self {
        debug_assert_eq!(features.shape(), self.features.shape());
        Self {
            features,
            ..self.clone()
        }
    }
}
