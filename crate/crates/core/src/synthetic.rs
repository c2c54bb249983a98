//! Barabási–Albert base graphs with planted motifs (BA2Motifs, BA3Motifs).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::tensor::Tensor;

/// Width of the all-ones node features used for feature-less datasets.
pub const CONSTANT_FEATURE_DIM: usize = 10;
pub const BASE_NODES: usize = 20;
pub const GRAPHS_PER_CLASS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motif {
    Cycle5,
    House5,
    Triangle3,
}

impl Motif {
    pub fn node_count(self) -> usize {
        match self {
            Motif::Cycle5 | Motif::House5 => 5,
            Motif::Triangle3 => 3,
        }
    }

    /// Internal edges on local node ids.
    pub fn edges(self) -> &'static [(usize, usize)] {
        match self {
            Motif::Cycle5 => &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)],
            // square 0-1-2-3 with roof apex 4 over the 0-1 side
            Motif::House5 => &[(0, 1), (1, 2), (2, 3), (0, 3), (0, 4), (1, 4)],
            Motif::Triangle3 => &[(0, 1), (1, 2), (0, 2)],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Motif::Cycle5 => "cycle5",
            Motif::House5 => "house5",
            Motif::Triangle3 => "triangle3",
        }
    }
}

impl fmt::Display for Motif {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Motif {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cycle5" | "cycle" => Ok(Motif::Cycle5),
            "house5" | "house" => Ok(Motif::House5),
            "triangle3" | "triangle" => Ok(Motif::Triangle3),
            other => Err(Error::Parameter(format!("unknown motif {other:?}"))),
        }
    }
}

fn constant_features(n: usize) -> Tensor {
    Tensor::full(n, CONSTANT_FEATURE_DIM, 1.0)
}

/// Preferential-attachment graph: a star on `attach_m + 1` nodes, then each
/// new node links to `attach_m` distinct existing nodes chosen with
/// probability proportional to degree.
pub fn generate_ba_graph(n_nodes: usize, attach_m: usize, seed: u64) -> Result<GraphSample> {
    if attach_m == 0 || n_nodes <= attach_m {
        return Err(Error::Parameter(format!(
            "need n_nodes > attach_m >= 1, got n_nodes={n_nodes}, attach_m={attach_m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = (1..=attach_m).map(|v| (0, v)).collect();
    // every endpoint occurrence, so uniform picks are degree-proportional
    let mut endpoints: Vec<usize> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    for new in attach_m + 1..n_nodes {
        let mut targets: Vec<usize> = Vec::with_capacity(attach_m);
        while targets.len() < attach_m {
            let t = endpoints[rng.gen_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((t, new));
            endpoints.push(t);
            endpoints.push(new);
        }
    }
    GraphSample::new(n_nodes, edges, constant_features(n_nodes), 0)
}

/// A graph with a planted motif and the canonical ids of the motif edges.
#[derive(Debug, Clone)]
pub struct MotifGraph {
    pub graph: GraphSample,
    pub motif_edges: Vec<usize>,
}

/// Appends `motif` to `base` and joins them with one edge between a uniformly
/// chosen base node and a uniformly chosen motif node.
pub fn attach_motif(base: &GraphSample, motif: Motif, seed: u64, label: usize) -> Result<MotifGraph> {
    if !base.is_connected() || base.node_count() == 0 {
        return Err(Error::Parameter("motif base graph must be connected and non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = base.node_count();
    let n = offset + motif.node_count();
    let internal: Vec<(usize, usize)> = motif
        .edges()
        .iter()
        .map(|&(u, v)| (u + offset, v + offset))
        .collect();
    let anchor = rng.gen_range(0..offset);
    let joint = offset + rng.gen_range(0..motif.node_count());
    let edges = base
        .edges()
        .iter()
        .copied()
        .chain(internal.iter().copied())
        .chain([(anchor, joint)]);
    let graph = GraphSample::new(n, edges, constant_features(n), label)?;
    let mut motif_edges: Vec<usize> = internal
        .iter()
        .map(|&(u, v)| graph.edge_index(u, v).expect("motif edge present"))
        .collect();
    motif_edges.sort_unstable();
    Ok(MotifGraph { graph, motif_edges })
}

fn generate_motif_dataset(name: &str, motifs: &[Motif], seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(motifs.len() * GRAPHS_PER_CLASS);
    let mut motif_edges = Vec::with_capacity(graphs.capacity());
    for (label, &motif) in motifs.iter().enumerate() {
        for _ in 0..GRAPHS_PER_CLASS {
            let base = generate_ba_graph(BASE_NODES, 1, rng.gen())?;
            let planted = attach_motif(&base, motif, rng.gen(), label)?;
            graphs.push(planted.graph);
            motif_edges.push(planted.motif_edges);
        }
    }
    Ok(Dataset {
        name: name.to_string(),
        graphs,
        class_count: motifs.len(),
        class_names: motifs.iter().map(|m| m.name().to_string()).collect(),
        split: None,
        provenance: Provenance::Generated { seed },
        motif_edges: Some(motif_edges),
        node_label_names: Vec::new(),
    })
}

/// 1000 graphs: class 0 carries a 5-cycle, class 1 a house.
pub fn generate_ba2motifs(seed: u64) -> Result<Dataset> {
    generate_motif_dataset("BA2Motifs", &[Motif::Cycle5, Motif::House5], seed)
}

/// 1500 graphs: cycle, house and triangle classes.
pub fn generate_ba3motifs(seed: u64) -> Result<Dataset> {
    generate_motif_dataset(
        "BA3Motifs",
        &[Motif::Cycle5, Motif::House5, Motif::Triangle3],
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m1_gives_tree() {
        let g = generate_ba_graph(5, 1, 7).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert!(g.is_connected());
    }

    #[test]
    fn ba_is_deterministic() {
        assert_eq!(
            generate_ba_graph(20, 2, 42).unwrap().edges(),
            generate_ba_graph(20, 2, 42).unwrap().edges()
        );
    }

    #[test]
    fn ba_rejects_bad_sizes() {
        assert!(generate_ba_graph(3, 3, 0).is_err());
        assert!(generate_ba_graph(3, 0, 0).is_err());
    }

    #[test]
    fn ba_connected_for_any_seed() {
        for seed in 0..50 {
            let g = generate_ba_graph(20, 1, seed).unwrap();
            assert!(g.is_connected(), "seed {seed}");
        }
    }

    #[test]
    fn cycle_motif_counts() {
        let base = generate_ba_graph(20, 1, 1).unwrap();
        let m = attach_motif(&base, Motif::Cycle5, 2, 0).unwrap();
        assert_eq!(m.graph.node_count(), 25);
        assert_eq!(m.graph.edge_count(), base.edge_count() + 5 + 1);
        assert_eq!(m.motif_edges.len(), 5);
        assert!(m.graph.is_connected());
    }

    #[test]
    fn house_degree_sequence() {
        // degree enumeration over the motif edges alone
        let mut deg = [0usize; 5];
        for &(u, v) in Motif::House5.edges() {
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut d = deg.to_vec();
        d.sort_unstable();
        assert_eq!(d, vec![2, 2, 2, 3, 3]);
    }

    #[test]
    fn triangle_nodes_have_degree_two_inside() {
        let base = generate_ba_graph(20, 1, 3).unwrap();
        let m = attach_motif(&base, Motif::Triangle3, 4, 2).unwrap();
        assert_eq!(m.graph.node_count(), 23);
        let mut deg = [0usize; 3];
        for &e in &m.motif_edges {
            let (u, v) = m.graph.edges()[e];
            deg[u - 20] += 1;
            deg[v - 20] += 1;
        }
        assert!(deg.iter().all(|&d| d >= 2));
    }

    #[test]
    fn unknown_motif_is_parameter_error() {
        assert!(matches!("hexagon".parse::<Motif>(), Err(Error::Parameter(_))));
    }

    #[test]
    fn ba2motifs_shape() {
        let ds = generate_ba2motifs(0).unwrap();
        assert_eq!(ds.len(), 1000);
        assert_eq!(ds.class_histogram(), vec![500, 500]);
        assert_eq!(ds.mean_node_count(), 25.0);
        let motifs = ds.motif_edges.as_ref().unwrap();
        for (g, m) in ds.graphs.iter().zip(motifs) {
            assert!(g.is_connected());
            assert_eq!(m.len(), if g.label() == 1 { 6 } else { 5 });
        }
    }

    #[test]
    fn ba3motifs_shape() {
        let ds = generate_ba3motifs(1).unwrap();
        assert_eq!(ds.len(), 1500);
        assert_eq!(ds.class_histogram(), vec![500, 500, 500]);
        let want = (500.0 * 25.0 + 500.0 * 25.0 + 500.0 * 23.0) / 1500.0;
        assert!((ds.mean_node_count() - want).abs() < 1e-12);
    }
}
