use graphroar::graph::GraphSample;
use graphroar::model::{ArchConfig, ArchKind, EdgeWeightedBatch, ModelParams};
use graphroar::synthetic::generate_ba_graph;
use graphroar::tensor::Tensor;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn relabel(g: &GraphSample, perm: &[usize]) -> GraphSample {
    let n = g.node_count();
    let d = g.feature_dim();
    let mut feats = Tensor::zeros(n, d);
    for v in 0..n {
        for j in 0..d {
            feats.set(perm[v], j, g.features().get(v, j));
        }
    }
    let edges = g.edges().iter().map(|&(u, v)| (perm[u], perm[v]));
    GraphSample::new(n, edges, feats, g.label()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn logits_ignore_node_order(seed in 0u64..1000, gin in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = generate_ba_graph(12, 2, seed).unwrap();
        let feats = Tensor::matrix(12, 3, (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let g = GraphSample::new(12, base.edges().iter().copied(), feats, 0).unwrap();
        let mut perm: Vec<usize> = (0..12).collect();
        perm.shuffle(&mut rng);
        let h = relabel(&g, &perm);
        let kind = if gin { ArchKind::Gin } else { ArchKind::Gcn };
        let p = ModelParams::init(&ArchConfig::new(kind, 3, 16, 3), seed).unwrap();
        let a = p.logits(&EdgeWeightedBatch::single(&g)).unwrap();
        let b = p.logits(&EdgeWeightedBatch::single(&h)).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
        }
    }

    #[test]
    fn batching_does_not_mix_graphs(seed in 0u64..1000) {
        let a = generate_ba_graph(9, 1, seed).unwrap();
        let b = generate_ba_graph(14, 2, seed + 1).unwrap();
        let p = ModelParams::init(&ArchConfig::new(ArchKind::Gin, 10, 8, 2), seed).unwrap();
        let together = p.logits(&EdgeWeightedBatch::new(&[&a, &b])).unwrap();
        let alone_a = p.logits(&EdgeWeightedBatch::single(&a)).unwrap();
        let alone_b = p.logits(&EdgeWeightedBatch::single(&b)).unwrap();
        for j in 0..2 {
            prop_assert!((together.get(0, j) - alone_a.get(0, j)).abs() < 1e-12);
            prop_assert!((together.get(1, j) - alone_b.get(0, j)).abs() < 1e-12);
        }
    }
}
