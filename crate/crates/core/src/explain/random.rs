use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EdgeScores, Method, ScoreMeta};
use crate::graph::GraphSample;

/// I.i.d. uniform `[0, 1)` score per edge.
pub fn random_scores(g: &GraphSample, seed: u64) -> EdgeScores {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scores = (0..g.edge_count()).map(|_| rng.gen::<f64>()).collect();
    EdgeScores {
        scores,
        method: Method::Random,
        meta: ScoreMeta {
            iterations: 0,
            final_loss: None,
            seed: Some(seed),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn path(n: usize) -> GraphSample {
        GraphSample::new(n, (1..n).map(|v| (v - 1, v)), Tensor::full(n, 1, 1.0), 0).unwrap()
    }

    #[test]
    fn seeded() {
        let g = path(101);
        assert_eq!(random_scores(&g, 3), random_scores(&g, 3));
        assert_ne!(random_scores(&g, 3).scores, random_scores(&g, 4).scores);
    }

    #[test]
    fn mean_is_half() {
        let g = path(100_001);
        let s = random_scores(&g, 0);
        let mean = s.scores.iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
        assert!(s.scores.iter().all(|&v| (0.0..1.0).contains(&v)));
    }
}
