//! Shapley values: exact enumeration and Monte-Carlo permutation sampling.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::model::{EdgeWeightedBatch, ModelParams};

pub const MAX_EXACT_PLAYERS: usize = 10;
const EVAL_CHUNK: usize = 128;

/// A cooperative game evaluated on batches of coalitions.
pub trait CoalitionGame {
    fn player_count(&self) -> usize;

    /// Worth of each coalition, given as membership flags per player.
    fn values(&self, coalitions: &[Vec<bool>]) -> Result<Vec<f64>>;
}

/// Shapley value of every player by enumerating all `n!` orderings.
pub fn shapley_exact<G: CoalitionGame + ?Sized>(game: &G) -> Result<Vec<f64>> {
    let n = game.player_count();
    if n > MAX_EXACT_PLAYERS {
        return Err(Error::Size {
            players: n,
            max: MAX_EXACT_PLAYERS,
        });
    }
    let coalitions: Vec<Vec<bool>> = (0..1usize << n)
        .map(|mask| (0..n).map(|p| mask >> p & 1 == 1).collect())
        .collect();
    let worth = game.values(&coalitions)?;
    let mut phi = vec![0.0; n];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut count = 0u64;
    loop {
        let mut mask = 0usize;
        for &p in &perm {
            let next = mask | 1 << p;
            phi[p] += worth[next] - worth[mask];
            mask = next;
        }
        count += 1;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(phi.into_iter().map(|v| v / count as f64).collect())
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    /// Standard error of the mean over the sampled marginals.
    pub std_error: f64,
    pub samples: usize,
}

/// `(1/T) sum_t [v(S_t + player) - v(S_t)]`, `S_t` being the players that
/// precede `player` in the t-th uniformly sampled ordering.
pub fn shapley_mc<G: CoalitionGame + ?Sized>(game: &G, player: usize, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::Parameter("Monte-Carlo Shapley needs at least one sample".into()));
    }
    let n = game.player_count();
    if player >= n {
        return Err(Error::Index {
            what: "player",
            index: player,
            len: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut coalitions = Vec::with_capacity(2 * samples);
    for _ in 0..samples {
        perm.shuffle(&mut rng);
        let mut without = vec![false; n];
        for &p in perm.iter().take_while(|&&p| p != player) {
            without[p] = true;
        }
        let mut with = without.clone();
        with[player] = true;
        coalitions.push(with);
        coalitions.push(without);
    }
    let worth = game.values(&coalitions)?;
    let marginals: Vec<f64> = worth.chunks(2).map(|w| w[0] - w[1]).collect();
    // shifted by the first marginal, so identical marginals give an exact mean
    let first = marginals[0];
    let mean = first + marginals.iter().map(|m| m - first).sum::<f64>() / samples as f64;
    let std_error = if samples > 1 {
        let var = marginals.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        (var / samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        value: mean,
        std_error,
        samples,
    })
}

/// Game whose players are groups of nodes. A coalition's worth is the
/// model's probability of `target` when every node outside the coalition has
/// its features zeroed (the topology is left intact).
pub struct ModelGame<'a> {
    pub params: &'a ModelParams,
    pub graph: &'a GraphSample,
    pub target: usize,
    pub players: Vec<Vec<usize>>,
}

impl CoalitionGame for ModelGame<'_> {
    fn player_count(&self) -> usize {
        self.players.len()
    }

    fn values(&self, coalitions: &[Vec<bool>]) -> Result<Vec<f64>> {
        let keeps: Vec<Vec<bool>> = coalitions
            .iter()
            .map(|c| {
                let mut keep = vec![false; self.graph.node_count()];
                for (p, nodes) in self.players.iter().enumerate() {
                    if c[p] {
                        for &v in nodes {
                            keep[v] = true;
                        }
                    }
                }
                keep
            })
            .collect();
        masked_probabilities(self.params, self.graph, &keeps, self.target)
    }
}

/// Probability of `target` for each node-keep pattern, batched.
pub fn masked_probabilities(
    params: &ModelParams,
    g: &GraphSample,
    keeps: &[Vec<bool>],
    target: usize,
) -> Result<Vec<f64>> {
    super::check_target(params, target)?;
    let mut out = Vec::with_capacity(keeps.len());
    for chunk in keeps.chunks(EVAL_CHUNK) {
        let graphs: Vec<GraphSample> = chunk.iter().map(|k| g.with_masked_features(k)).collect();
        let refs: Vec<&GraphSample> = graphs.iter().collect();
        let probs = params.predict_proba(&EdgeWeightedBatch::new(&refs))?;
        out.extend((0..chunk.len()).map(|i| probs.get(i, target)));
    }
    Ok(out)
}

/// Players for scoring `subgraph`: the subgraph as one player followed by
/// every node within `l_hop` hops of it, each as its own player.
pub fn subgraph_players(g: &GraphSample, subgraph: &[usize], l_hop: usize) -> Vec<Vec<usize>> {
    let adj = g.adjacency();
    let mut dist = vec![usize::MAX; g.node_count()];
    let mut queue = VecDeque::new();
    for &v in subgraph {
        dist[v] = 0;
        queue.push_back(v);
    }
    while let Some(v) = queue.pop_front() {
        if dist[v] == l_hop {
            continue;
        }
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    let mut players = vec![subgraph.to_vec()];
    players.extend((0..g.node_count()).filter(|&v| dist[v] > 0 && dist[v] != usize::MAX).map(|v| vec![v]));
    players
}

/// Monte-Carlo Shapley value of the node set `subgraph` for the model's
/// `target` probability, with its `l_hop` neighbourhood as the other players.
pub fn subgraph_shapley(
    params: &ModelParams,
    g: &GraphSample,
    subgraph: &[usize],
    target: usize,
    samples: usize,
    l_hop: usize,
    seed: u64,
) -> Result<McEstimate> {
    let game = ModelGame {
        params,
        graph: g,
        target,
        players: subgraph_players(g, subgraph, l_hop),
    };
    shapley_mc(&game, 0, samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// v(S) = sum of weights of members plus a bonus if players 0 and 1 are both in.
    struct Additive {
        w: Vec<f64>,
        bonus: f64,
    }

    impl CoalitionGame for Additive {
        fn player_count(&self) -> usize {
            self.w.len()
        }

        fn values(&self, cs: &[Vec<bool>]) -> Result<Vec<f64>> {
            Ok(cs
                .iter()
                .map(|c| {
                    let base: f64 = c.iter().zip(&self.w).filter(|(m, _)| **m).map(|(_, w)| w).sum();
                    base + if c.len() > 1 && c[0] && c[1] { self.bonus } else { 0.0 }
                })
                .collect())
        }
    }

    #[test]
    fn exact_splits_interaction_evenly() {
        let g = Additive {
            w: vec![1.0, 2.0, 3.0],
            bonus: 1.0,
        };
        let phi = shapley_exact(&g).unwrap();
        assert!((phi[0] - 1.5).abs() < 1e-12);
        assert!((phi[1] - 2.5).abs() < 1e-12);
        assert!((phi[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_player_is_exact_for_any_t() {
        let g = Additive {
            w: vec![0.7],
            bonus: 0.0,
        };
        for t in [1, 3, 50] {
            let est = shapley_mc(&g, 0, t, 9).unwrap();
            assert_eq!(est.value, 0.7);
            assert_eq!(est.std_error, 0.0);
        }
    }

    #[test]
    fn errors() {
        let g = Additive {
            w: vec![0.0; 11],
            bonus: 0.0,
        };
        assert!(matches!(shapley_exact(&g), Err(Error::Size { players: 11, .. })));
        assert!(matches!(shapley_mc(&g, 0, 0, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn permutation_count() {
        let mut p = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut p) {
            n += 1;
        }
        assert_eq!(n, 24);
    }

    #[test]
    fn players_within_hops() {
        let g = GraphSample::new(
            5,
            [(0, 1), (1, 2), (2, 3), (3, 4)],
            crate::tensor::Tensor::full(5, 1, 1.0),
            0,
        )
        .unwrap();
        assert_eq!(subgraph_players(&g, &[0], 2), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(subgraph_players(&g, &[2], 0), vec![vec![2]]);
    }
}
