use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::GraphSample;

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Generated { seed: u64 },
    Loaded { path: PathBuf },
}

/// Disjoint index lists covering every graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graphs: Vec<GraphSample>,
    pub class_count: usize,
    /// Original label spelling per class index.
    pub class_names: Vec<String>,
    pub split: Option<Split>,
    pub provenance: Provenance,
    /// Ground-truth motif edge ids per graph, when generated. Only used for
    /// visualisation.
    pub motif_edges: Option<Vec<Vec<usize>>>,
    /// Node label spelling per one-hot feature column, empty when features
    /// are constant.
    pub node_label_names: Vec<String>,
}

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.8, 0.1, 0.1];

impl Dataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn split(&self) -> Result<&Split> {
        self.split
            .as_ref()
            .ok_or_else(|| Error::Contract(format!("dataset {} has no split", self.name)))
    }

    pub fn subset(&self, idx: &[usize]) -> Vec<&GraphSample> {
        idx.iter().map(|&i| &self.graphs[i]).collect()
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.class_count];
        for g in &self.graphs {
            h[g.label()] += 1;
        }
        h
    }

    pub fn mean_node_count(&self) -> f64 {
        if self.graphs.is_empty() {
            return 0.0;
        }
        self.graphs.iter().map(|g| g.node_count() as f64).sum::<f64>() / self.graphs.len() as f64
    }

    pub fn mean_edge_count(&self) -> f64 {
        if self.graphs.is_empty() {
            return 0.0;
        }
        self.graphs.iter().map(|g| g.edge_count() as f64).sum::<f64>() / self.graphs.len() as f64
    }

    pub fn feature_dim(&self) -> usize {
        self.graphs.first().map_or(0, |g| g.feature_dim())
    }
}

/// Stratified split with the given `[train, validation, test]` fractions.
///
/// Within each class the graphs are shuffled with `seed` and cut by largest
/// remainder; every split with a positive fraction receives at least one graph
/// of every class.
pub fn split_dataset(mut ds: Dataset, fractions: [f64; 3], seed: u64) -> Result<Dataset> {
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 || fractions.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
        return Err(Error::Parameter(format!(
            "split fractions {fractions:?} must be in [0,1] and sum to 1"
        )));
    }
    let needed = fractions.iter().filter(|&&f| f > 0.0).count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split::default();
    for class in 0..ds.class_count {
        let mut members: Vec<usize> = (0..ds.graphs.len())
            .filter(|&i| ds.graphs[i].label() == class)
            .collect();
        if members.len() < needed {
            return Err(Error::Split(format!(
                "class {class} has {} graphs but {needed} splits need one each",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let counts = allocate(members.len(), &fractions);
        let (a, rest) = members.split_at(counts[0]);
        let (b, c) = rest.split_at(counts[1]);
        split.train.extend_from_slice(a);
        split.validation.extend_from_slice(b);
        split.test.extend_from_slice(c);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    ds.split = Some(split);
    Ok(ds)
}

fn allocate(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts = [0usize; 3];
    for i in 0..3 {
        counts[i] = exact[i].floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if fractions[i] > 0.0 {
            counts[i] += 1;
            left -= 1;
        }
    }
    // every positive split gets at least one, taken from the largest
    for i in 0..3 {
        if fractions[i] > 0.0 && counts[i] == 0 {
            let donor = (0..3).max_by_key(|&j| (counts[j], usize::MAX - j)).unwrap();
            counts[donor] -= 1;
            counts[i] += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn toy(per_class: &[usize]) -> Dataset {
        let mut graphs = Vec::new();
        for (c, &n) in per_class.iter().enumerate() {
            for _ in 0..n {
                graphs.push(GraphSample::new(2, [(0, 1)], Tensor::full(2, 1, 1.0), c).unwrap());
            }
        }
        Dataset {
            name: "toy".into(),
            graphs,
            class_count: per_class.len(),
            class_names: (0..per_class.len()).map(|c| c.to_string()).collect(),
            split: None,
            provenance: Provenance::Generated { seed: 0 },
            motif_edges: None,
            node_label_names: vec![],
        }
    }

    #[test]
    fn split_is_disjoint_covering_and_stratified() {
        let ds = split_dataset(toy(&[500, 500]), DEFAULT_FRACTIONS, 3).unwrap();
        let s = ds.split().unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (800, 100, 100));
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
        let class1_test = s.test.iter().filter(|&&i| ds.graphs[i].label() == 1).count();
        assert_eq!(class1_test, 50);
    }

    #[test]
    fn split_is_deterministic() {
        let a = split_dataset(toy(&[30, 40]), DEFAULT_FRACTIONS, 9).unwrap();
        let b = split_dataset(toy(&[30, 40]), DEFAULT_FRACTIONS, 9).unwrap();
        let c = split_dataset(toy(&[30, 40]), DEFAULT_FRACTIONS, 10).unwrap();
        assert_eq!(a.split, b.split);
        assert_ne!(a.split, c.split);
    }

    #[test]
    fn tiny_class_is_split_error() {
        assert!(matches!(
            split_dataset(toy(&[10, 2]), DEFAULT_FRACTIONS, 0),
            Err(Error::Split(_))
        ));
        let ok = split_dataset(toy(&[10, 3]), DEFAULT_FRACTIONS, 0).unwrap();
        let s = ok.split().unwrap();
        for part in [&s.train, &s.validation, &s.test] {
            assert!(part.iter().any(|&i| ok.graphs[i].label() == 1));
        }
    }

    #[test]
    fn fractions_must_sum_to_one() {
        assert!(matches!(
            split_dataset(toy(&[10]), [0.5, 0.2, 0.2], 0),
            Err(Error::Parameter(_))
        ));
    }
}
