//! Remove-and-retrain evaluation.
//!
//! RoMie retrains from scratch on the most important edges of every training
//! and validation graph, RoLie on the least important ones; both evaluate on
//! the untouched test split. Selection ranks edges once per graph, RoMie
//! takes a prefix and RoLie a suffix, so RoMie(x) and RoLie(100 - x) always
//! partition the edge set.

mod results;
mod sweep;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use results::{read_results, write_results, CellRecord, ResultsFile, RESULTS_HEADER};
pub use sweep::{curves_from_records, run_sweep, CellResult, EvalCurve, SweepConfig, SweepInput};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explain::{rank_edges, Attribution, AttributionSet, Method};
use crate::graph::{apply_edge_subset, kept_edge_count, EdgeSubset};
use crate::model::{checkpoint, evaluate, train_on, ArchConfig, ArchKind, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    RoMie,
    RoLie,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::RoMie, Mode::RoLie];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::RoMie => "RoMie",
            Mode::RoLie => "RoLie",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "romie" => Ok(Mode::RoMie),
            "rolie" => Ok(Mode::RoLie),
            other => Err(Error::Parameter(format!("unknown mode {other:?}"))),
        }
    }
}

/// Edges kept at `percent` in `mode`.
///
/// RoMie keeps the `round_half_up(percent * |E| / 100)` best-ranked edges.
/// RoLie keeps whatever RoMie at `100 - percent` leaves over, which is the
/// same count except when `percent * |E| / 100` ends in exactly one half.
pub fn select_edges(scores: &[f64], percent: u32, mode: Mode) -> Result<EdgeSubset> {
    let m = scores.len();
    let order = rank_edges(scores);
    let kept = match mode {
        Mode::RoMie => &order[..kept_edge_count(percent, m)?],
        Mode::RoLie => {
            let complement = 100u32
                .checked_sub(percent)
                .ok_or_else(|| Error::Parameter(format!("sparsity {percent}% is outside [0, 100]")))?;
            &order[kept_edge_count(complement, m)?..]
        }
    };
    EdgeSubset::new(m, kept.iter().copied())
}

/// Edges kept for one graph's attribution. Mask-based attributions provide
/// RoMie masks per level; RoLie at `x` is the complement of RoMie at `100 - x`.
pub fn select_for(attr: &Attribution, percent: u32, mode: Mode) -> Result<EdgeSubset> {
    match attr {
        Attribution::Scores(s) => select_edges(&s.scores, percent, mode),
        Attribution::Masks(levels) => {
            let level = match mode {
                Mode::RoMie => percent,
                Mode::RoLie => 100u32
                    .checked_sub(percent)
                    .ok_or_else(|| Error::Parameter(format!("sparsity {percent}% is outside [0, 100]")))?,
            };
            let mask = levels
                .get(&level)
                .ok_or_else(|| Error::Contract(format!("no mask computed for sparsity {level}%")))?;
            Ok(match mode {
                Mode::RoMie => mask.clone(),
                Mode::RoLie => mask.complement(),
            })
        }
    }
}

/// Replaces train and validation graphs by their selected subgraphs. Test
/// graphs are left untouched.
pub fn build_retrain_dataset(
    ds: &Dataset,
    attrs: &AttributionSet,
    percent: u32,
    mode: Mode,
    eliminate_isolated: bool,
) -> Result<Dataset> {
    let split = ds.split()?;
    let mut out = ds.clone();
    out.motif_edges = None;
    for &i in split.train.iter().chain(&split.validation) {
        let kept = select_for(attrs.get(i)?, percent, mode)?;
        out.graphs[i] = apply_edge_subset(&ds.graphs[i], &kept, eliminate_isolated)?.graph;
    }
    Ok(out)
}

/// Hex SHA-256 over the given graphs in order.
pub fn graphs_checksum(ds: &Dataset, ids: &[usize]) -> String {
    let mut h = Sha256::new();
    for &i in ids {
        h.update(ds.graphs[i].checksum());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed for the `replica`-th retraining, drawn from a stream the baseline
/// never uses.
pub fn retrain_seed(base_seed: u64, replica: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(2 + replica as u64);
    rng.gen()
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunSpec {
    pub dataset: String,
    pub arch: ArchKind,
    pub attributor: Method,
    pub mode: Mode,
    pub sparsity: u32,
    pub seed: u64,
    pub eliminate_isolated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub accuracy: f64,
    pub test_checksum: String,
    pub model_checksum: String,
}

/// Retrains from a fresh initialisation seeded by `spec.seed` and evaluates
/// on the unperturbed test split.
pub fn run_cell(
    ds: &Dataset,
    spec: &RunSpec,
    attrs: &AttributionSet,
    arch: &ArchConfig,
    train: &TrainConfig,
) -> Result<CellOutcome> {
    let perturbed = build_retrain_dataset(ds, attrs, spec.sparsity, spec.mode, spec.eliminate_isolated)?;
    train_and_test(&perturbed, arch, train, spec.seed)
}

fn train_and_test(ds: &Dataset, arch: &ArchConfig, train: &TrainConfig, seed: u64) -> Result<CellOutcome> {
    let split = ds.split()?;
    let cfg = TrainConfig {
        seed,
        ..train.clone()
    };
    let (params, _) = train_on(&ds.subset(&split.train), &ds.subset(&split.validation), arch, &cfg)?;
    let eval = evaluate(&params, &ds.subset(&split.test))?;
    Ok(CellOutcome {
        accuracy: eval.accuracy,
        test_checksum: graphs_checksum(ds, &split.test),
        model_checksum: checkpoint::checksum(&params),
    })
}

/// RoMie(x) next to RoLie(100 - x).
#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub romie_sparsity: u32,
    pub rolie_sparsity: u32,
    pub romie_accuracy: Option<f64>,
    pub rolie_accuracy: Option<f64>,
}

/// Pairs complementary cells and checks on every attributed graph that the
/// two edge subsets partition the edge set.
pub fn complementarity_report(
    curve: &EvalCurve,
    ds: &Dataset,
    attrs: &[AttributionSet],
    levels: &[u32],
) -> Result<Vec<PairRow>> {
    for set in attrs {
        check_partition(ds, set, levels)?;
    }
    Ok(levels
        .iter()
        .filter(|&&x| x <= 100)
        .map(|&x| PairRow {
            romie_sparsity: x,
            rolie_sparsity: 100 - x,
            romie_accuracy: curve.accuracy(Mode::RoMie, x),
            rolie_accuracy: curve.accuracy(Mode::RoLie, 100 - x),
        })
        .collect())
}

/// Integrity error if RoMie(x) and RoLie(100 - x) do not partition a graph's
/// edges for some level.
pub fn check_partition(ds: &Dataset, attrs: &AttributionSet, levels: &[u32]) -> Result<()> {
    for (&id, attr) in &attrs.graphs {
        let m = ds.graphs[id].edge_count();
        for &x in levels {
            let most = select_for(attr, x, Mode::RoMie)?;
            let least = select_for(attr, 100 - x, Mode::RoLie)?;
            let overlap = most.kept().iter().any(|&e| least.contains(e));
            if overlap || most.len() + least.len() != m {
                return Err(Error::Integrity(format!(
                    "{} graph {id}: RoMie({x}) and RoLie({}) do not partition its {m} edges",
                    attrs.method,
                    100 - x
                )));
            }
        }
    }
    Ok(())
}

/// Integrity error if a score-based attribution's RoMie selections are not
/// nested across increasing levels. Mask-based attributions are exempt:
/// their per-level searches are independent.
pub fn check_containment(attrs: &AttributionSet, levels: &[u32]) -> Result<()> {
    if !attrs.method.is_score_based() {
        return Ok(());
    }
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    for (&id, attr) in &attrs.graphs {
        for w in sorted.windows(2) {
            for mode in Mode::BOTH {
                let small = select_for(attr, w[0], mode)?;
                let large = select_for(attr, w[1], mode)?;
                if !small.is_subset_of(&large) {
                    return Err(Error::Integrity(format!(
                        "{} graph {id}: {mode}({}) is not contained in {mode}({})",
                        attrs.method, w[0], w[1]
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Whether a curve reaches near-baseline accuracy early.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SharpRise {
    /// Fraction of baseline accuracy that counts as recovered.
    pub ratio: f64,
    /// Highest sparsity at which recovery still counts as early.
    pub max_sparsity: u32,
}

impl Default for SharpRise {
    fn default() -> Self {
        Self {
            ratio: 0.9,
            max_sparsity: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Sharp RoMie and sharp RoLie.
    Unpredictable,
    /// Sharp RoMie, smooth RoLie.
    Generalizing,
    /// Smooth RoMie, sharp RoLie.
    NonGeneralizing,
    /// Smooth RoMie and smooth RoLie.
    Inconsistent,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::Unpredictable => "i.a unpredictable",
            Scenario::Generalizing => "i.b generalizing",
            Scenario::NonGeneralizing => "ii.a non-generalizing",
            Scenario::Inconsistent => "ii.b inconsistent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpretation {
    pub romie_sharp: bool,
    pub rolie_sharp: bool,
    pub scenario: Scenario,
}

/// Joint reading of the RoMie and RoLie curves. Level 0 is ignored since
/// both modes train on empty graphs there.
pub fn interpretation_flags(curve: &EvalCurve, thresholds: &SharpRise) -> Interpretation {
    let target = thresholds.ratio * curve.baseline_accuracy;
    let sharp = |mode| {
        curve
            .levels(mode)
            .into_iter()
            .filter(|&x| x > 0 && x <= thresholds.max_sparsity)
            .any(|x| curve.accuracy(mode, x).is_some_and(|a| a >= target))
    };
    let (romie_sharp, rolie_sharp) = (sharp(Mode::RoMie), sharp(Mode::RoLie));
    let scenario = match (romie_sharp, rolie_sharp) {
        (true, true) => Scenario::Unpredictable,
        (true, false) => Scenario::Generalizing,
        (false, true) => Scenario::NonGeneralizing,
        (false, false) => Scenario::Inconsistent,
    };
    Interpretation {
        romie_sharp,
        rolie_sharp,
        scenario,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn romie_takes_highest() {
        let scores: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let s = select_edges(&scores, 30, Mode::RoMie).unwrap();
        assert_eq!(s.kept(), &[14, 15, 16, 17, 18, 19]);
        let s = select_edges(&scores, 30, Mode::RoLie).unwrap();
        assert_eq!(s.kept(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn extremes() {
        let scores = [0.3, 0.1, 0.2];
        for mode in Mode::BOTH {
            assert!(select_edges(&scores, 0, mode).unwrap().is_empty());
            assert_eq!(select_edges(&scores, 100, mode).unwrap().len(), 3);
        }
        assert!(matches!(select_edges(&scores, 101, Mode::RoMie), Err(Error::Parameter(_))));
        assert!(matches!(select_edges(&scores, 101, Mode::RoLie), Err(Error::Parameter(_))));
    }

    #[test]
    fn equal_scores_split_by_index() {
        let scores = [1.0; 10];
        assert_eq!(select_edges(&scores, 50, Mode::RoMie).unwrap().kept(), &[0, 1, 2, 3, 4]);
        assert_eq!(select_edges(&scores, 50, Mode::RoLie).unwrap().kept(), &[5, 6, 7, 8, 9]);
    }

    #[test]
    fn half_counts_stay_complementary() {
        // 10% of 5 edges is exactly one half
        let scores = [0.5, 0.4, 0.3, 0.2, 0.1];
        let most = select_edges(&scores, 10, Mode::RoMie).unwrap();
        let least = select_edges(&scores, 90, Mode::RoLie).unwrap();
        assert_eq!(most.kept(), &[0]);
        assert_eq!(least.kept(), &[1, 2, 3, 4]);
    }

    #[test]
    fn modes_parse() {
        assert_eq!("romie".parse::<Mode>().unwrap(), Mode::RoMie);
        assert_eq!(Mode::RoLie.to_string().parse::<Mode>().unwrap(), Mode::RoLie);
        assert!("roar".parse::<Mode>().is_err());
    }

    #[test]
    fn retrain_seeds_differ_from_base() {
        assert_ne!(retrain_seed(0, 0), 0);
        assert_ne!(retrain_seed(0, 0), retrain_seed(0, 1));
        assert_eq!(retrain_seed(5, 2), retrain_seed(5, 2));
    }
}
