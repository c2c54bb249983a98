use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    build_retrain_dataset, check_containment, check_partition, graphs_checksum, retrain_seed, train_and_test,
    CellRecord, Mode, ResultsFile, RunSpec,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explain::{AttributionSet, Method, LEVELS};
use crate::model::{ArchConfig, ArchKind, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub levels: Vec<u32>,
    pub modes: Vec<Mode>,
    /// Retrainings per cell for attributors other than Random.
    pub seeds_per_cell: usize,
    /// Independent random attributions per cell, each retrained once.
    pub random_repeats: usize,
    pub eliminate_isolated: bool,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            levels: LEVELS.to_vec(),
            modes: Mode::BOTH.to_vec(),
            seeds_per_cell: 1,
            random_repeats: 3,
            eliminate_isolated: true,
            workers: 0,
        }
    }
}

pub struct SweepInput<'a> {
    pub dataset: &'a Dataset,
    pub arch: &'a ArchConfig,
    pub train: &'a TrainConfig,
    pub baseline_seed: u64,
    pub baseline_accuracy: f64,
    pub attributor: Method,
    /// One set per repeat for Random, a single set otherwise.
    pub attributions: &'a [AttributionSet],
    /// Replaces the derived retraining seeds, one per replica.
    pub retrain_seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub spec: RunSpec,
    pub replica: usize,
    pub accuracy: f64,
    /// Checksum of the test graphs the cell was evaluated on.
    pub test_checksum: Option<String>,
    /// Checksum of the retrained weights, when trained in this run.
    pub model_checksum: Option<String>,
    /// Taken from the results file instead of being trained.
    pub reused: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalCurve {
    pub dataset: String,
    pub arch: ArchKind,
    pub attributor: Method,
    pub eliminate_isolated: bool,
    pub baseline_accuracy: f64,
    pub cells: Vec<CellResult>,
}

impl EvalCurve {
    pub fn seed_accuracies(&self, mode: Mode, sparsity: u32) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.spec.mode == mode && c.spec.sparsity == sparsity)
            .map(|c| c.accuracy)
            .collect()
    }

    /// Mean accuracy over the cell's replicas.
    pub fn accuracy(&self, mode: Mode, sparsity: u32) -> Option<f64> {
        let a = self.seed_accuracies(mode, sparsity);
        (!a.is_empty()).then(|| a.iter().sum::<f64>() / a.len() as f64)
    }

    pub fn levels(&self, mode: Mode) -> Vec<u32> {
        let mut l: Vec<u32> = self
            .cells
            .iter()
            .filter(|c| c.spec.mode == mode)
            .map(|c| c.spec.sparsity)
            .collect();
        l.sort_unstable();
        l.dedup();
        l
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn fingerprint(ds: &Dataset, seed: u64) -> Result<[u8; 32]> {
    let split = ds.split()?;
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for ids in [&split.train, &split.validation] {
        h.update(graphs_checksum(ds, ids));
        h.update(b"|");
    }
    Ok(h.finalize().into())
}

/// Runs every (replica, mode, level) cell.
///
/// Cells already in `results` are reused; cells whose perturbed training
/// problem is identical to another cell's (for instance RoMie(100) and
/// RoLie(100)) are trained once. New cells are appended to `results` as they
/// finish. The returned curve does not depend on execution order.
pub fn run_sweep(input: &SweepInput, cfg: &SweepConfig, results: Option<&mut ResultsFile>) -> Result<EvalCurve> {
    let ds = input.dataset;
    let replicas = if input.attributor == Method::Random {
        cfg.random_repeats
    } else {
        cfg.seeds_per_cell
    };
    if replicas == 0 {
        return Err(Error::Parameter("a sweep needs at least one replica".into()));
    }
    let expected_sets = if input.attributor == Method::Random { replicas } else { 1 };
    if input.attributions.len() != expected_sets {
        return Err(Error::Contract(format!(
            "{} sweep needs {expected_sets} attribution sets, got {}",
            input.attributor,
            input.attributions.len()
        )));
    }
    if let Some(bad) = input.attributions.iter().find(|a| a.method != input.attributor) {
        return Err(Error::Contract(format!("{} attributions passed to a {} sweep", bad.method, input.attributor)));
    }
    let seeds: Vec<u64> = match &input.retrain_seeds {
        Some(s) if s.len() == replicas => s.clone(),
        Some(s) => return Err(Error::Parameter(format!("{} retrain seeds for {replicas} replicas", s.len()))),
        None => (0..replicas).map(|r| retrain_seed(input.baseline_seed, r)).collect(),
    };
    let paired: Vec<u32> = cfg
        .levels
        .iter()
        .copied()
        .filter(|&x| x <= 100 && cfg.levels.contains(&(100 - x)))
        .collect();
    for set in input.attributions {
        check_partition(ds, set, &paired)?;
        check_containment(set, &cfg.levels)?;
    }

    struct Job {
        spec: RunSpec,
        replica: usize,
        test_checksum: String,
        key: [u8; 32],
    }
    let mut jobs = Vec::new();
    for (replica, &seed) in seeds.iter().enumerate() {
        let attrs = &input.attributions[replica.min(input.attributions.len() - 1)];
        for &mode in &cfg.modes {
            for &sparsity in &cfg.levels {
                let spec = RunSpec {
                    dataset: ds.name.clone(),
                    arch: input.arch.kind,
                    attributor: input.attributor,
                    mode,
                    sparsity,
                    seed,
                    eliminate_isolated: cfg.eliminate_isolated,
                };
                let perturbed = build_retrain_dataset(ds, attrs, sparsity, mode, cfg.eliminate_isolated)?;
                jobs.push(Job {
                    spec,
                    replica,
                    test_checksum: graphs_checksum(&perturbed, &perturbed.split()?.test),
                    key: fingerprint(&perturbed, seed)?,
                });
            }
        }
    }

    let mut known: HashMap<[u8; 32], f64> = HashMap::new();
    if let Some(r) = results.as_deref() {
        for job in &jobs {
            if let Some(rec) = r.get(&job.spec) {
                known.insert(job.key, rec.accuracy);
            }
        }
    }
    let mut todo: BTreeMap<[u8; 32], usize> = BTreeMap::new();
    for (i, job) in jobs.iter().enumerate() {
        if !known.contains_key(&job.key) {
            todo.entry(job.key).or_insert(i);
        }
    }

    let results = Mutex::new(results);
    let train_one = |&i: &usize| -> Result<([u8; 32], super::CellOutcome)> {
        let job = &jobs[i];
        let attrs = &input.attributions[job.replica.min(input.attributions.len() - 1)];
        let perturbed = build_retrain_dataset(ds, attrs, job.spec.sparsity, job.spec.mode, cfg.eliminate_isolated)?;
        let outcome = train_and_test(&perturbed, input.arch, input.train, job.spec.seed)?;
        if let Some(r) = results.lock().expect("results lock").as_deref_mut() {
            r.insert(CellRecord {
                spec: job.spec.clone(),
                accuracy: outcome.accuracy,
                baseline_accuracy: input.baseline_accuracy,
                timestamp: now(),
            })?;
        }
        Ok((job.key, outcome))
    };
    let indices: Vec<usize> = todo.values().copied().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start worker pool: {e}")))?;
    let trained: HashMap<[u8; 32], super::CellOutcome> =
        pool.install(|| indices.par_iter().map(train_one).collect::<Result<_>>())?;

    let mut results = results.into_inner().expect("results lock");
    let mut cells = Vec::with_capacity(jobs.len());
    for job in jobs {
        let (accuracy, model_checksum, reused) = match trained.get(&job.key) {
            Some(o) => (o.accuracy, Some(o.model_checksum.clone()), false),
            None => (known[&job.key], None, true),
        };
        if let Some(r) = results.as_deref_mut() {
            if r.get(&job.spec).is_none() {
                r.insert(CellRecord {
                    spec: job.spec.clone(),
                    accuracy,
                    baseline_accuracy: input.baseline_accuracy,
                    timestamp: now(),
                })?;
            }
        }
        cells.push(CellResult {
            spec: job.spec,
            replica: job.replica,
            accuracy,
            test_checksum: Some(job.test_checksum),
            model_checksum,
            reused,
        });
    }
    Ok(EvalCurve {
        dataset: ds.name.clone(),
        arch: input.arch.kind,
        attributor: input.attributor,
        eliminate_isolated: cfg.eliminate_isolated,
        baseline_accuracy: input.baseline_accuracy,
        cells,
    })
}

/// Groups stored records into one curve per (dataset, arch, attributor,
/// elimination flag). Replicas are numbered by seed order of appearance.
pub fn curves_from_records(records: &[CellRecord]) -> Vec<EvalCurve> {
    let mut groups: BTreeMap<(String, String, Method, bool), EvalCurve> = BTreeMap::new();
    for r in records {
        let s = &r.spec;
        let curve = groups
            .entry((s.dataset.clone(), s.arch.to_string(), s.attributor, s.eliminate_isolated))
            .or_insert_with(|| EvalCurve {
                dataset: s.dataset.clone(),
                arch: s.arch,
                attributor: s.attributor,
                eliminate_isolated: s.eliminate_isolated,
                baseline_accuracy: r.baseline_accuracy,
                cells: Vec::new(),
            });
        let mut seeds: Vec<u64> = Vec::new();
        for c in &curve.cells {
            if !seeds.contains(&c.spec.seed) {
                seeds.push(c.spec.seed);
            }
        }
        let replica = seeds.iter().position(|&x| x == s.seed).unwrap_or(seeds.len());
        curve.cells.push(CellResult {
            spec: s.clone(),
            replica,
            accuracy: r.accuracy,
            test_checksum: None,
            model_checksum: None,
            reused: true,
        });
    }
    groups.into_values().collect()
}
