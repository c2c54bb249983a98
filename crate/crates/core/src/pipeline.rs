//! The command implementations behind the CLI.
//!
//! Output layout under the run root:
//! `datasets/<name>/`, `models/<name>-<arch>-<hash>.ckpt` with a `.log.csv`
//! training log, `attributions/`, `results/<name>-<arch>-<hash>.csv`,
//! `report/` and `viz/`. The hash covers everything that determines the
//! baseline model.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::dataset::{split_dataset, Dataset};
use crate::error::{Error, Result};
use crate::explain::cache::{load_or_compute, CacheKey};
use crate::explain::{attribute_dataset, AttributionConfig, AttributionSet, Method};
use crate::model::{checkpoint, evaluate, train, ArchConfig, ModelParams, TrainLog};
use crate::report::{write_report, ReportOutput};
use crate::retrain::{run_sweep, EvalCurve, Mode, ResultsFile, SweepInput};
use crate::synthetic::{generate_ba2motifs, generate_ba3motifs};
use crate::tu::{load_tu_dataset, write_tu_dataset};
use crate::visualize::graph_dot;

/// Unsplit dataset named by the config: generated for the synthetic names,
/// otherwise read from `dataset.path`.
pub fn raw_dataset(cfg: &RunConfig) -> Result<Dataset> {
    if let Some(path) = &cfg.dataset.path {
        return load_tu_dataset(path);
    }
    match cfg.dataset.name.to_ascii_lowercase().as_str() {
        "ba2motifs" => generate_ba2motifs(cfg.dataset.seed),
        "ba3motifs" => generate_ba3motifs(cfg.dataset.seed),
        _ => Err(Error::Config(format!(
            "dataset {:?} is not generated and has no path",
            cfg.dataset.name
        ))),
    }
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    split_dataset(raw_dataset(cfg)?, cfg.dataset.split, cfg.dataset.split_seed)
}

fn run_hash(cfg: &RunConfig) -> String {
    let mut h = Sha256::new();
    for part in [
        toml::to_string(&cfg.dataset),
        toml::to_string(&cfg.model),
        toml::to_string(&cfg.train),
    ] {
        h.update(part.expect("serialisable"));
    }
    h.finalize().iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// File locations of one run.
#[derive(Debug, Clone)]
pub struct Paths {
    pub root: PathBuf,
    stem: String,
}

impl Paths {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            root: cfg.out_dir(),
            stem: format!("{}-{}-{}", cfg.dataset.name, cfg.model.arch, run_hash(cfg)),
        }
    }

    pub fn dataset_dir(&self, name: &str) -> PathBuf {
        self.root.join("datasets").join(name)
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("models").join(format!("{}.ckpt", self.stem))
    }

    pub fn train_log(&self) -> PathBuf {
        self.root.join("models").join(format!("{}.log.csv", self.stem))
    }

    pub fn attributions(&self) -> PathBuf {
        self.root.join("attributions")
    }

    pub fn results(&self) -> PathBuf {
        self.root.join("results").join(format!("{}.csv", self.stem))
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn viz(&self) -> PathBuf {
        self.root.join("viz")
    }
}

/// Writes the configured dataset in TU format under `datasets/`.
pub fn cmd_generate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let ds = raw_dataset(cfg)?;
    write_tu_dataset(&ds, &Paths::new(cfg).dataset_dir(&ds.name))
}

pub fn arch_for(cfg: &RunConfig, ds: &Dataset) -> ArchConfig {
    ArchConfig::new(cfg.model.arch, ds.feature_dim(), cfg.model.hidden_dim, ds.class_count)
}

fn log_csv(log: &TrainLog) -> String {
    let mut out = String::from("epoch,train_loss,val_accuracy,val_loss\n");
    for e in &log.epochs {
        writeln!(out, "{},{:?},{:?},{:?}", e.epoch, e.train_loss, e.val_accuracy, e.val_loss).unwrap();
    }
    out
}

#[derive(Debug, Clone)]
pub struct Baseline {
    pub params: ModelParams,
    pub test_accuracy: f64,
    pub checkpoint: PathBuf,
    /// Whether the checkpoint was trained in this call.
    pub trained: bool,
}

/// Loads the baseline checkpoint, training and saving it first if missing.
pub fn baseline(cfg: &RunConfig, ds: &Dataset) -> Result<Baseline> {
    let paths = Paths::new(cfg);
    let path = paths.checkpoint();
    let (params, trained) = if path.exists() {
        (checkpoint::load(&path)?, false)
    } else {
        let (params, log) = train(ds, &arch_for(cfg, ds), &cfg.train)?;
        checkpoint::save(&params, &path)?;
        crate::write_atomic(&paths.train_log(), &log_csv(&log))?;
        (params, true)
    };
    let test_accuracy = evaluate(&params, &ds.subset(&ds.split()?.test))?.accuracy;
    Ok(Baseline {
        params,
        test_accuracy,
        checkpoint: path,
        trained,
    })
}

pub fn cmd_train(cfg: &RunConfig) -> Result<Baseline> {
    baseline(cfg, &load_dataset(cfg)?)
}

/// Graphs that get attributed: train and validation.
pub fn attributed_ids(ds: &Dataset) -> Result<Vec<usize>> {
    let split = ds.split()?;
    let mut ids: Vec<usize> = split.train.iter().chain(&split.validation).copied().collect();
    ids.sort_unstable();
    Ok(ids)
}

/// Cached attributions of `method`; Random yields one set per repeat.
pub fn attributions_for(cfg: &RunConfig, ds: &Dataset, params: &ModelParams, method: Method) -> Result<Vec<(AttributionSet, bool)>> {
    let ids = attributed_ids(ds)?;
    let model = checkpoint::checksum(params);
    let configs: Vec<AttributionConfig> = if method == Method::Random {
        (0..cfg.sweep.random_repeats as u64)
            .map(|r| AttributionConfig {
                random_seed: cfg.attribution.random_seed + r,
                ..cfg.attribution.clone()
            })
            .collect()
    } else {
        vec![cfg.attribution.clone()]
    };
    configs
        .iter()
        .map(|acfg| {
            let key = CacheKey {
                dataset: ds.name.clone(),
                model_checksum: model.clone(),
                method,
                config_hash: acfg.hash_for(method),
            };
            load_or_compute(&Paths::new(cfg).attributions(), &key, &ds.graphs, &ids, || {
                attribute_dataset(params, ds, method, &ids, acfg)
            })
        })
        .collect()
}

/// Attributes every configured method; reports cache hits per method.
pub fn cmd_explain(cfg: &RunConfig) -> Result<Vec<(Method, bool)>> {
    let ds = load_dataset(cfg)?;
    let base = baseline(cfg, &ds)?;
    let mut out = Vec::new();
    for &m in &cfg.attributors {
        let sets = attributions_for(cfg, &ds, &base.params, m)?;
        out.push((m, sets.iter().all(|(_, hit)| *hit)));
    }
    Ok(out)
}

/// Runs the sweep of every configured attributor, resuming from the
/// results file.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<Vec<EvalCurve>> {
    let ds = load_dataset(cfg)?;
    let base = baseline(cfg, &ds)?;
    let arch = arch_for(cfg, &ds);
    let mut results = ResultsFile::open(&Paths::new(cfg).results())?;
    let mut curves = Vec::new();
    for &m in &cfg.attributors {
        let sets: Vec<AttributionSet> = attributions_for(cfg, &ds, &base.params, m)?
            .into_iter()
            .map(|(s, _)| s)
            .collect();
        let input = SweepInput {
            dataset: &ds,
            arch: &arch,
            train: &cfg.train,
            baseline_seed: cfg.train.seed,
            baseline_accuracy: base.test_accuracy,
            attributor: m,
            attributions: &sets,
            retrain_seeds: None,
        };
        curves.push(run_sweep(&input, &cfg.sweep, Some(&mut results))?);
    }
    Ok(curves)
}

/// Report over `results`, or over the run's own results file.
pub fn cmd_report(cfg: &RunConfig, results: Option<&Path>) -> Result<ReportOutput> {
    let paths = Paths::new(cfg);
    let path = results.map_or_else(|| paths.results(), Path::to_path_buf);
    let file = ResultsFile::open(&path)?;
    write_report(&file.records, &cfg.sharp_rise, &paths.report())
}

/// Writes `viz/<dataset>-<graph>-<method>-<mode>-<sparsity>.dot`.
pub fn cmd_visualize(cfg: &RunConfig, method: Method, graph: usize, sparsity: u32, mode: Mode) -> Result<PathBuf> {
    let ds = load_dataset(cfg)?;
    if graph >= ds.len() {
        return Err(Error::Lookup(format!("dataset {} has no graph {graph}", ds.name)));
    }
    let base = baseline(cfg, &ds)?;
    let (attrs, _) = attributions_for(cfg, &ds, &base.params, method)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("no attribution repeats configured".into()))?;
    let dot = graph_dot(&ds, &attrs, graph, sparsity, mode)?;
    let path = Paths::new(cfg)
        .viz()
        .join(format!("{}-{graph}-{method}-{mode}-{sparsity}.dot", ds.name));
    crate::write_atomic(&path, &dot)?;
    Ok(path)
}
