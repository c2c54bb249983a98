//! On-disk attribution cache.
//!
//! One text file per (dataset, model checksum, method, config hash). Score
//! records are `graph_id,method,seed,edge_u,edge_v,score`; SubgraphX writes
//! `graph_id,method,seed,sparsity,mask` with the mask as a 0/1 string over
//! canonical edges. A missing seed is written as `-`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{Attribution, AttributionSet, EdgeScores, Method, ScoreMeta};
use crate::error::{Error, Result};
use crate::graph::{EdgeSubset, GraphSample};

const MAGIC: &str = "graphroar-attributions 1";
const SCORE_HEADER: &str = "graph_id,method,seed,edge_u,edge_v,score";
const MASK_HEADER: &str = "graph_id,method,seed,sparsity,mask";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheKey {
    pub dataset: String,
    pub model_checksum: String,
    pub method: Method,
    pub config_hash: String,
}

impl CacheKey {
    pub fn file_name(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.dataset, &self.model_checksum, self.method.name(), &self.config_hash] {
            h.update(part.as_bytes());
            h.update(b"\n");
        }
        let digest: String = h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("{}-{}-{digest}.csv", self.dataset, self.method)
    }

    pub fn path_in(&self, dir: &Path) -> PathBuf {
        dir.join(self.file_name())
    }

    fn header(&self) -> [(&'static str, &str); 4] {
        [
            ("dataset", &self.dataset),
            ("model", &self.model_checksum),
            ("method", self.method.name()),
            ("config", &self.config_hash),
        ]
    }
}

fn seed_field(seed: Option<u64>) -> String {
    seed.map_or_else(|| "-".to_string(), |s| s.to_string())
}

pub fn to_text(key: &CacheKey, set: &AttributionSet, graphs: &[GraphSample]) -> Result<String> {
    let mut out = format!("{MAGIC}\n");
    for (k, v) in key.header() {
        writeln!(out, "{k}={v}").unwrap();
    }
    let seed = seed_field(set.seed);
    let name = set.method.name();
    let (scores, masks): (Vec<_>, Vec<_>) = set
        .graphs
        .iter()
        .partition(|(_, a)| matches!(a, Attribution::Scores(_)));
    if !scores.is_empty() {
        out.push_str(SCORE_HEADER);
        out.push('\n');
    }
    for (&id, a) in scores {
        let Attribution::Scores(s) = a else { unreachable!() };
        let g = graphs.get(id).ok_or(Error::Index {
            what: "graph",
            index: id,
            len: graphs.len(),
        })?;
        if s.len() != g.edge_count() {
            return Err(Error::Contract(format!("graph {id}: {} scores for {} edges", s.len(), g.edge_count())));
        }
        for (&(u, v), score) in g.edges().iter().zip(&s.scores) {
            writeln!(out, "{id},{name},{seed},{u},{v},{score:?}").unwrap();
        }
    }
    if !masks.is_empty() {
        out.push_str(MASK_HEADER);
        out.push('\n');
    }
    for (&id, a) in masks {
        let Attribution::Masks(levels) = a else { unreachable!() };
        for (level, subset) in levels {
            let bits: String = subset.as_mask().iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(out, "{id},{name},{seed},{level},{bits}").unwrap();
        }
    }
    Ok(out)
}

pub fn from_text(text: &str, origin: &Path, key: &CacheKey, graphs: &[GraphSample]) -> Result<AttributionSet> {
    let err = |line: usize, reason: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(err(1, format!("expected {MAGIC:?}"))),
    }
    for (k, want) in key.header() {
        let (n, line) = lines.next().ok_or_else(|| err(0, "truncated header".into()))?;
        let got = line
            .strip_prefix(k)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| err(n, format!("expected {k}=")))?;
        if got != want {
            return Err(Error::Lookup(format!("cache {} has {k}={got}, wanted {want}", origin.display())));
        }
    }

    let mut scores: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
    let mut masks: BTreeMap<usize, BTreeMap<u32, EdgeSubset>> = BTreeMap::new();
    let mut seed = None;
    for (n, line) in lines {
        if line == SCORE_HEADER || line == MASK_HEADER || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let graph_of = |s: &str| -> Result<(usize, &GraphSample)> {
            let id: usize = s.parse().map_err(|_| err(n, format!("bad graph id {s:?}")))?;
            graphs.get(id).map(|g| (id, g)).ok_or_else(|| err(n, format!("graph {id} out of range")))
        };
        if f.len() < 5 || f[1] != key.method.name() {
            return Err(err(n, "malformed record".into()));
        }
        seed = match f[2] {
            "-" => None,
            s => Some(s.parse().map_err(|_| err(n, format!("bad seed {s:?}")))?),
        };
        let (id, g) = graph_of(f[0])?;
        match f.len() {
            6 => {
                let parse = |s: &str| s.parse::<usize>().map_err(|_| err(n, format!("bad node {s:?}")));
                let (u, v) = (parse(f[3])?, parse(f[4])?);
                let e = g
                    .edge_index(u, v)
                    .ok_or_else(|| err(n, format!("graph {id} has no edge ({u}, {v})")))?;
                let score: f64 = f[5].parse().map_err(|_| err(n, format!("bad score {:?}", f[5])))?;
                scores.entry(id).or_insert_with(|| vec![None; g.edge_count()])[e] = Some(score);
            }
            5 => {
                let level: u32 = f[3].parse().map_err(|_| err(n, format!("bad sparsity {:?}", f[3])))?;
                if f[4].len() != g.edge_count() || f[4].bytes().any(|b| b != b'0' && b != b'1') {
                    return Err(err(n, format!("mask for graph {id} must be {} bits", g.edge_count())));
                }
                let kept = f[4].bytes().enumerate().filter(|&(_, b)| b == b'1').map(|(i, _)| i);
                masks.entry(id).or_default().insert(level, EdgeSubset::new(g.edge_count(), kept)?);
            }
            _ => return Err(err(n, "malformed record".into())),
        }
    }

    let mut out = BTreeMap::new();
    for (id, s) in scores {
        let s: Option<Vec<f64>> = s.into_iter().collect();
        let s = s.ok_or_else(|| Error::Integrity(format!("cache {} misses edges of graph {id}", origin.display())))?;
        let meta = ScoreMeta {
            seed,
            ..ScoreMeta::default()
        };
        out.insert(id, Attribution::Scores(EdgeScores::new(s, key.method, meta)?));
    }
    for (id, m) in masks {
        out.insert(id, Attribution::Masks(m));
    }
    Ok(AttributionSet {
        method: key.method,
        seed,
        graphs: out,
    })
}

pub fn save(path: &Path, key: &CacheKey, set: &AttributionSet, graphs: &[GraphSample]) -> Result<()> {
    crate::write_atomic(path, &to_text(key, set, graphs)?)
}

/// Reads a cache file; `Ok(None)` when it does not exist.
pub fn load(path: &Path, key: &CacheKey, graphs: &[GraphSample]) -> Result<Option<AttributionSet>> {
    match fs::read_to_string(path) {
        Ok(text) => from_text(&text, path, key, graphs).map(Some),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::Load {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }),
    }
}

/// Returns the cached set when it covers every id in `ids`, otherwise runs
/// `compute` and stores its result. The flag reports a cache hit.
pub fn load_or_compute(
    dir: &Path,
    key: &CacheKey,
    graphs: &[GraphSample],
    ids: &[usize],
    compute: impl FnOnce() -> Result<AttributionSet>,
) -> Result<(AttributionSet, bool)> {
    let path = key.path_in(dir);
    if let Some(set) = load(&path, key, graphs)? {
        if ids.iter().all(|id| set.graphs.contains_key(id)) {
            return Ok((set, true));
        }
    }
    let set = compute()?;
    save(&path, key, &set, graphs)?;
    Ok((set, false))
}
