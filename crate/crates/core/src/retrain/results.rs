use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Mode, RunSpec};
use crate::error::{Error, Result};

pub const RESULTS_HEADER: &str =
    "dataset,arch,attributor,mode,sparsity,seed,accuracy,baseline_accuracy,eliminate_isolated,timestamp";

/// One line of a results file.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub spec: RunSpec,
    pub accuracy: f64,
    pub baseline_accuracy: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl CellRecord {
    fn to_line(&self) -> String {
        let s = &self.spec;
        format!(
            "{},{},{},{},{},{},{:?},{:?},{},{}",
            s.dataset,
            s.arch,
            s.attributor,
            s.mode,
            s.sparsity,
            s.seed,
            self.accuracy,
            self.baseline_accuracy,
            s.eliminate_isolated,
            self.timestamp
        )
    }

    fn parse(line: &str, n: usize, origin: &Path) -> Result<Self> {
        let err = |reason: String| Error::Parse {
            path: origin.to_path_buf(),
            line: n,
            reason,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(err(format!("expected 10 fields, found {}", f.len())));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| err(format!("bad number {:?}", f[i])));
        let int = |i: usize| f[i].parse::<u64>().map_err(|_| err(format!("bad integer {:?}", f[i])));
        Ok(Self {
            spec: RunSpec {
                dataset: f[0].to_string(),
                arch: f[1].parse().map_err(|e: Error| err(e.to_string()))?,
                attributor: f[2].parse().map_err(|e: Error| err(e.to_string()))?,
                mode: f[3].parse().map_err(|e: Error| err(e.to_string()))?,
                sparsity: u32::try_from(int(4)?).map_err(|_| err("sparsity out of range".into()))?,
                seed: int(5)?,
                eliminate_isolated: f[8].parse().map_err(|_| err(format!("bad flag {:?}", f[8])))?,
            },
            accuracy: num(6)?,
            baseline_accuracy: num(7)?,
            timestamp: int(9)?,
        })
    }
}

pub fn write_results(records: &[CellRecord]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in records {
        writeln!(out, "{}", r.to_line()).unwrap();
    }
    out
}

pub fn read_results(text: &str, origin: &Path) -> Result<Vec<CellRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, h)) if h == RESULTS_HEADER => {}
        Some(_) => {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: 1,
                reason: "missing results header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| CellRecord::parse(l, i + 1, origin))
        .collect()
}

/// A results file held in memory; every insert rewrites it atomically.
#[derive(Debug)]
pub struct ResultsFile {
    pub path: PathBuf,
    pub records: Vec<CellRecord>,
}

impl ResultsFile {
    /// Opens `path`, starting empty if it does not exist yet.
    pub fn open(path: &Path) -> Result<Self> {
        let records = match fs::read_to_string(path) {
            Ok(text) => read_results(&text, path)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => {
                return Err(Error::Load {
                    path: path.to_path_buf(),
                    reason: e.to_string(),
                })
            }
        };
        Ok(Self {
            path: path.to_path_buf(),
            records,
        })
    }

    pub fn get(&self, spec: &RunSpec) -> Option<&CellRecord> {
        self.records.iter().find(|r| &r.spec == spec)
    }

    /// Adds or replaces the record for `record.spec` and persists the file.
    pub fn insert(&mut self, record: CellRecord) -> Result<()> {
        if record.spec.dataset.contains(',') {
            return Err(Error::Parameter(format!("dataset name {:?} contains a comma", record.spec.dataset)));
        }
        match self.records.iter_mut().find(|r| r.spec == record.spec) {
            Some(slot) => *slot = record,
            None => self.records.push(record),
        }
        crate::write_atomic(&self.path, &write_results(&self.records))
    }

    pub fn for_mode(&self, mode: Mode) -> impl Iterator<Item = &CellRecord> {
        self.records.iter().filter(move |r| r.spec.mode == mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::Method;
    use crate::model::ArchKind;

    fn record(sparsity: u32, accuracy: f64) -> CellRecord {
        CellRecord {
            spec: RunSpec {
                dataset: "BA2Motifs".into(),
                arch: ArchKind::Gcn,
                attributor: Method::GnnExplainer,
                mode: Mode::RoLie,
                sparsity,
                seed: 17,
                eliminate_isolated: true,
            },
            accuracy,
            baseline_accuracy: 0.93,
            timestamp: 1_700_000_000,
        }
    }

    #[test]
    fn round_trip() {
        let recs = vec![record(10, 0.1 + 0.2), record(90, 1.0)];
        let text = write_results(&recs);
        assert!(text.starts_with(RESULTS_HEADER));
        assert!(text.contains("BA2Motifs,GCN,gnnexplainer,RoLie,10,17,0.30000000000000004,0.93,true,1700000000"));
        assert_eq!(read_results(&text, Path::new("r")).unwrap(), recs);
    }

    #[test]
    fn rejects_bad_lines() {
        let text = format!("{RESULTS_HEADER}\nBA2Motifs,GCN,gnnexplainer,RoLie,10\n");
        assert!(matches!(read_results(&text, Path::new("r")), Err(Error::Parse { line: 2, .. })));
        assert!(read_results("a,b\n", Path::new("r")).is_err());
        assert!(read_results("", Path::new("r")).unwrap().is_empty());
    }

    #[test]
    fn insert_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let mut f = ResultsFile::open(&path).unwrap();
        f.insert(record(10, 0.5)).unwrap();
        f.insert(record(10, 0.5)).unwrap();
        f.insert(record(30, 0.6)).unwrap();
        let again = ResultsFile::open(&path).unwrap();
        assert_eq!(again.records.len(), 2);
        assert_eq!(again.get(&record(30, 0.0).spec).unwrap().accuracy, 0.6);
    }
}
