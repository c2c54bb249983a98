//! Accuracy-vs-sparsity tables, plot series and scenario flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::explain::Method;
use crate::model::ArchKind;
use crate::retrain::{curves_from_records, interpretation_flags, CellRecord, EvalCurve, Mode, SharpRise};

pub const CURVE_HEADER: &str = "dataset,arch,eliminate_isolated,attributor,mode,sparsity,mean_accuracy,seed_accuracies";

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub dataset: String,
    pub arch: ArchKind,
    pub eliminate_isolated: bool,
    /// `None` for the baseline row.
    pub attributor: Option<Method>,
    pub mode: Option<Mode>,
    pub sparsity: Option<u32>,
    pub mean_accuracy: f64,
    pub seed_accuracies: Vec<f64>,
}

/// One row per (attributor, mode, sparsity) plus a baseline row per
/// (dataset, arch, elimination flag).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurveTable {
    pub rows: Vec<CurveRow>,
}

impl CurveTable {
    pub fn from_curves(curves: &[EvalCurve]) -> Self {
        let mut rows = Vec::new();
        let mut baselines: Vec<(String, ArchKind, bool)> = Vec::new();
        for c in curves {
            let key = (c.dataset.clone(), c.arch, c.eliminate_isolated);
            if !baselines.contains(&key) {
                baselines.push(key);
                rows.push(CurveRow {
                    dataset: c.dataset.clone(),
                    arch: c.arch,
                    eliminate_isolated: c.eliminate_isolated,
                    attributor: None,
                    mode: None,
                    sparsity: None,
                    mean_accuracy: c.baseline_accuracy,
                    seed_accuracies: Vec::new(),
                });
            }
            for mode in Mode::BOTH {
                for x in c.levels(mode) {
                    rows.push(CurveRow {
                        dataset: c.dataset.clone(),
                        arch: c.arch,
                        eliminate_isolated: c.eliminate_isolated,
                        attributor: Some(c.attributor),
                        mode: Some(mode),
                        sparsity: Some(x),
                        mean_accuracy: c.accuracy(mode, x).expect("level has cells"),
                        seed_accuracies: c.seed_accuracies(mode, x),
                    });
                }
            }
        }
        Self { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CURVE_HEADER}\n");
        for r in &self.rows {
            let seeds: Vec<String> = r.seed_accuracies.iter().map(|a| format!("{a:?}")).collect();
            writeln!(
                out,
                "{},{},{},{},{},{},{:?},{}",
                r.dataset,
                r.arch,
                r.eliminate_isolated,
                r.attributor.map_or("baseline".to_string(), |m| m.to_string()),
                r.mode.map_or("-".to_string(), |m| m.to_string()),
                r.sparsity.map_or("-".to_string(), |s| s.to_string()),
                r.mean_accuracy,
                seeds.join(";")
            )
            .unwrap();
        }
        out
    }

    /// Rows that belong to an attributor (not baselines).
    pub fn cell_rows(&self) -> impl Iterator<Item = &CurveRow> {
        self.rows.iter().filter(|r| r.attributor.is_some())
    }
}

/// `x,y` series for one curve, sparsity against mean accuracy.
pub fn plot_series(curve: &EvalCurve, mode: Mode) -> String {
    let mut out = String::from("sparsity,accuracy\n");
    for x in curve.levels(mode) {
        writeln!(out, "{x},{:?}", curve.accuracy(mode, x).expect("level has cells")).unwrap();
    }
    out
}

pub const FLAGS_HEADER: &str = "dataset,arch,eliminate_isolated,attributor,romie_sharp,rolie_sharp,scenario";

pub fn flags_csv(curves: &[EvalCurve], thresholds: &SharpRise) -> String {
    let mut out = format!("{FLAGS_HEADER}\n");
    for c in curves {
        let f = interpretation_flags(c, thresholds);
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.dataset,
            c.arch,
            c.eliminate_isolated,
            c.attributor,
            f.romie_sharp,
            f.rolie_sharp,
            f.scenario.label()
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub table: CurveTable,
    pub files: Vec<PathBuf>,
    /// Set when there was nothing to report.
    pub warning: Option<String>,
}

/// Writes `curves.csv`, `flags.csv` and one series file per curve and mode
/// into `dir`.
pub fn write_report(records: &[CellRecord], thresholds: &SharpRise, dir: &Path) -> Result<ReportOutput> {
    let curves = curves_from_records(records);
    let table = CurveTable::from_curves(&curves);
    let mut files = Vec::new();
    let mut put = |name: String, body: &str| -> Result<()> {
        let path = dir.join(name);
        crate::write_atomic(&path, body)?;
        files.push(path);
        Ok(())
    };
    put("curves.csv".into(), &table.to_csv())?;
    put("flags.csv".into(), &flags_csv(&curves, thresholds))?;
    for c in &curves {
        for mode in Mode::BOTH {
            if c.levels(mode).is_empty() {
                continue;
            }
            let elim = if c.eliminate_isolated { "" } else { "-keep-isolated" };
            let name = format!("series/{}-{}-{}-{}{elim}.csv", c.dataset, c.arch, c.attributor, mode);
            put(name, &plot_series(c, mode))?;
        }
    }
    let warning = records.is_empty().then(|| "results file holds no cells; report is empty".to_string());
    Ok(ReportOutput { table, files, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrain::RunSpec;

    fn rec(attributor: Method, mode: Mode, sparsity: u32, seed: u64, accuracy: f64) -> CellRecord {
        CellRecord {
            spec: RunSpec {
                dataset: "BA2Motifs".into(),
                arch: ArchKind::Gcn,
                attributor,
                mode,
                sparsity,
                seed,
                eliminate_isolated: true,
            },
            accuracy,
            baseline_accuracy: 0.9,
            timestamp: 0,
        }
    }

    #[test]
    fn single_cell_table() {
        let t = CurveTable::from_curves(&curves_from_records(&[rec(Method::GradCam, Mode::RoMie, 30, 1, 0.75)]));
        let cells: Vec<_> = t.cell_rows().collect();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].mean_accuracy, 0.75);
        assert!(t.to_csv().contains("BA2Motifs,GCN,true,gradcam,RoMie,30,0.75,0.75\n"));
        assert!(t.to_csv().contains("BA2Motifs,GCN,true,baseline,-,-,0.9,\n"));
    }

    #[test]
    fn random_rows_average_seeds() {
        let recs: Vec<_> = [(1, 0.5), (2, 0.6), (3, 0.7)]
            .iter()
            .map(|&(s, a)| rec(Method::Random, Mode::RoLie, 10, s, a))
            .collect();
        let t = CurveTable::from_curves(&curves_from_records(&recs));
        let row = t.cell_rows().next().unwrap();
        assert!((row.mean_accuracy - 0.6).abs() < 1e-12);
        assert_eq!(row.seed_accuracies, vec![0.5, 0.6, 0.7]);
    }

    #[test]
    fn empty_results_warn() {
        let dir = tempfile::tempdir().unwrap();
        let out = write_report(&[], &SharpRise::default(), dir.path()).unwrap();
        assert!(out.warning.is_some());
        assert_eq!(out.table.cell_rows().count(), 0);
        assert_eq!(std::fs::read_to_string(dir.path().join("curves.csv")).unwrap(), format!("{CURVE_HEADER}\n"));
    }

    #[test]
    fn series_lists_levels_in_order() {
        let recs = [
            rec(Method::GradCam, Mode::RoMie, 50, 1, 0.8),
            rec(Method::GradCam, Mode::RoMie, 10, 1, 0.6),
        ];
        let c = &curves_from_records(&recs)[0];
        assert_eq!(plot_series(c, Mode::RoMie), "sparsity,accuracy\n10,0.6\n50,0.8\n");
    }
}
