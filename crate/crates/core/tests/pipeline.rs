use std::path::Path;
use std::process::Command;

use graphroar::config::{DatasetConfig, ModelConfig, RunConfig};
use graphroar::explain::Method;
use graphroar::model::{ArchKind, TrainConfig};
use graphroar::pipeline::{self, Paths};
use graphroar::report::CURVE_HEADER;
use graphroar::retrain::{Mode, SweepConfig};
use graphroar::Error;
use proptest::prelude::*;

fn arb_config() -> impl Strategy<Value = RunConfig> {
    let methods = prop::sample::subsequence(Method::ALL.to_vec(), 0..=5);
    let levels = prop::collection::vec(0u32..=100, 0..8);
    (
        (any::<bool>(), 1usize..300, 1usize..500, 1e-5f64..1.0, 0i64..i64::MAX),
        (methods, levels, 0usize..5, any::<bool>()),
        ("[A-Za-z0-9]{1,12}", 0i64..i64::MAX, 0.0f64..1.0, 1usize..400),
    )
        .prop_map(|((gin, hidden, epochs, lr, seed), (methods, levels, workers, elim), (name, dseed, ratio, gnn_epochs))| {
            let mut c = RunConfig {
                dataset: DatasetConfig {
                    name,
                    seed: dseed as u64,
                    ..Default::default()
                },
                model: ModelConfig {
                    arch: if gin { ArchKind::Gin } else { ArchKind::Gcn },
                    hidden_dim: hidden,
                },
                train: TrainConfig {
                    epochs,
                    learning_rate: lr,
                    seed: seed as u64,
                    ..Default::default()
                },
                attributors: methods,
                sweep: SweepConfig {
                    levels,
                    workers,
                    eliminate_isolated: elim,
                    ..Default::default()
                },
                ..Default::default()
            };
            c.sharp_rise.ratio = ratio;
            c.attribution.gnnexplainer.epochs = gnn_epochs;
            c.attribution.pgexplainer.temperature = (ratio * 10.0, ratio);
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(cfg in arb_config()) {
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}

fn tiny_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.out = out.to_path_buf();
    cfg.model.hidden_dim = 8;
    cfg.train.epochs = 2;
    cfg.attributors = vec![Method::GradCam, Method::Random];
    cfg.sweep.levels = vec![0, 30, 70, 100];
    cfg
}

#[test]
fn commands_are_deterministic_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let paths = Paths::new(&cfg);

    let b = pipeline::cmd_train(&cfg).unwrap();
    assert!(b.trained);
    let ckpt = std::fs::read(&b.checkpoint).unwrap();
    assert!(!pipeline::cmd_train(&cfg).unwrap().trained);

    let first = pipeline::cmd_explain(&cfg).unwrap();
    assert!(first.iter().all(|(_, hit)| !hit));
    let second = pipeline::cmd_explain(&cfg).unwrap();
    assert!(second.iter().all(|(_, hit)| *hit));

    let curves = pipeline::cmd_evaluate(&cfg).unwrap();
    assert_eq!(curves.len(), 2);
    let report = pipeline::cmd_report(&cfg, None).unwrap();
    assert!(report.warning.is_none());
    assert_eq!(report.table.cell_rows().count(), 2 * 4 * 2);
    let random_row = report
        .table
        .cell_rows()
        .find(|r| r.attributor == Some(Method::Random))
        .unwrap();
    assert_eq!(random_row.seed_accuracies.len(), 3);
    let curves_csv = std::fs::read_to_string(paths.report().join("curves.csv")).unwrap();

    // a fresh run root reproduces every artifact
    let dir2 = tempfile::tempdir().unwrap();
    let cfg2 = tiny_config(dir2.path());
    pipeline::cmd_evaluate(&cfg2).unwrap();
    pipeline::cmd_report(&cfg2, None).unwrap();
    assert_eq!(std::fs::read(Paths::new(&cfg2).checkpoint()).unwrap(), ckpt);
    assert_eq!(std::fs::read_to_string(Paths::new(&cfg2).report().join("curves.csv")).unwrap(), curves_csv);

    let dot = pipeline::cmd_visualize(&cfg, Method::GradCam, 5, 30, Mode::RoMie).unwrap();
    assert!(std::fs::read_to_string(dot).unwrap().starts_with("graph g5 {"));
    assert!(matches!(
        pipeline::cmd_visualize(&cfg, Method::GradCam, 10_000, 30, Mode::RoMie),
        Err(Error::Lookup(_))
    ));
}

#[test]
fn generate_writes_tu_files_that_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(dir.path());
    cfg.dataset.name = "BA3Motifs".into();
    let files = pipeline::cmd_generate(&cfg).unwrap();
    assert!(files.iter().any(|f| f.ends_with("BA3Motifs_meta.txt")));
    let back = graphroar::tu::load_tu_dataset(&Paths::new(&cfg).dataset_dir("BA3Motifs")).unwrap();
    let original = pipeline::raw_dataset(&cfg).unwrap();
    assert_eq!(back.graphs, original.graphs);
    assert_eq!(back.motif_edges, original.motif_edges);
}

fn cli(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_graphroar"))
        .args(args)
        .env("GRAPHROAR_OUT", out)
        .output()
        .unwrap()
}

#[test]
fn cli_report_on_empty_results_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("empty.csv");
    std::fs::write(&results, "").unwrap();
    let out = cli(&["report", "--results", results.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let table = std::fs::read_to_string(dir.path().join("report/curves.csv")).unwrap();
    assert_eq!(table, format!("{CURVE_HEADER}\n"));
}

#[test]
fn cli_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["train", "--arch", "GAT"], dir.path());
    assert!(!out.status.success());
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[sweep]\nlevels = [120]\n").unwrap();
    let out = cli(&["train", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("120"));
    let out = cli(&["train", "--dataset", "NOPE"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn cli_train_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[model]\nhidden_dim = 4\n[train]\nepochs = 1\n").unwrap();
    let out = cli(&["train", "--config", cfg.to_str().unwrap(), "--arch", "gin", "--seed", "7"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("BA2Motifs-GIN-"), "{stdout}");
    assert!(stdout.contains("(trained)"));
}
