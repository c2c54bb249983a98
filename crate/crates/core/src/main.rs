use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use graphroar::config::{RunConfig, OUT_ENV};
use graphroar::explain::Method;
use graphroar::model::ArchKind;
use graphroar::pipeline;
use graphroar::retrain::Mode;
use graphroar::Result;

#[derive(Parser)]
#[command(name = "graphroar", version, about = "Remove-and-retrain evaluation of GNN edge attributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset name, or a directory holding a TU dataset.
    #[arg(long, global = true)]
    dataset: Option<String>,
    #[arg(long, global = true)]
    arch: Option<ArchKind>,
    /// Restricts the attributors (repeatable or comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    attributor: Vec<Method>,
    /// Baseline training seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output root.
    #[arg(long, global = true, env = OUT_ENV)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured synthetic dataset in TU format.
    Generate(Common),
    /// Train the baseline model.
    Train(Common),
    /// Compute and cache attributions for train and validation graphs.
    Explain(Common),
    /// Run the RoMie/RoLie sweeps.
    Evaluate(Common),
    /// Turn a results file into curve tables, plot series and flags.
    Report {
        #[command(flatten)]
        common: Common,
        /// Results file; defaults to the run's own.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Export one attributed graph as Graphviz DOT.
    Visualize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        graph: usize,
        #[arg(long, default_value_t = 30)]
        sparsity: u32,
        #[arg(long, default_value = "romie")]
        mode: Mode,
    },
}

fn resolve(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &c.dataset {
        let dir = PathBuf::from(d);
        if dir.is_dir() {
            cfg.dataset.name = graphroar::tu::dataset_name(&dir)?;
            cfg.dataset.path = Some(dir);
        } else {
            cfg.dataset.name = d.clone();
            cfg.dataset.path = None;
        }
    }
    if let Some(a) = c.arch {
        cfg.model.arch = a;
    }
    if !c.attributor.is_empty() {
        cfg.attributors = c.attributor.clone();
    }
    if let Some(s) = c.seed {
        cfg.train.seed = s;
    }
    if let Some(w) = c.workers {
        cfg.sweep.workers = w;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(c) => {
            for p in pipeline::cmd_generate(&resolve(&c)?)? {
                println!("{}", p.display());
            }
        }
        Command::Train(c) => {
            let b = pipeline::cmd_train(&resolve(&c)?)?;
            let state = if b.trained { "trained" } else { "cached" };
            println!("{} ({state}) test accuracy {:.4}", b.checkpoint.display(), b.test_accuracy);
        }
        Command::Explain(c) => {
            for (m, hit) in pipeline::cmd_explain(&resolve(&c)?)? {
                println!("{m}: {}", if hit { "cached" } else { "computed" });
            }
        }
        Command::Evaluate(c) => {
            for curve in pipeline::cmd_evaluate(&resolve(&c)?)? {
                for mode in Mode::BOTH {
                    let points: Vec<String> = curve
                        .levels(mode)
                        .into_iter()
                        .map(|x| format!("{x}:{:.3}", curve.accuracy(mode, x).unwrap_or(f64::NAN)))
                        .collect();
                    println!("{} {mode} {}", curve.attributor, points.join(" "));
                }
            }
        }
        Command::Report { common, results } => {
            let out = pipeline::cmd_report(&resolve(&common)?, results.as_deref())?;
            if let Some(w) = &out.warning {
                eprintln!("warning: {w}");
            }
            for p in &out.files {
                println!("{}", p.display());
            }
        }
        Command::Visualize {
            common,
            graph,
            sparsity,
            mode,
        } => {
            let cfg = resolve(&common)?;
            let method = cfg.attributors.first().copied().unwrap_or(Method::GradCam);
            println!("{}", pipeline::cmd_visualize(&cfg, method, graph, sparsity, mode)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
