use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use keynode_cli::cache::{file_sha256, StageRun};
use keynode_cli::config::{Overrides, RunConfig};
use keynode_cli::error::{CliError, CliResult};
use keynode_cli::logging;
use keynode_cli::plots::emit_plots;
use keynode_cli::stages::{Mode, Pipeline};
use log::LevelFilter;
use serde::Serialize;

/// Influential-node pipeline: simulate cascades, label nodes, train and
/// evaluate classifiers over centrality features.
#[derive(Debug, Parser)]
#[command(name = "keynode", version)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, short, global = true, env = "KEYNODE_CONFIG", default_value = "keynode.json")]
    config: PathBuf,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Emit logs as JSON lines on stderr.
    #[arg(long, global = true)]
    log_json: bool,

    /// More logging (-v debug, -vv trace).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Only warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override cascade runs per node and threshold.
    #[arg(long, global = true)]
    runs: Option<usize>,

    /// Override evaluation trials.
    #[arg(long, global = true)]
    trials: Option<usize>,

    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Networks {
    /// Restrict to these networks (repeatable). Default: all.
    #[arg(long = "network", short = 'n')]
    names: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every stage, reusing cached results, and write the manifest.
    Pipeline,
    /// Load or generate the graphs.
    Ingest(Networks),
    /// Print basic statistics of ingested graphs as JSON.
    Stats(Networks),
    /// Run the cascade simulations.
    Simulate(Networks),
    /// Compute centralities and the feature matrix.
    Featurize(Networks),
    /// Discretize simulation outcomes into class labels.
    Label(Networks),
    /// Fit models on every labeled network.
    Train(Networks),
    /// Within-network evaluation, or cross-network with --train/--test.
    Evaluate {
        #[command(flatten)]
        nets: Networks,
        #[arg(long, requires = "test")]
        train: Option<String>,
        #[arg(long, requires = "train")]
        test: Option<String>,
    },
    /// Cross-network generalization over the configured pairs.
    Generalize,
    /// Smart versus fixed-percentage labels with the same splits.
    CompareBins(Networks),
    /// Permutation Shapley feature importance.
    Importance,
    /// Write per-figure CSV tables from cached results.
    EmitPlots,
}

#[derive(Serialize)]
struct ManifestEntry {
    stage: String,
    scope: String,
    key: String,
    file: String,
    sha256: String,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest {
    master_seed: u64,
    runs: usize,
    trials: usize,
    artifacts: Vec<ManifestEntry>,
    plots: Vec<(String, String)>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => LevelFilter::Warn,
        (false, 0) => LevelFilter::Info,
        (false, 1) => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    logging::init(cli.log_json, level);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                log::error!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let overrides = Overrides {
        master_seed: cli.seed,
        runs: cli.runs,
        trials: cli.trials,
        output_dir: cli.output_dir.clone(),
        cache_dir: cli.cache_dir.clone(),
    };
    let cfg = RunConfig::load(&cli.config, &overrides)?;
    let mode = match cli.command {
        Command::Pipeline => Mode::Pipeline,
        _ => Mode::Single,
    };
    let p = Pipeline::new(&cfg, mode)?;
    let select = |nets: &Networks| -> CliResult<Vec<String>> {
        if nets.names.is_empty() {
            return Ok(cfg.networks.iter().map(|n| n.name.clone()).collect());
        }
        for n in &nets.names {
            if cfg.network(n).is_none() {
                return Err(CliError::Config(format!("unknown network {n:?}")));
            }
        }
        Ok(nets.names.clone())
    };

    match &cli.command {
        Command::Pipeline => {
            p.run_all()?;
            let plots = emit_plots(&p)?;
            write_manifest(&cfg, &p.runs(), &plots)?;
        }
        Command::Ingest(n) => {
            for name in select(n)? {
                p.ingest(&name, None)?;
            }
        }
        Command::Stats(n) => {
            for name in select(n)? {
                let g = p.graph(&name, "stats")?;
                let stats = keynode::graph::compute_stats(&g).map_err(|e| CliError::stage("stats", e))?;
                let line = serde_json::json!({ "network": name, "directed": g.is_directed(), "stats": stats });
                println!("{line}");
            }
        }
        Command::Simulate(n) => {
            for name in select(n)? {
                p.simulate(&name, None)?;
            }
        }
        Command::Featurize(n) => {
            for name in select(n)? {
                p.centrality(&name, None)?;
                p.featurize(&name, None)?;
            }
        }
        Command::Label(n) => {
            for name in select(n)? {
                p.label(&name, None)?;
            }
        }
        Command::Train(n) => {
            for name in select(n)? {
                p.train(&name, None)?;
            }
        }
        Command::Evaluate { nets, train, test } => match (train, test) {
            (Some(a), Some(b)) => {
                for name in [a, b] {
                    if cfg.network(name).is_none() {
                        return Err(CliError::Config(format!("unknown network {name:?}")));
                    }
                }
                p.generalize(a, b, None)?;
            }
            _ => {
                for name in select(nets)? {
                    p.evaluate(&name, None)?;
                }
            }
        },
        Command::Generalize => {
            for (a, b) in cfg.pairs() {
                p.generalize(&a, &b, None)?;
            }
        }
        Command::CompareBins(n) => {
            for name in select(n)? {
                p.compare_bins(&name, None)?;
            }
        }
        Command::Importance => {
            p.importance(None)?;
        }
        Command::EmitPlots => {
            for path in emit_plots(&p)? {
                log::info!("wrote {}", path.display());
            }
        }
    }
    for run in p.runs() {
        println!(
            "{}\t{}\t{}\t{}",
            run.index.stage,
            run.index.scope,
            if run.cache_hit { "cached" } else { "computed" },
            run.dir.display()
        );
    }
    Ok(())
}

fn write_manifest(cfg: &RunConfig, runs: &[StageRun], plots: &[PathBuf]) -> CliResult<()> {
    let fail = |e: anyhow::Error| CliError::stage("manifest", e);
    let mut artifacts = Vec::new();
    for run in runs {
        for a in &run.index.artifacts {
            artifacts.push(ManifestEntry {
                stage: run.index.stage.clone(),
                scope: run.index.scope.clone(),
                key: run.index.key.clone(),
                file: format!("{}/{}/{}/{}", run.index.stage, run.index.scope, run.index.key, a.file),
                sha256: a.sha256.clone(),
                bytes: a.bytes,
            });
        }
    }
    let mut plot_sums = Vec::new();
    for path in plots {
        let name = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        plot_sums.push((format!("plots/{name}"), file_sha256(path).map_err(fail)?));
    }
    let manifest = Manifest {
        master_seed: cfg.master_seed,
        runs: cfg.runs,
        trials: cfg.trials,
        artifacts,
        plots: plot_sums,
    };
    let out: &Path = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| fail(e.into()))?;
    let bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| fail(e.into()))?;
    std::fs::write(out.join("manifest.json"), bytes).map_err(|e| fail(e.into()))?;
    log::info!("manifest written to {}", out.join("manifest.json").display());
    Ok(())
}
