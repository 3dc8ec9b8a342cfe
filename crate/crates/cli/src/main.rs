use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lmfo::experiment::{
    emit_spiral_traces, key_values, run_compare, run_sweep, run_timing, run_train, ExperimentConfig,
    ExperimentError, SweepPlan,
};

#[derive(Debug, Parser)]
#[command(name = "lmfo", version, about = "Moth-flame neural-network training experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed (run i uses seed + i).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Runs per optimizer (per plan row for `sweep`).
    #[arg(long, global = true, value_name = "N")]
    runs: Option<usize>,
    /// Iteration budget per run.
    #[arg(long, global = true, value_name = "N")]
    iterations: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one network with the first roster optimizer.
    Train,
    /// Repeated seeded runs of every roster optimizer, with rank-sum report.
    Compare,
    /// Sixteen-experiment sensitivity sweep over layers, q and batch count.
    Sweep,
    /// Training and per-sample inference wall-clock per optimizer.
    Timing,
    /// Planar traces of the spiral kernels.
    Spirals,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Compare => "compare",
            Command::Sweep => "sweep",
            Command::Timing => "timing",
            Command::Spirals => "spirals",
        }
    }
}

fn load_config(common: &Common, command: &Command) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.protocol.base_seed = seed;
        cfg.spirals.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    match command {
        Command::Sweep => {
            if let Some(runs) = common.runs {
                cfg.sweep.runs = runs;
            }
            if let Some(iterations) = common.iterations {
                cfg.sweep.iterations = Some(iterations);
            }
        }
        _ => {
            if let Some(runs) = common.runs {
                cfg.protocol.runs = runs;
            }
            if let Some(iterations) = common.iterations {
                cfg.protocol.iterations = iterations;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_manifest(dir: &Path, command: &str, cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    let io = |path: &Path, source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let meta = key_values(&[
        ("command".into(), command.into()),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("base_seed".into(), cfg.protocol.base_seed.to_string()),
        ("runs".into(), cfg.protocol.runs.to_string()),
        ("iterations".into(), cfg.protocol.iterations.to_string()),
        ("population".into(), cfg.protocol.population.to_string()),
        (
            "roster".into(),
            cfg.roster.iter().map(|r| r.algorithm.as_str()).collect::<Vec<_>>().join(";"),
        ),
    ]);
    let meta_path = dir.join("experiment.meta");
    std::fs::write(&meta_path, meta).map_err(|e| io(&meta_path, e))?;
    // The copy lives inside the output directory, so record it as `.` to keep
    // reruns into different directories byte-identical.
    let mut echoed = cfg.clone();
    echoed.output_dir = PathBuf::from(".");
    let cfg_path = dir.join("config.toml");
    std::fs::write(&cfg_path, echoed.to_toml()).map_err(|e| io(&cfg_path, e))
}

fn run(cli: &Cli) -> Result<(), ExperimentError> {
    let cfg = load_config(&cli.common, &cli.command)?;
    let out = cfg.output_dir.clone();
    write_manifest(&out, cli.command.name(), &cfg)?;
    match cli.command {
        Command::Train => {
            let outcome = run_train(&cfg, cfg.protocol.base_seed)?;
            outcome.write(&out)?;
            println!(
                "{} seed={} train_loss={} train_rate={} test_rate={}",
                outcome.run.record.algorithm,
                outcome.run.record.seed,
                outcome.run.train_loss,
                outcome.train_rate,
                outcome.run.test_rate
            );
        }
        Command::Compare => {
            let outcome = run_compare(&cfg)?;
            outcome.write(&out)?;
            print!("{}", outcome.report.render_text());
        }
        Command::Sweep => {
            let plan = SweepPlan::from_config(&cfg.sweep);
            let table = run_sweep(&cfg, &plan)?;
            table.write(&out)?;
            print!("{}", table.to_csv());
            let best = table.best();
            println!(
                "best experiment={} n_layer={} q={} n_batch={} mse={}",
                best.experiment, best.n_layer, best.q, best.n_batch, best.loss
            );
        }
        Command::Timing => {
            let table = run_timing(&cfg)?;
            table.write(&out)?;
            print!("{}", table.to_csv());
        }
        Command::Spirals => {
            for path in emit_spiral_traces(&cfg.spirals, &out)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

/// Collapses a message onto one line.
fn one_line(message: &str) -> String {
    message.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            // --help and --version.
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            eprintln!("error kind=usage message={}", one_line(&err.to_string()));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error kind={} message={}", err.kind(), one_line(&err.to_string()));
            ExitCode::FAILURE
        }
    }
}
