use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sensegraph::config::{Overrides, PipelineConfig, StrategySelection};
use sensegraph::export::ExportFormat;
use sensegraph::pipeline::{Command, Pipeline, PipelineError};
use sensegraph::synth::{generate, Scenario};

const USAGE_EXIT: u8 = 2;

#[derive(Parser)]
#[command(name = "sensegraph", version, about = "Word-sense graphs and sense lineages across time slices")]
struct Cli {
    /// Pipeline config (TOML). For `synth`, a scenario file instead.
    #[arg(long, global = true, env = "SENSEGRAPH_CONFIG")]
    config: Option<PathBuf>,
    /// Comma-separated targets replacing the configured list.
    #[arg(long, global = true, env = "SENSEGRAPH_TARGETS", value_delimiter = ',')]
    targets: Option<Vec<String>>,
    /// previous, history or both.
    #[arg(long, global = true, env = "SENSEGRAPH_STRATEGY")]
    strategy: Option<StrategySelection>,
    #[arg(long, global = true, env = "SENSEGRAPH_OUT")]
    out: Option<PathBuf>,
    /// json, graphml, dot or csv.
    #[arg(long, global = true, env = "SENSEGRAPH_FORMAT")]
    format: Option<ExportFormat>,
    #[arg(long, global = true, env = "SENSEGRAPH_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check all input files and report every problem found.
    Validate,
    /// Build one graph per target and slice.
    Build,
    /// Extract sense communities from built graphs.
    Cluster,
    /// Align communities into lineages and refine them.
    Align,
    /// Compute lineage distributions per slice.
    Distribute,
    /// Graph size series and relative frequencies.
    Timeseries,
    /// Write lineage-colored cluster views.
    Export,
    /// Write a synthetic corpus and a matching pipeline config.
    Synth,
    /// Run every stage from build to export.
    All,
}

fn run_synth(cli: &Cli) -> Result<(), String> {
    let mut scenario = match &cli.config {
        Some(path) => Scenario::load(path).map_err(|e| e.to_string())?,
        None => Scenario::replacement(),
    };
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    let corpus = generate(&scenario).map_err(|e| e.to_string())?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("synthetic"));
    let written = corpus.write(&dir).map_err(|e| e.to_string())?;
    println!("wrote {} file(s) to {}", written.len(), dir.display());
    Ok(())
}

fn report(err: &PipelineError) {
    eprintln!("error: {err}");
    if let PipelineError::InvalidInputs(errors) = err {
        for e in errors {
            eprintln!("  {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE_EXIT) } else { ExitCode::SUCCESS };
        }
    };
    let command = match cli.command {
        Cmd::Synth => {
            return match run_synth(&cli) {
                Ok(()) => ExitCode::SUCCESS,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    ExitCode::from(3)
                }
            };
        }
        Cmd::Validate => Command::Validate,
        Cmd::Build => Command::Build,
        Cmd::Cluster => Command::Cluster,
        Cmd::Align => Command::Align,
        Cmd::Distribute => Command::Distribute,
        Cmd::Timeseries => Command::Timeseries,
        Cmd::Export => Command::Export,
        Cmd::All => Command::All,
    };
    let Some(config_path) = cli.config.clone() else {
        eprintln!("error: --config is required for {}", command.name());
        return ExitCode::from(USAGE_EXIT);
    };
    let overrides = Overrides {
        targets: cli.targets.clone(),
        strategy: cli.strategy,
        out_dir: cli.out.clone(),
        format: cli.format,
        seed: cli.seed,
    };
    let result = PipelineConfig::load(&config_path, &overrides)
        .map_err(PipelineError::from)
        .and_then(|config| Pipeline::new(config).run(command));
    match result {
        Ok(summary) => {
            for line in summary.lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            report(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
