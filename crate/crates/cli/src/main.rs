use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vicscore::config::{Method, PipelineConfig, SynthSpecFile};
use vicscore::pipeline;
use vicscore::{CliError, CliResult};
use vicscore_core::GeneratorSpec;

#[derive(Parser)]
#[command(name = "vicscore", version, about = "Ensemble variable importance and integer risk scores")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank candidate variables by ensemble importance or random forest.
    Rank {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        force: bool,
    },
    /// Build a scoring table from a previous ranking.
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "final-m")]
        final_m: Option<usize>,
        #[arg(long)]
        force: bool,
    },
    /// Apply a scoring table to a data file.
    Score {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Generate a synthetic cohort with known signal variables.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        force: bool,
    },
}

fn load_config(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> CliResult<PipelineConfig> {
    let mut cfg = PipelineConfig::read(path)?;
    if let Some(o) = out {
        cfg.out = o;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Rank { config, out, seed, method, force } => {
            let mut cfg = load_config(&config, out, seed)?;
            if let Some(m) = method {
                cfg.method = m;
            }
            let summary = pipeline::cmd_rank(&cfg, force)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            if !summary.dropped.is_empty() {
                eprintln!(
                    "{} variable(s) excluded as non-significant: {}",
                    summary.dropped.len(),
                    summary.dropped.join(", ")
                );
            }
            println!("ranking written to {}", pipeline::rank_dir(&cfg).display());
            for (k, v) in summary.ranking.iter().enumerate() {
                println!("{:>3}  {v}", k + 1);
            }
        }
        Command::Build { config, out, seed, final_m, force } => {
            let cfg = load_config(&config, out, seed)?;
            let summary = pipeline::cmd_build(&cfg, final_m, force)?;
            println!("suggested m = {}, final m = {}", summary.suggested_m, summary.final_m);
            print!("{}", summary.table);
            for e in &summary.evaluation {
                println!(
                    "{:<14} AUC {:.4} [{:.4}, {:.4}]",
                    e.model, e.auc.auc, e.auc.ci_low, e.auc.ci_high
                );
            }
        }
        Command::Score { table, data, schema, out, force } => {
            let bytes = pipeline::cmd_score(&table, &data, schema.as_deref(), out.as_deref(), force)?;
            if out.is_none() {
                std::io::stdout()
                    .write_all(&bytes)
                    .map_err(|e| CliError::usage(format!("cannot write output: {e}")))?;
            }
        }
        Command::Synth { config, out, seed, force } => {
            let mut spec = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
                    SynthSpecFile::parse(&text)?.to_spec()?
                }
                None => GeneratorSpec::acceptance_default(0),
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            for w in pipeline::cmd_synth(&spec, &out, force)? {
                eprintln!("warning: {w}");
            }
            println!("synthetic cohort written to {}", out.display());
        }
    }
    Ok(())
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
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
