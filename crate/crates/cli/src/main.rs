//! Command-line front end for sparse-array single-snapshot DOA estimation.
//!
//! Exit codes: 0 on success, 2 on user or configuration errors, 3 on
//! numeric failures during estimation.

use clap::{Args, Parser, Subcommand};
use sparsedoa::identifiability::FalsificationConfig;
use sparsedoa_cli::commands::{
    cmd_check, cmd_decompose, cmd_music, cmd_reproduce_fig2, parse_positions,
};
use sparsedoa_cli::config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sparsedoa",
    about = "Sparse-array single-snapshot DOA: sum-set decompositions, spatial smoothing, MUSIC, identifiability checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate and rank sum-set decompositions of an array
    Decompose(DecomposeArgs),
    /// Check the rank conditions for a basic subarray and/or shift set
    Check(CheckArgs),
    /// Run MUSIC on a simulated scene described by a JSON config
    Music(MusicArgs),
    /// Reproduce the bundled two-scene comparison across the s1/s2/s3 presets
    ReproduceFig2(ReproduceArgs),
}

#[derive(Args)]
struct DecomposeArgs {
    /// Array positions, e.g. 0,1,3,4,5,6,7,8
    #[arg(long)]
    array: String,
    /// Basic subarray size N_s
    #[arg(long)]
    ns: usize,
    /// Shift count L
    #[arg(long)]
    l: usize,
    /// Attach identifiability verdicts for this source count
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    max_results: usize,
    /// Search node budget
    #[arg(long, default_value_t = sparsedoa::decompose::DEFAULT_NODE_BUDGET)]
    budget: usize,
    /// Write the ranked list as JSON to this path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Basic subarray positions for condition (a)
    #[arg(long)]
    sb: Option<String>,
    /// Shift-set positions for condition (b)
    #[arg(long)]
    sc: Option<String>,
    /// Source count K
    #[arg(long)]
    k: usize,
    /// Falsification grid points per dimension (default sized to K)
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long, default_value_t = 40)]
    refinement_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    rank_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MusicArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
    /// Write the pseudospectrum CSV here
    #[arg(long)]
    out_spectrum: Option<PathBuf>,
    /// Write the peaks JSON here (also printed to stdout)
    #[arg(long)]
    out_peaks: Option<PathBuf>,
    /// Debug dump of the smoothed matrix as CSV
    #[arg(long)]
    dump_smoothed: Option<PathBuf>,
    /// Debug dump of the snapshot as JSON [re, im] pairs
    #[arg(long)]
    dump_snapshot: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Output directory for the six spectra and summary.json
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = sparsedoa_cli::commands::DEFAULT_FIG2_SEED)]
    seed: u64,
}

enum Failure {
    /// User or configuration problem: exit 2.
    Usage(anyhow::Error),
    /// Numeric failure during estimation: exit 3.
    Numeric(anyhow::Error),
}

fn run() -> Result<(), Failure> {
    let cli = Cli::parse();
    match cli.command {
        Command::Decompose(args) => {
            let array = parse_positions(&args.array).map_err(Failure::Usage)?;
            let table = cmd_decompose(
                &array,
                args.ns,
                args.l,
                args.k,
                args.max_results,
                args.budget,
                args.out.as_deref(),
            )
            .map_err(Failure::Usage)?;
            print!("{table}");
            Ok(())
        }
        Command::Check(args) => {
            let s_b = args
                .sb
                .as_deref()
                .map(parse_positions)
                .transpose()
                .map_err(Failure::Usage)?;
            let s_c = args
                .sc
                .as_deref()
                .map(parse_positions)
                .transpose()
                .map_err(Failure::Usage)?;
            let cfg = FalsificationConfig {
                grid_points: args
                    .grid_points
                    .unwrap_or(FalsificationConfig::for_tuple_size(args.k).grid_points),
                refinement_iters: args.refinement_iters,
                rank_tol: args.rank_tol,
                seed: args.seed,
            };
            let report =
                cmd_check(s_b.as_ref(), s_c.as_ref(), args.k, cfg).map_err(Failure::Usage)?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            Ok(())
        }
        Command::Music(args) => {
            let text = std::fs::read_to_string(&args.config)
                .map_err(|e| Failure::Usage(anyhow::anyhow!("reading config: {e}")))?;
            let config: ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(anyhow::anyhow!("parsing config: {e}")))?;
            // distinguish config problems (exit 2) from numeric ones (exit 3)
            config.resolve().map_err(Failure::Usage)?;
            let peaks = cmd_music(
                &config,
                args.out_spectrum.as_deref(),
                args.dump_smoothed.as_deref(),
                args.dump_snapshot.as_deref(),
            )
            .map_err(Failure::Numeric)?;
            let text = serde_json::to_string_pretty(&peaks).unwrap();
            if let Some(path) = &args.out_peaks {
                std::fs::write(path, &text)
                    .map_err(|e| Failure::Usage(anyhow::anyhow!("writing peaks: {e}")))?;
            }
            println!("{text}");
            Ok(())
        }
        Command::ReproduceFig2(args) => {
            let summary = cmd_reproduce_fig2(&args.out_dir, args.seed).map_err(Failure::Numeric)?;
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
