use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ealign::experiment::{generate_dataset_files, report_from_dirs, run_experiment, ExperimentSpec};
use ealign::kg::{self, KnowledgeGraphPair, SyntheticParams};
use ealign::metrics::{avc_ranking, betweenness_ranking, degree_ranking};
use ealign::Error;

/// Active-learning simulation for entity alignment between knowledge graphs.
#[derive(Parser)]
#[command(name = "ealign", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment sweep from a TOML spec file.
    Run {
        /// Experiment spec (TOML).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for run artifacts and the aggregate table.
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate the aggregate table from existing run directories.
    Report {
        /// Run directories (each containing config.toml and metrics.csv).
        #[arg(required = false)]
        runs: Vec<PathBuf>,
        /// Output directory for the regenerated report.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Generate a synthetic dataset as TSV files.
    GenData {
        #[arg(long, default_value_t = 300)]
        n_core: usize,
        #[arg(long, default_value_t = 60)]
        n_exclusive_left: usize,
        #[arg(long, default_value_t = 60)]
        n_exclusive_right: usize,
        #[arg(long, default_value_t = 4)]
        n_relations: usize,
        /// Mean degree of the core graph.
        #[arg(long, default_value_t = 4.0)]
        edge_factor: f64,
        /// Per-side probability of dropping each core triple.
        #[arg(long, default_value_t = 0.1)]
        perturbation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a static node ranking (degree, betweenness or avc) as CSV.
    Rankings {
        /// Left graph triples TSV.
        #[arg(long)]
        left: PathBuf,
        /// Right graph triples TSV.
        #[arg(long)]
        right: PathBuf,
        /// Which ranking to export: deg, betw or avc.
        #[arg(long)]
        metric: String,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::Parse { .. }
        | Error::UnknownEntity { .. } => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { spec, out } => {
            let spec = ExperimentSpec::from_file(&spec)?;
            let rows = run_experiment(&spec, &out)?;
            for r in &rows {
                let sig = match r.significant_vs_random {
                    Some(true) => " *",
                    _ => "",
                };
                println!(
                    "{:<10} mean AUC {:.4} ± {:.4}{}",
                    r.heuristic, r.mean_auc, r.std_auc, sig
                );
            }
            println!("artifacts written to {}", out.display());
            Ok(())
        }
        Command::Report { runs, out } => {
            if runs.is_empty() {
                return Err(Error::InvalidArgument(
                    "usage: ealign report <run-dir>... [--out DIR]".into(),
                ));
            }
            let rows = report_from_dirs(&runs, &out)?;
            for r in &rows {
                println!(
                    "{:<10} mean AUC {:.4} ± {:.4}",
                    r.heuristic, r.mean_auc, r.std_auc
                );
            }
            Ok(())
        }
        Command::GenData {
            n_core,
            n_exclusive_left,
            n_exclusive_right,
            n_relations,
            edge_factor,
            perturbation,
            seed,
            out,
        } => {
            let params = SyntheticParams {
                n_core,
                n_exclusive_left,
                n_exclusive_right,
                n_relations,
                edge_factor,
                perturbation,
                seed,
            };
            generate_dataset_files(&params, &out)?;
            println!("dataset written to {}", out.display());
            Ok(())
        }
        Command::Rankings {
            left,
            right,
            metric,
            out,
        } => {
            let (left, _) = kg::load_graph(&left)?;
            let (right, _) = kg::load_graph(&right)?;
            let pair = KnowledgeGraphPair { left, right };
            let ranking = match metric.as_str() {
                "deg" => degree_ranking(&pair),
                "betw" => betweenness_ranking(&pair),
                "avc" => avc_ranking(&pair),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown metric {other:?} (expected deg|betw|avc)"
                    )))
                }
            };
            match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    ranking
                        .write_csv(&mut buf)
                        .map_err(|e| Error::io(path.display().to_string(), e))?;
                    std::fs::write(&path, buf)
                        .map_err(|e| Error::io(path.display().to_string(), e))?;
                }
                None => {
                    let stdout = std::io::stdout();
                    ranking
                        .write_csv(stdout.lock())
                        .map_err(|e| Error::io("stdout".to_string(), e))?;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // EALIGN_WORKERS caps the parallel cell count; all randomness stays
    // seed-driven regardless.
    if let Ok(workers) = std::env::var("EALIGN_WORKERS") {
        if let Ok(n) = workers.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
