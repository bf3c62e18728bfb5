use clap::{Parser, Subcommand};
use extcurv_cli::config::{catalogue, BUNDLED};
use extcurv_cli::records::read_records;
use extcurv_cli::{exit, run, ExperimentConfig, Plan};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Coarse extrinsic curvature experiments.
#[derive(Parser)]
#[command(name = "extcurv", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config (a path, or the name of a bundled config).
    Run {
        config: PathBuf,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long, env = "EXTCURV_WORKERS")]
        workers: Option<usize>,
        /// Master seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config, then print the resolved levels.
    Validate { config: PathBuf },
    /// Describe the manifold catalogue and the bundled configs.
    ListManifolds,
    /// Re-validate every row of a records.csv or records.jsonl file.
    Check { records: PathBuf },
}

fn load(path: &Path) -> Result<Plan, u8> {
    ExperimentConfig::load(path).and_then(|c| c.resolve()).map_err(|e| {
        eprintln!("{e}");
        exit::CONFIG_ERROR as u8
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, workers, seed, out } => match load(&config) {
            Err(code) => code,
            Ok(mut plan) => {
                if let Some(s) = seed {
                    plan.seed = s;
                }
                if let Some(o) = out {
                    plan.out_dir = o;
                }
                let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
                match run(&plan, workers) {
                    Err(e) => {
                        eprintln!("{e}");
                        exit::RUNTIME_ERROR as u8
                    }
                    Ok(outcome) => {
                        println!("{} rows written to {}", outcome.records.len(), outcome.out_dir.display());
                        for c in &outcome.summary.criteria {
                            println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
                        }
                        if outcome.summary.pass {
                            exit::OK as u8
                        } else {
                            exit::CRITERION_FAILED as u8
                        }
                    }
                }
            }
        },
        Command::Validate { config } => match load(&config) {
            Err(code) => code,
            Ok(plan) => {
                println!("{}: {} on {}, seed {}", plan.name, methods(&plan), plan.model.label(), plan.seed);
                for l in &plan.levels {
                    println!(
                        "  level {}: δ = {:e}, σ = {:e}, ε = {:e}, κ_pred = {:+e}",
                        l.level, l.delta, l.sigma, l.epsilon, l.kappa_pred
                    );
                }
                exit::OK as u8
            }
        },
        Command::ListManifolds => {
            println!("{:<22} {:<28} intrinsic coordinates", "kind", "parameters");
            for (kind, params, coords) in catalogue() {
                println!("{kind:<22} {params:<28} {coords}");
            }
            println!("\nbundled configs: {}", BUNDLED.map(|(n, _)| n).join(", "));
            exit::OK as u8
        }
        Command::Check { records } => match read_records(&records) {
            Err(e) => {
                eprintln!("{e}");
                exit::CONFIG_ERROR as u8
            }
            Ok(rows) => {
                let mut bad = 0;
                for (i, r) in rows.iter().enumerate() {
                    let problems = r.validate();
                    if !problems.is_empty() {
                        bad += 1;
                        eprintln!("row {}: {}", i + 1, problems.join("; "));
                    }
                }
                println!("{} rows, {bad} invalid", rows.len());
                if bad == 0 {
                    exit::OK as u8
                } else {
                    exit::RUNTIME_ERROR as u8
                }
            }
        },
    };
    ExitCode::from(code)
}

fn methods(plan: &Plan) -> String {
    plan.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
}
