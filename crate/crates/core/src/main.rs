//! Thin experiment-runner CLI over the library pipelines.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wigkit::config::ExperimentConfig;
use wigkit::runner;

#[derive(Parser)]
#[command(name = "wigkit", version, about = "Phase-space diagnostics for semiclassical dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Bundled experiment name or path to a config file
    #[arg(long)]
    config: String,
    /// Output directory (default: ./out/<experiment kind>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the WIGKIT_THREADS environment variable)
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for randomized corpora (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts and manifest
    Run(RunArgs),
    /// Parse and schema-check a config without running numerics
    Validate {
        #[arg(long)]
        config: String,
    },
    /// List the bundled experiments
    List,
}

fn thread_count(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("WIGKIT_THREADS").ok().and_then(|v| v.parse().ok())
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for entry in runner::list_experiments() {
                println!("{:28} {:10} {}", entry.name, entry.kind.to_string(), entry.description);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let src = match runner::load_config_source(&config) {
                Ok(src) => src,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match ExperimentConfig::parse(&src) {
                Ok(cfg) => {
                    let diags = cfg.diagnostics();
                    if diags.is_empty() {
                        println!("ok: {} ({} experiment)", config, cfg.kind);
                        ExitCode::SUCCESS
                    } else {
                        for d in diags {
                            eprintln!("config error: {d}");
                        }
                        ExitCode::from(2)
                    }
                }
                Err(e) => {
                    eprintln!("config error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Run(args) => {
            if let Some(n) = thread_count(args.threads) {
                if let Err(e) =
                    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()
                {
                    eprintln!("warning: could not set thread count: {e}");
                }
            }
            let src = match runner::load_config_source(&args.config) {
                Ok(src) => src,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let cfg = match ExperimentConfig::parse(&src) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let diags = cfg.diagnostics();
            if !diags.is_empty() {
                for d in diags {
                    eprintln!("config error: {d}");
                }
                return ExitCode::from(2);
            }
            let out = args.out.unwrap_or_else(|| {
                cfg.output_dir
                    .clone()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("out").join(cfg.kind.to_string()))
            });
            match runner::run(&cfg, &src, &out, args.seed) {
                Ok(summary) => {
                    for check in &summary.checks {
                        println!(
                            "{}: {} (value {:.6e}, threshold {})",
                            check.name,
                            if check.pass { "PASS" } else { "FAIL" },
                            check.value,
                            check.threshold
                        );
                    }
                    println!("artifacts in {}", summary.out_dir.display());
                    if summary.all_pass() {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("error: at least one check failed");
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("runtime error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
