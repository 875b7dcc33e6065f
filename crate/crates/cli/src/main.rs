use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fcore::config::{ExperimentConfig, ProviderKind};
use fcore::dataset::{add_test_instances, build_dataset, save_dataset, DatasetRequest};
use fcore::llm::{ChatProvider, LiveConfig, LiveProvider, RecordingProvider, ReplayProvider};
use fcore::orchestrator::{output_dir, prepare_datasets, run_experiment, write_outputs};
use fcore::problem::{Registry, SizeDescriptor, Solution, VerdictKind};
use fcore::report::ExperimentReport;

#[derive(Parser)]
#[command(name = "fcore", version, about = "Combinatorial problem suite and solver-program experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a train/test dataset.
    Gen {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        train: usize,
        #[arg(long)]
        test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// e.g. `grid_n=4`; defaults to the problem's desk-scale size.
        #[arg(long)]
        train_size: Option<SizeDescriptor>,
        /// Repeat for several test sizes.
        #[arg(long)]
        test_size: Vec<SizeDescriptor>,
    },
    /// Check a candidate output. Exits 0 iff it is correct.
    Verify {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
    },
    /// Print one solution from the reference solver.
    Solve {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        input: PathBuf,
    },
    /// Run an experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a finished experiment's report.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
    },
    /// Run an experiment against a live endpoint, recording a cassette.
    Record {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cassette: PathBuf,
    },
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn live_provider(cfg: &ExperimentConfig) -> Res<LiveProvider> {
    let ProviderKind::Live { base_url, api_key_env, requests_per_minute } = &cfg.provider else {
        return Err("the config does not set `provider = live`".into());
    };
    let api_key = std::env::var(api_key_env).map_err(|_| format!("environment variable {api_key_env} is not set"))?;
    Ok(LiveProvider::new(LiveConfig {
        base_url: base_url.clone(),
        api_key: Some(api_key),
        requests_per_minute: *requests_per_minute,
        ..LiveConfig::default()
    })?)
}

fn experiment(cfg: &ExperimentConfig, provider: &dyn ChatProvider) -> Res<PathBuf> {
    let registry = Registry::builtin();
    let datasets = prepare_datasets(cfg, &registry)?;
    let output = run_experiment(cfg, &registry, &datasets, provider)?;
    let dir = output_dir(cfg)?;
    write_outputs(cfg, &output, &dir)?;
    Ok(dir)
}

/// Exit status on success; errors map to 1.
fn dispatch(command: Command) -> Res<ExitCode> {
    let registry = Registry::builtin();
    match command {
        Command::Gen { problem, train, test, seed, out, train_size, test_size } => {
            let (train_default, test_default) = registry.get(&problem)?.adapter.default_sizes();
            let test_sizes = if test_size.is_empty() { vec![test_default] } else { test_size };
            let mut dataset = build_dataset(
                &registry,
                &DatasetRequest {
                    problem_id: problem,
                    train_count: train,
                    test_count: test,
                    train_size: train_size.unwrap_or(train_default),
                    test_size: test_sizes[0].clone(),
                    seed,
                },
            )?;
            for size in &test_sizes[1..] {
                add_test_instances(&registry, &mut dataset, size, test)?;
            }
            save_dataset(&dataset, &out)?;
            println!(
                "wrote {} train and {} test instances to {}",
                dataset.train.len(),
                dataset.test.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { problem, input, candidate } => {
            let adapter = &registry.get(&problem)?.adapter;
            let instance = adapter.instance_from_text(&read(&input)?)?;
            let verdict = adapter.verify(&instance, &read(&candidate)?);
            match verdict.kind {
                VerdictKind::Correct => {
                    println!("CORRECT");
                    Ok(ExitCode::SUCCESS)
                }
                VerdictKind::Incorrect => {
                    println!("INCORRECT: {}", verdict.reason);
                    Ok(ExitCode::from(1))
                }
                VerdictKind::Malformed => {
                    println!("MALFORMED: {}", verdict.reason);
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Solve { problem, input } => {
            let adapter = &registry.get(&problem)?.adapter;
            let instance = adapter.instance_from_text(&read(&input)?)?;
            match adapter.solve(&instance)? {
                Solution::Found(text) => {
                    print!("{text}");
                    Ok(ExitCode::SUCCESS)
                }
                Solution::Infeasible => {
                    println!("INFEASIBLE");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = match &cfg.provider {
                ProviderKind::Replay(path) => experiment(&cfg, &ReplayProvider::open(path)?)?,
                ProviderKind::Live { .. } => experiment(&cfg, &live_provider(&cfg)?)?,
            };
            println!("{}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { dir, format } => {
            let report = ExperimentReport::from_json(&read(&dir.join("report.json"))?)?;
            let path = report.emit(&format, &dir)?;
            print!("{}", read(&path)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Record { config, cassette } => {
            let cfg = ExperimentConfig::load(&config)?;
            let provider = RecordingProvider::to_file(live_provider(&cfg)?, &cassette)?;
            let dir = experiment(&cfg, &provider)?;
            println!("{}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
