use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use harness::config::parse_list;
use harness::sweep::{mean_regret_by_horizon, sweep_csv_bytes};
use harness::{cmd_opt, cmd_run, cmd_sweep, cmd_verify, ExperimentConfig, HarnessError, Result, VerifyOptions};

/// Online 2-local prediction with log-det regularized FTRL.
#[derive(Parser)]
#[command(name = "logdet-ftrl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play an adversary and write one CSV per replicate.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Horizon.
        #[arg(long = "T")]
        horizon: Option<String>,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        replicates: Option<String>,
    },
    /// Run the randomized lemma checks; exit 1 on any violation.
    Verify {
        /// all, entropy, tv, logdet, regularizer or projection.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the checked constants (negative controls).
        #[arg(long)]
        constant: Option<f64>,
    },
    /// Best fixed labeling of a transcript file.
    Opt { transcript: PathBuf },
    /// Run a grid of horizons and seeds; one aggregate CSV row per cell.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Horizons, as `250,500,1000`.
        #[arg(long = "T")]
        horizons: String,
        /// Seeds, as `0..20` or `1,2,3`.
        #[arg(long)]
        seed: String,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Learning rate, or `auto`.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    /// random, planted or scripted.
    #[arg(long)]
    adversary: Option<String>,
    /// maxcut or gambling.
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated planted labels.
    #[arg(long)]
    planted: Option<String>,
    /// Script file for the scripted adversary.
    #[arg(long)]
    script: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Rounds between engine checkpoints (0 = none).
    #[arg(long)]
    checkpoint_every: Option<String>,
}

impl CommonArgs {
    fn load(&self, extra: &[(&str, &Option<String>)]) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
                path: path.clone(),
                source,
            })?;
            config.apply_text(&text).map_err(|e| match e {
                HarnessError::Core(source) => HarnessError::Input {
                    path: path.clone(),
                    source,
                },
                other => other,
            })?;
        }
        let flags = [
            ("n", &self.n),
            ("k", &self.k),
            ("eta", &self.eta),
            ("noise", &self.noise),
            ("adversary", &self.adversary),
            ("problem", &self.problem),
            ("planted", &self.planted),
            ("script", &self.script),
            ("out", &self.out),
            ("checkpoint_every", &self.checkpoint_every),
        ];
        for (key, value) in flags.iter().chain(extra) {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            common,
            horizon,
            seed,
            replicates,
        } => {
            let config = common.load(&[("T", &horizon), ("seed", &seed), ("replicates", &replicates)])?;
            for summary in cmd_run(&config)? {
                println!("{summary}");
                eprintln!("seed {}: {:.2?}", summary.seed, summary.wall_clock);
            }
        }
        Command::Verify {
            suite,
            trials,
            seed,
            constant,
        } => {
            let options = VerifyOptions {
                suite: suite.parse()?,
                trials,
                seed,
                constant,
            };
            let reports = cmd_verify(&options)?;
            for report in &reports {
                println!("{report}");
            }
            let failed = reports.iter().filter(|r| !r.passed()).count();
            if failed > 0 {
                return Err(HarnessError::Violations(failed));
            }
        }
        Command::Opt { transcript } => println!("{}", cmd_opt(&transcript)?),
        Command::Sweep {
            common,
            horizons,
            seed,
        } => {
            let config = common.load(&[])?;
            let horizons: Vec<usize> = parse_list("T", &horizons)?.into_iter().map(|t| t as usize).collect();
            let seeds = parse_list("seed", &seed)?;
            let rows = cmd_sweep(&config, &horizons, &seeds)?;
            let bytes = sweep_csv_bytes(&rows)?;
            if common.out.is_some() {
                harness::run::write_atomic(&config.out, &bytes)?;
            } else {
                print!("{}", String::from_utf8_lossy(&bytes));
            }
            for (t, mean) in mean_regret_by_horizon(&rows) {
                eprintln!("T {t}: mean regret {mean:.6}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
