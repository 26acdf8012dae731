use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use randwalk::cocycles::CocycleKind;
use randwalk::martcouple::Mode;
use randwalk::{Error, Result};
use randwalk_cli::{exit_code, fit_rate, parse_grid, run_experiment, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "randwalk", version, about = "Random walks on linear groups: limit theorem experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write cocycle values along sample walks
    Simulate(Common),
    /// Lyapunov vector from replicate walks
    EstimateLyapunov(Common),
    /// Asymptotic covariance of the cocycle
    EstimateSigma(Common),
    /// W1 distance to the Gaussian limit across the n grid
    VerifyCltRate(Common),
    /// Block coupling of a martingale with Gaussian partial sums
    VerifyAsip(Common),
    /// Contraction index and proximality decay
    CheckContraction(Common),
    /// Occupation of the det-sign fibers
    CheckFiber(Common),
    /// Maximal tail against the calibrated Fuk-Nagaev bound
    CheckFukNagaev(Common),
    /// Cocycle identity residuals on products of atoms
    CheckCocycle(Common),
    /// Log-log slope of one CSV column against another
    FitRate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "n")]
        x: String,
        #[arg(long, default_value = "distance")]
        y: String,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config with the same field names as the flags; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Martingale JSON file, or `rademacher` / `two_regime`
    #[arg(long)]
    martingale: Option<String>,
    #[arg(long)]
    cocycle: Option<CocycleKind>,
    /// Comma-separated grid; `2^k` is accepted
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn into_config(self, experiment: Experiment) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let mut c = ExperimentConfig::load(path)?;
                if c.experiment != experiment {
                    return Err(Error::Config {
                        field: "experiment".into(),
                        message: format!("config is for `{}`, subcommand runs `{experiment}`", c.experiment),
                    });
                }
                c.experiment = experiment;
                c
            }
            None => ExperimentConfig::new(experiment),
        };
        if let Some(v) = self.measure {
            c.measure = Some(v);
        }
        if let Some(v) = self.martingale {
            c.martingale = Some(v);
        }
        if let Some(v) = self.cocycle {
            c.cocycle = v;
        }
        if let Some(v) = self.n {
            c.n = parse_grid(&v)?;
        }
        if let Some(v) = self.replicates {
            c.replicates = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.p {
            c.p = v;
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = self.burnin {
            c.burnin = v;
        }
        if let Some(v) = self.out {
            c.out = v;
        }
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (experiment, common) = match cli.command {
        Command::FitRate { input, x, y } => {
            let fit = fit_rate(&input, &x, &y)?;
            println!("{}", serde_json::to_string_pretty(&fit).map_err(|e| Error::Io(e.to_string()))?);
            return Ok(());
        }
        Command::Simulate(c) => (Experiment::Simulate, c),
        Command::EstimateLyapunov(c) => (Experiment::Lyapunov, c),
        Command::EstimateSigma(c) => (Experiment::Sigma, c),
        Command::VerifyCltRate(c) => (Experiment::CltRate, c),
        Command::VerifyAsip(c) => (Experiment::Asip, c),
        Command::CheckContraction(c) => (Experiment::Contraction, c),
        Command::CheckFiber(c) => (Experiment::Fiber, c),
        Command::CheckFukNagaev(c) => (Experiment::FukNagaev, c),
        Command::CheckCocycle(c) => (Experiment::CocycleCheck, c),
    };
    let config = common.into_config(experiment)?;
    let out = run_experiment(&config)?;
    for f in &out.files {
        println!("{}", f.display());
    }
    println!("{}", serde_json::to_string(&out.summary).map_err(|e| Error::Io(e.to_string()))?);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
