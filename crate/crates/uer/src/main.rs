use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uer::error::{ConfigError, RunError};
use uer::runner::{self, DEFAULT_ALPHAS};
use uer::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "uer",
    version,
    about = "Online class-incremental learning with unbiased experience replay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method over every seed.
    Run(Common),
    /// Sweep the replay mixing weight of the first mixed-replay method.
    SweepAlpha {
        #[command(flatten)]
        common: Common,
        /// Hold out 10% of each class's training data for evaluation.
        #[arg(long)]
        validate: bool,
    },
    /// Compare the eight learn/replay/test logit combinations.
    Table1(Common),
    /// Per-stage diagnostics on the first seed, saving checkpoints and buffers.
    Diag(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Run only this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mixing weight (a comma-separated list for sweep-alpha).
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Reservoir capacity for every method.
    #[arg(long)]
    buffer: Option<usize>,
}

impl Common {
    fn load(&self, sweeping: bool) -> Result<ExperimentConfig, RunError> {
        let mut cfg = uer::config::parse_config(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        if let Some(b) = self.buffer {
            cfg.set_buffer(b);
        }
        match (sweeping, self.alpha.as_slice()) {
            (true, _) | (false, []) => {}
            (false, [a]) => cfg.set_alpha(*a)?,
            (false, _) => {
                return Err(ConfigError::Invalid {
                    key: "--alpha".into(),
                    line: 0,
                    message: "takes a single value outside sweep-alpha".into(),
                }
                .into())
            }
        }
        Ok(cfg)
    }
}

fn execute(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run(c) => {
            let cfg = c.load(false)?;
            let summary = runner::run(&cfg)?;
            print!("{}", summary.render());
            let failures = summary.failures();
            if !failures.is_empty() {
                return Err(RunError::Failed(failures));
            }
        }
        Command::SweepAlpha { common, validate } => {
            let cfg = common.load(true)?;
            let alphas = if common.alpha.is_empty() {
                DEFAULT_ALPHAS.to_vec()
            } else {
                common.alpha.clone()
            };
            print!(
                "{}",
                runner::render_sweep(&runner::sweep_alpha(&cfg, &alphas, validate)?)
            );
        }
        Command::Table1(c) => {
            let cfg = c.load(false)?;
            print!("{}", runner::render_table1(&runner::table1(&cfg)?));
        }
        Command::Diag(c) => {
            let cfg = c.load(false)?;
            for report in runner::diag(&cfg)? {
                print!("{}", report.render());
                println!(
                    "checkpoint {}\nbuffer     {}",
                    report.checkpoint.display(),
                    report.buffer.display()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
