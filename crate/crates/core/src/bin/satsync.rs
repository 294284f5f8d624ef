use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use satsync::cli::{self, SweepSpec};
use satsync::scenario::Overrides;

#[derive(Parser)]
#[command(name = "satsync", version, about = "Scale-free synchronization under input saturation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Settings {
    /// Integration step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated time in seconds.
    #[arg(long)]
    horizon: Option<f64>,
    /// Gain scaling parameter.
    #[arg(long)]
    rho: Option<f64>,
    /// Seed for initial conditions.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep every k-th integration step.
    #[arg(long = "record-every")]
    record_every: Option<usize>,
}

impl Settings {
    fn overrides(&self) -> Overrides {
        Overrides {
            dt: self.dt,
            horizon: self.horizon,
            rho: self.rho,
            seed: self.seed,
            record_every: self.record_every,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write a run directory.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Check graph, model and gain conditions.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Print gains synthesized from the scenario's agent model.
    Synthesize {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Run a preset (example1 or example2) on both reference graphs.
    Reproduce {
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Sweep the gain parameter (--rho 1,10,100) or the agent count (--n 3,10,25).
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "rho", value_delimiter = ',')]
        rhos: Option<Vec<f64>>,
        #[arg(long = "n", value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "record-every")]
        record_every: Option<usize>,
    },
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let mut out = std::io::stdout();
    let result = match args.command {
        Command::Simulate { scenario, out: dir, settings } => {
            cli::cmd_simulate(&scenario, &dir, &settings.overrides(), &mut out)
        }
        Command::Verify { scenario, settings } => cli::cmd_verify(&scenario, &settings.overrides(), &mut out),
        Command::Synthesize { scenario, settings } => {
            cli::cmd_synthesize(&scenario, &settings.overrides(), &mut out)
        }
        Command::Reproduce { name, out: dir, settings } => {
            cli::cmd_reproduce(&name, &dir, &settings.overrides(), &mut out)
        }
        Command::Sweep {
            scenario,
            out: dir,
            rhos,
            ns,
            jobs,
            dt,
            horizon,
            seed,
            record_every,
        } => {
            let ov = Overrides {
                dt,
                horizon,
                rho: None,
                seed,
                record_every,
            };
            SweepSpec::from_lists(rhos, ns)
                .and_then(|spec| cli::cmd_sweep(&scenario, &spec, &dir, &ov, jobs, &mut out))
        }
    };
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(cli::exit_code(&result) as u8)
}
