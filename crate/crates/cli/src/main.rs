use std::path::PathBuf;
use std::process::ExitCode;

use bwpc_core::montecarlo::Mode;
use clap::{Args, Parser, Subcommand};

mod config;
mod run;
mod table;

use config::Config;
use run::{Figure, Invocation, RunError, Sweep, SweepVar, Task};

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration; missing keys take reference values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Monte-Carlo trials per point (command-specific default when omitted).
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output directory for the CSV and its JSON sidecar.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Args, Clone, Copy)]
struct SweepArgs {
    /// Swept quantity.
    #[arg(long, value_enum, default_value = "E_C")]
    sweep: SweepVar,
    #[arg(long, default_value_t = 2.0)]
    from: f64,
    #[arg(long, default_value_t = 20.0)]
    to: f64,
    #[arg(long, default_value_t = 10)]
    points: usize,
}

impl From<SweepArgs> for Sweep {
    fn from(a: SweepArgs) -> Self {
        Sweep {
            variable: a.sweep,
            from: a.from,
            to: a.to,
            points: a.points,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form metrics along a sweep.
    Analytic {
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Monte-Carlo estimates with 99% intervals next to the closed forms.
    Simulate {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Interferer activity models to run.
        #[arg(long, num_args = 1.., default_values = ["thinned", "joint"])]
        mode: Vec<Mode>,
    },
    /// Optimal slot division and the (T1, T2) trade-off curve.
    Optimize {
        #[arg(long, default_value_t = bwpc_core::optimize::DEFAULT_T2_GRID)]
        grid: usize,
    },
    /// Spatial throughput versus reader density.
    Density {
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, default_value_t = 1e-3)]
        lambda_min: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda_max: f64,
    },
    /// Regenerates the data behind one of the standard figures.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Shift of P_eo and P_io when both truncation radii are doubled.
    Sensitivity,
    /// Reruns the invocation stored in a sidecar and compares the CSV bytes.
    Replay { sidecar: PathBuf },
}

/// Analysis and simulation of wireless-powered asynchronous backscatter networks.
#[derive(Parser)]
#[command(name = "bwpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

fn default_trials(task: &Task) -> u64 {
    match task {
        Task::Simulate { .. } => 10_000,
        Task::Sensitivity => 20_000,
        Task::Reproduce { figure, .. } => figure.default_trials(),
        _ => 0,
    }
}

fn build(command: Command, common: &Common) -> Result<Invocation, RunError> {
    let config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let task = match command {
        Command::Analytic { sweep } => Task::Analytic {
            sweep: sweep.into(),
        },
        Command::Simulate { sweep, mode } => Task::Simulate {
            sweep: sweep.into(),
            modes: mode,
        },
        Command::Optimize { grid } => Task::Optimize { grid },
        Command::Density {
            grid,
            lambda_min,
            lambda_max,
        } => Task::Density {
            grid,
            lambda_min,
            lambda_max,
        },
        Command::Reproduce { figure, mode, grid } => Task::Reproduce { figure, mode, grid },
        Command::Sensitivity => Task::Sensitivity,
        Command::Replay { .. } => unreachable!(),
    };
    let trials = common.trials.unwrap_or_else(|| default_trials(&task));
    Ok(Invocation {
        task,
        config,
        seed: common.seed,
        trials,
    })
}

fn replay(path: &std::path::Path, workers: usize) -> Result<bool, RunError> {
    let sidecar = table::read_sidecar(path)?;
    let dir = path.parent().unwrap_or(std::path::Path::new("."));
    let original = std::fs::read(dir.join(&sidecar.csv))?;
    let fresh = sidecar
        .invocation
        .run(workers)?
        .to_csv()
        .map_err(std::io::Error::other)?;
    Ok(original == fresh)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.common;
    let result = match cli.command {
        Command::Replay { sidecar } => replay(&sidecar, common.workers).map(|same| {
            if same {
                println!("identical: {}", sidecar.display());
                ExitCode::SUCCESS
            } else {
                println!("differs: {}", sidecar.display());
                ExitCode::from(1)
            }
        }),
        command => build(command, &common).and_then(|inv| {
            let t = inv.run(common.workers)?;
            let w = table::write(&common.out, &inv.output_name(), &t, &inv)?;
            println!("{}", w.csv.display());
            println!("{}", w.sidecar.display());
            Ok(ExitCode::SUCCESS)
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code())
    })
}
