use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use platoon_cli::{
    cmd_analyze, cmd_bode, cmd_demo_theorem, cmd_headway, cmd_simulate, cmd_sweep_n, CliError, Outcome, Overrides,
    ReportFormat, RunConfig, Sink,
};

#[derive(Parser)]
#[command(
    name = "platoon",
    version,
    about = "String-stability analysis and simulation of vehicle chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Write reports as JSON instead of TOML.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct WithConfig {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    grid_min: Option<f64>,
    #[arg(long)]
    grid_max: Option<f64>,
    #[arg(long)]
    points_per_decade: Option<usize>,
    /// Replaces the seed of every noise disturbance.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Chain gains over N, minimal headway and audit warnings.
    Analyze(WithConfig),
    /// Minimal time headway of the controller.
    Headway(WithConfig),
    /// Chain gains for each configured chain length.
    SweepN(WithConfig),
    /// Sensitivity integral of the spacing loop.
    Bode(WithConfig),
    /// Time-domain simulation with the configured disturbances.
    Simulate(WithConfig),
    /// Run a packaged demo (1 to 5).
    DemoTheorem {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=5))]
        n: u8,
        #[command(flatten)]
        common: Common,
    },
}

fn sink(c: &Common) -> Sink {
    Sink {
        dir: c.out.clone(),
        format: if c.json { ReportFormat::Json } else { ReportFormat::Toml },
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    type Cmd = fn(&RunConfig, &Sink) -> Result<Outcome, CliError>;
    let (args, f): (WithConfig, Cmd) = match cli.command {
        Command::DemoTheorem { n, common } => return cmd_demo_theorem(n, &sink(&common)),
        Command::Analyze(a) => (a, cmd_analyze),
        Command::Headway(a) => (a, cmd_headway),
        Command::SweepN(a) => (a, cmd_sweep_n),
        Command::Bode(a) => (a, cmd_bode),
        Command::Simulate(a) => (a, cmd_simulate),
    };
    let mut rc = RunConfig::load(&args.config)?;
    Overrides {
        grid_min: args.grid_min,
        grid_max: args.grid_max,
        points_per_decade: args.points_per_decade,
        seed: args.seed,
    }
    .apply(&mut rc);
    f(&rc, &sink(&args.common))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            match &out.verdict {
                Some(v) => println!("{v}"),
                None => print!("{}", out.report),
            }
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
