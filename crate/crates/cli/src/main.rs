use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::LevelFilter;

use roadwatch_cli::{cmd_calibrate, cmd_eval, cmd_run, cmd_simulate, EvalArgs, RunArgs};

#[derive(Parser, Debug)]
#[command(name = "roadwatch", version, about = "Traffic danger recognition from a calibrated camera")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit vanishing points from labeled road lines
    Calibrate {
        /// Calibration JSON with `parallel_lines` and `image_size`
        lines: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a synthetic scenario with ground truth
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Process a detections stream
    Run {
        #[arg(long)]
        calib: PathBuf,
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Alert distance in meters
        #[arg(long)]
        threshold: Option<f64>,
        /// Comma-separated prediction horizons in seconds
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<f64>>,
        /// Danger map cell size in meters
        #[arg(long)]
        grid_cell: Option<f64>,
    },
    /// Score a run against simulator ground truth
    Eval {
        /// Output directory of `run`
        #[arg(long)]
        outputs: PathBuf,
        /// Output directory of `simulate`
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        calib: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let result = match cli.command {
        Command::Calibrate { lines, out } => cmd_calibrate(&lines, &out),
        Command::Simulate { scenario, seed, out } => cmd_simulate(&scenario, seed, &out),
        Command::Run { calib, scene, detections, out, threshold, horizons, grid_cell } => {
            cmd_run(&RunArgs { calib, scene, detections, out, threshold, horizons, grid_cell })
        }
        Command::Eval { outputs, gt, calib, out } => cmd_eval(&EvalArgs { outputs, gt, calib, out }),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
