//! `rankob`: build, evaluate, certify and slice rank-obstruction instances.
//!
//! Exit codes: 0 success, 1 a selected suite failed, 2 configuration error, 3 I/O error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rank_obstruction::instance::Mode;

use config::{PaddedDims, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Failed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "rankob", version, about = "Self-similar rank-constrained maps and their certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an instance and write it as JSON.
    Build(Common),
    /// Evaluate F (or the padded map) on points read from a CSV file; writes JSONL.
    Eval(Common),
    /// Run certification suites; exits 1 unless every selected suite passes.
    Certify(Common),
    /// Run one of the two numerical experiments.
    Experiment {
        kind: ExperimentKind,
        #[command(flatten)]
        common: Common,
        /// Also write the occupancy grid of the breach experiment as CSV.
        #[arg(long)]
        occupancy_csv: Option<PathBuf>,
    },
    /// Sample F on a 2-plane through the domain ball; writes CSV with face ids.
    ExportSlice {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolution: Option<usize>,
        /// Two domain axes spanning the plane, e.g. `0,1`.
        #[arg(long, value_delimiter = ',')]
        axes: Option<Vec<usize>>,
        #[arg(long)]
        extent: Option<f64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ExperimentKind {
    Sard,
    Approx,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance JSON written by `build`.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    ball_radius: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suite name, comma-separated list, or `all`.
    #[arg(long)]
    suite: Option<String>,
    /// Input CSV for `eval`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Include finite-difference Jacobians in `eval` output.
    #[arg(long)]
    jacobian: bool,
    /// Evaluate the padded map `R^ell -> R^r` instead of F.
    #[arg(long, requires = "r")]
    ell: Option<usize>,
    #[arg(long, requires = "ell")]
    r: Option<usize>,
}

impl Common {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::load(self.config.as_deref())?;
        if let Some(mode) = self.mode {
            c.mode = mode.parse::<Mode>().map_err(|e| CliError::Config(e.to_string()))?;
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if self.$f.is_some() { c.$f = self.$f; } )* };
        }
        set!(instance, m, k, n, ball_radius, s, threads, out, input);
        macro_rules! set_val {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set_val!(seed, depth, samples, tol, fd_step, suite);
        c.jacobian |= self.jacobian;
        if let (Some(ell), Some(r)) = (self.ell, self.r) {
            c.padded = Some(PaddedDims { ell, r });
        }
        c.sard.seed = c.seed;
        c.resolve();
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Build(common) => commands::build(&common.into_config()?),
        Command::Eval(common) => commands::eval(&common.into_config()?),
        Command::Certify(common) => {
            let c = common.into_config()?;
            set_threads(&c)?;
            commands::certify(&c)
        }
        Command::Experiment {
            kind,
            common,
            occupancy_csv,
        } => {
            let c = common.into_config()?;
            set_threads(&c)?;
            match kind {
                ExperimentKind::Sard => commands::experiment_sard(&c, occupancy_csv.as_deref()),
                ExperimentKind::Approx => commands::experiment_approx(&c),
            }
        }
        Command::ExportSlice {
            common,
            resolution,
            axes,
            extent,
        } => {
            let mut c = common.into_config()?;
            if let Some(r) = resolution {
                c.slice.resolution = r;
            }
            if let Some(a) = axes {
                let [u, v] = a[..] else {
                    return Err(CliError::Config("--axes takes two indices, e.g. 0,1".into()));
                };
                c.slice.axes = [u, v];
            }
            if let Some(e) = extent {
                c.slice.extent = e;
            }
            commands::export_slice(&c)
        }
    }
}

fn set_threads(c: &RunConfig) -> Result<(), CliError> {
    if let Some(t) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, message) = match &e {
                CliError::Config(m) => ("config", m.as_str()),
                CliError::Io(m) => ("io", m.as_str()),
                CliError::Failed => ("failed", "one or more selected suites failed"),
            };
            eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
            ExitCode::from(e.code())
        }
    }
}
