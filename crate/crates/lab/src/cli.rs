use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::pipeline::{geometry_report, run_solve, run_verify, verify_solution};

#[derive(Debug, Parser)]
#[command(name = "aniso-lab", version, about = "Anisotropic p-Laplacian experiments")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Harmonic mean, embedding exponent, conditions and cube sizes for a p-vector.
    Geometry {
        /// Comma-separated exponents, nondecreasing.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
    /// Run the solver and write snapshots.
    Solve(RunArgs),
    /// Harnack sweep and oscillation check on stored snapshots.
    Verify(RunArgs),
    /// `solve` followed by `verify`.
    All(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `out_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig, LabError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn run(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::Geometry { p, rho, theta } => {
            let r = geometry_report(&p, rho, theta)?;
            emit(&serde_json::to_string_pretty(&r).expect("serializable"));
        }
        Command::Solve(a) => {
            let out = run_solve(&a.load()?)?;
            emit(&format!("wrote {} snapshots in {} steps", out.files.len(), out.log.steps));
        }
        Command::Verify(a) => {
            emit(&run_verify(&a.load()?)?.summary_line());
        }
        Command::All(a) => {
            let cfg = a.load()?;
            let solved = run_solve(&cfg)?;
            emit(&format!("wrote {} snapshots in {} steps", solved.files.len(), solved.log.steps));
            emit(&verify_solution(&cfg, &solved.solution)?.summary_line());
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let workers = cli.workers;
    let result = match workers {
        Some(0) => Err(LabError::Usage("--workers must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(LabError::Usage(e.to_string())),
        },
        None => run(cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
