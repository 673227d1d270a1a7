mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use hireg_core::subdivision::Scheme;
use hireg_core::ErrorCategory;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            CliError::Input(m) => ("input", m),
            CliError::Numeric(m) => ("numeric", m),
        };
        write!(f, "error[{kind}]: {}", msg.replace('\n', " "))
    }
}

impl From<hireg_core::Error> for CliError {
    fn from(e: hireg_core::Error) -> Self {
        match e.category() {
            ErrorCategory::Input => CliError::Input(e.to_string()),
            ErrorCategory::Numeric => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "hireg", version, about = "Template registration with spectral maps and subdivision-based detail recovery")]
struct Cli {
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register a template to a target scan and optionally augment it.
    Register(RegisterArgs),
    /// Subdivide a mesh globally, or locally on a face selection.
    Subdivide(SubdivideArgs),
    /// Refine a functional map with ZoomOut and write the point map.
    Zoomout(ZoomoutArgs),
    /// Cumulative geodesic error curve of a predicted point map.
    Evaluate(EvaluateArgs),
    /// Give a target mesh UVs read through a point map onto a textured source.
    TransferTexture(TransferArgs),
    /// Check a mesh (and optionally a face selection) and print statistics.
    Validate(ValidateArgs),
}

#[derive(Args)]
pub struct RegisterArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set hra.iterations=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long)]
    target: Option<PathBuf>,
    /// Lines of `template_vertex target_vertex` (0-based).
    #[arg(long)]
    landmarks: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
pub struct SubdivideArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(long, default_value = "loop")]
    scheme: Scheme,
    #[arg(long, default_value_t = 1)]
    iters: usize,
    /// Permit more than two barycentric iterations.
    #[arg(long)]
    allow_deep_bcs: bool,
    /// Face-id file; subdivides only these faces (loop, one iteration).
    #[arg(long)]
    selection: Option<PathBuf>,
    /// Repair the selection instead of rejecting it.
    #[arg(long)]
    repair: bool,
    /// Directory for subdivision records.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Args)]
pub struct ZoomoutArgs {
    /// Mesh whose vertices are mapped (N).
    #[arg(long)]
    source: PathBuf,
    /// Mesh mapped onto (M).
    #[arg(long)]
    target: PathBuf,
    /// Initial functional map file (header `kN kM`, then rows).
    #[arg(long, conflicts_with = "landmarks", required_unless_present = "landmarks")]
    init: Option<PathBuf>,
    /// Lines of `source_vertex target_vertex` for a landmark initialisation.
    #[arg(long)]
    landmarks: Option<PathBuf>,
    /// Square start size for a landmark initialisation.
    #[arg(long, default_value_t = 10)]
    k_start: usize,
    #[arg(long, default_value_t = 60)]
    k_end: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    /// Commutativity weight of the landmark initialisation.
    #[arg(long, default_value_t = 1e-3)]
    regularization: f64,
    /// Point map output file.
    #[arg(long)]
    output: PathBuf,
    /// Also write the refined functional map.
    #[arg(long)]
    fmap: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Mesh both point maps land on.
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Largest normalized error threshold.
    #[arg(long, default_value_t = 0.25)]
    max_threshold: f64,
    #[arg(long, default_value_t = 101)]
    samples: usize,
    /// CSV output (`threshold,fraction`).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
pub struct TransferArgs {
    /// Mesh with texture coordinates.
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Point map from target vertices onto the source.
    #[arg(long)]
    pointmap: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
pub struct ValidateArgs {
    input: PathBuf,
    /// Face-id file to check for repair violations.
    #[arg(long)]
    selection: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("{}", CliError::Input(format!("cannot configure threads: {e}")));
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Register(a) => commands::register(a),
        Command::Subdivide(a) => commands::subdivide(a),
        Command::Zoomout(a) => commands::zoomout(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::TransferTexture(a) => commands::transfer_texture(a),
        Command::Validate(a) => commands::validate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
