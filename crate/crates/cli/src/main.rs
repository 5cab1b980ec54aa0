use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::{Config, Resolver};

const ENV_HELP: &str = "\
Environment:
  CATQEC_AGREEMENT_TOL  default for --agreement-tol (exact vs closed-form channel), 1e-8
  CATQEC_MAX_BIT_FLIP   default for --max-bit-flip (validity flag), 1e-2
  CATQEC_MAX_OVERLAP    default for --max-overlap (validity flag), 0.1
Precedence: command line, then --config file, then environment, then built-in default.

Exit status: 0 success, 2 invalid input, 3 numerical failure, 1 I/O error.";

#[derive(Debug, Parser)]
#[command(name = "catqec", version, about = "Cat codes over lossy bosonic channels", after_help = ENV_HELP)]
struct Cli {
    /// key = value file with defaults for any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Print the resolved configuration and exit
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Logical 4x4 channel of one code under loss (JSON)
    Channel(ChannelArgs),
    /// Diamond distance and error model over an alpha^2 grid (CSV)
    SweepAlpha(SweepArgs),
    /// Closed-form and searched optimal code parameters (JSON)
    Optimize(CodeArgs),
    /// Lower, upper and averaged error envelopes (JSON)
    Bounds(BoundsArgs),
    /// Repeater chain key rates over distance (CSV)
    Repeater(RepeaterArgs),
    /// Gain of the subspace-aware optimum over the averaged choice (JSON)
    Suppression(CodeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Analytic,
    Both,
    Pauli,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Mode::Exact => "exact",
            Mode::Analytic => "analytic",
            Mode::Both => "both",
            Mode::Pauli => "pauli",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Mode as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Logical subspace, 0..d-1 [default: 0]
    #[arg(long)]
    pub s: Option<usize>,
    /// Which matrix to report [default: both]
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Fock truncation [default: max(alpha^2 + 8 alpha + 20, 32)]
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Also compute the diamond distance of the reported matrix to the identity
    #[arg(long)]
    pub diamond: bool,
    #[arg(long)]
    pub agreement_tol: Option<f64>,
    #[arg(long)]
    pub max_bit_flip: Option<f64>,
    #[arg(long)]
    pub max_overlap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Single subspace; all s when omitted
    #[arg(long)]
    pub s: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    pub alpha_sq_min: Option<f64>,
    /// [default: 12]
    #[arg(long)]
    pub alpha_sq_max: Option<f64>,
    /// [default: 0.1]
    #[arg(long)]
    pub alpha_sq_step: Option<f64>,
    #[arg(long)]
    pub nmax: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CodeArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Skip the exact diamond distance at the optimum (optimize only)
    #[arg(long)]
    pub no_certificate: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Evaluate at this amplitude; report the envelope minima when omitted
    #[arg(long, conflicts_with = "alpha_sq")]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub alpha_sq: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RepeaterArgs {
    /// Coupling efficiency in (0.9, 1]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Total distances in km, comma separated
    #[arg(long, value_delimiter = ',')]
    pub l_tot_km: Vec<f64>,
    /// Attenuation length in km [default: 20]
    #[arg(long)]
    pub l_att_km: Option<f64>,
    /// [default: 2]
    #[arg(long)]
    pub d_min: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    pub d_max: Option<usize>,
    /// Write the per-d table here instead of after the distance rows
    #[arg(long)]
    pub table_output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(catqec::Error),
    Io(String),
}

impl From<catqec::Error> for CliError {
    fn from(e: catqec::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_domain() => 2,
            CliError::Core(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "invalid input: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

pub fn write_text(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    let resolver = Resolver::new(&file);
    let job = match cli.command {
        Command::Channel(a) => commands::channel(&resolver, a)?,
        Command::SweepAlpha(a) => commands::sweep_alpha(&resolver, a)?,
        Command::Optimize(a) => commands::optimize(&resolver, a)?,
        Command::Bounds(a) => commands::bounds(&resolver, a)?,
        Command::Repeater(a) => commands::repeater(&resolver, a)?,
        Command::Suppression(a) => commands::suppression(&resolver, a)?,
    };
    if cli.print_config {
        return write_text(cli.output.as_ref(), &resolver.used().render());
    }
    let text = job.run()?;
    write_text(cli.output.as_ref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("catqec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
