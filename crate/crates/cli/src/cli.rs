//! The `tedopa` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tedopa_core::chain::{chaincoeffs_at_temperature, find_chain_length, SpectralDensity, TemperatureSpec};

use crate::config::{load_config, SdConfig};
use crate::error::{CliError, Result};
use crate::model::spectral_density;

/// Environment variable naming the default output root of `run`.
pub const OUTPUT_ROOT_VAR: &str = "TEDOPA_OUTPUT_ROOT";

#[derive(Debug, Parser)]
#[command(name = "tedopa", version, about = "Chain-mapped open quantum system dynamics with MPS and TDVP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Map a spectral density onto chain coefficients.
    Chain(ChainArgs),
    /// Run a simulation from a config file.
    Run(RunArgs),
    /// Export stored series as CSV.
    Export(ExportArgs),
    /// Estimate the chain length needed up to a final time.
    EstimateN(EstimateArgs),
}

#[derive(Debug, Args)]
struct ChainArgs {
    /// Spectral density: a TOML table (`kind = "ohmic"` or `"tabulated"`)
    /// or a two-column `omega J` text file.
    sd_file: PathBuf,
    /// Number of chain modes.
    #[arg(short, long)]
    n: usize,
    /// Inverse temperature; zero temperature when omitted.
    #[arg(long)]
    beta: Option<f64>,
    /// Gauss-Legendre points per panel.
    #[arg(long)]
    quad_points: Option<usize>,
    /// Output coefficient file.
    #[arg(short, long, default_value = "coeffs.txt")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Simulation config (TOML).
    config: PathBuf,
    /// Output root; defaults to $TEDOPA_OUTPUT_ROOT, then `results`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Run convergence branches one after another.
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// A run directory or a single branch directory.
    results: PathBuf,
    /// Series name, or `all`.
    #[arg(short, long, default_value = "all")]
    what: String,
    /// Output format.
    #[arg(long, default_value = "csv", value_parser = ["csv"])]
    format: String,
    /// Output directory; defaults to `<results>/export`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Final simulation time.
    #[arg(long)]
    tfinal: f64,
    /// Bath cutoff frequency.
    #[arg(long)]
    omegac: f64,
    /// Zero-temperature bath.
    #[arg(long, conflicts_with = "beta", required_unless_present = "beta")]
    zero_t: bool,
    /// Inverse temperature of the bath.
    #[arg(long)]
    beta: Option<f64>,
}

fn temperature(beta: Option<f64>) -> TemperatureSpec {
    beta.map_or(TemperatureSpec::Zero, TemperatureSpec::Beta)
}

/// Reads a spectral density from TOML or a two-column table.
pub fn read_sd_file(path: &Path) -> Result<SpectralDensity> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if path.extension().is_some_and(|e| e == "toml") {
        let sd: SdConfig =
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        return spectral_density(&sd);
    }
    let (mut omega, mut values) = (Vec::new(), Vec::new());
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Input(format!("{} line {}: {e}", path.display(), k + 1)))?;
        if nums.len() != 2 {
            return Err(CliError::Input(format!(
                "{} line {}: expected `omega J`, got {} numbers",
                path.display(),
                k + 1,
                nums.len()
            )));
        }
        omega.push(nums[0]);
        values.push(nums[1]);
    }
    SpectralDensity::tabulated(omega, values).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn cmd_chain(a: ChainArgs) -> Result<()> {
    let sd = read_sd_file(&a.sd_file)?;
    let chain = chaincoeffs_at_temperature(&sd, temperature(a.beta), a.n, a.quad_points)
        .map_err(|e| CliError::from_core("chain", e))?;
    std::fs::write(&a.out, chain.to_text()).map_err(|e| CliError::io(&a.out, e))?;
    println!("wrote {} chain modes to {} (c0 = {})", chain.len(), a.out.display(), chain.c0);
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let root = a
        .out
        .or_else(|| std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    let out = crate::runner::run(&cfg, base, &root, !a.serial)?;
    for b in &out.branches {
        let status = match &b.manifest.error {
            None => "ok".to_string(),
            Some(e) => format!("failed: {e}"),
        };
        println!("{} {} {status}", b.label, b.dir.display());
        if let Some(c) = b.manifest.diagnostics.chain_length.as_ref().filter(|c| !c.passed) {
            println!(
                "{} warning: chain too short, terminal occupation {} exceeded {} at t = {}",
                b.label,
                c.max_occupation,
                c.threshold,
                c.first_violation.unwrap_or(f64::NAN)
            );
        }
    }
    println!("max deviation {} (reference {})", out.report.max_deviation, out.report.reference.as_deref().unwrap_or("none"));
    println!("{}", out.dir.display());
    let failed: Vec<&str> = out.failed().map(|b| b.label.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Internal(format!("branches {failed:?} failed; see their manifests")))
    }
}

fn cmd_export(a: ExportArgs) -> Result<()> {
    let out = a.out.unwrap_or_else(|| a.results.join("export"));
    let files = crate::store::export(&a.results, &a.what, &out)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let temp = if a.zero_t { TemperatureSpec::Zero } else { temperature(a.beta) };
    let n = find_chain_length(a.tfinal, a.omegac, temp).map_err(|e| CliError::Input(e.to_string()))?;
    println!("{n}");
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code: 0 on success, 1 for user errors, 2 for internal ones.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Chain(a) => cmd_chain(a),
        Command::Run(a) => cmd_run(a),
        Command::Export(a) => cmd_export(a),
        Command::EstimateN(a) => cmd_estimate(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
