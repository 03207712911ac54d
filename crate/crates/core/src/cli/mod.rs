//! Batch front end: read a JSON run file, dispatch, write JSON or CSV.
//!
//! Exit codes: 0 on success, 1 for configuration and input errors (nothing
//! is written), 2 when the numerics refuse a certificate. On exit 2 the
//! report is still written, with `"status": "not_certified"`.

mod commands;
pub mod config;
mod opcheck;
mod render;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::Value;

pub use config::{Command, Format, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NOT_CERTIFIED: u8 = 2;

/// Every option except `--config` overrides the matching field of the run file.
#[derive(Debug, Parser)]
#[command(
    name = "akx",
    version,
    about = "Power series at algebra elements, extended kernels and positivity checks"
)]
pub struct Args {
    /// JSON run file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Suppress the summary on standard error.
    #[arg(long)]
    pub quiet: bool,
}

/// What a command produced.
pub(crate) struct Artifact {
    pub json: Value,
    /// CSV rendering, when the command has one.
    pub csv: Option<String>,
    pub summary: String,
    pub certified: bool,
}

/// Input problems, reported on stderr with exit code 1.
#[derive(Debug)]
pub(crate) struct ConfigError(pub String);

impl From<crate::Error> for ConfigError {
    fn from(e: crate::Error) -> Self {
        ConfigError(e.to_string())
    }
}

impl From<std::io::Error> for ConfigError {
    fn from(e: std::io::Error) -> Self {
        ConfigError(e.to_string())
    }
}

pub(crate) type CliResult<T> = std::result::Result<T, ConfigError>;

pub fn load_config(path: &Path) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?;
    let stray = config.stray_fields();
    if !stray.is_empty() {
        return Err(format!(
            "invalid config {}: field(s) {} not used by command `{}`",
            path.display(),
            stray.join(", "),
            config.command.name()
        ));
    }
    config
        .truncation
        .validate()
        .map_err(|e| format!("invalid config {}: {e}", path.display()))?;
    Ok(config)
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run_from<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run(&args)
}

pub fn run(args: &Args) -> u8 {
    let mut config = match load_config(&args.config) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    let format = args.format.or(config.output.format).unwrap_or_default();
    let out = args.out.clone().or_else(|| config.output.path.clone());

    let artifact = match commands::dispatch(&config) {
        Ok(a) => a,
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    if let Err(msg) = write_artifact(&artifact, format, out.as_deref()) {
        eprintln!("error: {msg}");
        return EXIT_CONFIG;
    }
    if !args.quiet {
        eprintln!("{}", artifact.summary);
    }
    if artifact.certified {
        EXIT_OK
    } else {
        EXIT_NOT_CERTIFIED
    }
}

fn write_artifact(a: &Artifact, format: Format, out: Option<&Path>) -> Result<(), String> {
    let json = render::to_line(&a.json);
    let body = match format {
        Format::Json => json.clone(),
        // a failed command has no table to print; its report is the output
        Format::Csv => match &a.csv {
            Some(csv) if a.certified => csv.clone(),
            Some(_) => json.clone(),
            None => return Err("csv output is not available for this command".into()),
        },
    };
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(|e| e.to_string())?;
        }
        Some(path) => {
            fs::write(path, &body).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            if format == Format::Csv && a.certified {
                let report = report_path(path);
                fs::write(&report, &json).map_err(|e| format!("cannot write {}: {e}", report.display()))?;
            }
        }
    }
    Ok(())
}

/// `gram.csv` → `gram.report.json`, next to the table.
pub fn report_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.report.json"))
}
