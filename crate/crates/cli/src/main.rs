use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use powerfold::LogPoint;
use powerfold_cli::commands;
use powerfold_cli::config::{self, parse_mode, Config};
use powerfold_cli::error::io_error;
use powerfold_cli::render::parse_spec;
use powerfold_cli::CliError;
use serde_json::Value;

/// Worker-count override for the parallel sections.
const WORKERS_ENV: &str = "POWERFOLD_WORKERS";

#[derive(Parser)]
#[command(name = "powerfold", version, about = "Quasiregular interpolation of power maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration's sequences.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run an invariant suite: boundaries, singular, dilatation, wandering or all.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// literal | shrink
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a PPM image described by a render spec.
    Render {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the SVG triangulation of the cell map for `m`.
    RenderCell {
        m: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Export critical points, zeros and critical values as CSV.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Export an orbit as CSV.
    Orbit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "log-mod", allow_hyphen_values = true)]
        log_mod: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        arg: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Log-modulus beyond which the orbit counts as escaped.
        #[arg(long, allow_hyphen_values = true)]
        escape: Option<f64>,
        /// Iterate the truncated map `h_n` instead of `h`.
        #[arg(long, default_value_t = 0)]
        truncate: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<Config, CliError> {
    config::parse(&commands::read(path)?)
}

fn emit(report: &Value, output: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("serializable") + "\n";
    match output {
        Some(p) => commands::write(p, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn emit_bytes(bytes: &[u8], output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(p) => commands::write(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Validate { config } => emit(&commands::validate(&load(&config)?), None),
        Command::Verify {
            config,
            suite,
            seed,
            samples,
            alpha,
            mode,
            output,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = samples {
                cfg.verify.samples = s;
            }
            if let Some(a) = alpha {
                cfg.verify.alpha = a;
            }
            if let Some(m) = mode {
                cfg.verify.mode = parse_mode(&m).ok_or_else(|| CliError::Parse {
                    line: None,
                    key: Some("--mode".into()),
                    message: format!("expected literal or shrink, got '{m}'"),
                })?;
            }
            let (report, err) = commands::verify(&cfg, &suite)?;
            emit(&report, output.as_deref())?;
            err.map_or(Ok(()), Err)
        }
        Command::Render { config, spec, output } => {
            let cfg = load(&config)?;
            let spec = parse_spec(&commands::read(&spec)?)?;
            let out = output
                .or_else(|| spec.output.clone().map(PathBuf::from))
                .ok_or_else(|| CliError::Parse {
                    line: None,
                    key: Some("output".into()),
                    message: "no output path in the spec or on the command line".into(),
                })?;
            emit(&commands::render_image(&cfg, &spec, &out)?, None)
        }
        Command::RenderCell { m, output } => emit(&commands::render_cell(m, &output)?, None),
        Command::Report { config, output } => emit_bytes(&commands::report_csv(&load(&config)?)?, output.as_deref()),
        Command::Orbit {
            config,
            log_mod,
            arg,
            steps,
            escape,
            truncate,
            output,
        } => {
            let cfg = load(&config)?;
            let (bytes, _) = commands::orbit_csv(&cfg, LogPoint::new(log_mod, arg), steps, escape, truncate)?;
            emit_bytes(&bytes, output.as_deref())
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Validate { .. } => "validate",
        Command::Verify { .. } => "verify",
        Command::Render { .. } => "render",
        Command::RenderCell { .. } => "render-cell",
        Command::Report { .. } => "report",
        Command::Orbit { .. } => "orbit",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let name = command_name(&cli.command);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let diag = serde_json::to_string(&e.diagnostic(name)).expect("serializable");
            eprintln!("{diag}");
            ExitCode::from(e.exit_code())
        }
    }
}
