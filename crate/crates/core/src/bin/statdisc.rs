use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use statdisc::cli::{self, Command, Outcome, RunConfig};
use statdisc::Error;

/// Stationary discs of Levi nondegenerate quadrics: checks, certificates and scans.
///
/// Commands: check, solve-x, disc, verify, jet, jacobian, center, minimal,
/// defect, scan. Reports are JSON; exit 0 pass, 1 numerical failure, 2 bad input.
#[derive(Parser, Debug)]
#[command(name = "statdisc", version)]
struct Args {
    /// Command to run; optional with --config.
    command: Option<String>,
    /// Run configuration (JSON); flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Quadric JSON file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Pencil coefficients `re,im;re,im...`.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Real Levi direction `v1,...,vd`.
    #[arg(long, allow_hyphen_values = true)]
    b0: Option<String>,
    /// Disc direction `re,im;re,im...`.
    #[arg(long = "V", allow_hyphen_values = true)]
    v: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override NAME=VALUE (repeatable).
    #[arg(long = "tol")]
    tol: Vec<String>,
    /// Scan axis COORD=MIN:MAX:COUNT, e.g. a1.re=-0.05:0.05:5 (repeatable).
    #[arg(long = "axis", allow_hyphen_values = true)]
    axis: Vec<String>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Include the full pencil factorization.
    #[arg(long)]
    dump: bool,
    /// Include the Fourier coefficient table of the lift (disc command).
    #[arg(long)]
    fourier: bool,
}

fn configure(args: Args) -> statdisc::Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => {
            let command = args
                .command
                .as_deref()
                .ok_or_else(|| Error::Input("missing command".into()))?;
            let input = args
                .input
                .clone()
                .ok_or_else(|| Error::Input("missing --input".into()))?;
            RunConfig::new(command.parse()?, input)
        }
    };
    if let Some(cmd) = &args.command {
        config.command = cmd.parse::<Command>()?;
    }
    if let Some(input) = args.input {
        config.input = input;
    }
    let q = cli::load_quadric(&config.input)?;
    if let Some(a) = &args.a {
        config.a = Some(cli::parse_complex_vector(a, q.d(), "a")?);
    }
    if let Some(b0) = &args.b0 {
        config.b0 = Some(cli::parse_real_vector(b0, q.d(), "b0")?);
    }
    if let Some(v) = &args.v {
        config.v = Some(cli::parse_complex_vector(v, q.n(), "V")?);
    }
    for t in &args.tol {
        config.tolerances.apply(t)?;
    }
    if !args.axis.is_empty() {
        config.axes = args.axis.iter().map(|s| s.parse()).collect::<statdisc::Result<_>>()?;
    }
    if let Some(s) = args.samples {
        config.samples = Some(s);
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.output.is_some() {
        config.output = args.output;
    }
    config.dump |= args.dump;
    config.fourier |= args.fourier;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STATDISC_LOG", "error")).init();
    let args = Args::parse();
    let (outcome, output) = match configure(args) {
        Ok(config) => (cli::run(&config), config.output),
        Err(err) => {
            log::error!("{err}");
            let report = serde_json::json!({
                "version": env!("CARGO_PKG_VERSION"),
                "status": "error",
                "error": {"kind": "InputError", "message": err.to_string()},
                "exit_code": cli::exit_code_for(&err),
            });
            (Outcome { exit_code: cli::exit_code_for(&err), report }, None)
        }
    };
    let text = outcome.render();
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &text) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(cli::EXIT_INPUT as u8);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(outcome.exit_code as u8)
}
