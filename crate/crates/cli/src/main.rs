use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use twistlab_cli::{parse_overrides, run, threads_from_env, CliError, RawConfig, RunConfig, Scenario};

/// Structured-light and photon-pair simulations driven by a flat config file.
#[derive(Parser, Debug)]
#[command(name = "twistlab", version)]
struct Args {
    scenario: Scenario,

    /// `key = value` file; `#` starts a comment.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// `--key value` pairs overriding the file.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

fn execute(args: Args) -> Result<(), CliError> {
    let mut pairs = parse_overrides(&args.overrides).map_err(CliError::Config)?;
    let mut config_path = args.config;
    let mut out = args.out;
    pairs.retain(|(k, v)| match k.as_str() {
        "config" => {
            config_path = Some(PathBuf::from(v));
            false
        }
        "out" => {
            out = Some(PathBuf::from(v));
            false
        }
        _ => true,
    });
    let threads = threads_from_env().map_err(|e| CliError::Config(vec![e]))?;
    let mut raw = match &config_path {
        Some(p) => RawConfig::load(p).map_err(CliError::Config)?,
        None => RawConfig::default(),
    };
    for (k, v) in &pairs {
        raw.set(k, v);
    }
    let config = RunConfig::from_raw(args.scenario, &raw);
    let out = out.ok_or_else(|| twistlab_cli::ConfigIssue::new("out", "missing; expected --out <dir>"));
    let (config, out) = match (config, out) {
        (Ok(c), Ok(o)) => (c, o),
        (c, o) => {
            let mut issues = c.err().unwrap_or_default();
            issues.extend(o.err());
            return Err(CliError::Config(issues));
        }
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    }
    let outcome = run(&config, &out)?;
    print!("{}", outcome.report);
    println!("wrote {} artifacts to {} (config {})", outcome.artifacts.len(), out.display(), &config.hash()[..12]);
    Ok(())
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
