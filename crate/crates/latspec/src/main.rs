use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use latspec::{CliError, Command};

/// Spectral experiments for perturbations of the discrete Laplacian on ℤ.
#[derive(Parser)]
#[command(version, about)]
struct Args {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for contour and probe evaluation.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config("arguments", e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    if let Some(n) = args.threads {
        if n == 0 {
            let err = CliError::config("--threads", "must be at least 1");
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    match latspec::run(args.command, &args.config, args.out.as_deref()) {
        Ok(files) => {
            let files: Vec<_> = files.iter().map(|p| p.display().to_string()).collect();
            println!("{}", serde_json::json!({"status": "ok", "files": files}));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
