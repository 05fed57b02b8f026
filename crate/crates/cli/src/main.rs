use std::process::ExitCode;

use clap::Parser;
use cortex_atlas_cli::{execute, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.render().to_string().trim_end() }));
            return ExitCode::from(2);
        }
    };
    if let Ok(v) = std::env::var("CORTEX_ATLAS_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size thread pool: {e}");
                }
            }
            _ => log::warn!("ignoring CORTEX_ATLAS_THREADS={v}: expected a positive integer"),
        }
    }
    match execute(cli) {
        Ok(report) => {
            if report.command != "serve" {
                println!("{}", serde_json::to_string(&report).expect("report serializes"));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}
