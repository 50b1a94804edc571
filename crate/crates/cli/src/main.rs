use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = quadkit::args::Cli::parse();
    match quadkit::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // one JSON object on stderr so scripts can parse failures
            let record = serde_json::json!({ "error": format!("{e:#}") });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
