//! The `quadkit` command line: thin wrappers over `quadkit-core` plus the
//! experiment runner that regenerates figure data as CSV.

pub mod args;
pub mod commands;
pub mod experiments;
pub mod io;

use std::path::PathBuf;

use anyhow::Result;

use args::{Cli, Command};
use commands::Sink;
use experiments::{parse_params, resolve_seeds, run_experiment, Settings};

pub fn run(cli: Cli) -> Result<()> {
    let sink = Sink {
        out: cli.out.as_deref(),
        format: cli.format,
    };
    match &cli.command {
        Command::Rule(a) => commands::rule(a, &sink),
        Command::Sparse(a) => commands::sparse(a, &sink),
        Command::Sample(a) => commands::sample(a, cli.seed, &sink),
        Command::Design(a) => commands::design(a, &sink),
        Command::Subselect(a) => commands::subselect_cmd(a, &sink),
        Command::Lsq(a) => commands::lsq(a, &sink),
        Command::Gram(a) => commands::gram(a, &sink),
        Command::Validate(a) => commands::validate(a, &sink),
        Command::Experiment(a) => {
            let settings = Settings {
                out_dir: cli
                    .out
                    .clone()
                    .unwrap_or_else(|| PathBuf::from("quadkit-out").join(a.name.as_str())),
                seeds: resolve_seeds(cli.seed, a.trials, a.seeds.clone())?,
                gnuplot_hints: a.emit_gnuplot_hints,
            };
            let manifest = run_experiment(a.name, parse_params(a.params.as_deref())?, settings)?;
            eprintln!("{}: wrote {} files", a.name.as_str(), manifest.outputs.len() + 1);
            Ok(())
        }
    }
}
