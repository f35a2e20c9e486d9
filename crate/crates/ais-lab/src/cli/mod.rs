//! Batch front-end. Exit codes: 0 success, 1 invariant or bound
//! violation, 2 configuration error.

mod commands;
mod config;
mod plot;

pub use commands::{
    cmd_bounds, cmd_compare, cmd_toy_demo, cmd_train, toy_aliasing_partition,
    two_class_partitions, CommandOutcome, TOY_GAMMA, TOY_K,
};
pub use config::{
    parse_config, BoundsConfig, CompareConfig, ExperimentConfig, ToyDemoConfig,
    TrainCommandConfig, VariantSpec,
};
pub use plot::{learning_curves_svg, median_iqr, CurveSeries};

use std::path::PathBuf;

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const USAGE: &str = "usage: ais-lab <bounds|train|compare|toy-demo> [--config file.json] [--out dir] [--seed n]";

struct CliArgs {
    command: String,
    config_path: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
}

fn parse_args(args: &[String]) -> Result<CliArgs, String> {
    if args.is_empty() {
        return Err(USAGE.to_string());
    }
    let command = args[0].clone();
    let mut parsed = CliArgs {
        command,
        config_path: None,
        out_dir: None,
        seed: None,
    };
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--config" => {
                i += 1;
                parsed.config_path = Some(PathBuf::from(args.get(i).ok_or("--config needs a path")?));
            }
            "--out" => {
                i += 1;
                parsed.out_dir = Some(PathBuf::from(args.get(i).ok_or("--out needs a dir")?));
            }
            "--seed" => {
                i += 1;
                parsed.seed = Some(
                    args.get(i)
                        .ok_or("--seed needs a value")?
                        .parse::<u64>()
                        .map_err(|e| format!("bad seed: {e}"))?,
                );
            }
            other => return Err(format!("unknown flag {other:?}\n{USAGE}")),
        }
        i += 1;
    }
    Ok(parsed)
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidInput(_) | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_VIOLATION,
    }
}

/// Entry point shared by the binary and tests; returns the process exit
/// code and prints human-readable progress to stdout/stderr.
pub fn run(args: &[String]) -> i32 {
    let parsed = match parse_args(args) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_CONFIG;
        }
    };

    let config_text = match &parsed.config_path {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("cannot read config {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        },
        None => None,
    };

    // A missing config gets a minimal default document per command.
    let default_doc = format!("{{\"command\": \"{}\"}}", parsed.command);
    let text = config_text.unwrap_or(default_doc);
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };

    // The subcommand on the command line must match the document.
    let doc_command = match &cfg {
        ExperimentConfig::Bounds(c) => c.command.clone(),
        ExperimentConfig::Train(c) => c.command.clone(),
        ExperimentConfig::Compare(c) => c.command.clone(),
        ExperimentConfig::ToyDemo(c) => c.command.clone(),
    };
    if doc_command != parsed.command {
        eprintln!(
            "config command {doc_command:?} does not match subcommand {:?}",
            parsed.command
        );
        return EXIT_CONFIG;
    }

    let out_dir = parsed
        .out_dir
        .clone()
        .or_else(|| match &cfg {
            ExperimentConfig::Bounds(c) => c.out_dir.clone().map(PathBuf::from),
            ExperimentConfig::Train(c) => c.out_dir.clone().map(PathBuf::from),
            ExperimentConfig::Compare(c) => c.out_dir.clone().map(PathBuf::from),
            ExperimentConfig::ToyDemo(c) => c.out_dir.clone().map(PathBuf::from),
        })
        .unwrap_or_else(|| PathBuf::from("out"));

    let result: crate::error::Result<(usize, String)> = match cfg {
        ExperimentConfig::Bounds(mut c) => {
            if let Some(seed) = parsed.seed {
                c.seed = Some(seed);
            }
            cmd_bounds(&c, &out_dir).map(|o| (o.violations, o.summary))
        }
        ExperimentConfig::Train(mut c) => {
            if let Some(seed) = parsed.seed {
                c.seed = Some(seed);
                c.seeds = None;
            }
            cmd_train(&c, &out_dir).map(|o| (o.violations, o.summary))
        }
        ExperimentConfig::Compare(c) => cmd_compare(&c, &out_dir).map(|o| (o.violations, o.summary)),
        ExperimentConfig::ToyDemo(c) => cmd_toy_demo(&c).map(|report| {
            print!("{report}");
            (0, "toy-demo: all claims verified".to_string())
        }),
    };

    match result {
        Ok((violations, summary)) => {
            println!("{summary}");
            if violations > 0 {
                EXIT_VIOLATION
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("{e}");
            exit_code_for(&e)
        }
    }
}
