mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;
use deblur_core::synthesis::SynthesisConfig;

use args::{Cli, Command};
use error::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Input("--threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    // Validate everything before touching the filesystem.
    let pipeline = match &cli.command {
        Command::Enhance { tuning, .. } | Command::Evaluate { tuning, .. } | Command::DumpConfig { tuning } => {
            Some(config::resolve(tuning)?)
        }
        Command::Synthesize { .. } => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numeric(format!("cannot start {threads} worker thread(s): {e}")))?;
    log::info!("{threads} worker thread(s)");

    pool.install(|| match cli.command {
        Command::Enhance { input, output, dump_plan, .. } => {
            commands::cmd_enhance(&input, &output, dump_plan.as_deref(), &pipeline.expect("resolved"))
        }
        Command::Synthesize { sharp_dir, out_dir, level, rng_seed, sigma_l, sigma_in_255_units } => {
            let mut cfg = SynthesisConfig { sigma_in_255_units, ..Default::default() };
            if let Some(s) = sigma_l {
                if !(s.is_finite() && s > 0.0) {
                    return Err(CliError::Input(format!("--sigma-l must be positive, got {s}")));
                }
                cfg.sigma_l = s;
            }
            commands::cmd_synthesize(&sharp_dir, &out_dir, level, rng_seed, &cfg)
        }
        Command::Evaluate { manifest, csv, .. } => {
            commands::cmd_evaluate(&manifest, csv.as_deref(), &pipeline.expect("resolved"), threads == 1)
        }
        Command::DumpConfig { .. } => {
            print!("{}", config::to_toml(&pipeline.expect("resolved")));
            Ok(())
        }
    })
}
