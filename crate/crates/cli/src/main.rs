mod config;
mod run;

use std::process::ExitCode;

use clap::Parser;

use config::{resolve, Cli, Command, SEED_ENV};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(2),
            };
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = match resolve(cli, env_seed.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let workers = match cfg.command {
        Command::Bench => cfg
            .knobs
            .workers
            .or(if cfg.knobs.parallel { None } else { Some(1) }),
        _ => cfg.knobs.workers,
    };
    if let Some(w) = workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
        {
            eprintln!("error: could not size worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run::execute(&cfg) {
        Ok(o) if o.failures > 0 => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
