use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use deformscope::pipeline::{run_scenario, RunConfig, Scenario};
use deformscope::Error;

/// Run one deformscope scenario and write its CSV tables and JSON sidecar.
#[derive(Debug, Parser)]
#[command(name = "deformscope", version)]
struct Cli {
    /// fig2, fig5a, fig5b, fig5c, fig6, fig7, mie, ports, mmd or montecarlo.
    scenario: String,

    /// JSON file of dotted keys, e.g. {"geometry.waist": 1.5e-4}.
    #[arg(long)]
    config: PathBuf,

    /// Main CSV path; defaults to `<scenario>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    /// Override a config key, e.g. --set detection.probe_power=1e-5.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ConfigInvalid { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
        _ => 3,
    }
}

fn build(cli: &Cli) -> Result<RunConfig, Error> {
    let mut config = RunConfig::load(&cli.config)?;
    config.scenario = Scenario::parse(&cli.scenario)?;
    for s in &cli.overrides {
        config.set(s)?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_path = Some(out.to_string_lossy().into_owned());
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let cli = Cli::parse();
    let config = match build(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    match run_scenario(&config) {
        Ok(summary) => {
            for f in summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: scenario {}: {e}", config.scenario.name());
            ExitCode::from(exit_code(&e))
        }
    }
}
