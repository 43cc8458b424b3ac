use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use spectral_boltzmann::config::{load_config, Cli};
use spectral_boltzmann::runner::{exit_code, run_experiment};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    if let Err(e) = Cli::try_parse_from(&args) {
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            e.exit();
        }
    }
    let result = load_config(&args).and_then(|cfg| run_experiment(&cfg));
    match &result {
        Ok(summary) => {
            for p in &summary.outputs {
                eprintln!("wrote {}", p.display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
