//! Command-line front end: dataset generation, repeated benchmark runs,
//! parameter sweeps, robustness tables and tail diagnostics.

pub mod bench;
pub mod commands;
pub mod error;
pub mod options;

use std::ffi::OsString;

use clap::Parser;

pub use bench::{BenchResult, BenchTimings};
pub use error::{CliError, Result};
pub use options::{Algorithm, Cli, Command, FileConfig};

/// Parses `args` and runs the command. Returns the process exit status.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Synth(mut a) => {
            a.fill(&file);
            commands::synth(&a)
        }
        Command::Cluster(mut a) => {
            a.fill(&file);
            commands::cluster(&a)
        }
        Command::Sweep(mut a) => {
            a.fill(&file);
            commands::sweep(&a)
        }
        Command::Robust(mut a) => {
            a.fill(&file);
            commands::robust(&a)
        }
        Command::Fitdiag(mut a) => {
            a.fill(&file);
            let r = commands::fitdiag(&a)?;
            // with no --output the points already occupy stdout
            if a.out.output.is_some() {
                println!("correlation,{r}");
            } else {
                eprintln!("correlation,{r}");
            }
            Ok(())
        }
    }
}
