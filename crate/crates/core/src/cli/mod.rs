//! Batch driver: `branchflow <check-data|solve|contraction|witness|integral-bound>`.
//!
//! Exit codes: 0 success, 2 a diagnostic failed (artifacts are still
//! written), 1 error.

mod config;
mod run;

use std::ffi::OsString;

use clap::Parser;

pub use config::{echo_config, parse_config, resolve, Cli, FileConfig, Flags, RunConfig, Subcommand, OUT_ENV};
pub use run::{run, Outcome};

/// Parse `args`, run, print a short summary and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let cfg = match resolve(cli, None, std::env::var_os(OUT_ENV).map(Into::into)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for c in &outcome.checks {
                println!(
                    "{} {:<32} {:.3e} (threshold {:.3e})",
                    match (c.pass, c.gating) {
                        (true, _) => "PASS",
                        (false, true) => "FAIL",
                        (false, false) => "WARN",
                    },
                    c.name,
                    c.value,
                    c.threshold
                );
            }
            println!("wrote {} artifacts to {}", outcome.artifacts.len(), cfg.out_dir.display());
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
