//! Command-line front end for the verification suites.
//!
//! Thin layer over `staticverify-core`: argument/config-file parsing
//! ([`config`]), suite drivers producing schema-versioned reports
//! ([`suite`]), and this module's exit-code policy:
//!
//! * `0` — the run completed and every check passed,
//! * `1` — the run completed and at least one check failed,
//! * `2` — usage or configuration error (bad flags, unknown config
//!   keys, out-of-range model parameters).

pub mod config;
pub mod suite;

use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use config::{Cli, Command};

/// Run the CLI with `args` (including `argv[0]`), returning the
/// process exit code.
pub fn run(args: Vec<String>) -> i32 {
    if let Err(msg) = apply_thread_cap() {
        eprintln!("error: {msg}");
        return 2;
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successful exits, not usage errors.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match run_parsed(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

/// Honor `STATICVERIFY_THREADS` before any parallel work starts.
fn apply_thread_cap() -> Result<(), String> {
    match std::env::var("STATICVERIFY_THREADS") {
        Ok(s) => match s.parse::<usize>() {
            Ok(n) if n > 0 => {
                staticverify_core::par::configure_threads(Some(n));
                Ok(())
            }
            _ => Err(format!(
                "STATICVERIFY_THREADS must be a positive integer, got '{s}'"
            )),
        },
        Err(_) => Ok(()),
    }
}

fn run_parsed(cli: Cli) -> Result<bool, String> {
    let (cfg, cmd) = config::resolve(cli)?;
    let started = Instant::now();
    let mut out = suite::run_command(&cfg, &cmd)?;
    if cfg.timing {
        out.report.wall_time_seconds = Some(started.elapsed().as_secs_f64());
    }

    // Sidecar payloads: the scan table asked for via `--csv`, and ODE
    // trajectory dumps.
    if let Command::ScanSds { csv: Some(path), .. } = &cmd {
        let table = out.scan_table.as_ref().expect("scan always builds its table");
        std::fs::write(path, table)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    if let Some((path, contents)) = &out.dump {
        std::fs::write(path, contents)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }

    let body = suite::render(&out, cfg.format);
    match &cfg.out {
        Some(path) => std::fs::write(path, &body)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{body}"),
    }
    Ok(out.report.overall_pass)
}
