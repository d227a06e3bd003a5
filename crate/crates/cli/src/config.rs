//! Run configuration: command-line interface, flat config files, and
//! the merge of the two (flags win over file values, file values win
//! over defaults).
//!
//! Config files are flat `key = value` text with `#` comments. The
//! accepted keys mirror the run-level configuration: `suite`,
//! `triples`, `samples`, `seed`, `path`, `format`, `out`, and
//! `tol.<check>` tolerance overrides. Unknown keys — including
//! unknown check names under `tol.` — are rejected, as are duplicate
//! keys.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::suite;

/// Report rendering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "text",
        }
    }
}

/// Derivative path for checks that offer both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DerivPath {
    Analytic,
    Fd,
}

/// Inequality sweep selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Kato,
    Det,
    Both,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::Kato => "kato",
            Which::Det => "det",
            Which::Both => "both",
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "staticverify",
    version,
    about = "Verification suites for static positive-curvature triples"
)]
pub struct Cli {
    /// Flat `key = value` config file; command-line flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Sample count for randomized sweeps (default 100; `ineq`
    /// defaults to 100000).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Base seed; every check derives its own sample stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Derivative path for checks that offer both.
    #[arg(long, global = true, value_enum)]
    pub path: Option<DerivPath>,
    /// Tolerance override `check=value`; repeatable. Overrides are
    /// echoed into the matching report metadata.
    #[arg(long = "tol", global = true, value_name = "CHECK=VALUE")]
    pub tol: Vec<String>,
    /// Record wall time in the report. Off by default so that
    /// repeated runs produce byte-identical reports.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Run the identity and lift suites on named triples.
    Verify {
        /// Triple specs: hemisphere, cylinder, sds:<mass>, warped:<file>.
        triples: Vec<String>,
    },
    /// Scan the boundary-data ratio over the admissible mass range.
    ScanSds {
        /// Grid size (log-spaced in mass).
        #[arg(long, default_value_t = 256)]
        points: usize,
        /// Lower mass endpoint (default 1e-5).
        #[arg(long)]
        m_min: Option<f64>,
        /// Upper mass endpoint (default just under the degenerate mass).
        #[arg(long)]
        m_max: Option<f64>,
        /// Also write the scan table as CSV to this path.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Minimize the modified quotient over radial test functions.
    Yamabe {
        /// Triple spec (radial models only).
        #[arg(default_value = "cylinder")]
        triple: String,
        /// Grid nodes for the minimization (at least 128).
        #[arg(long, default_value_t = 512)]
        nodes: usize,
        /// Also run the test-function decay scan over the built-in
        /// epsilon ladder (sds triples only).
        #[arg(long)]
        decay: bool,
    },
    /// Random sweeps of the pointwise algebraic inequalities.
    Ineq {
        /// Which inequality family to sweep.
        #[arg(long, value_enum, default_value_t = Which::Both)]
        which: Which,
    },
    /// Model ODE experiments.
    Ode {
        #[command(subcommand)]
        which: OdeCommand,
    },
    /// Run the full default suite: verify on the canonical triples,
    /// the mass scan, the quotient minimizations, the inequality
    /// sweeps, and the ODE grid.
    Report,
}

#[derive(Subcommand, Debug, Clone)]
pub enum OdeCommand {
    /// Integrate one profile orbit and evaluate the closure gap.
    Profile {
        /// Orbit constant (positive).
        #[arg(long)]
        c: f64,
        /// Starting value (positive, away from the stationary point).
        #[arg(long)]
        x0: f64,
        /// Trajectory length for --dump (the closure evaluation
        /// integrates to its own horizon).
        #[arg(long, default_value_t = 40.0)]
        umax: f64,
        /// Dump the trajectory: JSON records under --format json,
        /// otherwise CSV `u,x,y`.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
    },
    /// Solve the singular radial model equation from the regular axis.
    Singular {
        /// Zeroth-order coefficient.
        #[arg(long)]
        lambda: f64,
        /// Value at the axis.
        #[arg(long)]
        alpha0: f64,
        /// Right endpoint.
        #[arg(long, default_value_t = 1.0)]
        smax: f64,
        /// Constant source term.
        #[arg(long, default_value_t = 0.0)]
        f: f64,
        /// Mesh nodes (graded toward the axis; at least 64).
        #[arg(long, default_value_t = 20001)]
        nodes: usize,
        /// Dump the solution: JSON records under --format json,
        /// otherwise CSV `s,alpha,dalpha`.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
    },
}

impl Command {
    pub fn suite_name(&self) -> &'static str {
        match self {
            Command::Verify { .. } => "verify",
            Command::ScanSds { .. } => "scan-sds",
            Command::Yamabe { .. } => "yamabe",
            Command::Ineq { .. } => "ineq",
            Command::Ode { .. } => "ode",
            Command::Report => "report",
        }
    }
}

/// Triples the default suites run on.
pub const DEFAULT_TRIPLES: [&str; 5] =
    ["hemisphere", "cylinder", "sds:0.05", "sds:0.1", "sds:0.15"];

/// Effective run-level configuration after merging defaults, config
/// file, and command-line flags.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub triples: Vec<String>,
    pub overrides: BTreeMap<String, f64>,
    /// Sample count if set anywhere; suites apply their own defaults.
    pub samples: Option<usize>,
    pub seed: u64,
    pub fd_path: bool,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub timing: bool,
}

/// Parse flat `key = value` text. Comments start with `#`; blank
/// lines are skipped; duplicate keys are errors.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(format!("config line {}: duplicate key '{key}'", i + 1));
        }
    }
    Ok(map)
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("config key '{key}': cannot parse '{value}'"))
}

/// Validate and type the raw config-file map.
#[derive(Debug)]
struct FileConfig {
    suite: Option<String>,
    triples: Option<Vec<String>>,
    samples: Option<usize>,
    seed: Option<u64>,
    fd_path: Option<bool>,
    format: Option<Format>,
    out: Option<PathBuf>,
    overrides: BTreeMap<String, f64>,
}

fn typed_file_config(map: &BTreeMap<String, String>) -> Result<FileConfig, String> {
    let mut fc = FileConfig {
        suite: None,
        triples: None,
        samples: None,
        seed: None,
        fd_path: None,
        format: None,
        out: None,
        overrides: BTreeMap::new(),
    };
    for (key, value) in map {
        match key.as_str() {
            "suite" => fc.suite = Some(value.clone()),
            "triples" => {
                fc.triples = Some(value.split_whitespace().map(String::from).collect())
            }
            "samples" => fc.samples = Some(parse_as(key, value)?),
            "seed" => fc.seed = Some(parse_as(key, value)?),
            "path" => {
                fc.fd_path = Some(match value.as_str() {
                    "analytic" => false,
                    "fd" => true,
                    _ => {
                        return Err(format!(
                            "config key 'path': expected analytic or fd, got '{value}'"
                        ))
                    }
                })
            }
            "format" => {
                fc.format = Some(match value.as_str() {
                    "json" => Format::Json,
                    "csv" => Format::Csv,
                    "text" => Format::Text,
                    _ => {
                        return Err(format!(
                            "config key 'format': expected json, csv, or text, got '{value}'"
                        ))
                    }
                })
            }
            "out" => fc.out = Some(PathBuf::from(value)),
            _ => {
                if let Some(check) = key.strip_prefix("tol.") {
                    if !suite::known_check(check) {
                        return Err(format!(
                            "config key '{key}': unknown check name '{check}'"
                        ));
                    }
                    fc.overrides.insert(check.to_string(), parse_as(key, value)?);
                } else {
                    return Err(format!("unknown config key '{key}'"));
                }
            }
        }
    }
    Ok(fc)
}

fn parse_tol_flag(spec: &str) -> Result<(String, f64), String> {
    let (check, value) = spec
        .split_once('=')
        .ok_or_else(|| format!("--tol '{spec}': expected CHECK=VALUE"))?;
    let (check, value) = (check.trim(), value.trim());
    if !suite::known_check(check) {
        return Err(format!("--tol '{spec}': unknown check name '{check}'"));
    }
    let v: f64 = value
        .parse()
        .map_err(|_| format!("--tol '{spec}': cannot parse '{value}' as a number"))?;
    Ok((check.to_string(), v))
}

/// Map a config-file `suite` value to a default-shaped command.
fn suite_to_command(name: &str) -> Result<Command, String> {
    Ok(match name {
        "verify" => Command::Verify { triples: vec![] },
        "scan-sds" => Command::ScanSds { points: 256, m_min: None, m_max: None, csv: None },
        "yamabe" => Command::Yamabe { triple: "cylinder".into(), nodes: 512, decay: false },
        "ineq" => Command::Ineq { which: Which::Both },
        "report" => Command::Report,
        "ode" => {
            return Err(
                "the ode suite needs command-line parameters (run `ode profile` or `ode singular`)"
                    .into(),
            )
        }
        _ => return Err(format!("config key 'suite': unknown suite '{name}'")),
    })
}

/// Merge defaults, config file, and flags into the effective
/// configuration plus the command to run.
pub fn resolve(cli: Cli) -> Result<(RunConfig, Command), String> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
            typed_file_config(&parse_config_text(&text)?)?
        }
        None => typed_file_config(&BTreeMap::new())?,
    };

    let mut overrides = file.overrides;
    for spec in &cli.tol {
        let (check, value) = parse_tol_flag(spec)?;
        overrides.insert(check, value);
    }

    let command = match cli.command {
        Some(c) => c,
        None => match &file.suite {
            Some(name) => suite_to_command(name)?,
            None => {
                return Err(
                    "no suite selected (pass a subcommand or set `suite = ...` in the config file)"
                        .into(),
                )
            }
        },
    };

    // Triple list: command-line positional > file > canonical set.
    let command = match command {
        Command::Verify { triples } if triples.is_empty() => Command::Verify {
            triples: file
                .triples
                .clone()
                .unwrap_or_else(|| DEFAULT_TRIPLES.iter().map(|s| s.to_string()).collect()),
        },
        other => other,
    };
    let triples = match &command {
        Command::Verify { triples } => triples.clone(),
        _ => DEFAULT_TRIPLES.iter().map(|s| s.to_string()).collect(),
    };

    let samples = cli.samples.or(file.samples);
    if samples == Some(0) {
        return Err("samples must be at least 1".into());
    }

    let cfg = RunConfig {
        triples,
        overrides,
        samples,
        seed: cli.seed.or(file.seed).unwrap_or(7),
        fd_path: match cli.path {
            Some(DerivPath::Fd) => true,
            Some(DerivPath::Analytic) => false,
            None => file.fd_path.unwrap_or(false),
        },
        format: cli.format.or(file.format).unwrap_or(Format::Text),
        out: cli.out.or(file.out),
        timing: cli.timing,
    };
    Ok((cfg, command))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("staticverify").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn file_text_parses_comments_blanks_and_pairs() {
        let m = parse_config_text("# run\n\nsamples = 42\nseed=9\ntol.static = 1e-5\n").unwrap();
        assert_eq!(m["samples"], "42");
        assert_eq!(m["seed"], "9");
        assert_eq!(m["tol.static"], "1e-5");
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn malformed_lines_and_duplicates_are_rejected() {
        assert!(parse_config_text("samples 42").unwrap_err().contains("line 1"));
        assert!(parse_config_text("a = 1\na = 2").unwrap_err().contains("duplicate"));
        assert!(parse_config_text("= 3").unwrap_err().contains("empty key"));
    }

    #[test]
    fn unknown_keys_and_checks_are_rejected() {
        let m = parse_config_text("bogus = 1").unwrap();
        assert!(typed_file_config(&m).unwrap_err().contains("unknown config key"));
        let m = parse_config_text("tol.bogus = 1").unwrap();
        assert!(typed_file_config(&m).unwrap_err().contains("unknown check name"));
        assert!(parse_tol_flag("bogus=1").unwrap_err().contains("unknown check name"));
        assert!(parse_tol_flag("static").unwrap_err().contains("CHECK=VALUE"));
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "suite = verify\nsamples = 10\nseed = 3\nformat = json\n").unwrap();
        let mut c = cli(&["--samples", "25", "verify", "cylinder"]);
        c.config = Some(path.clone());
        let (cfg, cmd) = resolve(c).unwrap();
        assert_eq!(cfg.samples, Some(25)); // flag wins
        assert_eq!(cfg.seed, 3); // file wins over default
        assert_eq!(cfg.format, Format::Json);
        assert!(matches!(cmd, Command::Verify { ref triples } if triples == &["cylinder"]));

        // No subcommand: the file's suite selection applies, and the
        // default triple set fills in.
        let mut c = cli(&[]);
        c.config = Some(path);
        let (cfg, cmd) = resolve(c).unwrap();
        assert!(matches!(cmd, Command::Verify { ref triples } if triples.len() == 5));
        assert_eq!(cfg.samples, Some(10));
    }

    #[test]
    fn missing_suite_everywhere_is_a_usage_error() {
        let c = cli(&[]);
        assert!(resolve(c).unwrap_err().contains("no suite selected"));
    }

    #[test]
    fn tolerance_flags_merge_over_file_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "tol.static = 1e-3\ntol.bochner = 1e-3\n").unwrap();
        let mut c = cli(&["--tol", "static=1e-9", "verify"]);
        c.config = Some(path);
        let (cfg, _) = resolve(c).unwrap();
        assert_eq!(cfg.overrides["static"], 1e-9);
        assert_eq!(cfg.overrides["bochner"], 1e-3);
    }
}
