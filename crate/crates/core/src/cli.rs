//! Command-line surface: `experiment` runs a scenario from a TOML file and
//! writes `rows.csv`, `summary.csv` and `manifest.json`; `compute` prints a
//! single quantity with 12 significant digits.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::complexity::{
    dudley_gamma2, fixed_point_lambda, theorem_c_profile, MonotoneMap, ProfileConstants, DEFAULT_DUDLEY_SCALES,
};
use crate::concentration::psi_alpha_norm;
use crate::error::{Error, Result};
use crate::fmt::format_sig;
use crate::harness::{run_scenario, write_rows_csv, write_summary_csv, ScenarioConfig};
use crate::solvers::{massart_rate, rho_n_theorem_a, rho_n_theorem_b, theorem_c_penalty};

pub const SEED_ENV: &str = "ORACLEBENCH_SEED";
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

const PRINT_DIGITS: usize = 12;

#[derive(Debug, Parser)]
#[command(name = "oraclebench", version, about = "Oracle-inequality experiments and complexity calculators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario described by a configuration file.
    Experiment(ExperimentArgs),
    /// Print a single quantity.
    Compute {
        #[command(subcommand)]
        quantity: Quantity,
    },
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override a configuration field, e.g. `--set replications=100` or
    /// `--set noise.sd=0.5`. Values are parsed as TOML, falling back to a string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PhiKind {
    Sqrt,
    Const,
}

#[derive(Debug, Subcommand)]
enum Quantity {
    /// Empirical psi_alpha norm of the numbers in a file.
    PsiNorm {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// `c0 K^q (log n)^((4q-2)/q) (log d)^2 (x + log n)`.
    Penalty {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long)]
        kd: f64,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
    },
    /// ERM residual `max(lambda*, c0 (b_n + B_n / eps) x / (n eps))`.
    RhoA {
        #[arg(long)]
        lambda_star: f64,
        #[arg(long)]
        bn: f64,
        #[arg(long = "big-bn")]
        big_bn: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
    },
    /// RERM residual at radius `r` for the closed-form l1-ball profile.
    RhoB {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        d: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long)]
        kd: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
    },
    /// Dudley upper bound on gamma_2 of the points in a file, one point per line.
    Dudley {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DUDLEY_SCALES)]
        scales: usize,
    },
    /// Smallest `lambda` with `phi(lambda) <= (eps / 4) lambda`.
    FixedPoint {
        #[arg(long)]
        epsilon: f64,
        /// `scale * sqrt(lambda)` or the constant `scale`.
        #[arg(long, conflicts_with = "phi_table", required_unless_present = "phi_table")]
        phi: Option<PhiKind>,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Two columns `lambda phi(lambda)`, interpolated linearly.
        #[arg(long)]
        phi_table: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        bracket_hi: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// `c0 x V log(en / V) / (eps^2 n)`.
    MassartRate {
        #[arg(long)]
        v: f64,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
    },
}

/// Provenance of one `experiment` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub config_path: PathBuf,
    pub output_dir: PathBuf,
    pub tool_version: String,
    pub master_seed: u64,
    pub scenario: String,
    pub started_at: String,
    pub finished_at: String,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Never panics on bad input.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Experiment(args) => experiment(&args, std::env::var(SEED_ENV).ok()).map(|dir| {
            let _ = writeln!(out, "wrote {}", dir.display());
        }),
        Command::Compute { quantity } => compute(&quantity).map(|v| {
            let _ = writeln!(out, "{}", format_sig(v, PRINT_DIGITS));
        }),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Validation and argument errors map to 2, everything else to 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::InvalidProfile(_) => EXIT_USAGE,
        Error::Bracket { .. } | Error::IterationLimit { .. } | Error::Io(_) => EXIT_RUNTIME,
    }
}

/// Reads the file, applies the seed override then the `key=value`
/// overrides, and validates.
pub fn load_config(path: &Path, overrides: &[String], seed_env: Option<&str>) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().trim().to_string()))?;
    if let Some(seed) = seed_env {
        let seed: u64 = seed
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("masterSeed: {SEED_ENV}={seed:?} is not an unsigned integer")))?;
        let seed =
            i64::try_from(seed).map_err(|_| Error::Config(format!("masterSeed: {SEED_ENV} must be below 2^63")))?;
        table.insert("masterSeed".into(), toml::Value::Integer(seed));
    }
    for entry in overrides {
        apply_override(&mut table, entry)?;
    }
    ScenarioConfig::from_table(table)
}

fn apply_override(table: &mut toml::Table, entry: &str) -> Result<()> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {entry:?} is not of the form key=value")))?;
    let key = key.trim();
    let value = parse_value(raw.trim());
    let mut path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key {key:?} is malformed")));
    }
    let last = path.pop().expect("split yields one part");
    let mut node = table;
    for part in path {
        let child = node.entry(part).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = child.as_table_mut().ok_or_else(|| Error::Config(format!("{key}: {part} is not a table")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn experiment(args: &ExperimentArgs, seed_env: Option<String>) -> Result<PathBuf> {
    let started_at = timestamp();
    let config = load_config(&args.config, &args.overrides, seed_env.as_deref())?;
    let output = run_scenario(&config, args.workers)?;
    fs::create_dir_all(&args.out)?;
    let mut rows = BufWriter::new(fs::File::create(args.out.join("rows.csv"))?);
    write_rows_csv(&mut rows, &output.rows)?;
    rows.flush()?;
    let mut summary = BufWriter::new(fs::File::create(args.out.join("summary.csv"))?);
    write_summary_csv(&mut summary, output.scenario, &output.series)?;
    summary.flush()?;
    let manifest = RunManifest {
        config_path: args.config.clone(),
        output_dir: args.out.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: config.master_seed,
        scenario: config.scenario.name().to_string(),
        started_at,
        finished_at: timestamp(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(args.out.join("manifest.json"), json + "\n")?;
    Ok(args.out.clone())
}

fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// All numbers in a whitespace- or comma-separated file, one row per
/// nonempty line.
fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        let row = fields
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("{}:{}: {f:?} is not a number", path.display(), line_no + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn compute(quantity: &Quantity) -> Result<f64> {
    match *quantity {
        Quantity::PsiNorm { ref file, alpha, tol } => {
            let values: Vec<f64> = read_rows(file)?.concat();
            Ok(psi_alpha_norm(&values, alpha, tol)?.value)
        }
        Quantity::Penalty { n, d, x, q, kd, c0 } => theorem_c_penalty(n, d, x, q, kd, c0),
        Quantity::RhoA { lambda_star, bn, big_bn, epsilon, x, n, c0 } => {
            Ok(rho_n_theorem_a(lambda_star, bn, big_bn, epsilon, x, n, c0)?.value)
        }
        Quantity::RhoB { n, d, q, kd, epsilon, r, x, c0 } => {
            let profile = theorem_c_profile(n, d, q, kd, epsilon, ProfileConstants { c0, ..Default::default() })?;
            rho_n_theorem_b(&profile, r, x, c0)
        }
        Quantity::Dudley { ref file, scales } => dudley_gamma2(&read_rows(file)?, scales),
        Quantity::FixedPoint { epsilon, phi, scale, ref phi_table, bracket_hi, tol } => {
            let phi: Box<dyn Fn(f64) -> f64> = match (phi, phi_table) {
                (_, Some(path)) => {
                    let rows = read_rows(path)?;
                    if rows.iter().any(|r| r.len() != 2) {
                        return Err(Error::InvalidInput("phi table rows must have two columns".into()));
                    }
                    let map = MonotoneMap::tabulated(
                        rows.iter().map(|r| r[0]).collect(),
                        rows.iter().map(|r| r[1]).collect(),
                    )?;
                    Box::new(move |l| map.eval(l))
                }
                (Some(PhiKind::Sqrt), None) => Box::new(move |l: f64| scale * l.sqrt()),
                (Some(PhiKind::Const), None) => Box::new(move |_| scale),
                (None, None) => return Err(Error::InvalidInput("fixed-point needs --phi or --phi-table".into())),
            };
            fixed_point_lambda(phi, epsilon, bracket_hi, tol)
        }
        Quantity::MassartRate { v, n, x, epsilon, c0 } => massart_rate(v, n, x, epsilon, c0),
    }
}
