use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "ksearch",
    version,
    about = "Quantum-walk search for k marked sites in the k-excitation subspace"
)]
pub struct Cli {
    /// Worker threads for parameter sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// JSON file whose keys mirror the subcommand's flags; flags given on
    /// the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fidelity of the marked string against time.
    Fidelity(FidelityArgs),
    /// Large-n curves and their maxima for k = 1..kmax.
    Asymptotic(AsymptoticArgs),
    /// Total-time comparison of the single- and k-excitation protocols.
    Protocol(ProtocolArgs),
    /// Run the built-in consistency checks and write a JSON report.
    Verify(VerifyArgs),
    /// Re-run the computation recorded in an output file's manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineArg {
    Reduced,
    Sparse,
    BruteForce,
    /// Reduced and sparse engines on the same grid.
    Both,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated 1-based marked sites (default 1..k; required with --alpha).
    #[arg(long, value_delimiter = ',')]
    pub marked: Option<Vec<usize>>,
    /// Long-range coupling exponent.
    #[arg(long, conflicts_with = "all_to_all")]
    pub alpha: Option<f64>,
    /// Uniform unit couplings (the default).
    #[arg(long)]
    #[serde(default)]
    pub all_to_all: bool,
    #[arg(long, conflicts_with = "optimize_gamma")]
    pub gamma: Option<f64>,
    /// `lo,hi` or `auto`.
    #[arg(long)]
    pub optimize_gamma: Option<String>,
    /// End of the time window (default 10·√n).
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    /// Output path prefix; `.csv` and `.json` are appended.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticArgs {
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Window in rescaled time t/√n (default 4π).
    #[arg(long)]
    pub tau_max: Option<f64>,
    /// Samples per curve.
    #[arg(long)]
    pub points: Option<usize>,
    /// Output path prefix for `_table.csv`, `_curves.csv` and `.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolArgs {
    /// Excitation numbers, e.g. `1:5` or `2,3,7`.
    #[arg(long)]
    pub k_range: Option<String>,
    /// Spin counts, e.g. `10:100:10` or `16,64,inf`; `inf` adds large-n rows.
    #[arg(long)]
    pub n_range: Option<String>,
    #[arg(long)]
    pub eps_s: Option<f64>,
    #[arg(long)]
    pub eps_r: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Systems up to n = 8 (the default).
    #[arg(long, conflicts_with = "full")]
    #[serde(default)]
    pub quick: bool,
    /// Systems up to n = 12, including the n = 10 engine overlay.
    #[arg(long)]
    #[serde(default)]
    pub full: bool,
    /// Seed for choosing the replayed outputs (default: random).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path prefix for the `.json` report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A CSV or JSON file written by this tool.
    pub file: PathBuf,
    /// Output path prefix (default: overwrite the original outputs).
    #[arg(long, conflicts_with = "check")]
    pub out: Option<PathBuf>,
    /// Re-run into a scratch directory and compare with the file instead.
    #[arg(long)]
    pub check: bool,
}

/// Overlays command-line flags on a config object. Unset options and false
/// switches on the command line leave the config value in place.
pub fn merge_config<T: Serialize + DeserializeOwned>(
    cli: T,
    config: Option<&Value>,
) -> CliResult<T> {
    let Some(config) = config else { return Ok(cli) };
    let Value::Object(cfg) = config else {
        return Err(CliError::Format(
            "config file must hold a JSON object".into(),
        ));
    };
    let mut merged = serde_json::Map::new();
    for (k, v) in cfg {
        if k != "jobs" {
            merged.insert(k.replace('-', "_"), v.clone());
        }
    }
    let Value::Object(flags) =
        serde_json::to_value(cli).map_err(|e| CliError::Format(e.to_string()))?
    else {
        unreachable!("argument structs serialize to objects")
    };
    for (k, v) in flags {
        if !matches!(v, Value::Null | Value::Bool(false)) {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Format(format!("config: {e}")))
}

pub fn read_config(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

fn parse_count(tok: &str, what: &str) -> CliResult<usize> {
    tok.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad {what} `{tok}`")))
}

/// Comma-separated items, each a number or an inclusive `a:b[:step]` range.
/// Returns the sorted distinct values and whether `inf` appeared.
pub fn parse_range(spec: &str, what: &str) -> CliResult<(Vec<usize>, bool)> {
    let mut out = Vec::new();
    let mut inf = false;
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("inf") {
            inf = true;
            continue;
        }
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(parse_count(x, what)?),
            [a, b] | [a, b, _] => {
                let (a, b) = (parse_count(a, what)?, parse_count(b, what)?);
                let step = match parts.get(2) {
                    Some(s) => parse_count(s, what)?,
                    None => 1,
                };
                if step == 0 || a > b {
                    return Err(CliError::Usage(format!("bad {what} range `{item}`")));
                }
                out.extend((a..=b).step_by(step));
            }
            _ => return Err(CliError::Usage(format!("bad {what} range `{item}`"))),
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() && !inf {
        return Err(CliError::Usage(format!("empty {what} range")));
    }
    Ok((out, inf))
}

pub fn parse_gamma_range(spec: &str) -> CliResult<Option<(f64, f64)>> {
    if spec.trim().eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    let bad = || {
        CliError::Usage(format!(
            "--optimize-gamma expects `lo,hi` or `auto`, got `{spec}`"
        ))
    };
    let (lo, hi) = spec.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok(Some((lo, hi)))
}
