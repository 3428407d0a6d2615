//! `penwalk` command-line frontend.
//!
//! Every subcommand writes a CSV (or a JSON report for `simtest`) with a
//! header row and a trailing `#` block listing the resolved parameters.
//! Exit status: 0 when every verdict passes, 1 when a verification fails,
//! 2 on usage or configuration errors.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

pub use output::{Grid, Output};

#[derive(Parser, Debug)]
#[command(name = "penwalk", version, about = "Penalised simple random walk: exact laws, martingales and Q-simulation")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Flat `key = value` file of defaults; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write artifacts into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Decimal values (17 significant digits) instead of exact num/den.
    #[arg(long, global = true)]
    pub float: bool,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Evaluate a closed-form law over a parameter grid.
    Law(LawArgs),
    /// Penalised ratio against its martingale limit as the horizon grows.
    Ratio(RatioArgs),
    /// Exhaustive one-step martingale check on every reachable state.
    VerifyMartingale(VerifyArgs),
    /// Closed form against an independent oracle over a grid.
    Identity(IdentityArgs),
    /// One trajectory of a Bessel walk or an h-transformed walk.
    Sample(SampleArgs),
    /// Monte Carlo test of a Q-law.
    Simtest(SimArgs),
    /// Asymptotic rate tables.
    Asym(AsymArgs),
}

#[derive(Args, Debug)]
pub struct LawArgs {
    /// srw-endpoint, srw-max, joint-max-endpoint, max-ratio-product,
    /// first-passage-max, ruin, tau-max, tau-bimax, gamma-hit,
    /// uniform-pre-max, corridor, corridor-trig, next-zero-max,
    /// bilateral-next-zero, q-joint, qstar-joint, q-max-tail
    pub name: String,
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<Grid>,
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<Grid>,
    /// Upper end of `k`, starting from 0, when `--k` is absent.
    #[arg(long)]
    pub kmax: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<Grid>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<Grid>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<Grid>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<Grid>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<Grid>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<Grid>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<Grid>,
    /// Penalty weight, e.g. `uniform:0..3`, `point:2`, `geometric:1/2`, `0:1/2 3:1/2`.
    #[arg(long)]
    pub weight: Option<String>,
}

#[derive(Args, Debug)]
pub struct RatioArgs {
    /// one-sided-max, last-zero-max, next-zero-max, bilateral-last-zero, corridor:A:B, barrier:A
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub weight: Option<String>,
    /// Event in F_n, e.g. `prefix:+-`, `x >= 0 & s <= 2`, `all`.
    #[arg(long, default_value = "all")]
    pub event: String,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub pmax: u32,
    /// First horizon (defaults to the largest of n and 1).
    #[arg(long)]
    pub pmin: Option<u32>,
    #[arg(long, default_value_t = 2)]
    pub step: u32,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub depth: u32,
    /// One row per state instead of the summary.
    #[arg(long)]
    pub rows: bool,
}

#[derive(Args, Debug)]
pub struct IdentityArgs {
    /// corridor, binomial-filter, next-zero-series, first-passage, tau-max,
    /// tau-bimax, gamma-hit, joint-max-endpoint, next-zero
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub nmax: Option<u32>,
    #[arg(long)]
    pub abmax: Option<u32>,
    #[arg(long)]
    pub pmax: Option<u32>,
    #[arg(long)]
    pub amax: Option<u32>,
    #[arg(long)]
    pub kmax: Option<u32>,
    #[arg(long)]
    pub cmax: Option<u32>,
    #[arg(long)]
    pub mmax: Option<u32>,
    #[arg(long)]
    pub weight: Option<String>,
    /// Tolerance for the float identities (relative for binomial-filter).
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// bessel3, bessel3-star or h-transform
    #[arg(long)]
    pub kernel: String,
    /// Family of the h-transform.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub start: i64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SimArgs {
    /// sg-density, sign-split, post-g, pre-max, bridge, kernel-frequency
    #[arg(long)]
    pub test: String,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Level for pre-max.
    #[arg(long, default_value_t = 5)]
    pub p: u32,
    /// walk, walk-bilateral or bilateral (pre-max).
    #[arg(long, default_value = "walk")]
    pub measure: String,
    /// Conditioning (gamma_g, S_g) for bridge.
    #[arg(long, default_value_t = 3)]
    pub a: u32,
    #[arg(long, default_value_t = 1)]
    pub b: i64,
    /// Chain for kernel-frequency: bessel3, bessel3-star or h-transform.
    #[arg(long, default_value = "h-transform")]
    pub kernel: String,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub start: i64,
    #[arg(long, default_value_t = 100)]
    pub min_visits: u64,
}

#[derive(Args, Debug)]
pub struct AsymArgs {
    /// central-binomial, corridor-survival, bilateral-rate
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub abmax: Option<u32>,
    #[arg(long)]
    pub alphamax: Option<u32>,
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Failure of a command: a usage problem (exit 2) or an I/O error.
#[derive(Debug)]
pub struct Usage(pub String);

impl From<penwalk::Error> for Usage {
    fn from(e: penwalk::Error) -> Self {
        Usage(e.to_string())
    }
}

impl From<std::io::Error> for Usage {
    fn from(e: std::io::Error) -> Self {
        Usage(e.to_string())
    }
}

impl From<String> for Usage {
    fn from(e: String) -> Self {
        Usage(e)
    }
}

/// Resolved parameters of a subcommand, in id order, for the metadata block.
fn resolved(m: &ArgMatches, sub: &clap::Command) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for id in m.ids() {
        let id = id.as_str();
        if matches!(id, "config" | "out") || sub.get_groups().any(|g| g.get_id() == id) {
            continue;
        }
        if let Some(vals) = m.get_raw(id) {
            let v: Vec<String> = vals.map(|v| v.to_string_lossy().into_owned()).collect();
            if !v.is_empty() {
                out.insert(id.replace('_', "-"), v.join(","));
            }
        }
    }
    out
}

fn init_workers() -> Result<(), Usage> {
    if let Ok(v) = std::env::var("PENWALK_WORKERS") {
        let n: usize =
            v.parse().map_err(|_| Usage(format!("PENWALK_WORKERS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Usage("PENWALK_WORKERS must be positive".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one invocation and returns the exit code.
pub fn run(argv: Vec<OsString>) -> i32 {
    let cmd = Cli::command();
    let argv = match config::expand(argv, &cmd) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let matches = match cmd.clone().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    let (sub, sub_m) = matches.subcommand().expect("subcommand is required");
    let mut meta = BTreeMap::from([("command".to_string(), sub.to_string())]);
    meta.extend(resolved(sub_m, cmd.find_subcommand(sub).expect("parsed subcommand exists")));
    let out = Output { dir: cli.out.clone(), float: cli.float, meta };
    let result = init_workers().and_then(|_| commands::dispatch(&cli.command, &out));
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}
