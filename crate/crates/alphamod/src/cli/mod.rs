//! Command-line front end: parses flags or a JSON config into a [`RunConfig`],
//! runs it, writes artifacts atomically and prints a manifest.

pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::experiments::{bump_grid, make_annulus_bump, scaling_sweep, SweepKind, SweepResult};
use crate::frequency_partition::{build_bapu, build_bapu_with_band, AlphaParams};
use crate::nls4::{energy_report, gaussian_datum, gronwall_monitor, solve, with_l2_norm, Scheme, SolverConfig};
use crate::propagator::{propagate, TimeQuadrature};
use crate::regions::{necessity_threshold, raster_csv, region_grid, sufficient_threshold, Regime};
use crate::spaces::{alpha_mod_norm, lp_norm, sobolev_norm, ExponentTuple, FreqGrid, GridFunction};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "alphamod", version, about = "Alpha-modulation partitions, fractional Schrodinger propagators and local smoothing exponents")]
struct Cli {
    /// Read the whole run from a JSON file instead of flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also write the manifest to this path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

/// One run: a command with its parameters plus the seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Build an alpha-BAPU and export metadata (JSON) and window samples (binary).
    Bapu(BapuArgs),
    /// Evaluate a norm of a stored grid function, one CSV row.
    Norm(NormArgs),
    /// Apply S_beta(t) to a stored grid function.
    Propagate(PropagateArgs),
    /// Raster of sufficient/necessary thresholds over (1/p, 1/q).
    Regions(RegionsArgs),
    /// Scaling sweep along one test family.
    Sweep(SweepArgs),
    /// Solve the cubic fourth-order NLS and report conserved quantities.
    Nls4(Nls4Args),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

fn default_d() -> usize {
    1
}
fn default_n() -> usize {
    1024
}
fn default_band() -> f64 {
    8.0
}
fn default_q() -> f64 {
    2.0
}
fn default_resolution() -> usize {
    101
}
fn default_n_t() -> usize {
    64
}
fn default_t1() -> f64 {
    1.0
}
fn default_bump_n() -> usize {
    4096
}
fn default_bump_band() -> f64 {
    2.0
}
fn default_scheme() -> Scheme {
    Scheme::Splitstep
}
fn default_nls_n() -> usize {
    512
}
fn default_sigma() -> f64 {
    1.0
}
fn default_margin() -> f64 {
    0.5
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BapuArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_d")]
    pub d: usize,
    /// Grid points per axis.
    #[arg(long, default_value_t = 1024)]
    #[serde(default = "default_n")]
    pub n: usize,
    /// Half-width of the frequency band; the box length is pi * n / band.
    #[arg(long, default_value_t = 8.0)]
    #[serde(default = "default_band")]
    pub band: f64,
    /// Cover only |xi| <= this (default: whole band).
    #[arg(long)]
    #[serde(default)]
    pub cover: Option<f64>,
    /// Metadata JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Window samples, little-endian f64, one dense window after another.
    #[arg(long)]
    pub samples: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum NormKind {
    Lp,
    Sobolev,
    AlphaMod,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormArgs {
    /// Grid function file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: NormKind,
    /// Integrability exponent; `inf` is accepted.
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    #[serde(default = "default_q")]
    pub q: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    #[serde(default)]
    pub s: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    #[serde(default)]
    pub alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub beta: f64,
    /// Raster points per axis, at least 11.
    #[arg(long, default_value_t = 101)]
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum FamilyArg {
    ModulatedBump,
    ScaledBump,
    PacketSum,
}

impl From<FamilyArg> for SweepKind {
    fn from(f: FamilyArg) -> SweepKind {
        match f {
            FamilyArg::ModulatedBump => SweepKind::ModulatedBump,
            FamilyArg::ScaledBump => SweepKind::ScaledBump,
            FamilyArg::PacketSum => SweepKind::PacketSum,
        }
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_d")]
    pub d: usize,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    #[serde(default)]
    pub s: f64,
    /// Defaults to 1 - beta/2 for beta <= 2 and 0 above.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Sweep values (k for modulated bumps, lambda otherwise), geometric, at least 4.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambdas: Vec<f64>,
    /// Time nodes on [0, t1].
    #[arg(long, default_value_t = 64)]
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "default_t1")]
    pub t1: f64,
    /// Grid points of the base bump.
    #[arg(long, default_value_t = 4096)]
    #[serde(default = "default_bump_n")]
    pub bump_n: usize,
    #[arg(long, default_value_t = 2.0)]
    #[serde(default = "default_bump_band")]
    pub bump_band: f64,
    /// One CSV row per sweep value.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON fit report (default: the CSV path with a .json extension).
    #[arg(long)]
    #[serde(default)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nls4Args {
    /// Initial datum file; without it a Gaussian is generated.
    #[arg(long)]
    #[serde(default)]
    pub u0: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Scheme::Splitstep)]
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[arg(long)]
    pub dt: f64,
    /// Final time.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Points of the generated Gaussian.
    #[arg(long, default_value_t = 512)]
    #[serde(default = "default_nls_n")]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Rescale the datum to this L2 norm.
    #[arg(long)]
    #[serde(default)]
    pub l2_norm: Option<f64>,
    /// Relative slack of the Gronwall monitor.
    #[arg(long, default_value_t = 0.5)]
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Trajectory file.
    #[arg(long)]
    pub out: PathBuf,
    /// Energy CSV.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub only: Vec<u32>,
    /// JSON report of every criterion.
    #[arg(long)]
    #[serde(default)]
    pub report: Option<PathBuf>,
}

/// Parses command-line arguments (program name first).
pub fn parse_args<I, T>(args: I) -> Result<(RunConfig, Option<PathBuf>)>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Validation(e.to_string()))?;
    let config = match (cli.config, cli.command) {
        (Some(path), None) => parse_json_config(&std::fs::read_to_string(path)?)?,
        (Some(_), Some(_)) => return invalid("give either --config or a subcommand, not both"),
        (None, Some(command)) => RunConfig { seed: cli.seed, command },
        (None, None) => return invalid("missing subcommand (see --help)"),
    };
    validate(&config)?;
    Ok((config, cli.manifest))
}

/// Parses a JSON config: `{"command": "...", "seed": 0, ...fields of that command}`.
pub fn parse_json_config(text: &str) -> Result<RunConfig> {
    let mut value: serde_json::Value = serde_json::from_str(text)?;
    let Some(map) = value.as_object_mut() else {
        return invalid("config must be a JSON object");
    };
    let seed = match map.remove("seed") {
        None => 0,
        Some(v) => match v.as_u64() {
            Some(s) => s,
            None => return invalid("seed must be a nonnegative integer"),
        },
    };
    let command: Command = serde_json::from_value(value)?;
    let config = RunConfig { seed, command };
    validate(&config)?;
    Ok(config)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return invalid(format!("{name} must be positive and finite, got {v}"));
    }
    Ok(())
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if v.is_nan() || v < 1.0 {
        return invalid(format!("{name} must lie in [1, inf], got {v}"));
    }
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if d != 1 && d != 2 {
        return invalid(format!("d must be 1 or 2, got {d}"));
    }
    Ok(())
}

/// Checks parameters against the preconditions of the target module.
pub fn validate(config: &RunConfig) -> Result<()> {
    match &config.command {
        Command::Bapu(a) => {
            check_dim(a.d)?;
            AlphaParams::new(a.alpha, a.d)?;
            check_positive("band", a.band)?;
            if let Some(c) = a.cover {
                check_positive("cover", c)?;
                if c > a.band {
                    return invalid(format!("cover {c} exceeds the band {}", a.band));
                }
            }
            if a.n < 8 {
                return invalid(format!("n must be at least 8, got {}", a.n));
            }
        }
        Command::Norm(a) => {
            check_exponent("p", a.p)?;
            check_exponent("q", a.q)?;
            if a.kind == NormKind::AlphaMod && !(a.alpha < 1.0) {
                return invalid(format!("alpha must be below 1, got {}", a.alpha));
            }
        }
        Command::Propagate(a) => {
            check_positive("beta", a.beta)?;
            if !a.t.is_finite() {
                return invalid("t must be finite");
            }
        }
        Command::Regions(a) => {
            check_dim(a.d)?;
            Regime::of(a.beta)?;
            if a.resolution < 11 {
                return invalid(format!("resolution must be at least 11, got {}", a.resolution));
            }
        }
        Command::Sweep(a) => {
            check_dim(a.d)?;
            Regime::of(a.beta)?;
            check_exponent("p", a.p)?;
            check_exponent("q", a.q)?;
            ExponentTuple::new(a.d, a.beta, a.p, a.q, a.s, sweep_alpha(a))?;
            check_positive("t1", a.t1)?;
            check_positive("bump_band", a.bump_band)?;
            if a.n_t < 2 {
                return invalid(format!("n_t must be at least 2, got {}", a.n_t));
            }
            if a.lambdas.len() < 4 {
                return invalid(format!("need at least 4 sweep values, got {}", a.lambdas.len()));
            }
        }
        Command::Nls4(a) => {
            check_positive("dt", a.dt)?;
            check_positive("T", a.t_final)?;
            check_positive("sigma", a.sigma)?;
            check_positive("margin", a.margin)?;
            if let Some(m) = a.l2_norm {
                check_positive("l2_norm", m)?;
            }
            if a.dt > a.t_final {
                return invalid(format!("dt {} exceeds T {}", a.dt, a.t_final));
            }
        }
        Command::Verify(a) => {
            if let Some(bad) = a.only.iter().find(|i| !(1..=10).contains(*i)) {
                return invalid(format!("criteria are numbered 1 to 10, got {bad}"));
            }
        }
    }
    Ok(())
}

fn sweep_alpha(a: &SweepArgs) -> f64 {
    a.alpha.unwrap_or(if a.beta <= 2.0 { 1.0 - a.beta / 2.0 } else { 0.0 })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a temporary file in the target directory and renames it
/// into place; returns the SHA-256 of the contents.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<String> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(hex(&Sha256::digest(bytes)))
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub inputs: Vec<OutputRecord>,
    pub outputs: Vec<OutputRecord>,
    pub pass: bool,
    pub summary: serde_json::Value,
}

/// What a run produced. Artifacts are staged in memory and written only
/// after the computation succeeded.
pub struct RunOutcome {
    pub manifest: Manifest,
    pub exit_code: i32,
}

struct Staged {
    files: Vec<(PathBuf, Vec<u8>)>,
    inputs: Vec<OutputRecord>,
    pass: bool,
    summary: serde_json::Value,
}

fn read_input(path: &Path, inputs: &mut Vec<OutputRecord>) -> Result<GridFunction> {
    let bytes = std::fs::read(path)?;
    inputs.push(OutputRecord { path: path.to_path_buf(), sha256: hex(&Sha256::digest(&bytes)) });
    GridFunction::read_from(bytes.as_slice())
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

#[derive(Serialize)]
struct SweepReport<'a> {
    result: &'a SweepResult,
    necessity: f64,
    sufficient: f64,
    /// The ratio slope must not exceed 0.1 once `s` reaches the sufficient threshold.
    pass: bool,
}

fn stage(config: &RunConfig) -> Result<Staged> {
    let mut inputs = Vec::new();
    let mut files = Vec::new();
    let mut pass = true;
    let summary = match &config.command {
        Command::Bapu(a) => {
            let length = std::f64::consts::PI * a.n as f64 / a.band;
            let grid = FreqGrid::new(a.d, a.n, length)?;
            let params = AlphaParams::new(a.alpha, a.d)?;
            let bapu = match a.cover {
                Some(c) => build_bapu_with_band(params, grid, c)?,
                None => build_bapu(params, grid)?,
            };
            let meta = bapu.metadata();
            files.push((a.out.clone(), json_bytes(&meta)?));
            files.push((a.samples.clone(), bapu.samples_bytes()));
            serde_json::json!({
                "windows": bapu.len(),
                "partition_error": bapu.partition_error(),
                "overlap_count": bapu.overlap_count(),
            })
        }
        Command::Norm(a) => {
            let f = read_input(&a.input, &mut inputs)?;
            let value = match a.kind {
                NormKind::Lp => lp_norm(&f, a.p)?,
                NormKind::Sobolev => sobolev_norm(&f, a.s, a.p)?,
                NormKind::AlphaMod => {
                    let t = ExponentTuple::norm(f.dim(), a.p, a.q, a.s, a.alpha)?;
                    let bapu = build_bapu(AlphaParams::new(a.alpha, f.dim())?, *f.grid())?;
                    alpha_mod_norm(&f, &t, &bapu)?
                }
            };
            let kind = match a.kind {
                NormKind::Lp => "lp",
                NormKind::Sobolev => "sobolev",
                NormKind::AlphaMod => "alpha_mod",
            };
            let csv = format!("kind,d,p,q,s,alpha,value\n{kind},{},{},{},{},{},{value}\n", f.dim(), a.p, a.q, a.s, a.alpha);
            files.push((a.out.clone(), csv.into_bytes()));
            serde_json::json!({ "value": value })
        }
        Command::Propagate(a) => {
            let f = read_input(&a.input, &mut inputs)?;
            let g = propagate(&f, a.beta, a.t)?;
            files.push((a.out.clone(), g.to_bytes()));
            serde_json::json!({ "l2_before": lp_norm(&f, 2.0)?, "l2_after": lp_norm(&g, 2.0)? })
        }
        Command::Regions(a) => {
            let cells = region_grid(a.d, a.beta, a.resolution)?;
            let min_gap = cells.iter().map(|c| c.verdict.gap).fold(f64::INFINITY, f64::min);
            files.push((a.out.clone(), raster_csv(&cells).into_bytes()));
            serde_json::json!({ "cells": cells.len(), "min_gap": min_gap })
        }
        Command::Sweep(a) => {
            let alpha = sweep_alpha(a);
            let t = ExponentTuple::new(a.d, a.beta, a.p, a.q, a.s, alpha)?;
            let bump = make_annulus_bump(bump_grid(a.bump_n, a.bump_band))?;
            let quad = TimeQuadrature::new(0.0, a.t1, a.n_t)?;
            let result = scaling_sweep(a.family.into(), &t, &a.lambdas, &quad, &bump)?;
            let necessity = necessity_threshold(a.d, a.beta, a.p, a.q)?;
            let sufficient = sufficient_threshold(a.d, a.beta, a.p, a.q)?.s;
            pass = a.s < sufficient || result.ratio_fit.slope <= 0.1;
            let report = SweepReport { result: &result, necessity, sufficient, pass };
            let report_path = a.report.clone().unwrap_or_else(|| a.out.with_extension("json"));
            files.push((a.out.clone(), result.to_csv().into_bytes()));
            files.push((report_path, json_bytes(&report)?));
            serde_json::json!({
                "lhs_slope": result.lhs_fit.slope,
                "rhs_slope": result.rhs_fit.slope,
                "ratio_slope": result.ratio_fit.slope,
                "necessity": necessity,
                "sufficient": sufficient,
            })
        }
        Command::Nls4(a) => {
            let mut u0 = match &a.u0 {
                Some(path) => read_input(path, &mut inputs)?,
                None => gaussian_datum(a.n, a.sigma, Complex64::new(1.0, 0.0))?,
            };
            if let Some(m) = a.l2_norm {
                u0 = with_l2_norm(&u0, m);
            }
            let traj = solve(&u0, &SolverConfig::new(a.dt, a.t_final, a.scheme))?;
            let report = energy_report(&traj)?;
            let verdict = gronwall_monitor(&report, a.margin)?;
            let (mass, energy) = report.relative_drifts();
            let mut bin = Vec::new();
            traj.write_to(&mut bin)?;
            files.push((a.out.clone(), bin));
            files.push((a.report.clone(), report.to_csv(verdict.constant).into_bytes()));
            pass = verdict.pass;
            serde_json::json!({
                "mass_drift": mass,
                "energy_drift": energy,
                "gronwall": verdict,
                "picard": traj.picard,
            })
        }
        Command::Verify(a) => {
            let report = verify::run_acceptance(config.seed, &a.only);
            for c in &report.criteria {
                eprintln!("{}", c.line());
            }
            if let Some(path) = &a.report {
                files.push((path.clone(), json_bytes(&report)?));
            }
            pass = report.pass;
            serde_json::to_value(&report.criteria)?
        }
    };
    Ok(Staged { files, inputs, pass, summary })
}

/// Executes a validated config and writes its artifacts.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    validate(config)?;
    let staged = stage(config)?;
    let mut outputs = Vec::new();
    for (path, bytes) in &staged.files {
        outputs.push(OutputRecord { path: path.clone(), sha256: write_atomic(path, bytes)? });
    }
    let exit_code = if staged.pass {
        EXIT_PASS
    } else if matches!(config.command, Command::Verify(_)) {
        EXIT_ACCEPTANCE
    } else {
        EXIT_NUMERIC
    };
    Ok(RunOutcome {
        manifest: Manifest {
            tool: "alphamod".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config: config.clone(),
            inputs: staged.inputs,
            outputs,
            pass: staged.pass,
            summary: staged.summary,
        },
        exit_code,
    })
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Numeric(_) => EXIT_NUMERIC,
        _ => EXIT_VALIDATION,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("ALPHAMOD_THREADS") else {
        return Ok(());
    };
    let n: usize = match v.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return invalid(format!("ALPHAMOD_THREADS must be a positive integer, got {v:?}")),
    };
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    // --help and --version are not errors
    if let Err(e) = Cli::try_parse_from(&args) {
        if !e.use_stderr() {
            let _ = e.print();
            return EXIT_PASS;
        }
    }
    let result = configure_threads().and_then(|_| parse_args(args)).and_then(|(config, manifest_path)| {
        let outcome = run(&config)?;
        let text = serde_json::to_string_pretty(&outcome.manifest)?;
        if let Some(p) = manifest_path {
            write_atomic(&p, format!("{text}\n").as_bytes())?;
        }
        println!("{text}");
        Ok(outcome.exit_code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig> {
        let mut v = vec!["alphamod"];
        v.extend_from_slice(args);
        parse_args(v).map(|(c, _)| c)
    }

    #[test]
    fn regions_flags() {
        let c = parse(&["regions", "--d", "1", "--beta", "0.5", "--resolution", "101", "--out", "r.csv"]).unwrap();
        assert_eq!(
            c.command,
            Command::Regions(RegionsArgs { d: 1, beta: 0.5, resolution: 101, out: "r.csv".into() })
        );
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn wave_case_is_rejected() {
        let e = parse(&["regions", "--d", "1", "--beta", "1", "--out", "r.csv"]).unwrap_err();
        assert!(e.to_string().contains("beta=1 excluded (wave case)"), "{e}");
        assert_eq!(exit_code_for(&e), EXIT_VALIDATION);
    }

    #[test]
    fn json_matches_flags() {
        let flags = parse(&[
            "--seed", "7", "sweep", "--family", "scaled_bump", "--beta", "0.5", "--p", "4", "--q", "2",
            "--lambdas", "4,8,16,32", "--out", "sweep.csv",
        ])
        .unwrap();
        let json = parse_json_config(
            r#"{"command": "sweep", "seed": 7, "family": "scaled_bump", "beta": 0.5, "p": 4,
                "q": 2, "lambdas": [4, 8, 16, 32], "out": "sweep.csv"}"#,
        )
        .unwrap();
        assert_eq!(flags, json);

        let flags = parse(&["nls4", "--dt", "1e-4", "--T", "0.1", "--out", "t.bin", "--report", "e.csv"]).unwrap();
        let json = parse_json_config(
            r#"{"command": "nls4", "dt": 1e-4, "T": 0.1, "out": "t.bin", "report": "e.csv"}"#,
        )
        .unwrap();
        assert_eq!(flags, json);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse_json_config(r#"{"command": "regions", "d": 1, "beta": 0.5, "out": "r.csv", "colour": 3}"#);
        assert!(e.is_err());
        assert!(parse(&["regions", "--d", "1", "--beta", "0.5", "--out", "r.csv", "--colour", "3"]).is_err());
    }

    #[test]
    fn outputs_are_deterministic_and_atomic() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("raster.csv");
        let config = RunConfig {
            seed: 3,
            command: Command::Regions(RegionsArgs { d: 1, beta: 1.5, resolution: 21, out: out.clone() }),
        };
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a.manifest.outputs[0].sha256, b.manifest.outputs[0].sha256);
        assert_eq!(a.exit_code, EXIT_PASS);
        let csv = std::fs::read_to_string(&out).unwrap();
        assert_eq!(csv.lines().count(), 1 + 21 * 21);
        // only the artifact remains, no temp files
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn failed_runs_leave_no_files() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            seed: 0,
            command: Command::Propagate(PropagateArgs {
                input: dir.path().join("missing.bin"),
                beta: 2.0,
                t: 0.1,
                out: dir.path().join("out.bin"),
            }),
        };
        assert!(run(&config).is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn sweep_writes_one_row_per_value() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        let config = RunConfig {
            seed: 0,
            command: Command::Sweep(SweepArgs {
                family: FamilyArg::ModulatedBump,
                d: 1,
                beta: 0.5,
                p: 2.0,
                q: 2.0,
                s: 0.0,
                alpha: None,
                lambdas: vec![4.0, 8.0, 16.0, 32.0],
                n_t: 16,
                t1: 1.0,
                bump_n: 4096,
                bump_band: 2.0,
                out: out.clone(),
                report: None,
            }),
        };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.manifest.outputs.len(), 2);
        assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 5);
        let report: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out.with_extension("json")).unwrap()).unwrap();
        assert!(report["result"]["ratio_fit"]["slope"].is_number());
        assert!(report["sufficient"].is_number());
    }

    #[test]
    fn grid_roundtrip_through_propagate() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("u.bin");
        let f = GridFunction::from_fn(1, 256, 40.0, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        write_atomic(&input, &f.to_bytes()).unwrap();
        let out = dir.path().join("v.bin");
        let config = RunConfig {
            seed: 0,
            command: Command::Propagate(PropagateArgs { input: input.clone(), beta: 2.0, t: 0.2, out: out.clone() }),
        };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.manifest.inputs.len(), 1);
        let g = GridFunction::load(&out).unwrap();
        let back = propagate(&g, 2.0, -0.2).unwrap();
        assert!(back.sub(&f).unwrap().max_abs() < 1e-12);
    }
}
