//! Command-line front end: `synth`, `simulate`, `reconstruct`, `analyze`,
//! `compare` (alias of `analyze --both-models`) and `sweep`.
//!
//! Default output root is `$QQLAB_OUTPUT_DIR` (falling back to the
//! current directory). All angles on the command line and in files are
//! degrees. Exit codes: 0 success, 2 validation error, 3 missing
//! records, 4 numerical failure.

use crate::core_state::{make_ququart, random_ququart, StateError};
use crate::correlations::{correlation_report, CorrelationError};
use crate::io::{self, IoError};
use crate::measurement::{exact_record, simulate_coincidences, CountRecord};
use crate::reconstruction::{reconstruct_full, standard_plan, ReconstructionError, Scenario};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_MISSING_RECORDS: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qqlab", version, about = "Biphoton ququart toolbox")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a state file from explicit amplitudes or a seeded random draw.
    Synth(SynthArgs),
    /// Simulate the coincidence counts of a measurement campaign.
    Simulate(SimulateArgs),
    /// Invert count logs back to state parameters.
    Reconstruct(ReconstructArgs),
    /// Correlation measures of a state, both models side by side.
    Analyze(AnalyzeArgs),
    /// Alias of `analyze --both-models`.
    Compare(CompareArgs),
    /// Emit a parameter-sweep CSV of correlation measures.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Amplitude as `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b_plus: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c4: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b_minus: Option<String>,
    /// Draw a Haar-random normalized state instead.
    #[arg(long, conflicts_with_all = ["c1", "b_plus", "c4", "b_minus"])]
    random: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rescale the amplitudes to unit norm instead of rejecting them.
    #[arg(long)]
    renormalize: bool,
    /// Output state file (default `<output root>/state.json`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// State file written by `synth`.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Campaign manifest JSON; omit to run the standard six-record plan.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Counts per record for the standard plan; 0 requests exact
    /// probabilities instead of sampled counts.
    #[arg(long, default_value_t = 1_000_000)]
    n_total: u64,
    /// Base seed for the standard plan; record `i` uses `seed_base + i`.
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Output directory for the CSV logs (default from the manifest, or
    /// `<output root>/records`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    /// Directory of count logs (CSV or JSON).
    logs: PathBuf,
    /// Output estimate JSON (default `<output root>/estimate.json`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// State file to analyze.
    state: PathBuf,
    /// Also print the rival two-qubit model numbers in the text summary
    /// (the JSON report always carries both).
    #[arg(long)]
    both_models: bool,
    /// Sweep specification `param start:end:points` (param: `b_minus`),
    /// e.g. `--sweep b_minus 0:1:101`; emits a grid CSV.
    #[arg(long, num_args = 2, value_names = ["PARAM", "RANGE"])]
    sweep: Option<Vec<String>>,
    /// Output report JSON (default `<output root>/report.json`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    state: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Swept parameter; currently `b_minus` (sweeps `|B-|^2` over the
    /// two-Bell-state family with `C1 = C4 = 0`).
    #[arg(long, default_value = "b_minus")]
    param: String,
    /// Grid as `start:end:points`.
    #[arg(long, default_value = "0:1:101")]
    range: String,
    /// Output CSV (default `<output root>/sweep.csv`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Reconstruction(#[from] ReconstructionError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) | CliError::State(_) => EXIT_VALIDATION,
            CliError::Reconstruction(ReconstructionError::MissingRecords(_)) => {
                EXIT_MISSING_RECORDS
            }
            CliError::Reconstruction(_) | CliError::Correlation(_) => EXIT_NUMERICAL,
        }
    }
}

fn output_root() -> PathBuf {
    std::env::var_os("QQLAB_OUTPUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn default_path(explicit: Option<PathBuf>, name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| output_root().join(name))
}

fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Validation(format!(
            "expected `re,im`, got {s:?}"
        )));
    }
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|e| CliError::Validation(format!("bad number {p:?}: {e}")))
    };
    Ok(Complex64::new(num(parts[0])?, num(parts[1])?))
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let params = if args.random {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        random_ququart(&mut rng)
    } else {
        let amp = |name: &str, v: &Option<String>| match v {
            Some(s) => parse_complex(s),
            None => Err(CliError::Validation(format!(
                "--{name} is required unless --random is given"
            ))),
        };
        make_ququart(
            amp("c1", &args.c1)?,
            amp("b-plus", &args.b_plus)?,
            amp("c4", &args.c4)?,
            amp("b-minus", &args.b_minus)?,
            args.renormalize,
        )?
    };
    let path = default_path(args.out, "state.json");
    io::write_state(&path, &params)?;
    println!(
        "wrote {} (norm^2 = {:.17})",
        path.display(),
        params.norm_sq()
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let (configs, state_path, out_dir) = match &args.manifest {
        Some(path) => {
            let manifest: io::CampaignManifest = io::read_json(path)?;
            if manifest.measurement_list.is_empty() {
                return Err(CliError::Validation("manifest has no measurements".into()));
            }
            let state_path = args
                .state
                .clone()
                .or(manifest.state_file.clone())
                .ok_or_else(|| {
                    CliError::Validation("no state file in manifest or --state".into())
                })?;
            let out = args.out.clone().unwrap_or(manifest.output_dir.clone());
            (manifest.configs(), state_path, out)
        }
        None => {
            let state_path = args
                .state
                .clone()
                .ok_or_else(|| CliError::Validation("--state is required".into()))?;
            let out = default_path(args.out.clone(), "records");
            (standard_plan(args.n_total, args.seed_base), state_path, out)
        }
    };
    let params = io::read_state(&state_path)?;
    std::fs::create_dir_all(&out_dir).map_err(IoError::from)?;
    for (i, config) in configs.iter().enumerate() {
        let record = if config.n_total == 0 {
            exact_record(&params, config)
        } else {
            simulate_coincidences(&params, config)
        };
        let path = out_dir.join(format!("record_{i:02}.csv"));
        io::write_count_record_csv(&path, &record)?;
    }
    println!("wrote {} records to {}", configs.len(), out_dir.display());
    Ok(())
}

fn inversion_name(scenario: Scenario) -> &'static str {
    match scenario {
        Scenario::ZeroC => "diagonal 45-degree count ratio (two-Bell-state closed form)",
        Scenario::SingleC => "cross 45-degree count ratio (single-C closed form)",
        Scenario::General => "small-angle slopes plus the 45-degree cross-count equation for B+",
        Scenario::ZeroBplus => "parabolic curvature of the diagonal count ratios",
    }
}

fn scenario_tag(scenario: Scenario) -> String {
    serde_json::to_value(scenario)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn cmd_reconstruct(args: ReconstructArgs) -> Result<(), CliError> {
    let records: Vec<CountRecord> = io::read_count_records_dir(&args.logs)?;
    if records.is_empty() {
        return Err(CliError::Validation(format!(
            "no count logs found in {}",
            args.logs.display()
        )));
    }
    let estimate = reconstruct_full(&records)?;
    let path = default_path(args.out, "estimate.json");
    io::write_json(&path, &estimate)?;

    let m = &estimate.mps;
    println!("scenario: {}", scenario_tag(m.scenario));
    println!("inversion: {}", inversion_name(m.scenario));
    println!("|C1| = {:.6}  phi1 = {:.6} rad", m.abs_c1, m.phi1);
    println!("|C4| = {:.6}  phi4 = {:.6} rad", m.abs_c4, m.phi4);
    println!("B+   = {:.6}", m.b_plus);
    println!(
        "|B-| = {:.6}  phi- = {:.6} rad",
        m.abs_b_minus, estimate.phi_minus
    );
    let mut flags: Vec<&str> = Vec::new();
    if m.phi1_sign_ambiguous {
        flags.push("phi1 sign");
    }
    if m.phi4_sign_ambiguous {
        flags.push("phi4 sign");
    }
    if estimate.phi_minus_sign_ambiguous {
        flags.push("phi- sign");
    }
    if m.ambiguous_root {
        flags.push("B+ root");
    }
    if !flags.is_empty() {
        println!("ambiguities: {}", flags.join(", "));
    }
    for (name, value) in &estimate.residuals {
        println!("residual {name} = {value:.3e}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn print_report(report: &crate::correlations::CorrelationReport, both_models: bool) {
    println!("K_bar = {:.6}", report.k_bar);
    println!("C_bar = {:.6}", report.c_bar);
    println!("S_rel = {:.6}", report.s_rel);
    println!("I     = {:.6}", report.mutual_info);
    println!("C_cl  = {:.6}", report.c_cl);
    println!("P_bar = {:.6}", report.p_bar);
    if both_models {
        println!("two-qubit model: K = {:.6}  C = {:.6}", report.k_2qb, report.c_2qb);
    }
}

fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Validation(format!(
            "range must be start:end:points, got {spec:?}"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|e| CliError::Validation(format!("bad range start: {e}")))?;
    let end: f64 = parts[1]
        .parse()
        .map_err(|e| CliError::Validation(format!("bad range end: {e}")))?;
    let points: usize = parts[2]
        .parse()
        .map_err(|e| CliError::Validation(format!("bad range points: {e}")))?;
    if points < 2 || end <= start {
        return Err(CliError::Validation(
            "range needs end > start and at least 2 points".into(),
        ));
    }
    Ok((0..points)
        .map(|i| start + (end - start) * i as f64 / (points - 1) as f64)
        .collect())
}

/// Correlation measures of the two-Bell-state family, `|B-|^2` swept over
/// `grid`. Returns CSV text.
fn sweep_b_minus_csv(grid: &[f64]) -> Result<String, CliError> {
    let mut out = String::from("b_minus_sq,k_bar,c_bar,s_rel\n");
    for &b_minus_sq in grid {
        let b_minus_sq = b_minus_sq.clamp(0.0, 1.0);
        let q = make_ququart(
            0.0.into(),
            (1.0 - b_minus_sq).max(0.0).sqrt().into(),
            0.0.into(),
            b_minus_sq.sqrt().into(),
            true,
        )?;
        let report = correlation_report(&q)?;
        out.push_str(&format!(
            "{},{},{},{}\n",
            io::format_float(b_minus_sq),
            io::format_float(report.k_bar),
            io::format_float(report.c_bar),
            io::format_float(report.s_rel),
        ));
    }
    Ok(out)
}

fn run_sweep(param: &str, range: &str, out: Option<PathBuf>) -> Result<(), CliError> {
    if param != "b_minus" {
        return Err(CliError::Validation(format!(
            "unknown sweep parameter {param:?} (supported: b_minus)"
        )));
    }
    let grid = parse_range(range)?;
    let csv = sweep_b_minus_csv(&grid)?;
    let path = default_path(out, "sweep.csv");
    std::fs::write(&path, csv).map_err(IoError::from)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let params = io::read_state(&args.state)?;
    let report = correlation_report(&params)?;
    let path = default_path(args.out, "report.json");
    io::write_json(&path, &report)?;
    print_report(&report, args.both_models);
    println!("wrote {}", path.display());
    if let Some(sweep) = &args.sweep {
        run_sweep(&sweep[0], &sweep[1], None)?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Reconstruct(args) => cmd_reconstruct(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Compare(args) => cmd_analyze(AnalyzeArgs {
            state: args.state,
            both_models: true,
            sweep: None,
            out: args.out,
        }),
        Command::Sweep(args) => run_sweep(&args.param, &args.range, args.out),
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout with exit 0 and usage
            // errors on stderr with exit 2
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
