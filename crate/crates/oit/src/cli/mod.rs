//! Command-line front end: argument parsing, JSON/CSV report emission, the
//! a_p disk cache, and orchestration of the verification suites.
//!
//! Exit codes: 0 success, 1 domain error (e.g. a singular curve), 2 usage
//! error, 3 falsification finding (a theorem check or asserted bound failed).

pub mod cache;
pub mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde::Serialize;

use crate::characters::{
    exceptional_modulus, index_bounds, surjectivity_test, CharError, SurjectivityStatus,
};
use crate::curve::{bad_primes, curve_data, Curve, CurveError, FactorEffort, N_CONVENTION};
use crate::langtrotter::{average_experiment, lt_constant, AverageParams, LtError};
use crate::matgroup::MatGroupError;
use cache::{ApCache, CacheError};

pub const SCHEMA: &str = "oit/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FALSIFIED: i32 = 3;

fn parse_bigint(s: &str) -> Result<BigInt, String> {
    BigInt::from_str(s).map_err(|e| format!("not an integer: {e}"))
}

#[derive(Parser, Debug)]
#[command(
    name = "oit",
    version,
    about = "Effective open-image bounds for elliptic curves over Q",
    disable_help_subcommand = true
)]
pub struct Cli {
    /// Directory for the per-curve a_p cache files.
    #[arg(long, global = true, default_value = "./ap-cache")]
    pub cache_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Curve invariants: discriminant core, j-invariant, height, bad primes.
    Analyze(CurveArgs),
    /// Witness transcript, exceptional modulus M, and index bounds.
    Bound {
        #[command(flatten)]
        curve: CurveArgs,
        /// Emit the default JSON report (the default).
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        /// Emit the witness transcript as CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Witness-based surjectivity test for the mod-l representation.
    Surjectivity {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        x: u64,
    },
    /// Truncated Lang-Trotter constant C_r with a tail bound.
    LtConstant {
        #[arg(long)]
        r: i64,
        #[arg(long)]
        cutoff: u64,
    },
    /// pi_{E,r}(x): good primes p <= x with a_p = r.
    LtCount {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        r: i64,
        #[arg(long)]
        x: u64,
    },
    /// Average pi_{E,r}(x) over a random box of curves against C_r sqrt(x)/log x.
    Average {
        #[arg(long = "A")]
        a_bound: i64,
        #[arg(long = "B")]
        b_bound: i64,
        #[arg(long)]
        r: i64,
        #[arg(long)]
        x: u64,
        #[arg(long)]
        sample: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Brute-force verification suites.
    #[command(subcommand)]
    Verify(VerifySuite),
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    /// Coefficient a of y^2 = x^3 + ax + b (arbitrary precision).
    #[arg(long, value_parser = parse_bigint, allow_hyphen_values = true)]
    pub a: BigInt,
    /// Coefficient b of y^2 = x^3 + ax + b (arbitrary precision).
    #[arg(long, value_parser = parse_bigint, allow_hyphen_values = true)]
    pub b: BigInt,
}

#[derive(Subcommand, Debug)]
pub enum VerifySuite {
    /// Finite-group lemma checks and Lang-Trotter censuses.
    GroupTheory {
        #[arg(long, default_value_t = 5)]
        ell: u64,
        #[arg(long, default_value_t = 2)]
        level: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Everything that can go wrong while executing a parsed command, classified
/// by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Falsified(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) | CliError::Io(_) => EXIT_DOMAIN,
            CliError::Falsified(_) => EXIT_FALSIFIED,
        }
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<LtError> for CliError {
    fn from(e: LtError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<CharError> for CliError {
    fn from(e: CharError) -> Self {
        match e {
            CharError::BoundViolation { .. } => CliError::Falsified(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<MatGroupError> for CliError {
    fn from(e: MatGroupError) -> Self {
        match e {
            MatGroupError::TheoremViolation(_) => CliError::Falsified(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

// --------------------------------------------------------------------------
// Report shapes. Numbers that can exceed 64 bits are emitted as decimal
// strings.

#[derive(Serialize)]
struct AnalyzeReport {
    schema: &'static str,
    a: String,
    b: String,
    disc_core: String,
    disc_core_factors: Vec<FactorEntry>,
    j: String,
    height_j: f64,
    bad_primes: Vec<u64>,
    n: String,
    omega: usize,
    n_convention: &'static str,
}

#[derive(Serialize)]
struct FactorEntry {
    p: String,
    e: u32,
}

#[derive(Serialize)]
struct BoundReport {
    schema: &'static str,
    a: String,
    b: String,
    n: String,
    n0: String,
    omega: usize,
    n_convention: &'static str,
    steps: Vec<StepEntry>,
    m: String,
    m24: String,
    kraus_bound: f64,
    index_bounds: IndexBoundsReport,
}

#[derive(Serialize)]
struct StepEntry {
    alpha: String,
    p: u64,
    ap: i64,
    dim_before: usize,
}

#[derive(Serialize)]
struct IndexBoundsReport {
    m24: String,
    m24_note: String,
    closed_form: String,
    closed_form_log10: f64,
    remark_modulus: u64,
    remark: String,
}

#[derive(Serialize)]
struct SurjectivityReport {
    schema: &'static str,
    a: String,
    b: String,
    ell: u64,
    x: u64,
    status: &'static str,
    witnesses: Vec<WitnessEntry>,
}

#[derive(Serialize)]
struct WitnessEntry {
    class: &'static str,
    p: u64,
    ap: i64,
}

#[derive(Serialize)]
struct LtConstantReport {
    schema: &'static str,
    r: i64,
    cutoff: u64,
    value: f64,
    tail_bound: f64,
}

#[derive(Serialize)]
struct LtCountReport {
    schema: &'static str,
    a: String,
    b: String,
    r: i64,
    x: u64,
    count: u64,
}

#[derive(Serialize)]
struct AverageReportJson {
    schema: &'static str,
    a_bound: i64,
    b_bound: i64,
    r: i64,
    x: u64,
    sample_size: usize,
    seed: u64,
    mean: f64,
    c_r: f64,
    c_r_cutoff: u64,
    reference: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    schema: &'static str,
    suite: &'static str,
    ell: u64,
    level: u32,
    seed: u64,
    checks: Vec<verify::VerifyCheck>,
    passed: usize,
    failed: usize,
}

#[derive(Serialize)]
struct FalsificationReport {
    schema: &'static str,
    kind: &'static str,
    message: String,
}

// --------------------------------------------------------------------------

/// Entry point used by the binary: parses argv, runs, and maps outcomes to
/// exit codes. Reports go to stdout, errors to stderr.
pub fn run<I>(argv: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version as "errors" with success status.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout();
    match execute(&cli, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if let CliError::Falsified(msg) = &e {
                let payload = FalsificationReport {
                    schema: SCHEMA,
                    kind: "falsification",
                    message: msg.clone(),
                };
                let _ = writeln!(
                    stdout,
                    "{}",
                    serde_json::to_string_pretty(&payload).unwrap()
                );
            }
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parse-only entry point (used by fuzzing): must never panic on any input.
pub fn try_parse_args<I>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = String>,
{
    Cli::try_parse_from(argv)
}

fn curve_and_reduction(args: &CurveArgs) -> Result<(Curve, crate::curve::ReductionData), CliError> {
    let curve = Curve::new(args.a.clone(), args.b.clone())?;
    let red = bad_primes(&curve, &FactorEffort::default())?;
    Ok((curve, red))
}

fn emit<T: Serialize>(out: &mut dyn Write, report: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(report).expect("reports serialize");
    writeln!(out, "{body}").map_err(|e| CliError::Io(e.to_string()))
}

/// Executes a parsed command, writing the report to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(args) => {
            let (curve, red) = curve_and_reduction(args)?;
            let data = curve_data(&curve);
            let report = AnalyzeReport {
                schema: SCHEMA,
                a: args.a.to_string(),
                b: args.b.to_string(),
                disc_core: data.disc_core.to_string(),
                disc_core_factors: red
                    .disc_factors
                    .iter()
                    .map(|(p, e)| FactorEntry {
                        p: p.to_string(),
                        e: *e,
                    })
                    .collect(),
                j: format!("{}/{}", data.j_num, data.j_den),
                height_j: data.height_j,
                bad_primes: red.bad_primes.clone(),
                n: red.n.to_string(),
                omega: red.omega,
                n_convention: N_CONVENTION,
            };
            emit(out, &report)
        }
        Command::Bound {
            curve: args, csv, ..
        } => {
            let (curve, red) = curve_and_reduction(args)?;
            let report = exceptional_modulus(&curve, &red)?;
            let bounds = index_bounds(&report);
            if *csv {
                let mut body = String::from("step,alpha,p,ap,cumulative_m\n");
                let mut m = BigInt::from(1);
                for (i, s) in report.steps.iter().enumerate() {
                    m *= BigInt::from(s.ap.unsigned_abs());
                    body.push_str(&format!(
                        "{},{},{},{},{}\n",
                        i + 1,
                        s.alpha_label,
                        s.p,
                        s.ap,
                        m
                    ));
                }
                write!(out, "{body}").map_err(|e| CliError::Io(e.to_string()))
            } else {
                let json = BoundReport {
                    schema: SCHEMA,
                    a: args.a.to_string(),
                    b: args.b.to_string(),
                    n: report.n.to_string(),
                    n0: report.n0.to_string(),
                    omega: report.omega,
                    n_convention: N_CONVENTION,
                    steps: report
                        .steps
                        .iter()
                        .map(|s| StepEntry {
                            alpha: s.alpha_label.clone(),
                            p: s.p,
                            ap: s.ap,
                            dim_before: s.dim_before,
                        })
                        .collect(),
                    m: report.m.to_string(),
                    m24: report.m24.to_string(),
                    kraus_bound: report.kraus_bound,
                    index_bounds: IndexBoundsReport {
                        m24: bounds.m24.to_string(),
                        m24_note: bounds.m24_note.to_string(),
                        closed_form: bounds.closed_form.display(),
                        closed_form_log10: bounds.closed_form.log10,
                        remark_modulus: bounds.remark_modulus,
                        remark: bounds.remark,
                    },
                };
                emit(out, &json)
            }
        }
        Command::Surjectivity {
            curve: args,
            ell,
            x,
        } => {
            let (_, red) = curve_and_reduction(args)?;
            // Warm the cache for this curve so repeated runs are cheap.
            let cache = ApCache::new(&cli.cache_dir);
            cache.range(&red, &args.a, &args.b, *x)?;
            let verdict = surjectivity_test(&red, *ell, *x)?;
            let report = SurjectivityReport {
                schema: SCHEMA,
                a: args.a.to_string(),
                b: args.b.to_string(),
                ell: verdict.ell,
                x: verdict.x,
                status: match verdict.status {
                    SurjectivityStatus::Surjective => "surjective",
                    SurjectivityStatus::Undecided => "undecided",
                },
                witnesses: verdict
                    .witnesses
                    .iter()
                    .map(|(class, p, ap)| WitnessEntry {
                        class: class.tag(),
                        p: *p,
                        ap: *ap,
                    })
                    .collect(),
            };
            emit(out, &report)
        }
        Command::LtConstant { r, cutoff } => {
            let c = lt_constant(*r, *cutoff)?;
            emit(
                out,
                &LtConstantReport {
                    schema: SCHEMA,
                    r: c.r,
                    cutoff: c.cutoff,
                    value: c.value,
                    tail_bound: c.tail_bound,
                },
            )
        }
        Command::LtCount { curve: args, r, x } => {
            let (_, red) = curve_and_reduction(args)?;
            let cache = ApCache::new(&cli.cache_dir);
            let records = cache.range(&red, &args.a, &args.b, *x)?;
            let count = records.iter().filter(|rec| rec.ap == *r).count() as u64;
            emit(
                out,
                &LtCountReport {
                    schema: SCHEMA,
                    a: args.a.to_string(),
                    b: args.b.to_string(),
                    r: *r,
                    x: *x,
                    count,
                },
            )
        }
        Command::Average {
            a_bound,
            b_bound,
            r,
            x,
            sample,
            seed,
        } => {
            let report = average_experiment(AverageParams {
                a_bound: *a_bound,
                b_bound: *b_bound,
                r: *r,
                x: *x,
                sample_size: *sample,
                seed: *seed,
            })?;
            emit(
                out,
                &AverageReportJson {
                    schema: SCHEMA,
                    a_bound: report.params.a_bound,
                    b_bound: report.params.b_bound,
                    r: report.params.r,
                    x: report.params.x,
                    sample_size: report.params.sample_size,
                    seed: report.params.seed,
                    mean: report.mean,
                    c_r: report.c_r,
                    c_r_cutoff: report.c_r_cutoff,
                    reference: report.reference,
                    ratio: report.ratio,
                },
            )
        }
        Command::Verify(VerifySuite::GroupTheory { ell, level, seed }) => {
            let outcome = verify::group_theory_suite(*ell, *level, *seed)?;
            let passed = outcome.checks.iter().filter(|c| c.passed).count();
            let failed = outcome.checks.len() - passed;
            let report = VerifyReport {
                schema: SCHEMA,
                suite: "group-theory",
                ell: *ell,
                level: *level,
                seed: *seed,
                checks: outcome.checks.clone(),
                passed,
                failed,
            };
            emit(out, &report)?;
            if failed > 0 {
                let payload: Vec<&verify::VerifyCheck> =
                    outcome.checks.iter().filter(|c| !c.passed).collect();
                return Err(CliError::Falsified(
                    serde_json::to_string(&payload).expect("checks serialize"),
                ));
            }
            Ok(())
        }
    }
}
