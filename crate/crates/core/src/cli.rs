//! Command-line front end. [`run`] does all the work and returns the exit
//! code, the stdout payload and the stderr diagnostics, so the binary is a
//! thin shell around it.

use crate::chern::{self, reference_constants, ChernIndex};
use crate::curvature::{
    fit_complex_polarization_coefficient, identity_one_residual, polarization_complex_residual,
    polarization_real_residual, project_kahler, reconstruct_from_sectional, solve_sectional_from_h,
    CurvatureTensor, COMPLEX_POLARIZATION_COEFF, DEFAULT_SYMMETRY_TOL,
    PRINTED_COMPLEX_POLARIZATION_COEFF,
};
use crate::error::Error;
use crate::experiments::{self, SweepConfig};
use crate::pinching::{self, default_restarts};
use crate::rng;
use crate::space::{HermitianSpace, PairConstraint};
use crate::tensor_file;
use crate::MAX_N;
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "KAHLER_THREADS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub payload: String,
    pub diagnostics: String,
}

impl CommandResult {
    fn ok(payload: String) -> Self {
        Self {
            exit_code: EXIT_OK,
            payload,
            diagnostics: String::new(),
        }
    }

    fn checked(passed: bool, payload: String, failure: &str) -> Self {
        Self {
            exit_code: if passed { EXIT_OK } else { EXIT_CHECK_FAILED },
            payload,
            diagnostics: if passed { String::new() } else { format!("{failure}\n") },
        }
    }

    fn fail(exit_code: i32, message: impl std::fmt::Display) -> Self {
        Self {
            exit_code,
            payload: String::new(),
            diagnostics: format!("error: {message}\n"),
        }
    }
}

impl From<Error> for CommandResult {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::ResourceLimit(_) => EXIT_RESOURCE,
            Error::InvalidDimension(_)
            | Error::DimensionTooSmall(_)
            | Error::InvalidIndex(_)
            | Error::Precondition(_)
            | Error::Format(_)
            | Error::Io(_)
            | Error::EmptyInput(_) => EXIT_USAGE,
            _ => EXIT_CHECK_FAILED,
        };
        Self::fail(code, e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "kahler", version, about = "Kähler curvature tensors: pinching, Chern ratios, identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the complex hyperbolic model tensor R0.
    R0 {
        #[arg(long)]
        n: i64,
        /// Output tensor file; the tensor goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report symmetry residuals of a tensor file.
    Validate {
        path: PathBuf,
        /// Defaults to the tolerance stored in the file.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Extreme sectional curvatures with witnesses and eigenvalue envelope.
    Pinch {
        path: PathBuf,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        seed: u64,
    },
    /// Chern-number densities and ratios.
    Chern {
        path: PathBuf,
        /// `a_1,...,a_n:b_1,...,b_n`
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        ratio: Option<String>,
        #[arg(long)]
        all: bool,
    },
    /// Check the polarization identities on random Kähler tensors.
    Identities {
        #[arg(long, default_value_t = 2)]
        n: i64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SYMMETRY_TOL)]
        tol: f64,
    },
    /// Perturbation sweep around R0 driven by a TOML configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; the CSV goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The constant chain epsilon -> eta -> delta, optionally with a certification run.
    Constants {
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
        #[arg(long)]
        n: i64,
        /// Number of certification samples at the computed delta.
        #[arg(long)]
        certify: Option<usize>,
        #[arg(long, requires = "certify")]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                CommandResult {
                    exit_code: EXIT_USAGE,
                    payload: String::new(),
                    diagnostics: rendered,
                }
            } else {
                CommandResult::ok(rendered)
            };
        }
    };
    match dispatch(cli.command) {
        Ok(result) => result,
        Err(e) => e.into(),
    }
}

type CmdResult = std::result::Result<CommandResult, Error>;

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::R0 { n, out } => cmd_r0(n, out),
        Command::Validate { path, tol } => cmd_validate(path, tol),
        Command::Pinch {
            path,
            restarts,
            seed,
        } => cmd_pinch(path, restarts, seed),
        Command::Chern { path, ratio, all } => cmd_chern(path, ratio, all),
        Command::Identities {
            n,
            samples,
            seed,
            tol,
        } => cmd_identities(n, samples, seed, tol),
        Command::Sweep { config, out } => cmd_sweep(config, out),
        Command::Constants {
            epsilon,
            n,
            certify,
            seed,
            restarts,
        } => cmd_constants(epsilon, n, certify, seed, restarts),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// `1 <= n <= MAX_N`, with `n > MAX_N` a resource-limit failure.
fn checked_n(n: i64) -> std::result::Result<usize, Error> {
    if n < 1 {
        return Err(Error::InvalidDimension(n));
    }
    let n = n as usize;
    if n > MAX_N {
        return Err(Error::ResourceLimit(format!("n = {n} exceeds the cap n <= {MAX_N}")));
    }
    Ok(n)
}

fn load(path: &Path) -> std::result::Result<tensor_file::TensorFile, Error> {
    let file = tensor_file::read(path)?;
    checked_n(file.tensor.n() as i64)?;
    Ok(file)
}

/// Loads a tensor file and certifies it at the stored tolerance.
fn load_certified(path: &Path) -> std::result::Result<CurvatureTensor, CommandResult> {
    let file = load(path).map_err(CommandResult::from)?;
    let mut tensor = file.tensor;
    let cert = tensor.certify(file.symmetry_tolerance);
    if !cert.passed {
        return Err(CommandResult {
            exit_code: EXIT_CHECK_FAILED,
            payload: to_json(&json!({ "certificate": cert })),
            diagnostics: format!(
                "error: not a Kähler curvature tensor (max residual {:e} > {:e})\n",
                cert.max_residual(),
                file.symmetry_tolerance
            ),
        });
    }
    Ok(tensor)
}

fn cmd_r0(n: i64, out: Option<PathBuf>) -> CmdResult {
    // an out-of-range n is a usage error here: there is nothing to compute yet
    if !(1..=MAX_N as i64).contains(&n) {
        return Ok(CommandResult::fail(
            EXIT_USAGE,
            format!("--n must be in 1..={MAX_N}, got {n}"),
        ));
    }
    let space = HermitianSpace::new(n as usize)?;
    let r0 = CurvatureTensor::r0(&space);
    match out {
        None => Ok(CommandResult::ok(tensor_file::to_text(&r0, DEFAULT_SYMMETRY_TOL))),
        Some(path) => {
            tensor_file::write(&path, &r0, DEFAULT_SYMMETRY_TOL)?;
            Ok(CommandResult::ok(to_json(&json!({
                "n": n,
                "out": path.display().to_string(),
                "frobenius_norm": r0.frobenius_norm(),
            }))))
        }
    }
}

fn cmd_validate(path: PathBuf, tol: Option<f64>) -> CmdResult {
    let file = tensor_file::read(&path)?;
    let tol = tol.unwrap_or(file.symmetry_tolerance);
    if !(tol >= 0.0) {
        return Err(Error::Precondition(format!("--tol must be nonnegative, got {tol}")));
    }
    let cert = file.tensor.check_kahler(tol);
    let payload = to_json(&json!({
        "n": file.tensor.n(),
        "frobenius_norm": file.tensor.frobenius_norm(),
        "certificate": cert,
        "max_residual": cert.max_residual(),
    }));
    Ok(CommandResult::checked(
        cert.passed,
        payload,
        &format!("symmetry residual {:e} exceeds {tol:e}", cert.max_residual()),
    ))
}

fn cmd_pinch(path: PathBuf, restarts: Option<usize>, seed: u64) -> CmdResult {
    let tensor = match load_certified(&path) {
        Ok(t) => t,
        Err(result) => return Ok(result),
    };
    let restarts = restarts.unwrap_or_else(|| default_restarts(tensor.n()));
    let report = pinching::pinch(&tensor, restarts, seed)?;
    let payload = to_json(&json!({ "seed": seed, "report": report }));
    Ok(CommandResult::checked(
        report.converged,
        payload,
        "multistart search did not stabilize; increase --restarts",
    ))
}

fn parse_ratio(text: &str, n: usize) -> std::result::Result<(ChernIndex, ChernIndex), Error> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| Error::InvalidIndex(format!("expected I:J, got {text:?}")))?;
    let (i, j) = (ChernIndex::parse(a)?, ChernIndex::parse(b)?);
    if i.n() != n || j.n() != n {
        return Err(Error::InvalidIndex(format!("indices must have length n = {n}")));
    }
    Ok((i, j))
}

fn cmd_chern(path: PathBuf, ratio: Option<String>, all: bool) -> CmdResult {
    let n = load(&path)?.tensor.n();
    // validate the flag before any numerical work
    let requested = match &ratio {
        Some(text) => vec![parse_ratio(text, n)?],
        None => chern::index_pairs(n),
    };
    let tensor = match load_certified(&path) {
        Ok(t) => t,
        Err(result) => return Ok(result),
    };
    let space = tensor.space();
    let forms = chern::chern_forms(&tensor, &space.standard_frame())?;
    let densities = chern::chern_densities(&tensor, &space.standard_frame())?;
    let reference = reference_constants(n)?;
    let mut ratios = Vec::new();
    for (i, j) in &requested {
        let value = match chern::ratio_from_forms(space, &forms, i, j) {
            Ok(v) => Value::from(v),
            Err(Error::DegenerateDenominator(_)) if all => Value::Null,
            Err(e) => return Err(e),
        };
        ratios.push(json!({
            "numerator": i.to_string(),
            "denominator": j.to_string(),
            "ratio": value,
            "reference": reference.ratio(i, j),
        }));
    }
    let densities: Vec<Value> = densities
        .iter()
        .map(|d| json!({ "index": d.index.to_string(), "gamma": d.gamma }))
        .collect();
    Ok(CommandResult::ok(to_json(&json!({
        "n": n,
        "densities": densities,
        "ratios": ratios,
    }))))
}

#[derive(Debug, Serialize)]
struct IdentityCheck {
    name: &'static str,
    max_residual: f64,
    passed: bool,
}

fn cmd_identities(n: i64, samples: usize, seed: u64, tol: f64) -> CmdResult {
    let n = checked_n(n)?;
    if n < 2 {
        return Err(Error::DimensionTooSmall(
            "the identities need orthonormal {u, Ju, v, Jv}, so n >= 2".into(),
        ));
    }
    if samples == 0 {
        return Err(Error::EmptyInput("--samples must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("--tol must be positive, got {tol}")));
    }
    let space = HermitianSpace::new(n)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut worst = [0.0f64; 7];
    let mut printed = 0.0f64;
    for i in 0..samples {
        let s = rng::derive_seed(seed, i as u64);
        let r = CurvatureTensor::random_kahler(&space, rng::derive_seed(s, 0), 1.0)?;
        let (u, v) = space.random_orthonormal_pair(rng::derive_seed(s, 1), PairConstraint::VPerpJu)?;
        let jv = space.apply_j(&v);
        let triple = solve_sectional_from_h(&r, &u, &v)?;
        let direct = [r.biquadratic(&u, &v), r.biquadratic(&u, &jv), r.eval(&u, &space.apply_j(&u), &v, &jv)];
        let solved = [triple.k_uv, triple.k_u_jv, triple.r_uju_vjv];
        let projected = project_kahler(&r)?;
        let values = [
            identity_one_residual(&r, &u, &v)?.abs(),
            polarization_real_residual(&r, &u, &v, h, h).abs(),
            polarization_complex_residual(&r, &u, &v, h, h, COMPLEX_POLARIZATION_COEFF).abs(),
            solved.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            reconstruct_from_sectional(|a, b| r.biquadratic(a, b), &space).distance(&r)?,
            projected.distance(&r)?,
            r.check_kahler(tol).max_residual(),
        ];
        for (w, x) in worst.iter_mut().zip(values) {
            *w = w.max(x);
        }
        printed = printed.max(
            polarization_complex_residual(&r, &u, &v, h, h, PRINTED_COMPLEX_POLARIZATION_COEFF).abs(),
        );
    }
    let r0 = CurvatureTensor::r0(&space);
    let r0_fixed = project_kahler(&r0)?.distance(&r0)?;
    let names = [
        "identity_one",
        "polarization_real",
        "polarization_complex",
        "sectional_from_holomorphic",
        "reconstruction_24_term",
        "projector_fixes_kahler",
        "symmetry_certificate",
    ];
    let mut checks: Vec<IdentityCheck> = names
        .iter()
        .zip(worst)
        .map(|(&name, max_residual)| IdentityCheck {
            name,
            max_residual,
            passed: max_residual <= tol,
        })
        .collect();
    checks.push(IdentityCheck {
        name: "projector_fixes_r0",
        max_residual: r0_fixed,
        passed: r0_fixed <= tol,
    });

    // Berger's estimate is attained by R0 on unitary quadruples
    let report = pinching::pinch(&r0, default_restarts(n), rng::derive_seed(seed, u64::MAX))?;
    let berger = pinching::berger_bound_check(&r0, &report, samples, rng::derive_seed(seed, u64::MAX - 1))?;
    let berger_violation = berger.max_violation.max(0.0);
    checks.push(IdentityCheck {
        name: "berger_bound",
        max_residual: berger_violation,
        passed: berger_violation <= tol,
    });

    let fit = fit_complex_polarization_coefficient(&space, samples, rng::derive_seed(seed, u64::MAX - 2))?;
    let suspected_typo = printed > tol;
    let passed = checks.iter().all(|c| c.passed);
    let payload = to_json(&json!({
        "n": n,
        "samples": samples,
        "seed": seed,
        "tolerance": tol,
        "checks": checks,
        "berger": berger,
        "printed_complex_polarization": {
            "coefficient": PRINTED_COMPLEX_POLARIZATION_COEFF,
            "max_residual": printed,
            "suspected_typo": suspected_typo,
            "fitted_coefficient": fit.coefficient,
            "fit_rms_residual": fit.rms_residual,
        },
        "passed": passed,
    }));
    let mut result = CommandResult::checked(passed, payload, "an identity exceeded the tolerance");
    if suspected_typo {
        result.diagnostics.push_str(&format!(
            "note: the u +- Jv identity fails with coefficient {PRINTED_COMPLEX_POLARIZATION_COEFF} \
             (residual {printed:e}); the fitted coefficient is {:.12}\n",
            fit.coefficient
        ));
    }
    Ok(result)
}

fn cmd_sweep(config: PathBuf, out: Option<PathBuf>) -> CmdResult {
    let text = std::fs::read_to_string(&config)
        .map_err(|e| Error::Io(format!("{}: {e}", config.display())))?;
    let cfg = SweepConfig::from_toml(&text)?;
    checked_n(cfg.n as i64)?;
    let result = experiments::sweep(&cfg)?;
    let csv = experiments::emit_csv(&result.records)?;
    let Some(path) = out else {
        return Ok(CommandResult::ok(csv));
    };
    std::fs::write(&path, csv).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let nondecreasing = result.aggregates.windows(2).all(|w| {
        w[1].max_ratio_dev >= w[0].max_ratio_dev && w[1].max_frobenius_dist >= w[0].max_frobenius_dist
    });
    Ok(CommandResult::ok(to_json(&json!({
        "n": result.n,
        "seed": cfg.seed,
        "restarts": cfg.restarts(),
        "out": path.display().to_string(),
        "records": result.records.len(),
        "excluded": result.excluded,
        "aggregates": result.aggregates,
        "nondecreasing": nondecreasing,
    }))))
}

fn cmd_constants(
    epsilon: f64,
    n: i64,
    certify: Option<usize>,
    seed: Option<u64>,
    restarts: Option<usize>,
) -> CmdResult {
    let n = checked_n(n)?;
    let chain = experiments::proof_constants(epsilon, n)?;
    let Some(samples) = certify else {
        return Ok(CommandResult::ok(to_json(&json!({ "chain": chain }))));
    };
    let seed = seed.ok_or_else(|| Error::Precondition("--certify needs --seed".into()))?;
    let report = experiments::certify_constants(
        &chain,
        samples,
        seed,
        restarts.unwrap_or_else(|| default_restarts(n)),
    )?;
    let passed = report.counterexamples == 0;
    Ok(CommandResult::checked(
        passed,
        to_json(&json!({ "chain": chain, "seed": seed, "certification": report })),
        &format!("{} counterexamples at delta = {:e}", report.counterexamples, chain.delta),
    ))
}

/// Applies the thread-count override, if set.
pub fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads = value
        .parse::<usize>()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}
