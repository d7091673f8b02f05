//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde_json::json;

use crate::analyze;
use crate::decompose;
use crate::error::Error;
use crate::gramian::Orientation;
use crate::io::{self, InputError, NetworkSpecFile, ReductionReportFile};
use crate::model::{self, NetworkSystem, Passivity};
use crate::pipeline;
use crate::realize::{self, SpectrumTarget};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INADMISSIBLE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "netbt", version, about = "Balanced truncation of networked passive systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every structural assumption of a network spec file.
    Validate {
        path: PathBuf,
        /// Emit a machine-readable report.
        #[arg(long)]
        json: bool,
    },
    /// Reduce a network to k nodes with agents of order r.
    Reduce {
        path: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        r: usize,
        /// Take Y from the Lyapunov equation and X from the inequality.
        #[arg(long)]
        dual_gramians: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Largest singular value of the full (and reduced) transfer matrix on a log grid.
    Bode {
        path: PathBuf,
        /// Report written by `reduce`.
        #[arg(long)]
        reduced: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-2)]
        wmin: f64,
        #[arg(long, default_value_t = 1e2)]
        wmax: f64,
        #[arg(long, default_value_t = 400)]
        points: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Zero-input response and synchronization error.
    Simulate {
        path: PathBuf,
        /// Simulate the reduced network from a `reduce` report instead.
        #[arg(long)]
        reduced: Option<PathBuf>,
        #[arg(long, default_value_t = 100.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Seed for the random initial state.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Start from x(0) = 0.
        #[arg(long)]
        zero_initial: bool,
        /// Store every n-th integration step.
        #[arg(long, default_value_t = 100)]
        every: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Laplacian with a prescribed spectrum.
    RealizeSpectrum {
        /// Comma-separated eigenvalues, one of them zero.
        #[arg(long, allow_hyphen_values = true)]
        lambdas: String,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Dimension(_) | Error::InvalidSpectrum(_) => EXIT_INPUT,
            Error::InvalidLaplacian(_) | Error::NotPassive(_) | Error::Unstable(_) | Error::Degenerate(_) => {
                EXIT_VALIDATION
            }
            Error::InadmissibleOrder { .. } => EXIT_INADMISSIBLE,
            Error::NotDiagonalizable(_) | Error::Solver(_) | Error::Numerical(_) => EXIT_SOLVER,
        };
        Self { code, message: e.to_string() }
    }
}

/// Result of a command: text for the output sink, optional diagnostics and an exit code.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub body: String,
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Validate { path, json } => validate(&path, json),
        Command::Reduce { path, k, r, dual_gramians, out } => {
            let orientation = if dual_gramians { Orientation::Dual } else { Orientation::Standard };
            Ok(ok(reduce(&path, k, r, orientation)?, out))
        }
        Command::Bode { path, reduced, wmin, wmax, points, out } => {
            Ok(ok(bode(&path, reduced.as_deref(), wmin, wmax, points)?, out))
        }
        Command::Simulate { path, reduced, horizon, step, seed, zero_initial, every, out } => {
            let init = if zero_initial { Initial::Zero } else { Initial::Random(seed) };
            Ok(ok(simulate(&path, reduced.as_deref(), horizon, step, init, every)?, out))
        }
        Command::RealizeSpectrum { lambdas, out } => Ok(ok(realize_spectrum(&lambdas)?, out)),
    }
}

fn ok(body: String, out: Output) -> Outcome {
    Outcome { code: EXIT_OK, body, out: out.out }
}

/// Parses arguments, runs the command, writes output and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(outcome) => {
            if let Err(e) = emit(&outcome.body, outcome.out.as_deref()) {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn emit(body: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn load_network(path: &Path) -> Result<NetworkSystem, CliError> {
    Ok(NetworkSpecFile::load(path)?.raw()?.network()?)
}

pub fn validate(path: &Path, as_json: bool) -> Result<Outcome, CliError> {
    let raw = NetworkSpecFile::load(path)?.raw()?;
    let lap = model::validate_laplacian(&raw.laplacian)?;
    let agent = raw.agent()?;
    let minimality = model::check_minimality(&agent);
    let passivity = model::check_passivity(&agent)?;
    let mut failures: Vec<String> = lap.failures().iter().map(|f| format!("Laplacian: {f}")).collect();
    if !minimality.minimal() {
        failures.push("agent: not minimal".into());
    }
    if let Passivity::NotPassive(why) = &passivity {
        failures.push(format!("agent: not passive ({why})"));
    }
    if !model::sync_hypotheses(&raw.laplacian, &agent) {
        failures.push("synchronization hypotheses: graph disconnected or agent unobservable".into());
    }
    let mut abscissa = None;
    if lap.passed() {
        let net = raw.network()?;
        let (_, stable) = decompose::split(&net).or_else(|e| match e {
            Error::Unstable(_) => decompose::split_unchecked(&net),
            other => Err(other),
        })?;
        let a = decompose::stable_abscissa(&stable)?;
        if a >= -decompose::HURWITZ_TOL {
            failures.push(format!("stable part not Hurwitz (spectral abscissa {a:.3e})"));
        }
        abscissa = Some(a);
    }
    let passed = failures.is_empty();
    let body = if as_json {
        let doc = json!({
            "valid": passed,
            "failures": failures,
            "laplacian": {
                "symmetric": lap.symmetric,
                "zero_row_sums": lap.zero_row_sums,
                "nonpositive_off_diagonal": lap.nonpositive_off_diagonal,
                "positive_diagonal": lap.positive_diagonal,
                "positive_semidefinite": lap.positive_semidefinite,
                "connected": lap.connected,
                "symmetry_error": lap.symmetry_error,
                "max_row_sum": lap.max_row_sum,
                "max_off_diagonal": lap.max_off_diagonal,
                "eigenvalues": lap.eigenvalues,
            },
            "agent": {
                "order": minimality.order,
                "controllability_rank": minimality.controllability_rank,
                "observability_rank": minimality.observability_rank,
                "passive": passivity.is_passive(),
            },
            "stable_part_abscissa": abscissa,
        });
        serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
    } else {
        let mut s = String::new();
        let _ = writeln!(s, "Laplacian ({} nodes)", raw.laplacian.nrows());
        let _ = writeln!(s, "{lap}");
        let _ = writeln!(
            s,
            "agent order {}: controllability rank {}, observability rank {}, passive {}",
            minimality.order,
            minimality.controllability_rank,
            minimality.observability_rank,
            passivity.is_passive()
        );
        if let Some(a) = abscissa {
            let _ = writeln!(s, "stable part spectral abscissa {a:.6e}");
        }
        if passed {
            s.push_str("valid\n");
        } else {
            for f in &failures {
                let _ = writeln!(s, "FAILED: {f}");
            }
        }
        s
    };
    Ok(Outcome { code: if passed { EXIT_OK } else { EXIT_VALIDATION }, body, out: None })
}

pub fn reduce(path: &Path, k: usize, r: usize, orientation: Orientation) -> Result<String, CliError> {
    let net = load_network(path)?;
    let prep = pipeline::prepare(&net, orientation)?;
    let red = prep.reduce(k, r)?;
    let passive = red.reduced_agent_passive()?;
    Ok(ReductionReportFile::new(&prep, &red, Some(passive)).to_json() + "\n")
}

pub fn bode(path: &Path, reduced: Option<&Path>, wmin: f64, wmax: f64, points: usize) -> Result<String, CliError> {
    let grid = analyze::log_grid(wmin, wmax, points).map_err(|e| CliError::input(e.to_string()))?;
    let full = load_network(path)?.state_space();
    let red = match reduced {
        Some(p) => Some(ReductionReportFile::load(p)?.network()?.state_space()),
        None => None,
    };
    if let Some(rs) = &red {
        if rs.inputs() != full.inputs() || rs.outputs() != full.outputs() {
            return Err(CliError::input("reduced model does not match the network's inputs and outputs"));
        }
    }
    let mut s = String::from(if red.is_some() {
        "omega,sigma_max_full,sigma_max_reduced,abs_deviation\n"
    } else {
        "omega,sigma_max_full\n"
    });
    for &w in &grid {
        let g = full.eval_jw(w)?;
        let _ = write!(s, "{w},{}", crate::lti::cmat_norm2(&g));
        if let Some(rs) = &red {
            let gr = rs.eval_jw(w)?;
            let _ = write!(s, ",{},{}", crate::lti::cmat_norm2(&gr), crate::lti::cmat_norm2(&(&g - &gr)));
        }
        s.push('\n');
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy)]
pub enum Initial {
    Zero,
    Random(u64),
}

pub fn simulate(
    path: &Path,
    reduced: Option<&Path>,
    horizon: f64,
    step: f64,
    init: Initial,
    every: usize,
) -> Result<String, CliError> {
    if !(horizon.is_finite() && horizon > 0.0) || !(step.is_finite() && step > 0.0) || step > horizon || every == 0 {
        return Err(CliError::input("need 0 < step <= horizon and a positive sampling interval"));
    }
    let mut net = load_network(path)?;
    if let Some(p) = reduced {
        net = ReductionReportFile::load(p)?.network()?;
    }
    let sys = net.state_space();
    let x0 = match init {
        Initial::Zero => DVector::zeros(sys.order()),
        Initial::Random(seed) => analyze::random_initial(sys.order(), seed),
    };
    let m = sys.inputs();
    let (res, sync) = analyze::simulate_network(&sys, net.nodes(), |_| DVector::zeros(m), &x0, horizon, step, every)?;
    let mut s = String::from("time,sync_metric");
    for i in 0..sys.outputs() {
        let _ = write!(s, ",y{}", i + 1);
    }
    s.push('\n');
    for ((t, e), y) in res.times.iter().zip(&sync).zip(&res.outputs) {
        let _ = write!(s, "{t},{e}");
        for v in y.iter() {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn realize_spectrum(lambdas: &str) -> Result<String, CliError> {
    let values = lambdas
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::input(format!("not a number: {t:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let target = SpectrumTarget::from_unsorted(values)?;
    let l = realize::laplacian_from_spectrum(&target)?;
    let doc = json!({ "lambdas": target.lambdas(), "laplacian": io::from_mat(l.matrix()) });
    Ok(serde_json::to_string_pretty(&doc).expect("serializes") + "\n")
}
