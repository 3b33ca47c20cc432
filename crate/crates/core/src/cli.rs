//! Command-line front end: `mfunction`, `bounds` and `sparse-experiment`.
//!
//! Exit codes: 0 success, 1 bad input or config, 2 m-function
//! non-convergence, 3 bound violation, 4 invalid window sequence.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bounds::{run_suite, write_csv, CheckKind, SuiteOptions, Tolerance};
use crate::config::ExperimentPlan;
use crate::error::{Error, Result};
use crate::experiments::{corollary2_csv, discrepancy_svg, run_corollary2, run_theorem2, theorem2_csv, RowOutcome};
use crate::ode::QuadratureGrid;
use crate::potential::{Interpolation, PotentialSpec};
use crate::weyl::{m_function_with_diagnostic, MFunctionRequest, DEFAULT_TOLERANCE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_WINDOWS: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "weylvd",
    version,
    about = "Weyl m-functions and value distribution for half-line Schrodinger operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate m(z) for a potential given as an `x,v` CSV file.
    Mfunction(MfunctionArgs),
    /// Run seeded random draws of the bound verifiers.
    Bounds(BoundsArgs),
    /// Run the window-sequence experiments described by a config file.
    SparseExperiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InterpArg {
    Constant,
    Linear,
}

#[derive(Debug, Args)]
pub struct MfunctionArgs {
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    /// Spectral parameter as `re,im`; repeat for several rows.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z: Vec<String>,
    /// Fixed truncation point (no automatic doubling).
    #[arg(long)]
    pub tail: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = InterpArg::Constant)]
    pub interpolation: InterpArg,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// `lemma1`..`lemma4`, `theorem1`, a comma list, or `all`.
    #[arg(long, default_value = "all")]
    pub check: String,
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = crate::bounds::DEFAULT_TOL_REL)]
    pub tol_rel: f64,
    #[arg(long, default_value_t = crate::bounds::DEFAULT_TOL_ABS)]
    pub tol_abs: f64,
    /// Largest quadrature step along orbits.
    #[arg(long)]
    pub max_step: Option<f64>,
    /// Largest phase advance per quadrature panel.
    #[arg(long)]
    pub max_phase: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub outdir: PathBuf,
    /// Also write discrepancy.svg.
    #[arg(long)]
    pub plot: bool,
}

/// Caps the rayon pool from `WEYLVD_THREADS` (0 or unset means automatic).
pub fn configure_threads() {
    let n = std::env::var("WEYLVD_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()).unwrap_or(0);
    if n > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Mfunction(a) => cmd_mfunction(&a),
        Command::Bounds(a) => cmd_bounds(&a),
        Command::SparseExperiment(a) => cmd_sparse_experiment(&a),
    }
}

fn parse_z(text: &str) -> Result<Complex64> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Parse(format!("expected z as 're,im', got '{text}'")));
    }
    let re: f64 = parts[0].parse().map_err(|_| Error::Parse(format!("bad real part in '{text}'")))?;
    let im: f64 = parts[1].parse().map_err(|_| Error::Parse(format!("bad imaginary part in '{text}'")))?;
    Ok(Complex64::new(re, im))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn cmd_mfunction(args: &MfunctionArgs) -> i32 {
    let interp = match args.interpolation {
        InterpArg::Constant => Interpolation::PiecewiseConstant,
        InterpArg::Linear => Interpolation::PiecewiseLinear,
    };
    let v = match PotentialSpec::read_csv(&args.potential, interp) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {}: {e}", args.potential.display());
            return EXIT_INPUT;
        }
    };
    let zs: Vec<Complex64> = match args.z.iter().map(|s| parse_z(s)).collect::<Result<_>>() {
        Ok(z) => z,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut text = String::from("re_z,im_z,re_m,im_m,gamma_diag\n");
    for z in zs {
        let mut req = MFunctionRequest::new(&v, args.start, z).with_tolerance(args.tolerance);
        if let Some(t) = args.tail {
            req = req.with_tail(t);
        }
        match m_function_with_diagnostic(&req) {
            Ok(r) => {
                let m = r.m.to_complex();
                text.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    z.re, z.im, m.re, m.im, r.diagnostic
                ));
            }
            Err(e @ Error::NonConvergence { .. }) => {
                eprintln!("error at z = {z}: {e}");
                return EXIT_NONCONVERGENCE;
            }
            Err(e) => {
                eprintln!("error at z = {z}: {e}");
                return EXIT_INPUT;
            }
        }
    }
    match emit(args.out.as_deref(), &text) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

pub fn cmd_bounds(args: &BoundsArgs) -> i32 {
    let checks = match CheckKind::parse_list(&args.check) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut grid = QuadratureGrid::default();
    if let Some(s) = args.max_step {
        grid.max_step = s;
    }
    if let Some(p) = args.max_phase {
        grid.max_phase = p;
    }
    let opts = SuiteOptions {
        draws: args.draws,
        seed: args.seed,
        tol: Tolerance { rel: args.tol_rel, abs: args.tol_abs },
        grid,
        epsilon: args.epsilon,
    };
    let rows = match run_suite(&checks, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut buf = Vec::new();
    if let Err(e) = write_csv(&mut buf, &rows) {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    let written = match &args.out {
        Some(p) => fs::write(p, &buf).map_err(Error::from),
        None => io::stdout().write_all(&buf).map_err(Error::from),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    for &check in &checks {
        let mine: Vec<_> = rows.iter().filter(|r| r.check == check).collect();
        let passed = mine.iter().filter(|r| r.result.pass).count();
        eprintln!("{check}: {passed}/{} passed", mine.len());
    }
    let failures: Vec<_> = rows.iter().filter(|r| !r.result.pass).collect();
    for r in &failures {
        eprintln!(
            "violation: {} seed {} lhs {:.6e} rhs {:.6e} inputs {}",
            r.check, r.seed, r.result.lhs, r.result.rhs, r.result.inputs_digest
        );
    }
    if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    seed: Option<u64>,
    outputs: Vec<OutputEntry>,
    corollary2_targets: Option<CorollaryTargets>,
    failed_rows: usize,
}

#[derive(Serialize)]
struct OutputEntry {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct CorollaryTargets {
    left: f64,
    right: f64,
    gap: f64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::InvalidWindowSequence(_) | Error::InvalidWindow { .. } => EXIT_WINDOWS,
        _ => EXIT_INPUT,
    }
}

pub fn cmd_sparse_experiment(args: &ExperimentArgs) -> i32 {
    match sparse_experiment(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

fn sparse_experiment(args: &ExperimentArgs) -> Result<i32> {
    let config_bytes = fs::read(&args.config)?;
    let text = String::from_utf8(config_bytes.clone()).map_err(|e| Error::Parse(e.to_string()))?;
    let plan = ExperimentPlan::parse(&text, args.config.parent().unwrap_or(Path::new(".")))?;
    plan.theorem2.validate()?;
    if let Some(c) = &plan.corollary2 {
        c.validate()?;
    }
    fs::create_dir_all(&args.outdir)?;

    let mut outputs = Vec::new();
    let mut write = |name: &str, body: &str| -> Result<()> {
        fs::write(args.outdir.join(name), body)?;
        outputs.push(OutputEntry { file: name.to_string(), sha256: sha256_hex(body.as_bytes()) });
        Ok(())
    };

    let rows = run_theorem2(&plan.theorem2)?;
    let mut failed = 0;
    for r in &rows {
        if let RowOutcome::Failed { k, error } = r {
            log::warn!("window {k} failed: {error}");
            failed += 1;
        }
    }
    write("theorem2.csv", &theorem2_csv(&rows))?;
    let mut targets = None;
    if let Some(c) = &plan.corollary2 {
        let rec = run_corollary2(c)?;
        failed += rec.rows.iter().filter(|r| r.done().is_none()).count();
        write("corollary2.csv", &corollary2_csv(&rec))?;
        targets = Some(CorollaryTargets { left: rec.target_left, right: rec.target_right, gap: rec.target_gap });
    }
    if args.plot {
        write("discrepancy.svg", &discrepancy_svg(&rows))?;
    }
    let manifest = Manifest {
        tool: "weylvd",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(&config_bytes),
        seed: None,
        outputs,
        corollary2_targets: targets,
        failed_rows: failed,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(args.outdir.join("manifest.json"), json + "\n")?;
    for r in rows.iter().filter_map(|r| r.done()) {
        eprintln!("k={} L={} left={:.4e} right={:.4e}", r.k, r.l_k, r.discrepancy_left, r.discrepancy_right);
    }
    Ok(EXIT_OK)
}
