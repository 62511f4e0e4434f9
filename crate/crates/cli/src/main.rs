//! `toa` — computes time-of-arrival operator kernels, their quantum
//! corrections, phase-space transforms and operator discretizations, and
//! runs the cross-validation suite.
//!
//! All numeric paths are deterministic: identical flags on the same build
//! produce byte-identical output.

use std::fs;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use toa_core::kernel::{EngineConfig, KernelEngine};
use toa_core::operator::{assemble_with_engine, Wavefunction};
use toa_core::potential::PotentialSeries;
use toa_core::series::build_alpha_orders;
use toa_core::verify;
use toa_core::wigner::{
    classical_toa, hbar_scaling_from_table, ltoa_series, wigner_of_orders, PhaseSpaceSeries,
};
use toa_core::ToaError;

#[derive(Parser)]
#[command(name = "toa", version, about = "Time-of-arrival kernel toolbox")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the kernel factor T₀ and corrections Tₙ on a (u,v) lattice.
    Kernel(KernelArgs),
    /// Tabulate classical/local arrival times and phase-space corrections.
    Wigner(WignerArgs),
    /// Assemble the discretized operator matrix; optionally evaluate an
    /// expectation value on a wavefunction.
    Operator(OperatorArgs),
    /// Run the acceptance checks and emit a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PotentialOpts {
    /// JSON file {"coeffs":[a1,a2,...],"mass":μ,"hbar":ħ}
    #[arg(long)]
    potential: PathBuf,
    /// Override the file's mass
    #[arg(long)]
    mass: Option<f64>,
    /// Override the file's hbar
    #[arg(long)]
    hbar: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    potential: PotentialOpts,
    /// Highest correction order to include
    #[arg(long, default_value_t = 3)]
    nmax: usize,
    /// u range as start:stop:step (or a single value)
    #[arg(long, default_value = "0:1:0.1", allow_hyphen_values = true)]
    u: String,
    /// v range as start:stop:step (or a single value)
    #[arg(long, default_value = "0:1:0.1", allow_hyphen_values = true)]
    v: String,
    /// Nodes per axis of the correction grids
    #[arg(long, default_value_t = 33)]
    grid: usize,
    /// Quadrature tolerance
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WignerArgs {
    #[command(flatten)]
    potential: PotentialOpts,
    /// q range as start:stop:step
    #[arg(long, default_value = "-2:-0.5:0.25", allow_hyphen_values = true)]
    q: String,
    /// p range as start:stop:step
    #[arg(long, default_value = "1:5:1", allow_hyphen_values = true)]
    p: String,
    /// Highest phase-space correction order
    #[arg(long, default_value_t = 3)]
    nmax: usize,
    /// Truncation of the local-arrival-time series
    #[arg(long, default_value_t = 8)]
    kmax: usize,
    /// u-power truncation of the coefficient table
    #[arg(long, default_value_t = 48)]
    series_m: usize,
    /// v-power truncation of the coefficient table
    #[arg(long, default_value_t = 12)]
    series_j: usize,
    /// Quadrature tolerance
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OperatorArgs {
    #[command(flatten)]
    potential: PotentialOpts,
    /// Half-width L of the coordinate grid [−L, L]
    #[arg(long, default_value_t = 5.0)]
    length: f64,
    /// Number of grid points
    #[arg(long, default_value_t = 64)]
    points: usize,
    /// Highest correction order in the kernel
    #[arg(long, default_value_t = 0)]
    nmax: usize,
    /// Nodes per axis of the correction grids
    #[arg(long, default_value_t = 33)]
    grid: usize,
    /// Quadrature tolerance
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Wavefunction CSV (q,re,im) to resample onto the grid
    #[arg(long)]
    psi: Option<PathBuf>,
    /// Output path for the matrix CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only checks whose name contains this substring
    #[arg(long)]
    only: Option<String>,
    /// Output path for the JSON report (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Kernel(args) => cmd_kernel(args),
        Command::Wigner(args) => cmd_wigner(args),
        Command::Operator(args) => cmd_operator(args),
        Command::Verify(args) => return cmd_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(&err),
    }
}

/// Exit code 2 for configuration problems, 3 for numerical failures, with a
/// machine-readable JSON error on stderr.
fn fail(err: &ToaError) -> ExitCode {
    let (kind, code) = match err {
        ToaError::InvalidInput(_) | ToaError::Parse(_) | ToaError::Io(_) => ("config", 2),
        _ => ("numerical", 3),
    };
    let payload = serde_json::json!({
        "error": { "kind": kind, "message": err.to_string() }
    });
    eprintln!("{payload}");
    ExitCode::from(code)
}

fn load_potential(opts: &PotentialOpts) -> Result<PotentialSeries, ToaError> {
    let text = fs::read_to_string(&opts.potential)?;
    let pot = PotentialSeries::from_json(&text)?;
    let mass = opts.mass.unwrap_or(pot.mass());
    let hbar = opts.hbar.unwrap_or(pot.hbar());
    pot.with_constants(mass, hbar)
}

/// Parses `start:stop:step` (endpoints inclusive within 1e−12) or a single
/// number.
fn parse_range(text: &str) -> Result<Vec<f64>, ToaError> {
    let bad = |m: &str| ToaError::InvalidInput(format!("range '{text}': {m}"));
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| -> Result<f64, ToaError> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("'{s}' is not a number")))
    };
    match parts.len() {
        1 => Ok(vec![num(parts[0])?]),
        3 => {
            let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if step <= 0.0 && stop > start {
                return Err(bad("step must be positive"));
            }
            if step == 0.0 {
                return Err(bad("step must be nonzero"));
            }
            let slack = 1e-12 * step.abs().max(stop.abs()).max(1.0);
            let mut vals = Vec::new();
            let mut k = 0usize;
            loop {
                let x = start + step * k as f64;
                if (step > 0.0 && x > stop + slack) || (step < 0.0 && x < stop - slack) {
                    break;
                }
                // snap the last lattice point onto the endpoint
                vals.push(if (x - stop).abs() <= slack { stop } else { x });
                k += 1;
                if k > 1_000_000 {
                    return Err(bad("more than 1e6 lattice points"));
                }
            }
            if vals.is_empty() {
                return Err(bad("empty range"));
            }
            Ok(vals)
        }
        _ => Err(bad("expected start:stop:step or a single value")),
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), ToaError> {
    match out {
        Some(path) => {
            fs::write(path, content)?;
            Ok(())
        }
        None => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .map_err(ToaError::from)?;
            Ok(())
        }
    }
}

fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string() // normalize -0
    } else {
        format!("{x}")
    }
}

fn cmd_kernel(args: KernelArgs) -> Result<(), ToaError> {
    let pot = load_potential(&args.potential)?;
    let us = parse_range(&args.u)?;
    let vs = parse_range(&args.v)?;
    let u_hi = us.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let u_lo = us.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
    let v_hi = vs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-6);
    let engine = KernelEngine::new(
        pot,
        EngineConfig {
            u_min: u_lo,
            u_max: u_hi.max(u_lo + 1e-6),
            v_max: v_hi,
            nodes: args.grid,
            tol: args.tol,
        },
    )?;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(us.len() * vs.len());
    for &u in &us {
        for &v in &vs {
            let mut row = vec![u, v];
            let mut sum = 0.0;
            for n in 0..=args.nmax {
                let tn = if n == 0 {
                    engine.t0(u, v)?
                } else {
                    engine.correction(n, u, v)?
                };
                row.push(tn);
                sum += tn;
            }
            row.push(sum);
            rows.push(row);
        }
    }

    let mut names = vec!["u".to_string(), "v".to_string()];
    names.extend((0..=args.nmax).map(|n| format!("t{n}")));
    names.push("sum".to_string());
    write_output(&args.out, &render_table(&names, &rows, args.format))
}

fn cmd_wigner(args: WignerArgs) -> Result<(), ToaError> {
    let pot = load_potential(&args.potential)?;
    let qs = parse_range(&args.q)?;
    let ps = parse_range(&args.p)?;
    let table = build_alpha_orders(&pot, args.series_m, args.series_j.max(args.nmax + 2));
    let transforms: Vec<PhaseSpaceSeries> = (1..=args.nmax)
        .map(|n| wigner_of_orders(&table, n))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::with_capacity(qs.len() * ps.len());
    for &q in &qs {
        for &p in &ps {
            let mut row = vec![q, p];
            row.push(classical_toa(&pot, q, p, args.tol).unwrap_or(f64::NAN));
            row.push(ltoa_series(&pot, q, p, args.kmax).unwrap_or(f64::NAN));
            for t in &transforms {
                // NaN marks points outside the reach of the truncated series
                // (the boundary term no longer small against the value)
                let (value, tail) = t.eval_with_tail(q, p, pot.hbar());
                row.push(if tail > 1e-3 * value.abs().max(1e-300) && tail > 1e-300 {
                    f64::NAN
                } else {
                    value
                });
            }
            for n in 1..=args.nmax {
                let exponent =
                    hbar_scaling_from_table(&table, n, pot.hbar(), 0.5 * pot.hbar(), q, p)
                        .unwrap_or(f64::NAN);
                row.push(exponent);
            }
            rows.push(row);
        }
    }

    let mut names = vec![
        "q".to_string(),
        "p".to_string(),
        "tau_classical".to_string(),
        format!("tau_ltoa_k{}", args.kmax),
    ];
    names.extend((1..=args.nmax).map(|n| format!("tau{n}")));
    names.extend((1..=args.nmax).map(|n| format!("scaling{n}")));
    write_output(&args.out, &render_table(&names, &rows, args.format))
}

fn cmd_operator(args: OperatorArgs) -> Result<(), ToaError> {
    let pot = load_potential(&args.potential)?;
    let hbar = pot.hbar();
    let engine = KernelEngine::new(
        pot,
        EngineConfig {
            u_min: -2.0 * args.length,
            u_max: 2.0 * args.length,
            v_max: 2.0 * args.length,
            nodes: args.grid,
            tol: args.tol,
        },
    )?;
    let matrix = assemble_with_engine(&engine, args.nmax, args.length, args.points)?;

    let mut csv = Vec::new();
    matrix.write_csv(&mut csv)?;
    let csv = String::from_utf8(csv).expect("csv is utf8");
    write_output(&args.out, &csv)?;

    if let Some(psi_path) = &args.psi {
        let file = fs::File::open(psi_path)?;
        let psi = Wavefunction::from_csv(BufReader::new(file), matrix.grid(), matrix.step())?;
        let raw = matrix.raw_expectation(&psi);
        let value = matrix.expectation(&psi)?;
        let record = serde_json::json!({
            "value": value,
            "imag_residue": raw.im,
            "hermiticity_defect": matrix.hermiticity_defect(),
            "grid_points": args.points,
            "n_max": args.nmax,
            "hbar": hbar,
        });
        println!("{record}");
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let results = verify::run_filtered(args.only.as_deref());
    if results.is_empty() {
        return fail(&ToaError::InvalidInput(format!(
            "no check matches '{}'; known checks: {}",
            args.only.unwrap_or_default(),
            verify::CHECK_NAMES.join(", ")
        )));
    }
    let report = verify::Report::from_checks(results);
    let rendered = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(e) = write_output(&args.out, &format!("{rendered}\n")) {
        return fail(&e);
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn render_table(names: &[String], rows: &[Vec<f64>], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = names.join(",");
            out.push('\n');
            for row in rows {
                let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let objects: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    let map: serde_json::Map<String, serde_json::Value> = names
                        .iter()
                        .zip(row)
                        .map(|(name, &x)| {
                            let value = if x.is_finite() {
                                serde_json::json!(x)
                            } else {
                                serde_json::Value::Null
                            };
                            (name.clone(), value)
                        })
                        .collect();
                    serde_json::Value::Object(map)
                })
                .collect();
            let mut out = serde_json::to_string_pretty(&objects).expect("rows serialize");
            out.push('\n');
            out
        }
    }
}
