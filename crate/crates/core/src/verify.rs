//! Acceptance suite: every cross-validation contract of the crate as a
//! runnable check, used both by the `acceptance` integration tests and the
//! CLI `verify` command.
//!
//! Each check reports a single non-negative discrepancy metric `measured`
//! that must stay within `tolerance`; `detail` carries the per-part numbers.
//! Checks with several parts under different thresholds normalize each part
//! by its own threshold and report the worst ratio against tolerance 1.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::kernel::{t0_eval, tke_residual, EngineConfig, KernelEngine};
use crate::operator::{assemble, AssembleOptions, Wavefunction};
use crate::potential::PotentialSeries;
use crate::quartic::QuarticParams;
use crate::series::{build_alpha_orders, exact};
use crate::wigner::{classical_toa, hbar_scaling_from_table, ltoa_coefficient, wigner_of_orders};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub detail: String,
    pub runtime_ms: u128,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn from_checks(checks: Vec<CheckResult>) -> Self {
        Self {
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

pub const CHECK_NAMES: [&str; 12] = [
    "free-particle-kernel",
    "linear-corrections-vanish",
    "quartic-t0-closed-form",
    "quartic-corrections-closed-form",
    "tke-residual-convergence",
    "series-oracle-equivalence",
    "classical-toa",
    "hbar-scaling",
    "classical-limit-ltoa",
    "operator-hermiticity",
    "correction-ordering",
    "kernel-symmetry",
];

/// Runs every check whose name contains `filter` (all of them when `None`).
pub fn run_filtered(filter: Option<&str>) -> Vec<CheckResult> {
    CHECK_NAMES
        .iter()
        .filter(|name| filter.is_none_or(|f| name.contains(f)))
        .map(|name| run_named(name))
        .collect()
}

pub fn run_all() -> Vec<CheckResult> {
    run_filtered(None)
}

/// Runs one check by exact name; panics inside a check are converted into a
/// failed result instead of aborting the caller.
pub fn run_named(name: &str) -> CheckResult {
    let start = Instant::now();
    let body: fn() -> CheckOutcome = match name {
        "free-particle-kernel" => check_free_particle,
        "linear-corrections-vanish" => check_linear_vanishing,
        "quartic-t0-closed-form" => check_quartic_t0,
        "quartic-corrections-closed-form" => check_quartic_corrections,
        "tke-residual-convergence" => check_tke_residual,
        "series-oracle-equivalence" => check_series_oracle,
        "classical-toa" => check_classical_toa,
        "hbar-scaling" => check_hbar_scaling,
        "classical-limit-ltoa" => check_classical_limit,
        "operator-hermiticity" => check_operator,
        "correction-ordering" => check_ordering,
        "kernel-symmetry" => check_symmetry,
        other => {
            return CheckResult {
                name: "unknown",
                passed: false,
                measured: f64::NAN,
                expected: 0.0,
                tolerance: 0.0,
                detail: format!("no check named '{other}'"),
                runtime_ms: 0,
            }
        }
    };
    let static_name = CHECK_NAMES
        .iter()
        .find(|n| **n == name)
        .copied()
        .unwrap_or("unknown");
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let runtime_ms = start.elapsed().as_millis();
    match outcome {
        Ok(o) => {
            let mut passed = o.measured <= o.tolerance && o.measured.is_finite() && o.extra_ok;
            if let Some(limit) = o.runtime_limit_ms {
                passed &= runtime_ms < limit;
            }
            CheckResult {
                name: static_name,
                passed,
                measured: o.measured,
                expected: 0.0,
                tolerance: o.tolerance,
                detail: o.detail,
                runtime_ms,
            }
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "opaque panic".into());
            CheckResult {
                name: static_name,
                passed: false,
                measured: f64::NAN,
                expected: 0.0,
                tolerance: 0.0,
                detail: format!("check panicked: {msg}"),
                runtime_ms,
            }
        }
    }
}

struct CheckOutcome {
    measured: f64,
    tolerance: f64,
    detail: String,
    /// additional pass conditions beyond measured <= tolerance
    extra_ok: bool,
    runtime_limit_ms: Option<u128>,
}

fn quartic_pot() -> PotentialSeries {
    PotentialSeries::new(vec![0.0, 0.0, 0.0, 1.0], 1.0, 1.0).unwrap()
}

fn lattice(max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect()
}

/// Full kernel equals u/4 for the free particle, every order.
fn check_free_particle() -> CheckOutcome {
    let engine = KernelEngine::new(
        PotentialSeries::free(1.0, 1.0),
        EngineConfig {
            nodes: 21,
            tol: 1e-12,
            ..EngineConfig::on_rectangle(2.0, 2.0)
        },
    )
    .unwrap();
    let pts = lattice(2.0, 21);
    let mut worst = 0.0f64;
    for n_max in [0usize, 2] {
        for &u in &pts {
            for &v in &pts {
                let k = engine.full_kernel(n_max, u, v).unwrap().value;
                worst = worst.max((k - 0.25 * u).abs());
            }
        }
    }
    CheckOutcome {
        measured: worst,
        tolerance: 1e-13,
        detail: format!("max |T - u/4| = {worst:.3e} over 21x21 in [0,2]^2, n_max in {{0,2}}"),
        extra_ok: true,
        runtime_limit_ms: Some(1000),
    }
}

/// Quantum corrections of a linear system vanish identically.
fn check_linear_vanishing() -> CheckOutcome {
    let pot = PotentialSeries::new(vec![1.0, 1.0], 1.0, 1.0).unwrap();
    let engine = KernelEngine::new(
        pot,
        EngineConfig {
            nodes: 21,
            ..EngineConfig::on_rectangle(1.0, 1.0)
        },
    )
    .unwrap();
    let pts = lattice(1.0, 21);
    let mut worst = 0.0f64;
    for n in 1..=2usize {
        let grid = engine.grid(n).unwrap();
        for &u in &pts {
            for &v in &pts {
                worst = worst.max(grid.value_at(u, v).abs());
            }
        }
    }
    CheckOutcome {
        measured: worst,
        tolerance: 1e-12,
        detail: format!("max |T_n|, n=1,2 over 21x21 in [0,1]^2 = {worst:.3e} for V = q + q^2"),
        extra_ok: true,
        runtime_limit_ms: None,
    }
}

/// Generic T0 quadrature against the quartic hypergeometric closed form.
fn check_quartic_t0() -> CheckOutcome {
    let pot = quartic_pot();
    let params = QuarticParams::natural(1.0).unwrap();
    let eta = params.eta();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a0c_51d3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let u: f64 = rng.random_range(0.05..=2.0);
        let frac: f64 = rng.random_range(0.01..=1.0);
        // keep the hypergeometric argument η u⁴ v² inside [0, 10]
        let v = (10.0 * frac / (eta * u.powi(4))).sqrt();
        let reference = params.t0(u, v).unwrap();
        let generic = t0_eval(&pot, u, v, 1e-10).unwrap().value;
        worst = worst.max(((generic - reference) / reference).abs());
    }
    CheckOutcome {
        measured: worst,
        tolerance: 1e-8,
        detail: format!("max relative error over 50 samples with η u⁴v² <= 10: {worst:.3e}"),
        extra_ok: true,
        runtime_limit_ms: Some(10_000),
    }
}

/// Correction grids against the quartic closed forms T1, T2, T3.
fn check_quartic_corrections() -> CheckOutcome {
    let pot = quartic_pot();
    let params = QuarticParams::natural(1.0).unwrap();
    let engine = KernelEngine::new(
        pot,
        EngineConfig {
            nodes: 15,
            ..EngineConfig::on_rectangle(1.0, 1.0)
        },
    )
    .unwrap();
    let thresholds = [1e-6, 1e-5, 1e-5];
    let mut ratios = Vec::new();
    let mut details = Vec::new();
    for n in 1..=3usize {
        let grid = engine.grid(n).unwrap();
        let mut err = 0.0f64;
        for (i, &u) in grid.u_nodes().iter().enumerate() {
            for (j, &v) in grid.v_nodes().iter().enumerate() {
                let reference = params.kernel_factor(n, u, v).unwrap();
                if reference.abs() > 1e-12 {
                    err = err.max(((grid.node_value(i, j) - reference) / reference).abs());
                }
            }
        }
        ratios.push(err / thresholds[n - 1]);
        details.push(format!(
            "T{n} rel err {err:.3e} (limit {:.0e})",
            thresholds[n - 1]
        ));
    }
    let worst = ratios.iter().cloned().fold(0.0f64, f64::max);
    CheckOutcome {
        measured: worst,
        tolerance: 1.0,
        detail: details.join("; "),
        extra_ok: true,
        runtime_limit_ms: Some(120_000),
    }
}

/// The kernel-equation residual of the partial sum drops with every added
/// correction order.
fn check_tke_residual() -> CheckOutcome {
    let pot = quartic_pot();
    // the n_max = 3 residual is ~1e-7; the grids and the leading-term
    // quadrature must stay well below that once the stencil divides by 4h²
    let engine = KernelEngine::new(
        pot.clone(),
        EngineConfig {
            nodes: 49,
            tol: 1e-12,
            ..EngineConfig::on_rectangle(1.0, 1.0)
        },
    )
    .unwrap();
    let grids: Vec<_> = (1..=3).map(|n| engine.grid(n).unwrap()).collect();
    let (u, v, h) = (0.8, 0.8, 1e-3);
    let mut residuals = Vec::new();
    for n_max in 0..=3usize {
        let kernel = |uu: f64, vv: f64| {
            let mut t = t0_eval(&pot, uu, vv, 2e-14).unwrap().value;
            for g in grids.iter().take(n_max) {
                t += g.value_at(uu, vv);
            }
            t
        };
        // one Richardson halving removes the h² stencil bias, which would
        // otherwise floor the higher orders near 2e-7
        let coarse = tke_residual(&pot, kernel, u, v, h);
        let fine = tke_residual(&pot, kernel, u, v, 0.5 * h);
        residuals.push(((4.0 * fine - coarse) / 3.0).abs());
    }
    let monotone = residuals.windows(2).all(|w| w[1] < w[0]);
    let ratio = residuals[3] / residuals[0];
    CheckOutcome {
        measured: ratio,
        tolerance: 1e-3,
        detail: format!(
            "|residual| at (0.8,0.8) for n_max=0..3: {:.3e}, {:.3e}, {:.3e}, {:.3e}; monotone: {monotone}",
            residuals[0], residuals[1], residuals[2], residuals[3]
        ),
        extra_ok: monotone,
        runtime_limit_ms: None,
    }
}

/// Quadrature kernel against the exact-rational series oracle.
fn check_series_oracle() -> CheckOutcome {
    let pot = quartic_pot();
    let oracle = exact::build_alpha_exact(&pot, 32, 32).unwrap();
    let engine = KernelEngine::new(
        pot,
        EngineConfig {
            u_min: -0.5,
            u_max: 0.5,
            v_max: 0.5,
            nodes: 21,
            tol: 1e-11,
        },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x03e8_9b21);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let u: f64 = rng.random_range(-0.5..=0.5);
        let v: f64 = rng.random_range(-0.5..=0.5);
        let numeric = engine.full_kernel(3, u, v).unwrap().value;
        let reference = oracle.eval_f64(u, v).unwrap();
        worst = worst.max((numeric - reference).abs());
    }
    CheckOutcome {
        measured: worst,
        tolerance: 1e-8,
        detail: format!(
            "max |full_kernel(3) - exact series (M=N=32)| = {worst:.3e} over 25 samples, |u|,|v| <= 0.5"
        ),
        extra_ok: true,
        runtime_limit_ms: None,
    }
}

/// Classical arrival-time quadrature against closed forms.
fn check_classical_toa() -> CheckOutcome {
    // harmonic quarter period
    let harm = PotentialSeries::new(vec![0.0, 0.5], 1.0, 1.0).unwrap();
    let harm_err =
        (classical_toa(&harm, -1.0, 1.0, 1e-12).unwrap() - std::f64::consts::FRAC_PI_4).abs();

    // quartic against −(μq/p) 2F1(1/2,1;5/4;−2μλq⁴/p²)
    let pot = quartic_pot();
    let params = QuarticParams::natural(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x51ce_770f);
    let mut quartic_err = 0.0f64;
    for _ in 0..20 {
        let q: f64 = rng.random_range(-1.5..=-0.1);
        let p: f64 = rng.random_range(0.5..=5.0);
        let numeric = classical_toa(&pot, q, p, 1e-12).unwrap();
        let reference = params.tau_classical(q, p).unwrap();
        quartic_err = quartic_err.max(((numeric - reference) / reference).abs());
    }
    let measured = (harm_err / 1e-9).max(quartic_err / 1e-8);
    CheckOutcome {
        measured,
        tolerance: 1.0,
        detail: format!(
            "harmonic |τ − π/4| = {harm_err:.3e} (limit 1e-9); quartic max rel err = {quartic_err:.3e} (limit 1e-8) over 20 samples q<0, p>0"
        ),
        extra_ok: true,
        runtime_limit_ms: None,
    }
}

/// Measured ħ-exponent of the phase-space corrections equals 2n.
fn check_hbar_scaling() -> CheckOutcome {
    let pot = quartic_pot();
    let table = build_alpha_orders(&pot, 40, 13);
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for n in 1..=3usize {
        let e = hbar_scaling_from_table(&table, n, 1.0, 2.0, -1.0, 10.0).unwrap();
        worst = worst.max((e - 2.0 * n as f64).abs());
        details.push(format!("n={n}: {e:.9}"));
    }
    CheckOutcome {
        measured: worst,
        tolerance: 1e-6,
        detail: format!("exponents at |p|=10, q=-1: {}", details.join(", ")),
        extra_ok: true,
        runtime_limit_ms: None,
    }
}

/// ħ-independent part of the transform equals the local-time-of-arrival
/// coefficients order by order in 1/p.
fn check_classical_limit() -> CheckOutcome {
    let pot = quartic_pot();
    let table = build_alpha_orders(&pot, 28, 7);
    let tau0 = wigner_of_orders(&table, 0).unwrap();
    let q = -1.0;
    let mut worst = 0.0f64;
    for k in 0..=4usize {
        let series = tau0.classical_inv_p_coefficient(k, q);
        let local = ltoa_coefficient(&pot, q, k).unwrap();
        worst = worst.max((series - local).abs());
    }
    CheckOutcome {
        measured: worst,
        tolerance: 1e-10,
        detail: format!(
            "max |series - LTOA| coefficient difference through p^-9 at q=-1: {worst:.3e}"
        ),
        extra_ok: true,
        runtime_limit_ms: None,
    }
}

/// Assembled operator is Hermitian and yields real expectation values.
fn check_operator() -> CheckOutcome {
    let pot = quartic_pot();
    let matrix = assemble(
        &pot,
        1,
        1.0,
        128,
        &AssembleOptions {
            nodes: 25,
            tol: 1e-10,
        },
    )
    .unwrap();
    let defect = matrix.hermiticity_defect();
    let psi = Wavefunction::gaussian(matrix.grid(), matrix.step(), -0.4, 3.0, 0.15, 1.0).unwrap();
    let raw = matrix.raw_expectation(&psi);
    let imag_rel = raw.im.abs() / raw.re.abs().max(1e-300);
    let measured = (defect / 1e-14).max(imag_rel / 1e-10);
    CheckOutcome {
        measured,
        tolerance: 1.0,
        detail: format!(
            "hermiticity defect = {defect:.3e} (limit 1e-14); expectation {:.6} with relative imaginary residue {imag_rel:.3e} (limit 1e-10), N=128 quartic n_max=1",
            raw.re
        ),
        extra_ok: true,
        runtime_limit_ms: None,
    }
}

/// |T3| < |T2| < |T1| < |T0| at (u,v) = (1,1).
fn check_ordering() -> CheckOutcome {
    let params = QuarticParams::natural(1.0).unwrap();
    let vals: Vec<f64> = (0..=3)
        .map(|n| params.kernel_factor(n, 1.0, 1.0).unwrap().abs())
        .collect();
    let max_ratio = vals.windows(2).map(|w| w[1] / w[0]).fold(0.0f64, f64::max);
    CheckOutcome {
        measured: max_ratio,
        tolerance: 1.0,
        detail: format!(
            "|T0..T3|(1,1) = {:.6e}, {:.6e}, {:.6e}, {:.6e}",
            vals[0], vals[1], vals[2], vals[3]
        ),
        extra_ok: max_ratio < 1.0,
        runtime_limit_ms: None,
    }
}

/// full_kernel(u, v) = full_kernel(u, −v) across randomized potentials.
fn check_symmetry() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbead_cafe);
    let mut worst = 0.0f64;
    for _ in 0..40 {
        let degree = rng.random_range(3..=6);
        let coeffs: Vec<f64> = (0..degree)
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(-1.0..=1.0)
                }
            })
            .collect();
        let pot = PotentialSeries::new(coeffs, 1.0, 1.0).unwrap();
        let engine = KernelEngine::new(
            pot,
            EngineConfig {
                nodes: 9,
                tol: 1e-9,
                ..EngineConfig::on_rectangle(1.0, 1.0)
            },
        )
        .unwrap();
        for _ in 0..5 {
            let u: f64 = rng.random_range(0.05..=1.0);
            let v: f64 = rng.random_range(-1.0..=1.0);
            let plus = engine.full_kernel(1, u, v).unwrap().value;
            let minus = engine.full_kernel(1, u, -v).unwrap().value;
            worst = worst.max((plus - minus).abs());
        }
    }
    CheckOutcome {
        measured: worst,
        tolerance: 1e-12,
        detail: format!("max |T(u,v) - T(u,-v)| = {worst:.3e} over 200 randomized cases"),
        extra_ok: true,
        runtime_limit_ms: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_selects_by_substring() {
        let names: Vec<_> = CHECK_NAMES.iter().filter(|n| n.contains("tke")).collect();
        assert_eq!(
            names,
            ["tke-residual-convergence"].iter().collect::<Vec<_>>()
        );
    }

    #[test]
    fn unknown_check_is_reported_not_panicked() {
        let r = run_named("no-such-check");
        assert!(!r.passed);
        assert!(r.detail.contains("no-such-check"));
    }

    #[test]
    fn report_aggregates_pass_state() {
        let mk = |passed| CheckResult {
            name: "free-particle-kernel",
            passed,
            measured: 0.0,
            expected: 0.0,
            tolerance: 1.0,
            detail: String::new(),
            runtime_ms: 0,
        };
        assert!(Report::from_checks(vec![mk(true), mk(true)]).passed);
        assert!(!Report::from_checks(vec![mk(true), mk(false)]).passed);
    }
}
