//! Cross-module consistency: every quantity computable along two independent
//! routes is compared here.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use toa_core::kernel::{
    build_correction_grid, correction_pde_residual_grids, t0_eval, EngineConfig, KernelEngine,
};
use toa_core::operator::{assemble, AssembleOptions, Wavefunction};
use toa_core::potential::PotentialSeries;
use toa_core::quartic::QuarticParams;
use toa_core::series::{build_alpha, build_alpha_orders};

fn quartic_potential() -> PotentialSeries {
    PotentialSeries::new(vec![0.0, 0.0, 0.0, 1.0], 1.0, 1.0).unwrap()
}

#[test]
fn correction_grid_matches_quartic_t1_closed_form() {
    let params = QuarticParams::natural(1.0).unwrap();
    let grid = build_correction_grid(&quartic_potential(), 1, 1.0, 1.0, 11, 1e-10).unwrap();
    for (i, &u) in grid.u_nodes().iter().enumerate() {
        for (j, &v) in grid.v_nodes().iter().enumerate() {
            let reference = params.t1(u, v).unwrap();
            if reference.abs() > 1e-12 {
                assert_relative_eq!(grid.node_value(i, j), reference, max_relative = 1e-6);
            }
        }
    }
}

#[test]
fn grid_backed_pde_residual_vanishes_with_stencil() {
    let pot = quartic_potential();
    let engine = KernelEngine::new(
        pot.clone(),
        EngineConfig {
            nodes: 25,
            tol: 1e-11,
            ..EngineConfig::on_rectangle(1.0, 1.0)
        },
    )
    .unwrap();
    let grids = vec![engine.grid(0).unwrap(), engine.grid(1).unwrap()];
    let (u, v) = (0.62, 0.55);
    let r1 = correction_pde_residual_grids(&pot, 1, &grids, u, v, 4e-3)
        .unwrap()
        .abs();
    let r2 = correction_pde_residual_grids(&pot, 1, &grids, u, v, 2e-3)
        .unwrap()
        .abs();
    assert!(r2 < 0.4 * r1 + 1e-12, "r(2h) = {r1:.3e}, r(h) = {r2:.3e}");
}

#[test]
fn series_partial_sum_matches_quartic_closed_forms() {
    // truncated double series against T0+T1+T2+T3 at (0.5, 0.5)
    let params = QuarticParams::natural(1.0).unwrap();
    let table = build_alpha(&quartic_potential(), 24, 24);
    let (u, v) = (0.5, 0.5);
    let closed: f64 = (0..=3)
        .map(|n| params.kernel_factor(n, u, v).unwrap())
        .sum();
    assert_abs_diff_eq!(table.eval(u, v).value, closed, epsilon = 1e-8);
}

#[test]
fn order_series_matches_quartic_t1() {
    let params = QuarticParams::natural(1.0).unwrap();
    let orders = build_alpha_orders(&quartic_potential(), 40, 12);
    let (u, v) = (0.5, 0.5);
    let series = orders.order_eval(1, u, v).unwrap().value;
    assert_abs_diff_eq!(series, params.t1(u, v).unwrap(), epsilon = 1e-9);
}

#[test]
fn engine_correction_matches_order_series() {
    // quadrature route vs coefficient-recurrence route for T1 off-grid
    let pot = quartic_potential();
    let engine = KernelEngine::new(
        pot.clone(),
        EngineConfig {
            nodes: 21,
            ..EngineConfig::on_rectangle(1.0, 1.0)
        },
    )
    .unwrap();
    let orders = build_alpha_orders(&pot, 40, 12);
    for (u, v) in [(0.31, 0.72), (0.85, 0.4), (0.5, 0.97)] {
        let from_grid = engine.correction(1, u, v).unwrap();
        let from_series = orders.order_eval(1, u, v).unwrap().value;
        assert_relative_eq!(from_grid, from_series, max_relative = 1e-6);
    }
}

#[test]
fn wigner_series_matches_quartic_closed_forms_away_from_radius() {
    let params = QuarticParams::natural(1.0).unwrap();
    let table = build_alpha_orders(&quartic_potential(), 62, 15);
    for (q, p) in [(-1.0, 10.0), (-0.7, 5.0)] {
        for n in 1..=3usize {
            let series = toa_core::wigner::wigner_of_orders(&table, n)
                .unwrap()
                .eval(q, p);
            let closed = params.wigner_correction(n, q, p).unwrap();
            assert_relative_eq!(series, closed, max_relative = 1e-4);
        }
    }
}

/// Free-particle Gaussian benchmark: the discretized operator expectation
/// must sit within 10% of the classical flight time −μq₀/p₀, and so must the
/// independent oracle (the peak of |ψ(0,t)|² under analytic free evolution).
#[test]
fn gaussian_packet_arrival_time_benchmark() {
    let (q0, p0) = (-3.0, 2.0);
    let sigma_p = 0.5;
    let sigma_x = 1.0 / (2.0 * sigma_p); // minimum-uncertainty packet
    let classical = -q0 / p0;

    let matrix = assemble(
        &PotentialSeries::free(1.0, 1.0),
        0,
        20.0,
        800,
        &AssembleOptions::default(),
    )
    .unwrap();
    let psi = Wavefunction::gaussian(matrix.grid(), matrix.step(), q0, p0, sigma_x, 1.0).unwrap();
    let expectation = matrix.expectation(&psi).unwrap();
    assert!(
        (expectation - classical).abs() <= 0.10 * classical,
        "expectation {expectation} outside 10% of {classical}"
    );

    // oracle: maximize |psi(0,t)|² for the analytically evolved packet,
    // sigma_x(t)² = sigma_x² + (ħ t / (2 μ sigma_x))²
    let neg_log_density = |t: f64| {
        let s2 = sigma_x * sigma_x + (t / (2.0 * sigma_x)).powi(2);
        let center = q0 + p0 * t;
        0.5 * s2.ln() + center * center / (2.0 * s2)
    };
    let (mut lo, mut hi) = (0.2, 4.0);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if neg_log_density(m1) < neg_log_density(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let peak = 0.5 * (lo + hi);
    assert!(
        (peak - classical).abs() <= 0.10 * classical,
        "peak arrival {peak} outside 10% of {classical}"
    );
    // frozen value of the oracle for these parameters
    assert_abs_diff_eq!(peak, 1.413427, epsilon = 1e-4);
}

#[test]
fn expectation_converges_under_grid_refinement() {
    let free = PotentialSeries::free(1.0, 1.0);
    let mut values = Vec::new();
    for n in [400usize, 800] {
        let m = assemble(&free, 0, 20.0, n, &AssembleOptions::default()).unwrap();
        let psi = Wavefunction::gaussian(m.grid(), m.step(), -3.0, 2.0, 1.0, 1.0).unwrap();
        values.push(m.expectation(&psi).unwrap());
    }
    let change = ((values[1] - values[0]) / values[1]).abs();
    assert!(
        change < 0.01,
        "doubling N moved the expectation by {change:.3e}"
    );
}

#[test]
fn quartic_operator_with_first_correction_differs_from_weyl_term() {
    let pot = quartic_potential();
    let opts = AssembleOptions {
        nodes: 21,
        tol: 1e-9,
    };
    let weyl = assemble(&pot, 0, 1.0, 24, &opts).unwrap();
    let corrected = assemble(&pot, 1, 1.0, 24, &opts).unwrap();
    let engine = KernelEngine::new(
        pot,
        EngineConfig {
            u_min: -2.0,
            u_max: 2.0,
            v_max: 2.0,
            nodes: 21,
            tol: 1e-9,
        },
    )
    .unwrap();
    let mut max_entry_diff = 0.0f64;
    let mut max_t1 = 0.0f64;
    let n = weyl.len();
    for i in 0..n {
        for j in 0..n {
            let d = (corrected.entry(i, j) - weyl.entry(i, j)).norm();
            max_entry_diff = max_entry_diff.max(d);
            if i != j {
                let (qi, qj) = (weyl.grid()[i], weyl.grid()[j]);
                max_t1 = max_t1.max(engine.correction(1, qi + qj, qi - qj).unwrap().abs());
            }
        }
    }
    // the matrices differ exactly by the first correction (scaled by μ/ħ = 1)
    assert_relative_eq!(max_entry_diff, max_t1, max_relative = 1e-9);
    assert!(
        max_entry_diff > 1e-6,
        "correction should be visible at this scale"
    );
}

#[test]
fn t0_quadrature_is_deterministic() {
    let pot = quartic_potential();
    let a = t0_eval(&pot, 1.3, 0.9, 1e-11).unwrap().value;
    let b = t0_eval(&pot, 1.3, 0.9, 1e-11).unwrap().value;
    assert_eq!(a.to_bits(), b.to_bits());
}
