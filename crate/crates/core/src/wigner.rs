//! Weyl–Wigner transforms of series kernels, the classical and local time of
//! arrival, and ħ-scaling measurements.
//!
//! The transform of one kernel monomial is exact: with the operator kernel
//! `(μ/iħ) sgn(q−q') T(q,q')` and `T ∋ c u^m v^{2j}`, the distributional
//! identity
//!
//! ```text
//! ∫ ν^{2j} sgn(ν) e^{−ipν/ħ} dν = 2 (2j)! / (i^{2j+1} (p/ħ)^{2j+1})
//! ```
//!
//! maps the term to `2^{m+1} μ (2j)! (−1)^{j+1} ħ^{2j} c · q^m / p^{2j+1}`.
//! The i-powers must cancel to a real number; the cancellation is computed
//! explicitly in complex arithmetic and checked, so a parity or indexing bug
//! surfaces as [`ToaError::NonRealResult`] instead of a silent sign error.
//! No numerical oscillatory integration is ever attempted.

use std::cell::RefCell;
use std::io::{self, Write};

use num::complex::Complex64;

use crate::error::{Result, ToaError};
use crate::kernel::factorial;
use crate::potential::PotentialSeries;
use crate::quadrature;
use crate::series::{AlphaOrderTable, AlphaTable};

/// One monomial of a phase-space function: `coeff · ħ^hbar_power · q^q_power
/// / p^{2j+1}`.
#[derive(Debug, Clone, Copy)]
pub struct PhaseTerm {
    pub q_power: usize,
    /// appears as p^{−(2j+1)}
    pub j: usize,
    pub hbar_power: usize,
    pub coeff: f64,
}

/// Phase-space series `𝒯(q,p) = Σ coeff · ħ^hp · q^m / p^{2j+1}`.
#[derive(Debug, Clone)]
pub struct PhaseSpaceSeries {
    terms: Vec<PhaseTerm>,
    mass: f64,
    hbar: f64,
}

impl PhaseSpaceSeries {
    pub fn terms(&self) -> &[PhaseTerm] {
        &self.terms
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.eval_with_hbar(q, p, self.hbar)
    }

    /// Evaluates with an explicit ħ, exercising the recorded per-term powers.
    pub fn eval_with_hbar(&self, q: f64, p: f64, hbar: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff * hbar.powi(t.hbar_power as i32) * q.powi(t.q_power as i32)
                    / p.powi(2 * t.j as i32 + 1)
            })
            .sum()
    }

    /// Value plus the largest contribution from the truncation boundary of
    /// the table (the maximal 1/p² order present). A boundary term that is
    /// not small against the value means (q,p) is outside the series' reach.
    pub fn eval_with_tail(&self, q: f64, p: f64, hbar: f64) -> (f64, f64) {
        let j_max = self.terms.iter().map(|t| t.j).max().unwrap_or(0);
        let mut value = 0.0;
        let mut tail = 0.0f64;
        for t in &self.terms {
            let c = t.coeff * hbar.powi(t.hbar_power as i32) * q.powi(t.q_power as i32)
                / p.powi(2 * t.j as i32 + 1);
            value += c;
            if t.j == j_max {
                tail = tail.max(c.abs());
            }
        }
        (value, tail)
    }

    /// Coefficient of p^{−(2j+1)} at fixed q, with ħ folded in.
    pub fn inv_p_coefficient(&self, j: usize, q: f64, hbar: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.j == j)
            .map(|t| t.coeff * hbar.powi(t.hbar_power as i32) * q.powi(t.q_power as i32))
            .sum()
    }

    /// Coefficient of p^{−(2j+1)} restricted to the ħ-independent terms, the
    /// piece that survives the classical limit.
    pub fn classical_inv_p_coefficient(&self, j: usize, q: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.j == j && t.hbar_power == 0)
            .map(|t| t.coeff * q.powi(t.q_power as i32))
            .sum()
    }

    /// CSV export: `m,j,hbar_power,coeff` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "m,j,hbar_power,coeff")?;
        for t in &self.terms {
            writeln!(w, "{},{},{},{}", t.q_power, t.j, t.hbar_power, t.coeff)?;
        }
        Ok(())
    }
}

/// Real part of the i-power product `(1/i) · 1/i^{v_pow+1}` from the kernel
/// prefactor and the sgn-moment identity. Errors when the product fails to
/// be real, which happens exactly for odd v-powers.
pub(crate) fn sgn_moment_phase(v_pow: usize) -> Result<f64> {
    let zeta = Complex64::i().powi(-(v_pow as i32 + 2));
    if zeta.im.abs() > 1e-14 * zeta.norm() {
        return Err(ToaError::NonRealResult(zeta.im.abs() / zeta.norm()));
    }
    Ok(zeta.re)
}

/// Transform of a plain coefficient table. The result is numeric at the
/// table's own ħ (recorded per term as ħ-power zero).
pub fn wigner_of_alpha(table: &AlphaTable) -> Result<PhaseSpaceSeries> {
    let mass = table.mass();
    let hbar = table.hbar();
    let mut terms = Vec::new();
    for m in 0..=table.m_max() {
        for n in 0..=table.n_max() {
            let alpha = table.get(m, n);
            if alpha == 0.0 {
                continue;
            }
            let phase = sgn_moment_phase(n)?;
            let coeff = 2.0
                * mass
                * factorial(n)
                * phase
                * 2f64.powi(m as i32)
                * hbar.powi(n as i32)
                * alpha;
            terms.push(PhaseTerm {
                q_power: m,
                j: n / 2,
                hbar_power: 0,
                coeff,
            });
        }
    }
    Ok(PhaseSpaceSeries { terms, mass, hbar })
}

/// Transform of the order-n kernel factor Tₙ taken from an ħ-split table.
/// Coefficients come out ħ-free with the ħ-power recorded per term; for a
/// correctly indexed table it equals 2n on every term.
pub fn wigner_of_orders(table: &AlphaOrderTable, n: usize) -> Result<PhaseSpaceSeries> {
    let mass = table.mass();
    let mut terms = Vec::new();
    for t in table.order_terms(n) {
        let v_pow = 2 * t.j;
        let phase = sgn_moment_phase(v_pow)?;
        // kernel coefficient is α (μ/2ħ²)^{J−n}; the ħ^{2J} of the moment
        // identity leaves ħ^{2n}
        let coeff = 2.0
            * mass
            * factorial(v_pow)
            * phase
            * 2f64.powi(t.m as i32)
            * (0.5 * mass).powi((t.j - n) as i32)
            * t.alpha;
        let hbar_power = 2 * t.j - 2 * (t.j - n);
        terms.push(PhaseTerm {
            q_power: t.m,
            j: t.j,
            hbar_power,
            coeff,
        });
    }
    Ok(PhaseSpaceSeries {
        terms,
        mass,
        hbar: table.hbar(),
    })
}

/// Classical time of arrival at the origin:
///
/// ```text
/// τ(q,p) = −sgn(p) √(μ/2) ∫₀^q dq' / √(H − V(q')),  H = p²/2μ + V(q)
/// ```
///
/// The substitution q' = q sin²θ removes the square-root endpoint
/// singularity that appears as p → 0; the classically forbidden
/// configuration (V ≥ H on the path) is detected by sampling first.
pub fn classical_toa(pot: &PotentialSeries, q: f64, p: f64, tol: f64) -> Result<f64> {
    if p == 0.0 {
        return Err(ToaError::Domain(
            "classical arrival time needs p != 0 (turning point at start)".into(),
        ));
    }
    let mass = pot.mass();
    let energy = p * p / (2.0 * mass) + pot.eval(q);
    // strict interior sampling
    for i in 1..256 {
        let x = q * i as f64 / 256.0;
        if pot.eval(x) >= energy - 1e-12 * (energy.abs() + 1.0) {
            return Err(ToaError::ClassicallyForbidden { q: x });
        }
    }
    let failure: RefCell<Option<ToaError>> = RefCell::new(None);
    let integral = quadrature::integrate(
        |theta| {
            let s = theta.sin();
            let arg = energy - pot.eval(q * s * s);
            if arg <= 0.0 {
                failure.replace(Some(ToaError::ClassicallyForbidden { q: q * s * s }));
                return 0.0;
            }
            (2.0 * theta).sin() / arg.sqrt()
        },
        0.0,
        std::f64::consts::FRAC_PI_2,
        tol,
        tol,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(-p.signum() * (mass / 2.0).sqrt() * q * integral.value)
}

/// (2k−1)!! with (−1)!! = 1.
fn double_factorial_odd(k: usize) -> f64 {
    let mut acc = 1.0;
    let mut i = 1;
    while i < 2 * k {
        acc *= (i) as f64;
        i += 2;
    }
    acc
}

/// Coefficient of p^{−(2k+1)} in the local-time-of-arrival expansion:
/// `−(−1)^k ((2k−1)!!/k!) μ^{k+1} ∫₀^q (V(q) − V(q'))^k dq'`.
pub fn ltoa_coefficient(pot: &PotentialSeries, q: f64, k: usize) -> Result<f64> {
    let moment = if k == 0 {
        q
    } else {
        let vq = pot.eval(q);
        quadrature::integrate(|x| (vq - pot.eval(x)).powi(k as i32), 0.0, q, 1e-13, 1e-13)?.value
    };
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(-sign * double_factorial_odd(k) / factorial(k) * pot.mass().powi(k as i32 + 1) * moment)
}

/// Local time of arrival: partial sum of the expansion of the classical
/// arrival time about the free flight, through order p^{−(2k_max+1)}.
pub fn ltoa_series(pot: &PotentialSeries, q: f64, p: f64, k_max: usize) -> Result<f64> {
    if p == 0.0 {
        return Err(ToaError::Domain("local arrival time needs p != 0".into()));
    }
    let mut acc = 0.0;
    for k in 0..=k_max {
        acc += ltoa_coefficient(pot, q, k)? / p.powi(2 * k as i32 + 1);
    }
    Ok(acc)
}

/// Measured ħ-scaling exponent of the order-n phase-space correction via a
/// two-point ratio: `log(𝒯ₙ(ħ₁)/𝒯ₙ(ħ₂)) / log(ħ₁/ħ₂)`. Contract: ≈ 2n.
pub fn hbar_scaling_check(
    pot: &PotentialSeries,
    n: usize,
    hbar1: f64,
    hbar2: f64,
    q: f64,
    p: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(ToaError::InvalidInput(
            "scaling check applies to corrections (n >= 1)".into(),
        ));
    }
    let table = crate::series::build_alpha_orders(pot, 32, n + 9);
    hbar_scaling_from_table(&table, n, hbar1, hbar2, q, p)
}

/// Same measurement reusing a prebuilt order table.
pub fn hbar_scaling_from_table(
    table: &AlphaOrderTable,
    n: usize,
    hbar1: f64,
    hbar2: f64,
    q: f64,
    p: f64,
) -> Result<f64> {
    if !(hbar1 > 0.0 && hbar2 > 0.0) || hbar1 == hbar2 {
        return Err(ToaError::InvalidInput(
            "scaling check needs two distinct positive hbar values".into(),
        ));
    }
    let series = wigner_of_orders(table, n)?;
    let v1 = series.eval_with_hbar(q, p, hbar1);
    let v2 = series.eval_with_hbar(q, p, hbar2);
    if v1.abs() < 1e-300 || v2.abs() < 1e-300 {
        return Err(ToaError::DegenerateSignal(v1.abs().max(v2.abs())));
    }
    let ratio = v1 / v2;
    if ratio <= 0.0 {
        return Err(ToaError::DegenerateSignal(ratio));
    }
    Ok(ratio.ln() / (hbar1 / hbar2).ln())
}
