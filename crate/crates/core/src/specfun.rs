//! Generalized hypergeometric functions `ₚF_q` and the combinatorial factors
//! that appear in the closed-form kernels.
//!
//! Everything here is plain forward summation of the defining series with
//! compensated (Kahan) accumulation, a combined absolute/relative stopping
//! rule, a geometric tail bound, and a condition-number estimate
//! `Σ|term| / |Σ term|` that flags cancellation in the oscillatory regime.

use crate::error::{Result, ToaError};

/// Parameter lists of a generalized hypergeometric series.
///
/// Invariant: no denominator parameter is zero or a negative integer (the
/// series would divide by zero at some term).
#[derive(Debug, Clone)]
pub struct HypParams {
    numerator: Vec<f64>,
    denominator: Vec<f64>,
}

impl HypParams {
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>) -> Result<Self> {
        for &b in &denominator {
            if b <= 0.0 && b == b.floor() {
                return Err(ToaError::InvalidInput(format!(
                    "denominator parameter {b} is a non-positive integer"
                )));
            }
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    /// True if some numerator parameter is a non-positive integer, making the
    /// series terminate (a polynomial, convergent for every argument).
    fn terminates(&self) -> bool {
        self.numerator.iter().any(|&a| a <= 0.0 && a == a.floor())
    }
}

/// Stopping rule for forward summation.
#[derive(Debug, Clone, Copy)]
pub struct SumOptions {
    pub eps_rel: f64,
    pub eps_abs: f64,
    pub max_terms: usize,
}

impl Default for SumOptions {
    fn default() -> Self {
        Self {
            eps_rel: 1e-15,
            eps_abs: 1e-300,
            max_terms: 10_000,
        }
    }
}

/// Outcome of a summation, with convergence diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    /// Σ|term| / |value|; large values signal cancellation and loss of
    /// relative accuracy.
    pub condition: f64,
    pub last_term: f64,
}

/// Pochhammer symbol (x)_k = x (x+1) ··· (x+k−1), with (x)_0 = 1.
pub fn pochhammer(x: f64, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= x + i as f64;
    }
    acc
}

/// ₀F₁(;b;z) with default stopping options.
pub fn hyp0f1(b: f64, z: f64) -> Result<f64> {
    hyp0f1_with(b, z, &SumOptions::default()).map(|s| s.value)
}

/// ₀F₁(;b;z) = Σ_k z^k / ((b)_k k!).
pub fn hyp0f1_with(b: f64, z: f64, opts: &SumOptions) -> Result<SeriesSum> {
    if b <= 0.0 && b == b.floor() {
        return Err(ToaError::InvalidInput(format!(
            "0F1 denominator parameter {b} is a non-positive integer"
        )));
    }
    // same operation order as hyp_pfq_with an empty numerator list, so the
    // two entry points agree bit-for-bit
    sum_series(opts, |k, term| term / (b + k) * z / (k + 1.0))
}

/// ₚF_q(a₁..a_p; b₁..b_q; z) with default stopping options.
pub fn hyp_pfq(params: &HypParams, z: f64) -> Result<f64> {
    hyp_pfq_with(params, z, &SumOptions::default()).map(|s| s.value)
}

/// Generalized hypergeometric series.
///
/// Convergence domain: any z for p ≤ q (entire) or a terminating series;
/// |z| < 1 for p = q + 1. The only analytic continuation implemented is the
/// Pfaff transformation of ₂F₁ for z < −1, which is all the closed-form
/// kernels need.
pub fn hyp_pfq_with(params: &HypParams, z: f64, opts: &SumOptions) -> Result<SeriesSum> {
    let p = params.numerator.len();
    let q = params.denominator.len();
    if p > q + 1 && !params.terminates() && z != 0.0 {
        return Err(ToaError::Domain(format!(
            "{p}F{q} series diverges for nonzero argument"
        )));
    }
    if p == q + 1 && !params.terminates() && z.abs() >= 1.0 {
        if p == 2 && q == 1 && z < -1.0 {
            return pfaff_2f1(
                params.numerator[0],
                params.numerator[1],
                params.denominator[0],
                z,
                opts,
            );
        }
        return Err(ToaError::Domain(format!(
            "{p}F{q} argument {z} outside |z| < 1 and no continuation applies"
        )));
    }
    let a = params.numerator.clone();
    let b = params.denominator.clone();
    sum_series(opts, move |k, term| {
        let mut t = term;
        for &ai in &a {
            t *= ai + k;
        }
        for &bi in &b {
            t /= bi + k;
        }
        t * z / (k + 1.0)
    })
}

/// ₂F₁(a,b;c;z) = (1−z)^(−a) ₂F₁(a, c−b; c; z/(z−1)); for z < −1 the mapped
/// argument lies in (0,1).
fn pfaff_2f1(a: f64, b: f64, c: f64, z: f64, opts: &SumOptions) -> Result<SeriesSum> {
    let mapped = HypParams::new(vec![a, c - b], vec![c])?;
    let inner = hyp_pfq_with(&mapped, z / (z - 1.0), opts)?;
    let scale = (1.0 - z).powf(-a);
    Ok(SeriesSum {
        value: scale * inner.value,
        ..inner
    })
}

/// Kahan-compensated forward summation with term recurrence `next(k, t_k)`.
fn sum_series(opts: &SumOptions, next: impl Fn(f64, f64) -> f64) -> Result<SeriesSum> {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut abs_sum = 0.0f64;
    let mut term = 1.0f64;
    let mut k = 0usize;
    loop {
        // Kahan step
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        abs_sum += term.abs();

        let threshold = opts.eps_abs + opts.eps_rel * sum.abs();
        let next_term = next(k as f64, term);
        if !next_term.is_finite() {
            return Err(ToaError::Domain(format!(
                "series term became non-finite at k = {}",
                k + 1
            )));
        }
        if term.abs() < threshold {
            // geometric tail bound once the ratio settles below 1
            let ratio = if term != 0.0 {
                (next_term / term).abs()
            } else {
                0.0
            };
            if ratio < 1.0 && next_term.abs() / (1.0 - ratio) < threshold {
                return Ok(SeriesSum {
                    value: sum,
                    terms: k + 1,
                    condition: if sum != 0.0 {
                        abs_sum / sum.abs()
                    } else {
                        abs_sum
                    },
                    last_term: term,
                });
            }
        }
        if k + 1 >= opts.max_terms {
            return Err(ToaError::NonConvergence {
                max_terms: opts.max_terms,
                last_term: term,
            });
        }
        term = next_term;
        k += 1;
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // frozen 50-digit references
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // 50-digit reference values (rounded to f64) for the stopping-rule and
    // identity tests below.
    const REF_0F1_1_1: f64 = 2.279585302336067267437204; // = I0(2)
    const REF_0F1_54_132: f64 = 1.025174168581077220351106;
    const REF_2F1_HALF_1_54_M2: f64 = 0.6343847480861370215398804;

    #[test]
    fn pochhammer_basics() {
        for k in 0..8 {
            let mut fact = 1.0;
            for i in 1..=k {
                fact *= i as f64;
            }
            assert_eq!(pochhammer(1.0, k), fact);
        }
        assert_eq!(pochhammer(1.25, 2), 45.0 / 16.0);
        assert_eq!(pochhammer(-7.3, 0), 1.0);
    }

    #[test]
    fn hyp0f1_at_zero_and_one() {
        assert_eq!(hyp0f1(1.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(hyp0f1(1.0, 1.0).unwrap(), REF_0F1_1_1, max_relative = 1e-15);
        assert_relative_eq!(
            hyp0f1(1.25, 1.0 / 32.0).unwrap(),
            REF_0F1_54_132,
            max_relative = 1e-15
        );
    }

    #[test]
    fn hyp0f1_matches_bessel_integral_representation() {
        // 0F1(;1;z) = I0(2 sqrt z) = (1/pi) ∫_0^pi exp(2 sqrt z cos t) dt,
        // evaluated by the trapezoid rule (spectrally accurate for periodic
        // integrands).
        let z = 1.0f64;
        let n = 64;
        let mut acc = 0.0;
        for i in 0..=n {
            let t = std::f64::consts::PI * i as f64 / n as f64;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * (2.0 * z.sqrt() * t.cos()).exp();
        }
        let bessel = acc / n as f64;
        assert_relative_eq!(hyp0f1(1.0, z).unwrap(), bessel, max_relative = 1e-13);
    }

    #[test]
    fn hyp0f1_rational_term_oracle() {
        // sum the first terms of 0F1(;5/4;1/32) in exact rational arithmetic
        use num::rational::BigRational;
        use num::traits::ToPrimitive;
        use num::{BigInt, One, Zero};
        let z = BigRational::new(BigInt::from(1), BigInt::from(32));
        let b0 = BigRational::new(BigInt::from(5), BigInt::from(4));
        let mut term = BigRational::one();
        let mut sum = BigRational::zero();
        for k in 0..12 {
            sum += term.clone();
            let kk = BigRational::from(BigInt::from(k));
            term = term * z.clone() / ((b0.clone() + kk.clone()) * (kk + BigRational::one()));
        }
        assert_relative_eq!(
            hyp0f1(1.25, 1.0 / 32.0).unwrap(),
            sum.to_f64().unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn pfq_trivial_and_pfaff() {
        let p = HypParams::new(vec![0.5, 1.0], vec![1.25]).unwrap();
        assert_eq!(hyp_pfq(&p, 0.0).unwrap(), 1.0);
        // Pfaff continuation at z = -2
        assert_relative_eq!(
            hyp_pfq(&p, -2.0).unwrap(),
            REF_2F1_HALF_1_54_M2,
            max_relative = 1e-13
        );
        // reference: 2F1(1/2,1;5/4;-50) from 50-digit arithmetic
        assert_relative_eq!(
            hyp_pfq(&p, -50.0).unwrap(),
            0.1745904689556500629173658,
            max_relative = 1e-12
        );
        // inside the disc the direct series is used
        assert_relative_eq!(
            hyp_pfq(&p, 0.5).unwrap(),
            1.31102877714605990523242,
            max_relative = 1e-14
        );
    }

    #[test]
    fn pfq_domain_errors() {
        let p = HypParams::new(vec![0.5, 1.0], vec![1.25]).unwrap();
        assert!(matches!(hyp_pfq(&p, 1.5), Err(ToaError::Domain(_))));
        let d = HypParams::new(vec![1.0, 2.0, 3.0], vec![1.5]).unwrap();
        assert!(matches!(hyp_pfq(&d, 0.5), Err(ToaError::Domain(_))));
        assert!(HypParams::new(vec![1.0], vec![-2.0]).is_err());
    }

    #[test]
    fn pfq_terminating_series_ignores_radius() {
        // 2F1(-2, 1; 3; z) is a polynomial: 1 - (2/3) z + z^2/6
        let p = HypParams::new(vec![-2.0, 1.0], vec![3.0]).unwrap();
        for z in [0.5, 3.0, -40.0] {
            let exact = 1.0 - 2.0 / 3.0 * z + z * z / 6.0;
            assert_relative_eq!(hyp_pfq(&p, z).unwrap(), exact, max_relative = 1e-14);
        }
    }

    #[test]
    fn nonconvergence_cap() {
        let opts = SumOptions {
            max_terms: 4,
            ..SumOptions::default()
        };
        assert!(matches!(
            hyp0f1_with(1.0, 50.0, &opts),
            Err(ToaError::NonConvergence { .. })
        ));
    }

    #[test]
    fn oscillatory_condition_estimate() {
        // 0F1(;1;-20) suffers cancellation; the condition number must say so
        let s = hyp0f1_with(1.0, -20.0, &SumOptions::default()).unwrap();
        assert_relative_eq!(s.value, -0.07648692511010153923501024, max_relative = 1e-11);
        assert!(s.condition > 1e2);
    }

    #[test]
    fn stopping_rule_monotone_against_reference() {
        // tightening eps_rel never moves the sum away from a 50-digit
        // reference (small floating slack allowed)
        let cases = [
            (1.0, -20.0, -0.07648692511010153923501024),
            (1.5, -12.25, 0.09385522838839844148528558),
            (2.0, 30.0, 1214.518946111960180771223),
            (1.25, 3.5, 6.944105051391812594672795),
            (0.75, -5.0, -0.3429519580275881251710888),
        ];
        for (b, z, reference) in cases {
            let mut eps = 1e-6;
            let mut prev = f64::INFINITY;
            while eps >= 1e-15 {
                let s = hyp0f1_with(
                    b,
                    z,
                    &SumOptions {
                        eps_rel: eps,
                        ..SumOptions::default()
                    },
                )
                .unwrap();
                let dist = (s.value - reference).abs();
                // cancellation sets the attainable floor: fluctuations up to
                // ~eps_machine * Σ|term| are noise, not regressions
                let floor = 4.0 * f64::EPSILON * s.condition * s.value.abs();
                assert!(
                    dist <= prev + floor.max(1e-15 * reference.abs().max(1.0)),
                    "distance grew when tightening eps_rel to {eps} for (b,z)=({b},{z})"
                );
                prev = dist;
                eps /= 2.0;
            }
        }
    }

    #[test]
    fn contiguous_relation_0f1() {
        // 0F1(;b-1;z) = 0F1(;b;z) + z/(b(b-1)) 0F1(;b+1;z)
        for (b, z) in [(1.5, 0.8), (2.25, -3.0), (3.5, 10.0), (1.25, -0.03125)] {
            let lhs = hyp0f1(b - 1.0, z).unwrap();
            let rhs = hyp0f1(b, z).unwrap() + z / (b * (b - 1.0)) * hyp0f1(b + 1.0, z).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_identity_0f1() {
        // d/dz 0F1(;b;z) = 0F1(;b+1;z)/b, finite-difference check
        let (b, z, h) = (1.75, 2.4, 1e-6);
        let fd = (hyp0f1(b, z + h).unwrap() - hyp0f1(b, z - h).unwrap()) / (2.0 * h);
        assert_relative_eq!(fd, hyp0f1(b + 1.0, z).unwrap() / b, max_relative = 1e-9);
    }

    proptest! {
        #[test]
        fn hyp0f1_equals_pfq_with_empty_numerator(b in 0.5f64..5.0, z in -20.0f64..20.0) {
            let direct = hyp0f1(b, z).unwrap();
            let via_pfq = hyp_pfq(&HypParams::new(vec![], vec![b]).unwrap(), z).unwrap();
            let scale = direct.abs().max(1e-3);
            prop_assert!((direct - via_pfq).abs() <= 1e-14 * scale);
        }
    }
}
