//! Adaptive Gauss–Kronrod quadrature (7–15 point pair).
//!
//! Worst-interval-first refinement with the usual QUADPACK-style error
//! rescaling. All state is local; results are deterministic for a fixed
//! build and input.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, ToaError};

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (positive half).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Weights of the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Weights of the 15-point Kronrod rule.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const MAX_PANELS: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    let mut fv = [0.0f64; 15];
    fv[7] = f_center;
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        let fsum = f1 + f2;
        res_kronrod += WGK[j] * fsum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * fsum;
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let raw_err = ((res_kronrod - res_gauss) * half).abs();
    res_abs *= half.abs();
    res_asc *= half.abs();

    let mut err = raw_err;
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }

    let value = res_kronrod * half;
    if !value.is_finite() || !err.is_finite() {
        err = f64::INFINITY;
    }
    Panel {
        a,
        b,
        value,
        error: err,
    }
}

/// Integrates `f` over [a, b] until the global error estimate satisfies
/// `err <= abs_tol + rel_tol * |value|`. Signed bounds are honored
/// (`a > b` negates).
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let f_ref: &dyn Fn(f64) -> f64 = &f;

    let mut heap = BinaryHeap::new();
    heap.push(gk15(f_ref, lo, hi));
    // panels too narrow to split further; they keep contributing to the
    // totals but are no longer refined
    let mut retired: Vec<Panel> = Vec::new();
    let mut panels = 1usize;

    loop {
        let mut total_value = 0.0;
        let mut total_error = 0.0;
        for p in heap.iter().chain(retired.iter()) {
            total_value += p.value;
            total_error += p.error;
        }
        if total_value.is_finite() && total_error <= abs_tol + rel_tol * total_value.abs() {
            return Ok(QuadResult {
                value: sign * total_value,
                error: total_error,
                panels,
            });
        }
        let worst = if panels >= MAX_PANELS {
            None
        } else {
            heap.pop()
        };
        let worst = match worst {
            Some(w) => w,
            // cap reached, or every panel is at floating-point resolution,
            // without meeting the target
            None => {
                return Err(ToaError::QuadratureFailure {
                    tol: abs_tol + rel_tol * total_value.abs(),
                    panels,
                    estimate: total_error,
                })
            }
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            retired.push(worst);
            continue;
        }
        heap.push(gk15(f_ref, worst.a, mid));
        heap.push(gk15(f_ref, mid, worst.b));
        panels += 1;
    }
}

/// Shorthand with a single combined absolute-and-relative tolerance.
pub fn integrate_tol(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    integrate(f, a, b, tol, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate_tol(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(r.value, 4.0 - 4.0 + 2.0, max_relative = 1e-14);
        assert_eq!(r.panels, 1);
    }

    #[test]
    fn signed_bounds() {
        let fwd = integrate_tol(|x| x.exp(), 0.0, 1.0, 1e-12).unwrap().value;
        let back = integrate_tol(|x| x.exp(), 1.0, 0.0, 1e-12).unwrap().value;
        assert_eq!(fwd, -back);
        assert_relative_eq!(fwd, std::f64::consts::E - 1.0, max_relative = 1e-14);
    }

    #[test]
    fn oscillatory_integrand_adapts() {
        let r = integrate_tol(|x| (40.0 * x).sin(), 0.0, 3.0, 1e-12).unwrap();
        let exact = (1.0 - (120.0f64).cos()) / 40.0;
        assert_relative_eq!(r.value, exact, epsilon = 1e-12);
        assert!(r.panels > 1);
    }

    #[test]
    fn mild_endpoint_singularity() {
        // sqrt singularity integrable: ∫_0^1 1/sqrt(x) dx = 2
        let r = integrate(|x| 1.0 / x.sqrt().max(1e-300), 0.0, 1.0, 1e-9, 1e-9).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn empty_interval() {
        let r = integrate_tol(|x| x, 3.0, 3.0, 1e-12).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn failure_reported() {
        // non-integrable interior singularity must hit the panel cap
        let res = integrate(|x| 1.0 / (x - 0.37).abs(), -1.0, 1.0, 1e-14, 1e-14);
        assert!(matches!(res, Err(ToaError::QuadratureFailure { .. })));
    }
}
