//! Entire analytic potentials `V(q) = Σ_{s=1}^{S} a_s q^s` with exact
//! derivative evaluation, linearity classification and arrival-point shifts.
//!
//! There is deliberately no constant term: only potential differences
//! `V(x) − V(y)` enter the kernel formulas, so a constant is physically
//! inert; [`PotentialSeries::shift`] drops any constant it regenerates and
//! reports it to the caller.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ToaError};

/// Hard cap on the polynomial degree of a potential.
pub const MAX_DEGREE: usize = 32;

/// Truncated power-series potential together with the physical constants
/// (mass μ and ħ) that accompany it through every kernel formula.
///
/// Immutable after construction; cheap to clone and safe to share across
/// threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPotential")]
pub struct PotentialSeries {
    /// `coeffs[s-1]` is the coefficient a_s of q^s, s = 1..=S.
    coeffs: Vec<f64>,
    mass: f64,
    hbar: f64,
}

#[derive(Deserialize)]
struct RawPotential {
    coeffs: Vec<f64>,
    #[serde(default = "default_unit")]
    mass: f64,
    #[serde(default = "default_unit")]
    hbar: f64,
}

fn default_unit() -> f64 {
    1.0
}

impl TryFrom<RawPotential> for PotentialSeries {
    type Error = ToaError;

    fn try_from(raw: RawPotential) -> Result<Self> {
        PotentialSeries::new(raw.coeffs, raw.mass, raw.hbar)
    }
}

/// Result of re-expanding a potential about a new arrival point.
#[derive(Debug, Clone)]
pub struct ShiftedPotential {
    pub series: PotentialSeries,
    /// Constant term generated by the re-expansion and discarded from the
    /// series; equals V(x) at the shift point.
    pub dropped_constant: f64,
}

impl PotentialSeries {
    pub fn new(coeffs: Vec<f64>, mass: f64, hbar: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(ToaError::InvalidInput(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(ToaError::InvalidInput(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        if coeffs.len() > MAX_DEGREE {
            return Err(ToaError::InvalidInput(format!(
                "degree {} exceeds cap {MAX_DEGREE}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(ToaError::InvalidInput("non-finite coefficient".into()));
        }
        Ok(Self { coeffs, mass, hbar })
    }

    /// Free particle in natural units scaled by the given constants.
    pub fn free(mass: f64, hbar: f64) -> Self {
        Self::new(Vec::new(), mass, hbar).expect("positive constants")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ToaError::Parse(e.to_string()))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient a_s (1-based power); zero beyond the stored degree.
    pub fn coeff(&self, s: usize) -> f64 {
        if s == 0 || s > self.coeffs.len() {
            0.0
        } else {
            self.coeffs[s - 1]
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// μ/(2ħ²), the coupling that multiplies every kernel recurrence.
    pub fn coupling(&self) -> f64 {
        self.mass / (2.0 * self.hbar * self.hbar)
    }

    /// Replaces the physical constants, keeping the coefficients.
    pub fn with_constants(&self, mass: f64, hbar: f64) -> Result<Self> {
        Self::new(self.coeffs.clone(), mass, hbar)
    }

    /// V(q) by Horner accumulation.
    pub fn eval(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for &a in self.coeffs.iter().rev() {
            acc = acc * q + a;
        }
        acc * q
    }

    /// n-th derivative V^(n)(q) = n! Σ_{l≥n} C(l,n) a_l q^{l−n}, evaluated by
    /// Horner on the differentiated coefficients. Zero when n exceeds the
    /// degree; n = 0 reproduces `eval` exactly.
    pub fn eval_derivative(&self, n: usize, q: f64) -> f64 {
        if n == 0 {
            return self.eval(q);
        }
        if n > self.coeffs.len() {
            return 0.0;
        }
        let mut acc = 0.0;
        for l in (n..=self.coeffs.len()).rev() {
            // falling factorial l (l-1) ... (l-n+1) = n! C(l,n)
            let mut fall = 1.0;
            for i in 0..n {
                fall *= (l - i) as f64;
            }
            acc = acc * q + fall * self.coeff(l);
        }
        acc
    }

    /// Re-expands V about q = x, i.e. the series of q̃ ↦ V(q̃ + x) in powers
    /// of q̃. The regenerated constant V(x) is dropped from the series and
    /// reported alongside.
    pub fn shift(&self, x: f64) -> ShiftedPotential {
        let s_max = self.coeffs.len();
        let mut new_coeffs = vec![0.0; s_max];
        for (k, c) in new_coeffs.iter_mut().enumerate() {
            let k = k + 1;
            // Horner in x over Σ_{s≥k} C(s,k) a_s x^{s−k}
            let mut acc = 0.0;
            for s in (k..=s_max).rev() {
                acc = acc * x + binomial(s, k) * self.coeff(s);
            }
            *c = acc;
        }
        let series = PotentialSeries {
            coeffs: new_coeffs,
            mass: self.mass,
            hbar: self.hbar,
        };
        ShiftedPotential {
            series,
            dropped_constant: self.eval(x),
        }
    }

    /// True iff a_s = 0 for all s ≥ 3; such systems admit no quantum
    /// corrections to the Weyl-quantized kernel.
    pub fn is_linear(&self) -> bool {
        self.coeffs.iter().skip(2).all(|&a| a == 0.0)
    }

    /// Stable identity of (coefficients, mass, hbar), used to tag derived
    /// tables and grids with their provenance.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64; // FNV-1a
        let mut absorb = |x: f64| {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for &a in &self.coeffs {
            absorb(a);
        }
        absorb(self.mass);
        absorb(self.hbar);
        h
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
