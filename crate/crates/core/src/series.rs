//! Power-series solution of the time kernel equation.
//!
//! The kernel factor is expanded as `T(u,v) = Σ α_{m,n} u^m v^n`; matching
//! powers in the kernel equation gives the recurrence
//!
//! ```text
//! α_{m,n} = (μ/2ħ²) (1/(mn)) Σ_s (a_s / 2^{s−1}) Σ_k C(s, 2k+1) α_{m−s+2k, n−2k−2}
//! ```
//!
//! with `α_{m,0} = δ_{m,1}/4`, `α_{0,n} = 0` and out-of-range entries zero.
//! Only even `n` survive, which is the `T(u,v) = T(u,−v)` symmetry of the
//! kernel.
//!
//! A second table splits each coefficient by ħ-order: writing
//! `T = Σ u^m v^{2j} Σ_s (μ/2ħ²)^{j−s} α^{(s)}_{m,j}`, the ħ-free pieces obey
//!
//! ```text
//! α^{(s)}_{m,j} = (1/(2jm)) Σ_{r=0}^{s} Σ_{l=2r+1}^{m+2r−1} (a_l / 2^{l−1}) C(l, 2r+1) α^{(s−r)}_{m−l+2r, j−r−1}
//! ```
//!
//! seeded by `α^{(0)}_{1,0} = 1/4`. The order-`n` part of the ħ-split sum is
//! exactly the `n`-th kernel factor correction `Tₙ`, which is what the
//! Wigner-transform and ħ-scaling machinery consume.
//!
//! Everything is filled in double precision; [`exact`] repeats the full
//! recurrence in arbitrary-precision rational arithmetic for bit-exact
//! oracle runs (the recurrence only ever does rational operations).

use std::io::{self, Write};

use crate::error::{Result, ToaError};
use crate::potential::{binomial, PotentialSeries};

/// Series value together with the largest magnitude seen on the truncation
/// boundary of the table, which proxies for the discarded tail.
#[derive(Debug, Clone, Copy)]
pub struct SeriesValue {
    pub value: f64,
    pub boundary_term: f64,
}

impl SeriesValue {
    /// True when the boundary proxy is non-negligible against the result.
    pub fn truncation_warning(&self) -> bool {
        self.boundary_term > 1e-10 * self.value.abs()
    }
}

/// Dense table of the series coefficients α_{m,n}, 0 ≤ m ≤ M, 0 ≤ n ≤ N.
#[derive(Debug, Clone)]
pub struct AlphaTable {
    m_max: usize,
    n_max: usize,
    values: Vec<f64>,
    mass: f64,
    hbar: f64,
    potential_id: u64,
}

/// Fills the α-table for the given potential by the power-matching
/// recurrence. Rows with odd `n` come out identically zero.
pub fn build_alpha(pot: &PotentialSeries, m_max: usize, n_max: usize) -> AlphaTable {
    assert!(m_max >= 1 && n_max >= 1, "table orders must be at least 1");
    let coupling = pot.coupling();
    let cols = n_max + 1;
    let mut values = vec![0.0f64; (m_max + 1) * cols];
    values[cols] = 0.25; // α_{1,0}

    for n in 1..=n_max {
        for m in 1..=m_max {
            let mut acc = 0.0;
            for s in 1..=pot.degree() {
                let a_s = pot.coeff(s);
                if a_s == 0.0 {
                    continue;
                }
                let scale = a_s / 2f64.powi(s as i32 - 1);
                let mut k = 0usize;
                while 2 * k < s {
                    if n >= 2 * k + 2 && m + 2 * k >= s {
                        let mm = m + 2 * k - s;
                        let nn = n - 2 * k - 2;
                        if mm <= m_max {
                            acc += scale * binomial(s, 2 * k + 1) * values[mm * cols + nn];
                        }
                    }
                    k += 1;
                }
            }
            if acc != 0.0 {
                values[m * cols + n] = coupling / (m as f64 * n as f64) * acc;
            }
        }
    }

    AlphaTable {
        m_max,
        n_max,
        values,
        mass: pot.mass(),
        hbar: pot.hbar(),
        potential_id: pot.fingerprint(),
    }
}

impl AlphaTable {
    pub fn get(&self, m: usize, n: usize) -> f64 {
        if m > self.m_max || n > self.n_max {
            0.0
        } else {
            self.values[m * (self.n_max + 1) + n]
        }
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn potential_id(&self) -> u64 {
        self.potential_id
    }

    /// Σ α_{m,n} u^m v^n over the truncated table, by nested Horner.
    pub fn eval(&self, u: f64, v: f64) -> SeriesValue {
        let cols = self.n_max + 1;
        let mut value = 0.0;
        for m in (0..=self.m_max).rev() {
            let row = &self.values[m * cols..(m + 1) * cols];
            let mut inner = 0.0;
            for n in (0..cols).rev() {
                inner = inner * v + row[n];
            }
            value = value * u + inner;
        }

        let mut boundary: f64 = 0.0;
        let um = u.powi(self.m_max as i32);
        for n in 0..=self.n_max {
            boundary = boundary.max((self.get(self.m_max, n) * um * v.powi(n as i32)).abs());
        }
        let vn = v.powi(self.n_max as i32);
        for m in 0..=self.m_max {
            boundary = boundary.max((self.get(m, self.n_max) * u.powi(m as i32) * vn).abs());
        }
        SeriesValue {
            value,
            boundary_term: boundary,
        }
    }

    /// Writes `m,n,value` rows for the nonzero entries.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "m,n,value")?;
        for m in 0..=self.m_max {
            for n in 0..=self.n_max {
                let v = self.get(m, n);
                if v != 0.0 {
                    writeln!(w, "{m},{n},{v}")?;
                }
            }
        }
        Ok(())
    }
}

/// ħ-free coefficient of one kernel series term, for consumers that need the
/// raw `(m, v-power/2, α)` triple of an order slice.
#[derive(Debug, Clone, Copy)]
pub struct OrderTerm {
    /// power of u
    pub m: usize,
    /// half the power of v
    pub j: usize,
    /// ħ-free α^{(n)}_{m,j}
    pub alpha: f64,
}

/// Table of the ħ-order-split coefficients α^{(s)}_{m,j}.
#[derive(Debug, Clone)]
pub struct AlphaOrderTable {
    m_max: usize,
    j_max: usize,
    /// indexed [s][m][j], s = 0..j_max−1
    values: Vec<f64>,
    mass: f64,
    hbar: f64,
    potential_id: u64,
}

pub fn build_alpha_orders(pot: &PotentialSeries, m_max: usize, j_max: usize) -> AlphaOrderTable {
    assert!(m_max >= 1 && j_max >= 1, "table orders must be at least 1");
    let s_count = j_max; // s ranges over 0..=j_max-1
    let stride_j = j_max + 1;
    let stride_m = (m_max + 1) * stride_j;
    let mut values = vec![0.0f64; s_count * stride_m];
    values[stride_j] = 0.25; // α^{(0)}_{1,0}

    let idx = |s: usize, m: usize, j: usize| s * stride_m + m * stride_j + j;

    for j in 1..=j_max {
        for m in 1..=m_max {
            for s in 0..j.min(s_count) {
                let mut acc = 0.0;
                for r in 0..=s {
                    if j < r + 1 {
                        continue;
                    }
                    let j_src = j - r - 1;
                    let l_hi = (m + 2 * r).saturating_sub(1).min(pot.degree());
                    let mut l = 2 * r + 1;
                    while l <= l_hi {
                        let a_l = pot.coeff(l);
                        if a_l != 0.0 {
                            // l <= m+2r-1 keeps m_src >= 1
                            let m_src = m + 2 * r - l;
                            acc += a_l / 2f64.powi(l as i32 - 1)
                                * binomial(l, 2 * r + 1)
                                * values[idx(s - r, m_src, j_src)];
                        }
                        l += 1;
                    }
                }
                if acc != 0.0 {
                    values[idx(s, m, j)] = acc / (2.0 * j as f64 * m as f64);
                }
            }
        }
    }

    AlphaOrderTable {
        m_max,
        j_max,
        values,
        mass: pot.mass(),
        hbar: pot.hbar(),
        potential_id: pot.fingerprint(),
    }
}

impl AlphaOrderTable {
    pub fn get(&self, s: usize, m: usize, j: usize) -> f64 {
        if s >= self.j_max || m > self.m_max || j > self.j_max {
            0.0
        } else {
            self.values[s * (self.m_max + 1) * (self.j_max + 1) + m * (self.j_max + 1) + j]
        }
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn potential_id(&self) -> u64 {
        self.potential_id
    }

    /// μ/(2ħ²) of the potential the table was built from.
    pub fn coupling(&self) -> f64 {
        self.mass / (2.0 * self.hbar * self.hbar)
    }

    /// The ħ-free terms of the order-`n` kernel factor: `Tₙ(u,v)` is
    /// `Σ α^{(n)}_{m,J} (μ/2ħ²)^{J−n} u^m v^{2J}` over the returned triples.
    pub fn order_terms(&self, n: usize) -> Vec<OrderTerm> {
        let mut out = Vec::new();
        if n >= self.j_max {
            return out;
        }
        for m in 0..=self.m_max {
            for j in 0..=self.j_max {
                let a = self.get(n, m, j);
                if a != 0.0 {
                    out.push(OrderTerm { m, j, alpha: a });
                }
            }
        }
        out
    }

    /// Partial sum of the order-`n` kernel factor Tₙ(u,v).
    pub fn order_eval(&self, n: usize, u: f64, v: f64) -> Result<SeriesValue> {
        if n >= self.j_max {
            return Err(ToaError::InvalidInput(format!(
                "order {n} outside table range (j_max = {})",
                self.j_max
            )));
        }
        let c = self.coupling();
        let mut value = 0.0;
        let mut boundary: f64 = 0.0;
        for t in self.order_terms(n) {
            let term =
                t.alpha * c.powi((t.j - n) as i32) * u.powi(t.m as i32) * v.powi(2 * t.j as i32);
            value += term;
            if t.m == self.m_max || t.j == self.j_max {
                boundary = boundary.max(term.abs());
            }
        }
        Ok(SeriesValue {
            value,
            boundary_term: boundary,
        })
    }

    /// Sum of `order_eval` over n = 0..=n_max.
    pub fn partial_kernel(&self, n_max: usize, u: f64, v: f64) -> Result<f64> {
        let mut acc = 0.0;
        for n in 0..=n_max {
            acc += self.order_eval(n, u, v)?.value;
        }
        Ok(acc)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "s,m,j,value")?;
        for s in 0..self.j_max {
            for m in 0..=self.m_max {
                for j in 0..=self.j_max {
                    let v = self.get(s, m, j);
                    if v != 0.0 {
                        writeln!(w, "{s},{m},{j},{v}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Exact-rational twin of [`build_alpha`] for oracle runs; every operation in
/// the recurrence is rational, so the table is bit-exact given exactly
/// representable inputs (f64 coefficients are).
pub mod exact {
    use num::rational::BigRational;
    use num::traits::ToPrimitive;
    use num::{BigInt, One, Zero};

    use crate::error::{Result, ToaError};
    use crate::potential::PotentialSeries;

    fn rat(x: f64) -> Result<BigRational> {
        BigRational::from_float(x)
            .ok_or_else(|| ToaError::InvalidInput(format!("{x} has no rational representation")))
    }

    fn binom(n: usize, k: usize) -> BigInt {
        let mut acc = BigInt::one();
        for i in 0..k.min(n - k) {
            acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        acc
    }

    pub struct RationalAlphaTable {
        m_max: usize,
        n_max: usize,
        values: Vec<BigRational>,
    }

    pub fn build_alpha_exact(
        pot: &PotentialSeries,
        m_max: usize,
        n_max: usize,
    ) -> Result<RationalAlphaTable> {
        let coupling = rat(pot.mass())?
            / (BigRational::from(BigInt::from(2)) * rat(pot.hbar())? * rat(pot.hbar())?);
        let coeffs: Vec<BigRational> = pot
            .coeffs()
            .iter()
            .map(|&a| rat(a))
            .collect::<Result<_>>()?;
        let cols = n_max + 1;
        let mut values = vec![BigRational::zero(); (m_max + 1) * cols];
        values[cols] = BigRational::new(BigInt::one(), BigInt::from(4));

        for n in 1..=n_max {
            for m in 1..=m_max {
                let mut acc = BigRational::zero();
                for s in 1..=coeffs.len() {
                    if coeffs[s - 1].is_zero() {
                        continue;
                    }
                    let scale =
                        &coeffs[s - 1] / BigRational::from(BigInt::from(2).pow(s as u32 - 1));
                    let mut k = 0usize;
                    while 2 * k < s {
                        if n >= 2 * k + 2 && m + 2 * k >= s {
                            let mm = m + 2 * k - s;
                            let nn = n - 2 * k - 2;
                            if mm <= m_max && !values[mm * cols + nn].is_zero() {
                                acc += &scale
                                    * BigRational::from(binom(s, 2 * k + 1))
                                    * &values[mm * cols + nn];
                            }
                        }
                        k += 1;
                    }
                }
                if !acc.is_zero() {
                    values[m * cols + n] =
                        &coupling / BigRational::from(BigInt::from(m as u64 * n as u64)) * acc;
                }
            }
        }

        Ok(RationalAlphaTable {
            m_max,
            n_max,
            values,
        })
    }

    impl RationalAlphaTable {
        pub fn m_max(&self) -> usize {
            self.m_max
        }

        pub fn n_max(&self) -> usize {
            self.n_max
        }

        pub fn get(&self, m: usize, n: usize) -> &BigRational {
            &self.values[m * (self.n_max + 1) + n]
        }

        pub fn get_f64(&self, m: usize, n: usize) -> f64 {
            self.get(m, n).to_f64().unwrap_or(f64::NAN)
        }

        /// Evaluates the partial sum exactly (u, v promoted to rationals) and
        /// rounds once at the end.
        pub fn eval_f64(&self, u: f64, v: f64) -> Result<f64> {
            let u = rat(u)?;
            let v = rat(v)?;
            let mut acc = BigRational::zero();
            for m in (0..=self.m_max).rev() {
                let mut inner = BigRational::zero();
                for n in (0..=self.n_max).rev() {
                    inner = inner * &v + self.get(m, n);
                }
                acc = acc * &u + inner;
            }
            acc.to_f64()
                .ok_or_else(|| ToaError::Domain("rational sum outside f64 range".into()))
        }
    }
}
