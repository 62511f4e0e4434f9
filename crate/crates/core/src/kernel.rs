//! Quadrature-based evaluation of the kernel factor `T₀` and the correction
//! hierarchy `Tₙ`.
//!
//! The leading factor is the single integral
//!
//! ```text
//! T₀(u,v) = (1/4) ∫₀ᵘ ds ₀F₁(;1; (μ/2ħ²) v² [V(u/2) − V(s/2)])
//! ```
//!
//! and every correction follows from the recurrence
//!
//! ```text
//! Tₙ(u,v) = (μ/2ħ²) Σ_{r=1}^{n} 1/((2r+1)! 2^{2r}) ∫₀ᵘ ds V^{(2r+1)}(s/2)
//!           ∫₀ᵛ dw w^{2r+1} T_{n−r}(s,w) ₀F₁(;1; (μ/2ħ²)(v²−w²)[V(u/2)−V(s/2)])
//! ```
//!
//! Corrections are sampled on Chebyshev–Lobatto tensor grids (the endpoints
//! carry the boundary conditions `Tₙ(u,0) = Tₙ(0,v) = 0`) and read back
//! through global barycentric interpolation, which is smooth everywhere and
//! therefore safe to difference in the PDE residual checks. Lower-order
//! grids are built on demand and memoized behind a single-writer lock.

use std::cell::RefCell;
use std::io::{self, Write};
use std::sync::{Arc, Mutex};

use crate::error::{Result, ToaError};
use crate::potential::PotentialSeries;
use crate::quadrature::{self, QuadResult};
use crate::specfun;

/// Domain, resolution and tolerance of a kernel engine.
#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    /// Lower edge of the u-range. Zero unless negative u is genuinely needed
    /// (operator assembly probes u = qᵢ + qⱼ of either sign).
    pub u_min: f64,
    pub u_max: f64,
    /// Grids store v ≥ 0 only; evaluation at negative v reflects through the
    /// kernel symmetry T(u,v) = T(u,−v).
    pub v_max: f64,
    /// Chebyshev–Lobatto nodes per axis.
    pub nodes: usize,
    /// Absolute-plus-relative quadrature tolerance for grid fills.
    pub tol: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            u_min: 0.0,
            u_max: 1.0,
            v_max: 1.0,
            nodes: 33,
            tol: 1e-10,
        }
    }
}

impl EngineConfig {
    /// Symmetric-free config on [0,U]×[0,V].
    pub fn on_rectangle(u_max: f64, v_max: f64) -> Self {
        Self {
            u_max,
            v_max,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let domain_ok = self.u_min.is_finite()
            && self.u_max.is_finite()
            && self.u_min < self.u_max
            && self.v_max.is_finite()
            && self.v_max > 0.0;
        if !domain_ok {
            return Err(ToaError::InvalidInput("degenerate engine domain".into()));
        }
        if self.nodes < 4 {
            return Err(ToaError::InvalidInput(
                "need at least 4 nodes per axis".into(),
            ));
        }
        let tol_ok = self.tol.is_finite() && self.tol > 0.0;
        if !tol_ok {
            return Err(ToaError::InvalidInput("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Chebyshev–Lobatto points on [a,b], ascending. Includes both endpoints and,
/// for odd counts spanning zero symmetrically, the origin.
fn cheb_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::PI * k as f64 / (n - 1) as f64;
            let x = mid - half * theta.cos();
            // pin exact endpoints and the origin
            if k == 0 {
                a
            } else if k == n - 1 {
                b
            } else if x.abs() < 1e-15 * half {
                0.0
            } else {
                x
            }
        })
        .collect()
}

/// Barycentric weights for Chebyshev–Lobatto nodes: (−1)^k, halved at the
/// ends. Any common scale cancels in the barycentric ratio.
fn cheb_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let w = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n - 1 {
                0.5 * w
            } else {
                w
            }
        })
        .collect()
}

/// Cardinal interpolation coefficients λᵢ(x) with Σλᵢ f(xᵢ) = p(x).
fn bary_cardinal(nodes: &[f64], weights: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut lam = vec![0.0; n];
    for (i, &xi) in nodes.iter().enumerate() {
        if x == xi {
            lam[i] = 1.0;
            return lam;
        }
    }
    let mut denom = 0.0;
    for i in 0..n {
        let t = weights[i] / (x - nodes[i]);
        lam[i] = t;
        denom += t;
    }
    for l in lam.iter_mut() {
        *l /= denom;
    }
    lam
}

/// Memoized tensor grid of one kernel factor order.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    order: usize,
    u_nodes: Vec<f64>,
    u_weights: Vec<f64>,
    v_nodes: Vec<f64>,
    v_weights: Vec<f64>,
    /// row-major: values[iu * v_nodes.len() + jv]
    values: Vec<f64>,
    interp_degree: usize,
    potential_id: u64,
}

impl KernelGrid {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn u_nodes(&self) -> &[f64] {
        &self.u_nodes
    }

    pub fn v_nodes(&self) -> &[f64] {
        &self.v_nodes
    }

    pub fn potential_id(&self) -> u64 {
        self.potential_id
    }

    pub fn interp_degree(&self) -> usize {
        self.interp_degree
    }

    pub fn node_value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.v_nodes.len() + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Interpolated kernel value; negative v reflects by symmetry.
    pub fn value_at(&self, u: f64, v: f64) -> f64 {
        let v = v.abs();
        let lam = bary_cardinal(&self.u_nodes, &self.u_weights, u);
        let nu = bary_cardinal(&self.v_nodes, &self.v_weights, v);
        let nv = self.v_nodes.len();
        let mut acc = 0.0;
        for (i, &li) in lam.iter().enumerate() {
            if li == 0.0 {
                continue;
            }
            let row = &self.values[i * nv..(i + 1) * nv];
            let mut inner = 0.0;
            for (j, &nj) in nu.iter().enumerate() {
                inner += nj * row[j];
            }
            acc += li * inner;
        }
        acc
    }

    /// Collapses the u-dimension at fixed u = s, leaving per-v-node values.
    fn u_slice(&self, s: f64) -> Vec<f64> {
        let lam = bary_cardinal(&self.u_nodes, &self.u_weights, s);
        let nv = self.v_nodes.len();
        let mut g = vec![0.0; nv];
        for (i, &li) in lam.iter().enumerate() {
            if li == 0.0 {
                continue;
            }
            let row = &self.values[i * nv..(i + 1) * nv];
            for (j, gj) in g.iter_mut().enumerate() {
                *gj += li * row[j];
            }
        }
        g
    }

    fn slice_value(&self, slice: &[f64], w: f64) -> f64 {
        let nu = bary_cardinal(&self.v_nodes, &self.v_weights, w.abs());
        nu.iter().zip(slice).map(|(a, b)| a * b).sum()
    }

    /// CSV export: a metadata header line, then `(i, j, u, v, value)` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "order,u_min,u_max,v_max,nodes\n{},{},{},{},{}",
            self.order,
            self.u_nodes.first().unwrap(),
            self.u_nodes.last().unwrap(),
            self.v_nodes.last().unwrap(),
            self.u_nodes.len()
        )?;
        writeln!(w, "i,j,u,v,value")?;
        for (i, &u) in self.u_nodes.iter().enumerate() {
            for (j, &v) in self.v_nodes.iter().enumerate() {
                writeln!(w, "{i},{j},{u},{v},{}", self.node_value(i, j))?;
            }
        }
        Ok(())
    }
}

/// Kernel sum with truncation and domain diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct KernelSum {
    pub value: f64,
    /// Magnitude of the highest-order contribution included; a proxy for the
    /// size of the first omitted correction.
    pub last_term: f64,
    /// Set when the evaluation left the u ≥ 0 region the derivation assumes;
    /// the integrals are taken as written (signed) there.
    pub outside_reference_domain: bool,
}

/// Evaluator for the kernel factor of one potential, with memoized
/// correction grids. Immutable after construction; grid construction is
/// single-writer behind a lock, reads are lock-free clones of `Arc`s.
pub struct KernelEngine {
    potential: PotentialSeries,
    config: EngineConfig,
    grids: Mutex<Vec<Option<Arc<KernelGrid>>>>,
}

impl KernelEngine {
    pub fn new(potential: PotentialSeries, config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            potential,
            config,
            grids: Mutex::new(Vec::new()),
        })
    }

    pub fn potential(&self) -> &PotentialSeries {
        &self.potential
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Leading kernel factor by direct adaptive quadrature.
    pub fn t0(&self, u: f64, v: f64) -> Result<f64> {
        t0_eval(&self.potential, u, v, self.config.tol).map(|r| r.value)
    }

    /// The memoized grid of order `n`, building orders 0..n first if needed.
    pub fn grid(&self, n: usize) -> Result<Arc<KernelGrid>> {
        {
            let grids = self.grids.lock().unwrap();
            if let Some(Some(g)) = grids.get(n) {
                return Ok(g.clone());
            }
        }
        for order in 0..=n {
            let exists = {
                let grids = self.grids.lock().unwrap();
                matches!(grids.get(order), Some(Some(_)))
            };
            if exists {
                continue;
            }
            let grid = if order == 0 {
                self.build_t0_grid()?
            } else {
                let mut lower = Vec::with_capacity(order);
                {
                    let grids = self.grids.lock().unwrap();
                    for k in 0..order {
                        match grids.get(k) {
                            Some(Some(g)) => lower.push(g.clone()),
                            _ => return Err(ToaError::MissingDependency(k)),
                        }
                    }
                }
                self.build_correction(order, &lower)?
            };
            let mut grids = self.grids.lock().unwrap();
            if grids.len() <= order {
                grids.resize(order + 1, None);
            }
            grids[order] = Some(Arc::new(grid));
        }
        let grids = self.grids.lock().unwrap();
        Ok(grids[n].as_ref().unwrap().clone())
    }

    /// Correction value Tₙ(u,v) read from the order-n grid.
    pub fn correction(&self, n: usize, u: f64, v: f64) -> Result<f64> {
        if n == 0 {
            return self.t0(u, v);
        }
        self.check_domain(u, v)?;
        Ok(self.grid(n)?.value_at(u, v))
    }

    /// Partial sum Σ_{n=0}^{n_max} Tₙ(u,v): `t0` by quadrature, corrections
    /// from grids.
    pub fn full_kernel(&self, n_max: usize, u: f64, v: f64) -> Result<KernelSum> {
        self.check_domain(u, v)?;
        let mut value = t0_eval(&self.potential, u, v, self.config.tol)?.value;
        let mut last = value.abs();
        for n in 1..=n_max {
            let tn = self.grid(n)?.value_at(u, v);
            value += tn;
            last = tn.abs();
        }
        Ok(KernelSum {
            value,
            last_term: last,
            outside_reference_domain: u < 0.0,
        })
    }

    fn check_domain(&self, u: f64, v: f64) -> Result<()> {
        let slack = 1e-9 * (1.0 + self.config.u_max.abs() + self.config.v_max.abs());
        if u < self.config.u_min - slack
            || u > self.config.u_max + slack
            || v.abs() > self.config.v_max + slack
        {
            return Err(ToaError::Domain(format!(
                "point (u,v) = ({u},{v}) outside engine domain [{}, {}] x [0, {}]",
                self.config.u_min, self.config.u_max, self.config.v_max
            )));
        }
        Ok(())
    }

    fn grid_axes(&self) -> (Vec<f64>, Vec<f64>) {
        let u = cheb_nodes(self.config.u_min, self.config.u_max, self.config.nodes);
        let v = cheb_nodes(0.0, self.config.v_max, self.config.nodes);
        (u, v)
    }

    fn build_t0_grid(&self) -> Result<KernelGrid> {
        let (u_nodes, v_nodes) = self.grid_axes();
        let nv = v_nodes.len();
        let mut values = vec![0.0; u_nodes.len() * nv];
        for (i, &u) in u_nodes.iter().enumerate() {
            for (j, &v) in v_nodes.iter().enumerate() {
                values[i * nv + j] = if u == 0.0 {
                    0.0
                } else if v == 0.0 {
                    0.25 * u
                } else {
                    t0_eval(&self.potential, u, v, self.config.tol)?.value
                };
            }
        }
        Ok(self.finish_grid(0, u_nodes, v_nodes, values))
    }

    fn build_correction(&self, n: usize, lower: &[Arc<KernelGrid>]) -> Result<KernelGrid> {
        let (u_nodes, v_nodes) = self.grid_axes();
        let nv = v_nodes.len();
        let pot = &self.potential;
        let coupling = pot.coupling();
        let tol = self.config.tol;
        let mut values = vec![0.0; u_nodes.len() * nv];

        for (i, &u) in u_nodes.iter().enumerate() {
            let v_at_u2 = pot.eval(0.5 * u);
            for (j, &v) in v_nodes.iter().enumerate() {
                if u == 0.0 || v == 0.0 {
                    continue; // boundary conditions are exact zeros
                }
                let v2 = v * v;
                let mut total = 0.0;
                for r in 1..=n {
                    let weight = 1.0 / (factorial(2 * r + 1) * 4f64.powi(r as i32));
                    let lower_grid = &lower[n - r];
                    let failure: RefCell<Option<ToaError>> = RefCell::new(None);
                    let outer = quadrature::integrate(
                        |s| {
                            let deriv = pot.eval_derivative(2 * r + 1, 0.5 * s);
                            if deriv == 0.0 {
                                return 0.0;
                            }
                            let dv = v_at_u2 - pot.eval(0.5 * s);
                            let slice = lower_grid.u_slice(s);
                            let inner = quadrature::integrate(
                                |w| {
                                    let osc = coupling * (v2 - w * w) * dv;
                                    match specfun::hyp0f1(1.0, osc) {
                                        Ok(f) => {
                                            w.powi(2 * r as i32 + 1)
                                                * lower_grid.slice_value(&slice, w)
                                                * f
                                        }
                                        Err(e) => {
                                            failure.replace(Some(e));
                                            0.0
                                        }
                                    }
                                },
                                0.0,
                                v,
                                tol * 0.125,
                                tol * 0.125,
                            );
                            match inner {
                                Ok(q) => deriv * q.value,
                                Err(e) => {
                                    failure.replace(Some(e));
                                    0.0
                                }
                            }
                        },
                        0.0,
                        u,
                        tol,
                        tol,
                    )?;
                    if let Some(e) = failure.into_inner() {
                        return Err(e);
                    }
                    total += weight * outer.value;
                }
                values[i * nv + j] = coupling * total;
            }
        }
        Ok(self.finish_grid(n, u_nodes, v_nodes, values))
    }

    fn finish_grid(
        &self,
        order: usize,
        u_nodes: Vec<f64>,
        v_nodes: Vec<f64>,
        values: Vec<f64>,
    ) -> KernelGrid {
        let u_weights = cheb_weights(u_nodes.len());
        let v_weights = cheb_weights(v_nodes.len());
        KernelGrid {
            order,
            u_nodes,
            u_weights,
            v_nodes,
            v_weights,
            values,
            interp_degree: self.config.nodes - 1,
            potential_id: self.potential.fingerprint(),
        }
    }
}

/// Leading kernel factor `T₀(u,v)` by adaptive quadrature. Negative u is
/// taken as an integral with signed bounds.
pub fn t0_eval(pot: &PotentialSeries, u: f64, v: f64, tol: f64) -> Result<QuadResult> {
    let tol_ok = tol.is_finite() && tol > 0.0;
    if !tol_ok {
        return Err(ToaError::InvalidInput("tolerance must be positive".into()));
    }
    let coupling = pot.coupling();
    let v2 = v * v;
    let v_at_u2 = pot.eval(0.5 * u);
    let failure: RefCell<Option<ToaError>> = RefCell::new(None);
    let q = quadrature::integrate(
        |s| {
            let arg = coupling * v2 * (v_at_u2 - pot.eval(0.5 * s));
            match specfun::hyp0f1(1.0, arg) {
                Ok(f) => f,
                Err(e) => {
                    failure.replace(Some(e));
                    0.0
                }
            }
        },
        0.0,
        u,
        tol,
        tol,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(QuadResult {
        value: 0.25 * q.value,
        error: 0.25 * q.error,
        panels: q.panels,
    })
}

/// The k-th Picard iterate of the T₀ integral equation, i.e. the explicit
/// partial sum
///
/// ```text
/// (1/4) Σ_{k=0}^{n} (μ/2ħ²)^k v^{2k} / ((1)_k k!) ∫₀ᵘ [V(u/2) − V(s/2)]^k ds
/// ```
pub fn t0_picard(pot: &PotentialSeries, u: f64, v: f64, iterations: usize) -> Result<f64> {
    let coupling = pot.coupling();
    let v_at_u2 = pot.eval(0.5 * u);
    let mut acc = 0.25 * u; // k = 0 moment is exactly u
    for k in 1..=iterations {
        let moment = quadrature::integrate(
            |s| (v_at_u2 - pot.eval(0.5 * s)).powi(k as i32),
            0.0,
            u,
            1e-13,
            1e-13,
        )?;
        let fact = factorial(k);
        acc += 0.25 * coupling.powi(k as i32) * v.powi(2 * k as i32) / (fact * fact) * moment.value;
    }
    Ok(acc)
}

/// Builds the order-n correction grid on [0,U]×[0,V], constructing all lower
/// orders internally.
pub fn build_correction_grid(
    pot: &PotentialSeries,
    n: usize,
    u_max: f64,
    v_max: f64,
    nodes: usize,
    tol: f64,
) -> Result<Arc<KernelGrid>> {
    let engine = KernelEngine::new(
        pot.clone(),
        EngineConfig {
            u_min: 0.0,
            u_max,
            v_max,
            nodes,
            tol,
        },
    )?;
    engine.grid(n)
}

/// Residual of the time kernel equation for an arbitrary kernel evaluator:
///
/// ```text
/// −(2ħ²/μ) ∂²T/∂u∂v + [V((u+v)/2) − V((u−v)/2)] T(u,v)
/// ```
///
/// The mixed derivative uses the 4-point cross stencil of step `h`.
pub fn tke_residual(
    pot: &PotentialSeries,
    kernel: impl Fn(f64, f64) -> f64,
    u: f64,
    v: f64,
    h: f64,
) -> f64 {
    let cross = (kernel(u + h, v + h) - kernel(u + h, v - h) - kernel(u - h, v + h)
        + kernel(u - h, v - h))
        / (4.0 * h * h);
    let dv = pot.eval(0.5 * (u + v)) - pot.eval(0.5 * (u - v));
    -cross / pot.coupling() + dv * kernel(u, v)
}

/// Residual of the per-order differential equation
///
/// ```text
/// ∂²Tₙ/∂v∂u − (μ/2ħ²) Σ_{r=0}^{n} 1/((2r+1)! 2^{2r}) V^{(2r+1)}(u/2) v^{2r+1} T_{n−r}(u,v)
/// ```
///
/// `kernels(order, u, v)` supplies every kernel factor up to order n.
pub fn correction_pde_residual(
    pot: &PotentialSeries,
    n: usize,
    kernels: impl Fn(usize, f64, f64) -> f64,
    u: f64,
    v: f64,
    h: f64,
) -> f64 {
    let cross = (kernels(n, u + h, v + h) - kernels(n, u + h, v - h) - kernels(n, u - h, v + h)
        + kernels(n, u - h, v - h))
        / (4.0 * h * h);
    let mut source = 0.0;
    for r in 0..=n {
        let weight = 1.0 / (factorial(2 * r + 1) * 4f64.powi(r as i32));
        source += weight
            * pot.eval_derivative(2 * r + 1, 0.5 * u)
            * v.powi(2 * r as i32 + 1)
            * kernels(n - r, u, v);
    }
    cross - pot.coupling() * source
}

/// Grid-backed form of [`correction_pde_residual`]; `grids[k]` must hold the
/// order-k kernel grid.
pub fn correction_pde_residual_grids(
    pot: &PotentialSeries,
    n: usize,
    grids: &[Arc<KernelGrid>],
    u: f64,
    v: f64,
    h: f64,
) -> Result<f64> {
    if grids.len() <= n {
        return Err(ToaError::MissingDependency(n));
    }
    Ok(correction_pde_residual(
        pot,
        n,
        |order, uu, vv| grids[order].value_at(uu, vv),
        u,
        v,
        h,
    ))
}

pub(crate) fn factorial(n: usize) -> f64 {
    let mut acc = 1.0;
    for i in 2..=n {
        acc *= i as f64;
    }
    acc
}
