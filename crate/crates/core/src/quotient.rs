//! The modified Yamabe quotient on rotation-invariant radial functions.
//!
//! For a triple with radial reduction, the quotient
//!
//! ```text
//!   𝒲(φ) = √(2π) · ∫(|∇φ|² + (1/6)(12 − 2√6|Ric̊|)φ²) V dμ
//!           ───────────────────────────────────────────────
//!                      (∫ φ⁴ V dμ)^{1/2}
//! ```
//!
//! is evaluated and minimized over nonnegative radial `φ`. The radial
//! infimum computed here is an upper bound for the full invariant
//! infimum (radial test functions are a subset); for the models at
//! hand the sign conclusions agree.
//!
//! * [`modified_quotient`] evaluates 𝒲 at a piecewise-cubic radial
//!   function by per-element Gauss–Legendre quadrature.
//! * [`minimize_quotient`] minimizes the piecewise-linear finite
//!   element discretization of 𝒲 by projected Barzilai–Borwein
//!   descent on the `∫φ⁴V dμ = 1` sphere, keeping `φ ≥ 0`. The weight
//!   `V dμ` degenerates at the faces, which is exactly the natural
//!   (no-boundary-condition) setting of the variational problem.
//! * [`testfn_decay`] evaluates the decay family `φ_ε^{1/3}` with
//!   `φ_ε = (|Ric̊|² + ε)^{1/2}`: the numerator
//!   `P(ε) = ∫(3|∇φ_ε^{1/3}|² + (6 − √6|Ric̊|)φ_ε^{2/3}) V dμ` is
//!   bounded by `M(ε) = ε∫(6 − √6|Ric̊|)(|Ric̊|² + ε)^{−2/3} V dμ`,
//!   which decays at least like `ε^{1/3}` (exactly `ε` when `|Ric̊|`
//!   is bounded away from zero, as on the horizon-bounded models).
//!   `P(ε) = 3 ×` the quotient numerator at `φ_ε^{1/3}`.

use crate::curvature::{self, CurvatureError};
use crate::fd::FdOptions;
use crate::triple::StaticTriple;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VariationalError {
    #[error("quotient denominator vanishes (φ ≡ 0 on the grid)")]
    ZeroDenominator,
    #[error("grid must have at least 128 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("descent did not converge: final projected-gradient norm {grad_norm:e}")]
    NonConvergence { grad_norm: f64 },
    #[error("check not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}

/// A scalar radial function as nodal values with piecewise-cubic
/// (Hermite, finite-difference slopes) interpolation.
#[derive(Clone, Debug)]
pub struct RadialFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    slopes: Vec<f64>,
}

impl RadialFunction {
    /// Build from nodes and values; `grid` must be strictly increasing
    /// with at least two nodes, `values` finite and matching.
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len());
        assert!(grid.len() >= 2);
        assert!(grid.windows(2).all(|w| w[1] > w[0]), "grid not increasing");
        assert!(values.iter().all(|v| v.is_finite()));
        let slopes = fd_slopes(&grid, &values);
        RadialFunction { grid, values, slopes }
    }

    /// Uniform grid over the radial interval of `t` with `n` nodes,
    /// sampling `f` at each node.
    pub fn sample(t: &StaticTriple, n: usize, mut f: impl FnMut(f64) -> f64) -> Self {
        let grid = uniform_grid(t, n);
        let values = grid.iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    /// The constant function `v` on a uniform `n`-node grid.
    pub fn constant(t: &StaticTriple, n: usize, v: f64) -> Self {
        Self::sample(t, n, |_| v)
    }

    fn locate(&self, r: f64) -> usize {
        let n = self.grid.len();
        match self.grid.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let i = self.locate(r);
        let h = self.grid[i + 1] - self.grid[i];
        let t = (r - self.grid[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        self.values[i] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + self.slopes[i] * h * (t3 - 2.0 * t2 + t)
            + self.values[i + 1] * (-2.0 * t3 + 3.0 * t2)
            + self.slopes[i + 1] * h * (t3 - t2)
    }

    pub fn deriv(&self, r: f64) -> f64 {
        let i = self.locate(r);
        let h = self.grid[i + 1] - self.grid[i];
        let t = (r - self.grid[i]) / h;
        let t2 = t * t;
        (self.values[i] * (6.0 * t2 - 6.0 * t)
            + self.slopes[i] * h * (3.0 * t2 - 4.0 * t + 1.0)
            + self.values[i + 1] * (6.0 * t - 6.0 * t2)
            + self.slopes[i + 1] * h * (3.0 * t2 - 2.0 * t))
            / h
    }
}

/// Second-order finite-difference slopes on a (possibly nonuniform) grid.
fn fd_slopes(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut s = vec![0.0; n];
    for i in 1..n - 1 {
        let hl = grid[i] - grid[i - 1];
        let hr = grid[i + 1] - grid[i];
        let dl = (values[i] - values[i - 1]) / hl;
        let dr = (values[i + 1] - values[i]) / hr;
        s[i] = (hr * dl + hl * dr) / (hl + hr);
    }
    let h0 = grid[1] - grid[0];
    let h1 = grid[2] - grid[1];
    let d0 = (values[1] - values[0]) / h0;
    let d1 = (values[2] - values[1]) / h1;
    s[0] = d0 + (d0 - d1) * h0 / (h0 + h1);
    let hm = grid[n - 1] - grid[n - 2];
    let hm1 = grid[n - 2] - grid[n - 3];
    let dm = (values[n - 1] - values[n - 2]) / hm;
    let dm1 = (values[n - 2] - values[n - 3]) / hm1;
    s[n - 1] = dm + (dm - dm1) * hm / (hm + hm1);
    s
}

/// Uniform `n`-node grid over the radial interval of `t`.
pub fn uniform_grid(t: &StaticTriple, n: usize) -> Vec<f64> {
    let rr = t.radial.as_ref().expect("triple has no radial reduction");
    (0..n)
        .map(|i| rr.lo + (rr.hi - rr.lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// The evaluated quotient and its parts.
#[derive(Clone, Copy, Debug)]
pub struct QuotientValue {
    /// `∫(|∇φ|² + (1/6)(12 − 2√6|Ric̊|)φ²) V dμ`
    pub numerator: f64,
    /// `(∫φ⁴ V dμ)^{1/2}`
    pub denominator: f64,
    /// `√(2π) · numerator / denominator`
    pub value: f64,
    pub grid_resolution: usize,
}

// 5-point Gauss–Legendre rule on (-1, 1).
const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Pointwise weight data of the reduced quotient at radius `r`.
struct Weights {
    /// `V(r) · density(r)` — the reduced measure `V dμ = ω dr`
    omega: f64,
    /// inverse radial metric coefficient `g^{rr}`
    grr: f64,
    /// potential factor `(1/6)(12 − 2√6|Ric̊|)`
    pot: f64,
    /// `|Ric̊|²`
    snorm2: f64,
}

fn weights_at(t: &StaticTriple, r: f64, opts: &FdOptions) -> Result<Weights, CurvatureError> {
    let cd = curvature::curvature_data(&t.chart, &t.slice_point(r), 0, opts)?;
    Ok(Weights {
        omega: t.v_density(r),
        grr: cd.ginv[0][0],
        pot: 2.0 - (6.0f64.sqrt() / 3.0) * cd.s_norm2.sqrt(),
        snorm2: cd.s_norm2,
    })
}

/// Evaluate the quotient at a piecewise-cubic radial function by
/// per-element 5-point Gauss–Legendre quadrature on the function's own
/// grid. Exactly scale-invariant: `φ ↦ tφ` multiplies numerator and
/// `denominator²` by `t²` and `t⁴` at the arithmetic level.
pub fn modified_quotient(
    t: &StaticTriple,
    phi: &RadialFunction,
    opts: &FdOptions,
) -> Result<QuotientValue, VariationalError> {
    let mut num = 0.0;
    let mut quartic = 0.0;
    for e in 0..phi.grid.len() - 1 {
        let (a, b) = (phi.grid[e], phi.grid[e + 1]);
        let jac = 0.5 * (b - a);
        for q in 0..5 {
            let r = 0.5 * (a + b) + jac * GL_X[q];
            let w = weights_at(t, r, opts)?;
            let v = phi.eval(r);
            let dv = phi.deriv(r);
            let wq = GL_W[q] * jac * w.omega;
            num += wq * (w.grr * dv * dv + w.pot * v * v);
            quartic += wq * v * v * v * v;
        }
    }
    if quartic <= 0.0 {
        return Err(VariationalError::ZeroDenominator);
    }
    let denominator = quartic.sqrt();
    Ok(QuotientValue {
        numerator: num,
        denominator,
        value: (2.0 * PI).sqrt() * num / denominator,
        grid_resolution: phi.grid.len(),
    })
}

/// Piecewise-linear finite element discretization of the quotient:
/// tridiagonal stiffness + potential matrix, and quadrature data for
/// the quartic/cubic terms, all over the weight `ω = V·density`.
struct Fem {
    grid: Vec<f64>,
    /// diag/off of `A = K + M_P` (stiffness + potential mass)
    diag: Vec<f64>,
    off: Vec<f64>,
    /// lumped plain-mass diagonal `∫ψ_i ω`
    lumped: Vec<f64>,
    /// per element, 5 quadrature triples `(t, wq·ω)` with `t` the
    /// barycentric coordinate of the Gauss point in its element
    qp: Vec<[(f64, f64); 5]>,
}

impl Fem {
    fn assemble(t: &StaticTriple, grid: &[f64], opts: &FdOptions) -> Result<Fem, CurvatureError> {
        let n = grid.len();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        let mut lumped = vec![0.0; n];
        let mut qp = Vec::with_capacity(n - 1);
        for e in 0..n - 1 {
            let (a, b) = (grid[e], grid[e + 1]);
            let h = b - a;
            let jac = 0.5 * h;
            let mut pts = [(0.0, 0.0); 5];
            for q in 0..5 {
                let r = 0.5 * (a + b) + jac * GL_X[q];
                let w = weights_at(t, r, opts)?;
                let bary = (r - a) / h;
                let wq = GL_W[q] * jac * w.omega;
                pts[q] = (bary, wq);
                // P1 basis on the element: ψ_L = 1−t, ψ_R = t, ψ' = ∓1/h
                let (pl, pr) = (1.0 - bary, bary);
                let kq = wq * w.grr / (h * h);
                diag[e] += kq + wq * w.pot * pl * pl;
                diag[e + 1] += kq + wq * w.pot * pr * pr;
                off[e] += -kq + wq * w.pot * pl * pr;
                lumped[e] += wq * pl;
                lumped[e + 1] += wq * pr;
            }
            qp.push(pts);
        }
        Ok(Fem { grid: grid.to_vec(), diag, off, lumped, qp })
    }

    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            out[i] = self.diag[i] * x[i];
            if i > 0 {
                out[i] += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                out[i] += self.off[i] * x[i + 1];
            }
        }
    }

    fn quadratic(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..x.len() {
            s += self.diag[i] * x[i] * x[i];
            if i + 1 < x.len() {
                s += 2.0 * self.off[i] * x[i] * x[i + 1];
            }
        }
        s
    }

    /// `∫ φ⁴ ω dr` of the P1 interpolant.
    fn quartic(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (e, pts) in self.qp.iter().enumerate() {
            for &(bary, wq) in pts {
                let v = x[e] * (1.0 - bary) + x[e + 1] * bary;
                s += wq * v * v * v * v;
            }
        }
        s
    }

    /// `c_i = ∫ φ³ ψ_i ω dr`.
    fn cubic_load(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (e, pts) in self.qp.iter().enumerate() {
            for &(bary, wq) in pts {
                let v = x[e] * (1.0 - bary) + x[e + 1] * bary;
                let v3 = wq * v * v * v;
                out[e] += v3 * (1.0 - bary);
                out[e + 1] += v3 * bary;
            }
        }
    }

    /// discrete `λ(φ) = √(2π) φᵀAφ / √(∫φ⁴ω)`
    fn lambda(&self, x: &[f64]) -> f64 {
        (2.0 * PI).sqrt() * self.quadratic(x) / self.quartic(x).sqrt()
    }
}

/// Result of a quotient minimization.
#[derive(Clone, Debug)]
pub struct MinimizeResult {
    /// stationary quotient value (the paper-normalized `λ`)
    pub lambda: f64,
    /// minimizer, nonnegative, normalized to `∫φ⁴V dμ = 18/π` (the
    /// scale at which the Euler–Lagrange equation holds verbatim)
    pub phi: RadialFunction,
    pub iterations: usize,
    /// final projected-gradient norm
    pub grad_norm: f64,
    /// discrete Euler–Lagrange residual
    /// `‖Aφ − (λ/6)·∫φ³ψ_i ω‖` in the lumped-mass weighted norm,
    /// over nodes where `φ > 0` (KKT stationarity)
    pub el_residual: f64,
}

const GRAD_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 100_000;

/// Projected Barzilai–Borwein descent of the discrete quotient on the
/// sphere `∫φ⁴ω = 1` intersected with `φ ≥ 0`.
fn descend(fem: &Fem, start: &[f64]) -> (Vec<f64>, f64, usize, bool) {
    let n = start.len();
    let normalize = |x: &mut Vec<f64>| {
        let q = fem.quartic(x);
        let s = q.sqrt().sqrt();
        for v in x.iter_mut() {
            *v /= s;
        }
    };
    // projected gradient of λ at x (Q(x) = 1 assumed): mask the active
    // bound constraints first, then project onto the tangent space of
    // the sphere within the inactive subspace
    let grad = |x: &[f64], g: &mut Vec<f64>, scratch: &mut Vec<f64>| {
        fem.matvec(x, scratch);
        let nq = fem.quadratic(x);
        fem.cubic_load(x, g);
        let mut c = g.clone();
        let root2pi = (2.0 * PI).sqrt();
        for i in 0..n {
            g[i] = root2pi * 2.0 * (scratch[i] - nq * c[i]);
        }
        for i in 0..n {
            if x[i] == 0.0 && g[i] > 0.0 {
                g[i] = 0.0;
                c[i] = 0.0;
            }
        }
        let gc: f64 = g.iter().zip(&c).map(|(a, b)| a * b).sum();
        let cc: f64 = c.iter().map(|v| v * v).sum();
        if cc > 0.0 {
            for i in 0..n {
                g[i] -= gc / cc * c[i];
            }
        }
    };

    // gradient tolerance: absolute, but never below the rounding
    // floor of the gradient itself (~‖A‖_∞ · ε · √n), which an
    // extremely fine grid could otherwise put out of reach
    let opscale: f64 = (0..n)
        .map(|i| {
            let mut s = fem.diag[i].abs();
            if i > 0 {
                s += fem.off[i - 1].abs();
            }
            if i + 1 < n {
                s += fem.off[i].abs();
            }
            s
        })
        .fold(1.0f64, f64::max);
    let tol = GRAD_TOL.max(100.0 * opscale * f64::EPSILON * (n as f64).sqrt());

    let mut x = start.to_vec();
    for v in x.iter_mut() {
        *v = v.max(0.0);
    }
    normalize(&mut x);
    let mut g = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    grad(&x, &mut g, &mut scratch);
    let mut alpha = 1e-3;
    let mut prev_x: Option<Vec<f64>> = None;
    let mut prev_g: Option<Vec<f64>> = None;
    let mut lambda = fem.lambda(&x);
    for iter in 0..MAX_ITERS {
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < tol {
            return (x, gnorm, iter, true);
        }
        if let (Some(px), Some(pg)) = (&prev_x, &prev_g) {
            let mut sy = 0.0;
            let mut yy = 0.0;
            for i in 0..n {
                let s = x[i] - px[i];
                let y = g[i] - pg[i];
                sy += s * y;
                yy += y * y;
            }
            if yy > 0.0 && sy.abs() > 0.0 {
                alpha = (sy.abs() / yy).clamp(1e-12, 1e3);
            }
        }
        let step = |a: f64| -> Vec<f64> {
            let mut y: Vec<f64> = (0..n).map(|i| (x[i] - a * g[i]).max(0.0)).collect();
            if y.iter().all(|&v| v == 0.0) {
                y = x.clone();
            }
            normalize(&mut y);
            y
        };
        let mut y = step(alpha);
        let ly = fem.lambda(&y);
        // safeguard against a wildly long Barzilai–Borwein step: on a
        // clear increase, retry once with a conservative step
        if ly > lambda + 1e-10 * (1.0 + lambda.abs()) {
            let y2 = step(1e-4 * alpha.min(1.0));
            let ly2 = fem.lambda(&y2);
            if ly2 < ly {
                y = y2;
                lambda = ly2;
            } else {
                lambda = ly;
            }
        } else {
            lambda = ly;
        }
        prev_x = Some(std::mem::take(&mut x));
        prev_g = Some(g.clone());
        x = y;
        grad(&x, &mut g, &mut scratch);
    }
    let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    (x, gnorm, MAX_ITERS, false)
}

fn finish(fem: &Fem, x: Vec<f64>, gnorm: f64, iters: usize) -> MinimizeResult {
    let n = x.len();
    // rescale so the Euler–Lagrange equation holds with the paper's
    // (λ/6) normalization: t² = 6/(√(2π)·√Q), independent of λ's sign
    let q = fem.quartic(&x);
    let tscale = (6.0 / ((2.0 * PI).sqrt() * q.sqrt())).sqrt();
    let psi: Vec<f64> = x.iter().map(|v| v * tscale).collect();
    let lambda = fem.lambda(&psi);
    let mut apsi = vec![0.0; n];
    fem.matvec(&psi, &mut apsi);
    let mut c = vec![0.0; n];
    fem.cubic_load(&psi, &mut c);
    let mut el2 = 0.0;
    for i in 0..n {
        if psi[i] > 0.0 && fem.lumped[i] > 0.0 {
            let rho = apsi[i] - lambda / 6.0 * c[i];
            el2 += rho * rho / fem.lumped[i];
        }
    }
    MinimizeResult {
        lambda,
        phi: RadialFunction::new(fem.grid.clone(), psi),
        iterations: iters,
        grad_norm: gnorm,
        el_residual: el2.sqrt(),
    }
}

/// Minimize the discrete quotient from a given nonnegative start.
pub fn minimize_quotient_from(
    t: &StaticTriple,
    start: &RadialFunction,
    opts: &FdOptions,
) -> Result<MinimizeResult, VariationalError> {
    if start.grid.len() < 128 {
        return Err(VariationalError::TooFewNodes(start.grid.len()));
    }
    let fem = Fem::assemble(t, &start.grid, opts)?;
    let (x, gnorm, iters, ok) = descend(&fem, &start.values);
    if !ok {
        return Err(VariationalError::NonConvergence { grad_norm: gnorm });
    }
    Ok(finish(&fem, x, gnorm, iters))
}

/// Minimize the discrete quotient on an `n`-node uniform grid from
/// three deterministic starts (constant, cosine bump, and the decay
/// test function at `ε = 1e-4`), returning the best converged run.
pub fn minimize_quotient(
    t: &StaticTriple,
    nodes: usize,
    opts: &FdOptions,
) -> Result<MinimizeResult, VariationalError> {
    if nodes < 128 {
        return Err(VariationalError::TooFewNodes(nodes));
    }
    let rr = t.radial.as_ref().expect("triple has no radial reduction");
    let width = rr.hi - rr.lo;
    let starts = [
        RadialFunction::constant(t, nodes, 1.0),
        RadialFunction::sample(t, nodes, |r| {
            1.0 + 0.3 * (PI * (r - rr.lo) / width).cos()
        }),
        decay_start(t, nodes, 1e-4, opts)?,
    ];
    let fem = Fem::assemble(t, &uniform_grid(t, nodes), opts)?;
    let mut best: Option<MinimizeResult> = None;
    let mut last_gnorm = f64::INFINITY;
    for s in &starts {
        let (x, gnorm, iters, ok) = descend(&fem, &s.values);
        if !ok {
            last_gnorm = last_gnorm.min(gnorm);
            continue;
        }
        let res = finish(&fem, x, gnorm, iters);
        if best.as_ref().is_none_or(|b| res.lambda < b.lambda) {
            best = Some(res);
        }
    }
    best.ok_or(VariationalError::NonConvergence { grad_norm: last_gnorm })
}

/// `(|Ric̊|² + ε)^{1/6}` sampled on the grid (radii clamped a hair
/// inside the interval so curvature is never evaluated on a face).
fn decay_start(
    t: &StaticTriple,
    nodes: usize,
    eps: f64,
    opts: &FdOptions,
) -> Result<RadialFunction, VariationalError> {
    let rr = t.radial.as_ref().expect("triple has no radial reduction");
    let collar = 1e-7 * (rr.hi - rr.lo);
    let mut err: Option<CurvatureError> = None;
    let f = RadialFunction::sample(t, nodes, |r| {
        let rc = r.clamp(rr.lo + collar, rr.hi - collar);
        match weights_at(t, rc, opts) {
            Ok(w) => (w.snorm2 + eps).powf(1.0 / 6.0),
            Err(e) => {
                err = Some(e);
                1.0
            }
        }
    });
    match err {
        Some(e) => Err(e.into()),
        None => Ok(f),
    }
}

/// One row of the decay scan.
#[derive(Clone, Copy, Debug)]
pub struct DecayRow {
    pub epsilon: f64,
    /// `P(ε) = ∫(3|∇φ_ε^{1/3}|² + (6 − √6|Ric̊|)φ_ε^{2/3}) V dμ`
    pub numerator: f64,
    /// `M(ε) = ε∫(6 − √6|Ric̊|)(|Ric̊|² + ε)^{−2/3} V dμ ≥ P(ε)`
    pub bound: f64,
}

/// The decay scan over an ε-ladder.
#[derive(Clone, Debug)]
pub struct DecayScan {
    pub rows: Vec<DecayRow>,
    /// log-log slope of `bound` vs ε (least squares); `None` when the
    /// bound is not strictly positive on the ladder (e.g. a triple
    /// with `|Ric̊|` constant makes it vanish identically)
    pub slope: Option<f64>,
}

/// Evaluate the decay family on a ladder of ε values.
///
/// Applicable only when `Ric̊ ≠ 0` somewhere; a triple with `Ric̊ ≡ 0`
/// (the hemisphere) has a constant decay family and the scan is
/// meaningless.
pub fn testfn_decay(
    t: &StaticTriple,
    eps_list: &[f64],
    opts: &FdOptions,
) -> Result<DecayScan, VariationalError> {
    let rr = t.radial.as_ref().expect("triple has no radial reduction");
    let width = rr.hi - rr.lo;
    let probes = 17;
    let max_snorm = (1..probes)
        .map(|i| {
            let r = rr.lo + width * i as f64 / probes as f64;
            weights_at(t, r, opts).map(|w| w.snorm2)
        })
        .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))?;
    if max_snorm < 1e-16 {
        return Err(VariationalError::NotApplicable(format!(
            "trace-free Ricci vanishes identically on {} (max |Ric̊|² = {max_snorm:e})",
            t.name
        )));
    }

    let sqrt6 = 6.0f64.sqrt();
    let fd_h = 1e-5 * width;
    let err: std::cell::RefCell<Option<CurvatureError>> = std::cell::RefCell::new(None);
    let stash = |e: CurvatureError| {
        err.borrow_mut().get_or_insert(e);
        f64::NAN
    };
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        // φ(r) = (|Ric̊|²(r) + ε)^{1/6}; derivative by second-order
        // finite differences, one-sided within 2h of a face so the
        // stencil never lands on a profile root
        let phi_at = |r: f64| -> f64 {
            match weights_at(t, r, opts) {
                Ok(w) => (w.snorm2 + eps).powf(1.0 / 6.0),
                Err(e) => stash(e),
            }
        };
        let dphi_at = |r: f64| -> f64 {
            if r - rr.lo < 2.0 * fd_h {
                (-3.0 * phi_at(r) + 4.0 * phi_at(r + fd_h) - phi_at(r + 2.0 * fd_h))
                    / (2.0 * fd_h)
            } else if rr.hi - r < 2.0 * fd_h {
                (3.0 * phi_at(r) - 4.0 * phi_at(r - fd_h) + phi_at(r - 2.0 * fd_h))
                    / (2.0 * fd_h)
            } else {
                (phi_at(r + fd_h) - phi_at(r - fd_h)) / (2.0 * fd_h)
            }
        };
        let numerator = t
            .integrate_v_weighted(
                |r| match weights_at(t, r, opts) {
                    Ok(w) => {
                        let phi = (w.snorm2 + eps).powf(1.0 / 6.0);
                        let dphi = dphi_at(r);
                        3.0 * w.grr * dphi * dphi
                            + (6.0 - sqrt6 * w.snorm2.sqrt()) * phi * phi
                    }
                    Err(e) => stash(e),
                },
                1e-9,
            )
            .value;
        let bound = eps
            * t.integrate_v_weighted(
                |r| match weights_at(t, r, opts) {
                    Ok(w) => {
                        (6.0 - sqrt6 * w.snorm2.sqrt()) * (w.snorm2 + eps).powf(-2.0 / 3.0)
                    }
                    Err(e) => stash(e),
                },
                1e-9,
            )
            .value;
        rows.push(DecayRow { epsilon: eps, numerator, bound });
    }
    if let Some(e) = err.into_inner() {
        return Err(e.into());
    }
    let slope = if rows.len() >= 2 && rows.iter().all(|r| r.bound > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| r.epsilon.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.bound.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(DecayScan { rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use approx::assert_relative_eq;

    #[test]
    fn quotient_closed_forms_and_scale_invariance() {
        let opts = FdOptions::default();
        // cylinder, φ ≡ 1: potential term vanishes identically
        let cyl = models::cylinder_triple();
        let one = RadialFunction::constant(&cyl, 200, 1.0);
        let q = modified_quotient(&cyl, &one, &opts).unwrap();
        assert!(q.value.abs() < 1e-12, "cylinder 𝒲(1) = {:e}", q.value);

        // hemisphere, φ ≡ 1: 𝒲 = √(2π)·2·(4π/3)/(4π/3)^{1/2}
        let hemi = models::hemisphere_triple();
        let one = RadialFunction::constant(&hemi, 200, 1.0);
        let q = modified_quotient(&hemi, &one, &opts).unwrap();
        let vol = 4.0 * PI / 3.0;
        let expected = (2.0 * PI).sqrt() * 2.0 * vol / vol.sqrt();
        assert_relative_eq!(q.value, expected, max_relative = 1e-9);
        assert_relative_eq!(q.denominator, vol.sqrt(), max_relative = 1e-9);

        // exact scale invariance at the arithmetic level
        let sds = models::sds_triple(0.1).unwrap();
        let phi = RadialFunction::sample(&sds, 160, |r| 1.0 + (3.0 * r).sin().powi(2));
        let phi2 = RadialFunction::new(
            phi.grid.clone(),
            phi.values.iter().map(|v| 2.0 * v).collect(),
        );
        let a = modified_quotient(&sds, &phi, &opts).unwrap();
        let b = modified_quotient(&sds, &phi2, &opts).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!((4.0 * a.numerator).to_bits(), b.numerator.to_bits());
    }

    #[test]
    fn quotient_is_stable_under_grid_refinement() {
        let opts = FdOptions::default();
        let t = models::sds_triple(0.1).unwrap();
        let rr = t.radial.as_ref().unwrap();
        let width = rr.hi - rr.lo;
        let f = |r: f64| 1.0 + ((r - rr.lo) / width) * ((rr.hi - r) / width);
        let coarse = modified_quotient(&t, &RadialFunction::sample(&t, 512, f), &opts).unwrap();
        let fine = modified_quotient(&t, &RadialFunction::sample(&t, 1024, f), &opts).unwrap();
        assert!(
            (coarse.value - fine.value).abs() < 1e-6,
            "refinement moved 𝒲 by {:e}",
            (coarse.value - fine.value).abs()
        );
    }

    #[test]
    fn zero_function_is_rejected() {
        let opts = FdOptions::default();
        let t = models::cylinder_triple();
        let zero = RadialFunction::constant(&t, 150, 0.0);
        assert!(matches!(
            modified_quotient(&t, &zero, &opts),
            Err(VariationalError::ZeroDenominator)
        ));
        assert!(matches!(
            minimize_quotient(&t, 64, &opts),
            Err(VariationalError::TooFewNodes(64))
        ));
    }

    #[test]
    fn cylinder_minimizer_is_constant_with_zero_lambda() {
        let opts = FdOptions::default();
        let t = models::cylinder_triple();
        let res = minimize_quotient(&t, 256, &opts).unwrap();
        assert!(res.lambda.abs() < 1e-6, "cylinder λ = {:e}", res.lambda);
        assert!(res.el_residual < 1e-4, "EL residual {:e}", res.el_residual);
        let mean: f64 = res.phi.values.iter().sum::<f64>() / res.phi.values.len() as f64;
        assert!(mean > 0.0);
        for v in &res.phi.values {
            assert!(
                (v - mean).abs() < 1e-4 * mean,
                "minimizer deviates from constant: {} vs {}",
                v,
                mean
            );
        }
    }

    #[test]
    fn hemisphere_minimum_is_positive() {
        let opts = FdOptions::default();
        let t = models::hemisphere_triple();
        let res = minimize_quotient(&t, 256, &opts).unwrap();
        assert!(res.lambda > 1.0, "hemisphere λ = {}", res.lambda);
        assert!(res.el_residual < 1e-4);
        // the minimum does not exceed the constant's quotient
        let one = RadialFunction::constant(&t, 256, 1.0);
        let q1 = modified_quotient(&t, &one, &opts).unwrap();
        assert!(res.lambda <= q1.value + 1e-9);
    }

    #[test]
    fn sds_lambda_is_nonpositive_up_to_tolerance() {
        let opts = FdOptions::default();
        let t = models::sds_triple(0.1).unwrap();
        let res = minimize_quotient(&t, 512, &opts).unwrap();
        assert!(res.lambda <= 1e-3, "sds:0.1 λ = {}", res.lambda);
        assert!(res.el_residual < 1e-4, "EL residual {:e}", res.el_residual);
        assert!(res.phi.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn descent_never_increases_the_start_quotient() {
        let opts = FdOptions::default();
        let t = models::sds_triple(0.1).unwrap();
        let fem = Fem::assemble(&t, &uniform_grid(&t, 256), &opts).unwrap();
        let rr = t.radial.as_ref().unwrap();
        let width = rr.hi - rr.lo;
        for (i, start) in [
            RadialFunction::constant(&t, 256, 1.0),
            RadialFunction::sample(&t, 256, |r| 1.0 + 0.5 * ((r - rr.lo) / width)),
            RadialFunction::sample(&t, 256, |r| {
                0.2 + ((r - rr.lo) / width) * ((rr.hi - r) / width)
            }),
        ]
        .iter()
        .enumerate()
        {
            let l0 = fem.lambda(&start.values);
            let res = minimize_quotient_from(&t, start, &opts).unwrap();
            assert!(
                res.lambda <= l0 + 1e-9,
                "start {i}: λ went from {l0} to {}",
                res.lambda
            );
            assert!(res.phi.values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn refinement_differences_shrink() {
        let opts = FdOptions::default();
        let t = models::sds_triple(0.1).unwrap();
        let l: Vec<f64> = [128, 256, 512]
            .iter()
            .map(|&n| minimize_quotient(&t, n, &opts).unwrap().lambda)
            .collect();
        let d1 = (l[1] - l[0]).abs();
        let d2 = (l[2] - l[1]).abs();
        assert!(d2 < d1, "refinement differences {d1:e}, {d2:e}");
    }

    #[test]
    fn decay_scan_on_sds() {
        let opts = FdOptions::default();
        let ladder = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        let t = models::sds_triple(0.1).unwrap();
        let scan = testfn_decay(&t, &ladder, &opts).unwrap();
        // the proven chain P(ε) ≤ M(ε), with quadrature slack
        for row in &scan.rows {
            assert!(
                row.numerator <= row.bound + 1e-8 * (1.0 + row.bound.abs()),
                "ε = {:e}: P = {:e} > M = {:e}",
                row.epsilon,
                row.numerator,
                row.bound
            );
        }
        // fitted one-constant ε^{1/3} envelope
        let c = scan.rows[0].bound / scan.rows[0].epsilon.powf(1.0 / 3.0);
        for row in &scan.rows {
            assert!(row.numerator <= c * row.epsilon.powf(1.0 / 3.0) + 1e-8);
        }
        // on a horizon-bounded model |Ric̊| > 0, so the bound decays
        // linearly — faster than the guaranteed cube root
        let slope = scan.slope.unwrap();
        assert!(slope >= 1.0 / 3.0 - 0.05, "decay slope {slope}");
        assert_relative_eq!(slope, 1.0, max_relative = 0.05);
    }

    #[test]
    fn decay_monotone_and_sign_structure_at_larger_mass() {
        let opts = FdOptions::default();
        let ladder = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        let t = models::sds_triple(0.15).unwrap();
        let scan = testfn_decay(&t, &ladder, &opts).unwrap();
        assert!(scan.rows[0].numerator > 0.0, "P(1e-2) = {:e}", scan.rows[0].numerator);
        for w in scan.rows.windows(2) {
            assert!(
                w[1].numerator < w[0].numerator,
                "numerator not decreasing along the ladder: {:e} -> {:e}",
                w[0].numerator,
                w[1].numerator
            );
        }
    }

    #[test]
    fn decay_vanishes_identically_on_the_cylinder() {
        let opts = FdOptions::default();
        let t = models::cylinder_triple();
        let scan = testfn_decay(&t, &[1e-2, 1e-4, 1e-6], &opts).unwrap();
        for row in &scan.rows {
            assert!(row.numerator.abs() < 1e-10, "P = {:e}", row.numerator);
            assert!(row.bound.abs() < 1e-10, "M = {:e}", row.bound);
        }
        assert!(scan.slope.is_none());
    }

    #[test]
    fn decay_not_applicable_on_the_hemisphere() {
        let opts = FdOptions::default();
        let t = models::hemisphere_triple();
        assert!(matches!(
            testfn_decay(&t, &[1e-3], &opts),
            Err(VariationalError::NotApplicable(_))
        ));
    }
}
