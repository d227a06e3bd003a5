//! Coordinate charts with metric components and derivative access.
//!
//! A [`Chart`] is a single coordinate box carrying the metric as either
//! a sum of separable products of one-variable factors (the analytic
//! representation: every canonical geometry here is of that form, and
//! jets give exact partials to fourth order) or an opaque closure
//! (derivatives then come from the finite-difference engine in [`crate::fd`]).
//!
//! Partials are returned as a [`MetricPartials`] bundle; `order` records
//! how many derivative levels are trustworthy. The analytic path fills
//! four, the FD path three.

use crate::fd::{self, FdOptions};
use crate::func1d::Func1;
use crate::tensor::{self, Mat};
use std::sync::Arc;

/// One separable product term `coeff * prod_c f_c(x_c)`; at most one
/// factor per coordinate.
#[derive(Clone, Debug)]
pub struct ProductTerm {
    pub coeff: f64,
    pub factors: Vec<(usize, Func1)>,
}

/// A metric component as a sum of product terms.
#[derive(Clone, Debug, Default)]
pub struct ComponentRep {
    pub terms: Vec<ProductTerm>,
}

impl ComponentRep {
    pub fn zero() -> Self {
        ComponentRep { terms: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        ComponentRep { terms: vec![ProductTerm { coeff: c, factors: vec![] }] }
    }

    pub fn single(coeff: f64, factors: Vec<(usize, Func1)>) -> Self {
        ComponentRep { terms: vec![ProductTerm { coeff, factors }] }
    }

    /// The same component with every factor's coordinate index moved
    /// up by `offset` (for embedding into a higher-dimensional chart).
    pub fn shifted(&self, offset: usize) -> ComponentRep {
        ComponentRep {
            terms: self
                .terms
                .iter()
                .map(|t| ProductTerm {
                    coeff: t.coeff,
                    factors: t.factors.iter().map(|(c, f)| (c + offset, f.clone())).collect(),
                })
                .collect(),
        }
    }

    /// Multiply the component by `f(x_coord)`, merging with an existing
    /// factor on that coordinate so each term keeps at most one factor
    /// per coordinate.
    pub fn scaled_by(&self, coord: usize, f: &Func1) -> ComponentRep {
        ComponentRep {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut factors = Vec::with_capacity(t.factors.len() + 1);
                    let mut merged = false;
                    for (c, g) in &t.factors {
                        if *c == coord {
                            factors
                                .push((*c, Func1::Prod(vec![f.clone(), g.clone()])));
                            merged = true;
                        } else {
                            factors.push((*c, g.clone()));
                        }
                    }
                    if !merged {
                        factors.push((coord, f.clone()));
                    }
                    ProductTerm { coeff: t.coeff, factors }
                })
                .collect(),
        }
    }
}

type MetricClosure = Arc<dyn Fn(&[f64]) -> Mat + Send + Sync>;

#[derive(Clone)]
enum MetricRep {
    /// `comps[i][j]` for the full symmetric matrix.
    Separable(Vec<Vec<ComponentRep>>),
    Closure(MetricClosure),
    /// Pullback of `base` under the exact linear map `x = Q y`.
    Rotated { base: Box<Chart>, q: Mat },
}

/// Derivatives of the metric components at a point. `d1[k]` is the
/// partial along coordinate `k`, `d2[k][l]`, `d3[k][l][m]`, and
/// `d4[k][l][m][n]` likewise; all are fully symmetrized in the
/// derivative slots. Only levels `1..=order` are populated.
pub struct MetricPartials {
    pub dim: usize,
    pub order: usize,
    pub g: Mat,
    pub d1: [Mat; 4],
    pub d2: [[Mat; 4]; 4],
    pub d3: Box<[[[Mat; 4]; 4]; 4]>,
    pub d4: Box<[[[[Mat; 4]; 4]; 4]; 4]>,
}

impl MetricPartials {
    fn empty(dim: usize) -> Self {
        MetricPartials {
            dim,
            order: 0,
            g: tensor::mat_zero(),
            d1: [tensor::mat_zero(); 4],
            d2: [[tensor::mat_zero(); 4]; 4],
            d3: Box::new([[[tensor::mat_zero(); 4]; 4]; 4]),
            d4: Box::new([[[[tensor::mat_zero(); 4]; 4]; 4]; 4]),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ChartError {
    #[error("point {point:?} is outside the chart domain (margin {margin})")]
    OutsideDomain { point: Vec<f64>, margin: f64 },
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error("operation requires dimension {expected}, chart has {got}")]
    WrongDimension { expected: usize, got: usize },
}

/// A coordinate box with metric data.
#[derive(Clone)]
pub struct Chart {
    pub dim: usize,
    pub coordinate_names: Vec<String>,
    /// Per-coordinate open interval.
    pub domain: Vec<(f64, f64)>,
    /// +1 or -1; fixes the frame orientation used for duality splits.
    pub orientation: f64,
    rep: MetricRep,
}

impl std::fmt::Debug for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Chart")
            .field("dim", &self.dim)
            .field("coordinate_names", &self.coordinate_names)
            .field("domain", &self.domain)
            .field("orientation", &self.orientation)
            .field("analytic", &self.has_analytic())
            .finish()
    }
}

impl Chart {
    pub fn separable(
        dim: usize,
        names: &[&str],
        domain: Vec<(f64, f64)>,
        comps: Vec<Vec<ComponentRep>>,
    ) -> Self {
        assert_eq!(names.len(), dim);
        assert_eq!(domain.len(), dim);
        assert_eq!(comps.len(), dim);
        Chart {
            dim,
            coordinate_names: names.iter().map(|s| s.to_string()).collect(),
            domain,
            orientation: 1.0,
            rep: MetricRep::Separable(comps),
        }
    }

    /// Diagonal separable metric from per-coordinate component reps.
    pub fn separable_diag(
        names: &[&str],
        domain: Vec<(f64, f64)>,
        diag: Vec<ComponentRep>,
    ) -> Self {
        let dim = diag.len();
        let mut comps = vec![vec![ComponentRep::zero(); dim]; dim];
        for (i, c) in diag.into_iter().enumerate() {
            comps[i][i] = c;
        }
        Chart::separable(dim, names, domain, comps)
    }

    pub fn from_closure(
        dim: usize,
        names: &[&str],
        domain: Vec<(f64, f64)>,
        f: impl Fn(&[f64]) -> Mat + Send + Sync + 'static,
    ) -> Self {
        Chart {
            dim,
            coordinate_names: names.iter().map(|s| s.to_string()).collect(),
            domain,
            orientation: 1.0,
            rep: MetricRep::Closure(Arc::new(f)),
        }
    }

    /// Whether exact analytic partials are available.
    pub fn has_analytic(&self) -> bool {
        match &self.rep {
            MetricRep::Separable(_) => true,
            MetricRep::Closure(_) => false,
            MetricRep::Rotated { base, .. } => base.has_analytic(),
        }
    }

    /// The separable component matrix, when this chart has one.
    pub fn separable_components(&self) -> Option<&Vec<Vec<ComponentRep>>> {
        match &self.rep {
            MetricRep::Separable(comps) => Some(comps),
            _ => None,
        }
    }

    /// Characteristic length of each coordinate (domain width).
    pub fn coordinate_scales(&self) -> Vec<f64> {
        self.domain.iter().map(|(a, b)| b - a).collect()
    }

    /// Is `p` inside the domain with a relative margin from each face?
    pub fn contains(&self, p: &[f64], margin_rel: f64) -> bool {
        if p.len() != self.dim {
            return false;
        }
        self.domain.iter().zip(p).all(|(&(a, b), &x)| {
            let m = margin_rel * (b - a);
            x > a + m && x < b - m
        })
    }

    pub fn check_interior(&self, p: &[f64], margin_rel: f64) -> Result<(), ChartError> {
        if !self.contains(p, margin_rel) {
            return Err(ChartError::OutsideDomain { point: p.to_vec(), margin: margin_rel });
        }
        Ok(())
    }

    /// Metric matrix at `p`.
    pub fn metric(&self, p: &[f64]) -> Mat {
        match &self.rep {
            MetricRep::Separable(comps) => {
                let mut g = tensor::mat_zero();
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        let mut s = 0.0;
                        for t in &comps[i][j].terms {
                            let mut v = t.coeff;
                            for (c, f) in &t.factors {
                                v *= f.eval(p[*c]);
                            }
                            s += v;
                        }
                        g[i][j] = s;
                    }
                }
                g
            }
            MetricRep::Closure(f) => f(p),
            MetricRep::Rotated { base, q } => {
                let x = apply_q(q, p, base.dim);
                let gx = base.metric(&x);
                let mut g = tensor::mat_zero();
                let n = base.dim;
                for a in 0..n {
                    for b in 0..n {
                        let mut s = 0.0;
                        for i in 0..n {
                            for j in 0..n {
                                s += q[i][a] * q[j][b] * gx[i][j];
                            }
                        }
                        g[a][b] = s;
                    }
                }
                g
            }
        }
    }

    /// Metric partials through `order` derivative levels (capped at 4
    /// analytic / 3 FD).
    pub fn partials(&self, p: &[f64], order: usize, opts: &FdOptions) -> MetricPartials {
        match &self.rep {
            MetricRep::Separable(comps) => self.partials_separable(comps, p, order.min(4)),
            MetricRep::Closure(f) => self.partials_fd(f, p, order.min(3), opts),
            MetricRep::Rotated { base, q } => {
                let x = apply_q(q, p, base.dim);
                let bp = base.partials(&x, order, opts);
                rotate_partials(&bp, q)
            }
        }
    }

    fn partials_separable(
        &self,
        comps: &[Vec<ComponentRep>],
        p: &[f64],
        order: usize,
    ) -> MetricPartials {
        let n = self.dim;
        let mut out = MetricPartials::empty(n);
        out.order = order;
        for i in 0..n {
            for j in i..n {
                for term in &comps[i][j].terms {
                    // jets of each factor, order 4
                    let jets: Vec<(usize, [f64; 5])> = term
                        .factors
                        .iter()
                        .map(|(c, f)| (*c, f.jet(p[*c]).d))
                        .collect();
                    let tp = |mult: [usize; 4]| -> f64 {
                        let mut v = term.coeff;
                        let mut used = [false; 4];
                        for (c, d) in &jets {
                            v *= d[mult[*c]];
                            used[*c] = true;
                        }
                        for c in 0..n {
                            if !used[c] && mult[c] > 0 {
                                return 0.0;
                            }
                        }
                        v
                    };
                    let put = |m: &mut Mat, v: f64| {
                        m[i][j] += v;
                        if i != j {
                            m[j][i] += v;
                        }
                    };
                    put(&mut out.g, tp([0; 4]));
                    if order >= 1 {
                        for k in 0..n {
                            let mut m = [0usize; 4];
                            m[k] += 1;
                            put(&mut out.d1[k], tp(m));
                        }
                    }
                    if order >= 2 {
                        for k in 0..n {
                            for l in 0..n {
                                let mut m = [0usize; 4];
                                m[k] += 1;
                                m[l] += 1;
                                put(&mut out.d2[k][l], tp(m));
                            }
                        }
                    }
                    if order >= 3 {
                        for k in 0..n {
                            for l in 0..n {
                                for q in 0..n {
                                    let mut m = [0usize; 4];
                                    m[k] += 1;
                                    m[l] += 1;
                                    m[q] += 1;
                                    put(&mut out.d3[k][l][q], tp(m));
                                }
                            }
                        }
                    }
                    if order >= 4 {
                        for k in 0..n {
                            for l in 0..n {
                                for q in 0..n {
                                    for r in 0..n {
                                        let mut m = [0usize; 4];
                                        m[k] += 1;
                                        m[l] += 1;
                                        m[q] += 1;
                                        m[r] += 1;
                                        put(&mut out.d4[k][l][q][r], tp(m));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn partials_fd(
        &self,
        f: &MetricClosure,
        p: &[f64],
        order: usize,
        opts: &FdOptions,
    ) -> MetricPartials {
        let n = self.dim;
        let mut out = MetricPartials::empty(n);
        out.order = order;
        out.g = f(p);
        let scales = self.fd_scales(f, p);
        for i in 0..n {
            for j in i..n {
                let comp = |q: &[f64]| f(q)[i][j];
                let put = |m: &mut Mat, v: f64| {
                    m[i][j] = v;
                    if i != j {
                        m[j][i] = v;
                    }
                };
                if order >= 1 {
                    for k in 0..n {
                        put(&mut out.d1[k], fd::partial(&comp, p, &[k], &scales, opts));
                    }
                }
                if order >= 2 {
                    for k in 0..n {
                        for l in k..n {
                            let v = fd::partial(&comp, p, &[k, l], &scales, opts);
                            put(&mut out.d2[k][l], v);
                            if k != l {
                                put(&mut out.d2[l][k], v);
                            }
                        }
                    }
                }
                if order >= 3 {
                    for k in 0..n {
                        for l in k..n {
                            for q in l..n {
                                let v = fd::partial(&comp, p, &[k, l, q], &scales, opts);
                                for perm in permutations3(k, l, q) {
                                    put(&mut out.d3[perm[0]][perm[1]][perm[2]], v);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Per-coordinate FD scales: the domain width, shrunk where the
    /// metric varies on a shorter length (probed from d log|det g|).
    /// Keeps stencils accurate near faces where components blow up.
    fn fd_scales(&self, f: &MetricClosure, p: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut scales = self.coordinate_scales();
        for k in 0..n {
            let delta = 1e-5 * scales[k];
            let mut lo = p.to_vec();
            let mut hi = p.to_vec();
            lo[k] -= delta;
            hi[k] += delta;
            let d_lo = tensor::det(&f(&lo), n).abs().max(1e-300);
            let d_hi = tensor::det(&f(&hi), n).abs().max(1e-300);
            let dlog = ((d_hi.ln() - d_lo.ln()) / (2.0 * delta)).abs();
            if dlog > 0.0 {
                scales[k] = scales[k].min(0.25 / dlog);
            }
        }
        scales
    }

    /// Pullback chart under the exact linear map `x = Q y`, valid on the
    /// box of radius `radius` around the preimage of `center`. `q` must
    /// be orthogonal; orientation picks up `sign(det q)`.
    pub fn rotated(&self, q: &Mat, center: &[f64], radius: f64) -> Chart {
        let n = self.dim;
        // y0 = Q^T x0
        let mut y0 = vec![0.0; n];
        for a in 0..n {
            for i in 0..n {
                y0[a] += q[i][a] * center[i];
            }
        }
        let domain = y0.iter().map(|&y| (y - radius, y + radius)).collect();
        let det_sign = tensor::det(q, n).signum();
        Chart {
            dim: n,
            coordinate_names: (0..n).map(|a| format!("y{a}")).collect(),
            domain,
            orientation: self.orientation * det_sign,
            rep: MetricRep::Rotated { base: Box::new(self.clone()), q: *q },
        }
    }

    // ---- stock test geometries ----

    pub fn euclidean(dim: usize) -> Chart {
        let names = ["x0", "x1", "x2", "x3"];
        Chart::separable_diag(
            &names[..dim],
            vec![(-10.0, 10.0); dim],
            (0..dim).map(|_| ComponentRep::constant(1.0)).collect(),
        )
    }

    /// Flat torus cube with edge lengths (1, 2, 3) as constant diagonal.
    pub fn flat_torus() -> Chart {
        Chart::separable_diag(
            &["x0", "x1", "x2"],
            vec![(0.0, 1.0); 3],
            vec![
                ComponentRep::constant(1.0),
                ComponentRep::constant(4.0),
                ComponentRep::constant(9.0),
            ],
        )
    }

    /// Round unit sphere in nested polar coordinates, dim 2..=4.
    pub fn round_sphere(dim: usize) -> Chart {
        let names = ["a0", "a1", "a2", "a3"];
        let mut domain = vec![(1e-3, std::f64::consts::PI - 1e-3); dim];
        domain[dim - 1] = (1e-3, 2.0 * std::f64::consts::PI - 1e-3);
        let mut diag = Vec::with_capacity(dim);
        for i in 0..dim {
            // g_ii = prod_{c < i} sin^2(a_c)
            let factors: Vec<(usize, Func1)> = (0..i)
                .map(|c| (c, Func1::Prod(vec![Func1::Sin(1.0), Func1::Sin(1.0)])))
                .collect();
            diag.push(ComponentRep::single(1.0, factors));
        }
        Chart::separable_diag(&names[..dim], domain, diag)
    }

    /// Mildly perturbed Euclidean 3-box; generically curved with
    /// nonvanishing Cotton tensor. `amp` up to ~0.1 stays positive
    /// definite on the domain.
    pub fn perturbed_euclidean(amp: f64) -> Chart {
        let s = |_k: usize| Func1::Sin(1.0);
        let c = |_k: usize| Func1::Cos(1.0);
        let mut comps = vec![vec![ComponentRep::zero(); 3]; 3];
        comps[0][0] = ComponentRep {
            terms: vec![
                ProductTerm { coeff: 1.0, factors: vec![] },
                ProductTerm { coeff: amp, factors: vec![(0, s(0)), (1, c(1))] },
            ],
        };
        comps[1][1] = ComponentRep {
            terms: vec![
                ProductTerm { coeff: 1.0, factors: vec![] },
                ProductTerm { coeff: amp, factors: vec![(1, s(1)), (2, c(2))] },
            ],
        };
        comps[2][2] = ComponentRep {
            terms: vec![
                ProductTerm { coeff: 1.0, factors: vec![] },
                ProductTerm { coeff: amp, factors: vec![(2, s(2)), (0, c(0))] },
            ],
        };
        comps[0][1] = ComponentRep::single(0.5 * amp, vec![(0, s(0)), (1, s(1))]);
        comps[1][0] = comps[0][1].clone();
        comps[1][2] = ComponentRep::single(0.5 * amp, vec![(1, c(1)), (2, s(2))]);
        comps[2][1] = comps[1][2].clone();
        Chart::separable(
            3,
            &["x0", "x1", "x2"],
            vec![(0.2, 1.2); 3],
            comps,
        )
    }

    /// Same metric as [`Chart::perturbed_euclidean`] but exposed only
    /// through a closure, exercising the FD path.
    pub fn perturbed_euclidean_closure(amp: f64) -> Chart {
        let analytic = Chart::perturbed_euclidean(amp);
        let inner = analytic.clone();
        Chart::from_closure(
            3,
            &["x0", "x1", "x2"],
            analytic.domain.clone(),
            move |p| inner.metric(p),
        )
    }
}

fn apply_q(q: &Mat, y: &[f64], n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in 0..n {
        for a in 0..n {
            x[i] += q[i][a] * y[a];
        }
    }
    x
}

fn permutations3(a: usize, b: usize, c: usize) -> Vec<[usize; 3]> {
    let mut perms = vec![
        [a, b, c],
        [a, c, b],
        [b, a, c],
        [b, c, a],
        [c, a, b],
        [c, b, a],
    ];
    perms.sort_unstable();
    perms.dedup();
    perms
}

/// Transform base-chart partials at `x = Qy` to rotated coordinates.
fn rotate_partials(bp: &MetricPartials, q: &Mat) -> MetricPartials {
    let n = bp.dim;
    let mut out = MetricPartials::empty(n);
    out.order = bp.order;
    let rot2 = |m: &Mat| -> Mat {
        let mut r = tensor::mat_zero();
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += q[i][a] * q[j][b] * m[i][j];
                    }
                }
                r[a][b] = s;
            }
        }
        r
    };
    out.g = rot2(&bp.g);
    if bp.order >= 1 {
        for c in 0..n {
            let mut acc = tensor::mat_zero();
            for k in 0..n {
                let r = rot2(&bp.d1[k]);
                for a in 0..n {
                    for b in 0..n {
                        acc[a][b] += q[k][c] * r[a][b];
                    }
                }
            }
            out.d1[c] = acc;
        }
    }
    if bp.order >= 2 {
        for c in 0..n {
            for d in 0..n {
                let mut acc = tensor::mat_zero();
                for k in 0..n {
                    for l in 0..n {
                        let r = rot2(&bp.d2[k][l]);
                        let w = q[k][c] * q[l][d];
                        for a in 0..n {
                            for b in 0..n {
                                acc[a][b] += w * r[a][b];
                            }
                        }
                    }
                }
                out.d2[c][d] = acc;
            }
        }
    }
    if bp.order >= 3 {
        for c in 0..n {
            for d in 0..n {
                for e in 0..n {
                    let mut acc = tensor::mat_zero();
                    for k in 0..n {
                        for l in 0..n {
                            for m in 0..n {
                                let r = rot2(&bp.d3[k][l][m]);
                                let w = q[k][c] * q[l][d] * q[m][e];
                                for a in 0..n {
                                    for b in 0..n {
                                        acc[a][b] += w * r[a][b];
                                    }
                                }
                            }
                        }
                    }
                    out.d3[c][d][e] = acc;
                }
            }
        }
    }
    if bp.order >= 4 {
        for c in 0..n {
            for d in 0..n {
                for e in 0..n {
                    for f in 0..n {
                        let mut acc = tensor::mat_zero();
                        for k in 0..n {
                            for l in 0..n {
                                for m in 0..n {
                                    for r4 in 0..n {
                                        let r = rot2(&bp.d4[k][l][m][r4]);
                                        let w = q[k][c] * q[l][d] * q[m][e] * q[r4][f];
                                        for a in 0..n {
                                            for b in 0..n {
                                                acc[a][b] += w * r[a][b];
                                            }
                                        }
                                    }
                                }
                            }
                        }
                        out.d4[c][d][e][f] = acc;
                    }
                }
            }
        }
    }
    out
}
