//! Static triples: a chart, a positive potential, and boundary data.
//!
//! A static triple `(M, g, V)` couples a Riemannian chart with a scalar
//! potential that is positive on the interior and vanishes on horizon
//! faces. The structure here carries everything the identity and
//! integral checks need: analytic (or FD) partials of the potential,
//! boundary face metadata (location, surface gravity, area), interior
//! samplers, and — for the warped models, which are all products of a
//! radial profile with a round two-sphere — a one-dimensional reduction
//! used by the quadrature-based checks.

use crate::chart::{Chart, ComponentRep};
use crate::fd::{self, FdOptions};
use crate::quad::{self, QuadResult};
use crate::tensor::{Mat, Ten3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

type ScalarClosure = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A scalar function on a chart: separable analytic form (jets give
/// exact partials) or an opaque closure (finite differences).
#[derive(Clone)]
pub enum ScalarField {
    Rep(ComponentRep),
    Closure(ScalarClosure),
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScalarField::Rep(r) => f.debug_tuple("Rep").field(r).finish(),
            ScalarField::Closure(_) => f.write_str("Closure(..)"),
        }
    }
}

/// Value and partials of a scalar field at a point; levels `1..=order`
/// are populated and fully symmetric in the derivative slots.
#[derive(Clone, Debug)]
pub struct ScalarPartials {
    pub dim: usize,
    pub order: usize,
    pub v: f64,
    pub d1: [f64; 4],
    pub d2: Mat,
    pub d3: Ten3,
}

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        ScalarField::Rep(ComponentRep::constant(c))
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            ScalarField::Rep(rep) => rep
                .terms
                .iter()
                .map(|t| {
                    t.coeff
                        * t.factors
                            .iter()
                            .map(|(c, f)| f.eval(p[*c]))
                            .product::<f64>()
                })
                .sum(),
            ScalarField::Closure(f) => f(p),
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, ScalarField::Rep(_))
    }

    /// Partials to `order` (at most 3). The analytic path multiplies
    /// factor jets; the closure path calls the FD engine with the given
    /// per-coordinate scales.
    pub fn partials(
        &self,
        dim: usize,
        p: &[f64],
        order: usize,
        scales: &[f64],
        opts: &FdOptions,
    ) -> ScalarPartials {
        let order = order.min(3);
        let mut out = ScalarPartials {
            dim,
            order,
            v: 0.0,
            d1: [0.0; 4],
            d2: Mat::default(),
            d3: Ten3::default(),
        };
        match self {
            ScalarField::Rep(rep) => {
                for term in &rep.terms {
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
                        for c in 0..dim {
                            if !used[c] && mult[c] > 0 {
                                return 0.0;
                            }
                        }
                        v
                    };
                    out.v += tp([0; 4]);
                    if order >= 1 {
                        for k in 0..dim {
                            let mut m = [0usize; 4];
                            m[k] += 1;
                            out.d1[k] += tp(m);
                        }
                    }
                    if order >= 2 {
                        for k in 0..dim {
                            for l in 0..dim {
                                let mut m = [0usize; 4];
                                m[k] += 1;
                                m[l] += 1;
                                out.d2[k][l] += tp(m);
                            }
                        }
                    }
                    if order >= 3 {
                        for k in 0..dim {
                            for l in 0..dim {
                                for q in 0..dim {
                                    let mut m = [0usize; 4];
                                    m[k] += 1;
                                    m[l] += 1;
                                    m[q] += 1;
                                    out.d3[k][l][q] += tp(m);
                                }
                            }
                        }
                    }
                }
            }
            ScalarField::Closure(f) => {
                out.v = f(p);
                if order >= 1 {
                    for k in 0..dim {
                        out.d1[k] = fd::partial(f.as_ref(), p, &[k], scales, opts);
                    }
                }
                if order >= 2 {
                    for k in 0..dim {
                        for l in k..dim {
                            let v = fd::partial(f.as_ref(), p, &[k, l], scales, opts);
                            out.d2[k][l] = v;
                            out.d2[l][k] = v;
                        }
                    }
                }
                if order >= 3 {
                    for k in 0..dim {
                        for l in k..dim {
                            for q in l..dim {
                                let v = fd::partial(f.as_ref(), p, &[k, l, q], scales, opts);
                                // symmetrize over all slot permutations
                                for perm in permutations3(k, l, q) {
                                    out.d3[perm[0]][perm[1]][perm[2]] = v;
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

fn permutations3(a: usize, b: usize, c: usize) -> [[usize; 3]; 6] {
    [
        [a, b, c],
        [a, c, b],
        [b, a, c],
        [b, c, a],
        [c, a, b],
        [c, b, a],
    ]
}

/// One boundary face of a static triple.
#[derive(Clone, Debug)]
pub struct BoundaryComponent {
    pub name: String,
    /// Chart coordinate that is frozen on the face.
    pub coordinate: usize,
    /// Coordinate value on the face.
    pub value: f64,
    /// +1 if the interior lies at larger coordinate values, -1 otherwise.
    pub inward: f64,
    /// `|∇V|` on the face (constant there for all models handled here).
    pub surface_gravity: f64,
    /// Induced area of the face.
    pub area: f64,
}

/// Marks a triple as a warped product over coordinate 0 with round
/// two-sphere slices in coordinates `(1, 2) = (θ, φ)`. Every scalar
/// invariant is then a function of coordinate 0 alone, and volume
/// integrals reduce to one dimension.
#[derive(Clone, Debug)]
pub struct RadialReduction {
    pub lo: f64,
    pub hi: f64,
}

/// Polar angle at which radial reductions sample the sphere slice.
pub(crate) const THETA_STAR: f64 = 1.0;
const PHI_STAR: f64 = 0.7;

/// A static triple: chart, potential, constant `ε` with `R = 6ε`,
/// boundary faces, and an optional radial reduction.
#[derive(Clone, Debug)]
pub struct StaticTriple {
    pub name: String,
    pub chart: Chart,
    pub potential: ScalarField,
    /// `V²` as a separable component (base coordinates), when the
    /// model provides one in closed form; enables the analytic
    /// circle-bundle lift.
    pub v_squared: Option<crate::chart::ComponentRep>,
    pub epsilon: f64,
    pub boundary: Vec<BoundaryComponent>,
    pub radial: Option<RadialReduction>,
}

/// Relative collar width: interior samples stay this fraction of each
/// coordinate extent away from the domain walls.
pub const COLLAR_REL: f64 = 1e-3;

impl StaticTriple {
    pub fn potential_at(&self, p: &[f64]) -> f64 {
        self.potential.eval(p)
    }

    /// Potential partials using the chart's coordinate scales for any
    /// FD fallback.
    pub fn potential_partials(&self, p: &[f64], order: usize, opts: &FdOptions) -> ScalarPartials {
        let scales = self.chart.coordinate_scales();
        self.potential
            .partials(self.chart.dim, p, order, &scales, opts)
    }

    /// Deterministic interior samples: uniform in the domain box shrunk
    /// by the collar on every side.
    pub fn sample_interior(&self, seed: u64, n: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.chart.dim;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut p = Vec::with_capacity(dim);
            for c in 0..dim {
                let (lo, hi) = self.chart.domain[c];
                let collar = COLLAR_REL * (hi - lo);
                p.push(rng.random_range(lo + collar..hi - collar));
            }
            out.push(p);
        }
        out
    }

    /// Chart point on the radius-`r` sphere slice (radial triples only).
    pub fn slice_point(&self, r: f64) -> Vec<f64> {
        assert!(self.radial.is_some(), "triple has no radial reduction");
        vec![r, THETA_STAR, PHI_STAR]
    }

    /// Full sphere-slice measure density at radius `r`: integrating a
    /// function of coordinate 0 against `dμ` equals `∫ h(r) density(r) dr`.
    pub fn density(&self, r: f64) -> f64 {
        let p = self.slice_point(r);
        let g = self.chart.metric(&p);
        let det = crate::tensor::det(&g, self.chart.dim);
        4.0 * std::f64::consts::PI * det.sqrt() / THETA_STAR.sin()
    }

    /// `V · density` at radius `r`. For horizon-bounded models the
    /// `1/√f` growth of the measure cancels against `V = √f`, so this
    /// combination stays smooth up to the faces.
    pub fn v_density(&self, r: f64) -> f64 {
        self.potential_at(&self.slice_point(r)) * self.density(r)
    }

    /// `∫ h dμ` for `h` a function of the profile coordinate
    /// (radial triples only). Uses the endpoint-regularizing map, so `h`
    /// may contain inverse square-root factors at either face.
    pub fn integrate_radial(&self, h: impl FnMut(f64) -> f64, tol: f64) -> QuadResult {
        let rr = self
            .radial
            .as_ref()
            .expect("triple has no radial reduction");
        quad::integrate_endpoint_adaptive(h, rr.lo, rr.hi, tol)
    }

    /// `∫ w·V dμ` with `w` a scalar profile sampled at slice points.
    pub fn integrate_v_weighted(&self, mut w: impl FnMut(f64) -> f64, tol: f64) -> QuadResult {
        self.integrate_radial(|r| w(r) * self.v_density(r), tol)
    }

    /// Total potential integral `∫ V dμ`.
    pub fn total_v(&self, tol: f64) -> QuadResult {
        self.integrate_v_weighted(|_| 1.0, tol)
    }
}
