//! Boundary-face expansions of the potential.
//!
//! Along a unit-speed geodesic `γ(s)` leaving a face orthogonally, the
//! static system forces
//!
//! * `V²/s²  = κ² (1 + a₂ s² + O(s⁴))` with `a₂ = (Ric(γ',γ') - 3ε)/3`,
//! * `|∇V|²  = κ² (1 + b₂ s² + O(s⁴))` with `b₂ = Ric(γ',γ') - 3ε`,
//!
//! where `κ` is the face's surface gravity, and the Gauss curvature of
//! the face is `K = 3ε - Ric(n,n)` (`n` the unit normal). The checks
//! here fit the left sides numerically from potential samples at small
//! geodesic distances and compare against the curvature-derived right
//! sides — and, for `K`, against the closed form `4π / area` that holds
//! for a round face.
//!
//! For horizon faces of warped models the coordinate distance and the
//! geodesic distance are related by an integral with an inverse
//! square-root endpoint singularity; the substitution `r = face ± q²`
//! makes the integrand smooth.

use crate::curvature::{self, CurvatureError};
use crate::fd::FdOptions;
use crate::quad;
use crate::roots;
use crate::tensor;
use crate::triple::{BoundaryComponent, StaticTriple};

/// Coordinate depths below this are clamped before evaluating the
/// metric: closer to a horizon face the profile function cancels to
/// rounding noise and its reciprocal is meaningless.
const DEPTH_FLOOR: f64 = 1e-13;

/// Neville polynomial extrapolation of `(xs, ys)` to `x = 0`
/// (overwrites `ys` with the tableau).
fn neville_at_zero(xs: &[f64], ys: &mut [f64]) -> f64 {
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            ys[i] = (xs[i + level] * ys[i] - xs[i] * ys[i + 1]) / (xs[i + level] - xs[i]);
        }
    }
    ys[0]
}

/// Geodesic distance from `face` to the slice at coordinate `r`
/// (radial triples; the normal geodesics are the coordinate lines).
pub fn arclength_from_face(t: &StaticTriple, face: &BoundaryComponent, r: f64) -> f64 {
    let depth = (r - face.value).abs();
    let q_max = depth.sqrt();
    // r(q) = face + inward q²; ds = √(g_rr) dr = √(g_rr) 2q dq, and
    // g_rr ~ 1/(f'(face) q²) at a horizon, so the integrand is smooth
    // with limit √(2/κ) at the face. Below the depth floor the metric
    // cannot be evaluated; substituting 2√(g_rr(floor)·floor) there
    // reproduces that limit at a horizon and stays below the floor's
    // own scale at a regular face, so the integral is unharmed.
    let integrand = |q: f64| {
        let depth = (q * q).max(DEPTH_FLOOR);
        let p = t.slice_point(face.value + face.inward * depth);
        let grr = t.chart.metric(&p)[0][0];
        if !(grr.is_finite() && grr > 0.0) {
            return (2.0 / face.surface_gravity).sqrt();
        }
        if q * q >= DEPTH_FLOOR {
            2.0 * q * grr.sqrt()
        } else {
            2.0 * (grr * DEPTH_FLOOR).sqrt()
        }
    };
    quad::integrate_adaptive(integrand, 0.0, q_max, 1e-12).value
}

/// Invert [`arclength_from_face`]: the coordinate `r` at geodesic
/// distance `s` from the face.
pub fn coordinate_at_distance(t: &StaticTriple, face: &BoundaryComponent, s: f64) -> f64 {
    let rr = t.radial.as_ref().expect("radial triple required");
    let far = if face.inward > 0.0 { rr.hi } else { rr.lo };
    // σ is monotone in depth; bracket between the face collar and the
    // far end (the collar keeps the profile clear of rounding noise).
    let lo = face.value + face.inward * 1e-9;
    let f = |r: f64| arclength_from_face(t, face, r) - s;
    roots::brent(f, lo, far - face.inward * 1e-9, 1e-13).expect("distance inversion bracketed")
}

/// Fitted and predicted expansion data for one face.
#[derive(Clone, Copy, Debug)]
pub struct FaceExpansion {
    /// `κ` recovered from the `s → 0` limit of `V/s`.
    pub surface_gravity_fit: f64,
    /// Fitted `s²` coefficient of `V²/(κs)²`.
    pub v2_coeff: f64,
    /// `(Ric(γ',γ') - 3ε)/3` at the face.
    pub v2_predicted: f64,
    /// Fitted `s²` coefficient of `|∇V|²/κ²`.
    pub grad2_coeff: f64,
    /// `Ric(γ',γ') - 3ε` at the face.
    pub grad2_predicted: f64,
    /// `3ε - Ric(n,n)`, Richardson-extrapolated to the face.
    pub gauss_curvature: f64,
    /// `4π / area`: the Gauss curvature of a round face of this area.
    pub gauss_from_area: f64,
}

/// Fit the face expansions of `V² ` and `|∇V|²` and extrapolate the
/// face curvature (radial triples).
pub fn face_expansion(
    t: &StaticTriple,
    face: &BoundaryComponent,
    opts: &FdOptions,
) -> Result<FaceExpansion, CurvatureError> {
    let rr = t.radial.as_ref().expect("radial triple required");

    // Normal Ricci curvature at the face. `Ric(n,n)` is smooth in the
    // profile coordinate straight across a horizon, so extrapolate to
    // the face with a short Neville ladder in coordinate depth.
    let depth0 = 1e-3 * (rr.hi - rr.lo);
    let mut xs = [0.0f64; 4];
    let mut ys = [0.0f64; 4];
    for j in 0..4 {
        let d = depth0 / (1 << j) as f64;
        let p = t.slice_point(face.value + face.inward * d);
        let cd = curvature::curvature_data(&t.chart, &p, 0, opts)?;
        xs[j] = d;
        ys[j] = cd.ric[0][0] / cd.g[0][0];
    }
    let ric_nn = neville_at_zero(&xs, &mut ys);

    // Geodesic sample distances: a ladder equal-spaced in s² keeps the
    // cubic-in-s² fit well conditioned. The upper end adapts both to
    // the depth of the domain (opposing faces must not interact) and
    // to the curvature scale of this face, so the truncated tail of
    // the expansion stays far below the fitted coefficients.
    let curve_scale = 1.0 / (ric_nn - 3.0 * t.epsilon).abs().max(1.0).sqrt();
    let mid = 0.5 * (rr.lo + rr.hi);
    let s_mid = arclength_from_face(t, face, mid);
    let s_hi = (0.8 * s_mid).min(0.25).min(0.15 * curve_scale);
    let s_lo = 0.2 * s_hi;
    let n_pts = 8;
    let distances: Vec<f64> = (0..n_pts)
        .map(|k| {
            let u = s_lo * s_lo + (s_hi * s_hi - s_lo * s_lo) * k as f64 / (n_pts - 1) as f64;
            u.sqrt()
        })
        .collect();
    let mut rows = Vec::with_capacity(distances.len());
    for &s in &distances {
        let r = coordinate_at_distance(t, face, s);
        let p = t.slice_point(r);
        let sp = t.potential_partials(&p, 1, opts);
        let g = t.chart.metric(&p);
        let ginv = tensor::inverse(&g, t.chart.dim);
        let mut grad2 = 0.0;
        for i in 0..t.chart.dim {
            for j in 0..t.chart.dim {
                grad2 += ginv[i][j] * sp.d1[i] * sp.d1[j];
            }
        }
        rows.push((s, sp.v * sp.v / (s * s), grad2));
    }

    // Least-squares fit y = c0 + c1 u + c2 u² + c3 u³ in u = s²,
    // with u rescaled to O(1) for conditioning.
    let u_scale = s_hi * s_hi;
    let fit = |values: &dyn Fn(usize) -> f64| -> (f64, f64) {
        let n = rows.len();
        let mut a = nalgebra::DMatrix::zeros(n, 4);
        let mut b = nalgebra::DVector::zeros(n);
        for (i, (s, _, _)) in rows.iter().enumerate() {
            let u = s * s / u_scale;
            for c in 0..4 {
                a[(i, c)] = u.powi(c as i32);
            }
            b[i] = values(i);
        }
        let sol = (a.transpose() * &a)
            .lu()
            .solve(&(a.transpose() * b))
            .expect("normal equations solvable");
        (sol[0], sol[1] / u_scale)
    };
    let (v2_c0, v2_c1) = fit(&|i| rows[i].1);
    let (g2_c0, g2_c1) = fit(&|i| rows[i].2);

    Ok(FaceExpansion {
        surface_gravity_fit: v2_c0.sqrt(),
        v2_coeff: v2_c1 / v2_c0,
        v2_predicted: (ric_nn - 3.0 * t.epsilon) / 3.0,
        grad2_coeff: g2_c1 / g2_c0,
        grad2_predicted: ric_nn - 3.0 * t.epsilon,
        gauss_curvature: 3.0 * t.epsilon - ric_nn,
        gauss_from_area: 4.0 * std::f64::consts::PI / face.area,
    })
}
