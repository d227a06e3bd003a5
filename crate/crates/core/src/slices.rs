//! Geometry of the spherical slices of a radial triple.
//!
//! Every radial model is a profile over a round two-sphere; the slice
//! at profile coordinate `r` carries an induced metric whose Gauss
//! curvature, area, and extrinsic data tie back to the ambient
//! curvature through the Gauss equation
//!
//! ```text
//!   K_slice = K_ambient(tangent plane) + det(shape operator).
//! ```
//!
//! The module also checks the flow statements used for the rigidity
//! models: the product flow on the cylinder keeps the slice area
//! pinned at `4π/3`, and sweeping the equatorial disk of the
//! hemisphere through the one-parameter family of totally geodesic
//! disks with the same boundary circle keeps the area pinned at `2π`.

use crate::chart::Chart;
use crate::curvature::{self, CurvatureError};
use crate::fd::FdOptions;
use crate::models;
use crate::quad;
use crate::tensor;
use crate::triple::StaticTriple;
use std::f64::consts::PI;

/// Induced two-dimensional chart on the slice at profile coordinate
/// `r` (coordinates `theta`, `phi` inherited from the ambient chart).
pub fn induced_slice_chart(t: &StaticTriple, r: f64) -> Chart {
    assert_eq!(t.chart.dim, 3, "slice charts require a radial 3d triple");
    let ambient = t.chart.clone();
    let domain = vec![t.chart.domain[1], t.chart.domain[2]];
    Chart::from_closure(2, &["theta", "phi"], domain, move |q| {
        let g = ambient.metric(&[r, q[0], q[1]]);
        let mut out = tensor::mat_zero();
        for a in 0..2 {
            for b in 0..2 {
                out[a][b] = g[a + 1][b + 1];
            }
        }
        out
    })
}

/// Area of the slice at `r` by two-dimensional quadrature.
pub fn slice_area(t: &StaticTriple, r: f64) -> f64 {
    let chart = induced_slice_chart(t, r);
    let (t0, t1) = chart.domain[0];
    let (p0, p1) = chart.domain[1];
    quad::integrate_fixed(
        &mut |theta: f64| {
            quad::integrate_fixed(
                &mut |phi: f64| {
                    let g = chart.metric(&[theta, phi]);
                    (g[0][0] * g[1][1] - g[0][1] * g[1][0]).sqrt()
                },
                p0,
                p1,
                24,
            )
        },
        t0,
        t1,
        64,
    )
}

/// Intrinsic/extrinsic consistency data for one slice.
#[derive(Clone, Copy, Debug)]
pub struct SliceCheck {
    pub r: f64,
    /// slice area from the induced chart
    pub area: f64,
    /// Gauss curvature of the induced metric
    pub gauss: f64,
    /// ambient sectional curvature of the tangent plane plus the
    /// determinant of the shape operator
    pub gauss_equation_rhs: f64,
    /// `|gauss − gauss_equation_rhs|`
    pub residual: f64,
    /// relative defect of `density(r) = area(r) · √g_rr(r)`
    pub density_defect: f64,
}

/// Check the Gauss equation and the density factorization on the
/// slice at `r`.
pub fn slice_check(
    t: &StaticTriple,
    r: f64,
    opts: &FdOptions,
) -> Result<SliceCheck, CurvatureError> {
    let p = t.slice_point(r);

    // Intrinsic: Gauss curvature of the induced chart, K = R / 2.
    let chart2 = induced_slice_chart(t, r);
    let q = vec![p[1], p[2]];
    let cd2 = curvature::curvature_data(&chart2, &q, 0, opts)?;
    let gauss = 0.5 * cd2.r;

    // Extrinsic: ambient curvature and the shape operator of the
    // coordinate slice (unit normal along ∂_r).
    let cd = curvature::curvature_data(&t.chart, &p, 0, opts)?;
    let mp = t.chart.partials(&p, 1, opts);
    let sqrt_grr_inv = cd.ginv[0][0].sqrt();
    // II_ab = ½ √(g^rr) ∂_r g_ab on tangential indices a, b ∈ {θ, φ}
    let mut ii = [[0.0f64; 2]; 2];
    let mut gt = [[0.0f64; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            ii[a][b] = 0.5 * sqrt_grr_inv * mp.d1[0][a + 1][b + 1];
            gt[a][b] = cd.g[a + 1][b + 1];
        }
    }
    let det_ii = ii[0][0] * ii[1][1] - ii[0][1] * ii[1][0];
    let det_gt = gt[0][0] * gt[1][1] - gt[0][1] * gt[1][0];
    let det_shape = det_ii / det_gt;
    let sectional = cd.rm_low[1][2][1][2] / det_gt;
    let gauss_equation_rhs = sectional + det_shape;

    let area = slice_area(t, r);
    let density_direct = t.density(r);
    let density_from_area = area * cd.g[0][0].sqrt();
    Ok(SliceCheck {
        r,
        area,
        gauss,
        gauss_equation_rhs,
        residual: (gauss - gauss_equation_rhs).abs(),
        density_defect: (density_direct - density_from_area).abs() / density_direct,
    })
}

/// Outcome of the model-specific slice-flow area checks.
#[derive(Clone, Copy, Debug)]
pub enum SliceFlow {
    /// The flow exists and the swept slices all have the stated area.
    Constant {
        expected_area: f64,
        max_deviation: f64,
        samples: usize,
    },
    /// No distinguished slice flow for this model.
    NotApplicable,
}

/// Areas of the totally geodesic disks `D_α` in the hemisphere that
/// share the boundary great circle, for `n` dihedral angles.
///
/// `D_α` is half of the great two-sphere orthogonal to
/// `(0,0,−sin α, cos α)`; the family rotates the equatorial half-disk
/// (`α → 0`) up through the pole and down to the opposite half
/// (`α → π`). Each area is computed by pulling the ambient chart
/// metric back through the parametrization with finite-difference
/// Jacobians, so the check exercises the chart machinery rather than
/// the round-sphere closed form.
pub fn hemisphere_disk_flow(n: usize) -> Vec<(f64, f64)> {
    let t = models::hemisphere_triple();
    let chart = t.chart.clone();

    // chart coordinates of the point at parameters (ρ, φ) on D_α
    let embed = |alpha: f64, rho: f64, phip: f64| -> [f64; 3] {
        let x1 = rho.sin() * phip.cos();
        let x2 = rho.sin() * phip.sin();
        let x3 = rho.cos() * alpha.cos();
        let x4 = rho.cos() * alpha.sin();
        let s = x4.clamp(-1.0, 1.0).acos();
        let sin_s = (1.0 - x4 * x4).max(0.0).sqrt();
        let theta = (x3 / sin_s).clamp(-1.0, 1.0).acos();
        let mut phic = x2.atan2(x1);
        if phic < 0.0 {
            phic += 2.0 * PI;
        }
        [s, theta, phic]
    };
    // difference of chart coordinates with the angular one unwrapped
    let delta = |a: &[f64; 3], b: &[f64; 3]| -> [f64; 3] {
        let mut d2 = a[2] - b[2];
        if d2 > PI {
            d2 -= 2.0 * PI;
        }
        if d2 < -PI {
            d2 += 2.0 * PI;
        }
        [a[0] - b[0], a[1] - b[1], d2]
    };

    let h = 1e-5;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let alpha = 0.2 + (PI - 0.4) * (k as f64) / ((n - 1) as f64);
        let area = quad::integrate_fixed(
            &mut |rho: f64| {
                quad::integrate_fixed(
                    &mut |phip: f64| {
                        let p = embed(alpha, rho, phip);
                        let jr = delta(&embed(alpha, rho + h, phip), &embed(alpha, rho - h, phip));
                        let jp = delta(&embed(alpha, rho, phip + h), &embed(alpha, rho, phip - h));
                        let g = chart.metric(&p);
                        let mut hm = [[0.0f64; 2]; 2];
                        for i in 0..3 {
                            for j in 0..3 {
                                let cols = [
                                    jr[i] / (2.0 * h),
                                    jp[i] / (2.0 * h),
                                ];
                                let cols_j = [
                                    jr[j] / (2.0 * h),
                                    jp[j] / (2.0 * h),
                                ];
                                for a in 0..2 {
                                    for b in 0..2 {
                                        hm[a][b] += g[i][j] * cols[a] * cols_j[b];
                                    }
                                }
                            }
                        }
                        (hm[0][0] * hm[1][1] - hm[0][1] * hm[1][0]).max(0.0).sqrt()
                    },
                    0.0,
                    2.0 * PI,
                    32,
                )
            },
            0.0,
            PI / 2.0,
            48,
        );
        out.push((alpha, area));
    }
    out
}

/// Run the slice-flow area check appropriate for this model.
pub fn slice_flow_check(t: &StaticTriple) -> SliceFlow {
    match t.name.as_str() {
        "cylinder" => {
            let rr = t.radial.as_ref().expect("cylinder is radial");
            let expected = 4.0 * PI / 3.0;
            let samples = 12;
            let mut max_dev = 0.0f64;
            for k in 0..samples {
                let r = rr.lo + (rr.hi - rr.lo) * (k as f64 + 0.5) / samples as f64;
                max_dev = max_dev.max((slice_area(t, r) - expected).abs());
            }
            SliceFlow::Constant { expected_area: expected, max_deviation: max_dev, samples }
        }
        "hemisphere" => {
            let expected = 2.0 * PI;
            let flows = hemisphere_disk_flow(8);
            let max_dev = flows
                .iter()
                .map(|&(_, a)| (a - expected).abs())
                .fold(0.0f64, f64::max);
            SliceFlow::Constant { expected_area: expected, max_deviation: max_dev, samples: flows.len() }
        }
        _ => SliceFlow::NotApplicable,
    }
}
