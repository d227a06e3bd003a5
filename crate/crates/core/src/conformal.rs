//! Curvature balance of conformally deformed lifts.
//!
//! On the four-dimensional lift `N` (see [`crate::lift`]) the
//! Gauss–Bonnet integrand splits into the scalar, half-Weyl, and
//! trace-free-Ricci pieces, and for every metric `h̃ = u²h` conformal
//! to the lift the total
//!
//! ```text
//!   (1/48) ∫ R̃² dμ̃  +  ∫ |W̃⁺|² dμ̃  −  (1/4) ∫ |Ric̊̃|² dμ̃
//! ```
//!
//! equals `8π² Σ κ_i`: the deformation moves curvature between the
//! three channels but cannot change the sum, which is pinned by the
//! topology of `N` and its cone angles `2πκ_i`. With `u ≡ 1` the lift
//! is Einstein, the trace-free channel is empty, and the identity
//! reduces term by term to `2π` times the boundary balance of
//! [`crate::integral`]. The half-Weyl term alone is conformally
//! invariant, so it must not move at all under `u`.
//!
//! Both evaluation paths are provided: `gbc_direct` differentiates the
//! deformed four-metric itself, `gbc_reduced` uses the conformal
//! transformation rules on base quantities; agreement of the two is a
//! strong independent check on signs and factors.
//!
//! Admissible factors: `u` must be a positive profile function that is
//! smooth on `N`. Near a horizon face the profile coordinate is a
//! smooth even function of the cone distance, so any smooth `u(r)`
//! qualifies on horizon-bounded models; on product-type models the
//! radial derivative of `u` must vanish at the faces (functions of
//! `V²` always work).

use crate::curvature::{self, CurvatureError};
use crate::fd::FdOptions;
use crate::func1d::Func1;
use crate::lift::{self, LiftError};
use crate::quad::QuadResult;
use crate::residuals;
use crate::tensor;
use crate::triple::StaticTriple;
use crate::weyl;
use std::f64::consts::PI;

/// The three curvature channels and their topological total.
#[derive(Clone, Copy, Debug)]
pub struct GbcTerms {
    /// `(1/48) ∫ R̃² dμ̃`
    pub scalar: f64,
    /// `∫ |W̃⁺|² dμ̃`
    pub weyl_plus: f64,
    /// `(1/4) ∫ |Ric̊̃|² dμ̃`
    pub traceless: f64,
    /// `8π² Σ κ_i`
    pub rhs: f64,
    /// `|scalar + weyl_plus − traceless − rhs|`
    pub residual: f64,
    /// all three quadratures converged
    pub converged: bool,
}

fn rhs_for(t: &StaticTriple) -> f64 {
    8.0 * PI * PI * t.boundary.iter().map(|b| b.surface_gravity).sum::<f64>()
}

fn assemble(scalar: QuadResult, weyl_plus: QuadResult, traceless: QuadResult, rhs: f64) -> GbcTerms {
    let total = scalar.value + weyl_plus.value - traceless.value;
    GbcTerms {
        scalar: scalar.value,
        weyl_plus: weyl_plus.value,
        traceless: traceless.value,
        rhs,
        residual: (total - rhs).abs(),
        converged: scalar.converged && weyl_plus.converged && traceless.converged,
    }
}

/// The lift chart with every component scaled by `u(r)²`.
pub fn conformal_lift_chart(t: &StaticTriple, u: &Func1) -> Result<crate::chart::Chart, LiftError> {
    let base = lift::lift_chart(t)?;
    let comps = base
        .separable_components()
        .expect("lift charts are separable")
        .clone();
    let u2 = Func1::Prod(vec![u.clone(), u.clone()]);
    let n = base.dim;
    let mut scaled = vec![vec![crate::chart::ComponentRep::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            scaled[i][j] = comps[i][j].scaled_by(1, &u2);
        }
    }
    let names: Vec<&str> = base.coordinate_names.iter().map(|s| s.as_str()).collect();
    Ok(crate::chart::Chart::separable(n, &names, base.domain.clone(), scaled))
}

const QUAD_TOL: f64 = 1e-10;

/// Evaluate the three channels by differentiating the deformed
/// four-metric directly.
pub fn gbc_direct(t: &StaticTriple, u: &Func1, opts: &FdOptions) -> Result<GbcTerms, LiftError> {
    let chart = conformal_lift_chart(t, u)?;
    let theta_hat = 1.0;
    let sin_star = crate::triple::THETA_STAR.sin();

    // radius-slice measure of N: 2π (fiber) × full-sphere slice factor
    let mut err: Option<CurvatureError> = None;
    let mut integrate =
        |f: &mut dyn FnMut(&curvature::CurvatureData, &[f64]) -> f64| -> QuadResult {
            t.integrate_radial(
                |r| {
                    let mut p = t.slice_point(r);
                    p.insert(0, theta_hat);
                    match curvature::curvature_data(&chart, &p, 0, opts) {
                        Ok(cd) => {
                            let density4 =
                                2.0 * PI * 4.0 * PI * tensor::det(&cd.g, 4).sqrt() / sin_star;
                            f(&cd, &p) * density4
                        }
                        Err(e) => {
                            err = Some(e);
                            f64::NAN
                        }
                    }
                },
                QUAD_TOL,
            )
        };

    let scalar = integrate(&mut |cd, _| cd.r * cd.r / 48.0);
    let traceless = integrate(&mut |cd, _| cd.s_norm2 / 4.0);
    let mut werr: Option<CurvatureError> = None;
    let weyl_plus = integrate(&mut |_, p| match weyl::weyl_selfdual(&chart, p) {
        Ok(split) => split.plus_norm2(),
        Err(e) => {
            werr = Some(e);
            f64::NAN
        }
    });
    if let Some(e) = err.or(werr) {
        return Err(e.into());
    }
    Ok(assemble(scalar, weyl_plus, traceless, rhs_for(t)))
}

/// Evaluate the three channels from base quantities via the conformal
/// transformation rules (no four-dimensional differentiation).
pub fn gbc_reduced(t: &StaticTriple, u: &Func1, opts: &FdOptions) -> Result<GbcTerms, LiftError> {
    let mut err: Option<CurvatureError> = None;
    let mut at = |r: f64| -> Option<(f64, f64, f64)> {
        let p = t.slice_point(r);
        let cd = match curvature::curvature_data(&t.chart, &p, 0, opts) {
            Ok(cd) => cd,
            Err(e) => {
                err = Some(e);
                return None;
            }
        };
        let vp = t.potential_partials(&p, 2, opts);
        let v = vp.v;

        // logarithmic derivatives of u along the profile coordinate
        let uj = u.jet(r);
        let w1 = uj.d[1] / uj.d[0];
        let w2 = uj.d[2] / uj.d[0] - w1 * w1;
        let u4 = uj.d[0].powi(4);

        // base gradient data (w is radial)
        let mut dw = [0.0f64; 4];
        dw[0] = w1;
        let norm2_w = residuals::inner(&cd, &dw, &dw);
        // Δ_g w and Hess_g w for the radial function w
        let mut hess_w = tensor::mat_zero();
        for i in 0..3 {
            for j in 0..3 {
                hess_w[i][j] = -cd.gamma[0][i][j] * w1;
            }
        }
        hess_w[0][0] += w2;
        let lap_w = tensor::trace_cov2(&hess_w, &cd.ginv, 3);
        // fiber Hessian block: ⟨∇V, ∇w⟩ / V
        let grad_inner = residuals::inner(&cd, &vp.d1, &dw);
        let fiber_hess = grad_inner / v;
        let lap_h_w = lap_w + fiber_hess;

        // Ricci of u²h in the h-orthonormal frame
        let frame = tensor::orthonormal_frame(&cd.g, 3);
        let hw_f = tensor::frame_cov2(&hess_w, &frame, 3);
        let mut dw_f = [0.0f64; 3];
        for (a, out) in dw_f.iter_mut().enumerate() {
            *out = frame[a][0] * w1;
        }
        let mut ric_f = [[0.0f64; 4]; 4];
        for a in 0..4 {
            ric_f[a][a] = 3.0 * t.epsilon - (lap_h_w + 2.0 * norm2_w);
        }
        ric_f[0][0] -= 2.0 * fiber_hess;
        for a in 0..3 {
            for b in 0..3 {
                ric_f[a + 1][b + 1] -= 2.0 * (hw_f[a][b] - dw_f[a] * dw_f[b]);
            }
        }
        let trace: f64 = (0..4).map(|a| ric_f[a][a]).sum();

        // scalar curvature two ways (consistency of the rules)
        let r_tilde = trace / (uj.d[0] * uj.d[0]);
        let r_closed =
            (12.0 * t.epsilon - 6.0 * lap_h_w - 6.0 * norm2_w) / (uj.d[0] * uj.d[0]);
        debug_assert!(
            (r_tilde - r_closed).abs() <= 1e-9 * r_tilde.abs().max(1.0),
            "conformal scalar-curvature rules disagree: {r_tilde} vs {r_closed}"
        );

        // |Ric̊|² of u²h: subtract the trace part, rescale to the
        // h̃-frame (u⁻⁴), measure dμ̃ = u⁴ dμ_h — the factors cancel.
        let mut tf2 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let e = ric_f[a][b] - if a == b { trace / 4.0 } else { 0.0 };
                tf2 += e * e;
            }
        }

        Some((r_tilde * r_tilde * u4 / 48.0, cd.s_norm2, tf2 / 4.0))
    };

    let two_pi = 2.0 * PI;
    let scalar = t.integrate_v_weighted(|r| at(r).map_or(f64::NAN, |x| x.0), QUAD_TOL);
    let weyl_plus = t.integrate_v_weighted(|r| at(r).map_or(f64::NAN, |x| x.1), QUAD_TOL);
    let traceless = t.integrate_v_weighted(|r| at(r).map_or(f64::NAN, |x| x.2), QUAD_TOL);
    if let Some(e) = err {
        return Err(e.into());
    }
    let scale = |q: QuadResult| QuadResult { value: two_pi * q.value, ..q };
    Ok(assemble(scale(scalar), scale(weyl_plus), scale(traceless), rhs_for(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integral;
    use crate::models;
    use approx::assert_relative_eq;

    fn unit() -> Func1 {
        Func1::Const(1.0)
    }

    #[test]
    fn einstein_case_reproduces_boundary_balance_times_two_pi() {
        let opts = FdOptions::default();
        for t in [
            models::hemisphere_triple(),
            models::cylinder_triple(),
            models::sds_triple(0.05).unwrap(),
            models::sds_triple(0.1).unwrap(),
            models::sds_triple(0.18).unwrap(),
        ] {
            let g = gbc_direct(&t, &unit(), &opts).unwrap();
            assert!(g.converged, "{}: quadrature did not converge", t.name);
            let ic = integral::integral_identity(&t, &opts).unwrap();
            // term for term: scalar ↔ boundary, half-Weyl ↔ bulk
            assert_relative_eq!(
                g.scalar,
                2.0 * PI * ic.boundary,
                max_relative = 1e-9
            );
            let bulk = 2.0 * PI * ic.bulk;
            if bulk.abs() > 1e-9 {
                assert_relative_eq!(g.weyl_plus, bulk, max_relative = 1e-8);
            } else {
                assert!(g.weyl_plus.abs() < 1e-8);
            }
            assert!(
                g.traceless.abs() < 1e-8,
                "{}: Einstein lift has trace-free channel {:e}",
                t.name,
                g.traceless
            );
            assert_relative_eq!(g.rhs, 2.0 * PI * ic.expected, max_relative = 1e-13);
            assert!(
                g.residual < 1e-8 * g.rhs,
                "{}: balance residual {:e}",
                t.name,
                g.residual
            );
        }
    }

    #[test]
    fn cylinder_closed_forms() {
        let opts = FdOptions::default();
        let g = gbc_direct(&models::cylinder_triple(), &unit(), &opts).unwrap();
        assert_relative_eq!(g.scalar, 16.0 * PI * PI / 3.0, max_relative = 1e-9);
        assert_relative_eq!(g.weyl_plus, 32.0 * PI * PI / 3.0, max_relative = 1e-9);
        assert_relative_eq!(g.rhs, 16.0 * PI * PI, max_relative = 1e-13);
    }

    #[test]
    fn deformation_moves_channels_but_not_the_total() {
        let opts = FdOptions::default();
        let t = models::sds_triple(0.1).unwrap();
        let u = Func1::Poly(vec![1.0, 0.0, 0.1]);
        let base = gbc_direct(&t, &unit(), &opts).unwrap();
        let bent = gbc_direct(&t, &u, &opts).unwrap();
        // the trace-free channel opens up…
        assert!(bent.traceless > 1e-3, "traceless = {:e}", bent.traceless);
        // …the scalar channel compensates…
        assert!((bent.scalar - base.scalar).abs() > 1e-3);
        // …the half-Weyl channel is conformally invariant…
        assert!(
            (bent.weyl_plus - base.weyl_plus).abs() < 1e-8 * base.weyl_plus,
            "half-Weyl moved by {:e}",
            (bent.weyl_plus - base.weyl_plus).abs()
        );
        // …and the total is pinned.
        assert!(
            bent.residual < 1e-7 * bent.rhs,
            "balance residual {:e} (rhs {:e})",
            bent.residual,
            bent.rhs
        );
    }

    #[test]
    fn reduced_path_agrees_with_direct_differentiation() {
        let opts = FdOptions::default();
        let t = models::sds_triple(0.1).unwrap();
        for u in [unit(), Func1::Poly(vec![1.0, 0.0, 0.1])] {
            let d = gbc_direct(&t, &u, &opts).unwrap();
            let r = gbc_reduced(&t, &u, &opts).unwrap();
            assert_relative_eq!(d.scalar, r.scalar, max_relative = 1e-7);
            assert_relative_eq!(d.weyl_plus, r.weyl_plus, max_relative = 1e-7);
            if d.traceless.abs() > 1e-8 {
                assert_relative_eq!(d.traceless, r.traceless, max_relative = 1e-7);
            } else {
                assert!(r.traceless.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn product_model_admits_fiber_even_factors() {
        // u = 1 + 0.3 V² has vanishing radial derivative at both faces
        // of the cylinder, hence is smooth on N.
        let opts = FdOptions::default();
        let t = models::cylinder_triple();
        let sqrt3 = 3.0f64.sqrt();
        let u = Func1::Sum(vec![
            Func1::Const(1.0),
            Func1::Scale(
                0.1,
                Box::new(Func1::Prod(vec![Func1::Sin(sqrt3), Func1::Sin(sqrt3)])),
            ),
        ]);
        let base = gbc_direct(&t, &unit(), &opts).unwrap();
        let bent = gbc_direct(&t, &u, &opts).unwrap();
        assert!(bent.traceless > 1e-3);
        assert!((bent.weyl_plus - base.weyl_plus).abs() < 1e-8 * base.weyl_plus);
        assert!(bent.residual < 1e-7 * bent.rhs, "residual {:e}", bent.residual);
    }
}
