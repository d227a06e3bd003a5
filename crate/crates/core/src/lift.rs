//! The circle-bundle lift of a static triple.
//!
//! A static triple `(M³, g, V)` with `R = 6ε` lifts to the
//! four-manifold `N = S¹ × M` with metric
//!
//! ```text
//!   h = V² dθ² + g ,    θ ∈ (0, 2π),
//! ```
//!
//! and the static system is exactly the statement that `h` is Einstein
//! with `Ric_h = 3ε h`. The faces `{V = 0}` close up into (possibly
//! conical) circle fibers; near a face `h` approaches the product of a
//! flat two-dimensional cone of total angle `2πκ` with the face, at a
//! quadratic rate in the geodesic distance.
//!
//! Further exact consequences checked here:
//! * both half-Weyl blocks of `h` have norm `|Ric̊_g|²` (in the duality
//!   block normalization of [`crate::weyl`]),
//! * `vol(N) = 2π ∫ V dμ = (2π/3) Σ κ_i |∂_i M|`,
//! * `V Δ_h ψ = div_g(V ∇ψ)` for every base function `ψ`.

use crate::boundary;
use crate::chart::{Chart, ComponentRep};
use crate::curvature::{self, CurvatureError};
use crate::fd::FdOptions;
use crate::func1d::Func1;
use crate::residuals;
use crate::tensor;
use crate::triple::{BoundaryComponent, ScalarField, StaticTriple};
use crate::weyl;
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum LiftError {
    #[error("lift requires a separable chart with a closed-form V² component")]
    NotAnalytic,
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}

/// Build the four-dimensional chart `(θ, base…)` with `h = V²dθ² + g`.
pub fn lift_chart(t: &StaticTriple) -> Result<Chart, LiftError> {
    let base = t.chart.separable_components().ok_or(LiftError::NotAnalytic)?;
    let v2 = t.v_squared.as_ref().ok_or(LiftError::NotAnalytic)?;
    let n = t.chart.dim;
    let mut comps = vec![vec![ComponentRep::zero(); n + 1]; n + 1];
    comps[0][0] = v2.shifted(1);
    for i in 0..n {
        for j in 0..n {
            comps[i + 1][j + 1] = base[i][j].shifted(1);
        }
    }
    let mut names: Vec<&str> = vec!["theta"];
    let owned: Vec<String> = t.chart.coordinate_names.clone();
    names.extend(owned.iter().map(|s| s.as_str()));
    let mut domain = vec![(0.0, 2.0 * PI)];
    domain.extend(t.chart.domain.iter().copied());
    Ok(Chart::separable(n + 1, &names, domain, comps))
}

/// Lift a base point to the fiber angle `theta`.
pub fn lift_point(base: &[f64], theta: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(base.len() + 1);
    p.push(theta);
    p.extend_from_slice(base);
    p
}

/// Worst pointwise Einstein defect of the lift over a sample set.
#[derive(Clone, Copy, Debug)]
pub struct EinsteinCheck {
    /// max over points of the largest orthonormal-frame entry of
    /// `Ric_h − 3ε h`
    pub max_defect: f64,
    pub points: usize,
}

/// Check `Ric_h = 3ε h` at `n` deterministic interior samples.
pub fn einstein_check(
    t: &StaticTriple,
    seed: u64,
    n: usize,
    opts: &FdOptions,
) -> Result<EinsteinCheck, LiftError> {
    let chart = lift_chart(t)?;
    let mut worst = 0.0f64;
    for (k, base) in t.sample_interior(seed, n).iter().enumerate() {
        let theta = 0.3 + 2.7 * k as f64 / n.max(1) as f64;
        let p = lift_point(base, theta);
        let cd = curvature::curvature_data(&chart, &p, 0, opts)?;
        let mut defect = tensor::mat_zero();
        for a in 0..4 {
            for b in 0..4 {
                defect[a][b] = cd.ric[a][b] - 3.0 * t.epsilon * cd.g[a][b];
            }
        }
        let frame = tensor::orthonormal_frame(&cd.g, 4);
        let df = tensor::frame_cov2(&defect, &frame, 4);
        for row in df.iter().take(4) {
            for v in row.iter().take(4) {
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(EinsteinCheck { max_defect: worst, points: n })
}

/// Worst deviation of the lift's duality blocks from the base
/// trace-free Ricci norm.
#[derive(Clone, Copy, Debug)]
pub struct WeylMatch {
    /// max over points of `| |W⁺|² − |Ric̊_g|² |`
    pub plus_defect: f64,
    /// max over points of `| |W⁻|² − |Ric̊_g|² |`
    pub minus_defect: f64,
    pub points: usize,
}

/// Check `|W±|²_h = |Ric̊_g|²` at `n` deterministic interior samples.
pub fn weyl_match_check(
    t: &StaticTriple,
    seed: u64,
    n: usize,
    opts: &FdOptions,
) -> Result<WeylMatch, LiftError> {
    let chart = lift_chart(t)?;
    let mut plus = 0.0f64;
    let mut minus = 0.0f64;
    for (k, base) in t.sample_interior(seed, n).iter().enumerate() {
        let theta = 0.4 + 2.5 * k as f64 / n.max(1) as f64;
        let p = lift_point(base, theta);
        let split = weyl::weyl_selfdual(&chart, &p)?;
        let cd = curvature::curvature_data(&t.chart, base, 0, opts)?;
        plus = plus.max((split.plus_norm2() - cd.s_norm2).abs());
        minus = minus.max((split.minus_norm2() - cd.s_norm2).abs());
    }
    Ok(WeylMatch { plus_defect: plus, minus_defect: minus, points: n })
}

/// Total volume of the lift and its boundary-data form.
#[derive(Clone, Copy, Debug)]
pub struct LiftVolume {
    /// `2π ∫ V dμ` by radial quadrature
    pub volume: f64,
    /// `(2π/3) Σ κ_i |∂_i M|`
    pub from_boundary: f64,
    /// worst relative defect of `√det h = V √det g` at sample points
    pub det_defect: f64,
}

/// Volume of `N` two ways, plus the pointwise volume-element identity.
pub fn lift_volume(t: &StaticTriple, opts: &FdOptions) -> Result<LiftVolume, LiftError> {
    let chart = lift_chart(t)?;
    let volume = 2.0 * PI * t.total_v(1e-12).value;
    let from_boundary: f64 = t
        .boundary
        .iter()
        .map(|b| b.surface_gravity * b.area)
        .sum::<f64>()
        * 2.0
        * PI
        / 3.0;
    let mut det_defect = 0.0f64;
    for (k, base) in t.sample_interior(11, 8).iter().enumerate() {
        let theta = 0.5 + 0.6 * k as f64;
        let p = lift_point(base, theta);
        let h = chart.metric(&p);
        let sdet_h = tensor::det(&h, 4).sqrt();
        let cd = curvature::curvature_data(&t.chart, base, 0, opts)?;
        let v = t.potential_at(base);
        let expect = v * cd.sqrt_det;
        det_defect = det_defect.max((sdet_h - expect).abs() / expect.abs());
    }
    Ok(LiftVolume { volume, from_boundary, det_defect })
}

/// Log-log slope of the cone-model deviation near a face.
///
/// With `s` the geodesic distance to the face, the fiber radius obeys
/// `V(s) = κ s (1 + O(s²))`, so `d(s) = |V²/(κs)² − 1|` decays
/// quadratically exactly when the lift approaches the flat cone of
/// angle `2πκ` at second order. Returns the fitted exponent.
pub fn cone_exponent(t: &StaticTriple, face: &BoundaryComponent) -> f64 {
    let ladder = [0.02, 0.028, 0.04, 0.057, 0.08];
    let mut pts = Vec::with_capacity(ladder.len());
    for &s in &ladder {
        let r = boundary::coordinate_at_distance(t, face, s);
        let v = t.potential_at(&t.slice_point(r));
        let d = (v * v / (face.surface_gravity * face.surface_gravity * s * s) - 1.0).abs();
        pts.push((s.ln(), d.ln()));
    }
    // least-squares slope
    let n = pts.len() as f64;
    let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (sxx, sxy): (f64, f64) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0 * p.0, a.1 + p.0 * p.1));
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Worst defect of `V Δ_h ψ = div_g(V ∇ψ)` for a radial base function
/// `ψ`, over `n` deterministic interior samples.
pub fn laplacian_match(
    t: &StaticTriple,
    psi: &Func1,
    seed: u64,
    n: usize,
    opts: &FdOptions,
) -> Result<f64, LiftError> {
    let chart = lift_chart(t)?;
    let field = ScalarField::Rep(ComponentRep::single(1.0, vec![(0, psi.clone())]));
    let scales = t.chart.coordinate_scales();
    let mut worst = 0.0f64;
    for (k, base) in t.sample_interior(seed, n).iter().enumerate() {
        let theta = 0.2 + 2.9 * k as f64 / n.max(1) as f64;
        let p = lift_point(base, theta);

        // lift side: ψ depends on lift coordinate 1 only
        let cd4 = curvature::curvature_data(&chart, &p, 0, opts)?;
        let jet = psi.jet(base[0]);
        let mut lap4 = cd4.ginv[1][1] * jet.d[2];
        for a in 0..4 {
            for b in 0..4 {
                lap4 -= cd4.ginv[a][b] * cd4.gamma[1][a][b] * jet.d[1];
            }
        }

        // base side: div_g(V ∇ψ) = V Δ_g ψ + ⟨∇V, ∇ψ⟩
        let cd3 = curvature::curvature_data(&t.chart, base, 0, opts)?;
        let sp = field.partials(3, base, 2, &scales, opts);
        let vp = t.potential_partials(base, 1, opts);
        let v = vp.v;
        let base_side =
            v * residuals::laplacian(&cd3, &sp) + residuals::inner(&cd3, &vp.d1, &sp.d1);

        worst = worst.max((v * lap4 - base_side).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use approx::assert_relative_eq;

    fn all_models() -> Vec<StaticTriple> {
        vec![
            models::hemisphere_triple(),
            models::cylinder_triple(),
            models::sds_triple(0.05).unwrap(),
            models::sds_triple(0.1).unwrap(),
            models::sds_triple(0.18).unwrap(),
        ]
    }

    #[test]
    fn lift_metric_has_fiber_block_v_squared() {
        for t in all_models() {
            let chart = lift_chart(&t).unwrap();
            assert_eq!(chart.dim, 4);
            assert_eq!(chart.coordinate_names[0], "theta");
            for base in t.sample_interior(3, 6) {
                let p = lift_point(&base, 1.1);
                let h = chart.metric(&p);
                let v = t.potential_at(&base);
                assert_relative_eq!(h[0][0], v * v, max_relative = 1e-13);
                let g = t.chart.metric(&base);
                for i in 0..3 {
                    for j in 0..3 {
                        assert_relative_eq!(h[i + 1][j + 1], g[i][j], epsilon = 1e-15);
                    }
                    assert_eq!(h[0][i + 1], 0.0);
                }
            }
        }
    }

    #[test]
    fn lift_is_einstein_on_all_models() {
        let opts = FdOptions::default();
        for t in all_models() {
            let c = einstein_check(&t, 21, 12, &opts).unwrap();
            assert!(
                c.max_defect < 1e-9,
                "{}: Einstein defect {:e}",
                t.name,
                c.max_defect
            );
        }
    }

    #[test]
    fn hemisphere_lift_is_the_round_sphere() {
        let t = models::hemisphere_triple();
        let opts = FdOptions::default();
        // conformally flat: both duality blocks vanish
        let w = weyl_match_check(&t, 5, 8, &opts).unwrap();
        assert!(w.plus_defect < 1e-10 && w.minus_defect < 1e-10);
        let chart = lift_chart(&t).unwrap();
        let split = weyl::weyl_selfdual(&chart, &lift_point(&[0.7, 1.1, 2.0], 0.9)).unwrap();
        assert!(split.plus_norm2() < 1e-12 && split.minus_norm2() < 1e-12);
        // total volume of the unit four-sphere
        let vol = lift_volume(&t, &opts).unwrap();
        assert_relative_eq!(vol.volume, 8.0 * PI * PI / 3.0, epsilon = 1e-8);
        assert_relative_eq!(vol.from_boundary, 8.0 * PI * PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn cylinder_lift_matches_product_of_spheres() {
        // h = V²dθ² + dt² + (1/3)g_{S²} is two round spheres of Gauss
        // curvature 3: both duality blocks have norm |Ric̊_g|² = 6.
        let t = models::cylinder_triple();
        let opts = FdOptions::default();
        let w = weyl_match_check(&t, 7, 10, &opts).unwrap();
        assert!(w.plus_defect < 1e-10, "plus defect {:e}", w.plus_defect);
        assert!(w.minus_defect < 1e-10, "minus defect {:e}", w.minus_defect);
        let chart = lift_chart(&t).unwrap();
        let split = weyl::weyl_selfdual(&chart, &lift_point(&[0.8, 1.2, 2.2], 1.3)).unwrap();
        assert_relative_eq!(split.plus_norm2(), 6.0, max_relative = 1e-11);
        let vol = lift_volume(&t, &opts).unwrap();
        assert_relative_eq!(vol.volume, 16.0 * PI * PI / 9.0, max_relative = 1e-10);
        assert_relative_eq!(vol.from_boundary, vol.volume, max_relative = 1e-10);
    }

    #[test]
    fn sds_lift_weyl_blocks_match_base_ricci_norm() {
        let opts = FdOptions::default();
        for &m in &[0.05, 0.1, 0.18] {
            let t = models::sds_triple(m).unwrap();
            let w = weyl_match_check(&t, 13, 10, &opts).unwrap();
            assert!(
                w.plus_defect < 1e-9 && w.minus_defect < 1e-9,
                "m = {m}: defects {:e} / {:e}",
                w.plus_defect,
                w.minus_defect
            );
            let vol = lift_volume(&t, &opts).unwrap();
            assert_relative_eq!(vol.from_boundary, vol.volume, max_relative = 1e-10);
            assert!(vol.det_defect < 1e-12);
        }
    }

    #[test]
    fn cone_rate_is_quadratic_at_every_face() {
        for t in [
            models::hemisphere_triple(),
            models::cylinder_triple(),
            models::sds_triple(0.1).unwrap(),
        ] {
            for face in &t.boundary {
                let rate = cone_exponent(&t, face);
                assert!(
                    (1.9..=2.1).contains(&rate),
                    "{} / {}: cone exponent {rate}",
                    t.name,
                    face.name
                );
            }
        }
    }

    #[test]
    fn fiber_laplacian_reduces_to_weighted_base_divergence() {
        let opts = FdOptions::default();
        let psi = Func1::Poly(vec![0.1, 0.4, -0.2, 0.03]);
        for t in all_models() {
            let worst = laplacian_match(&t, &psi, 17, 10, &opts).unwrap();
            assert!(worst < 1e-9, "{}: defect {:e}", t.name, worst);
        }
    }
}
