//! Pointwise identity checks on static triples.
//!
//! Every check computes both sides of an identity from independent
//! ingredients and reports the defect. On the analytic models the
//! derivative chain is exact (jets), so defects sit at rounding level;
//! charts represented by closures fall back to finite differences and
//! carry a correspondingly looser tolerance.
//!
//! The identities (for a static triple `(M, g, V)` with `R = 6ε`):
//!
//! * **static system** — `Hess V = V (Ric - 3ε g)`, `ΔV = -3εV`,
//!   `R = 6ε`;
//! * **Bochner divergence** — with `E = Ric̊` the traceless Ricci
//!   tensor and `C` the Cotton tensor,
//!   `½ div(V ∇|E|²) = (|∇E|² + ½|C|²) V + (R |E|² + 18 det E) V`;
//! * **gradient divergence** — `div((1/V) ∇(|∇V|² + εV²)) = 2 V |E|²`;
//! * **Cotton identities** — `V²|C|² = 8|E|²|∇V|² - 12|E(∇V)|²`, the
//!   contracted form `V²|C|² = -4V·C_{ijk} E^{ij} ∇^k V`, and the
//!   eigenbasis form `V²|C|² = 4 Σ_i a_i² (λ_j - λ_k)²` where `a` is
//!   `∇V` in the Ricci eigenframe.

use crate::curvature::{self, CurvatureData, CurvatureError};
use crate::fd::{self, FdOptions};
use crate::tensor::{self, Mat};
use crate::triple::{ScalarPartials, StaticTriple};

/// Residuals of the static system at one point.
#[derive(Clone, Copy, Debug)]
pub struct StaticCheck {
    /// Max orthonormal-frame component of `Hess V - V(Ric - 3εg)`.
    pub hessian_defect: f64,
    /// `|ΔV + 3εV|`.
    pub laplacian_defect: f64,
    /// `|R - 6ε|`.
    pub scalar_defect: f64,
    pub max: f64,
}

/// Hessian of a scalar with partials `sp` against curvature data `cd`.
pub(crate) fn hessian(cd: &CurvatureData, sp: &ScalarPartials) -> Mat {
    let n = cd.dim;
    let mut h = tensor::mat_zero();
    for i in 0..n {
        for j in 0..n {
            let mut v = sp.d2[i][j];
            for k in 0..n {
                v -= cd.gamma[k][i][j] * sp.d1[k];
            }
            h[i][j] = v;
        }
    }
    h
}

pub(crate) fn laplacian(cd: &CurvatureData, sp: &ScalarPartials) -> f64 {
    let h = hessian(cd, sp);
    tensor::trace_cov2(&h, &cd.ginv, cd.dim)
}

/// Gradient vector `∇^i s` (index raised).
pub(crate) fn gradient(cd: &CurvatureData, d1: &[f64; 4]) -> [f64; 4] {
    let n = cd.dim;
    let mut u = [0.0; 4];
    for i in 0..n {
        for j in 0..n {
            u[i] += cd.ginv[i][j] * d1[j];
        }
    }
    u
}

pub(crate) fn inner(cd: &CurvatureData, a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let n = cd.dim;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += cd.ginv[i][j] * a[i] * b[j];
        }
    }
    s
}

/// Check the static system at `p`.
pub fn static_residual(
    t: &StaticTriple,
    p: &[f64],
    opts: &FdOptions,
) -> Result<StaticCheck, CurvatureError> {
    let cd = curvature::curvature_data(&t.chart, p, 0, opts)?;
    let sp = t.potential_partials(p, 2, opts);
    let n = cd.dim;
    let v = sp.v;
    let eps = t.epsilon;

    let hess = hessian(&cd, &sp);
    let mut defect = tensor::mat_zero();
    for i in 0..n {
        for j in 0..n {
            defect[i][j] = hess[i][j] - v * (cd.ric[i][j] - 3.0 * eps * cd.g[i][j]);
        }
    }
    let frame = tensor::orthonormal_frame(&cd.g, n);
    let df = tensor::frame_cov2(&defect, &frame, n);
    let mut hessian_defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            hessian_defect = hessian_defect.max(df[i][j].abs());
        }
    }
    let laplacian_defect = (laplacian(&cd, &sp) + 3.0 * eps * v).abs();
    let scalar_defect = (cd.r - 6.0 * eps).abs();
    Ok(StaticCheck {
        hessian_defect,
        laplacian_defect,
        scalar_defect,
        max: hessian_defect.max(laplacian_defect).max(scalar_defect),
    })
}

/// Both sides of the Bochner divergence identity at one point.
#[derive(Clone, Copy, Debug)]
pub struct BochnerCheck {
    /// `½ div(V ∇|E|²)`.
    pub lhs: f64,
    /// `(|∇E|² + ½|C|²) V`.
    pub gradient_term: f64,
    /// `R |E|² V`.
    pub scalar_term: f64,
    /// `18 det E · V`.
    pub determinant_term: f64,
    pub residual: f64,
}

/// Bochner divergence check on the analytic derivative path
/// (requires a chart with analytic partials; depth-2 curvature).
pub fn bochner_residual(
    t: &StaticTriple,
    p: &[f64],
    opts: &FdOptions,
) -> Result<BochnerCheck, CurvatureError> {
    let cd = curvature::curvature_data(&t.chart, p, 2, opts)?;
    let sp = t.potential_partials(p, 1, opts);
    let lhs = half_div_v_grad(&cd, &sp, &cd.ds_norm2, &cd.d2s_norm2);
    Ok(bochner_from_parts(&cd, sp.v, lhs))
}

/// Bochner divergence check with the outer derivatives of `|E|²` taken
/// by finite differences of depth-0 curvature evaluations. This is the
/// only route for closure-represented charts (their FD metric partials
/// stop at third order); expect defects of a few times `1e-3`,
/// dominated by noise amplification in the second outer difference
/// (measured floor ~2e-3 on the closure form of sds:0.1).
pub fn bochner_residual_fd(
    t: &StaticTriple,
    p: &[f64],
    opts: &FdOptions,
) -> Result<BochnerCheck, CurvatureError> {
    // depth 1 gives |∇E|² and the Cotton tensor (order-3 partials).
    let cd = curvature::curvature_data(&t.chart, p, 1, opts)?;
    let sp = t.potential_partials(p, 1, opts);
    let n = cd.dim;
    let s_at = |q: &[f64]| -> f64 {
        curvature::curvature_data(&t.chart, q, 0, opts)
            .map(|c| c.s_norm2)
            .unwrap_or(f64::NAN)
    };
    let scales = t.chart.coordinate_scales();
    // When the curvature values themselves come from FD metric partials
    // they carry ~1e-8 noise, and the optimal outer step grows by the
    // sixth root of the noise ratio (~20x). Analytic charts keep the
    // default step: their S values are clean to rounding.
    let outer = FdOptions {
        step_factor: opts.step_factor * if t.chart.has_analytic() { 1.0 } else { 20.0 },
        ..*opts
    };
    let mut ds = [0.0; 4];
    let mut d2s = tensor::mat_zero();
    for k in 0..n {
        ds[k] = fd::partial(&s_at, p, &[k], &scales, &outer);
        for l in k..n {
            let v = fd::partial(&s_at, p, &[k, l], &scales, &outer);
            d2s[k][l] = v;
            d2s[l][k] = v;
        }
    }
    let lhs = half_div_v_grad(&cd, &sp, &ds, &d2s);
    Ok(bochner_from_parts(&cd, sp.v, lhs))
}

/// `½ div(V ∇s) = ½ (V Δs + ⟨∇V, ∇s⟩)` from raw partials of `s`.
fn half_div_v_grad(cd: &CurvatureData, sp: &ScalarPartials, ds: &[f64; 4], d2s: &Mat) -> f64 {
    let n = cd.dim;
    let mut lap = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut v = d2s[i][j];
            for k in 0..n {
                v -= cd.gamma[k][i][j] * ds[k];
            }
            lap += cd.ginv[i][j] * v;
        }
    }
    0.5 * (sp.v * lap + inner(cd, &sp.d1, ds))
}

fn bochner_from_parts(cd: &CurvatureData, v: f64, lhs: f64) -> BochnerCheck {
    let gradient_term = (cd.nabla_ric0_norm2 + 0.5 * cd.cotton_norm2) * v;
    let scalar_term = cd.r * cd.s_norm2 * v;
    let determinant_term = 18.0 * cd.det_ric0 * v;
    BochnerCheck {
        lhs,
        gradient_term,
        scalar_term,
        determinant_term,
        residual: (lhs - gradient_term - scalar_term - determinant_term).abs(),
    }
}

/// Both sides of the gradient divergence identity at one point.
#[derive(Clone, Copy, Debug)]
pub struct ShenCheck {
    /// `div((1/V) ∇(|∇V|² + εV²))`.
    pub lhs: f64,
    /// `2 V |E|²`.
    pub rhs: f64,
    pub residual: f64,
}

/// Gradient divergence check (analytic derivative path).
pub fn shen_residual(
    t: &StaticTriple,
    p: &[f64],
    opts: &FdOptions,
) -> Result<ShenCheck, CurvatureError> {
    let cd = curvature::curvature_data(&t.chart, p, 2, opts)?;
    let sp = t.potential_partials(p, 3, opts);
    let n = cd.dim;
    let eps = t.epsilon;
    let v = sp.v;

    // W = G^{ab} V_a V_b + ε V², and its two partial levels. The
    // inverse-metric derivative chain comes straight from the curvature
    // bundle, the potential partials from jets (or FD).
    let w1 = |j: usize| -> f64 {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += cd.dginv[j][a][b] * sp.d1[a] * sp.d1[b]
                    + 2.0 * cd.ginv[a][b] * sp.d2[a][j] * sp.d1[b];
            }
        }
        s + 2.0 * eps * v * sp.d1[j]
    };
    let w2 = |i: usize, j: usize| -> f64 {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += cd.d2ginv[i][j][a][b] * sp.d1[a] * sp.d1[b]
                    + 2.0 * cd.dginv[j][a][b] * sp.d2[a][i] * sp.d1[b]
                    + 2.0 * cd.dginv[i][a][b] * sp.d2[a][j] * sp.d1[b]
                    + 2.0 * cd.ginv[a][b] * (sp.d3[a][i][j] * sp.d1[b] + sp.d2[a][j] * sp.d2[b][i]);
            }
        }
        s + 2.0 * eps * (sp.d1[i] * sp.d1[j] + v * sp.d2[i][j])
    };

    let mut dw = [0.0; 4];
    for j in 0..n {
        dw[j] = w1(j);
    }
    // Δ W
    let mut lap_w = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut t2 = w2(i, j);
            for k in 0..n {
                t2 -= cd.gamma[k][i][j] * dw[k];
            }
            lap_w += cd.ginv[i][j] * t2;
        }
    }
    // div((1/V)∇W) = (1/V)ΔW - (1/V²)⟨∇V, ∇W⟩
    let lhs = lap_w / v - inner(&cd, &sp.d1, &dw) / (v * v);
    let rhs = 2.0 * v * cd.s_norm2;
    Ok(ShenCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Defects of the Cotton identities at one point, plus the shared
/// magnitude `V²|C|²` both sides are measured against.
#[derive(Clone, Copy, Debug)]
pub struct CottonChecks {
    /// `|V²|C|² - (8|E|²|∇V|² - 12|E(∇V)|²)|`.
    pub r1: f64,
    /// `|V²|C|² + 4V C_{ijk} E^{ij} ∇^k V|`.
    pub r2: f64,
    /// `|V²|C|² - 4 Σ a_i² (λ_j - λ_k)²|` in the Ricci eigenframe.
    pub r3: f64,
    /// Algebraic gap between the two right-hand-side forms.
    pub r4: f64,
    /// `8|E|²|∇V|²`, a scale for judging the defects.
    pub magnitude: f64,
}

/// Evaluate the Cotton identity battery (depth-1 curvature).
pub fn cotton_residuals(
    t: &StaticTriple,
    p: &[f64],
    opts: &FdOptions,
) -> Result<CottonChecks, CurvatureError> {
    let cd = curvature::curvature_data(&t.chart, p, 1, opts)?;
    let sp = t.potential_partials(p, 1, opts);
    let n = cd.dim;
    let v = sp.v;
    let u = gradient(&cd, &sp.d1);
    let grad2 = inner(&cd, &sp.d1, &sp.d1);

    // w_i = E_{ij} u^j and its norm.
    let mut w = [0.0; 4];
    for i in 0..n {
        for j in 0..n {
            w[i] += cd.ric0[i][j] * u[j];
        }
    }
    let e_grad2 = inner(&cd, &w, &w);

    let v2c2 = v * v * cd.cotton_norm2;
    let rhs1 = 8.0 * cd.s_norm2 * grad2 - 12.0 * e_grad2;
    let r1 = (v2c2 - rhs1).abs();

    // C_{ijk} E^{ij} u^k with both E indices raised.
    let mut contraction = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut e_up = 0.0;
            for a in 0..n {
                for b in 0..n {
                    e_up += cd.ginv[i][a] * cd.ginv[j][b] * cd.ric0[a][b];
                }
            }
            for k in 0..n {
                contraction += cd.cotton[i][j][k] * e_up * u[k];
            }
        }
    }
    let r2 = (v2c2 + 4.0 * v * contraction).abs();

    // Eigenframe form: Ricci eigenvalues λ and ∇V components a in the
    // corresponding orthonormal eigenbasis.
    let frame = tensor::orthonormal_frame(&cd.g, n);
    let ric_f = tensor::frame_cov2(&cd.ric, &frame, n);
    let mut sym = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sym[(i, j)] = ric_f[i][j];
        }
    }
    let eig = sym.symmetric_eigen();
    // ∇V in the coordinate frame -> orthonormal frame components.
    let mut grad_f = vec![0.0; n];
    #[allow(clippy::needless_range_loop)]
    for a in 0..n {
        // e_a^i d_i V  (frame rows are vectors)
        for i in 0..n {
            grad_f[a] += frame[a][i] * sp.d1[i];
        }
    }
    // components in the eigenbasis
    let mut a_comp = vec![0.0; n];
    for c in 0..n {
        for a in 0..n {
            a_comp[c] += eig.eigenvectors[(a, c)] * grad_f[a];
        }
    }
    let lam = &eig.eigenvalues;
    let mut rhs3 = 0.0;
    for i in 0..n {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        rhs3 += a_comp[i] * a_comp[i] * (lam[j] - lam[k]) * (lam[j] - lam[k]);
    }
    rhs3 *= 4.0;
    let r3 = (v2c2 - rhs3).abs();
    let r4 = (rhs1 - rhs3).abs();

    Ok(CottonChecks {
        r1,
        r2,
        r3,
        r4,
        magnitude: 8.0 * cd.s_norm2 * grad2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::models;
    use crate::triple::{RadialReduction, ScalarField};
    use approx::assert_relative_eq;
    use std::sync::Arc;

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
    fn static_system_holds_on_all_models() {
        let opts = FdOptions::default();
        for t in all_models() {
            let mut worst = 0.0f64;
            for p in t.sample_interior(11, 40) {
                let c = static_residual(&t, &p, &opts).unwrap();
                worst = worst.max(c.max);
            }
            assert!(worst < 1e-9, "{}: static residual {worst}", t.name);
        }
    }

    #[test]
    fn static_residual_detects_non_static_data() {
        // A generic chart with a constant potential is nowhere static.
        let t = StaticTriple {
            name: "bogus".into(),
            chart: Chart::perturbed_euclidean(0.05),
            potential: ScalarField::constant(1.0),
            v_squared: None,
            epsilon: 0.0,
            boundary: vec![],
            radial: None,
        };
        let c = static_residual(&t, &[0.5, 0.6, 0.7], &FdOptions::default()).unwrap();
        assert!(c.max > 1e-4, "expected visible defect, got {}", c.max);
    }

    #[test]
    fn bochner_identity_holds_on_analytic_models() {
        let opts = FdOptions::default();
        for t in all_models() {
            let mut worst_abs = 0.0f64;
            let mut worst_rel = 0.0f64;
            for p in t.sample_interior(13, 25) {
                let c = bochner_residual(&t, &p, &opts).unwrap();
                let scale = c.lhs.abs()
                    + c.gradient_term.abs()
                    + c.scalar_term.abs()
                    + c.determinant_term.abs();
                worst_abs = worst_abs.max(c.residual);
                worst_rel = worst_rel.max(c.residual / scale.max(1.0));
            }
            // absolute headroom under the 1e-5 gate, and rounding-level
            // accuracy relative to the size of the balanced terms
            assert!(worst_abs < 1e-7, "{}: bochner residual {worst_abs}", t.name);
            assert!(worst_rel < 1e-10, "{}: relative residual {worst_rel}", t.name);
        }
    }

    #[test]
    fn bochner_constituents_on_cylinder_are_plus_minus_36v() {
        // R|E|² = 36 and 18 det E = -36: the two curvature terms are
        // ±36V and cancel, while every derivative term vanishes.
        let t = models::cylinder_triple();
        let opts = FdOptions::default();
        for p in t.sample_interior(17, 10) {
            let v = t.potential_at(&p);
            let c = bochner_residual(&t, &p, &opts).unwrap();
            assert_relative_eq!(c.scalar_term, 36.0 * v, max_relative = 1e-8);
            assert_relative_eq!(c.determinant_term, -36.0 * v, max_relative = 1e-8);
            assert!(c.lhs.abs() < 1e-8);
            assert!(c.gradient_term.abs() < 1e-8);
            assert!(c.residual < 1e-8);
        }
    }

    #[test]
    fn bochner_terms_do_not_cancel_on_sds() {
        // On sds the scalar and determinant terms have different radial
        // profiles (36m²/r⁶ vs -36m³/r⁹); the identity is then a
        // genuine four-term balance.
        let m = 0.1;
        let t = models::sds_triple(m).unwrap();
        let opts = FdOptions::default();
        let (r_h, r_c) = (t.boundary[0].value, t.boundary[1].value);
        for frac in [0.05, 0.3, 0.5, 0.7, 0.95] {
            let r = r_h + frac * (r_c - r_h);
            let p = t.slice_point(r);
            let v = t.potential_at(&p);
            let c = bochner_residual(&t, &p, &opts).unwrap();
            assert_relative_eq!(
                c.scalar_term,
                36.0 * m * m / r.powi(6) * v,
                max_relative = 1e-8
            );
            assert_relative_eq!(
                c.determinant_term,
                -36.0 * m.powi(3) / r.powi(9) * v,
                max_relative = 1e-8
            );
            let sum = c.scalar_term + c.determinant_term;
            assert!(sum.abs() > 1e-3, "terms unexpectedly cancel at r = {r}");
            assert!(c.residual < 1e-9, "residual {} at r = {r}", c.residual);
        }
    }

    #[test]
    fn bochner_outer_fd_path_agrees_at_loose_tolerance() {
        let m = 0.1;
        let t = models::sds_triple(m).unwrap();
        let opts = FdOptions::default();
        let (r_h, r_c) = (t.boundary[0].value, t.boundary[1].value);
        let p = t.slice_point(r_h + 0.5 * (r_c - r_h));
        let exact = bochner_residual(&t, &p, &opts).unwrap();
        let fd = bochner_residual_fd(&t, &p, &opts).unwrap();
        assert!((exact.lhs - fd.lhs).abs() < 1e-4);
        assert!(fd.residual < 1e-3);
    }

    #[test]
    fn bochner_fd_path_works_on_closure_charts() {
        // The same sds model, but with metric and potential both given
        // as opaque closures: everything now rides on the FD engine.
        let m = 0.1;
        let reference = models::sds_triple(m).unwrap();
        let (r_h, r_c) = (reference.boundary[0].value, reference.boundary[1].value);
        let f = move |r: f64| 1.0 - r * r - 2.0 * m / r;
        let chart = Chart::from_closure(
            3,
            &["r", "theta", "phi"],
            vec![(r_h, r_c), (0.0, std::f64::consts::PI), (0.0, 2.0 * std::f64::consts::PI)],
            move |p: &[f64]| {
                let (r, theta) = (p[0], p[1]);
                let mut g = [[0.0; 4]; 4];
                g[0][0] = 1.0 / f(r);
                g[1][1] = r * r;
                g[2][2] = r * r * theta.sin() * theta.sin();
                g
            },
        );
        let t = StaticTriple {
            name: "sds-closure".into(),
            chart,
            potential: ScalarField::Closure(Arc::new(move |p: &[f64]| f(p[0]).sqrt())),
            v_squared: None,
            epsilon: 1.0,
            boundary: reference.boundary.clone(),
            radial: Some(RadialReduction { lo: r_h, hi: r_c }),
        };
        let opts = FdOptions::default();
        let p = t.slice_point(r_h + 0.5 * (r_c - r_h));
        // static system via FD partials
        let sc = static_residual(&t, &p, &opts).unwrap();
        assert!(sc.max < 1e-4, "closure static residual {}", sc.max);
        // Bochner via outer FD
        let c = bochner_residual_fd(&t, &p, &opts).unwrap();
        assert!(c.residual < 5e-3, "closure bochner residual {}", c.residual);
        // the analytic entry point must refuse (insufficient depth)
        assert!(matches!(
            bochner_residual(&t, &p, &opts),
            Err(CurvatureError::InsufficientDepth { .. })
        ));
    }

    #[test]
    fn shen_identity_holds_on_all_models() {
        let opts = FdOptions::default();
        for t in all_models() {
            let mut worst = 0.0f64;
            for p in t.sample_interior(19, 25) {
                let c = shen_residual(&t, &p, &opts).unwrap();
                worst = worst.max(c.residual);
            }
            assert!(worst < 1e-9, "{}: shen residual {worst}", t.name);
        }
    }

    #[test]
    fn shen_sides_match_closed_form_on_cylinder() {
        // W = 1 - 2V², so div((1/V)∇W) = -4ΔV = 12V = 2V|E|².
        let t = models::cylinder_triple();
        let opts = FdOptions::default();
        for p in t.sample_interior(23, 10) {
            let v = t.potential_at(&p);
            let c = shen_residual(&t, &p, &opts).unwrap();
            assert_relative_eq!(c.rhs, 12.0 * v, max_relative = 1e-10);
            assert_relative_eq!(c.lhs, 12.0 * v, max_relative = 1e-8);
        }
    }

    #[test]
    fn cotton_identities_hold_with_nonzero_constituents() {
        let opts = FdOptions::default();
        for t in all_models() {
            let mut worst = 0.0f64;
            let mut biggest_magnitude = 0.0f64;
            for p in t.sample_interior(29, 25) {
                let c = cotton_residuals(&t, &p, &opts).unwrap();
                worst = worst.max(c.r1).max(c.r2).max(c.r3).max(c.r4);
                biggest_magnitude = biggest_magnitude.max(c.magnitude);
            }
            assert!(worst < 1e-8, "{}: cotton residual {worst}", t.name);
            if t.name.starts_with("sds") || t.name == "cylinder" {
                // The two RHS constituents are O(1) and cancel exactly;
                // the check is not vacuous there.
                assert!(
                    biggest_magnitude > 1e-2,
                    "{}: magnitude {biggest_magnitude}",
                    t.name
                );
            }
        }
    }
}
