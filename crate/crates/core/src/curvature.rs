//! Connection and curvature of a chart metric at a point.
//!
//! Everything is computed from [`MetricPartials`] by explicit index
//! loops: inverse-metric derivatives, Christoffel symbols and their
//! first two partials (third when fourth-order metric data exists),
//! Riemann, Ricci and its first two partials, scalar curvature, the
//! trace-free Ricci part, the Cotton tensor, and first and second
//! partials of the squared trace-free-Ricci norm. The depth actually
//! populated is controlled by the metric partial order supplied:
//!
//! * order 2: curvature only
//! * order 3: + first derivatives (grad Ric, Cotton, grad of norms)
//! * order 4: + second derivatives (needed for fully analytic
//!   divergence-form identities)
//!
//! Sign conventions, fixed once and validated by the sphere tests:
//! `R^r_{s m n} = d_m Gamma^r_{ns} - d_n Gamma^r_{ms} + G^r_{m l}G^l_{n s}
//! - G^r_{n l}G^l_{m s}` and `Ric_{s n} = R^r_{s r n}`, which makes round
//! spheres positively curved.

use crate::chart::{Chart, ChartError, MetricPartials};
use crate::fd::FdOptions;
use crate::tensor::{
    self, frob2_cov3, FrameKind, Mat, Ten3, Ten4, TensorValue,
};

pub type Ten5 = [[[[[f64; 4]; 4]; 4]; 4]; 4];

/// Curvature quantities at a point. Derivative-level fields are only
/// meaningful when `deriv_depth` says so.
pub struct CurvatureData {
    pub dim: usize,
    /// 0, 1, or 2: how many derivative levels beyond curvature exist.
    pub deriv_depth: usize,
    pub g: Mat,
    pub ginv: Mat,
    /// First partials of the inverse metric.
    pub dginv: [Mat; 4],
    /// Second partials of the inverse metric.
    pub d2ginv: Box<[[Mat; 4]; 4]>,
    pub sqrt_det: f64,
    /// Gamma^k_{ij} stored `[k][i][j]`.
    pub gamma: Ten3,
    /// d_m Gamma^k_{ij} stored `[m][k][i][j]`.
    pub dgamma: Ten4,
    /// R^r_{s m n} stored `[r][s][m][n]`.
    pub rm: Ten4,
    /// Fully covariant R_{ijkl}.
    pub rm_low: Ten4,
    pub ric: Mat,
    pub r: f64,
    /// Trace-free Ricci `Ric - (R/dim) g`.
    pub ric0: Mat,
    // ---- depth >= 1 ----
    /// Coordinate partials d_m Ric_{ij}, `[m][i][j]`.
    pub dric: Ten3,
    pub dr: [f64; 4],
    /// Covariant derivative (nabla_k Ric)_{ij}, `[k][i][j]`.
    pub nabla_ric: Ten3,
    /// Cotton tensor C_{ijk} (dim 3), antisymmetric in (j,k).
    pub cotton: Ten3,
    /// |Ric0|^2 and its coordinate gradient.
    pub s_norm2: f64,
    pub ds_norm2: [f64; 4],
    /// |nabla Ric0|^2 (squared norm of the covariant derivative).
    pub nabla_ric0_norm2: f64,
    /// |C|^2 with all indices raised.
    pub cotton_norm2: f64,
    /// det of the endomorphism g^{-1} Ric0.
    pub det_ric0: f64,
    // ---- depth >= 2 ----
    /// d_m d_n Ric_{ij}, `[m][n][i][j]`.
    pub d2ric: Ten4,
    pub d2r: Mat,
    /// Hessian-of-coordinates second partials of |Ric0|^2.
    pub d2s_norm2: Mat,
}

#[derive(Debug, thiserror::Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("requested derivative depth {requested} needs analytic metric partials (chart provides order {available})")]
    InsufficientDepth { requested: usize, available: usize },
}

/// Compute curvature at `p` with `deriv_depth` extra derivative levels
/// (0..=2). Charts without analytic partials support depth <= 1.
pub fn curvature_data(
    chart: &Chart,
    p: &[f64],
    deriv_depth: usize,
    opts: &FdOptions,
) -> Result<CurvatureData, CurvatureError> {
    curvature_data_with_partials(chart, p, deriv_depth, opts).map(|(_, cd)| cd)
}

/// Like [`curvature_data`], but also hands back the metric partials the
/// computation consumed (checks that need the raw derivative chain).
pub fn curvature_data_with_partials(
    chart: &Chart,
    p: &[f64],
    deriv_depth: usize,
    opts: &FdOptions,
) -> Result<(MetricPartials, CurvatureData), CurvatureError> {
    chart.check_interior(p, 0.0)?;
    let order = 2 + deriv_depth;
    let mp = chart.partials(p, order, opts);
    if mp.order < order {
        return Err(CurvatureError::InsufficientDepth {
            requested: deriv_depth,
            available: mp.order,
        });
    }
    if !tensor::is_positive_definite(&mp.g, chart.dim) {
        return Err(ChartError::NotPositiveDefinite { point: p.to_vec() }.into());
    }
    let cd = curvature_from_partials(&mp, deriv_depth);
    Ok((mp, cd))
}

/// Same, but from precomputed metric partials.
pub fn curvature_from_partials(mp: &MetricPartials, deriv_depth: usize) -> CurvatureData {
    let n = mp.dim;
    let g = mp.g;
    let ginv = tensor::inverse(&g, n);
    let detg = tensor::det(&g, n);
    assert!(detg > 0.0, "metric not positive definite");

    // Inverse-metric derivative chain G1, G2, G3.
    let mm = |a: &Mat, b: &Mat| -> Mat {
        let mut r = tensor::mat_zero();
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += a[i][k] * b[k][j];
                }
                r[i][j] = s;
            }
        }
        r
    };
    let m3 = |a: &Mat, b: &Mat, c: &Mat| mm(&mm(a, b), c);

    let mut g1 = [tensor::mat_zero(); 4];
    let mut g2 = [[tensor::mat_zero(); 4]; 4];
    let mut g3: Box<[[[Mat; 4]; 4]; 4]> = Box::new([[[tensor::mat_zero(); 4]; 4]; 4]);
    for m in 0..n {
        g1[m] = m3(&ginv, &mp.d1[m], &ginv);
        for i in 0..n {
            for j in 0..n {
                g1[m][i][j] = -g1[m][i][j];
            }
        }
    }
    for m in 0..n {
        for q in 0..n {
            let t1 = m3(&g1[q], &mp.d1[m], &ginv);
            let t2 = m3(&ginv, &mp.d2[m][q], &ginv);
            let t3 = m3(&ginv, &mp.d1[m], &g1[q]);
            for i in 0..n {
                for j in 0..n {
                    g2[m][q][i][j] = -(t1[i][j] + t2[i][j] + t3[i][j]);
                }
            }
        }
    }
    if deriv_depth >= 2 {
        for m in 0..n {
            for q in 0..n {
                for w in 0..n {
                    // differentiate the three G2 terms along w
                    let a1 = m3(&g2[q][w], &mp.d1[m], &ginv);
                    let a2 = m3(&g1[q], &mp.d2[m][w], &ginv);
                    let a3 = m3(&g1[q], &mp.d1[m], &g1[w]);
                    let b1 = m3(&g1[w], &mp.d2[m][q], &ginv);
                    let b2 = m3(&ginv, &mp.d3[m][q][w], &ginv);
                    let b3 = m3(&ginv, &mp.d2[m][q], &g1[w]);
                    let c1 = m3(&g1[w], &mp.d1[m], &g1[q]);
                    let c2 = m3(&ginv, &mp.d2[m][w], &g1[q]);
                    let c3 = m3(&ginv, &mp.d1[m], &g2[q][w]);
                    for i in 0..n {
                        for j in 0..n {
                            g3[m][q][w][i][j] = -(a1[i][j]
                                + a2[i][j]
                                + a3[i][j]
                                + b1[i][j]
                                + b2[i][j]
                                + b3[i][j]
                                + c1[i][j]
                                + c2[i][j]
                                + c3[i][j]);
                        }
                    }
                }
            }
        }
    }

    // Lowered Christoffel A_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij)/2
    // and its partials.
    let mut a0 = tensor::ten3_zero();
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                a0[l][i][j] =
                    0.5 * (mp.d1[i][j][l] + mp.d1[j][i][l] - mp.d1[l][i][j]);
            }
        }
    }
    let mut a1 = [tensor::ten3_zero(); 4];
    for m in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    a1[m][l][i][j] = 0.5
                        * (mp.d2[m][i][j][l] + mp.d2[m][j][i][l] - mp.d2[m][l][i][j]);
                }
            }
        }
    }
    let mut a2 = [[tensor::ten3_zero(); 4]; 4];
    if deriv_depth >= 1 {
        for m in 0..n {
            for q in 0..n {
                for l in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            a2[m][q][l][i][j] = 0.5
                                * (mp.d3[m][q][i][j][l] + mp.d3[m][q][j][i][l]
                                    - mp.d3[m][q][l][i][j]);
                        }
                    }
                }
            }
        }
    }
    let mut a3: Box<[[[Ten3; 4]; 4]; 4]> =
        Box::new([[[tensor::ten3_zero(); 4]; 4]; 4]);
    if deriv_depth >= 2 {
        for m in 0..n {
            for q in 0..n {
                for w in 0..n {
                    for l in 0..n {
                        for i in 0..n {
                            for j in 0..n {
                                a3[m][q][w][l][i][j] = 0.5
                                    * (mp.d4[m][q][w][i][j][l] + mp.d4[m][q][w][j][i][l]
                                        - mp.d4[m][q][w][l][i][j]);
                            }
                        }
                    }
                }
            }
        }
    }

    // Christoffel levels.
    let contract = |gi: &Mat, a: &Ten3| -> Ten3 {
        let mut out = tensor::ten3_zero();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += gi[k][l] * a[l][i][j];
                    }
                    out[k][i][j] = s;
                }
            }
        }
        out
    };
    let gamma = contract(&ginv, &a0);
    let mut dgamma = tensor::ten4_zero();
    for m in 0..n {
        let t1 = contract(&g1[m], &a0);
        let t2 = contract(&ginv, &a1[m]);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dgamma[m][k][i][j] = t1[k][i][j] + t2[k][i][j];
                }
            }
        }
    }
    let mut d2gamma: Box<Ten5> = Box::new([[[[[0.0; 4]; 4]; 4]; 4]; 4]);
    if deriv_depth >= 1 {
        for m in 0..n {
            for q in 0..n {
                let t1 = contract(&g2[m][q], &a0);
                let t2 = contract(&g1[m], &a1[q]);
                let t3 = contract(&g1[q], &a1[m]);
                let t4 = contract(&ginv, &a2[m][q]);
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            d2gamma[m][q][k][i][j] =
                                t1[k][i][j] + t2[k][i][j] + t3[k][i][j] + t4[k][i][j];
                        }
                    }
                }
            }
        }
    }
    // d3 Gamma only enters d2Ric; keep it local.
    let mut d3gamma: Option<Box<[[[Ten3; 4]; 4]; 4]>> = None;
    if deriv_depth >= 2 {
        let mut arr: Box<[[[Ten3; 4]; 4]; 4]> =
            Box::new([[[tensor::ten3_zero(); 4]; 4]; 4]);
        for m in 0..n {
            for q in 0..n {
                for w in 0..n {
                    let t1 = contract(&g3[m][q][w], &a0);
                    let t2 = contract(&g2[m][q], &a1[w]);
                    let t3 = contract(&g2[m][w], &a1[q]);
                    let t4 = contract(&g2[q][w], &a1[m]);
                    let t5 = contract(&g1[m], &a2[q][w]);
                    let t6 = contract(&g1[q], &a2[m][w]);
                    let t7 = contract(&g1[w], &a2[m][q]);
                    let t8 = contract(&ginv, &a3[m][q][w]);
                    for k in 0..n {
                        for i in 0..n {
                            for j in 0..n {
                                arr[m][q][w][k][i][j] = t1[k][i][j]
                                    + t2[k][i][j]
                                    + t3[k][i][j]
                                    + t4[k][i][j]
                                    + t5[k][i][j]
                                    + t6[k][i][j]
                                    + t7[k][i][j]
                                    + t8[k][i][j];
                            }
                        }
                    }
                }
            }
        }
        d3gamma = Some(arr);
    }

    // Riemann R^r_{s m n}.
    let mut rm = tensor::ten4_zero();
    for r in 0..n {
        for s in 0..n {
            for m in 0..n {
                for q in 0..n {
                    let mut v = dgamma[m][r][q][s] - dgamma[q][r][m][s];
                    for l in 0..n {
                        v += gamma[r][m][l] * gamma[l][q][s]
                            - gamma[r][q][l] * gamma[l][m][s];
                    }
                    rm[r][s][m][q] = v;
                }
            }
        }
    }
    let mut rm_low = tensor::ten4_zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = 0.0;
                    for r in 0..n {
                        s += g[i][r] * rm[r][j][k][l];
                    }
                    rm_low[i][j][k][l] = s;
                }
            }
        }
    }

    // Ricci from the direct formula (so its derivatives follow the same
    // expression): Ric_{ij} = sum_k dGamma[k][k][j][i] - dGamma[j][k][k][i]
    //                       + G^k_{kl}G^l_{ji} - G^k_{jl}G^l_{ki}.
    let mut ric = tensor::mat_zero();
    for i in 0..n {
        for j in 0..n {
            let mut v = 0.0;
            for k in 0..n {
                v += dgamma[k][k][j][i] - dgamma[j][k][k][i];
                for l in 0..n {
                    v += gamma[k][k][l] * gamma[l][j][i] - gamma[k][j][l] * gamma[l][k][i];
                }
            }
            ric[i][j] = v;
        }
    }
    // Symmetrize away rounding skew.
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (ric[i][j] + ric[j][i]);
            ric[i][j] = avg;
            ric[j][i] = avg;
        }
    }
    let r_scal = tensor::trace_cov2(&ric, &ginv, n);
    let mut ric0 = ric;
    for i in 0..n {
        for j in 0..n {
            ric0[i][j] -= r_scal / n as f64 * g[i][j];
        }
    }

    let mut data = CurvatureData {
        dim: n,
        deriv_depth,
        g,
        ginv,
        dginv: g1,
        d2ginv: Box::new(g2),
        sqrt_det: detg.sqrt(),
        gamma,
        dgamma,
        rm,
        rm_low,
        ric,
        r: r_scal,
        ric0,
        dric: tensor::ten3_zero(),
        dr: [0.0; 4],
        nabla_ric: tensor::ten3_zero(),
        cotton: tensor::ten3_zero(),
        s_norm2: 0.0,
        ds_norm2: [0.0; 4],
        nabla_ric0_norm2: 0.0,
        cotton_norm2: 0.0,
        det_ric0: 0.0,
        d2ric: tensor::ten4_zero(),
        d2r: tensor::mat_zero(),
        d2s_norm2: tensor::mat_zero(),
    };

    // |Ric0|^2 and det(g^-1 Ric0) are depth-0 quantities.
    data.s_norm2 = tensor::frob2_cov2(&ric0, &ginv, n);
    {
        let mut endo = tensor::mat_zero();
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += ginv[i][k] * ric0[k][j];
                }
                endo[i][j] = s;
            }
        }
        data.det_ric0 = tensor::det(&endo, n);
    }

    if deriv_depth >= 1 {
        // dRic by differentiating the Ricci formula.
        let mut dric = tensor::ten3_zero();
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    for k in 0..n {
                        v += d2gamma[m][k][k][j][i] - d2gamma[m][j][k][k][i];
                        for l in 0..n {
                            v += dgamma[m][k][k][l] * gamma[l][j][i]
                                + gamma[k][k][l] * dgamma[m][l][j][i]
                                - dgamma[m][k][j][l] * gamma[l][k][i]
                                - gamma[k][j][l] * dgamma[m][l][k][i];
                        }
                    }
                    dric[m][i][j] = v;
                }
            }
        }
        for m in 0..n {
            for i in 0..n {
                for j in i + 1..n {
                    let avg = 0.5 * (dric[m][i][j] + dric[m][j][i]);
                    dric[m][i][j] = avg;
                    dric[m][j][i] = avg;
                }
            }
        }
        data.dric = dric;
        // dR = d(g^ij) Ric_ij + g^ij dRic_ij
        for m in 0..n {
            let mut v = 0.0;
            for i in 0..n {
                for j in 0..n {
                    v += g1[m][i][j] * ric[i][j] + ginv[i][j] * dric[m][i][j];
                }
            }
            data.dr[m] = v;
        }
        // nabla Ric
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = dric[k][i][j];
                    for l in 0..n {
                        v -= gamma[l][k][i] * ric[l][j] + gamma[l][k][j] * ric[i][l];
                    }
                    data.nabla_ric[k][i][j] = v;
                }
            }
        }
        // |nabla Ric0|^2: nabla_k Ric0_ij = nabla_k Ric_ij - (dR_k/n) g_ij.
        let mut nr0 = tensor::ten3_zero();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    nr0[k][i][j] = data.nabla_ric[k][i][j] - data.dr[k] / n as f64 * g[i][j];
                }
            }
        }
        data.nabla_ric0_norm2 = frob2_cov3(&nr0, &ginv, n);
        // Cotton (dim 3 only; zero otherwise).
        if n == 3 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        data.cotton[i][j][k] = data.nabla_ric[k][i][j]
                            - data.nabla_ric[j][i][k]
                            - 0.25 * (data.dr[k] * g[i][j] - data.dr[j] * g[i][k]);
                    }
                }
            }
            data.cotton_norm2 = frob2_cov3(&data.cotton, &ginv, n);
        }
        // S = |Ric0|^2 gradient: dS[m] = 2 G1 G E E + 2 G G dE E,
        // with E = Ric0 and dE = dRic - (dR/n) g - (R/n) dg.
        let e = ric0;
        let mut de = [tensor::mat_zero(); 4];
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    de[m][i][j] = dric[m][i][j]
                        - data.dr[m] / n as f64 * g[i][j]
                        - r_scal / n as f64 * mp.d1[m][i][j];
                }
            }
        }
        let quad = |p1: &Mat, p2: &Mat, t1: &Mat, t2: &Mat| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for k in 0..n {
                    for j in 0..n {
                        for l in 0..n {
                            s += p1[i][k] * p2[j][l] * t1[i][j] * t2[k][l];
                        }
                    }
                }
            }
            s
        };
        for m in 0..n {
            data.ds_norm2[m] =
                2.0 * quad(&g1[m], &ginv, &e, &e) + 2.0 * quad(&ginv, &ginv, &de[m], &e);
        }

        if deriv_depth >= 2 {
            let d3g = d3gamma.as_ref().unwrap();
            // d2Ric.
            let mut d2ric = tensor::ten4_zero();
            for m in 0..n {
                for q in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let mut v = 0.0;
                            for k in 0..n {
                                v += d3g[m][q][k][k][j][i] - d3g[m][q][j][k][k][i];
                                for l in 0..n {
                                    v += d2gamma[m][q][k][k][l] * gamma[l][j][i]
                                        + dgamma[m][k][k][l] * dgamma[q][l][j][i]
                                        + dgamma[q][k][k][l] * dgamma[m][l][j][i]
                                        + gamma[k][k][l] * d2gamma[m][q][l][j][i]
                                        - d2gamma[m][q][k][j][l] * gamma[l][k][i]
                                        - dgamma[m][k][j][l] * dgamma[q][l][k][i]
                                        - dgamma[q][k][j][l] * dgamma[m][l][k][i]
                                        - gamma[k][j][l] * d2gamma[m][q][l][k][i];
                                }
                            }
                            d2ric[m][q][i][j] = v;
                        }
                    }
                }
            }
            for m in 0..n {
                for q in 0..n {
                    for i in 0..n {
                        for j in i + 1..n {
                            let avg = 0.5 * (d2ric[m][q][i][j] + d2ric[m][q][j][i]);
                            d2ric[m][q][i][j] = avg;
                            d2ric[m][q][j][i] = avg;
                        }
                    }
                }
            }
            data.d2ric = d2ric;
            // d2R.
            for m in 0..n {
                for q in 0..n {
                    let mut v = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            v += g2[m][q][i][j] * ric[i][j]
                                + g1[m][i][j] * dric[q][i][j]
                                + g1[q][i][j] * dric[m][i][j]
                                + ginv[i][j] * d2ric[m][q][i][j];
                        }
                    }
                    data.d2r[m][q] = v;
                }
            }
            // d2S.
            let mut d2e = [[tensor::mat_zero(); 4]; 4];
            for m in 0..n {
                for q in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            d2e[m][q][i][j] = d2ric[m][q][i][j]
                                - data.d2r[m][q] / n as f64 * g[i][j]
                                - data.dr[m] / n as f64 * mp.d1[q][i][j]
                                - data.dr[q] / n as f64 * mp.d1[m][i][j]
                                - r_scal / n as f64 * mp.d2[m][q][i][j];
                        }
                    }
                }
            }
            for m in 0..n {
                for q in 0..n {
                    let v = 2.0
                        * (quad(&g2[m][q], &ginv, &e, &e)
                            + quad(&g1[m], &g1[q], &e, &e)
                            + 2.0 * quad(&g1[m], &ginv, &de[q], &e)
                            + 2.0 * quad(&g1[q], &ginv, &de[m], &e)
                            + quad(&ginv, &ginv, &d2e[m][q], &e)
                            + quad(&ginv, &ginv, &de[m], &de[q]));
                    data.d2s_norm2[m][q] = v;
                }
            }
        }
    }

    data
}

// ---- public chart_calculus operations ----

/// Christoffel symbols as a (1-contravariant, 2-covariant) tensor value,
/// stored `[k][i][j]`.
pub fn christoffel(chart: &Chart, p: &[f64]) -> Result<TensorValue, CurvatureError> {
    let data = curvature_data(chart, p, 0, &FdOptions::default())?;
    Ok(TensorValue::from_ten3(
        &data.gamma,
        chart.dim,
        (2, 1),
        FrameKind::Coordinate,
    ))
}

/// Riemann (fully covariant), Ricci, scalar curvature, trace-free Ricci.
pub struct CurvaturePack {
    pub rm: TensorValue,
    pub ric: TensorValue,
    pub r: f64,
    pub ric0: TensorValue,
}

pub fn curvature_pack(chart: &Chart, p: &[f64]) -> Result<CurvaturePack, CurvatureError> {
    let data = curvature_data(chart, p, 0, &FdOptions::default())?;
    let n = chart.dim;
    Ok(CurvaturePack {
        rm: TensorValue::from_ten4(&data.rm_low, n, (4, 0), FrameKind::Coordinate),
        ric: TensorValue::from_mat(&data.ric, n, (2, 0), FrameKind::Coordinate),
        r: data.r,
        ric0: TensorValue::from_mat(&data.ric0, n, (2, 0), FrameKind::Coordinate),
    })
}

/// Cotton tensor C_{ijk} (three dimensions only).
pub fn cotton(chart: &Chart, p: &[f64]) -> Result<TensorValue, CurvatureError> {
    if chart.dim != 3 {
        return Err(ChartError::WrongDimension { expected: 3, got: chart.dim }.into());
    }
    let data = curvature_data(chart, p, 1, &FdOptions::default())?;
    Ok(TensorValue::from_ten3(
        &data.cotton,
        3,
        (3, 0),
        FrameKind::Coordinate,
    ))
}

/// Kulkarni-Nomizu product of symmetric 2-tensors:
/// (A o B)_{ijkl} = A_ik B_jl - A_il B_jk - A_jk B_il + A_jl B_ik.
pub fn kulkarni_nomizu(a: &TensorValue, b: &TensorValue) -> TensorValue {
    assert_eq!(a.dim, b.dim, "dimension mismatch");
    assert_eq!(a.rank(), 2);
    assert_eq!(b.rank(), 2);
    let n = a.dim;
    let mut out = TensorValue::new(n, (4, 0), FrameKind::Coordinate);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = a.get(&[i, k]) * b.get(&[j, l]) - a.get(&[i, l]) * b.get(&[j, k])
                        - a.get(&[j, k]) * b.get(&[i, l])
                        + a.get(&[j, l]) * b.get(&[i, k]);
                    out.set(&[i, j, k, l], v);
                }
            }
        }
    }
    out
}

/// Covariant derivative of a tensor field given as a closure. The field
/// must return a fixed valence; the new covariant slot is prepended, so
/// the result at index `[k, rest..]` is `(nabla_k T)(rest)`.
///
/// Component partials are taken by Richardson-extrapolated central
/// differences of the field closure, so the stencil must stay inside
/// the chart domain.
pub fn covariant_derivative(
    chart: &Chart,
    field: &dyn Fn(&[f64]) -> TensorValue,
    p: &[f64],
) -> Result<TensorValue, CurvatureError> {
    let n = chart.dim;
    // Stencil excursion: first-order step times Richardson halving fits
    // well inside a 2-step margin.
    let margin = 2.0 * crate::fd::base_step(1);
    chart.check_interior(p, margin)?;
    let data = curvature_data(chart, p, 0, &FdOptions::default())?;
    let sample = field(p);
    let (ncov, ncon) = sample.valence;
    let rank = ncov + ncon;
    let scales = chart.coordinate_scales();
    let opts = FdOptions::default();
    let mut out = TensorValue::new(n, (ncov + 1, ncon), FrameKind::Coordinate);

    let mut idx = vec![0usize; rank];
    let total = n.pow(rank as u32);
    for flat in 0..total {
        let mut rem = flat;
        for slot in (0..rank).rev() {
            idx[slot] = rem % n;
            rem /= n;
        }
        let comp = |q: &[f64]| field(q).get(&idx);
        for k in 0..n {
            let mut v = crate::fd::partial(&comp, p, &[k], &scales, &opts);
            // connection corrections: contravariant slots first in the
            // stored layout [con slots..., cov slots...].
            for slot in 0..rank {
                let is_con = slot < ncon;
                for l in 0..n {
                    let mut jdx = idx.clone();
                    jdx[slot] = l;
                    let t = field(p).get(&jdx);
                    if is_con {
                        v += data.gamma[idx[slot]][k][l] * t;
                    } else {
                        v -= data.gamma[l][k][idx[slot]] * t;
                    }
                }
            }
            let mut full = Vec::with_capacity(rank + 1);
            full.push(k);
            full.extend_from_slice(&idx);
            out.set(&full, v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::func1d::Func1;
    use crate::chart::ComponentRep;
    use approx::assert_relative_eq;

    fn cylinder_chart() -> Chart {
        // dt^2 + (1/3)(dth^2 + sin^2 th dph^2)
        Chart::separable_diag(
            &["t", "th", "ph"],
            vec![
                (0.0, std::f64::consts::PI / 3.0f64.sqrt()),
                (1e-3, std::f64::consts::PI - 1e-3),
                (1e-3, 2.0 * std::f64::consts::PI - 1e-3),
            ],
            vec![
                ComponentRep::constant(1.0),
                ComponentRep::constant(1.0 / 3.0),
                ComponentRep::single(
                    1.0 / 3.0,
                    vec![(1, Func1::Prod(vec![Func1::Sin(1.0), Func1::Sin(1.0)]))],
                ),
            ],
        )
    }

    #[test]
    fn euclidean_is_flat() {
        let ch = Chart::euclidean(3);
        let p = [0.3, -1.0, 2.0];
        let gamma = christoffel(&ch, &p).unwrap();
        assert!(gamma.max_abs() < 1e-14);
        let pack = curvature_pack(&ch, &p).unwrap();
        assert!(pack.rm.max_abs() < 1e-12);
        assert!(pack.ric.max_abs() < 1e-12);
        assert!(pack.r.abs() < 1e-12);
    }

    #[test]
    fn flat_torus_is_flat() {
        let ch = Chart::flat_torus();
        let pack = curvature_pack(&ch, &[0.3, 0.7, 0.2]).unwrap();
        assert!(pack.rm.max_abs() < 1e-12);
    }

    // Hand-derived sphere connection: on (dth^2, sin^2 th dph^2),
    // Gamma^th_{ph ph} = -sin th cos th and Gamma^ph_{th ph} = cot th.
    // At th = pi/4 these are -1/2 and 1.
    #[test]
    fn round_s2_connection_and_curvature() {
        let ch = Chart::round_sphere(2);
        let p = [std::f64::consts::FRAC_PI_4, 1.3];
        let gamma = christoffel(&ch, &p).unwrap();
        assert_relative_eq!(gamma.get(&[0, 1, 1]), -0.5, max_relative = 1e-12);
        assert_relative_eq!(gamma.get(&[1, 0, 1]), 1.0, max_relative = 1e-12);
        assert_relative_eq!(gamma.get(&[1, 1, 0]), 1.0, max_relative = 1e-12);
        // Gauss curvature 1: Ric = g, R = 2.
        let pack = curvature_pack(&ch, &p).unwrap();
        let g = ch.metric(&p);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(pack.ric.get(&[i, j]), g[i][j], epsilon = 1e-12);
            }
        }
        assert_relative_eq!(pack.r, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn unit_s3_curvature() {
        let ch = Chart::round_sphere(3);
        let p = [1.1, 0.8, 2.5];
        let pack = curvature_pack(&ch, &p).unwrap();
        let g = ch.metric(&p);
        assert_relative_eq!(pack.r, 6.0, max_relative = 1e-11);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(
                    pack.ric.get(&[i, j]),
                    2.0 * g[i][j],
                    epsilon = 1e-11
                );
            }
        }
        assert!(pack.ric0.max_abs() < 1e-11);
        // Rm_{ijkl} = g_ik g_jl - g_il g_jk on the unit sphere.
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let expect = g[i][k] * g[j][l] - g[i][l] * g[j][k];
                        assert_relative_eq!(
                            pack.rm.get(&[i, j, k, l]),
                            expect,
                            epsilon = 1e-11
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn three_dim_riemann_reconstruction() {
        // In dim 3, Rm = (Ric - (R/4) g) o g.
        for (ch, p) in [
            (Chart::round_sphere(3), vec![1.1, 0.8, 2.5]),
            (cylinder_chart(), vec![0.6, 1.1, 2.0]),
            (Chart::perturbed_euclidean(0.05), vec![0.7, 0.5, 0.9]),
        ] {
            let pack = curvature_pack(&ch, &p).unwrap();
            let g = ch.metric(&p);
            let mut a = TensorValue::new(3, (2, 0), FrameKind::Coordinate);
            for i in 0..3 {
                for j in 0..3 {
                    a.set(&[i, j], pack.ric.get(&[i, j]) - pack.r / 4.0 * g[i][j]);
                }
            }
            let gt = TensorValue::from_mat(&g, 3, (2, 0), FrameKind::Coordinate);
            let recon = kulkarni_nomizu(&a, &gt);
            let scale = pack.rm.max_abs().max(1.0);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            let d = (recon.get(&[i, j, k, l]) - pack.rm.get(&[i, j, k, l]))
                                .abs();
                            assert!(d / scale < 1e-10, "defect {d} at {i}{j}{k}{l}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cylinder_ricci_spectrum() {
        let ch = cylinder_chart();
        let p = [0.6, 1.1, 2.0];
        let data = curvature_data(&ch, &p, 1, &FdOptions::default()).unwrap();
        let ev = tensor::eigenvalues_wrt_metric(&data.ric, &data.g, 3);
        assert_relative_eq!(ev[0], 0.0, epsilon = 1e-11);
        assert_relative_eq!(ev[1], 3.0, epsilon = 1e-11);
        assert_relative_eq!(ev[2], 3.0, epsilon = 1e-11);
        assert_relative_eq!(data.r, 6.0, max_relative = 1e-12);
        // |Ric0|^2 = 6, det endo = -2, matching R^2/6 = 6.
        assert_relative_eq!(data.s_norm2, 6.0, max_relative = 1e-11);
        assert_relative_eq!(data.det_ric0, -2.0, max_relative = 1e-11);
        // product metric has parallel Ricci
        let mut worst = 0.0f64;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max(data.nabla_ric[k][i][j].abs());
                }
            }
        }
        assert!(worst < 1e-11, "nabla Ric {worst}");
    }

    #[test]
    fn first_bianchi_identity() {
        let ch = Chart::perturbed_euclidean(0.08);
        let p = [0.45, 0.95, 0.65];
        let pack = curvature_pack(&ch, &p).unwrap();
        let scale = pack.rm.max_abs().max(1e-30);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let s = pack.rm.get(&[i, j, k, l])
                            + pack.rm.get(&[i, k, l, j])
                            + pack.rm.get(&[i, l, j, k]);
                        assert!(s.abs() / scale < 1e-10, "bianchi {s}");
                    }
                }
            }
        }
    }

    #[test]
    fn riemann_symmetries() {
        let ch = Chart::perturbed_euclidean(0.08);
        let p = [0.45, 0.95, 0.65];
        let pack = curvature_pack(&ch, &p).unwrap();
        assert!(pack.rm.symmetry_defect(0, 1, -1.0) < 1e-10);
        assert!(pack.rm.symmetry_defect(2, 3, -1.0) < 1e-10);
        // pair swap (ij)<->(kl)
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        worst = worst.max(
                            (pack.rm.get(&[i, j, k, l]) - pack.rm.get(&[k, l, i, j])).abs(),
                        );
                    }
                }
            }
        }
        assert!(worst / pack.rm.max_abs() < 1e-10);
    }

    #[test]
    fn contracted_second_bianchi() {
        // |2 div Ric - dR| small on a generic analytic chart.
        let ch = Chart::perturbed_euclidean(0.08);
        let p = [0.45, 0.95, 0.65];
        let data = curvature_data(&ch, &p, 1, &FdOptions::default()).unwrap();
        for j in 0..3 {
            let mut div = 0.0;
            for k in 0..3 {
                for i in 0..3 {
                    div += data.ginv[k][i] * data.nabla_ric[k][i][j];
                }
            }
            assert!(
                (2.0 * div - data.dr[j]).abs() < 1e-9,
                "component {j}: {}",
                2.0 * div - data.dr[j]
            );
        }
    }

    #[test]
    fn cotton_zero_on_conformally_flat_and_not_on_generic() {
        let s3 = Chart::round_sphere(3);
        let c = cotton(&s3, &[1.1, 0.8, 2.5]).unwrap();
        assert!(c.max_abs() < 1e-10, "sphere cotton {}", c.max_abs());
        let ch = Chart::perturbed_euclidean(0.08);
        let c2 = cotton(&ch, &[0.45, 0.95, 0.65]).unwrap();
        assert!(c2.max_abs() > 1e-4, "generic cotton {}", c2.max_abs());
        // antisymmetry in last two slots, symmetry defect of first two
        assert!(c2.symmetry_defect(1, 2, -1.0) < 1e-10);
        // trace-free in every pair
        let data = curvature_data(&ch, &[0.45, 0.95, 0.65], 1, &FdOptions::default()).unwrap();
        for free in 0..3 {
            let mut tr01 = 0.0;
            let mut tr02 = 0.0;
            let mut tr12 = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    tr01 += data.ginv[a][b] * data.cotton[a][b][free];
                    tr02 += data.ginv[a][b] * data.cotton[a][free][b];
                    tr12 += data.ginv[a][b] * data.cotton[free][a][b];
                }
            }
            let scale = c2.max_abs();
            assert!(tr01.abs() / scale < 1e-9);
            assert!(tr02.abs() / scale < 1e-9);
            assert!(tr12.abs() / scale < 1e-9);
        }
    }

    #[test]
    fn kulkarni_nomizu_euclidean_and_bilinear() {
        let g = TensorValue::from_mat(
            &Chart::euclidean(3).metric(&[0.0, 0.0, 0.0]),
            3,
            (2, 0),
            FrameKind::Coordinate,
        );
        let gg = kulkarni_nomizu(&g, &g);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let expect = 2.0
                            * ((i == k && j == l) as i32 as f64
                                - (i == l && j == k) as i32 as f64);
                        assert_relative_eq!(gg.get(&[i, j, k, l]), expect, epsilon = 1e-15);
                    }
                }
            }
        }
        let zero = TensorValue::new(3, (2, 0), FrameKind::Coordinate);
        let zg = kulkarni_nomizu(&zero, &g);
        assert!(zg.max_abs() == 0.0);
    }

    #[test]
    fn second_derivatives_match_fd_of_first() {
        // Validates the G3/A3/Gamma3 chain: analytic d2Ric and d2S agree
        // with central differences of analytic dRic and dS.
        let ch = Chart::perturbed_euclidean(0.08);
        let p = [0.5, 0.8, 0.6];
        let opts = FdOptions::default();
        let data = curvature_data(&ch, &p, 2, &opts).unwrap();
        let h = 1e-5;
        for m in 0..3 {
            let mut hi = p;
            let mut lo = p;
            hi[m] += h;
            lo[m] -= h;
            let dhi = curvature_data(&ch, &hi, 1, &opts).unwrap();
            let dlo = curvature_data(&ch, &lo, 1, &opts).unwrap();
            for q in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let fd = (dhi.dric[q][i][j] - dlo.dric[q][i][j]) / (2.0 * h);
                        assert_relative_eq!(
                            data.d2ric[m][q][i][j],
                            fd,
                            epsilon = 1e-5,
                            max_relative = 1e-5
                        );
                    }
                }
                let fds = (dhi.ds_norm2[q] - dlo.ds_norm2[q]) / (2.0 * h);
                assert_relative_eq!(
                    data.d2s_norm2[m][q],
                    fds,
                    epsilon = 1e-5,
                    max_relative = 1e-5
                );
            }
            let fdr = (dhi.dr[m] - dlo.dr[m]) / (2.0 * h);
            assert_relative_eq!(data.d2r[m][m], fdr, epsilon = 1e-5, max_relative = 1e-5);
        }
    }

    #[test]
    fn covariant_derivative_of_metric_vanishes() {
        let ch = Chart::perturbed_euclidean(0.05);
        let p = [0.6, 0.7, 0.8];
        let field = |q: &[f64]| {
            TensorValue::from_mat(&ch.metric(q), 3, (2, 0), FrameKind::Coordinate)
        };
        let ch2 = Chart::perturbed_euclidean(0.05);
        let nabla = covariant_derivative(&ch2, &field, &p).unwrap();
        assert!(nabla.max_abs() < 1e-9, "nabla g = {}", nabla.max_abs());
    }

    #[test]
    fn covariant_derivative_scalar_reduces_to_partial() {
        let ch = Chart::perturbed_euclidean(0.05);
        let p = [0.6, 0.7, 0.8];
        let field = |q: &[f64]| {
            let mut t = TensorValue::new(3, (0, 0), FrameKind::Coordinate);
            t.set(&[], q[0].sin() * q[1] + q[2] * q[2]);
            t
        };
        let nabla = covariant_derivative(&ch, &field, &p).unwrap();
        assert_relative_eq!(nabla.get(&[0]), p[0].cos() * p[1], max_relative = 1e-8);
        assert_relative_eq!(nabla.get(&[1]), p[0].sin(), max_relative = 1e-8);
        assert_relative_eq!(nabla.get(&[2]), 2.0 * p[2], max_relative = 1e-8);
    }

    #[test]
    fn covariant_derivative_matches_analytic_nabla_ric() {
        let ch = cylinder_chart();
        let p = [0.6, 1.1, 2.0];
        let inner = cylinder_chart();
        let field = move |q: &[f64]| {
            let pack = curvature_pack(&inner, q).unwrap();
            pack.ric
        };
        let nabla = covariant_derivative(&ch, &field, &p).unwrap();
        // cylinder Ricci is parallel
        assert!(nabla.max_abs() < 1e-7, "got {}", nabla.max_abs());
    }

    #[test]
    fn scalar_invariants_rotation_independent() {
        let base = Chart::perturbed_euclidean(0.08);
        let center = [0.6, 0.75, 0.7];
        // rotation mixing all three axes
        let th = 0.41f64;
        let ph = 0.23f64;
        let (s1, c1) = th.sin_cos();
        let (s2, c2) = ph.sin_cos();
        let mut q = tensor::mat_zero();
        // Rz(th) * Rx(ph)
        q[0][0] = c1;
        q[0][1] = -s1 * c2;
        q[0][2] = s1 * s2;
        q[1][0] = s1;
        q[1][1] = c1 * c2;
        q[1][2] = -c1 * s2;
        q[2][0] = 0.0;
        q[2][1] = s2;
        q[2][2] = c2;
        let rot = base.rotated(&q, &center, 0.02);
        let y0: Vec<f64> = (0..3)
            .map(|a| (0..3).map(|i| q[i][a] * center[i]).sum())
            .collect();
        let d0 = curvature_data(&base, &center, 1, &FdOptions::default()).unwrap();
        let d1 = curvature_data(&rot, &y0, 1, &FdOptions::default()).unwrap();
        assert_relative_eq!(d0.r, d1.r, max_relative = 1e-12);
        assert_relative_eq!(d0.s_norm2, d1.s_norm2, max_relative = 1e-11);
        assert_relative_eq!(d0.cotton_norm2, d1.cotton_norm2, max_relative = 1e-10);
        assert_relative_eq!(d0.det_ric0, d1.det_ric0, max_relative = 1e-11);
        assert_relative_eq!(
            d0.nabla_ric0_norm2,
            d1.nabla_ric0_norm2,
            max_relative = 1e-10
        );
    }
}
