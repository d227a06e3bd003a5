//! Weyl curvature of 4-charts and its duality split.
//!
//! The Weyl tensor is assembled in dimension four as
//! `W = Rm - (1/2)(Ric0 o g) - (R/24)(g o g)` (`o` the Kulkarni-Nomizu
//! product). Components are taken in the oriented orthonormal frame
//! from Gram-Schmidt, the operator matrix is formed on the two-form
//! basis `{e01, e02, e03, e23, e31, e12}` with the half-norm pairing,
//! and the self-dual/anti-self-dual blocks are read off the dual pairs.
//!
//! Norm convention, fixed globally: `|W|^2` is the plain four-index
//! component sum, which equals `4 (|W+|^2 + |W-|^2)` with `|W±|^2` the
//! Frobenius norms of the 3x3 blocks. Reports carry this convention
//! string so downstream numbers are unambiguous.

use crate::chart::{Chart, ChartError};
use crate::curvature::{curvature_data, CurvatureError};
use crate::fd::FdOptions;
use crate::tensor::{self, FrameKind, TensorValue};

/// Human-readable statement of the norm convention used everywhere.
pub const WEYL_NORM_CONVENTION: &str =
    "|W|^2 = component sum over the orthonormal frame; |W|^2 = 4(|Wp|^2 + |Wm|^2)";

/// Bivector basis index pairs; entries 3..6 are the Hodge duals of 0..3.
const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2)];

/// Result of the duality split at a point.
pub struct WeylSplit {
    /// Self-dual 3x3 block (symmetric, trace-free).
    pub plus: [[f64; 3]; 3],
    /// Anti-self-dual block.
    pub minus: [[f64; 3]; 3],
    /// Largest entry of the mixed block; vanishes in exact arithmetic.
    pub cross_defect: f64,
    /// Plain component sum |W|^2 in the orthonormal frame.
    pub w2_component_sum: f64,
}

impl WeylSplit {
    pub fn plus_norm2(&self) -> f64 {
        frob3(&self.plus)
    }

    pub fn minus_norm2(&self) -> f64 {
        frob3(&self.minus)
    }

    /// Eigenvalues of the self-dual block, ascending.
    pub fn plus_eigenvalues(&self) -> [f64; 3] {
        eig3(&self.plus)
    }
}

fn frob3(m: &[[f64; 3]; 3]) -> f64 {
    m.iter().flatten().map(|x| x * x).sum()
}

fn eig3(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut big = tensor::mat_zero();
    for i in 0..3 {
        for j in 0..3 {
            big[i][j] = m[i][j];
        }
    }
    let ev = tensor::sym_eigenvalues(&big, 3);
    [ev[0], ev[1], ev[2]]
}

/// Fully covariant Weyl tensor components of a 4-chart at `p`,
/// coordinate frame.
pub fn weyl_tensor(chart: &Chart, p: &[f64]) -> Result<TensorValue, CurvatureError> {
    if chart.dim != 4 {
        return Err(ChartError::WrongDimension { expected: 4, got: chart.dim }.into());
    }
    let data = curvature_data(chart, p, 0, &FdOptions::default())?;
    let n = 4;
    let g = TensorValue::from_mat(&data.g, n, (2, 0), FrameKind::Coordinate);
    let e = TensorValue::from_mat(&data.ric0, n, (2, 0), FrameKind::Coordinate);
    let eg = crate::curvature::kulkarni_nomizu(&e, &g);
    let gg = crate::curvature::kulkarni_nomizu(&g, &g);
    let mut w = TensorValue::new(n, (4, 0), FrameKind::Coordinate);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let idx = [i, j, k, l];
                    let v = data.rm_low[i][j][k][l] - 0.5 * eg.get(&idx)
                        - data.r / 24.0 * gg.get(&idx);
                    w.set(&idx, v);
                }
            }
        }
    }
    Ok(w)
}

/// Self-dual / anti-self-dual blocks of the Weyl operator at `p`.
pub fn weyl_selfdual(chart: &Chart, p: &[f64]) -> Result<WeylSplit, CurvatureError> {
    let w = weyl_tensor(chart, p)?;
    let g = chart.metric(p);
    let mut frame = tensor::orthonormal_frame(&g, 4);
    if chart.orientation < 0.0 {
        for i in 0..4 {
            frame[3][i] = -frame[3][i];
        }
    }
    // frame components
    let mut wf = tensor::ten4_zero();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut s = 0.0;
                    for i in 0..4 {
                        for j in 0..4 {
                            for k in 0..4 {
                                for l in 0..4 {
                                    s += w.get(&[i, j, k, l])
                                        * frame[a][i]
                                        * frame[b][j]
                                        * frame[c][k]
                                        * frame[d][l];
                                }
                            }
                        }
                    }
                    wf[a][b][c][d] = s;
                }
            }
        }
    }
    // operator matrix on the two-form basis
    let mut m = [[0.0f64; 6]; 6];
    for (ai, &(a1, a2)) in PAIRS.iter().enumerate() {
        for (bi, &(b1, b2)) in PAIRS.iter().enumerate() {
            m[ai][bi] = wf[a1][a2][b1][b2];
        }
    }
    let mut plus = [[0.0f64; 3]; 3];
    let mut minus = [[0.0f64; 3]; 3];
    let mut cross: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            plus[a][b] =
                0.5 * (m[a][b] + m[a][b + 3] + m[a + 3][b] + m[a + 3][b + 3]);
            minus[a][b] =
                0.5 * (m[a][b] - m[a][b + 3] - m[a + 3][b] + m[a + 3][b + 3]);
            let off = 0.5 * (m[a][b] - m[a][b + 3] + m[a + 3][b] - m[a + 3][b + 3]);
            cross = cross.max(off.abs());
        }
    }
    let mut w2 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    w2 += wf[a][b][c][d] * wf[a][b][c][d];
                }
            }
        }
    }
    Ok(WeylSplit { plus, minus, cross_defect: cross, w2_component_sum: w2 })
}
