//! Dense tensor values at a point, small linear algebra, and frames.
//!
//! Everything here is dimension-generic for `dim` in 2..=4 but stored in
//! fixed `[..; 4]` arrays: the unused tail stays zero. That keeps the
//! hot curvature loops allocation-free.

use nalgebra::DMatrix;

/// Symmetric matrix storage, used up to `dim`.
pub type Mat = [[f64; 4]; 4];
pub type Ten3 = [[[f64; 4]; 4]; 4];
pub type Ten4 = [[[[f64; 4]; 4]; 4]; 4];

pub fn mat_zero() -> Mat {
    [[0.0; 4]; 4]
}

pub fn ten3_zero() -> Ten3 {
    [[[0.0; 4]; 4]; 4]
}

pub fn ten4_zero() -> Ten4 {
    [[[[0.0; 4]; 4]; 4]; 4]
}

/// Determinant of the leading `dim` block.
pub fn det(g: &Mat, dim: usize) -> f64 {
    match dim {
        1 => g[0][0],
        2 => g[0][0] * g[1][1] - g[0][1] * g[1][0],
        3 => {
            g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
                - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
                + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
        }
        4 => {
            let mut d = 0.0;
            for j in 0..4 {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                d += sign * g[0][j] * minor3(g, 0, j);
            }
            d
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}

fn minor3(g: &Mat, row: usize, col: usize) -> f64 {
    let mut m = [[0.0; 3]; 3];
    let (mut r, mut c);
    r = 0;
    for i in 0..4 {
        if i == row {
            continue;
        }
        c = 0;
        for j in 0..4 {
            if j == col {
                continue;
            }
            m[r][c] = g[i][j];
            c += 1;
        }
        r += 1;
    }
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse of the leading `dim` block by Gauss-Jordan with partial
/// pivoting. Panics on a numerically singular block.
pub fn inverse(g: &Mat, dim: usize) -> Mat {
    let mut a = [[0.0f64; 8]; 4];
    for i in 0..dim {
        for j in 0..dim {
            a[i][j] = g[i][j];
        }
        a[i][dim + i] = 1.0;
    }
    for col in 0..dim {
        let mut piv = col;
        for r in col + 1..dim {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        assert!(a[piv][col] != 0.0, "singular metric block");
        a.swap(col, piv);
        let inv = 1.0 / a[col][col];
        for j in 0..2 * dim {
            a[col][j] *= inv;
        }
        for r in 0..dim {
            if r == col {
                continue;
            }
            let f = a[r][col];
            if f != 0.0 {
                for j in 0..2 * dim {
                    a[r][j] -= f * a[col][j];
                }
            }
        }
    }
    let mut out = mat_zero();
    for i in 0..dim {
        for j in 0..dim {
            out[i][j] = a[i][dim + j];
        }
    }
    out
}

/// Squared Frobenius norm of a covariant 2-tensor, indices raised with
/// `ginv`: `T_ij T_kl g^ik g^jl`. Coordinate-invariant.
pub fn frob2_cov2(t: &Mat, ginv: &Mat, dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    s += t[i][j] * t[k][l] * ginv[i][k] * ginv[j][l];
                }
            }
        }
    }
    s
}

/// Squared norm of a covariant 3-tensor with all indices raised.
pub fn frob2_cov3(t: &Ten3, ginv: &Mat, dim: usize) -> f64 {
    // Raise one slot at a time to keep this O(dim^4) per slot.
    let mut u = ten3_zero();
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let mut s = 0.0;
                for a in 0..dim {
                    s += ginv[i][a] * t[a][j][k];
                }
                u[i][j][k] = s;
            }
        }
    }
    let mut v = ten3_zero();
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let mut s = 0.0;
                for a in 0..dim {
                    s += ginv[j][a] * u[i][a][k];
                }
                v[i][j][k] = s;
            }
        }
    }
    let mut total = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let mut s = 0.0;
                for a in 0..dim {
                    s += ginv[k][a] * v[i][j][a];
                }
                total += s * t[i][j][k];
            }
        }
    }
    total
}

/// Trace `g^ij T_ij`.
pub fn trace_cov2(t: &Mat, ginv: &Mat, dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s += ginv[i][j] * t[i][j];
        }
    }
    s
}

/// Eigenvalues of a symmetric `dim` block, ascending.
pub fn sym_eigenvalues(t: &Mat, dim: usize) -> Vec<f64> {
    let m = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (t[i][j] + t[j][i]));
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Positive definiteness of the leading `dim` block.
pub fn is_positive_definite(g: &Mat, dim: usize) -> bool {
    sym_eigenvalues(g, dim).first().is_some_and(|&lo| lo > 0.0)
}

/// Generalized symmetric eigenvalues of `T` with respect to metric `g`
/// (eigenvalues of `g^-1 T`), ascending. Computed on the orthonormal
/// frame components so symmetry is preserved.
pub fn eigenvalues_wrt_metric(t: &Mat, g: &Mat, dim: usize) -> Vec<f64> {
    let frame = orthonormal_frame(g, dim);
    let tf = frame_cov2(t, &frame, dim);
    sym_eigenvalues(&tf, dim)
}

/// Orthonormal frame by Gram-Schmidt on the coordinate basis in index
/// order; the first frame vector points along the first coordinate.
/// Row `a` holds the components `e_a^i`.
pub fn orthonormal_frame(g: &Mat, dim: usize) -> Mat {
    let mut e = mat_zero();
    for a in 0..dim {
        let mut v = [0.0f64; 4];
        v[a] = 1.0;
        for b in 0..a {
            let mut dot = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    dot += g[i][j] * v[i] * e[b][j];
                }
            }
            for i in 0..dim {
                v[i] -= dot * e[b][i];
            }
        }
        let mut n2 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                n2 += g[i][j] * v[i] * v[j];
            }
        }
        assert!(n2 > 0.0, "degenerate metric in frame construction");
        let inv = 1.0 / n2.sqrt();
        for i in 0..dim {
            e[a][i] = v[i] * inv;
        }
    }
    e
}

/// Covariant 2-tensor components in a frame: `T_ab = T_ij e_a^i e_b^j`.
pub fn frame_cov2(t: &Mat, frame: &Mat, dim: usize) -> Mat {
    let mut out = mat_zero();
    for a in 0..dim {
        for b in 0..dim {
            let mut s = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    s += t[i][j] * frame[a][i] * frame[b][j];
                }
            }
            out[a][b] = s;
        }
    }
    out
}

/// Covariant 4-tensor components in a frame.
pub fn frame_cov4(t: &Ten4, frame: &Mat, dim: usize) -> Ten4 {
    let mut out = ten4_zero();
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                for d in 0..dim {
                    let mut s = 0.0;
                    for i in 0..dim {
                        for j in 0..dim {
                            for k in 0..dim {
                                for l in 0..dim {
                                    s += t[i][j][k][l]
                                        * frame[a][i]
                                        * frame[b][j]
                                        * frame[c][k]
                                        * frame[d][l];
                                }
                            }
                        }
                    }
                    out[a][b][c][d] = s;
                }
            }
        }
    }
    out
}

/// Which frame a [`TensorValue`]'s components refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameKind {
    Coordinate,
    Orthonormal,
}

/// Dense multi-index components of a tensor at a point.
///
/// Index layout is row-major over the slots in declaration order;
/// covariant slots come after contravariant ones (e.g. the connection
/// coefficients are stored as `[k][i][j]` for Gamma^k_ij).
#[derive(Clone, Debug)]
pub struct TensorValue {
    pub dim: usize,
    /// (covariant rank, contravariant rank)
    pub valence: (usize, usize),
    pub frame: FrameKind,
    comps: Vec<f64>,
}

impl TensorValue {
    pub fn new(dim: usize, valence: (usize, usize), frame: FrameKind) -> Self {
        let rank = valence.0 + valence.1;
        TensorValue { dim, valence, frame, comps: vec![0.0; dim.pow(rank as u32)] }
    }

    pub fn rank(&self) -> usize {
        self.valence.0 + self.valence.1
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        let mut off = 0;
        for &i in idx {
            debug_assert!(i < self.dim);
            off = off * self.dim + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.comps[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let off = self.offset(idx);
        self.comps[off] = v;
    }

    pub fn components(&self) -> &[f64] {
        &self.comps
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Max deviation from symmetry under swapping slots `a` and `b`
    /// (`sign = 1`) or antisymmetry (`sign = -1`), relative to the
    /// largest component.
    pub fn symmetry_defect(&self, a: usize, b: usize, sign: f64) -> f64 {
        let rank = self.rank();
        let scale = self.max_abs().max(1e-300);
        let mut idx = vec![0usize; rank];
        let mut worst = 0.0f64;
        let total = self.comps.len();
        for flat in 0..total {
            let mut rem = flat;
            for slot in (0..rank).rev() {
                idx[slot] = rem % self.dim;
                rem /= self.dim;
            }
            let mut swapped = idx.clone();
            swapped.swap(a, b);
            let defect = (self.get(&idx) - sign * self.get(&swapped)).abs();
            worst = worst.max(defect);
        }
        worst / scale
    }

    pub fn from_mat(m: &Mat, dim: usize, valence: (usize, usize), frame: FrameKind) -> Self {
        let mut t = TensorValue::new(dim, valence, frame);
        for i in 0..dim {
            for j in 0..dim {
                t.set(&[i, j], m[i][j]);
            }
        }
        t
    }

    pub fn from_ten3(m: &Ten3, dim: usize, valence: (usize, usize), frame: FrameKind) -> Self {
        let mut t = TensorValue::new(dim, valence, frame);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t.set(&[i, j, k], m[i][j][k]);
                }
            }
        }
        t
    }

    pub fn from_ten4(m: &Ten4, dim: usize, valence: (usize, usize), frame: FrameKind) -> Self {
        let mut t = TensorValue::new(dim, valence, frame);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        t.set(&[i, j, k, l], m[i][j][k][l]);
                    }
                }
            }
        }
        t
    }

    pub fn to_mat(&self) -> Mat {
        assert_eq!(self.rank(), 2);
        let mut m = mat_zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[i][j] = self.get(&[i, j]);
            }
        }
        m
    }
}
