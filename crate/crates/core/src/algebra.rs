//! Pointwise algebraic inequalities for trace-free and transverse tensors.
//!
//! Two families of checks live here, both over randomly sampled inputs:
//!
//! * the determinant–norm inequality `54 det(A)² ≤ |A|⁶` for trace-free
//!   symmetric 3×3 matrices, with equality exactly when `A` has a
//!   repeated eigenvalue, together with the cubic trace identity
//!   `tr(A³) = 3 det A`;
//! * a refined Kato-type inequality
//!   `|∇|T||² ≤ (3/5)(|∇T|² + |C|²/2)` for symmetric 2-tensors of
//!   constant trace and zero divergence, where
//!   `C(X,Y,Z) = ∇T(X,Y,Z) − ∇T(X,Z,Y)` is the antisymmetrized
//!   derivative.
//!
//! The Kato check operates on first-order jets: a value `T` and a
//! derivative array `T_{ij;k}` constrained by `Σ_i T_{ii;k} = 0`
//! (constant trace) and `Σ_i T_{ik;i} = 0` (zero divergence). Sampled
//! jets are i.i.d. Gaussian before symmetrization and orthogonal
//! projection onto the 12-dimensional constraint subspace, so the law
//! is invariant under frame rotations — which is what makes the
//! frame-independence property test meaningful.

use crate::par::par_map;
use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Symmetric 3×3 value slot of a jet.
pub type Sym3 = Matrix3<f64>;
/// Derivative slot: `dt[i][j][k] = T_{ij;k}`, symmetric in `(i, j)`.
pub type Grad3 = [[[f64; 3]; 3]; 3];

/// The proven Kato-type constant.
pub const KATO_BOUND: f64 = 3.0 / 5.0;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("matrix is not trace-free: |tr| = {trace:e} exceeds 1e-12·|A| = {bound:e}")]
    NotTraceless { trace: f64, bound: f64 },
    #[error("tensor norm {0:e} is too small for the Kato quotient")]
    DegenerateNorm(f64),
}

/// Outcome of the determinant–norm inequality at one matrix.
#[derive(Clone, Copy, Debug)]
pub struct DetCubicCheck {
    /// `54 det(A)²`
    pub lhs: f64,
    /// `|A|⁶` (Frobenius)
    pub rhs: f64,
    /// eigenvalue multiset has a repeat (gap ≤ 1e-8·|A|)
    pub equality: bool,
}

/// `54 det(A)² ≤ |A|⁶` for trace-free symmetric `A`, with equality
/// exactly on matrices with at most two distinct eigenvalues.
pub fn det_cubic_inequality(a: &Sym3) -> Result<DetCubicCheck, AlgebraError> {
    let n2 = a.norm_squared();
    let norm = n2.sqrt();
    let trace = a.trace();
    if trace.abs() > 1e-12 * norm {
        return Err(AlgebraError::NotTraceless {
            trace: trace.abs(),
            bound: 1e-12 * norm,
        });
    }
    let det = a.determinant();
    let mut ev: Vec<f64> = nalgebra::linalg::SymmetricEigen::new(*a)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    let gap = (ev[1] - ev[0]).min(ev[2] - ev[1]);
    Ok(DetCubicCheck {
        lhs: 54.0 * det * det,
        rhs: n2 * n2 * n2,
        equality: gap <= 1e-8 * norm,
    })
}

/// `tr(A³) − 3 det(A)`; identically zero for trace-free symmetric `A`.
pub fn cubic_trace_gap(a: &Sym3) -> f64 {
    (a * a * a).trace() - 3.0 * a.determinant()
}

/// First-order jet of a constant-trace, divergence-free symmetric
/// 2-tensor at a point.
#[derive(Clone, Debug)]
pub struct ConstrainedJet {
    pub t: Sym3,
    pub dt: Grad3,
    pub seed: u64,
}

/// Remove the trace-derivative and divergence parts of an
/// `(i,j)`-symmetric derivative array, orthogonally in the tensor
/// inner product `⟨U, W⟩ = Σ U_{ijk} W_{ijk}`.
///
/// The six constraint representers decouple per derivative index `k`:
/// `A^k_{ijl} = δ_{ij}δ_{lk}` (trace) and
/// `B^k_{ijl} = (δ_{jk}δ_{il} + δ_{ik}δ_{jl})/2` (divergence) satisfy
/// `⟨A^k,A^l⟩ = 3δ_{kl}`, `⟨A^k,B^l⟩ = δ_{kl}`, `⟨B^k,B^l⟩ = 2δ_{kl}`,
/// so each `k` needs one 2×2 solve with the Gram matrix `[[3,1],[1,2]]`.
pub fn project_constraints(u: &mut Grad3) {
    for k in 0..3 {
        let tr: f64 = (0..3).map(|i| u[i][i][k]).sum();
        let div: f64 = (0..3).map(|i| u[i][k][i]).sum();
        let lam_a = (2.0 * tr - div) / 5.0;
        let lam_b = (3.0 * div - tr) / 5.0;
        for i in 0..3 {
            u[i][i][k] -= lam_a;
            u[i][k][i] -= lam_b / 2.0;
            u[k][i][i] -= lam_b / 2.0;
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Draw a constrained jet: Gaussian entries, symmetrized in `(i,j)`,
/// then projected onto the constraint subspace. Bit-for-bit
/// reproducible per seed (stream order: 9 value entries row-major,
/// then 27 derivative entries in `(i,j,k)` order).
pub fn sample_constrained_jet(seed: u64) -> ConstrainedJet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = loop {
        let raw = Sym3::from_fn(|_, _| gaussian(&mut rng));
        let sym = (raw + raw.transpose()) * 0.5;
        if sym.norm() > 1e-6 {
            break sym;
        }
    };
    let mut raw = [[[0.0f64; 3]; 3]; 3];
    for row in &mut raw {
        for col in row.iter_mut() {
            for entry in col.iter_mut() {
                *entry = gaussian(&mut rng);
            }
        }
    }
    let mut dt = [[[0.0f64; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                dt[i][j][k] = 0.5 * (raw[i][j][k] + raw[j][i][k]);
            }
        }
    }
    project_constraints(&mut dt);
    ConstrainedJet { t, dt, seed }
}

/// Outcome of the Kato-type inequality at one jet.
#[derive(Clone, Copy, Debug)]
pub struct KatoCheck {
    /// `|∇|T||² = (1/|T|²) Σ_k (Σ_{ij} T_{ij} T_{ij;k})²`
    pub lhs: f64,
    /// `(3/5)(|∇T|² + |C|²/2)`
    pub rhs: f64,
    /// `lhs / (|∇T|² + |C|²/2)`; compares against 3/5
    pub ratio: f64,
}

/// Evaluate the Kato-type inequality on one jet.
pub fn kato_check(jet: &ConstrainedJet) -> Result<KatoCheck, AlgebraError> {
    let tn2 = jet.t.norm_squared();
    if tn2.sqrt() <= 1e-8 {
        return Err(AlgebraError::DegenerateNorm(tn2.sqrt()));
    }
    let mut lhs = 0.0;
    for k in 0..3 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += jet.t[(i, j)] * jet.dt[i][j][k];
            }
        }
        lhs += s * s;
    }
    lhs /= tn2;
    let mut grad2 = 0.0;
    let mut c2 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                grad2 += jet.dt[i][j][k] * jet.dt[i][j][k];
                let c = jet.dt[i][j][k] - jet.dt[i][k][j];
                c2 += c * c;
            }
        }
    }
    let denom = grad2 + c2 / 2.0;
    Ok(KatoCheck {
        lhs,
        rhs: KATO_BOUND * denom,
        // a parallel jet gives 0 ≤ 0; report its ratio as 0
        ratio: if denom == 0.0 { 0.0 } else { lhs / denom },
    })
}

/// Pull back a jet along the rotation `q`: `T ↦ qᵀTq`,
/// `T_{ij;k} ↦ Σ q_{ai} q_{bj} q_{ck} T_{ab;c}`. Preserves both
/// constraints exactly.
pub fn conjugate_jet(jet: &ConstrainedJet, q: &Matrix3<f64>) -> ConstrainedJet {
    let t = q.transpose() * jet.t * q;
    let mut dt = [[[0.0f64; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        for c in 0..3 {
                            s += q[(a, i)] * q[(b, j)] * q[(c, k)] * jet.dt[a][b][c];
                        }
                    }
                }
                dt[i][j][k] = s;
            }
        }
    }
    ConstrainedJet { t, dt, seed: jet.seed }
}

/// Haar-uniform rotation (normalized Gaussian quaternion).
pub fn haar_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let q = Quaternion::new(
        gaussian(rng),
        gaussian(rng),
        gaussian(rng),
        gaussian(rng),
    );
    UnitQuaternion::new_normalize(q)
        .to_rotation_matrix()
        .into_inner()
}

/// `|C|²` of the eigenframe closed form: for trace-free
/// `diag(λ₁, λ₂, −λ₁−λ₂)` and potential gradient `a`,
/// `|C|² = 4a₁²(λ₁+2λ₂)² + 4a₂²(λ₂+2λ₁)² + 4a₃²(λ₁−λ₂)²`.
pub fn cotton_norm_eigenform(lambda1: f64, lambda2: f64, a: &[f64; 3]) -> f64 {
    4.0 * a[0] * a[0] * (lambda1 + 2.0 * lambda2).powi(2)
        + 4.0 * a[1] * a[1] * (lambda2 + 2.0 * lambda1).powi(2)
        + 4.0 * a[2] * a[2] * (lambda1 - lambda2).powi(2)
}

/// Random trace-free symmetric matrix (Gaussian, symmetrized, trace
/// part removed). Bit-for-bit reproducible per seed.
pub fn sample_traceless_symmetric(seed: u64) -> Sym3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = Sym3::from_fn(|_, _| gaussian(&mut rng));
    let sym = (raw + raw.transpose()) * 0.5;
    sym - Sym3::identity() * (sym.trace() / 3.0)
}

fn sample_seed(base: u64, i: usize) -> u64 {
    // golden-ratio stride keeps per-sample streams distinct and
    // independent of sweep size, so parallel chunking cannot reorder
    base ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Aggregate of a Kato sweep.
#[derive(Clone, Debug)]
pub struct KatoSweep {
    pub samples: usize,
    /// count of `ratio > 3/5 + 1e-12`
    pub violations: usize,
    pub max_ratio: f64,
    /// `(q, ratio-quantile)` at q ∈ {0.5, 0.9, 0.99, 1.0}
    pub quantiles: Vec<(f64, f64)>,
}

/// Evaluate the Kato inequality on `samples` independent jets
/// (parallel by seed; ordered reduction keeps output deterministic).
pub fn kato_sweep(samples: usize, seed: u64) -> KatoSweep {
    let idx: Vec<usize> = (0..samples).collect();
    let mut ratios = par_map(&idx, |&i| {
        let jet = sample_constrained_jet(sample_seed(seed, i));
        kato_check(&jet).expect("sampled jets have |T| > 1e-6").ratio
    });
    let violations = ratios
        .iter()
        .filter(|&&r| r > KATO_BOUND + 1e-12)
        .count();
    ratios.sort_by(f64::total_cmp);
    let at = |q: f64| -> f64 {
        if ratios.is_empty() {
            return f64::NAN;
        }
        let pos = (q * (ratios.len() - 1) as f64).round() as usize;
        ratios[pos.min(ratios.len() - 1)]
    };
    KatoSweep {
        samples,
        violations,
        max_ratio: ratios.last().copied().unwrap_or(f64::NAN),
        quantiles: [0.5, 0.9, 0.99, 1.0].iter().map(|&q| (q, at(q))).collect(),
    }
}

/// Worst change of the Kato ratio under frame conjugation: each jet
/// is conjugated by an independent Haar-random rotation and the ratio
/// recomputed (parallel by seed; ordered reduction keeps output
/// deterministic). The ratio is frame-invariant, so the result is
/// rounding noise.
pub fn frame_invariance_sweep(samples: usize, seed: u64) -> f64 {
    let idx: Vec<usize> = (0..samples).collect();
    par_map(&idx, |&i| {
        let lane = sample_seed(seed, i);
        let jet = sample_constrained_jet(lane);
        let mut rng = ChaCha8Rng::seed_from_u64(lane.wrapping_add(0x5851_F42D_4C95_7F2D));
        let rotated = conjugate_jet(&jet, &haar_rotation(&mut rng));
        let a = kato_check(&jet).expect("sampled jets have |T| > 1e-6").ratio;
        let b = kato_check(&rotated).expect("rotation preserves |T|").ratio;
        (a - b).abs()
    })
    .into_iter()
    .fold(0.0f64, f64::max)
}

/// Aggregate of a determinant-inequality sweep.
#[derive(Clone, Debug)]
pub struct DetSweep {
    pub samples: usize,
    /// count of `lhs > rhs·(1 + 1e-12)`
    pub violations: usize,
    pub max_ratio: f64,
}

/// Evaluate the determinant–norm inequality on `samples` random
/// trace-free symmetric matrices.
pub fn det_cubic_sweep(samples: usize, seed: u64) -> DetSweep {
    let idx: Vec<usize> = (0..samples).collect();
    let ratios = par_map(&idx, |&i| {
        let a = sample_traceless_symmetric(sample_seed(seed, i));
        let c = det_cubic_inequality(&a).expect("sampled matrices are trace-free");
        if c.rhs == 0.0 {
            0.0
        } else {
            c.lhs / c.rhs
        }
    });
    DetSweep {
        samples,
        violations: ratios.iter().filter(|&&r| r > 1.0 + 1e-12).count(),
        max_ratio: ratios.iter().copied().fold(f64::NAN, f64::max),
    }
}

/// Best-effort search for the empirical supremum of the Kato ratio:
/// Nelder–Mead over the 24 free jet parameters (6 value entries, 18
/// raw derivative entries; constraints re-imposed inside the
/// objective), restarted from `starts` random points. Returns the
/// largest ratio found — the bound itself is proven, so this only
/// reports how much of the gap random search can close.
pub fn kato_sup_search(starts: usize, seed: u64) -> f64 {
    let objective = |x: &[f64]| -> f64 {
        let t = Sym3::new(
            x[0], x[1], x[2], //
            x[1], x[3], x[4], //
            x[2], x[4], x[5],
        );
        if t.norm() < 1e-6 {
            return 1.0; // degenerate; worst objective
        }
        let mut dt = [[[0.0f64; 3]; 3]; 3];
        let mut n = 6;
        for i in 0..3 {
            for j in i..3 {
                for k in 0..3 {
                    dt[i][j][k] = x[n];
                    dt[j][i][k] = x[n];
                    n += 1;
                }
            }
        }
        project_constraints(&mut dt);
        let jet = ConstrainedJet { t, dt, seed: 0 };
        -kato_check(&jet).map_or(0.0, |k| k.ratio)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..starts {
        let x0: Vec<f64> = (0..24).map(|_| gaussian(&mut rng)).collect();
        let f = nelder_mead(&objective, &x0, 0.25, 2500);
        best = best.max(-f);
    }
    best
}

/// Minimal Nelder–Mead (standard α=1, γ=2, ρ=½, σ=½ coefficients;
/// axis-aligned initial simplex of edge `step`). Returns the best
/// objective value found within `max_iter` iterations.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize) -> f64 {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[n].1 - simplex[0].1 < 1e-13 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(x, _)| x[d]).sum::<f64>() / n as f64)
            .collect();
        let lerp = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|d| centroid[d] + t * (simplex[n].0[d] - centroid[d]))
                .collect()
        };
        let xr = lerp(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = lerp(-2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = lerp(0.5);
            let fc = f(&xc);
            if fc < simplex[n].1 {
                simplex[n] = (xc, fc);
            } else {
                let x0v = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for d in 0..n {
                        v.0[d] = 0.5 * (v.0[d] + x0v[d]);
                    }
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn frame_sweep_is_rounding_noise_and_deterministic() {
        let a = frame_invariance_sweep(2000, 11);
        assert!(a < 1e-12, "frame deviation {a:e}");
        assert_eq!(a.to_bits(), frame_invariance_sweep(2000, 11).to_bits());
    }

    #[test]
    fn det_inequality_examples() {
        let eq1 = det_cubic_inequality(&Sym3::from_diagonal(&[-2.0, 1.0, 1.0].into())).unwrap();
        assert_eq!(eq1.lhs, 216.0);
        assert_eq!(eq1.rhs, 216.0);
        assert!(eq1.equality);

        let eq2 = det_cubic_inequality(&Sym3::from_diagonal(&[2.0, -1.0, -1.0].into())).unwrap();
        assert_eq!(eq2.lhs, eq2.rhs);
        assert!(eq2.equality);

        let zero = det_cubic_inequality(&Sym3::zeros()).unwrap();
        assert_eq!(zero.lhs, 0.0);
        assert_eq!(zero.rhs, 0.0);
        assert!(zero.equality);

        let strict = det_cubic_inequality(&Sym3::from_diagonal(&[1.0, -1.0, 0.0].into())).unwrap();
        assert_eq!(strict.lhs, 0.0);
        assert_eq!(strict.rhs, 8.0);
        assert!(!strict.equality);
    }

    #[test]
    fn det_inequality_rejects_nonzero_trace() {
        assert!(matches!(
            det_cubic_inequality(&Sym3::identity()),
            Err(AlgebraError::NotTraceless { .. })
        ));
    }

    #[test]
    fn det_sweep_has_no_violations() {
        let s = det_cubic_sweep(20_000, 11);
        assert_eq!(s.violations, 0);
        assert!(s.max_ratio <= 1.0 + 1e-12);
        // generic matrices come close to but below equality somewhere
        assert!(s.max_ratio > 0.9, "max ratio {}", s.max_ratio);
    }

    #[test]
    fn sampler_satisfies_constraints_and_is_deterministic() {
        for seed in 0..500u64 {
            let j = sample_constrained_jet(seed);
            for k in 0..3 {
                let tr: f64 = (0..3).map(|i| j.dt[i][i][k]).sum();
                let div: f64 = (0..3).map(|i| j.dt[i][k][i]).sum();
                assert!(tr.abs() < 1e-14, "trace residual {tr:e}");
                assert!(div.abs() < 1e-14, "divergence residual {div:e}");
            }
            assert!(j.t.norm() > 1e-6);
        }
        let a = sample_constrained_jet(42);
        let b = sample_constrained_jet(42);
        assert_eq!(a.t, b.t);
        for i in 0..3 {
            for jj in 0..3 {
                for k in 0..3 {
                    assert_eq!(a.dt[i][jj][k].to_bits(), b.dt[i][jj][k].to_bits());
                }
            }
        }
    }

    #[test]
    fn sampler_is_unbiased() {
        // empirical mean of each component ≪ its standard deviation
        let n = 1000;
        let mut mean = [[[0.0f64; 3]; 3]; 3];
        let mut mean_sq = [[[0.0f64; 3]; 3]; 3];
        for seed in 0..n {
            let j = sample_constrained_jet(seed);
            for i in 0..3 {
                for jj in 0..3 {
                    for k in 0..3 {
                        mean[i][jj][k] += j.dt[i][jj][k];
                        mean_sq[i][jj][k] += j.dt[i][jj][k] * j.dt[i][jj][k];
                    }
                }
            }
        }
        for i in 0..3 {
            for jj in 0..3 {
                for k in 0..3 {
                    let m = mean[i][jj][k] / n as f64;
                    let var = mean_sq[i][jj][k] / n as f64 - m * m;
                    assert!(
                        m.abs() < 0.1 * var.sqrt(),
                        "component ({i},{jj},{k}): mean {m:e}, sd {:e}",
                        var.sqrt()
                    );
                }
            }
        }
    }

    #[test]
    fn parallel_jet_is_trivially_admissible() {
        let jet = ConstrainedJet {
            t: sample_traceless_symmetric(3),
            dt: [[[0.0; 3]; 3]; 3],
            seed: 3,
        };
        let k = kato_check(&jet).unwrap();
        assert_eq!(k.lhs, 0.0);
        assert_eq!(k.rhs, 0.0);
        assert_eq!(k.ratio, 0.0);
    }

    #[test]
    fn diagonal_family_attains_exactly_one_half() {
        // T = diag(1,−1,0), the only nonzero derivatives T_{11;3} = 1,
        // T_{22;3} = −1: both constraints hold exactly and the ratio
        // evaluates to 1/2 in closed form.
        let mut dt = [[[0.0f64; 3]; 3]; 3];
        dt[0][0][2] = 1.0;
        dt[1][1][2] = -1.0;
        let jet = ConstrainedJet {
            t: Sym3::from_diagonal(&[1.0, -1.0, 0.0].into()),
            dt,
            seed: 0,
        };
        for k in 0..3 {
            let tr: f64 = (0..3).map(|i| jet.dt[i][i][k]).sum();
            let div: f64 = (0..3).map(|i| jet.dt[i][k][i]).sum();
            assert_eq!(tr, 0.0);
            assert_eq!(div, 0.0);
        }
        let k = kato_check(&jet).unwrap();
        assert_eq!(k.ratio, 0.5);
        assert!(k.lhs <= k.rhs);
    }

    #[test]
    fn kato_sweep_has_no_violations() {
        let s = kato_sweep(20_000, 7);
        assert_eq!(s.violations, 0);
        assert!(s.max_ratio <= KATO_BOUND + 1e-12);
        assert!(s.max_ratio > 0.4, "max ratio {}", s.max_ratio);
        assert_eq!(s.quantiles.len(), 4);
        // quantiles are nondecreasing in q
        for w in s.quantiles.windows(2) {
            assert!(w[0].1 <= w[1].1);
        }
    }

    #[test]
    fn kato_is_frame_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..100u64 {
            let jet = sample_constrained_jet(seed);
            let q = haar_rotation(&mut rng);
            let rot = conjugate_jet(&jet, &q);
            // constraints survive conjugation
            for k in 0..3 {
                let tr: f64 = (0..3).map(|i| rot.dt[i][i][k]).sum();
                let div: f64 = (0..3).map(|i| rot.dt[i][k][i]).sum();
                assert!(tr.abs() < 1e-13 && div.abs() < 1e-13);
            }
            let a = kato_check(&jet).unwrap();
            let b = kato_check(&rot).unwrap();
            assert_relative_eq!(a.lhs, b.lhs, max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(a.rhs, b.rhs, max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(a.ratio, b.ratio, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigenframe_norm_examples() {
        // repeated eigenvalue with aligned gradient: conformally flat
        assert_eq!(cotton_norm_eigenform(1.0, 1.0, &[0.0, 0.0, 1.0]), 0.0);
        // vanishing gradient
        assert_eq!(cotton_norm_eigenform(0.3, -0.7, &[0.0, 0.0, 0.0]), 0.0);
        // both closed forms at λ = (2, −1), a = e₁
        let direct = cotton_norm_eigenform(2.0, -1.0, &[1.0, 0.0, 0.0]);
        assert_eq!(direct, 0.0);
        let e = Sym3::from_diagonal(&[2.0, -1.0, -1.0].into());
        let a = nalgebra::Vector3::new(1.0, 0.0, 0.0);
        let alt = 8.0 * e.norm_squared() * a.norm_squared() - 12.0 * (e * a).norm_squared();
        assert_eq!(alt, 0.0);
    }

    #[test]
    fn eigenframe_norm_matches_invariant_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let l1: f64 = rng.random_range(-2.0..2.0);
            let l2: f64 = rng.random_range(-2.0..2.0);
            let a = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let e = Sym3::from_diagonal(&[l1, l2, -l1 - l2].into());
            let av = nalgebra::Vector3::new(a[0], a[1], a[2]);
            let invariant =
                8.0 * e.norm_squared() * av.norm_squared() - 12.0 * (e * av).norm_squared();
            assert_relative_eq!(
                cotton_norm_eigenform(l1, l2, &a),
                invariant,
                max_relative = 1e-12,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn sup_search_lands_between_diagonal_family_and_bound() {
        let sup = kato_sup_search(100, 2025);
        assert!(
            (0.55..=KATO_BOUND + 1e-9).contains(&sup),
            "empirical sup {sup}"
        );
    }

    proptest! {
        #[test]
        fn det_inequality_holds_on_random_matrices(seed in 0u64..1_000_000) {
            let a = sample_traceless_symmetric(seed);
            let c = det_cubic_inequality(&a).unwrap();
            prop_assert!(c.lhs <= c.rhs * (1.0 + 1e-12));
        }

        #[test]
        fn det_inequality_scales_exactly_by_powers_of_two(seed in 0u64..1_000_000, j in -8i32..8) {
            let a = sample_traceless_symmetric(seed);
            let t = 2.0f64.powi(j);
            let base = det_cubic_inequality(&a).unwrap();
            let scaled = det_cubic_inequality(&(a * t)).unwrap();
            let t6 = t.powi(6);
            prop_assert_eq!((base.lhs * t6).to_bits(), scaled.lhs.to_bits());
            prop_assert_eq!((base.rhs * t6).to_bits(), scaled.rhs.to_bits());
            prop_assert_eq!(base.equality, scaled.equality);
        }

        #[test]
        fn cubic_trace_identity(seed in 0u64..1_000_000) {
            let a = sample_traceless_symmetric(seed);
            let scale = a.norm().powi(3).max(1.0);
            prop_assert!(cubic_trace_gap(&a).abs() <= 1e-12 * scale);
        }

        #[test]
        fn kato_holds_on_random_jets(seed in 0u64..1_000_000) {
            let k = kato_check(&sample_constrained_jet(seed)).unwrap();
            prop_assert!(k.ratio <= KATO_BOUND + 1e-12);
        }
    }
}
