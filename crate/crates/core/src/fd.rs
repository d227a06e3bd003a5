//! Central-difference stencils for first through third partials.
//!
//! This is the derivative path for charts without analytic partials and
//! the outer derivative for convergence studies. Steps are chosen per
//! derivative order to balance truncation against rounding: `eps^(1/3)`
//! for first partials, `eps^(1/6)` for second, `eps^(1/7)` for third,
//! each times a caller-provided per-coordinate scale. One Richardson
//! level upgrades every stencil from O(h^2) to O(h^4) when enabled.

const EPS: f64 = f64::EPSILON;

/// Knobs for the stencil engine. `step_factor` rescales every step and
/// exists so convergence studies can drive the step explicitly;
/// `richardson = false` drops to the plain O(h^2) stencils, which is
/// what the step-halving order tests measure.
#[derive(Clone, Copy, Debug)]
pub struct FdOptions {
    pub richardson: bool,
    pub step_factor: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions { richardson: true, step_factor: 1.0 }
    }
}

/// Base relative step for a stencil of total order `order`.
pub fn base_step(order: usize) -> f64 {
    match order {
        1 => EPS.powf(1.0 / 3.0),
        2 => EPS.powf(1.0 / 6.0),
        3 => EPS.powf(1.0 / 7.0),
        _ => panic!("unsupported derivative order {order}"),
    }
}

fn shifted(p: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut q = p.to_vec();
    for &(k, dx) in moves {
        q[k] += dx;
    }
    q
}

/// Plain O(h^2) stencil for the multi-index `multi` (ascending, length
/// 1..=3, entries are coordinate indices, repeats allowed).
fn stencil(f: &dyn Fn(&[f64]) -> f64, p: &[f64], multi: &[usize], h: &[f64]) -> f64 {
    match *multi {
        [a] => {
            let ha = h[a];
            (f(&shifted(p, &[(a, ha)])) - f(&shifted(p, &[(a, -ha)]))) / (2.0 * ha)
        }
        [a, b] if a == b => {
            let ha = h[a];
            (f(&shifted(p, &[(a, ha)])) - 2.0 * f(p) + f(&shifted(p, &[(a, -ha)])))
                / (ha * ha)
        }
        [a, b] => {
            let (ha, hb) = (h[a], h[b]);
            (f(&shifted(p, &[(a, ha), (b, hb)])) - f(&shifted(p, &[(a, ha), (b, -hb)]))
                - f(&shifted(p, &[(a, -ha), (b, hb)]))
                + f(&shifted(p, &[(a, -ha), (b, -hb)])))
                / (4.0 * ha * hb)
        }
        [a, b, c] if a == b && b == c => {
            let ha = h[a];
            (f(&shifted(p, &[(a, 2.0 * ha)])) - 2.0 * f(&shifted(p, &[(a, ha)]))
                + 2.0 * f(&shifted(p, &[(a, -ha)]))
                - f(&shifted(p, &[(a, -2.0 * ha)])))
                / (2.0 * ha * ha * ha)
        }
        [a, b, c] if a == b => {
            // d^2/da^2 then d/dc
            let (ha, hc) = (h[a], h[c]);
            let d2 = |qc: f64| {
                (f(&shifted(p, &[(a, ha), (c, qc)]))
                    - 2.0 * f(&shifted(p, &[(c, qc)]))
                    + f(&shifted(p, &[(a, -ha), (c, qc)])))
                    / (ha * ha)
            };
            (d2(hc) - d2(-hc)) / (2.0 * hc)
        }
        [a, b, c] if b == c => {
            let (ha, hb) = (h[a], h[b]);
            let d2 = |qa: f64| {
                (f(&shifted(p, &[(b, hb), (a, qa)]))
                    - 2.0 * f(&shifted(p, &[(a, qa)]))
                    + f(&shifted(p, &[(b, -hb), (a, qa)])))
                    / (hb * hb)
            };
            (d2(ha) - d2(-ha)) / (2.0 * ha)
        }
        [a, b, c] => {
            let (ha, hb, hc) = (h[a], h[b], h[c]);
            let mut s = 0.0;
            for (sa, sb, sc) in [
                (1.0, 1.0, 1.0),
                (1.0, 1.0, -1.0),
                (1.0, -1.0, 1.0),
                (1.0, -1.0, -1.0),
                (-1.0, 1.0, 1.0),
                (-1.0, 1.0, -1.0),
                (-1.0, -1.0, 1.0),
                (-1.0, -1.0, -1.0),
            ] {
                s += sa * sb * sc
                    * f(&shifted(p, &[(a, sa * ha), (b, sb * hb), (c, sc * hc)]));
            }
            s / (8.0 * ha * hb * hc)
        }
        _ => panic!("unsupported multi-index {multi:?}"),
    }
}

/// Partial derivative of a scalar function for a multi-index of length
/// 1..=3. `scales[k]` is the characteristic length of coordinate `k`
/// (steps are relative to it). The multi-index is sorted internally.
pub fn partial(
    f: &dyn Fn(&[f64]) -> f64,
    p: &[f64],
    multi: &[usize],
    scales: &[f64],
    opts: &FdOptions,
) -> f64 {
    let mut mi: Vec<usize> = multi.to_vec();
    mi.sort_unstable();
    let order = mi.len();
    let rel = base_step(order) * opts.step_factor;
    let mut h = vec![0.0f64; p.len()];
    for k in 0..p.len() {
        h[k] = rel * scales[k];
    }
    let coarse = stencil(f, p, &mi, &h);
    if !opts.richardson {
        return coarse;
    }
    let half: Vec<f64> = h.iter().map(|x| 0.5 * x).collect();
    let fine = stencil(f, p, &mi, &half);
    (4.0 * fine - coarse) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // f(x, y, z) = sin(x) y^3 e^z has every partial in closed form.
    fn f(p: &[f64]) -> f64 {
        p[0].sin() * p[1].powi(3) * p[2].exp()
    }

    const P: [f64; 3] = [0.6, 1.2, -0.3];
    const SCALES: [f64; 3] = [1.0, 1.0, 1.0];

    #[test]
    fn first_partials() {
        let opts = FdOptions::default();
        let exact = P[0].cos() * P[1].powi(3) * P[2].exp();
        let got = partial(&f, &P, &[0], &SCALES, &opts);
        assert_relative_eq!(got, exact, max_relative = 1e-9);
    }

    #[test]
    fn second_partials_mixed_and_diagonal() {
        let opts = FdOptions::default();
        let dxy = P[0].cos() * 3.0 * P[1] * P[1] * P[2].exp();
        assert_relative_eq!(
            partial(&f, &P, &[0, 1], &SCALES, &opts),
            dxy,
            max_relative = 1e-8
        );
        let dyy = P[0].sin() * 6.0 * P[1] * P[2].exp();
        assert_relative_eq!(
            partial(&f, &P, &[1, 1], &SCALES, &opts),
            dyy,
            max_relative = 1e-8
        );
    }

    #[test]
    fn third_partials_all_patterns() {
        let opts = FdOptions::default();
        let cases: [(&[usize], f64); 4] = [
            (&[0, 0, 0], -P[0].cos() * P[1].powi(3) * P[2].exp()),
            (&[0, 0, 1], -P[0].sin() * 3.0 * P[1] * P[1] * P[2].exp()),
            (&[0, 1, 1], P[0].cos() * 6.0 * P[1] * P[2].exp()),
            (&[0, 1, 2], P[0].cos() * 3.0 * P[1] * P[1] * P[2].exp()),
        ];
        for (multi, exact) in cases {
            let got = partial(&f, &P, multi, &SCALES, &opts);
            assert_relative_eq!(got, exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn unsorted_multi_index_is_canonicalized() {
        let opts = FdOptions::default();
        let a = partial(&f, &P, &[2, 0, 1], &SCALES, &opts);
        let b = partial(&f, &P, &[0, 1, 2], &SCALES, &opts);
        assert_eq!(a, b);
    }

    #[test]
    fn plain_stencils_converge_at_second_order() {
        // Halving the step must cut the error by ~4 when Richardson is
        // off and truncation dominates.
        let exact = P[0].cos() * P[1].powi(3) * P[2].exp();
        let err = |factor: f64| {
            let opts = FdOptions { richardson: false, step_factor: factor };
            (partial(&f, &P, &[0], &SCALES, &opts) - exact).abs()
        };
        // Large factors keep us out of the rounding floor: base step for
        // order 1 is ~6e-6, so factor 4e3 gives h ~ 2.4e-2.
        let e1 = err(4.0e3);
        let e2 = err(2.0e3);
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}
