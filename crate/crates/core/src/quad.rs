//! One-dimensional quadrature: Gauss–Legendre rules with node-doubling
//! refinement, plus an endpoint substitution that regularizes inverse
//! square-root singularities at one or both interval ends.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in ascending order.
///
/// Computed by Newton iteration on the Legendre recurrence; accurate to
/// machine precision for the practical range (`n <= 20_000`).
pub fn gl_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess, descending from +1.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                let (_, d) = legendre_with_deriv(n, z);
                dp = d;
                break;
            }
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        w[i] = weight;
        x[n - 1 - i] = z;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

/// Legendre polynomial `P_n(x)` and its derivative via the three-term
/// recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn cached_nodes(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature node cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(gl_nodes(n)))
        .clone()
}

/// Fixed `n`-point Gauss–Legendre approximation of `∫_a^b f`.
pub fn integrate_fixed(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let nodes = cached_nodes(n);
    let (x, w) = (&nodes.0, &nodes.1);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for i in 0..n {
        sum += w[i] * f(mid + half * x[i]);
    }
    sum * half
}

/// Outcome of an adaptive quadrature run.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the final two refinement levels.
    pub est_error: f64,
    /// Node count of the final rule.
    pub nodes_used: usize,
    /// Whether the doubling sequence met the requested tolerance.
    pub converged: bool,
}

/// Gauss–Legendre quadrature with node-doubling: the rule size doubles
/// from 16 until two consecutive levels agree to `tol` (mixed
/// absolute/relative), or a cap of 8192 nodes is reached.
pub fn integrate_adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> QuadResult {
    let mut n = 16usize;
    let mut prev = integrate_fixed(&mut f, a, b, n);
    loop {
        n *= 2;
        let next = integrate_fixed(&mut f, a, b, n);
        let delta = (next - prev).abs();
        if delta <= tol * next.abs().max(1.0) {
            return QuadResult {
                value: next,
                est_error: delta,
                nodes_used: n,
                converged: true,
            };
        }
        if n >= 8192 {
            return QuadResult {
                value: next,
                est_error: delta,
                nodes_used: n,
                converged: false,
            };
        }
        prev = next;
    }
}

/// Adaptive quadrature of `∫_a^b f` after the substitution
/// `x = a + (b-a)·sin²(u)`, `u ∈ [0, π/2]`.
///
/// The substitution maps an integrand with `1/√(x-a)` or `1/√(b-x)`
/// behaviour (simple zeros of a metric profile at either end) to a smooth
/// function of `u`, restoring spectral convergence. It is harmless for
/// integrands that are already smooth. `f` is never evaluated at the
/// endpoints themselves.
pub fn integrate_endpoint_adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> QuadResult {
    let len = b - a;
    let g = move |u: f64| {
        let s = u.sin();
        f(a + len * s * s) * len * (2.0 * u).sin()
    };
    integrate_adaptive(g, 0.0, std::f64::consts::FRAC_PI_2, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_order_nodes_match_closed_forms() {
        let (x, w) = gl_nodes(2);
        assert_relative_eq!(x[0], -(1.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(x[1], (1.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(w[1], 1.0, epsilon = 1e-15);

        let (x, w) = gl_nodes(3);
        assert_relative_eq!(x[0], -(0.6f64).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(x[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(w[0], 5.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(w[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn n_point_rule_is_exact_to_degree_2n_minus_1() {
        // 5 nodes integrate x^9 exactly but not x^10.
        let exact = integrate_fixed(&mut |x| x.powi(9), 0.0, 1.0, 5);
        assert_relative_eq!(exact, 0.1, epsilon = 1e-15);
        let inexact = integrate_fixed(&mut |x| x.powi(10), 0.0, 1.0, 5);
        assert!((inexact - 1.0 / 11.0).abs() > 1e-9);
    }

    #[test]
    fn adaptive_reaches_requested_tolerance() {
        let r = integrate_adaptive(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!(r.converged);
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-12);
        assert!(r.est_error <= 1e-12 * 2.0f64.max(1.0));
    }

    #[test]
    fn endpoint_map_handles_inverse_sqrt_singularities() {
        // Both endpoints singular: ∫_0^1 dx/√(x(1-x)) = π.
        let r = integrate_endpoint_adaptive(|x| 1.0 / (x * (1.0 - x)).sqrt(), 0.0, 1.0, 1e-12);
        assert!(r.converged);
        assert_relative_eq!(r.value, std::f64::consts::PI, epsilon = 1e-10);
        // Square-root endpoint behaviour: ∫_{-1}^{1} √(1-x²) dx = π/2.
        let r = integrate_endpoint_adaptive(|x| (1.0 - x * x).sqrt(), -1.0, 1.0, 1e-12);
        assert!(r.converged);
        assert_relative_eq!(r.value, std::f64::consts::FRAC_PI_2, epsilon = 1e-10);
    }

    #[test]
    fn endpoint_map_is_harmless_for_smooth_integrands() {
        let r = integrate_endpoint_adaptive(|x| x.exp(), 0.0, 1.0, 1e-12);
        assert!(r.converged);
        assert_relative_eq!(r.value, std::f64::consts::E - 1.0, epsilon = 1e-11);
    }
}
