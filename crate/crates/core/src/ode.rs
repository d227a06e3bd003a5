//! Two ordinary differential equations from the rigidity analysis.
//!
//! **Profile ODE** (warped-product rigidity): the potential profile of
//! a putative non-model solution satisfies
//!
//! ```text
//!   2x″ = c/x² − 2x,        y = x′,
//! ```
//!
//! a one-degree-of-freedom Hamiltonian system conserving
//! `H(x, y) = y² + c/x + x²`. Orbits started at a turning point
//! `(x₀, 0)` with `x₀ ≠ (c/2)^{1/3}` oscillate between `x₀` and a
//! second turning point `x*` with `c = x₀·x*·(x₀ + x*)` (energy
//! conservation). The Gauss–Bonnet evaluation
//! `(2π/x″(0))·[x − c/(2x²)]₀^{u*}` then fails to close to `4π` —
//! the numerical witness [`closing_gap`] of the rigidity argument:
//! closure would force `c = 2x(u*)³`, contradicting `x(u*) > (c/2)^{1/3}`.
//!
//! **Singular model ODE** (edge operator): `α″ + α′/s − λα = F` on
//! `(0, s_max]`, regular at the axis. [`singular_model_solve`] iterates
//! the equivalent integral identity
//! `α′(s) = (1/s)∫₀ˢ t(λα + F) dt` on a graded mesh; regularity gives
//! `α′(0) = 0` and `α″(0) = (λα(0) + F(0))/2`.

use crate::par;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("trajectory blew up at u = {u}: x = {x}")]
    Blowup { u: f64, x: f64 },
    #[error("no turning point found within u_max = {u_max}")]
    NoTurningPoint { u_max: f64 },
    #[error(
        "fixed-point iteration is not a contraction on this interval \
         ({segments_needed} segments would be required; reduce s_max or λ)"
    )]
    NonContraction { segments_needed: usize },
}

/// One sample along a profile orbit.
#[derive(Clone, Copy, Debug)]
pub struct ProfileState {
    /// arc parameter
    pub u: f64,
    /// profile value (the potential V)
    pub x: f64,
    /// profile derivative V′
    pub y: f64,
    /// integration constant of the profile equation
    pub c: f64,
}

/// `x″ = (c/x² − 2x)/2`
pub fn profile_accel(c: f64, x: f64) -> f64 {
    (c / (x * x) - 2.0 * x) / 2.0
}

/// Conserved energy `H = y² + c/x + x²`.
pub fn profile_energy(c: f64, x: f64, y: f64) -> f64 {
    y * y + c / x + x * x
}

/// The center of the phase portrait, `(c/2)^{1/3}`.
pub fn profile_center(c: f64) -> f64 {
    (c / 2.0).powf(1.0 / 3.0)
}

/// The second turning point from energy conservation:
/// `c/x₀ + x₀² = c/x* + x*²` ⟹ `x* = [−x₀ + √(x₀² + 4c/x₀)]/2`.
pub fn turning_point_exact(c: f64, x0: f64) -> f64 {
    (-x0 + (x0 * x0 + 4.0 * c / x0).sqrt()) / 2.0
}

#[derive(Clone, Copy, Debug)]
pub struct TurningPoint {
    pub u: f64,
    pub x: f64,
}

/// An integrated orbit of the profile equation.
#[derive(Clone, Debug)]
pub struct Orbit {
    /// accepted integration steps, starting at `(0, x₀, 0)`
    pub states: Vec<ProfileState>,
    /// first `u > 0` with `y = 0`, located by dense output + bisection
    /// (`None` for the stationary orbit, or if `u_max` was too short a
    /// window — the latter is reported as an error by the callers that
    /// need the turning point)
    pub turning: Option<TurningPoint>,
    /// initial energy `H(0)`
    pub h0: f64,
    /// max |H(u) − H(0)| over all accepted states
    pub h_drift: f64,
}

fn rk4_step(c: f64, x: f64, y: f64, h: f64) -> (f64, f64) {
    let k1 = (y, profile_accel(c, x));
    let k2 = (y + 0.5 * h * k1.1, profile_accel(c, x + 0.5 * h * k1.0));
    let k3 = (y + 0.5 * h * k2.1, profile_accel(c, x + 0.5 * h * k2.0));
    let k4 = (y + h * k3.1, profile_accel(c, x + h * k3.0));
    (
        x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// Cubic Hermite value of y inside a step, `t ∈ [0, 1]`.
fn hermite_y(y0: f64, dy0: f64, y1: f64, dy1: f64, h: f64, t: f64) -> f64 {
    let (t2, t3) = (t * t, t * t * t);
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + dy0 * h * (t3 - 2.0 * t2 + t)
        + y1 * (-2.0 * t3 + 3.0 * t2)
        + dy1 * h * (t3 - t2)
}

/// Integrate the profile equation from `(x₀, y = 0)` with adaptive
/// step-doubling RK4, conserving `H` to ~1e−12 per unit arc length and
/// locating the first turning point to better than 1e−10 in `u`.
///
/// Preconditions: `c > 0`, `x₀ > 0` (asserted).
pub fn integrate_profile(c: f64, x0: f64, u_max: f64) -> Result<Orbit, OdeError> {
    assert!(c > 0.0 && x0 > 0.0 && u_max > 0.0, "need c, x0, u_max > 0");
    let h0 = profile_energy(c, x0, 0.0);

    // stationary orbit: the center of the phase portrait
    if profile_accel(c, x0).abs() < 1e-13 * (1.0 + x0) {
        let states = (0..=16)
            .map(|i| ProfileState { u: u_max * i as f64 / 16.0, x: x0, y: 0.0, c })
            .collect();
        return Ok(Orbit { states, turning: None, h0, h_drift: 0.0 });
    }

    let mut states = vec![ProfileState { u: 0.0, x: x0, y: 0.0, c }];
    let (mut u, mut x, mut y) = (0.0, x0, 0.0);
    let mut h = 1e-3f64;
    let mut drift = 0.0f64;
    let mut turning = None;
    while u < u_max {
        let hs = h.min(u_max - u);
        let (x1, y1) = rk4_step(c, x, y, hs);
        let (xa, ya) = rk4_step(c, x, y, hs / 2.0);
        let (x2, y2) = rk4_step(c, xa, ya, hs / 2.0);
        if !(x2.is_finite() && y2.is_finite()) || x2 <= 0.0 {
            return Err(OdeError::Blowup { u: u + hs, x: x2 });
        }
        let err = ((x2 - x1).abs()).max((y2 - y1).abs()) / 15.0;
        let tol = 1e-12 * (1.0 + x.abs() + y.abs());
        if err <= tol {
            // turning point: y changes sign across the accepted step
            // (y(0) = 0 exactly, so require a strict interior crossing)
            if turning.is_none() && u > 0.0 && (y * y2 < 0.0 || y2 == 0.0) {
                let dy0 = profile_accel(c, x);
                let dy1 = profile_accel(c, x2);
                // bracket on the Hermite interpolant of y
                let (mut ta, mut tb) = (0.0, 1.0);
                for _ in 0..80 {
                    let tm = 0.5 * (ta + tb);
                    let ym = hermite_y(y, dy0, y2, dy1, hs, tm);
                    if ym == 0.0 {
                        ta = tm;
                        tb = tm;
                        break;
                    }
                    if (ym > 0.0) == (y > 0.0) {
                        ta = tm;
                    } else {
                        tb = tm;
                    }
                }
                // Newton polish on an actual RK4 substep from (x, y)
                let mut du = 0.5 * (ta + tb) * hs;
                let mut xs = x;
                for _ in 0..4 {
                    let (xi, yi) = rk4_step(c, x, y, du);
                    xs = xi;
                    let slope = profile_accel(c, xi);
                    if slope.abs() < 1e-300 {
                        break;
                    }
                    du -= yi / slope;
                    du = du.clamp(0.0, hs);
                }
                turning = Some(TurningPoint { u: u + du, x: xs });
            }
            u += hs;
            x = x2;
            y = y2;
            states.push(ProfileState { u, x, y, c });
            drift = drift.max((profile_energy(c, x, y) - h0).abs());
            if turning.is_some() {
                break;
            }
            let grow = if err > 0.0 { 0.9 * (tol / err).powf(0.2) } else { 2.0 };
            h = (hs * grow.clamp(0.5, 2.0)).min(0.02);
        } else {
            h = hs * (0.9 * (tol / err).powf(0.2)).clamp(0.1, 0.5);
            if h < 1e-12 {
                return Err(OdeError::Blowup { u, x });
            }
        }
    }
    Ok(Orbit { states, turning, h0, h_drift: drift })
}

/// Fixed-step RK4 over `[0, u_end]` (for convergence-order checks).
pub fn integrate_profile_fixed(
    c: f64,
    x0: f64,
    u_end: f64,
    steps: usize,
) -> Result<Orbit, OdeError> {
    assert!(c > 0.0 && x0 > 0.0 && u_end > 0.0 && steps > 0);
    let h0 = profile_energy(c, x0, 0.0);
    let h = u_end / steps as f64;
    let (mut x, mut y) = (x0, 0.0);
    let mut states = vec![ProfileState { u: 0.0, x, y, c }];
    let mut drift = 0.0f64;
    for k in 1..=steps {
        let (x1, y1) = rk4_step(c, x, y, h);
        if !(x1.is_finite() && y1.is_finite()) || x1 <= 0.0 {
            return Err(OdeError::Blowup { u: k as f64 * h, x: x1 });
        }
        x = x1;
        y = y1;
        states.push(ProfileState { u: k as f64 * h, x, y, c });
        drift = drift.max((profile_energy(c, x, y) - h0).abs());
    }
    Ok(Orbit { states, turning: None, h0, h_drift: drift })
}

/// The Gauss–Bonnet closure test along one orbit.
#[derive(Clone, Copy, Debug)]
pub struct ClosingGap {
    /// `(2π/x″(0))·[x − c/(2x²)]` evaluated between `0` and `u*`
    pub gb_value: f64,
    /// `|gb_value − 4π|` — strictly positive on every nontrivial orbit
    pub gap: f64,
    pub u_star: f64,
    pub x_star: f64,
    /// `x″(0) = (c/x₀² − 2x₀)/2`, from the ODE (sign-critical)
    pub vpp0: f64,
    /// `|c − 2x(u*)³|` — the closure identity that fails
    pub c_mismatch: f64,
    pub h_drift: f64,
}

/// Integrate one orbit and evaluate the Gauss–Bonnet closure defect.
pub fn closing_gap(c: f64, x0: f64) -> Result<ClosingGap, OdeError> {
    let u_max = 40.0;
    let orbit = integrate_profile(c, x0, u_max)?;
    let turning = orbit
        .turning
        .ok_or(OdeError::NoTurningPoint { u_max })?;
    let g = |x: f64| x - c / (2.0 * x * x);
    let vpp0 = profile_accel(c, x0);
    let gb_value = 2.0 * std::f64::consts::PI / vpp0 * (g(turning.x) - g(x0));
    let four_pi = 4.0 * std::f64::consts::PI;
    Ok(ClosingGap {
        gb_value,
        gap: (gb_value - four_pi).abs(),
        u_star: turning.u,
        x_star: turning.x,
        vpp0,
        c_mismatch: (c - 2.0 * turning.x.powi(3)).abs(),
        h_drift: orbit.h_drift,
    })
}

/// Sweep a `(c, x₀/center)` grid in parallel, preserving order.
pub fn closing_gap_grid(
    cs: &[f64],
    center_fractions: &[f64],
) -> Result<Vec<ClosingGap>, OdeError> {
    let pairs: Vec<(f64, f64)> = cs
        .iter()
        .flat_map(|&c| center_fractions.iter().map(move |&f| (c, f * profile_center(c))))
        .collect();
    par::par_map(&pairs, |&(c, x0)| closing_gap(c, x0))
        .into_iter()
        .collect()
}

/// Converged solution of the singular model equation on `[0, s_max]`.
#[derive(Clone, Debug)]
pub struct SingularSolution {
    /// graded mesh `s_j = s_max·(j/J)²`
    pub s: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `α′` at the mesh nodes (`α′(0) = 0` pinned by regularity)
    pub dalpha: Vec<f64>,
    /// total fixed-point sweeps across all segments
    pub iterations: usize,
    /// final sup-change of the last segment
    pub sup_change: f64,
    /// `α″(0)` recovered by Richardson extrapolation of `α′(s)/s`
    pub alpha2_origin: f64,
}

impl SingularSolution {
    fn node_at_or_above(&self, target: f64) -> usize {
        self.s
            .iter()
            .position(|&s| s >= target)
            .unwrap_or(self.s.len() - 1)
    }
}

/// Solve `α″ + α′/s − λα = F` with `α(0) = α₀`, regular at `s = 0`,
/// by fixed-point iteration of `α′(s) = (1/s)∫₀ˢ t(λα + F) dt` on a
/// graded trapezoid mesh. Intervals too long for a single contraction
/// are marched in segments (each with contraction constant ≤ 1/2,
/// inheriting `(α, α′)` at the joint); more than 64 segments is
/// reported as non-contraction.
pub fn singular_model_solve(
    lambda: f64,
    f: impl Fn(f64) -> f64,
    s_max: f64,
    alpha0: f64,
    nodes: usize,
) -> Result<SingularSolution, OdeError> {
    assert!(s_max > 0.0 && nodes >= 64, "need s_max > 0 and ≥ 64 nodes");
    let j_max = nodes - 1;
    let s: Vec<f64> = (0..=j_max)
        .map(|j| s_max * (j as f64 / j_max as f64).powi(2))
        .collect();
    let fv: Vec<f64> = s.iter().map(|&sj| f(sj)).collect();

    // segment boundaries equally spaced in s² so that
    // |λ|·(s_b² − s_a²)/4 ≤ 1/2 on each segment
    let segments_needed = (lambda.abs() * s_max * s_max / 2.0).ceil().max(1.0) as usize;
    if segments_needed > 64 {
        return Err(OdeError::NonContraction { segments_needed });
    }
    let mut breaks = vec![0usize];
    for k in 1..=segments_needed {
        let target = s_max * ((k as f64 / segments_needed as f64).sqrt());
        let j = s.partition_point(|&v| v < target).min(j_max);
        if j > *breaks.last().unwrap() {
            breaks.push(j);
        }
    }
    if *breaks.last().unwrap() != j_max {
        breaks.push(j_max);
    }

    let mut alpha = vec![alpha0; nodes];
    let mut dalpha = vec![0.0; nodes];
    let mut iterations = 0usize;
    let mut sup_change = 0.0;
    for seg in breaks.windows(2) {
        let (ja, jb) = (seg[0], seg[1]);
        // inherited boundary data at the segment start
        let g0 = s[ja] * dalpha[ja];
        let a0 = alpha[ja];
        let mut change = f64::INFINITY;
        let mut sweeps = 0usize;
        while change >= 1e-12 {
            if sweeps >= 500 {
                return Err(OdeError::NonContraction { segments_needed });
            }
            change = 0.0;
            let mut g = g0;
            let mut prev_w = s[ja] * (lambda * alpha[ja] + fv[ja]);
            let mut a = a0;
            let mut prev_d = dalpha[ja];
            for j in ja + 1..=jb {
                let w = s[j] * (lambda * alpha[j] + fv[j]);
                g += 0.5 * (prev_w + w) * (s[j] - s[j - 1]);
                prev_w = w;
                let d = g / s[j];
                a += 0.5 * (prev_d + d) * (s[j] - s[j - 1]);
                prev_d = d;
                change = change.max((a - alpha[j]).abs());
                alpha[j] = a;
                dalpha[j] = d;
            }
            sweeps += 1;
        }
        iterations += sweeps;
        sup_change = change;
    }

    // α″(0) by three-point Richardson extrapolation of A(s) = α′(s)/s
    // (even function of s: A = α″(0) + B·s² + C·s⁴ + …) at nodes near
    // s_max/8, s_max/16, s_max/32
    let mut sol = SingularSolution {
        s,
        alpha,
        dalpha,
        iterations,
        sup_change,
        alpha2_origin: 0.0,
    };
    let idx = [
        sol.node_at_or_above(s_max / 8.0),
        sol.node_at_or_above(s_max / 16.0),
        sol.node_at_or_above(s_max / 32.0),
    ];
    let mut xs = [0.0; 3]; // s²
    let mut ys = [0.0; 3]; // A(s)
    for (k, &j) in idx.iter().enumerate() {
        xs[k] = sol.s[j] * sol.s[j];
        ys[k] = sol.dalpha[j] / sol.s[j];
    }
    // Neville to s² = 0
    for level in 1..3 {
        for k in 0..3 - level {
            ys[k] = (xs[k + level] * ys[k] - xs[k] * ys[k + 1]) / (xs[k + level] - xs[k]);
        }
    }
    sol.alpha2_origin = ys[0];
    Ok(sol)
}

/// `α′` and `α″` at the center of five (possibly nonuniform) nodes by
/// local polynomial differentiation — used to check the ODE residual
/// of a converged solution.
pub fn five_point_derivatives(s: &[f64; 5], a: &[f64; 5]) -> (f64, f64) {
    let x0 = s[2];
    // divided-difference (Newton form) coefficients
    let mut coef = *a;
    for level in 1..5 {
        for k in (level..5).rev() {
            coef[k] = (coef[k] - coef[k - 1]) / (s[k] - s[k - level]);
        }
    }
    // differentiate the Newton polynomial at x0
    let dx: Vec<f64> = s.iter().map(|&v| x0 - v).collect();
    // p(x) = c0 + c1(x−s0) + c2(x−s0)(x−s1) + …
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (k, &ck) in coef.iter().enumerate().skip(1) {
        // derivative sums over products with one (resp. two) factors removed
        let mut sum1 = 0.0;
        let mut sum2 = 0.0;
        for drop1 in 0..k {
            let mut prod = 1.0;
            for (m, &d) in dx.iter().enumerate().take(k) {
                if m != drop1 {
                    prod *= d;
                }
            }
            sum1 += prod;
            for drop2 in 0..k {
                if drop2 == drop1 {
                    continue;
                }
                let mut prod2 = 1.0;
                for (m, &d) in dx.iter().enumerate().take(k) {
                    if m != drop1 && m != drop2 {
                        prod2 *= d;
                    }
                }
                sum2 += prod2;
            }
        }
        d1 += ck * sum1;
        d2 += ck * sum2;
    }
    (d1, d2)
}
