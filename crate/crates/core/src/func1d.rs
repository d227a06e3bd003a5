//! Composable univariate functions with jet evaluation.
//!
//! [`Func1`] is the closed vocabulary of one-dimensional factors that
//! metric components, warping profiles, and conformal factors are built
//! from. Every variant evaluates to a fourth-order [`Jet`], so all
//! derivatives the curvature pipeline consumes are analytic.

use crate::jet::Jet;

/// Symbolic one-variable function, evaluable as a fourth-order jet.
#[derive(Clone, Debug)]
pub enum Func1 {
    Const(f64),
    /// `c[0] + c[1] x + c[2] x^2 + ...`
    Poly(Vec<f64>),
    /// `coeff / x^k` with `k >= 1`.
    InvPow { coeff: f64, k: i32 },
    /// `sin(a x)`
    Sin(f64),
    /// `cos(a x)`
    Cos(f64),
    Sum(Vec<Func1>),
    Prod(Vec<Func1>),
    Scale(f64, Box<Func1>),
    Sqrt(Box<Func1>),
    Recip(Box<Func1>),
    /// `f(x)^alpha`; requires `f > 0` on the domain of use.
    Powf(Box<Func1>, f64),
}

impl Func1 {
    pub fn eval(&self, x: f64) -> f64 {
        self.jet(x).value()
    }

    pub fn jet(&self, x: f64) -> Jet {
        match self {
            Func1::Const(c) => Jet::constant(*c),
            Func1::Poly(c) => poly_jet(c, x),
            Func1::InvPow { coeff, k } => Jet::var(x).powi(-k).scale(*coeff),
            Func1::Sin(a) => Jet::var(x).scale(*a).sin(),
            Func1::Cos(a) => Jet::var(x).scale(*a).cos(),
            Func1::Sum(fs) => fs
                .iter()
                .fold(Jet::constant(0.0), |acc, f| acc.add(&f.jet(x))),
            Func1::Prod(fs) => fs
                .iter()
                .fold(Jet::constant(1.0), |acc, f| acc.mul(&f.jet(x))),
            Func1::Scale(c, f) => f.jet(x).scale(*c),
            Func1::Sqrt(f) => f.jet(x).sqrt(),
            Func1::Recip(f) => f.jet(x).recip(),
            Func1::Powf(f, a) => f.jet(x).powf(*a),
        }
    }

    /// First derivative value, for root bracketing and face data.
    pub fn deriv(&self, x: f64) -> f64 {
        self.jet(x).d[1]
    }

    /// Affine helper `a + b x`.
    pub fn affine(a: f64, b: f64) -> Func1 {
        Func1::Poly(vec![a, b])
    }
}

fn poly_jet(c: &[f64], x: f64) -> Jet {
    // Horner evaluation of p and its first four derivatives.
    let mut d = [0.0; 5];
    for &ck in c.iter().rev() {
        d[4] = d[4] * x + 4.0 * d[3];
        d[3] = d[3] * x + 3.0 * d[2];
        d[2] = d[2] * x + 2.0 * d[1];
        d[1] = d[1] * x + d[0];
        d[0] = d[0] * x + ck;
    }
    Jet { d }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn poly_derivatives_match_closed_form() {
        // p(x) = 2 - 3x + x^3: p' = -3 + 3x^2, p'' = 6x, p''' = 6.
        let p = Func1::Poly(vec![2.0, -3.0, 0.0, 1.0]);
        let x = 1.4;
        let j = p.jet(x);
        assert_relative_eq!(j.d[0], 2.0 - 3.0 * x + x * x * x, max_relative = 1e-15);
        assert_relative_eq!(j.d[1], -3.0 + 3.0 * x * x, max_relative = 1e-15);
        assert_relative_eq!(j.d[2], 6.0 * x, max_relative = 1e-15);
        assert_relative_eq!(j.d[3], 6.0, max_relative = 1e-15);
        assert_eq!(j.d[4], 0.0);
    }

    #[test]
    fn deficit_profile_jet() {
        // f(r) = 1 - r^2 - 2m/r at m = 0.1, r = 0.5:
        //   f  = 1 - 0.25 - 0.4 = 0.35
        //   f' = -2r + 2m/r^2 = -1 + 0.8 = -0.2
        //   f'' = -2 - 4m/r^3 = -2 - 3.2 = -5.2
        let m = 0.1;
        let f = Func1::Sum(vec![
            Func1::Poly(vec![1.0, 0.0, -1.0]),
            Func1::InvPow { coeff: -2.0 * m, k: 1 },
        ]);
        let j = f.jet(0.5);
        assert_relative_eq!(j.d[0], 0.35, max_relative = 1e-15);
        assert_relative_eq!(j.d[1], -0.2, max_relative = 1e-14);
        assert_relative_eq!(j.d[2], -5.2, max_relative = 1e-14);
    }

    #[test]
    fn sqrt_of_sum_matches_fd() {
        let f = Func1::Sqrt(Box::new(Func1::Sum(vec![
            Func1::Poly(vec![1.0, 0.0, -1.0]),
            Func1::InvPow { coeff: -0.2, k: 1 },
        ])));
        let x = 0.55;
        let j = f.jet(x);
        let h = 1e-5;
        let fd1 = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
        let fd2 = (f.eval(x + h) - 2.0 * f.eval(x) + f.eval(x - h)) / (h * h);
        assert_relative_eq!(j.d[1], fd1, max_relative = 1e-9);
        assert_relative_eq!(j.d[2], fd2, max_relative = 1e-5);
    }

    #[test]
    fn scaled_sine_profile() {
        // V(t) = sin(sqrt(3) t)/sqrt(3): V'' = -3 V.
        let s3 = 3.0f64.sqrt();
        let v = Func1::Scale(1.0 / s3, Box::new(Func1::Sin(s3)));
        let t = 0.4;
        let j = v.jet(t);
        assert_relative_eq!(j.d[2], -3.0 * j.d[0], max_relative = 1e-14);
        assert_relative_eq!(j.d[4], 9.0 * j.d[0], max_relative = 1e-13);
    }

    #[test]
    fn powf_chain() {
        // (x^2 + 1)^(1/6) derivative: (1/6)(x^2+1)^(-5/6) * 2x.
        let f = Func1::Powf(Box::new(Func1::Poly(vec![1.0, 0.0, 1.0])), 1.0 / 6.0);
        let x = 0.8;
        let j = f.jet(x);
        let expect = (x * x + 1.0f64).powf(-5.0 / 6.0) * 2.0 * x / 6.0;
        assert_relative_eq!(j.d[1], expect, max_relative = 1e-14);
    }
}
