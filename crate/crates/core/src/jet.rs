//! Fourth-order univariate Taylor jets.
//!
//! A [`Jet`] carries a function value together with its first four
//! derivatives at a point. Arithmetic follows the Leibniz rule and
//! composition follows Faa di Bruno's formula, so any expression built
//! from jets yields exact derivatives (up to rounding) of the composite
//! function. Metric components, warping profiles, and conformal factors
//! are all evaluated through jets, which is what makes the analytic
//! derivative path possible.

/// Value and derivatives `d[k] = f^(k)(x)` for `k = 0..=4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub d: [f64; 5],
}

/// Binomial coefficients C(n, k) for n, k <= 4.
const BINOM: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

impl Jet {
    /// Jet of the identity function at `x`.
    pub fn var(x: f64) -> Self {
        Jet { d: [x, 1.0, 0.0, 0.0, 0.0] }
    }

    /// Jet of a constant.
    pub fn constant(c: f64) -> Self {
        Jet { d: [c, 0.0, 0.0, 0.0, 0.0] }
    }

    pub fn value(&self) -> f64 {
        self.d[0]
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let mut d = [0.0; 5];
        for k in 0..5 {
            d[k] = self.d[k] + o.d[k];
        }
        Jet { d }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let mut d = [0.0; 5];
        for k in 0..5 {
            d[k] = self.d[k] - o.d[k];
        }
        Jet { d }
    }

    pub fn neg(&self) -> Jet {
        let mut d = [0.0; 5];
        for k in 0..5 {
            d[k] = -self.d[k];
        }
        Jet { d }
    }

    pub fn scale(&self, c: f64) -> Jet {
        let mut d = [0.0; 5];
        for k in 0..5 {
            d[k] = c * self.d[k];
        }
        Jet { d }
    }

    /// Leibniz product rule up to order four.
    pub fn mul(&self, o: &Jet) -> Jet {
        let mut d = [0.0; 5];
        for k in 0..5 {
            let mut s = 0.0;
            for j in 0..=k {
                s += BINOM[k][j] * self.d[j] * o.d[k - j];
            }
            d[k] = s;
        }
        Jet { d }
    }

    /// Composition `f(self)` from the outer derivatives
    /// `f_derivs[k] = f^(k)(self.value())` (Faa di Bruno to order four).
    pub fn compose(&self, f: [f64; 5]) -> Jet {
        let g1 = self.d[1];
        let g2 = self.d[2];
        let g3 = self.d[3];
        let g4 = self.d[4];
        let mut d = [0.0; 5];
        d[0] = f[0];
        d[1] = f[1] * g1;
        d[2] = f[2] * g1 * g1 + f[1] * g2;
        d[3] = f[3] * g1 * g1 * g1 + 3.0 * f[2] * g1 * g2 + f[1] * g3;
        d[4] = f[4] * g1 * g1 * g1 * g1
            + 6.0 * f[3] * g1 * g1 * g2
            + f[2] * (3.0 * g2 * g2 + 4.0 * g1 * g3)
            + f[1] * g4;
        Jet { d }
    }

    /// Reciprocal `1/self`; requires a nonzero value.
    pub fn recip(&self) -> Jet {
        let u = self.d[0];
        debug_assert!(u != 0.0, "reciprocal of zero jet value");
        let iu = 1.0 / u;
        // (1/u)^(k) = (-1)^k k! / u^(k+1)
        let f = [
            iu,
            -iu * iu,
            2.0 * iu * iu * iu,
            -6.0 * iu * iu * iu * iu,
            24.0 * iu * iu * iu * iu * iu,
        ];
        self.compose(f)
    }

    pub fn div(&self, o: &Jet) -> Jet {
        self.mul(&o.recip())
    }

    /// Integer power by repeated multiplication (sign-safe for any base).
    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut acc = Jet::constant(1.0);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Real power `self^alpha`; requires a positive value.
    pub fn powf(&self, alpha: f64) -> Jet {
        let u = self.d[0];
        debug_assert!(u > 0.0, "powf of non-positive jet value");
        let mut f = [0.0; 5];
        let mut c = 1.0;
        for (k, fk) in f.iter_mut().enumerate() {
            *fk = c * u.powf(alpha - k as f64);
            c *= alpha - k as f64;
        }
        self.compose(f)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.d[0].sin_cos();
        self.compose([s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.d[0].sin_cos();
        self.compose([c, -s, -c, s, c])
    }

    pub fn exp(&self) -> Jet {
        let e = self.d[0].exp();
        self.compose([e, e, e, e, e])
    }

    pub fn ln(&self) -> Jet {
        let u = self.d[0];
        debug_assert!(u > 0.0, "ln of non-positive jet value");
        let iu = 1.0 / u;
        self.compose([
            u.ln(),
            iu,
            -iu * iu,
            2.0 * iu * iu * iu,
            -6.0 * iu * iu * iu * iu,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Oracle: h(x) = sin(x^2) / sqrt(x + 2), derivatives worked out by
    // hand once and frozen here. At x = 0.7:
    //   u = x^2, s = sin u, c = cos u, w = (x+2)^(-1/2)
    //   h   = s w
    //   h'  = 2x c w - s w / (2(x+2))
    //   (higher orders checked against central differences below)
    #[test]
    fn composite_matches_hand_first_derivative() {
        let x = 0.7;
        let j = Jet::var(x);
        let h = j.powi(2).sin().div(&j.add(&Jet::constant(2.0)).sqrt());
        let u = x * x;
        let (s, c) = u.sin_cos();
        let w = (x + 2.0f64).powf(-0.5);
        let h0 = s * w;
        let h1 = 2.0 * x * c * w - s * w / (2.0 * (x + 2.0));
        assert_relative_eq!(h.d[0], h0, max_relative = 1e-14);
        assert_relative_eq!(h.d[1], h1, max_relative = 1e-13);
    }

    // Cross-check orders 2..4 against high-order central differences of
    // the plain evaluation. Steps chosen so truncation ~ noise.
    #[test]
    fn composite_matches_finite_differences() {
        let f = |x: f64| (x * x).sin() / (x + 2.0).sqrt();
        let jf = |x: f64| {
            let j = Jet::var(x);
            j.powi(2).sin().div(&j.add(&Jet::constant(2.0)).sqrt())
        };
        let x = 0.7;
        let jet = jf(x);
        let h2 = 1e-4;
        let d2 = (f(x + h2) - 2.0 * f(x) + f(x - h2)) / (h2 * h2);
        assert_relative_eq!(jet.d[2], d2, max_relative = 1e-6);
        let h3 = 1e-3;
        let d3 = (f(x + 2.0 * h3) - 2.0 * f(x + h3) + 2.0 * f(x - h3) - f(x - 2.0 * h3))
            / (2.0 * h3 * h3 * h3);
        assert_relative_eq!(jet.d[3], d3, max_relative = 1e-5);
        let h4 = 5e-3;
        let d4 = (f(x + 2.0 * h4) - 4.0 * f(x + h4) + 6.0 * f(x) - 4.0 * f(x - h4)
            + f(x - 2.0 * h4))
            / (h4 * h4 * h4 * h4);
        assert_relative_eq!(jet.d[4], d4, max_relative = 1e-4);
    }

    #[test]
    fn product_rule_consistency() {
        // powi(3) must agree with explicit triple product.
        let j = Jet::var(1.3).sin();
        let a = j.powi(3);
        let b = j.mul(&j).mul(&j);
        for k in 0..5 {
            assert_relative_eq!(a.d[k], b.d[k], max_relative = 1e-13);
        }
    }

    #[test]
    fn recip_and_powf_agree() {
        let j = Jet::var(0.9).add(&Jet::constant(1.5));
        let a = j.recip();
        let b = j.powf(-1.0);
        for k in 0..5 {
            assert_relative_eq!(a.d[k], b.d[k], max_relative = 1e-13);
        }
    }

    #[test]
    fn trig_identity_derivatives() {
        // sin^2 + cos^2 = 1 must hold jet-wise: derivative entries vanish.
        let j = Jet::var(2.1);
        let one = j.sin().powi(2).add(&j.cos().powi(2));
        assert_relative_eq!(one.d[0], 1.0, max_relative = 1e-15);
        for k in 1..5 {
            assert!(one.d[k].abs() < 1e-14, "order {k}: {}", one.d[k]);
        }
    }

    #[test]
    fn exp_ln_roundtrip() {
        let j = Jet::var(1.7);
        let back = j.exp().ln();
        for k in 0..5 {
            assert_relative_eq!(back.d[k], j.d[k], epsilon = 1e-12);
        }
    }
}
