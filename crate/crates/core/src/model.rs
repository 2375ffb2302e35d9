//! Physical parameters, the four-dimensional recurrence map `F`, the scalar
//! maps it reduces to on the symmetric slice, and membership residuals for
//! the two invariant sets M1 and M2.
//!
//! Conventions: `a = exp(J1/T)`, `b = exp(J2/T)`, `alpha = sqrt(a)`,
//! `a_tilde = a^-2 b^-6`, `b_tilde = b^4`. A state `u = (u1, u2, u3, u4)`
//! holds the branch weights for the top spin pairs `(+,+), (+,-), (-,+), (-,-)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible value of `a`, `b` and `b^4`.
pub const PARAM_MIN: f64 = 1e-150;
/// Largest admissible value of `a`, `b` and `b^4`.
pub const PARAM_MAX: f64 = 1e150;

/// Coupling constants and temperature (energy units, `k_B = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub j1: f64,
    pub j2: f64,
    pub temperature: f64,
}

impl Couplings {
    pub fn new(j1: f64, j2: f64, temperature: f64) -> Result<Self> {
        let c = Couplings {
            j1,
            j2,
            temperature,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.j1.is_finite() || !self.j2.is_finite() {
            return Err(Error::InvalidInput(format!(
                "couplings must be finite (j1 = {}, j2 = {})",
                self.j1, self.j2
            )));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::InvalidInput(format!(
                "temperature must be positive and finite, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn params(&self) -> Result<BoltzmannParams> {
        derive_params(self)
    }
}

/// Boltzmann weights derived from [`Couplings`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoltzmannParams {
    a: f64,
    b: f64,
    alpha: f64,
    a_tilde: f64,
    b_tilde: f64,
}

fn check_range(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && (PARAM_MIN..=PARAM_MAX).contains(&v) {
        Ok(())
    } else {
        Err(Error::Range(format!(
            "{name} = {v:e} outside [{PARAM_MIN:e}, {PARAM_MAX:e}]"
        )))
    }
}

impl BoltzmannParams {
    /// Builds the parameter set directly from the weights `a` and `b`.
    pub fn from_weights(a: f64, b: f64) -> Result<Self> {
        check_range("a", a)?;
        check_range("b", b)?;
        let b_tilde = b.powi(4);
        check_range("b^4", b_tilde)?;
        let a_tilde = 1.0 / (a * a * b.powi(6));
        if !(a_tilde.is_finite() && a_tilde > 0.0) {
            return Err(Error::Range(format!(
                "a^-2 b^-6 not representable for a = {a:e}, b = {b:e}"
            )));
        }
        Ok(BoltzmannParams {
            a,
            b,
            alpha: a.sqrt(),
            a_tilde,
            b_tilde,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn a_tilde(&self) -> f64 {
        self.a_tilde
    }
    pub fn b_tilde(&self) -> f64 {
        self.b_tilde
    }
}

/// Maps couplings to Boltzmann weights, rejecting values that would overflow.
pub fn derive_params(c: &Couplings) -> Result<BoltzmannParams> {
    c.validate()?;
    let beta = c.beta();
    let a = (c.j1 * beta).exp();
    let b = (c.j2 * beta).exp();
    BoltzmannParams::from_weights(a, b)
}

/// A point of the open positive orthant of R^4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector([f64; 4]);

impl StateVector {
    pub fn new(u1: f64, u2: f64, u3: f64, u4: f64) -> Result<Self> {
        Self::from_array([u1, u2, u3, u4])
    }

    pub fn from_array(u: [f64; 4]) -> Result<Self> {
        for (i, &x) in u.iter().enumerate() {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "state component u{} = {x:e} must be positive and finite",
                    i + 1
                )));
            }
        }
        Ok(StateVector(u))
    }

    /// Wraps an array produced by the library itself. Components may have
    /// underflowed to zero during long iterations; callers that need strict
    /// positivity re-validate with [`StateVector::from_array`].
    pub(crate) fn from_raw(u: [f64; 4]) -> Self {
        StateVector(u)
    }

    /// A point of M1 with the given ratio `u1/u2` and `u2 = 1`.
    pub fn symmetric(x: f64) -> Result<Self> {
        Self::new(x, 1.0, 1.0, x)
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    /// `v_i = sqrt(u_i)`.
    pub fn v(&self) -> [f64; 4] {
        self.0.map(f64::sqrt)
    }

    pub fn max_norm(&self) -> f64 {
        max_norm(&self.0)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::from_array(self.0.map(|x| x * lambda))
    }

    /// The global spin flip `(u1, u2, u3, u4) -> (u4, u3, u2, u1)`.
    pub fn flipped(&self) -> Self {
        let [u1, u2, u3, u4] = self.0;
        StateVector([u4, u3, u2, u1])
    }

    pub fn ratio(&self) -> f64 {
        self.0[0] / self.0[1]
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn max_norm(u: &[f64; 4]) -> f64 {
    u.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub(crate) fn max_diff(u: &[f64; 4], w: &[f64; 4]) -> f64 {
    u.iter()
        .zip(w)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Unchecked `F(u)`.
#[inline]
pub(crate) fn f_map_raw(p: &BoltzmannParams, u: &[f64; 4]) -> [f64; 4] {
    let (a, b) = (p.a, p.b);
    let ib = 1.0 / b;
    let [u1, u2, u3, u4] = *u;
    let s1 = b * u1 + ib * u2;
    let s2 = b * u3 + ib * u4;
    let s3 = ib * u1 + b * u2;
    let s4 = ib * u3 + b * u4;
    [a * s1 * s1, s2 * s2 / a, s3 * s3 / a, a * s4 * s4]
}

/// The recurrence map `F`.
pub fn apply_f_map(p: &BoltzmannParams, u: &StateVector) -> Result<StateVector> {
    let out = f_map_raw(p, &u.0);
    for (i, &x) in out.iter().enumerate() {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::MapOverflow {
                component: i + 1,
                value: x,
            });
        }
    }
    Ok(StateVector(out))
}

/// `f(x) = a^2 ((1 + b^2 x) / (b^2 + x))^2`, the ratio map `u1/u2` on M1.
pub fn scalar_f(p: &BoltzmannParams, x: f64) -> f64 {
    let b2 = p.b * p.b;
    let r = (1.0 + b2 * x) / (b2 + x);
    p.a * p.a * r * r
}

/// Closed-form derivative `f'(x) = 2 a^2 (b^4 - 1)(1 + b^2 x) / (b^2 + x)^3`.
pub fn scalar_f_prime(p: &BoltzmannParams, x: f64) -> f64 {
    let b2 = p.b * p.b;
    let d = b2 + x;
    2.0 * p.a * p.a * (p.b_tilde - 1.0) * (1.0 + b2 * x) / (d * d * d)
}

/// `g = f o f`.
pub fn scalar_g(p: &BoltzmannParams, x: f64) -> f64 {
    scalar_f(p, scalar_f(p, x))
}

/// `x -> f^n(x)`.
pub fn scalar_f_iter(p: &BoltzmannParams, mut x: f64, n: usize) -> f64 {
    for _ in 0..n {
        x = scalar_f(p, x);
    }
    x
}

/// The M2 surface function `phi(x) = (1 + alpha^-1 b x) / (alpha b + (b^2 - b^-2) x)`,
/// so that off-M1 fixed points satisfy `v1 + v4 = phi(v2 + v3)`.
///
/// Fails when the denominator is zero or negative, where no positive
/// `v1 + v4` exists.
pub fn phi(p: &BoltzmannParams, x: f64) -> Result<f64> {
    let (alpha, b) = (p.alpha, p.b);
    let den = alpha * b + (b * b - 1.0 / (b * b)) * x;
    if !(den > 0.0) {
        return Err(Error::PhiPole { x });
    }
    Ok((1.0 + b * x / alpha) / den)
}

/// Relative distance from M1: `max(|u1 - u4|, |u2 - u3|) / max_i u_i`.
pub fn m1_residual(u: &StateVector) -> f64 {
    let [u1, u2, u3, u4] = u.0;
    (u1 - u4).abs().max((u2 - u3).abs()) / u.max_norm()
}

/// Relative distance from M2: `|sqrt(u1) + sqrt(u4) - phi(sqrt(u2) + sqrt(u3))| / sqrt(max_i u_i)`.
///
/// M2 is not a cone, so this is only meaningful for unnormalized fixed points.
pub fn m2_residual(p: &BoltzmannParams, u: &StateVector) -> Result<f64> {
    let [v1, v2, v3, v4] = u.v();
    let rhs = phi(p, v2 + v3)?;
    Ok((v1 + v4 - rhs).abs() / u.max_norm().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(a: f64, b: f64) -> BoltzmannParams {
        BoltzmannParams::from_weights(a, b).unwrap()
    }

    #[test]
    fn derive_params_identity() {
        let p = derive_params(&Couplings::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        for v in [p.a(), p.b(), p.alpha(), p.a_tilde(), p.b_tilde()] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn derive_params_substitution() {
        let p = derive_params(&Couplings::new(2f64.ln(), 0.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(p.a(), 2.0, max_relative = 1e-15);
        assert_eq!(p.b(), 1.0);
        assert_relative_eq!(p.a_tilde(), 0.25, max_relative = 1e-15);

        let p = derive_params(&Couplings::new(1.0, 1.0, 0.5).unwrap()).unwrap();
        assert_relative_eq!(p.a(), 1f64.exp().powi(2), max_relative = 1e-15);
        assert_relative_eq!(p.b_tilde(), 2980.957987041728, max_relative = 1e-13);
    }

    #[test]
    fn derive_params_rejects_overflow() {
        let c = Couplings::new(400.0, 0.0, 1.0).unwrap();
        assert!(matches!(derive_params(&c), Err(Error::Range(_))));
        // b^4 leaves the range before b does
        let c = Couplings::new(0.0, 100.0, 1.0).unwrap();
        assert!(matches!(derive_params(&c), Err(Error::Range(_))));
        assert!(Couplings::new(0.0, 0.0, 0.0).is_err());
        assert!(Couplings::new(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn f_map_examples() {
        let u = StateVector::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let out = apply_f_map(&params(1.0, 1.0), &u).unwrap();
        assert_eq!(out.as_array(), [4.0; 4]);
        let out = apply_f_map(&params(2.0, 1.0), &u).unwrap();
        assert_eq!(out.as_array(), [8.0, 2.0, 2.0, 8.0]);
        let out = apply_f_map(&params(1.0, 2.0), &u).unwrap();
        assert_eq!(out.as_array(), [6.25; 4]);
    }

    #[test]
    fn f_map_reports_overflow_component() {
        let p = params(1e150, 1.0);
        let u = StateVector::new(1e100, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            apply_f_map(&p, &u),
            Err(Error::MapOverflow { component: 1, .. })
        ));
    }

    #[test]
    fn scalar_f_examples() {
        assert_eq!(scalar_f(&params(1.0, 1.0), 5.0), 1.0);
        assert_relative_eq!(
            scalar_f(&params(1.0, 3f64.sqrt()), 1.0),
            1.0,
            max_relative = 1e-15
        );
        assert_eq!(scalar_f(&params(2.0, 1.0), 7.0), 4.0);
        assert_eq!(scalar_g(&params(1.0, 1.0), 3.0), 1.0);
    }

    #[test]
    fn scalar_f_prime_examples() {
        assert_eq!(scalar_f_prime(&params(1.7, 1.0), 3.3), 0.0);
        assert_relative_eq!(
            scalar_f_prime(&params(1.0, 2f64.sqrt()), 1.0),
            2.0 / 3.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn f_prime_matches_finite_differences_on_log_grid() {
        for &(a, b) in &[(1.0, 2.0), (0.3, 0.6), (3.0, 1.3), (1.0, 0.2)] {
            let p = params(a, b);
            for k in 0..=60 {
                let x = 10f64.powf(-3.0 + 6.0 * k as f64 / 60.0);
                let h = 1e-6 * x;
                let fd = (scalar_f(&p, x + h) - scalar_f(&p, x - h)) / (2.0 * h);
                let exact = scalar_f_prime(&p, x);
                let scale = exact.abs().max(1e-300);
                assert!(
                    (fd - exact).abs() / scale <= 1e-5,
                    "a={a} b={b} x={x}: fd={fd} exact={exact}"
                );
            }
        }
    }

    #[test]
    fn phi_examples() {
        let p = params(1.0, 1.0);
        assert_eq!(phi(&p, 0.0).unwrap(), 1.0);
        assert_eq!(phi(&p, 2.5).unwrap(), 3.5);
        let p = params(2.0, 2.0);
        let alpha = 2f64.sqrt();
        let expected = (1.0 + 2.0 / alpha) / (2.0 * alpha + 3.75);
        assert_relative_eq!(phi(&p, 1.0).unwrap(), expected, max_relative = 1e-15);
    }

    #[test]
    fn phi_pole_for_b_below_one() {
        let p = params(1.0, 0.5);
        // pole at alpha b / (b^-2 - b^2) = 0.5 / 3.75
        let pole = 0.5 / 3.75;
        assert!(phi(&p, 0.5 * pole).is_ok());
        assert!(matches!(phi(&p, pole), Err(Error::PhiPole { .. })));
        assert!(phi(&p, 2.0 * pole).is_err());
    }

    #[test]
    fn residual_examples() {
        let u = StateVector::new(1.0, 2.0, 2.0, 1.0).unwrap();
        assert_eq!(m1_residual(&u), 0.0);
        let u = StateVector::new(1.0, 2.0, 2.0, 3.0).unwrap();
        assert_relative_eq!(m1_residual(&u), 2.0 / 3.0, max_relative = 1e-15);

        let p = params(1.0, 1.0);
        let u = StateVector::new(1.0, 0.25, 0.25, 0.25).unwrap();
        assert_relative_eq!(m2_residual(&p, &u).unwrap(), 0.5, max_relative = 1e-15);
        // v = (0.5, 0.5, 0.5, 1.5): v1 + v4 = 2 = phi(1)
        let u = StateVector::new(0.25, 0.25, 0.25, 2.25).unwrap();
        assert!(m2_residual(&p, &u).unwrap() < 1e-15);
    }

    #[test]
    fn v_view_is_square_root() {
        let u = StateVector::new(4.0, 9.0, 0.25, 1.0).unwrap();
        assert_eq!(u.v(), [2.0, 3.0, 0.5, 1.0]);
    }

    fn state() -> impl Strategy<Value = [f64; 4]> {
        prop::array::uniform4(-5.0f64..5.0).prop_map(|e| e.map(f64::exp))
    }

    fn weights() -> impl Strategy<Value = (f64, f64)> {
        (-2.0f64..2.0, -1.5f64..1.5).prop_map(|(x, y)| (x.exp(), y.exp()))
    }

    proptest! {
        #[test]
        fn f_is_homogeneous_of_degree_two(u in state(), (a, b) in weights(), ln_lambda in -5.0f64..5.0) {
            let p = params(a, b);
            let lambda = ln_lambda.exp();
            let u = StateVector::from_array(u).unwrap();
            let lhs = apply_f_map(&p, &u.scaled(lambda).unwrap()).unwrap();
            let rhs = apply_f_map(&p, &u).unwrap();
            for i in 0..4 {
                let expected = lambda * lambda * rhs[i];
                prop_assert!((lhs[i] - expected).abs() <= 1e-12 * expected);
            }
        }

        #[test]
        fn m1_is_invariant_and_reduces_to_f(x in -6.0f64..6.0, s in -3.0f64..3.0, (a, b) in weights()) {
            let p = params(a, b);
            let x = x.exp();
            let u = StateVector::symmetric(x).unwrap().scaled(s.exp()).unwrap();
            prop_assert_eq!(m1_residual(&u), 0.0);
            let out = apply_f_map(&p, &u).unwrap();
            prop_assert!(m1_residual(&out) <= 1e-12);
            let fx = scalar_f(&p, x);
            prop_assert!((out.ratio() - fx).abs() <= 1e-12 * fx);
        }

        #[test]
        fn m1_residual_is_scale_invariant(x in -6.0f64..6.0, y in -6.0f64..6.0, s in -5.0f64..5.0) {
            let u = StateVector::new(x.exp(), y.exp(), y.exp(), x.exp()).unwrap();
            prop_assert_eq!(m1_residual(&u.scaled(s.exp()).unwrap()), 0.0);
        }

        #[test]
        fn monotonicity_follows_sign_of_b_minus_one((a, b) in weights()) {
            let p = params(a, b);
            let xs: Vec<f64> = (0..200).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 199.0)).collect();
            for w in xs.windows(2) {
                let (f0, f1) = (scalar_f(&p, w[0]), scalar_f(&p, w[1]));
                let (g0, g1) = (scalar_g(&p, w[0]), scalar_g(&p, w[1]));
                if b > 1.0 {
                    prop_assert!(f1 >= f0);
                } else if b < 1.0 {
                    prop_assert!(f1 <= f0);
                }
                prop_assert!(g1 >= g0 * (1.0 - 1e-14));
            }
        }
    }
}
