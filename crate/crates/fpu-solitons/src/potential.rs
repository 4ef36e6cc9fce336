//! Interaction potentials for the one-dimensional chain.
//!
//! Every potential exposed here is normalized so that `V(0) = V'(0) = 0`,
//! `V''(0) = 1`, and `V'''(0) = 1/6`. That normalization pins the
//! long-wavelength limit of the chain to a single canonical form, so solitary
//! waves of any potential in the family share the same small-amplitude
//! asymptotics.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Exponent threshold past which the exponential chain potential is treated
/// as non-physical input rather than silently overflowing.
const EXP_ARG_LIMIT: f64 = 700.0;

/// An interaction potential `V(r)` between neighboring particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// Cubic chain `V(r) = r^2/2 + r^3/36`.
    AlphaFpu,
    /// Exponential chain `V(r) = a b^2 (e^{r/b} - 1 - r/b)`.
    Toda { a: f64, b: f64 },
    /// Harmonic chain `V(r) = r^2/2`; linear dynamics, no solitary waves.
    Quadratic,
}

impl Potential {
    /// The exponential chain with the crate-wide normalization: `a = 1`,
    /// `b = 6`, giving `V(r) = 36 (e^{r/6} - 1 - r/6)`.
    pub fn toda_normalized() -> Self {
        Potential::Toda { a: 1.0, b: 6.0 }
    }

    /// `V(r)`.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Potential::AlphaFpu => 0.5 * r * r + r * r * r / 36.0,
            Potential::Toda { a, b } => {
                let x = r / b;
                a * b * b * (x.exp_m1() - x)
            }
            Potential::Quadratic => 0.5 * r * r,
        }
    }

    /// `V'(r)`.
    #[inline]
    pub fn dv(&self, r: f64) -> f64 {
        match *self {
            Potential::AlphaFpu => r + r * r / 12.0,
            Potential::Toda { a, b } => a * b * (r / b).exp_m1(),
            Potential::Quadratic => r,
        }
    }

    /// `V''(r)`.
    #[inline]
    pub fn d2v(&self, r: f64) -> f64 {
        match *self {
            Potential::AlphaFpu => 1.0 + r / 6.0,
            Potential::Toda { a, b } => a * (r / b).exp(),
            Potential::Quadratic => 1.0,
        }
    }

    /// `(V, V', V'')` with domain checking: exponential arguments beyond
    /// `±700` and non-finite inputs are rejected.
    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        if !r.is_finite() {
            return Err(Error::NonPhysical(format!("potential argument r = {r}")));
        }
        if let Potential::Toda { b, .. } = *self {
            if (r / b).abs() > EXP_ARG_LIMIT {
                return Err(Error::NonPhysical(format!(
                    "exponential chain argument r/b = {} exceeds ±{EXP_ARG_LIMIT}",
                    r / b
                )));
            }
        }
        Ok((self.value(r), self.dv(r), self.d2v(r)))
    }

    /// Checks the crate normalization `V(0)=V'(0)=0`, `V''(0)=1`,
    /// `V'''(0)=1/6` by finite differencing the closed forms.
    pub fn is_normalized(&self) -> bool {
        let h = 1e-5;
        let d3 = (self.d2v(h) - self.d2v(-h)) / (2.0 * h);
        self.value(0.0).abs() < 1e-14
            && self.dv(0.0).abs() < 1e-14
            && (self.d2v(0.0) - 1.0).abs() < 1e-12
            && (d3 - 1.0 / 6.0).abs() < 1e-6
    }

    /// True for potentials whose dynamics support solitary waves (a genuine
    /// cubic term at the origin).
    pub fn is_anharmonic(&self) -> bool {
        !matches!(self, Potential::Quadratic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cubic_chain_closed_forms() {
        let v = Potential::AlphaFpu;
        // Hand-computed at r = 6: V = 18 + 216/36 = 24, V' = 6 + 36/12 = 9,
        // V'' = 1 + 1 = 2.
        let (v0, v1, v2) = v.eval(6.0).unwrap();
        assert_relative_eq!(v0, 24.0, max_relative = 1e-15);
        assert_relative_eq!(v1, 9.0, max_relative = 1e-15);
        assert_relative_eq!(v2, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn all_potentials_share_the_normalization() {
        assert!(Potential::AlphaFpu.is_normalized());
        assert!(Potential::toda_normalized().is_normalized());
        // The harmonic chain matches through second order but has no cubic
        // term, so it fails the third-derivative check.
        assert!(!Potential::Quadratic.is_normalized());
        assert_eq!(Potential::Quadratic.d2v(0.0), 1.0);
    }

    #[test]
    fn exponential_chain_derivative_consistency() {
        let v = Potential::toda_normalized();
        let h = 1e-6;
        for &r in &[-3.0, -0.5, 0.0, 0.7, 4.0] {
            let fd1 = (v.value(r + h) - v.value(r - h)) / (2.0 * h);
            let fd2 = (v.dv(r + h) - v.dv(r - h)) / (2.0 * h);
            assert_relative_eq!(fd1, v.dv(r), max_relative = 1e-8, epsilon = 1e-10);
            assert_relative_eq!(fd2, v.d2v(r), max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn exponential_chain_rejects_overflowing_arguments() {
        let v = Potential::toda_normalized();
        assert!(v.eval(6.0 * 1e4).is_err());
        assert!(v.eval(f64::NAN).is_err());
        assert!(v.eval(100.0).is_ok());
    }

    #[test]
    fn toml_round_trip() {
        for v in [
            Potential::AlphaFpu,
            Potential::toda_normalized(),
            Potential::Quadratic,
        ] {
            let s = toml::to_string(&v).unwrap();
            let back: Potential = toml::from_str(&s).unwrap();
            assert_eq!(v, back);
        }
    }
}
