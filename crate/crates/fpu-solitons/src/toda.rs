//! Closed-form solitons of the exponential chain, used as exact references.
//!
//! With the potential `V(r) = 36 (e^{r/6} - 1 - r/6)` the chain is the Toda
//! lattice in disguise, and its pure soliton solutions have tau-function
//! closed forms. In the crate's `(r, p)` variables:
//!
//! ```text
//! r(n, t) = 6 log( tau_{n+2} tau_n / tau_{n+1}^2 )
//! p(n, t) = 6 ( d/dt log tau_{n+1} - d/dt log tau_n )
//! ```
//!
//! where the tau function satisfies the bilinear equation
//! `tau'' tau - (tau')^2 = tau_{n+1} tau_{n-1} - tau_n^2` and is
//!
//! * one soliton: `tau_n = 1 + e^{theta}`,
//! * two solitons: `tau_n = 1 + e^{theta_1} + e^{theta_2} + A e^{theta_1 + theta_2}`,
//!
//! with `theta_i = -2 kappa_i n + 2 sinh(kappa_i) t + delta_i` and the
//! interaction coefficient
//!
//! ```text
//! A = sinh^2((kappa_1 - kappa_2)/2) / sinh^2((kappa_1 + kappa_2)/2).
//! ```
//!
//! A single soliton travels at `c = sinh(kappa)/kappa` with strain profile
//! `6 log(1 + sinh^2(kappa) sech^2(kappa (n - c t - x0)))`. After a collision
//! the slower soliton is retarded by `log A / (2 kappa_1)` and the faster one
//! advanced by `-log A / (2 kappa_2)`.
//!
//! Everything is evaluated through normalized exponent sums: per site the
//! largest exponent is factored out, leaving convex weights over the tau
//! terms. Logarithmic derivatives become weighted means, their time
//! derivatives become weighted variances, and far tails underflow to exact
//! zeros instead of overflowing.

use crate::error::Error;
use crate::field::LatticeField;
use crate::Result;

/// Interaction coefficient of two tau-function solitons.
pub fn interaction_coefficient(kappa1: f64, kappa2: f64) -> f64 {
    let d = 0.5 * (kappa1 - kappa2);
    let s = 0.5 * (kappa1 + kappa2);
    (d.sinh() / s.sinh()).powi(2)
}

/// Per-site statistics of the normalized tau terms.
#[derive(Debug, Clone, Copy)]
struct TauStat {
    /// Largest exponent among the terms.
    m: f64,
    /// Which term attains the maximum.
    arg: usize,
    /// `log` of the normalized sum, in `[0, log 4]`.
    log_w: f64,
    /// Weighted mean of the term time-rates: `d/dt log tau`.
    mean: f64,
    /// Weighted variance of the rates: `d^2/dt^2 log tau`.
    var: f64,
}

fn tau_stat(terms: &[(f64, f64)]) -> TauStat {
    let mut m = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, t) in terms.iter().enumerate() {
        if t.0 > m {
            m = t.0;
            arg = i;
        }
    }
    let mut w = 0.0;
    let mut mean = 0.0;
    for &(e, rate) in terms {
        let q = (e - m).exp();
        w += q;
        mean += q * rate;
    }
    mean /= w;
    let mut var = 0.0;
    for &(e, rate) in terms {
        let q = (e - m).exp() / w;
        var += q * (rate - mean) * (rate - mean);
    }
    TauStat {
        m,
        arg,
        log_w: w.ln(),
        mean,
        var,
    }
}

/// `log( tau_+ tau_- / tau_0^2 )` from the three sites' normalized stats.
///
/// The exponents are affine in the site index, so when one term dominates
/// all three sites the maxima cancel exactly; short-circuiting that case
/// keeps far tails free of the rounding noise of large exponents.
fn log_tau_ratio(s_minus: TauStat, s0: TauStat, s_plus: TauStat) -> f64 {
    let m_comb = if s_minus.arg == s0.arg && s0.arg == s_plus.arg {
        0.0
    } else {
        s_plus.m + s_minus.m - 2.0 * s0.m
    };
    m_comb + s_plus.log_w + s_minus.log_w - 2.0 * s0.log_w
}

/// Shared assembly of the lattice state and its exact time derivative from
/// per-site tau-term lists.
fn assemble<F: Fn(i64) -> Vec<(f64, f64)>>(
    lo: i64,
    hi: i64,
    terms_at: F,
) -> (LatticeField, LatticeField) {
    let len = (hi - lo + 1) as usize;
    // Stats on the extended range [lo, hi + 2] to cover the shifts.
    let stats: Vec<TauStat> = (lo..=hi + 2).map(|n| tau_stat(&terms_at(n))).collect();
    let mut u = LatticeField::zeros(lo, hi);
    let mut du = LatticeField::zeros(lo, hi);
    for i in 0..len {
        let (s0, s1, s2) = (stats[i], stats[i + 1], stats[i + 2]);
        u.r[i] = 6.0 * log_tau_ratio(s0, s1, s2);
        u.p[i] = 6.0 * (s1.mean - s0.mean);
        du.r[i] = 6.0 * (s2.mean + s0.mean - 2.0 * s1.mean);
        du.p[i] = 6.0 * (s1.var - s0.var);
    }
    (u, du)
}

/// A single exact soliton of the exponential chain.
#[derive(Debug, Clone, Copy)]
pub struct TodaSoliton {
    /// Decay parameter; the strain tail falls like `e^{-2 kappa |n|}`.
    pub kappa: f64,
    /// Center of the strain peak at `t = 0`.
    pub x0: f64,
}

impl TodaSoliton {
    pub fn new(kappa: f64, x0: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::bad_input(format!(
                "soliton decay parameter must be positive, got {kappa}"
            )));
        }
        Ok(TodaSoliton { kappa, x0 })
    }

    /// Supersonic speed `sinh(kappa)/kappa`.
    pub fn speed(&self) -> f64 {
        self.kappa.sinh() / self.kappa
    }

    /// Strain-peak position at time `t`.
    pub fn center(&self, t: f64) -> f64 {
        self.x0 + self.speed() * t
    }

    /// Tau phase offset reproducing the requested center.
    fn delta(&self) -> f64 {
        2.0 * self.kappa * (self.x0 + 1.0)
    }

    fn terms(&self, n: i64, t: f64) -> Vec<(f64, f64)> {
        let rate = 2.0 * self.kappa.sinh();
        let theta = -2.0 * self.kappa * n as f64 + rate * t + self.delta();
        vec![(0.0, 0.0), (theta, rate)]
    }

    /// Exact state at time `t` on the window.
    pub fn state(&self, t: f64, lo: i64, hi: i64) -> LatticeField {
        assemble(lo, hi, |n| self.terms(n, t)).0
    }

    /// Exact time derivative `(dr/dt, dp/dt)` at time `t`.
    pub fn time_derivative(&self, t: f64, lo: i64, hi: i64) -> LatticeField {
        assemble(lo, hi, |n| self.terms(n, t)).1
    }
}

/// An exact two-soliton state of the exponential chain, parameterized by its
/// outgoing (`t -> +inf`) asymptotic centers.
#[derive(Debug, Clone, Copy)]
pub struct TodaTwoSoliton {
    /// Slower soliton decay parameter.
    pub kappa1: f64,
    /// Faster soliton decay parameter; `kappa2 > kappa1`.
    pub kappa2: f64,
    delta1: f64,
    delta2: f64,
}

impl TodaTwoSoliton {
    /// Builds the state whose solitons emerge from the collision on the
    /// asymptotic paths `x_i(t) = c_i t + x_i_plus` as `t -> +inf`.
    pub fn from_outgoing_centers(
        kappa1: f64,
        kappa2: f64,
        x1_plus: f64,
        x2_plus: f64,
    ) -> Result<Self> {
        if !(0.0 < kappa1 && kappa1 < kappa2) {
            return Err(Error::bad_input(format!(
                "need 0 < kappa1 < kappa2, got {kappa1}, {kappa2}"
            )));
        }
        let ln_a = interaction_coefficient(kappa1, kappa2).ln();
        // Outgoing soliton 1 rides on the shifted phase delta1 + ln A;
        // outgoing soliton 2 rides on delta2 itself.
        let delta1 = 2.0 * kappa1 * (x1_plus + 1.0) - ln_a;
        let delta2 = 2.0 * kappa2 * (x2_plus + 1.0);
        Ok(TodaTwoSoliton {
            kappa1,
            kappa2,
            delta1,
            delta2,
        })
    }

    pub fn speeds(&self) -> (f64, f64) {
        (
            self.kappa1.sinh() / self.kappa1,
            self.kappa2.sinh() / self.kappa2,
        )
    }

    /// `A` in the tau function; lies in `(0, 1)`.
    pub fn interaction(&self) -> f64 {
        interaction_coefficient(self.kappa1, self.kappa2)
    }

    /// Collision-induced phase shifts `(slower, faster)`: the slower soliton
    /// is retarded (`log A / (2 kappa_1) < 0`), the faster one advanced.
    pub fn phase_shifts(&self) -> (f64, f64) {
        let ln_a = self.interaction().ln();
        (ln_a / (2.0 * self.kappa1), -ln_a / (2.0 * self.kappa2))
    }

    /// Asymptotic center paths as `t -> +inf`.
    pub fn outgoing_centers(&self, t: f64) -> (f64, f64) {
        let (c1, c2) = self.speeds();
        let ln_a = self.interaction().ln();
        (
            c1 * t + (self.delta1 + ln_a) / (2.0 * self.kappa1) - 1.0,
            c2 * t + self.delta2 / (2.0 * self.kappa2) - 1.0,
        )
    }

    /// Asymptotic center paths as `t -> -inf`.
    pub fn incoming_centers(&self, t: f64) -> (f64, f64) {
        let (d1, d2) = self.phase_shifts();
        let (x1, x2) = self.outgoing_centers(t);
        (x1 - d1, x2 - d2)
    }

    fn terms(&self, n: i64, t: f64) -> Vec<(f64, f64)> {
        let r1 = 2.0 * self.kappa1.sinh();
        let r2 = 2.0 * self.kappa2.sinh();
        let th1 = -2.0 * self.kappa1 * n as f64 + r1 * t + self.delta1;
        let th2 = -2.0 * self.kappa2 * n as f64 + r2 * t + self.delta2;
        let ln_a = self.interaction().ln();
        vec![
            (0.0, 0.0),
            (th1, r1),
            (th2, r2),
            (ln_a + th1 + th2, r1 + r2),
        ]
    }

    pub fn state(&self, t: f64, lo: i64, hi: i64) -> LatticeField {
        assemble(lo, hi, |n| self.terms(n, t)).0
    }

    pub fn time_derivative(&self, t: f64, lo: i64, hi: i64) -> LatticeField {
        assemble(lo, hi, |n| self.terms(n, t)).1
    }

    /// Sup-norm residual of the bilinear tau equation
    /// `tau'' tau - tau'^2 = tau_{n+1} tau_{n-1} - tau_n^2`
    /// over the window, evaluated in normalized form. This is the defining
    /// identity; it vanishes only for the correct interaction coefficient.
    pub fn bilinear_residual(&self, t: f64, lo: i64, hi: i64) -> f64 {
        bilinear_residual_of(|n| self.terms(n, t), lo, hi)
    }
}

/// Shared bilinear-equation residual for any tau-term assembly.
fn bilinear_residual_of<F: Fn(i64) -> Vec<(f64, f64)>>(terms_at: F, lo: i64, hi: i64) -> f64 {
    let mut sup = 0.0f64;
    for n in lo..=hi {
        let s0 = tau_stat(&terms_at(n - 1));
        let s1 = tau_stat(&terms_at(n));
        let s2 = tau_stat(&terms_at(n + 1));
        // LHS / tau_n^2 is exactly the rate variance; RHS / tau_n^2 rebuilt
        // from normalized factors.
        let lhs = s1.var;
        let rhs = log_tau_ratio(s0, s1, s2).exp_m1();
        sup = sup.max((lhs - rhs).abs());
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{hamiltonian, row_sums, vector_field};
    use crate::potential::Potential;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn sigmoid(x: f64) -> f64 {
        if x >= 0.0 {
            1.0 / (1.0 + (-x).exp())
        } else {
            let e = x.exp();
            e / (1.0 + e)
        }
    }

    #[test]
    fn one_soliton_matches_explicit_profile_formulas() {
        let s = TodaSoliton::new(0.4, 3.0).unwrap();
        let t = 7.3;
        let u = s.state(t, -40, 60);
        let center = s.center(t);
        for n in -40..=60 {
            let y = n as f64 - center;
            let sech = 1.0 / (s.kappa * y).cosh();
            let r_exact = 6.0 * (1.0 + (s.kappa.sinh() * sech).powi(2)).ln();
            let p_exact = 12.0
                * s.kappa.sinh()
                * (sigmoid(-2.0 * s.kappa * y) - sigmoid(-2.0 * s.kappa * (y - 1.0)));
            assert_abs_diff_eq!(u.r_at(n), r_exact, epsilon = 1e-12);
            assert_abs_diff_eq!(u.p_at(n), p_exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn small_kappa_states_are_small() {
        // Amplitude scales like 6 kappa^2: the state vanishes as kappa -> 0.
        let s = TodaSoliton::new(1e-3, 0.0).unwrap();
        let u = s.state(0.0, -50, 50);
        assert!(u.linf_norm() <= 7.0 * 1e-6, "linf = {}", u.linf_norm());
    }

    #[test]
    fn vector_field_matches_analytic_time_derivative() {
        let pot = Potential::toda_normalized();
        let one = TodaSoliton::new(0.35, 0.0).unwrap();
        for &t in &[0.0, 4.2] {
            let u = one.state(t, -80, 80);
            let vf = vector_field(&u, &pot);
            let du = one.time_derivative(t, -80, 80);
            let err = vf.sub(&du).unwrap().linf_norm();
            assert!(err <= 1e-8, "one-soliton residual {err} at t = {t}");
        }

        let two = TodaTwoSoliton::from_outgoing_centers(0.25, 0.5, 0.0, 8.0).unwrap();
        for &t in &[-12.0, 0.0, 3.7, 15.0] {
            let u = two.state(t, -120, 120);
            let vf = vector_field(&u, &pot);
            let du = two.time_derivative(t, -120, 120);
            let err = vf.sub(&du).unwrap().linf_norm();
            assert!(err <= 1e-8, "two-soliton residual {err} at t = {t}");
        }
    }

    #[test]
    fn measured_speed_matches_the_dispersion_relation() {
        let s = TodaSoliton::new(0.3, 0.0).unwrap();
        let pot = Potential::toda_normalized();
        let u0 = s.state(0.0, -60, 100);
        let t = 20.0;
        let traj = crate::integrate::integrate(&u0, &pot, 0.0, t, 1e-3, &[]).unwrap();
        let moved = traj.final_state().strain_centroid() - u0.strain_centroid();
        assert_relative_eq!(moved / t, s.speed(), max_relative = 1e-6);
    }

    #[test]
    fn conserved_row_sums_have_closed_forms() {
        // Total strain 12 kappa and total momentum -12 sinh(kappa) per
        // soliton, from telescoping the tau-quotient forms.
        let s = TodaSoliton::new(0.45, -2.0).unwrap();
        let (sr, sp) = row_sums(&s.state(1.5, -120, 120));
        assert_relative_eq!(sr, 12.0 * 0.45, max_relative = 1e-10);
        assert_relative_eq!(sp, -12.0 * 0.45f64.sinh(), max_relative = 1e-10);

        let two = TodaTwoSoliton::from_outgoing_centers(0.3, 0.55, 0.0, 5.0).unwrap();
        let (sr2, sp2) = row_sums(&two.state(0.0, -160, 160));
        assert_relative_eq!(sr2, 12.0 * (0.3 + 0.55), max_relative = 1e-10);
        assert_relative_eq!(
            sp2,
            -12.0 * (0.3f64.sinh() + 0.55f64.sinh()),
            max_relative = 1e-10
        );
    }

    #[test]
    fn collision_shifts_the_asymptotic_centers() {
        // Evaluate the closed form far before and after the collision and
        // fit each soliton's center against the explicit one-soliton shape;
        // the measured centers must ride the predicted shifted paths.
        let two = TodaTwoSoliton::from_outgoing_centers(0.25, 0.5, 0.0, 0.0).unwrap();
        let (d1, d2) = two.phase_shifts();
        assert!(d1 < 0.0 && d2 > 0.0, "shift signs ({d1}, {d2})");

        let fit_center = |u: &LatticeField, kappa: f64, guess: f64| -> f64 {
            let half = (30.0 / (2.0 * kappa)).ceil() as i64;
            let (mut a, mut b) = (guess - 2.0, guess + 2.0);
            let sse = |s: f64| {
                let mut acc = 0.0;
                let lo = (s - half as f64).floor() as i64;
                for n in lo..=lo + 2 * half {
                    let sech = 1.0 / (kappa * (n as f64 - s)).cosh();
                    let model = 6.0 * (1.0 + (kappa.sinh() * sech).powi(2)).ln();
                    acc += (u.r_at(n) - model).powi(2);
                }
                acc
            };
            for _ in 0..200 {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                if sse(m1) < sse(m2) {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            0.5 * (a + b)
        };

        let t_far = 1500.0;
        for &sign in &[1.0f64, -1.0] {
            let t = sign * t_far;
            let (x1, x2) = if sign > 0.0 {
                two.outgoing_centers(t)
            } else {
                two.incoming_centers(t)
            };
            let pad = 200;
            let lo = (x1.min(x2) as i64) - pad;
            let hi = (x1.max(x2) as i64) + pad;
            let u = two.state(t, lo, hi);
            let got1 = fit_center(&u, two.kappa1, x1);
            let got2 = fit_center(&u, two.kappa2, x2);
            assert_abs_diff_eq!(got1, x1, epsilon = 1e-5);
            assert_abs_diff_eq!(got2, x2, epsilon = 1e-5);
        }
    }

    #[test]
    fn states_have_positive_energy_and_decay() {
        let two = TodaTwoSoliton::from_outgoing_centers(0.2, 0.4, -5.0, 10.0).unwrap();
        let u = two.state(0.0, -200, 200);
        assert!(u.is_decaying(1e-14));
        assert!(hamiltonian(&u, &Potential::toda_normalized()) > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn bilinear_equation_holds_for_random_parameters(
            k1 in 0.05f64..0.6,
            dk in 0.05f64..0.6,
            x1 in -5.0f64..5.0,
            x2 in -5.0f64..5.0,
            t in -20.0f64..20.0,
        ) {
            let two = TodaTwoSoliton::from_outgoing_centers(k1, k1 + dk, x1, x2).unwrap();
            let res = two.bilinear_residual(t, -60, 60);
            prop_assert!(res <= 1e-11, "bilinear residual {res}");
        }
    }
}
