//! Exponentially weighted norms and localized-energy (virial) weights.
//!
//! These norms watch where mass sits relative to moving soliton centers.
//! A weight is built from a per-site decay rate `a`, one or more centers,
//! and a shape:
//!
//! * one-sided decaying `e^{-a(n-x)}` — small ahead of the center, large
//!   behind: measures what a wave leaves in its wake;
//! * one-sided growing `e^{+a(n-x)}` — the dual of the above;
//! * two-sided decaying `e^{-a|n-x|}` — localizes around the center;
//! * two-sided growing `e^{+a|n-x|}` — the dual, penalizing everything
//!   away from the center.
//!
//! With several centers the per-center norms are combined by summing
//! (primal norms) or taking the minimum (dual norms). All evaluation runs
//! in log space with exponents clamped to ±700, so window sizes far beyond
//! `1/a` cannot overflow.

use serde::{Deserialize, Serialize};

use crate::field::LatticeField;

/// Clamp for log-weights; `exp(±700)` stays finite in `f64`.
const LOG_CLAMP: f64 = 700.0;

/// Shape of the exponential weight around a center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `e^{-a(n-x)}`: decays to the right of the center.
    OneSidedDecaying,
    /// `e^{+a(n-x)}`: grows to the right of the center.
    OneSidedGrowing,
    /// `e^{-a|n-x|}`: peaked at the center.
    TwoSidedDecaying,
    /// `e^{+a|n-x|}`: smallest at the center.
    TwoSidedGrowing,
}

/// How the per-site products `weight(n) * |f(n)|` are aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    L1,
    L2,
    LInf,
}

/// How per-center norms combine when the spec has several centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterCombine {
    /// Sum of the per-center norms (primal multi-soliton norms).
    Sum,
    /// Minimum of the per-center norms (dual multi-soliton norms).
    Min,
}

/// A complete weighted-norm specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    /// Per-site exponential rate; must be positive.
    pub a: f64,
    /// Center coordinates (site units); at least one.
    pub centers: Vec<f64>,
    pub mode: WeightMode,
    pub aggregation: Aggregation,
    pub combine: CenterCombine,
}

impl WeightSpec {
    /// Single-center norm of the requested shape and aggregation.
    pub fn single(a: f64, center: f64, mode: WeightMode, aggregation: Aggregation) -> Self {
        WeightSpec {
            a,
            centers: vec![center],
            mode,
            aggregation,
            combine: CenterCombine::Sum,
        }
    }

    /// `|| e^{+a(n-x)} u ||_{l^2}`: emphasizes radiation shed behind a
    /// supersonic center going forward in time.
    pub fn x_norm(a: f64, center: f64) -> Self {
        Self::single(a, center, WeightMode::OneSidedGrowing, Aggregation::L2)
    }

    /// `|| e^{-a(n-x)} u ||_{l^2}`, the dual of [`WeightSpec::x_norm`] and
    /// the measurement norm for backward-in-time runs: relative to a frame
    /// moving faster than every group velocity, all radiation drifts
    /// rightward as time decreases, into the decaying side of this weight.
    /// The growing (left) side amplifies whatever it touches, so evaluate it
    /// on a field clipped near the center (see [`clip_to_centers`]).
    pub fn x_dual(a: f64, center: f64) -> Self {
        Self::single(a, center, WeightMode::OneSidedDecaying, Aggregation::L2)
    }

    /// Sum over centers of `|| e^{-a|n-x_i|} u ||_{l^2}`.
    pub fn w_norm(a: f64, centers: Vec<f64>) -> Self {
        WeightSpec {
            a,
            centers,
            mode: WeightMode::TwoSidedDecaying,
            aggregation: Aggregation::L2,
            combine: CenterCombine::Sum,
        }
    }

    /// Min over centers of `|| e^{+a|n-x_i|} u ||_{l^2}`.
    pub fn w_dual(a: f64, centers: Vec<f64>) -> Self {
        WeightSpec {
            a,
            centers,
            mode: WeightMode::TwoSidedGrowing,
            aggregation: Aggregation::L2,
            combine: CenterCombine::Min,
        }
    }

    /// Sum over centers of `|| e^{-a|n-x_i|} u ||_{l^1}`.
    pub fn w_tilde(a: f64, centers: Vec<f64>) -> Self {
        WeightSpec {
            a,
            centers,
            mode: WeightMode::TwoSidedDecaying,
            aggregation: Aggregation::L1,
            combine: CenterCombine::Sum,
        }
    }

    /// Min over centers of `|| e^{+a|n-x_i|} u ||_{l^inf}`.
    pub fn w_tilde_dual(a: f64, centers: Vec<f64>) -> Self {
        WeightSpec {
            a,
            centers,
            mode: WeightMode::TwoSidedGrowing,
            aggregation: Aggregation::LInf,
            combine: CenterCombine::Min,
        }
    }

    /// Log-weight at site `n` for one center, clamped to ±700.
    fn log_weight(&self, n: f64, center: f64) -> f64 {
        let d = n - center;
        let lw = match self.mode {
            WeightMode::OneSidedDecaying => -self.a * d,
            WeightMode::OneSidedGrowing => self.a * d,
            WeightMode::TwoSidedDecaying => -self.a * d.abs(),
            WeightMode::TwoSidedGrowing => self.a * d.abs(),
        };
        lw.clamp(-LOG_CLAMP, LOG_CLAMP)
    }
}

/// Evaluates the weighted norm of a field under a spec.
///
/// Per site, the magnitude is `sqrt(r^2 + p^2)`; the aggregation then acts
/// on `weight(n) * magnitude(n)`. Accumulation is performed relative to the
/// largest log-term, so enormous weights cannot overflow intermediate sums.
pub fn weighted_norm(f: &LatticeField, w: &WeightSpec) -> f64 {
    assert!(w.a > 0.0, "weight exponent must be positive");
    assert!(!w.centers.is_empty(), "weight needs at least one center");
    let mut per_center = Vec::with_capacity(w.centers.len());
    for &c in &w.centers {
        // Collect log(weight * |f|) per site, skipping exact zeros.
        let mut logs = Vec::with_capacity(f.len());
        let mut max_log = f64::NEG_INFINITY;
        for i in 0..f.len() {
            let m = f.r[i].hypot(f.p[i]);
            if m == 0.0 {
                continue;
            }
            let l = w.log_weight((f.lo() + i as i64) as f64, c) + m.ln();
            max_log = max_log.max(l);
            logs.push(l);
        }
        let value = if logs.is_empty() {
            0.0
        } else {
            match w.aggregation {
                Aggregation::LInf => max_log.exp(),
                Aggregation::L1 => {
                    let s: f64 = logs.iter().map(|l| (l - max_log).exp()).sum();
                    max_log.exp() * s
                }
                Aggregation::L2 => {
                    let s: f64 = logs.iter().map(|l| (2.0 * (l - max_log)).exp()).sum();
                    max_log.exp() * s.sqrt()
                }
            }
        };
        per_center.push(value);
    }
    match w.combine {
        CenterCombine::Sum => per_center.iter().sum(),
        CenterCombine::Min => per_center.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Evaluation radius for growing (dual) weights, in units of `1/a`.
///
/// At distance `D` a growing weight multiplies the field by `e^{a D}`, so
/// once `a D` passes roughly `-log` of the relative noise floor, rounding
/// dust in the field outweighs honest signal and the norm measures noise.
/// Clipping at `20 / a` keeps the amplification below `e^{20} ~ 5e8`,
/// comfortably under the `~1e12` headroom of double-precision tails.
pub const DUAL_RADIUS_SCALE: f64 = 20.0;

/// The field restricted to within `radius` sites of the span of `centers`,
/// for growing-weight norm evaluation.
pub fn clip_to_centers(f: &LatticeField, centers: &[f64], radius: f64) -> LatticeField {
    let min = centers.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = ((min - radius).floor() as i64).max(f.lo());
    let hi = ((max + radius).ceil() as i64).min(f.hi());
    if lo > hi {
        return f.clone();
    }
    f.embed(lo, hi)
}

/// Localized-energy weight `psi(n) = 1 - tanh(a (n - x))`, close to 2 far
/// behind the center and close to 0 far ahead of it.
pub fn virial_weight(a: f64, center: f64, n: f64) -> f64 {
    1.0 - (a * (n - center)).tanh()
}

/// Localized energy `sum_n psi(n) (r(n)^2 + p(n)^2)` for a single center.
pub fn virial_energy(v: &LatticeField, a: f64, center: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..v.len() {
        let n = (v.lo() + i as i64) as f64;
        acc += virial_weight(a, center, n) * (v.r[i] * v.r[i] + v.p[i] * v.p[i]);
    }
    acc
}

/// Localized energy summed over several centers,
/// `sum_i sum_n psi_i(n) (r^2 + p^2)`.
pub fn virial_energy_summed(v: &LatticeField, a: f64, centers: &[f64]) -> f64 {
    centers.iter().map(|&c| virial_energy(v, a, c)).sum()
}
