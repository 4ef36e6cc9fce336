//! Least-squares line fits for measured decay curves.
//!
//! Every empirical rate in this crate comes from fitting `log y` against
//! some abscissa (time, separation, or a schedule distance), so the fits
//! carry their goodness alongside the slope: an exponent without an `R^2`
//! is not evidence. Fits below `R^2 = 0.8` are flagged unreliable.

use crate::error::Error;
use crate::Result;
use serde::Serialize;

/// Minimum points for a meaningful fit.
pub const MIN_POINTS: usize = 4;

/// Threshold below which a fitted exponent is flagged unreliable.
pub const RELIABLE_R2: f64 = 0.8;

/// A fitted line `y = slope * x + intercept` with its coefficient of
/// determination.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl LineFit {
    pub fn reliable(&self) -> bool {
        self.r_squared >= RELIABLE_R2
    }
}

/// Ordinary least squares on `(x, y)` pairs.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::bad_input(format!(
            "mismatched fit data: {} abscissas, {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < MIN_POINTS {
        return Err(Error::bad_input(format!(
            "need at least {MIN_POINTS} points for a fit, got {n}"
        )));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(Error::bad_input("fit data must be finite"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return Err(Error::bad_input("fit abscissas are all identical"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // R^2 = 1 - SS_res / SS_tot; a constant series fitted by a flat line is
    // a perfect fit, not a degenerate one.
    let r_squared = if syy <= 0.0 {
        1.0
    } else {
        1.0 - (syy - sxy * sxy / sxx) / syy
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        n_points: n,
    })
}

/// Fit `log y = rate * x + log prefactor` for positive decay data: the
/// returned `slope` is the exponential rate (negative for decay). Points
/// with non-positive `y` are dropped before fitting.
pub fn exponential_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::bad_input(format!(
            "mismatched fit data: {} abscissas, {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    let mut fx = Vec::with_capacity(xs.len());
    let mut fy = Vec::with_capacity(ys.len());
    for i in 0..xs.len() {
        if ys[i] > 0.0 {
            fx.push(xs[i]);
            fy.push(ys[i].ln());
        }
    }
    line_fit(&fx, &fy)
}

/// The last `k` elements of a series, or all of it when shorter. Rate fits
/// use trailing windows to avoid transient contamination.
pub fn tail<T: Copy>(xs: &[T], k: usize) -> Vec<T> {
    xs[xs.len().saturating_sub(k)..].to_vec()
}
